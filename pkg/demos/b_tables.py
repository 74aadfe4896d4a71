"""Print the hbar^1..hbar^k coefficient tables of the interacting star product."""

import sys
from collections import Counter

from starforge.interacting import low_order_tables


def main(order: int = 3):
    for k in range(1, order + 1):
        rows = low_order_tables(k)
        print(f"B_{k}: {len(rows)} graphs")
        for r in rows:
            print(f"  {r.graph.key:40s} v={r.graph.v}  coeff={r.coeff}")
        mult = Counter(str(r.coeff) for r in rows)
        print("  coefficient multiset:", dict(sorted(mult.items())))


if __name__ == "__main__":
    main(int(sys.argv[1]) if len(sys.argv) > 1 else 3)
