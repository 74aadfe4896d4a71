"""Size census of the leafless H-graph family at each hbar order.

m = 3 takes a minute or two; pass a smaller bound to stop earlier.
Usage: python3 demos/g13_census.py [max_m]
"""

import sys
import time
from collections import Counter

from starforge.graphs import enumerate_family


def main(max_m: int = 3):
    for m in range(1, max_m + 1):
        t = time.perf_counter()
        gs = enumerate_family("G13", 1, max_excess=m, max_edges=5 * m + 3, max_unlabelled=4 * m + 3)
        at_m = [g for g in gs if g.e - g.v == m]
        v, e = max(g.v for g in at_m), max(g.e for g in at_m)
        ok = v <= 4 * m and e <= 5 * m
        by_v = dict(sorted(Counter(g.v for g in at_m).items()))
        print(f"m={m}: {len(at_m)} graphs, max v={v} (<= {4 * m}), max e={e} (<= {5 * m}), "
              f"{'ok' if ok else 'BOUND VIOLATED'}  [{time.perf_counter() - t:.1f} s]")
        print(f"     by vertex count: {by_v}")


if __name__ == "__main__":
    main(int(sys.argv[1]) if len(sys.argv) > 1 else 3)
