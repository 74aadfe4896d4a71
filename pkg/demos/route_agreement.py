"""Compare the three expansions of the interacting time-ordered star product.

Usage: python3 demos/route_agreement.py [seed]
"""

import random
import sys
import time

from starforge.functionals import PolyFunctional, random_functional
from starforge.interacting import star_tint
from starforge.model import Interaction, fixture_m2
from starforge.moller import MollerConfig
from starforge.numerics import Bounds, GaussianRational as GR


def main(seed: int = 0):
    rng = random.Random(seed)
    b = Bounds(3, 3)
    V = Interaction(PolyFunctional.from_terms(
        {(0, 0, 0): GR("1/6"), (0, 1, 2): GR("1/2"), (1, 1, 1, 1): GR("-1/24")}, 3, b))
    c = MollerConfig(fixture_m2(), V, bounds=b)
    F = random_functional(rng, 3, b, 3, min_degree=1)
    G = random_functional(rng, 3, b, 3, min_degree=1)
    results = {}
    for route in ("via_moller", "via_G3", "via_G5"):
        t = time.perf_counter()
        results[route] = star_tint(c, F, G, route)
        print(f"{route:11s} {len(results[route].raw):6d} terms  {time.perf_counter() - t:6.2f} s")
    same = all(p == results["via_G3"] for p in results.values())
    print("all routes agree" if same else "ROUTES DISAGREE")
    return 0 if same else 1


if __name__ == "__main__":
    sys.exit(main(int(sys.argv[1]) if len(sys.argv) > 1 else 0))
