"""Mean star mass in [0, 1]^2 against the mark cap T, for the
non-locally-finite counter-example and for its finite variant.

    python3 demos/growth_law.py [N]

The counter-example's mean grows like T/2 (one orientation, even T); the
finite variant stays at 1 once T >= 1.
"""

import sys

from exmeas import RngKey
from exmeas.harness import COUNTEREXAMPLE_G, FINITE_G, counterexample_demo


def main(n: int = 2000):
    T = [1, 2, 5, 10, 20, 40, 80]
    for label, g, expected in (("counter-example", COUNTEREXAMPLE_G, "T/2 for even T"),
                               ("finite variant", FINITE_G, "1")):
        res = counterexample_demo(T, n, RngKey(7), g=g)
        print(f"{label}: g = {g}  (expected mean {expected})")
        print(res.table())
        print()


if __name__ == "__main__":
    main(int(sys.argv[1]) if len(sys.argv) > 1 else 2000)
