"""Shared test helpers: random expression trees and small configs."""

import numpy as np

from exmeas.dsl import BinOp, Call, Neg, Num, Var

ARITIES = {"exp": 1, "log": 1, "abs": 1, "floor": 1, "mod": 2, "min": 2, "max": 3, "ind": 3, "piecewise": 3}
NUMBERS = (0.0, 1.0, 2.0, 0.5, 1.5, 3.25, 1e-05, 1e20, 123456.789)


def random_tree(rng: np.random.Generator, depth: int):
    """A random expression tree of depth at most ``depth``."""
    if depth <= 1 or rng.random() < 0.25:
        if rng.random() < 0.5:
            return Num(float(rng.choice(NUMBERS)))
        return Var(str(rng.choice(list("xyzkv"))))
    r = rng.random()
    if r < 0.15:
        return Neg(random_tree(rng, depth - 1))
    if r < 0.7:
        op = str(rng.choice(list("+-*/^")))
        return BinOp(op, random_tree(rng, depth - 1), random_tree(rng, depth - 1))
    name = str(rng.choice(list(ARITIES)))
    return Call(name, tuple(random_tree(rng, depth - 1) for _ in range(ARITIES[name])))


def tree_depth(e) -> int:
    if isinstance(e, (Num, Var)):
        return 1
    if isinstance(e, Neg):
        return 1 + tree_depth(e.operand)
    if isinstance(e, BinOp):
        return 1 + max(tree_depth(e.left), tree_depth(e.right))
    return 1 + max(tree_depth(a) for a in e.args)


POISSON_INI = """\
[model]
mode = multigraphex
W = poisson_pmf(mean="exp(-x-y)")

[truncation]
mark_cap = 20
"""

COUNTEREXAMPLE_INI = """\
[model]
mode = kallenberg
g = "ind(x,0,1)*ind(mod(floor(y),2),0,0)"
gp = "ind(x,0,1)*ind(mod(floor(y),2),0,0)"

[truncation]
mark_cap = 1000
max_points = 100000
"""

FINITE_INI = """\
[model]
mode = kallenberg
g = "ind(x,0,1)*ind(y,0,1)"
gp = "ind(x,0,1)*ind(y,0,1)"

[truncation]
mark_cap = 20
"""

ZERO_INI = """\
[model]
mode = multigraphex
"""
