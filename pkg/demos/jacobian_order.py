"""Why the prox-Jacobian composition order matters.

On a 2-D quadratic with a non-diagonal Hessian and a Bregman coupling whose
scaling matrix M is diagonal but not a multiple of the identity, M does not
commute with the scaled-prox Jacobian. Placing M in front gives a visibly
wrong answer; placing it between the scaled-prox Jacobian and the mixed
block matches finite differences. The same test fixes the orientation of
the Hessian formula.

Run: python3 demos/jacobian_order.py
"""

import numpy as np

from phiconj.coupling import make_coupling
from phiconj.derivatives import (
    envelope_hessian,
    envelope_hessian_fd,
    prox_jacobian_fd,
    prox_jacobian_formula,
)
from phiconj.testfns import make_function


def rel(a, b):
    return np.linalg.norm(a - b) / np.linalg.norm(b)


g = make_function("quad_form", 2)
y = np.array([0.6, 1.7])
for fam, kernel in [("left_bregman", "boltzmann_shannon"), ("right_bregman", "cosh"), ("anisotropic", "cosh")]:
    c = make_coupling(fam, 0.7, kernel, 2)
    J_fd = prox_jacobian_fd(g, c, y)
    H_fd = envelope_hessian_fd(g, c, y)
    print(f"{fam}/{kernel}")
    for order in ("trailing_m", "leading_m"):
        print(f"  jacobian {order:<16} rel err {rel(prox_jacobian_formula(g, c, y, order=order), J_fd):.2e}")
    for orient in ("transpose_first", "jacobian_first"):
        print(f"  hessian  {orient:<16} rel err {rel(envelope_hessian(g, c, y, orientation=orient), H_fd):.2e}")
