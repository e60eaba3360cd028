"""Generalized envelopes of a double well under several couplings.

Prints, for a few y, the envelope value, the prox point(s) and the envelope
gradient checked against finite differences. At y = 0 with the unit
Euclidean coupling the prox splits into two symmetric points, which is where
the envelope stops being differentiable.

Run: python3 demos/envelope_tour.py
"""

import numpy as np

from phiconj.coupling import make_coupling
from phiconj.derivatives import envelope_gradient, envelope_gradient_fd
from phiconj.prox_solver import MultiValuedError, prox
from phiconj.testfns import make_function

g = make_function("double_well")
couplings = [
    make_coupling("euclidean", 1.0, dim=1),
    make_coupling("euclidean", 0.2, dim=1),
    make_coupling("left_bregman", 0.3, "cosh", 1),
    make_coupling("anisotropic", 0.3, "quartic_quadratic", 1),
]

for c in couplings:
    print(c)
    for y in (-1.0, 0.0, 0.5):
        yv = np.array([y])
        res = prox(g, c, yv)
        pts = ", ".join(f"{m[0]:+.6f}" for m in res.minimizers)
        try:
            grad = envelope_gradient(g, c, yv)[0]
            fd = envelope_gradient_fd(g, c, yv)[0]
            tail = f"grad {grad:+.8f} (fd {fd:+.8f})"
        except MultiValuedError:
            tail = "grad undefined: prox is multi-valued"
        print(f"  y={y:+.2f}  envelope {res.envelope:+.8f}  prox [{pts}]  {tail}")
