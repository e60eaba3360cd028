"""Functions with empty generalized subdifferentials.

A constant under the coupling exp(x - y) and -|x| at the origin under the
quadratic transform admit no subgradient; the sampled certificate reports
the most negative slack it found and where.

Run: python3 demos/counterexamples.py
"""

import numpy as np

from phiconj.coupling import make_coupling
from phiconj.subdiff import is_phi_subgradient
from phiconj.testfns import make_function

const, expc = make_function("const_rho", rho=5.0), make_coupling("exp_coupling")
for y in (-1.0, 0.0, 1.0, 3.0):
    cert = is_phi_subgradient(const, expc, np.zeros(1), np.array([y]))
    print(f"const/exp      y={y:+.1f}: holds={cert.holds} worst slack {cert.worst_violation:+.3e} at x={cert.witness[0]:+.3f}")

negabs, qt = make_function("neg_abs"), make_coupling("quadratic_transform", dim=1)
for v, r in [(0.0, 1.0), (0.5, 10.0), (-0.9, 100.0), (0.0, 1e4)]:
    cert = is_phi_subgradient(negabs, qt, np.zeros(1), np.array([v, r]))
    print(f"neg_abs/qt (v={v:+.1f}, r={r:g}): holds={cert.holds} worst slack {cert.worst_violation:+.3e}")
