"""Generalized conjugates and proximal mappings for coupling functions.

Submodules: ``coupling`` and ``kernels`` (the couplings), ``testfns`` (target
functions), ``prox_solver`` (argmin, conjugate, biconjugate), ``subdiff``
(generalized subgradients), ``regularity`` (sampled hypothesis checks),
``derivatives`` (envelope gradient, Hessian, prox Jacobian with
finite-difference oracles), ``suite`` and ``cli``.
"""

__version__ = "0.1.0"
