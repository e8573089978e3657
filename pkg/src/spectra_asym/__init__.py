"""Eigenvalue asymptotics for polynomial potentials under ray boundary conditions.

Submodules
----------
specfun   gamma, beta and binomial helpers
coeffs    expansion constants ``b_jk``, ``K_mjk``, ``d_lj`` and symmetries
asym      eigenvalue expansion, quantisation residual and counting function
shoot     numerical eigenvalues by complex-plane shooting
inverse   coefficient recovery from eigenvalue data
cli       command line front end
"""

from .asym import (
    AsymptoticModel,
    BranchError,
    ConvergenceError,
    HypothesisWarning,
    asym_eigenvalue,
    compute_e,
    counting,
    empirical_count,
    lambda_n0,
    refine_eigenvalue,
    remark_e_closed_forms,
    residual,
)
from .coeffs import ProblemSpec, b_j, b_jk, d_lj, d_vector, eta, g_action, reflect
from .inverse import HypothesisError, InverseProblem, fit_e, recover_a
from .shoot import EigenvalueRecord, ShootingConfig, find_eigenvalue, scan_spectrum, wronskian

__version__ = "0.1.0"

__all__ = [
    "AsymptoticModel",
    "BranchError",
    "ConvergenceError",
    "EigenvalueRecord",
    "HypothesisError",
    "HypothesisWarning",
    "InverseProblem",
    "ProblemSpec",
    "ShootingConfig",
    "asym_eigenvalue",
    "b_j",
    "b_jk",
    "compute_e",
    "counting",
    "d_lj",
    "d_vector",
    "empirical_count",
    "eta",
    "find_eigenvalue",
    "fit_e",
    "g_action",
    "lambda_n0",
    "recover_a",
    "refine_eigenvalue",
    "reflect",
    "remark_e_closed_forms",
    "residual",
    "scan_spectrum",
    "wronskian",
]
