"""Recover potential coefficients from eigenvalue data.

The correction coefficients ``e_j`` are fitted by least squares on the
expansion ``lam_n - lam_{n,0} = sum_j e_j lam_{n,0}**(1 - j/m)``.  Each
``e_j`` is affine in ``a_j`` once ``a_1..a_{j-1}`` are fixed, so the
coefficients are then recovered one at a time by probing that affine map.
When ``(j-1) ell`` is a multiple of ``m`` the map is constant and ``a_j``
must be supplied.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .asym import compute_e, lambda_n0
from .coeffs import ProblemSpec, j_top

__all__ = [
    "HypothesisError",
    "InverseProblem",
    "FitResult",
    "required_known",
    "fit_e",
    "fit_e_full",
    "recover_a",
]

COND_LIMIT = 1e12
SLOPE_FLOOR = 1e-14


class HypothesisError(ValueError):
    """Input violates the hypotheses under which the coefficients are determined."""


def required_known(m: int, ell: int, j_max: int) -> list:
    """Indices ``j <= j_max`` whose coefficient cannot be recovered from the spectrum."""
    return [j for j in range(1, j_max + 1) if ((j - 1) * ell) % m == 0]


@dataclass
class InverseProblem:
    """Eigenvalue data plus the coefficients declared known.

    Parameters
    ----------
    m, ell
        Degree and boundary index.
    eigs
        Pairs ``(n, lam)``.
    known
        Map ``j -> a_j``; must cover :func:`required_known`.
    j_max
        Highest index to reconstruct, at most ``(m+1)//2`` (the default).
    n_min
        Data with ``n < n_min`` are ignored by :func:`fit_e`.
    weighted
        Weight rows by ``lam_{n,0}**(J/m - 1)``, ``J = floor((m+2)/2)``, so
        that the relative size of the neglected tail is equalised.
    tail_terms
        Number of extra nuisance columns ``lam_{n,0}**(1 - j/m)``,
        ``j = J+1, ...``, absorbing higher-order terms of the expansion
        that are not small at moderate ``n``.  ``"auto"`` picks the count
        (up to ``max_tail``) minimising the leave-one-out residual.
    """

    m: int
    ell: int
    eigs: list
    known: dict = field(default_factory=dict)
    j_max: int | None = None
    n_min: int = 10
    weighted: bool = False
    tail_terms: int | str = 0
    max_tail: int = 6

    def __post_init__(self):
        ProblemSpec(self.m, self.ell, [0] * (self.m - 1))
        top = (self.m + 1) // 2
        if self.j_max is None:
            self.j_max = top
        if not 2 <= self.j_max <= top:
            raise ValueError(f"j_max must lie in [2, {top}]")
        self.known = {int(j): complex(v) for j, v in self.known.items()}
        missing = [j for j in required_known(self.m, self.ell, self.j_max) if j not in self.known]
        if missing:
            raise HypothesisError(
                f"a_j must be supplied for j in {missing}: (j-1)*ell is a multiple of m"
            )
        self.eigs = [(int(n), complex(lam)) for n, lam in self.eigs]
        if self.tail_terms != "auto" and (not isinstance(self.tail_terms, int) or self.tail_terms < 0):
            raise ValueError("tail_terms must be a nonnegative int or 'auto'")

    def data(self):
        rows = [(n, lam) for n, lam in self.eigs if n >= self.n_min]
        n = np.array([r[0] for r in rows], dtype=int)
        lam = np.array([r[1] for r in rows], dtype=complex)
        return n, lam


class FitResult(NamedTuple):
    e: np.ndarray
    cond: float
    tail_terms: int
    loo_rms: float


def _design(problem, l0, tail):
    # every term of the expansion is fitted, even those above j_max, since
    # leaving one out biases the rest
    m, top = problem.m, j_top(problem.m)
    X = np.column_stack([l0 ** (1.0 - j / m) for j in range(2, top + 1 + tail)]).astype(complex)
    if problem.weighted:
        X = X * (l0 ** (-(1.0 - top / m)))[:, None]
    return X


def _solve(X, y):
    scale = np.linalg.norm(X, axis=0)
    Xs = X / scale
    cond = float(np.linalg.cond(Xs))
    coef, *_ = np.linalg.lstsq(Xs, y, rcond=None)
    # leave-one-out residuals from the hat matrix diagonal
    hat = np.einsum("ij,ji->i", Xs, np.linalg.pinv(Xs)).real
    r = y - Xs @ coef
    with np.errstate(divide="ignore", invalid="ignore"):
        loo = float(np.sqrt(np.mean(np.abs(r / (1.0 - hat)) ** 2)))
    return coef / scale, cond, loo


def fit_e_full(problem: InverseProblem) -> FitResult:
    """Least-squares estimate of ``e_2..e_{floor((m+2)/2)}`` with diagnostics.

    The regression uses every power ``lam_{n,0}**(1 - j/m)`` of the
    expansion (plus ``tail_terms`` further ones), regardless of ``j_max``.

    Raises
    ------
    ValueError
        Fewer than twice as many usable data points as fitted columns, or a
        condition number above ``1e12``.
    """
    m, top = problem.m, j_top(problem.m)
    n, lam = problem.data()
    spec0 = ProblemSpec(m, problem.ell, [0] * (m - 1))
    l0 = lambda_n0(spec0, n)
    y = lam - l0
    if problem.weighted:
        y = y * l0 ** (-(1.0 - top / m))
    if problem.tail_terms == "auto":
        tails = [t for t in range(problem.max_tail + 1) if len(n) >= 2 * (top - 1 + t) + 2]
    else:
        tails = [problem.tail_terms]
    if not tails or len(n) < 2 * (top - 1 + tails[0]):
        raise ValueError(f"not enough eigenvalues with n >= {problem.n_min} ({len(n)})")
    best = None
    for t in tails:
        coef, cond, loo = _solve(_design(problem, l0, t), y)
        if not np.isfinite(cond) or cond > COND_LIMIT:
            if best is None:
                raise ValueError(f"design matrix is rank deficient (cond = {cond:.3g})")
            continue
        if best is None or loo < best[3]:
            best = (coef, cond, t, loo)
    coef, cond, t, loo = best
    e = np.zeros(top + 1, dtype=complex)
    e[2:] = coef[: top - 1]
    return FitResult(e, cond, t, loo)


def fit_e(problem: InverseProblem):
    """Least-squares estimate of ``e_2..e_{floor((m+2)/2)}``.

    Returns
    -------
    e_est : ndarray
        Indexed by ``j`` (``e_est[0] = e_est[1] = 0``).
    cond : float
        Condition number of the column-scaled design matrix.
    """
    res = fit_e_full(problem)
    return res.e, res.cond


def recover_a(problem: InverseProblem, e_est) -> np.ndarray:
    """Sequential reconstruction of ``a_1..a_{j_max}``.

    ``a_j`` is taken from ``problem.known`` when ``(j-1) ell`` is a multiple
    of ``m``.  Otherwise ``e_j`` is evaluated with ``a_j = 0`` and
    ``a_j = 1`` (earlier entries at their recovered values, later ones at
    zero, which cannot affect ``e_j``) and the affine relation is inverted.

    Raises
    ------
    HypothesisError
        If a probed slope vanishes.
    """
    m, ell, jm = problem.m, problem.ell, problem.j_max
    a = np.zeros(m - 1, dtype=complex)
    for j in range(1, jm + 1):
        if ((j - 1) * ell) % m == 0:
            a[j - 1] = problem.known[j]
            continue
        a[j - 1] = 0
        e0 = compute_e(ProblemSpec(m, ell, a))[j]
        a[j - 1] = 1
        e1 = compute_e(ProblemSpec(m, ell, a))[j]
        slope = e1 - e0
        if abs(slope) < SLOPE_FLOOR:
            raise HypothesisError(f"e_{j} does not depend on a_{j}; supply it as known")
        a[j - 1] = (e_est[j] - e0) / slope
    return a[:jm].copy()
