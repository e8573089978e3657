"""Large-eigenvalue asymptotics: quantisation condition, its inversion and counting.

Fractional powers use the principal branch with the cut on ``(-inf, 0]``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .coeffs import ProblemSpec, d_vector, j_top, multi_indices, multinomial
from .specfun import gen_binomial, log_gamma

__all__ = [
    "AsymptoticModel",
    "HypothesisWarning",
    "ConvergenceError",
    "BranchError",
    "lambda_n0",
    "leading_order",
    "compute_e",
    "asym_eigenvalue",
    "residual",
    "residual_derivative",
    "refine_eigenvalue",
    "counting_expansion",
    "counting",
    "empirical_count",
    "remark_e_closed_forms",
]


class HypothesisWarning(UserWarning):
    """A formula is being used outside the hypotheses under which it holds."""


class ConvergenceError(RuntimeError):
    """An iteration stopped without meeting its tolerance.

    ``last`` holds the final iterate and ``trace`` the iterate history.
    """

    def __init__(self, msg, last=None, trace=()):
        super().__init__(msg)
        self.last = last
        self.trace = list(trace)


class BranchError(ValueError):
    """Argument lies on the branch cut ``(-inf, 0]``."""


def _exponent(m: int, j: int) -> float:
    return 0.5 - (j - 1) / m


@dataclass(frozen=True)
class AsymptoticModel:
    """Coefficient tables of the eigenvalue expansion for one problem.

    ``d[j]`` and ``e[j]`` are indexed by ``j = 0..floor((m+2)/2)``; ``e[0]``
    is an unused zero slot so that ``e[j]`` lines up with ``d[j]``.
    ``c[j] = d[j] / d[0]``.
    """

    spec: ProblemSpec
    d: np.ndarray
    e: np.ndarray = field(repr=False)
    c: np.ndarray = field(repr=False)

    @classmethod
    def from_spec(cls, spec: ProblemSpec, d=None) -> "AsymptoticModel":
        d = d_vector(spec) if d is None else np.asarray(d, dtype=complex)
        e = compute_e(spec, d)
        return cls(spec=spec, d=d, e=e, c=d / d[0])

    @property
    def m(self) -> int:
        return self.spec.m

    @property
    def jmax(self) -> int:
        return len(self.d) - 1

    def truncated(self, jmax: int) -> "AsymptoticModel":
        """Model that keeps only ``d_0..d_jmax`` (higher terms set to zero)."""
        d = np.zeros_like(self.d)
        d[: jmax + 1] = self.d[: jmax + 1]
        return AsymptoticModel.from_spec(self.spec, d)


def lambda_n0(spec: ProblemSpec, n) -> float:
    """Leading term ``((2n+1) pi i / d_0)**(2m/(m+2))``, written out with gammas."""
    m, ell = spec.m, spec.ell
    lg = log_gamma(1.5 + 1.0 / m).real - log_gamma(1.0 + 1.0 / m).real
    base = math.sqrt(math.pi) * math.exp(lg) / math.sin(ell * math.pi / m)
    return (base * (np.asarray(n, dtype=float) + 0.5)) ** (2.0 * m / (m + 2))


def leading_order(m: int, n, ell: int = 1) -> float:
    """Classical first-order eigenvalue law (``ell = 1``), optionally with ``sin(ell pi/m)``.

    Evaluated with ``math.gamma`` so it serves as an independent check on
    :func:`lambda_n0`.
    """
    num = math.gamma(1.5 + 1.0 / m) * math.sqrt(math.pi) * (np.asarray(n, dtype=float) + 0.5)
    den = math.sin(ell * math.pi / m) * math.gamma(1.0 + 1.0 / m)
    return (num / den) ** (2.0 * m / (m + 2))


def _e_power(e, alpha) -> complex:
    out = 1 + 0j
    for idx, p in enumerate(alpha):
        if p:
            out *= e[idx + 1] ** p
    return out


def compute_e(spec: ProblemSpec, d=None) -> np.ndarray:
    """Correction coefficients ``e_j`` of the eigenvalue expansion.

    ``e_1 = 0`` and, for ``j >= 2``,

        e_j = -(2m/(m+2)) [ c_j
                            + sum_{|alpha|=k>=2, alpha.beta=j} C(1/2+1/m, k) k!/alpha! e^alpha
                            + sum_{r=2}^{j-2} c_r sum_{alpha.beta=j-r} C(1/2+(1-r)/m, k) k!/alpha! e^alpha ]

    with ``c_j = d_j / d_0``.  Multi-indices with ``alpha.beta = j`` only
    touch ``e_1..e_{j-1}``, so the recursion is explicit.
    """
    m = spec.m
    d = d_vector(spec) if d is None else np.asarray(d, dtype=complex)
    J = len(d) - 1
    c = d / d[0]
    # e[i] for i = 0..m-1 so that multi-indices of length m-1 address e_1..e_{m-1}
    e = np.zeros(max(m, J + 1), dtype=complex)
    p0 = 0.5 + 1.0 / m
    for j in range(2, J + 1):
        total = c[j]
        for k in range(2, j + 1):
            coef = gen_binomial(p0, k)
            for al in multi_indices(m, j, k):
                total += coef * multinomial(al) * _e_power(e, al)
        for r in range(2, j - 1):
            if c[r] == 0:
                continue
            pr = 0.5 + (1.0 - r) / m
            inner = 0j
            for k in range(1, j - r + 1):
                coef = gen_binomial(pr, k)
                for al in multi_indices(m, j - r, k):
                    inner += coef * multinomial(al) * _e_power(e, al)
            total += c[r] * inner
        e[j] = -(2.0 * m / (m + 2)) * total
    return e[: J + 1].copy()


def asym_eigenvalue(model: AsymptoticModel, n) -> complex:
    """``lam_{n,0} + sum_{j>=2} e_j lam_{n,0}**(1 - j/m)``."""
    m = model.m
    l0 = lambda_n0(model.spec, n)
    out = np.asarray(l0, dtype=complex)
    for j in range(2, model.jmax + 1):
        out = out + model.e[j] * l0 ** (1.0 - j / m)
    return out[()] if out.ndim == 0 else out


def _check_branch(lam: complex) -> complex:
    lam = complex(lam)
    if lam.imag == 0.0 and lam.real <= 0.0:
        raise BranchError(f"lambda={lam} lies on the branch cut (-inf, 0]")
    return lam


def residual(model: AsymptoticModel, lam: complex, n: int) -> complex:
    """``sum_j d_j lam**(1/2 - (j-1)/m) - (2n+1) pi i``."""
    lam = _check_branch(lam)
    m = model.m
    s = 0j
    for j, dj in enumerate(model.d):
        if dj != 0:
            s += dj * lam ** _exponent(m, j)
    return s - (2 * n + 1) * math.pi * 1j


def residual_derivative(model: AsymptoticModel, lam: complex) -> complex:
    """Derivative of :func:`residual` with respect to ``lam``."""
    lam = _check_branch(lam)
    m = model.m
    s = 0j
    for j, dj in enumerate(model.d):
        p = _exponent(m, j)
        if dj != 0 and p != 0:
            s += dj * p * lam ** (p - 1.0)
    return s


def refine_eigenvalue(model: AsymptoticModel, n: int, tol: float = 1e-10,
                      max_iter: int = 50) -> complex:
    """Root of the truncated quantisation condition by Newton's method.

    Seeded at :func:`asym_eigenvalue`.  Stops when ``|residual| <= tol`` or
    when the Newton step falls to rounding level.

    Raises
    ------
    ConvergenceError
        After ``max_iter`` iterations without convergence.
    """
    lam = complex(asym_eigenvalue(model, n))
    if lam.imag == 0.0 and lam.real <= 0.0:
        lam = complex(lambda_n0(model.spec, n))
    trace = [lam]
    for _ in range(max_iter):
        f = residual(model, lam, n)
        if abs(f) <= tol:
            return lam
        step = f / residual_derivative(model, lam)
        new = lam - step
        # keep iterates off the cut
        while new.imag == 0.0 and new.real <= 0.0 or abs(np.angle(new)) > 3.0:
            step *= 0.5
            new = lam - step
        lam = new
        trace.append(lam)
        if abs(step) <= 8 * np.finfo(float).eps * abs(lam):
            return lam
    raise ConvergenceError(f"Newton did not converge for n={n}", lam, trace)


def counting_expansion(model: AsymptoticModel, t: float) -> complex:
    """``(1/(2 pi i)) (sum_j d_j t**(1/2-(j-1)/m) - pi i)`` as a complex number."""
    if t <= 0:
        raise ValueError("t must be positive")
    m = model.m
    s = sum(dj * t ** _exponent(m, j) for j, dj in enumerate(model.d))
    return (s - math.pi * 1j) / (2j * math.pi)


def counting(model: AsymptoticModel, t: float) -> float:
    """Asymptotic eigenvalue count ``N(t)`` up to an ``O(1)`` term.

    The expansion is only meaningful when ``Re d_j = 0`` for ``j >= 1``; a
    :class:`HypothesisWarning` is emitted otherwise.
    """
    worst = float(np.max(np.abs(model.d[1:].real))) if model.jmax >= 1 else 0.0
    if worst > 1e-10:
        warnings.warn(
            f"counting formula hypothesis violated: max |Re d_j| = {worst:.3g}",
            HypothesisWarning,
            stacklevel=2,
        )
    return counting_expansion(model, t).real


def empirical_count(eigenvalues, t: float) -> int:
    """Number of eigenvalues with ``|lam| <= t``."""
    return int(np.count_nonzero(np.abs(np.asarray(eigenvalues)) <= t))


def remark_e_closed_forms(model: AsymptoticModel) -> dict:
    """Explicit ``e_2..e_6`` in terms of the ratios ``c_j = d_j/d_0``.

    Only indices up to ``floor((m+2)/2)`` are returned.
    """
    m = model.m
    c = np.zeros(7, dtype=complex)
    c[: min(7, model.jmax + 1)] = model.c[: min(7, model.jmax + 1)]
    q = 2.0 * m / (m + 2)
    forms = {
        2: -q * c[2],
        3: -q * c[3],
        4: -q * c[4] + 3 * m * (m - 2) / (m + 2) ** 2 * c[2] ** 2,
        5: -q * c[5] + 4 * m * (m * m - 3 * m - 3) / (m + 2) ** 3 * c[2] * c[3],
        6: (
            -q * c[6]
            + m * (m - 6) / (m + 2) ** 2 * c[3] ** 2
            + 2 * m * (m - 6) / (m + 2) ** 2 * c[2] * c[4]
            + m * (m - 2) * (9 * m - 2) / (3 * (m + 2) ** 3) * c[2] ** 3
        ),
    }
    return {j: v for j, v in forms.items() if j <= model.jmax}
