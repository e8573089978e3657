"""Expansion constants for the polynomial-potential eigenvalue problem.

The operator is ``-u'' + [(-1)**ell (iz)**m - P(iz)] u = lam u`` with
``P(z) = a_1 z**(m-1) + ... + a_{m-1} z``.  The coefficient vector ``a`` is
stored densely as a length ``m - 1`` array; ``a[k - 1]`` is ``a_k``, the
coefficient of ``z**(m - k)``.  Every public function here uses the 1-based
index ``k`` of that convention.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy import integrate

from .specfun import beta, gen_binomial, log_gamma, odd_harmonic

__all__ = [
    "ProblemSpec",
    "multi_indices",
    "multinomial",
    "b_jk",
    "b_j",
    "b_series",
    "nu",
    "K_closed",
    "K_quad",
    "K_m0",
    "K_mj",
    "k_domain",
    "eta",
    "d_lj",
    "d_vector",
    "j_top",
    "omega_power",
    "g_action",
    "reflect",
    "QuadratureError",
]


class QuadratureError(RuntimeError):
    """Adaptive quadrature did not reach the requested tolerance."""


@dataclass(frozen=True)
class ProblemSpec:
    """Degree ``m``, boundary index ``ell`` and coefficients ``a`` of ``P``."""

    m: int
    ell: int
    a: tuple

    def __init__(self, m, ell, a=None):
        m = int(m)
        ell = int(ell)
        if m < 3:
            raise ValueError(f"degree m must be >= 3, got {m}")
        if not 1 <= ell <= m - 1:
            raise ValueError(f"ell must lie in [1, {m - 1}], got {ell}")
        if a is None:
            a = (0j,) * (m - 1)
        a = tuple(complex(x) for x in a)
        if len(a) != m - 1:
            raise ValueError(f"expected {m - 1} coefficients, got {len(a)}")
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "ell", ell)
        object.__setattr__(self, "a", a)

    @property
    def coeffs(self) -> np.ndarray:
        return np.array(self.a, dtype=complex)

    @property
    def is_real(self) -> bool:
        return all(x.imag == 0.0 for x in self.a)

    def with_a(self, a) -> "ProblemSpec":
        return ProblemSpec(self.m, self.ell, a)


def j_top(m: int) -> int:
    """Largest expansion index ``floor((m + 2) / 2)``."""
    return (m + 2) // 2


# ---------------------------------------------------------------------------
# multi-indices


@lru_cache(maxsize=None)
def _partitions(total: int, parts: int, largest: int) -> tuple:
    # Partitions of ``total`` into exactly ``parts`` parts, each <= largest,
    # listed as nonincreasing tuples.
    if parts == 0:
        return ((),) if total == 0 else ()
    if total < parts or total > parts * largest:
        return ()
    out = []
    for first in range(min(largest, total - parts + 1), 0, -1):
        for rest in _partitions(total - first, parts - 1, first):
            out.append((first,) + rest)
    return tuple(out)


@lru_cache(maxsize=None)
def _multi_indices(m: int, j: int, k: int) -> tuple:
    out = []
    for part in _partitions(j, k, min(j, m - 1)):
        alpha = [0] * (m - 1)
        for p in part:
            alpha[p - 1] += 1
        out.append(tuple(alpha))
    return tuple(out)


def multi_indices(m: int, j: int, k: int) -> list:
    """All ``alpha`` in N^(m-1) with ``|alpha| = k`` and ``sum i*alpha_i = j``.

    Generated from the partitions of ``j`` into exactly ``k`` parts no larger
    than ``m - 1``; each partition maps to one count vector.
    """
    if j < 0 or k < 0:
        return []
    return list(_multi_indices(int(m), int(j), int(k)))


@lru_cache(maxsize=None)
def multinomial(alpha: tuple) -> int:
    """``|alpha|! / alpha!``."""
    out = math.factorial(sum(alpha))
    for x in alpha:
        out //= math.factorial(x)
    return out


def _monomial(vec, alpha) -> complex:
    out = 1 + 0j
    for x, p in zip(vec, alpha):
        if p:
            out *= x**p
    return out


def _poly_sum(vec, m: int, j: int, k: int) -> complex:
    # sum over |alpha| = k, alpha.beta = j of (k!/alpha!) vec**alpha
    return sum(
        (multinomial(al) * _monomial(vec, al) for al in _multi_indices(m, j, k)),
        0j,
    )


# ---------------------------------------------------------------------------
# b coefficients


def b_jk(spec: ProblemSpec, j: int, k: int) -> complex:
    """Weight-``k`` part of the ``z**-j`` coefficient of ``sqrt(1 + sum a_i z**-i)``."""
    if k < 1 or k > j:
        raise ValueError(f"need 1 <= k <= j, got j={j}, k={k}")
    return gen_binomial(0.5, k) * _poly_sum(spec.a, spec.m, j, k)


def b_j(spec: ProblemSpec, j: int) -> complex:
    """Sum of ``b_jk`` over ``k = 1..j``; independent of the eigenvalue for ``j <= m - 1``."""
    if j < 1:
        raise ValueError("j must be >= 1")
    return sum((b_jk(spec, j, k) for k in range(1, j + 1)), 0j)


def b_series(spec: ProblemSpec, order: int) -> np.ndarray:
    """Coefficients ``s_0..s_order`` of ``sqrt(1 + sum_i a_i w**i)`` in powers of ``w = 1/z``.

    Computed from ``s**2 = p`` term by term, with no reference to
    multi-indices; ``s_j`` equals :func:`b_j` for ``1 <= j <= m - 1``.
    """
    p = np.zeros(order + 1, dtype=complex)
    p[0] = 1.0
    for i, ai in enumerate(spec.a[:order], start=1):
        p[i] = ai
    out = np.zeros(order + 1, dtype=complex)
    out[0] = 1.0
    for n in range(1, order + 1):
        out[n] = 0.5 * (p[n] - np.dot(out[1:n], out[n - 1:0:-1]))
    return out


def nu(spec: ProblemSpec) -> complex:
    """``b_{m/2+1}`` for even ``m``, zero for odd ``m``."""
    if spec.m % 2:
        return 0j
    return b_j(spec, spec.m // 2 + 1)


# ---------------------------------------------------------------------------
# K constants


def k_domain(m: int) -> list:
    """All ``(j, k)`` pairs for which ``K_closed(m, j, k)`` is defined."""
    out = [(1, 1)]
    for j in range(2, (m + 1) // 2 + 1):
        out.extend((j, k) for k in range(1, j + 1))
    if m % 2 == 0:
        j = (m + 2) // 2
        out.extend((j, k) for k in range(1, j + 1))
    return out


def K_closed(m: int, j: int, k: int) -> float:
    """Closed form of the regularised integral ``K_{m,j,k}``.

    Three regimes: ``j = k = 1``; ``2 <= j <= (m+1)/2`` (a beta function);
    and, for even ``m``, ``j = (m+2)/2`` (a log-2 / odd-harmonic sum).
    """
    if j == 1 and k == 1:
        return -2.0 / m
    if 1 <= k <= j and 2 * j <= m + 1 and j != 1:
        s = (j - 1) / m
        return -(2 * k - 1) / (m + 2 - 2 * j) * beta(k - s, 0.5 + s)
    if m % 2 == 0 and 2 * j == m + 2 and 1 <= k <= j:
        return 2.0 / m * (math.log(2.0) - odd_harmonic(k))
    raise ValueError(f"K_closed undefined for m={m}, j={j}, k={k}")


def _k_integrands(m: int, j: int, k: int):
    # (head, tail): integrand on [0, 1] and f(1/u)/u**2 on (0, 1]; QUADPACK
    # never samples the endpoints, where some of these are singular.
    if 2 * j == m + 2 and m % 2 == 0 and k >= 1:
        p = m * k - m / 2 - 1
        c = k - 0.5

        def head(t):
            return t**p / (1.0 + t**m) ** c - 1.0 / (1.0 + t)

        def tail(u):
            return (math.exp(-c * math.log1p(u**m)) - 1.0 / (1.0 + u)) / u

        return head, tail

    p = m * k - j
    c = k - 0.5
    q = m / 2 - j

    def head(t):
        return t**p / (1.0 + t**m) ** c - t**q

    def tail(u):
        return u ** (j - m / 2 - 2) * math.expm1(-c * math.log1p(u**m))

    return head, tail


def K_quad(m: int, j: int, k: int, tol: float = 1e-10) -> float:
    """``K_{m,j,k}`` from its defining improper integral.

    The half-line is split at ``t = 1`` and the outer piece mapped onto
    ``(0, 1]`` with ``t -> 1/t``; both pieces go to adaptive Gauss-Kronrod
    quadrature.  ``(j, k) = (0, 0)`` gives ``K_m0``.

    Raises
    ------
    QuadratureError
        If the combined error estimate exceeds ``tol``.
    """
    if not ((j, k) == (0, 0) or (j, k) in k_domain(m)):
        raise ValueError(f"K_quad undefined for m={m}, j={j}, k={k}")
    head, tail = _k_integrands(m, j, k)
    opts = dict(epsabs=tol / 4, epsrel=1e-13, limit=400)
    v1, e1 = integrate.quad(head, 0.0, 1.0, **opts)
    v2, e2 = integrate.quad(tail, 0.0, 1.0, **opts)
    if e1 + e2 > tol:
        raise QuadratureError(
            f"K_quad(m={m}, j={j}, k={k}) error estimate {e1 + e2:.3g} > {tol:.3g}"
        )
    return v1 + v2


def K_m0(m: int) -> float:
    """``K_m = int_0^inf (sqrt(1 + t**m) - t**(m/2)) dt`` in closed form."""
    lg = log_gamma(1.0 + 1.0 / m).real - log_gamma(1.5 + 1.0 / m).real
    return math.sqrt(math.pi) / (2.0 * math.cos(math.pi / m)) * math.exp(lg)


def K_mj(spec: ProblemSpec, j: int) -> complex:
    """``K_{m,j}(a) = sum_k b_jk(a) K_{m,j,k}``; ``j = 0`` gives ``K_m``."""
    if j == 0:
        return complex(K_m0(spec.m))
    return sum((b_jk(spec, j, k) * K_closed(spec.m, j, k) for k in range(1, j + 1)), 0j)


# ---------------------------------------------------------------------------
# d coefficients


def eta(spec: ProblemSpec) -> complex:
    """Constant term of the quantisation condition for even ``m`` and odd ``ell``."""
    m, ell = spec.m, spec.ell
    if m % 2 or ell % 2 == 0:
        return 0j
    jj = (m + 2) // 2
    sign = -1.0 if ((ell - 1) // 2) % 2 else 1.0
    return sign * 4j * math.pi / m * sum((b_jk(spec, jj, k) for k in range(1, jj + 1)), 0j)


def d_lj(spec: ProblemSpec, j: int) -> complex:
    """Coefficient of ``lam**(1/2 - (j-1)/m)`` in the quantisation condition."""
    m, ell = spec.m, spec.ell
    if j < 0 or j > j_top(m):
        raise IndexError(f"j={j} outside [0, {j_top(m)}]")
    if j == 0:
        lg = log_gamma(1.0 + 1.0 / m).real - log_gamma(1.5 + 1.0 / m).real
        return 2j * math.sqrt(math.pi) * math.sin(ell * math.pi / m) * math.exp(lg)
    if 2 * j == m + 2:
        return eta(spec)
    # sin((j-1) ell pi/m) vanishes exactly when m divides (j-1) ell
    if ((j - 1) * ell) % m == 0:
        return 0j
    trig = math.sin((j - 1) * ell * math.pi / m) * math.cos((j - 1) * math.pi / m)
    total = 0j
    for k in range(1, j + 1):
        sign = -1.0 if ((ell + 1) * k) % 2 else 1.0
        total += sign * K_closed(m, j, k) * b_jk(spec, j, k)
    return -4j * total * trig


def d_vector(spec: ProblemSpec) -> np.ndarray:
    """``[d_{ell,0}, ..., d_{ell,floor((m+2)/2)}]``."""
    return np.array([d_lj(spec, j) for j in range(j_top(spec.m) + 1)], dtype=complex)


# ---------------------------------------------------------------------------
# symmetries


def omega_power(m: int, nu_) -> complex:
    """``exp(2 pi i nu / (m + 2))`` with the rational exponent reduced mod ``m + 2``."""
    fr = Fraction(nu_).limit_denominator(10**6) % (m + 2)
    return cmath.exp(2j * math.pi * float(fr) / (m + 2))


def g_action(a, s, m: int | None = None) -> np.ndarray:
    """Phase rotation ``(w**((m+1)s) a_1, w**(m s) a_2, ..., w**(3s) a_{m-1})``.

    ``w = exp(2 pi i / (m + 2))`` and ``2s`` must be an integer.
    """
    a = np.asarray(a, dtype=complex)
    if m is None:
        m = a.size + 1
    s = Fraction(s).limit_denominator(10**6)
    if (2 * s).denominator != 1:
        raise ValueError("s must be a half-integer")
    out = np.empty_like(a)
    for idx in range(a.size):
        kk = idx + 1
        out[idx] = omega_power(m, (m + 2 - kk) * s) * a[idx]
    return out


def reflect(a) -> np.ndarray:
    """Coefficients of ``P(-z)``: ``((-1)**(m-1) a_1, ..., -a_{m-1})``."""
    a = np.asarray(a, dtype=complex)
    m = a.size + 1
    signs = np.array([(-1.0) ** (m - kk) for kk in range(1, m)])
    return signs * a
