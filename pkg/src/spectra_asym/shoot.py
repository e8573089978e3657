"""Numerical eigenvalues by complex-plane shooting.

Each boundary condition selects the solution that decays along one ray to
infinity.  That solution is seeded at a large radius with first-order WKB
data and integrated inward; an eigenvalue is a zero of the Wronskian of the
two integrated solutions.

Contour
-------
Integrating both rays straight to the origin (``contour="origin"``) is only
well conditioned when the origin lies in the classically allowed region, as
for the real-axis problem ``ell = m/2``.  For other boundary conditions and
large ``|lam|`` both solutions reach the origin dominated by the same
exponential and the Wronskian drowns in rounding error.  The default
``contour="turning"`` therefore integrates each solution from its ray to
the adjacent turning point of ``V(z) - lam`` and then along the chord
joining the two turning points, matching at its midpoint.  For the
real-axis problem both contours coincide.
"""

from __future__ import annotations

import cmath
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import _rk
from .asym import AsymptoticModel, ConvergenceError, asym_eigenvalue
from .coeffs import ProblemSpec

__all__ = [
    "ShootingConfig",
    "EigenvalueRecord",
    "RayState",
    "IntegrationError",
    "DominanceError",
    "boundary_rays",
    "potential",
    "potential_coeffs",
    "turning_points",
    "wkb_init",
    "integrate_path",
    "integrate_ray",
    "anti_stokes_path",
    "contour",
    "wronskian",
    "find_eigenvalue",
    "scan_spectrum",
]

log = logging.getLogger(__name__)


class IntegrationError(RuntimeError):
    """The ray integration failed (step-size underflow or step budget)."""


class DominanceError(ValueError):
    """The starting radius is too small for WKB initial data."""


@dataclass(frozen=True)
class ShootingConfig:
    """Numerical parameters of the shooting solver.

    The starting radius is ``R = radius_factor * max(|lam|**(1/m), 1)``; if the
    leading term does not dominate there, ``R`` is grown up to
    ``radius_cap * max(|lam|**(1/m), 1)``.
    """

    radius_factor: float = 8.0
    rtol: float = 1e-10
    atol: float = 1e-12
    newton_tol: float = 1e-9
    max_iter: int = 50
    renorm_threshold: float = 1e100
    radius_cap: float = 64.0
    max_steps: int = 50_000_000
    contour: str = "turning"

    def __post_init__(self):
        if self.radius_factor < 2:
            raise ValueError("radius_factor must be >= 2")
        if min(self.rtol, self.atol, self.newton_tol) <= 0:
            raise ValueError("tolerances must be positive")
        if self.contour not in ("turning", "origin"):
            raise ValueError("contour must be 'turning' or 'origin'")


@dataclass
class EigenvalueRecord:
    lam: complex
    n: int | None = None
    wronskian_residual: complex = 0j
    iterations: int = 0
    method: str = "shooting"
    seed: complex | None = None

    def as_row(self) -> dict:
        return {
            "n": self.n,
            "re": self.lam.real,
            "im": self.lam.imag,
            "abs": abs(self.lam),
            "residual": abs(self.wronskian_residual),
            "iterations": self.iterations,
            "method": self.method,
        }


@dataclass
class RayState:
    """Solution value ``u`` and ``du = du/dz`` at ``z``; true values carry ``exp(log_scale)``."""

    u: complex
    du: complex
    log_scale: float = 0.0
    z: complex = 0j
    steps: int = field(default=0, compare=False)

    @property
    def norm(self) -> float:
        return max(abs(self.u), abs(self.du))

    def direction(self) -> complex:
        """``u : du`` as a unit-normalised ratio pair, for scale-free comparison."""
        s = self.u if abs(self.u) >= abs(self.du) else self.du
        return self.du / s if s is self.u else self.u / s


def boundary_rays(spec: ProblemSpec) -> tuple:
    """Angles ``-pi/2 -+ (ell+1) pi/(m+2)`` of the left and right decay rays."""
    half = (spec.ell + 1) * math.pi / (spec.m + 2)
    return (-math.pi / 2 - half, -math.pi / 2 + half)


def potential_coeffs(spec: ProblemSpec) -> np.ndarray:
    """Monomial coefficients of ``V(z) = (-1)**ell (iz)**m - P(iz)``, highest degree first."""
    m = spec.m
    c = np.zeros(m + 1, dtype=complex)
    c[0] = (-1) ** spec.ell * 1j**m
    for k, ak in enumerate(spec.a, start=1):
        c[k] = -ak * 1j ** (m - k)
    return c


def potential(spec: ProblemSpec, z):
    """``V(z)`` by Horner's rule (accepts arrays)."""
    return np.polyval(potential_coeffs(spec), z)


def _unit(theta: float) -> complex:
    return complex(math.cos(theta), math.sin(theta))


def _scale(lam, m) -> float:
    return max(abs(lam) ** (1.0 / m), 1.0)


def wkb_init(spec: ProblemSpec, lam: complex, theta: float, R: float) -> RayState:
    """Recessive-solution data at ``z = R exp(i theta)``.

    ``u = 1`` and ``du/dz = -sqrt(Q) - Q'/(4Q)`` with ``Q = V - lam`` and the
    root chosen so that ``Re(sqrt(Q) exp(i theta)) > 0``.

    Raises
    ------
    DominanceError
        If ``R**m < 4 (|lam| + sum |a_k| R**(m-k))``.
    """
    m = spec.m
    tail = sum(abs(ak) * R ** (m - k) for k, ak in enumerate(spec.a, start=1))
    if R**m < 4.0 * (abs(lam) + tail):
        raise DominanceError(f"R={R:.4g} too small for lam={lam}")
    coef = potential_coeffs(spec)
    rot = _unit(theta)
    z = R * rot
    Q = np.polyval(coef, z) - lam
    dQ = np.polyval(np.polyder(coef), z)
    root = cmath.sqrt(Q)
    if (root * rot).real < 0:
        root = -root
    return RayState(1 + 0j, -root - dQ / (4 * Q), 0.0, z)


def _start(spec, lam, theta, cfg):
    R = cfg.radius_factor * _scale(lam, spec.m)
    cap = cfg.radius_cap * _scale(lam, spec.m)
    while True:
        try:
            return wkb_init(spec, lam, theta, R)
        except DominanceError:
            R *= 1.5
            if R > cap:
                raise


def integrate_path(spec: ProblemSpec, lam: complex, state: RayState, points,
                   cfg: ShootingConfig = ShootingConfig()) -> RayState:
    """Carry ``state`` along the polyline ``state.z -> points[0] -> points[1] ...``."""
    coef = potential_coeffs(spec)
    lam = complex(lam)
    u, du, ls, z = state.u, state.du, state.log_scale, complex(state.z)
    steps = state.steps
    for target in points:
        target = complex(target)
        L = abs(target - z)
        if L == 0.0:
            continue
        w = (target - z) / L
        qmag = abs(np.polyval(coef, z) - lam)
        h0 = 0.05 / max(math.sqrt(qmag), 1e-3)
        ru, rdu, dls, n, status, t_fail = _rk.integrate_segment(
            coef, lam, z, w, L, u, du * w, cfg.rtol, cfg.atol,
            cfg.renorm_threshold, h0, cfg.max_steps,
        )
        if status != _rk.STATUS_OK:
            why = "step-size underflow" if status == _rk.STATUS_STEP_UNDERFLOW else "step budget exhausted"
            raise IntegrationError(f"{why} at z={z + t_fail * w:.6g} (lam={lam})")
        u, du, ls, z = ru, rdu / w, ls + dls, target
        steps += n
    return RayState(u, du, ls, z, steps)


def integrate_ray(spec: ProblemSpec, lam: complex, theta: float,
                  cfg: ShootingConfig = ShootingConfig(), scale: complex = 1.0) -> RayState:
    """Recessive solution along the ray ``arg z = theta``, integrated to ``z = 0``."""
    s0 = _start(spec, lam, theta, cfg)
    s0 = RayState(s0.u * scale, s0.du * scale, 0.0, s0.z)
    return integrate_path(spec, lam, s0, [0j], cfg)


def turning_points(spec: ProblemSpec, lam: complex) -> tuple:
    """Zeros of ``V - lam`` adjacent to the left and right decay rays.

    For large ``|lam|`` these sit near ``|lam|**(1/m) exp(i(-pi/2 + (arg lam -+ ell pi)/m))``.
    """
    m, ell = spec.m, spec.ell
    coef = potential_coeffs(spec)
    coef[-1] -= lam
    roots = np.roots(coef)
    rho = abs(lam) ** (1.0 / m)
    arg = cmath.phase(lam) if lam != 0 else 0.0
    guess_l = rho * _unit(-math.pi / 2 + (arg - ell * math.pi) / m)
    guess_r = rho * _unit(-math.pi / 2 + (arg + ell * math.pi) / m)
    il = int(np.argmin(np.abs(roots - guess_l)))
    ir = int(np.argmin(np.abs(roots - guess_r)))
    if il == ir:
        order = np.argsort(np.abs(roots - guess_r))
        ir = int(order[1])
    return complex(roots[il]), complex(roots[ir])


def anti_stokes_path(spec: ProblemSpec, lam: complex, start: complex, end: complex,
                     npts: int = 48) -> list:
    """Points on the curve ``Re int_start^z sqrt(V - lam) = 0`` leaving ``start`` toward ``end``.

    Along this curve neither solution dominates the other, so carrying a
    solution along it does not amplify integration error.  The curve is
    traced with midpoint steps of length ``|end - start| / npts`` until it
    crosses the perpendicular bisector of ``start`` and ``end``.  Returns an
    empty list if it does not get there in ``2 * npts`` steps.
    """
    coef = potential_coeffs(spec)
    coef[-1] -= lam
    dcoef = np.polyder(coef)
    span = abs(end - start)
    if span == 0:
        return []
    h = span / npts

    def heading(z, prev):
        q = cmath.sqrt(np.polyval(coef, z))
        if q == 0:
            return prev
        d = 1j * q.conjugate() / abs(q)
        return d if (d * prev.conjugate()).real >= 0 else -d

    # the three anti-Stokes directions leaving a simple turning point
    q1 = np.polyval(dcoef, start)
    target = cmath.phase(end - start)
    best = None
    for k in range(3):
        phi = (math.pi / 2 + k * math.pi - cmath.phase(q1) / 2) * 2 / 3
        score = math.cos(phi - target)
        if best is None or score > best[0]:
            best = (score, phi)
    prev = _unit(best[1])
    z = start + 0.5 * h * prev
    pts = [z]
    for _ in range(2 * npts):
        if abs(z - start) >= abs(z - end):
            return pts
        d1 = heading(z, prev)
        d2 = heading(z + 0.5 * h * d1, d1)
        z = z + h * d2
        prev = d2
        pts.append(z)
    return []


def contour(spec: ProblemSpec, lam: complex, cfg: ShootingConfig = ShootingConfig()):
    """Left and right polylines ``(start_state, [waypoints...])`` ending at a common match point.

    Each solution runs from its ray to its turning point and then along the
    anti-Stokes curve toward the other turning point; the match point is the
    midpoint of the two half-curve ends.  The construction commutes with the
    reflection ``z -> -conj(z)``, so PT symmetry of the equation carries over
    to the computed Wronskian.
    """
    th_l, th_r = boundary_rays(spec)
    s_l = _start(spec, lam, th_l, cfg)
    s_r = _start(spec, lam, th_r, cfg)
    if cfg.contour == "origin":
        return (s_l, [0j]), (s_r, [0j])
    t_l, t_r = turning_points(spec, lam)
    half_l = anti_stokes_path(spec, lam, t_l, t_r)
    half_r = anti_stokes_path(spec, lam, t_r, t_l)
    if half_l and half_r:
        mid = 0.5 * (half_l[-1] + half_r[-1])
    else:
        half_l, half_r = [], []
        mid = 0.5 * (t_l + t_r)
    return (s_l, [t_l] + half_l + [mid]), (s_r, [t_r] + half_r + [mid])


def _states(spec, lam, cfg):
    (s_l, p_l), (s_r, p_r) = contour(spec, lam, cfg)
    return integrate_path(spec, lam, s_l, p_l, cfg), integrate_path(spec, lam, s_r, p_r, cfg)


def wronskian(spec: ProblemSpec, lam: complex, cfg: ShootingConfig = ShootingConfig()) -> complex:
    """Normalised Wronskian ``(u_L u_R' - u_L' u_R) / (|state_L| |state_R|)`` at the match point."""
    left, right = _states(spec, complex(lam), cfg)
    w = left.u * right.du - left.du * right.u
    return w / (left.norm * right.norm)


def _muller(f, x0, x1, x2, f0, f1, f2, tol, max_iter, trace):
    for it in range(max_iter):
        h1 = x1 - x0
        h2 = x2 - x1
        if h1 == 0 or h2 == 0 or h1 + h2 == 0:
            break
        d1 = (f1 - f0) / h1
        d2 = (f2 - f1) / h2
        a = (d2 - d1) / (h2 + h1)
        b = a * h2 + d2
        disc = cmath.sqrt(b * b - 4 * f2 * a)
        den = b + disc if abs(b + disc) >= abs(b - disc) else b - disc
        if den == 0:
            break
        dx = -2 * f2 / den
        x3 = x2 + dx
        trace.append(x3)
        if abs(dx) <= tol * max(abs(x3), 1.0):
            return x3, it + 1
        x0, x1, x2 = x1, x2, x3
        f0, f1, f2 = f1, f2, f(x3)
    raise ConvergenceError("Muller iteration failed", x2, trace)


def find_eigenvalue(spec: ProblemSpec, lam_guess: complex,
                    cfg: ShootingConfig = ShootingConfig(), n: int | None = None) -> EigenvalueRecord:
    """Zero of :func:`wronskian` near ``lam_guess``.

    Secant iteration from ``lam_guess`` and a point displaced by one part in
    ``10**4``; if that stalls or produces a non-finite step, Muller's method
    continues from the last three iterates.

    Raises
    ------
    ConvergenceError
        Carries the iterate trace in ``.trace``.
    """
    f = lambda x: wronskian(spec, x, cfg)
    tol = cfg.newton_tol
    x0 = complex(lam_guess)
    x1 = x0 + 1e-4 * max(abs(x0), 1.0)
    f0, f1 = f(x0), f(x1)
    trace = [x0, x1]
    hist = [(x0, f0), (x1, f1)]
    budget = max(cfg.max_iter // 2, 4)
    it = 0
    root = None
    for it in range(1, budget + 1):
        den = f1 - f0
        if den == 0 or not np.isfinite(den):
            break
        x2 = x1 - f1 * (x1 - x0) / den
        if not np.isfinite(x2):
            break
        trace.append(x2)
        if abs(x2 - x1) <= tol * max(abs(x2), 1.0):
            root = x2
            break
        x0, f0, x1, f1 = x1, f1, x2, f(x2)
        hist.append((x1, f1))
    if root is None:
        (a0, g0), (a1, g1), (a2, g2) = hist[-3:] if len(hist) >= 3 else (hist[0], hist[-1], (hist[-1][0] * (1 + 1e-3), f(hist[-1][0] * (1 + 1e-3))))
        try:
            root, extra = _muller(f, a0, a1, a2, g0, g1, g2, tol, cfg.max_iter - it, trace)
        except ConvergenceError as exc:
            raise ConvergenceError(f"no eigenvalue found near {lam_guess}", exc.last, trace) from None
        it += extra
    res = f(root)
    return EigenvalueRecord(lam=complex(root), n=n, wronskian_residual=complex(res),
                            iterations=it, method="shooting", seed=complex(lam_guess))


def _continuation(spec, n, cfg, steps=8):
    # follow the n-th level from a = 0 to the requested coefficients
    base = spec.with_a([0] * (spec.m - 1))
    guess = asym_eigenvalue(AsymptoticModel.from_spec(base), n)
    rec = None
    for t in np.linspace(0.0, 1.0, steps + 1):
        sub = spec.with_a([t * x for x in spec.a])
        rec = find_eigenvalue(sub, guess, cfg, n=n)
        guess = rec.lam
    return rec


def _solve_index(spec, model, n, cfg):
    seed = complex(asym_eigenvalue(model, n))
    try:
        rec = find_eigenvalue(spec, seed, cfg, n=n)
    except (ConvergenceError, IntegrationError, DominanceError) as exc:
        log.info("seed for n=%d failed (%s); trying continuation in a", n, exc)
        rec = _continuation(spec, n, cfg)
    rec.seed = seed
    return rec


def _resolve_jobs(jobs):
    if jobs is None:
        jobs = int(os.environ.get("SPECTRA_ASYM_JOBS", "1") or 1)
    return max(1, int(jobs))


def scan_spectrum(spec: ProblemSpec, n_min: int, n_max: int,
                  cfg: ShootingConfig = ShootingConfig(), jobs: int | None = None,
                  failures: list | None = None) -> list:
    """Eigenvalues seeded at the asymptotic values for ``n_min..n_max``.

    Roots closer than ``1e-6`` relative are merged (keeping the record whose
    seed was nearer).  Failed indices are appended to ``failures`` as
    ``(n, exception)`` instead of aborting.  Records are sorted by ``|lam|``.
    """
    if not 0 <= n_min <= n_max:
        raise ValueError("need 0 <= n_min <= n_max")
    model = AsymptoticModel.from_spec(spec)
    jobs = _resolve_jobs(jobs)
    # compile the kernel before fanning out
    wronskian(spec, complex(asym_eigenvalue(model, n_min)), cfg)

    def work(n):
        try:
            return n, _solve_index(spec, model, n, cfg), None
        except Exception as exc:  # collected, not fatal
            return n, None, exc

    idx = range(n_min, n_max + 1)
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(work, idx))
    else:
        results = [work(n) for n in idx]

    recs = []
    for n, rec, exc in results:
        if rec is None:
            if failures is not None:
                failures.append((n, exc))
            continue
        dup = None
        for i, other in enumerate(recs):
            if abs(other.lam - rec.lam) <= 1e-6 * max(abs(rec.lam), 1.0):
                dup = i
                break
        if dup is None:
            recs.append(rec)
        elif abs(rec.lam - rec.seed) < abs(recs[dup].lam - recs[dup].seed):
            recs[dup] = rec
    recs.sort(key=lambda r: abs(r.lam))
    return recs


def with_config(cfg: ShootingConfig, **kw) -> ShootingConfig:
    return replace(cfg, **kw)
