import cmath
import math

import numpy as np
import pytest

from oracles import sinc_dvr_levels
from spectra_asym import shoot
from spectra_asym.asym import AsymptoticModel, ConvergenceError, asym_eigenvalue, refine_eigenvalue
from spectra_asym.coeffs import ProblemSpec
from spectra_asym.shoot import (
    DominanceError,
    EigenvalueRecord,
    IntegrationError,
    ShootingConfig,
    boundary_rays,
    contour,
    find_eigenvalue,
    integrate_path,
    integrate_ray,
    potential,
    scan_spectrum,
    turning_points,
    wkb_init,
    wronskian,
)

QUARTIC = ProblemSpec(4, 2)
CUBIC = ProblemSpec(3, 1)
QUARTIC_E0 = 1.0603620904841829  # sinc-DVR oracle, see test_quartic_oracle_value


def test_quartic_oracle_value():
    lv = sinc_dvr_levels(L=8.0, h=0.03, count=1)
    assert lv[0] == pytest.approx(QUARTIC_E0, rel=1e-11)


def test_config_validation():
    with pytest.raises(ValueError):
        ShootingConfig(radius_factor=1.5)
    with pytest.raises(ValueError):
        ShootingConfig(rtol=0)
    with pytest.raises(ValueError):
        ShootingConfig(contour="spiral")


def test_boundary_rays():
    lo, hi = boundary_rays(CUBIC)
    assert lo == pytest.approx(-math.pi / 2 - 2 * math.pi / 5)
    assert hi == pytest.approx(-math.pi / 2 + 2 * math.pi / 5)
    lo, hi = boundary_rays(QUARTIC)
    assert (lo, hi) == pytest.approx((-math.pi, 0.0))
    for m in range(3, 9):
        for ell in range(1, m):
            assert sum(boundary_rays(ProblemSpec(m, ell))) == pytest.approx(-math.pi)


def test_potential():
    z = np.linspace(-2, 2, 7)
    assert np.allclose(potential(CUBIC, z), 1j * z**3)
    assert np.allclose(potential(QUARTIC, z), z**4)
    spec = ProblemSpec(5, 1, [0.3, -0.1, 0.7, 0.2])
    zz = np.array([0.3 + 0.4j, -1.2 + 0.1j, 2.0 - 1.0j])
    assert np.allclose(np.conj(potential(spec, -np.conj(zz))), potential(spec, zz), atol=1e-13)
    direct = -((1j * zz) ** 5) - sum(a * (1j * zz) ** (5 - k) for k, a in enumerate(spec.a, 1))
    assert np.allclose(potential(spec, zz), direct, atol=1e-12)


def test_wkb_init_branch_and_formula():
    for spec in (CUBIC, QUARTIC, ProblemSpec(6, 2, [0.1, 0.2, 0.3, 0.4, 0.5])):
        for theta in boundary_rays(spec):
            st = wkb_init(spec, 3.0 + 1j, theta, 12.0)
            q = potential(spec, st.z) - (3.0 + 1j)
            # -(du/u + Q'/(4Q)) is the chosen square root; it must decay outward
            dq = np.polyval(np.polyder(shoot.potential_coeffs(spec)), st.z)
            sq = -(st.du / st.u + dq / (4 * q))
            assert (sq * cmath.exp(1j * theta)).real > 0
            assert sq**2 == pytest.approx(q, rel=1e-12)
    st = wkb_init(QUARTIC, 2.0, 0.0, 5.0)
    Q = 5.0**4 - 2.0
    assert st.du / st.u == pytest.approx(-math.sqrt(Q) - 5.0**3 / Q, rel=1e-14)


def test_wkb_dominance():
    with pytest.raises(DominanceError):
        wkb_init(QUARTIC, 100.0, 0.0, 3.0)


def test_integrate_ray_scale_invariance():
    th = boundary_rays(CUBIC)[1]
    a = integrate_ray(CUBIC, 5.0 + 0.5j, th)
    b = integrate_ray(CUBIC, 5.0 + 0.5j, th, scale=1e3)
    assert abs(a.direction() - b.direction()) <= 1e-12


def test_integrate_ray_rtol_convergence():
    th = boundary_rays(QUARTIC)[1]
    ratios = []
    for rtol in (1e-8, 1e-9, 1e-10):
        # 9.5 lies midway between two levels, away from the ill-conditioned spots
        s = integrate_ray(QUARTIC, 9.5, th, ShootingConfig(rtol=rtol, atol=rtol / 100))
        ratios.append(s.u / s.du)
    assert abs(ratios[2] - ratios[1]) <= 10 * 1e-9 * abs(ratios[1])


def test_quartic_wronskian_vanishes_at_eigenvalue():
    cfg = ShootingConfig(contour="origin")
    assert abs(wronskian(QUARTIC, QUARTIC_E0, cfg)) <= 1e-8
    assert abs(wronskian(QUARTIC, 1.2, cfg)) > 1e-2


def test_find_quartic_ground_state():
    rec = find_eigenvalue(QUARTIC, 1.0)
    assert isinstance(rec, EigenvalueRecord)
    assert rec.lam == pytest.approx(QUARTIC_E0, abs=1e-7)
    assert abs(rec.wronskian_residual) <= 1e-8
    again = find_eigenvalue(QUARTIC, rec.lam)
    assert again.lam == pytest.approx(rec.lam, rel=1e-9)


def test_cubic_ground_state_real():
    rec = find_eigenvalue(CUBIC, 1.0)
    assert rec.lam.real > 0 and abs(rec.lam.imag) <= 1e-10
    assert rec.lam.real == pytest.approx(1.1562670719881, rel=1e-9)


def test_cubic_matches_refined_asymptotics_at_large_n():
    model = AsymptoticModel.from_spec(CUBIC)
    for n in (30, 60):
        rec = find_eigenvalue(CUBIC, refine_eigenvalue(model, n))
        assert abs(rec.lam - refine_eigenvalue(model, n)) / abs(rec.lam) <= 1e-4


def test_turning_contour_equals_origin_on_real_axis():
    spec = ProblemSpec(4, 2, [0.4j, -0.5, 0.3j])
    a = find_eigenvalue(spec, 5.0, ShootingConfig(contour="turning")).lam
    b = find_eigenvalue(spec, 5.0, ShootingConfig(contour="origin")).lam
    assert a == pytest.approx(b, rel=1e-9)


def test_contour_endpoints_meet():
    spec = ProblemSpec(5, 1, [0, 0.3, -0.2, 0.1])
    (sl, pl), (sr, pr) = contour(spec, 300.0)
    assert pl[-1] == pr[-1]
    tl, tr = turning_points(spec, 300.0)
    assert pl[0] == tl and pr[0] == tr
    q = np.polyval(shoot.potential_coeffs(spec), [tl, tr]) - 300.0
    assert np.all(np.abs(q) <= 1e-9 * 300)


def test_radius_factor_robustness():
    spec = ProblemSpec(4, 1, [0.2, -0.1, 0.25])
    ref = None
    for rf in (6, 8, 12, 16):
        lam = find_eigenvalue(spec, 20.0, ShootingConfig(radius_factor=rf)).lam
        ref = lam if ref is None else ref
        assert abs(lam - ref) <= 1e-8 * abs(ref)


def test_wronskian_conjugate_symmetry():
    spec = ProblemSpec(3, 1, [0.2, -0.25])
    for lam in (4.0 + 0.3j, 12.0 - 1.0j):
        w1 = wronskian(spec, lam)
        w2 = wronskian(spec, lam.conjugate())
        assert abs(w2 - w1.conjugate()) <= 1e-8


def test_wronskian_away_from_spectrum():
    spec = ProblemSpec(3, 1, [0.2, -0.25])
    assert abs(wronskian(spec, 1j * 1.156)) > 1e-3


def test_real_sweep_brackets_quartic_levels():
    levels = sinc_dvr_levels(L=7.0, h=0.04, count=6)
    cfg = ShootingConfig(contour="origin")
    mids = np.concatenate([[0.5 * levels[0]], 0.5 * (levels[:-1] + levels[1:]), [levels[-1] + 2]])
    w = np.array([wronskian(QUARTIC, x, cfg) for x in mids])
    assert np.max(np.abs(w.imag)) <= 1e-10
    assert np.all(np.sign(w.real[:-1]) != np.sign(w.real[1:]))


def test_self_adjoint_oracle_with_lower_terms():
    # a = (i b1, a2, i b3) makes V real on the real axis: z^4 - b1 z^3 + a2 z^2 + b3 z
    b1, a2, b3 = 0.4, -0.5, 0.3
    spec = ProblemSpec(4, 2, [1j * b1, a2, 1j * b3])
    levels = sinc_dvr_levels(L=8.0, h=0.03, count=10, poly=[1, -b1, a2, b3, 0])
    recs = scan_spectrum(spec, 0, 9)
    got = np.array([r.lam for r in recs])
    assert len(got) == 10
    assert np.max(np.abs(got - levels) / levels) <= 1e-6


def test_pt_pairs_are_conjugate():
    spec = ProblemSpec(3, 1, [0.0, 3.0])
    up = find_eigenvalue(spec, 1.0 + 1.0j).lam
    down = find_eigenvalue(spec, 1.0 - 1.0j).lam
    assert abs(up.imag) > 0.1
    assert abs(down - up.conjugate()) <= 1e-8 * abs(up)


def test_convergence_error_carries_trace():
    cfg = ShootingConfig(max_iter=1, newton_tol=1e-300)
    with pytest.raises(ConvergenceError) as info:
        find_eigenvalue(CUBIC, 1.0, cfg)
    assert len(info.value.trace) >= 2


def test_integration_error_on_step_budget():
    with pytest.raises(IntegrationError):
        wronskian(CUBIC, 5.0, ShootingConfig(max_steps=5))


def test_integrate_path_accumulates_steps():
    th = boundary_rays(CUBIC)[0]
    st = wkb_init(CUBIC, 2.0, th, 10.0)
    out = integrate_path(CUBIC, 2.0, st, [st.z * 0.5, 0j])
    assert out.z == 0 and out.steps > 0


def test_scan_spectrum_order_and_labels():
    recs = scan_spectrum(CUBIC, 0, 8, jobs=2)
    mags = [abs(r.lam) for r in recs]
    assert mags == sorted(mags)
    assert [r.n for r in recs] == list(range(9))
    with pytest.raises(ValueError):
        scan_spectrum(CUBIC, 5, 2)


def test_scan_spectrum_dedupes_and_collects_failures(monkeypatch):
    def fake(spec, model, n, cfg):
        if n == 3:
            raise IntegrationError("boom")
        lam = 10.0 if n in (1, 2) else float(n * 10 + 100)
        return EigenvalueRecord(lam=complex(lam) * (1 + 1e-9 * n), n=n, seed=complex(lam))

    monkeypatch.setattr(shoot, "_solve_index", fake)
    failures = []
    recs = scan_spectrum(CUBIC, 0, 4, failures=failures)
    assert [n for n, _ in failures] == [3]
    # n = 1 and n = 2 merged, keeping the root closer to its seed
    assert [r.n for r in recs] == [1, 0, 4]


def test_jobs_env_fallback(monkeypatch):
    monkeypatch.setenv("SPECTRA_ASYM_JOBS", "3")
    assert shoot._resolve_jobs(None) == 3
    assert shoot._resolve_jobs(2) == 2


def test_continuation_fallback(monkeypatch):
    spec = ProblemSpec(3, 1, [0.25, -0.2])
    model = AsymptoticModel.from_spec(spec)
    direct = find_eigenvalue(spec, asym_eigenvalue(model, 2)).lam
    cont = shoot._continuation(spec, 2, ShootingConfig())
    assert cont.lam == pytest.approx(direct, rel=1e-9)

    calls = {"n": 0}
    real = shoot.find_eigenvalue

    def flaky(*args, **kw):
        calls["n"] += 1
        if calls["n"] == 1:
            raise ConvergenceError("seed in wrong basin", None, [])
        return real(*args, **kw)

    monkeypatch.setattr(shoot, "find_eigenvalue", flaky)
    rec = shoot._solve_index(spec, model, 2, ShootingConfig())
    assert rec.lam == pytest.approx(direct, rel=1e-9)
