import csv
import io
import json
import math

import pytest

from spectra_asym import cli
from spectra_asym.cli import ConfigError, load_config, main, write_table


def _write(tmp_path, cfg, name="run.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg), encoding="utf-8")
    return str(p)


def _run(tmp_path, command, cfg, fmt="csv", extra=()):
    out = tmp_path / f"out.{fmt}"
    rc = main([command, "--config", _write(tmp_path, cfg), "--format", fmt, "--out", str(out), *extra])
    text = out.read_text(encoding="utf-8") if out.exists() else ""
    return rc, text


def _rows(text):
    return list(csv.DictReader(io.StringIO(text)))


# config --------------------------------------------------------------------


def test_unknown_keys_rejected():
    with pytest.raises(ConfigError, match="unknown top-level"):
        load_config({"problme": {"m": 3, "ell": 1}})
    with pytest.raises(ConfigError, match=r"problem: unknown keys \['b'\]"):
        load_config({"problem": {"m": 3, "ell": 1, "b": 1}})
    with pytest.raises(ConfigError, match="shoot"):
        load_config({"shoot": {"radius": 3}})


def test_problem_invariants_checked_at_load():
    with pytest.raises(ConfigError, match="problem"):
        load_config({"problem": {"m": 2, "ell": 1}})
    with pytest.raises(ConfigError, match="problem"):
        load_config({"problem": {"m": 4, "ell": 4}})
    with pytest.raises(ConfigError, match=r"problem.a\[1\]"):
        load_config({"problem": {"m": 3, "ell": 1, "a": [0, [1, 2, 3]]}})
    with pytest.raises(ConfigError, match="problem.ell is required"):
        load_config({"problem": {"m": 3}})


def test_invalid_json_reports_line(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{\n  "problem": {"m": 3,\n  "ell": }\n}', encoding="utf-8")
    with pytest.raises(ConfigError, match="line 3"):
        load_config(str(p))
    assert main(["coeffs", "--config", str(p)]) == 2


def test_complex_pairs_parsed():
    cfg = load_config({"problem": {"m": 4, "ell": 1, "a": [[0.1, -0.2], 0.5, [0, 1]]}})
    assert list(cfg["spec"].coeffs) == [0.1 - 0.2j, 0.5, 1j]


# coeffs --------------------------------------------------------------------


def test_coeffs_a0_has_zero_d1(tmp_path):
    rc, text = _run(tmp_path, "coeffs", {"problem": {"m": 3, "ell": 1}})
    assert rc == 0
    rows = _rows(text)
    d1 = [r for r in rows if r["kind"] == "d" and r["j"] == "1"][0]
    assert float(d1["value_re"]) == 0.0 and float(d1["value_im"]) == 0.0


def test_coeffs_k_columns(tmp_path):
    rc, text = _run(tmp_path, "coeffs", {"problem": {"m": 7, "ell": 2}})
    assert rc == 0
    ks = [r for r in _rows(text) if r["kind"] == "K"]
    assert len(ks) > 3
    for r in ks:
        assert abs(float(r["K_closed"]) - float(r["K_quad"])) == pytest.approx(float(r["K_diff"]), abs=1e-15)
        assert float(r["K_diff"]) <= 1e-8


def test_coeffs_eta_imaginary_for_real_a(tmp_path):
    rc, text = _run(tmp_path, "coeffs", {"problem": {"m": 4, "ell": 1, "a": [0.3, -0.2, 0.1]}})
    eta = [r for r in _rows(text) if r["kind"] == "eta"][0]
    assert float(eta["value_re"]) == pytest.approx(0.0, abs=1e-15)
    assert abs(float(eta["value_im"])) > 1e-3


def test_csv_round_trips_full_precision(tmp_path):
    cfg = {"problem": {"m": 5, "ell": 2, "a": [[0.3, 0.1], -0.2, [0.0, 0.7], 0.05]}}
    rc, text = _run(tmp_path, "coeffs", cfg)
    rows = _rows(text)
    from spectra_asym.asym import AsymptoticModel

    model = AsymptoticModel.from_spec(load_config(cfg)["spec"])
    for r in rows:
        if r["kind"] == "d":
            v = model.d[int(r["j"])]
            assert float(r["value_re"]) == v.real and float(r["value_im"]) == v.imag
        if r["kind"] == "e":
            v = model.e[int(r["j"])]
            assert float(r["value_re"]) == v.real and float(r["value_im"]) == v.imag


def test_write_table_exact_and_json():
    x = 0.1 + 1e-17
    vals = [math.pi, 1 / 3, 2.0**-1074, 1.7976931348623157e308, x]
    buf = io.StringIO()
    write_table([{"v": v, "z": complex(v, -v)} for v in vals], "csv", buf)
    got = _rows(buf.getvalue())
    assert [float(r["v"]) for r in got] == vals
    assert [float(r["z_im"]) for r in got] == [-v for v in vals]
    buf = io.StringIO()
    write_table([{"v": v} for v in vals], "json", buf)
    assert [r["v"] for r in json.loads(buf.getvalue())] == vals


def test_json_format(tmp_path):
    rc, text = _run(tmp_path, "coeffs", {"problem": {"m": 3, "ell": 1}}, fmt="json")
    assert rc == 0
    rows = json.loads(text)
    assert {"kind", "j", "k"} <= set(rows[0])


def test_output_deterministic(tmp_path):
    cfg = {"problem": {"m": 6, "ell": 1, "a": [0.1, [0.2, 0.3], 0, -0.4, 0.5]},
           "asym": {"n_min": 0, "n_max": 30}, "shoot": {"enabled": False}}
    _, a = _run(tmp_path, "spectrum", cfg)
    _, b = _run(tmp_path, "spectrum", cfg)
    assert a == b and len(a) > 0


# spectrum / count -----------------------------------------------------------


def test_spectrum_a0_asym_equals_lambda0(tmp_path):
    cfg = {"problem": {"m": 3, "ell": 1}, "asym": {"n_min": 0, "n_max": 12}, "shoot": {"enabled": False}}
    rc, text = _run(tmp_path, "spectrum", cfg)
    assert rc == 0
    for r in _rows(text):
        assert float(r["asym_re"]) == float(r["lambda0"])
        assert float(r["asym_im"]) == 0.0
        assert "shoot_re" not in r


def test_spectrum_shoot_quartic_ground_state(tmp_path):
    cfg = {"problem": {"m": 4, "ell": 2}, "asym": {"n_min": 0, "n_max": 2}}
    rc, text = _run(tmp_path, "spectrum", cfg)
    assert rc == 0
    rows = _rows(text)
    assert float(rows[0]["shoot_re"]) == pytest.approx(1.0603620904841829, rel=1e-8)
    assert [r["shoot_status"] for r in rows] == ["ok"] * 3


def test_spectrum_differences_shrink(tmp_path):
    cfg = {"problem": {"m": 3, "ell": 1, "a": [0.2, -0.1]}, "asym": {"n_min": 4, "n_max": 16}}
    rc, text = _run(tmp_path, "spectrum", cfg, extra=("--jobs", "2"))
    rows = _rows(text)
    gaps = [float(r["rel_asym_shoot"]) for r in rows]
    assert gaps[-1] < gaps[0]
    assert all(float(r["rel_refined_shoot"]) < 1e-3 for r in rows)


def test_spectrum_marks_failed_rows(tmp_path, monkeypatch):
    def boom(spec, n_min, n_max, cfg, jobs=None, failures=None):
        failures.append((n_min, RuntimeError("no root")))
        return []

    monkeypatch.setattr(cli, "scan_spectrum", boom)
    cfg = {"problem": {"m": 3, "ell": 1}, "asym": {"n_min": 2, "n_max": 3}}
    rc, text = _run(tmp_path, "spectrum", cfg)
    assert rc == 0
    rows = _rows(text)
    assert rows[0]["shoot_status"] == "failed: no root"
    assert rows[1]["shoot_status"].startswith("failed")
    assert math.isnan(float(rows[0]["shoot_re"]))


def test_count_columns(tmp_path):
    cfg = {"problem": {"m": 4, "ell": 2}, "asym": {"n_max": 10}}
    rc, text = _run(tmp_path, "count", cfg)
    assert rc == 0
    rows = _rows(text)
    assert int(rows[0]["empirical"]) == 0
    emp = [int(r["empirical"]) for r in rows]
    form = [float(r["formula"]) for r in rows]
    assert emp == sorted(emp) and form == sorted(form)
    assert max(abs(float(r["diff"])) for r in rows) <= 2


def test_count_warns_off_hypothesis(tmp_path, capsys):
    cfg = {"problem": {"m": 3, "ell": 1, "a": [0, [0, 0.5]]}, "asym": {"n_max": 4}}
    rc, _ = _run(tmp_path, "count", cfg)
    assert rc == 0
    assert "hypothesis" in capsys.readouterr().err


# invert --------------------------------------------------------------------


def test_invert_noiseless(tmp_path):
    cfg = {"problem": {"m": 5, "ell": 1, "a": [0, 0.3, -0.2, 0.1]},
           "invert": {"known": {"1": [0, 0]}, "n_min": 20, "n_max": 60}}
    rc, text = _run(tmp_path, "invert", cfg, fmt="json")
    assert rc == 0
    rep = json.loads(text)
    assert rep["cond"] > 1
    errs = {r["j"]: r["abs_err"] for r in rep["rows"]}
    assert errs[2] <= 1e-6 and errs[3] <= 1e-6
    assert rep["rows"][0]["source"] == "known"


def test_invert_missing_known_is_hypothesis_error(tmp_path, capsys):
    cfg = {"problem": {"m": 5, "ell": 1, "a": [0, 0.3, -0.2, 0.1]}, "invert": {}}
    rc, text = _run(tmp_path, "invert", cfg)
    assert rc == 2
    assert "a_j must be supplied for j in [1]" in capsys.readouterr().err


def test_invert_from_file(tmp_path):
    from spectra_asym.asym import AsymptoticModel, asym_eigenvalue
    from spectra_asym.coeffs import ProblemSpec

    spec = ProblemSpec(3, 1, [0.0, 0.4])
    model = AsymptoticModel.from_spec(spec)
    p = tmp_path / "eigs.csv"
    with open(p, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["n", "re", "im"])
        for n in range(10, 50):
            lam = complex(asym_eigenvalue(model, n))
            w.writerow([n, repr(lam.real), repr(lam.imag)])
    cfg = {"problem": {"m": 3, "ell": 1, "a": [0, 0.4]},
           "invert": {"known": {"1": 0}, "source": "file", "eigs_file": str(p)}}
    rc, text = _run(tmp_path, "invert", cfg, fmt="json")
    assert rc == 0
    assert json.loads(text)["rows"][1]["abs_err"] < 1e-8


def test_invert_bad_source(tmp_path):
    cfg = {"problem": {"m": 3, "ell": 1}, "invert": {"known": {"1": 0}, "source": "oracle"}}
    rc, _ = _run(tmp_path, "invert", cfg)
    assert rc == 2


def test_invert_too_little_data_exits_cleanly(tmp_path, capsys):
    cfg = {"problem": {"m": 5, "ell": 1}, "invert": {"known": {"1": 0}, "n_min": 10, "n_max": 11}}
    rc, _ = _run(tmp_path, "invert", cfg)
    assert rc == 2
    assert "not enough" in capsys.readouterr().err


# verify --------------------------------------------------------------------


def test_verify_default_suite_passes(tmp_path):
    cfg = {"problem": {"m": 4, "ell": 2}, "verify": {"n_max": 10}}
    rc, text = _run(tmp_path, "verify", cfg, fmt="json")
    rep = json.loads(text)
    assert rc == 0 and rep["passed"]
    names = [r["check"] for r in rep["rows"]]
    for m in (3, 4, 5, 6):
        assert f"K_closed_vs_quad[m={m}]" in names
    assert "pt_reality_max_rel_imag" in names
    assert "magnitude_strictly_increasing_n>=5" in names
    assert all({"value", "tolerance"} <= set(r) for r in rep["rows"])


def test_verify_real_a_reports_reality_margin(tmp_path):
    cfg = {"problem": {"m": 3, "ell": 1, "a": [0.2, -0.25]},
           "verify": {"m_values": [3], "n_max": 10}}
    rc, text = _run(tmp_path, "verify", cfg, fmt="json")
    rep = json.loads(text)
    assert rc == 0
    row = [r for r in rep["rows"] if r["check"] == "pt_reality_max_rel_imag"][0]
    assert row["value"] <= 1e-8


def test_verify_injected_fault_fails(tmp_path, capsys):
    cfg = {"verify": {"m_values": [6], "inject_fault": True}}
    rc, text = _run(tmp_path, "verify", cfg, fmt="json")
    assert rc == 1
    rep = json.loads(text)
    failed = [r["check"] for r in rep["rows"] if not r["passed"]]
    assert failed and all(f.startswith("recurrence_vs_closed_forms") for f in failed)
    assert "check(s) failed" in capsys.readouterr().err


def test_verify_rejects_unknown_tolerance(tmp_path):
    rc, _ = _run(tmp_path, "verify", {"verify": {"tolerances": {"speed": 1}}})
    assert rc == 2


def test_verify_csv(tmp_path):
    rc, text = _run(tmp_path, "verify", {"verify": {"m_values": [3]}})
    assert rc == 0
    rows = _rows(text)
    assert all(r["passed"] == "true" for r in rows)


# jobs ----------------------------------------------------------------------


def test_jobs_from_env(tmp_path, monkeypatch):
    seen = []

    def fake(spec, n_min, n_max, cfg, jobs=None, failures=None):
        seen.append(jobs)
        return []

    monkeypatch.setattr(cli, "scan_spectrum", fake)
    cfg = {"problem": {"m": 3, "ell": 1}, "asym": {"n_min": 0, "n_max": 1}}
    monkeypatch.setenv("SPECTRA_ASYM_JOBS", "3")
    _run(tmp_path, "spectrum", cfg)
    _run(tmp_path, "spectrum", cfg, extra=("--jobs", "5"))
    assert seen == [3, 5]


def test_stdout_default(tmp_path, capsys):
    assert main(["coeffs", "--config", _write(tmp_path, {"problem": {"m": 3, "ell": 2}})]) == 0
    out = capsys.readouterr().out
    assert out.startswith("kind,j,k,value_re,value_im")


def test_missing_problem_block(tmp_path, capsys):
    assert main(["coeffs", "--config", _write(tmp_path, {})]) == 2
    assert "problem" in capsys.readouterr().err


def test_missing_config_file(tmp_path):
    assert main(["coeffs", "--config", str(tmp_path / "nope.json")]) == 2
