import json

import pytest

from critflow.cli import (
    EXIT_CONCENTRATED,
    EXIT_CONFIG,
    EXIT_OK,
    ScenarioConfig,
    bundled_scenarios,
    load_scenario,
    main,
    parse_K,
    run_scenario,
)
from critflow.errors import ConfigurationError


@pytest.fixture(scope="module")
def scenario_runs(tmp_path_factory):
    out = {}
    for name in ("bn-ball-supercritical-mu", "bn-ball-subcritical-mu", "example1-theorem12"):
        d = tmp_path_factory.mktemp(name)
        code, report = run_scenario(load_scenario(name), d)
        out[name] = (code, report, d)
    return out


def test_bundled_scenarios_listed():
    assert set(bundled_scenarios()) >= {"bn-ball-supercritical-mu", "bn-ball-subcritical-mu", "example1-theorem12"}


@pytest.mark.parametrize(
    "name,code,terminal",
    [
        ("bn-ball-supercritical-mu", EXIT_OK, "ps-converged"),
        ("bn-ball-subcritical-mu", EXIT_CONCENTRATED, "concentrated"),
        ("example1-theorem12", EXIT_OK, "ps-converged"),
    ],
)
def test_scenario_exit_codes(scenario_runs, name, code, terminal):
    got, report, d = scenario_runs[name]
    assert got == code == report["exit_code"]
    assert report["flow"]["terminal"] == terminal
    assert (d / "report.json").exists()
    for run in report["runs"]:
        assert (d / run["trace"]).exists()


def test_verified_report_fields(scenario_runs):
    _, report, d = scenario_runs["bn-ball-supercritical-mu"]
    assert report["solution"]["verified"] is True
    assert report["lions"]["status"] == "holds"
    assert (d / "solution.field").exists()
    prov = report["provenance"]
    assert len(prov["config_hash"]) == 64 and prov["seed"] == 42
    assert prov["resolution"]["mesh"] == "radial 3 1.0 2000"


def test_subcritical_report(scenario_runs):
    _, report, d = scenario_runs["bn-ball-subcritical-mu"]
    assert report["lions"]["status"] == "fails"
    assert report["solution"] is None
    assert report["ue_sweep"]["below_threshold"] is False
    assert (d / "ue_sweep.csv").read_text().startswith("eps,quotient\n")


def test_mu1_branch_report(scenario_runs):
    _, report, _ = scenario_runs["example1-theorem12"]
    t = report["theorem12"]
    assert t["applicable"] is True and t["integral"] < 0
    assert t["gap"] == pytest.approx(0.75, rel=1e-3)
    assert t["coercivity_min"] > 0


def test_report_roundtrip_bit_exact(scenario_runs):
    _, report, d = scenario_runs["bn-ball-supercritical-mu"]
    parsed = json.loads((d / "report.json").read_text())

    def walk(a, b):
        if isinstance(a, dict):
            for k in a:
                walk(a[k], b[k])
        elif isinstance(a, (list, tuple)):
            for x, y in zip(a, b):
                walk(x, y)
        elif isinstance(a, float):
            assert a == b or (a != a and b is None)
        else:
            assert a == b

    walk(report, parsed)


def test_determinism(tmp_path):
    cfg = load_scenario("bn-ball-supercritical-mu")
    run_scenario(cfg, tmp_path / "a")
    run_scenario(cfg, tmp_path / "b", jobs=2)
    for f in sorted((tmp_path / "a").iterdir()):
        assert f.read_bytes() == (tmp_path / "b" / f.name).read_bytes(), f.name


def test_seed_env_override(tmp_path, monkeypatch):
    monkeypatch.setenv("CRITFLOW_SEED", "7")
    cfg = ScenarioConfig(domain={"type": "ball", "n": 3, "radius": 1.0, "nodes": 300}, mu_fraction=0.5)
    _, report = run_scenario(cfg, tmp_path)
    assert report["provenance"]["seed"] == 7
    _, report = run_scenario(cfg, tmp_path, seed=11)
    assert report["provenance"]["seed"] == 11


def test_mu1_without_flag_is_config_error(tmp_path, capsys):
    p = tmp_path / "c.json"
    p.write_text('{\n  "name": "x",\n  "domain": {"type": "ball", "nodes": 200},\n  "mu_fraction": 1.0\n}\n')
    assert main(["scenario", str(p), "--out", str(tmp_path / "o")]) == EXIT_CONFIG
    assert "line 4" in capsys.readouterr().err


@pytest.mark.parametrize(
    "text,needle",
    [
        ('{\n  "mu_fraction": 0.5,\n  "bogus": 1\n}', "line 3"),
        ('{\n  "mu_fraction": 0.5,\n  "domain": {"type": "torus"}\n}', "line 3"),
        ('{\n  "mu_fraction": 0.5,\n  "flow": {"tol": -1}\n}', "line 3"),
        ('{\n  "mu_fraction": 0.5,\n', "line 3"),
        ('{\n  "mu": 1.0,\n  "mu_fraction": 0.5\n}', "exactly one"),
    ],
)
def test_config_errors_are_line_referenced(tmp_path, capsys, text, needle):
    p = tmp_path / "c.json"
    p.write_text(text)
    assert main(["scenario", str(p)]) == EXIT_CONFIG
    assert needle in capsys.readouterr().err


def test_unknown_scenario(capsys):
    assert main(["scenario", "no-such-scenario"]) == EXIT_CONFIG


def test_parse_K():
    assert parse_K("const:2.5") == {"type": "const", "value": 2.5}
    k = parse_K("example1:0.5,0.5,0.5,0.4,0.1,1,2")
    assert k["y0"] == [0.5, 0.5, 0.5] and k["d0"] == 0.4 and k["beta"] == 2
    with pytest.raises(ConfigurationError):
        parse_K("gauss:1")
    with pytest.raises(ConfigurationError):
        parse_K("example1:1,2")


def test_eigen_command(capsys):
    assert main(["eigen", "--nodes", "400", "--count", "3"]) == EXIT_OK
    out = json.loads(capsys.readouterr().out)
    assert set(out) >= {"mu", "gap", "residuals", "spectrum"}
    assert len(out["mu"]) == 3 and out["gap"] == pytest.approx(0.75, rel=1e-2)


def test_constants_command(capsys):
    assert main(["constants", "--nodes", "300", "--L-est", "4.6"]) == EXIT_OK
    out = json.loads(capsys.readouterr().out)
    assert out["lions_status"] == "holds" and out["L_est"] == 4.6


def test_flow_dump_then_verify(tmp_path, capsys):
    trace, field = tmp_path / "t.csv", tmp_path / "u.field"
    code = main(["flow", "--nodes", "800", "--mu-fraction", "0.5", "--trace", str(trace), "--dump", str(field)])
    assert code == EXIT_OK
    flow = json.loads(capsys.readouterr().out)
    assert flow["terminal"] == "ps-converged" and flow["dump"] == "solution"
    assert trace.read_text().startswith("iter,s,J,grad_norm,max_u,half_energy_radius,in_M1\n")
    assert main(["verify", str(field), "--mu-fraction", "0.5"]) == EXIT_OK
    assert json.loads(capsys.readouterr().out)["verified"] is True


def test_check_lions_command(tmp_path, capsys):
    sweep = tmp_path / "sweep.csv"
    assert main(["check-lions", "--nodes", "1000", "--mu", "2.714", "--ue-sweep", str(sweep)]) == EXIT_OK
    out = json.loads(capsys.readouterr().out)
    assert out["status"] == "holds" and out["ue_sweep_below_threshold"] is True
    assert len(sweep.read_text().splitlines()) == 5


def test_solve_command_box(capsys):
    code = main(["solve", "--domain", "box", "--nodes", "20", "--mu-fraction", "0.5", "--max-iter", "2000"])
    report = json.loads(capsys.readouterr().out)
    assert code == report["exit_code"]
    assert report["provenance"]["resolution"]["mesh"] == "box 1.0 1.0 1.0 20 20 20"


def test_flow_rejects_bad_mesh(capsys):
    assert main(["flow", "--nodes", "4"]) == EXIT_CONFIG
