import csv
import io
import json

import pytest

from calfib import cli
from calfib.config import ConfigError, RunConfig, loads_config
from calfib.suites import DEFAULT_RESOLUTIONS, DEFAULT_TOLERANCES

REQUIRED = {"id", "paper_ref", "measured", "expected", "tolerance", "pass"}


@pytest.fixture(scope="module")
def orbifold_report():
    return cli.run_suite("orbifold", RunConfig(suite="orbifold"))


@pytest.fixture(scope="module")
def volume_report():
    return cli.run_suite("volume", RunConfig(suite="volume"))


def _case(report, case_id):
    return next(c for c in report["cases"] if c["id"] == case_id)


def test_orbifold_report(orbifold_report):
    status, report = orbifold_report
    assert status == 0
    assert _case(report, "alpha-fixed-locus-count")["measured"] == 16
    assert report["summary"]["failed"] == 0


def test_case_schema(orbifold_report):
    _, report = orbifold_report
    for c in report["cases"]:
        assert REQUIRED <= set(c)
        module, op = c["paper_ref"].split(".")
        assert module and op
    assert report["header"]["schema_version"] == cli.SCHEMA_VERSION


def test_volume_has_flat_margin_cases(volume_report):
    status, report = volume_report
    ids = [c["id"] for c in report["cases"]]
    assert status == 0
    assert any(i.startswith("margin-K0-k2-r") for i in ids)


def test_determinism():
    cfg = RunConfig(suite="mirror", seed=3)
    a = cli.report_body(cli.run_suite("mirror", cfg)[1])
    b = cli.report_body(cli.run_suite("mirror", cfg)[1])
    assert a == b


def test_parallel_matches_sequential():
    a = cli.report_body(cli.run_suite("mirror", RunConfig(suite="mirror"))[1])
    b = cli.report_body(cli.run_suite("mirror", RunConfig(suite="mirror", parallel=True))[1])
    assert a == b


def test_emit_margins_csv(volume_report):
    text = cli.emit_plot_data("holomorphic-graph-margins", volume_report[1])
    rows = list(csv.reader(io.StringIO(text)))
    assert rows[0] == ["r [ambient units]", "measured [area]", "space_form [area]", "margin [area]"]
    assert len(rows) == 5 and all(float(x) == float(x) for x in rows[1])


def test_emit_scalar_refused(orbifold_report):
    with pytest.raises(cli.ScalarCaseError, match="scalar"):
        cli.emit_plot_data("alpha-fixed-locus-count", orbifold_report[1])


def test_emit_unknown_case(orbifold_report):
    with pytest.raises(KeyError):
        cli.emit_plot_data("no-such-case", orbifold_report[1])


# -- main ------------------------------------------------------------------------

def test_main_writes_report(tmp_path, capsys):
    assert cli.main(["--suite", "mirror", "--out", str(tmp_path), "--quiet"]) == 0
    report = json.loads((tmp_path / "report-mirror.json").read_text())
    assert report["suite"] == "mirror"
    assert "cases passed" in capsys.readouterr().out


def test_main_positivity_csv(tmp_path):
    assert cli.main(["--suite", "metrics", "--out", str(tmp_path), "--quiet",
                     "--csv", "glued-positivity-t0.05"]) == 0
    header = (tmp_path / "glued-positivity-t0.05.csv").read_text().splitlines()[0]
    assert header == "u [chart units],min_eigenvalue [dimensionless]"


def test_main_scalar_csv_exit_2(tmp_path, capsys):
    assert cli.main(["--suite", "mirror", "--out", str(tmp_path), "--quiet",
                     "--csv", "block-family-intertwiner"]) == 2
    assert "scalar" in capsys.readouterr().err


def test_main_unknown_suite(capsys):
    assert cli.main(["--suite", "bogus"]) == 2
    assert "usage" in capsys.readouterr().err


def test_main_bad_config_line(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("suite = mirror\nseed = x\n")
    assert cli.main(["--config", str(cfg)]) == 2
    assert f"{cfg}:2:" in capsys.readouterr().err


def test_main_missing_config(tmp_path, capsys):
    assert cli.main(["--config", str(tmp_path / "absent.cfg")]) == 2
    assert "cannot read config" in capsys.readouterr().err


def test_main_bad_override(capsys):
    assert cli.main(["--suite", "mirror", "--tolerance", "nonsense"]) == 2


def test_failing_tolerance_exit_1(tmp_path):
    # an impossible tolerance makes a measured case fail
    assert cli.main(["--suite", "mirror", "--out", str(tmp_path), "--quiet", "--tolerance", "mirror=-1"]) == 1


def test_config_overrides_in_header(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# comment\nsuite = mirror\nseed = 5\nresolution.fiber_grid = 3\nout = " + str(tmp_path) + "\n")
    assert cli.main(["--config", str(cfg), "--quiet"]) == 0
    header = json.loads((tmp_path / "report-mirror.json").read_text())["header"]
    assert header["seed"] == 5 and header["config"]["resolutions"]["fiber_grid"] == 3


# -- config ------------------------------------------------------------------------

def test_loads_config_keys():
    kw = loads_config("suite=volume\nparallel = yes\ntolerance.mirror = 1e-9\n")
    assert kw["suite"] == "volume" and kw["parallel"] is True and kw["tolerances"] == {"mirror": 1e-9}


@pytest.mark.parametrize("text, line", [("bogus = 1\n", 1), ("\nsuite = nope\n", 2), ("seed 4\n", 1),
                                        ("resolution.nope = 3\n", 1)])
def test_loads_config_errors(text, line):
    with pytest.raises(ConfigError) as exc:
        loads_config(text, "c.cfg")
    assert exc.value.lineno == line and f"c.cfg:{line}:" in str(exc.value)


def test_run_config_validation():
    with pytest.raises(ConfigError):
        RunConfig(suite="nope")
    with pytest.raises(ConfigError):
        RunConfig(tolerances={"nope": 1.0})
    cfg = RunConfig(resolutions={"fibers": 5})
    assert cfg.effective_resolutions()["fibers"] == 5
    assert set(cfg.effective_tolerances()) == set(DEFAULT_TOLERANCES)
    assert set(cfg.effective_resolutions()) == set(DEFAULT_RESOLUTIONS)
