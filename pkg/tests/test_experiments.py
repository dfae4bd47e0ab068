import json
from pathlib import Path

import pytest

from walklab.config import build_config
from walklab.experiments import list_experiments, run_experiment

GOLDEN = Path(__file__).parent / "golden" / "stopping-ratio.json"


def stable(report: dict) -> dict:
    report = dict(report)
    report.pop("timings")
    report["config"] = {k: v for k, v in report["config"].items() if k != "out"}
    return report


def test_report_golden(tmp_path):
    cfg = build_config("stopping-ratio", {"n": 1000, "seed": 1}, out=str(tmp_path))
    run_experiment(cfg)
    got = stable(json.loads((tmp_path / "stopping-ratio" / "report.json").read_text()))
    assert got == json.loads(GOLDEN.read_text())


def test_report_schema(tmp_path):
    cfg = build_config("cn-quadrature", out=str(tmp_path))
    report = run_experiment(cfg)
    d = report.to_dict()
    assert set(d) == {"experiment", "config", "criteria", "diagnostics", "summary", "outputs",
                      "timings"}
    assert [c["criterion"] for c in d["criteria"]] == list(list_experiments()["cn-quadrature"].criteria)
    for entry in d["criteria"]:
        for check in entry["checks"]:
            for key in ("name", "estimate", "stderr", "reference", "decision", "n_samples",
                        "seed", "statistic", "threshold", "tolerance"):
                assert key in check
    for name in d["outputs"]:
        assert (tmp_path / "cn-quadrature" / name).exists()


@pytest.mark.parametrize("name", sorted(list_experiments()))
def test_each_criterion_exactly_once(tmp_path, name):
    small = {"replicas": 200, "n": 200, "n_grid": (0, 2, 4) if name == "cn-quadrature"
             else (100, 200, 400), "dt": 1e-3}
    if name == "stopping-ratio":
        small["replicas"] = 1
    report = run_experiment(build_config(name, small, out=str(tmp_path)))
    d = report.to_dict()
    ids = [c["criterion"] for c in d["criteria"]]
    assert sorted(ids) == sorted(set(ids)) == sorted(list_experiments()[name].criteria)
    assert all(entry["checks"] for entry in d["criteria"])
