import json
from fractions import Fraction

import pytest

from walklab import cli, experiments
from walklab.config import ConfigError, build_config, parse_config_text
from walklab.embedding import IdentityViolation
from walklab.stats import Check


def test_parse_config():
    vals = parse_config_text("# comment\np = 1/2  # trailing\nn_grid = 1e3, 1e4\n\nseed=7\n")
    assert vals == {"p": Fraction(1, 2), "n_grid": (1000, 10000), "seed": 7}
    for bad in ("bogus = 1", "p 1/2", "n = 1.5", "p = x"):
        with pytest.raises(ConfigError):
            parse_config_text(bad)


def test_overrides_win():
    cfg = build_config("dependence", {"seed": 3, "replicas": 10}, seed=9, replicas=None)
    assert cfg.seed == 9 and cfg.replicas == 10
    with pytest.raises(ConfigError):
        build_config("dependence", {"experiment": "joint-flt"})


def test_validation():
    reg = experiments.list_experiments()
    for kw in ({"p": Fraction(0)}, {"replicas": 0}, {"dt": -1.0}, {"mode": "x"}):
        with pytest.raises(ConfigError):
            build_config("dependence", kw).validate(reg)
    with pytest.raises(ConfigError):
        build_config("nope").validate(reg)


def test_list(capsys):
    assert cli.main(["list"]) == 0
    out = capsys.readouterr().out
    assert "joint-flt" in out and "dependence" in out


def test_registry_contract():
    reg = experiments.list_experiments()
    assert {"vertical-donsker", "scenery-flt", "joint-flt", "embedding-identities",
            "stopping-ratio", "sup-localtime", "dependence", "cn-quadrature",
            "self-similarity", "tightness-diagnostic"} == set(reg)
    assert all(len(e.criteria) >= 1 for e in reg.values())
    covered = sorted({c for e in reg.values() for c in e.criteria})
    assert covered == list(range(1, 14))


def test_run_pass_exit_zero(tmp_path, capsys):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("n_grid = 0, 2, 4\n")
    assert cli.main(["run", "cn-quadrature", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    rep = json.loads((tmp_path / "cn-quadrature" / "report.json").read_text())
    assert rep["summary"]["passed"] is True


def test_usage_errors_exit_two(tmp_path, capsys):
    assert cli.main(["run", "nope", "--out", str(tmp_path)]) == 2
    assert cli.main(["run", "cn-quadrature", "--config", str(tmp_path / "missing")]) == 2
    with pytest.raises(SystemExit) as exc:
        cli.main(["frobnicate"])
    assert exc.value.code == 2
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert cli.main(["run", "cn-quadrature", "--out", str(blocker)]) == 2


def test_statistical_failure_exit_one(tmp_path, monkeypatch, capsys):
    exp = experiments.EXPERIMENTS["cn-quadrature"]

    def failing(run):
        run.add(Check("always fails", 4, 1.0, 0.0, False))

    monkeypatch.setitem(experiments.EXPERIMENTS, "cn-quadrature",
                        experiments.Experiment(exp.name, failing, exp.criteria, exp.description,
                                               exp.defaults))
    assert cli.main(["run", "cn-quadrature", "--out", str(tmp_path)]) == 1


def test_identity_violation_exit_three(tmp_path, monkeypatch, capsys):
    def broken(*a, **k):
        raise IdentityViolation("forced")

    monkeypatch.setattr(experiments, "coupled_simulation", broken)
    assert cli.main(["run", "embedding-identities", "--replicas", "2",
                     "--out", str(tmp_path)]) == 3


def test_plot_command(tmp_path, capsys):
    csv = tmp_path / "a.csv"
    csv.write_text("n,v\n1,2\n2,3\n")
    assert cli.main(["plot", str(csv), "--spec", "x=n;y=v"]) == 0
    assert (tmp_path / "a.svg").exists()
    empty = tmp_path / "e.csv"
    empty.write_text("")
    assert cli.main(["plot", str(empty)]) == 2
    assert not (tmp_path / "e.svg").exists()
