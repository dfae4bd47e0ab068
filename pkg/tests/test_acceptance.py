"""Acceptance criteria 1-14, each at its stated tolerance and scale.

Every experiment runs once at its default (full) scale with the default
seed; the per-criterion PASS/FAIL lines are printed in the terminal summary.
"""
import filecmp

import pytest

from conftest import ACCEPTANCE_LINES
from walklab.config import build_config, load_config
from walklab.experiments import list_experiments, run_experiment

OWNERS = {
    1: ["embedding-identities"], 2: ["embedding-identities"], 3: ["stopping-ratio"],
    4: ["cn-quadrature"], 5: ["dependence"], 6: ["scenery-flt"], 7: ["joint-flt"],
    8: ["vertical-donsker", "scenery-flt", "joint-flt"], 9: ["dependence"],
    10: ["sup-localtime"], 11: ["dependence"], 12: ["self-similarity"],
    13: ["tightness-diagnostic"],
}


@pytest.fixture(scope="module")
def reports(tmp_path_factory):
    out = tmp_path_factory.mktemp("acceptance")
    cache = {}

    def get(name):
        if name not in cache:
            cache[name] = run_experiment(build_config(name, out=str(out)))
        return cache[name]

    return get


def _fmt(c):
    if c.statistic is not None and c.threshold is not None:
        return f"{c.name}: D={c.estimate:.4g} crit={c.reference:.4g} p={c.statistic:.3g}"
    return f"{c.name}: {c.estimate:.6g} vs {c.reference:.6g} ({c.tolerance})"


@pytest.mark.parametrize("criterion", sorted(OWNERS))
def test_criterion(reports, criterion):
    checks = [c for name in OWNERS[criterion] for c in reports(name).checks
              if c.criterion == criterion]
    assert checks, f"no checks recorded for criterion {criterion}"
    ok = all(c.passed for c in checks)
    ACCEPTANCE_LINES.append(f"{'PASS' if ok else 'FAIL'} criterion {criterion}: "
                            + "; ".join(_fmt(c) for c in checks))
    failed = [_fmt(c) for c in checks if not c.passed]
    assert not failed, failed


SMALL = {
    "vertical-donsker": "n = 1000\nn_grid = 100, 1000, 3000\nreplicas = 300\n",
    "scenery-flt": "n = 1000\nn_grid = 100, 1000, 3000\nreplicas = 300\ndt = 1e-3\n",
    "joint-flt": "n = 1000\nreplicas = 300\ndt = 1e-3\n",
    "embedding-identities": "n = 200\nn_grid = 100, 1000\nreplicas = 5\n",
    "stopping-ratio": "n = 5000\n",
    "sup-localtime": "n_grid = 100, 1000, 3000\nreplicas = 100\n",
    "dependence": "replicas = 300\ndt = 1e-3\n",
    "cn-quadrature": "n_grid = 0, 2, 4\n",
    "self-similarity": "replicas = 300\ndt = 1e-3\n",
    "tightness-diagnostic": "n_grid = 100, 316, 1000\nreplicas = 100\n",
}


def test_criterion_14_determinism(tmp_path):
    assert set(SMALL) == set(list_experiments())
    mismatches = []
    compared = 0
    for name, text in SMALL.items():
        cfg_file = tmp_path / f"{name}.cfg"
        cfg_file.write_text(f"# reduced scale\nseed = 1\n{text}", encoding="utf-8")
        dirs = []
        for k in range(2):
            out = tmp_path / f"run{k}"
            run_experiment(build_config(name, load_config(cfg_file), out=str(out)))
            dirs.append(out / name)
        csvs = sorted(p.name for p in dirs[0].glob("*.csv"))
        assert csvs, name
        _, bad, errors = filecmp.cmpfiles(dirs[0], dirs[1], csvs, shallow=False)
        mismatches += [f"{name}/{f}" for f in bad + errors]
        compared += len(csvs)
    ok = not mismatches
    ACCEPTANCE_LINES.append(f"{'PASS' if ok else 'FAIL'} criterion 14: {compared} CSV files "
                            f"byte-identical across repeated runs of all "
                            f"{len(SMALL)} experiments" + (f"; differ: {mismatches}" if mismatches else ""))
    assert ok, mismatches
