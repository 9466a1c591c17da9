import json
import math
from pathlib import Path

import numpy as np
import pytest

import wavescat.cli as cli
from wavescat.errors import SingularGramError
from wavescat.geometry import scene_to_json
from wavescat.scenes import straight_strip

PI = math.pi


def _write_config(tmp_path, name="config.json", **overrides):
    scene_path = tmp_path / "scene.json"
    scene_to_json(straight_strip(), scene_path)
    doc = {
        "scene": "scene.json",
        "mu": [2.5],
        "R_list": [2.0, 3.0, 4.0, 5.0, 8.0],
        "h": PI / 10,
        "zeta": 1.0,
        "output_dir": str(tmp_path / "out"),
    }
    doc.update(overrides)
    cfg_path = tmp_path / name
    cfg_path.write_text(json.dumps(doc))
    return cfg_path


def test_run_writes_expected_artifacts(tmp_path):
    cfg = _write_config(tmp_path)
    rc = cli.main(["run", "--config", str(cfg)])
    assert rc == 0
    out = tmp_path / "out"
    results = (out / "results.csv").read_text().splitlines()
    assert results[0] == "mu,R,h,zeta,l,j,re_S,im_S,J_l,unitarity_defect,cond_E,min_norm_l"
    # 5 radii x M^2 rows with M = 2
    assert len(results) == 1 + 5 * 4
    assert (out / "convergence.csv").exists()
    assert (out / "summary.json").exists()
    assert (out / "plots.gp").exists()
    assert (out / "err_vs_R.png").exists()
    assert (out / "S_vs_mu.png").exists()
    summary = json.loads((out / "summary.json").read_text())
    assert summary["per_mu"]["2.5"]["M"] == 2


def test_rerun_byte_identical_and_worker_independent(tmp_path):
    cfg1 = _write_config(tmp_path, output_dir=str(tmp_path / "o1"))
    cfg2 = _write_config(tmp_path, output_dir=str(tmp_path / "o2"), workers=2)
    assert cli.main(["run", "--config", str(cfg1)]) == 0
    assert cli.main(["run", "--config", str(cfg2)]) == 0
    for name in ("results.csv", "convergence.csv", "summary.json", "plots.gp"):
        b1 = (tmp_path / "o1" / name).read_bytes()
        b2 = (tmp_path / "o2" / name).read_bytes()
        if name == "summary.json":
            # worker count is not part of the summary
            assert b1 == b2
        else:
            assert b1 == b2, name


def test_malformed_json_exits_2_with_position(tmp_path, capsys):
    cfg = tmp_path / "bad.json"
    cfg.write_text('{"scene": "x.json",\n  "mu": [2.5,]\n}')
    rc = cli.main(["run", "--config", str(cfg)])
    assert rc == 2
    err = capsys.readouterr().err
    assert "line" in err and "column" in err


def test_missing_scene_exits_2(tmp_path):
    cfg = _write_config(tmp_path)
    (tmp_path / "scene.json").unlink()
    assert cli.main(["run", "--config", str(cfg)]) == 2


def test_mu_grid_crossing_threshold_exits_3(tmp_path, capsys):
    cfg = _write_config(tmp_path, mu={"start": 3.5, "stop": 4.5, "count": 5})
    rc = cli.main(["run", "--config", str(cfg)])
    assert rc == 3
    assert "nu_2" in capsys.readouterr().err
    assert not (tmp_path / "out" / "results.csv").exists()  # validated before work


def test_validate_reports_modes_and_gamma(tmp_path, capsys):
    cfg = _write_config(tmp_path, mu=[2.5])
    assert cli.main(["validate", "--config", str(cfg)]) == 0
    out = capsys.readouterr().out
    assert "M=2" in out
    assert f"{math.sqrt(1.5):.17g}"[:8] in out
    # a grid inside (4, 9) sees two propagating modes per end
    cfg5 = _write_config(tmp_path, mu=[5.0])
    assert cli.main(["validate", "--config", str(cfg5)]) == 0
    assert "M=4" in capsys.readouterr().out


def test_interval_spanning_threshold_rejected(tmp_path):
    # the whole [mu_min, mu_max] interval must be free of cut-off values,
    # even when no grid point sits on one
    cfg = _write_config(tmp_path, mu=[2.5, 5.0])
    assert cli.main(["validate", "--config", str(cfg)]) == 3


def test_numerical_failure_exits_4_with_partial_csv(tmp_path, capsys, monkeypatch):
    calls = {"n": 0}
    import wavescat.scattering as sc

    real = sc.compute_scattering

    def flaky(scene, mu, R, h, zeta=1.0, **kw):
        calls["n"] += 1
        if calls["n"] == 3:
            raise SingularGramError("synthetic failure")
        return real(scene, mu, R, h, zeta, **kw)

    monkeypatch.setattr(cli, "compute_scattering", flaky)
    cfg = _write_config(tmp_path)
    rc = cli.main(["run", "--config", str(cfg)])
    assert rc == 4
    err = capsys.readouterr().err
    assert "mu=" in err and "R=" in err
    lines = (tmp_path / "out" / "results.csv").read_text().splitlines()
    assert lines[-1] == "# INCOMPLETE"
    assert len(lines) == 1 + 2 * 4 + 1  # two completed radii before the fault


def test_workers_flag_overrides_config(tmp_path):
    cfg = _write_config(tmp_path, workers=1)
    rc = cli.main(["run", "--config", str(cfg), "--workers", "2",
                   "--output", str(tmp_path / "alt")])
    assert rc == 0
    assert (tmp_path / "alt" / "results.csv").exists()


def test_shipped_configs_validate():
    root = Path(__file__).resolve().parents[1]
    for name in ("strip_sweep.json", "obstacle_sweep.json"):
        rc = cli.main(["validate", "--config", str(root / "configs" / name)])
        assert rc == 0
