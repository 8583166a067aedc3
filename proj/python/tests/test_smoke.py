import json
import math
from pathlib import Path

import numpy as np
import pytest

import mzgrid

ROOT = Path(__file__).resolve().parents[2]


def test_energy_and_rhs_at_initial_state():
    u0 = mzgrid.default_initial_state()
    assert u0 == pytest.approx([0.0, 0.0, -0.16, -0.3, 0.8])
    r = mzgrid.rhs(u0)
    assert len(r) == 5
    assert r[2] == 0.0
    assert math.isfinite(mzgrid.energy(u0))


def test_full_run_dissipates_energy():
    traj = mzgrid.simulate_full(mzgrid.default_initial_state(), dt=5e-5, t_end=0.5, stride=10)
    assert traj.labels == ["omega1", "omega2", "alpha2", "alpha3", "v3"]
    vals = traj.values
    assert vals.shape == (len(traj), 5)
    assert traj.times[-1] == pytest.approx(0.5)
    phi = [mzgrid.energy(list(row)) for row in vals]
    assert np.all(np.diff(phi) <= 1e-6)


def test_counts():
    assert mzgrid.basis_size(3, 5) == 56
    assert mzgrid.sparse_grid_size(1, 7) == 681


def test_heat_bath_constants_and_reduced_model():
    assert mzgrid.heat_bath_kernel(0.0) == pytest.approx(0.697382, abs=1e-6)
    assert mzgrid.heat_bath_noise(0.0) == pytest.approx(2.653571, abs=1e-6)
    full = mzgrid.simulate_heat_bath(dt=1e-3, t_end=3.0)
    red = mzgrid.simulate_reduced_particle(dt=1e-3, t_end=3.0)
    none = mzgrid.simulate_reduced_particle(dt=1e-3, t_end=3.0, memory="none")
    err = np.max(np.abs(full.column("x") - red.column("x")))
    err_none = np.max(np.abs(full.column("x") - none.column("x")))
    assert err < 0.05
    assert err_none > 10 * err


def test_config_errors_surface_as_value_errors(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("")
    with pytest.raises(ValueError, match="missing sections"):
        mzgrid.config_hash(str(bad))
    assert len(mzgrid.config_hash(str(ROOT / "configs" / "3bus_default.json"))) == 16


def test_heat_bath_pipeline(tmp_path):
    cfg = {
        "model": {"type": "heat_bath"},
        "integration": {"dt": 1e-3, "t_end": 2.0, "memory_sweep": [1], "output_stride": 10},
        "paths": {"output_dir": str(tmp_path / "out")},
    }
    path = tmp_path / "hb.json"
    path.write_text(json.dumps(cfg))
    summary = json.loads(mzgrid.run_pipeline(str(path)))
    assert summary["model"] == "heat_bath"
    assert [r["label"] for r in summary["runs"]] == ["infinite", "none", "tmem1"]
    traj = mzgrid.read_trajectory_csv(str(tmp_path / "out" / "heat_bath_full.csv"))
    assert traj.labels == ["x", "p"]
