import json

import numpy as np
import pytest

import powershave as ps


@pytest.fixture(scope="module")
def trace():
    cfg = ps.SynthConfig()
    cfg.duration_s = 30.0
    return ps.synthesize_trace(cfg)


def test_synth_shape(trace):
    assert len(trace) == 6000
    assert trace.dt_s == 0.005
    assert isinstance(trace.samples, np.ndarray)
    assert trace.samples.max() <= trace.rack_max_w


def test_config_round_trip():
    cfg = ps.SynthConfig()
    back = ps.SynthConfig.from_dict(cfg.to_dict())
    assert back.to_dict() == cfg.to_dict()


def test_detect_matches_manual_mask():
    t = ps.PowerTrace(np.array([0, 5, 5, 0, 7, 0], dtype=float), 0.01, 10.0)
    spikes = ps.detect_spikes(t, threshold_w=4.0)
    assert [(s.start_index, s.length) for s in spikes] == [(1, 2), (4, 1)]
    assert spikes[0].energy_above_j == pytest.approx(0.02)


def test_threshold_arguments_exclusive(trace):
    with pytest.raises(ValueError):
        ps.detect_spikes(trace, threshold_w=1.0, threshold_frac=0.5)


def test_stats(trace):
    stats = ps.spike_statistics(ps.detect_spikes(trace, threshold_frac=0.7))
    assert stats["count"] > 0
    assert 0.0 <= stats["frac_leq_100ms"] <= 1.0


def test_simulate_series_and_balance(trace):
    r = ps.simulate_shaving(trace, "battery")
    series = r.series()
    assert set(series) >= {"p_grid", "p_dummy", "stored_j"}
    assert series["p_grid"].shape == (len(trace),)
    assert r.max_balance_residual_w < 1e-6 * trace.rack_max_w
    assert r.total_unserved_energy_j == 0.0


def test_ideal_never_unserved(trace):
    assert ps.simulate_shaving(trace, "ideal").total_unserved_energy_j == 0.0


def test_custom_device(trace):
    spec = ps.DeviceSpec.from_dict(ps.capacitor_preset().to_dict())
    r = ps.simulate_shaving(trace, ("mycap", spec))
    assert r.strategy == "mycap"


def test_unknown_device(trace):
    with pytest.raises(ValueError, match="capacitor"):
        ps.simulate_shaving(trace, "flywheel")


def test_sweep_and_compare(trace):
    g = ps.sweep_gpus_saved(trace)
    assert len(g.values) == 10 and len(g.values[0]) == 11
    assert json.loads(g.export("json"))["values"] == g.values
    rows = ps.compare_strategies(trace, ["capacitor", "ideal"])
    assert [r.strategy_name for r in rows] == ["capacitor", "ideal"]
    assert rows[1].computational_gain_pct >= rows[0].computational_gain_pct


def test_missing_file_is_oserror():
    with pytest.raises(OSError):
        ps.load_trace("/nonexistent/trace.csv")


def test_run_cli():
    code, out, err = ps.run_cli(["--help"])
    assert code == 0
