"""Rack power trace analysis and power-shaving simulation."""

from ._core import (
    ComparisonRow,
    DeviceSpec,
    PowershaveError,
    PowerTrace,
    ShavingResult,
    SimConfig,
    Spike,
    SweepGrid,
    SynthConfig,
    battery_preset,
    capacitor_preset,
    compare_strategies,
    computational_gain,
    default_energy_bins,
    detect_spikes,
    gpus_saved,
    load_trace,
    resample,
    run_cli,
    simulate_shaving,
    spike_statistics,
    supercap_preset,
    sweep_gpus_saved,
    synthesize_trace,
    write_trace,
)

__version__ = "0.1.0"
