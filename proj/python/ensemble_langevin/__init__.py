"""Ensemble Langevin Monte Carlo samplers and diagnostics."""

import json as _json

from . import _core
from ._core import (
    SamplerConfig,
    Target,
    alpha_d,
    blowup_probe,
    c_d,
    direct_samples,
    gradient_call_ratio,
    make_target,
    neighbor_scarcity,
    proposal_density,
    run_sampler,
    sliced_w1,
    sphere_surface,
    w1_1d,
)

__version__ = _core.__version__


def calibrate(**inputs):
    """Suggested parameters for a target accuracy; keyword names follow the calibrator JSON."""
    return _json.loads(_core.calibrate_json(_json.dumps(inputs)))


def run_experiment(config, out_dir, threads=1):
    """Run a config (dict or JSON text) and write its output files to out_dir."""
    text = config if isinstance(config, str) else _json.dumps(config)
    return _core.run_experiment(text, str(out_dir), threads)


__all__ = [
    "SamplerConfig",
    "Target",
    "alpha_d",
    "blowup_probe",
    "c_d",
    "calibrate",
    "direct_samples",
    "gradient_call_ratio",
    "make_target",
    "neighbor_scarcity",
    "proposal_density",
    "run_experiment",
    "run_sampler",
    "sliced_w1",
    "sphere_surface",
    "w1_1d",
]
