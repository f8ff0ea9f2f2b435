"""Python interface to the groklab core library."""

import json as _json

from ._groklab import (
    ConfigError,
    InvalidArgument,
    NumericError,
    TaskSpec,
    classify_phase,
    critical_fraction_mc,
    eff_grad,
    eff_loss,
    flow,
    full_permissible_set,
    hessian,
    ideal_closure,
    nonabelian_closure,
    nullity,
    permissible_set,
    predicted_acc,
    realized_set,
    rqi,
    split,
    version,
)
from . import _groklab

__all__ = [
    "ConfigError",
    "InvalidArgument",
    "NumericError",
    "TaskSpec",
    "classify_phase",
    "critical_fraction_mc",
    "eff_grad",
    "eff_loss",
    "flow",
    "full_permissible_set",
    "hessian",
    "ideal_closure",
    "nonabelian_closure",
    "nullity",
    "permissible_set",
    "predicted_acc",
    "realized_set",
    "rqi",
    "run",
    "split",
    "train",
    "version",
]


def train(config):
    """Train one run from a config dict (dotted or nested keys; "seed" required)."""
    return _json.loads(_groklab.train_json(_json.dumps(config)))


def run(command, config, out, inputs=(), resume=False, pca=False):
    """Run a CLI command in-process and write its outputs under `out`."""
    return _groklab.run_command(command, _json.dumps(config), str(out), [str(p) for p in inputs], resume, pca)
