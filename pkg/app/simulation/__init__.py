# Monte-Carlo experiments
from app.simulation.harness import (
    CSV_COLUMNS,
    rows_to_frame,
    run_bias,
    run_consistency,
    run_experiment,
    run_qmse,
)
from app.simulation.experiment_config import ExperimentCatalog, load_experiment_config

__all__ = [
    "CSV_COLUMNS",
    "ExperimentCatalog",
    "load_experiment_config",
    "rows_to_frame",
    "run_bias",
    "run_consistency",
    "run_experiment",
    "run_qmse",
]
