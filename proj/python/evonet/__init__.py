"""Self-evolving MLP for online stream learning."""

from ._evonet import (
    AdaptiveMemory,
    BatchMetrics,
    DriftDetector,
    DriftState,
    Learner,
    LearnerConfig,
    Mode,
    Network,
    chi_square_thresholds,
    expected_output,
    generate_regression,
    generate_sea,
    hoeffding_bound,
    learning_rates,
    run_experiment,
)

__all__ = [
    "AdaptiveMemory",
    "BatchMetrics",
    "DriftDetector",
    "DriftState",
    "Learner",
    "LearnerConfig",
    "Mode",
    "Network",
    "chi_square_thresholds",
    "expected_output",
    "generate_regression",
    "generate_sea",
    "hoeffding_bound",
    "learning_rates",
    "run_experiment",
]
