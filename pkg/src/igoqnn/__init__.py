"""Inductive Grover-oracular quantum neural network: dense statevector
simulator, parameterized circuits with OpenQASM 2.0 round-trip, Grover
search, the oracular network builder, and a classical training loop."""

__version__ = "0.1.0"

from .statevector import (
    CapacityError,
    StateVector,
    fidelity,
    new_zero_state,
)
from .circuit import (
    Circuit,
    GateOp,
    ParamExpr,
    Parameter,
    UnboundParameterError,
)
from .qasm import QasmParseError, export_qasm, read_qasm
from .grover import (
    MarkedSet,
    analytic_success_probability,
    diffuser,
    grover_search,
    optimal_iterations,
    phase_oracle,
    success_probability,
    uniform_superposition,
)
from .network import (
    FlagMode,
    IGOQNN,
    NetworkShape,
    RegisterLayout,
    SynapseMode,
    build_network,
    grover_repetitions,
    propagate,
    qubit_budget,
)
from .training import (
    LossConfig,
    OptimizerConfig,
    SPSAState,
    TrainReport,
    TrainingExample,
    grad_central_fd,
    grad_param_shift,
    loss,
    predict_hits,
    spsa_step,
    train,
)
from .estimator import IGOQNNClassifier
from .harness import (
    ConfigError,
    ExperimentConfig,
    GeneratorSpec,
    evaluate,
    gen_dataset,
    grover_demo,
    parse_config,
    read_dataset,
    run_experiment,
    write_dataset,
)

__all__ = [
    "__version__",
    "CapacityError", "StateVector", "fidelity", "new_zero_state",
    "Circuit", "GateOp", "ParamExpr", "Parameter", "UnboundParameterError",
    "QasmParseError", "export_qasm", "read_qasm",
    "MarkedSet", "analytic_success_probability", "diffuser", "grover_search",
    "optimal_iterations", "phase_oracle", "success_probability",
    "uniform_superposition",
    "FlagMode", "IGOQNN", "NetworkShape", "RegisterLayout", "SynapseMode",
    "build_network", "grover_repetitions", "propagate", "qubit_budget",
    "LossConfig", "OptimizerConfig", "SPSAState", "TrainReport",
    "TrainingExample", "grad_central_fd", "grad_param_shift", "loss",
    "predict_hits", "spsa_step", "train",
    "IGOQNNClassifier",
    "ConfigError", "ExperimentConfig", "GeneratorSpec", "evaluate",
    "gen_dataset", "grover_demo", "parse_config", "read_dataset",
    "run_experiment", "write_dataset",
]
