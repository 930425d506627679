"""Network, energy and learning-round model of wirelessly powered federated learning."""

from .channel import (
    ChannelConfig,
    DeviceRanges,
    channel_vectors,
    effective_gain,
    sample_instance,
)
from .energy import energy_breakdown, local_compute_time
from .errors import InfeasibleInstanceError, ModelError, ParameterDomainError
from .feasibility import ConstraintSlack, FeasibilityReport, check_feasibility
from .learning import (
    derive_learning_constants,
    global_rounds,
    local_rounds,
    round_counts,
    total_completion_time,
)
from .models import (
    AccessMode,
    Allocation,
    DeviceParams,
    EnergyBreakdown,
    LearningParams,
    ProblemInstance,
    RoundCounts,
    SystemParams,
)
from .rates import achievable_rate, achievable_rates, fdma_rate, noma_interference, noma_rate
from .serialization import instance_from_json, instance_to_json, load_instance
from .units import dbm_to_watts, watts_to_dbm

__all__ = [
    "AccessMode",
    "Allocation",
    "ChannelConfig",
    "ConstraintSlack",
    "DeviceParams",
    "DeviceRanges",
    "EnergyBreakdown",
    "FeasibilityReport",
    "InfeasibleInstanceError",
    "LearningParams",
    "ModelError",
    "ParameterDomainError",
    "ProblemInstance",
    "RoundCounts",
    "SystemParams",
    "achievable_rate",
    "achievable_rates",
    "channel_vectors",
    "check_feasibility",
    "dbm_to_watts",
    "derive_learning_constants",
    "effective_gain",
    "energy_breakdown",
    "fdma_rate",
    "global_rounds",
    "instance_from_json",
    "instance_to_json",
    "load_instance",
    "local_compute_time",
    "local_rounds",
    "noma_interference",
    "noma_rate",
    "round_counts",
    "sample_instance",
    "total_completion_time",
    "watts_to_dbm",
]
