"""Learning-round model: derived constants, round counts and completion time."""

from __future__ import annotations

import math

from .errors import ParameterDomainError
from .models import Allocation, LearningParams, RoundCounts


def derive_learning_constants(
    L: float,
    gamma: float,
    delta: float,
    xi_hyper: float,
    eps0: float,
) -> LearningParams:
    """Validate the learning constants and derive ``a`` and ``nu``."""

    return LearningParams(L=L, gamma=gamma, delta=delta, xi_hyper=xi_hyper, eps0=eps0)


def local_rounds(learning: LearningParams, eta: float) -> float:
    if not 0.0 < eta <= 1.0:
        raise ParameterDomainError("0<eta<=1", f"local accuracy must lie in (0, 1], got {eta}")
    return learning.nu * math.log2(1.0 / eta)


def global_rounds(learning: LearningParams, eta: float) -> float:
    if not 0.0 < eta <= 1.0:
        raise ParameterDomainError("0<eta<=1", f"local accuracy must lie in (0, 1], got {eta}")
    if learning.a == 0.0:
        return 0.0
    if eta >= 1.0:
        return math.inf
    return learning.a / (1.0 - eta)


def round_counts(learning: LearningParams, eta: float) -> RoundCounts:
    """Return real-valued (local, global) rounds; ``global_`` is ``inf`` when unbounded."""

    return RoundCounts(local=local_rounds(learning, eta), global_=global_rounds(learning, eta))


def total_completion_time(alloc: Allocation, learning: LearningParams) -> float:
    """Global rounds times the per-round duration ``tau_h + tau_s + tau_l + tau_c``."""

    glo = global_rounds(learning, alloc.eta)
    if math.isinf(glo):
        return math.inf if alloc.tau_sum > 0 else 0.0
    return glo * alloc.tau_sum
