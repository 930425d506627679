"""Exceptions raised while building or solving the convex subproblems."""

from __future__ import annotations

from typing import Optional


class OptimizationError(RuntimeError):
    """Base class for optimization failures."""


class ProgramError(OptimizationError):
    """Raised when a program is not a valid composition of the supported atoms."""


class AnchorInfeasibleError(OptimizationError):
    """Raised when an anchor violates the energy budget needed by the accuracy step."""

    def __init__(self, message: str, device: Optional[int] = None) -> None:
        super().__init__(message)
        self.device = device


class SubproblemError(OptimizationError):
    """Raised when a subproblem solve fails; carries the iteration context."""

    def __init__(self, message: str, *, iteration: int, phase: str, status: str) -> None:
        super().__init__(f"iteration {iteration} ({phase}): {message} [status={status}]")
        self.iteration = iteration
        self.phase = phase
        self.status = status
