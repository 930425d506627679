"""Exceptions raised by the network and learning model."""

from __future__ import annotations

from typing import TYPE_CHECKING

if TYPE_CHECKING:  # pragma: no cover
    from .feasibility import FeasibilityReport


class ModelError(ValueError):
    """Base class for invalid model inputs."""


class ParameterDomainError(ModelError):
    """Raised when a parameter falls outside its admissible domain."""

    def __init__(self, constraint: str, message: str) -> None:
        super().__init__(f"{constraint}: {message}")
        self.constraint = constraint


class InfeasibleInstanceError(ModelError):
    """Raised when no feasible allocation can be constructed for an instance."""

    def __init__(
        self,
        budget: str,
        message: str,
        report: "FeasibilityReport | None" = None,
    ) -> None:
        super().__init__(f"{budget}: {message}")
        self.budget = budget
        self.report = report
