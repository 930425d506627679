"""Primal-dual interior-point solver for ``ConvexProgram`` instances.

The solver works in normalized coordinates: variables are divided by their
``scale``, the objective and every constraint row by their norms, and box bounds
become linear rows. A phase-I pass over a relaxation variable finds a strictly
feasible start before the main pass.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, replace
from typing import Callable, Dict, Literal, Optional, Tuple

import numpy as np
from scipy import linalg
from scipy.optimize import nnls

from .program import CompiledProgram, ConvexProgram

SolverStatus = Literal["optimal", "max-iter", "infeasible"]

PHASE1_TARGET = -1e-3
PHASE1_FLOOR = -1.0


@dataclass(frozen=True, slots=True)
class SolverSettings:
    """Tolerances and iteration limits of the interior-point method."""

    tol: float = 1e-8
    mu: float = 10.0
    max_iter: int = 200
    alpha: float = 0.01
    beta: float = 0.5
    boundary_fraction: float = 0.99
    active_tol: float = 1e-6
    start_margin: float = 1e-3

    def __post_init__(self) -> None:
        if not self.tol > 0:
            raise ValueError(f"tol must be positive, got {self.tol}")
        if not self.mu > 1:
            raise ValueError(f"mu must exceed 1, got {self.mu}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be positive, got {self.max_iter}")


@dataclass(frozen=True, slots=True, eq=False)
class SolverResult:
    """Outcome of one solve; ``x`` is in the program's native units."""

    point: Dict[str, float]
    x: np.ndarray
    objective: float
    status: SolverStatus
    kkt_residual: float
    iterations: int
    phase1_iterations: int
    wall_time: float
    multipliers: np.ndarray
    message: str = ""
    worst_constraint: Optional[str] = None

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"

    def summary(self) -> Dict[str, object]:
        return {
            "status": self.status,
            "objective": self.objective,
            "kkt_residual": self.kkt_residual,
            "iterations": self.iterations,
            "phase1_iterations": self.phase1_iterations,
            "message": self.message,
            "worst_constraint": self.worst_constraint,
        }


class _Normalized:
    """Objective and rows of a program in normalized coordinates ``u = x / scale``.

    Rows are the program constraints followed by finite lower and upper bounds.
    """

    def __init__(self, program: ConvexProgram) -> None:
        self.program = program
        self.compiled: CompiledProgram = program.compiled()
        self.scale = program.scales
        self.norms = program.norms
        self.num_vars = len(program.variables)
        self.num_constraints = len(program.constraints)
        lower_u = program.lower / self.scale
        upper_u = program.upper / self.scale
        self.lower_idx = np.flatnonzero(np.isfinite(lower_u))
        self.upper_idx = np.flatnonzero(np.isfinite(upper_u))
        self.lower_u = lower_u
        self.upper_u = upper_u
        self.num_rows = self.num_constraints + self.lower_idx.size + self.upper_idx.size
        bound_jac = np.zeros((self.lower_idx.size + self.upper_idx.size, self.num_vars))
        bound_jac[np.arange(self.lower_idx.size), self.lower_idx] = -1.0
        bound_jac[self.lower_idx.size + np.arange(self.upper_idx.size), self.upper_idx] = 1.0
        self.bound_jac = bound_jac

    def row_names(self) -> Tuple[str, ...]:
        names = [c.name for c in self.program.constraints]
        names += [f"lower:{self.program.variables[i].name}" for i in self.lower_idx]
        names += [f"upper:{self.program.variables[i].name}" for i in self.upper_idx]
        return tuple(names)

    def bound_values(self, u: np.ndarray) -> np.ndarray:
        return np.concatenate([self.lower_u[self.lower_idx] - u[self.lower_idx], u[self.upper_idx] - self.upper_u[self.upper_idx]])

    def evaluate(self, u: np.ndarray) -> Optional[Tuple[float, np.ndarray, np.ndarray, np.ndarray]]:
        """``(f, grad f, g, J)`` at ``u`` or ``None`` outside the atom domains."""

        x = u * self.scale
        values = self.compiled.values(x)
        if values is None or not np.all(np.isfinite(values)):
            return None
        jac = self.compiled.jacobian(x) * self.scale[None, :] / self.norms[:, None]
        values = values / self.norms
        g = np.concatenate([values[1:], self.bound_values(u)])
        J = np.vstack([jac[1:], self.bound_jac])
        return float(values[0]), jac[0], g, J

    def hessian(self, u: np.ndarray, objective_weight: float, lam: np.ndarray) -> np.ndarray:
        weights = np.concatenate([[objective_weight], lam[: self.num_constraints]]) / self.norms
        hess = self.compiled.hessian(u * self.scale, weights)
        return hess * np.outer(self.scale, self.scale)

    def interior_start(self, x0: np.ndarray, margin: float) -> np.ndarray:
        """Scale ``x0`` and push it strictly inside the box."""

        u = np.asarray(x0, dtype=float) / self.scale
        low, high = self.lower_u, self.upper_u
        width = high - low
        gap = np.where(np.isfinite(width), margin * width, margin * np.maximum(1.0, np.abs(u)))
        u = np.where(np.isfinite(low), np.maximum(u, low + gap), u)
        u = np.where(np.isfinite(high), np.minimum(u, high - gap), u)
        return u


Evaluator = Callable[[np.ndarray], Optional[Tuple[float, np.ndarray, np.ndarray, np.ndarray]]]
HessianFn = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(slots=True)
class _PathState:
    z: np.ndarray
    lam: np.ndarray
    iterations: int
    status: SolverStatus
    message: str


def _newton_solve(matrix: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    sym = 0.5 * (matrix + matrix.T)
    try:
        factor = linalg.cho_factor(sym, check_finite=False)
        step = linalg.cho_solve(factor, rhs, check_finite=False)
        if np.all(np.isfinite(step)):
            return step
    except linalg.LinAlgError:
        pass
    step, *_ = linalg.lstsq(sym, rhs, check_finite=False)
    return step


def _primal_dual(
    evaluate: Evaluator,
    hessian: HessianFn,
    z0: np.ndarray,
    settings: SolverSettings,
    stop: Optional[Callable[[np.ndarray, float], bool]] = None,
) -> _PathState:
    """Primal-dual path following from a strictly feasible ``z0``."""

    state = evaluate(z0)
    if state is None or not np.all(state[2] < 0):
        return _PathState(z0, np.zeros(0), 0, "max-iter", "start is not strictly feasible")
    f, grad, g, J = state
    z = z0.copy()
    lam = 1.0 / (-g)
    m = g.size
    tol = 0.5 * settings.tol

    def residual(grad_: np.ndarray, g_: np.ndarray, J_: np.ndarray, lam_: np.ndarray, t_: float) -> float:
        dual = grad_ + J_.T @ lam_
        cent = -lam_ * g_ - 1.0 / t_
        return math.sqrt(float(dual @ dual + cent @ cent))

    for iteration in range(settings.max_iter):
        gap = float(-g @ lam)
        dual = grad + J.T @ lam
        if stop is not None and stop(z, gap):
            return _PathState(z, lam, iteration, "optimal", "stopping rule met")
        if np.linalg.norm(dual) <= tol and gap <= tol:
            return _PathState(z, lam, iteration, "optimal", "converged")

        t = settings.mu * m / gap if gap > 0 else 1.0
        slack = -g
        H = hessian(z, lam)
        matrix = H + J.T @ ((lam / slack)[:, None] * J)
        rhs = -(grad + (J.T @ (1.0 / slack)) / t)
        dz = _newton_solve(matrix, rhs)
        cent = -lam * g - 1.0 / t
        dlam = (cent - lam * (J @ dz)) / g

        shrinking = dlam < 0
        step = 1.0
        if np.any(shrinking):
            step = min(1.0, float(np.min(-lam[shrinking] / dlam[shrinking])))
        step *= settings.boundary_fraction

        base = residual(grad, g, J, lam, t)
        accepted = None
        while step > 1e-14:
            candidate = evaluate(z + step * dz)
            if candidate is not None and np.all(candidate[2] < 0):
                new_lam = lam + step * dlam
                if residual(candidate[1], candidate[2], candidate[3], new_lam, t) <= (1.0 - settings.alpha * step) * base:
                    accepted = (candidate, new_lam)
                    break
            step *= settings.beta
        if accepted is None:
            return _PathState(z, lam, iteration, "max-iter", "line search stalled")
        (f, grad, g, J), lam = accepted
        z = z + step * dz

    return _PathState(z, lam, settings.max_iter, "max-iter", "iteration limit reached")


def _kkt_from_parts(grad: np.ndarray, g: np.ndarray, J: np.ndarray, lam: np.ndarray) -> float:
    dual = grad + J.T @ lam
    comp = lam * g
    violation = np.maximum(g, 0.0)
    return math.sqrt(float(dual @ dual + comp @ comp + violation @ violation))


def kkt_residual(
    program: ConvexProgram,
    point: np.ndarray,
    multipliers: Optional[np.ndarray] = None,
    active_tol: float = 1e-6,
) -> float:
    """Stationarity plus complementarity residual in normalized coordinates.

    Without ``multipliers``, nonnegative multipliers are fitted by least squares
    on the rows within ``active_tol`` of being tight; the other rows get zero.
    """

    normalized = _Normalized(program)
    state = normalized.evaluate(np.asarray(point, dtype=float) / normalized.scale)
    if state is None:
        return math.inf
    _, grad, g, J = state
    if multipliers is not None:
        return _kkt_from_parts(grad, g, J, np.asarray(multipliers, dtype=float))
    active = np.flatnonzero(g >= -active_tol)
    lam = np.zeros(g.size)
    if active.size:
        fitted, _ = nnls(J[active].T, -grad)
        lam[active] = fitted
    return _kkt_from_parts(grad, g, J, lam)


def solve(
    program: ConvexProgram,
    start: np.ndarray,
    tol: Optional[float] = None,
    settings: Optional[SolverSettings] = None,
) -> SolverResult:
    """Minimize ``program`` from ``start`` (strictly inside the atom domains).

    Deterministic for fixed inputs. Infeasible programs come back with
    ``status="infeasible"`` and the most violated row in ``worst_constraint``.
    """

    if settings is None:
        settings = SolverSettings() if tol is None else SolverSettings(tol=tol)
    elif tol is not None:
        settings = replace(settings, tol=tol)
    started = time.perf_counter()
    normalized = _Normalized(program)
    names = normalized.row_names()
    n = normalized.num_vars
    k = normalized.num_constraints

    u0 = normalized.interior_start(np.asarray(start, dtype=float), settings.start_margin)
    state0 = normalized.evaluate(u0)
    if state0 is None:
        return _failure(program, normalized, u0, "max-iter", "start lies outside the atom domains", started, names)

    phase1_iterations = 0
    g0 = state0[2]
    if np.any(g0 >= 0):
        relaxed = g0[:k]
        t0 = float(np.max(relaxed)) + max(1e-2, 0.1 * abs(float(np.max(relaxed))))

        def evaluate_phase1(z: np.ndarray):
            inner = normalized.evaluate(z[:n])
            if inner is None:
                return None
            _, _, g, J = inner
            t = z[n]
            grad = np.zeros(n + 1)
            grad[n] = 1.0
            g1 = np.concatenate([g[:k] - t, g[k:], [PHASE1_FLOOR - t]])
            J1 = np.zeros((g1.size, n + 1))
            J1[: g.size, :n] = J
            J1[:k, n] = -1.0
            J1[-1, n] = -1.0
            return t, grad, g1, J1

        def hessian_phase1(z: np.ndarray, lam: np.ndarray) -> np.ndarray:
            H = np.zeros((n + 1, n + 1))
            H[:n, :n] = normalized.hessian(z[:n], 0.0, lam[:k])
            return H

        def reached(z: np.ndarray, gap: float) -> bool:
            return z[n] < PHASE1_TARGET or (z[n] < 0 and gap < 1e-6)

        phase1 = _primal_dual(
            evaluate_phase1,
            hessian_phase1,
            np.concatenate([u0, [t0]]),
            settings,
            stop=reached,
        )
        phase1_iterations = phase1.iterations
        u0 = phase1.z[:n]
        if phase1.z[n] >= 0:
            status: SolverStatus = "infeasible" if phase1.status == "optimal" else "max-iter"
            return _failure(
                program,
                normalized,
                u0,
                status,
                f"phase I stopped at relaxation {phase1.z[n]:.3e} ({phase1.message})",
                started,
                names,
                phase1_iterations,
            )

    def evaluate_main(u: np.ndarray):
        return normalized.evaluate(u)

    def hessian_main(u: np.ndarray, lam: np.ndarray) -> np.ndarray:
        return normalized.hessian(u, 1.0, lam)

    path = _primal_dual(evaluate_main, hessian_main, u0, settings)
    u = path.z
    final = normalized.evaluate(u)
    _, grad, g, J = final
    lam = path.lam if path.lam.size == g.size else np.zeros(g.size)
    residual = _kkt_from_parts(grad, g, J, lam)
    status = path.status
    if status == "optimal" and residual > settings.tol:
        status = "max-iter"
    x = u * normalized.scale
    return SolverResult(
        point=program.unpack(x),
        x=x,
        objective=program.objective_value(x),
        status=status,
        kkt_residual=residual,
        iterations=path.iterations,
        phase1_iterations=phase1_iterations,
        wall_time=time.perf_counter() - started,
        multipliers=lam,
        message=path.message,
    )


def _failure(
    program: ConvexProgram,
    normalized: _Normalized,
    u: np.ndarray,
    status: SolverStatus,
    message: str,
    started: float,
    names: Tuple[str, ...],
    phase1_iterations: int = 0,
) -> SolverResult:
    x = u * normalized.scale
    state = normalized.evaluate(u)
    worst = None
    residual = math.inf
    if state is not None:
        g = state[2]
        worst = names[int(np.argmax(g))] if g.size else None
    return SolverResult(
        point=program.unpack(x),
        x=x,
        objective=program.objective_value(x),
        status=status,
        kkt_residual=residual,
        iterations=0,
        phase1_iterations=phase1_iterations,
        wall_time=time.perf_counter() - started,
        multipliers=np.zeros(normalized.num_rows),
        message=message,
        worst_constraint=worst,
    )
