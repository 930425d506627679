"""Declarative convex programs built from a small closed-form atom set.

Every expression is ``constant + linear + sum(atoms) + sum(quotient squares)``
where each atom is a nonnegative multiple of a convex function applied to a
single-variable affine argument:

* ``square``      ``c * (s x + o)**2``
* ``quartic``     ``c * (s x + o)**4``
* ``reciprocal``  ``c / (s x + o)``           on ``s x + o > 0``
* ``neg_sqrt``    ``-c * sqrt(s x + o)``      on ``s x + o > 0``
* ``neg_log``     ``-c * ln(s x + o)``        on ``s x + o > 0``

and a quotient square is ``c * (s x_i + o + q / (s2 x_k + o2))**2`` with
``q >= 0`` and a nonnegative base on the variable box. Constraints read
``expression <= 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .errors import ProgramError

ATOM_KINDS: Tuple[str, ...] = ("square", "quartic", "reciprocal", "neg_sqrt", "neg_log")
POSITIVE_DOMAIN = frozenset({"reciprocal", "neg_sqrt", "neg_log"})
_TINY = 1e-300


@dataclass(frozen=True, slots=True)
class Variable:
    """A decision variable with box bounds and a working scale."""

    name: str
    index: int
    lower: float
    upper: float
    scale: float


@dataclass(frozen=True, slots=True)
class Atom:
    kind: str
    coef: float
    var: int
    slope: float = 1.0
    offset: float = 0.0

    def __post_init__(self) -> None:
        if self.kind not in ATOM_KINDS:
            raise ProgramError(f"Unknown atom kind {self.kind!r}")
        if not (self.coef >= 0 and math.isfinite(self.coef)):
            raise ProgramError(f"Atom {self.kind} needs a finite nonnegative coefficient, got {self.coef}")
        if not (math.isfinite(self.slope) and math.isfinite(self.offset)):
            raise ProgramError(f"Atom {self.kind} has a non-finite argument")


@dataclass(frozen=True, slots=True)
class QuotientSquare:
    """``coef * (slope * x[var] + offset + numer / (den_slope * x[den_var] + den_offset))**2``."""

    coef: float
    var: int
    slope: float
    offset: float
    numer: float
    den_var: int
    den_slope: float = 1.0
    den_offset: float = 0.0

    def __post_init__(self) -> None:
        if not (self.coef >= 0 and math.isfinite(self.coef)):
            raise ProgramError(f"Quotient square needs a finite nonnegative coefficient, got {self.coef}")
        if not (self.numer >= 0 and math.isfinite(self.numer)):
            raise ProgramError(f"Quotient square needs a finite nonnegative numerator, got {self.numer}")


@dataclass(slots=True)
class Expression:
    """Mutable builder for one convex expression; methods chain."""

    constant: float = 0.0
    linear: Dict[int, float] = field(default_factory=dict)
    atoms: List[Atom] = field(default_factory=list)
    quotients: List[QuotientSquare] = field(default_factory=list)

    def add_constant(self, value: float) -> "Expression":
        self.constant += float(value)
        return self

    def add_linear(self, var: int, coef: float) -> "Expression":
        self.linear[var] = self.linear.get(var, 0.0) + float(coef)
        return self

    def add_atom(self, kind: str, coef: float, var: int, slope: float = 1.0, offset: float = 0.0) -> "Expression":
        self.atoms.append(Atom(kind, float(coef), var, float(slope), float(offset)))
        return self

    def square(self, var: int, coef: float, slope: float = 1.0, offset: float = 0.0) -> "Expression":
        return self.add_atom("square", coef, var, slope, offset)

    def quartic(self, var: int, coef: float) -> "Expression":
        return self.add_atom("quartic", coef, var)

    def reciprocal(self, var: int, coef: float, slope: float = 1.0, offset: float = 0.0) -> "Expression":
        return self.add_atom("reciprocal", coef, var, slope, offset)

    def neg_sqrt(self, var: int, coef: float) -> "Expression":
        return self.add_atom("neg_sqrt", coef, var)

    def neg_log(self, var: int, coef: float, slope: float = 1.0, offset: float = 0.0) -> "Expression":
        return self.add_atom("neg_log", coef, var, slope, offset)

    def quotient_square(
        self,
        coef: float,
        var: int,
        slope: float,
        offset: float,
        numer: float,
        den_var: int,
        den_slope: float = 1.0,
        den_offset: float = 0.0,
    ) -> "Expression":
        self.quotients.append(
            QuotientSquare(
                float(coef),
                var,
                float(slope),
                float(offset),
                float(numer),
                den_var,
                float(den_slope),
                float(den_offset),
            )
        )
        return self

    def variables(self) -> List[int]:
        used = set(self.linear)
        used.update(atom.var for atom in self.atoms)
        for quotient in self.quotients:
            used.update((quotient.var, quotient.den_var))
        return sorted(used)


@dataclass(frozen=True, slots=True)
class Constraint:
    name: str
    expression: Expression


def _atom_phi(kind: str, arg: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Value, first and second derivative of the atom's scalar function."""

    if kind == "square":
        return arg * arg, 2.0 * arg, np.full_like(arg, 2.0)
    if kind == "quartic":
        sq = arg * arg
        return sq * sq, 4.0 * sq * arg, 12.0 * sq
    if kind == "reciprocal":
        inv = 1.0 / arg
        return inv, -inv * inv, 2.0 * inv * inv * inv
    if kind == "neg_sqrt":
        root = np.sqrt(arg)
        return -root, -0.5 / root, 0.25 / (root * arg)
    inv = 1.0 / arg
    return -np.log(arg), -inv, inv * inv


@dataclass(frozen=True, slots=True)
class _AtomGroup:
    kind: str
    rows: np.ndarray
    coef: np.ndarray
    var: np.ndarray
    slope: np.ndarray
    offset: np.ndarray


class CompiledProgram:
    """Array form of a program: row 0 is the objective, rows 1.. the constraints."""

    def __init__(self, program: "ConvexProgram") -> None:
        expressions = [program.objective] + [c.expression for c in program.constraints]
        self.num_rows = len(expressions)
        self.num_vars = len(program.variables)
        self.constant = np.array([e.constant for e in expressions], dtype=float)

        lin = [(row, var, coef) for row, e in enumerate(expressions) for var, coef in e.linear.items()]
        self.lin_rows = np.array([item[0] for item in lin], dtype=int)
        self.lin_cols = np.array([item[1] for item in lin], dtype=int)
        self.lin_vals = np.array([item[2] for item in lin], dtype=float)

        groups: List[_AtomGroup] = []
        for kind in ATOM_KINDS:
            members = [(row, atom) for row, e in enumerate(expressions) for atom in e.atoms if atom.kind == kind]
            if not members:
                continue
            groups.append(
                _AtomGroup(
                    kind=kind,
                    rows=np.array([row for row, _ in members], dtype=int),
                    coef=np.array([atom.coef for _, atom in members], dtype=float),
                    var=np.array([atom.var for _, atom in members], dtype=int),
                    slope=np.array([atom.slope for _, atom in members], dtype=float),
                    offset=np.array([atom.offset for _, atom in members], dtype=float),
                )
            )
        self.groups = tuple(groups)

        quotients = [(row, q) for row, e in enumerate(expressions) for q in e.quotients]
        self.q_rows = np.array([row for row, _ in quotients], dtype=int)
        self.q_coef = np.array([q.coef for _, q in quotients], dtype=float)
        self.q_var = np.array([q.var for _, q in quotients], dtype=int)
        self.q_slope = np.array([q.slope for _, q in quotients], dtype=float)
        self.q_offset = np.array([q.offset for _, q in quotients], dtype=float)
        self.q_numer = np.array([q.numer for _, q in quotients], dtype=float)
        self.q_den_var = np.array([q.den_var for _, q in quotients], dtype=int)
        self.q_den_slope = np.array([q.den_slope for _, q in quotients], dtype=float)
        self.q_den_offset = np.array([q.den_offset for _, q in quotients], dtype=float)

    def _quotient_parts(self, x: np.ndarray) -> Optional[Tuple[np.ndarray, np.ndarray]]:
        den = self.q_den_slope * x[self.q_den_var] + self.q_den_offset
        if np.any(den <= 0):
            return None
        base = self.q_slope * x[self.q_var] + self.q_offset + self.q_numer / den
        return base, den

    def in_domain(self, x: np.ndarray) -> bool:
        for group in self.groups:
            if group.kind in POSITIVE_DOMAIN:
                arg = group.slope * x[group.var] + group.offset
                if np.any(arg <= 0):
                    return False
        return self._quotient_parts(x) is not None

    def values(self, x: np.ndarray) -> Optional[np.ndarray]:
        """Row values at ``x`` or ``None`` outside the atom domains."""

        if not self.in_domain(x):
            return None
        rows = self.num_rows
        values = self.constant.copy()
        if self.lin_rows.size:
            values += np.bincount(self.lin_rows, weights=self.lin_vals * x[self.lin_cols], minlength=rows)
        for group in self.groups:
            arg = group.slope * x[group.var] + group.offset
            phi, _, _ = _atom_phi(group.kind, arg)
            values += np.bincount(group.rows, weights=group.coef * phi, minlength=rows)
        if self.q_rows.size:
            base, _ = self._quotient_parts(x)
            values += np.bincount(self.q_rows, weights=self.q_coef * base * base, minlength=rows)
        return values

    def jacobian(self, x: np.ndarray) -> np.ndarray:
        jac = np.zeros((self.num_rows, self.num_vars))
        if self.lin_rows.size:
            np.add.at(jac, (self.lin_rows, self.lin_cols), self.lin_vals)
        for group in self.groups:
            arg = group.slope * x[group.var] + group.offset
            _, dphi, _ = _atom_phi(group.kind, arg)
            np.add.at(jac, (group.rows, group.var), group.coef * dphi * group.slope)
        if self.q_rows.size:
            base, den = self._quotient_parts(x)
            outer = 2.0 * self.q_coef * base
            np.add.at(jac, (self.q_rows, self.q_var), outer * self.q_slope)
            np.add.at(jac, (self.q_rows, self.q_den_var), -outer * self.q_numer * self.q_den_slope / (den * den))
        return jac

    def hessian(self, x: np.ndarray, weights: np.ndarray) -> np.ndarray:
        """``sum_r weights[r] * Hessian(row r)``."""

        hess = np.zeros((self.num_vars, self.num_vars))
        for group in self.groups:
            arg = group.slope * x[group.var] + group.offset
            _, _, d2phi = _atom_phi(group.kind, arg)
            np.add.at(hess, (group.var, group.var), weights[group.rows] * group.coef * d2phi * group.slope**2)
        if self.q_rows.size:
            base, den = self._quotient_parts(x)
            wc = 2.0 * weights[self.q_rows] * self.q_coef
            d_num = self.q_slope
            d_den = -self.q_numer * self.q_den_slope / (den * den)
            dd_den = 2.0 * self.q_numer * self.q_den_slope**2 / (den * den * den)
            np.add.at(hess, (self.q_var, self.q_var), wc * d_num * d_num)
            np.add.at(hess, (self.q_var, self.q_den_var), wc * d_num * d_den)
            np.add.at(hess, (self.q_den_var, self.q_var), wc * d_num * d_den)
            np.add.at(hess, (self.q_den_var, self.q_den_var), wc * (d_den * d_den + base * dd_den))
        return hess

    def term_magnitudes(self, x: np.ndarray) -> np.ndarray:
        """Largest absolute term value per row, used for row normalization."""

        mags = np.abs(self.constant)
        if self.lin_rows.size:
            np.maximum.at(mags, self.lin_rows, np.abs(self.lin_vals * x[self.lin_cols]))
        for group in self.groups:
            arg = group.slope * x[group.var] + group.offset
            phi, _, _ = _atom_phi(group.kind, arg)
            np.maximum.at(mags, group.rows, np.abs(group.coef * phi))
        if self.q_rows.size:
            base, _ = self._quotient_parts(x)
            np.maximum.at(mags, self.q_rows, np.abs(self.q_coef * base * base))
        return mags


class ConvexProgram:
    """Variables, a convex objective and ``<= 0`` constraints, plus scaling data."""

    def __init__(self, name: str) -> None:
        self.name = name
        self.variables: List[Variable] = []
        self.objective = Expression()
        self.constraints: List[Constraint] = []
        self.objective_norm = 1.0
        self.row_norms: List[float] = []
        self._compiled: Optional[CompiledProgram] = None

    def add_variable(self, name: str, lower: float = -math.inf, upper: float = math.inf, scale: float = 1.0) -> int:
        if any(variable.name == name for variable in self.variables):
            raise ProgramError(f"Duplicate variable {name!r}")
        if not (scale > 0 and math.isfinite(scale)):
            raise ProgramError(f"Variable {name!r} needs a positive finite scale, got {scale}")
        if not lower < upper:
            raise ProgramError(f"Variable {name!r} has an empty box [{lower}, {upper}]")
        index = len(self.variables)
        self.variables.append(Variable(name, index, float(lower), float(upper), float(scale)))
        self._compiled = None
        return index

    def set_objective(self, expression: Expression) -> None:
        self.objective = expression
        self._compiled = None

    def add_constraint(self, name: str, expression: Expression, norm: float = 1.0) -> None:
        if not (norm > 0 and math.isfinite(norm)):
            raise ProgramError(f"Constraint {name!r} needs a positive finite norm, got {norm}")
        self.constraints.append(Constraint(name, expression))
        self.row_norms.append(float(norm))
        self._compiled = None

    # -- structure -----------------------------------------------------------------

    def compiled(self) -> CompiledProgram:
        if self._compiled is None:
            self.validate()
            self._compiled = CompiledProgram(self)
        return self._compiled

    def size(self) -> Tuple[int, int]:
        """``(number of variables, number of constraints)`` excluding box bounds."""

        return len(self.variables), len(self.constraints)

    def index(self, name: str) -> int:
        for variable in self.variables:
            if variable.name == name:
                return variable.index
        raise ProgramError(f"Unknown variable {name!r}")

    def validate(self) -> None:
        """Check indices and that every atom argument stays in its domain on the box."""

        count = len(self.variables)
        rows = [("objective", self.objective)] + [(c.name, c.expression) for c in self.constraints]
        for name, expression in rows:
            for var in expression.variables():
                if not 0 <= var < count:
                    raise ProgramError(f"{name}: variable index {var} out of range")
            for atom in expression.atoms:
                if atom.kind in POSITIVE_DOMAIN and self._argument_min(atom.var, atom.slope, atom.offset) < 0:
                    raise ProgramError(f"{name}: {atom.kind} argument can leave the positive domain")
            for quotient in expression.quotients:
                if self._argument_min(quotient.den_var, quotient.den_slope, quotient.den_offset) < 0:
                    raise ProgramError(f"{name}: quotient denominator can leave the positive domain")
                if self._argument_min(quotient.var, quotient.slope, quotient.offset) < 0:
                    raise ProgramError(f"{name}: quotient base can turn negative on the box")

    def _argument_min(self, var: int, slope: float, offset: float) -> float:
        variable = self.variables[var]
        if slope == 0:
            return offset
        bound = variable.lower if slope > 0 else variable.upper
        if math.isinf(bound):
            return -math.inf
        return slope * bound + offset

    # -- numerics --------------------------------------------------------------------

    @property
    def lower(self) -> np.ndarray:
        return np.array([v.lower for v in self.variables], dtype=float)

    @property
    def upper(self) -> np.ndarray:
        return np.array([v.upper for v in self.variables], dtype=float)

    @property
    def scales(self) -> np.ndarray:
        return np.array([v.scale for v in self.variables], dtype=float)

    @property
    def norms(self) -> np.ndarray:
        return np.array([self.objective_norm] + self.row_norms, dtype=float)

    def evaluate(self, x: Sequence[float]) -> Optional[np.ndarray]:
        """Unnormalized ``[objective, constraint_1, ...]`` at ``x``."""

        return self.compiled().values(np.asarray(x, dtype=float))

    def objective_value(self, x: Sequence[float]) -> float:
        values = self.evaluate(x)
        return math.inf if values is None else float(values[0])

    def autoscale(self, x: Sequence[float]) -> None:
        """Normalize objective and rows by their largest term magnitude at ``x``."""

        mags = self.compiled().term_magnitudes(np.asarray(x, dtype=float))
        mags = np.where(np.isfinite(mags) & (mags > _TINY), mags, 1.0)
        self.objective_norm = float(mags[0])
        self.row_norms = [float(value) for value in mags[1:]]

    def vector(self, values: Mapping[str, float]) -> np.ndarray:
        missing = [v.name for v in self.variables if v.name not in values]
        if missing:
            raise ProgramError(f"Missing values for variables: {', '.join(missing)}")
        return np.array([float(values[v.name]) for v in self.variables], dtype=float)

    def unpack(self, x: Sequence[float]) -> Dict[str, float]:
        return {v.name: float(x[v.index]) for v in self.variables}

    # -- debugging ---------------------------------------------------------------------

    def _format_expression(self, expression: Expression) -> str:
        names = [v.name for v in self.variables]
        parts = [f"{expression.constant:.6g}"] if expression.constant else []
        parts += [f"{coef:+.6g}*{names[var]}" for var, coef in sorted(expression.linear.items())]
        for atom in expression.atoms:
            arg = names[atom.var]
            if (atom.slope, atom.offset) != (1.0, 0.0):
                arg = f"{atom.slope:.6g}*{arg}{atom.offset:+.6g}"
            parts.append(f"+{atom.coef:.6g}*{atom.kind}({arg})")
        for q in expression.quotients:
            parts.append(
                f"+{q.coef:.6g}*(({q.slope:.6g}*{names[q.var]}{q.offset:+.6g})"
                f" + {q.numer:.6g}/({q.den_slope:.6g}*{names[q.den_var]}{q.den_offset:+.6g}))^2"
            )
        return " ".join(parts) if parts else "0"

    def to_text(self) -> str:
        """Human-readable dump of variables, objective and constraints."""

        lines = [f"program {self.name}: {len(self.variables)} variables, {len(self.constraints)} constraints"]
        for v in self.variables:
            lines.append(f"  var {v.name:<12} in [{v.lower:.6g}, {v.upper:.6g}] scale {v.scale:.6g}")
        lines.append(f"  minimize (norm {self.objective_norm:.6g}): {self._format_expression(self.objective)}")
        for constraint, norm in zip(self.constraints, self.row_norms):
            lines.append(
                f"  {constraint.name:<20} (norm {norm:.6g}): {self._format_expression(constraint.expression)} <= 0"
            )
        return "\n".join(lines) + "\n"
