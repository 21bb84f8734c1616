"""Parameter and result records shared by the two- and three-body solvers.

Units: hbar = M = 1, with M the atomic mass. Momenta are inverse lengths and an
energy is quoted as the square of a wavenumber, so a bound state of binding
wavenumber q has E = -q**2 and a free atom of wavenumber k carries k**2 / 2.
The length unit is left to the caller; R* = 1 is the natural choice.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass
from typing import Any

__all__ = [
    "SolverError",
    "NonFinite",
    "NegativeRange",
    "RStarRequired",
    "PoleAtZero",
    "EpsilonZero",
    "NoBoundState",
    "BadRange",
    "NoSignChange",
    "MaxIterations",
    "ThresholdViolation",
    "FewerLevelsFound",
    "NotConverged",
    "WindowTooNarrow",
    "ResonanceParams",
    "DimerSolution",
    "TrimerLevel",
    "StmSolution",
    "MomentumDistribution",
    "validate_params",
    "format_float",
]


class SolverError(Exception):
    """Base class of every typed failure raised by the solvers."""

    @property
    def name(self) -> str:
        return type(self).__name__


class NonFinite(SolverError, ValueError):
    pass


class NegativeRange(SolverError, ValueError):
    pass


class RStarRequired(SolverError, ValueError):
    pass


class PoleAtZero(SolverError, ZeroDivisionError):
    pass


class EpsilonZero(SolverError, ValueError):
    pass


class NoBoundState(SolverError):
    pass


class BadRange(SolverError, ValueError):
    pass


class NoSignChange(SolverError, ValueError):
    pass


class MaxIterations(SolverError, RuntimeError):
    pass


class ThresholdViolation(SolverError, ValueError):
    pass


class FewerLevelsFound(SolverError):
    """Raised when a level search ends with fewer roots than requested.

    The levels that were found are kept on ``levels``.
    """

    def __init__(self, message: str, levels=()):
        super().__init__(message)
        self.levels = tuple(levels)


class NotConverged(SolverError, RuntimeError):
    pass


class WindowTooNarrow(SolverError, ValueError):
    pass


def format_float(x: float) -> str:
    """17 significant digits, enough to round-trip any double."""
    return format(float(x), ".17g")


class _Record:
    """JSON round-trip for frozen dataclass records.

    Tuples of floats are written as lists and nested records as objects;
    ``from_dict`` rebuilds them from the field annotations.
    """

    _nested: dict[str, type] = {}

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {}
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if isinstance(v, _Record):
                v = v.to_dict()
            elif isinstance(v, tuple):
                v = [float(x) for x in v]
            out[f.name] = v
        return out

    @classmethod
    def from_dict(cls, data: dict[str, Any]):
        kwargs = {}
        for f in dataclasses.fields(cls):
            if f.name not in data:
                continue
            v = data[f.name]
            if f.name in cls._nested:
                v = cls._nested[f.name].from_dict(v)
            elif isinstance(v, list):
                v = tuple(float(x) for x in v)
            kwargs[f.name] = v
        return cls(**kwargs)

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), allow_nan=False, **kwargs)

    @classmethod
    def from_json(cls, text: str):
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class ResonanceParams(_Record):
    """Interaction knobs: inverse scattering length, width parameter R*, cutoff range.

    ``inv_a = 0`` is unitarity; ``epsilon = 0`` is the strict zero-range limit.
    """

    inv_a: float = 0.0
    r_star: float = 1.0
    epsilon: float = 0.0

    def __post_init__(self):
        for name in ("inv_a", "r_star", "epsilon"):
            object.__setattr__(self, name, float(getattr(self, name)))

    @property
    def a(self) -> float:
        """Scattering length (infinite at unitarity)."""
        return math.inf if self.inv_a == 0.0 else 1.0 / self.inv_a


_CONTEXTS = ("twobody", "regularized", "threebody")


def validate_params(p: ResonanceParams, context: str = "twobody") -> ResonanceParams:
    """Check that ``p`` is admissible for a solver kind and return it unchanged.

    ``context`` is one of ``"twobody"`` (closed forms, R* >= 0),
    ``"regularized"`` (needs epsilon > 0 and R* > 0) or ``"threebody"``
    (needs R* > 0).
    """
    if context not in _CONTEXTS:
        raise ValueError(f"unknown solver context {context!r}")
    for name in ("inv_a", "r_star", "epsilon"):
        if not math.isfinite(getattr(p, name)):
            raise NonFinite(f"{name} = {getattr(p, name)!r} is not finite")
    if p.r_star < 0:
        raise NegativeRange(f"r_star = {p.r_star!r} < 0")
    if p.epsilon < 0:
        raise NegativeRange(f"epsilon = {p.epsilon!r} < 0")
    if context == "threebody" and p.r_star == 0:
        raise RStarRequired("three-body solving needs r_star > 0 (R* = 0 collapses)")
    if context == "regularized":
        if p.epsilon == 0:
            raise EpsilonZero("regularized amplitude needs epsilon > 0")
        if p.r_star == 0:
            raise RStarRequired("regularized amplitude needs r_star > 0")
    return p


@dataclass(frozen=True)
class DimerSolution(_Record):
    params: ResonanceParams
    kappa: float
    energy: float
    n_mol: float
    c4: float
    c6: float

    _nested = {"params": ResonanceParams}


@dataclass(frozen=True)
class TrimerLevel(_Record):
    index: int
    q: float
    energy: float

    def __post_init__(self):
        object.__setattr__(self, "index", int(self.index))


@dataclass(frozen=True)
class StmSolution(_Record):
    """Solved pair amplitude of one trimer level.

    ``d_values`` holds D(k) on ``nodes``, normalized so that the one-molecule
    weight is ``n_mol = 6 R* \\int d^3k/(2 pi)^3 D(k)**2`` and
    ``n_open + n_mol = 1``.
    """

    params: ResonanceParams
    level: TrimerLevel
    nodes: tuple
    weights: tuple
    d_values: tuple
    n_mol: float
    n_open: float
    k_mol: float
    residual: float = 0.0

    _nested = {"params": ResonanceParams, "level": TrimerLevel}


@dataclass(frozen=True)
class MomentumDistribution(_Record):
    """One-body momentum distribution sampled on a quadrature grid, with its tail fit.

    ``weights`` are the radial quadrature weights of ``k_samples`` so that
    ``sum(weights * k**2 * values) / (2 pi**2)`` approximates the atom number
    below ``k_max``, the upper end of the sampling grid.
    """

    k_samples: tuple
    weights: tuple
    values: tuple
    c4_fit: float
    c6_fit: float
    fit_window: tuple
    k_max: float = 0.0
    c8_fit: float = 0.0
    sum_rule_residual: float = 0.0
