"""Problem definition: constants, control partition, controls and scalar fields.

All breakpoint-aware objects use the same convention when evaluated exactly
on a breakpoint: ``side="left"`` returns the limit from the left (the value of
the interval ending there), ``side="right"`` the limit from the right.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from .errors import ConfigurationError


def _piece_index(interior: np.ndarray, t, side: str):
    return np.searchsorted(interior, t, side=side)


def _finish(t, out):
    if np.ndim(t) == 0:
        return float(out)
    return out


# --------------------------------------------------------------------------
# scalar fields
# --------------------------------------------------------------------------


class ScalarField:
    """A scalar function of time that is smooth between its breakpoints."""

    #: full list of breakpoints (including the domain ends); empty if smooth
    breakpoints: tuple = ()

    def __call__(self, t, side: str = "left"):
        if side not in ("left", "right"):
            raise ValueError(f"side must be 'left' or 'right', got {side!r}")
        t = np.asarray(t, dtype=float)
        return _finish(t, self._evaluate(t, side))

    def _evaluate(self, t: np.ndarray, side: str) -> np.ndarray:
        raise NotImplementedError

    def jump(self, t: float) -> float:
        """Right limit minus left limit at ``t``."""
        return float(self(t, "right") - self(t, "left"))


@dataclass(frozen=True)
class Constant(ScalarField):
    value: float = 0.0

    def _evaluate(self, t, side):
        return np.full(t.shape, float(self.value))

    def jump(self, t):
        return 0.0


@dataclass(frozen=True)
class Sinusoid(ScalarField):
    """``offset + amplitude * sin(omega * t)``."""

    offset: float
    amplitude: float
    omega: float = 1.0

    def _evaluate(self, t, side):
        return self.offset + self.amplitude * np.sin(self.omega * t)

    def jump(self, t):
        return 0.0


@dataclass(frozen=True)
class PerIntervalConstant(ScalarField):
    values: tuple
    breakpoints: tuple

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(x) for x in self.values))
        object.__setattr__(self, "breakpoints", tuple(float(x) for x in self.breakpoints))
        if len(self.values) != len(self.breakpoints) - 1:
            raise ConfigurationError(
                f"{len(self.values)} values given for "
                f"{len(self.breakpoints) - 1} intervals"
            )

    def _evaluate(self, t, side):
        idx = _piece_index(np.asarray(self.breakpoints[1:-1]), t, side)
        return np.asarray(self.values)[idx]


@dataclass(frozen=True)
class Tabulated(ScalarField):
    """Samples joined linearly inside each smooth piece.

    Samples lying exactly on an interior breakpoint are ignored since they do
    not belong to either side. Near a breakpoint the value is extrapolated
    linearly from the two closest samples of the same piece, so one-sided
    limits are always defined. Every piece needs at least two samples.
    """

    times: tuple
    values: tuple
    breakpoints: tuple = ()

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if times.shape != values.shape or times.ndim != 1:
            raise ConfigurationError("tabulated field needs matching 1-d times and values")
        if np.any(np.diff(times) <= 0):
            raise ConfigurationError("tabulated sample times must be strictly increasing")
        object.__setattr__(self, "times", tuple(times.tolist()))
        object.__setattr__(self, "values", tuple(values.tolist()))
        object.__setattr__(self, "breakpoints", tuple(float(x) for x in self.breakpoints))
        interior = np.asarray(self.breakpoints[1:-1], dtype=float)
        keep = ~np.isin(times, interior)
        times, values = times[keep], values[keep]
        piece = np.searchsorted(interior, times, side="left")
        counts = np.bincount(piece, minlength=len(interior) + 1)
        if np.any(counts < 2):
            bad = int(np.argmin(counts))
            raise ConfigurationError(f"tabulated field has fewer than two samples in piece {bad}")
        first = np.concatenate([[0], np.cumsum(counts)[:-1]])
        object.__setattr__(self, "_x", times)
        object.__setattr__(self, "_y", values)
        object.__setattr__(self, "_first", first)
        object.__setattr__(self, "_last", first + counts - 1)
        object.__setattr__(self, "_interior", interior)

    def _evaluate(self, t, side):
        p = _piece_index(self._interior, t, side)
        k = np.searchsorted(self._x, t, side="right") - 1
        j = np.clip(k, self._first[p], self._last[p] - 1)
        x0, x1 = self._x[j], self._x[j + 1]
        y0, y1 = self._y[j], self._y[j + 1]
        return y0 + (y1 - y0) / (x1 - x0) * (t - x0)


@dataclass(frozen=True)
class PiecewiseFunction(ScalarField):
    """One smooth callable per interval, with optional derivatives.

    Used for closed-form references and manufactured solutions.
    """

    functions: tuple
    breakpoints: tuple
    derivatives: tuple | None = None

    def __post_init__(self):
        object.__setattr__(self, "breakpoints", tuple(float(x) for x in self.breakpoints))
        if len(self.functions) != len(self.breakpoints) - 1:
            raise ConfigurationError("need one function per interval")
        if self.derivatives is not None and len(self.derivatives) != len(self.functions):
            raise ConfigurationError("need one derivative per interval")

    def _apply(self, funcs, t, side):
        idx = _piece_index(np.asarray(self.breakpoints[1:-1]), t, side)
        out = np.empty(t.shape)
        for p in np.unique(idx):
            mask = idx == p
            out[mask] = funcs[p](t[mask])
        return out

    def _evaluate(self, t, side):
        return self._apply(self.functions, t, side)

    def derivative(self, t, side: str = "left"):
        if self.derivatives is None:
            raise ValueError("no derivatives supplied")
        t = np.asarray(t, dtype=float)
        return _finish(t, self._apply(self.derivatives, t, side))


# --------------------------------------------------------------------------
# partition, problem, controls
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ControlPartition:
    """Breakpoints ``0 = tau_0 < tau_1 < ... < tau_N = t_final``.

    Interfaces (possible switching times) are the interior breakpoints and are
    derived on demand, never stored separately.
    """

    breakpoints: tuple

    def __post_init__(self):
        tau = tuple(float(x) for x in self.breakpoints)
        object.__setattr__(self, "breakpoints", tau)
        if len(tau) < 2:
            raise ConfigurationError("partition needs at least two breakpoints", section="problem")
        if tau[0] != 0.0:
            raise ConfigurationError("partition must start at 0", section="problem")
        if any(b <= a for a, b in zip(tau, tau[1:])):
            raise ConfigurationError("partition breakpoints must be strictly increasing",
                                     section="problem")

    @classmethod
    def equal(cls, t_final: float, n: int) -> "ControlPartition":
        if int(n) != n or n < 1:
            raise ConfigurationError("N must be a positive integer", section="problem")
        tau = np.linspace(0.0, t_final, int(n) + 1)
        return cls(tuple(tau))

    @property
    def n_intervals(self) -> int:
        return len(self.breakpoints) - 1

    @property
    def t_final(self) -> float:
        return self.breakpoints[-1]

    @cached_property
    def tau(self) -> np.ndarray:
        return np.asarray(self.breakpoints)

    @cached_property
    def interfaces(self) -> np.ndarray:
        return self.tau[1:-1]

    @cached_property
    def lengths(self) -> np.ndarray:
        return np.diff(self.tau)

    def interval_index(self, t, side: str = "left"):
        """0-based index of the interval containing ``t``."""
        idx = _piece_index(self.interfaces, t, side)
        return idx if np.ndim(idx) else int(idx)


@dataclass(frozen=True)
class ProblemSpec:
    """Scalar linear heat-type ODE ``T' = -K (T - T_s) + C w + f`` with tracking target."""

    K: float
    C: float
    T_s: float
    T_0: float
    t_final: float
    partition: ControlPartition
    forcing: ScalarField = field(default_factory=Constant)
    target: ScalarField = field(default_factory=Constant)
    adjoint_source: ScalarField = field(default_factory=Constant)

    def __post_init__(self):
        if not self.K > 0:
            raise ConfigurationError("K must be > 0", section="problem")
        if not self.C > 0:
            raise ConfigurationError("C must be > 0", section="problem")
        if not self.t_final > 0:
            raise ConfigurationError("t_final must be > 0", section="problem")
        if self.partition.t_final != self.t_final:
            raise ConfigurationError(
                f"partition ends at {self.partition.t_final}, expected t_final={self.t_final}",
                section="problem",
            )

    @property
    def N(self) -> int:
        return self.partition.n_intervals

    def replace(self, **changes) -> "ProblemSpec":
        return dataclasses.replace(self, **changes)


def check_control(v, n: int, binary: bool = False) -> np.ndarray:
    """Return ``v`` as a float array of length ``n``.

    With ``binary=True`` the entries must be exactly 0 or 1. Relaxed controls
    are not box-checked here because finite-difference probes step outside.
    """
    v = np.asarray(v, dtype=float)
    if v.shape != (n,):
        raise ValueError(f"control has shape {v.shape}, expected ({n},)")
    if binary and not np.all((v == 0) | (v == 1)):
        raise ValueError("binary control entries must be 0 or 1")
    return v


def check_relaxed(v, n: int) -> np.ndarray:
    v = check_control(v, n)
    if np.any(v < 0) or np.any(v > 1):
        raise ValueError("relaxed control entries must lie in [0, 1]")
    return v


def control_value(v: Sequence[float], partition: ControlPartition, t: float) -> float:
    """Value of ``w(t)``; at an interior breakpoint the left interval's value."""
    if not 0.0 <= t <= partition.t_final:
        raise ValueError(f"t={t} outside [0, {partition.t_final}]")
    v = check_control(v, partition.n_intervals)
    return float(v[partition.interval_index(t, "left")])


def control_jump(v: Sequence[float], partition: ControlPartition, i: int) -> float:
    """Jump ``v[i+1] - v[i]`` of the control across interface ``i`` (0-based)."""
    if not 0 <= i < partition.n_intervals - 1:
        raise IndexError(f"interface index {i} out of range 0..{partition.n_intervals - 2}")
    v = check_control(v, partition.n_intervals)
    return float(v[i + 1] - v[i])


def field_jump(s: ScalarField, t: float) -> float:
    return s.jump(t)


def alternating_control(n: int, first: int = 1) -> np.ndarray:
    """``(1, 0, 1, 0, ...)`` starting with ``first``."""
    v = np.zeros(n)
    v[(0 if first else 1)::2] = 1.0
    return v

