"""Uniform time mesh, regular/irregular node classification and jump data."""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import ConfigurationError
from .problem import ControlPartition, ProblemSpec, check_control


@dataclass(frozen=True)
class TimeMesh:
    N_t: int
    t_final: float

    @property
    def dt(self) -> float:
        return self.t_final / self.N_t

    @cached_property
    def nodes(self) -> np.ndarray:
        # linspace pins the last node to t_final instead of accumulating dt
        return np.linspace(0.0, self.t_final, self.N_t + 1)


def build_mesh(spec: ProblemSpec | float, N_t: int) -> TimeMesh:
    """Mesh of ``N_t`` equal steps over ``[0, t_final]``.

    ``spec`` may also be a bare horizon length.
    """
    t_final = spec.t_final if isinstance(spec, ProblemSpec) else float(spec)
    if isinstance(N_t, bool) or int(N_t) != N_t or N_t < 1:
        raise ConfigurationError("N_t must be ≥ 1", section="mesh")
    return TimeMesh(int(N_t), t_final)


@dataclass(frozen=True)
class PointClassification:
    """Which node is irregular for each interface.

    ``node_of_interface[i]`` is the node whose marching cell contains
    interface ``i``; every other node is regular.
    """

    direction: str
    node_of_interface: tuple
    N_t: int

    @cached_property
    def nodes(self) -> np.ndarray:
        return np.asarray(self.node_of_interface, dtype=int)

    @cached_property
    def _lookup(self) -> dict:
        return {n: i for i, n in enumerate(self.node_of_interface)}

    def interface_at(self, n: int) -> int | None:
        """Interface index if node ``n`` is irregular, else ``None``."""
        return self._lookup.get(n)

    def is_irregular(self, n: int) -> bool:
        return n in self._lookup

    @property
    def n_irregular(self) -> int:
        return len(self.node_of_interface)


def _check_cell_size(mesh: TimeMesh, partition: ControlPartition) -> None:
    if partition.t_final != mesh.t_final:
        raise ConfigurationError("mesh and partition have different horizons", section="mesh")
    lengths = partition.lengths
    bad = np.flatnonzero(lengths <= mesh.dt)
    if bad.size:
        i = int(bad[0])
        a, b = partition.breakpoints[i], partition.breakpoints[i + 1]
        raise ConfigurationError(
            f"interval {i} [{a:g}, {b:g}] has length {b - a:g} ≤ dt={mesh.dt:g}; "
            "raise N_t so each cell holds at most one interface",
            section="mesh",
        )


def classify_forward(mesh: TimeMesh, partition: ControlPartition) -> PointClassification:
    # node n is irregular iff t_n <= alpha < t_{n+1}
    _check_cell_size(mesh, partition)
    nodes = np.searchsorted(mesh.nodes, partition.interfaces, side="right") - 1
    return PointClassification("forward", tuple(int(n) for n in nodes), mesh.N_t)


def classify_backward(mesh: TimeMesh, partition: ControlPartition) -> PointClassification:
    # node n is irregular iff t_{n-1} < alpha <= t_n
    _check_cell_size(mesh, partition)
    nodes = np.searchsorted(mesh.nodes, partition.interfaces, side="left")
    return PointClassification("backward", tuple(int(n) for n in nodes), mesh.N_t)


def require_interior_nodes(mesh: TimeMesh, partition: ControlPartition, minimum: int = 2) -> None:
    """Every control interval must contain ``minimum`` nodes strictly inside it."""
    t = mesh.nodes
    lo = np.searchsorted(t, partition.tau[:-1], side="right")
    hi = np.searchsorted(t, partition.tau[1:], side="left")
    counts = hi - lo
    bad = np.flatnonzero(counts < minimum)
    if bad.size:
        i = int(bad[0])
        raise ConfigurationError(
            f"interval {i} holds {int(counts[i])} interior nodes, need {minimum}; raise N_t",
            section="mesh",
        )


# --------------------------------------------------------------------------
# interface modes and jump data
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class InterfaceMode:
    """How the zero-order jumps at the interfaces are obtained.

    ``continuous``
        jumps are zero (direct IIM).
    ``prescribed``
        jumps are given numbers.
    ``augmented``
        jumps are unknowns solved together with the grid values.
    """

    kind: str = "continuous"
    q: tuple | None = None

    def __post_init__(self):
        if self.kind not in ("continuous", "prescribed", "augmented"):
            raise ConfigurationError(f"unknown interface mode {self.kind!r}", section="solver")
        if (self.kind == "prescribed") != (self.q is not None):
            raise ConfigurationError("jumps are required exactly for prescribed mode",
                                     section="solver")
        if self.q is not None:
            object.__setattr__(self, "q", tuple(float(x) for x in self.q))

    @classmethod
    def continuous(cls) -> "InterfaceMode":
        return cls("continuous")

    @classmethod
    def prescribed(cls, q) -> "InterfaceMode":
        return cls("prescribed", tuple(np.ravel(q)))

    @classmethod
    def augmented(cls) -> "InterfaceMode":
        return cls("augmented")


def _fixed_jumps(mode: InterfaceMode, n_interfaces: int) -> np.ndarray | None:
    if mode.kind == "augmented":
        return None
    if mode.kind == "continuous":
        return np.zeros(n_interfaces)
    q = np.asarray(mode.q, dtype=float)
    if q.shape != (n_interfaces,):
        raise ValueError(f"{q.size} prescribed jumps given for {n_interfaces} interfaces")
    return q


@dataclass(frozen=True, eq=False)
class StateJumpData:
    """Jumps of ``T`` and ``T'`` across each interface.

    ``q`` is ``None`` in augmented mode. The derivative jump is always derived:
    ``[T'] = -K q + C [w] + [f]``.
    """

    K: float
    control_jump: np.ndarray
    forcing_jump: np.ndarray
    C: float
    q: np.ndarray | None = None

    @property
    def source_jump(self) -> np.ndarray:
        return self.C * self.control_jump + self.forcing_jump

    def derivative_jump(self, q=None) -> np.ndarray:
        q = self.q if q is None else np.asarray(q, dtype=float)
        if q is None:
            raise ValueError("augmented jumps are unknown until solved")
        return -self.K * q + self.source_jump


def state_jumps(spec: ProblemSpec, v, mode: InterfaceMode = InterfaceMode()) -> StateJumpData:
    part = spec.partition
    v = check_control(v, part.n_intervals)
    alphas = part.interfaces
    return StateJumpData(
        K=spec.K,
        C=spec.C,
        control_jump=np.diff(v),
        forcing_jump=np.array([spec.forcing.jump(a) for a in alphas]),
        q=_fixed_jumps(mode, alphas.size),
    )


@dataclass(frozen=True, eq=False)
class AdjointJumpData:
    """Backward jumps of ``lambda`` and ``lambda'``.

    The backward jump of a quantity is minus its ordinary jump, so
    ``q_lambda = lambda^- - lambda^+``. The derivative jump follows from the
    adjoint equation: ``K q_lambda - (q - [target]) - [g]_backward``.
    """

    K: float
    state_q: np.ndarray
    target_jump: np.ndarray
    source_backward_jump: np.ndarray
    q_lambda: np.ndarray | None = None

    @property
    def known_part(self) -> np.ndarray:
        return -(self.state_q - self.target_jump) - self.source_backward_jump

    def derivative_jump(self, q_lambda=None) -> np.ndarray:
        q_lambda = self.q_lambda if q_lambda is None else np.asarray(q_lambda, dtype=float)
        if q_lambda is None:
            raise ValueError("augmented jumps are unknown until solved")
        return self.K * q_lambda + self.known_part


def adjoint_jumps(spec: ProblemSpec, state_q, mode: InterfaceMode = InterfaceMode()) -> AdjointJumpData:
    alphas = spec.partition.interfaces
    state_q = np.asarray(state_q, dtype=float)
    if state_q.shape != alphas.shape:
        raise ValueError("state jumps do not match the partition")
    return AdjointJumpData(
        K=spec.K,
        state_q=state_q,
        target_jump=np.array([spec.target.jump(a) for a in alphas]),
        source_backward_jump=np.array([-spec.adjoint_source.jump(a) for a in alphas]),
        q_lambda=_fixed_jumps(mode, alphas.size),
    )
