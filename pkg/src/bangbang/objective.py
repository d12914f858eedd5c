"""Trapezoid objective, adjoint gradient and the reduced-space evaluator."""
from __future__ import annotations

import numpy as np

from .adjoint import solve_adjoint_iim
from .mesh import InterfaceMode, TimeMesh, require_interior_nodes
from .problem import ControlPartition, ProblemSpec, check_control
from .state import TrajectorySolution, solve_state_euler, solve_state_iim


def trapezoid(y: np.ndarray, dt: float) -> float:
    return float(dt * (y.sum() - 0.5 * (y[0] + y[-1])))


def evaluate_objective(spec: ProblemSpec, state: TrajectorySolution) -> float:
    """``sum dt/2 (fhat(t_{n-1}) + fhat(t_n))`` with ``fhat = (T - target)^2 / 2``."""
    t = state.mesh.nodes
    misfit = state.values - spec.target(t, "left")
    return trapezoid(0.5 * misfit**2, state.mesh.dt)


def evaluate_gradient(spec: ProblemSpec, v, adjoint: TrajectorySolution,
                      partition: ControlPartition | None = None) -> np.ndarray:
    """Trapezoid rule for ``-C * integral of lambda over each control interval``.

    Each interval uses the nodes strictly inside it plus its two endpoints.
    Interior breakpoints generally fall between nodes, so the one-sided value
    there is extrapolated linearly from the two nearest nodes inside the
    interval. The domain ends are nodes and use the node values.
    """
    partition = spec.partition if partition is None else partition
    check_control(v, partition.n_intervals)
    mesh = adjoint.mesh
    require_interior_nodes(mesh, partition)
    t, lam, dt = mesh.nodes, adjoint.values, mesh.dt
    tau = partition.tau

    lo = np.searchsorted(t, tau[:-1], side="right")      # first node inside
    hi = np.searchsorted(t, tau[1:], side="left") - 1    # last node inside
    cells = 0.5 * dt * (lam[:-1] + lam[1:])
    csum = np.concatenate([[0.0], np.cumsum(cells)])
    inner = csum[hi] - csum[lo]

    left = lam[lo] + (lam[lo + 1] - lam[lo]) * (tau[:-1] - t[lo]) / dt
    right = lam[hi] + (lam[hi] - lam[hi - 1]) * (tau[1:] - t[hi]) / dt
    left[0], right[-1] = lam[0], lam[-1]
    head = 0.5 * (t[lo] - tau[:-1]) * (left + lam[lo])
    tail = 0.5 * (tau[1:] - t[hi]) * (lam[hi] + right)
    return -spec.C * (head + inner + tail)


class ReducedProblem:
    """Objective and gradient as functions of the control alone.

    Each call solves the state (and for gradients the adjoint) on a fixed
    mesh. The most recent state is cached, since the optimizer asks for the
    gradient at a point whose objective it has just evaluated.
    """

    def __init__(self, spec: ProblemSpec, mesh: TimeMesh, scheme: str = "iim",
                 mode: InterfaceMode = InterfaceMode()):
        if scheme not in ("iim", "euler"):
            raise ValueError(f"unknown scheme {scheme!r}")
        self.spec = spec
        self.mesh = mesh
        self.scheme = scheme
        self.mode = mode
        self.state_solves = 0
        self.adjoint_solves = 0
        self._cache_key = None
        self._cache_state = None

    @property
    def n(self) -> int:
        return self.spec.N

    def state(self, v) -> TrajectorySolution:
        v = check_control(v, self.spec.N)
        key = v.tobytes()
        if key != self._cache_key:
            if self.scheme == "euler":
                sol = solve_state_euler(self.spec, v, self.mesh)
            else:
                sol = solve_state_iim(self.spec, v, self.mesh, self.mode)
            self.state_solves += 1
            self._cache_key, self._cache_state = key, sol
        return self._cache_state

    def adjoint(self, v) -> TrajectorySolution:
        state = self.state(v)
        self.adjoint_solves += 1
        mode = self.mode if self.mode.kind != "prescribed" else InterfaceMode.continuous()
        return solve_adjoint_iim(self.spec, v, self.mesh, state, mode)

    def objective(self, v) -> float:
        return evaluate_objective(self.spec, self.state(v))

    def gradient(self, v) -> np.ndarray:
        return evaluate_gradient(self.spec, v, self.adjoint(v))
