"""Backward solver for the adjoint ``-lambda' = -K lambda - (T - T_target) + g``, ``lambda(t_final) = 0``.

The difference quotient ``(lambda^{n-1} - lambda^n) / dt`` approximates
``-lambda'`` at ``t_n``, i.e. the weights ``(-1/dt, 1/dt)`` on
``(lambda^n, lambda^{n-1})``. A backward-irregular node ``n`` (cell
``(t_{n-1}, t_n]`` holds ``alpha``) adds
``Cbar = (q_lambda + [lambda']_back (t_{n-1} - alpha)) / dt``.
"""
from __future__ import annotations

import numpy as np

from . import _recurrence
from .mesh import (
    AdjointJumpData,
    InterfaceMode,
    StateJumpData,
    TimeMesh,
    adjoint_jumps,
    classify_backward,
    require_interior_nodes,
)
from .problem import ProblemSpec, check_control
from .state import BlockSystem, TrajectorySolution, _assemble


def correction_term_adjoint(spec: ProblemSpec, adj_jumps: AdjointJumpData,
                            state_jumps: StateJumpData | None, i: int, t_prev: float,
                            dt: float) -> float:
    """Correction at a backward-irregular node; ``t_prev`` is ``t_{n-1}``.

    ``state_jumps`` is accepted for symmetry with the state side; the state jump
    already lives in ``adj_jumps.state_q``.
    """
    alpha = spec.partition.interfaces[i]
    return (adj_jumps.q_lambda[i] + adj_jumps.derivative_jump()[i] * (t_prev - alpha)) / dt


def _check_state(mesh: TimeMesh, state: TrajectorySolution) -> None:
    if state.direction != "forward":
        raise ValueError("adjoint needs a forward state trajectory")
    if state.mesh.N_t != mesh.N_t or state.mesh.t_final != mesh.t_final:
        raise ValueError(
            f"state mesh (N_t={state.mesh.N_t}) does not match adjoint mesh (N_t={mesh.N_t})"
        )


def _reversed_sources(spec, mesh, state):
    """``dt * (-(T^n - That^n) + g^n)`` for n = N_t, ..., 1."""
    t = mesh.nodes[:0:-1]
    T = state.values[:0:-1]
    return mesh.dt * (-(T - spec.target(t, "left")) + spec.adjoint_source(t, "left"))


def _setup(spec, v, mesh, state, mode):
    check_control(v, spec.N)
    _check_state(mesh, state)
    cls = classify_backward(mesh, spec.partition)
    jumps = adjoint_jumps(spec, state.augmented, mode)
    n_irr = cls.nodes
    marks = mesh.N_t - n_irr
    offset = mesh.nodes[n_irr - 1] - spec.partition.interfaces     # t_{n-1} - alpha < 0
    theta = (mesh.nodes[n_irr] - spec.partition.interfaces) / mesh.dt
    return jumps, marks, offset, theta


def solve_adjoint_iim(spec: ProblemSpec, v, mesh: TimeMesh, state: TrajectorySolution,
                      mode: InterfaceMode = InterfaceMode()) -> TrajectorySolution:
    jumps, marks, offset, theta = _setup(spec, v, mesh, state, mode)
    a = 1.0 - spec.K * mesh.dt
    r = _reversed_sources(spec, mesh, state)

    if mode.kind == "augmented":
        require_interior_nodes(mesh, spec.partition)
        r[marks] += jumps.known_part * offset
        coeff = 1.0 + spec.K * offset
        y, q_lam = _recurrence.solve_augmented(a, r, 0.0, marks, coeff, theta)
    else:
        q_lam = jumps.q_lambda
        r[marks] += q_lam + jumps.derivative_jump() * offset
        y = _recurrence.march(a, r, 0.0)
    return TrajectorySolution(mesh, y[::-1].copy(), np.asarray(q_lam, dtype=float), "backward")


def assemble_adjoint_system(spec: ProblemSpec, v, mesh: TimeMesh,
                            state: TrajectorySolution) -> BlockSystem:
    """Augmented adjoint system; unknown ``k`` is ``lambda(t_{N_t - k})``."""
    jumps, marks, offset, theta = _setup(spec, v, mesh, state, InterfaceMode.augmented())
    require_interior_nodes(mesh, spec.partition)
    r = _reversed_sources(spec, mesh, state)
    r[marks] += jumps.known_part * offset
    return _assemble(1.0 - spec.K * mesh.dt, r, 0.0, marks, 1.0 + spec.K * offset, theta,
                     spec.N - 1)
