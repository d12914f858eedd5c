"""Forward solvers for the state equation ``T' = -K (T - T_s) + C w + f``.

Regular nodes use explicit Euler. At an irregular node ``n`` (the cell
``[t_n, t_n+1)`` contains interface ``alpha``) the update gains the correction
``dt * Cbar`` with ``Cbar = (q + [T'] (t_n - alpha)) / dt``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import spsolve

from . import _recurrence
from .mesh import (
    InterfaceMode,
    StateJumpData,
    TimeMesh,
    classify_forward,
    require_interior_nodes,
    state_jumps,
)
from .problem import ProblemSpec, check_control

# Euler coefficients on (T^{n+1}, T^n); they solve c1 + c2 = 0 and
# c1 (t_{n+1} - alpha) + c2 (t_n - alpha) = 1 for any alpha in the cell.
STATE_COEFFICIENTS = (1.0, -1.0)     # times 1/dt
ADJOINT_COEFFICIENTS = (-1.0, 1.0)   # on (lambda^n, lambda^{n-1}), times 1/dt


@dataclass(frozen=True, eq=False)
class TrajectorySolution:
    """Node values of the state (forward) or adjoint (backward) plus interface jumps."""

    mesh: TimeMesh
    values: np.ndarray
    augmented: np.ndarray
    direction: str = "forward"

    @property
    def t(self) -> np.ndarray:
        return self.mesh.nodes


def correction_term_state(spec: ProblemSpec, jumps: StateJumpData, i: int, t_n: float,
                          dt: float) -> float:
    """Correction at the irregular node ``t_n`` for interface ``i`` (0-based)."""
    alpha = spec.partition.interfaces[i]
    q = jumps.q[i]
    d = jumps.derivative_jump()[i]
    return (q + d * (t_n - alpha)) / dt


def _node_sources(spec: ProblemSpec, v: np.ndarray, mesh: TimeMesh) -> np.ndarray:
    """``dt * (C w^n + f^n)`` for n = 0..N_t-1, left convention on breakpoints."""
    t = mesh.nodes[:-1]
    w = v[spec.partition.interval_index(t, "left")]
    return mesh.dt * (spec.C * w + spec.forcing(t, "left"))


def solve_state_euler(spec: ProblemSpec, v, mesh: TimeMesh) -> TrajectorySolution:
    """Plain forward Euler with no interface corrections."""
    v = check_control(v, spec.N)
    r = _node_sources(spec, v, mesh)
    u = _recurrence.march(1.0 - spec.K * mesh.dt, r, spec.T_0 - spec.T_s)
    return TrajectorySolution(mesh, u + spec.T_s, np.zeros(spec.N - 1), "forward")


def solve_state_iim(spec: ProblemSpec, v, mesh: TimeMesh,
                    mode: InterfaceMode = InterfaceMode()) -> TrajectorySolution:
    """Immersed-interface Euler march.

    Continuous and prescribed modes march directly since every correction is a
    known number; augmented mode also solves for the jumps ``q``.
    """
    v = check_control(v, spec.N)
    cls = classify_forward(mesh, spec.partition)
    jumps = state_jumps(spec, v, mode)
    dt = mesh.dt
    a = 1.0 - spec.K * dt
    r = _node_sources(spec, v, mesh)
    n_irr = cls.nodes
    offset = mesh.nodes[n_irr] - spec.partition.interfaces      # t_n - alpha <= 0

    if mode.kind == "augmented":
        require_interior_nodes(mesh, spec.partition)
        r[n_irr] += jumps.source_jump * offset
        coeff = 1.0 - spec.K * offset
        u, q = _recurrence.solve_augmented(a, r, spec.T_0 - spec.T_s, n_irr, coeff, -offset / dt)
    else:
        q = jumps.q
        r[n_irr] += q + jumps.derivative_jump() * offset
        u = _recurrence.march(a, r, spec.T_0 - spec.T_s)
    return TrajectorySolution(mesh, u + spec.T_s, np.asarray(q, dtype=float), "forward")


@dataclass(frozen=True, eq=False)
class BlockSystem:
    """``[[A, B], [C, D]] [x; q] = [S_x; S_q]`` for augmented IIM."""

    A: sp.csr_matrix
    B: sp.csr_matrix
    C: sp.csr_matrix
    D: sp.csr_matrix
    S_x: np.ndarray
    S_q: np.ndarray

    def matrix(self) -> sp.csr_matrix:
        return sp.bmat([[self.A, self.B], [self.C, self.D]], format="csr")

    def rhs(self) -> np.ndarray:
        return np.concatenate([self.S_x, self.S_q])

    def solve(self):
        """Direct sparse solve; returns ``(x, q)``."""
        n = self.A.shape[0]
        sol = spsolve(self.matrix().tocsc(), self.rhs())
        return sol[:n], sol[n:]


def _assemble(a, r, x0, marks, coeffs, thetas, n_q):
    """Block system for ``x[k+1] - a x[k] - c_i q_i [k = m_i] = r[k]`` plus closures."""
    n = r.size + 1
    k = np.arange(r.size)
    A = sp.coo_matrix(
        (np.concatenate([[1.0], np.ones(r.size), np.full(r.size, -a)]),
         (np.concatenate([[0], k + 1, k + 1]), np.concatenate([[0], k + 1, k]))),
        shape=(n, n),
    )
    marks = np.asarray(marks, dtype=int)
    B = sp.coo_matrix((-np.asarray(coeffs, float), (marks + 1, np.arange(n_q))), shape=(n, n_q))
    w = _recurrence.closure_weights(thetas)
    rows = np.repeat(np.arange(n_q), 4)
    cols = (marks[:, None] + np.arange(-1, 3)[None, :]).ravel()
    C = sp.coo_matrix((-w.ravel(), (rows, cols)), shape=(n_q, n))
    D = sp.identity(n_q, format="csr")
    S_x = np.concatenate([[x0], r])
    return BlockSystem(A.tocsr(), B.tocsr(), C.tocsr(), D, S_x, np.zeros(n_q))


def assemble_state_system(spec: ProblemSpec, v, mesh: TimeMesh) -> BlockSystem:
    """Augmented state system in the unknowns ``[T^0..T^{N_t}; q_1..q_{N-1}]``.

    Row 0 fixes ``T^0``; row ``n+1`` is the update out of node ``n`` with the
    correction written as an affine function of ``q``; the lower block closes
    each ``q_i`` as the difference of two-node extrapolations of ``T`` from
    either side of the interface.
    """
    v = check_control(v, spec.N)
    cls = classify_forward(mesh, spec.partition)
    require_interior_nodes(mesh, spec.partition)
    jumps = state_jumps(spec, v, InterfaceMode.augmented())
    dt = mesh.dt
    r = _node_sources(spec, v, mesh) + dt * spec.K * spec.T_s
    n_irr = cls.nodes
    offset = mesh.nodes[n_irr] - spec.partition.interfaces
    r[n_irr] += jumps.source_jump * offset
    return _assemble(1.0 - spec.K * dt, r, spec.T_0, n_irr, 1.0 - spec.K * offset,
                     -offset / dt, spec.N - 1)
