"""Independent references for checking the solvers.

* the branchwise closed form of the alternating-control test problem,
  discontinuous at every switch;
* a continuity-matched RK4 integrator, one smooth piece at a time;
* forward-difference gradients of the discrete objective;
* manufactured adjoint solutions and their source terms;
* observed-order convergence tables.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .mesh import InterfaceMode, TimeMesh, build_mesh
from .objective import ReducedProblem
from .problem import Constant, PiecewiseFunction, ProblemSpec, ScalarField, Tabulated, check_control
from .state import TrajectorySolution


# --------------------------------------------------------------------------
# closed form for the alternating control
# --------------------------------------------------------------------------


def closed_form_field(spec: ProblemSpec) -> PiecewiseFunction:
    """Closed form with control ``(1, 0, 1, ...)`` and zero forcing.

    Every branch is the solution started from ``T_0`` at ``t = 0`` as if its
    interval's control value had held all along, so the branches disagree at
    each switch.
    """
    if not (isinstance(spec.forcing, Constant) and spec.forcing.value == 0.0):
        raise ValueError("closed form needs zero forcing")
    K, C, T0, Ts = spec.K, spec.C, spec.T_0, spec.T_s

    def on(t):
        e = np.exp(-K * t)
        return T0 * e + Ts * (1 - e) + C / K * (1 - e)

    def off(t):
        e = np.exp(-K * t)
        return T0 * e + Ts * (1 - e)

    def d_on(t):
        return np.exp(-K * t) * (-K * T0 + K * Ts + C)

    def d_off(t):
        return np.exp(-K * t) * (-K * T0 + K * Ts)

    n = spec.N
    funcs = tuple(on if p % 2 == 0 else off for p in range(n))
    derivs = tuple(d_on if p % 2 == 0 else d_off for p in range(n))
    return PiecewiseFunction(funcs, spec.partition.breakpoints, derivs)


def closed_form_solution(spec: ProblemSpec, t, side: str = "left"):
    return closed_form_field(spec)(t, side)


def closed_form_jumps(spec: ProblemSpec) -> np.ndarray:
    exact = closed_form_field(spec)
    return np.array([exact.jump(a) for a in spec.partition.interfaces])


# --------------------------------------------------------------------------
# continuity-matched RK4 reference
# --------------------------------------------------------------------------


def _on_piece(f: ScalarField, lo: float, hi: float):
    """Evaluate ``f`` using the smooth branch of ``[lo, hi]``, endpoints included."""
    mid = 0.5 * (lo + hi)

    def g(t):
        t = np.asarray(t, dtype=float)
        return np.where(t <= mid, f(t, "right"), f(t, "left"))

    return g


def reference_integrator(spec: ProblemSpec, v, mesh: TimeMesh,
                         fine_factor: int = 16) -> TrajectorySolution:
    """Classical RK4 on each control interval, restarted continuously at switches.

    Every gap between consecutive mesh nodes (or node and breakpoint) is
    split into ``fine_factor`` RK4 steps. Values are returned at the mesh nodes;
    a node on an interior breakpoint gets the left limit.
    """
    v = check_control(v, spec.N)
    K, t_nodes = spec.K, mesh.nodes
    tau = spec.partition.tau
    out = np.empty(t_nodes.size)
    u = spec.T_0 - spec.T_s
    out[0] = u

    for p in range(spec.N):
        lo, hi = tau[p], tau[p + 1]
        inside = np.flatnonzero((t_nodes > lo) & (t_nodes < hi))
        anchors = np.concatenate([[lo], t_nodes[inside], [hi]])
        frac = np.arange(fine_factor) / fine_factor
        fine = (anchors[:-1, None] + np.diff(anchors)[:, None] * frac[None, :]).ravel()
        fine = np.append(fine, hi)
        h = np.diff(fine)
        forcing = _on_piece(spec.forcing, lo, hi)
        src0 = spec.C * v[p] + forcing(fine[:-1])
        srch = spec.C * v[p] + forcing(fine[:-1] + 0.5 * h)
        src1 = spec.C * v[p] + forcing(fine[1:])

        values = np.empty(fine.size)
        values[0] = u
        for k in range(h.size):
            hk, y = h[k], values[k]
            k1 = -K * y + src0[k]
            k2 = -K * (y + 0.5 * hk * k1) + srch[k]
            k3 = -K * (y + 0.5 * hk * k2) + srch[k]
            k4 = -K * (y + hk * k3) + src1[k]
            values[k + 1] = y + hk / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        u = values[-1]

        out[inside] = values[fine_factor * np.arange(1, inside.size + 1)]
        end = np.flatnonzero(t_nodes == hi)
        if end.size:
            out[end] = u

    return TrajectorySolution(mesh, out + spec.T_s, np.zeros(spec.N - 1), "forward")


# --------------------------------------------------------------------------
# gradient oracle
# --------------------------------------------------------------------------


def finite_difference_gradient(spec: ProblemSpec, mesh: TimeMesh, v, eps: float = 1e-6,
                               scheme: str = "iim",
                               mode: InterfaceMode = InterfaceMode()) -> np.ndarray:
    """Forward differences ``(J(v + eps e_i) - J(v)) / eps`` of the discrete objective."""
    if not eps > 0:
        raise ValueError("eps must be > 0")
    v = check_control(v, spec.N)
    problem = ReducedProblem(spec, mesh, scheme=scheme, mode=mode)
    J0 = problem.objective(v)
    grad = np.empty(spec.N)
    for i in range(spec.N):
        probe = v.copy()
        probe[i] += eps
        grad[i] = (problem.objective(probe) - J0) / eps
    return grad


# --------------------------------------------------------------------------
# manufactured adjoint solutions
# --------------------------------------------------------------------------


def manufactured_adjoint(spec: ProblemSpec, offsets: Sequence[float] | None = None,
                         amplitude: float = 1.0) -> PiecewiseFunction:
    """``amplitude * (t_final - t) cos(t) / t_final + offsets[p]`` on interval ``p``.

    The last offset must be zero so the terminal condition holds. By default
    offsets alternate ``+-1/2`` and the last is zero, giving a jump at every
    interface.
    """
    n, tf = spec.N, spec.t_final
    if offsets is None:
        offsets = [0.5 * (-1) ** p for p in range(n - 1)] + [0.0]
    offsets = [float(b) for b in offsets]
    if len(offsets) != n:
        raise ValueError("need one offset per interval")

    def make(b):
        return (lambda t: amplitude * (tf - t) * np.cos(t) / tf + b)

    def deriv(t):
        return amplitude * (-np.cos(t) - (tf - t) * np.sin(t)) / tf

    return PiecewiseFunction(tuple(make(b) for b in offsets), spec.partition.breakpoints,
                             tuple(deriv for _ in offsets))


def backward_jumps(lam: ScalarField, spec: ProblemSpec) -> np.ndarray:
    """``lambda^- - lambda^+`` at every interface."""
    return np.array([-lam.jump(a) for a in spec.partition.interfaces])


def mms_source(spec: ProblemSpec, lam_m: PiecewiseFunction,
               state: TrajectorySolution | ScalarField) -> PiecewiseFunction:
    """Source ``g = -lam_m' + K lam_m + (T - target)`` making ``lam_m`` exact.

    ``state`` may be a trajectory, which is then read piecewise-linearly
    within each control interval.
    """
    if abs(lam_m(spec.t_final, "left")) > 1e-12:
        raise ValueError("manufactured adjoint must vanish at t_final")
    if isinstance(state, TrajectorySolution):
        state = Tabulated(tuple(state.mesh.nodes), tuple(state.values),
                          spec.partition.breakpoints)
    tau = spec.partition.tau
    K = spec.K

    def make(p):
        lam = _on_piece(lam_m, tau[p], tau[p + 1])
        T = _on_piece(state, tau[p], tau[p + 1])
        target = _on_piece(spec.target, tau[p], tau[p + 1])
        dlam = lam_m.derivatives[p]
        return lambda t: -dlam(t) + K * lam(t) + T(t) - target(t)

    return PiecewiseFunction(tuple(make(p) for p in range(spec.N)), spec.partition.breakpoints)


# --------------------------------------------------------------------------
# convergence studies
# --------------------------------------------------------------------------


@dataclass
class ConvergenceReport:
    levels: list = field(default_factory=list)
    errors: list = field(default_factory=list)

    @property
    def orders(self) -> list:
        """Observed order per level; ``None`` for the first."""
        out = [None]
        for k in range(1, len(self.errors)):
            e0, e1 = self.errors[k - 1], self.errors[k]
            ratio = self.levels[k] / self.levels[k - 1]
            out.append(math.log(e0 / e1) / math.log(ratio) if e0 > 0 and e1 > 0 else None)
        return out

    @property
    def mean_order(self) -> float | None:
        orders = [o for o in self.orders[1:] if o is not None]
        return sum(orders) / len(orders) if orders else None

    def rows(self):
        return list(zip(self.levels, self.errors, self.orders))


def max_node_error(numerical, reference) -> float:
    numerical = numerical.values if isinstance(numerical, TrajectorySolution) else numerical
    reference = reference.values if isinstance(reference, TrajectorySolution) else reference
    return float(np.max(np.abs(np.asarray(numerical) - np.asarray(reference))))


def convergence_study(solve: Callable[[TimeMesh], TrajectorySolution | np.ndarray],
                      reference: Callable[[TimeMesh], np.ndarray],
                      levels: Sequence[int], t_final: float) -> ConvergenceReport:
    """Max-node error of ``solve(mesh)`` against ``reference(mesh)`` on each level."""
    report = ConvergenceReport()
    for N_t in levels:
        mesh = build_mesh(t_final, N_t)
        report.levels.append(int(N_t))
        report.errors.append(max_node_error(solve(mesh), reference(mesh)))
    return report
