"""Steepest-descent trust region over binary controls.

The model at ``v`` is linear, ``J + g^T (vhat - v)``, and the trust region is
a Hamming ball, so the subproblem is a cardinality-constrained knapsack that
greedy selection solves exactly: each flip changes the model by an
independent amount and the budget only limits how many flips are taken.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Protocol

import numpy as np

from .errors import ConfigurationError
from .problem import check_control, check_relaxed


class Evaluator(Protocol):
    def objective(self, v: np.ndarray) -> float: ...

    def gradient(self, v: np.ndarray) -> np.ndarray: ...


@dataclass(frozen=True)
class OptimizerConfig:
    initial_radius: int | None = None      # None -> max(1, N // 10)
    rho_bar: float = 0.75
    max_iterations: int = 1000
    relax_step: float | None = None        # None -> 1 / max|g| at the start point
    relax_tol: float = 1e-6
    relax_max_iterations: int = 200
    rounding_threshold: float = 0.5

    def __post_init__(self):
        if self.initial_radius is not None and (int(self.initial_radius) != self.initial_radius
                                                or self.initial_radius < 1):
            raise ConfigurationError("initial_radius must be an integer ≥ 1", section="optimizer")
        if not 0.0 < self.rho_bar < 1.0:
            raise ConfigurationError("rho_bar must lie in (0, 1)", section="optimizer")
        if not 0.0 < self.rounding_threshold <= 1.0:
            raise ConfigurationError("rounding_threshold must lie in (0, 1]", section="optimizer")
        if self.max_iterations < 1 or self.relax_max_iterations < 0:
            raise ConfigurationError("iteration caps must be positive", section="optimizer")
        if self.relax_step is not None and not self.relax_step > 0:
            raise ConfigurationError("relax_step must be > 0", section="optimizer")

    def radius_for(self, n: int) -> int:
        if self.initial_radius is not None:
            return int(self.initial_radius)
        return max(1, n // 10)


# --------------------------------------------------------------------------
# subproblem and radius logic
# --------------------------------------------------------------------------


def flip_costs(g: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Model change from flipping each entry: ``g_i`` up, ``-g_i`` down."""
    return np.where(v == 0, g, -g)


def knapsack_step(g, v, delta: int) -> np.ndarray:
    """Exact minimizer of ``g^T (vhat - v)`` over binary ``vhat`` with ``|vhat - v|_1 <= delta``.

    Takes at most ``delta`` strictly improving flips, most negative first,
    ties to the lower index.
    """
    g = np.asarray(g, dtype=float)
    v = check_control(v, g.size, binary=True)
    if delta < 0:
        raise ValueError("radius must be ≥ 0")
    cost = flip_costs(g, v)
    order = np.argsort(cost, kind="stable")
    chosen = order[: int(delta)]
    chosen = chosen[cost[chosen] < 0]
    vhat = v.copy()
    vhat[chosen] = 1.0 - vhat[chosen]
    return vhat


def update_radius(delta: int, rho: float, step_l1: int, rho_bar: float) -> tuple[int, bool]:
    """Return ``(new_radius, accepted)`` for one trust-region decision."""
    if rho > rho_bar:
        return (2 * delta if step_l1 == delta else delta), True
    if rho > 0:
        return delta, True
    return delta // 2, False


# --------------------------------------------------------------------------
# trust-region loop
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class TraceRow:
    k: int
    delta: int
    objective: float
    rho: float
    accepted: bool
    step_l1: int


@dataclass
class TrustRegionResult:
    control: np.ndarray
    objective_initial: float
    objective_final: float
    iterations: int
    termination_reason: str
    trace: list = field(default_factory=list)

    @property
    def truncated(self) -> bool:
        return self.termination_reason == "max_iterations"

    @property
    def percent_reduction(self) -> float:
        if self.objective_initial == 0:
            return 0.0
        return 100.0 * (self.objective_initial - self.objective_final) / self.objective_initial


def trust_region_solve(problem: Evaluator, v0, config: OptimizerConfig = OptimizerConfig(),
                       callback=None) -> TrustRegionResult:
    """Binary steepest-descent trust region.

    Stops when the radius drops below one, when the subproblem returns the
    current point (no flip improves the linear model, so ``v`` is first-order
    optimal over the Hamming ball) or when ``max_iterations`` subproblems have
    been solved.
    """
    v = np.asarray(v0, dtype=float).copy()
    check_control(v, v.size, binary=True)
    delta = config.radius_for(v.size)
    J = problem.objective(v)
    g = problem.gradient(v)
    result = TrustRegionResult(v, J, J, 0, "radius_below_one")

    k = 0
    while delta >= 1:
        if k >= config.max_iterations:
            result.termination_reason = "max_iterations"
            break
        vhat = knapsack_step(g, v, delta)
        predicted = -float(g @ (vhat - v))
        if predicted <= 0.0:
            result.trace.append(TraceRow(k, delta, J, math.nan, False, 0))
            result.termination_reason = "zero_predicted_reduction"
            k += 1
            break
        J_hat = problem.objective(vhat)
        rho = (J - J_hat) / predicted
        step = int(round(np.abs(vhat - v).sum()))
        new_delta, accepted = update_radius(delta, rho, step, config.rho_bar)
        result.trace.append(TraceRow(k, delta, J, rho, accepted, step))
        if callback is not None:
            callback(result.trace[-1])
        if accepted:
            v, J = vhat, J_hat
            g = problem.gradient(v)
        delta = new_delta
        k += 1

    result.control = v
    result.objective_final = J
    result.iterations = k
    return result


# --------------------------------------------------------------------------
# relaxation and rounding
# --------------------------------------------------------------------------


def projected_gradient_norm(v: np.ndarray, g: np.ndarray) -> float:
    return float(np.max(np.abs(v - np.clip(v - g, 0.0, 1.0)), initial=0.0))


def relaxation_solve(problem: Evaluator, n: int,
                     config: OptimizerConfig = OptimizerConfig()) -> np.ndarray:
    """Projected gradient with Armijo backtracking on the box ``[0, 1]^n``.

    Starts from ``v = 1/2``. The step grows by two after each accepted
    iteration and halves during backtracking; the loop ends on a small
    projected gradient, the iteration cap, or a failed line search.
    """
    v = np.full(n, 0.5)
    J = problem.objective(v)
    g = problem.gradient(v)
    gmax = float(np.max(np.abs(g), initial=0.0))
    if gmax == 0.0:
        return v
    step = config.relax_step if config.relax_step is not None else 1.0 / gmax

    for _ in range(config.relax_max_iterations):
        if projected_gradient_norm(v, g) <= config.relax_tol:
            break
        for _ in range(60):
            trial = np.clip(v - step * g, 0.0, 1.0)
            J_trial = problem.objective(trial)
            if J_trial <= J - 1e-4 * float(g @ (v - trial)):
                break
            step *= 0.5
        else:
            break
        v, J = trial, J_trial
        g = problem.gradient(v)
        step *= 2.0
    return check_relaxed(v, n)


def round_relaxation(v, threshold: float = 0.5) -> np.ndarray:
    """Entries below ``threshold`` go to 0, the rest to 1."""
    if not 0.0 < threshold <= 1.0:
        raise ValueError("threshold must lie in (0, 1]")
    v = np.asarray(v, dtype=float)
    return np.where(v < threshold, 0.0, 1.0)
