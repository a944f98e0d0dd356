"""Resource-aware filter evaluation and the sample-and-hold simulator.

At each sample the cached active set is tested first; the oracle is invoked
only when the state has left that set's region.
"""
from __future__ import annotations

import csv
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .frontend import FilterProblem, assemble
from .oracle import SolveResult, Status, theta_active_set, theta_enumerate
from .qp_core import ActiveSet
from .region import Reason, membership


class InfeasibleError(RuntimeError):
    def __init__(self, message, step=None, status=Status.INFEASIBLE):
        super().__init__(message)
        self.step = step
        self.status = status


class NonFiniteState(FloatingPointError):
    def __init__(self, step):
        super().__init__(f"state became non-finite at step {step}")
        self.step = step


@dataclass
class FilterState:
    cached_set: ActiveSet = ()
    theta_calls: int = 0
    total_steps: int = 0
    last_reason: Reason | None = None


def previous_set(state: FilterState, x, t) -> ActiveSet:
    return state.cached_set


def resolve_theta(theta) -> Callable:
    """Map an oracle selector to ``f(constraints, nominal, weight, warm) -> SolveResult``."""
    if callable(theta):
        return theta
    if theta == "activeset":
        return lambda cs, k, W, warm: theta_active_set(cs, k, W, warm)
    if theta == "enumerate":
        return lambda cs, k, W, warm: theta_enumerate(cs, k, W)
    raise ValueError(f"unknown oracle {theta!r}")


@dataclass(frozen=True)
class StepResult:
    control: np.ndarray
    active_set: ActiveSet
    theta_called: bool
    reason: Reason


def step(state: FilterState, problem: FilterProblem, x, t: float = 0.0, theta="activeset",
         guess: Callable = previous_set) -> tuple:
    """One evaluation of the resource-aware filter.

    Updates ``state`` in place and returns ``(u, state)``. The decision vector
    ``u`` includes slack components when the problem is slacked.
    """
    res = step_detail(state, problem, x, t, theta, guess)
    return res.control, state


def step_detail(state: FilterState, problem: FilterProblem, x, t: float = 0.0,
                theta="activeset", guess: Callable = previous_set) -> StepResult:
    cs, k, W = assemble(problem, x, t)
    I = tuple(guess(state, x, t))
    check = membership(cs, k, W, I)
    state.total_steps += 1
    state.last_reason = check.reason
    if check.in_region:
        state.cached_set = I
        return StepResult(check.candidate.control, I, False, check.reason)
    result: SolveResult = resolve_theta(theta)(cs, k, W, I)
    state.theta_calls += 1
    if not result.optimal:
        raise InfeasibleError(f"oracle returned {result.status.value} at t={t:.6g}",
                              status=result.status)
    state.cached_set = result.active_set
    return StepResult(result.control, result.active_set, True, check.reason)


class ResourceAwareFilter:
    """Stateful wrapper: one instance per trajectory, not thread-safe."""

    def __init__(self, problem: FilterProblem, theta="activeset", guess: Callable = previous_set):
        self.problem = problem
        self.theta = theta
        self.guess = guess
        self.state = FilterState()

    def reset(self):
        self.state = FilterState()

    def __call__(self, x, t: float = 0.0) -> StepResult:
        return step_detail(self.state, self.problem, x, t, self.theta, self.guess)


def fresh_solve(problem: FilterProblem, x, t: float = 0.0, theta="activeset") -> SolveResult:
    """Unconditional full solve with no cached information."""
    cs, k, W = assemble(problem, x, t)
    return resolve_theta(theta)(cs, k, W, ())


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    controls: np.ndarray
    active_sets: list
    theta_flags: np.ndarray
    barrier_values: np.ndarray
    m: int
    dt: float
    final_state: np.ndarray | None = None
    inter_sample_min: np.ndarray | None = None
    eval_seconds: np.ndarray | None = None
    theta_calls: int = 0
    extra: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.times)

    @property
    def inputs(self) -> np.ndarray:
        return self.controls[:, : self.m]

    def to_csv(self, path) -> None:
        """Columns ``t, x_*, u_*, h_*, active_set, theta_called``."""
        n = self.states.shape[1]
        p = self.barrier_values.shape[1]
        header = (["t"] + [f"x_{i}" for i in range(n)] + [f"u_{i}" for i in range(self.m)]
                  + [f"h_{i}" for i in range(p)] + ["active_set", "theta_called"])
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for k in range(len(self)):
                w.writerow([repr(float(self.times[k]))]
                           + [repr(float(v)) for v in self.states[k]]
                           + [repr(float(v)) for v in self.controls[k, : self.m]]
                           + [repr(float(v)) for v in self.barrier_values[k]]
                           + [";".join(str(i) for i in self.active_sets[k]),
                              int(self.theta_flags[k])])


def rk4_step(fun, x, t, dt):
    """Classic RK4 step; also returns the stage states for diagnostics."""
    k1 = fun(x, t)
    x2 = x + 0.5 * dt * k1
    k2 = fun(x2, t + 0.5 * dt)
    x3 = x + 0.5 * dt * k2
    k3 = fun(x3, t + 0.5 * dt)
    x4 = x + dt * k3
    k4 = fun(x4, t + dt)
    return x + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4), (x2, x3, x4)


def euler_step(fun, x, t, dt):
    return x + dt * fun(x, t), ()


def simulate(problem: FilterProblem, x0, horizon: float, dt: float, integrator: str = "rk4",
             theta="activeset", controller: Callable | None = None) -> Trajectory:
    """Zero-order-hold closed loop.

    ``controller(x, t) -> StepResult`` defaults to a fresh
    :class:`ResourceAwareFilter`. Raises :class:`InfeasibleError` (with the
    step index) or :class:`NonFiniteState`.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    if horizon < dt * (1 - 1e-12):
        raise ValueError("horizon must be at least one sample period")
    integrate = {"rk4": rk4_step, "euler": euler_step}[integrator.lower()]
    ctrl = controller if controller is not None else ResourceAwareFilter(problem, theta)
    sys = problem.system
    steps = int(round(horizon / dt))
    x = np.array(x0, dtype=float)
    n, m, md, nb = sys.n, sys.m, problem.decision_dim, len(problem.barriers)
    times = np.arange(steps) * dt
    X = np.zeros((steps, n))
    U = np.zeros((steps, md))
    H = np.zeros((steps, nb))
    flags = np.zeros(steps, dtype=bool)
    inter = np.full(steps, np.inf)
    clock = np.zeros(steps)
    sets = []
    for k in range(steps):
        t = times[k]
        tic = time.perf_counter()
        try:
            res = ctrl(x, t)
        except InfeasibleError as exc:
            exc.step = k
            raise
        clock[k] = time.perf_counter() - tic
        w = np.asarray(res.control, dtype=float)
        u = w[:m]
        X[k], U[k], flags[k] = x, w, res.theta_called
        H[k] = problem.barrier_values(x, w)
        sets.append(tuple(res.active_set))
        x, stages = integrate(lambda y, s: sys.vector_field(y, u, s), x, t, dt)
        if not np.all(np.isfinite(x)):
            raise NonFiniteState(k)
        if nb and stages:
            inter[k] = min(problem.barrier_values(y, w).min() for y in stages)
    return Trajectory(times, X, U, sets, flags, H, m, dt, final_state=x,
                      inter_sample_min=inter, eval_seconds=clock,
                      theta_calls=int(flags.sum()))
