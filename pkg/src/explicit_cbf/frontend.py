"""Assembly of the state-dependent filter QP from dynamics and barriers.

Row layout produced by :func:`assemble` (stable across calls)::

    [0, nb)                      barrier rows, in registration order
    [nb, nb + nbounds)           input bounds, per component: upper then lower
    [.., .. + ns)                slack sign rows  -delta_j <= 0

When slack is enabled the decision vector is ``(u, delta)`` with one ``delta``
per slacked barrier, ordered by barrier index.

User-supplied callables (dynamics, barrier values, gradients, nominal law) are
invoked from whichever thread evaluates the filter; they must be safe to call
concurrently if filters are run in parallel.
"""
from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .qp_core import ConstraintSet, WeightMatrix


class VanishingControlDirection(UserWarning):
    """A constraint row has (numerically) zero dependence on the input."""


class BarrierKind(enum.Enum):
    REL_DEGREE_ONE = "RelDegreeOne"
    EXPONENTIAL_ORDER2 = "ExponentialOrder2"
    OUTPUT = "Output"   # h(x, u) = value(x) + feedthrough(x)^T u >= 0, held pointwise


@dataclass(frozen=True)
class ClassKGain:
    """Extended class-K gain: ``c * s`` (linear) or ``c * s**3`` (cubic)."""

    coefficient: float = 1.0
    form: str = "linear"

    def __post_init__(self):
        if self.form not in ("linear", "cubic"):
            raise ValueError(f"unsupported class-K form {self.form!r}")
        if not self.coefficient > 0:
            raise ValueError("class-K coefficient must be positive")

    def __call__(self, s):
        if self.form == "linear":
            return self.coefficient * s
        return self.coefficient * s**3


@dataclass
class ControlAffineSystem:
    """``x_dot = f(x, t) + g(x) u``."""

    n: int
    m: int
    drift: Callable          # (x, t) -> (n,)
    input_matrix: Callable   # x -> (n, m)

    @classmethod
    def linear(cls, A, B, offset: Callable | None = None) -> ControlAffineSystem:
        """``x_dot = A x + offset(t) + B u``."""
        A = np.asarray(A, dtype=float)
        B = np.asarray(B, dtype=float).reshape(A.shape[0], -1)
        if offset is None:
            drift = lambda x, t=0.0: A @ x
        else:
            drift = lambda x, t=0.0: A @ x + offset(t)
        sys = cls(A.shape[0], B.shape[1], drift, lambda x: B)
        sys.A, sys.B = A, B
        return sys

    def vector_field(self, x, u, t=0.0) -> np.ndarray:
        return self.drift(x, t) + self.input_matrix(x) @ u


@dataclass
class BarrierSpec:
    """One safety constraint ``h(x) >= 0``.

    For ``EXPONENTIAL_ORDER2`` the barrier must have relative degree two and
    ``lie_drift_gradient`` returns the gradient of ``L_f h``; the enforced
    condition is ``h'' + (k1 + k2) h' + k1 k2 h >= 0``. For ``OUTPUT`` the
    constrained quantity ``value(x) + feedthrough(x)^T u`` depends directly
    on the input and is held non-negative at each sample.
    """

    name: str
    value: Callable
    gradient: Callable | None = None
    alpha: ClassKGain = field(default_factory=ClassKGain)
    kind: BarrierKind = BarrierKind.REL_DEGREE_ONE
    gains: tuple = (1.0, 1.0)
    lie_drift_gradient: Callable | None = None
    feedthrough: Callable | None = None

    def __post_init__(self):
        if self.kind is BarrierKind.OUTPUT:
            if self.feedthrough is None:
                raise ValueError(f"output barrier {self.name!r} needs a feedthrough")
        elif self.gradient is None:
            raise ValueError(f"barrier {self.name!r} needs a gradient")
        if self.kind is BarrierKind.EXPONENTIAL_ORDER2:
            if self.lie_drift_gradient is None:
                raise ValueError(f"ECBF {self.name!r} needs lie_drift_gradient")
            if min(self.gains) <= 0:
                raise ValueError("ECBF gains must be positive")

    def measured(self, x, u) -> float:
        """Barrier value recorded along trajectories."""
        h = float(self.value(x))
        if self.kind is BarrierKind.OUTPUT:
            d = np.asarray(self.feedthrough(x), dtype=float)
            h += float(d @ np.asarray(u)[: d.size])
        return h


def ecbf_gains_from_poles(p1: float, p2: float) -> tuple:
    """ECBF gains placing the ``h`` dynamics poles at ``-p1`` and ``-p2``."""
    if p1 <= 0 or p2 <= 0:
        raise ValueError("poles must be strictly in the left half plane")
    return (float(p1), float(p2))


@dataclass(frozen=True)
class SlackPolicy:
    """Per-barrier quadratic slack penalties ``rho_i`` (barrier index -> rho)."""

    penalties: dict

    def __post_init__(self):
        for i, rho in self.penalties.items():
            if not rho > 0:
                raise ValueError(f"slack penalty for barrier {i} must be positive")

    @classmethod
    def uniform(cls, indices: Sequence[int], rho: float) -> SlackPolicy:
        return cls({int(i): float(rho) for i in indices})

    @property
    def indices(self) -> list:
        return sorted(self.penalties)


@dataclass
class FilterProblem:
    system: ControlAffineSystem
    barriers: list
    nominal: Callable                 # (x, t) -> (m,)
    weight: WeightMatrix
    input_bounds: tuple | None = None  # (lower, upper); +-inf entries are skipped
    slack: SlackPolicy | None = None

    def __post_init__(self):
        if not isinstance(self.weight, WeightMatrix):
            self.weight = WeightMatrix(self.weight)
        if self.weight.m != self.system.m:
            raise ValueError(f"weight is {self.weight.m}x{self.weight.m}, system has m={self.system.m}")
        if self.slack is not None:
            bad = [i for i in self.slack.indices if not 0 <= i < len(self.barriers)]
            if bad:
                raise ValueError(f"slack references unknown barriers {bad}")
        self._bound_rows = self._build_bound_rows()
        self._aug_weight = self._build_weight()

    def _build_bound_rows(self) -> list:
        rows = []
        if self.input_bounds is None:
            return rows
        lo, hi = (np.broadcast_to(np.asarray(v, dtype=float), (self.system.m,))
                  for v in self.input_bounds)
        for j in range(self.system.m):
            if np.isfinite(hi[j]):
                rows.append((j, 1.0, -hi[j]))     # u_j - hi <= 0
            if np.isfinite(lo[j]):
                rows.append((j, -1.0, lo[j]))     # lo - u_j <= 0
        return rows

    def _build_weight(self) -> WeightMatrix:
        if not self.slacked:
            return self.weight
        m, ns = self.system.m, len(self.slack.indices)
        R = np.zeros((m + ns, m + ns))
        R[:m, :m] = self.weight.R
        R[m:, m:] = np.diag([self.slack.penalties[i] for i in self.slack.indices])
        return WeightMatrix(R)

    @property
    def slacked(self) -> bool:
        return self.slack is not None and bool(self.slack.penalties)

    @property
    def n_slack(self) -> int:
        return len(self.slack.indices) if self.slacked else 0

    @property
    def decision_dim(self) -> int:
        return self.system.m + self.n_slack

    @property
    def n_rows(self) -> int:
        return len(self.barriers) + len(self._bound_rows) + self.n_slack

    @property
    def augmented_weight(self) -> WeightMatrix:
        return self._aug_weight

    def barrier_values(self, x, w) -> np.ndarray:
        u = np.asarray(w)[: self.system.m]
        return np.array([b.measured(x, u) for b in self.barriers])


def constraint_row(barrier: BarrierSpec, system: ControlAffineSystem, x, t: float = 0.0):
    """Return ``(b, a)`` so that the barrier condition reads ``b^T u + a <= 0``."""
    x = np.asarray(x, dtype=float)
    if barrier.kind is BarrierKind.OUTPUT:
        b = -np.asarray(barrier.feedthrough(x), dtype=float).reshape(system.m)
        a = -float(barrier.value(x))
    else:
        h = float(barrier.value(x))
        grad = np.asarray(barrier.gradient(x), dtype=float).reshape(system.n)
        f = np.asarray(system.drift(x, t), dtype=float)
        g = np.asarray(system.input_matrix(x), dtype=float).reshape(system.n, system.m)
        if barrier.kind is BarrierKind.REL_DEGREE_ONE:
            b = -(grad @ g)
            a = -float(grad @ f) - float(barrier.alpha(h))
        else:
            k1, k2 = barrier.gains
            lf_h = float(grad @ f)
            dlf = np.asarray(barrier.lie_drift_gradient(x), dtype=float).reshape(system.n)
            b = -(dlf @ g)
            a = -float(dlf @ f) - (k1 + k2) * lf_h - k1 * k2 * h
    if np.linalg.norm(b) < 1e-12:
        warnings.warn(f"barrier {barrier.name!r}: input has no effect on its row at x={x}",
                      VanishingControlDirection, stacklevel=2)
    return b, a


def assemble(problem: FilterProblem, x, t: float = 0.0):
    """Stack the QP data at ``(x, t)``.

    Returns ``(constraints, nominal, weight)`` over the decision vector
    ``(u, delta)``; without slack the decision is just ``u``.
    """
    sys = problem.system
    m, md = sys.m, problem.decision_dim
    x = np.asarray(x, dtype=float)
    p = problem.n_rows
    B = np.zeros((p, md))
    a = np.zeros(p)
    for i, bar in enumerate(problem.barriers):
        b_i, a_i = constraint_row(bar, sys, x, t)
        B[i, :m] = b_i
        a[i] = a_i
    row = len(problem.barriers)
    for j, sign, off in problem._bound_rows:
        B[row, j] = sign
        a[row] = off
        row += 1
    if problem.slacked:
        for s, i in enumerate(problem.slack.indices):
            B[i, m + s] = -1.0
            B[row, m + s] = -1.0
            row += 1
    k = np.zeros(md)
    k[:m] = np.asarray(problem.nominal(x, t), dtype=float).reshape(m)
    return ConstraintSet(B, a, m=md), k, problem.augmented_weight


def _fd_gradient(fun, x, eps=1e-6):
    x = np.asarray(x, dtype=float)
    g = np.zeros_like(x)
    for j in range(x.size):
        step = eps * max(1.0, abs(x[j]))
        e = np.zeros_like(x)
        e[j] = step
        g[j] = (float(fun(x + e)) - float(fun(x - e))) / (2 * step)
    return g


def check_barrier(barrier: BarrierSpec, system: ControlAffineSystem, states,
                  rtol: float = 1e-5) -> list:
    """Finite-difference audit of user-supplied derivatives.

    Returns a list of human-readable failure messages (empty when the
    gradients agree with central differences at every state).
    """
    failures = []
    for x in np.atleast_2d(states):
        if barrier.kind is BarrierKind.OUTPUT:
            break
        fd = _fd_gradient(barrier.value, x)
        g = np.asarray(barrier.gradient(x), dtype=float)
        if np.linalg.norm(fd - g) > rtol * max(1.0, np.linalg.norm(fd)):
            failures.append(f"barrier {barrier.name!r}: gradient mismatch at x={np.round(x, 4).tolist()}")
            break
        if barrier.kind is BarrierKind.EXPONENTIAL_ORDER2:
            lf = lambda y: float(np.asarray(barrier.gradient(y)) @ system.drift(y, 0.0))
            fd2 = _fd_gradient(lf, x)
            g2 = np.asarray(barrier.lie_drift_gradient(x), dtype=float)
            if np.linalg.norm(fd2 - g2) > rtol * max(1.0, np.linalg.norm(fd2)):
                failures.append(f"barrier {barrier.name!r}: Lie-derivative gradient mismatch")
                break
            lg = np.asarray(barrier.gradient(x)) @ system.input_matrix(x)
            if np.linalg.norm(lg) > 1e-8 * max(1.0, np.linalg.norm(barrier.gradient(x))):
                failures.append(f"barrier {barrier.name!r}: relative degree is not two")
                break
    if barrier.alpha(0.0) != 0.0 or not barrier.alpha(1.0) > barrier.alpha(-1.0):
        failures.append(f"barrier {barrier.name!r}: alpha is not extended class-K")
    return failures
