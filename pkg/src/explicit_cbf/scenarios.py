"""Built-in scenarios and the YAML scenario file format.

Scenario files (``schema_version: 1``) are YAML mappings; matrices are lists
of rows. Two kinds exist::

    kind: builtin          # name: aircraft | multi_agent | single_integrator
    kind: linear_affine    # x_dot = A x + B u + E cmd(t), halfspace barriers

Keys common to both: ``schema_version``, ``name``, ``kind``, ``dt``,
``horizon``, ``x0``. Unknown keys are rejected. See README.md for the full
grammar.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml
from scipy.linalg import solve_continuous_are

from .frontend import (BarrierKind, BarrierSpec, ClassKGain, ControlAffineSystem, FilterProblem,
                       SlackPolicy)
from .qp_core import WeightMatrix

SCHEMA_VERSION = 1


class ScenarioError(ValueError):
    """Invalid scenario file; the message names the offending field."""


# --- command signals -------------------------------------------------------

@dataclass(frozen=True)
class CommandSignal:
    """Exogenous command ``cmd(t)`` of dimension ``dim``.

    ``constant``: ``value`` (vector). ``doublet``: ``amplitude`` on ``channel``,
    positive on ``[start, start + width)``, negative on the following
    ``width``. ``sinusoid``: ``amplitude * sin(2 pi frequency t)`` on
    ``channel``.
    """

    dim: int
    type: str = "constant"
    value: tuple = ()
    amplitude: float = 0.0
    channel: int = 0
    start: float = 0.0
    width: float = 1.0
    frequency: float = 0.0

    def __call__(self, t: float) -> np.ndarray:
        out = np.zeros(self.dim)
        if self.type == "constant":
            if self.value:
                out[:] = self.value
        elif self.type == "doublet":
            if self.start <= t < self.start + self.width:
                out[self.channel] = self.amplitude
            elif self.start + self.width <= t < self.start + 2 * self.width:
                out[self.channel] = -self.amplitude
        elif self.type == "sinusoid":
            out[self.channel] = self.amplitude * np.sin(2 * np.pi * self.frequency * t)
        else:
            raise ScenarioError(f"command.type: unknown signal {self.type!r}")
        return out


@dataclass
class Scenario:
    name: str
    problem: FilterProblem
    x0: np.ndarray
    dt: float
    horizon: float
    kind: str = "builtin"
    affine: bool = False
    # safety check at sample times: list of (label, callable(x) -> distance margin)
    separation_checks: list = field(default_factory=list)
    info: dict = field(default_factory=dict)

    @property
    def steps(self) -> int:
        return int(round(self.horizon / self.dt))


# --- aircraft roll/yaw servo -------------------------------------------------

A_P = np.array([[-0.1179, 0.0009, -1.001],
                [-7.0113, -1.4492, 0.2206],
                [6.3035, 0.0651, -0.4117]])
B_P = np.array([[0.0, 0.0153],
                [-7.9662, 2.6875],
                [0.6093, -2.3577]])
C_REG = np.array([[0.0, 1.0, 0.0],
                  [-2.6049, 0.0187, 0.0677]])
D_REG = np.array([[0.0, 0.0],
                  [0.0, 0.3370]])
Q_LQR = np.diag([1.025, 1.029, 0.0, 0.0, 1.602])
R_LQR = np.diag([1.0, 1.0])
ROLL_RATE_LIMIT = 0.4
SECOND_LIMIT = 0.05
INTEGRATOR_LIMIT = 0.3


def aircraft_augmented():
    """Augmented ``[e_yI, x_p]`` matrices: ``(A, B_u, E_cmd, B_v)``."""
    A = np.zeros((5, 5))
    A[:2, 2:] = C_REG
    A[2:, 2:] = A_P
    Bu = np.vstack([D_REG, B_P])
    E = np.vstack([-np.eye(2), np.zeros((3, 2))])
    Bv = np.vstack([np.eye(2), np.zeros((3, 2))])
    return A, Bu, E, Bv


def aircraft_lqr_gain() -> np.ndarray:
    A, Bu, _, _ = aircraft_augmented()
    P = solve_continuous_are(A, Bu, Q_LQR, R_LQR)
    return np.linalg.solve(R_LQR, Bu.T @ P)


def _state_bound(name, idx, n, limit, sign, alpha):
    """``h = limit - sign * x[idx]``."""
    grad = np.zeros(n)
    grad[idx] = -sign
    return BarrierSpec(name, lambda x, i=idx: limit - sign * x[i], lambda x, g=grad: g, alpha)


def aircraft(horizon: float = 30.0, dt: float = 0.01, second_output: str = "lateral_load",
             command: CommandSignal | None = None, alpha_output: float = 5.0,
             alpha_integrator: float = 2.0, virtual_weight: float = 1.0,
             slack_penalty: float = 1e5, x0=None) -> Scenario:
    """Roll/yaw servo with output limits and integrator anti-windup.

    Decision vector: aileron, rudder, the two virtual integrator inputs ``v``,
    then one slack per output-limit barrier. ``second_output`` selects what the
    0.05 limit bounds: ``"lateral_load"`` (``N_y``, has input feedthrough) or
    ``"yaw_rate"`` (``r_s``).
    """
    A, Bu, E, Bv = aircraft_augmented()
    K = aircraft_lqr_gain()
    cmd = command if command is not None else CommandSignal(
        2, "doublet", amplitude=0.5, channel=0, start=0.0, width=horizon / 6.0)
    G = np.hstack([Bu, Bv])
    system = ControlAffineSystem.linear(A, G, offset=lambda t: E @ cmd(t))
    n = 5
    a_out = ClassKGain(alpha_output)
    a_int = ClassKGain(alpha_integrator)
    barriers = [
        _state_bound("roll_rate_upper", 3, n, ROLL_RATE_LIMIT, +1.0, a_out),
        _state_bound("roll_rate_lower", 3, n, ROLL_RATE_LIMIT, -1.0, a_out),
    ]
    if second_output == "lateral_load":
        c2 = np.concatenate([np.zeros(2), C_REG[1]])
        d2 = np.concatenate([D_REG[1], np.zeros(2)])
        barriers += [
            BarrierSpec("lateral_load_upper", lambda x: SECOND_LIMIT - c2 @ x, None,
                        kind=BarrierKind.OUTPUT, feedthrough=lambda x: -d2),
            BarrierSpec("lateral_load_lower", lambda x: SECOND_LIMIT + c2 @ x, None,
                        kind=BarrierKind.OUTPUT, feedthrough=lambda x: d2),
        ]
    elif second_output == "yaw_rate":
        barriers += [
            _state_bound("yaw_rate_upper", 4, n, SECOND_LIMIT, +1.0, a_out),
            _state_bound("yaw_rate_lower", 4, n, SECOND_LIMIT, -1.0, a_out),
        ]
    else:
        raise ScenarioError(f"options.second_output: unknown value {second_output!r}")
    for i, lbl in enumerate(("roll_rate", "second_output")):
        barriers.append(_state_bound(f"integrator_{lbl}_upper", i, n, INTEGRATOR_LIMIT, +1.0, a_int))
        barriers.append(_state_bound(f"integrator_{lbl}_lower", i, n, INTEGRATOR_LIMIT, -1.0, a_int))
    weight = WeightMatrix(np.diag([1.0, 1.0, virtual_weight, virtual_weight]))

    def nominal(x, t=0.0):
        return np.concatenate([-K @ x, np.zeros(2)])

    problem = FilterProblem(system, barriers, nominal, weight,
                            slack=SlackPolicy.uniform(range(4), slack_penalty))
    x0 = np.zeros(n) if x0 is None else np.asarray(x0, dtype=float)
    return Scenario("aircraft", problem, x0, dt, horizon, affine=True,
                    info={"second_output": second_output, "lqr_gain": K, "command": cmd})


# --- multi-agent double integrators -------------------------------------------

def _agent_obstacle_ecbf(i, center, d, n, gains):
    pi, vi = slice(4 * i, 4 * i + 2), slice(4 * i + 2, 4 * i + 4)

    def value(x):
        r = x[pi] - center
        return r @ r - d * d

    def grad(x):
        g = np.zeros(n)
        g[pi] = 2 * (x[pi] - center)
        return g

    def lf_grad(x):
        g = np.zeros(n)
        g[pi] = 2 * x[vi]
        g[vi] = 2 * (x[pi] - center)
        return g

    return BarrierSpec(f"agent{i}_obstacle", value, grad, kind=BarrierKind.EXPONENTIAL_ORDER2,
                       gains=gains, lie_drift_gradient=lf_grad)


def _agent_pair_ecbf(i, j, d, n, gains):
    pi, vi = slice(4 * i, 4 * i + 2), slice(4 * i + 2, 4 * i + 4)
    pj, vj = slice(4 * j, 4 * j + 2), slice(4 * j + 2, 4 * j + 4)

    def value(x):
        r = x[pi] - x[pj]
        return r @ r - d * d

    def grad(x):
        g = np.zeros(n)
        r = x[pi] - x[pj]
        g[pi], g[pj] = 2 * r, -2 * r
        return g

    def lf_grad(x):
        g = np.zeros(n)
        r, w = x[pi] - x[pj], x[vi] - x[vj]
        g[pi], g[pj] = 2 * w, -2 * w
        g[vi], g[vj] = 2 * r, -2 * r
        return g

    return BarrierSpec(f"agents{i}{j}", value, grad, kind=BarrierKind.EXPONENTIAL_ORDER2,
                       gains=gains, lie_drift_gradient=lf_grad)


def _references(t):
    """Position, velocity, acceleration references for the three agents."""
    w = 2 * np.pi / 10.0
    s, c = np.sin(w * t), np.cos(w * t)
    s2, c2 = np.sin(2 * w * t), np.cos(2 * w * t)
    # agent 0: figure eight; agents 1, 2: circles in opposite directions
    # agent 2 starts half an orbit away from agent 1
    p = [np.array([2.0 * s, 1.0 * s2]),
         np.array([1.5 * c, 1.5 * s]),
         np.array([-1.5 * c, 1.5 * s])]
    v = [np.array([2.0 * w * c, 2.0 * w * c2]),
         np.array([-1.5 * w * s, 1.5 * w * c]),
         np.array([1.5 * w * s, 1.5 * w * c])]
    acc = [np.array([-2.0 * w * w * s, -4.0 * w * w * s2]),
           np.array([-1.5 * w * w * c, -1.5 * w * w * s]),
           np.array([1.5 * w * w * c, -1.5 * w * w * s])]
    return p, v, acc


def multi_agent_obstacles() -> np.ndarray:
    """Sixteen obstacle centres: eight on an outer ring, four beside the
    circular orbits and four around the figure-eight crossing."""
    ring = [2.7 * np.array([np.cos(a), np.sin(a)])
            for a in np.linspace(0, 2 * np.pi, 8, endpoint=False) + np.pi / 8]
    orbit = [1.62 * np.array([np.cos(a), np.sin(a)])
             for a in np.linspace(0, 2 * np.pi, 4, endpoint=False) + np.pi / 4]
    inner = [np.array([0.0, 0.75]), np.array([0.0, -0.75]),
             np.array([1.05, 0.1]), np.array([-1.05, -0.1])]
    return np.array(ring + orbit + inner)


def multi_agent(horizon: float = 20.0, dt: float = 0.01, agent_radius: float = 0.12,
                obstacle_radius: float = 0.15, margin: float = 0.05, gains=(2.0, 2.0),
                accel_limit: float = 20.0, kp: float = 4.0, kd: float = 4.0) -> Scenario:
    """Three planar double-integrator agents, 16 obstacles, pairwise ECBFs.

    State per agent is ``(px, py, vx, vy)``; inputs are accelerations. Barrier
    radii include ``margin`` beyond the physical radii checked at samples.
    """
    n_agents, n, m = 3, 12, 6
    obstacles = multi_agent_obstacles()
    A = np.zeros((n, n))
    B = np.zeros((n, m))
    for i in range(n_agents):
        A[4 * i:4 * i + 2, 4 * i + 2:4 * i + 4] = np.eye(2)
        B[4 * i + 2:4 * i + 4, 2 * i:2 * i + 2] = np.eye(2)
    system = ControlAffineSystem.linear(A, B)
    d_obs = agent_radius + obstacle_radius
    d_pair = 2 * agent_radius
    barriers = []
    for i in range(n_agents):
        for c in obstacles:
            barriers.append(_agent_obstacle_ecbf(i, c, d_obs + margin, n, gains))
    for i in range(n_agents):
        for j in range(i + 1, n_agents):
            barriers.append(_agent_pair_ecbf(i, j, d_pair + margin, n, gains))

    def nominal(x, t=0.0):
        p, v, acc = _references(t)
        u = np.zeros(m)
        for i in range(n_agents):
            pi, vi = x[4 * i:4 * i + 2], x[4 * i + 2:4 * i + 4]
            u[2 * i:2 * i + 2] = kp * (p[i] - pi) + kd * (v[i] - vi) + acc[i]
        return u

    problem = FilterProblem(system, barriers, nominal, WeightMatrix.identity(m),
                            input_bounds=(-accel_limit, accel_limit))
    p0, v0, _ = _references(0.0)
    x0 = np.concatenate([np.concatenate([p0[i], v0[i]]) for i in range(n_agents)])

    checks = []
    for i in range(n_agents):
        for k, c in enumerate(obstacles):
            checks.append((f"agent{i}-obstacle{k}",
                           lambda x, i=i, c=c: np.linalg.norm(x[4 * i:4 * i + 2] - c) - d_obs))
        for j in range(i + 1, n_agents):
            checks.append((f"agent{i}-agent{j}",
                           lambda x, i=i, j=j: np.linalg.norm(x[4 * i:4 * i + 2]
                                                              - x[4 * j:4 * j + 2]) - d_pair))
    return Scenario("multi_agent", problem, x0, dt, horizon, affine=False,
                    separation_checks=checks,
                    info={"obstacles": obstacles, "agent_radius": agent_radius,
                          "obstacle_radius": obstacle_radius})


# --- single integrator --------------------------------------------------------

def single_integrator(horizon: float = 2.0, dt: float = 1e-3, x0=(1.0, 0.0),
                      nominal_input=(-2.0, 0.0), alpha: float = 1.0) -> Scenario:
    """``x_dot = u`` in the plane with ``h = x_0`` and a constant nominal input."""
    system = ControlAffineSystem.linear(np.zeros((2, 2)), np.eye(2))
    bar = BarrierSpec("half_plane", lambda x: x[0], lambda x: np.array([1.0, 0.0]),
                      ClassKGain(alpha))
    k = np.asarray(nominal_input, dtype=float)
    problem = FilterProblem(system, [bar], lambda x, t=0.0: k.copy(), WeightMatrix.identity(2))
    return Scenario("single_integrator", problem, np.asarray(x0, dtype=float), dt, horizon,
                    affine=True)


BUILTINS = {
    "aircraft": aircraft,
    "multi_agent": multi_agent,
    "single_integrator": single_integrator,
}


# --- scenario files -----------------------------------------------------------

_COMMON_KEYS = {"schema_version", "name", "kind", "dt", "horizon", "x0"}
_BUILTIN_KEYS = _COMMON_KEYS | {"builtin", "options"}
_LINEAR_KEYS = _COMMON_KEYS | {"A", "B", "nominal", "weight", "barriers", "input_bounds",
                               "slack", "command"}
_BARRIER_KEYS = {"name", "type", "normal", "offset", "gradient", "alpha", "order", "gains"}


def _matrix(raw, field_name, shape=None) -> np.ndarray:
    try:
        arr = np.array(raw, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"{field_name}: not a numeric matrix ({exc})") from None
    if arr.ndim == 1 and shape is not None and len(shape) == 2:
        arr = arr.reshape(1, -1) if shape[0] == 1 else arr
    if shape is not None:
        want = tuple(s for s in shape)
        if arr.shape != want:
            raise ScenarioError(f"{field_name}: expected shape {want}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ScenarioError(f"{field_name}: non-finite entries")
    return arr


def _reject_unknown(mapping: dict, allowed: set, where: str):
    extra = sorted(set(mapping) - allowed)
    if extra:
        raise ScenarioError(f"{where}: unknown keys {extra}")


def _alpha(raw, where) -> ClassKGain:
    if raw is None:
        return ClassKGain()
    if isinstance(raw, (int, float)):
        return ClassKGain(float(raw))
    _reject_unknown(raw, {"form", "coefficient"}, where)
    try:
        return ClassKGain(float(raw.get("coefficient", 1.0)), raw.get("form", "linear"))
    except ValueError as exc:
        raise ScenarioError(f"{where}: {exc}") from None


def _command(raw, dim) -> CommandSignal:
    if raw is None:
        return CommandSignal(dim)
    _reject_unknown(raw, {"type", "value", "amplitude", "channel", "start", "width",
                          "frequency", "input_matrix"}, "command")
    kw = {k: v for k, v in raw.items() if k != "input_matrix"}
    if "value" in kw:
        kw["value"] = tuple(float(v) for v in kw["value"])
        if len(kw["value"]) != dim:
            raise ScenarioError(f"command.value: expected {dim} entries")
    sig = CommandSignal(dim, **kw)
    if sig.type not in ("constant", "doublet", "sinusoid"):
        raise ScenarioError(f"command.type: unknown signal {sig.type!r}")
    if not 0 <= sig.channel < max(dim, 1):
        raise ScenarioError("command.channel: out of range")
    return sig


def _halfspace_barrier(raw, idx, n, A, weight_failures) -> BarrierSpec:
    where = f"barriers[{idx}]"
    if not isinstance(raw, dict):
        raise ScenarioError(f"{where}: expected a mapping")
    _reject_unknown(raw, _BARRIER_KEYS, where)
    if raw.get("type", "halfspace") != "halfspace":
        raise ScenarioError(f"{where}.type: only 'halfspace' is supported")
    normal = _matrix(raw.get("normal"), f"{where}.normal", (n,))
    offset = float(raw.get("offset", 0.0))
    grad = (_matrix(raw["gradient"], f"{where}.gradient", (n,)) if "gradient" in raw
            else normal.copy())
    name = str(raw.get("name", f"barrier{idx}"))
    order = int(raw.get("order", 1))
    value = lambda x, c=normal, d=offset: float(c @ x + d)
    gradient = lambda x, g=grad: g
    if order == 1:
        return BarrierSpec(name, value, gradient, _alpha(raw.get("alpha"), f"{where}.alpha"))
    if order == 2:
        gains = tuple(float(g) for g in raw.get("gains", (1.0, 1.0)))
        if len(gains) != 2:
            raise ScenarioError(f"{where}.gains: expected two values")
        lf = A.T @ grad
        try:
            return BarrierSpec(name, value, gradient, kind=BarrierKind.EXPONENTIAL_ORDER2,
                               gains=gains, lie_drift_gradient=lambda x, g=lf: g)
        except ValueError as exc:
            raise ScenarioError(f"{where}: {exc}") from None
    raise ScenarioError(f"{where}.order: must be 1 or 2")


def parse_scenario(data: dict, collect_failures: list | None = None) -> Scenario:
    """Build a :class:`Scenario` from a parsed YAML mapping.

    With ``collect_failures`` given, a non positive definite weight is recorded
    there (and replaced by the identity) instead of raising, so that a
    validation pass can report every problem at once.
    """
    if not isinstance(data, dict):
        raise ScenarioError("top level: expected a mapping")
    version = data.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ScenarioError(f"schema_version: expected {SCHEMA_VERSION}, got {version!r}")
    kind = data.get("kind")
    if kind == "builtin":
        _reject_unknown(data, _BUILTIN_KEYS, "top level")
        name = data.get("builtin")
        if name not in BUILTINS:
            raise ScenarioError(f"builtin: unknown scenario {name!r}; "
                                f"choose from {sorted(BUILTINS)}")
        opts = dict(data.get("options") or {})
        for key in ("dt", "horizon"):
            if key in data:
                opts[key] = float(data[key])
        if "x0" in data:
            opts["x0"] = data["x0"]
        if "command" in opts and name == "aircraft":
            opts["command"] = _command(opts["command"], 2)
        try:
            sc = BUILTINS[name](**opts)
        except TypeError as exc:
            raise ScenarioError(f"options: {exc}") from None
        if len(sc.x0) != sc.problem.system.n:
            raise ScenarioError(f"x0: expected {sc.problem.system.n} entries")
        sc.kind = "builtin"
        if data.get("name"):
            sc.name = str(data["name"])
        return sc
    if kind != "linear_affine":
        raise ScenarioError(f"kind: expected 'builtin' or 'linear_affine', got {kind!r}")
    _reject_unknown(data, _LINEAR_KEYS, "top level")
    for key in ("A", "B", "dt", "horizon", "x0"):
        if key not in data:
            raise ScenarioError(f"{key}: required for linear_affine scenarios")
    A = _matrix(data["A"], "A")
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ScenarioError(f"A: expected a square matrix, got shape {A.shape}")
    n = A.shape[0]
    B = _matrix(data["B"], "B")
    if B.ndim == 1:
        B = B.reshape(n, -1) if B.size % n == 0 and B.size else B
    if B.ndim != 2 or B.shape[0] != n:
        raise ScenarioError(f"B: expected {n} rows, got shape {B.shape}")
    m = B.shape[1]
    x0 = _matrix(data["x0"], "x0", (n,))
    nom = data.get("nominal") or {}
    _reject_unknown(nom, {"K", "kappa"}, "nominal")
    Kn = _matrix(nom.get("K", np.zeros((m, n)).tolist()), "nominal.K", (m, n))
    kappa = _matrix(nom.get("kappa", [0.0] * m), "nominal.kappa", (m,))
    Wraw = _matrix(data.get("weight", np.eye(m).tolist()), "weight", (m, m))
    try:
        weight = WeightMatrix(Wraw)
    except ValueError as exc:
        if collect_failures is None:
            raise ScenarioError(f"weight: {exc}") from None
        collect_failures.append(f"weight: {exc}")
        weight = WeightMatrix.identity(m)
    command_raw = data.get("command")
    offset = None
    cmd = None
    if command_raw is not None:
        if "input_matrix" not in command_raw:
            raise ScenarioError("command.input_matrix: required when a command is given")
        E = _matrix(command_raw["input_matrix"], "command.input_matrix")
        E = E.reshape(n, -1) if E.ndim == 1 else E
        if E.shape[0] != n:
            raise ScenarioError(f"command.input_matrix: expected {n} rows")
        cmd = _command(command_raw, E.shape[1])
        offset = lambda t, E=E, cmd=cmd: E @ cmd(t)
    system = ControlAffineSystem.linear(A, B, offset)
    raw_barriers = data.get("barriers") or []
    if not isinstance(raw_barriers, list):
        raise ScenarioError("barriers: expected a list")
    barriers = [_halfspace_barrier(b, i, n, A, collect_failures)
                for i, b in enumerate(raw_barriers)]
    bounds = None
    if data.get("input_bounds") is not None:
        ib = data["input_bounds"]
        _reject_unknown(ib, {"lower", "upper"}, "input_bounds")
        lo = _matrix(ib.get("lower", [-np.inf] * m), "input_bounds.lower", (m,)) \
            if "lower" in ib else np.full(m, -np.inf)
        hi = _matrix(ib.get("upper", [np.inf] * m), "input_bounds.upper", (m,)) \
            if "upper" in ib else np.full(m, np.inf)
        if np.any(lo > hi):
            raise ScenarioError("input_bounds: lower exceeds upper")
        bounds = (lo, hi)
    slack = None
    if data.get("slack") is not None:
        sr = data["slack"]
        _reject_unknown(sr, {"barriers", "penalty"}, "slack")
        idx = sr.get("barriers", list(range(len(barriers))))
        if any(not 0 <= int(i) < len(barriers) for i in idx):
            raise ScenarioError("slack.barriers: index out of range")
        try:
            slack = SlackPolicy.uniform(idx, float(sr.get("penalty", 1e6)))
        except ValueError as exc:
            raise ScenarioError(f"slack.penalty: {exc}") from None
    problem = FilterProblem(system, barriers, lambda x, t=0.0: Kn @ x + kappa, weight,
                            input_bounds=bounds, slack=slack)
    dt, horizon = float(data["dt"]), float(data["horizon"])
    if not dt > 0 or horizon < dt:
        raise ScenarioError("dt/horizon: need dt > 0 and horizon >= dt")
    return Scenario(str(data.get("name", "linear_affine")), problem, x0, dt, horizon,
                    kind="linear_affine", affine=True, info={"command": cmd, "K": Kn})


def read_scenario_data(path) -> dict:
    """Parse a scenario file to a mapping; syntax errors carry line and column."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        return yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"line {mark.line + 1}, column {mark.column + 1}" if mark else "unknown position"
        raise ScenarioError(f"{path}: YAML syntax error at {where}: "
                            f"{getattr(exc, 'problem', exc)}") from None


def load_scenario(path, collect_failures: list | None = None) -> Scenario:
    """Read and validate a scenario file; errors carry line or field context."""
    return parse_scenario(read_scenario_data(path), collect_failures)
