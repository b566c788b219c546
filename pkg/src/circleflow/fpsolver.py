"""Fixed-point power-flow solver based on per-bus circle intersection.

Each round sweeps the non-slack buses in ascending index order and
replaces every bus voltage with the chosen intersection of its two
circles, using updated neighbor values as soon as they are written
(Gauss-Seidel style propagation).  PV buses intersect their active-power
circle with the magnitude-setpoint circle; when those fail to intersect
the bus is temporarily converted to PQ at the violated reactive limit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import geometry
from .caseio import NetworkCase
from .netmodel import (AdmittanceModel, BusKind, build_admittance,
                       oracle_injection, t_coefficients)


class Status(Enum):
    CONVERGED = "converged"
    MAX_ROUNDS_EXCEEDED = "max_rounds_exceeded"
    RESTARTS_EXHAUSTED = "restarts_exhausted"
    INFEASIBLE = "infeasible"
    DIVERGED = "diverged"
    OSCILLATING = "oscillating"


class DynamicKind(Enum):
    SLACK = "slack"
    PQ = "pq"
    PV = "pv"
    PQ_MAX = "pq_max"   # PV bus clamped at its upper reactive limit
    PQ_MIN = "pq_min"   # PV bus clamped at its lower reactive limit


class NonIntersecting(Exception):
    """PQ-bus circles failed to intersect; the solve must restart."""

    def __init__(self, bus: int):
        super().__init__(f"no intersection at bus {bus}")
        self.bus = bus


@dataclass(frozen=True)
class FlatStart:
    pass


@dataclass(frozen=True)
class UniformRandomStart:
    """Real parts drawn iid uniform on [1-alpha, 1+alpha]; imaginary parts 0."""
    alpha: float
    seed: int = 0


@dataclass(frozen=True)
class ExplicitStart:
    vr: tuple
    vi: tuple


@dataclass
class SolverConfig:
    tol: float = 1e-3
    max_rounds: int = 5000
    restart_limit: int = 5
    init: object = field(default_factory=FlatStart)
    record_trace: bool = True
    strict_q_limits: bool = False   # also check limits after PV intersection updates
    order: tuple | None = None      # custom sweep order; default ascending index


@dataclass
class VoltageState:
    vr: np.ndarray
    vi: np.ndarray
    kind_now: list   # DynamicKind per bus
    q_clamped: np.ndarray  # active reactive setpoint for PQ_MAX/PQ_MIN buses

    def copy(self) -> "VoltageState":
        return VoltageState(self.vr.copy(), self.vi.copy(),
                            list(self.kind_now), self.q_clamped.copy())


@dataclass
class SolveReport:
    status: Status
    rounds: int
    mismatch_trace: list
    switching_events: list   # (round, bus, from_kind, to_kind)
    restarts: int
    final: VoltageState


_STATIC_TO_DYNAMIC = {
    BusKind.SLACK: DynamicKind.SLACK,
    BusKind.PQ: DynamicKind.PQ,
    BusKind.PV: DynamicKind.PV,
}


def initialize(case: NetworkCase, cfg: SolverConfig) -> VoltageState:
    """Build the starting state; slack is always pinned at v_ref /_ 0."""
    n = len(case.buses)
    init = cfg.init
    if isinstance(init, ExplicitStart):
        vr = np.array(init.vr, dtype=float)
        vi = np.array(init.vi, dtype=float)
    elif isinstance(init, UniformRandomStart):
        rng = np.random.default_rng(init.seed)
        vr = rng.uniform(1.0 - init.alpha, 1.0 + init.alpha, size=n)
        vi = np.zeros(n)
    else:
        vr = np.ones(n)
        vi = np.zeros(n)
    kinds = []
    for b in case.buses:
        kinds.append(_STATIC_TO_DYNAMIC[b.kind])
        if b.kind is not BusKind.PQ and isinstance(init, (FlatStart,)):
            vr[b.id] = b.v_ref
        if b.kind is BusKind.SLACK:
            vr[b.id] = b.v_ref
            vi[b.id] = 0.0
    return VoltageState(vr, vi, kinds, np.zeros(n))


def mismatch(model: AdmittanceModel, case: NetworkCase,
             state: VoltageState) -> tuple[np.ndarray, float]:
    """Per-bus complex mismatch and its max component magnitude.

    PQ-type buses compare specified vs computed injection; PV buses carry
    the active-power residual in the real slot and the magnitude residual
    in the imaginary slot.  The slack bus is excluded.
    """
    v = state.vr + 1j * state.vi
    s = v * np.conj(model.dense() @ v)
    ds = np.zeros(len(case.buses), dtype=complex)
    for b in case.buses:
        d = b.id
        kind = state.kind_now[d]
        if kind is DynamicKind.SLACK:
            continue
        if kind is DynamicKind.PV:
            ds[d] = complex(b.p_inj - s[d].real,
                            abs(v[d]) - b.v_ref)
        else:
            q_spec = b.q_inj if kind is DynamicKind.PQ else state.q_clamped[d]
            ds[d] = complex(b.p_inj, q_spec) - s[d]
    max_abs = float(max(np.max(np.abs(ds.real)), np.max(np.abs(ds.imag))))
    return ds, max_abs


def update_pq_bus(model: AdmittanceModel, case: NetworkCase,
                  state: VoltageState, d: int) -> geometry.PlanePoint:
    """One PQ-type update: intersect the two power circles, keep the
    higher-magnitude point.  Raises NonIntersecting when the circles miss."""
    b = case.buses[d]
    q_spec = b.q_inj if state.kind_now[d] is DynamicKind.PQ else state.q_clamped[d]
    t = t_coefficients(model, d, state.vr, state.vi)
    # circle equations are load-convention: negate the net injections
    cp = geometry.real_power_circle(t, -b.p_inj)
    cq = geometry.reactive_power_circle(t, -q_spec)
    try:
        res = geometry.intersect_circles(cp, cq)
    except geometry.CoincidentCircles:
        raise NonIntersecting(d) from None
    if res.kind is geometry.IntersectionKind.NO_INTERSECTION:
        raise NonIntersecting(d)
    return geometry.choose_pq_solution(res)


@dataclass(frozen=True)
class SwitchToPQ:
    """PV bus must be clamped: which limit was violated and its value."""
    to_kind: DynamicKind
    q_value: float


def update_pv_bus(model: AdmittanceModel, case: NetworkCase,
                  state: VoltageState, d: int):
    """One PV update: intersect the active-power circle with the setpoint
    circle.  Returns the chosen point, or a SwitchToPQ signal when the
    circles miss (the bus then gets solved as PQ at the clamped limit)."""
    b = case.buses[d]
    t = t_coefficients(model, d, state.vr, state.vi)
    cp = geometry.real_power_circle(t, -b.p_inj)
    cv = geometry.voltage_circle(b.v_ref)
    try:
        res = geometry.intersect_circles(cp, cv)
    except geometry.CoincidentCircles:
        res = geometry.IntersectionResult(geometry.IntersectionKind.NO_INTERSECTION, ())
    if res.kind is not geometry.IntersectionKind.NO_INTERSECTION:
        return geometry.choose_pv_solution(res)
    q_now = oracle_injection(model, d, state.vr, state.vi).imag
    if q_now > b.q_max:
        return SwitchToPQ(DynamicKind.PQ_MAX, b.q_max)
    if q_now < b.q_min:
        return SwitchToPQ(DynamicKind.PQ_MIN, b.q_min)
    # no limit actually violated: clamp at the nearer one anyway
    if abs(b.q_max - q_now) <= abs(q_now - b.q_min):
        return SwitchToPQ(DynamicKind.PQ_MAX, b.q_max)
    return SwitchToPQ(DynamicKind.PQ_MIN, b.q_min)


def maybe_revert_to_pv(case: NetworkCase, state: VoltageState, d: int) -> bool:
    """Revert a clamped bus to PV when its magnitude crossed back over v_ref."""
    b = case.buses[d]
    vm = math.hypot(state.vr[d], state.vi[d])
    kind = state.kind_now[d]
    if kind is DynamicKind.PQ_MAX and vm > b.v_ref:
        state.kind_now[d] = DynamicKind.PV
        return True
    if kind is DynamicKind.PQ_MIN and vm < b.v_ref:
        state.kind_now[d] = DynamicKind.PV
        return True
    return False


def _write_point(state: VoltageState, d: int, pt: geometry.PlanePoint) -> None:
    state.vr[d] = pt.x
    state.vi[d] = pt.y


def _sweep(model, case, state, cfg, round_no, events) -> float:
    """One full round of in-place bus updates; returns max voltage change."""
    order = cfg.order if cfg.order is not None else range(len(case.buses))
    max_dv = 0.0
    for d in order:
        kind = state.kind_now[d]
        if kind is DynamicKind.SLACK:
            continue
        old = complex(state.vr[d], state.vi[d])
        if kind is DynamicKind.PV:
            out = update_pv_bus(model, case, state, d)
            if isinstance(out, SwitchToPQ):
                events.append((round_no, d, kind.value, out.to_kind.value))
                state.kind_now[d] = out.to_kind
                state.q_clamped[d] = out.q_value
                _write_point(state, d, update_pq_bus(model, case, state, d))
            else:
                # keep the magnitude pinned exactly at the setpoint
                ang = math.atan2(out.y, out.x)
                b = case.buses[d]
                state.vr[d] = b.v_ref * math.cos(ang)
                state.vi[d] = b.v_ref * math.sin(ang)
                if cfg.strict_q_limits:
                    _enforce_limits_after_update(model, case, state, d,
                                                 round_no, events)
        else:
            _write_point(state, d, update_pq_bus(model, case, state, d))
            if kind in (DynamicKind.PQ_MAX, DynamicKind.PQ_MIN):
                if maybe_revert_to_pv(case, state, d):
                    events.append((round_no, d, kind.value, DynamicKind.PV.value))
        max_dv = max(max_dv, abs(complex(state.vr[d], state.vi[d]) - old))
    return max_dv


def _enforce_limits_after_update(model, case, state, d, round_no, events) -> None:
    b = case.buses[d]
    q_now = oracle_injection(model, d, state.vr, state.vi).imag
    if q_now > b.q_max:
        to_kind, q_val = DynamicKind.PQ_MAX, b.q_max
    elif q_now < b.q_min:
        to_kind, q_val = DynamicKind.PQ_MIN, b.q_min
    else:
        return
    events.append((round_no, d, state.kind_now[d].value, to_kind.value))
    state.kind_now[d] = to_kind
    state.q_clamped[d] = q_val
    _write_point(state, d, update_pq_bus(model, case, state, d))


def solve(case: NetworkCase, cfg: SolverConfig | None = None) -> SolveReport:
    """Run the fixed-point iteration to convergence or failure."""
    cfg = cfg or SolverConfig()
    model = build_admittance(case)
    state = initialize(case, cfg)
    base_seed = cfg.init.seed if isinstance(cfg.init, UniformRandomStart) else 0
    events: list = []
    trace: list = []
    restarts = 0
    rounds = 0

    _, mm = mismatch(model, case, state)
    trace.append(mm)
    status = Status.MAX_ROUNDS_EXCEEDED
    while rounds < cfg.max_rounds:
        if mm < cfg.tol:
            status = Status.CONVERGED
            break
        try:
            max_dv = _sweep(model, case, state, cfg, rounds + 1, events)
        except NonIntersecting:
            restarts += 1
            if restarts > cfg.restart_limit:
                status = Status.RESTARTS_EXHAUSTED
                break
            state = initialize(case, SolverConfig(
                init=UniformRandomStart(alpha=0.1, seed=base_seed + restarts)))
            _, mm = mismatch(model, case, state)
            continue
        rounds += 1
        _, mm = mismatch(model, case, state)
        trace.append(mm)
        if max_dv < cfg.tol * 1e-3:
            # voltages stalled; a stall away from a solution means no
            # fixed point is reachable from here
            status = Status.CONVERGED if mm < cfg.tol else Status.INFEASIBLE
            break
    else:
        status = Status.MAX_ROUNDS_EXCEEDED
    if mm < cfg.tol:
        status = Status.CONVERGED

    if not cfg.record_trace:
        trace = trace[-1:]
    return SolveReport(status=status, rounds=rounds, mismatch_trace=trace,
                       switching_events=events, restarts=restarts, final=state)
