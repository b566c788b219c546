"""Reference power-flow solvers: Newton-Raphson (polar), Gauss-Seidel,
and a damped Newton variant with a backtracking step multiplier.

All three report results through the same SolveReport type as the
fixed-point solver so the experiment harness can treat solvers uniformly.
Dense linear algebra throughout; desk-scale systems do not need sparsity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .caseio import NetworkCase
from .fpsolver import (DynamicKind, FlatStart, SolveReport, Status,
                       UniformRandomStart, VoltageState, mismatch)
from .netmodel import BusKind, build_admittance

DIVERGE_LIMIT = 1e6     # p.u. mismatch beyond which we call it divergence
MU_FLOOR = 2.0 ** -20
STALL_WINDOW = 50       # iterations without 1% improvement => oscillating


@dataclass
class BaselineConfig:
    tol: float = 1e-3
    max_iters: int | None = None    # None => per-solver default
    init: object = field(default_factory=FlatStart)
    enforce_q_limits: bool = False


def _start_voltages(case: NetworkCase, init) -> tuple[np.ndarray, np.ndarray]:
    """Initial (Vm, Va); PV/slack magnitudes are pinned at their setpoints."""
    n = len(case.buses)
    if isinstance(init, UniformRandomStart):
        rng = np.random.default_rng(init.seed)
        vm = rng.uniform(1.0 - init.alpha, 1.0 + init.alpha, size=n)
    else:
        vm = np.ones(n)
    va = np.zeros(n)
    for b in case.buses:
        if b.kind is not BusKind.PQ:
            vm[b.id] = b.v_ref
    return vm, va


def _as_state(case: NetworkCase, v: np.ndarray, kinds, q_clamped) -> VoltageState:
    return VoltageState(v.real.copy(), v.imag.copy(), list(kinds),
                        np.asarray(q_clamped, dtype=float).copy())


def _report(case, model, status, iters, trace, events, v, kinds, q_clamped):
    state = _as_state(case, v, kinds, q_clamped)
    return SolveReport(status=status, rounds=iters, mismatch_trace=trace,
                       switching_events=events, restarts=0, final=state)


def _dynamic_kinds(case: NetworkCase) -> list:
    m = {BusKind.SLACK: DynamicKind.SLACK, BusKind.PQ: DynamicKind.PQ,
         BusKind.PV: DynamicKind.PV}
    return [m[b.kind] for b in case.buses]


def _apply_q_switching(case, s_inj, vm, kinds, q_clamped, it, events) -> bool:
    """PV<->PQ switching on the current operating point; True if changed."""
    changed = False
    for b in case.buses:
        d = b.id
        if kinds[d] is DynamicKind.PV:
            q = s_inj[d].imag
            if q > b.q_max:
                kinds[d] = DynamicKind.PQ_MAX
                q_clamped[d] = b.q_max
            elif q < b.q_min:
                kinds[d] = DynamicKind.PQ_MIN
                q_clamped[d] = b.q_min
            else:
                continue
            events.append((it, d, "pv", kinds[d].value))
            changed = True
        elif kinds[d] is DynamicKind.PQ_MAX and vm[d] > b.v_ref:
            events.append((it, d, kinds[d].value, "pv"))
            kinds[d] = DynamicKind.PV
            vm[d] = b.v_ref
            changed = True
        elif kinds[d] is DynamicKind.PQ_MIN and vm[d] < b.v_ref:
            events.append((it, d, kinds[d].value, "pv"))
            kinds[d] = DynamicKind.PV
            vm[d] = b.v_ref
            changed = True
    return changed


def _mismatch_vector(case, ybus, vm, va, kinds, q_clamped, pvpq, pq):
    v = vm * np.exp(1j * va)
    s = v * np.conj(ybus @ v)
    p_spec = np.array([b.p_inj for b in case.buses])
    q_spec = np.array([
        q_clamped[b.id]
        if kinds[b.id] in (DynamicKind.PQ_MAX, DynamicKind.PQ_MIN)
        else b.q_inj
        for b in case.buses])
    f = np.concatenate([p_spec[pvpq] - s[pvpq].real, q_spec[pq] - s[pq].imag])
    return f, s, v


def _jacobian(ybus, v, vm, pvpq, pq):
    """Polar power-flow Jacobian blocks, dense."""
    ibus = ybus @ v
    diag_v = np.diag(v)
    diag_i = np.diag(ibus)
    diag_vnorm = np.diag(v / np.abs(v))
    ds_dva = 1j * diag_v @ np.conj(diag_i - ybus @ diag_v)
    ds_dvm = diag_v @ np.conj(ybus @ diag_vnorm) + np.conj(diag_i) @ diag_vnorm
    j11 = ds_dva[np.ix_(pvpq, pvpq)].real
    j12 = ds_dvm[np.ix_(pvpq, pq)].real
    j21 = ds_dva[np.ix_(pq, pvpq)].imag
    j22 = ds_dvm[np.ix_(pq, pq)].imag
    return np.block([[j11, j12], [j21, j22]])


def _index_sets(case, kinds):
    pvpq = [b.id for b in case.buses if kinds[b.id] is not DynamicKind.SLACK]
    pq = [b.id for b in case.buses if kinds[b.id]
          in (DynamicKind.PQ, DynamicKind.PQ_MAX, DynamicKind.PQ_MIN)]
    return np.array(pvpq), np.array(pq)


def _newton_loop(case: NetworkCase, cfg: BaselineConfig, damped: bool) -> SolveReport:
    model = build_admittance(case)
    ybus = model.dense()
    vm, va = _start_voltages(case, cfg.init)
    kinds = _dynamic_kinds(case)
    q_clamped = np.zeros(len(case.buses))
    max_iters = cfg.max_iters if cfg.max_iters is not None else (300 if damped else 100)
    trace: list = []
    events: list = []
    best_norm = math.inf
    stalled = 0

    pvpq, pq = _index_sets(case, kinds)
    for it in range(max_iters):
        f, s, v = _mismatch_vector(case, ybus, vm, va, kinds, q_clamped, pvpq, pq)
        max_mm = float(np.max(np.abs(f))) if f.size else 0.0
        trace.append(max_mm)
        if max_mm < cfg.tol:
            if cfg.enforce_q_limits and _apply_q_switching(
                    case, s, vm, kinds, q_clamped, it, events):
                pvpq, pq = _index_sets(case, kinds)
                continue
            return _report(case, model, Status.CONVERGED, it, trace,
                           events, v, kinds, q_clamped)
        if max_mm > DIVERGE_LIMIT or not np.isfinite(max_mm):
            return _report(case, model, Status.DIVERGED, it, trace,
                           events, v, kinds, q_clamped)
        try:
            step = np.linalg.solve(_jacobian(ybus, v, vm, pvpq, pq), f)
        except np.linalg.LinAlgError:
            return _report(case, model, Status.DIVERGED, it, trace,
                           events, v, kinds, q_clamped)
        if not np.all(np.isfinite(step)):
            return _report(case, model, Status.DIVERGED, it, trace,
                           events, v, kinds, q_clamped)

        n_ang = len(pvpq)
        if damped:
            norm0 = float(np.linalg.norm(f))
            mu = 1.0
            while mu > MU_FLOOR:
                va_try, vm_try = va.copy(), vm.copy()
                va_try[pvpq] += mu * step[:n_ang]
                vm_try[pq] += mu * step[n_ang:]
                f_try, _, _ = _mismatch_vector(case, ybus, vm_try, va_try,
                                               kinds, q_clamped, pvpq, pq)
                if np.linalg.norm(f_try) < norm0:
                    break
                mu *= 0.5
            va, vm = va_try, vm_try
            if np.linalg.norm(f_try) > best_norm * 0.99:
                stalled += 1
                if stalled >= STALL_WINDOW:
                    v = vm * np.exp(1j * va)
                    return _report(case, model, Status.OSCILLATING, it, trace,
                                   events, v, kinds, q_clamped)
            else:
                stalled = 0
            best_norm = min(best_norm, float(np.linalg.norm(f_try)))
        else:
            va[pvpq] += step[:n_ang]
            vm[pq] += step[n_ang:]

        if cfg.enforce_q_limits:
            v = vm * np.exp(1j * va)
            s = v * np.conj(ybus @ v)
            if _apply_q_switching(case, s, vm, kinds, q_clamped, it, events):
                pvpq, pq = _index_sets(case, kinds)

    v = vm * np.exp(1j * va)
    return _report(case, model, Status.MAX_ROUNDS_EXCEEDED, max_iters, trace,
                   events, v, kinds, q_clamped)


def solve_newton(case: NetworkCase, cfg: BaselineConfig | None = None) -> SolveReport:
    """Full Newton-Raphson in polar coordinates."""
    return _newton_loop(case, cfg or BaselineConfig(), damped=False)


def solve_damped_newton(case: NetworkCase, cfg: BaselineConfig | None = None) -> SolveReport:
    """Newton direction with a backtracking step multiplier; reports
    Oscillating when the residual stops improving."""
    return _newton_loop(case, cfg or BaselineConfig(), damped=True)


def solve_gauss_seidel(case: NetworkCase, cfg: BaselineConfig | None = None) -> SolveReport:
    """Classical complex-voltage Gauss-Seidel sweeps."""
    cfg = cfg or BaselineConfig()
    model = build_admittance(case)
    ybus = model.dense()
    vm, va = _start_voltages(case, cfg.init)
    v = vm * np.exp(1j * va)
    kinds = _dynamic_kinds(case)
    q_clamped = np.zeros(len(case.buses))
    max_iters = cfg.max_iters if cfg.max_iters is not None else 20000
    trace: list = []
    events: list = []
    state = _as_state(case, v, kinds, q_clamped)

    for it in range(max_iters):
        state.vr, state.vi = v.real.copy(), v.imag.copy()
        _, max_mm = mismatch(model, case, state)
        trace.append(max_mm)
        if max_mm < cfg.tol:
            return _report(case, model, Status.CONVERGED, it, trace,
                           events, v, kinds, q_clamped)
        if max_mm > DIVERGE_LIMIT or not math.isfinite(max_mm):
            return _report(case, model, Status.DIVERGED, it, trace,
                           events, v, kinds, q_clamped)
        for b in case.buses:
            d = b.id
            if kinds[d] is DynamicKind.SLACK:
                continue
            off = ybus[d] @ v - ybus[d, d] * v[d]
            if kinds[d] is DynamicKind.PV:
                q = (v[d] * np.conj(ybus[d] @ v)).imag
                if cfg.enforce_q_limits and (q > b.q_max or q < b.q_min):
                    q_clamped[d] = b.q_max if q > b.q_max else b.q_min
                    to = DynamicKind.PQ_MAX if q > b.q_max else DynamicKind.PQ_MIN
                    events.append((it, d, "pv", to.value))
                    kinds[d] = to
                    s_spec = complex(b.p_inj, q_clamped[d])
                    v[d] = (np.conj(s_spec / v[d]) - off) / ybus[d, d]
                else:
                    s_spec = complex(b.p_inj, q)
                    v_new = (np.conj(s_spec / v[d]) - off) / ybus[d, d]
                    v[d] = b.v_ref * v_new / abs(v_new)
            else:
                q_spec = (q_clamped[d] if kinds[d] in
                          (DynamicKind.PQ_MAX, DynamicKind.PQ_MIN) else b.q_inj)
                s_spec = complex(b.p_inj, q_spec)
                v[d] = (np.conj(s_spec / v[d]) - off) / ybus[d, d]
                if cfg.enforce_q_limits and kinds[d] in (
                        DynamicKind.PQ_MAX, DynamicKind.PQ_MIN):
                    if ((kinds[d] is DynamicKind.PQ_MAX and abs(v[d]) > b.v_ref)
                            or (kinds[d] is DynamicKind.PQ_MIN and abs(v[d]) < b.v_ref)):
                        events.append((it, d, kinds[d].value, "pv"))
                        kinds[d] = DynamicKind.PV
    return _report(case, model, Status.MAX_ROUNDS_EXCEEDED, max_iters, trace,
                   events, v, kinds, q_clamped)
