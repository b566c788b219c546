"""MATPOWER-subset case parsing, load scaling, and result serialization.

Only the textual matrix layout is understood (mpc.baseMVA, mpc.bus,
mpc.gen, mpc.branch); no script content is ever executed.  Powers are
converted to per-unit on parse and generator injections are merged per
bus (net injection = generation - load).
"""

from __future__ import annotations

import csv
import json
import math
import re
import warnings
from dataclasses import dataclass, replace
from importlib import resources

from .netmodel import BranchSpec, BusSpec, BusKind, ValidationError


class ParseError(Exception):
    """Malformed case text (bad matrix row, missing section, ...)."""


@dataclass(frozen=True)
class NetworkCase:
    name: str
    base_mva: float
    buses: tuple[BusSpec, ...]
    branches: tuple[BranchSpec, ...]
    id_map: dict  # external bus id -> dense index


_MAT_RE = r"mpc\.%s\s*=\s*\[(.*?)\]\s*;"
_SCALAR_RE = r"mpc\.%s\s*=\s*([0-9eE+\-.]+)\s*;"


def _strip_comments(text: str) -> str:
    return "\n".join(line.split("%")[0] for line in text.splitlines())


def _read_matrix(text: str, name: str, min_cols: int) -> list[list[float]]:
    m = re.search(_MAT_RE % name, text, re.DOTALL)
    if not m:
        raise ParseError(f"missing mpc.{name} matrix")
    rows = []
    for chunk in m.group(1).replace("\n", " ").split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        try:
            row = [float(tok) for tok in chunk.split()]
        except ValueError as exc:
            raise ParseError(f"bad mpc.{name} row {chunk!r}: {exc}") from None
        if len(row) < min_cols:
            raise ParseError(
                f"mpc.{name} row has {len(row)} columns, expected >= {min_cols}"
            )
        rows.append(row)
    return rows


def _col(row: list[float], i: int, default: float = 0.0) -> float:
    return row[i] if i < len(row) else default


def parse_case(text: str, name: str = "case") -> NetworkCase:
    """Parse MATPOWER case text into a validated per-unit NetworkCase."""
    text = _strip_comments(text)
    m = re.search(_SCALAR_RE % "baseMVA", text)
    if not m:
        raise ParseError("missing mpc.baseMVA")
    base = float(m.group(1))
    if base <= 0:
        raise ParseError("baseMVA must be positive")

    bus_rows = _read_matrix(text, "bus", 6)
    gen_rows = _read_matrix(text, "gen", 6)
    branch_rows = _read_matrix(text, "branch", 4)

    id_map: dict[int, int] = {}
    for i, row in enumerate(bus_rows):
        ext = int(row[0])
        if ext in id_map:
            raise ParseError(f"duplicate bus id {ext}")
        id_map[ext] = i

    # aggregate in-service generators per bus
    gen_at: dict[int, list[list[float]]] = {}
    for row in gen_rows:
        if _col(row, 7, 1.0) == 0:  # GEN_STATUS
            continue
        ext = int(row[0])
        if ext not in id_map:
            raise ParseError(f"generator at unknown bus {ext}")
        gen_at.setdefault(ext, []).append(row)

    buses = []
    for row in bus_rows:
        ext = int(row[0])
        mtype = int(row[1])
        pd, qd, gs, bs = row[2], row[3], row[4], row[5]
        gens = gen_at.get(ext, [])
        pg = sum(g[1] for g in gens)
        qg = sum(g[2] for g in gens)
        if mtype == 3:
            kind = BusKind.SLACK
        elif mtype == 2 and gens:
            kind = BusKind.PV
        else:
            kind = BusKind.PQ
        v_ref = gens[0][5] if gens else _col(row, 7, 1.0)
        q_min = sum(g[4] for g in gens) if gens else -math.inf
        q_max = sum(g[3] for g in gens) if gens else math.inf
        buses.append(BusSpec(
            id=id_map[ext],
            kind=kind,
            p_inj=(pg - pd) / base,
            q_inj=(qg - qd) / base,
            v_ref=v_ref,
            # limits on the net injection: generator limits shifted by the load
            q_min=(q_min - qd) / base if gens else -math.inf,
            q_max=(q_max - qd) / base if gens else math.inf,
            g_sh=gs / base,
            b_sh=bs / base,
        ))

    branches = []
    for row in branch_rows:
        if _col(row, 10, 1.0) == 0:  # BR_STATUS
            continue
        f, t = int(row[0]), int(row[1])
        if f not in id_map or t not in id_map:
            raise ParseError(f"branch {f}-{t} references unknown bus")
        r, x = row[2], row[3]
        z = complex(r, x)
        if z == 0:
            raise ParseError(f"branch {f}-{t} has zero impedance")
        y = 1.0 / z
        if y.imag > 0:
            warnings.warn(
                f"branch {f}-{t} is capacitive (Im(y_series) > 0); the circle "
                "construction assumes inductive lines", stacklevel=2)
        tap = _col(row, 8, 0.0)
        branches.append(BranchSpec(
            from_bus=id_map[f],
            to_bus=id_map[t],
            y_series=y,
            b_charge=_col(row, 4, 0.0),
            tap=tap if tap != 0.0 else 1.0,
            shift=math.radians(_col(row, 9, 0.0)),
        ))

    case = NetworkCase(name=name, base_mva=base, buses=tuple(buses),
                       branches=tuple(branches), id_map=id_map)
    validate(case)
    return case


def validate(case: NetworkCase) -> None:
    slacks = [b for b in case.buses if b.kind is BusKind.SLACK]
    if len(slacks) != 1:
        raise ValidationError(f"expected exactly one slack bus, found {len(slacks)}")
    for b in case.buses:
        if b.kind is not BusKind.PQ:
            if b.v_ref <= 0:
                raise ValidationError(f"bus {b.id}: v_ref must be positive")
        if b.kind is BusKind.PV and b.q_min > b.q_max:
            raise ValidationError(f"bus {b.id}: q_min > q_max")
    n = len(case.buses)
    # connectivity via union-find
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for br in case.branches:
        if not (0 <= br.from_bus < n and 0 <= br.to_bus < n):
            raise ValidationError(f"dangling branch {br.from_bus}-{br.to_bus}")
        parent[find(br.from_bus)] = find(br.to_bus)
    roots = {find(i) for i in range(n)}
    if len(roots) > 1:
        raise ValidationError(f"network is disconnected ({len(roots)} islands)")


def scale_loading(case: NetworkCase, lam: float) -> NetworkCase:
    """Scale all PQ injections and PV active injections by lam.

    The slack bus, voltage setpoints and reactive limits are untouched.
    """
    if lam <= 0:
        raise ValueError("scaling factor must be positive")
    buses = []
    for b in case.buses:
        if b.kind is BusKind.PQ:
            buses.append(replace(b, p_inj=b.p_inj * lam, q_inj=b.q_inj * lam))
        elif b.kind is BusKind.PV:
            buses.append(replace(b, p_inj=b.p_inj * lam))
        else:
            buses.append(b)
    return replace(case, buses=tuple(buses))


_KIND_TO_MTYPE = {BusKind.SLACK: 3, BusKind.PV: 2, BusKind.PQ: 1}


def serialize_case(case: NetworkCase) -> str:
    """Emit the case back as MATPOWER text (the supported subset).

    Generation/load splits are not preserved: PQ injections become loads,
    PV/slack injections become one generator per bus.  Re-parsing the
    output reproduces the NetworkCase field-for-field.
    """
    inv = {v: k for k, v in case.id_map.items()}
    base = case.base_mva
    lines = [f"function mpc = {case.name}", "mpc.version = '2';",
             f"mpc.baseMVA = {base:g};", "mpc.bus = ["]
    for b in case.buses:
        pd = -b.p_inj * base if b.kind is BusKind.PQ else 0.0
        qd = -b.q_inj * base if b.kind is BusKind.PQ else 0.0
        lines.append(
            f"\t{inv[b.id]}\t{_KIND_TO_MTYPE[b.kind]}\t{pd:.10g}\t{qd:.10g}"
            f"\t{b.g_sh * base:.10g}\t{b.b_sh * base:.10g}\t1\t1\t0\t0\t1\t1.1\t0.9;")
    lines.append("];")
    lines.append("mpc.gen = [")
    for b in case.buses:
        if b.kind is BusKind.PQ:
            continue
        qmax = b.q_max * base if math.isfinite(b.q_max) else 9999.0
        qmin = b.q_min * base if math.isfinite(b.q_min) else -9999.0
        lines.append(
            f"\t{inv[b.id]}\t{b.p_inj * base:.10g}\t0\t{qmax:.10g}\t{qmin:.10g}"
            f"\t{b.v_ref:.10g}\t{base:g}\t1\t9999\t0;")
    lines.append("];")
    lines.append("mpc.branch = [")
    for br in case.branches:
        lines.append(
            f"\t{inv[br.from_bus]}\t{inv[br.to_bus]}"
            f"\t{br.y_series.real / abs(br.y_series) ** 2:.12g}"
            f"\t{-br.y_series.imag / abs(br.y_series) ** 2:.12g}"
            f"\t{br.b_charge:.10g}\t0\t0\t0\t{br.tap:.10g}"
            f"\t{math.degrees(br.shift):.10g}\t1;")
    lines.append("];")
    return "\n".join(lines) + "\n"


def bundled_case_names() -> list[str]:
    files = resources.files("circleflow").joinpath("cases")
    return sorted(p.name[:-2] for p in files.iterdir() if p.name.endswith(".m"))


def load_case(path_or_name: str) -> NetworkCase:
    """Load a case from a file path or a bundled case name (e.g. 'case14')."""
    bundled = resources.files("circleflow").joinpath(f"cases/{path_or_name}.m")
    if "/" not in path_or_name and not path_or_name.endswith(".m") and bundled.is_file():
        return parse_case(bundled.read_text(), name=path_or_name)
    with open(path_or_name) as fh:
        text = fh.read()
    stem = path_or_name.rsplit("/", 1)[-1]
    if stem.endswith(".m"):
        stem = stem[:-2]
    return parse_case(text, name=stem)


def report_to_dict(case: NetworkCase, report, solver: str, lam: float = 1.0) -> dict:
    """JSON-ready summary of a solve (schema shared by all solvers)."""
    inv = {v: k for k, v in case.id_map.items()}
    voltages = []
    for b in case.buses:
        vr = report.final.vr[b.id]
        vi = report.final.vi[b.id]
        voltages.append({
            "bus": inv[b.id],
            "vm": math.hypot(vr, vi),
            "va_deg": math.degrees(math.atan2(vi, vr)),
            "vr": vr,
            "vi": vi,
        })
    return {
        "case": case.name,
        "lambda": lam,
        "solver": solver,
        "status": report.status.value,
        "rounds": report.rounds,
        "restarts": report.restarts,
        "final_mismatch": report.mismatch_trace[-1] if report.mismatch_trace else None,
        "mismatch_trace": list(report.mismatch_trace),
        "switching_events": [list(ev) for ev in report.switching_events],
        "voltages": voltages,
    }


def write_report_json(path: str, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_trace_csv(path: str, trace) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["round", "max_mismatch_pu"])
        for i, value in enumerate(trace):
            writer.writerow([i, f"{value:.12e}"])
