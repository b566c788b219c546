"""Per-unit network model, admittance construction, and power-circle coefficients.

Voltages are rectangular (vr + j*vi) throughout.  The quadratic power
balance at a non-slack bus d is parameterized by four scalars
(t1, t2, t3, t4) derived from the bus's admittance row and the present
neighbor voltages; t1 and t4 are strictly negative for any physically
sensible bus, which is what makes both balance equations circles in the
(vr, vi) plane.

Sign convention: evaluating the quadratic forms at a voltage yields the
power *consumed* at the bus; net injections (generation minus load) are
the negative of that.  See ``implied_injection``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

DIAG_EPS = 1e-12


class BusKind(Enum):
    SLACK = "slack"
    PQ = "pq"
    PV = "pv"


class NetworkError(Exception):
    """Base class for network-model errors."""


class DegenerateDiagonal(NetworkError):
    """A non-slack bus has a diagonal admittance with Re <= eps or Im >= -eps,
    so its power circles are undefined."""


class ValidationError(NetworkError):
    """The case data violates a structural invariant."""


@dataclass(frozen=True)
class BusSpec:
    """One bus, all quantities per-unit. p_inj/q_inj are net injections."""

    id: int
    kind: BusKind
    p_inj: float = 0.0
    q_inj: float = 0.0
    v_ref: float = 1.0
    q_min: float = -math.inf
    q_max: float = math.inf
    g_sh: float = 0.0
    b_sh: float = 0.0


@dataclass(frozen=True)
class BranchSpec:
    """One branch (line or transformer), per-unit, standard Pi model."""

    from_bus: int
    to_bus: int
    y_series: complex
    b_charge: float = 0.0
    tap: float = 1.0
    shift: float = 0.0  # radians

    def __post_init__(self):
        if self.tap <= 0:
            raise ValidationError(f"branch {self.from_bus}-{self.to_bus}: tap must be > 0")


@dataclass(frozen=True)
class TCoefficients:
    """Leading/linear coefficients of the two power circles at one bus."""

    t1: float
    t2: float
    t3: float
    t4: float


class AdmittanceModel:
    """Bus admittance matrix stored by rows: per-bus diagonal plus a
    neighbor list of (index, Y_dk) off-diagonal entries.

    Immutable after construction; safe for concurrent reads.
    """

    def __init__(self, diag, nbr_index, nbr_y):
        self.diag = diag                # complex ndarray, shape (n,)
        self.nbr_index = nbr_index      # list of int ndarrays
        self.nbr_y = nbr_y              # list of complex ndarrays
        self.n = len(diag)
        # plain-Python pairs for the solver hot loop (typical degree is
        # small, so looping beats numpy's per-call overhead)
        self.nbr_pairs = [list(zip(idx.tolist(), y.tolist()))
                          for idx, y in zip(nbr_index, nbr_y)]
        self._dense = None

    def dense(self) -> np.ndarray:
        """Full Ybus as a dense complex matrix (fine at desk scale); cached."""
        if self._dense is None:
            y = np.zeros((self.n, self.n), dtype=complex)
            np.fill_diagonal(y, self.diag)
            for d in range(self.n):
                y[d, self.nbr_index[d]] = self.nbr_y[d]
            self._dense = y
        return self._dense


def build_admittance(case) -> AdmittanceModel:
    """Assemble the per-row Ybus for a parsed case (standard Pi model).

    A branch (d, k) with series admittance y, total charging b_c, tap ratio
    tau and phase shift theta contributes (y + j*b_c/2)/tau^2 to diag[d],
    y + j*b_c/2 to diag[k], and -y/(tau*exp(-+j*theta)) off-diagonal.
    Bus shunts are added to the diagonal.

    Raises DegenerateDiagonal if any non-slack bus ends up with
    Re(Y_dd) <= eps or Im(Y_dd) >= -eps.
    """
    n = len(case.buses)
    diag = np.zeros(n, dtype=complex)
    offdiag: list[dict[int, complex]] = [dict() for _ in range(n)]

    for br in case.branches:
        d, k = br.from_bus, br.to_bus
        y = br.y_series
        ysh = 1j * br.b_charge / 2.0
        tau = br.tap
        rot = np.exp(1j * br.shift)
        diag[d] += (y + ysh) / (tau * tau)
        diag[k] += y + ysh
        yft = -y / (tau * np.conj(rot))
        ytf = -y / (tau * rot)
        offdiag[d][k] = offdiag[d].get(k, 0.0) + yft
        offdiag[k][d] = offdiag[k].get(d, 0.0) + ytf

    for bus in case.buses:
        diag[bus.id] += complex(bus.g_sh, bus.b_sh)

    for bus in case.buses:
        d = bus.id
        if bus.kind is BusKind.SLACK:
            continue
        if diag[d].real <= DIAG_EPS or diag[d].imag >= -DIAG_EPS:
            raise DegenerateDiagonal(
                f"bus {d}: Y_dd = {diag[d]:.6g} violates Re > 0, Im < 0; "
                "power circles are undefined here"
            )

    nbr_index = [np.array(sorted(offdiag[d].keys()), dtype=int) for d in range(n)]
    nbr_y = [np.array([offdiag[d][k] for k in nbr_index[d]], dtype=complex) for d in range(n)]
    return AdmittanceModel(diag, nbr_index, nbr_y)


def t_coefficients(model: AdmittanceModel, d: int, vr, vi) -> TCoefficients:
    """Circle coefficients at bus d given the present voltages.

    t1/t4 come from the diagonal only; t2/t3 from the Y-weighted neighbor
    voltage sum, so they change as neighbors move.
    """
    ydd = model.diag[d]
    if ydd.real <= DIAG_EPS or ydd.imag >= -DIAG_EPS:
        raise DegenerateDiagonal(f"bus {d}: Y_dd = {ydd:.6g}")
    w = 0.0 + 0.0j
    for k, y in model.nbr_pairs[d]:
        w += y * complex(vr[k], vi[k])
    return TCoefficients(t1=-ydd.real, t2=-w.real, t3=-w.imag, t4=ydd.imag)


def consumed_power(t: TCoefficients, vr: float, vi: float) -> tuple[float, float]:
    """Evaluate the two quadratic balance equations at (vr, vi).

    Returns the consumed (load-convention) active and reactive power.
    """
    vv = vr * vr + vi * vi
    p = t.t1 * vv + t.t2 * vr + t.t3 * vi
    q = t.t4 * vv - t.t3 * vr + t.t2 * vi
    return p, q


def implied_injection(t: TCoefficients, vr: float, vi: float) -> complex:
    """Net complex injection at (vr, vi) implied by the circle coefficients.

    Equals oracle_injection for coefficients built from the same voltages;
    a dedicated test pins this sign convention.
    """
    p, q = consumed_power(t, vr, vi)
    return complex(-p, -q)


def oracle_injection(model: AdmittanceModel, d: int, vr, vi) -> complex:
    """Independent injection oracle: S_d = v_d * conj(sum_k Y_dk v_k)."""
    idx = model.nbr_index[d]
    v_d = vr[d] + 1j * vi[d]
    i_d = model.diag[d] * v_d + np.sum(model.nbr_y[d] * (vr[idx] + 1j * vi[idx]))
    return v_d * np.conj(i_d)


def all_injections(model: AdmittanceModel, vr, vi) -> np.ndarray:
    """Vectorized oracle_injection for every bus."""
    v = vr + 1j * vi
    return v * np.conj(model.dense() @ v)
