"""Circle algebra on the 3-tuple representation a*(x.x) + b.x + c = 0.

A tuple with a != 0 is a circle (normalized here so a == 1); a == 0 is a
line.  Subtracting two normalized circles gives the radical line through
their intersection points; the smallest circle through those points (the
common-chord circle) gives a numerically robust way to compute them even
when the input radii differ by many orders of magnitude.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

TOL_GEOM = 1e-11          # absolute, on radius^2 of the chord circle
COINCIDENT_TOL = 1e-14
MAG_TIE_TOL = 1e-12


class GeometryError(Exception):
    pass


class NotACircle(GeometryError):
    pass


class CoincidentCircles(GeometryError):
    pass


class CoincidentCenters(GeometryError):
    pass


class NoSolution(GeometryError):
    pass


@dataclass(frozen=True)
class PlanePoint:
    x: float
    y: float

    def norm_sq(self) -> float:
        return self.x * self.x + self.y * self.y


@dataclass(frozen=True)
class CircleTuple:
    a: float
    bx: float
    by: float
    c: float

    def __post_init__(self):
        if self.a == 0.0 and self.bx == 0.0 and self.by == 0.0 and self.c == 0.0:
            raise GeometryError("all-zero tuple does not describe a point set")

    def residual(self, p: PlanePoint) -> float:
        return self.a * (p.x * p.x + p.y * p.y) + self.bx * p.x + self.by * p.y + self.c

    def rel_residual(self, p: PlanePoint) -> float:
        scale = max(1.0, math.hypot(self.bx, self.by), abs(self.c))
        return abs(self.residual(p)) / scale

    def normalized(self) -> "CircleTuple":
        """Scale so a == 1.  Raises NotACircle for lines (a == 0)."""
        if self.a == 0.0:
            raise NotACircle("tuple has a == 0 (a line)")
        if self.a == 1.0:
            return self
        return CircleTuple(1.0, self.bx / self.a, self.by / self.a, self.c / self.a)

    def is_real_circle(self) -> bool:
        n = self.normalized()
        return n.bx * n.bx / 4 + n.by * n.by / 4 - n.c >= 0.0


class IntersectionKind(Enum):
    TWO_POINTS = "two_points"
    TANGENT = "tangent"
    NO_INTERSECTION = "no_intersection"


@dataclass(frozen=True)
class IntersectionResult:
    kind: IntersectionKind
    points: tuple[PlanePoint, ...]


def real_power_circle(t, p: float) -> CircleTuple:
    """Active-power circle for coefficients t at equation-convention power p."""
    return CircleTuple(1.0, t.t2 / t.t1, t.t3 / t.t1, -p / t.t1)


def reactive_power_circle(t, q: float) -> CircleTuple:
    """Reactive-power circle for coefficients t at equation-convention power q."""
    return CircleTuple(1.0, -t.t3 / t.t4, t.t2 / t.t4, -q / t.t4)


def voltage_circle(v_ref: float) -> CircleTuple:
    """Magnitude-setpoint circle |v| = v_ref, centered at the origin."""
    return CircleTuple(1.0, 0.0, 0.0, -v_ref * v_ref)


def tuple_center_radius(circle: CircleTuple) -> tuple[PlanePoint, float]:
    """Center and radius^2; raises NotACircle when a == 0."""
    n = circle.normalized()
    center = PlanePoint(-n.bx / 2.0, -n.by / 2.0)
    r_sq = n.bx * n.bx / 4.0 + n.by * n.by / 4.0 - n.c
    return center, r_sq


def radical_line(c1: CircleTuple, c2: CircleTuple) -> CircleTuple:
    """Line through the intersection points of two circles: the tuple c1 - c2."""
    n1, n2 = c1.normalized(), c2.normalized()
    bx, by, c = n1.bx - n2.bx, n1.by - n2.by, n1.c - n2.c
    if abs(bx) < COINCIDENT_TOL and abs(by) < COINCIDENT_TOL and abs(c) < COINCIDENT_TOL:
        raise CoincidentCircles("circles coincide; radical line undefined")
    return CircleTuple(0.0, bx, by, c)


def orthogonal_circle(c1: CircleTuple, c2: CircleTuple) -> CircleTuple:
    """Smallest circle through the two intersection points (common chord as
    diameter).  Symmetric in its arguments."""
    n1, n2 = c1.normalized(), c2.normalized()
    dbx, dby = n1.bx - n2.bx, n1.by - n2.by
    dist_sq = dbx * dbx + dby * dby
    if dist_sq < 1e-24:
        raise CoincidentCenters("concentric circles have no chord circle")
    k1_sq = n1.bx * n1.bx + n1.by * n1.by - 4.0 * n1.c
    k2_sq = n2.bx * n2.bx + n2.by * n2.by - 4.0 * n2.c
    s = (k1_sq - k2_sq) / (2.0 * dist_sq)
    return CircleTuple(
        1.0,
        (n1.bx + n2.bx) / 2.0 + (n2.bx - n1.bx) * s,
        (n1.by + n2.by) / 2.0 + (n2.by - n1.by) * s,
        (n1.c + n2.c) / 2.0 + (n2.c - n1.c) * s,
    )


def intersect_circles(c1: CircleTuple, c2: CircleTuple,
                      tol_geom: float = TOL_GEOM) -> IntersectionResult:
    """Intersect two real circles via radical line + chord circle.

    The two candidate points are placed at the chord-circle center offset by
    its radius along the quarter-turn of the radical-line normal.
    """
    # inline normalization/radical-line/chord-circle arithmetic: this is
    # the solver's innermost loop, so intermediate tuples are avoided
    if c1.a == 1.0:
        b1x, b1y, cc1 = c1.bx, c1.by, c1.c
    else:
        if c1.a == 0.0:
            raise NotACircle("tuple has a == 0 (a line)")
        b1x, b1y, cc1 = c1.bx / c1.a, c1.by / c1.a, c1.c / c1.a
    if c2.a == 1.0:
        b2x, b2y, cc2 = c2.bx, c2.by, c2.c
    else:
        if c2.a == 0.0:
            raise NotACircle("tuple has a == 0 (a line)")
        b2x, b2y, cc2 = c2.bx / c2.a, c2.by / c2.a, c2.c / c2.a

    dbx, dby = b1x - b2x, b1y - b2y
    dist_sq = dbx * dbx + dby * dby
    if dist_sq < 1e-24:
        if abs(cc1 - cc2) < COINCIDENT_TOL:
            raise CoincidentCircles("identical circles")
        return IntersectionResult(IntersectionKind.NO_INTERSECTION, ())

    # chord circle per orthogonal_circle
    k1_sq = b1x * b1x + b1y * b1y - 4.0 * cc1
    k2_sq = b2x * b2x + b2y * b2y - 4.0 * cc2
    s = (k1_sq - k2_sq) / (2.0 * dist_sq)
    obx = (b1x + b2x) / 2.0 - dbx * s
    oby = (b1y + b2y) / 2.0 - dby * s
    oc = (cc1 + cc2) / 2.0 - (cc1 - cc2) * s
    cx, cy = -obx / 2.0, -oby / 2.0
    r_sq = obx * obx / 4.0 + oby * oby / 4.0 - oc
    if r_sq < -tol_geom:
        return IntersectionResult(IntersectionKind.NO_INTERSECTION, ())
    if r_sq <= tol_geom:
        return IntersectionResult(IntersectionKind.TANGENT, (PlanePoint(cx, cy),))

    r = math.sqrt(r_sq)
    # unit direction along the chord: quarter-turn of the radical-line
    # normal (dbx, dby)
    norm = math.hypot(dbx, dby)
    ux, uy = -dby / norm, dbx / norm
    p1 = PlanePoint(cx + r * ux, cy + r * uy)
    p2 = PlanePoint(cx - r * ux, cy - r * uy)
    return IntersectionResult(IntersectionKind.TWO_POINTS, (p1, p2))


def choose_pq_solution(res: IntersectionResult) -> PlanePoint:
    """Pick the higher-magnitude intersection point (the stable, high-voltage
    branch of the PV curve).  Magnitude ties break toward larger x, then y."""
    if res.kind is IntersectionKind.NO_INTERSECTION:
        raise NoSolution("circles do not intersect")
    if len(res.points) == 1:
        return res.points[0]
    p1, p2 = res.points
    m1, m2 = p1.norm_sq(), p2.norm_sq()
    if abs(m1 - m2) > MAG_TIE_TOL:
        return p1 if m1 > m2 else p2
    if p1.x != p2.x:
        return p1 if p1.x > p2.x else p2
    return p1 if p1.y > p2.y else p2


def choose_pv_solution(res: IntersectionResult) -> PlanePoint:
    """Pick the intersection point with the smaller absolute voltage angle;
    ties break toward positive imaginary part."""
    if res.kind is IntersectionKind.NO_INTERSECTION:
        raise NoSolution("circles do not intersect")
    if len(res.points) == 1:
        return res.points[0]
    p1, p2 = res.points
    a1, a2 = abs(math.atan2(p1.y, p1.x)), abs(math.atan2(p2.y, p2.x))
    if abs(a1 - a2) > MAG_TIE_TOL:
        return p1 if a1 < a2 else p2
    return p1 if p1.y >= p2.y else p2
