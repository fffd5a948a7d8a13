"""Puzzle graphs from periodic internal rays and their external partners.

A broken ray joins 0 to infinity: an internal ray, its landing point on the
boundary of the immediate basin, and the external ray landing at the same
point.  Pieces around the critical value are the sectors cut out by
consecutive broken rays, truncated by the equipotentials 1/(d-1)^n at 0 and
1/d^n at infinity.  Deeper arms are obtained by pulling back depth-0 arms, so
angle tags are exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .angles import Angle, in_arc
from .boettcher import INFINITY, ZERO, boettcher_log, green
from .family import DomainError, FamilyContext, critical_value, evaluate
from .rays import RayError, _lift_samples, _orbit_deriv, arc_points, land_ray, match_external_angle, trace_ray

_TWO_PI = 2 * math.pi
RATIO = 1.5
ARC_SAMPLES = 48
GUARD = 1e-8


class GraphError(ArithmeticError):
    """The graph is inadmissible or could not be realized."""

    def __init__(self, message, diagnostic=None):
        super().__init__(message)
        self.diagnostic = diagnostic or {}


@dataclass(frozen=True)
class GraphSpec:
    d: int
    l: int = 2
    epsilon: int = 1
    depth: int = 0

    def __post_init__(self):
        if self.d < 3:
            raise ValueError("degree must be >= 3")
        if self.epsilon not in (1, -1):
            raise ValueError("epsilon must be +1 or -1")
        if self.l < 1 or (self.d - 1) ** self.l - 1 < 2:
            raise ValueError(f"l={self.l} gives a degenerate angle for d={self.d}")
        if self.depth < 0:
            raise ValueError("depth must be >= 0")

    @property
    def theta(self) -> Angle:
        return Angle(self.epsilon, (self.d - 1) ** self.l - 1)

    @property
    def internal_orbit(self) -> tuple[Angle, ...]:
        return tuple(self.theta.times((self.d - 1) ** i) for i in range(self.l))

    def internal_angles(self, n: int) -> list[Angle]:
        """Exact preimages of the orbit under x(d-1)^n, sorted."""
        q = (self.d - 1) ** n
        return sorted({Angle((c.value + k) / q) for c in self.internal_orbit for k in range(q)},
                      key=lambda t: t.value)

    def to_json(self) -> dict:
        return {"d": self.d, "l": self.l, "epsilon": self.epsilon, "depth": self.depth,
                "theta": str(self.theta), "internal_orbit": [str(t) for t in self.internal_orbit]}


@dataclass
class Arm:
    """Broken ray: internal samples (decreasing potential), landing point, external samples from it."""
    angle: Angle
    depth: int
    point: complex
    internal: list[tuple[float, complex]]
    external_angle: Angle
    external: list[tuple[float, complex]]

    def to_json(self) -> dict:
        return {"angle": str(self.angle), "external_angle": str(self.external_angle),
                "point": [self.point.real, self.point.imag],
                "internal": [[s, z.real, z.imag] for s, z in self.internal],
                "external": [[s, z.real, z.imag] for s, z in self.external]}


@dataclass
class PieceDescriptor:
    depth: int
    internal: tuple[Angle, Angle]
    external: tuple[Angle, Angle]
    polygon: list[complex] | None = None

    def to_json(self, with_polygon: bool = False) -> dict:
        out = {"depth": self.depth, "internal": [str(t) for t in self.internal],
               "external": [str(t) for t in self.external]}
        if with_polygon and self.polygon is not None:
            out["polygon"] = [[z.real, z.imag] for z in self.polygon]
        return out


def _arc_width(lo: Angle, hi: Angle) -> Fraction:
    w = (hi - lo).value
    return w if w else Fraction(1)


def point_in_polygon(poly, z: complex) -> bool:
    """Even-odd crossing test."""
    p = np.asarray(poly, dtype=complex)
    x, y = p.real, p.imag
    x2, y2 = np.roll(x, -1), np.roll(y, -1)
    straddle = (y > z.imag) != (y2 > z.imag)
    with np.errstate(divide="ignore", invalid="ignore"):
        xc = x + (z.imag - y) * (x2 - x) / (y2 - y)
    return bool(np.count_nonzero(straddle & (z.real < xc)) % 2)


def polygon_distance(poly, z: complex) -> float:
    p = np.asarray(poly, dtype=complex)
    q = np.roll(p, -1)
    seg = q - p
    len2 = np.abs(seg) ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        u = np.where(len2 > 0, ((z - p) * seg.conj()).real / len2, 0.0)
    u = np.clip(u, 0.0, 1.0)
    return float(np.min(np.abs(z - (p + u * seg))))


class Realizer:
    """Lazily traced arms and sector polygons for one parameter."""

    def __init__(self, ctx: FamilyContext, spec: GraphSpec):
        if ctx.d != spec.d:
            raise ValueError("degree mismatch between context and graph spec")
        try:
            ctx.require_lam()
        except DomainError as e:
            raise GraphError(str(e)) from e
        self.ctx, self.spec = ctx, spec
        self.arms: dict[Angle, Arm] = {}
        self._polys: dict = {}
        self._base = set(spec.internal_orbit)
        for t in spec.internal_orbit:
            self.arms[t] = self._base_arm(t)

    def _trace_internal(self, t: Angle, s_min: float):
        tr = trace_ray(self.ctx, ZERO, t, s_min, ratio=RATIO)
        if tr.status == "crashed":
            raise GraphError(f"internal ray {t} crashes on a precritical point", {"angle": str(t)})
        if len(tr.samples) < 2:
            raise GraphError(f"internal ray {t} could not be traced", {"angle": str(t), **tr.diagnostic})
        return tr

    def _base_arm(self, t: Angle) -> Arm:
        ctx = self.ctx
        try:
            rec = land_ray(ctx, ZERO, t)
            if rec.kind != "repelling":
                raise GraphError(f"internal ray {t} lands at a parabolic point", {"angle": str(t)})
            eta = match_external_angle(ctx, t, self.spec.l)
        except RayError as e:
            raise GraphError(f"ray {t}: {e}", {"angle": str(t), **e.diagnostic}) from e
        inner = self._trace_internal(t, 1e-12)
        outer = trace_ray(ctx, INFINITY, eta, 1e-12, ratio=RATIO)
        if outer.status == "crashed" or len(outer.samples) < 2:
            raise GraphError(f"external ray {eta} could not be traced", {"angle": str(eta)})
        ext = [(0.0, rec.point)] + [(s, z) for s, z in reversed(outer.samples) if s <= 1.0]
        return Arm(t, 0, rec.point, [(s, z) for s, z in inner.samples if s <= 1.0], eta, ext)

    def arm(self, t: Angle) -> Arm:
        t = Angle(t)
        if t in self.arms:
            return self.arms[t]
        m = self.spec.d - 1
        j, u = 0, t
        while u not in self._base:
            j += 1
            u = u.times(m)
            if j > 64:
                raise ValueError(f"{t} is not a preimage of the internal orbit")
        parent = self.arms[u]
        ctx = self.ctx
        inner = self._trace_internal(t, 1e-10)
        tail = inner.points[-1]
        x = tail
        for _ in range(60):
            w, dw = _orbit_deriv(ctx, x, j)
            if w is None or dw == 0:
                break
            step = (w - parent.point) / dw
            x -= step
            if abs(step) <= 1e-15 * (1 + abs(x)):
                break
        if not abs(x - tail) <= 1e-4 * (1 + abs(x)):
            raise GraphError(f"internal ray {t} does not land at a preimage of its parent",
                             {"angle": str(t), "distance": abs(x - tail)})
        try:
            lifted = _lift_samples(ctx, [z for _, z in parent.external], x, j)
        except RayError as e:
            raise GraphError(f"external partner of {t} could not be lifted", {"angle": str(t)}) from e
        scale = self.spec.d ** j
        top = boettcher_log(ctx, INFINITY, lifted[-1]).imag / _TWO_PI
        k = round(top * scale - float(parent.external_angle.value))
        eta = Angle((parent.external_angle.value + k) / scale)
        if abs(((top - float(eta.value)) + 0.5) % 1.0 - 0.5) > 0.25 / scale:
            raise GraphError(f"external partner of {t} is ambiguous", {"angle": str(t)})
        ext = [(s / scale, z) for (s, _), z in zip(parent.external, lifted)]
        arm = Arm(t, j, x, [(s, z) for s, z in inner.samples if s <= 1.0], eta, ext)
        self.arms[t] = arm
        return arm

    def polygon(self, t: Angle, t2: Angle, n: int) -> list[complex]:
        """Boundary of the depth-n sector from broken ray t counterclockwise to t2."""
        key = (t, t2, n)
        if key in self._polys:
            return self._polys[key]
        d = self.spec.d
        lev0, lev_inf = 1.0 / (d - 1) ** n, 1.0 / d**n
        A, B = self.arm(t), self.arm(t2)
        try:
            arc_inf = arc_points(self.ctx, INFINITY, lev_inf, A.external_angle,
                                 _arc_width(A.external_angle, B.external_angle), ARC_SAMPLES)
            arc_zero = arc_points(self.ctx, ZERO, lev0, t2, -_arc_width(t, t2), ARC_SAMPLES)
        except RayError as e:
            raise GraphError(f"equipotential at depth {n} failed", {"depth": n, **e.diagnostic}) from e
        poly = [z for s, z in A.internal if s <= lev0] + [z for s, z in A.external if s <= lev_inf]
        poly += arc_inf
        poly += [z for s, z in reversed(B.external) if s <= lev_inf]
        poly += [z for s, z in reversed(B.internal) if s <= lev0]
        poly += arc_zero
        self._polys[key] = poly
        return poly

    def descriptor(self, t: Angle, t2: Angle, n: int) -> PieceDescriptor:
        return PieceDescriptor(n, (t, t2), (self.arm(t).external_angle, self.arm(t2).external_angle),
                               self.polygon(t, t2, n))

    def locate(self, z: complex, n: int, brackets) -> PieceDescriptor | None:
        """The sector among brackets containing z at depth n, or None."""
        hits = []
        for t, t2 in brackets:
            poly = self.polygon(t, t2, n)
            if polygon_distance(poly, z) <= GUARD * (1 + abs(z)):
                raise GraphError("point lies on the graph", {"depth": n, "angles": [str(t), str(t2)]})
            if point_in_polygon(poly, z):
                hits.append((t, t2))
        if len(hits) > 1:
            raise GraphError("point lies in several pieces", {"depth": n})
        return self.descriptor(*hits[0], n) if hits else None

    def critical_piece(self, piece: PieceDescriptor) -> list[complex]:
        """Boundary of the component of f^-1(piece) that contains -a (a double cover of the boundary)."""
        ctx = self.ctx
        poly = list(piece.polygon) + [piece.polygon[0]]
        p0 = poly[0]
        coeffs = np.zeros(ctx.d + 1, dtype=complex)
        coeffs[0], coeffs[1], coeffs[-1] = 1, ctx.c, -p0
        for root in np.roots(coeffs):
            try:
                once = _lift_samples(ctx, poly, complex(root), 1)
                if abs(once[-1] - once[0]) <= 1e-9 * (1 + abs(root)):
                    continue
                twice = _lift_samples(ctx, poly, once[-1], 1)
            except RayError:
                continue
            return once[:-1] + twice[:-1]
        raise GraphError("critical piece could not be lifted", {"depth": piece.depth + 1})


@dataclass
class PuzzleGraph:
    spec: GraphSpec
    realizer: Realizer
    angles: list[list[Angle]]

    def arms(self, n: int | None = None) -> list[Arm]:
        n = self.spec.depth if n is None else n
        return [self.realizer.arm(t) for t in self.angles[n]]

    def brackets(self, n: int):
        ts = self.angles[n]
        return [(ts[i], ts[(i + 1) % len(ts)]) for i in range(len(ts))]

    def to_json(self) -> dict:
        return {"spec": self.spec.to_json(),
                "depths": [{"depth": n, "internal": [str(t) for t in ts],
                            "external": [str(self.realizer.arm(t).external_angle) for t in ts]}
                           for n, ts in enumerate(self.angles)],
                "arms": [arm.to_json() for arm in self.arms()]}


def build_graph(ctx: FamilyContext, spec: GraphSpec) -> PuzzleGraph:
    """Realize every broken ray of depths 0..spec.depth."""
    realizer = Realizer(ctx, spec)
    angles = [spec.internal_angles(n) for n in range(spec.depth + 1)]
    for t in angles[-1]:
        realizer.arm(t)
    return PuzzleGraph(spec, realizer, angles)


def _exit_reason(ctx: FamilyContext, z: complex, n: int) -> str:
    d = ctx.d
    if green(ctx, INFINITY, z).value >= 1.0 / d**n:
        return "escape"
    try:
        if green(ctx, ZERO, z).value >= 1.0 / (d - 1) ** n:
            return "basin"
    except (DomainError, ArithmeticError):
        pass
    return "outside"


def locate_critical_value_piece(ctx: FamilyContext, graph: PuzzleGraph, n: int) -> PieceDescriptor:
    if not 0 <= n <= graph.spec.depth:
        raise ValueError(f"depth {n} not realized (graph depth {graph.spec.depth})")
    v = critical_value(ctx)
    piece = graph.realizer.locate(v, n, graph.brackets(n))
    if piece is not None:
        return piece
    reason = _exit_reason(ctx, v, n)
    if reason == "basin":
        # above the inner equipotential the piece is still determined by the angle of v
        turn = (boettcher_log(ctx, ZERO, v).imag / (2 * math.pi)) % 1.0
        for t, t2 in graph.brackets(n):
            if (turn - float(t.value)) % 1.0 < float(_arc_width(t, t2)):
                R = graph.realizer
                return PieceDescriptor(n, (t, t2), (R.arm(t).external_angle, R.arm(t2).external_angle))
    raise GraphError("critical value is outside the puzzle", {"depth": n, "reason": reason})


def _sub_brackets(spec: GraphSpec, piece: PieceDescriptor):
    t, t2 = piece.internal
    width = _arc_width(t, t2)
    inside = [s for s in spec.internal_angles(piece.depth + 1) if in_arc(s, t, width)]
    inside.sort(key=lambda s: (s - t).value)
    inside = [s for s in inside if s != t and s != t2]
    chain = [t] + inside + [t2]
    return list(zip(chain, chain[1:]))


@dataclass
class CriticalEnd:
    pieces: list[PieceDescriptor]
    angle_periods: list[int]
    period: int | None
    nondegenerate: list[bool]
    exit: dict | None = None
    critical_polygon: list[complex] | None = None

    def to_json(self) -> dict:
        return {"pieces": [p.to_json() for p in self.pieces], "angle_periods": self.angle_periods,
                "period": self.period, "nondegenerate": self.nondegenerate, "exit": self.exit}


def _angle_periods(spec: GraphSpec, pieces: list[PieceDescriptor]) -> list[int]:
    """k with (d-1)^k t_{n+k} = t_n and d^k zeta_{n+k} = zeta_n for every n past half the depth."""
    N = len(pieces) - 1
    n0 = max(1, N // 2)
    m0, m1 = spec.d - 1, spec.d
    out = []
    for k in range(1, N - n0 + 1):
        ok = all(
            tuple(x.times(m0**k) for x in pieces[n + k].internal) == pieces[n].internal
            and tuple(x.times(m1**k) for x in pieces[n + k].external) == pieces[n].external
            for n in range(n0, N - k + 1))
        if ok:
            out.append(k)
    return out


def _inside(poly, z: complex) -> bool:
    return polygon_distance(poly, z) > GUARD * (1 + abs(z)) and point_in_polygon(poly, z)


def critical_end(ctx: FamilyContext, l: int = 2, epsilon: int = 1, max_depth: int = 6,
                 realizer: Realizer | None = None) -> CriticalEnd:
    """Nested pieces P_0 ... P_N around the critical value and their periodicity."""
    if critical_value(ctx) == 0:
        raise ValueError("the critical value is the center of the basin; the end is trivial")
    spec = GraphSpec(ctx.d, l, epsilon, max_depth)
    try:
        R = realizer or Realizer(ctx, spec)
    except GraphError as e:
        e.diagnostic.setdefault("depth", 0)
        raise
    v = critical_value(ctx)
    ts = spec.internal_angles(0)
    pieces, exit_info = [], None
    brackets = [(ts[i], ts[(i + 1) % len(ts)]) for i in range(len(ts))]
    for n in range(max_depth + 1):
        try:
            piece = R.locate(v, n, brackets)
        except GraphError as e:
            e.diagnostic.setdefault("depth", n)
            raise
        if piece is None:
            exit_info = {"depth": n, "reason": _exit_reason(ctx, v, n)}
            break
        pieces.append(piece)
        if n < max_depth:
            brackets = _sub_brackets(spec, piece)
    nondeg = [p.internal[0] != q.internal[0] and p.internal[1] != q.internal[1]
              for p, q in zip(pieces, pieces[1:])]
    end = CriticalEnd(pieces, [], None, nondeg, exit_info)
    if exit_info is not None or not pieces:
        return end
    end.angle_periods = _angle_periods(spec, pieces)
    if end.angle_periods:
        end.critical_polygon = R.critical_piece(pieces[-1])
        for k in end.angle_periods:
            z = -ctx.a
            for _ in range(k):
                z = evaluate(ctx, z)
            if _inside(end.critical_polygon, z):
                end.period = k
                break
    return end


@dataclass
class RenormalizationReport:
    verdict: str
    period: int | None = None
    depth: int | None = None
    witness: dict = field(default_factory=dict)
    end: CriticalEnd | None = None

    def to_json(self) -> dict:
        out = {"verdict": self.verdict, "period": self.period, "depth": self.depth, "witness": self.witness}
        if self.end is not None:
            out["critical_end"] = self.end.to_json()
        return out


RENORMALIZABLE = "renormalizable"
NOT_RENORMALIZABLE = "not_renormalizable"
BUDGET_EXCEEDED = "budget_exceeded"


def detect_renormalization(ctx: FamilyContext, l: int = 2, epsilon: int = 1, max_depth: int = 6,
                           orbit_budget: int = 200) -> RenormalizationReport:
    v = critical_value(ctx)
    if v == 0:
        return RenormalizationReport(NOT_RENORMALIZABLE, witness={"reason": "basin", "depth": 0})
    try:
        end = critical_end(ctx, l, epsilon, max_depth)
    except GraphError:
        # no constructive rule picks the sign; try the other one
        end = critical_end(ctx, l, -epsilon, max_depth)
    if end.exit is not None:
        return RenormalizationReport(NOT_RENORMALIZABLE, witness=dict(end.exit), end=end)
    N = end.pieces[-1].depth
    if not end.angle_periods:
        return RenormalizationReport(BUDGET_EXCEEDED, depth=N, end=end)
    if end.period is None:
        return RenormalizationReport(NOT_RENORMALIZABLE, depth=N, end=end,
                                     witness={"reason": "critical piece does not return",
                                              "angle_periods": end.angle_periods, "depth": N + 1})
    k, z = end.period, -ctx.a
    for j in range(1, orbit_budget + 1):
        for _ in range(k):
            z = evaluate(ctx, z)
        if not _inside(end.critical_polygon, z):
            return RenormalizationReport(NOT_RENORMALIZABLE, depth=N, end=end,
                                         witness={"reason": "orbit leaves the critical piece", "iterate": j,
                                                  "point": [z.real, z.imag]})
    return RenormalizationReport(RENORMALIZABLE, k, N + 1, {"orbit_budget": orbit_budget}, end)
