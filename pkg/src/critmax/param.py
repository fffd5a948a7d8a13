"""Parameter-plane coordinates, parameter rays, classification and wakes."""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from fractions import Fraction

from .angles import Angle
from .boettcher import (INFINITY, ZERO, BoettcherError, _principal_log, boettcher_coordinate,
                        capture_time, check_pole, green, safe_radius_zero, wrap)
from .family import (DomainError, FamilyContext, classify_orbit, critical_orbit_with_derivative, critical_value,
                     evaluate, on_negative_axis)
from .rays import _orbit_deriv
from .special import SECTORS

_TWO_PI = 2 * math.pi
CAPTURE = "capture"


class ParameterError(ValueError):
    def __init__(self, message, diagnostic=None):
        super().__init__(message)
        self.diagnostic = diagnostic or {}


@dataclass(frozen=True)
class SectorConstants:
    """Angular data in turns: S = {0 <= arg a <= s_width}; Delta_d and Lambda_d start at delta_start."""
    d: int
    s_width: Fraction
    delta_start: Fraction
    delta_width: Fraction
    lambda_width: Fraction | None  # None for d = 3, where the image is the slit disk

    @classmethod
    def for_degree(cls, d: int) -> "SectorConstants":
        start = Fraction(0) if d % 2 == 1 else Fraction(1, 2)
        lam = Fraction(1, 2) + Fraction(1, 2 * (d - 2)) if d > 3 else None
        return cls(d, Fraction(1, 2 * (d - 1)), start, Fraction(1, 2) + Fraction(1, 2 * (d - 1)), lam)

    def in_delta(self, w: complex, tol: float = 1e-9) -> bool:
        x = (cmath.phase(w) / _TWO_PI - float(self.delta_start)) % 1.0
        return abs(w) > 1 and (x <= float(self.delta_width) + tol or x >= 1 - tol)

    def in_lambda(self, w: complex, tol: float = 1e-9) -> bool:
        if abs(w) >= 1:
            return False
        if self.lambda_width is None:
            return True
        x = (cmath.phase(w) / _TWO_PI - float(self.delta_start)) % 1.0
        return x <= float(self.lambda_width) + tol or x >= 1 - tol


def sector_bounds(d: int, sector: str) -> tuple[float, float]:
    """Argument interval (radians) of s(S) for the charted symmetries."""
    w = math.pi / (d - 1)
    if sector == "id":
        return 0.0, w
    if sector == "tau_sigma":
        # tau sigma (S) = reflection of S across the line of angle pi/(d-1)
        return w, 2 * w
    raise ValueError(f"unknown sector {sector!r}")


@dataclass(frozen=True)
class ComponentClass:
    kind: str  # "h_infinity", "h_zero", "capture" or "undecided"
    potential: float | None = None
    value: complex | None = None
    depth: int | None = None
    budget: int | None = None

    def to_json(self) -> dict:
        out = {"kind": self.kind}
        if self.potential is not None:
            out["potential"] = self.potential
        if self.value is not None:
            out["value"] = [self.value.real, self.value.imag]
        if self.depth is not None:
            out["depth"] = self.depth
        if self.budget is not None:
            out["budget"] = self.budget
        return out


def phi_infinity_param(ctx: FamilyContext) -> complex:
    if not classify_orbit(ctx, -ctx.a).escaped:
        raise ParameterError(f"a={ctx.a} is not in the escape locus")
    return boettcher_coordinate(ctx, INFINITY, critical_value(ctx))


def phi_zero_param(ctx: FamilyContext, budget: int = 10_000) -> complex:
    if ctx.a == 0:
        return 0j
    if on_negative_axis(ctx.a):
        raise DomainError("Phi_0 is not defined on the negative real axis")
    if capture_time(ctx, budget) != 0:
        raise ParameterError(f"a={ctx.a} is not in the main basin component")
    return boettcher_coordinate(ctx, ZERO, critical_value(ctx))


def phi_capture_param(ctx: FamilyContext, depth: int, budget: int = 10_000) -> complex:
    if depth < 1:
        raise ValueError("depth must be >= 1")
    if on_negative_axis(ctx.a):
        raise DomainError("Phi_U is not defined on the negative real axis")
    n = capture_time(ctx, budget)
    if n != depth:
        raise ParameterError(f"capture depth is {n}, not {depth}")
    w = critical_value(ctx)
    for _ in range(depth):
        w = evaluate(ctx, w)
    if w == 0:
        return 0j
    return boettcher_coordinate(ctx, ZERO, w)


def classify_parameter(ctx: FamilyContext, budget: int = 10_000) -> ComponentClass:
    out = classify_orbit(ctx, -ctx.a, budget)
    if out.escaped:
        return ComponentClass("h_infinity", potential=green(ctx, INFINITY, critical_value(ctx)).value)
    if not out.converged:
        return ComponentClass("undecided", budget=budget)
    n = capture_time(ctx, budget)
    if n is None:
        return ComponentClass("undecided", budget=budget)
    value = None
    if not on_negative_axis(ctx.a):
        try:
            value = phi_zero_param(ctx, budget) if n == 0 else phi_capture_param(ctx, n, budget)
        except (BoettcherError, ParameterError):
            value = None
    if n == 0:
        return ComponentClass("h_zero", value=value)
    return ComponentClass("capture", value=value, depth=n)


# ---------------------------------------------------------------------------
# parameter rays


@dataclass
class ParamTrace:
    locus: str
    angle: Angle
    sector: str
    samples: list = field(default_factory=list)  # (potential, a)
    status: str = "truncated"
    point: complex | None = None
    diagnostic: dict = field(default_factory=dict)
    depth: int = 0
    center: complex | None = None

    @property
    def points(self) -> list[complex]:
        return [a for _, a in self.samples]

    def tail_diameter(self, k: int = 10) -> float:
        pts = self.points[-k:]
        return max((abs(p - q) for p in pts for q in pts), default=math.inf)

    def to_json(self) -> dict:
        out = {
            "locus": self.locus if self.locus != CAPTURE else {"capture": self.depth,
                                                               "center": [self.center.real, self.center.imag]},
            "angle": str(self.angle),
            "sector": self.sector,
            "samples": [[s, a.real, a.imag] for s, a in self.samples],
            "status": self.status,
        }
        if self.point is not None:
            out["point"] = [self.point.real, self.point.imag]
        if self.diagnostic:
            out["diagnostic"] = self.diagnostic
        return out


class _Coordinate:
    """log Phi(a) at level N: the principal log phi of f_a^(N+depth)(v_a), with a-derivative."""

    def __init__(self, d: int, locus: str, depth: int = 0):
        self.d = d
        self.pole = INFINITY if locus == INFINITY else ZERO
        self.m = d if self.pole == INFINITY else d - 1
        self.depth = depth

    def top(self, ctx: FamilyContext) -> float:
        if self.pole == INFINITY:
            return math.log(8 * ctx.r_escape)
        lam = abs(ctx.require_lam())
        return max(math.log(4 / (lam * safe_radius_zero(ctx))), 1e-3)

    def level(self, ctx: FamilyContext, s: float) -> int:
        top = self.top(ctx) + 0.5
        n = 0
        while s * self.m**n < top:
            n += 1
            if n > 3000:
                raise ParameterError("potential too small", {"potential": s})
        return n

    def evaluate(self, a: complex, n: int):
        """(L, dL/da, rounding noise of L)."""
        ctx = FamilyContext(self.d, a)
        if self.pole == ZERO and (on_negative_axis(a) or a == 0):
            return None
        k = n + self.depth
        w, dw = critical_orbit_with_derivative(ctx, k)
        if not (cmath.isfinite(w) and cmath.isfinite(dw)) or w == 0:
            return None
        try:
            L, dl = _principal_log(ctx, self.pole, w)
            h = 1e-7 * (1 + abs(a))
            L2, _ = _principal_log(FamilyContext(self.d, a + h), self.pole, w)
        except (ZeroDivisionError, OverflowError, ValueError, DomainError):
            return None
        explicit = complex((L2 - L).real, wrap((L2 - L).imag)) / h
        J = dl * dw + explicit
        _, _, err = _orbit_deriv(ctx, critical_value(ctx), k, True)
        noise = 1e-15 * (1 + abs(a)) * abs(J) + (err / abs(w) if err is not None else math.inf)
        return L, J, noise


def _param_solve(coord: _Coordinate, a: complex, n: int, xi: complex, max_iter: int = 60):
    """Newton in a for L(a) = m^n xi mod 2 pi i; None on failure."""
    target = xi * coord.m**n
    ev = coord.evaluate(a, n)
    if ev is None:
        return None
    L, J, noise = ev

    def resid(L):
        return complex(L.real - target.real, wrap(L.imag - target.imag))

    r = resid(L)
    for _ in range(max_iter):
        if J == 0:
            return None
        step = r / J
        if abs(r) < max(1e-12, 16 * noise) or abs(step) <= 1e-13 * (1 + abs(a)):
            return a
        lam = 1.0
        for _ in range(30):
            b = a - lam * step
            ev = coord.evaluate(b, n)
            if ev is not None:
                rb = resid(ev[0])
                if abs(rb) < abs(r):
                    break
            lam *= 0.5
        else:
            # stalled at the rounding floor
            return a if abs(step) <= 1e-10 * (1 + abs(a)) else None
        a, (L, J, noise), r = b, ev, rb
    return a if abs(r / J) <= 1e-10 * (1 + abs(a)) else None


def _xi(coord: _Coordinate, t: Angle, s: float) -> complex:
    sign = 1 if coord.pole == INFINITY else -1
    return complex(sign * s, _TWO_PI * float(t))


def _asymptotic_roots(d: int, locus: str, w: complex) -> list[complex]:
    """Solutions of the leading-order relation Phi(a) = w."""
    if locus == INFINITY:
        # -(-a)^d/(d-1) = w
        base = cmath.log(-(d - 1) * w)
        return [-cmath.exp((base + 2j * math.pi * k) / d) for k in range(d)]
    e = (d - 1) ** 2 / (d - 2)
    K = -((d / (d - 1)) ** (1 / (d - 2))) * (-1) ** d / (d - 1)
    base = cmath.log(w / K)
    out = []
    for k in range(-int(e) - 2, int(e) + 3):
        la = (base + 2j * math.pi * k) / e
        if -math.pi < la.imag < math.pi:
            out.append(cmath.exp(la))
    return out


def _pick_root(roots, lo, hi, hint):
    def ang(x):
        return cmath.phase(x) % _TWO_PI

    span = hi - lo
    inside = [r for r in roots if ((ang(r) - lo) % _TWO_PI) <= span + 1e-9]
    if not inside:
        return None
    h = ang(hint)
    return min(inside, key=lambda r: abs(wrap(ang(r) - h)))


def _seed_potential(d: int, locus: str) -> float:
    if locus == INFINITY:
        return math.log(30.0**d / (d - 1))
    e = (d - 1) ** 2 / (d - 2)
    K = (d / (d - 1)) ** (1 / (d - 2)) / (d - 1)
    return -math.log(K * 0.02**e)


def default_param_s_max(d: int, locus: str) -> float:
    return _seed_potential(d, locus) if locus == INFINITY else 1.0


def trace_param_ray(d: int, locus: str, t, s_min: float, s_max: float | None = None, sector: str = "id",
                    hint: complex | None = None, component: complex | None = None, depth: int = 0,
                    ratio: float = 2.0) -> ParamTrace:
    """Trace the parameter ray of angle t in H_infinity, H_0 or a capture component.

    For locus "capture", component is a parameter inside the component and depth
    its capture time; the trace starts at the component center.
    """
    if not s_min > 0:
        raise ValueError("s_min must be positive")
    t = Angle(t)
    if sector not in SECTORS:
        raise ValueError(f"unknown sector {sector!r}")
    if locus == CAPTURE:
        return _trace_capture_ray(d, t, s_min, s_max, component, depth, ratio)
    check_pole(locus)
    coord = _Coordinate(d, locus)
    lo, hi = sector_bounds(d, sector)
    if hint is None:
        hint = cmath.exp(1j * (lo + 0.4 * (hi - lo)))
    s0 = _seed_potential(d, locus)
    if s_max is None:
        s_max = default_param_s_max(d, locus)
    s_start = max(s0, s_max) if locus == INFINITY else s0
    xi = _xi(coord, t, s_start)
    a = _pick_root(_asymptotic_roots(d, locus, cmath.exp(xi)), lo, hi, hint)
    trace = ParamTrace(locus, t, sector)
    if a is None:
        trace.diagnostic = {"error": f"angle {t} has no ray in sector {sector}"}
        return trace
    try:
        a = _refine(coord, a, t, s_start)
        if s_start != s_max:
            a = _param_move(coord, t, a, s_start, s_max)
    except ParameterError as e:
        trace.diagnostic = {"error": str(e), **e.diagnostic}
        return trace
    _continue(coord, trace, t, a, s_max, s_min, ratio)
    return trace


def _refine(coord, a, t, s):
    n = coord.level(FamilyContext(coord.d, a), s)
    b = _param_solve(coord, a, n, _xi(coord, t, s))
    if b is None:
        raise ParameterError("Newton failed at the seed", {"potential": s})
    return b


def _param_move(coord, t, a, s_from, s_to):
    s = s_from
    while s != s_to:
        n = coord.level(FamilyContext(coord.d, a), s)
        step = 1.0 / coord.m ** (n + 1)
        nxt = max(s_to, s - step) if s_to < s else min(s_to, s + step)
        if abs(nxt - s_to) < 1e-12 * s_to:
            nxt = s_to
        b = None
        for frac in (1.0, 0.25, 0.0625):
            mid = s + (nxt - s) * frac
            n2 = coord.level(FamilyContext(coord.d, a), mid)
            b = _param_solve(coord, a, n2, _xi(coord, t, mid))
            if b is not None:
                nxt = mid
                break
        if b is None:
            raise ParameterError("Newton continuation failed", {"potential": nxt})
        a, s = b, nxt
    return a


def _continue(coord, trace, t, a, s_max, s_min, ratio, tol=None):
    tol = 1e-9 * (1 + abs(a)) if tol is None else tol
    s = s_max
    trace.samples.append((s, a))
    while s > s_min:
        if len(trace.samples) >= 10 and trace.tail_diameter() <= 1e-13 * (1 + abs(a)):
            break
        s_next = max(s / ratio, s_min)
        try:
            a = _param_move(coord, t, a, s, s_next)
        except ParameterError as e:
            if len(trace.samples) >= 10 and trace.tail_diameter() <= tol:
                break
            trace.diagnostic = {"error": str(e), **e.diagnostic}
            return
        s = s_next
        trace.samples.append((s, a))
    if len(trace.samples) >= 10 and trace.tail_diameter() <= tol:
        trace.status = "landed"
        trace.point = a


def param_ray_point(d: int, locus: str, t, s: float, sector: str = "id", hint: complex | None = None) -> complex:
    tr = trace_param_ray(d, locus, t, s, max(s, default_param_s_max(d, locus)), sector, hint)
    if not tr.samples or tr.samples[-1][0] != s:
        raise ParameterError("parameter ray could not be traced", tr.diagnostic)
    return tr.samples[-1][1]


def capture_component_center(d: int, a: complex, depth: int) -> complex:
    """Newton on f_a^depth(v_a) = 0 from a parameter inside the component."""
    for _ in range(100):
        w, dw = critical_orbit_with_derivative(FamilyContext(d, a), depth)
        if dw == 0:
            raise ParameterError("center Newton hit a critical point")
        step = w / dw
        a -= step
        if abs(step) <= 1e-15 * (1 + abs(a)):
            break
    w, _ = critical_orbit_with_derivative(FamilyContext(d, a), depth)
    if abs(w) > 1e-12:
        raise ParameterError("center Newton did not converge", {"residual": abs(w)})
    return a


def _trace_capture_ray(d, t, s_min, s_max, component, depth, ratio):
    if component is None or depth < 1:
        raise ValueError("capture rays need a component parameter and depth >= 1")
    center = capture_component_center(d, complex(component), depth)
    coord = _Coordinate(d, ZERO, depth)
    if s_max is None:
        s_max = 1.0
    trace = ParamTrace(CAPTURE, t, "id", depth=depth, center=center)
    # start close to the center where Phi_U is nearly linear
    ctx = FamilyContext(d, center)
    lam = ctx.require_lam()
    _, dw = critical_orbit_with_derivative(ctx, depth)
    s_start = max(s_max, 12.0)
    a = center + cmath.exp(_xi(coord, t, s_start)) / (lam * dw)
    try:
        a = _refine(coord, a, t, s_start)
        if s_start != s_max:
            a = _param_move(coord, t, a, s_start, s_max)
    except ParameterError as e:
        trace.diagnostic = {"error": str(e), **e.diagnostic}
        return trace
    _continue(coord, trace, t, a, s_max, s_min, ratio)
    return trace


def critical_ray_angles(d: int, t, locus: str, sector: str = "id"):
    from .special import critical_ray_angles as _cra

    return _cra(d, t, locus, sector)


# ---------------------------------------------------------------------------
# wakes


def _winding(curve: list[complex], z: complex) -> int:
    total = 0.0
    n = len(curve)
    for i in range(n):
        u, v = curve[i] - z, curve[(i + 1) % n] - z
        if u == 0 or v == 0:
            return 0
        total += cmath.phase(v / u)
    return round(total / _TWO_PI)


def _segment_distance(z, p, q):
    d = q - p
    if d == 0:
        return abs(z - p)
    x = max(0.0, min(1.0, ((z - p) * d.conjugate()).real / abs(d) ** 2))
    return abs(z - (p + x * d))


@dataclass
class WakeBoundary:
    curve: list[complex]
    landing: complex

    def distance(self, a: complex) -> float:
        pts = self.curve
        return min(_segment_distance(a, pts[i], pts[i + 1]) for i in range(len(pts) - 1))


def wake_boundary(d: int, zeta, zeta_prime, landing: complex | None = None, sectors=("id", "id"),
                  hints=(None, None), s_min: float = 1e-10, tol: float = 2e-2) -> WakeBoundary:
    """Closed curve made of two external parameter rays joined at their common landing point."""
    rays = []
    for ang, sec, hint in zip((zeta, zeta_prime), sectors, hints):
        tr = trace_param_ray(d, INFINITY, ang, s_min, sector=sec, hint=hint)
        if len(tr.samples) < 2:
            raise ParameterError(f"parameter ray {Angle(ang)} could not be traced", tr.diagnostic)
        rays.append(tr.points)
    tails = (rays[0][-1], rays[1][-1])
    if landing is None:
        landing = 0.5 * (tails[0] + tails[1])
    gap = max(abs(tails[0] - landing), abs(tails[1] - landing))
    if gap > tol * (1 + abs(landing)):
        raise ParameterError("rays do not land at a common parameter",
                             {"tails": [[x.real, x.imag] for x in tails], "gap": gap})
    r0, r1 = rays
    radius = 4 * max(abs(r0[0]), abs(r1[0]))
    # far arc closing the curve; either arc gives the same side test below
    start, end = cmath.phase(r1[0]), cmath.phase(r0[0])
    sweep = (end - start) % _TWO_PI
    arc = [radius * cmath.exp(1j * (start + sweep * k / 64)) for k in range(65)]
    curve = r0 + [landing] + r1[::-1] + arc
    return WakeBoundary(curve, landing)


def wake_membership(d: int, a: complex, zeta, zeta_prime, boundary: WakeBoundary | None = None,
                    **kwargs) -> bool:
    """True iff a is separated from 0 by the two rays (the open wake)."""
    if boundary is None:
        boundary = wake_boundary(d, zeta, zeta_prime, **kwargs)
    a = complex(a)
    if boundary.distance(a) <= 1e-9 * (1 + abs(a)):
        return False
    return (_winding(boundary.curve, a) % 2) != (_winding(boundary.curve, 0j) % 2)
