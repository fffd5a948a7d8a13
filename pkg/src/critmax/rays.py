"""Internal rays (from 0), external rays (from infinity), center rays and equipotentials.

A point of potential s on the ray of angle t is found by the pullback scheme:
choose n so that the target at potential m^n s and angle m^n t sits in the
certified Böttcher region, invert phi there, then solve f^n(z) = W by Newton
starting from the previous sample.  Potentials decrease along a trace.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from fractions import Fraction

from .angles import Angle, angle_orbit
from .boettcher import (INFINITY, ZERO, BoettcherError, Undecidable, _lift, _principal_log, base, basin_path,
                        boettcher_log, check_pole, critical_potential, green, safe_radius_zero, wrap)
from .family import FamilyContext, critical_value, evaluate

_TWO_PI = 2 * math.pi


class RayError(ArithmeticError):
    def __init__(self, message, diagnostic=None):
        super().__init__(message)
        self.diagnostic = diagnostic or {}


@dataclass
class RayTrace:
    pole: str
    angle: Angle
    samples: list = field(default_factory=list)  # (potential, point)
    status: str = "truncated"  # "landed", "crashed" or "truncated"
    point: complex | None = None
    diagnostic: dict = field(default_factory=dict)
    center: complex | None = None

    @property
    def points(self) -> list[complex]:
        return [z for _, z in self.samples]

    def tail_diameter(self, k: int = 10) -> float:
        pts = self.points[-k:]
        return max((abs(p - q) for p in pts for q in pts), default=math.inf)

    def to_json(self) -> dict:
        pole = self.pole if self.center is None else {"center": [self.center.real, self.center.imag]}
        out = {
            "pole": pole,
            "angle": str(self.angle),
            "samples": [[s, z.real, z.imag] for s, z in self.samples],
            "status": self.status,
        }
        if self.point is not None:
            out["point"] = [self.point.real, self.point.imag]
        if self.diagnostic:
            out["diagnostic"] = self.diagnostic
        return out


@dataclass(frozen=True)
class LandingRecord:
    point: complex
    preperiod: int
    period: int
    multiplier: complex
    kind: str  # "repelling" or "parabolic"
    residual: float

    def to_json(self) -> dict:
        return {
            "point": [self.point.real, self.point.imag],
            "preperiod": self.preperiod,
            "period": self.period,
            "multiplier": [self.multiplier.real, self.multiplier.imag],
            "kind": self.kind,
            "residual": self.residual,
        }


def epsilon_land(ctx: FamilyContext) -> float:
    return 1e-9 * (1 + abs(ctx.a))


def _top_level(ctx: FamilyContext, pole: str) -> float:
    """Potential above which the target needs no pullback (n = 0)."""
    if pole == INFINITY:
        return math.log(8 * ctx.r_escape)
    lam = abs(ctx.require_lam())
    return max(math.log(4 / (lam * safe_radius_zero(ctx))), 1e-3)


def _levels(ctx: FamilyContext, pole: str, s: float) -> int:
    m = base(ctx, pole)
    top = _top_level(ctx, pole)
    n = 0
    while s * m**n < top:
        n += 1
        if n > 2000:
            raise RayError("potential too small", {"potential": s})
    return n


def _target(ctx: FamilyContext, pole: str, t: Angle, s: float, n: int) -> complex:
    """Principal log of W = phi^-1(exp(+-m^n s + 2 pi i m^n t)) in the certified region."""
    m = base(ctx, pole)
    ang = float(Angle(t).times(m**n)) * _TWO_PI
    if pole == INFINITY:
        xi = complex(s * m**n, ang)
        w = cmath.exp(xi)
    else:
        xi = complex(-s * m**n, ang)
        w = cmath.exp(xi) / ctx.require_lam()
    for _ in range(40):
        L, dl = _principal_log(ctx, pole, w)
        r = complex(L.real - xi.real, wrap(L.imag - xi.imag))
        w -= r / dl
        if abs(r) < 1e-15:
            break
    return cmath.log(w)


def _orbit_deriv(ctx: FamilyContext, z: complex, n: int, with_error: bool = False):
    """f^n(z) and (f^n)'(z); optionally also a forward rounding-error bound on f^n(z)."""
    d, a, c = ctx.d, ctx.a, ctx.c
    dz = 1 + 0j
    err = 1.2e-16 * abs(z)
    for _ in range(n):
        zd2 = z ** (d - 2)
        fp = d * zd2 * (z + a)
        dz *= fp
        z = zd2 * z * (z + c)
        if not (abs(z) < 1e300):
            return (None, None, None) if with_error else (None, None)
        err = abs(fp) * err + 4e-16 * (abs(z) + abs(zd2) * abs(z) * abs(c))
    return (z, dz, err) if with_error else (z, dz)


def _log_residual(w: complex, log_target: complex) -> complex:
    lw = cmath.log(w)
    return complex(lw.real - log_target.real, wrap(lw.imag - log_target.imag))


def solve_pullback(ctx: FamilyContext, z: complex, n: int, log_target: complex,
                   tol: float = 1e-13, max_iter: int = 80):
    """Newton for log f^n(z) = log_target starting at z; None on failure."""
    w, dw, err = _orbit_deriv(ctx, z, n, True)
    if w is None or w == 0 or dw == 0:
        return None
    r = _log_residual(w, log_target)
    for _ in range(max_iter):
        # below this the residual is rounding noise
        floor = max(tol, 2 * err / abs(w))
        if abs(r) < floor:
            return z
        step = r * w / dw
        lam = 1.0
        for _ in range(30):
            y = z - lam * step
            wy, dwy, ey = _orbit_deriv(ctx, y, n, True)
            if wy is not None and wy != 0 and dwy != 0:
                ry = _log_residual(wy, log_target)
                if abs(ry) < abs(r) or abs(ry) < floor:
                    break
            lam *= 0.5
        else:
            return None
        z, w, dw, err, r = y, wy, dwy, ey, ry
    return z if abs(r) < 1e3 * max(tol, 2 * err / abs(w)) else None


def _point(ctx, pole, t, s, seed):
    n = _levels(ctx, pole, s)
    return solve_pullback(ctx, seed, n, _target(ctx, pole, t, s, n))


def _move(ctx, pole, t, z, s_from, s_to):
    """Continue along the ray of angle t from potential s_from to s_to."""
    m = base(ctx, pole)
    s = s_from
    while s != s_to:
        # image displacement at most 1 in log coordinates at the next level
        step = 1.0 / m ** (_levels(ctx, pole, s) + 1)
        nxt = max(s_to, s - step) if s_to < s else min(s_to, s + step)
        if abs(nxt - s_to) < 1e-12 * s_to:
            nxt = s_to
        y = _point(ctx, pole, t, nxt, z)
        if y is None:
            for k in (0.25, 0.0625):
                mid = s + (nxt - s) * k
                y = _point(ctx, pole, t, mid, z)
                if y is not None:
                    nxt = mid
                    break
            else:
                raise RayError("Newton continuation failed", {"potential": nxt})
        z, s = y, nxt
    return z


def _start(ctx: FamilyContext, pole: str, t: Angle, s: float) -> complex:
    top = max(_top_level(ctx, pole), s)
    n = _levels(ctx, pole, top)
    z = cmath.exp(_target(ctx, pole, t, top, n))
    if n:
        z = _point(ctx, pole, t, top, z)
    if top != s:
        z = _move(ctx, pole, t, z, top, s)
    return z


def ray_point(ctx: FamilyContext, pole: str, t, s: float) -> complex:
    """The point of potential s on the ray of angle t (no crash checks)."""
    check_pole(pole)
    return _start(ctx, pole, Angle(t), s)


def default_s_max(ctx: FamilyContext, pole: str) -> float:
    s_c = critical_potential(ctx, pole)
    if not math.isfinite(s_c):
        # critical point lands on the pole itself
        return max(2.0, _top_level(ctx, pole))
    return 2 * max(1.0, s_c)


def _critical_angle(ctx: FamilyContext, pole: str):
    """(level, angle) of the critical value when -a is in the pole's basin."""
    s_c = critical_potential(ctx, pole)
    if not s_c > 0 or not math.isfinite(s_c):
        return None
    try:
        lv = boettcher_log(ctx, pole, critical_value(ctx))
    except BoettcherError:
        return None
    return s_c, (lv.imag / _TWO_PI) % 1.0


def _crash_levels(ctx, pole, t, s_min, s_max):
    info = _critical_angle(ctx, pole)
    if info is None:
        return []
    s_c, theta_v = info
    m = base(ctx, pole)
    out = []
    k = 0
    while s_c / m**k > s_min:
        level = s_c / m**k
        if level < s_max:
            x = float(Angle(t).times(m ** (k + 1)).value) - theta_v
            x -= round(x)
            if abs(x) < 1e-7:
                out.append((level, k))
        k += 1
        if k > 200:
            break
    return out


def _approach(ctx, pole, t, z, s, level, k):
    """Creep towards a crash level; report whether the ray hits a precritical point."""
    for j in range(1, 48):
        s_next = level * (1 + 2.0**-j)
        if s_next >= s:
            continue
        try:
            z = _move(ctx, pole, t, z, s, s_next)
        except RayError:
            break
        s = s_next
    w = z
    for _ in range(k):
        w = evaluate(ctx, w)
    dist = abs(w + ctx.a)
    return z, s, dist <= 1e-4 * (1 + abs(ctx.a)), dist


def potential_defect(ctx: FamilyContext, pole: str, z: complex, s: float) -> tuple[float, float]:
    """(|G(z) - s|, allowed): 1e-6 s plus the rounding floor of G at z."""
    m = base(ctx, pole)
    n = _levels(ctx, pole, s)
    w, dw, err = _orbit_deriv(ctx, z, n, True)
    noise = 4 * (err + 1e-16 * (1 + abs(z)) * abs(dw)) / abs(w) / m**n if w else math.inf
    pot = green(ctx, pole, z).value
    return abs(pot - s), 1e-6 * s + noise


def trace_ray(ctx: FamilyContext, pole: str, t, s_min: float, s_max: float | None = None,
              ratio: float = 2.0, land_tol: float | None = None) -> RayTrace:
    check_pole(pole)
    if not s_min > 0:
        raise ValueError("s_min must be positive")
    t = Angle(t)
    if pole == ZERO:
        ctx.require_lam()
    if s_max is None:
        s_max = default_s_max(ctx, pole)
    trace = RayTrace(pole, t)
    try:
        z = _start(ctx, pole, t, s_max)
    except RayError as e:
        trace.diagnostic = {"error": str(e), **e.diagnostic}
        return trace
    crashes = _crash_levels(ctx, pole, t, s_min, s_max)
    tol = epsilon_land(ctx) if land_tol is None else land_tol
    s = s_max
    trace.samples.append((s, z))
    while s > s_min:
        if len(trace.samples) >= 10 and trace.tail_diameter() <= 1e-13 * (1 + abs(z)):
            # converged to rounding level; deeper samples carry no information
            break
        s_next = max(s / ratio, s_min)
        zc, sc = z, s
        try:
            for level, k in [c for c in crashes if s_next <= c[0] < s]:
                zc, sc, crashed, dist = _approach(ctx, pole, t, zc, sc, level, k)
                if crashed:
                    trace.samples.append((sc, zc))
                    trace.status = "crashed"
                    trace.point = zc
                    trace.diagnostic = {"level": level, "depth": k, "distance": dist}
                    return trace
            z = _move(ctx, pole, t, zc, sc, s_next)
        except RayError as e:
            if len(trace.samples) >= 10 and trace.tail_diameter() <= tol:
                break
            trace.diagnostic = {"error": str(e), **e.diagnostic}
            return trace
        s = s_next
        defect, allowed = potential_defect(ctx, pole, z, s)
        if not defect <= allowed:
            trace.diagnostic = {"error": "potential check failed", "defect": defect, "expected": s}
            return trace
        trace.samples.append((s, z))
    if len(trace.samples) >= 10 and trace.tail_diameter() <= tol:
        trace.status = "landed"
        trace.point = z
    return trace


def _refine_landing(ctx, z, l, p):
    def h(x):
        y, dy = x, 1 + 0j
        fl = dfl = None
        for i in range(l + p):
            if i == l:
                fl, dfl = y, dy
            y, dy = evaluate(ctx, y), ctx.d * y ** (ctx.d - 2) * (y + ctx.a) * dy
        if l + p == l:
            fl, dfl = y, dy
        return y - fl, dy - dfl

    best, best_r = z, math.inf
    for _ in range(300):
        r, dr = h(z)
        if abs(r) < best_r:
            best, best_r = z, abs(r)
        if dr == 0 or not cmath.isfinite(r):
            break
        step = r / dr
        z = z - step
        if abs(step) <= 1e-15 * (1 + abs(z)):
            break
    r, _ = h(z)
    if abs(r) <= best_r:
        best, best_r = z, abs(r)
    return best, best_r


def _inverse_step(ctx, w, k, seed):
    """Newton for f^k(z) = w from seed."""
    z = seed
    for _ in range(60):
        y, dy = _orbit_deriv(ctx, z, k)
        if y is None or dy == 0:
            return None
        step = (y - w) / dy
        z -= step
        if abs(step) <= 1e-16 * (1 + abs(z)):
            break
    return z


def _periodic_tail(ctx, z, p, l, tol, max_steps=20000):
    """Continue a landing ray by pulling its image back along the cycle.

    z is a deep sample; f^l(z) lies on a ray of period p, whose successive
    pullbacks under f^p approach the landing cycle.
    """
    w = z
    for _ in range(l):
        w = evaluate(ctx, w)
    prev_z = z
    for _ in range(max_steps):
        w_new = _inverse_step(ctx, w, p, w)
        if w_new is None:
            break
        z_new = _inverse_step(ctx, w_new, l, prev_z) if l else w_new
        if z_new is None:
            break
        moved = abs(z_new - prev_z)
        w, prev_z = w_new, z_new
        if moved <= tol:
            break
    return prev_z


def land_ray(ctx: FamilyContext, pole: str, t, s_min: float = 1e-30, tail_tol: float = 1e-7) -> LandingRecord:
    """Trace the ray of rational angle t and refine its landing point."""
    check_pole(pole)
    t = Angle(t)
    orb = angle_orbit(t, base(ctx, pole))
    l, p = orb.preperiod, orb.period
    s_top = default_s_max(ctx, pole)
    trace = trace_ray(ctx, pole, t, s_min, s_top, land_tol=tail_tol * (1 + abs(ctx.a)))
    if trace.status == "crashed":
        raise RayError("ray crashes before landing", trace.diagnostic)
    if len(trace.samples) < 2 or (trace.status != "landed" and trace.samples[-1][0] > s_min):
        raise RayError("ray could not be traced", trace.diagnostic)
    tail = trace.points[-1]
    spread = max(trace.tail_diameter(), 1e-12)
    if trace.status != "landed":
        tail = _periodic_tail(ctx, tail, p, l, 1e-14 * (1 + abs(tail)))
    x, res = _refine_landing(ctx, tail, l, p)
    y = x
    for _ in range(l):
        y = evaluate(ctx, y)
    mult = 1 + 0j
    for _ in range(p):
        mult *= ctx.d * y ** (ctx.d - 2) * (y + ctx.a)
        y = evaluate(ctx, y)
    scale = 1 + abs(x)
    if res > 1e-9 * scale**ctx.d or abs(x - tail) > max(1e3 * spread, 1e-3 * scale):
        raise RayError("landing refinement unstable",
                       {"residual": res, "distance_to_tail": abs(x - tail), "tail_diameter": spread})
    if abs(mult) > 1 + 1e-6:
        kind = "repelling"
    elif abs(mult) >= 1 - 1e-6:
        kind = "parabolic"
    else:
        raise RayError("landing point is attracting", {"multiplier": [mult.real, mult.imag]})
    return LandingRecord(x, l, p, mult, kind, res)


def equipotential(ctx: FamilyContext, pole: str, v: float, n_samples: int = 256,
                  t0=0) -> list[complex]:
    """Points of potential v at angles t0 + k/n_samples, continued in angle."""
    check_pole(pole)
    m = base(ctx, pole)
    t0 = Angle(t0)
    z = _start(ctx, pole, t0, v)
    n = _levels(ctx, pole, v)
    sub = max(1, math.ceil(m**n * _TWO_PI / n_samples / 0.5))
    out = [z]
    for k in range(1, n_samples):
        for j in range(1, sub + 1):
            t = t0 + Fraction((k - 1) * sub + j, n_samples * sub)
            y = solve_pullback(ctx, z, n, _target(ctx, pole, t, v, n))
            if y is None:
                raise RayError("equipotential continuation failed", {"angle": str(t)})
            z = y
        out.append(z)
    return out


def arc_points(ctx: FamilyContext, pole: str, v: float, t_from: Angle, width: Fraction,
               n_samples: int, seed: complex | None = None) -> list[complex]:
    """Points of the equipotential v from angle t_from over a (signed) angular width."""
    m = base(ctx, pole)
    n = _levels(ctx, pole, v)
    z = seed if seed is not None else _start(ctx, pole, t_from, v)
    total = max(n_samples, math.ceil(abs(float(width)) * m**n * _TWO_PI / 0.5))
    out = [z]
    for j in range(1, total + 1):
        t = t_from + width * Fraction(j, total)
        y = solve_pullback(ctx, z, n, _target(ctx, pole, t, v, n))
        if y is None:
            raise RayError("equipotential continuation failed", {"angle": str(t)})
        z = y
        out.append(z)
    if len(out) > n_samples + 1:
        stride = len(out) / n_samples
        out = [out[min(len(out) - 1, round(i * stride))] for i in range(n_samples + 1)]
    return out


def match_external_angle(ctx: FamilyContext, theta0, l: int, tol: float = 1e-6):
    """External angle of period dividing l whose ray lands where R^0(theta0) lands."""
    theta0 = Angle(theta0)
    orb = angle_orbit(theta0, ctx.d - 1)
    if orb.preperiod != 0 or l % orb.period != 0:
        raise ValueError(f"{theta0} is not periodic of period dividing {l} under x{ctx.d - 1}")
    x = land_ray(ctx, ZERO, theta0)
    if x.kind != "repelling":
        raise RayError("internal ray lands at a parabolic point", {"angle": str(theta0)})
    q = ctx.d**l - 1
    candidates = []
    for k in range(q):
        eta = Angle(k, q)
        try:
            tail = ray_point(ctx, INFINITY, eta, 1e-6)
        except RayError:
            continue
        candidates.append((abs(tail - x.point), eta))
    candidates.sort(key=lambda c: c[0])
    for _, eta in candidates[:4]:
        try:
            y = land_ray(ctx, INFINITY, eta)
        except RayError:
            continue
        if abs(y.point - x.point) <= tol * (1 + abs(x.point)):
            return eta
    raise RayError("no external ray of the cycle lands at the internal landing point",
                   {"point": [x.point.real, x.point.imag]})


def _lift_samples(ctx, points, start, n):
    """Lift each point of a polyline through f^n, continuing from start (a lift of points[0])."""
    starts = [start]
    for _ in range(n - 1):
        starts.append(evaluate(ctx, starts[-1]))
    delta = 1e-8 * (1 + abs(ctx.a))
    lifted = [start]
    for prev, cur in zip(points, points[1:]):
        seg = [prev, cur]
        try:
            for j in range(n - 1, -1, -1):
                seg = _lift(ctx, seg, starts[j], delta)
                starts[j] = seg[-1]
        except Undecidable as e:
            raise RayError(str(e)) from e
        lifted.append(seg[-1])
    return lifted


def capture_center(ctx: FamilyContext, n: int) -> complex:
    """The point r in the Fatou component of the critical value with f^n(r) = 0."""
    v = critical_value(ctx)
    orbit = [v]
    for _ in range(n):
        orbit.append(evaluate(ctx, orbit[-1]))
    path = basin_path(ctx, orbit[-1])
    if path is None:
        raise RayError("critical value is not captured at this depth", {"depth": n})
    delta = 1e-8 * (1 + abs(ctx.a))
    try:
        for j in range(n - 1, -1, -1):
            path = _lift(ctx, path, orbit[j], delta)
    except Undecidable as e:
        raise RayError(str(e)) from e
    r = path[-1]
    for _ in range(60):
        y, dy = _orbit_deriv(ctx, r, n)
        if y is None or dy == 0:
            raise RayError("center refinement failed")
        step = y / dy
        r -= step
        if abs(step) < 1e-15 * (1 + abs(r)):
            break
    return r


def trace_center_ray(ctx: FamilyContext, n: int, t, s_min: float, s_max: float | None = None) -> RayTrace:
    """Ray of angle t from the center r of the critical value's component.

    Samples carry the potential of their image under f^n on R^0(t).
    """
    ctx.require_lam()
    if n < 1:
        raise ValueError("capture depth must be >= 1")
    t = Angle(t)
    r = capture_center(ctx, n)
    if s_max is None:
        s_max = default_s_max(ctx, ZERO)
    if not math.isfinite(s_max):
        raise ValueError("s_max must be finite")
    inner = trace_ray(ctx, ZERO, t, s_min, max(_top_level(ctx, ZERO), s_max))
    if not inner.samples:
        raise RayError("internal ray could not be traced", inner.diagnostic)
    lifted = _lift_samples(ctx, [0j] + inner.points, r, n)
    trace = RayTrace(ZERO, t, center=r)
    trace.samples = [(s, z) for (s, _), z in zip(inner.samples, lifted[1:]) if s <= s_max]
    trace.status = inner.status
    if inner.status in ("landed", "crashed") and trace.samples:
        trace.point = trace.samples[-1][1]
    trace.diagnostic = dict(inner.diagnostic)
    return trace
