"""Green functions and Böttcher coordinates of f_a at infinity and at 0.

Near each pole the coordinate is the product

    phi_inf(z) = z * prod_k (1 + c/z_k)^(1/d^(k+1))
    phi_0(z)   = lambda(a) * z * prod_k (1 + z_k/c)^(1/(d-1)^(k+1))

with z_k = f^k(z) and c = d a/(d-1).  Principal roots are only taken in a
certified region where every factor lies in the disc |F - 1| <= 1/2:
|z| >= r_escape at infinity and |z| <= min(r_zero, |c|/2) at 0.  Outside it,
log phi(z) is known modulo 2 pi i / m^N from the principal value at f^N(z);
the branch is fixed by walking up the gradient line of the Green function
(the ray through z) into the certified region, tracking the argument.
phi_0 is normalized to be tangent to z -> lambda(a) z.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

from .family import FamilyContext, classify_orbit, critical_value, evaluate

ZERO = "zero"
INFINITY = "infinity"
POLES = (ZERO, INFINITY)

_TAIL_EPS = 1e-15
_MAX_FACTORS = 64
_TWO_PI = 2 * math.pi


class BoettcherError(ArithmeticError):
    """A point lies outside the domain where the coordinate is defined."""

    def __init__(self, message, gap=None, best=None):
        super().__init__(message)
        self.gap = gap
        self.best = best


class Undecidable(ArithmeticError):
    """Path lifting came too close to the critical point to decide."""


@dataclass(frozen=True)
class PotentialValue:
    value: float
    tol: float

    def __float__(self):
        return self.value


def check_pole(pole: str) -> str:
    if pole not in POLES:
        raise ValueError(f"pole must be one of {POLES}, got {pole!r}")
    return pole


def base(ctx: FamilyContext, pole: str) -> int:
    return ctx.d if pole == INFINITY else ctx.d - 1


def wrap(x: float) -> float:
    """Reduce an angle in radians to (-pi, pi]."""
    y = math.fmod(x + math.pi, _TWO_PI)
    if y <= 0:
        y += _TWO_PI
    return y - math.pi


def safe_radius_zero(ctx: FamilyContext) -> float:
    return min(ctx.r_zero, abs(ctx.c) / 2)


def _step(ctx: FamilyContext, z: complex, dz: complex):
    d = ctx.d
    zd2 = z ** (d - 2)
    return zd2 * z * (z + ctx.c), d * zd2 * (z + ctx.a) * dz


def _reduce(ctx: FamilyContext, pole: str, z: complex, budget: int):
    """Smallest N with f^N(z) in the certified region, with f^N(z) and (f^N)'(z)."""
    z, dz = complex(z), 1 + 0j
    if pole == INFINITY:
        r = ctx.r_escape
        for n in range(budget + 1):
            az = abs(z)
            if az >= r and math.isfinite(az):
                return n, z, dz
            if az < ctx.r_zero or not math.isfinite(az):
                return None
            z, dz = _step(ctx, z, dz)
        return None
    rho = safe_radius_zero(ctx)
    if rho == 0:
        return None
    for n in range(budget + 1):
        az = abs(z)
        if az <= rho:
            return n, z, dz
        if az > ctx.r_escape or not math.isfinite(az):
            return None
        z, dz = _step(ctx, z, dz)
    return None


def _principal_log(ctx: FamilyContext, pole: str, w: complex):
    """Principal log phi(w) and d/dw log phi(w) for w in the certified region."""
    c = ctx.c
    if pole == INFINITY:
        log_sum = cmath.log(w)
        dlog = 1 / w
        m = ctx.d
        x, dx, scale = w, 1 + 0j, 1.0 / m
        for _ in range(_MAX_FACTORS):
            u = c / x
            if abs(u) < _TAIL_EPS:
                break
            log_sum += cmath.log(1 + u) * scale
            dlog += (-u / x / (1 + u)) * dx * scale
            x, dx = _step(ctx, x, dx)
            scale /= m
        return log_sum, dlog
    lam = ctx.require_lam()
    if w == 0:
        return complex(-math.inf, 0.0), complex(math.inf, 0.0)
    log_sum = cmath.log(lam) + cmath.log(w)
    dlog = 1 / w
    m = ctx.d - 1
    x, dx, scale = w, 1 + 0j, 1.0 / m
    for _ in range(_MAX_FACTORS):
        u = x / c
        if abs(u) < _TAIL_EPS:
            break
        log_sum += cmath.log(1 + u) * scale
        dlog += (dx / c / (1 + u)) * scale
        x, dx = _step(ctx, x, dx)
        scale /= m
    return log_sum, dlog


def local_log(ctx: FamilyContext, pole: str, z: complex, budget: int = 10_000, level: int | None = None):
    """Branch-free local data (N, L, q) at z.

    L is the principal log phi at f^N(z) so that log phi(z) = L / m^N modulo
    2 pi i / m^N, and q = d/dz log phi(z) (single valued).  Returns None when
    the orbit never reaches the certified region.
    """
    red = _reduce(ctx, pole, z, budget)
    if red is None:
        return None
    n, w, dw = red
    if level is not None and level > n:
        for _ in range(level - n):
            w, dw = _step(ctx, w, dw)
        n = level
    L, dl = _principal_log(ctx, pole, w)
    m = base(ctx, pole) ** n
    return n, L, dl * dw / m


def green(ctx: FamilyContext, pole: str, z: complex, budget: int = 10_000) -> PotentialValue:
    check_pole(pole)
    z = complex(z)
    if pole == ZERO:
        ctx.require_lam()
        if z == 0:
            return PotentialValue(math.inf, 0.0)
    data = local_log(ctx, pole, z, budget)
    if data is None:
        return PotentialValue(0.0, 0.0)
    n, L, _ = data
    m = float(base(ctx, pole)) ** n
    val = L.real / m if pole == INFINITY else -L.real / m
    return PotentialValue(val, 1e-14 * (1 + n) * abs(val) + 1e-300)


def critical_potential(ctx: FamilyContext, pole: str, budget: int = 10_000) -> float:
    """G^p(-a); zero when the critical orbit is not captured by the pole."""
    if pole == ZERO and ctx.lam is None:
        return 0.0
    return green(ctx, pole, -ctx.a, budget).value


def _rk_step(ctx, pole, z, h, sign, budget):
    def vel(x):
        data = local_log(ctx, pole, x, budget)
        if data is None or data[2] == 0 or not cmath.isfinite(data[2]):
            raise BoettcherError("gradient line left the basin")
        return sign / data[2]

    k1 = vel(z)
    k2 = vel(z + 0.5 * h * k1)
    k3 = vel(z + 0.5 * h * k2)
    k4 = vel(z + h * k3)
    return z + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def boettcher_log(ctx: FamilyContext, pole: str, z: complex, budget: int = 10_000) -> complex:
    """log phi^p(z) with the branch continued from the certified region."""
    check_pole(pole)
    z = complex(z)
    if pole == ZERO:
        ctx.require_lam()
    data = local_log(ctx, pole, z, budget)
    if data is None:
        raise BoettcherError(f"{z} is not in the basin of the {pole} pole")
    n, L, q = data
    mb = base(ctx, pole)
    if n == 0:
        return L
    pot = L.real / mb**n if pole == INFINITY else -L.real / mb**n
    crit = critical_potential(ctx, pole, budget)
    if pot <= crit * (1 + 1e-9):
        raise BoettcherError(
            f"potential {pot:.6g} is not above the critical level {crit:.6g}", gap=pot - crit
        )
    sign = 1.0 if pole == INFINITY else -1.0
    origin = L.real / mb**n + 0j
    drift = 0.0
    x, xn, xL, xpot = z, n, L, pot
    h = 0.25 * xpot
    ceiling = 0.0
    if pole == ZERO:
        ceiling = -math.log(abs(ctx.require_lam()) * safe_radius_zero(ctx)) + 60
    for _ in range(20_000):
        try:
            y = _rk_step(ctx, pole, x, h, sign, budget)
            trial = local_log(ctx, pole, y, budget, level=xn)
        except (BoettcherError, OverflowError, ZeroDivisionError):
            trial = None
        if trial is not None:
            _, yL, _ = trial
            m = float(mb) ** xn
            ypot = sign * yL.real / m
            delta = wrap(yL.imag - xL.imag)
            if abs(delta) <= 0.5 and abs(ypot - (xpot + h)) <= 0.05 * h:
                drift += delta / m
                ydata = local_log(ctx, pole, y, budget)
                x, (xn, xL, _) = y, ydata
                xpot = sign * xL.real / float(mb) ** xn
                if xn == 0:
                    return origin + 1j * (xL.imag - drift)
                if pole == ZERO and xpot > ceiling:
                    break
                h = min(2 * h, 0.25 * xpot)
                continue
        h *= 0.5
        if h < 1e-14 * xpot:
            break
    raise BoettcherError(f"could not continue phi from {z} into the certified region")


def boettcher_coordinate(ctx: FamilyContext, pole: str, z: complex, budget: int = 10_000) -> complex:
    """phi^p_a(z).  phi^0 has derivative lambda(a) at 0."""
    return cmath.exp(boettcher_log(ctx, pole, z, budget))


def boettcher_inverse(ctx: FamilyContext, pole: str, w: complex, seed: complex | None = None,
                      budget: int = 10_000) -> complex:
    check_pole(pole)
    w = complex(w)
    if pole == INFINITY and not abs(w) > 1:
        raise ValueError("need |w| > 1 at infinity")
    if pole == ZERO and not 0 < abs(w) < 1:
        raise ValueError("need 0 < |w| < 1 at zero")
    if seed is None:
        seed = w if pole == INFINITY else w / ctx.require_lam()
    target = cmath.log(w)
    z = complex(seed)
    best, best_res = z, math.inf
    for _ in range(64):
        try:
            lz = boettcher_log(ctx, pole, z, budget)
            _, _, q = local_log(ctx, pole, z, budget)
        except BoettcherError:
            z = 0.5 * (z + best)
            continue
        r = complex(lz.real - target.real, wrap(lz.imag - target.imag))
        res = abs(r)
        if res < best_res:
            best, best_res = z, res
        if res <= 1e-11:
            return z
        step = r / q
        lim = 0.5 * abs(z - (-ctx.a)) + 1e-300
        if abs(step) > lim:
            step *= lim / abs(step)
        z = z - step
    if best_res <= 1e-10:
        return best
    raise BoettcherError("Newton inversion did not converge", best=best)


def _lift(ctx: FamilyContext, path: list[complex], start: complex, delta: float) -> list[complex]:
    """Lift a polyline through f starting at a preimage of its first point."""
    out = [start]
    q = start
    pts = list(path)
    i = 1
    prev_target = pts[0]
    while i < len(pts):
        target = pts[i]
        x = q
        ok = False
        for _ in range(40):
            fx = evaluate(ctx, x) - target
            der = ctx.d * x ** (ctx.d - 2) * (x + ctx.a)
            if der == 0:
                break
            step = fx / der
            x -= step
            if abs(step) <= 1e-14 * (1 + abs(x)):
                ok = True
                break
        if ok and abs(x - q) <= 0.25 * abs(q + ctx.a) + 1e-12 * (1 + abs(q)):
            if abs(x + ctx.a) <= delta:
                raise Undecidable(f"lift passes within {delta:.2g} of the critical point")
            out.append(x)
            q = x
            prev_target = target
            i += 1
        else:
            if abs(target - prev_target) < 1e-13 * (1 + abs(target)):
                raise Undecidable("path lifting stalled")
            pts.insert(i, 0.5 * (prev_target + target))
    return out


def basin_path(ctx: FamilyContext, z: complex, budget: int = 10_000) -> list[complex] | None:
    """A polyline from z to a point near 0 inside the basin, or None.

    The straight segment from the first iterate inside the contraction disc to 0
    is lifted back along the orbit of z; the lift is kept only if every stage
    ends at 0 rather than at the cocritical point -c.
    """
    z = complex(z)
    out = classify_orbit(ctx, z, budget)
    if not out.converged:
        return None
    n = out.step
    orbit = [z]
    for _ in range(n):
        orbit.append(evaluate(ctx, orbit[-1]))
    delta = 1e-8 * (1 + abs(ctx.a))
    w = orbit[-1]
    if w == 0:
        path = [0j]
    else:
        tip = w * min(1.0, 1e-6 * ctx.r_zero / abs(w))
        k = 32
        path = [w + (tip - w) * j / k for j in range(k + 1)]
    c = ctx.c
    for j in range(n - 1, -1, -1):
        path = _lift(ctx, path, orbit[j], delta)
        end = path[-1]
        if abs(end + c) < abs(end):
            return None
    return path


def in_immediate_basin(ctx: FamilyContext, z: complex, budget: int = 10_000) -> bool:
    """Decide whether z lies in the component of the basin of 0 reached by lifts to 0."""
    return basin_path(ctx, z, budget) is not None


def capture_time(ctx: FamilyContext, budget: int = 10_000) -> int | None:
    out = classify_orbit(ctx, -ctx.a, budget)
    if not out.converged:
        return None
    z = critical_value(ctx)
    for n in range(out.step + 2):
        if in_immediate_basin(ctx, z, budget):
            return n
        z = evaluate(ctx, z)
    return None
