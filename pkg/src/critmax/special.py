"""Landing classification of parameter rays and solvers for Misiurewicz and parabolic parameters."""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from .angles import Angle, angle_orbit
from .boettcher import INFINITY, ZERO, check_pole
from .family import FamilyContext, on_negative_axis

__all__ = [
    "LandingClass", "ParameterSolution", "SolverError", "angle_orbit", "classify_ray_landing",
    "classify_ray_landing_many", "critical_offsets", "critical_ray_angles", "find_misiurewicz",
    "find_parabolic", "periodic_mask", "satellite_cusp",
]

SECTORS = ("id", "tau_sigma")


class SolverError(ArithmeticError):
    def __init__(self, message, diagnostic=None):
        super().__init__(message)
        self.diagnostic = diagnostic or {}


def critical_offsets(d: int, locus: str, sector: str = "id") -> tuple[int, ...]:
    """Numerators j such that the rays of angle (t + j)/m crash on the critical point.

    m = d at infinity and d - 1 at zero.  The second sector is only charted for d = 3.
    """
    check_pole(locus)
    if sector == "id":
        if locus == INFINITY:
            return ((d - 1) // 2, (d + 1) // 2)
        return ((d - 1) // 2,)
    if sector == "tau_sigma":
        if d != 3:
            raise ValueError("the tau_sigma sector is only charted for d = 3")
        return (0, 2) if locus == INFINITY else (0,)
    raise ValueError(f"unknown sector {sector!r}")


def critical_ray_angles(d: int, t, locus: str, sector: str = "id") -> list[Angle]:
    t = Angle(t)
    m = d if locus == INFINITY else d - 1
    return [Angle((t.value + j) / m) for j in critical_offsets(d, locus, sector)]


def periodic_mask(num, den, m: int) -> np.ndarray:
    """Vectorized: is num/den mod 1 strictly periodic under multiplication by m?"""
    num = np.asarray(num, dtype=np.int64)
    den = np.asarray(den, dtype=np.int64)
    red = den // np.gcd(num % den, den)
    return np.gcd(red, m) == 1


@dataclass(frozen=True)
class LandingClass:
    kind: str  # "parabolic" or "misiurewicz"
    locus: str
    angles: tuple[Angle, ...]  # transformed angles tested
    periodic: tuple[bool, ...]
    period: int
    preperiod: int = 0

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "locus": self.locus,
            "angles": [str(a) for a in self.angles],
            "periodic": list(self.periodic),
            "period": self.period,
            "preperiod": self.preperiod,
        }


def classify_ray_landing(d: int, t, locus: str, sector: str = "id") -> LandingClass:
    t = Angle(t)
    m = d if locus == INFINITY else d - 1
    angles = critical_ray_angles(d, t, locus, sector)
    flags = periodic_mask([a.num for a in angles], [a.den for a in angles], m)
    flags = tuple(bool(x) for x in flags)
    if any(flags):
        orb = angle_orbit(angles[flags.index(True)], m)
        return LandingClass("parabolic", locus, tuple(angles), flags, orb.period)
    orb = angle_orbit(angles[0], m)
    return LandingClass("misiurewicz", locus, tuple(angles), flags, orb.period, orb.preperiod)


def classify_ray_landing_many(d: int, q: int, locus: str, sector: str = "id", reduced: bool = True):
    """Classify every angle p/q at once.

    Returns (numerators, parabolic) where parabolic[i] tells whether the ray of
    angle numerators[i]/q lands at a parabolic parameter.  With reduced=False
    all p in [0, q) are returned, including non-reduced fractions.

    A residue x mod N is periodic under xm iff it lies in the eventual image
    m^K (Z/N), i.e. iff gcd(m^K, N) divides x; here N = q m for every
    transformed angle (p + j q)/(q m).
    """
    check_pole(locus)
    m = d if locus == INFINITY else d - 1
    p = np.arange(q, dtype=np.int64)
    if reduced:
        p = p[np.gcd(p, q) == 1]
    n = q * m
    g = math.gcd(m ** n.bit_length(), n)
    parabolic = np.zeros(p.shape, dtype=bool)
    for j in critical_offsets(d, locus, sector):
        parabolic |= (p + j * q) % g == 0
    return p, parabolic


@dataclass
class ParameterSolution:
    a: complex
    z: complex
    preperiod: int
    period: int
    multiplier: complex
    residuals: tuple[float, ...]
    symmetry: str | None = None
    diagnostic: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        out = {
            "a": [self.a.real, self.a.imag],
            "z": [self.z.real, self.z.imag],
            "l": self.preperiod,
            "p": self.period,
            "multiplier": [self.multiplier.real, self.multiplier.imag],
            "residuals": list(self.residuals),
        }
        if self.symmetry:
            out["symmetry"] = self.symmetry
        return out


def _critical_orbit_da(d: int, a: complex, n: int):
    """Orbit z_k of -a under f_a with dz_k/da, for k = 0..n."""
    z, dz = -a, -1 + 0j
    zs, dzs = [z], [dz]
    for _ in range(n):
        zd2 = z ** (d - 2)
        fp = d * zd2 * (z + a)
        fa = d * zd2 * z / (d - 1)
        dz = fp * dz + fa
        z = zd2 * z * (z + d * a / (d - 1))
        zs.append(z)
        dzs.append(dz)
    return zs, dzs


def _multiplier(d: int, a: complex, z: complex, p: int) -> complex:
    ctx = FamilyContext(d, a)
    mult = 1 + 0j
    for _ in range(p):
        mult *= d * z ** (d - 2) * (z + ctx.a)
        z = z ** (d - 1) * (z + ctx.c)
    return mult


def _true_type(d: int, a: complex, l: int, p: int, tol: float = 1e-8):
    """Smallest (l', p') with f^{l'+p'}(-a) = f^{l'}(-a) numerically, searching up to (l, p)."""
    zs, _ = _critical_orbit_da(d, a, l + p)
    for pp in range(1, p + 1):
        if p % pp:
            continue
        for ll in range(0, l + 1):
            if abs(zs[ll + pp] - zs[ll]) <= tol * (1 + abs(zs[ll])):
                return ll, pp
    return l, p


def _newton_misiurewicz(d, l, p, a, max_iter):
    for _ in range(max_iter):
        zs, dzs = _critical_orbit_da(d, a, l + p)
        g = zs[l + p] - zs[l]
        dg = dzs[l + p] - dzs[l]
        if not cmath.isfinite(g) or dg == 0:
            return None
        step = g / dg
        # keep Newton from leaping across the plane
        cap = 0.5 * (1 + abs(a))
        if abs(step) > cap:
            step *= cap / abs(step)
        a -= step
        if abs(step) <= 1e-15 * (1 + abs(a)):
            break
    return a


def find_misiurewicz(d: int, l: int, p: int, seed: complex, max_iter: int = 200) -> ParameterSolution:
    if l < 1 or p < 1:
        raise ValueError("need l >= 1 and p >= 1")
    seed = complex(seed)
    tau = cmath.exp(2j * math.pi / (d - 1))
    symmetry = None
    if on_negative_axis(seed) or (seed.real < 0 and abs(seed.imag) < 1e-3 * abs(seed)):
        # solve at the tau-image off the negative axis and rotate back
        seed, symmetry = seed / tau, "tau"
    a = _newton_misiurewicz(d, l, p, seed, max_iter)
    if a is None:
        raise SolverError("Newton iteration broke down", {"seed": [seed.real, seed.imag]})
    zs, dzs = _critical_orbit_da(d, a, l + p)
    res = abs(zs[l + p] - zs[l])
    scale = 1 + abs(zs[l])
    # for long cycles the residual is dominated by rounding amplified by the
    # cycle multiplier, so a Newton correction below rounding also counts
    slope = abs(dzs[l + p] - dzs[l])
    if not (res <= 1e-10 * scale or (slope > 0 and res / slope <= 1e-13 * (1 + abs(a)))):
        raise SolverError("no convergence", {"residual": res, "a": [a.real, a.imag]})
    ll, pp = _true_type(d, a, l, p)
    if (ll, pp) != (l, p):
        raise SolverError("solution has smaller preperiod/period",
                          {"a": [a.real, a.imag], "l": ll, "p": pp})
    z = zs[l]
    mult = _multiplier(d, a, z, p)
    if not abs(mult) > 1:
        raise SolverError("cycle is not repelling", {"multiplier": [mult.real, mult.imag]})
    if symmetry:
        a, z = a * tau, z * tau
    return ParameterSolution(a, z, l, p, mult, (res,), symmetry)


def _parabolic_system(d, a, z, p, mu):
    # diverging iterates overflow to inf/nan; callers reject non-finite systems
    with np.errstate(over="ignore", invalid="ignore"):
        return _parabolic_terms(d, a, z, p)


def _parabolic_terms(d, a, z, p):
    c = d * a / (d - 1)
    D, A, DD, DA = 1 + 0j, 0j, 0j, 0j
    for _ in range(p):
        zd3 = z ** (d - 3)
        zd2 = zd3 * z
        f1 = d * zd2 * (z + a)
        f2 = d * ((d - 2) * zd3 * (z + a) + zd2)
        fa = d * zd2 * z / (d - 1)
        fza = d * zd2
        DA = f2 * A * D + fza * D + f1 * DA
        DD = f2 * D * D + f1 * DD
        A = f1 * A + fa
        D = f1 * D
        z_next = zd2 * z * (z + c)
        z = z_next
    return z, D, A, DD, DA


def find_parabolic(d: int, p: int, seed_a: complex, seed_z: complex | None = None,
                   multiplier: complex = 1, max_iter: int = 100) -> ParameterSolution:
    """Solve f^p(z) = z, (f^p)'(z) = multiplier jointly in (a, z)."""
    if p < 1:
        raise ValueError("need p >= 1")
    a = complex(seed_a)
    if seed_z is None:
        seed_z = parabolic_seed_point(d, a, p, multiplier)
    z = complex(seed_z)
    if z == 0:
        raise ValueError("seed z must be nonzero")
    mu = complex(multiplier)
    cond = math.inf
    for _ in range(max_iter):
        w, D, A, DD, DA = _parabolic_system(d, a, z, p, mu)
        F = np.array([w - z, D - mu])
        J = np.array([[D - 1, A], [DD, DA]])
        # equilibrate rows: long cycles give derivative rows of very different size
        rows = np.abs(J).max(axis=1)
        if not np.all(np.isfinite(rows)) or np.any(rows == 0):
            raise SolverError("Jacobian is singular (degenerate parabolic point)", {"condition": math.inf})
        J, F = J / rows[:, None], F / rows
        cond = np.linalg.cond(J)
        if not np.isfinite(cond) or cond > 1e14:
            raise SolverError("Jacobian is singular (degenerate parabolic point)", {"condition": float(cond)})
        dz, da = np.linalg.solve(J, F)
        cap = 0.5 * (1 + abs(a) + abs(z))
        size = math.hypot(abs(dz), abs(da))
        if size > cap:
            dz, da = dz * cap / size, da * cap / size
        z -= dz
        a -= da
        if size <= 1e-15 * (1 + abs(a) + abs(z)):
            break
    w, D, A, DD, DA = _parabolic_system(d, a, z, p, mu)
    res = (abs(w - z), abs(D - mu))
    J = np.array([[D - 1, A], [DD, DA]])
    try:
        last = float(np.linalg.norm(np.linalg.solve(J, np.array([w - z, D - mu]))))
    except np.linalg.LinAlgError:
        last = math.inf
    small = res[0] <= 1e-10 * (1 + abs(z)) and res[1] <= 1e-10
    if not (small or last <= 1e-13 * (1 + abs(a) + abs(z))):
        raise SolverError("no convergence", {"residuals": list(res), "condition": float(cond)})
    return ParameterSolution(complex(a), complex(z), 0, p, complex(D), tuple(float(x) for x in res),
                             diagnostic={"condition": float(cond)})


def parabolic_seed_point(d: int, a: complex, p: int, multiplier: complex = 1) -> complex:
    """Among the period-p points of f_a, the one whose multiplier is closest to the target."""
    ctx = FamilyContext(d, a)
    f = np.polynomial.Polynomial([0] * (d - 1) + [ctx.c, 1])
    g = np.polynomial.Polynomial([0, 1])
    for _ in range(p):
        g = f(g)
    roots = (g - np.polynomial.Polynomial([0, 1])).roots()
    roots = [complex(r) for r in roots if abs(r) > 1e-9]
    if not roots:
        raise SolverError("no nonzero periodic points")
    return min(roots, key=lambda r: abs(_multiplier(d, a, r, p) - multiplier))


def satellite_cusp(d: int, t, sector: str = "id", s_min: float = 1e-12) -> ParameterSolution:
    """Cusp of the copy attached to the boundary of the immediate basin component at angle t."""
    from .param import trace_param_ray

    t = Angle(t)
    cls = classify_ray_landing(d, t, ZERO, sector)
    if cls.kind != "parabolic":
        raise ValueError(f"the internal parameter ray of angle {t} lands at a Misiurewicz parameter")
    k = cls.period
    trace = trace_param_ray(d, ZERO, t, s_min, sector=sector)
    if not trace.samples:
        raise SolverError("parameter ray could not be traced", trace.diagnostic)
    a = trace.samples[-1][1]
    return find_parabolic(d, k, a, parabolic_seed_point(d, a, k))
