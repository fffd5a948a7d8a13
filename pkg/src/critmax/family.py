"""The family f_a(z) = z^(d-1) (z + d a/(d-1)) and its elementary structure."""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

INF = complex(math.inf, 0.0)


class DomainError(ValueError):
    """Raised when an operation needs lambda(a) and a lies on the negative real axis."""


def on_negative_axis(a: complex) -> bool:
    a = complex(a)
    return a.imag == 0.0 and a.real < 0.0


def _r_zero(d: int, a: complex) -> float:
    k = d * abs(a) / (d - 1)
    g = lambda r: r ** (d - 2) * (r + k)
    if g(0.5) <= 0.5:
        return 0.5
    lo, hi = 0.0, 0.5
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if g(mid) <= 0.5:
            lo = mid
        else:
            hi = mid
    return lo


@dataclass(frozen=True)
class FamilyContext:
    d: int
    a: complex
    tau: complex = field(init=False)
    c: complex = field(init=False)
    r_escape: float = field(init=False)
    r_zero: float = field(init=False)

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 3:
            raise ValueError(f"degree must be an integer >= 3, got {self.d!r}")
        object.__setattr__(self, "d", int(self.d))
        object.__setattr__(self, "a", complex(self.a))
        d, a = self.d, self.a
        object.__setattr__(self, "tau", cmath.exp(2j * math.pi / (d - 1)))
        object.__setattr__(self, "c", d * a / (d - 1))
        object.__setattr__(self, "r_escape", max(2.0, 2 * d * abs(a) / (d - 1)))
        object.__setattr__(self, "r_zero", _r_zero(d, a))

    @property
    def lam(self) -> complex | None:
        """lambda(a): principal (d-2)-th root of d a/(d-1); None on the negative axis."""
        if on_negative_axis(self.a):
            return None
        if self.a == 0:
            return 0j
        if self.d == 3:
            return self.c
        return cmath.exp(cmath.log(self.c) / (self.d - 2))

    def require_lam(self) -> complex:
        lam = self.lam
        if lam is None:
            raise DomainError(f"lambda(a) is undefined for a={self.a} on the negative real axis")
        if lam == 0:
            raise DomainError("lambda(a) vanishes at a=0")
        return lam

    def with_a(self, a: complex) -> "FamilyContext":
        return FamilyContext(self.d, a)


def evaluate(ctx: FamilyContext, z):
    try:
        w = z ** (ctx.d - 1) * (z + ctx.c)
    except OverflowError:
        return INF
    if isinstance(w, complex) and not (math.isfinite(w.real) and math.isfinite(w.imag)):
        return INF
    return w


def derivative(ctx: FamilyContext, z):
    return ctx.d * z ** (ctx.d - 2) * (z + ctx.a)


def second_derivative(ctx: FamilyContext, z):
    d = ctx.d
    return d * ((d - 2) * z ** (d - 3) * (z + ctx.a) + z ** (d - 2))


def critical_value(ctx: FamilyContext) -> complex:
    return -((-ctx.a) ** ctx.d) / (ctx.d - 1)


def apply_symmetry(ctx: FamilyContext, op: str, x, k: int = 1):
    """sigma: complex conjugation; tau: multiplication by tau^k."""
    if op == "sigma":
        return x.conjugate()
    if op == "tau":
        return ctx.tau ** (k % (ctx.d - 1)) * x
    raise ValueError(f"unknown symmetry {op!r}")


@dataclass(frozen=True)
class OrbitOutcome:
    kind: str  # "escaped", "converged" or "undecided"
    step: int
    point: complex

    @property
    def escaped(self) -> bool:
        return self.kind == "escaped"

    @property
    def converged(self) -> bool:
        return self.kind == "converged"


def classify_orbit(ctx: FamilyContext, z: complex, budget: int = 10_000) -> OrbitOutcome:
    if budget < 1:
        raise ValueError("budget must be >= 1")
    z = complex(z)
    r_esc, r_zero = ctx.r_escape, ctx.r_zero
    for n in range(budget + 1):
        r = abs(z)
        if r > r_esc:
            return OrbitOutcome("escaped", n, z)
        if r < r_zero:
            return OrbitOutcome("converged", n, z)
        if n < budget:
            z = evaluate(ctx, z)
    return OrbitOutcome("undecided", budget, z)


def orbit_with_derivatives(ctx: FamilyContext, z: complex, n: int):
    """Return f^n(z), d/dz f^n and d/da f^n (z held fixed)."""
    d, a, c = ctx.d, ctx.a, ctx.c
    dz, da = 1.0 + 0j, 0j
    for _ in range(n):
        zd2 = z ** (d - 2)
        fz = d * zd2 * (z + a)
        fa = d * zd2 * z / (d - 1)
        da = fz * da + fa
        dz = fz * dz
        z = zd2 * z * (z + c)
    return z, dz, da


def critical_orbit_with_derivative(ctx: FamilyContext, n: int):
    """Return f^n(v) and its total derivative in a, where v = f_a(-a)."""
    d, a = ctx.d, ctx.a
    v = critical_value(ctx)
    dv = d * (-a) ** (d - 1) / (d - 1)
    z, dz, da = orbit_with_derivatives(ctx, v, n)
    return z, dz * dv + da
