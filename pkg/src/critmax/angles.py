"""Exact angles in R/Z and their dynamics under multiplication by an integer."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import gcd


class Angle:
    __slots__ = ("value",)

    def __init__(self, num, den: int | None = None):
        if isinstance(num, Angle):
            v = num.value
        elif den is None:
            v = Fraction(num)
        else:
            v = Fraction(num, den)
        object.__setattr__(self, "value", v - (v.numerator // v.denominator))

    def __setattr__(self, *_):
        raise AttributeError("Angle is immutable")

    @classmethod
    def parse(cls, text: str) -> "Angle":
        return cls(Fraction(text.strip()))

    @property
    def num(self) -> int:
        return self.value.numerator

    @property
    def den(self) -> int:
        return self.value.denominator

    def times(self, m: int) -> "Angle":
        return Angle(self.num * m % self.den, self.den)

    def __add__(self, other) -> "Angle":
        return Angle(self.value + Angle(other).value)

    def __sub__(self, other) -> "Angle":
        return Angle(self.value - Angle(other).value)

    def __neg__(self) -> "Angle":
        return Angle(-self.value)

    def __truediv__(self, m: int) -> "Angle":
        """The representative of value/m in [0, 1/m) (one preimage under xm)."""
        return Angle(self.value / m)

    def __eq__(self, other) -> bool:
        if isinstance(other, Angle):
            return self.value == other.value
        try:
            return self.value == Angle(other).value
        except (TypeError, ValueError):
            return NotImplemented

    def __lt__(self, other) -> bool:
        return self.value < Angle(other).value

    def __hash__(self) -> int:
        return hash(self.value)

    def __float__(self) -> float:
        return float(self.value)

    def __str__(self) -> str:
        return f"{self.num}/{self.den}"

    def __repr__(self) -> str:
        return f"Angle({self.num}/{self.den})"

    def preimages(self, m: int) -> list["Angle"]:
        return [Angle((self.value + j) / m) for j in range(m)]

    def is_periodic(self, m: int) -> bool:
        """Strictly periodic under xm iff the reduced denominator is prime to m."""
        return gcd(self.den, m) == 1


@dataclass(frozen=True)
class AngleOrbit:
    orbit: tuple[Angle, ...]
    preperiod: int
    period: int


def angle_orbit(t: Angle, m: int) -> AngleOrbit:
    """Forward orbit of t under xm with Brent cycle detection on exact residues."""
    if m < 2:
        raise ValueError("multiplier must be >= 2")
    t = Angle(t)
    q = t.den
    step = lambda x: x * m % q
    x0 = t.num
    power = lam = 1
    tortoise, hare = x0, step(x0)
    while tortoise != hare:
        if power == lam:
            tortoise, power, lam = hare, power * 2, 0
        hare = step(hare)
        lam += 1
    mu = 0
    tortoise = hare = x0
    for _ in range(lam):
        hare = step(hare)
    while tortoise != hare:
        tortoise, hare = step(tortoise), step(hare)
        mu += 1
    orbit, x = [], x0
    for _ in range(mu + lam):
        orbit.append(Angle(x, q))
        x = step(x)
    return AngleOrbit(tuple(orbit), mu, lam)


def angles_with_period(m: int, p: int, exact: bool = True) -> list[Angle]:
    """Angles fixed by xm^p; with exact=True keep only those of exact period p."""
    q = m**p - 1
    out = []
    for k in range(q):
        a = Angle(k, q)
        if not exact or angle_orbit(a, m).period == p:
            out.append(a)
    return out


def in_arc(t: Angle, lo: Angle, width: Fraction) -> bool:
    """True when t lies in the closed arc [lo, lo + width] of the circle."""
    return Angle(t.value - lo.value).value <= width
