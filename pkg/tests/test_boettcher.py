import cmath
import math

import pytest
from hypothesis import assume, given, strategies as st

from critmax.boettcher import (BoettcherError, boettcher_coordinate, boettcher_inverse, capture_time,
                               critical_potential,
                               green, in_immediate_basin)
from critmax.family import FamilyContext, evaluate

INF, ZERO = "infinity", "zero"
CAPTURE_CENTER = math.sqrt(3) * 1j  # critical value -c maps straight to 0


def test_green_examples():
    assert abs(green(FamilyContext(3, 0), INF, 2).value - math.log(2)) < 1e-14
    ctx = FamilyContext(3, 1)
    z = 1.7 + 0.4j
    assert abs(green(ctx, INF, evaluate(ctx, z)).value - 3 * green(ctx, INF, z).value) < 1e-9
    g0 = green(FamilyContext(3, 0.5), ZERO, 0.01).value
    assert abs(g0 - zero_potential_oracle(3, 0.5, 0.01)) < 1e-12 * g0
    # the O(|z|) correction is about 0.66|z| here
    assert abs(g0 - (-math.log(0.75 * 0.01))) < 1e-2


def zero_potential_oracle(d, a, z):
    """-lim log|f^n z| / (d-1)^n, summed in log space."""
    c = d * a / (d - 1)
    g, w, scale = -math.log(abs(z)), complex(z), 1.0
    for _ in range(200):
        scale /= d - 1
        g -= scale * math.log(abs(w + c))
        w = w ** (d - 1) * (w + c)
    return g


def test_green_vanishes_off_basin():
    ctx = FamilyContext(3, 1)
    assert green(ctx, ZERO, 3.0).value == 0
    assert green(ctx, INF, 0.01).value == 0


def test_coordinate_examples():
    assert abs(boettcher_coordinate(FamilyContext(3, 0), INF, 3) - 3) < 1e-12
    ctx = FamilyContext(3, 1)
    z = 2.0 + 0.5j
    w = boettcher_coordinate(ctx, INF, z)
    assert abs(boettcher_coordinate(ctx, INF, evaluate(ctx, z)) - w ** 3) <= 1e-9 * abs(w) ** 3
    phi = boettcher_coordinate(FamilyContext(3, 0.5), ZERO, 1e-4)
    assert abs(phi / 7.5e-5 - 1) < 1e-3


def test_inverse_examples():
    assert abs(boettcher_inverse(FamilyContext(3, 0), INF, 2) - 2) < 1e-12
    z = boettcher_inverse(FamilyContext(3, 0.5), ZERO, 0.001)
    assert abs(z - 0.001 / 0.75) < 1e-3 * 0.001 / 0.75


def test_immediate_basin():
    assert in_immediate_basin(FamilyContext(3, 0.1), 0.01)
    assert not in_immediate_basin(FamilyContext(3, 10), -10)
    # at a capture parameter the critical point is in a strict preimage of the immediate basin
    ctx = FamilyContext(3, CAPTURE_CENTER)
    assert not in_immediate_basin(ctx, -ctx.a)
    assert not in_immediate_basin(ctx, -ctx.c)


def test_capture_time():
    assert capture_time(FamilyContext(3, 0.1)) == 0
    assert capture_time(FamilyContext(3, 10)) is None
    assert capture_time(FamilyContext(3, CAPTURE_CENTER)) == 1
    assert capture_time(FamilyContext(3, 0.01 + 1.73j)) == 1


params = st.sampled_from([0.3, 1, 0.5 + 0.5j, 2j, -0.4 + 0.2j, 1.5, 3 - 1j])
angles = st.floats(0, 1)


def outer_point(ctx, scale, theta):
    r = max(ctx.r_escape, 2.0) * scale
    return r * cmath.exp(2j * math.pi * theta)


@given(params, st.floats(1.0, 4.0), angles)
def test_infinity_functional_equation(a, scale, theta):
    ctx = FamilyContext(3, a)
    z = outer_point(ctx, scale, theta)
    w = boettcher_coordinate(ctx, INF, z)
    assert abs(boettcher_coordinate(ctx, INF, evaluate(ctx, z)) - w ** 3) <= 1e-9 * abs(w) ** 3
    g = green(ctx, INF, z).value
    assert abs(green(ctx, INF, evaluate(ctx, z)).value - 3 * g) <= 1e-9 * (1 + g)


def above_critical(ctx, z):
    return green(ctx, ZERO, z).value > critical_potential(ctx, ZERO) * 1.01


@given(st.sampled_from([0.1, 0.3 + 0.2j, 0.5j, 0.6]), st.floats(0, 3), angles)
def test_zero_functional_equation(a, u, theta):
    ctx = FamilyContext(4, a)
    z = ctx.r_zero * 10 ** -u * cmath.exp(2j * math.pi * theta)
    assume(above_critical(ctx, z))
    w = boettcher_coordinate(ctx, ZERO, z)
    assert abs(boettcher_coordinate(ctx, ZERO, evaluate(ctx, z)) - w ** 3) <= 1e-9 * abs(w) ** 3
    g = green(ctx, ZERO, z).value
    assert abs(green(ctx, ZERO, evaluate(ctx, z)).value - 3 * g) <= 1e-9 * (1 + g)


@given(params, st.floats(1.0, 4.0), angles)
def test_round_trip(a, scale, theta):
    ctx = FamilyContext(3, a)
    z = outer_point(ctx, scale, theta)
    w = boettcher_coordinate(ctx, INF, z)
    assert abs(boettcher_inverse(ctx, INF, w, seed=z * 1.01) - z) <= 1e-9 * abs(z)


@given(st.integers(3, 5), params, st.floats(1.0, 4.0), angles)
def test_tau_symmetry_at_infinity(d, a, scale, theta):
    ctx = FamilyContext(d, a)
    z = outer_point(ctx, scale, theta)
    lhs = boettcher_coordinate(ctx, INF, z)
    rhs = boettcher_coordinate(FamilyContext(d, ctx.tau * a), INF, ctx.tau * z) / ctx.tau
    assert abs(lhs - rhs) <= 1e-9 * abs(lhs)


@given(st.integers(4, 6), st.floats(0.05, 0.5), st.floats(-0.3, 0.3), st.floats(0, 3), angles)
def test_tau_symmetry_at_zero(d, r, arg, u, theta):
    # a in the fundamental sector, tau a in the next one
    a = r * cmath.exp(1j * arg * math.pi / (d - 1))
    ctx = FamilyContext(d, a)
    ctx2 = FamilyContext(d, ctx.tau * a)
    z = min(ctx.r_zero, ctx2.r_zero) * 10 ** -u * cmath.exp(2j * math.pi * theta)
    assume(above_critical(ctx, z))
    lhs = boettcher_coordinate(ctx, ZERO, z)
    rhs = cmath.exp(-2j * math.pi / (d - 2)) * boettcher_coordinate(ctx2, ZERO, ctx.tau * z)
    assert abs(lhs - rhs) <= 1e-9 * abs(lhs)


@given(params, angles, st.floats(1.0, 10.0))
def test_tangency_at_infinity(a, theta, scale):
    ctx = FamilyContext(3, a)
    z = 100 * max(1, abs(a)) * scale * cmath.exp(2j * math.pi * theta)
    assert abs(boettcher_coordinate(ctx, INF, z) / z - 1) <= 10 * abs(a) / abs(z)


def test_coordinate_rejects_outside_points():
    ctx = FamilyContext(3, 1)
    with pytest.raises((BoettcherError, ValueError)):
        boettcher_coordinate(ctx, INF, 0.1)
