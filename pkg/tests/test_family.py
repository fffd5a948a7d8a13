import cmath
import random

import pytest
from hypothesis import given, strategies as st

from critmax.family import (DomainError, FamilyContext, apply_symmetry, classify_orbit,
                            critical_value, derivative, evaluate)

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)
cplx = st.builds(complex, finite, finite)
degrees = st.integers(3, 7)


@pytest.mark.parametrize("d,a,z,want", [(3, 1, -1, 0.5), (3, 2.5 - 1j, 0, 0), (4, 1, -1, -1 / 3)])
def test_evaluate_values(d, a, z, want):
    assert abs(evaluate(FamilyContext(d, a), z) - want) < 1e-15


def test_derivative_values():
    assert abs(derivative(FamilyContext(3, 1), 0.5) - 9 / 4) < 1e-15
    for d in (3, 4, 5):
        assert derivative(FamilyContext(d, 0.7 + 0.2j), 0) == 0
    assert abs(derivative(FamilyContext(3, 4j / 3), -1j) - 1) < 1e-14


def test_fixed_critical_point_and_critical_points():
    for d in (3, 4, 6):
        ctx = FamilyContext(d, 0.3 - 0.8j)
        assert evaluate(ctx, 0) == 0
        assert abs(derivative(ctx, -ctx.a)) < 1e-14


@pytest.mark.parametrize("d,a,want", [(3, 1, 0.5), (4, 1, -1 / 3), (3, 0, 0)])
def test_critical_value(d, a, want):
    assert abs(critical_value(FamilyContext(d, a)) - want) < 1e-15


def test_symmetry_examples():
    ctx = FamilyContext(3, 0.5)
    assert abs(ctx.tau - (-1)) < 1e-15
    rng = random.Random(3)
    for _ in range(50):
        a = complex(rng.uniform(-3, 3), rng.uniform(-3, 3))
        z = complex(rng.uniform(-3, 3), rng.uniform(-3, 3))
        lhs = evaluate(FamilyContext(3, -a), -z)
        assert abs(lhs + evaluate(FamilyContext(3, a), z)) <= 1e-12 * (1 + abs(lhs))
    assert apply_symmetry(ctx, "sigma", 1 + 2j) == 1 - 2j
    ctx4 = FamilyContext(4, 1)
    assert abs(ctx4.tau ** 3 - 1) < 1e-14
    assert abs(apply_symmetry(ctx4, "tau", 2j, 1) - ctx4.tau * 2j) < 1e-15


@given(degrees, cplx, cplx)
def test_tau_and_sigma_equivariance(d, a, z):
    ctx = FamilyContext(d, a)
    fz = evaluate(ctx, z)
    tau = ctx.tau
    rot = evaluate(FamilyContext(d, tau * a), tau * z)
    assert abs(rot - tau * fz) <= 1e-12 * (1 + abs(fz))
    ref = evaluate(FamilyContext(d, a.conjugate()), z.conjugate()).conjugate()
    assert abs(ref - fz) <= 1e-12 * (1 + abs(fz))


@given(degrees, cplx, st.floats(0, 2 * cmath.pi))
def test_escape_radius_doubles(d, a, theta):
    ctx = FamilyContext(d, a)
    z = ctx.r_escape * cmath.exp(1j * theta)
    assert abs(evaluate(ctx, z)) >= 2 * abs(z)


@given(degrees, st.builds(complex, st.floats(-5, 5), st.floats(-5, 5)),
       st.builds(complex, st.floats(-3, 3), st.floats(-3, 3)))
def test_derivative_matches_finite_difference(d, a, z):
    ctx = FamilyContext(d, a)
    if abs(z) < 1e-2 or abs(z + a) < 1e-2:
        return
    h = 1e-5 * (1 + abs(z))
    fd = (evaluate(ctx, z + h) - evaluate(ctx, z - h)) / (2 * h)
    df = derivative(ctx, z)
    assert abs(fd - df) <= 1e-6 * max(abs(df), 1e-3 * (1 + abs(z)) ** (d - 1))


@given(degrees, cplx)
def test_lambda_root(d, a):
    if a == 0 or (a.imag == 0 and a.real < 0):
        return
    lam = FamilyContext(d, a).lam
    assert abs(lam ** (d - 2) * (d - 1) / (d * a) - 1) <= 1e-12


def test_lambda_positive_on_positive_axis():
    for d in (3, 4, 5, 8):
        lam = FamilyContext(d, 0.37).lam
        assert lam.imag == 0 and lam.real > 0


def test_lambda_rejects_negative_axis():
    with pytest.raises(DomainError):
        FamilyContext(4, -1.0).require_lam()


def test_classify_orbit_examples():
    ctx = FamilyContext(3, 10)
    assert ctx.r_escape == 30
    out = classify_orbit(ctx, -10)
    assert out.escaped and out.step == 1 and out.point == 500
    assert classify_orbit(FamilyContext(3, 0.1), -0.1).converged
    assert classify_orbit(FamilyContext(3, 4j / 3), -4j / 3, budget=500).kind == "undecided"


def test_classify_orbit_oracle():
    # plain-loop oracle with the same radii
    rng = random.Random(7)
    for _ in range(200):
        d = rng.randint(3, 5)
        ctx = FamilyContext(d, complex(rng.uniform(-2, 2), rng.uniform(-2, 2)))
        z = complex(rng.uniform(-2, 2), rng.uniform(-2, 2))
        out = classify_orbit(ctx, z, 300)
        w, kind = z, "undecided"
        for _ in range(301):
            if abs(w) > ctx.r_escape:
                kind = "escaped"
                break
            if abs(w) < ctx.r_zero:
                kind = "converged"
                break
            w = w ** (d - 1) * (w + ctx.c)
        assert out.kind == kind


def test_r_zero_contracts():
    for d in (3, 4, 6):
        for a in (0.1, 1 + 1j, 5j):
            ctx = FamilyContext(d, a)
            r = ctx.r_zero
            assert 0 < r <= 0.5
            for k in range(16):
                z = r * 0.999 * cmath.exp(2j * cmath.pi * k / 16)
                assert abs(evaluate(ctx, z)) <= abs(z) / 2 + 1e-15
