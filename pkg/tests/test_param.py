import cmath
import math

import pytest
from hypothesis import given, strategies as st

from critmax.angles import Angle
from critmax.boettcher import boettcher_coordinate
from critmax.family import FamilyContext, critical_value, evaluate
from critmax.param import (SectorConstants, capture_component_center, classify_parameter,
                           critical_ray_angles, param_ray_point, phi_capture_param,
                           phi_infinity_param, phi_zero_param, sector_bounds, trace_param_ray,
                           wake_boundary, wake_membership)

INF, ZERO = "infinity", "zero"
CAPTURE_CENTER = math.sqrt(3) * 1j


def phase_turns(w):
    return cmath.phase(w) / (2 * math.pi) % 1.0


def turn_distance(x, y):
    e = abs(x - y) % 1.0
    return min(e, 1 - e)


def test_phi_infinity_asymptotics():
    w = phi_infinity_param(FamilyContext(3, 100))
    assert abs(w / 5.0e5 - 1) < 1e-3
    w = phi_infinity_param(FamilyContext(3, 10))
    assert abs(w.imag) < 1e-9 * abs(w) and w.real > 0


def test_phi_infinity_degree():
    pts = [phi_infinity_param(FamilyContext(3, 50 * cmath.exp(2j * math.pi * k / 256))) for k in range(256)]
    total = sum(cmath.phase(v / u) for u, v in zip(pts, pts[1:] + pts[:1]))
    assert round(total / (2 * math.pi)) == 3


def test_phi_zero_examples():
    assert abs(phi_zero_param(FamilyContext(3, 0.01)) / 7.5e-9 - 1) < 1e-2
    assert phi_zero_param(FamilyContext(3, 0)) == 0
    w = phi_zero_param(FamilyContext(4, 0.01))
    assert w.real < 0 and abs(w.imag) < 1e-9 * abs(w)


def test_phi_capture():
    assert abs(capture_component_center(3, 0.01 + 1.73j, 1) - CAPTURE_CENTER) < 1e-12
    assert abs(phi_capture_param(FamilyContext(3, CAPTURE_CENTER), 1)) < 1e-12
    # |Phi_U| grows toward 1 along a path to the boundary
    direction = 1
    last = None
    values = []
    for k in range(1, 400):
        a = CAPTURE_CENTER + direction * 1e-4 * k
        c = classify_parameter(FamilyContext(3, a))
        if c.kind != "capture":
            break
        last = a
        values.append(abs(c.value))
    assert last is not None and len(values) > 10
    assert all(x < y for x, y in zip(values, values[1:]))
    assert values[-1] > 0.9


def test_capture_ray_correspondence():
    tr = trace_param_ray(3, "capture", "1/3", 0.05, component=0.01 + 1.73j, depth=1)
    assert len(tr.samples) > 3
    for s, a in tr.samples:
        ctx = FamilyContext(3, a)
        w = boettcher_coordinate(ctx, ZERO, evaluate(ctx, critical_value(ctx)))
        assert turn_distance(phase_turns(w), 1 / 3) < 1e-6
        assert abs(-math.log(abs(w)) - s) < 1e-6 * (1 + s)


@pytest.mark.parametrize("a,kind", [(0, "h_zero"), (10, "h_infinity"), (4j / 3, "undecided"),
                                    (0.01 + 1.73j, "capture")])
def test_classify_parameter(a, kind):
    c = classify_parameter(FamilyContext(3, a))
    assert c.kind == kind
    if kind == "capture":
        assert c.depth == 1


def test_real_rays_land_at_one():
    outer = trace_param_ray(3, INF, "0", 1e-10)
    assert all(abs(a.imag) < 1e-9 and a.real > 1 - 1e-6 for a in outer.points)
    assert abs(outer.points[-1] - 1) < 1e-4
    inner = trace_param_ray(3, ZERO, "0", 1e-10)
    assert all(abs(a.imag) < 1e-9 and 0 < a.real < 1 + 1e-6 for a in inner.points)
    assert abs(inner.points[-1] - 1) < 1e-4


def test_critical_ray_angles_examples():
    assert critical_ray_angles(3, "0", INF) == [Angle(1, 3), Angle(2, 3)]
    assert critical_ray_angles(3, "0", ZERO) == [Angle(1, 2)]
    assert critical_ray_angles(4, "1/2", INF) == [Angle(3, 8), Angle(5, 8)]


@given(st.sampled_from([0, 1, 2, 3, 5, 7]), st.sampled_from([2, 3, 4, 5, 7, 8, 9]), st.floats(0.1, 3.0))
def test_infinity_ray_correspondence(num, den, s):
    t = Angle(num, den)
    try:
        a = param_ray_point(3, INF, t, s)
    except ValueError:
        return
    ctx = FamilyContext(3, a)
    w = boettcher_coordinate(ctx, INF, critical_value(ctx))
    assert abs(math.log(abs(w)) - s) < 1e-6 * (1 + s)
    assert turn_distance(phase_turns(w), float(t.value)) < 1e-6


@given(st.sampled_from([0, 1, 3, 5, 7]), st.sampled_from([2, 3, 4, 7, 8]), st.floats(2.0, 8.0))
def test_zero_ray_correspondence(num, den, s):
    t = Angle(num, den)
    try:
        a = param_ray_point(3, ZERO, t, s)
    except ValueError:
        return
    ctx = FamilyContext(3, a)
    w = boettcher_coordinate(ctx, ZERO, critical_value(ctx))
    assert abs(-math.log(abs(w)) - s) < 1e-6 * (1 + s)
    assert turn_distance(phase_turns(w), float(t.value)) < 1e-6


far = st.builds(lambda r, th: r * cmath.exp(2j * math.pi * th), st.floats(3, 50), st.floats(0, 1))


@given(st.integers(3, 5), far)
def test_phi_infinity_symmetry(d, a):
    ctx = FamilyContext(d, a)
    w = phi_infinity_param(ctx)
    assert abs(phi_infinity_param(FamilyContext(d, a.conjugate())) - w.conjugate()) <= 1e-9 * abs(w)
    assert abs(phi_infinity_param(FamilyContext(d, ctx.tau * a)) - ctx.tau * w) <= 1e-9 * abs(w)


@given(st.integers(4, 6), st.floats(0.01, 0.2), st.floats(0.05, 0.95))
def test_phi_zero_symmetry(d, r, frac):
    lo, hi = sector_bounds(d, "id")
    a = r * cmath.exp(1j * (lo + frac * (hi - lo)))
    ctx = FamilyContext(d, a)
    w = phi_zero_param(ctx)
    rot = phi_zero_param(FamilyContext(d, ctx.tau * a))
    assert abs(rot - cmath.exp(2j * math.pi / (d - 2)) * w) <= 1e-9 * abs(w)


@given(st.integers(3, 6), st.floats(2.5, 40), st.floats(0, 1))
def test_sector_containment(d, r, frac):
    lo, hi = sector_bounds(d, "id")
    a = r * cmath.exp(1j * (lo + frac * (hi - lo)))
    ctx = FamilyContext(d, a)
    assert SectorConstants.for_degree(d).in_delta(phi_infinity_param(ctx))


@pytest.fixture(scope="module")
def cusp_wake():
    return wake_boundary(3, "1/2", "0", landing=4j / 3, sectors=("id", "tau_sigma"))


def test_wake_excludes_center_and_boundary(cusp_wake):
    assert not wake_membership(3, 0, "1/2", "0", boundary=cusp_wake)
    on_ray = cusp_wake.curve[len(cusp_wake.curve) // 8]
    assert not wake_membership(3, on_ray, "1/2", "0", boundary=cusp_wake)
    assert wake_membership(3, 1.42j, "1/2", "0", boundary=cusp_wake)
