import gzip
import random

import numpy as np
import pytest

from critmax.family import FamilyContext, classify_orbit
from critmax.param import classify_parameter, trace_param_ray
from critmax.puzzle import GraphSpec, build_graph
from critmax.render import (BASIN, DYNAMICAL, ESCAPE, PARAMETER, UNDECIDED, RasterSpec, classify_grid,
                            overlay, ppm_bytes, read_ppm, render)

from conftest import DATA

KINDS = {ESCAPE: ("h_infinity",), BASIN: ("h_zero", "capture"), UNDECIDED: ("undecided",)}


def small(**kw):
    base = dict(plane=PARAMETER, d=3, center=0j, width=4.0, pixels=(120, 120), budget=150)
    base.update(kw)
    return RasterSpec(**base)


def test_pixel_mapping():
    spec = small(pixels=(4, 2), width=4.0)
    assert spec.point(0, 0) == complex(-1.5, 0.5)
    assert spec.point(3, 1) == complex(1.5, -0.5)
    x, y = spec.pixel(spec.point(2, 1))
    assert (round(x), round(y)) == (2, 1)


def test_center_and_far_pixels():
    spec = small(center=0j, width=0.01, pixels=(2, 2))
    kind, step, _ = classify_grid(spec)
    assert np.all(kind == BASIN) and np.all(step == 0)
    kind, _, _ = classify_grid(small(center=10 + 0j, width=0.01, pixels=(2, 2)))
    assert np.all(kind == ESCAPE)


def test_conjugation_symmetry():
    kind, _, _ = classify_grid(small(pixels=(200, 200)))
    assert np.mean(kind == kind[::-1, :]) >= 0.999


def test_tau_symmetry_degree_three():
    kind, _, _ = classify_grid(small(pixels=(200, 200)))
    assert np.mean(kind == kind[::-1, ::-1]) >= 0.999


@pytest.mark.parametrize("plane,a", [(PARAMETER, None), (DYNAMICAL, 0.3 + 0.4j)])
def test_thread_count_does_not_change_bytes(plane, a):
    spec = small(plane=plane, a=a, pixels=(96, 80))
    blobs = {ppm_bytes(render(spec, threads=n)[0]) for n in (1, 2, 8)}
    assert len(blobs) == 1


def test_classification_matches_scalar():
    spec = small(pixels=(150, 150), budget=200)
    kind, step, pot = classify_grid(spec)
    rng = random.Random(4)
    for _ in range(1000):
        i, j = rng.randrange(150), rng.randrange(150)
        a = spec.point(i, j)
        ctx = FamilyContext(3, a)
        assert classify_parameter(ctx, budget=200).kind in KINDS[int(kind[j, i])]
        out = classify_orbit(ctx, -a, 200)
        assert out.step == step[j, i]
        if out.escaped:
            assert pot[j, i] == pytest.approx(np.log(abs(out.point)) / 3.0 ** out.step, rel=1e-12)


def test_ppm_round_trip():
    img, _ = render(small(pixels=(7, 5)))
    data = ppm_bytes(img)
    assert data.startswith(b"P6\n7 5\n255\n")
    assert np.array_equal(read_ppm(data), img)


def test_empty_overlay_is_identity():
    spec = small(pixels=(40, 40))
    img, _ = render(spec)
    assert ppm_bytes(overlay(spec, img, [])) == ppm_bytes(img)


def test_real_rays_meet_locus_at_one():
    spec = small(center=1 + 0j, width=1.0, pixels=(101, 101))
    img, _ = render(spec)
    rays = [trace_param_ray(3, locus, "0", 1e-8).points for locus in ("infinity", "zero")]
    drawn = overlay(spec, img, rays)
    i, j = (round(x) for x in spec.pixel(1 + 0j))
    assert tuple(drawn[j, i]) == (255, 0, 0)
    # both rays reach the pixel of a = 1 from their own side
    left, right = drawn[j, i - 3], drawn[j, i + 3]
    assert tuple(left) == (255, 0, 0) and tuple(right) == (255, 0, 0)


def julia_graph_image():
    spec = RasterSpec(DYNAMICAL, 3, 0j, 3.0, (160, 160), budget=150, a=0.2)
    img, _ = render(spec)
    graph = build_graph(FamilyContext(3, 0.2), GraphSpec(3, 2, 1, 0))
    lines = []
    for arm in graph.arms(0):
        lines.append([z for _, z in arm.internal] + [arm.point])
        lines.append([z for _, z in arm.external])
    return overlay(spec, img, lines)


def test_julia_graph_golden():
    golden = gzip.decompress((DATA / "julia_graph_a02_160.ppm.gz").read_bytes())
    assert ppm_bytes(julia_graph_image()) == golden
