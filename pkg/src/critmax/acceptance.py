"""Numeric acceptance checks, runnable from pytest or `critmax verify`."""

from __future__ import annotations

import cmath
import gzip
import math
import random
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .angles import Angle
from .boettcher import INFINITY, ZERO, BoettcherError, Undecidable, boettcher_coordinate, green
from .family import FamilyContext, apply_symmetry, evaluate
from .param import classify_parameter, phi_infinity_param, trace_param_ray, wake_boundary, wake_membership
from .puzzle import RENORMALIZABLE, NOT_RENORMALIZABLE, detect_renormalization
from .rays import trace_ray
from .render import PARAMETER, RasterSpec, classify_grid, classify_points, ppm_bytes, render
from .special import classify_ray_landing, classify_ray_landing_many, critical_offsets, find_misiurewicz, find_parabolic

CUSP = 4j / 3
CUSP_ANGLES = ("1/2", "0")
CUSP_SECTORS = ("id", "tau_sigma")


@dataclass
class CheckResult:
    number: int
    name: str
    ok: bool
    seconds: float = 0.0
    detail: dict = field(default_factory=dict)

    def line(self) -> str:
        return f"[{self.number:2d}] {self.name:<22} {'PASS' if self.ok else 'FAIL'}  ({self.seconds:.2f} s) {self.detail}"

    def to_json(self) -> dict:
        return {"number": self.number, "name": self.name, "ok": self.ok, "seconds": self.seconds,
                "detail": self.detail}


def _rel(x: complex, y: complex) -> float:
    return abs(x - y) / max(1.0, abs(y))


def check_symmetry() -> tuple[bool, dict]:
    rng = np.random.default_rng(1)
    worst = 0.0
    for d in (3, 4, 5):
        n = 10_000
        a = rng.uniform(-2, 2, n) + 1j * rng.uniform(-2, 2, n)
        z = rng.uniform(-2, 2, n) + 1j * rng.uniform(-2, 2, n)
        tau = cmath.exp(2j * math.pi / (d - 1))
        f = lambda z, a: z ** (d - 1) * (z + d * a / (d - 1))
        worst = max(worst, float(np.max(np.abs(f(tau * z, tau * a) - tau * f(z, a)) / np.maximum(1, np.abs(f(z, a))))))
        worst = max(worst, float(np.max(np.abs(f(z.conj(), a.conj()) - f(z, a).conj()) / np.maximum(1, np.abs(f(z, a))))))
        # the scalar implementation too, on a subsample
        for k in range(0, n, 50):
            ctx = FamilyContext(d, a[k])
            lhs = evaluate(ctx.with_a(apply_symmetry(ctx, "tau", a[k])), apply_symmetry(ctx, "tau", z[k]))
            worst = max(worst, _rel(lhs, apply_symmetry(ctx, "tau", evaluate(ctx, z[k]))))
            lhs = evaluate(ctx.with_a(a[k].conjugate()), z[k].conjugate())
            worst = max(worst, _rel(lhs, evaluate(ctx, z[k]).conjugate()))
    return worst <= 1e-12, {"max_error": worst}


def check_boettcher() -> tuple[bool, dict]:
    rng = random.Random(2)
    worst = 0.0
    for d in (3, 4, 5):
        for pole, m in ((INFINITY, d), (ZERO, d - 1)):
            n = 0
            while n < 1000:
                a = complex(rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5))
                ctx = FamilyContext(d, a)
                box = 3.0 if pole == INFINITY else 0.6
                z = complex(rng.uniform(-box, box), rng.uniform(-box, box))
                try:
                    p = boettcher_coordinate(ctx, pole, z)
                    q = boettcher_coordinate(ctx, pole, evaluate(ctx, z))
                    g0, g1 = green(ctx, pole, z).value, green(ctx, pole, evaluate(ctx, z)).value
                except (BoettcherError, Undecidable, ArithmeticError, ValueError):
                    continue
                if not (g0 > 0 and math.isfinite(g1)):
                    continue
                n += 1
                worst = max(worst, abs(q - p**m) / abs(p**m), abs(g1 - m * g0) / abs(m * g0))
    return worst <= 1e-9, {"max_relative_error": worst}


def check_phi_asymptotic() -> tuple[bool, dict]:
    worst = 0.0
    for r in (50, 100, 200):
        for th in (0.0, math.pi / 5):
            a = r * cmath.exp(1j * th)
            phi = phi_infinity_param(FamilyContext(3, a))
            worst = max(worst, abs(phi * 2 / (-((-a) ** 3)) - 1))
    return worst <= 1e-3, {"max_deviation": worst}


def check_covering_degree() -> tuple[bool, dict]:
    out = {}
    for d in (3, 4, 5):
        n, total = 2048, 0.0
        prev = phi_infinity_param(FamilyContext(d, 50))
        for k in range(1, n + 1):
            cur = phi_infinity_param(FamilyContext(d, 50 * cmath.exp(2j * math.pi * k / n)))
            total += cmath.phase(cur / prev)
            prev = cur
        out[d] = total / (2 * math.pi)
    ok = all(abs(w - d) < 1e-6 for d, w in out.items())
    return ok, {"winding": {str(d): round(w, 9) for d, w in out.items()}}


def check_misiurewicz() -> tuple[bool, dict]:
    sol = find_misiurewicz(3, 1, 1, 0.9)
    ends = {}
    for locus in (INFINITY, ZERO):
        tr = trace_param_ray(3, locus, 0, 1e-30)
        ends[locus] = tr.point if tr.point is not None else tr.samples[-1][1]
    ok = (abs(sol.a - 1) <= 1e-8 and abs(sol.multiplier - 2.25) <= 1e-6
          and all(abs(x - 1) <= 1e-4 for x in ends.values()))
    return ok, {"a": [sol.a.real, sol.a.imag], "multiplier": [sol.multiplier.real, sol.multiplier.imag],
                "ray_ends": {k: [v.real, v.imag] for k, v in ends.items()}}


def check_parabolic() -> tuple[bool, dict]:
    s3 = find_parabolic(3, 1, 1.3j, -0.9j)
    s4 = find_parabolic(4, 1, 1.4, -1.25)
    a4, z4 = 9 * 2 ** (-2 / 3) / 4, -(2 ** (1 / 3))
    e3 = max(abs(s3.a - 4j / 3), abs(s3.z + 1j))
    e4 = max(abs(s4.a - a4), abs(s4.z - z4))
    return max(e3, e4) <= 1e-8, {"error_d3": e3, "error_d4": e4}


def eventual_image(den: int, m: int) -> np.ndarray:
    """Residues mod den that are periodic under xm: the eventual image of Z/den, by enumeration."""
    # every prime power dividing den has exponent below den.bit_length()
    mask = np.zeros(den, dtype=bool)
    mask[np.arange(den, dtype=np.int64) * pow(m, max(1, den.bit_length()), den) % den] = True
    return mask


def check_landing_classifier(max_den: int = 10_000) -> tuple[bool, dict]:
    mismatches = checked = 0
    spent = 0.0
    for d in (3, 4, 5):
        for locus in (INFINITY, ZERO):
            m = d if locus == INFINITY else d - 1
            offsets = critical_offsets(d, locus)
            for q in range(1, max_den + 1):
                t0 = time.perf_counter()
                nums, parabolic = classify_ray_landing_many(d, q, locus)
                spent += time.perf_counter() - t0
                periodic = eventual_image(q * m, m)
                expect = np.zeros(nums.shape, dtype=bool)
                for j in offsets:
                    expect |= periodic[nums + j * q]
                mismatches += int(np.count_nonzero(parabolic != expect))
                checked += len(nums)
    # the scalar classifier against the same enumeration
    rng = random.Random(7)
    for _ in range(500):
        d, locus = rng.choice((3, 4, 5)), rng.choice((INFINITY, ZERO))
        q = rng.randrange(2, max_den + 1)
        t = Angle(rng.randrange(q), q)
        m = d if locus == INFINITY else d - 1
        cls = classify_ray_landing(d, t, locus)
        periodic = eventual_image(t.den * m, m)
        expect = [bool(periodic[(t.num + j * t.den) % (t.den * m)]) for j in critical_offsets(d, locus)]
        mismatches += int(list(cls.periodic) != expect or (cls.kind == "parabolic") != any(expect))
    return mismatches == 0 and spent < 30, {"angles": checked, "mismatches": mismatches,
                                            "classifier_seconds": round(spent, 2)}


def check_critical_rays() -> tuple[bool, dict]:
    worst, bad = 0.0, []
    for s in (1.0, 0.5, 0.1):
        a = trace_param_ray(3, INFINITY, 0, s).samples[-1][1]
        ctx = FamilyContext(3, a)
        for t in ("1/3", "2/3"):
            tr = trace_ray(ctx, INFINITY, t, 1e-8)
            dist = abs(tr.point + a) if tr.status == "crashed" else math.inf
            worst = max(worst, dist)
            if not dist <= 1e-4:
                bad.append(f"infinity {t} at s={s}")
        a0 = trace_param_ray(3, ZERO, 0, s).samples[-1][1]
        ctx = FamilyContext(3, a0)
        tr = trace_ray(ctx, ZERO, "1/2", 1e-8)
        dist = abs(tr.point + a0) if tr.status == "crashed" else math.inf
        worst = max(worst, dist)
        if not dist <= 1e-4:
            bad.append(f"zero 1/2 at s={s}")
    return not bad, {"max_distance": worst, "failures": bad}


def _wake():
    return wake_boundary(3, *CUSP_ANGLES, landing=CUSP, sectors=CUSP_SECTORS)


def copy_samples(count: int = 5, boundary=None) -> list[complex]:
    """Interior parameters of the satellite copy at the cusp, picked from a rendered grid.

    Pixels whose orbit neither escapes nor is captured, whose 8 neighbours agree,
    and which lie in the wake; the ones nearest the copy's center are spread out.
    """
    boundary = boundary or _wake()
    spec = RasterSpec(PARAMETER, 3, 1.42j, 0.24, (48, 48), 400)
    kind, _, _ = classify_grid(spec, 1)
    center = find_parabolic(3, 1, 1.4j, -1.4j, multiplier=0).a
    cands = []
    for j in range(1, 47):
        for i in range(1, 47):
            if np.all(kind[j - 1:j + 2, i - 1:i + 2] == 0):
                a = spec.point(i, j)
                cands.append((abs(a - center), a))
    cands.sort(key=lambda c: c[0])
    out = []
    for _, a in cands:
        if all(abs(a - b) >= 0.02 for b in out) and wake_membership(3, a, *CUSP_ANGLES, boundary=boundary):
            if classify_parameter(FamilyContext(3, a), budget=2000).kind == "undecided":
                out.append(a)
        if len(out) == count:
            break
    return out


def check_renormalization() -> tuple[bool, dict]:
    rep = detect_renormalization(FamilyContext(3, 1.0), max_depth=5)
    verdicts = {"1": rep.verdict}
    ok = rep.verdict == NOT_RENORMALIZABLE
    samples = copy_samples()
    ok = ok and len(samples) == 5
    periods = []
    for a in samples:
        r = detect_renormalization(FamilyContext(3, a), max_depth=5)
        verdicts[f"{a.real:.4f}{a.imag:+.4f}i"] = r.verdict
        periods.append(r.period)
        ok = ok and r.verdict == RENORMALIZABLE
    return ok, {"verdicts": verdicts, "periods": periods}


GOLDEN_SPECS = {3: RasterSpec(PARAMETER, 3, 0j, 4.0, (800, 800), 200),
                4: RasterSpec(PARAMETER, 4, 0j, 4.0, (800, 800), 200)}


def golden_name(d: int) -> str:
    return f"param_d{d}_800.ppm.gz"


def check_rendering(data_dir=None) -> tuple[bool, dict]:
    data_dir = Path(data_dir) if data_dir is not None else Path.cwd() / "tests" / "data"
    ok, detail = True, {}
    for d, spec in GOLDEN_SPECS.items():
        imgs, grid = [], None
        for n in (1, 2, 8):
            img, kind = render(spec, n)
            imgs.append(ppm_bytes(img))
            grid = kind
        same = all(b == imgs[0] for b in imgs)
        path = data_dir / golden_name(d)
        golden = gzip.decompress(path.read_bytes()) == imgs[0] if path.exists() else None
        sigma = float(np.mean(grid == grid[::-1, :]))
        if d == 3:
            tau = float(np.mean(grid == grid[::-1, ::-1]))
        else:
            # rotation by tau does not map the grid to itself: classify the rotated centers
            w, h = spec.pixels
            pts = spec.rows(0, h) * cmath.exp(2j * math.pi / (d - 1))
            dd = d
            c = dd * pts.real / (dd - 1) + 1j * (dd * pts.imag / (dd - 1))
            abs_a = np.hypot(pts.real, pts.imag)
            from .render import _r_zero
            rk, _, _ = classify_points(dd, -pts, c, np.maximum(2.0, 2 * dd * abs_a / (dd - 1)),
                                       _r_zero(dd, abs_a), spec.budget)
            tau = float(np.mean(rk == grid))
        detail[f"d{d}"] = {"threads_identical": same, "golden": golden, "sigma": sigma, "tau": tau}
        ok = ok and same and golden is True and sigma >= 0.999 and tau >= 0.999
    return ok, detail


def check_wake() -> tuple[bool, dict]:
    boundary = _wake()
    outside = wake_membership(3, 0j, *CUSP_ANGLES, boundary=boundary)
    sample = copy_samples(1, boundary)[0]
    inside = wake_membership(3, sample, *CUSP_ANGLES, boundary=boundary)
    return (outside is False and inside is True), {"zero": outside, "sample": [sample.real, sample.imag],
                                                   "sample_in_wake": inside}


CHECKS = [
    (1, "symmetry", check_symmetry),
    (2, "boettcher-equations", check_boettcher),
    (3, "phi-asymptotic", check_phi_asymptotic),
    (4, "covering-degree", check_covering_degree),
    (5, "misiurewicz", check_misiurewicz),
    (6, "parabolic", check_parabolic),
    (7, "landing-classifier", check_landing_classifier),
    (8, "critical-rays", check_critical_rays),
    (9, "renormalization", check_renormalization),
    (10, "rendering", check_rendering),
    (11, "wake", check_wake),
]


def run_check(number: int, data_dir=None) -> CheckResult:
    num, name, fn = CHECKS[number - 1]
    t0 = time.perf_counter()
    try:
        ok, detail = fn(data_dir) if num == 10 else fn()
    except Exception as e:  # a crash is a failed check, reported with its message
        ok, detail = False, {"error": f"{type(e).__name__}: {e}"}
    return CheckResult(num, name, bool(ok), time.perf_counter() - t0, detail)


def run(numbers=None, data_dir=None) -> list[CheckResult]:
    numbers = numbers or [c[0] for c in CHECKS]
    return [run_check(n, data_dir) for n in numbers]
