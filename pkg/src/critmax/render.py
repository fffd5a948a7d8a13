"""Tiled rendering of the parameter and dynamical planes as binary PPM images.

Pixel orbits are iterated in explicit real arithmetic so that every pixel is
classified exactly as family.classify_orbit would classify it.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .family import FamilyContext

PARAMETER = "parameter"
DYNAMICAL = "dynamical"

UNDECIDED, ESCAPE, BASIN = 0, 1, 2

PALETTES = {
    "classic": {
        "escape": [(255, 244, 214), (250, 200, 120), (232, 140, 60), (190, 80, 40),
                   (120, 40, 60), (70, 40, 110), (40, 80, 170), (110, 170, 230)],
        "basin": [(40, 110, 60), (90, 160, 90), (150, 200, 120), (200, 230, 170),
                  (120, 190, 200), (70, 140, 170)],
    },
    "gray": {
        "escape": [(250, 250, 250), (215, 215, 215), (180, 180, 180), (145, 145, 145)],
        "basin": [(90, 90, 90), (120, 120, 120), (60, 60, 60)],
    },
}


def thread_hint(default: int = 1) -> int:
    try:
        return max(1, int(os.environ.get("CRITMAX_THREADS", default)))
    except ValueError:
        return default


@dataclass(frozen=True)
class RasterSpec:
    plane: str
    d: int
    center: complex = 0j
    width: float = 4.0
    pixels: tuple[int, int] = (400, 400)
    budget: int = 200
    palette: str = "classic"
    a: complex | None = None
    threads: int | None = None

    def __post_init__(self):
        if self.plane not in (PARAMETER, DYNAMICAL):
            raise ValueError(f"unknown plane {self.plane!r}")
        if self.plane == DYNAMICAL and self.a is None:
            raise ValueError("the dynamical plane needs a parameter a")
        if self.d < 3:
            raise ValueError("degree must be >= 3")
        w, h = self.pixels
        if w < 1 or h < 1 or not self.width > 0 or self.budget < 1:
            raise ValueError("invalid raster geometry or budget")
        if self.palette not in PALETTES:
            raise ValueError(f"unknown palette {self.palette!r}")

    @property
    def height(self) -> float:
        w, h = self.pixels
        return self.width * h / w

    def rows(self, j0: int, j1: int) -> np.ndarray:
        """Pixel-center coordinates of rows j0..j1-1 (row-major, top row first)."""
        w, h = self.pixels
        step = self.width / w
        xs = (np.arange(w) + 0.5 - w / 2) * step
        ys = -(np.arange(j0, j1) + 0.5 - h / 2) * step
        return (self.center.real + xs)[None, :] + 1j * (self.center.imag + ys)[:, None]

    def point(self, i: int, j: int) -> complex:
        return complex(self.rows(j, j + 1)[0, i])

    def pixel(self, z: complex) -> tuple[float, float]:
        """Continuous pixel coordinates (column, row) of a plane point."""
        w, h = self.pixels
        step = self.width / w
        return (z.real - self.center.real) / step + w / 2 - 0.5, -(z.imag - self.center.imag) / step + h / 2 - 0.5


def _r_zero(d: int, abs_a: np.ndarray) -> np.ndarray:
    """Vectorized family._r_zero (same bisection, same operations)."""
    k = d * abs_a / (d - 1)
    g = lambda r: r ** (d - 2) * (r + k)
    out = np.full(abs_a.shape, 0.5)
    todo = g(0.5) > 0.5
    lo, hi = np.zeros(abs_a.shape), np.full(abs_a.shape, 0.5)
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        ok = g(mid) <= 0.5
        lo = np.where(ok, mid, lo)
        hi = np.where(ok, hi, mid)
    return np.where(todo, lo, out)


def _cpow(x, y, n):
    """x+iy to the power n by binary exponentiation with the scalar operation order."""
    rx = ry = None
    px, py = x, y
    mask = 1
    while mask <= n:
        if n & mask:
            if rx is None:
                rx, ry = px, py
            else:
                rx, ry = rx * px - ry * py, rx * py + ry * px
        mask <<= 1
        if mask <= n:
            px, py = px * px - py * py, px * py + py * px
    return rx, ry


def classify_points(d: int, z: np.ndarray, c: np.ndarray, r_esc: np.ndarray, r_zero: np.ndarray,
                    budget: int):
    """Vectorized classify_orbit: (kind, step, smooth potential)."""
    shape = z.shape
    x, y = z.real.ravel().copy(), z.imag.ravel().copy()
    cx, cy = np.broadcast_to(c.real, shape).ravel(), np.broadcast_to(c.imag, shape).ravel()
    re = np.broadcast_to(r_esc, shape).ravel()
    rz = np.broadcast_to(r_zero, shape).ravel()
    kind = np.zeros(x.size, dtype=np.uint8)
    step = np.full(x.size, budget, dtype=np.int32)
    pot = np.zeros(x.size)
    idx = np.arange(x.size)
    for n in range(budget + 1):
        r = np.hypot(x, y)
        esc = r > re[idx]
        conv = ~esc & (r < rz[idx])
        if esc.any():
            hit = idx[esc]
            kind[hit] = ESCAPE
            step[hit] = n
            pot[hit] = np.log(r[esc]) / float(d) ** n
        if conv.any():
            hit = idx[conv]
            kind[hit] = BASIN
            step[hit] = n
        keep = ~(esc | conv)
        if not keep.any() or n == budget:
            break
        idx, x, y = idx[keep], x[keep], y[keep]
        px, py = _cpow(x, y, d - 1)
        sx, sy = x + cx[idx], y + cy[idx]
        x, y = px * sx - py * sy, px * sy + py * sx
    return kind.reshape(shape), step.reshape(shape), pot.reshape(shape)


def _classify_rows(spec: RasterSpec, j0: int, j1: int):
    pts = spec.rows(j0, j1)
    d = spec.d
    if spec.plane == PARAMETER:
        a = pts
        # same real operations as the scalar d * a / (d - 1)
        c = d * a.real / (d - 1) + 1j * (d * a.imag / (d - 1))
        abs_a = np.hypot(a.real, a.imag)
        r_esc = np.maximum(2.0, 2 * d * abs_a / (d - 1))
        r_zero = _r_zero(d, abs_a)
        start = -a
    else:
        ctx = FamilyContext(d, spec.a)
        c = np.full(pts.shape, ctx.c)
        r_esc = np.full(pts.shape, ctx.r_escape)
        r_zero = np.full(pts.shape, ctx.r_zero)
        start = pts
    return classify_points(d, start, c, r_esc, r_zero, spec.budget)


def classify_grid(spec: RasterSpec, threads: int | None = None):
    """(kind, step, potential) arrays of shape (h, w), computed over disjoint row bands."""
    w, h = spec.pixels
    n = threads or spec.threads or thread_hint()
    bands = max(1, min(h, 4 * n))
    edges = [h * k // bands for k in range(bands + 1)]
    kind = np.zeros((h, w), dtype=np.uint8)
    step = np.zeros((h, w), dtype=np.int32)
    pot = np.zeros((h, w))

    def work(k):
        j0, j1 = edges[k], edges[k + 1]
        if j0 < j1:
            kind[j0:j1], step[j0:j1], pot[j0:j1] = _classify_rows(spec, j0, j1)

    if n == 1:
        for k in range(bands):
            work(k)
    else:
        with ThreadPoolExecutor(max_workers=n) as pool:
            list(pool.map(work, range(bands)))
    return kind, step, pot


def colorize(spec: RasterSpec, kind, step, pot) -> np.ndarray:
    pal = PALETTES[spec.palette]
    esc = np.array(pal["escape"], dtype=np.uint8)
    bas = np.array(pal["basin"], dtype=np.uint8)
    img = np.zeros(kind.shape + (3,), dtype=np.uint8)
    e = kind == ESCAPE
    with np.errstate(divide="ignore"):
        band = np.floor(-2 * np.log2(np.where(e & (pot > 0), pot, 1.0))).astype(np.int64)
    img[e] = esc[band[e] % len(esc)]
    b = kind == BASIN
    img[b] = bas[step[b] % len(bas)]
    return img


def render(spec: RasterSpec, threads: int | None = None):
    """(RGB image array, classification grid)."""
    kind, step, pot = classify_grid(spec, threads)
    return colorize(spec, kind, step, pot), kind


def ppm_bytes(img: np.ndarray) -> bytes:
    h, w, _ = img.shape
    return b"P6\n%d %d\n255\n" % (w, h) + np.ascontiguousarray(img, dtype=np.uint8).tobytes()


def write_ppm(path, img: np.ndarray) -> None:
    with open(path, "wb") as fh:
        fh.write(ppm_bytes(img))


def read_ppm(data: bytes) -> np.ndarray:
    parts = data.split(maxsplit=4)
    if parts[0] != b"P6" or int(parts[3]) != 255:
        raise ValueError("not a P6 image with maxval 255")
    w, h = int(parts[1]), int(parts[2])
    return np.frombuffer(parts[4][: w * h * 3], dtype=np.uint8).reshape(h, w, 3)


def _line(x0, y0, x1, y1):
    """Integer pixels of a 1-pixel stroke (Bresenham)."""
    dx, dy = abs(x1 - x0), -abs(y1 - y0)
    sx, sy = (1 if x0 < x1 else -1), (1 if y0 < y1 else -1)
    err = dx + dy
    while True:
        yield x0, y0
        if x0 == x1 and y0 == y1:
            return
        e2 = 2 * err
        if e2 >= dy:
            err += dy
            x0 += sx
        if e2 <= dx:
            err += dx
            y0 += sy


def overlay(spec: RasterSpec, img: np.ndarray, polylines, color=(255, 0, 0)) -> np.ndarray:
    """Copy of img with each polyline drawn as a 1-pixel stroke."""
    out = img.copy()
    h, w, _ = out.shape
    for line in polylines:
        pts = [spec.pixel(complex(z)) for z in line]
        pts = [(round(x), round(y)) for x, y in pts if math.isfinite(x) and math.isfinite(y)]
        # clamp far-away points so strokes stay bounded
        pts = [(min(max(x, -w), 2 * w), min(max(y, -h), 2 * h)) for x, y in pts]
        for (x0, y0), (x1, y1) in zip(pts, pts[1:] or pts):
            for x, y in _line(x0, y0, x1, y1):
                if 0 <= x < w and 0 <= y < h:
                    out[y, x] = color
    return out
