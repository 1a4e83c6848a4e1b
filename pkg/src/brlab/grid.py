"""Periodic sampling grid: transforms, norms, cube averages, test fields.

The continuum R^n is modeled by a torus of side ``L`` centered at the
origin, sampled at ``N`` points per axis, ``x = L*(j/N - 1/2)``.  Frequency
space is the lattice ``(1/L)*Z^n`` truncated at the Nyquist frequency
``N/(2L)``.  Test functions are confined to the central quarter of the
domain so that periodic wraparound of slowly decaying kernels stays
quantifiably below the relevant envelopes.

Transform convention (forward):

    fhat(xi) = dx^n * sum_j f(x_j) exp(-2 pi i x_j . xi)

which discretizes the continuum Fourier integral; Parseval then reads
``sum |fhat|^2 / L^n = sum |f|^2 dx^n``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np

__all__ = [
    "GridSpec",
    "Box",
    "SampledField",
    "SpectralField",
    "forward_transform",
    "inverse_transform",
    "cube_average",
    "lp_norm",
    "make_test_function",
    "mask_to_box",
    "write_field",
    "read_field",
]


@dataclass(frozen=True)
class GridSpec:
    """Periodic square grid: ``n`` dimensions, side ``L``, ``N`` samples per axis.

    ``N`` must be a power of two with ``N >= 8`` and the Nyquist frequency
    ``N/(2L)`` must exceed 2 so the unit frequency ball is resolved.
    """

    n: int
    L: float
    N: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"dimension must be >= 1, got {self.n}")
        if self.L <= 0:
            raise ValueError(f"domain side must be positive, got {self.L}")
        if self.N < 8 or (self.N & (self.N - 1)) != 0:
            raise ValueError(f"N must be a power of two >= 8, got {self.N}")
        if self.nyquist <= 2.0:
            raise ValueError(
                f"Nyquist frequency N/(2L) = {self.nyquist} must exceed 2; "
                "raise N or lower L"
            )

    @property
    def dx(self) -> float:
        return self.L / self.N

    @property
    def nyquist(self) -> float:
        return self.N / (2.0 * self.L)

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.N,) * self.n

    def axis_coords(self) -> np.ndarray:
        """Sample coordinates along one axis: ``L*(j/N - 1/2)``."""
        return (np.arange(self.N) - self.N // 2) * self.dx

    def meshgrid(self) -> list[np.ndarray]:
        return np.meshgrid(*([self.axis_coords()] * self.n), indexing="ij")


@lru_cache(maxsize=64)
def _freq_axis(spec: GridSpec) -> np.ndarray:
    return np.fft.fftfreq(spec.N, d=spec.dx)

@lru_cache(maxsize=64)
def freq_sq(spec: GridSpec) -> np.ndarray:
    """``|xi|^2`` on the discrete frequency lattice, in fft ordering."""
    ax = _freq_axis(spec)
    out = np.zeros(spec.shape)
    for axis in range(spec.n):
        shape = [1] * spec.n
        shape[axis] = spec.N
        out = out + (ax ** 2).reshape(shape)
    return out

@lru_cache(maxsize=64)
def _radius_sq_grid(spec: GridSpec) -> np.ndarray:
    """``|x|^2`` on the physical grid."""
    ax = spec.axis_coords()
    out = np.zeros(spec.shape)
    for axis in range(spec.n):
        shape = [1] * spec.n
        shape[axis] = spec.N
        out = out + (ax ** 2).reshape(shape)
    return out


@dataclass(frozen=True)
class Box:
    """Axis-aligned box ``[lo, hi)`` in physical coordinates."""

    lo: tuple[float, ...]
    hi: tuple[float, ...]

    def __post_init__(self):
        if len(self.lo) != len(self.hi):
            raise ValueError("lo/hi dimension mismatch")
        if any(h <= l for l, h in zip(self.lo, self.hi)):
            raise ValueError(f"box must have positive volume: {self}")

    @classmethod
    def from_center(cls, center, half_widths) -> "Box":
        center = np.atleast_1d(np.asarray(center, dtype=float))
        half = np.broadcast_to(np.asarray(half_widths, dtype=float), center.shape)
        return cls(tuple(center - half), tuple(center + half))

    @property
    def n(self) -> int:
        return len(self.lo)

    @property
    def volume(self) -> float:
        return float(np.prod(np.subtract(self.hi, self.lo)))

    @property
    def center(self) -> tuple[float, ...]:
        return tuple((l + h) / 2.0 for l, h in zip(self.lo, self.hi))

    def dilate(self, factor: float) -> "Box":
        """Concentric dilation, e.g. ``factor=6`` gives the 6Q of a cube Q."""
        c = self.center
        return Box(
            tuple(ci + factor * (l - ci) for ci, l in zip(c, self.lo)),
            tuple(ci + factor * (h - ci) for ci, h in zip(c, self.hi)),
        )

    def contains_box(self, other: "Box") -> bool:
        return all(sl <= ol and oh <= sh for sl, ol, oh, sh in
                   zip(self.lo, other.lo, other.hi, self.hi))

    def union(self, other: "Box") -> "Box":
        return Box(
            tuple(min(a, b) for a, b in zip(self.lo, other.lo)),
            tuple(max(a, b) for a, b in zip(self.hi, other.hi)),
        )

    def index_ranges(self, spec: GridSpec, clip: bool = True) -> list[tuple[int, int]]:
        """Half-open grid-index ranges of the sample points inside the box."""
        ranges = []
        for axis in range(spec.n):
            lo = self.lo[axis] / spec.dx + spec.N // 2
            hi = self.hi[axis] / spec.dx + spec.N // 2
            j0 = math.ceil(lo - 1e-9)
            j1 = math.ceil(hi - 1e-9)
            if clip:
                j0, j1 = max(j0, 0), min(j1, spec.N)
            ranges.append((j0, j1))
        return ranges


@dataclass(frozen=True, eq=False)
class SampledField:
    """Complex field sampled on the grid, with an optional declared support box.

    ``support`` is a certificate that the values vanish identically outside
    the box; generators that window their output record it, multiplier
    applications drop it (a Fourier multiplier spreads support).
    """

    spec: GridSpec
    values: np.ndarray
    support: Box | None = None

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.complex128)
        if vals.shape != self.spec.shape:
            raise ValueError(f"values shape {vals.shape} != grid shape {self.spec.shape}")
        if not np.all(np.isfinite(vals.view(np.float64))):
            raise ValueError("field values must be finite")
        object.__setattr__(self, "values", vals)

    def with_values(self, values: np.ndarray, support: Box | None = None) -> "SampledField":
        return SampledField(self.spec, values, support)

    def __mul__(self, c):
        return SampledField(self.spec, self.values * c, self.support)

    __rmul__ = __mul__

    def __add__(self, other: "SampledField") -> "SampledField":
        sup = None
        if self.support is not None and other.support is not None:
            sup = self.support.union(other.support)
        return SampledField(self.spec, self.values + other.values, sup)

    def __sub__(self, other: "SampledField") -> "SampledField":
        return self + (-1.0) * other


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Fourier coefficients on the frequency lattice, fft ordering."""

    spec: GridSpec
    coefficients: np.ndarray

    def __post_init__(self):
        coeffs = np.asarray(self.coefficients, dtype=np.complex128)
        if coeffs.shape != self.spec.shape:
            raise ValueError("coefficient shape mismatch")
        object.__setattr__(self, "coefficients", coeffs)

    def freq_sq(self) -> np.ndarray:
        return freq_sq(self.spec)


def forward_transform(f: SampledField) -> SpectralField:
    """Discrete Fourier transform under the unitary Parseval convention."""
    spec = f.spec
    coeffs = np.fft.fftn(np.fft.ifftshift(f.values)) * spec.dx ** spec.n
    return SpectralField(spec, coeffs)


def inverse_transform(F: SpectralField) -> SampledField:
    spec = F.spec
    vals = np.fft.fftshift(np.fft.ifftn(F.coefficients)) / spec.dx ** spec.n
    return SampledField(spec, vals)


def cube_average(f: SampledField, box: Box, p: float) -> float:
    """``( (1/|R|) int_{R} |f|^p dx )^{1/p}`` by Riemann sum on grid points.

    The full measure ``|R|`` sits in the denominator and the integrand is
    extended by zero outside the sampled domain, so dilated cubes that
    spill over the boundary are handled consistently with compactly
    supported integrands.
    """
    if p < 1:
        raise ValueError(f"exponent must satisfy p >= 1, got {p}")
    spec = f.spec
    ranges = box.index_ranges(spec)
    if any(j1 <= j0 for j0, j1 in ranges):
        raise ValueError("empty intersection: box contains no sample points")
    sl = tuple(slice(j0, j1) for j0, j1 in ranges)
    chunk = np.abs(f.values[sl])
    integral = float(np.sum(chunk ** p)) * spec.dx ** spec.n
    return (integral / box.volume) ** (1.0 / p)


def lp_norm(f: SampledField, p: float, w: "SampledField | None" = None) -> float:
    """Weighted L^p norm by Riemann sum; ``p = inf`` gives the grid max of |f|."""
    if p == math.inf:
        return float(np.max(np.abs(f.values)))
    if p < 1:
        raise ValueError(f"exponent must satisfy p >= 1, got {p}")
    dens = np.abs(f.values) ** p
    if w is not None:
        dens = dens * w.values.real
    return float(np.sum(dens) * f.spec.dx ** f.spec.n) ** (1.0 / p)


def _mollifier_ramp(u):
    """C-infinity ramp: 0 for u <= 0, 1 for u >= 1, built from exp(-1/t)."""
    u = np.asarray(u, dtype=float)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        a = np.where(u > 0, np.exp(-1.0 / np.maximum(u, 1e-300)), 0.0)
        b = np.where(u < 1, np.exp(-1.0 / np.maximum(1.0 - u, 1e-300)), 0.0)
    out = a / (a + b)
    return np.where(u <= 0, 0.0, np.where(u >= 1, 1.0, out))


def _central_quarter(spec: GridSpec) -> Box:
    q = spec.L / 8.0
    return Box((-q,) * spec.n, (q,) * spec.n)


def _require_inside_quarter(spec: GridSpec, box: Box, kind: str):
    if not _central_quarter(spec).contains_box(box):
        raise ValueError(
            f"{kind}: requested support {box.lo}..{box.hi} exceeds the central "
            f"quarter [+-{spec.L / 8.0}]^{spec.n} of the domain"
        )


def make_test_function(spec: GridSpec, kind: str, seed: int | None = None,
                       **params) -> SampledField:
    """Deterministic test-function generator.

    Kinds
    -----
    gaussian : ``amp * exp(-pi |x-c|^2 / s^2)``; params ``center``, ``width``,
        ``amp``.  Effective support (4 widths) must sit in the central quarter.
    bump : classic C-infinity bump of radius ``r``, exactly zero outside;
        the ``2r`` support box is recorded on the field.
    random_trig : random trigonometric polynomial times a bump window of
        radius ``window_radius``; params ``num_modes``, ``freq_max``.  Mode
        parameters are drawn from ``seed`` only, so the same seed yields the
        same continuum function on every grid.
    indicator_smooth : smoothed box indicator, 1 on the ``half_width`` box,
        0 outside ``half_width + transition``; support box recorded.
    """
    n = spec.n
    center = np.atleast_1d(np.asarray(params.get("center", 0.0), dtype=float))
    if center.size == 1:
        center = np.full(n, center[0])
    amp = float(params.get("amp", 1.0))
    mesh = spec.meshgrid()

    def radial_sq(c):
        return sum((mesh[i] - c[i]) ** 2 for i in range(n))

    if kind == "gaussian":
        width = float(params.get("width", spec.L / 40.0))
        _require_inside_quarter(spec, Box.from_center(center, 4.0 * width), kind)
        vals = amp * np.exp(-np.pi * radial_sq(center) / width ** 2)
        return SampledField(spec, vals)

    if kind == "bump":
        radius = float(params.get("radius", spec.L / 32.0))
        box = Box.from_center(center, radius)
        _require_inside_quarter(spec, box, kind)
        rho2 = radial_sq(center) / radius ** 2
        with np.errstate(divide="ignore", over="ignore"):
            vals = np.where(rho2 < 1.0, np.exp(1.0 - 1.0 / np.maximum(1.0 - rho2, 1e-300)), 0.0)
        return SampledField(spec, amp * vals, support=box)

    if kind == "indicator_smooth":
        half = float(params.get("half_width", spec.L / 32.0))
        trans = float(params.get("transition", half / 2.0))
        box = Box.from_center(center, half + trans)
        _require_inside_quarter(spec, box, kind)
        vals = np.ones(spec.shape)
        for i in range(n):
            vals = vals * _mollifier_ramp((half + trans - np.abs(mesh[i] - center[i])) / trans)
        return SampledField(spec, amp * vals, support=box)

    if kind == "random_trig":
        rng = np.random.default_rng(seed)
        num_modes = int(params.get("num_modes", 8))
        freq_max = float(params.get("freq_max", 2.0))
        window_radius = float(params.get("window_radius", spec.L / 10.0))
        # draw all randomness before touching the grid: grid-independent params
        dirs = rng.standard_normal((num_modes, n))
        dirs /= np.maximum(np.linalg.norm(dirs, axis=1, keepdims=True), 1e-12)
        freqs = dirs * (freq_max * rng.random(num_modes
                        )[:, None] ** (1.0 / n))
        phases = rng.uniform(0.0, 2.0 * np.pi, num_modes)
        amps = rng.standard_normal(num_modes) / math.sqrt(num_modes)
        box = Box.from_center(center, window_radius)
        _require_inside_quarter(spec, box, kind)
        rho2 = radial_sq(center) / window_radius ** 2
        with np.errstate(divide="ignore", over="ignore"):
            window = np.where(rho2 < 1.0, np.exp(1.0 - 1.0 / np.maximum(1.0 - rho2, 1e-300)), 0.0)
        vals = np.zeros(spec.shape)
        for m in range(num_modes):
            phase = 2.0 * np.pi * sum(mesh[i] * freqs[m, i] for i in range(n))
            vals = vals + amps[m] * np.cos(phase + phases[m])
        return SampledField(spec, amp * window * vals, support=box)

    raise ValueError(f"unknown test-function kind: {kind!r}")


def mask_to_box(f: SampledField, box: Box) -> SampledField:
    """``f * 1_box``: zero the field outside the box; support shrinks to the box."""
    spec = f.spec
    ranges = box.index_ranges(spec)
    vals = np.zeros_like(f.values)
    sl = tuple(slice(j0, j1) for j0, j1 in ranges)
    vals[sl] = f.values[sl]
    sup = box if f.support is None else _intersect_boxes(box, f.support)
    return SampledField(spec, vals, support=sup)


def _intersect_boxes(a: Box, b: Box) -> Box | None:
    lo = tuple(max(x, y) for x, y in zip(a.lo, b.lo))
    hi = tuple(min(x, y) for x, y in zip(a.hi, b.hi))
    if any(h <= l for l, h in zip(lo, hi)):
        return None
    return Box(lo, hi)


def mask_outside_ball(f: SampledField, center_px: tuple[int, ...], radius_px: float) -> SampledField:
    """``f * 1_{B(c,r)^c}`` with the ball taken in grid pixels, ties included."""
    spec = f.spec
    idx = np.indices(spec.shape)
    d2 = np.zeros(spec.shape)
    for axis in range(spec.n):
        d = idx[axis] - center_px[axis]
        # minimal-image distance on the torus
        d = np.minimum(np.abs(d), spec.N - np.abs(d))
        d2 = d2 + d.astype(float) ** 2
    vals = np.where(d2 <= radius_px ** 2, 0.0, f.values)
    return SampledField(spec, vals, support=f.support)


def write_field(f: SampledField, path: str | Path):
    """Field file format: header ``field n=<n> N=<N> L=<L>``, then one
    ``re,im`` line per sample in row-major order (UTF-8, LF)."""
    spec = f.spec
    flat = f.values.reshape(-1)
    lines = [f"field n={spec.n} N={spec.N} L={spec.L!r}"]
    lines.extend(f"{float(v.real)!r},{float(v.imag)!r}" for v in flat)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def read_field(path: str | Path) -> SampledField:
    text = Path(path).read_text(encoding="utf-8")
    lines = text.splitlines()
    header = lines[0].split()
    if header[0] != "field":
        raise ValueError(f"not a field file: {path}")
    meta = dict(kv.split("=") for kv in header[1:])
    spec = GridSpec(n=int(meta["n"]), L=float(meta["L"]), N=int(meta["N"]))
    count = spec.N ** spec.n
    data = np.empty(count, dtype=np.complex128)
    for i, line in enumerate(lines[1:1 + count]):
        re_s, im_s = line.split(",")
        data[i] = complex(float(re_s), float(im_s))
    return SampledField(spec, data.reshape(spec.shape))
