"""Discretized maximal operators that drive the stopping-time selection.

Three operators act on a field ``f``:

* ``hl_maximal``      -- L^{p0} Hardy-Littlewood maximal function over the
  dyadic radius set.
* ``br_starstar``     -- sup over radii ``eps`` and centers ``y`` near ``x``
  of local L^{q0} averages of the truncated multiplier applied to ``f``.
* ``br_star``         -- same, but the input is masked outside the ball
  ``B(x, 3 eps)`` first (the off-diagonal / tail operator).

Discretization policy
---------------------
The continuum sup over ``eps > 0`` and ``|x - y| < eps`` is replaced by a
finite dyadic radius set and a per-ball candidate set of at most
``y_thin`` centers, so the discrete operators are lower bounds of the
continuum ones; the selection algorithm thresholds them with an adaptive
constant, which absorbs the under-estimation.

``br_star`` masks depend on the evaluation point, which is the expensive
part.  Two regimes keep the cost near one FFT per scale:

* small radii: the masked transform is evaluated exactly for every grid
  point through windowed kernel convolutions, one per displacement
  ``z - x`` (the kernel window makes this exact, not truncated);
* large radii: mask centers are snapped to a per-scale tile lattice of
  side ``eps`` (``|x - x'| <= eps/2``), and tiles whose mask ball fully
  covers (or misses) the support of ``f`` short-circuit to 0 (or to the
  unmasked average field).

``exact=True`` drops the snapping (tiles of a single pixel) for oracle
comparisons; it is priced for small grids only.  All ball geometry uses
grid pixels with the minimal-image torus metric, ties at the boundary
included.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.signal import fftconvolve

from .grid import Box, GridSpec, SampledField, lp_norm
from .multiplier import truncated_symbol

__all__ = [
    "MaximalConfig",
    "MaximalEngine",
    "hl_maximal",
    "br_star",
    "br_starstar",
    "ball_average",
    "weak_type_ratio",
]


@dataclass(frozen=True)
class MaximalConfig:
    """Discretization parameters shared by the three maximal operators.

    ``eps`` radii are ``2^m`` grid pixels for ``m`` in
    ``[eps_min_exp, eps_max_exp]`` (default upper end: ``log2(N/4)``).
    ``y_thin`` caps the candidate centers per ball (None = all);
    ``snap_min_px`` is the radius, in pixels, from which mask centers snap
    to the tile lattice; ``exact=True`` disables snapping entirely.
    """

    p0: float = 1.2
    q0: float = 2.0
    eps_min_exp: int = 2
    eps_max_exp: int | None = None
    y_thin: int | None = 64
    snap_min_px: int = 8
    exact: bool = False

    def __post_init__(self):
        if not 1.0 < self.p0 < 2.0:
            raise ValueError(f"p0 must lie in (1, 2), got {self.p0}")
        if not 2.0 <= self.q0 <= 6.0:
            raise ValueError(f"q0 must lie in [2, 6], got {self.q0}")
        if self.eps_min_exp < 0:
            raise ValueError("eps_min_exp must be >= 0")

    def eps_px_list(self, spec: GridSpec) -> list[int]:
        hi = self.eps_max_exp
        if hi is None:
            hi = int(math.log2(spec.N)) - 2
        exps = [m for m in range(self.eps_min_exp, hi + 1) if 2 ** m <= spec.N // 4]
        if not exps:
            raise ValueError("empty radius set: grid too small for eps_min_exp")
        return [2 ** m for m in exps]


# -- ball geometry in grid pixels (minimal-image torus metric) ---------------

@lru_cache(maxsize=256)
def _ball_offsets(n: int, r_px: int, N: int) -> np.ndarray:
    """Integer offsets with torus distance <= r_px (ties included)."""
    if 2 * r_px + 1 <= N:
        rng = np.arange(-r_px, r_px + 1)
    else:
        rng = np.arange(-(N // 2), N - N // 2)
    grids = np.meshgrid(*([rng] * n), indexing="ij")
    d2 = np.zeros(grids[0].shape, dtype=np.int64)
    for g in grids:
        a = np.abs(g)
        d2 += np.minimum(a, N - a).astype(np.int64) ** 2
    mask = d2 <= r_px * r_px
    out = np.stack([g[mask] for g in grids], axis=-1)
    out.flags.writeable = False
    return out


@lru_cache(maxsize=256)
def _y_pattern(n: int, r_px: int, N: int, thin: int | None) -> np.ndarray:
    """Candidate center offsets: the r-ball, strided down to <= thin points.

    The pattern always contains the origin and is a fixed function of the
    radius, so every evaluation point uses the same candidate geometry.
    """
    offs = _ball_offsets(n, r_px, N)
    if thin is None or len(offs) <= thin:
        return offs
    stride = 2
    while True:
        keep = np.all(offs % stride == 0, axis=1)
        if keep.sum() <= thin:
            sub = offs[keep]
            sub.flags.writeable = False
            return sub
        stride += 1


@lru_cache(maxsize=128)
def _ball_stencil_rfft(spec: GridSpec, r_px: int) -> tuple[np.ndarray, int]:
    offs = _ball_offsets(spec.n, r_px, spec.N)
    st = np.zeros(spec.shape)
    st[tuple((offs % spec.N).T)] = 1.0
    return np.fft.rfftn(st), len(offs)


def _ball_sum_global(arr: np.ndarray, spec: GridSpec, r_px: int) -> tuple[np.ndarray, int]:
    """Periodic convolution with the r-ball indicator: sum of arr over each ball."""
    st_hat, count = _ball_stencil_rfft(spec, r_px)
    out = np.fft.irfftn(np.fft.rfftn(arr) * st_hat, s=spec.shape,
                        axes=tuple(range(spec.n)))
    return out, count


def _wrap_take(arr: np.ndarray, lo: tuple[int, ...], hi: tuple[int, ...]) -> np.ndarray:
    """arr over the index box [lo, hi) with periodic wrapping."""
    N = arr.shape[0]
    idx = [np.arange(l, h) % N for l, h in zip(lo, hi)]
    return arr[np.ix_(*idx)]


def _apply_sym_raw(vals: np.ndarray, symbol: np.ndarray) -> np.ndarray:
    """Apply a frequency-lattice symbol; real input takes the rfft path
    (every symbol here is even, so the output stays real)."""
    if np.isrealobj(vals) or not vals.imag.any():
        real = vals.real
        half = symbol[..., : vals.shape[-1] // 2 + 1]
        out = np.fft.irfftn(np.fft.rfftn(np.fft.ifftshift(real)) * half,
                            s=vals.shape, axes=tuple(range(vals.ndim)))
        return np.fft.fftshift(out)
    return np.fft.fftshift(np.fft.ifftn(np.fft.fftn(np.fft.ifftshift(vals)) * symbol))


@lru_cache(maxsize=8)
def _kernel_offsets(spec: GridSpec, delta: float, eps_key: float | None) -> np.ndarray:
    """Spatial kernel of the truncated multiplier, indexed by pixel offset
    (wrap semantics): B_eps(h) = circular convolution of h with this."""
    eps = 0.5 if eps_key is None else eps_key  # any eps <= 1 shares the symbol
    sym = truncated_symbol(spec, delta, eps)
    kern = np.fft.ifftn(sym)
    kern.flags.writeable = False
    return kern


def _eps_key(eps_phys: float) -> float | None:
    return None if eps_phys <= 1.0 else eps_phys


Window = tuple[tuple[int, int], ...]


def _full_window(spec: GridSpec) -> Window:
    return tuple((0, spec.N) for _ in range(spec.n))


def _box_to_window(spec: GridSpec, box: Box) -> Window:
    return tuple(box.index_ranges(spec))


class MaximalEngine:
    """Evaluates the three maximal operators for one field, sharing the
    per-scale artifacts (truncated fields, ball averages, kernels)."""

    def __init__(self, f: SampledField, delta: float, cfg: MaximalConfig):
        self.f = f
        self.spec = f.spec
        self.delta = float(delta)
        self.cfg = cfg
        self.eps_list = cfg.eps_px_list(f.spec)
        self._g: dict[float | None, np.ndarray] = {}
        self._avg: dict[int, np.ndarray] = {}
        self._nz_ball: tuple[np.ndarray, float] | None = None

    def _nonzero_ball(self) -> tuple[np.ndarray, float] | None:
        """Center and radius (px) of a ball certified to hold every nonzero
        of f; used for exact covered-mask shortcuts (a mask ball containing
        it leaves the masked input identically zero)."""
        if self._nz_ball is None:
            nz = np.argwhere(self.f.values != 0)
            if len(nz) == 0:
                self._nz_ball = (np.zeros(self.spec.n), -1.0)
            else:
                center = 0.5 * (nz.min(axis=0) + nz.max(axis=0))
                radius = float(np.sqrt(((nz - center) ** 2).sum(axis=1).max()))
                self._nz_ball = (center, radius)
        return self._nz_ball

    # -- shared per-scale artifacts ------------------------------------

    def _g_field(self, eps_px: int) -> np.ndarray:
        key = _eps_key(eps_px * self.spec.dx)
        if key not in self._g:
            eps = 0.5 if key is None else key
            sym = truncated_symbol(self.spec, self.delta, eps)
            self._g[key] = _apply_sym_raw(self.f.values, sym)
        return self._g[key]

    def _ball_mean_window(self, dens: np.ndarray, cache_key, eps_px: int,
                          ywin: Window) -> np.ndarray:
        """Mean of ``dens`` over eps-balls centered at each point of ``ywin``.

        Uses a cropped linear convolution when the region fits inside the
        grid, and the cached global periodic convolution otherwise; both are
        exact on the torus.
        """
        n, N = self.spec.n, self.spec.N
        region = tuple((l - eps_px, h + eps_px) for l, h in ywin)
        local = all(h - l <= N for l, h in region)
        if not local:
            key = (cache_key, eps_px, "global")
            if key not in self._avg:
                dhat_key = (cache_key, "dens_hat")
                if dhat_key not in self._avg:
                    self._avg[dhat_key] = np.fft.rfftn(dens)
                st_hat, count = _ball_stencil_rfft(self.spec, eps_px)
                s = np.fft.irfftn(self._avg[dhat_key] * st_hat, s=self.spec.shape,
                                  axes=tuple(range(self.spec.n)))
                self._avg[key] = np.maximum(s, 0.0) / count
            return _wrap_take(self._avg[key], tuple(l for l, _ in ywin),
                              tuple(h for _, h in ywin))
        offs = _ball_offsets(n, eps_px, N)
        st = np.zeros((2 * eps_px + 1,) * n)
        st[tuple((offs + eps_px).T)] = 1.0
        crop = _wrap_take(dens, tuple(l for l, _ in region), tuple(h for _, h in region))
        conv = fftconvolve(crop, st, mode="same")
        inner = tuple(slice(eps_px, eps_px + (h - l)) for l, h in ywin)
        return np.maximum(conv[inner], 0.0) / len(offs)

    def _avg_window(self, eps_px: int, ywin: Window) -> np.ndarray:
        """Ball L^{q0} average of the unmasked truncated field on ``ywin``."""
        key = (eps_px, ywin)
        if key not in self._avg:
            dens = np.abs(self._g_field(eps_px)) ** self.cfg.q0
            mean = self._ball_mean_window(dens, ("avg", _eps_key(eps_px * self.spec.dx)),
                                          eps_px, ywin)
            self._avg[key] = mean ** (1.0 / self.cfg.q0)
        return self._avg[key]

    @staticmethod
    def _expand(window: Window, pad: int) -> Window:
        return tuple((l - pad, h + pad) for l, h in window)

    def _y_max(self, avg_on_ywin: np.ndarray, window: Window, eps_px: int) -> np.ndarray:
        """max over candidate centers y (|y - x| <= eps) of the average field,
        for x in ``window``; ``avg_on_ywin`` covers ``window`` padded by eps."""
        n = self.spec.n
        pat = _y_pattern(n, eps_px, self.spec.N, self.cfg.y_thin)
        wlen = tuple(h - l for l, h in window)
        out = None
        for a in pat:
            sl = tuple(slice(eps_px + int(a[i]), eps_px + int(a[i]) + wlen[i])
                       for i in range(n))
            cand = avg_on_ywin[sl]
            out = cand.copy() if out is None else np.maximum(out, cand)
        return out

    # -- the unmasked operator ------------------------------------------

    def starstar_values(self, window: Window | None = None) -> np.ndarray:
        if window is None:
            window = _full_window(self.spec)
        acc = np.zeros(self.spec.shape)
        wsl = tuple(slice(l, h) for l, h in window)
        for eps_px in self.eps_list:
            a = self._avg_window(eps_px, self._expand(window, eps_px))
            acc[wsl] = np.maximum(acc[wsl], self._y_max(a, window, eps_px))
        return acc

    # -- Hardy-Littlewood ------------------------------------------------

    def hl_values(self, p0: float | None = None,
                  window: Window | None = None) -> np.ndarray:
        p0 = self.cfg.p0 if p0 is None else p0
        if window is None:
            window = _full_window(self.spec)
        dens = np.abs(self.f.values) ** p0
        wsl = tuple(slice(l, h) for l, h in window)
        best = np.zeros(self.spec.shape)
        for r_px in self.eps_list:
            mean = self._ball_mean_window(dens, ("hl", p0), r_px, window)
            best[wsl] = np.maximum(best[wsl], mean)
        out = np.zeros(self.spec.shape)
        out[wsl] = best[wsl] ** (1.0 / p0)
        return out

    # -- the masked (off-diagonal) operator ------------------------------

    def star_values(self, window: Window | None = None) -> np.ndarray:
        if self.f.support is None:
            raise ValueError("br_star needs a compactly supported field "
                             "(declared support box missing)")
        if window is None:
            window = _full_window(self.spec)
        acc = np.zeros(self.spec.shape)
        if not np.any(self.f.values):
            return acc
        for eps_px in self.eps_list:
            small = eps_px < self.cfg.snap_min_px and 10 * eps_px + 1 <= self.spec.N
            if small and not self.cfg.exact:
                self._star_displacement(acc, window, eps_px)
            else:
                self._star_tiled(acc, window, eps_px,
                                 tile=1 if self.cfg.exact else max(eps_px, 1))
        return acc

    def _covered_mask(self, window: Window, mask_r: int) -> np.ndarray:
        """Points x in the window where B(x, mask_r) provably contains every
        nonzero of f, so the masked input vanishes identically."""
        center, radius = self._nonzero_ball()
        axes = [np.arange(l, h) - center[i] for i, (l, h) in enumerate(window)]
        d2 = np.zeros(tuple(h - l for l, h in window))
        for i, a in enumerate(axes):
            shape = [1] * self.spec.n
            shape[i] = len(a)
            d2 = d2 + (a ** 2).reshape(shape)
        return np.sqrt(d2) + radius <= mask_r

    # support-box geometry in pixels, torus metric
    def _support_px(self) -> tuple[np.ndarray, np.ndarray]:
        spec = self.spec
        lo = np.array([l / spec.dx + spec.N // 2 for l in self.f.support.lo])
        hi = np.array([h / spec.dx + spec.N // 2 for h in self.f.support.hi])
        return lo, hi

    def _classify_tile(self, center: np.ndarray, mask_r: int) -> str:
        """'covered' if B(center, mask_r) contains the support box,
        'disjoint' if it misses it (2 px safety margins), else 'partial'."""
        N = self.spec.N
        if mask_r >= math.ceil(N * math.sqrt(self.spec.n) / 2.0):
            return "covered"
        lo, hi = self._support_px()
        near2 = far2 = 0.0
        for i in range(self.spec.n):
            c = center[i]
            # nearest torus distance from c to [lo, hi] on this axis
            dl = min(abs(lo[i] - c), N - abs(lo[i] - c))
            dh = min(abs(hi[i] - c), N - abs(hi[i] - c))
            inside = lo[i] <= c <= hi[i]
            near = 0.0 if inside else min(dl, dh)
            # farthest: antipode if the interval contains it, else a corner
            anti = (c + N / 2.0) % N
            has_anti = lo[i] <= anti <= hi[i]
            far = N / 2.0 if has_anti else max(dl, dh)
            near2 += near * near
            far2 += far * far
        if math.sqrt(far2) <= mask_r - 2.0:
            return "covered"
        if math.sqrt(near2) >= mask_r + 2.0:
            return "disjoint"
        return "partial"

    def _star_tiled(self, acc: np.ndarray, window: Window, eps_px: int, tile: int):
        spec, n = self.spec, self.spec.n
        mask_r = 3 * eps_px
        g = self._g_field(eps_px)
        avg = None  # y-maxed unmasked average on the window, for disjoint tiles
        pat = _y_pattern(n, eps_px, spec.N, self.cfg.y_thin)
        wlo = tuple(l for l, _ in window)

        axis_tiles = [range(w[0], w[1], tile) for w in window]
        nz_center, nz_radius = self._nonzero_ball()
        for tlo in itertools.product(*axis_tiles):
            thi = tuple(min(tlo[i] + tile, window[i][1]) for i in range(n))
            center = np.array([tlo[i] + (thi[i] - tlo[i]) // 2 for i in range(n)],
                              dtype=float)
            # exact covered test: every x in the tile masks away all of f
            tile_reach = math.sqrt(n) * tile / 2.0
            if (np.linalg.norm(center - nz_center) + nz_radius + tile_reach
                    <= mask_r):
                continue
            kind = self._classify_tile(center, mask_r)
            if kind == "covered":
                continue  # masked input vanishes: contributes exactly zero
            tsl = tuple(slice(tlo[i], thi[i]) for i in range(n))
            if kind == "disjoint":
                if avg is None:
                    avg = self._y_max(
                        self._avg_window(eps_px, self._expand(window, eps_px)),
                        window, eps_px)
                rel = tuple(slice(tlo[i] - wlo[i], thi[i] - wlo[i]) for i in range(n))
                acc[tsl] = np.maximum(acc[tsl], avg[rel])
                continue
            vals = self._masked_tile_values(tlo, thi, center.astype(int), eps_px, g, pat)
            twin = tuple((tlo[i], thi[i]) for i in range(n))
            vals = np.where(self._covered_mask(twin, mask_r), 0.0, vals)
            acc[tsl] = np.maximum(acc[tsl], vals)

    def _masked_tile_values(self, tlo, thi, center, eps_px, g, pat) -> np.ndarray:
        """Exact ball-average field of B_eps(f * 1_{B(c,3eps)^c}) for the tile,
        via a windowed kernel convolution (complete, not truncated: the
        kernel window covers every offset that can reach the z-window)."""
        spec, n = self.spec, self.spec.n
        N, q0 = spec.N, self.cfg.q0
        mask_r = 3 * eps_px
        zlo = tuple(tlo[i] - 2 * eps_px for i in range(n))
        zhi = tuple(thi[i] + 2 * eps_px for i in range(n))
        # kernel window must reach every offset z - t with t in the mask ball
        reach = max(max(center[i] - zlo[i], zhi[i] - 1 - center[i])
                    for i in range(n))
        rk = int(reach) + mask_r + 1

        if 2 * rk + 1 >= N or (6 * eps_px + 1) >= N:
            near = self._masked_global(center, mask_r)
            gm = _wrap_take(g, zlo, zhi) - _wrap_take(near, zlo, zhi)
        else:
            # local field h = f * 1_{B(c, 3 eps)} as a (6 eps + 1)-cube
            hlo = tuple(int(center[i]) - mask_r for i in range(n))
            hhi = tuple(int(center[i]) + mask_r + 1 for i in range(n))
            h = _wrap_take(self.f.values, hlo, hhi).copy()
            offs = _ball_offsets(n, mask_r, N)
            ball_mask = np.zeros(h.shape, dtype=bool)
            ball_mask[tuple((offs + mask_r).T)] = True
            h[~ball_mask] = 0.0
            kern = _kernel_offsets(spec, self.delta, _eps_key(eps_px * spec.dx))
            kc = _wrap_take(kern, (-rk,) * n, (rk + 1,) * n)
            conv = fftconvolve(h, kc, mode="full")
            # conv index m corresponds to z = m + (c - 3 eps) - rk
            sl = tuple(slice(zlo[i] - (int(center[i]) - mask_r) + rk,
                             zhi[i] - (int(center[i]) - mask_r) + rk) for i in range(n))
            gm = _wrap_take(g, zlo, zhi) - conv[sl]

        dens = np.abs(gm) ** q0
        b_offs = _ball_offsets(n, eps_px, N)
        st = np.zeros((2 * eps_px + 1,) * n)
        st[tuple((b_offs + eps_px).T)] = 1.0
        bsum = fftconvolve(dens, st, mode="same")
        # valid for y at least eps inside the z-window, i.e. on tile (+-eps)
        avg = (np.maximum(bsum, 0.0) / len(b_offs)) ** (1.0 / q0)

        out = None
        base = tuple(tlo[i] - zlo[i] for i in range(n))  # tile origin in z-window
        tshape = tuple(thi[i] - tlo[i] for i in range(n))
        for a in pat:
            sl = tuple(slice(base[i] + int(a[i]), base[i] + int(a[i]) + tshape[i])
                       for i in range(n))
            cand = avg[sl]
            out = cand.copy() if out is None else np.maximum(out, cand)
        return out

    def _masked_global(self, center, mask_r) -> np.ndarray:
        vals = np.zeros(self.spec.shape, dtype=np.complex128)
        offs = _ball_offsets(self.spec.n, mask_r, self.spec.N)
        idx = tuple(((offs + np.asarray(center)) % self.spec.N).T)
        vals[idx] = self.f.values[idx]
        eps_phys = (mask_r / 3) * self.spec.dx
        sym = truncated_symbol(self.spec, self.delta, max(eps_phys, 0.5))
        return _apply_sym_raw(vals, sym)

    def _star_displacement(self, acc: np.ndarray, window: Window, eps_px: int):
        """Exact per-point masks for small radii.

        near(x, d) = sum_{|u| <= 3 eps} K(d - u) f(x + u) gives the masked
        transform at z = x + d; the kernel slice makes each correlation a
        complete (wrap-consistent) evaluation.
        """
        spec, n = self.spec, self.spec.n
        N, q0 = spec.N, self.cfg.q0
        g = self._g_field(eps_px)
        kern = _kernel_offsets(spec, self.delta, _eps_key(eps_px * spec.dx))
        mask_r, d_r = 3 * eps_px, 2 * eps_px
        kr = 5 * eps_px  # |d - u| <= 5 eps

        wlo = tuple(w[0] for w in window)
        whi = tuple(w[1] for w in window)
        wshape = tuple(h - l for l, h in zip(wlo, whi))
        covered = self._covered_mask(window, mask_r)
        if covered.all():
            return
        fw_lo = tuple(l - mask_r for l in wlo)
        fw_hi = tuple(h + mask_r for h in whi)
        global_mode = any(h - l > N for l, h in zip(fw_lo, fw_hi))

        if global_mode:
            FW = np.fft.fftn(self.f.values)
        else:
            fwin = _wrap_take(self.f.values, fw_lo, fw_hi)
            FW = np.fft.fftn(fwin)

        kc = _wrap_take(kern, (-kr,) * n, (kr + 1,) * n)
        u_mask_offs = _ball_offsets(n, mask_r, N)
        msz = 2 * mask_r + 1
        ball_mask = np.zeros((msz,) * n, dtype=bool)
        ball_mask[tuple((u_mask_offs + mask_r).T)] = True

        d_offs = _ball_offsets(n, d_r, N)
        b_offs = _ball_offsets(n, eps_px, N)
        pat = _y_pattern(n, eps_px, N, self.cfg.y_thin)
        count = len(b_offs)

        # which candidate offsets a each displacement d contributes to
        pat_set = {tuple(a): i for i, a in enumerate(pat)}
        touches: list[list[int]] = []
        for d in d_offs:
            lst = []
            for b in b_offs:
                a = tuple(int(d[i] - b[i]) for i in range(n))
                if a in pat_set:
                    lst.append(pat_set[a])
            touches.append(lst)

        sums = np.zeros((len(pat),) + wshape)
        chunk = 32
        for start in range(0, len(d_offs), chunk):
            ds = d_offs[start:start + chunk]
            kers = np.zeros((len(ds),) + (msz,) * n, dtype=np.complex128)
            for j, d in enumerate(ds):
                # m_rev[v] = K(d + v) on |v| <= 3 eps: a contiguous slice of kc
                sl = tuple(slice(int(d[i]) + kr - mask_r, int(d[i]) + kr + mask_r + 1)
                           for i in range(n))
                kers[j] = kc[sl]
                kers[j][~ball_mask] = 0.0
            if global_mode:
                kpad = np.zeros((len(ds),) + spec.shape, dtype=np.complex128)
                ins = tuple(slice(0, msz) for _ in range(n))
                kpad[(slice(None),) + ins] = kers
                kpad = np.roll(kpad, shift=(-mask_r,) * n, axis=tuple(range(1, n + 1)))
                nears = np.fft.ifftn(FW[None] * np.fft.fftn(kpad, axes=tuple(range(1, n + 1))),
                                     axes=tuple(range(1, n + 1)))
                # circular conv with kernel centered at offset 0: value at x
                near_w = [
                    _wrap_take(nears[j], wlo, whi) for j in range(len(ds))
                ]
            else:
                fshape = fwin.shape
                kpad = np.zeros((len(ds),) + fshape, dtype=np.complex128)
                ins = tuple(slice(0, msz) for _ in range(n))
                kpad[(slice(None),) + ins] = kers
                nears_full = np.fft.ifftn(FW[None] * np.fft.fftn(kpad, axes=tuple(range(1, n + 1))),
                                          axes=tuple(range(1, n + 1)))
                # valid region: x + u inside the f-window for all |u| <= 3 eps
                sl = tuple(slice(2 * mask_r, 2 * mask_r + wshape[i]) for i in range(n))
                near_w = [nears_full[(j,) + sl] for j in range(len(ds))]

            for j, d in enumerate(ds):
                if not touches[start + j]:
                    continue
                gz = _wrap_take(g, tuple(wlo[i] + int(d[i]) for i in range(n)),
                                tuple(whi[i] + int(d[i]) for i in range(n)))
                t_d = np.abs(gz - near_w[j]) ** q0
                for ai in touches[start + j]:
                    sums[ai] += t_d

        vals = np.max((np.maximum(sums, 0.0) / count), axis=0) ** (1.0 / q0)
        vals = np.where(covered, 0.0, vals)
        wsl = tuple(slice(l, h) for l, h in zip(wlo, whi))
        acc[wsl] = np.maximum(acc[wsl], vals)


def hl_maximal(f: SampledField, p0: float, cfg: MaximalConfig | None = None) -> SampledField:
    """L^{p0} Hardy-Littlewood maximal function over the dyadic radius set."""
    cfg = cfg if cfg is not None else MaximalConfig(p0=max(p0, 1.0) if p0 < 2 else 1.2)
    eng = MaximalEngine(f, 0.0, cfg)
    return SampledField(f.spec, eng.hl_values(p0))


def br_star(f: SampledField, delta: float, cfg: MaximalConfig) -> SampledField:
    """Masked (off-diagonal) maximal truncation of the multiplier."""
    return SampledField(f.spec, MaximalEngine(f, delta, cfg).star_values())


def br_starstar(f: SampledField, delta: float, cfg: MaximalConfig) -> SampledField:
    """Unmasked maximal truncation of the multiplier."""
    return SampledField(f.spec, MaximalEngine(f, delta, cfg).starstar_values())


def ball_average(f: SampledField, center, radius: float, p: float) -> float:
    """L^p average of f over the grid points of the ball B(center, radius)."""
    spec = f.spec
    c_px = np.asarray([ci / spec.dx + spec.N // 2 for ci in np.atleast_1d(center)])
    r_px = radius / spec.dx
    offs = _ball_offsets(spec.n, int(math.floor(r_px)), spec.N)
    idx = tuple(((offs + np.round(c_px).astype(int)) % spec.N).T)
    vals = np.abs(f.values[idx])
    return float(np.mean(vals ** p) ** (1.0 / p))


def weak_type_ratio(mf: SampledField, f: SampledField, p0: float,
                    n_levels: int = 48) -> float:
    """sup over a level grid of ``lambda |{mf > lambda}|^{1/p0} / ||f||_{p0}``."""
    spec = mf.spec
    vals = np.abs(mf.values)
    top = float(vals.max())
    if top <= 0:
        return 0.0
    denom = lp_norm(f, p0)
    best = 0.0
    for lam in np.geomspace(top * 1e-3, top * 0.999, n_levels):
        measure = float(np.count_nonzero(vals > lam)) * spec.dx ** spec.n
        best = max(best, lam * measure ** (1.0 / p0) / denom)
    return best
