"""Multiplier module: cutoffs, symbols, dyadic pieces, kernel decay."""

import numpy as np
import pytest

from brlab.grid import (
    GridSpec,
    SampledField,
    SpectralField,
    freq_sq,
    inverse_transform,
    lp_norm,
)
from brlab.multiplier import (
    apply_bochner_riesz,
    apply_Sk,
    apply_truncated,
    bochner_riesz_symbol,
    chi,
    chi_tilde,
    k_min,
    kernel_profile,
    kernel_profile_grid,
    sk_symbol,
    smooth_step,
    truncated_symbol,
)

SPEC = GridSpec(n=2, L=16.0, N=128)
DELTA = 0.3


def plane_wave(spec, xi):
    mesh = spec.meshgrid()
    phase = sum(mesh[i] * xi[i] for i in range(spec.n))
    return SampledField(spec, np.exp(2j * np.pi * phase))


def band_limited(spec, seed, cap):
    rng = np.random.default_rng(seed)
    co = np.zeros(spec.shape, dtype=complex)
    band = freq_sq(spec) < cap ** 2
    co[band] = rng.standard_normal(int(band.sum())) + 1j * rng.standard_normal(int(band.sum()))
    return inverse_transform(SpectralField(spec, co))


class TestCutoffs:
    def test_step_plateaus(self):
        assert smooth_step(0.5) == 1.0
        assert smooth_step(1.0) == 1.0
        assert smooth_step(1.02) == 0.0
        mid = smooth_step(1.005)
        assert 0.0 < mid < 1.0

    def test_step_monotone(self):
        xs = np.linspace(0.9, 1.1, 2001)
        vals = smooth_step(xs)
        assert np.all(np.diff(vals) <= 1e-15)

    def test_chi_values(self):
        assert chi(0.75) == 1.0      # the plateau of the dyadic bump
        assert chi(0.3) == 0.0       # outside the support [1/2, 1.01]
        assert chi(0.49) == 0.0
        assert chi(1.02) == 0.0
        xs = np.linspace(0.51, 1.0, 101)
        assert np.all(chi(xs) == 1.0)

    @pytest.mark.parametrize("x", [0.001, 0.3, 0.999])
    def test_telescoping_point(self, x):
        total = sum(chi(2.0 ** (-k) * x) for k in range(-40, 1))
        assert abs(total - 1.0) < 1e-12

    def test_telescoping_sweep(self):
        xs = np.random.default_rng(0).uniform(2.0 ** -40, 1.0, 10_000)
        total = np.zeros_like(xs)
        for k in range(-40, 1):
            total += chi(2.0 ** (-k) * xs)
        assert np.abs(total - 1.0).max() < 1e-12

    def test_chi_tilde_plateau_and_support(self):
        assert chi_tilde(0.0) == 1.0
        assert chi_tilde(1.0) == 1.0
        assert chi_tilde(0.5) == 1.0
        assert chi_tilde(-0.0101) == 0.0
        assert chi_tilde(1.0101) == 0.0


class TestSymbolParams:
    def test_validates_and_evaluates(self):
        from brlab.multiplier import SymbolParams

        sp = SymbolParams(delta=0.3, k=-1, epsilon=2.0)
        assert np.array_equal(sp.sk(SPEC), sk_symbol(SPEC, -1, 0.3))
        assert np.array_equal(sp.truncated(SPEC), truncated_symbol(SPEC, 0.3, 2.0))
        with pytest.raises(ValueError):
            SymbolParams(delta=-0.1)
        with pytest.raises(ValueError):
            SymbolParams(k=1)
        with pytest.raises(ValueError):
            SymbolParams(epsilon=0.0)


class TestBochnerRiesz:
    def test_eigenfunction_half(self):
        pw = plane_wave(SPEC, (0.5, 0.0))
        out = apply_bochner_riesz(pw, DELTA)
        assert np.abs(out.values - 0.75 ** DELTA * pw.values).max() < 1e-12

    @pytest.mark.parametrize("xi", [(1.0, 0.0), (1.25, 0.0), (0.75, 0.75)])
    def test_kills_outside_ball(self, xi):
        out = apply_bochner_riesz(plane_wave(SPEC, xi), DELTA)
        assert np.abs(out.values).max() < 1e-12

    def test_delta_zero_identity_inside_ball(self):
        f = band_limited(SPEC, seed=4, cap=0.95)
        out = apply_bochner_riesz(f, 0.0)
        assert np.abs(out.values - f.values).max() < 1e-12 * np.abs(f.values).max()

    def test_l2_contraction(self):
        for seed in range(5):
            f = band_limited(SPEC, seed=seed, cap=3.0)
            assert lp_norm(apply_bochner_riesz(f, DELTA), 2.0) <= lp_norm(f, 2.0) * (1 + 1e-12)

    def test_self_adjoint(self):
        rng = np.random.default_rng(8)
        for seed in range(5):
            f = SampledField(SPEC, rng.standard_normal(SPEC.shape) + 1j * rng.standard_normal(SPEC.shape))
            g = SampledField(SPEC, rng.standard_normal(SPEC.shape) + 1j * rng.standard_normal(SPEC.shape))
            dxn = SPEC.dx ** 2
            lhs = np.sum(apply_bochner_riesz(f, DELTA).values * np.conj(g.values)) * dxn
            rhs = np.sum(f.values * np.conj(apply_bochner_riesz(g, DELTA).values)) * dxn
            assert abs(lhs - rhs) < 1e-10 * max(abs(lhs), 1.0)

    def test_translation_equivariance(self):
        f = band_limited(SPEC, seed=3, cap=2.0)
        shift = (5, -9)
        rolled_then = apply_bochner_riesz(
            SampledField(SPEC, np.roll(f.values, shift, axis=(0, 1))), DELTA)
        then_rolled = np.roll(apply_bochner_riesz(f, DELTA).values, shift, axis=(0, 1))
        assert np.abs(rolled_then.values - then_rolled).max() < 1e-12 * np.abs(then_rolled).max()


class TestTruncated:
    def test_coincides_for_small_epsilon(self):
        f = band_limited(SPEC, seed=5, cap=3.0)
        a = apply_truncated(f, DELTA, 1.0 / 1.01)
        b = apply_bochner_riesz(f, DELTA)
        assert np.abs(a.values - b.values).max() < 1e-12 * np.abs(b.values).max()

    def test_kills_outside_ball(self):
        out = apply_truncated(plane_wave(SPEC, (1.0, 0.0)), DELTA, 2.0)
        assert np.abs(out.values).max() < 1e-12

    def test_contraction_for_large_epsilon(self):
        sym = truncated_symbol(SPEC, DELTA, 2.0)
        assert np.abs(sym).max() <= 1.0 + 1e-12  # direct symbol scan
        f = band_limited(SPEC, seed=6, cap=3.0)
        assert lp_norm(apply_truncated(f, DELTA, 2.0), 2.0) <= lp_norm(f, 2.0) * (1 + 1e-12)


class TestSk:
    def test_eigenfunction_on_plateau(self):
        # 1 - |xi|^2 = (3/4) 2^-1: |xi|^2 = 5/8 realized by (4/16, 12/16)
        xi = (0.25, 0.75)
        assert 1 - (xi[0] ** 2 + xi[1] ** 2) == pytest.approx(0.375)
        pw = plane_wave(SPEC, xi)
        out = apply_Sk(pw, -1, DELTA)
        assert np.abs(out.values - 0.75 ** DELTA * pw.values).max() < 1e-12

    def test_vanishes_off_annulus(self):
        # 1 - |xi0|^2 = 2^{k+1} sits outside the support of chi(2^{-k} .)
        pw = plane_wave(SPEC, (0.0, 0.0))   # 1 - |xi0|^2 = 1 = 2^{k+1} at k = -1
        out = apply_Sk(pw, -1, DELTA)       # chi(2) = 0
        assert np.abs(out.values).max() < 1e-12
        spec = GridSpec(n=2, L=64.0, N=512)
        pw2 = plane_wave(spec, (0.5, 0.5))  # |xi0|^2 = 1/2 on the lattice
        out2 = apply_Sk(pw2, -2, DELTA)     # 2^2 (1 - 1/2) = 2 -> chi = 0
        assert np.abs(out2.values).max() < 1e-12

    def test_unresolvable_scale_rejected(self):
        with pytest.raises(ValueError, match="scale below grid resolution"):
            apply_Sk(plane_wave(SPEC, (0.5, 0.0)), k_min(SPEC) - 1, DELTA)

    def test_symbol_bound(self):
        sym = sk_symbol(SPEC, -1, DELTA)
        assert np.abs(sym).max() <= (1 + 1 / 100.0) ** DELTA + 1e-12

    def test_decomposition_identity_on_lattice(self):
        # symbol identity sum 2^{k delta} s_k = (1-|xi|^2)_+^delta on the
        # resolvable shell, checked by direct symbol scan
        spec = GridSpec(n=2, L=64.0, N=512)
        km = k_min(spec)
        total = np.zeros(spec.shape)
        for k in range(km, 1):
            total = total + 2.0 ** (k * DELTA) * sk_symbol(spec, k, DELTA)
        target = bochner_riesz_symbol(spec, DELTA)
        shell = (1.0 - freq_sq(spec)) >= 2.0 ** km
        err = np.abs(total - target)[shell]
        assert err.max() < 1e-12

    def test_decomposition_on_band_limited_fields(self):
        spec = GridSpec(n=2, L=64.0, N=512)
        km = k_min(spec)
        bound = (2.0 ** km) ** DELTA
        for seed in range(5):
            f = band_limited(spec, seed=seed, cap=1.0 - 2.0 ** km)
            acc = np.zeros(spec.shape, dtype=complex)
            for k in range(km, 1):
                acc += 2.0 ** (k * DELTA) * apply_Sk(f, k, DELTA).values
            err = np.linalg.norm(acc - apply_bochner_riesz(f, DELTA).values)
            assert err <= bound * np.linalg.norm(f.values) + 1e-9


class TestKernelProfile:
    def test_near_zero_matches_symbol_mass(self):
        # value near 0 ~ |integral of the symbol| ~ annulus measure ~ 2^k
        for k in (-2, -4):
            v = kernel_profile(k, DELTA, [1e-3])[0]
            assert 0.1 * 2.0 ** k < v < 10.0 * 2.0 ** k

    def test_quadrature_matches_grid_route(self):
        # envelope comparison in one-pixel bins at moderate radii
        spec = GridSpec(n=2, L=64.0, N=512)
        k = -3
        for r in (1.0, 2.0, 4.0, 8.0):
            fine = np.linspace(r - spec.dx / 2, r + spec.dx / 2, 9)
            env_quad = max(kernel_profile(k, DELTA, fine))
            env_grid = kernel_profile_grid(spec, k, DELTA, [r])[0]
            assert env_grid == pytest.approx(env_quad, rel=0.5)

    def test_grid_route_rejects_large_radius(self):
        spec = GridSpec(n=2, L=16.0, N=128)
        with pytest.raises(ValueError, match="periodization"):
            kernel_profile_grid(spec, -1, DELTA, [8.5])

    def test_positive_radii_required(self):
        with pytest.raises(ValueError, match="positive"):
            kernel_profile(-2, DELTA, [0.0])
