"""Weight characteristics over the fixed cube family, predicted bounds,
weighted ratios and vector-valued norms."""

import math

import numpy as np
import pytest

from brlab.grid import GridSpec, SampledField, lp_norm, make_test_function
from brlab.weights import (
    Weight,
    a1_characteristic,
    ap_characteristic,
    check_ap_rh_product,
    checkerboard_weight,
    constant_weight,
    mixed_preset_report,
    power_weight,
    predicted_bound,
    predicted_bound_report,
    random_smooth_weight,
    rh_characteristic,
    rh_inf_characteristic,
    vector_valued_norm,
    weighted_operator_ratio,
)

SPEC = GridSpec(n=2, L=4.0, N=64)


def brute_force_ap(w: Weight, p: float) -> float:
    """Loop-based recomputation over the same family."""
    vals = w.field.values.real
    best = 0.0
    for i in range(len(w.fam_lo)):
        sl = tuple(slice(w.fam_lo[i, ax], w.fam_lo[i, ax] + w.fam_side[i])
                   for ax in range(w.spec.n))
        chunk = vals[sl]
        best = max(best, chunk.mean() * (chunk ** (-1.0 / (p - 1.0))).mean() ** (p - 1.0))
    return best


class TestCharacteristics:
    def test_constant_weight_all_one(self):
        w = constant_weight(SPEC, 1.0, n_random=500)
        assert ap_characteristic(w, 2.0) == 1.0
        assert a1_characteristic(w) == 1.0
        assert rh_inf_characteristic(w) == 1.0
        assert rh_characteristic(w, 2.0) == 1.0

    def test_scale_invariance(self):
        w = checkerboard_weight(SPEC, 1.0, 2.0, block_px=4, n_random=500)
        wc = Weight(SampledField(SPEC, 7.0 * w.field.values.real),
                    w.fam_lo, w.fam_side)
        for p in (1.5, 2.0, 3.0):
            assert ap_characteristic(wc, p) == pytest.approx(
                ap_characteristic(w, p), rel=1e-12)
        assert rh_characteristic(wc, 2.0) == pytest.approx(
            rh_characteristic(w, 2.0), rel=1e-12)

    def test_power_weight_matches_brute_force(self):
        w = power_weight(SPEC, 1.0, n_random=200)
        assert ap_characteristic(w, 2.0) == pytest.approx(brute_force_ap(w, 2.0), rel=1e-12)
        assert ap_characteristic(w, 2.0) >= 1.0

    def test_checkerboard_a1_matches_brute_force(self):
        w = checkerboard_weight(SPEC, 1.0, 2.0, block_px=8, n_random=200)
        vals = w.field.values.real
        best = 0.0
        for i in range(len(w.fam_lo)):
            sl = tuple(slice(w.fam_lo[i, ax], w.fam_lo[i, ax] + w.fam_side[i])
                       for ax in range(2))
            chunk = vals[sl]
            best = max(best, chunk.mean() / chunk.min())
        assert a1_characteristic(w) == pytest.approx(best, rel=1e-12)

    def test_all_characteristics_at_least_one(self):
        for seed in range(5):
            w = random_smooth_weight(SPEC, seed=seed, n_random=300)
            assert ap_characteristic(w, 2.0) >= 1.0
            assert a1_characteristic(w) >= 1.0
            assert rh_inf_characteristic(w) >= 1.0
            assert rh_characteristic(w, 1.5) >= 1.0

    def test_rh_monotone_in_s(self):
        w = checkerboard_weight(SPEC, 1.0, 2.0, block_px=4, n_random=300)
        vals = [rh_characteristic(w, s) for s in (1.25, 1.5, 2.0, 3.0)]
        for lo, hi in zip(vals, vals[1:]):
            assert lo <= hi * (1 + 1e-12)

    def test_ap_nonincreasing_in_p(self):
        w = power_weight(SPEC, 0.5, n_random=300)
        vals = [ap_characteristic(w, p) for p in (1.5, 2.0, 3.0, 4.0)]
        for lo, hi in zip(vals, vals[1:]):
            assert lo >= hi * (1 - 1e-12)

    def test_a2_duality_exact(self):
        # [w]_{A_2} = [w^{-1}]_{A_2} bitwise on the shared family
        w = random_smooth_weight(SPEC, seed=3, n_random=500)
        assert ap_characteristic(w, 2.0) == ap_characteristic(w.pow(-1.0), 2.0)

    def test_rh_inf_vs_a1_of_inverse(self):
        # per-cube Jensen: max/avg <= max * avg(1/w), so the implemented
        # RH_infty constant sits below [1/w]_{A_1} on the same family
        w = checkerboard_weight(SPEC, 1.0, 3.0, block_px=4, n_random=400)
        assert rh_inf_characteristic(w) <= a1_characteristic(w.pow(-1.0)) * (1 + 1e-12)

    def test_positivity_enforced(self):
        vals = np.ones(SPEC.shape)
        vals[0, 0] = 0.0
        with pytest.raises(ValueError, match="positive"):
            Weight.build(SampledField(SPEC, vals))

    def test_ap_needs_p_above_one(self):
        w = constant_weight(SPEC, n_random=10)
        with pytest.raises(ValueError, match="a1"):
            ap_characteristic(w, 1.0)


class TestProductInequality:
    def test_constant_equals_one(self):
        w = constant_weight(SPEC, n_random=200)
        rep = check_ap_rh_product(w, 2.0, 2.0)
        assert rep.lhs == pytest.approx(1.0, abs=1e-12)
        assert rep.rhs == pytest.approx(1.0, abs=1e-12)
        assert rep.holds

    @pytest.mark.parametrize("q,s", [(2.0, 2.0), (2.0, 1.5), (1.5, 2.0),
                                     (1.0, 2.0), (3.0, 1.25)])
    def test_holds_across_weights(self, q, s):
        weights = [
            checkerboard_weight(SPEC, 1.0, 2.0, block_px=4, n_random=300),
            power_weight(SPEC, 0.5, n_random=300),
            random_smooth_weight(SPEC, seed=1, n_random=300),
            random_smooth_weight(SPEC, seed=2, amplitude=1.5, n_random=300),
        ]
        for w in weights:
            rep = check_ap_rh_product(w, q, s)
            assert rep.holds, (q, s, rep)

    def test_guards(self):
        w = constant_weight(SPEC, n_random=10)
        with pytest.raises(ValueError):
            check_ap_rh_product(w, 0.5, 2.0)
        with pytest.raises(ValueError):
            check_ap_rh_product(w, 2.0, 1.0)


class TestPredictedBound:
    def test_alpha_reference_value(self):
        w = constant_weight(SPEC, n_random=50)
        rep = predicted_bound_report(w, 8.0 / 5.0, 6.0 / 5.0, 2, "below2")
        assert rep.alpha == pytest.approx(2.5)
        assert rep.value == pytest.approx(1.0)

    def test_constant_weight_gives_one(self):
        w = constant_weight(SPEC, n_random=50)
        assert predicted_bound(w, 1.5, 1.2, 2, "below2") == pytest.approx(1.0)

    def test_alpha_blows_up_towards_endpoints(self):
        w = constant_weight(SPEC, n_random=50)
        alphas = [predicted_bound_report(w, p, 1.2, 2, "below2").alpha
                  for p in (1.5, 1.3, 1.25, 1.21)]
        assert all(b > a for a, b in zip(alphas, alphas[1:]))

    def test_range_errors(self):
        w = constant_weight(SPEC, n_random=50)
        with pytest.raises(ValueError, match="below2"):
            predicted_bound(w, 2.5, 1.2, 2, "below2")
        with pytest.raises(ValueError, match="above2"):
            predicted_bound(w, 1.5, 1.2, 2, "above2")

    def test_above2_side(self):
        w = checkerboard_weight(SPEC, 1.0, 2.0, block_px=4, n_random=200)
        rep = predicted_bound_report(w, 3.0, 1.2, 2, "above2")
        # p0' = 6: alpha = max{1, 4/3}
        assert rep.alpha == pytest.approx(4.0 / 3.0)
        assert rep.value >= 1.0


class TestWeightedRatio:
    def test_plane_wave_eigenvalue_flat_weight(self):
        spec = GridSpec(n=2, L=16.0, N=128)
        mesh = spec.meshgrid()
        pw = SampledField(spec, np.exp(2j * np.pi * mesh[0] * 0.5))
        w = constant_weight(spec, 3.0, n_random=10)
        delta = 0.3
        assert weighted_operator_ratio(pw, w, 2.0, delta) == pytest.approx(
            0.75 ** delta, rel=1e-10)

    def test_invariant_under_weight_scaling(self):
        spec = GridSpec(n=2, L=16.0, N=128)
        f = make_test_function(spec, "random_trig", seed=5, window_radius=1.5)
        w = random_smooth_weight(spec, seed=2, n_random=50)
        wc = Weight(SampledField(spec, 5.0 * w.field.values.real), w.fam_lo, w.fam_side)
        a = weighted_operator_ratio(f, w, 1.5, 0.2)
        b = weighted_operator_ratio(f, wc, 1.5, 0.2)
        assert a == pytest.approx(b, rel=1e-12)

    def test_no_violation_with_slack(self):
        # empirical ratio <= predicted bound * slack across the mini-suite
        spec = GridSpec(n=2, L=16.0, N=128)
        fs = [make_test_function(spec, "random_trig", seed=s, window_radius=1.5)
              for s in range(3)]
        for seed in range(3):
            w = random_smooth_weight(spec, seed=seed, amplitude=0.8, n_random=200)
            bound = predicted_bound(w, 1.6, 1.2, 2, "below2")
            for f in fs:
                assert weighted_operator_ratio(f, w, 1.6, 0.2) <= 10.0 * bound

    def test_zero_denominator(self):
        spec = GridSpec(n=2, L=16.0, N=128)
        w = constant_weight(spec, n_random=10)
        zero = SampledField(spec, np.zeros(spec.shape))
        with pytest.raises(ValueError, match="zero denominator"):
            weighted_operator_ratio(zero, w, 2.0, 0.2)


class TestVectorValued:
    def test_single_function_reduces_to_scalar(self):
        spec = GridSpec(n=2, L=16.0, N=128)
        f = make_test_function(spec, "bump", radius=0.8)
        delta = 0.25
        rep = vector_valued_norm([f], 2.0, 2.0, delta)
        from brlab.multiplier import apply_bochner_riesz
        expected = lp_norm(apply_bochner_riesz(f, delta), 2.0) / lp_norm(f, 2.0)
        assert rep.ratio == pytest.approx(expected, rel=1e-12)

    def test_p_equals_q_is_stacked_norm(self):
        spec = GridSpec(n=2, L=16.0, N=128)
        fs = [make_test_function(spec, "bump", radius=0.5 + 0.1 * i, amp=1.0 + i)
              for i in range(3)]
        p = 2.0
        rep = vector_valued_norm(fs, p, p, 0.2)
        stacked = sum(lp_norm(f, p) ** p for f in fs) ** (1.0 / p)
        assert rep.input_norm == pytest.approx(stacked, rel=1e-12)

    def test_admissibility_flag(self):
        spec = GridSpec(n=2, L=16.0, N=128)
        f = make_test_function(spec, "bump", radius=0.5)
        assert vector_valued_norm([f], 8.0 / 5.0, 5.0 / 2.0, 0.2).admissible
        assert not vector_valued_norm([f], 6.0 / 5.0, 6.0, 0.2).admissible


class TestMixedPreset:
    def test_value_finite_and_at_least_one(self):
        w = random_smooth_weight(SPEC, seed=4, amplitude=0.5, n_random=200)
        val = mixed_preset_report(w)
        assert math.isfinite(val)
        assert val >= 1.0 - 1e-12
