import math

import numpy as np
import pytest

from crtlab.excursion import (
    BridgePath,
    ExcursionPath,
    RngStream,
    height,
    occupation_below,
    oscillation,
    reroot_shift,
    rescale,
    sample_bm_upcrossings,
    sample_bridge,
    sample_excursion,
    upcrossings,
    vervaat,
)
from oracles import supersampled_measure_below


def test_rng_stream_reproducible():
    a = RngStream(7, 3).generator().standard_normal(16)
    b = RngStream(7, 3).generator().standard_normal(16)
    c = RngStream(7, 4).generator().standard_normal(16)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


# --- sample_bridge -----------------------------------------------------------


def test_bridge_pinned_endpoints_minimal_grid():
    for seed in range(5):
        b = sample_bridge(2, RngStream(seed))
        assert b.values[0] == 0.0 and b.values[2] == 0.0


@pytest.mark.parametrize("bad_n", [0, 1, 3, 100])
def test_bridge_rejects_bad_resolution(bad_n):
    with pytest.raises(ValueError):
        sample_bridge(bad_n, RngStream(0))


def test_bridge_variance_matches_t_one_minus_t():
    # bridge covariance at t is t(1-t); at t = 1/2 the variance is 1/4
    m, n = 20_000, 256
    mid = np.array([sample_bridge(n, RngStream(11, i)).values[n // 2] for i in range(m)])
    var = mid.var(ddof=1)
    se_var = var * math.sqrt(2.0 / (m - 1))
    assert abs(var - 0.25) <= 3 * se_var


def test_bridge_mean_zero_everywhere():
    m, n = 20_000, 64
    acc = np.zeros(n + 1)
    sq = np.zeros(n + 1)
    for i in range(m):
        v = sample_bridge(n, RngStream(12, i)).values
        acc += v
        sq += v * v
    mean = acc / m
    se = np.sqrt(np.maximum(sq / m - mean**2, 1e-30) / m)
    inner = slice(1, n)
    # 4.5 se: a 3 se cut applied at every grid point would flag false positives
    assert np.all(np.abs(mean[inner]) <= 4.5 * se[inner])


# --- vervaat -----------------------------------------------------------------


def test_vervaat_identity_on_nonnegative_bridge():
    b = BridgePath(np.array([0.0, 0.3, 0.1, 0.4, 0.0]))
    out = vervaat(b)
    assert np.array_equal(out.values, b.values)
    assert out.duration == 1.0


def test_vervaat_preserves_increment_multiset():
    b = sample_bridge(128, RngStream(5))
    e = vervaat(b)
    inc_b = np.sort(np.diff(b.values))
    inc_e = np.sort(np.diff(e.values))
    assert np.allclose(inc_b, inc_e, atol=1e-12)


def test_vervaat_invariant_under_input_rotation():
    b = sample_bridge(64, RngStream(6))
    v = b.values
    n = b.n
    for k in (7, 23, 40):
        rotated = np.concatenate([v[k:n], v[: k + 1]]) - v[k]
        rotated[0] = rotated[-1] = 0.0
        out = vervaat(BridgePath(rotated))
        assert np.allclose(out.values, vervaat(b).values, atol=1e-12)


def test_sampled_excursions_satisfy_type_invariants():
    for seed in range(20):
        f = sample_excursion(64, RngStream(404, seed))
        assert f.values[0] == 0.0 and f.values[-1] == 0.0
        assert np.all(f.values >= 0)
        assert f.duration == 1.0


def test_sampled_occupation_matches_root_ball_mean():
    # E time below r is 1 - exp(-2 r^2); at r = 0.25 that is 1 - e^-0.125
    m, n, r = 3_000, 2**10, 0.25
    occ = np.array([
        occupation_below(sample_excursion(n, RngStream(77, i)), r) for i in range(m)
    ])
    target = 1.0 - math.exp(-0.125)
    se = occ.std(ddof=1) / math.sqrt(m)
    assert abs(occ.mean() - target) <= 3 * se + 4.0 / n


def test_rotated_bridge_sampler_has_positive_occupation_bias():
    # pinning positivity only at grid points inflates time near the floor;
    # this documents why the norm-of-3d-bridge sampler is the default
    m, n, r = 3_000, 2**10, 0.25
    occ = np.array([
        occupation_below(vervaat(sample_bridge(n, RngStream(78, i))), r) for i in range(m)
    ])
    target = 1.0 - math.exp(-0.125)
    se = occ.std(ddof=1) / math.sqrt(m)
    assert occ.mean() - target > 3 * se


# --- rescale -----------------------------------------------------------------


def test_rescale_identity(tent):
    assert rescale(tent, 1.0) is tent


def test_rescale_tent_by_four(tent):
    out = rescale(tent, 4.0)
    assert height(out) == pytest.approx(0.25, abs=1e-15)
    assert out.duration == pytest.approx(0.25, abs=1e-15)


def test_rescale_height_scaling_law():
    f = sample_excursion(128, RngStream(9))
    for c in (0.25, 2.0, 9.0):
        assert height(rescale(f, c)) == pytest.approx(height(f) / math.sqrt(c), rel=1e-12)


def test_rescale_round_trip():
    f = sample_excursion(128, RngStream(10))
    back = rescale(rescale(f, 3.7), 1 / 3.7)
    assert np.allclose(back.values, f.values, rtol=1e-12, atol=0)
    assert back.duration == pytest.approx(1.0, rel=1e-12)


def test_rescale_rejects_nonpositive_factor(tent):
    for c in (0.0, -1.0):
        with pytest.raises(ValueError):
            rescale(tent, c)


# --- height / oscillation ----------------------------------------------------


def test_height_examples(tent):
    assert height(tent) == 0.5
    assert height(ExcursionPath(np.array([0.0, 0.7, 0.0]))) == 0.7


def test_oscillation_linear_ramp(tent):
    # rising flank of the tent has slope 1
    assert oscillation(tent, 0.0, 0.5, 0.1) == pytest.approx(0.1, abs=1e-12)


def test_oscillation_constant_section():
    f = ExcursionPath(np.array([0.0, 0.4, 0.4, 0.4, 0.0]))
    assert oscillation(f, 0.25, 0.75, 0.25) == 0.0


def test_oscillation_global_window_equals_height(tent):
    assert oscillation(tent, 0.0, 1.0, 1.0) == height(tent)


def test_oscillation_rejects_bad_windows(tent):
    with pytest.raises(ValueError):
        oscillation(tent, 0.5, 0.5, 0.1)
    with pytest.raises(ValueError):
        oscillation(tent, 0.0, 1.0, 0.0)
    with pytest.raises(ValueError):
        oscillation(tent, 0.2, 0.4, 0.5)


# --- occupation_below --------------------------------------------------------


def test_occupation_tent(tent):
    assert occupation_below(tent, 0.3) == pytest.approx(0.6, abs=1e-15)


def test_occupation_above_height_is_duration(tent):
    assert occupation_below(tent, 0.6) == pytest.approx(1.0, abs=1e-15)


def test_occupation_rejects_negative_level(tent):
    with pytest.raises(ValueError):
        occupation_below(tent, -0.1)


def test_occupation_monotone_in_level():
    f = sample_excursion(256, RngStream(13))
    levels = np.linspace(0.0, height(f) * 1.1, 40)
    vals = [occupation_below(f, lv) for lv in levels]
    assert all(b >= a for a, b in zip(vals, vals[1:]))
    assert vals[0] == 0.0


def test_occupation_matches_supersampled_oracle():
    f = sample_excursion(64, RngStream(14))
    for level in (0.05, 0.2, 0.6):
        oracle = supersampled_measure_below(f.values, f.grid_step, level)
        assert occupation_below(f, level) == pytest.approx(oracle, abs=2e-4)


# --- upcrossings -------------------------------------------------------------


def test_upcrossings_tent(tent):
    assert upcrossings(tent, 0.2, 0.4) == 1


def test_upcrossings_two_peaks(two_peak):
    assert upcrossings(two_peak, 0.4, 0.8) == 2


def test_upcrossings_above_height(tent):
    assert upcrossings(tent, 0.2, 0.9) == 0


def test_upcrossings_rejects_bad_band(tent):
    with pytest.raises(ValueError):
        upcrossings(tent, 0.4, 0.2)
    with pytest.raises(ValueError):
        upcrossings(tent, 0.0, 0.2)


def test_upcrossings_band_enlargement_never_increases():
    gen = RngStream(15).generator()
    for _ in range(25):
        f = sample_excursion(256, gen)
        a, b = sorted(gen.uniform(0.05, 0.9, size=2))
        if a == b:
            continue
        a2 = a * gen.uniform(0.3, 1.0)
        b2 = b + gen.uniform(0.0, 0.3)
        assert upcrossings(f, a2, b2) <= upcrossings(f, a, b)


# --- reroot_shift ------------------------------------------------------------


def test_reroot_identity_at_zero():
    f = sample_excursion(128, RngStream(16))
    assert reroot_shift(f, 0.0) is f


def test_reroot_output_is_valid_and_period_closes():
    f = sample_excursion(256, RngStream(17))
    for s in (0.25, 0.5, 0.7109375):
        g = reroot_shift(f, s)
        assert g.values[0] == 0.0 and g.values[-1] == 0.0
        assert g.duration == 1.0
        # the original root sits at lag 1-s, at its distance from the new root
        k = round(s * f.n)
        assert g.values[f.n - k] == pytest.approx(f.values[k], abs=1e-12)


def test_reroot_rejects_bad_arguments(tent):
    f = sample_excursion(64, RngStream(18))
    with pytest.raises(ValueError):
        reroot_shift(f, 1.5)
    with pytest.raises(ValueError):
        reroot_shift(rescale(f, 2.0), 0.3)


def test_reroot_preserves_height_distribution():
    from scipy import stats

    m, n = 2_000, 2**9
    base = np.empty(m)
    shifted = np.empty(m)
    for i in range(m):
        base[i] = height(sample_excursion(n, RngStream(19, i)))
        gen = RngStream(20, i).generator()
        f = sample_excursion(n, gen)
        shifted[i] = height(reroot_shift(f, float(gen.random())))
    assert stats.ks_2samp(base, shifted).pvalue > 0.01


# --- sample_bm_upcrossings ---------------------------------------------------


def test_ladder_rejects_bad_level():
    with pytest.raises(ValueError):
        sample_bm_upcrossings(0.0, RngStream(0))


def test_ladder_scalar_matches_batch_law():
    counts = np.array([sample_bm_upcrossings(0.1, RngStream(21, i)) for i in range(2000)])
    batch = sample_bm_upcrossings(0.1, RngStream(22), size=2000)
    assert counts.min() >= 0 and batch.min() >= 0
    assert abs(counts.mean() - batch.mean()) <= 4 * math.sqrt(2.0 / 2000) * 2


def test_ladder_generating_function_and_mass():
    m = 50_000
    counts = sample_bm_upcrossings(1.0, RngStream(23), size=m)
    z = 1.5
    vals = z ** counts.astype(float)
    se = vals.std(ddof=1) / math.sqrt(m)
    assert abs(vals.mean() - 2.0) <= 3 * se  # 1 / (2 - z) at z = 3/2

    zero = (counts == 0).mean()
    se0 = math.sqrt(zero * (1 - zero) / m)
    assert abs(zero - 0.5) <= 3 * se0

    sem = counts.std(ddof=1) / math.sqrt(m)
    assert abs(counts.mean() - 1.0) <= 3 * sem


def test_moment_bounds_hold_with_slack():
    # k-th moments of time below r must stay under (k+1)! r^(2k)
    m, n = 3_000, 2**10
    radii = np.array([0.1, 0.2, 0.3])
    occ = np.empty((m, 3))
    for i in range(m):
        f = sample_excursion(n, RngStream(24, i))
        for j, r in enumerate(radii):
            occ[i, j] = occupation_below(f, r)
    for j, r in enumerate(radii):
        for k in (1, 2, 3):
            powered = occ[:, j] ** k
            bound = math.factorial(k + 1) * r ** (2 * k)
            se = powered.std(ddof=1) / math.sqrt(m)
            assert powered.mean() <= bound + 3 * se


def test_height_distribution_left_tail_shape():
    # the left tail of the height law decays like exp(-pi^2 / 2x^2): tiny
    # below 0.5 and monotone in the threshold; the constant is not pinned
    m, n = 4_000, 2**9
    hts = np.array([height(sample_excursion(n, RngStream(25, i))) for i in range(m)])
    counts = [(hts < x).sum() for x in (0.4, 0.5, 0.6)]
    assert counts[0] <= counts[1] <= counts[2]
    assert counts[1] / m < 0.005
