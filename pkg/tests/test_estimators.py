import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from loglab.estimators import (
    CHUNK,
    MAX_EXP_ARG,
    EstimateRecord,
    EstimatorOverflowError,
    MCConfig,
    atom_check,
    cauchy_table,
    estimate_capped_gain,
    estimate_partition,
    heavy_tail_flag,
    make_stream,
    record_from_values,
    sample_functionals,
)

finite_floats = st.floats(
    allow_nan=False, allow_infinity=False, min_value=-1e100, max_value=1e100
)


@st.composite
def values_with_aligned_split(draw):
    n = draw(st.integers(min_value=1, max_value=3 * CHUNK))
    vals = draw(
        st.lists(finite_floats, min_size=n, max_size=n).map(np.array)
    )
    cut = draw(st.integers(min_value=0, max_value=n // CHUNK)) * CHUNK
    return vals, cut


@given(values_with_aligned_split())
@settings(max_examples=50, deadline=None)
def test_aligned_split_merges_bit_identically(case):
    """Chunk-aligned splits reproduce the single-pass record exactly."""
    vals, cut = case
    whole = record_from_values(vals)
    left = record_from_values(vals[:cut], start=0)
    right = record_from_values(vals[cut:], start=cut)
    assert left.merge(right) == whole


@given(
    st.lists(finite_floats, min_size=1, max_size=200),
    st.lists(finite_floats, min_size=1, max_size=200),
    st.lists(finite_floats, min_size=1, max_size=200),
)
@settings(max_examples=50, deadline=None)
def test_merge_commutative_associative(a, b, c):
    ra = record_from_values(np.array(a))
    rb = record_from_values(np.array(b))
    rc = record_from_values(np.array(c))
    assert ra.merge(rb) == rb.merge(ra)
    assert ra.merge(rb).merge(rc) == ra.merge(rb.merge(rc))
    assert ra.merge(EstimateRecord.empty()) == ra


def test_record_exact_totals():
    """Totals are exact rationals of the per-chunk float sums."""
    vals = np.array([0.1] * 10)
    rec = record_from_values(vals)
    assert rec.total == Fraction(float(np.sum(vals)))
    assert rec.n == 10
    assert rec.vmin == rec.vmax == 0.1
    assert rec.indicator_hits == 10  # defaults to all live


def test_record_mean_stderr():
    vals = np.array([1.0, 2.0, 3.0, 4.0])
    rec = record_from_values(vals)
    assert np.allclose(rec.mean, 2.5, rtol=1e-15)
    assert np.allclose(rec.stderr, np.std(vals, ddof=1) / 2.0, rtol=1e-12)
    empty = EstimateRecord.empty()
    assert math.isnan(empty.mean)
    assert record_from_values(np.array([])) == empty


def test_record_overflowing_sum_raises():
    with pytest.raises(EstimatorOverflowError):
        record_from_values(np.array([1e308, 1e308]))


def test_make_stream_packing():
    seen = set()
    for cell in (0, 1, 255, 2**20):
        for idx in (0, 1, 2**30):
            s = make_stream(cell, idx)
            assert s not in seen
            seen.add(s)
    assert make_stream(0, 5) == 5
    with pytest.raises(ValueError):
        make_stream(-1, 0)
    with pytest.raises(ValueError):
        make_stream(2**31, 0)


def test_heavy_tail_flag():
    rng = np.random.default_rng(0)
    flat = rng.uniform(0.9, 1.1, 10_000)
    assert not heavy_tail_flag(flat)
    spiked = flat.copy()
    spiked[0] = 1e9
    assert heavy_tail_flag(spiked)
    assert not heavy_tail_flag(np.zeros(100))


def test_worker_count_invariance():
    """Bit-identical functional banks and records for 1, 2 and 8 workers."""
    recs = []
    banks = []
    for workers in (1, 2, 8):
        mc = MCConfig(d=1, N=4, coupling=0.1, K=2.0, cap=10.0,
                      nsamples=4096, master_seed=3, workers=workers)
        banks.append(sample_functionals(1, 4, 4096, 3, workers=workers))
        recs.append(estimate_partition(mc, banks[-1]))
    for bank in banks[1:]:
        assert np.array_equal(bank.mass2, banks[0].mass2)
        assert np.array_equal(bank.quartic, banks[0].quartic)
    assert recs[0] == recs[1] == recs[2]


def test_partition_trivial_at_zero_coupling():
    """coupling 0 and K = inf gives the constant 1 estimator."""
    for p in (1.0, 2.0):
        mc = MCConfig(d=1, N=2, coupling=0.0, p=p, nsamples=512, master_seed=0)
        rec = estimate_partition(mc)
        assert rec.mean == 1.0
        assert rec.stderr == 0.0
        assert rec.indicator_hit_rate == 1.0


def test_partition_zero_coupling_finite_k_is_event_probability():
    mc = MCConfig(d=2, N=4, coupling=0.0, K=1.5, nsamples=4096, master_seed=1)
    rec = estimate_partition(mc)
    assert rec.mean == rec.indicator_hit_rate
    assert 0.0 < rec.mean < 1.0


def test_partition_overflow_raises():
    mc = MCConfig(d=1, N=2, coupling=1e6, nsamples=256, master_seed=0)
    with pytest.raises(EstimatorOverflowError):
        estimate_partition(mc)


def test_partition_exponent_guard_matches_cap():
    # p * cap within range: the cap keeps the exponent legal at any coupling
    mc = MCConfig(d=1, N=2, coupling=1e6, cap=MAX_EXP_ARG / 2.0,
                  p=2.0, nsamples=256, master_seed=0)
    rec = estimate_partition(mc)
    assert math.isfinite(rec.mean)
    assert rec.cap_hit_rate > 0.0


def test_capped_gain_bounds():
    mc = MCConfig(d=1, N=4, coupling=1.0, K=3.0, cap=0.5,
                  nsamples=2048, master_seed=5)
    rec = estimate_capped_gain(mc)
    assert rec.vmax <= 0.5
    assert rec.cap_hit_rate > 0.0
    # off-event samples contribute exact zeros
    assert rec.indicator_hit_rate < 1.0


def test_atom_check_continuous_law():
    report = atom_check(1, 2, 20_000, master_seed=9)
    assert report.max_jump == 1.0 / 20_000
    assert report.nsamples == 20_000


def test_cauchy_table_shapes_and_zscores():
    rows = cauchy_table(1, (8, 16, 32), 4096, master_seed=2, workers=2)
    assert [(r.M, r.N) for r in rows] == [(8, 16), (16, 32)]
    for r in rows:
        assert r.analytic > 0.0
        assert math.isfinite(r.zscore)
        assert r.zscore < 6.0
    assert rows[1].analytic < rows[0].analytic
    with pytest.raises(ValueError):
        cauchy_table(1, (4,), 100)


def test_mcconfig_validation():
    with pytest.raises(ValueError):
        MCConfig(d=5, N=2, coupling=0.1)
    with pytest.raises(ValueError):
        MCConfig(d=1, N=2, coupling=-1.0)
    with pytest.raises(ValueError):
        MCConfig(d=1, N=2, coupling=0.1, K=0.0)
    with pytest.raises(ValueError):
        MCConfig(d=1, N=2, coupling=0.1, p=0.5)
    with pytest.raises(ValueError):
        MCConfig(d=1, N=2, coupling=0.1, nsamples=1)
