import math

import numpy as np
import pytest

from loglab.drift import (
    WitnessConfig,
    build_profile_field,
    default_profile,
    make_drift,
    profile_moments,
    shifted_event_probability,
    witness_deterministic_part,
    witness_lower_bound,
)
from loglab.estimators import (
    MCConfig,
    estimate_capped_gain,
    sample_functionals,
)
from loglab.fields import wick_sigma


def test_profile_normalization():
    """The bump profile is L^2-normalized: integral f_M^2 -> 1."""
    prof = default_profile(2)
    for M in (16, 32):
        mom = profile_moments(build_profile_field(prof, M))
        assert 0.99 <= mom.m2 <= 1.01
        assert mom.m4 > 0.0
        assert mom.s2 > 0.0


def test_profile_field_needs_room():
    prof = default_profile(1)
    with pytest.raises(ValueError):
        build_profile_field(prof, 3)


def test_profile_moment_scaling():
    """m4 grows like M^d while s2 decays like M^(-d)."""
    prof = default_profile(2)
    m16 = profile_moments(build_profile_field(prof, 16))
    m64 = profile_moments(build_profile_field(prof, 64))
    assert np.allclose(m64.m4 / m16.m4, 16.0, rtol=0.05)
    assert np.allclose(m16.s2 / m64.s2, 16.0, rtol=0.05)


def test_drift_cost_doubles_exactly_with_gamma():
    fm = build_profile_field(default_profile(2), 16)
    base = make_drift(fm, 0.05, 2.0)
    twice = make_drift(fm, 0.10, 2.0)
    assert twice.cost == 2.0 * base.cost
    assert twice.l2_sq == 2.0 * base.l2_sq
    # theta scales like sqrt(gamma K) in every coefficient
    assert np.allclose(
        twice.field.coeff, math.sqrt(2.0) * base.field.coeff, rtol=1e-15
    )


def test_witness_config_validation():
    ok = dict(d=2, N=16, M=16, gamma=0.05, coupling=0.1, K=2.0, cap=10.0)
    WitnessConfig(**ok)
    with pytest.raises(ValueError):
        WitnessConfig(**{**ok, "M": 32})  # drift support beyond the cutoff
    with pytest.raises(ValueError):
        WitnessConfig(**{**ok, "M": 3})
    with pytest.raises(ValueError):
        WitnessConfig(**{**ok, "cap": math.inf})
    with pytest.raises(ValueError):
        WitnessConfig(**{**ok, "gamma": -0.1})


def test_zero_drift_witness_is_capped_gain_bitwise():
    """gamma = 0 reduces the witness to the capped-gain estimator exactly."""
    wc = WitnessConfig(d=1, N=8, M=8, gamma=0.0, coupling=0.3, K=2.5,
                       cap=5.0, nsamples=2048, master_seed=4)
    wrec = witness_lower_bound(wc)
    mc = MCConfig(d=1, N=8, coupling=0.3, K=2.5, cap=5.0,
                  nsamples=2048, master_seed=4)
    grec = estimate_capped_gain(mc)
    assert wrec == grec


def test_shifted_mass_identity_in_bank():
    """mass(Y + Theta) = mass(Y) + 2 integral Y Theta + integral Theta^2,
    exactly as computed in coefficient space."""
    fm = build_profile_field(default_profile(2), 8)
    drift = make_drift(fm, 0.05, 2.0)
    bank = sample_functionals(2, 8, 512, 7, drift=drift.field)
    lhs = bank.shift_mass2
    rhs = bank.mass2 + 2.0 * bank.cross + drift.l2_sq
    assert np.allclose(lhs, rhs, rtol=1e-12, atol=1e-12)
    assert np.allclose(bank.drift_l2sq, drift.l2_sq, rtol=1e-12)


def test_shift_gain_matches_quartic_moment():
    """E[quartic(Y + Theta) - quartic(Y)] = gamma^2 K^2 integral f_M^4."""
    d, N = 2, 16
    K = math.log(N)
    gamma = 0.05
    fm = build_profile_field(default_profile(d), N)
    drift = make_drift(fm, gamma, K)
    bank = sample_functionals(d, N, 8192, 12, drift=drift.field)
    diff = bank.shift_quartic - bank.quartic
    predicted = gamma**2 * K**2 * profile_moments(fm).m4
    se = float(np.std(diff)) / math.sqrt(diff.size)
    assert abs(float(np.mean(diff)) - predicted) < 4.0 * se


def test_witness_deterministic_part_linear_in_coupling():
    # K large enough that the frozen-Y event holds (|t2 - sigma| <= K)
    wc = dict(d=2, N=16, M=16, gamma=0.05, K=30.0, cap=1e9,
              nsamples=16, master_seed=0)
    base = witness_deterministic_part(WitnessConfig(coupling=0.0, **wc))
    lo = witness_deterministic_part(WitnessConfig(coupling=0.1, **wc))
    hi = witness_deterministic_part(WitnessConfig(coupling=0.2, **wc))
    # under the cap the gain term is linear and increasing in the coupling
    assert np.allclose(hi - base, 2.0 * (lo - base), rtol=1e-12)
    assert hi > lo > base


def test_witness_warns_when_cap_saturates():
    wc = WitnessConfig(d=1, N=8, M=8, gamma=0.05, coupling=50.0, K=100.0,
                       cap=1e-6, nsamples=512, master_seed=2)
    with pytest.warns(RuntimeWarning):
        witness_lower_bound(wc)


def test_shifted_event_probability_report():
    d, N = 2, 16
    wc = WitnessConfig(d=d, N=N, M=N, gamma=0.05, coupling=0.1,
                       K=math.log(N), cap=10.0, nsamples=8192, master_seed=6)
    report = shifted_event_probability(wc)
    emp = report.record.indicator_hit_rate
    assert 0.0 <= report.chebyshev_floor <= 1.0
    assert emp >= report.chebyshev_floor - 0.02
    # second moment bookkeeping matches the sampled shifted mass
    bank = sample_functionals(
        d, N, 8192, 6,
        drift=make_drift(build_profile_field(default_profile(d), N), 0.05, math.log(N)).field,
    )
    emp_m2 = float(np.mean(bank.shift_mass2**2))
    se = float(np.std(bank.shift_mass2**2)) / math.sqrt(8192)
    assert abs(emp_m2 - report.second_moment) < 4.0 * se


def test_witness_reproducible_across_workers():
    wc1 = WitnessConfig(d=2, N=8, M=8, gamma=0.05, coupling=0.2, K=2.0,
                        cap=20.0, nsamples=2048, master_seed=1, workers=1)
    wc4 = WitnessConfig(d=2, N=8, M=8, gamma=0.05, coupling=0.2, K=2.0,
                        cap=20.0, nsamples=2048, master_seed=1, workers=4)
    assert witness_lower_bound(wc1) == witness_lower_bound(wc4)
