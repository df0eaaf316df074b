import itertools
import math

import numpy as np
import pytest

from loglab.fields import (
    build_lattice,
    field_from_coeff,
    project,
    sample_field,
    to_grid,
    wick_sigma,
)
from loglab.wick import (
    SumBudgetError,
    chaos_diagnostics,
    chaos_second_moment,
    hermite,
    interaction_cross_moment,
    quartic_interaction,
    renormalized_mass,
    shifted_quartic_interaction,
)


def test_hermite_table_values():
    assert hermite(0, 5.0, 2.0) == 1.0
    assert hermite(1, 5.0, 2.0) == 5.0
    assert hermite(2, 3.0, 2.0) == 7.0
    assert hermite(3, 2.0, 1.0) == 2.0
    assert hermite(4, 2.0, 1.0) == -5.0
    with pytest.raises(ValueError):
        hermite(5, 1.0, 1.0)


def test_hermite_vectorized():
    x = np.linspace(-3, 3, 11)
    assert np.allclose(hermite(2, x, 1.5), x * x - 1.5, rtol=1e-15)
    assert np.allclose(hermite(4, x, 2.0), x**4 - 12.0 * x**2 + 12.0, rtol=1e-14)


def test_hermite_binomial_shift_identity():
    """H_k(x + t) = sum_j C(k, j) t^(k-j) H_j(x), 1000 random triples."""
    rng = np.random.default_rng(0)
    binom = {2: (1, 2, 1), 3: (1, 3, 3, 1), 4: (1, 4, 6, 4, 1)}
    for _ in range(1000):
        x, t = rng.normal(0.0, 2.0, 2)
        sig = rng.uniform(0.5, 4.0)
        for k in (2, 3, 4):
            lhs = hermite(k, x + t, sig)
            rhs = sum(
                coef * t ** (k - j) * hermite(j, x, sig)
                for j, coef in enumerate(binom[k])
            )
            assert abs(lhs - rhs) <= 1e-12 * max(abs(lhs), 1.0)


def test_gaussian_hermite_moments():
    """E[H_k(g)] = 0 and E[H_k(g)^2] = k! sigma^k for g ~ N(0, sigma)."""
    rng = np.random.default_rng(1)
    sig = 1.7
    g = rng.normal(0.0, math.sqrt(sig), 200_000)
    for k, kfact in ((2, 2), (3, 6), (4, 24)):
        h = hermite(k, g, sig)
        target = kfact * sig**k
        assert abs(np.mean(h)) < 5.0 * np.std(h) / math.sqrt(g.size)
        se = np.std(h * h) / math.sqrt(g.size)
        assert abs(np.mean(h * h) - target) < 5.0 * se


def test_renormalized_mass_two_routes():
    lat = build_lattice(2, 6)
    f = sample_field(lat, 2, 3)
    sig = wick_sigma(2, 6)
    mass = renormalized_mass(f, sig)
    grid = to_grid(f)
    grid_route = float(np.mean(grid.values**2)) - sig.value
    assert np.allclose(mass, grid_route, rtol=1e-12, atol=1e-12)


def test_renormalized_mass_rejects_wrong_sigma():
    lat = build_lattice(2, 6)
    f = sample_field(lat, 2, 3)
    with pytest.raises(ValueError):
        renormalized_mass(f, wick_sigma(2, 5))


def _brute_plain_quartic(field):
    lat = field.lattice
    live = [
        (tuple(int(v) for v in lat.modes[i]), field.coeff[i])
        for i in range(lat.size)
        if lat.nsq[i] <= field.cutoff * field.cutoff
    ]
    table = dict(live)
    total = 0.0 + 0.0j
    for (n1, c1), (n2, c2), (n3, c3) in itertools.product(live, repeat=3):
        n4 = tuple(-(a + b + c) for a, b, c in zip(n1, n2, n3))
        if n4 in table:
            total += c1 * c2 * c3 * table[n4]
    return float(np.real(total))


def test_quartic_interaction_against_convolution():
    for N in (1, 2, 3, 4):
        lat = build_lattice(1, N)
        f = sample_field(lat, 4, N)
        sig = wick_sigma(1, N)
        plain = _brute_plain_quartic(f)
        l2 = float(np.sum(np.abs(f.coeff) ** 2))
        expected = plain - 6.0 * sig.value * l2 + 3.0 * sig.value**2
        got = quartic_interaction(to_grid(f), sig)
        assert np.allclose(got, expected, rtol=1e-10)


def test_shifted_quartic_matches_explicit_sum():
    """quartic(Y + Theta) via the shift kernel equals synthesizing Y + Theta."""
    lat = build_lattice(2, 4)
    y = sample_field(lat, 8, 0)
    theta = field_from_coeff(lat, 0.3 * sample_field(lat, 8, 1).coeff)
    sig = wick_sigma(2, 4)
    grid_y = to_grid(y)
    grid_t = to_grid(theta, grid_y.size)
    got = shifted_quartic_interaction(grid_y, grid_t, sig)
    summed = field_from_coeff(lat, y.coeff + theta.coeff)
    expected = quartic_interaction(to_grid(summed, grid_y.size), sig)
    assert np.allclose(got, expected, rtol=1e-12)


def test_chaos_second_moment_windows():
    # zero mode belongs to the lowest window
    full = chaos_second_moment(1, (0, 2))
    zero_only = 2.0
    ring1 = 2.0 * 2.0 * 2.0 ** (-1.0)  # modes +-1, <n> = sqrt(2), d = 1
    ring2 = 2.0 * 2.0 * 5.0 ** (-1.0)
    assert np.allclose(full, zero_only + ring1 + ring2, rtol=1e-14)
    assert np.allclose(chaos_second_moment(1, (1, 2)), ring2, rtol=1e-14)
    # windows add
    assert np.allclose(
        chaos_second_moment(2, (0, 1)) + chaos_second_moment(2, (1, 4)),
        chaos_second_moment(2, (0, 4)),
        rtol=1e-14,
    )
    with pytest.raises(ValueError):
        chaos_second_moment(1, (2, 2))


def test_chaos_second_moment_smoothing_weight():
    # s shifts the exponent from 2d to 2d + 4s
    lat = build_lattice(1, 3)
    direct = 2.0 * float(np.sum(lat.ang ** (-6.0)))
    assert np.allclose(chaos_second_moment(1, (0, 3), s=1.0), direct, rtol=1e-14)


def test_mass_variance_mc():
    """Var integral :u_N^2: = 2 sum <n>^(-2d) over the ball."""
    lat = build_lattice(1, 4)
    sig = wick_sigma(1, 4)
    n = 40_000
    vals = np.empty(n)
    for i in range(n):
        vals[i] = renormalized_mass(sample_field(lat, 6, i), sig)
    analytic = chaos_second_moment(1, (0, 4))
    centered = vals - np.mean(vals)
    se = np.std(centered**2) / math.sqrt(n)
    assert abs(np.mean(vals)) < 4.0 * np.std(vals) / math.sqrt(n)
    assert abs(np.var(vals) - analytic) < 4.0 * se


def test_interaction_cross_moment_oracle():
    got = interaction_cross_moment(1, 1, 1)
    assert np.allclose(got, 204.0, rtol=1e-12)
    # nested cutoffs: E[R_N R_M] increases with the smaller cutoff
    a = interaction_cross_moment(1, 2, 1)
    b = interaction_cross_moment(1, 2, 2)
    assert 0.0 < a < b
    with pytest.raises(ValueError):
        interaction_cross_moment(1, 1, 2)  # wants M <= N
    with pytest.raises(SumBudgetError):
        interaction_cross_moment(2, 40, 40, budget=100)


def test_interaction_cross_moment_brute():
    """Independent dictionary-based recount of the quadruple sum, d=1 N=2."""
    lat = build_lattice(1, 2)
    live = [
        (int(lat.modes[i, 0]), float(lat.ang[i] ** (-1.0))) for i in range(lat.size)
    ]
    table = dict(live)
    total = 0.0
    for (n1, w1), (n2, w2), (n3, w3) in itertools.product(live, repeat=3):
        w4 = table.get(-(n1 + n2 + n3))
        if w4 is not None:
            total += w1 * w2 * w3 * w4
    assert np.allclose(interaction_cross_moment(1, 2, 2), 24.0 * total, rtol=1e-12)


def test_chaos_diagnostics_tail_oracle():
    """E[W_k^2] matches the analytic window sum (d=2, N=8)."""
    d, N = 2, 8
    lat = build_lattice(d, N)
    wd = lat.ang ** (-float(d))
    n = 20_000
    sel = lat.nsq > 4
    base = float(np.sum(wd[sel] ** 2))
    wk = np.empty(n)
    for i in range(n):
        p2 = np.abs(sample_field(lat, 13, i).coeff) ** 2
        wk[i] = float(np.sum(wd[sel] * p2[sel])) - base
    analytic = chaos_second_moment(d, (2, N), s=d / 2.0)
    sq = wk**2
    se = np.std(sq) / math.sqrt(n)
    assert abs(np.mean(sq) - analytic) < 4.0 * se


def test_chaos_diagnostics_deterministic_field():
    """A field with exactly the baseline energy has zero block statistic."""
    lat = build_lattice(1, 4)
    coeff = (lat.ang ** (-0.5)).astype(complex)  # |c_n|^2 = <n>^(-d)
    f = field_from_coeff(lat, coeff)
    stats = chaos_diagnostics(f)
    assert np.allclose(stats.block_stat, 0.0, atol=1e-14)
    assert np.allclose(stats.tail_stat, 0.0, atol=1e-14)


def test_chaos_diagnostics_positive_on_samples():
    lat = build_lattice(2, 8)
    f = sample_field(lat, 21, 40)
    stats = chaos_diagnostics(f)
    assert stats.tail_stat >= 0.0
    assert stats.block_stat >= 0.0
    assert math.isfinite(stats.tail_stat)
