"""Wick powers, renormalized functionals, and their exact second moments.

Wick powers of a variance-sigma Gaussian are Hermite polynomials,

    H_0 = 1,  H_1 = x,  H_2 = x^2 - s,  H_3 = x^3 - 3 s x,
    H_4 = x^4 - 6 s x^2 + 3 s^2          (s = sigma),

so the renormalized mass and quartic interaction of a cutoff field u_N are

    mass(u)     = integral :u_N^2: dx = sum_n |chat(n)|^2 - sigma_N,
    quartic(u)  = integral :u_N^4: dx = grid mean of H_4(u_N(x); sigma_N).

The quadratic functional is evaluated in coefficient space (exact); the
quartic one on a dealiased grid, where the grid mean of any quartic
product of degree-N fields is exact.  Orthogonality of Wick chaoses gives
closed-form second moments used as oracles throughout the test suite.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .fields import (
    GridField,
    SpectralField,
    WickVariance,
    build_lattice,
)

DEFAULT_SUM_BUDGET = 1000  # modes; the quadruple sum costs ~ budget^3


class SumBudgetError(ValueError):
    """Quadruple convolution sum would exceed the configured mode budget."""


def hermite(k: int, x, sigma: float):
    """Hermite polynomial H_k(x; sigma) with variance parameter sigma.

    Vectorized over x.  Degrees above 4 are not used anywhere in the
    package and are rejected.
    """
    if int(k) != k or not 0 <= k <= 4:
        raise ValueError(f"Hermite degree must be an integer in [0, 4], got {k}")
    x = np.asarray(x, dtype=np.float64)
    s = float(sigma)
    if k == 0:
        out = np.ones_like(x)
    elif k == 1:
        out = x.copy()
    elif k == 2:
        out = x * x - s
    elif k == 3:
        out = x * (x * x - 3.0 * s)
    else:
        x2 = x * x
        out = x2 * x2 - 6.0 * s * x2 + 3.0 * s * s
    if out.ndim == 0:
        return float(out)
    return out


def _check_sigma(sigma: WickVariance, d: int, cutoff: int, what: str) -> None:
    if sigma.d != d or sigma.N != cutoff:
        raise ValueError(
            f"Wick variance tagged (d={sigma.d}, N={sigma.N}) does not match "
            f"{what} with (d={d}, N={cutoff})"
        )


def renormalized_mass(field: SpectralField, sigma: WickVariance) -> float:
    """integral :u_N^2: dx = sum |chat(n)|^2 - sigma_N, exact in coefficients."""
    _check_sigma(sigma, field.d, field.cutoff, "field")
    power = float(np.real(np.vdot(field.coeff, field.coeff)))
    return power - sigma.value


def quartic_interaction(grid: GridField, sigma: WickVariance) -> float:
    """integral :u_N^4: dx as the grid mean of H_4(u(x); sigma_N)."""
    _check_sigma(sigma, grid.d, grid.cutoff, "grid field")
    if grid.size < 4 * grid.cutoff + 1:
        raise ValueError("grid too coarse for an exact quartic mean")
    return _kernels.h4_mean(grid.values, sigma.value)


def shifted_quartic_interaction(
    grid: GridField, drift: GridField, sigma: WickVariance
) -> float:
    """integral :(Y + Theta)^4: dx with the Wick constant of Y's cutoff.

    The drift must live on the same grid and inside the field's frequency
    ball, so the sum is still degree N and the grid mean stays exact.
    """
    _check_sigma(sigma, grid.d, grid.cutoff, "grid field")
    if drift.size != grid.size or drift.d != grid.d:
        raise ValueError("drift grid does not match the field grid")
    if drift.cutoff > grid.cutoff:
        raise ValueError("drift support exceeds the field cutoff")
    if grid.size < 4 * grid.cutoff + 1:
        raise ValueError("grid too coarse for an exact quartic mean")
    return _kernels.h4_shift_mean(grid.values, drift.values, sigma.value)


def chaos_second_moment(d: int, window: tuple, s: float = 0.0) -> float:
    """E[(integral :(<grad>^(-s) u restricted to a frequency window)^2: dx)^2].

    The window (lo, hi] selects modes with lo < |n| <= hi; the zero mode
    belongs to the lowest window, i.e. it is included whenever lo <= 0
    (matching the dyadic convention where the first block absorbs n = 0).
    Value: 2 * sum over the window of <n>^(-2d - 4s); an empty window
    gives 0, and disjoint windows add.
    """
    lo, hi = window
    if hi < 0 or int(hi) != hi:
        raise ValueError(f"window upper end must be a nonnegative integer, got {hi}")
    if not lo < hi:
        raise ValueError(f"window ({lo}, {hi}] is empty or reversed")
    lat = build_lattice(d, int(hi))
    mask = (lat.nsq > lo * lo) & (lat.nsq <= hi * hi)
    if lo <= 0:
        mask |= lat.nsq == 0
    expo = -(2.0 * d + 4.0 * float(s))
    return 2.0 * float(np.sum(lat.ang[mask] ** expo))


def interaction_cross_moment(
    d: int, N: int, M: int, budget: int = DEFAULT_SUM_BUDGET
) -> float:
    """E[quartic(u_N) * quartic(u_M)] for M <= N, by direct convolution sum.

    Orthogonality collapses the expectation onto the smaller ball:
    24 * sum over n1+n2+n3+n4 = 0, |n_i| <= M, of prod <n_i>^(-d).
    The quadruple sum costs ~ (mode count)^3 and refuses to run past
    `budget` modes.
    """
    if M > N:
        raise ValueError(f"need M <= N, got M={M}, N={N}")
    lat = build_lattice(d, M)
    if lat.size > budget:
        raise SumBudgetError(
            f"quadruple sum over {lat.size} modes exceeds the budget of {budget} "
            f"(cost ~ {lat.size}^3 terms)"
        )
    weights = lat.ang ** (-float(d))
    total = _kernels.quartic_convolution_sum(lat.modes, weights, lat.lookup, M, d)
    return 24.0 * total


@dataclass(frozen=True)
class ChaosStats:
    """The two dyadic diagnostics of one field sample."""

    tail_stat: float
    block_stat: float


def chaos_diagnostics(field: SpectralField) -> ChaosStats:
    """Dyadic tail and block statistics of a cutoff field.

    tail_stat  = sqrt( sum_k 2^{(5/2) d k} W_k^2 ) with
                 W_k = integral :(<grad>^(-d/2) (high-pass beyond 2^k) u)^2: dx
                     = sum_{2^k < |n| <= N} ( <n>^(-d) |chat(n)|^2 - <n>^(-2d) ),
    block_stat = sum_j | integral :(block_j u)^2: dx |
               = sum_j | sum_{n in block j} ( |chat(n)|^2 - <n>^(-d) ) |,

    where block 1 is {|n| <= 2} (zero mode included) and block j is the
    annulus (2^(j-1), 2^j].  Both have bounded expectation uniformly in N.
    """
    lat = field.lattice
    N = field.cutoff
    p2 = np.real(field.coeff * np.conj(field.coeff))
    wd = lat.ang ** (-float(lat.d))
    inside = lat.nsq <= N * N

    kmax = max(1, math.ceil(math.log2(N)) if N >= 2 else 1)
    tail_sq = 0.0
    for k in range(1, kmax + 1):
        sel = inside & (lat.nsq > 4**k)
        w_k = float(np.sum(wd[sel] * p2[sel]) - np.sum(wd[sel] ** 2))
        tail_sq += 2.0 ** (2.5 * lat.d * k) * w_k * w_k

    block_total = 0.0
    for j in range(1, kmax + 1):
        if j == 1:
            sel = inside & (lat.nsq <= 4)
        else:
            sel = inside & (lat.nsq > 4 ** (j - 1)) & (lat.nsq <= 4**j)
        mass = float(np.sum(p2[sel]) - np.sum(wd[sel]))
        block_total += abs(mass)

    return ChaosStats(tail_stat=math.sqrt(tail_sq), block_stat=block_total)
