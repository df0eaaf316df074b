"""Monte Carlo estimators for the truncated Gibbs normalization.

Sampling is counter-based: sample i of task `cell_id` uses the Philox key
(master_seed, cell_id * 2^32 + i), so every sample is a pure function of
seed and coordinates and can be regenerated in any order, on any worker.

Reductions are exact and mergeable.  Per-sample values are summed with
np.sum over fixed chunks of CHUNK consecutive streams (chunk boundaries
at absolute stream indices, independent of the worker count), and the
chunk sums are accumulated as exact rationals.  Records over adjacent
stream ranges therefore merge associatively, commutatively, and
bit-identically to the single-pass result whenever the split respects
the chunk grid, which the parallel harness always does.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from fractions import Fraction

import numpy as np

from . import _kernels
from .fields import (
    SpectralField,
    build_lattice,
    embed,
    fast_grid_size,
    sample_field,
    to_grid,
    wick_sigma,
)

CHUNK = 1024  # reduction block, fixed independently of the worker count
# The record tracks sums of squared weights, so exp arguments must satisfy
# nsamples * exp(2 * arg) < float64 max; 345 leaves headroom up to ~1e8 samples.
MAX_EXP_ARG = 345.0

_STREAM_BITS = 32


class EstimatorOverflowError(FloatingPointError):
    """An exponent exceeded the float64 range; lower the cap or coupling."""


def make_stream(cell_id: int, index: int) -> int:
    """Stream number of sample `index` within task `cell_id`."""
    if not 0 <= cell_id < 2**31:
        raise ValueError(f"cell_id out of range: {cell_id}")
    if not 0 <= index < 2**_STREAM_BITS:
        raise ValueError(f"sample index out of range: {index}")
    return (cell_id << _STREAM_BITS) | index


@dataclass(frozen=True)
class EstimateRecord:
    """Mergeable moment accumulator for one scalar functional.

    `total` and `total_sq` are exact rationals (sums of per-chunk float
    sums), so merging is exact; the float views are computed on demand.
    """

    n: int
    total: Fraction
    total_sq: Fraction
    vmin: float
    vmax: float
    indicator_hits: int
    cap_hits: int
    unreliable: bool = False

    @classmethod
    def empty(cls) -> "EstimateRecord":
        return cls(0, Fraction(0), Fraction(0), math.inf, -math.inf, 0, 0, False)

    @property
    def mean(self) -> float:
        if self.n == 0:
            return math.nan
        return float(self.total / self.n)

    @property
    def stderr(self) -> float:
        if self.n < 2:
            return math.nan
        mean = self.mean
        msq = float(self.total_sq / self.n)
        var = max(msq - mean * mean, 0.0) / (self.n - 1)
        return math.sqrt(var)

    @property
    def indicator_hit_rate(self) -> float:
        return self.indicator_hits / self.n if self.n else math.nan

    @property
    def cap_hit_rate(self) -> float:
        return self.cap_hits / self.n if self.n else math.nan

    def merge(self, other: "EstimateRecord") -> "EstimateRecord":
        return EstimateRecord(
            n=self.n + other.n,
            total=self.total + other.total,
            total_sq=self.total_sq + other.total_sq,
            vmin=min(self.vmin, other.vmin),
            vmax=max(self.vmax, other.vmax),
            indicator_hits=self.indicator_hits + other.indicator_hits,
            cap_hits=self.cap_hits + other.cap_hits,
            unreliable=self.unreliable or other.unreliable,
        )

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "mean": self.mean,
            "stderr": self.stderr,
            "sum": float(self.total),
            "sumsq": float(self.total_sq),
            "min": self.vmin,
            "max": self.vmax,
            "indicator_hit_rate": self.indicator_hit_rate,
            "cap_hit_rate": self.cap_hit_rate,
            "unreliable": self.unreliable,
        }


def record_from_values(
    values: np.ndarray,
    indicator: np.ndarray | None = None,
    cap_hits: np.ndarray | None = None,
    start: int = 0,
) -> EstimateRecord:
    """Accumulate a contiguous stream range [start, start + len(values)).

    Chunk boundaries sit at absolute multiples of CHUNK, so records over
    adjacent aligned ranges merge bit-identically to a single pass.
    """
    values = np.asarray(values, dtype=np.float64)
    n = values.size
    if n == 0:
        return EstimateRecord.empty()
    total = Fraction(0)
    total_sq = Fraction(0)
    pos = 0
    while pos < n:
        edge = ((start + pos) // CHUNK + 1) * CHUNK - start
        piece = values[pos : min(n, edge)]
        with np.errstate(over="ignore"):  # non-finite sums raise below
            s = float(np.sum(piece))
            ssq = float(np.sum(piece * piece))
        if not (math.isfinite(s) and math.isfinite(ssq)):
            raise EstimatorOverflowError(
                "sample sums overflowed the float64 range; cap or rescale the functional"
            )
        total += Fraction(s)
        total_sq += Fraction(ssq)
        pos = min(n, edge)
    ind = int(np.count_nonzero(indicator)) if indicator is not None else n
    cap = int(np.count_nonzero(cap_hits)) if cap_hits is not None else 0
    return EstimateRecord(
        n=n,
        total=total,
        total_sq=total_sq,
        vmin=float(np.min(values)),
        vmax=float(np.max(values)),
        indicator_hits=ind,
        cap_hits=cap,
    )


def heavy_tail_flag(weights: np.ndarray, top_fraction: float = 0.01, share: float = 0.5) -> bool:
    """True when the top `top_fraction` of weights carries over `share` of the sum."""
    w = np.asarray(weights, dtype=np.float64)
    total = float(np.sum(w))
    if not np.isfinite(total) or total <= 0.0:
        return False
    k = max(1, int(w.size * top_fraction))
    top = float(np.sum(np.partition(w, w.size - k)[w.size - k :]))
    return top > share * total


@dataclass(frozen=True)
class MCConfig:
    """Parameters of one Monte Carlo estimation task."""

    d: int
    N: int
    coupling: float
    K: float = math.inf
    cap: float = math.inf
    p: float = 1.0
    nsamples: int = 10_000
    master_seed: int = 0
    workers: int = 1
    cell_id: int = 0

    def __post_init__(self):
        if self.d not in (1, 2, 3):
            raise ValueError(f"dimension must be 1, 2 or 3, got {self.d}")
        if self.N < 0:
            raise ValueError(f"cutoff must be nonnegative, got {self.N}")
        if self.coupling < 0:
            raise ValueError(f"coupling must be nonnegative, got {self.coupling}")
        if not self.K > 0:
            raise ValueError(f"truncation K must be positive, got {self.K}")
        if not self.cap > 0:
            raise ValueError(f"cap must be positive, got {self.cap}")
        if self.p < 1:
            raise ValueError(f"moment order must be >= 1, got {self.p}")
        if self.nsamples < 2:
            raise ValueError(f"need at least 2 samples, got {self.nsamples}")
        if self.workers < 1:
            raise ValueError(f"workers must be >= 1, got {self.workers}")


@dataclass(frozen=True)
class FunctionalBank:
    """Per-sample functionals of the Gaussian field, in stream order."""

    mass2: np.ndarray
    quartic: np.ndarray | None = None
    cross: np.ndarray | None = None
    shift_mass2: np.ndarray | None = None
    shift_quartic: np.ndarray | None = None
    drift_l2sq: float = 0.0


def sample_functionals(
    d: int,
    N: int,
    nsamples: int,
    master_seed: int,
    cell_id: int = 0,
    workers: int = 1,
    drift: SpectralField | None = None,
    need_quartic: bool = True,
) -> FunctionalBank:
    """Evaluate the field functionals on `nsamples` independent samples.

    Returns stream-ordered arrays of the renormalized mass and (optionally)
    the quartic interaction; with a drift Theta also the cross term
    integral Y Theta dx and the shifted mass/quartic of Y + Theta.  Values
    are bit-reproducible for fixed (master_seed, cell_id) regardless of
    the worker count.
    """
    lat = build_lattice(d, N)
    sig = wick_sigma(d, N).value
    G = fast_grid_size(4 * N + 1)
    scatter = tuple(np.mod(lat.modes[:, a], G) for a in range(d))
    shape = (G,) * d
    vol = float(G**d)

    mass2 = np.empty(nsamples)
    quartic = np.empty(nsamples) if need_quartic else None

    tcoeff = None
    tvals = None
    cross = np.empty(nsamples) if drift is not None else None
    shift_quartic = np.empty(nsamples) if (drift is not None and need_quartic) else None
    drift_l2sq = 0.0
    if drift is not None:
        theta = embed(drift, N) if drift.lattice.N != N else drift
        if theta.lattice.d != d:
            raise ValueError("drift dimension does not match the field")
        tcoeff = theta.coeff
        drift_l2sq = float(np.real(np.vdot(tcoeff, tcoeff)))
        if need_quartic:
            tvals = to_grid(theta, G).values

    def job(a: int, b: int) -> None:
        buf = np.zeros(shape, dtype=np.complex128) if need_quartic else None
        for i in range(a, b):
            field = sample_field(lat, master_seed, make_stream(cell_id, i))
            c = field.coeff
            mass2[i] = float(np.real(np.vdot(c, c))) - sig
            if tcoeff is not None:
                cross[i] = float(np.real(np.vdot(tcoeff, c)))
            if need_quartic:
                buf.fill(0.0)
                buf[scatter] = c
                vals = np.ascontiguousarray((np.fft.ifftn(buf) * vol).real)
                quartic[i] = _kernels.h4_mean(vals, sig)
                if tvals is not None:
                    shift_quartic[i] = _kernels.h4_shift_mean(vals, tvals, sig)

    edges = list(range(0, nsamples, CHUNK)) + [nsamples]
    spans = list(zip(edges[:-1], edges[1:]))
    if workers <= 1 or len(spans) == 1:
        for a, b in spans:
            job(a, b)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(lambda ab: job(*ab), spans))

    shift_mass2 = None
    if drift is not None:
        shift_mass2 = mass2 + 2.0 * cross + drift_l2sq

    return FunctionalBank(
        mass2=mass2,
        quartic=quartic,
        cross=cross,
        shift_mass2=shift_mass2,
        shift_quartic=shift_quartic,
        drift_l2sq=drift_l2sq,
    )


def estimate_partition(config: MCConfig, bank: FunctionalBank | None = None) -> EstimateRecord:
    """Estimate E[ 1_{|mass| <= K} exp(p min(coupling * quartic, cap)) ].

    With cap = +inf this is the p-th moment of the truncated Gibbs density;
    a finite cap bounds the estimator on the strong-coupling side.  Raises
    EstimatorOverflowError instead of silently returning inf.
    """
    if bank is None:
        bank = sample_functionals(
            config.d,
            config.N,
            config.nsamples,
            config.master_seed,
            config.cell_id,
            config.workers,
        )
    ind = np.abs(bank.mass2) <= config.K
    arg = config.coupling * bank.quartic
    capped = np.minimum(arg, config.cap)
    cap_hits = arg >= config.cap if math.isfinite(config.cap) else np.zeros_like(ind)
    expo = config.p * capped
    live = expo[ind]
    if live.size and float(np.max(live)) > MAX_EXP_ARG:
        raise EstimatorOverflowError(
            f"exponent {float(np.max(live)):.1f} exceeds the estimator's range; "
            f"lower the cap (p * cap must stay below {MAX_EXP_ARG:.0f}) or the coupling"
        )
    weights = np.zeros(config.nsamples)
    weights[ind] = np.exp(expo[ind])
    rec = record_from_values(weights, indicator=ind, cap_hits=cap_hits)
    if heavy_tail_flag(weights):
        rec = replace(rec, unreliable=True)
    return rec


def estimate_capped_gain(config: MCConfig, bank: FunctionalBank | None = None) -> EstimateRecord:
    """Estimate E[ 1_{|mass| <= K} min(coupling * quartic, cap) ].

    This is the zero-drift witness integrand: the drifted witness with
    gamma = 0 reproduces it bit for bit on the same seeds.
    """
    if bank is None:
        bank = sample_functionals(
            config.d,
            config.N,
            config.nsamples,
            config.master_seed,
            config.cell_id,
            config.workers,
        )
    ind = np.abs(bank.mass2) <= config.K
    arg = config.coupling * bank.quartic
    gain = np.where(ind, np.minimum(arg, config.cap), 0.0)
    cap_hits = arg >= config.cap if math.isfinite(config.cap) else np.zeros_like(ind)
    return record_from_values(gain, indicator=ind, cap_hits=cap_hits)


@dataclass(frozen=True)
class AtomReport:
    """Largest empirical CDF jump of the renormalized mass."""

    max_jump: float
    value_at_max: float
    nsamples: int


def atom_check(
    d: int,
    N: int,
    nsamples: int,
    master_seed: int = 0,
    workers: int = 1,
    cell_id: int = 0,
) -> AtomReport:
    """Sample integral :u_N^2: dx and report the largest CDF jump.

    A continuous law ties with probability ~ 0, so the jump of a healthy
    sampler is 1/nsamples; any atom (for instance from a deterministic
    field) shows up as a macroscopic jump.
    """
    bank = sample_functionals(
        d, N, nsamples, master_seed, cell_id, workers, need_quartic=False
    )
    values, counts = np.unique(bank.mass2, return_counts=True)
    worst = int(np.argmax(counts))
    return AtomReport(
        max_jump=float(counts[worst]) / nsamples,
        value_at_max=float(values[worst]),
        nsamples=nsamples,
    )


@dataclass(frozen=True)
class CauchyRow:
    """One tail comparison E[(quartic_N - quartic_M)^2] vs. the chaos sum."""

    M: int
    N: int
    analytic: float
    mc_mean: float
    mc_stderr: float
    zscore: float


def cauchy_table(
    d: int,
    cutoffs: tuple,
    nsamples: int,
    master_seed: int = 0,
    workers: int = 1,
    budget: int = 1000,
) -> list:
    """Pathwise L^2 differences of quartic interactions along a cutoff ladder.

    For each consecutive pair M < N the exact value is
    E[(R_N - R_M)^2] = E[R_N^2] - E[R_M^2] = 24 (S_N - S_M) with S_X the
    quadruple convolution sum at cutoff X; the Monte Carlo side evaluates
    both interactions on the same sample.
    """
    from .wick import interaction_cross_moment, quartic_interaction
    from .fields import project

    cutoffs = sorted(int(x) for x in cutoffs)
    if len(cutoffs) < 2:
        raise ValueError("need at least two cutoffs")
    rows = []
    for pair_idx, (M, N) in enumerate(zip(cutoffs[:-1], cutoffs[1:])):
        lat = build_lattice(d, N)
        sig_n = wick_sigma(d, N)
        sig_m = wick_sigma(d, M)
        diffs = np.empty(nsamples)
        G = fast_grid_size(4 * N + 1)

        def job(a: int, b: int) -> None:
            for i in range(a, b):
                field = sample_field(lat, master_seed, make_stream(pair_idx, i))
                r_n = quartic_interaction(to_grid(field, G), sig_n)
                r_m = quartic_interaction(to_grid(project(field, M), G), sig_m)
                diffs[i] = (r_n - r_m) ** 2

        edges = list(range(0, nsamples, CHUNK)) + [nsamples]
        spans = list(zip(edges[:-1], edges[1:]))
        if workers <= 1 or len(spans) == 1:
            for a, b in spans:
                job(a, b)
        else:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                list(pool.map(lambda ab: job(*ab), spans))

        rec = record_from_values(diffs)
        analytic = interaction_cross_moment(d, N, N, budget) - interaction_cross_moment(
            d, M, M, budget
        )
        z = abs(rec.mean - analytic) / rec.stderr if rec.stderr > 0 else math.inf
        rows.append(
            CauchyRow(
                M=M,
                N=N,
                analytic=analytic,
                mc_mean=rec.mean,
                mc_stderr=rec.stderr,
                zscore=z,
            )
        )
    return rows
