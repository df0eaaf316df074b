"""Coupling-threshold scan across cutoffs, with a rise/flat classifier.

For a schedule pair (K(N), lambda(N) = c / (K(N) + log N)) the scan walks
a grid of coupling strengths c and cutoffs N and estimates, per cell,

    z_p      = E[ 1_{|mass| <= K} exp(p min(lambda quartic, cap)) ],  p = 1, 2,
    witness  = E[ 1_{shifted event} min(lambda quartic(Y + Theta), cap) ]
               - cost(Theta)/2,

with the drift Theta = sqrt(gamma K) f_N at profile scale M = N.  Small c
should leave the moments flat in N while large c should push the witness
up like lambda gamma^2 K^2 N^d; the classifier turns that contrast into
weak-like / strong-like / inconclusive labels per c column and brackets
the crossover.

Each cell draws its own sample streams, derived from the master seed and
the cell's grid coordinates, so any cell can be reproduced in isolation
and results do not depend on scan order or worker count.
"""

import math
from dataclasses import dataclass

import numpy as np

from .drift import WitnessConfig, default_profile, build_profile_field, make_drift, witness_lower_bound
from .estimators import (
    EstimatorOverflowError,
    MCConfig,
    estimate_partition,
    sample_functionals,
)

Z99 = 2.576  # two-sided 99% normal quantile
RISE_STDERRS = 5.0  # witness rise demanded by the strong-like label


@dataclass(frozen=True)
class Schedule:
    """Truncation schedule K(N): either kappa * log N or a constant."""

    kind: str
    kappa: float = 1.0
    K0: float = 10.0

    def __post_init__(self):
        if self.kind not in ("log", "const"):
            raise ValueError(f"schedule kind must be 'log' or 'const', got {self.kind!r}")
        if self.kind == "log" and not self.kappa > 0:
            raise ValueError(f"kappa must be positive, got {self.kappa}")
        if self.kind == "const" and not self.K0 > 0:
            raise ValueError(f"K0 must be positive, got {self.K0}")

    def cutoff(self, N: int) -> float:
        if self.kind == "log":
            if N < 2:
                raise ValueError("the log schedule needs N >= 2")
            return self.kappa * math.log(N)
        return self.K0

    @property
    def label(self) -> str:
        return self.kind


@dataclass(frozen=True)
class ScanConfig:
    d: int = 2
    c_values: tuple = (0.0, 2.0, 64.0)
    N_values: tuple = (8, 16, 32)
    schedules: tuple = (Schedule("log"), Schedule("const"))
    gamma: float = 0.05
    cap_margin: float = 16.0
    nsamples: int = 10_000
    master_seed: int = 0
    workers: int = 1

    def __post_init__(self):
        if self.d not in (1, 2, 3):
            raise ValueError(f"dimension must be 1, 2 or 3, got {self.d}")
        if not self.c_values or any(c < 0 for c in self.c_values):
            raise ValueError("c_values must be nonempty and nonnegative")
        if list(self.c_values) != sorted(self.c_values):
            raise ValueError("c_values must be sorted ascending")
        if not self.N_values or any(n < 4 for n in self.N_values):
            raise ValueError("N_values must be >= 4 (profile support needs M >= 4)")
        if list(self.N_values) != sorted(self.N_values):
            raise ValueError("N_values must be sorted ascending")
        if self.gamma < 0:
            raise ValueError(f"gamma must be nonnegative, got {self.gamma}")
        if not self.cap_margin > 0:
            raise ValueError(f"cap_margin must be positive, got {self.cap_margin}")
        if self.nsamples < 2:
            raise ValueError(f"need at least 2 samples, got {self.nsamples}")


@dataclass(frozen=True)
class ScanRow:
    schedule: str
    c: float
    N: int
    K: float
    coupling: float
    cap: float
    z1_mean: float
    z1_stderr: float
    z2_mean: float
    z2_stderr: float
    witness_mean: float
    witness_stderr: float
    event_prob: float
    cap_hit_rate: float
    flags: str


@dataclass(frozen=True)
class ScanResult:
    rows: list
    labels: dict  # (schedule label, c) -> classification
    brackets: dict  # schedule label -> (largest weak c, smallest strong c)


def cell_id_of(i_schedule: int, i_c: int, i_N: int) -> int:
    """Pack grid coordinates into the per-cell stream namespace.

    Offset by one so standalone tasks (cell 0) never collide with a scan.
    """
    if not (0 <= i_schedule < 256 and 0 <= i_c < 256 and 0 <= i_N < 256):
        raise ValueError("scan grids are limited to 256 points per axis")
    return ((i_schedule << 16) | (i_c << 8) | i_N) + 1


def cap_rule(coupling: float, gamma: float, K: float, N: int, d: int, margin: float) -> float:
    """Cap L = coupling * gamma^2 K^2 N^d * margin, the strong-side gain scale.

    At zero coupling any positive cap is equivalent (the gain is 0); use 1.
    """
    if coupling <= 0:
        return 1.0
    return coupling * gamma**2 * K**2 * float(N) ** d * margin


def run_scan(config: ScanConfig) -> ScanResult:
    """Run the grid, one independent estimation task per cell."""
    profiles = {}  # N -> profile field, shared across schedules and couplings
    prof = default_profile(config.d)
    rows = []
    for i_s, sched in enumerate(config.schedules):
        for i_c, c in enumerate(config.c_values):
            for i_n, N in enumerate(config.N_values):
                rows.append(
                    _run_cell(config, prof, profiles, sched, c, N, cell_id_of(i_s, i_c, i_n))
                )
    labels = {}
    for sched in config.schedules:
        for c in config.c_values:
            column = [r for r in rows if r.schedule == sched.label and r.c == c]
            column.sort(key=lambda r: r.N)
            labels[(sched.label, c)] = classify_column(column)
    brackets = {
        sched.label: crossover_bracket(config.c_values, sched.label, labels)
        for sched in config.schedules
    }
    return ScanResult(rows=rows, labels=labels, brackets=brackets)


def _run_cell(config, prof, profiles, sched, c, N, cell) -> ScanRow:
    K = sched.cutoff(N)
    lam = c / (K + math.log(N))
    cap = cap_rule(lam, config.gamma, K, N, config.d, config.cap_margin)
    if N not in profiles:
        profiles[N] = build_profile_field(prof, N)
    drift = make_drift(profiles[N], config.gamma, K)
    flags = []

    bank = sample_functionals(
        config.d,
        N,
        config.nsamples,
        config.master_seed,
        cell_id=cell,
        workers=config.workers,
        drift=drift.field,
    )

    z = {}
    for p in (1, 2):
        mc = MCConfig(
            d=config.d,
            N=N,
            coupling=lam,
            K=K,
            cap=cap,
            p=p,
            nsamples=config.nsamples,
            master_seed=config.master_seed,
            cell_id=cell,
            workers=config.workers,
        )
        try:
            rec = estimate_partition(mc, bank)
            z[p] = (rec.mean, rec.stderr, rec.indicator_hit_rate)
            if rec.unreliable:
                flags.append(f"unreliable_z{p}")
        except EstimatorOverflowError:
            z[p] = (math.nan, math.nan, math.nan)
            flags.append(f"overflow_z{p}")

    wc = WitnessConfig(
        d=config.d,
        N=N,
        M=N,
        gamma=config.gamma,
        coupling=lam,
        K=K,
        cap=cap,
        nsamples=config.nsamples,
        master_seed=config.master_seed,
        cell_id=cell,
        workers=config.workers,
    )
    import warnings as _warnings

    with _warnings.catch_warnings():
        _warnings.simplefilter("ignore", RuntimeWarning)
        wrec = witness_lower_bound(wc, bank=bank, drift=drift)
    if wrec.cap_hit_rate > 0.5:
        flags.append("cap_saturated")

    event_prob = z[1][2] if not math.isnan(z[1][2]) else float(np.mean(np.abs(bank.mass2) <= K))
    return ScanRow(
        schedule=sched.label,
        c=c,
        N=N,
        K=K,
        coupling=lam,
        cap=cap,
        z1_mean=z[1][0],
        z1_stderr=z[1][1],
        z2_mean=z[2][0],
        z2_stderr=z[2][1],
        witness_mean=wrec.mean,
        witness_stderr=wrec.stderr,
        event_prob=event_prob,
        cap_hit_rate=wrec.cap_hit_rate,
        flags=";".join(flags),
    )


def _witness_rises(column, z: float = Z99) -> bool:
    wit = [r.witness_mean for r in column]
    if any(math.isnan(w) for w in wit):
        return False
    if not all(b > a for a, b in zip(wit[:-1], wit[1:])):
        return False
    pooled = math.hypot(column[0].witness_stderr, column[-1].witness_stderr)
    return wit[-1] - wit[0] > RISE_STDERRS * pooled


def _z2_overlap(column, z: float = Z99) -> bool:
    for i in range(len(column)):
        for j in range(i + 1, len(column)):
            a, b = column[i], column[j]
            if math.isnan(a.z2_mean) or math.isnan(b.z2_mean):
                return False
            gap = abs(a.z2_mean - b.z2_mean)
            if gap > z * (a.z2_stderr + b.z2_stderr):
                return False
    return True


INFORMATIVE_FRACTION = 0.5  # z2 stderr above this fraction of the mean says nothing


def classify_column(column, z: float = Z99) -> str:
    """Label one (schedule, c) column across the cutoff ladder.

    strong-like:  witness strictly rising with total rise > 5 pooled stderrs
    weak-like:    all pairwise 99% CIs of z2 overlap, no such rise, and the
                  z2 estimates are trustworthy: no unreliable/overflow flag
                  and stderr below half the mean (an uninformative CI
                  overlaps everything vacuously)
    inconclusive: anything else
    """
    if len(column) < 2:
        return "inconclusive"
    if _witness_rises(column, z):
        return "strong-like"
    z2_trusted = all(
        "unreliable_z2" not in r.flags
        and "overflow_z2" not in r.flags
        and r.z2_stderr <= INFORMATIVE_FRACTION * abs(r.z2_mean)
        for r in column
    )
    if z2_trusted and _z2_overlap(column, z):
        return "weak-like"
    return "inconclusive"


def crossover_bracket(c_values, schedule_label, labels) -> tuple:
    """(largest weak-like c, smallest strong-like c) for one schedule."""
    weak = [c for c in c_values if labels.get((schedule_label, c)) == "weak-like"]
    strong = [c for c in c_values if labels.get((schedule_label, c)) == "strong-like"]
    return (max(weak) if weak else None, min(strong) if strong else None)
