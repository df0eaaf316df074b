"""Spectral representation of log-correlated Gaussian fields on the torus.

A field on T^d = (R/2piZ)^d is stored by its Fourier coefficients over the
integer lattice ball {|n| <= N} (Euclidean norm),

    u(x) = sum_n chat(n) e^{i n.x},      chat(-n) = conj(chat(n)),

with the Japanese bracket <n> = (1 + |n|^2)^(1/2).  The Gaussian samples
draw chat(n) = g_n / <n>^(d/2) with E|g_n|^2 = 1 (g_0 real standard
normal, antipodal pairs complex with independent real and imaginary parts
of variance 1/2), so E[u(x)^2] = sigma_N = sum_{|n|<=N} <n>^(-d).

Integrals over the torus are with respect to normalized Lebesgue measure,
so on a pseudospectral grid they are plain grid means.  Grid synthesis
uses a grid of at least 4N+1 points per axis, which makes grid means of
quartic products of degree-N fields exact (no aliasing up to degree 4).
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

DEFAULT_MODE_BUDGET = 2**24  # enumeration points (2N+1)^d, not final modes


class LatticeSizeError(ValueError):
    """Mode enumeration would exceed the configured memory budget."""


class DealiasingError(ValueError):
    """Requested grid is too coarse for exact quartic grid means."""


@dataclass(frozen=True)
class Lattice:
    """Integer modes of the ball {|n| <= N} in Z^d, sorted by (|n|^2, lex).

    Arrays are read-only and shared between fields.  `lookup` is a dense
    table over the cube [-N, N]^d mapping flattened offsets to mode rows
    (-1 off the ball); `conj_index` maps each mode to its antipode, and
    `pair_rep` lists one representative per antipodal pair (first nonzero
    component positive), in sorted order.
    """

    d: int
    N: int
    modes: np.ndarray
    nsq: np.ndarray
    ang: np.ndarray
    amp: np.ndarray
    lookup: np.ndarray
    conj_index: np.ndarray
    pair_rep: np.ndarray

    @property
    def size(self) -> int:
        return self.modes.shape[0]

    def offsets(self, modes: np.ndarray) -> np.ndarray:
        """Flattened positions of given modes in the dense lookup table."""
        side = 2 * self.N + 1
        off = np.zeros(modes.shape[0], dtype=np.int64)
        for a in range(self.d):
            off = off * side + (modes[:, a] + self.N)
        return off


@dataclass(frozen=True)
class WickVariance:
    """sigma_N = sum_{|n| <= N} <n>^(-d) together with its provenance."""

    d: int
    N: int
    value: float


@dataclass(frozen=True)
class SpectralField:
    """Hermitian coefficient vector on a lattice.

    `cutoff` tracks the support radius: projections shrink it while the
    carrier lattice stays fixed, so a projected field still composes with
    every lattice-level operation.
    """

    lattice: Lattice
    coeff: np.ndarray
    cutoff: int

    @property
    def d(self) -> int:
        return self.lattice.d


@dataclass(frozen=True)
class GridField:
    """Real field values on a uniform (size,)*d grid covering [0, 2pi)^d."""

    d: int
    size: int
    cutoff: int
    values: np.ndarray


def _frozen_array(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@lru_cache(maxsize=128)
def _build_lattice_cached(d: int, N: int) -> Lattice:
    side = 2 * N + 1
    axes = [np.arange(-N, N + 1, dtype=np.int64)] * d
    grids = np.meshgrid(*axes, indexing="ij")
    cube = np.stack([g.ravel() for g in grids], axis=1)
    nsq = np.sum(cube * cube, axis=1)
    keep = nsq <= N * N
    modes = cube[keep]
    nsq = nsq[keep]

    # sort by |n|^2 then lexicographically (lexsort: last key is primary)
    keys = tuple(modes[:, a] for a in reversed(range(d))) + (nsq,)
    order = np.lexsort(keys)
    modes = np.ascontiguousarray(modes[order])
    nsq = np.ascontiguousarray(nsq[order])

    m = modes.shape[0]
    off = np.zeros(m, dtype=np.int64)
    for a in range(d):
        off = off * side + (modes[:, a] + N)
    lookup = np.full(side**d, -1, dtype=np.int64)
    lookup[off] = np.arange(m, dtype=np.int64)

    off_neg = np.zeros(m, dtype=np.int64)
    for a in range(d):
        off_neg = off_neg * side + (-modes[:, a] + N)
    conj_index = lookup[off_neg]

    first_nz = (modes != 0).argmax(axis=1)
    lead = modes[np.arange(m), first_nz]
    pair_rep = np.nonzero((lead > 0))[0].astype(np.int64)

    ang = np.sqrt(1.0 + nsq.astype(np.float64))
    amp = ang ** (-0.5 * d)

    return Lattice(
        d=d,
        N=N,
        modes=_frozen_array(modes),
        nsq=_frozen_array(nsq),
        ang=_frozen_array(ang),
        amp=_frozen_array(amp),
        lookup=_frozen_array(lookup),
        conj_index=_frozen_array(conj_index),
        pair_rep=_frozen_array(pair_rep),
    )


def build_lattice(d: int, N: int, max_modes: int = DEFAULT_MODE_BUDGET) -> Lattice:
    """Enumerate the mode ball {|n| <= N} in Z^d.

    Raises LatticeSizeError when the (2N+1)^d enumeration cube exceeds
    `max_modes` points.
    """
    if d not in (1, 2, 3):
        raise ValueError(f"dimension must be 1, 2 or 3, got {d}")
    if N < 0 or int(N) != N:
        raise ValueError(f"cutoff must be a nonnegative integer, got {N}")
    count = (2 * N + 1) ** d
    if count > max_modes:
        raise LatticeSizeError(
            f"lattice enumeration needs {count} points, over the budget of {max_modes}"
        )
    return _build_lattice_cached(int(d), int(N))


def wick_sigma(d: int, N: int, max_modes: int = DEFAULT_MODE_BUDGET) -> WickVariance:
    """Wick variance sigma_N = sum_{|n| <= N} <n>^(-d).

    The sum runs in ascending |n| order (the lattice ordering), which
    keeps repeated evaluations bit-stable.
    """
    lat = build_lattice(d, N, max_modes)
    value = float(np.sum(lat.ang ** (-float(d))))
    return WickVariance(d=d, N=N, value=value)


def sample_field(lattice: Lattice, master_seed: int, stream: int) -> SpectralField:
    """Draw one Gaussian field sample from the (master_seed, stream) pair.

    Uses the counter-based Philox generator keyed by the two 64-bit words,
    so any sample can be regenerated independently of all others.
    """
    mask = (1 << 64) - 1
    key = np.array([master_seed & mask, stream & mask], dtype=np.uint64)
    rng = np.random.Generator(np.random.Philox(key=key))
    reps = lattice.pair_rep
    draws = rng.standard_normal(1 + 2 * reps.size)
    coeff = np.zeros(lattice.size, dtype=np.complex128)
    coeff[0] = draws[0]  # zero mode: real, unit variance, <0> = 1
    half = np.sqrt(0.5)
    g = half * (draws[1::2] + 1j * draws[2::2])
    coeff[reps] = g * lattice.amp[reps]
    coeff[lattice.conj_index[reps]] = np.conj(g) * lattice.amp[reps]
    return SpectralField(lattice=lattice, coeff=_frozen_array(coeff), cutoff=lattice.N)


def field_from_coeff(lattice: Lattice, coeff: np.ndarray, cutoff: int | None = None) -> SpectralField:
    """Wrap an explicit coefficient vector, checking Hermitian symmetry."""
    coeff = np.asarray(coeff, dtype=np.complex128)
    if coeff.shape != (lattice.size,):
        raise ValueError(f"expected {lattice.size} coefficients, got {coeff.shape}")
    if not np.allclose(coeff[lattice.conj_index], np.conj(coeff), atol=1e-12):
        raise ValueError("coefficients are not Hermitian symmetric")
    return SpectralField(
        lattice=lattice,
        coeff=_frozen_array(coeff.copy()),
        cutoff=lattice.N if cutoff is None else int(cutoff),
    )


def project(field: SpectralField, M: int) -> SpectralField:
    """Sharp Fourier projection onto {|n| <= M}."""
    if M < 0 or int(M) != M:
        raise ValueError(f"projection cutoff must be a nonnegative integer, got {M}")
    lat = field.lattice
    if M >= field.cutoff:
        return field
    coeff = np.where(lat.nsq <= M * M, field.coeff, 0.0)
    return SpectralField(lattice=lat, coeff=_frozen_array(coeff), cutoff=int(M))


def dyadic_block(field: SpectralField, j: int) -> SpectralField:
    """Dyadic frequency block: j = 1 keeps |n| <= 2, j >= 2 keeps 2^(j-1) < |n| <= 2^j.

    The first block absorbs the zero mode, so the blocks partition the
    ball exactly.
    """
    if j < 1 or int(j) != j:
        raise ValueError(f"block index must be a positive integer, got {j}")
    if j > 30:
        raise ValueError(f"block index {j} out of range")
    lat = field.lattice
    hi = 4**j
    if j == 1:
        mask = lat.nsq <= hi
    else:
        lo = 4 ** (j - 1)
        mask = (lat.nsq > lo) & (lat.nsq <= hi)
    coeff = np.where(mask, field.coeff, 0.0)
    return SpectralField(
        lattice=lat, coeff=_frozen_array(coeff), cutoff=min(field.cutoff, 2**j)
    )


def smooth(field: SpectralField, s: float) -> SpectralField:
    """Apply the Bessel smoothing <grad>^(-s): multiply chat(n) by <n>^(-s)."""
    lat = field.lattice
    coeff = field.coeff * lat.ang ** (-float(s))
    return SpectralField(lattice=lat, coeff=_frozen_array(coeff), cutoff=field.cutoff)


def embed(field: SpectralField, N: int, max_modes: int = DEFAULT_MODE_BUDGET) -> SpectralField:
    """Re-carry a field on the larger lattice {|n| <= N} without changing it."""
    if N < field.cutoff:
        raise ValueError(f"cannot embed a cutoff-{field.cutoff} field into N={N}")
    if N == field.lattice.N:
        return field
    big = build_lattice(field.d, N, max_modes)
    idx = big.lookup[big.offsets(field.lattice.modes)]
    coeff = np.zeros(big.size, dtype=np.complex128)
    coeff[idx] = field.coeff
    return SpectralField(lattice=big, coeff=_frozen_array(coeff), cutoff=field.cutoff)


def fast_grid_size(n: int) -> int:
    """Smallest 5-smooth integer >= n (an FFT-friendly grid length)."""
    g = max(1, int(n))
    while True:
        k = g
        for p in (2, 3, 5):
            while k % p == 0:
                k //= p
        if k == 1:
            return g
        g += 1


def to_grid(field: SpectralField, grid_size: int | None = None) -> GridField:
    """Synthesize real grid values by inverse FFT.

    The default grid is the smallest FFT-friendly size >= 4*cutoff + 1,
    which keeps grid means of quartic products exact.  Passing a smaller
    grid raises DealiasingError.
    """
    lat = field.lattice
    need = 4 * field.cutoff + 1
    G = fast_grid_size(need) if grid_size is None else int(grid_size)
    if G < need:
        raise DealiasingError(
            f"grid size {G} < {need} would alias quartic products at cutoff {field.cutoff}"
        )
    buf = np.zeros((G,) * lat.d, dtype=np.complex128)
    # scatter only the support ball: for cutoff < lattice.N the grid may be
    # too coarse for the full lattice, and colliding zeros must not win
    keep = lat.nsq <= field.cutoff * field.cutoff
    modes = lat.modes[keep]
    idx = tuple(np.mod(modes[:, a], G) for a in range(lat.d))
    buf[idx] = field.coeff[keep]
    values = np.fft.ifftn(buf) * float(G**lat.d)
    values = np.ascontiguousarray(values.real)
    return GridField(d=lat.d, size=G, cutoff=field.cutoff, values=_frozen_array(values))


def from_grid(grid: GridField, lattice: Lattice) -> SpectralField:
    """Recover lattice coefficients from grid values (inverse of to_grid)."""
    if grid.d != lattice.d:
        raise ValueError("dimension mismatch")
    if grid.size < 2 * lattice.N + 1:
        raise ValueError("grid too coarse to separate the lattice modes")
    spec = np.fft.fftn(grid.values) / float(grid.size**lattice.d)
    idx = tuple(np.mod(lattice.modes[:, a], grid.size) for a in range(lattice.d))
    coeff = np.ascontiguousarray(spec[idx])
    return SpectralField(lattice=lattice, coeff=_frozen_array(coeff), cutoff=lattice.N)


def grid_mean(values: np.ndarray) -> float:
    """Integral over the torus with normalized measure = plain grid mean."""
    return float(np.mean(values))
