"""Overlapping pattern counting and the psi-square statistic family.

A binary sequence of length N is scanned with an overlapping window of
size nu (stride 1), and the frequencies of all 2**nu patterns are
compared against the uniform expectation.  The raw statistic

    psi2(nu) = sum_i (n_i - lam)**2 / lam,   lam = (N - nu + 1) / 2**nu

is not asymptotically chi-square because neighbouring windows overlap;
its second difference

    d2(nu) = psi2(nu) - 2 * psi2(nu - 1) + psi2(nu - 2)

is asymptotically chi-square with 2**(nu - 2) degrees of freedom and
asymptotically independent across nu, which makes it the quantity that
downstream significance tests consume.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Mapping

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

MAX_WINDOW = 8


def _as_bit_array(bits) -> np.ndarray:
    arr = np.asarray(bits, dtype=np.uint8)
    if arr.ndim != 1:
        raise ValueError("bits must be one-dimensional")
    return arr


@dataclass(frozen=True)
class BinarySequence:
    """An immutable 0/1 array with provenance and optional segment joins.

    ``segment_bounds`` marks the start indices of follow-on segments when
    the sequence was concatenated from independent pieces (e.g. one firm
    after another inside a calendar-year array).  Bounds are strictly
    increasing and lie strictly inside the array.
    """

    bits: np.ndarray
    source_id: str = ""
    segment_bounds: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        arr = _as_bit_array(self.bits)
        if arr.size < 1:
            raise ValueError("empty sequence")
        if arr.max(initial=0) > 1:
            raise ValueError("bits must contain only 0 and 1")
        bounds = tuple(int(b) for b in self.segment_bounds)
        for prev, cur in zip((0,) + bounds, bounds):
            if cur <= prev:
                raise ValueError("segment_bounds must be strictly increasing and positive")
        if bounds and bounds[-1] >= arr.size:
            raise ValueError("segment_bounds must be smaller than the sequence length")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "bits", arr)
        object.__setattr__(self, "segment_bounds", bounds)

    def __len__(self) -> int:
        return int(self.bits.size)

    def segments(self) -> Iterator[np.ndarray]:
        """Yield the bit array split at the recorded segment joins."""
        yield from np.split(self.bits, list(self.segment_bounds))


@dataclass(frozen=True)
class PatternCounts:
    """Frequencies of all 2**nu overlapping windows of one sequence.

    ``counts[p]`` is the number of windows whose bits, most significant
    bit first (earliest bit first), spell the integer ``p``.
    ``skipped_segments`` records segments too short to hold a single
    window in boundary-respecting mode.
    """

    nu: int
    counts: np.ndarray
    total_windows: int
    skipped_segments: int = 0

    def __post_init__(self) -> None:
        counts = np.asarray(self.counts, dtype=np.int64)
        if counts.shape != (2**self.nu,):
            raise ValueError("counts must have length 2**nu")
        if int(counts.sum()) != self.total_windows:
            raise ValueError("counts must sum to total_windows")
        counts = counts.copy()
        counts.setflags(write=False)
        object.__setattr__(self, "counts", counts)


@dataclass(frozen=True)
class PsiProfile:
    """psi2, its first and second differences, and degrees of freedom.

    ``psi`` covers nu = 1..max_nu, ``d1`` nu >= 2, ``d2`` nu >= 3.  The
    second difference at nu = 2 would need a psi2(0) term and is never
    exposed.  ``dof[nu] == 2**(nu - 2)``.
    """

    psi: dict[int, float]
    d1: dict[int, float]
    d2: dict[int, float]
    dof: dict[int, int]
    n_bits: int

    @classmethod
    def from_psi(cls, psi: Mapping[int, float], n_bits: int) -> "PsiProfile":
        """Build a profile from raw psi2 values, deriving the differences."""
        nus = sorted(psi)
        if nus != list(range(1, len(nus) + 1)):
            raise ValueError("psi must cover nu = 1..max_nu without gaps")
        psi_f = {nu: float(psi[nu]) for nu in nus}
        d1 = {nu: psi_f[nu] - psi_f[nu - 1] for nu in nus if nu >= 2}
        d2 = {nu: psi_f[nu] - 2.0 * psi_f[nu - 1] + psi_f[nu - 2] for nu in nus if nu >= 3}
        dof = {nu: 2 ** (nu - 2) for nu in nus if nu >= 3}
        return cls(psi=psi_f, d1=d1, d2=d2, dof=dof, n_bits=int(n_bits))

    @property
    def max_nu(self) -> int:
        return max(self.psi)

    def d2_values(self) -> np.ndarray:
        """Second differences as an array ordered by nu (3..max_nu)."""
        return np.array([self.d2[nu] for nu in sorted(self.d2)], dtype=float)


def _window_codes(bits: np.ndarray, nu: int) -> np.ndarray:
    # Encode every window as an integer, earliest bit most significant.
    weights = (1 << np.arange(nu - 1, -1, -1)).astype(np.int64)
    return sliding_window_view(bits.astype(np.int64), nu) @ weights


def count_overlapping_patterns(
    seq: BinarySequence, nu: int, respect_boundaries: bool = False
) -> PatternCounts:
    """Count overlapping length-nu windows, optionally per segment.

    In boundary-respecting mode windows never straddle a segment join;
    segments shorter than nu contribute no windows and are tallied in
    ``skipped_segments``.
    """
    if not 1 <= nu <= MAX_WINDOW:
        raise ValueError(f"window size must be in 1..{MAX_WINDOW}, got {nu}")
    n = len(seq)
    counts = np.zeros(2**nu, dtype=np.int64)
    skipped = 0
    if respect_boundaries and seq.segment_bounds:
        for segment in seq.segments():
            if segment.size < nu:
                skipped += 1
                continue
            counts += np.bincount(_window_codes(segment, nu), minlength=2**nu)
    else:
        if nu > n:
            raise ValueError(f"window size {nu} exceeds sequence length {n}")
        counts = np.bincount(_window_codes(seq.bits, nu), minlength=2**nu)
    return PatternCounts(
        nu=nu,
        counts=counts,
        total_windows=int(counts.sum()),
        skipped_segments=skipped,
    )


def psi_square(counts: PatternCounts) -> float:
    """Uniformity statistic of one pattern-count table.

    Equals sum_i (n_i - lam)**2 / lam with lam = W / 2**nu for W total
    windows, evaluated through the identity 2**nu * sum_i n_i**2 / W - W
    so that the result depends only on the integer sum of squares and is
    invariant under any permutation of the pattern labels.
    """
    w = counts.total_windows
    if w <= 0:
        raise ValueError("pattern counts cover zero windows")
    ssq = int(np.dot(counts.counts, counts.counts))
    return (2**counts.nu * ssq) / w - w


def psi_profile(
    seq: BinarySequence, max_nu: int = MAX_WINDOW, respect_boundaries: bool = False
) -> PsiProfile:
    """psi2 for nu = 1..max_nu plus first/second differences."""
    if not 1 <= max_nu <= MAX_WINDOW:
        raise ValueError(f"max_nu must be in 1..{MAX_WINDOW}, got {max_nu}")
    if len(seq) < max_nu:
        raise ValueError(f"sequence length {len(seq)} shorter than max_nu {max_nu}")
    psi = {
        nu: psi_square(count_overlapping_patterns(seq, nu, respect_boundaries))
        for nu in range(1, max_nu + 1)
    }
    return PsiProfile.from_psi(psi, n_bits=len(seq))


def complement(seq: BinarySequence) -> BinarySequence:
    """Flip every bit, preserving provenance and segment joins."""
    return BinarySequence(
        bits=1 - seq.bits,
        source_id=seq.source_id,
        segment_bounds=seq.segment_bounds,
    )
