"""Pseudo-random baselines: bit-exact PCG64 and a logistic-map generator.

The PCG64 here is the XSL-RR 128/64 member of the permuted congruential
family: a 128-bit LCG with the reference multiplier, whose output is the
xor of the state halves rotated right by the state's top six bits.  The
implementation is bit-exact to the published reference (state advances
first, the output permutation reads the advanced state), which is also
the generator behind numpy's default bit stream.

The logistic-map generator iterates x <- 4x(1-x) and thresholds at 0.5,
re-seeding deterministically whenever the trajectory hits an absorbing
value.  It stands in as the deliberately simplistic baseline.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from typing import NamedTuple, Sequence

import numpy as np

from marketrng.pipeline import ExperimentStream
from marketrng.serial import BinarySequence

PCG64_MULTIPLIER = 0x2360ED051FC65DA44385DF649FCCF645
_MASK128 = (1 << 128) - 1
_MASK64 = (1 << 64) - 1

LOGISTIC_R = 4.0
# Exact absorbing points of the r=4 map and their one/two-step pre-images.
LOGISTIC_FORBIDDEN = (0.0, 0.25, 0.5, 0.75, 1.0)
_GOLDEN_CONJUGATE = 0.6180339887498949


@dataclass(frozen=True)
class Pcg64State:
    """128-bit LCG state and (odd) stream increment."""

    state: int
    increment: int

    def __post_init__(self) -> None:
        if not 0 <= self.state <= _MASK128:
            raise ValueError("state must be a 128-bit unsigned integer")
        if not 0 <= self.increment <= _MASK128:
            raise ValueError("increment must be a 128-bit unsigned integer")
        if self.increment % 2 == 0:
            raise ValueError("increment must be odd")

    @classmethod
    def seeded(cls, initstate: int, stream: int) -> "Pcg64State":
        """Reference seeding: two warm-up steps around the state injection."""
        inc = ((stream << 1) | 1) & _MASK128
        state = (0 * PCG64_MULTIPLIER + inc) & _MASK128
        state = (state + initstate) & _MASK128
        state = (state * PCG64_MULTIPLIER + inc) & _MASK128
        return cls(state=state, increment=inc)


def _rotr64(value: int, rot: int) -> int:
    return ((value >> rot) | (value << ((-rot) & 63))) & _MASK64


def pcg64_next(state: Pcg64State) -> tuple[int, Pcg64State]:
    """Advance one step and emit the 64-bit output word."""
    new = (state.state * PCG64_MULTIPLIER + state.increment) & _MASK128
    out = _rotr64((new >> 64) ^ (new & _MASK64), new >> 122)
    return out, Pcg64State(state=new, increment=state.increment)


class Pcg64:
    """Mutable convenience wrapper around the pure step function."""

    def __init__(self, state: Pcg64State):
        self._state = state.state
        self._inc = state.increment

    @classmethod
    def from_seed(cls, initstate: int, stream: int) -> "Pcg64":
        return cls(Pcg64State.seeded(initstate, stream))

    @property
    def state(self) -> Pcg64State:
        return Pcg64State(state=self._state, increment=self._inc)

    def next_u64(self) -> int:
        self._state = (self._state * PCG64_MULTIPLIER + self._inc) & _MASK128
        s = self._state
        return _rotr64((s >> 64) ^ (s & _MASK64), s >> 122)

    def next_uniform(self) -> float:
        """Uniform double in [0, 1) from the top 53 bits of one word."""
        return (self.next_u64() >> 11) * 2.0**-53

    def bit_array(self, n_bits: int) -> np.ndarray:
        """MSB-first bits of successive words, final word truncated."""
        if n_bits < 1:
            raise ValueError("n_bits must be positive")
        n_words = (n_bits + 63) // 64
        words = np.array([self.next_u64() for _ in range(n_words)], dtype=np.uint64)
        bits = np.unpackbits(np.frombuffer(words.astype(">u8").tobytes(), dtype=np.uint8))
        return bits[:n_bits]


def pcg64_bits(
    source: Pcg64 | Pcg64State, n_bits: int, source_id: str = ""
) -> BinarySequence:
    """Draw a binary sequence; a passed state is consumed functionally."""
    gen = source if isinstance(source, Pcg64) else Pcg64(source)
    return BinarySequence(bits=gen.bit_array(n_bits), source_id=source_id)


@dataclass(frozen=True)
class LogisticState:
    """Current trajectory point of the logistic map (control fixed at 4)."""

    x: float
    r: float = LOGISTIC_R

    def __post_init__(self) -> None:
        if not 0.0 < self.x < 1.0:
            raise ValueError("logistic state must lie strictly inside (0, 1)")


def _is_absorbing(x: float) -> bool:
    return x <= 0.0 or x >= 1.0 or x in (0.25, 0.5, 0.75)


class LogisticGenerator:
    """Logistic-map bit source with deterministic re-seeding.

    Each step applies x <- 4x(1-x); if the trajectory lands on an
    absorbing value it is replaced by the next point of a low-discrepancy
    seed ladder anchored at the original seed, so the whole stream stays
    a pure function of (seed, burn_in).
    """

    def __init__(self, seed: float, burn_in: int = 100):
        if not 0.0 < seed < 1.0 or seed in LOGISTIC_FORBIDDEN:
            raise ValueError(f"invalid logistic seed {seed!r}")
        if burn_in < 0:
            raise ValueError("burn_in must be non-negative")
        self._seed = seed
        self.reseeds = 0
        self.state = LogisticState(x=seed)
        for _ in range(burn_in):
            self._advance()

    def _fresh_seed(self) -> float:
        while True:
            self.reseeds += 1
            x = (self._seed + self.reseeds * _GOLDEN_CONJUGATE) % 1.0
            if 0.0 < x < 1.0 and not _is_absorbing(x):
                return x

    def _advance(self) -> float:
        x = self.state.x
        x = 4.0 * x * (1.0 - x)
        if _is_absorbing(x):
            x = self._fresh_seed()
        self.state = LogisticState(x=x)
        return x

    def bit_array(self, n_bits: int) -> np.ndarray:
        if n_bits < 1:
            raise ValueError("n_bits must be positive")
        out = np.empty(n_bits, dtype=np.uint8)
        for i in range(n_bits):
            out[i] = 1 if self._advance() > 0.5 else 0
        return out


def logistic_bits(
    seed: float, n_bits: int, burn_in: int = 100, source_id: str = ""
) -> BinarySequence:
    """Binary sequence from one logistic trajectory after burn-in."""
    gen = LogisticGenerator(seed, burn_in=burn_in)
    return BinarySequence(bits=gen.bit_array(n_bits), source_id=source_id)


@dataclass(frozen=True)
class SyntheticSpec:
    """Shape of a synthetic dataset mirroring an empirical stream."""

    kind: str
    lengths: tuple[int, ...]

    def __post_init__(self) -> None:
        if self.kind not in ("firm_like", "year_like"):
            raise ValueError(f"unknown synthetic kind {self.kind!r}")
        if not self.lengths:
            raise ValueError("need at least one sequence length")
        if any(n < 8 for n in self.lengths):
            raise ValueError("sequence lengths must be >= 8")
        object.__setattr__(self, "lengths", tuple(int(n) for n in self.lengths))

    @classmethod
    def firm_like(cls, count: int, lengths: int | Sequence[int]) -> "SyntheticSpec":
        return cls(kind="firm_like", lengths=_expand_lengths(count, lengths))

    @classmethod
    def year_like(cls, count: int, lengths: int | Sequence[int]) -> "SyntheticSpec":
        return cls(kind="year_like", lengths=_expand_lengths(count, lengths))

    @property
    def count(self) -> int:
        return len(self.lengths)


def _expand_lengths(count: int, lengths: int | Sequence[int]) -> tuple[int, ...]:
    if count < 1:
        raise ValueError("count must be positive")
    if isinstance(lengths, int):
        return (lengths,) * count
    expanded = tuple(int(n) for n in lengths)
    if len(expanded) != count:
        raise ValueError(f"expected {count} lengths, got {len(expanded)}")
    return expanded


def shape_synthetic(
    spec: SyntheticSpec,
    generator: str = "pcg64",
    master_seed: int = 0,
    burn_in: int = 100,
) -> ExperimentStream:
    """Generate one sequence per spec entry, all from a single master seed.

    Sequence j uses PCG64 stream j (increment 2j+1); the logistic
    generator draws its per-sequence seed from that same stream, so both
    baselines reproduce exactly from (spec, generator, master_seed).
    """
    if generator not in ("pcg64", "logistic"):
        raise ValueError(f"unknown generator {generator!r}")
    kind = "firm_separated" if spec.kind == "firm_like" else "year_separated"
    sequences: list[BinarySequence] = []
    provenance: list[dict] = []
    for j, length in enumerate(spec.lengths):
        source_id = f"sim{j:05d}"
        gen = Pcg64.from_seed(master_seed, j)
        meta = {
            "source_id": source_id,
            "generator": generator,
            "master_seed": int(master_seed),
            "stream": j,
            "n_bits": int(length),
        }
        if generator == "pcg64":
            bits = gen.bit_array(length)
        else:
            seed = gen.next_uniform()
            while not 0.0 < seed < 1.0 or seed in LOGISTIC_FORBIDDEN:
                seed = gen.next_uniform()
            bits = LogisticGenerator(seed, burn_in=burn_in).bit_array(length)
            meta["seed"] = seed
            meta["burn_in"] = int(burn_in)
        sequences.append(BinarySequence(bits=bits, source_id=source_id))
        provenance.append(meta)
    return ExperimentStream(kind=kind, sequences=sequences, provenance=provenance)


class SelftestResult(NamedTuple):
    ok: bool
    first_mismatch: int | None
    message: str


def _load_reference_vectors() -> list[dict]:
    path = resources.files("marketrng").joinpath("data/pcg64_vectors.json")
    with path.open("r", encoding="utf-8") as handle:
        return json.load(handle)["cases"]


def rng_selftest(cases: list[dict] | None = None) -> SelftestResult:
    """Regenerate the stored reference vectors and compare word by word."""
    if cases is None:
        cases = _load_reference_vectors()
    for case in cases:
        gen = Pcg64.from_seed(int(case["seed"]), int(case["stream"]))
        expected = [int(word, 16) for word in case["outputs"]]
        for index, word in enumerate(expected):
            got = gen.next_u64()
            if got != word:
                return SelftestResult(
                    ok=False,
                    first_mismatch=index,
                    message=(
                        f"seed={case['seed']} stream={case['stream']} output {index}: "
                        f"expected {word:#018x}, got {got:#018x}"
                    ),
                )
    return SelftestResult(ok=True, first_mismatch=None, message="all reference vectors match")
