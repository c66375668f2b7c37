"""RNG baselines: PCG64 bit-exactness, logistic map, synthetic shaping."""

import json

import numpy as np
import pytest

from marketrng.rng import (
    LogisticGenerator,
    LogisticState,
    Pcg64,
    Pcg64State,
    SyntheticSpec,
    logistic_bits,
    pcg64_bits,
    pcg64_next,
    rng_selftest,
    shape_synthetic,
)
from marketrng.serial import psi_profile

MOD = 2**128
MULT = 47026247687942121848144207491837523525  # same constant, decimal spelling


def reference_pcg64(initstate, initseq, count):
    """Independent in-test implementation of the XSL-RR 128/64 generator."""
    inc = (2 * initseq + 1) % MOD
    state = inc % MOD
    state = (state + initstate) % MOD
    state = (state * MULT + inc) % MOD
    out = []
    for _ in range(count):
        state = (state * MULT + inc) % MOD
        xored = (state >> 64) ^ (state % 2**64)
        rot = state >> 122
        out.append(((xored >> rot) | (xored << (64 - rot))) % 2**64 if rot else xored)
    return out


class TestPcg64Core:
    def test_state_validation(self):
        with pytest.raises(ValueError):
            Pcg64State(state=0, increment=2)  # even increment
        with pytest.raises(ValueError):
            Pcg64State(state=2**128, increment=1)

    def test_next_is_pure_and_deterministic(self):
        state = Pcg64State.seeded(42, 54)
        out1, new1 = pcg64_next(state)
        out2, new2 = pcg64_next(state)
        assert out1 == out2 and new1 == new2
        assert state == Pcg64State.seeded(42, 54)

    def test_same_seed_same_stream(self):
        a = Pcg64.from_seed(123, 7)
        b = Pcg64.from_seed(123, 7)
        assert [a.next_u64() for _ in range(50)] == [b.next_u64() for _ in range(50)]

    def test_matches_independent_reference(self):
        for seed, stream in ((42, 54), (0, 0), (2**96 + 5, 3)):
            gen = Pcg64.from_seed(seed, stream)
            got = [gen.next_u64() for _ in range(32)]
            assert got == reference_pcg64(seed, stream, 32)

    def test_fixture_vectors_match_reference(self):
        from marketrng.rng import _load_reference_vectors

        for case in _load_reference_vectors():
            expected = [int(word, 16) for word in case["outputs"]]
            assert expected == reference_pcg64(
                int(case["seed"]), int(case["stream"]), len(expected)
            )

    def test_matches_numpy_bit_generator(self):
        state = Pcg64State.seeded(42, 54)
        bg = np.random.PCG64()
        raw = bg.state
        raw["state"] = {"state": state.state, "inc": state.increment}
        bg.state = raw
        gen = Pcg64(state)
        assert [gen.next_u64() for _ in range(500)] == [int(w) for w in bg.random_raw(500)]

    def test_distinct_streams_diverge_quickly(self):
        a = Pcg64.from_seed(42, 0)
        b = Pcg64.from_seed(42, 1)
        outs_a = [a.next_u64() for _ in range(16)]
        outs_b = [b.next_u64() for _ in range(16)]
        assert outs_a != outs_b

    def test_step_is_injective_on_sampled_states(self):
        rng = np.random.default_rng(77)
        inc = 2 * 987654321 + 1
        states = {int.from_bytes(rng.bytes(16), "big") for _ in range(500)}
        successors = {
            pcg64_next(Pcg64State(state=s, increment=inc))[1].state for s in states
        }
        assert len(successors) == len(states)


class TestPcg64Bits:
    def test_one_word_exactly(self):
        seq = pcg64_bits(Pcg64State.seeded(9, 1), 64)
        word = Pcg64.from_seed(9, 1).next_u64()
        expected = [(word >> (63 - i)) & 1 for i in range(64)]
        assert seq.bits.tolist() == expected

    def test_sixty_five_bits(self):
        seq = pcg64_bits(Pcg64State.seeded(9, 1), 65)
        gen = Pcg64.from_seed(9, 1)
        first, second = gen.next_u64(), gen.next_u64()
        assert seq.bits[:64].tolist() == [(first >> (63 - i)) & 1 for i in range(64)]
        assert seq.bits[64] == (second >> 63) & 1

    def test_prefix_property(self):
        for k in (1, 63, 64, 65, 200):
            short = pcg64_bits(Pcg64State.seeded(5, 5), k)
            longer = pcg64_bits(Pcg64State.seeded(5, 5), k + 1)
            assert longer.bits[:k].tolist() == short.bits.tolist()

    def test_ones_fraction(self):
        seq = pcg64_bits(Pcg64State.seeded(1234, 0), 1_000_000)
        assert abs(seq.bits.mean() - 0.5) < 0.002

    def test_invalid_length(self):
        with pytest.raises(ValueError):
            pcg64_bits(Pcg64State.seeded(1, 1), 0)


class TestLogistic:
    @pytest.mark.parametrize("seed", [0.0, 0.25, 0.5, 0.75, 1.0, -0.1, 1.5])
    def test_invalid_seeds_rejected(self, seed):
        with pytest.raises(ValueError):
            logistic_bits(seed, 10)

    def test_deterministic(self):
        a = logistic_bits(0.123456, 500, burn_in=100)
        b = logistic_bits(0.123456, 500, burn_in=100)
        assert a.bits.tolist() == b.bits.tolist()

    def test_bits_are_binary_and_roughly_balanced(self):
        bits = logistic_bits(0.3141592653589793, 20_000).bits
        assert set(np.unique(bits)) <= {0, 1}
        assert abs(bits.mean() - 0.5) < 0.02

    def test_state_validation(self):
        with pytest.raises(ValueError):
            LogisticState(x=0.0)
        with pytest.raises(ValueError):
            LogisticState(x=1.0)

    def test_absorbing_fixed_point_triggers_reseed(self):
        gen = LogisticGenerator(0.2, burn_in=0)
        gen.state = LogisticState(x=0.75)  # exact fixed point of the map
        before = gen.reseeds
        x = gen._advance()
        assert gen.reseeds == before + 1
        assert 0.0 < x < 1.0 and x != 0.75

    def test_endpoint_cascade_triggers_reseed(self):
        gen = LogisticGenerator(0.2, burn_in=0)
        gen.state = LogisticState(x=0.5)  # maps to exactly 1.0
        before = gen.reseeds
        x = gen._advance()
        assert gen.reseeds == before + 1
        assert 0.0 < x < 1.0

    def test_reseed_path_is_deterministic(self):
        def run():
            gen = LogisticGenerator(0.2, burn_in=0)
            gen.state = LogisticState(x=0.75)
            return gen.bit_array(100).tolist()

        assert run() == run()

    def test_negative_burn_in_rejected(self):
        with pytest.raises(ValueError):
            LogisticGenerator(0.3, burn_in=-1)

    def test_combined_chi2_comparison_frozen_run(self):
        # Frozen comparative run: with this spec and master seed the
        # logistic battery's combined chi-square at window size 8 exceeds
        # the PCG64 baseline's.  The margin is configuration-specific:
        # in exact arithmetic the thresholded r=4 map is equivalent to
        # fair coin flips, so only floating-point artifacts separate the
        # two generators and the gap at desk scale is small.
        spec = SyntheticSpec.firm_like(150, 600)
        pcg_total = sum(
            psi_profile(s, max_nu=8).d2[8]
            for s in shape_synthetic(spec, "pcg64", master_seed=4).sequences
        )
        logistic_total = sum(
            psi_profile(s, max_nu=8).d2[8]
            for s in shape_synthetic(spec, "logistic", master_seed=4).sequences
        )
        assert pcg_total == pytest.approx(9505.82, abs=0.5)
        assert logistic_total == pytest.approx(9649.46, abs=0.5)
        assert logistic_total > pcg_total


class TestShapeSynthetic:
    def test_firm_like_counts_and_lengths(self):
        stream = shape_synthetic(SyntheticSpec.firm_like(10, 227), master_seed=1)
        assert stream.kind == "firm_separated"
        assert len(stream.sequences) == 10
        assert all(len(s) == 227 for s in stream.sequences)

    def test_year_like_variable_lengths(self):
        lengths = [24, 36, 48]
        stream = shape_synthetic(SyntheticSpec.year_like(3, lengths), master_seed=1)
        assert stream.kind == "year_separated"
        assert [len(s) for s in stream.sequences] == lengths

    def test_master_seed_reproducibility(self):
        spec = SyntheticSpec.firm_like(5, 100)
        a = shape_synthetic(spec, master_seed=99)
        b = shape_synthetic(spec, master_seed=99)
        assert all(
            x.bits.tolist() == y.bits.tolist() for x, y in zip(a.sequences, b.sequences)
        )
        assert json.dumps(a.provenance) == json.dumps(b.provenance)

    def test_streams_fan_out_from_master_seed(self):
        # Sequence j runs on PCG stream j, i.e. increment 2j + 1.
        spec = SyntheticSpec.firm_like(3, 64)
        stream = shape_synthetic(spec, master_seed=7)
        for j, seq in enumerate(stream.sequences):
            expected = pcg64_bits(Pcg64State.seeded(7, j), 64)
            assert seq.bits.tolist() == expected.bits.tolist()
            assert stream.provenance[j]["stream"] == j

    def test_logistic_provenance_records_seed(self):
        stream = shape_synthetic(
            SyntheticSpec.firm_like(2, 32), generator="logistic", master_seed=3
        )
        for meta in stream.provenance:
            assert 0.0 < meta["seed"] < 1.0
            assert meta["burn_in"] == 100

    def test_minimum_length(self):
        with pytest.raises(ValueError):
            SyntheticSpec.firm_like(2, 7)

    def test_unknown_generator(self):
        with pytest.raises(ValueError):
            shape_synthetic(SyntheticSpec.firm_like(1, 16), generator="mt19937")


class TestSelftest:
    def test_intact_build_passes(self):
        result = rng_selftest()
        assert result.ok and result.first_mismatch is None

    def test_single_bit_perturbation_fails(self):
        from marketrng.rng import _load_reference_vectors

        cases = json.loads(json.dumps(_load_reference_vectors()))
        word = int(cases[0]["outputs"][3], 16) ^ 1  # flip the lowest bit
        cases[0]["outputs"][3] = f"{word:#018x}"
        result = rng_selftest(cases)
        assert not result.ok
        assert result.first_mismatch == 3
        assert "output 3" in result.message
