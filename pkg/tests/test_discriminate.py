"""Tests for marker decoding and the adaptive two-state discrimination protocol."""
from __future__ import annotations

import itertools

import numpy as np
import pytest

from corrspace.discriminate import (
    decode_marker,
    logical_born_probability,
    logical_states,
    walgate_discriminate,
)
from corrspace.resources import (
    EncodedResourceSpec,
    cluster_state,
    codeword_state,
    encoded_component,
)
from corrspace.statevec import PureState


def rotate(base, t):
    blk = len(base)
    out = [0] * blk
    for j, bit in enumerate(base):
        out[(j + t) % blk] = bit
    return out


class TestDecodeMarker:
    @pytest.mark.parametrize("c", [0, 1])
    def test_unshifted_k1_block(self, c):
        assert decode_marker([c, 0, 1], 1) == 0

    @pytest.mark.parametrize("t", range(5))
    @pytest.mark.parametrize("code", [(0, 0), (1, 0), (0, 1)])
    def test_all_k2_shifts_decode(self, t, code):
        base = [*code, 0, 0, 1]
        assert decode_marker(rotate(base, t), 2) == t

    def test_marker_position_is_unique(self):
        # k zeros followed by a 1 cannot occur twice cyclically in a block of
        # length 2k+1, so every decodable block decodes unambiguously
        for bits in itertools.product([0, 1], repeat=5):
            try:
                t = decode_marker(list(bits), 2)
            except ValueError as err:
                assert "found 0 times" in str(err)
            else:
                assert 0 <= t < 5

    def test_invalid_branches_rejected(self):
        with pytest.raises(ValueError, match="found 0 times"):
            decode_marker([0, 0, 0], 1)
        with pytest.raises(ValueError, match="found 0 times"):
            decode_marker([1, 1, 1], 1)

    def test_input_validation(self):
        with pytest.raises(ValueError, match="expected 3 outcomes"):
            decode_marker([0, 1], 1)
        with pytest.raises(ValueError, match="bits"):
            decode_marker([0, 2, 1], 1)


class TestLogicalStates:
    def test_orthonormal_pair(self):
        ref0, ref1 = logical_states((0.6, 0.8j), 2)
        assert np.linalg.norm(ref0) == pytest.approx(1.0, abs=1e-12)
        assert np.linalg.norm(ref1) == pytest.approx(1.0, abs=1e-12)
        assert abs(np.vdot(ref0, ref1)) < 1e-12
        assert np.allclose(ref0, 0.6 * codeword_state(2, 0) + 0.8j * codeword_state(2, 1))

    def test_zero_state_rejected(self):
        with pytest.raises(ValueError, match="zero logical state"):
            logical_states((0, 0), 2)


class TestWalgate:
    def test_k1_reduces_to_direct_measurement(self):
        comp = encoded_component(EncodedResourceSpec(1, 1))  # logical |+⟩
        psi = (0.6, 0.8)
        branches = walgate_discriminate(comp, [0], psi)
        p0 = sum(b.probability for b in branches if b.logical_outcome == 0)
        # ⟨ψ|+⟩ = (0.6+0.8)/√2 → p = 0.98
        assert p0 == pytest.approx(0.98, abs=1e-12)
        assert sum(b.probability for b in branches) == pytest.approx(1.0, abs=1e-12)

    def test_deterministic_when_state_is_a_reference(self):
        comp = encoded_component(EncodedResourceSpec(1, 1))
        plus = (1 / np.sqrt(2), 1 / np.sqrt(2))
        branches = walgate_discriminate(comp, [0], plus)
        assert all(b.logical_outcome == 0 for b in branches)
        minus = (1 / np.sqrt(2), -1 / np.sqrt(2))
        branches = walgate_discriminate(comp, [0], minus)
        assert all(b.logical_outcome == 1 for b in branches)

    def test_post_state_drops_the_measured_site(self):
        comp = encoded_component(EncodedResourceSpec(1, 1))
        zeros = [
            b for b in walgate_discriminate(comp, [0], (1, 0)) if b.logical_outcome == 0
        ]
        for b in zeros:
            assert b.post_state.dims == (2, 2)
            assert np.allclose(np.abs(b.post_state.amps), [0, 1, 0, 0])  # markers |01⟩

    @pytest.mark.parametrize(
        "psi", [(1, 0), (0.3 - 0.4j, 0.5 + 0.7j), (0.9, 0.1j), (0.2, 0.8)]
    )
    def test_two_site_statistics_match_logical_born(self, psi):
        comp = encoded_component(EncodedResourceSpec(2, 1))
        branches = walgate_discriminate(comp, [0, 1], psi)
        p0 = sum(b.probability for b in branches if b.logical_outcome == 0)
        assert p0 == pytest.approx(
            logical_born_probability(cluster_state(1, ()), 0, psi), abs=1e-9
        )
        assert sum(b.probability for b in branches) == pytest.approx(1.0, abs=1e-12)

    def test_post_states_equal_logical_projection(self):
        # every logical-0 transcript leaves the same physical state: the
        # codeword-projected component (Kraus |ψ⟩⟨ψ| on the logical qubit)
        spec = EncodedResourceSpec(2, 2)
        comp = encoded_component(spec)
        a, b = 0.6, 0.8j
        code_ket = a * codeword_state(2, 0) + b * codeword_state(2, 1)
        tail = code_ket.conj() @ comp.normalized().tensor().reshape(4, -1)
        tail = tail / np.linalg.norm(tail)
        zeros = [
            br
            for br in walgate_discriminate(comp, [0, 1], (a, b))
            if br.logical_outcome == 0
        ]
        assert len(zeros) >= 2  # distinct transcripts, identical result
        for br in zeros:
            assert abs(np.vdot(br.post_state.amps, tail)) > 1 - 1e-9

    def test_transcript_bases_are_unitary(self):
        comp = encoded_component(EncodedResourceSpec(2, 1))
        for br in walgate_discriminate(comp, [0, 1], (0.3, 0.95)):
            for _site, u, outcome in br.transcript:
                assert np.allclose(u @ u.conj().T, np.eye(2), atol=1e-10)
                assert outcome in (0, 1)

    def test_force_replays_one_branch(self):
        comp = encoded_component(EncodedResourceSpec(2, 1))
        psi = (0.3 - 0.4j, 0.5 + 0.7j)
        enum = walgate_discriminate(comp, [0, 1], psi)
        target = enum[1]
        forced = walgate_discriminate(
            comp, [0, 1], psi, mode="force",
            force=[o for _s, _u, o in target.transcript],
        )
        assert len(forced) == 1
        assert forced[0].probability == pytest.approx(target.probability, abs=1e-12)
        assert forced[0].logical_outcome == target.logical_outcome

    def test_sample_mode(self):
        comp = encoded_component(EncodedResourceSpec(2, 1))
        psi = (0.6, 0.8)
        one = walgate_discriminate(comp, [0, 1], psi, mode="sample", rng=np.random.default_rng(3))
        assert len(one) == 1
        again = walgate_discriminate(comp, [0, 1], psi, mode="sample", rng=np.random.default_rng(3))
        assert one[0].logical_outcome == again[0].logical_outcome
        assert one[0].probability == pytest.approx(again[0].probability, abs=1e-15)

    def test_mode_validation(self):
        comp = encoded_component(EncodedResourceSpec(1, 1))
        with pytest.raises(ValueError, match="unknown mode"):
            walgate_discriminate(comp, [0], (1, 0), mode="guess")
        with pytest.raises(ValueError, match="rng"):
            walgate_discriminate(comp, [0], (1, 0), mode="sample")
        with pytest.raises(ValueError, match="one outcome per block site"):
            walgate_discriminate(comp, [0], (1, 0), mode="force", force=[0, 1])

    def test_rejects_non_qubit_sites(self):
        qutrit = PureState((3,), np.array([1, 0, 0], dtype=complex))
        with pytest.raises(ValueError, match="qubits"):
            walgate_discriminate(qutrit, [0], (1, 0))


class TestLogicalBorn:
    def test_single_qubit_projection(self):
        plus = cluster_state(1, ())
        assert logical_born_probability(plus, 0, (1, 0)) == pytest.approx(0.5)
        assert logical_born_probability(plus, 0, (1, 1)) == pytest.approx(1.0)
        assert logical_born_probability(plus, 0, (1, -1)) == pytest.approx(0.0, abs=1e-12)

    def test_two_qubit_cluster_marginal_is_mixed(self):
        base = cluster_state(2, [(0, 1)])
        for psi in [(1, 0), (0.6, 0.8), (1, 1j)]:
            assert logical_born_probability(base, 0, psi) == pytest.approx(0.5, abs=1e-12)

    def test_normalizes_psi(self):
        plus = cluster_state(1, ())
        assert logical_born_probability(plus, 0, (2, 2)) == pytest.approx(1.0)
