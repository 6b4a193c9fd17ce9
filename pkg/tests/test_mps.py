"""Matrix-product chains: amplitudes, dense expansion, correlators, evolution."""

from __future__ import annotations

import itertools

import numpy as np
import pytest

import oracles
from corrspace import tensor as tz
from corrspace.mps import (
    CorrelationState,
    MpsChain,
    amplitude,
    chain_norm_squared,
    cross_validate,
    evolve,
    expectation,
    pair_expectation,
    project_local,
    right_environments,
    to_statevector,
    two_point_correlation,
)
from corrspace.resources import aklt_type_chain, correlation_chain, projector_chain
from corrspace.tensor import g_gate, named_gate


def as_lists(chain: MpsChain):
    return [[m.tolist() for m in site] for site in chain.tensors]


def random_chain(rng, n=4, d=2, D=3) -> MpsChain:
    mats = [
        [rng.normal(size=(D, D)) + 1j * rng.normal(size=(D, D)) for _ in range(d)]
        for _ in range(n)
    ]
    L = rng.normal(size=D) + 1j * rng.normal(size=D)
    R = rng.normal(size=D) + 1j * rng.normal(size=D)
    return MpsChain(mats, L, R)


class TestChainConstruction:
    def test_shape_validation(self):
        with pytest.raises(ValueError):
            MpsChain([[np.eye(2), np.eye(3)]], np.ones(2), np.ones(2))
        with pytest.raises(ValueError):
            MpsChain([[np.eye(2)] * 2], np.ones(3), np.ones(2))
        with pytest.raises(ValueError):
            MpsChain([], np.ones(2), np.ones(2))

    def test_zero_boundary_rejected(self):
        with pytest.raises(ValueError):
            MpsChain([[np.eye(2)] * 2], np.zeros(2), np.ones(2))

    def test_uniform_properties(self):
        ch = correlation_chain(3, 5)
        assert (ch.n, ch.d, ch.D) == (5, 2, 2)
        ak = aklt_type_chain(4)
        assert (ak.n, ak.d, ak.D) == (4, 3, 2)


class TestAmplitude:
    def test_projector_chain(self):
        ch = projector_chain(4)
        assert amplitude(ch, (0, 0, 0, 0)) == pytest.approx(1.0)
        for outc in itertools.product(range(2), repeat=4):
            if any(outc):
                assert amplitude(ch, outc) == pytest.approx(0.0)

    def test_two_site_hand_product(self):
        # ⟨+|G⁻¹ · G|s₂⟩⟨s₂|G|s₁⟩⟨s₁|+⟩, written out by hand
        ch = correlation_chain(3, 2)
        g = g_gate(3)
        plus = np.array([1, 1], dtype=complex) / np.sqrt(2)
        for s1, s2 in itertools.product(range(2), repeat=2):
            e1 = np.eye(2)[s1]
            e2 = np.eye(2)[s2]
            want = (
                (np.linalg.inv(g) @ plus).conj()
                @ (np.outer(g @ e2, e2) @ np.outer(g @ e1, e1) @ plus)
            )
            assert amplitude(ch, (s1, s2)) == pytest.approx(want, abs=1e-12)

    @pytest.mark.parametrize("chain_fn,d,n", [
        (lambda: correlation_chain(3, 5), 2, 5),
        (lambda: aklt_type_chain(4), 3, 4),
    ])
    def test_against_path_sum_oracle(self, chain_fn, d, n):
        ch = chain_fn()
        mats = as_lists(ch)
        worst = 0.0
        for outc in itertools.product(range(d), repeat=n):
            got = amplitude(ch, outc)
            want = oracles.amplitude_path_sum(mats, list(ch.L), list(ch.R), outc)
            worst = max(worst, abs(got - want))
        assert worst < 1e-12

    def test_random_site_dependent_chain_oracle(self):
        ch = random_chain(np.random.default_rng(17))
        mats = as_lists(ch)
        for outc in itertools.product(range(2), repeat=4):
            got = amplitude(ch, outc)
            want = oracles.amplitude_path_sum(mats, list(ch.L), list(ch.R), outc)
            assert abs(got - want) < 1e-10 * max(1.0, abs(want))

    def test_input_validation(self):
        ch = correlation_chain(3, 3)
        with pytest.raises(ValueError):
            amplitude(ch, (0, 0))
        with pytest.raises(ValueError):
            amplitude(ch, (0, 0, 2))


class TestToStatevector:
    def test_matches_amplitude_everywhere(self):
        for ch, d in ((correlation_chain(3, 6), 2), (aklt_type_chain(4), 3)):
            state, norm = to_statevector(ch)
            assert norm > 0
            for i, outc in enumerate(itertools.product(range(d), repeat=ch.n)):
                assert state.amps[i] == pytest.approx(amplitude(ch, outc), abs=1e-12)

    def test_born_rule_closure(self):
        ch = aklt_type_chain(5)
        _, norm = to_statevector(ch)
        total = sum(
            abs(amplitude(ch, outc)) ** 2
            for outc in itertools.product(range(3), repeat=5)
        )
        assert total == pytest.approx(norm**2, rel=1e-10)
        assert chain_norm_squared(ch) == pytest.approx(norm**2, rel=1e-10)

    def test_normalize_flag(self):
        st, _ = to_statevector(correlation_chain(4, 4), normalize=True)
        assert st.norm() == pytest.approx(1.0)

    def test_cap_respected(self, monkeypatch):
        monkeypatch.setenv("CORRSPACE_CAP", "16")
        with pytest.raises(ValueError):
            to_statevector(correlation_chain(3, 5))


class TestProjectLocal:
    def test_plus_gives_g(self):
        ch = correlation_chain(5, 3)
        plus = np.array([1, 1], dtype=complex) / np.sqrt(2)
        a = project_local(ch, 0, plus)
        assert np.allclose(a * np.sqrt(2), g_gate(5), atol=1e-12)

    def test_minus_gives_gz(self):
        ch = correlation_chain(5, 3)
        minus = np.array([1, -1], dtype=complex) / np.sqrt(2)
        a = project_local(ch, 0, minus)
        assert np.allclose(a * np.sqrt(2), g_gate(5) @ tz.Z, atol=1e-12)

    def test_aklt_zero_gives_h(self):
        ch = aklt_type_chain(2)
        a = project_local(ch, 0, np.array([1, 0, 0], dtype=complex))
        assert np.allclose(a, tz.H, atol=1e-12)

    def test_conjugate_convention(self):
        # coefficients are ⟨φ|s⟩ = conj(φ_s)
        ch = aklt_type_chain(2)
        phi = np.array([1j, 0, 0], dtype=complex)
        a = project_local(ch, 0, phi)
        assert np.allclose(a, -1j * tz.H, atol=1e-12)

    def test_zero_vector_rejected(self):
        with pytest.raises(ValueError):
            project_local(correlation_chain(3, 2), 0, np.zeros(2))


class TestCorrelators:
    def test_k4_vanishes_beyond_one(self):
        ch = correlation_chain(4, 10)
        for r in range(2, 6):
            assert abs(two_point_correlation(ch, tz.Z, 2, r)) < 1e-9

    def test_k3_bulk_ratio(self):
        ch = correlation_chain(3, 12)
        corr = [two_point_correlation(ch, tz.Z, 3, r) for r in range(1, 6)]
        for prev, nxt in zip(corr, corr[1:]):
            assert abs(nxt / prev) == pytest.approx(0.5, abs=1e-6)

    def test_signed_ratio_is_cos(self):
        # the signed one-step factor is cos(2π/k); for k=3 that is −1/2
        ch = correlation_chain(3, 10)
        c1 = two_point_correlation(ch, tz.Z, 3, 1)
        c2 = two_point_correlation(ch, tz.Z, 3, 2)
        assert c2 / c1 == pytest.approx(np.cos(2 * np.pi / 3), abs=1e-9)

    def test_product_chain_uncorrelated(self):
        ch = projector_chain(6)
        for r in range(1, 4):
            assert abs(two_point_correlation(ch, tz.Z, 1, r)) < 1e-12

    def test_matches_dense_oracle(self):
        ch = correlation_chain(5, 8)
        st, _ = to_statevector(ch, normalize=True)
        for r in (1, 2, 3):
            want = oracles.zz_correlator(list(st.amps), 8, 2, 2 + r)
            got = two_point_correlation(ch, tz.Z, 2, r)
            assert got == pytest.approx(want, abs=1e-10)

    def test_hermiticity_required(self):
        with pytest.raises(ValueError):
            two_point_correlation(correlation_chain(3, 4), np.array([[0, 1], [0, 0]]), 0, 1)

    def test_range_checked(self):
        with pytest.raises(ValueError):
            two_point_correlation(correlation_chain(3, 4), tz.Z, 2, 3)


class TestEvolve:
    def test_inverse_pair_returns_to_start(self):
        g = g_gate(3)
        state = CorrelationState(np.array([1, 1], dtype=complex) / np.sqrt(2))
        state = evolve(state, g @ tz.Z)
        state = evolve(state, tz.Z @ np.linalg.inv(g))
        ratio = state.vec / (np.array([1, 1]) / np.sqrt(2))
        assert np.allclose(ratio, ratio[0], atol=1e-12)

    def test_chained_evolution_matches_amplitude(self):
        # Eq.-style identity: evolving by A[φ_i] then overlapping with R equals
        # the product-basis amplitude of the projected pattern
        ch = aklt_type_chain(3)
        rng = np.random.default_rng(9)
        kets = [rng.normal(size=3) + 1j * rng.normal(size=3) for _ in range(3)]
        state = CorrelationState(ch.L)
        for i, phi in enumerate(kets):
            state = evolve(state, project_local(ch, i, phi))
        via_corr = complex(np.vdot(ch.R, state.vec))
        # dense route: amplitude as overlap of ⊗φ_i with the expanded state
        dense, _ = to_statevector(ch)
        bra = np.array([1.0 + 0j])
        for phi in kets:
            bra = np.kron(bra, phi)
        via_dense = complex(bra.conj() @ dense.amps)
        assert via_corr == pytest.approx(via_dense, abs=1e-10)

    def test_z_projector_collapses_correlation_state(self):
        ch = correlation_chain(3, 2)
        state = CorrelationState(ch.L)
        ket0 = np.array([1, 0], dtype=complex)
        after = evolve(state, project_local(ch, 0, ket0))
        # A[0] = G|0⟩⟨0| so the correlation state lands on the G|0⟩ ray
        assert abs(np.vdot(g_gate(3) @ ket0, after.vec)) == pytest.approx(
            np.linalg.norm(after.vec), abs=1e-12
        )

    def test_log_grows(self):
        state = CorrelationState(np.array([1, 0], dtype=complex))
        state = evolve(state, tz.H)
        state = evolve(state, tz.Z)
        assert len(state.log) == 2


class TestEnvironments:
    def test_right_environments_of_unitary_family(self):
        # A[s] = G|s⟩⟨s| keeps only the diagonal of G†σG, which preserves the
        # trace, so every interior environment is exactly 𝟙/2 — the reason
        # each single-site branch of the chain has probability 1/2
        ch = correlation_chain(6, 5)
        sigmas = right_environments(ch)
        for j in range(ch.n):
            assert np.allclose(sigmas[j], 0.5 * np.eye(2), atol=1e-12)
        assert np.allclose(sigmas[ch.n], np.outer(ch.R, ch.R.conj()), atol=1e-12)

    def test_environment_reproduces_norm(self):
        ch = aklt_type_chain(4)
        sigmas = right_environments(ch)
        norm2 = float(np.real(np.vdot(ch.L, sigmas[0] @ ch.L)))
        assert norm2 == pytest.approx(chain_norm_squared(ch), rel=1e-12)

    def test_cross_validate_runs(self):
        report = cross_validate(correlation_chain(3, 5))
        assert report["consistent"]
        assert report["max_amplitude_deviation"] < 1e-12
        assert report["max_projection_deviation"] < 1e-10


class TestExpectationHelpers:
    def test_single_site_expectation(self):
        st, _ = to_statevector(correlation_chain(3, 4), normalize=True)
        val = expectation(st, tz.Z, 1)
        probs = oracles.site_marginal(list(st.amps), [2] * 4, 1)
        assert val == pytest.approx(probs[0] - probs[1], abs=1e-12)

    def test_pair_expectation_consistency(self):
        st, _ = to_statevector(correlation_chain(5, 5), normalize=True)
        got = pair_expectation(st, tz.Z, 1, 3)
        conn = oracles.zz_correlator(list(st.amps), 5, 1, 3)
        ei = expectation(st, tz.Z, 1)
        ej = expectation(st, tz.Z, 3)
        assert got == pytest.approx(conn + ei * ej, abs=1e-12)
