"""Tests for single-qubit compilation and the adaptive execution engine."""
from __future__ import annotations

import numpy as np
import pytest

from corrspace.compile import (
    CompiledPattern,
    aklt_branch,
    chain_product,
    compile_single_qubit,
    conjugated_phase,
    euler_two_axis,
    euler_zxz,
    execute_compiled,
    pauli_h_group,
    to_su2,
    word_operator,
    zxz_matrix,
)
from corrspace.bases import BasisSpec
from corrspace.mps import project_local
from corrspace.protocols import run_pattern
from corrspace.resources import aklt_type_chain, correlation_chain
from corrspace.tensor import H, S, X, Z, g_gate, phase_gate, proportional_up_to_phase


def haar_unitaries(count, seed=0):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        z = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        q, r = np.linalg.qr(z)
        out.append(q @ np.diag(np.exp(1j * np.angle(np.diag(r)))))
    return out


def unit(m):
    return m / np.linalg.norm(m)


def assert_prop(a, b, tol=1e-9):
    assert proportional_up_to_phase(unit(a), unit(b), tol) is not None


class TestEulerForms:
    def test_to_su2_fixes_determinant(self):
        su = to_su2(np.exp(0.4j) * H)
        assert np.linalg.det(su) == pytest.approx(1.0, abs=1e-12)
        assert_prop(su, H)

    def test_to_su2_validation(self):
        with pytest.raises(ValueError, match="2x2"):
            to_su2(np.eye(3))
        with pytest.raises(ValueError, match="unitary"):
            to_su2(np.array([[1, 1], [0, 1]], dtype=complex))

    @pytest.mark.parametrize("u", haar_unitaries(8, seed=1))
    def test_zxz_angles_reconstruct(self, u):
        a, b, c = euler_zxz(u)
        assert_prop(zxz_matrix(a, b, c), u, tol=1e-10)

    def test_zxz_degenerate_targets(self):
        a, b, c = euler_zxz(phase_gate(0.7))
        assert (b, c) == (0.0, 0.0)
        assert_prop(zxz_matrix(a, b, c), phase_gate(0.7), tol=1e-10)
        a, b, c = euler_zxz(X)
        assert b == pytest.approx(np.pi)
        assert_prop(zxz_matrix(a, b, c), X, tol=1e-10)

    def test_zxz_matrix_is_the_literal_product(self):
        assert np.allclose(
            zxz_matrix(0.2, 0.3, 0.4),
            phase_gate(0.2) @ H @ phase_gate(0.3) @ H @ phase_gate(0.4),
        )

    def test_chain_product_order(self):
        k = 5
        a, b, c = 0.2, 0.9, -0.4
        expect = phase_gate(c) @ conjugated_phase(b, k) @ phase_gate(a)
        assert np.allclose(chain_product([a, b, c], k), expect)
        assert np.allclose(chain_product([a], k), phase_gate(a))

    def test_conjugated_phase(self):
        k = 4
        g = g_gate(k)
        assert np.allclose(conjugated_phase(0.6, k), np.linalg.inv(g) @ phase_gate(0.6) @ g)


class TestTwoAxisDecomposition:
    @pytest.mark.parametrize("u", haar_unitaries(6, seed=2))
    def test_generic_targets_k5(self, u):
        angles = euler_two_axis(u, 5)
        assert_prop(chain_product(angles, 5), u, tol=1e-8)

    def test_closed_form_for_small_off_diagonal(self):
        # |u01| = 0 ≤ sin(2π/k): three angles suffice
        angles = euler_two_axis(phase_gate(1.2), 3)
        assert len(angles) == 3
        assert_prop(chain_product(angles, 3), phase_gate(1.2), tol=1e-10)

    def test_fallback_for_wide_rotation(self):
        # at k=9 the axes subtend 40° < 90°, so X needs a longer product
        angles = euler_two_axis(X, 9)
        assert len(angles) > 3
        assert_prop(chain_product(angles, 9), X, tol=1e-7)


class TestCompilation:
    def test_phase_target_is_single_step(self):
        comp = compile_single_qubit(phase_gate(0.7), "correlation_chain", k=5)
        (step,) = comp.pattern.steps
        assert step.basis.kind == "Phase"
        assert step.basis.phi == pytest.approx(-0.7)
        assert comp.designated_outcomes == (0,)
        assert comp.designated_byproduct == ("G",)

    def test_phase_target_on_spin1(self):
        comp = compile_single_qubit(phase_gate(0.7), "aklt")
        (step,) = comp.pattern.steps
        assert step.basis.kind == "AkltPhase"
        assert step.basis.phi == pytest.approx(-0.7)
        assert comp.designated_outcomes == (1,)
        assert comp.designated_byproduct == ("X",)

    def test_hadamard_target_uses_the_h_branch(self):
        comp = compile_single_qubit(H, "aklt")
        (step,) = comp.pattern.steps
        assert step.basis == BasisSpec("AkltPhase", phi=0.0)
        assert comp.designated_outcomes == (0,)
        assert comp.designated_byproduct == ()

    def test_identity_compiles_to_nothing(self):
        assert compile_single_qubit(np.eye(2), "aklt").pattern.steps == ()

    def test_validation(self):
        with pytest.raises(ValueError, match="unknown family"):
            compile_single_qubit(H, "chain_of_command")
        with pytest.raises(ValueError, match="k > 2"):
            compile_single_qubit(H, "correlation_chain")
        with pytest.raises(ValueError, match="k > 2"):
            compile_single_qubit(H, "correlation_chain", k=2)
        with pytest.raises(ValueError, match="unitary"):
            compile_single_qubit(np.array([[1, 1], [0, 1]]), "aklt")

    @pytest.mark.parametrize("u", haar_unitaries(4, seed=3))
    def test_designated_fold_on_chain(self, u):
        comp = compile_single_qubit(u, "correlation_chain", k=5)
        chain = correlation_chain(5, len(comp.pattern.steps) + 1)
        rec = run_pattern(
            chain, comp.pattern, mode="force", outcomes=list(comp.designated_outcomes)
        )
        assert_prop(rec.realized_op, word_operator(comp.designated_byproduct, 5) @ u)

    @pytest.mark.parametrize("u", haar_unitaries(4, seed=4))
    def test_designated_fold_on_spin1(self, u):
        comp = compile_single_qubit(u, "aklt")
        chain = aklt_type_chain(len(comp.pattern.steps) + 2)
        rec = run_pattern(
            chain, comp.pattern, mode="force", outcomes=list(comp.designated_outcomes)
        )
        assert_prop(rec.realized_op, word_operator(comp.designated_byproduct) @ u)


class TestBranchOperators:
    @pytest.mark.parametrize("phi", [0.0, 0.9, -1.7])
    def test_aklt_branch_matches_projection(self, phi):
        chain = aklt_type_chain(3)
        basis = BasisSpec("AkltPhase", phi=phi)
        for o in range(3):
            assert np.allclose(
                aklt_branch(phi, o), project_local(chain, 1, basis.vectors[o]), atol=1e-12
            )

    def test_aklt_branch_gate_content(self):
        phi = 0.8
        assert np.allclose(aklt_branch(phi, 0), H)
        assert_prop(aklt_branch(phi, 1), phase_gate(phi) @ X)
        assert_prop(aklt_branch(phi, 2), Z @ phase_gate(phi) @ X)


class TestExecution:
    @pytest.mark.parametrize("u", haar_unitaries(5, seed=5))
    def test_forced_runs_realize_targets_exactly(self, u):
        for family, k in (("correlation_chain", 5), ("aklt", None)):
            comp = compile_single_qubit(u, family, k=k)
            result = execute_compiled(comp, mode="force")
            assert result.residual(u) < 1e-9
            assert result.sites_used == len(result.outcomes)

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_sampled_runs_compensate_to_target(self, seed):
        u = haar_unitaries(1, seed=100 + seed)[0]
        for family, k in (("correlation_chain", 5), ("aklt", None)):
            comp = compile_single_qubit(u, family, k=k)
            result = execute_compiled(comp, mode="sample", seed=seed)
            assert result.residual(u) < 1e-9

    def test_sampling_is_seed_deterministic(self):
        comp = compile_single_qubit(haar_unitaries(1, seed=9)[0], "aklt")
        a = execute_compiled(comp, mode="sample", seed=4)
        b = execute_compiled(comp, mode="sample", seed=4)
        assert a.outcomes == b.outcomes
        assert a.bases == b.bases

    def test_identity_needs_no_sites(self):
        comp = compile_single_qubit(np.eye(2), "correlation_chain", k=4)
        result = execute_compiled(comp, mode="force")
        assert result.sites_used == 0
        assert result.residual(np.eye(2)) < 1e-12

    def test_mode_validation(self):
        comp = compile_single_qubit(H, "aklt")
        with pytest.raises(ValueError, match="force or sample"):
            execute_compiled(comp, mode="enumerate")
        with pytest.raises(ValueError, match="seed"):
            execute_compiled(comp, mode="sample")

    def test_step_budget_enforced(self):
        comp = compile_single_qubit(H, "aklt")
        with pytest.raises(RuntimeError, match="budget"):
            execute_compiled(comp, mode="force", max_steps=0)

    def test_residual_detects_wrong_operator(self):
        comp = compile_single_qubit(H, "aklt")
        result = execute_compiled(comp, mode="force")
        assert result.residual(H) < 1e-12
        assert result.residual(S) > 0.1


class TestWordsAndGroups:
    def test_word_operator_order(self):
        assert np.allclose(word_operator(["H", "Z"]), H @ Z)
        assert np.allclose(word_operator(["G", "Z"], k=4), g_gate(4) @ Z)
        assert np.allclose(word_operator([]), np.eye(2))

    def test_pauli_h_group_cached(self):
        g = pauli_h_group()
        assert g.order == 8
        assert pauli_h_group() is g
