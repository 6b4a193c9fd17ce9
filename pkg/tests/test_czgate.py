"""Tests for the windowed logical-CZ protocol on the three-row lattice."""
from __future__ import annotations

import numpy as np
import pytest

from corrspace import tensor as tz
from corrspace.bases import x_basis, y_basis, z_basis
from corrspace.czgate import (
    CZ4,
    WgsFrontierSim,
    attempt_anchors,
    branch_probability_scan,
    byproduct_factors,
    clifford_group,
    clifford_word,
    decompose_realized,
    enumerate_branches,
    factorize_local,
    fresh_sites,
    logical_cz,
    site_basis,
    tag_word,
    window_columns,
)
from corrspace.resources import wgs_network_state


def realized_matches(record) -> float:
    """Deviation between the contracted operator and its by-product model."""
    f = byproduct_factors(record.byproduct)
    model = np.kron(f["u"], f["l"])
    if record.outcomes["success"]:
        model = model @ CZ4
    model = model @ np.kron(f["u_in"], f["l_in"])
    m, mo = record.realized_op.ravel(), model.ravel()
    i = int(np.argmax(np.abs(mo)))
    return float(np.max(np.abs(m / m[i] * mo[i] - mo)))


class TestSchedule:
    def test_window_columns(self):
        assert window_columns(4) == (3, 4, 5)

    def test_attempt_anchors(self):
        assert attempt_anchors(9, 1) == [1, 4, 7]
        assert attempt_anchors(3, 1) == [1]
        assert attempt_anchors(6, 1) == [1, 4]
        assert attempt_anchors(9, 2) == [2, 5]  # anchor 8 would need column 9
        assert attempt_anchors(3, 4) == []

    def test_anchor_needs_left_column(self):
        with pytest.raises(ValueError, match="left"):
            attempt_anchors(9, 0)

    def test_fresh_sites_skip_the_central_mediator(self):
        sites = fresh_sites(1)
        assert len(sites) == 8
        assert (1, 1) not in sites
        assert set(sites) == {(r, c) for c in (0, 1, 2) for r in range(3)} - {(1, 1)}

    def test_site_bases(self):
        assert site_basis((0, 5)).kind == "X"
        assert site_basis((2, 0)).kind == "X"
        assert site_basis((1, 3)).kind == "Z"
        assert site_basis((1, 4), central_success=True).kind == "Y"
        assert site_basis((1, 4), central_success=False).kind == "Z"


class TestFrontierSim:
    def test_designated_branch_matches_dense_born(self):
        # project the full 3×3 weighted-graph state on every outcome-0 basis ket
        psi = wgs_network_state(3, 3)
        amps = psi.amps.reshape((2,) * 9)
        val = amps
        for r in range(3):
            for c in range(3):
                if r == 1:
                    basis = y_basis() if c == 1 else z_basis()
                else:
                    basis = x_basis()
                val = np.tensordot(np.conj(basis.vectors[0]), val, axes=([0], [0]))
        dense_p = abs(complex(val)) ** 2

        rec = logical_cz(WgsFrontierSim(cols=3), mode="force", outcomes="designated")
        assert rec.probability == pytest.approx(dense_p, abs=1e-12)
        assert rec.probability == pytest.approx(2**-8, abs=1e-15)

    def test_lattice_shape_validation(self):
        with pytest.raises(ValueError, match="three rows"):
            WgsFrontierSim(rows=2, cols=3)
        with pytest.raises(ValueError, match="full window"):
            WgsFrontierSim(cols=2)

    def test_each_site_measured_once(self):
        sim = WgsFrontierSim(cols=3)
        sim.measure((0, 0), x_basis(), force=0)
        assert sim.outcome((0, 0)) == 0
        with pytest.raises(ValueError, match="already measured"):
            sim.measure((0, 0), x_basis(), force=0)

    def test_sampling_needs_rng(self):
        sim = WgsFrontierSim(cols=3)
        with pytest.raises(ValueError, match="rng"):
            sim.measure((0, 0), x_basis())


class TestFactorization:
    def test_recovers_tensor_product(self):
        a = tz.H @ tz.S
        b = tz.g_gate(3)
        fa, fb = factorize_local(np.kron(a, b))
        assert np.allclose(np.kron(fa, fb), np.kron(a, b), atol=1e-12)

    def test_entangling_operator_is_not_a_product(self):
        assert factorize_local(CZ4) is None

    def test_decompose_cz_and_product(self):
        kind, a, b = decompose_realized(np.kron(tz.H, tz.S) @ CZ4)
        assert kind == "cz"
        assert np.allclose(np.kron(a, b), np.kron(tz.H, tz.S), atol=1e-9)
        kind, _a, _b = decompose_realized(np.kron(tz.S, tz.H))
        assert kind == "product"

    def test_decompose_peels_input_factors(self):
        m = np.kron(tz.H, tz.S) @ CZ4 @ np.kron(tz.S, tz.H)
        kind, a, b = decompose_realized(m, pre_upper=tz.S, pre_lower=tz.H)
        assert kind == "cz"
        assert np.allclose(np.kron(a, b), np.kron(tz.H, tz.S), atol=1e-9)

    def test_rejects_non_protocol_operators(self):
        cnot = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]],
                        dtype=complex)
        with pytest.raises(ArithmeticError, match="implementation bug"):
            decompose_realized(cnot)


class TestCliffordBookkeeping:
    def test_group_order_and_cache(self):
        g = clifford_group()
        assert g.order == 24
        assert clifford_group() is g

    def test_clifford_word_tolerates_scale_and_phase(self):
        assert clifford_word(tz.H) == ("H",)
        assert clifford_word(3.0 * tz.S) == ("S",)
        assert clifford_word(np.exp(0.7j) * tz.H @ tz.S) in (("H", "S"),)

    def test_non_clifford_rejected(self):
        t_gate = np.diag([1.0, np.exp(1j * np.pi / 4)])
        with pytest.raises(ValueError, match="not proportional"):
            clifford_word(t_gate)

    def test_tag_word(self):
        assert tag_word("u", ("H", "S")) == ("u:H", "u:S")
        with pytest.raises(ValueError, match="unknown by-product segment"):
            tag_word("mid", ("H",))

    def test_byproduct_factors(self):
        mats = byproduct_factors(("u:H", "u:S", "l:H"))
        assert np.allclose(mats["u"], tz.H @ tz.S)
        assert np.allclose(mats["l"], tz.H)
        assert np.allclose(mats["u_in"], np.eye(2))
        assert np.allclose(mats["l_in"], np.eye(2))
        with pytest.raises(ValueError, match="malformed"):
            byproduct_factors(("uH",))


class TestLogicalCz:
    def test_designated_branch_record(self):
        rec = logical_cz(WgsFrontierSim(cols=3), mode="force", outcomes="designated")
        assert rec.outcomes["success"] == 1
        assert rec.attempts == 1
        assert rec.byproduct == ("u:H", "u:S", "l:H", "l:S")
        assert realized_matches(rec) < 1e-12

    def test_second_window_success(self):
        # window 1 fails on a single flipped corner; window 2 is all zeros
        forced = {s: 0 for s in fresh_sites(1)}
        forced[(0, 0)] = 1
        forced[(1, 1)] = 0
        forced.update({s: 0 for s in fresh_sites(4)})
        forced[(1, 4)] = 0
        rec = logical_cz(WgsFrontierSim(cols=6), mode="force", outcomes=forced)
        assert rec.outcomes["success"] == 1
        assert rec.attempts == 2
        assert rec.probability == pytest.approx(2**-18, abs=1e-18)
        # the failed window's factors land in the input-side segments
        assert rec.byproduct == ("u:H", "u:S", "l:H", "l:S",
                                 "u_in:H", "u_in:S", "u_in:S", "l_in:H")
        assert realized_matches(rec) < 1e-12

    def test_exhausted_branch_is_a_local_product(self):
        fail = next(l for l in enumerate_branches(3) if not l["success"])
        rec = logical_cz(WgsFrontierSim(cols=3), mode="force",
                         outcomes=fail["outcomes"])
        assert rec.outcomes["success"] == 0
        assert rec.probability == pytest.approx(fail["probability"], abs=1e-15)
        assert all(w.startswith(("u:", "l:")) for w in rec.byproduct)
        assert realized_matches(rec) < 1e-12

    def test_raise_on_exhaust(self):
        fail = next(l for l in enumerate_branches(3) if not l["success"])
        with pytest.raises(RuntimeError, match="exhausted after 1 windows"):
            logical_cz(WgsFrontierSim(cols=3), mode="force",
                       outcomes=fail["outcomes"], raise_on_exhaust=True)

    def test_impossible_forced_branch_rejected(self):
        # after an early flip the remaining window outcomes are correlated;
        # demanding all zeros anyway hits a zero-probability measurement
        forced = {s: 0 for s in fresh_sites(1)}
        forced[(0, 0)] = 1
        forced[(1, 1)] = 0
        with pytest.raises(ValueError, match="zero probability"):
            logical_cz(WgsFrontierSim(cols=3), mode="force", outcomes=forced)

    def test_sampling_is_seed_deterministic(self):
        r1 = logical_cz(WgsFrontierSim(cols=3), mode="sample", seed=11)
        r2 = logical_cz(WgsFrontierSim(cols=3), mode="sample", seed=11)
        assert r1.outcomes == r2.outcomes
        assert r1.probability == r2.probability

    def test_sampled_record_replays_exactly(self):
        r1 = logical_cz(WgsFrontierSim(cols=3), mode="sample", seed=11)
        r3 = logical_cz(WgsFrontierSim(cols=3), mode="force", outcomes=r1.outcomes)
        assert r3.probability == pytest.approx(r1.probability, abs=1e-15)
        assert np.allclose(r3.realized_op, r1.realized_op, atol=1e-12)

    def test_argument_validation(self):
        with pytest.raises(ValueError, match="no window fits"):
            logical_cz(WgsFrontierSim(cols=3), anchor=4, mode="force",
                       outcomes="designated")
        with pytest.raises(ValueError, match="needs a seed"):
            logical_cz(WgsFrontierSim(cols=3), mode="sample")
        with pytest.raises(ValueError, match="needs outcomes"):
            logical_cz(WgsFrontierSim(cols=3), mode="force")
        with pytest.raises(ValueError, match="mode"):
            logical_cz(WgsFrontierSim(cols=3), mode="guess")


class TestExhaustiveEnumeration:
    def test_single_window_scan(self):
        scan = branch_probability_scan(cols=3)
        classes = scan["classes"]
        assert set(classes) == {"success@1", "exhausted"}
        assert classes["success@1"]["mass"] == pytest.approx(2**-7, abs=1e-12)
        assert classes["success@1"]["branches"] == 2
        assert classes["exhausted"]["mass"] == pytest.approx(1 - 2**-7, abs=1e-12)
        assert classes["exhausted"]["branches"] == 223
        assert scan["total"] == pytest.approx(1.0, abs=1e-12)
        assert scan["peak_states"] == 76

    def test_leaf_enumeration_against_scan(self):
        leaves = enumerate_branches(3)
        assert len(leaves) == 225
        assert sum(l["probability"] for l in leaves) == pytest.approx(1.0, abs=1e-12)
        succ = [l for l in leaves if l["success"]]
        assert len(succ) == 2
        for l in succ:
            assert l["anchor"] == 1
            assert l["probability"] == pytest.approx(2**-8, abs=1e-15)
        assert {round(l["probability"], 15) for l in leaves} == {
            round(p, 15) for p in (2**-9, 2**-8, 2**-7)
        }

    def test_every_leaf_operator_classifies_correctly(self):
        # success leaves realize CZ modulo local factors, failures a product
        for leaf in enumerate_branches(3, with_operators=True):
            kind, _a, _b = decompose_realized(leaf["realized_op"])
            assert kind == ("cz" if leaf["success"] else "product")

    def test_scan_rejects_oversized_anchor(self):
        with pytest.raises(ValueError, match="no window fits"):
            branch_probability_scan(cols=3, anchor=4)
