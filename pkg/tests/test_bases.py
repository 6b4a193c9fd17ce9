"""Measurement-basis specifications: vector conventions and serialization."""

from __future__ import annotations

import numpy as np
import pytest

from corrspace.bases import BasisSpec, aklt_phase_basis, phase_basis, x_basis, y_basis, z_basis


@pytest.mark.parametrize(
    "basis",
    [z_basis(), z_basis(3), x_basis(), y_basis(), phase_basis(0.7), aklt_phase_basis(1.3)],
    ids=["Z2", "Z3", "X", "Y", "Phase", "AkltPhase"],
)
def test_orthonormal(basis):
    assert basis.check_orthonormal()
    assert len(basis.vectors) == basis.n_outcomes


def test_outcome_zero_is_plus_one_eigenvector():
    # convention: outcome 0 always labels the +1 eigenvalue
    assert np.allclose(x_basis().vectors[0], [1 / np.sqrt(2), 1 / np.sqrt(2)])
    assert np.allclose(y_basis().vectors[0], [1 / np.sqrt(2), 1j / np.sqrt(2)])
    assert np.allclose(z_basis().vectors[0], [1, 0])


def test_phase_basis_kets():
    phi = 0.9
    e = np.exp(1j * phi)
    v0, v1 = phase_basis(phi).vectors
    assert np.allclose(v0 * np.sqrt(2), [1, e])
    assert np.allclose(v1 * np.sqrt(2), [1, -e])


def test_phase_basis_at_zero_is_x():
    for a, b in zip(phase_basis(0.0).vectors, x_basis().vectors):
        assert np.allclose(a, b)


def test_aklt_phase_kets():
    phi = 0.4
    e = np.exp(1j * phi)
    v0, v1, v2 = aklt_phase_basis(phi).vectors
    assert np.allclose(v0, [1, 0, 0])
    assert np.allclose(v1 * np.sqrt(2), [0, 1, e])
    assert np.allclose(v2 * np.sqrt(2), [0, 1, -e])


def test_projector_sums_to_identity():
    basis = aklt_phase_basis(2.2)
    total = sum(basis.projector(o) for o in range(basis.n_outcomes))
    assert np.allclose(total, np.eye(3), atol=1e-12)


def test_qubit_only_kinds_reject_dim_three():
    for kind in ("X", "Y", "Phase"):
        with pytest.raises(ValueError):
            BasisSpec(kind, dim=3)


def test_unknown_kind_rejected():
    with pytest.raises(ValueError):
        BasisSpec("W")


@pytest.mark.parametrize(
    "basis",
    [z_basis(), z_basis(3), x_basis(), y_basis(), phase_basis(-1.1), aklt_phase_basis(0.25)],
)
def test_json_roundtrip(basis):
    doc = basis.to_json()
    back = BasisSpec.from_json(doc)
    assert back.kind == basis.kind
    assert back.dim == basis.dim
    assert back.phi == pytest.approx(basis.phi)
