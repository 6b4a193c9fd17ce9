"""Measurement bases used throughout the protocols.

Outcome convention: outcome bit 0 always tags the +1-eigenvalue direction of the
measured observable (for Y this is (|0⟩+i|1⟩)/√2), outcome 1 the −1 direction.
The ``Phase(φ)`` basis is {(|0⟩ ± e^{iφ}|1⟩)/√2}; the spin-1 ``AkltPhase(φ)``
basis is {|0⟩, (|1⟩ ± e^{iφ}|2⟩)/√2}.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Any

import numpy as np

from .config import DEFAULT_TOL

KINDS = ("Z", "X", "Y", "Phase", "AkltPhase")


@dataclass(frozen=True)
class BasisSpec:
    """An orthonormal single-site measurement basis.

    Attributes
    ----------
    kind:
        One of ``Z``, ``X``, ``Y``, ``Phase``, ``AkltPhase``.
    phi:
        Angle parameter for the two phase families (0.0 otherwise).
    dim:
        Site dimension (2, or 3 for ``AkltPhase`` / qutrit ``Z``).
    """

    kind: str
    phi: float = 0.0
    dim: int = 2

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown basis kind {self.kind!r}")
        if self.kind == "AkltPhase" and self.dim != 3:
            object.__setattr__(self, "dim", 3)
        if self.kind in ("X", "Y", "Phase") and self.dim != 2:
            raise ValueError(f"{self.kind} basis is qubit-only")

    @property
    def vectors(self) -> tuple[np.ndarray, ...]:
        """The basis kets, indexed by outcome."""
        phi = self.phi
        if self.kind == "Z":
            return tuple(np.eye(self.dim, dtype=complex)[i] for i in range(self.dim))
        if self.kind == "X":
            return (
                np.array([1, 1], dtype=complex) / np.sqrt(2),
                np.array([1, -1], dtype=complex) / np.sqrt(2),
            )
        if self.kind == "Y":
            return (
                np.array([1, 1j], dtype=complex) / np.sqrt(2),
                np.array([1, -1j], dtype=complex) / np.sqrt(2),
            )
        if self.kind == "Phase":
            e = np.exp(1j * phi)
            return (
                np.array([1, e], dtype=complex) / np.sqrt(2),
                np.array([1, -e], dtype=complex) / np.sqrt(2),
            )
        # AkltPhase
        e = np.exp(1j * phi)
        return (
            np.array([1, 0, 0], dtype=complex),
            np.array([0, 1, e], dtype=complex) / np.sqrt(2),
            np.array([0, 1, -e], dtype=complex) / np.sqrt(2),
        )

    @property
    def n_outcomes(self) -> int:
        return self.dim

    def check_orthonormal(self, tol: float = 1e-12) -> bool:
        vecs = np.array(self.vectors)
        gram = vecs.conj() @ vecs.T
        return bool(np.max(np.abs(gram - np.eye(len(vecs)))) <= tol)

    def projector(self, outcome: int) -> np.ndarray:
        v = self.vectors[outcome]
        return np.outer(v, v.conj())

    # -- serialization ------------------------------------------------------

    def to_json(self) -> dict[str, Any]:
        doc: dict[str, Any] = {"kind": self.kind}
        if self.kind in ("Phase", "AkltPhase"):
            doc["phi"] = float(self.phi)
        if self.kind == "Z" and self.dim != 2:
            doc["dim"] = self.dim
        return doc

    @classmethod
    def from_json(cls, doc: dict[str, Any]) -> "BasisSpec":
        kind = doc["kind"]
        phi = float(doc.get("phi", 0.0))
        dim = int(doc.get("dim", 3 if kind == "AkltPhase" else 2))
        return cls(kind=kind, phi=phi, dim=dim)


def z_basis(dim: int = 2) -> BasisSpec:
    return BasisSpec("Z", dim=dim)


def x_basis() -> BasisSpec:
    return BasisSpec("X")


def y_basis() -> BasisSpec:
    return BasisSpec("Y")


def phase_basis(phi: float) -> BasisSpec:
    return BasisSpec("Phase", phi=phi)


def aklt_phase_basis(phi: float) -> BasisSpec:
    return BasisSpec("AkltPhase", phi=phi, dim=3)
