"""Dense complex tensors with named indices, standard gates, and phase-blind comparison.

Everything downstream (MPS evaluation, graph-state contraction, group closure) is
built on three primitives defined here:

* :class:`LabeledTensor` — a dense complex array whose axes carry distinct string
  labels, contracted by name rather than position.
* a small zoo of gate matrices (Pauli, Hadamard, phase gates, the transport
  rotation ``G = exp(iπ/k X)``, controlled-phase).
* :func:`proportional_up_to_phase` — equality modulo a global phase, the relevant
  notion of equality for operators induced on correlation space.

All matrices are plain ``numpy.ndarray`` objects; there is no wrapper class for
gates.  ``GateMatrix`` below is a type alias kept for signatures.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import cos, pi, sin
from typing import Iterable, Sequence

import numpy as np

from .config import DEFAULT_TOL

GateMatrix = np.ndarray
ComplexScalar = complex

# ---------------------------------------------------------------------------
# Gate constants
# ---------------------------------------------------------------------------

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
S = np.array([[1, 0], [0, 1j]], dtype=complex)

KET0 = np.array([1, 0], dtype=complex)
KET1 = np.array([0, 1], dtype=complex)
PLUS = np.array([1, 1], dtype=complex) / np.sqrt(2)
MINUS = np.array([1, -1], dtype=complex) / np.sqrt(2)

for _m in (I2, X, Y, Z, H, S, KET0, KET1, PLUS, MINUS):
    _m.setflags(write=False)


def phase_gate(phi: float) -> GateMatrix:
    """diag(1, e^{iφ}); ``phase_gate(pi/2)`` is the S gate."""
    return np.array([[1, 0], [0, np.exp(1j * phi)]], dtype=complex)


def g_gate(k: int) -> GateMatrix:
    """The transport rotation G = exp(iπ/k X) = cos(π/k)·𝟙 + i·sin(π/k)·X.

    Only integers k > 2 are admitted: k=1,2 degenerate to ±𝟙-like / iX cases for
    which the induced chain has no decaying correlations.
    """
    if int(k) != k or k <= 2:
        raise ValueError(f"g_gate requires an integer k > 2, got {k!r}")
    return cos(pi / k) * I2 + 1j * sin(pi / k) * X


def cphase(phi: float) -> GateMatrix:
    """Controlled-phase gate diag(1, 1, 1, e^{iφ}) on two qubits."""
    m = np.eye(4, dtype=complex)
    m[3, 3] = np.exp(1j * phi)
    return m


_NAMED = {"X": X, "Y": Y, "Z": Z, "H": H, "S": S, "I": I2}


def named_gate(name: str) -> GateMatrix:
    """Resolve a gate by name: X, Y, Z, H, S, I, or G<k> (e.g. ``"G3"``)."""
    token = name.strip()
    if token in _NAMED:
        return _NAMED[token].copy()
    if token.upper().startswith("G") and token[1:].isdigit():
        return g_gate(int(token[1:]))
    raise ValueError(f"unknown gate name {token!r}")


# ---------------------------------------------------------------------------
# Labeled tensors
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LabeledTensor:
    """Dense complex tensor whose axes are addressed by distinct string labels.

    Parameters
    ----------
    labels:
        One name per axis, pairwise distinct.
    data:
        Complex array; ``data.ndim == len(labels)``.  The array is stored
        row-major with respect to the label sequence and made read-only, so
        instances are safe to share.
    """

    labels: tuple[str, ...]
    data: np.ndarray

    def __init__(self, labels: Sequence[str], data: np.ndarray) -> None:
        arr = np.asarray(data, dtype=complex)
        if arr.ndim:  # ascontiguousarray would promote rank-0 scalars to rank 1
            arr = np.ascontiguousarray(arr)
        labels = tuple(labels)
        if len(labels) != arr.ndim:
            raise ValueError(
                f"{len(labels)} labels for a rank-{arr.ndim} tensor"
            )
        if len(set(labels)) != len(labels):
            raise ValueError(f"labels must be pairwise distinct, got {labels}")
        if not (np.all(np.isfinite(arr.real)) and np.all(np.isfinite(arr.imag))):
            raise ValueError("tensor entries must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "data", arr)

    @property
    def dims(self) -> tuple[int, ...]:
        return self.data.shape

    def axis(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise KeyError(f"no axis labeled {label!r} in {self.labels}") from None

    def relabel(self, mapping: dict[str, str]) -> "LabeledTensor":
        """Return the same data with axes renamed through ``mapping``."""
        return LabeledTensor(tuple(mapping.get(l, l) for l in self.labels), self.data)

    def scalar(self) -> complex:
        """The value of a rank-0 tensor."""
        if self.data.ndim != 0:
            raise ValueError(f"tensor of rank {self.data.ndim} is not a scalar")
        return complex(self.data)


def contract(
    a: LabeledTensor,
    b: LabeledTensor,
    pairs: Iterable[tuple[str, str]],
) -> LabeledTensor:
    """Contract ``a`` and ``b`` over the given (label-in-a, label-in-b) pairs.

    The result carries all unpaired labels of ``a`` followed by those of ``b``;
    a name collision among the surviving labels is an error.  Contraction sums
    over the paired index values, so it is bilinear and independent of the order
    in which pairs are listed.
    """
    pairs = list(pairs)
    a_axes = [a.axis(la) for la, _ in pairs]
    b_axes = [b.axis(lb) for _, lb in pairs]
    if len(set(a_axes)) != len(a_axes) or len(set(b_axes)) != len(b_axes):
        raise ValueError("a label may appear in at most one pair")
    for (la, lb), ax_a, ax_b in zip(pairs, a_axes, b_axes):
        if a.dims[ax_a] != b.dims[ax_b]:
            raise ValueError(
                f"dimension mismatch contracting {la!r} (dim {a.dims[ax_a]}) "
                f"with {lb!r} (dim {b.dims[ax_b]})"
            )
    out_labels = tuple(l for i, l in enumerate(a.labels) if i not in set(a_axes)) + tuple(
        l for i, l in enumerate(b.labels) if i not in set(b_axes)
    )
    if len(set(out_labels)) != len(out_labels):
        raise ValueError(f"label collision in contraction result: {out_labels}")
    data = np.tensordot(a.data, b.data, axes=(a_axes, b_axes))
    return LabeledTensor(out_labels, data)


# ---------------------------------------------------------------------------
# Phase-insensitive comparison and canonicalization
# ---------------------------------------------------------------------------


def proportional_up_to_phase(
    a: np.ndarray, b: np.ndarray, tol: float = DEFAULT_TOL
) -> float | None:
    """Return θ with ``a = e^{iθ}·b`` entrywise within ``tol``, else ``None``.

    The candidate phase is the least-squares optimum angle(⟨b, a⟩); the check is
    then an entrywise max-norm comparison.  ``b`` must be nonzero.  Equality
    modulo phase is an equivalence relation on nonzero matrices, which the tests
    exercise directly.
    """
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    if not np.any(np.abs(b) > 0):
        raise ValueError("reference matrix b is zero")
    inner = np.vdot(b, a)
    if abs(inner) == 0.0:
        return None
    theta = float(np.angle(inner))
    if np.max(np.abs(a - np.exp(1j * theta) * b)) <= tol:
        return theta
    return None


def phase_canonical(m: np.ndarray, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Scale ``m`` by a unit phase so its first largest-modulus entry is real positive.

    Deterministic representative of the ray {e^{iθ}m}; used for hashing group
    elements and for stable reporting.
    """
    m = np.asarray(m, dtype=complex)
    flat = m.ravel()
    mags = np.abs(flat)
    top = mags.max()
    if top == 0.0:
        raise ValueError("cannot canonicalize the zero matrix")
    # first entry whose modulus is within rounding of the maximum
    idx = int(np.nonzero(mags >= top * (1.0 - 1e-12))[0][0])
    return m * np.exp(-1j * np.angle(flat[idx]))


def is_unitary(m: np.ndarray, tol: float = DEFAULT_TOL) -> bool:
    """Whether ``m†m = 𝟙`` within ``tol`` (max-norm)."""
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        return False
    return bool(np.max(np.abs(m.conj().T @ m - np.eye(m.shape[0]))) <= tol)


def is_proportional_to_unitary(m: np.ndarray, tol: float = DEFAULT_TOL) -> bool:
    """Whether ``m = c·U`` for some scalar c>0 and unitary U."""
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        return False
    gram = m.conj().T @ m
    scale = np.trace(gram).real / m.shape[0]
    if scale <= tol:
        return False
    return bool(np.max(np.abs(gram - scale * np.eye(m.shape[0]))) <= tol * max(1.0, scale))
