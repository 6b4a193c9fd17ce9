"""Brute-force dense pure-state simulator — the ground truth everything is checked against.

States are stored as flat complex vectors over a tuple of site dimensions with
site 0 as the most significant axis (big-endian).  All operations return new
states; nothing mutates in place.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Iterable, Sequence

import numpy as np

from .bases import BasisSpec
from .config import DEFAULT_TOL, state_cap


@dataclass(frozen=True)
class PureState:
    """Dense amplitude vector over sites with dimensions ``dims``."""

    dims: tuple[int, ...]
    amps: np.ndarray

    def __init__(self, dims: Sequence[int], amps: np.ndarray) -> None:
        dims = tuple(int(d) for d in dims)
        size = 1
        for d in dims:
            if d < 1:
                raise ValueError(f"site dimensions must be >= 1, got {dims}")
            size *= d
        arr = np.ascontiguousarray(np.asarray(amps, dtype=complex)).ravel()
        if arr.size != size:
            raise ValueError(f"amplitude vector of length {arr.size} for dims {dims}")
        if not np.all(np.isfinite(arr.view(float))):
            raise ValueError("amplitudes must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "amps", arr)

    # -- constructors -------------------------------------------------------

    @classmethod
    def computational(cls, dims: Sequence[int], index: Sequence[int]) -> "PureState":
        dims = tuple(dims)
        amps = np.zeros(int(np.prod(dims)), dtype=complex)
        amps[np.ravel_multi_index(tuple(index), dims)] = 1.0
        return cls(dims, amps)

    @classmethod
    def product(cls, factors: Sequence[np.ndarray]) -> "PureState":
        """Tensor product of per-site kets."""
        amps = np.array([1.0 + 0j])
        dims = []
        for f in factors:
            f = np.asarray(f, dtype=complex).ravel()
            dims.append(f.size)
            amps = np.kron(amps, f)
        return cls(tuple(dims), amps)

    @classmethod
    def plus_states(cls, n: int) -> "PureState":
        """|+⟩^⊗n."""
        return cls.product([np.array([1, 1], dtype=complex) / np.sqrt(2)] * n)

    # -- basics -------------------------------------------------------------

    @property
    def n_sites(self) -> int:
        return len(self.dims)

    def tensor(self) -> np.ndarray:
        return self.amps.reshape(self.dims)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def normalized(self) -> "PureState":
        n = self.norm()
        if n == 0.0:
            raise ValueError("cannot normalize the zero state")
        return PureState(self.dims, self.amps / n)

    def overlap(self, other: "PureState") -> complex:
        """⟨self|other⟩."""
        if self.dims != other.dims:
            raise ValueError(f"dims mismatch {self.dims} vs {other.dims}")
        return complex(np.vdot(self.amps, other.amps))

    def amplitude(self, index: Sequence[int]) -> complex:
        return complex(self.amps[np.ravel_multi_index(tuple(index), self.dims)])


def fidelity(a: PureState, b: PureState) -> float:
    """|⟨a|b⟩|² for normalized inputs (inputs are normalized internally)."""
    an, bn = a.norm(), b.norm()
    if an == 0.0 or bn == 0.0:
        raise ValueError("fidelity of a zero state")
    return abs(a.overlap(b)) ** 2 / (an**2 * bn**2)


# ---------------------------------------------------------------------------
# Gates and measurements
# ---------------------------------------------------------------------------


def apply_gate(state: PureState, sites: Sequence[int] | int, gate: np.ndarray) -> PureState:
    """Apply ``gate`` to the listed sites (in the given order) of ``state``."""
    if isinstance(sites, (int, np.integer)):
        sites = [int(sites)]
    sites = [int(s) for s in sites]
    if len(set(sites)) != len(sites):
        raise ValueError(f"duplicate sites {sites}")
    for s in sites:
        if not 0 <= s < state.n_sites:
            raise ValueError(f"site {s} out of range for {state.n_sites} sites")
    gate = np.asarray(gate, dtype=complex)
    block = 1
    for s in sites:
        block *= state.dims[s]
    if gate.shape != (block, block):
        raise ValueError(f"gate shape {gate.shape} does not act on dims {[state.dims[s] for s in sites]}")
    t = state.tensor()
    rest = [ax for ax in range(state.n_sites) if ax not in sites]
    perm = sites + rest
    moved = np.transpose(t, perm).reshape(block, -1)
    moved = gate @ moved
    back = np.transpose(
        moved.reshape([state.dims[s] for s in sites] + [state.dims[ax] for ax in rest]),
        np.argsort(perm),
    )
    return PureState(state.dims, back.ravel())


@dataclass(frozen=True)
class MeasurementResult:
    """One projective-measurement branch: outcome, its probability, and the collapsed state."""

    outcome: int
    probability: float
    post_state: PureState


def site_probabilities(state: PureState, site: int, basis: BasisSpec) -> np.ndarray:
    """Born probabilities of each basis outcome at ``site`` (state need not be normalized)."""
    if state.dims[site] != basis.dim:
        raise ValueError(f"basis of dim {basis.dim} at site of dim {state.dims[site]}")
    t = np.moveaxis(state.tensor(), site, 0).reshape(basis.dim, -1)
    vecs = np.array(basis.vectors)
    comps = vecs.conj() @ t
    probs = np.sum(np.abs(comps) ** 2, axis=1)
    total = probs.sum()
    if total == 0.0:
        raise ValueError("zero state has no outcome distribution")
    return probs / total


def measure_site(
    state: PureState,
    site: int,
    basis: BasisSpec,
    force: int | None = None,
    rng: np.random.Generator | None = None,
    keep_site: bool = True,
) -> MeasurementResult:
    """Measure one site projectively.

    ``force`` selects a branch (error if its probability is zero); otherwise the
    outcome is sampled from ``rng``.  The collapsed state is renormalized.  With
    ``keep_site=False`` the measured site is removed from the state (its axis is
    contracted away), which is what the frontier lattice simulator uses.
    """
    probs = site_probabilities(state, site, basis)
    if force is not None:
        outcome = int(force)
        if not 0 <= outcome < basis.n_outcomes:
            raise ValueError(f"outcome {outcome} invalid for {basis.kind} basis")
        if probs[outcome] <= 1e-28:
            raise ValueError(
                f"forced outcome {outcome} has zero probability ({probs[outcome]:.3e})"
            )
    else:
        if rng is None:
            raise ValueError("either force an outcome or pass an rng")
        outcome = int(rng.choice(basis.n_outcomes, p=probs / probs.sum()))
    ket = basis.vectors[outcome]
    t = np.moveaxis(state.tensor(), site, 0)
    collapsed = np.tensordot(ket.conj(), t, axes=(0, 0))  # remaining axes in order
    if keep_site:
        new = np.zeros_like(t)
        new[...] = np.multiply.outer(ket, collapsed)
        new = np.moveaxis(new, 0, site)
        post = PureState(state.dims, new.ravel()).normalized()
    else:
        dims = state.dims[:site] + state.dims[site + 1 :]
        post = PureState(dims, collapsed.ravel()).normalized()
    return MeasurementResult(outcome=outcome, probability=float(probs[outcome]), post_state=post)


def permute_sites(state: PureState, new_from_old: Sequence[int]) -> PureState:
    """Return the state with site ``i`` moved to position ``new_from_old[i]``."""
    n = state.n_sites
    new_from_old = [int(p) for p in new_from_old]
    if sorted(new_from_old) != list(range(n)):
        raise ValueError("new_from_old must be a permutation of all sites")
    inverse = np.argsort(new_from_old)  # axis j of result = old axis inverse[j]
    t = np.transpose(state.tensor(), inverse)
    return PureState(tuple(state.dims[i] for i in inverse), t.ravel())


def cyclic_shift(state: PureState, shift: int) -> PureState:
    """Cyclically move every site ``shift`` positions to the right."""
    n = state.n_sites
    return permute_sites(state, [(i + shift) % n for i in range(n)])


# ---------------------------------------------------------------------------
# Density matrices and entropies
# ---------------------------------------------------------------------------


def reduced_density(state: PureState, sites: Sequence[int]) -> np.ndarray:
    """Partial trace onto ``sites`` (small subsets only) of the normalized state."""
    sites = [int(s) for s in sites]
    if len(sites) > 4:
        raise ValueError("reduced_density is meant for up to 4 sites")
    psi = state.normalized()
    keep_dim = 1
    for s in sites:
        keep_dim *= psi.dims[s]
    rest = [ax for ax in range(psi.n_sites) if ax not in sites]
    t = np.transpose(psi.tensor(), sites + rest).reshape(keep_dim, -1)
    return t @ t.conj().T


def entropy_vn(rho: np.ndarray, tol: float = 1e-14) -> float:
    """Von Neumann entropy in bits of a density matrix."""
    evals = np.linalg.eigvalsh(np.asarray(rho, dtype=complex))
    evals = evals[evals > tol]
    return float(-(evals * np.log2(evals)).sum())


def entropy_z(state: PureState, site: int) -> float:
    """Shannon entropy (bits) of the computational-basis marginal at ``site``."""
    basis = BasisSpec("Z", dim=state.dims[site])
    probs = site_probabilities(state.normalized(), site, basis)
    probs = probs[probs > 1e-14]
    return float(-(probs * np.log2(probs)).sum())


def binary_entropy(p: float) -> float:
    """H_b(p) = −p log₂ p − (1−p) log₂(1−p)."""
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return float(-p * np.log2(p) - (1 - p) * np.log2(1 - p))


# ---------------------------------------------------------------------------
# Zero-diagonal rotation (the adaptive-discrimination workhorse)
# ---------------------------------------------------------------------------


def zero_diagonal_basis(m: np.ndarray, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Unitary U with ``diag(U m U†) = (0, 0)`` for a traceless 2×2 matrix ``m``.

    Writing the first row of U as (cosθ, sinθ·e^{iφ}), the (0,0) entry of UmU†
    is m₀₀·cos2θ + ½sin2θ·h(φ) with h(φ) = m₀₁e^{−iφ} + m₁₀e^{iφ}; tracelessness
    makes the (1,1) entry its negative.  φ is chosen in closed form so h(φ)/m₀₀
    is real, then θ from tan2θ = −2/Re(h/m₀₀).  Among the two φ branches the one
    with the smaller rotation angle |θ| wins (then the smaller φ).  If the
    diagonal is already zero the identity is returned.
    """
    m = np.asarray(m, dtype=complex)
    if m.shape != (2, 2):
        raise ValueError(f"expected a 2x2 matrix, got shape {m.shape}")
    scale = float(np.max(np.abs(m)))
    if abs(np.trace(m)) > tol * max(1.0, scale):
        raise ValueError(f"matrix is not traceless: tr = {np.trace(m):.3e}")
    if scale == 0.0 or abs(m[0, 0]) <= tol * scale:
        return np.eye(2, dtype=complex)

    a = m[0, 1] / m[0, 0]
    b = m[1, 0] / m[0, 0]
    # Im(a e^{−iφ} + b e^{iφ}) = (Im a + Im b)cosφ + (Re b − Re a)sinφ = 0
    phi0 = -np.arctan2(a.imag + b.imag, b.real - a.real)
    candidates = []
    for phi in (phi0, phi0 + np.pi):
        r = (a * np.exp(-1j * phi) + b * np.exp(1j * phi)).real
        theta = 0.5 * np.arctan2(-2.0, r)
        candidates.append((abs(theta), phi % (2 * np.pi), theta, phi))
    _, _, theta, phi = min(candidates)
    c, s = np.cos(theta), np.sin(theta)
    u = np.array(
        [[c, s * np.exp(1j * phi)], [-s, c * np.exp(1j * phi)]], dtype=complex
    )
    diag = np.diag(u @ m @ u.conj().T)
    if np.max(np.abs(diag)) > max(tol, 1e-12 * scale) * 10:
        raise ArithmeticError(f"zero-diagonal construction failed: diag = {diag}")
    return u


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def state_to_json(state: PureState) -> dict[str, Any]:
    """JSON document with dims and an interleaved re/im amplitude array."""
    flat: list[float] = []
    for amp in state.amps:
        flat.extend((float(amp.real), float(amp.imag)))
    return {"dims": list(state.dims), "amps": flat}


def state_from_json(doc: dict[str, Any]) -> PureState:
    flat = doc["amps"]
    amps = np.array(flat[0::2]) + 1j * np.array(flat[1::2])
    return PureState(tuple(doc["dims"]), amps)


def check_cap(dims: Iterable[int]) -> None:
    """Raise if a dense state over ``dims`` would exceed the configured cap."""
    size = 1
    for d in dims:
        size *= int(d)
    cap = state_cap()
    if size > cap:
        raise ValueError(f"dense state of {size} amplitudes exceeds cap {cap}")
