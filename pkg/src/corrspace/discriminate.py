"""Marker decoding and deterministic LOCC discrimination of orthogonal codeword states.

``decode_marker`` recovers the cyclic translation offset of an encoded-resource
block from its computational-basis outcomes: a valid branch shows the pattern
"k zeros then a 1" at exactly one cyclic position p, and t = (p − k) mod (2k+1).

``walgate_discriminate`` implements the ordered adaptive local-measurement
protocol that distinguishes two orthogonal states of the codeword span
{|O_k⟩, |W_k⟩} with certainty: at every site the measurement basis is rotated
(via :func:`corrspace.statevec.zero_diagonal_basis` on the conditional overlap
matrix, which is traceless because the references are orthogonal) so that both
conditional residual pairs stay orthogonal; after the last site each transcript
identifies one reference uniquely.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .config import DEFAULT_TOL
from .resources import EncodedResourceSpec, codeword_state
from .statevec import PureState, zero_diagonal_basis


def decode_marker(block_outcomes: Sequence[int], k: int) -> int:
    """Translation offset t from one block's computational-basis outcomes.

    ``block_outcomes`` has length 2k+1 with cyclic boundary.  Raises
    ``ValueError`` when the marker pattern is absent or appears more than once
    (the branch then cannot come from a valid encoded resource).
    """
    bits = [int(b) for b in block_outcomes]
    blk = 2 * k + 1
    if len(bits) != blk:
        raise ValueError(f"expected {blk} outcomes, got {len(bits)}")
    if any(b not in (0, 1) for b in bits):
        raise ValueError("outcomes must be bits")
    hits = [
        p
        for p in range(blk)
        if all(bits[(p + i) % blk] == 0 for i in range(k)) and bits[(p + k) % blk] == 1
    ]
    if len(hits) != 1:
        raise ValueError(
            f"marker pattern (k zeros then 1) found {len(hits)} times; invalid branch"
        )
    return (hits[0] - k) % blk


# ---------------------------------------------------------------------------
# Walgate-style discrimination
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DiscriminationBranch:
    """One complete transcript of the adaptive protocol."""

    transcript: tuple[tuple[int, np.ndarray, int], ...]  # (site, basis unitary rows, outcome)
    probability: float
    logical_outcome: int
    post_state: PureState


def _conditional_overlap(ref1: np.ndarray, ref0: np.ndarray) -> np.ndarray:
    """D[s, s'] = ⟨η1_s|η0_s'⟩ where refs split as Σ_s |s⟩⊗|η_s⟩ on the first site."""
    r0 = ref0.reshape(2, -1)
    r1 = ref1.reshape(2, -1)
    return r1.conj() @ r0.T


def logical_states(psi: Sequence[complex], k: int) -> tuple[np.ndarray, np.ndarray]:
    """The physical codeword states for ψ = a|O_k⟩+b|W_k⟩ and its orthogonal complement."""
    a, b = complex(psi[0]), complex(psi[1])
    norm = np.hypot(abs(a), abs(b))
    if norm == 0:
        raise ValueError("zero logical state")
    a, b = a / norm, b / norm
    ok = codeword_state(k, 0)
    wk = codeword_state(k, 1)
    ref0 = a * ok + b * wk
    ref1 = -np.conj(b) * ok + np.conj(a) * wk
    return ref0, ref1


def walgate_discriminate(
    state: PureState,
    block_sites: Sequence[int],
    psi: Sequence[complex],
    mode: str = "enumerate",
    rng: np.random.Generator | None = None,
    force: Sequence[int] | None = None,
    tol: float = DEFAULT_TOL,
) -> list[DiscriminationBranch]:
    """Measure the k block sites adaptively, deciding between ψ and ψ⊥ with certainty.

    ``psi`` gives (a, b) with |ψ⟩ = a|O_k⟩ + b|W_k⟩ on the listed sites (left to
    right).  Modes: ``enumerate`` returns every branch; ``sample`` follows one
    Born-sampled transcript; ``force`` follows the given outcome list.  In all
    cases each branch's residual references stay orthogonal step by step and the
    final transcript maps deterministically to logical 0 (ψ) or 1 (ψ⊥).
    """
    sites = [int(s) for s in block_sites]
    k = len(sites)
    for s in sites:
        if state.dims[s] != 2:
            raise ValueError("block sites must be qubits")
    ref0, ref1 = logical_states(psi, k)
    if abs(np.vdot(ref0, ref1)) > tol:
        raise ValueError("reference states are not orthogonal")

    results: list[DiscriminationBranch] = []
    ortho_tol = 10 * max(tol, 1e-10)

    def recurse(
        current: PureState,
        sites_left: list[int],
        r0: np.ndarray,
        r1: np.ndarray,
        prob: float,
        transcript: tuple,
        forced: list[int] | None,
    ) -> None:
        if not sites_left:
            w0, w1 = abs(complex(r0[0])), abs(complex(r1[0]))
            if w0 > ortho_tol and w1 > ortho_tol:
                raise ArithmeticError(
                    f"transcript fails to identify a reference (residuals {w0:.2e}, {w1:.2e})"
                )
            logical = 0 if w0 >= w1 else 1
            results.append(
                DiscriminationBranch(
                    transcript=transcript,
                    probability=prob,
                    logical_outcome=logical,
                    post_state=current,
                )
            )
            return
        site = sites_left[0]
        d = _conditional_overlap(r1.ravel(), r0.ravel())
        u = zero_diagonal_basis(d, tol=max(tol, 1e-10))
        t = np.moveaxis(current.tensor(), site, 0)
        r0t = r0.reshape(2, -1)
        r1t = r1.reshape(2, -1)
        total_norm2 = float(np.sum(np.abs(current.amps) ** 2))
        # after this site is dropped, later block sites shift down by one
        next_sites = [s - 1 if s > site else s for s in sites_left[1:]]
        for outcome in (0, 1):
            if forced is not None and forced and forced[0] != outcome:
                continue
            ket = u[outcome]  # ket components; the projection bra conjugates them
            amp_tail = np.tensordot(ket.conj(), t, axes=(0, 0))
            branch_norm2 = float(np.sum(np.abs(amp_tail) ** 2))
            p = branch_norm2 / total_norm2
            new_r0 = ket.conj() @ r0t
            new_r1 = ket.conj() @ r1t
            if abs(np.vdot(new_r1, new_r0)) > ortho_tol:
                raise ArithmeticError(
                    f"orthogonality lost at site {site}: {abs(np.vdot(new_r1, new_r0)):.2e}"
                )
            if p <= 1e-24:
                continue
            dims = current.dims[:site] + current.dims[site + 1 :]
            post = PureState(dims, amp_tail.ravel() / np.sqrt(branch_norm2))
            recurse(
                post,
                next_sites,
                new_r0,
                new_r1,
                prob * p,
                transcript + ((site, u, outcome),),
                None if forced is None else forced[1:],
            )

    start = state.normalized()
    if mode == "enumerate":
        recurse(start, sites, ref0, ref1, 1.0, (), None)
    elif mode == "force":
        if force is None or len(force) != k:
            raise ValueError("force mode needs one outcome per block site")
        recurse(start, sites, ref0, ref1, 1.0, (), [int(o) for o in force])
    elif mode == "sample":
        if rng is None:
            raise ValueError("sample mode needs an rng")
        recurse(start, sites, ref0, ref1, 1.0, (), None)
        probs = np.array([b.probability for b in results])
        choice = int(rng.choice(len(results), p=probs / probs.sum()))
        return [results[choice]]
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return results


def logical_born_probability(
    base_state: PureState, logical_qubit: int, psi: Sequence[complex]
) -> float:
    """Born probability of projecting ``logical_qubit`` of the base cluster onto ψ.

    ψ is given in the {|0⟩, |1⟩} logical basis (the same coefficients as the
    codeword span).  Used as the logical-level oracle for the discrimination
    statistics.
    """
    a, b = complex(psi[0]), complex(psi[1])
    norm = np.hypot(abs(a), abs(b))
    ket = np.array([a, b], dtype=complex) / norm
    t = np.moveaxis(base_state.normalized().tensor(), logical_qubit, 0).reshape(2, -1)
    comp = ket.conj() @ t
    return float(np.sum(np.abs(comp) ** 2))
