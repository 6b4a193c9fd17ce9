"""Matrix product chains: amplitudes, dense expansion, correlators, correlation-space evolution.

A chain stores one D×D matrix per physical value per site plus boundary vectors
L and R.  The amplitude of an outcome string (s_0, …, s_{n−1}) is

    ⟨R| A[s_{n−1}] ··· A[s_0] |L⟩

with site 0 the leftmost physical site, applied first; ``evolve`` therefore
left-multiplies the correlation-space state.  States are unnormalized by design;
normalization factors are always reported separately.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .config import DEFAULT_TOL
from .statevec import PureState, check_cap


@dataclass(frozen=True)
class MpsChain:
    """Site tensors plus boundary vectors.

    ``tensors[i][s]`` is the D×D matrix applied when site ``i`` carries physical
    value ``s``.  Uniform chains simply repeat the same per-value matrices.
    """

    tensors: tuple[tuple[np.ndarray, ...], ...]
    L: np.ndarray
    R: np.ndarray

    def __init__(
        self,
        tensors: Sequence[Sequence[np.ndarray]],
        L: np.ndarray,
        R: np.ndarray,
    ) -> None:
        site_mats = []
        for site in tensors:
            mats = tuple(np.asarray(m, dtype=complex) for m in site)
            site_mats.append(mats)
        site_mats = tuple(site_mats)
        if not site_mats:
            raise ValueError("chain needs at least one site")
        D = site_mats[0][0].shape[0]
        d = len(site_mats[0])
        for i, mats in enumerate(site_mats):
            if len(mats) != d:
                raise ValueError(f"site {i} has {len(mats)} values, expected {d}")
            for m in mats:
                if m.shape != (D, D):
                    raise ValueError(f"site {i} matrix of shape {m.shape}, expected ({D},{D})")
        L = np.asarray(L, dtype=complex).ravel()
        R = np.asarray(R, dtype=complex).ravel()
        if L.size != D or R.size != D:
            raise ValueError("boundary vectors must have the bond dimension")
        if np.linalg.norm(L) == 0 or np.linalg.norm(R) == 0:
            raise ValueError("boundary vectors must be nonzero")
        object.__setattr__(self, "tensors", site_mats)
        object.__setattr__(self, "L", L)
        object.__setattr__(self, "R", R)

    @classmethod
    def uniform(
        cls, n: int, mats: Sequence[np.ndarray], L: np.ndarray, R: np.ndarray
    ) -> "MpsChain":
        if n < 1:
            raise ValueError("chain needs at least one site")
        return cls([tuple(mats)] * n, L, R)

    @property
    def n(self) -> int:
        return len(self.tensors)

    @property
    def d(self) -> int:
        return len(self.tensors[0])

    @property
    def D(self) -> int:
        return self.tensors[0][0].shape[0]

    def site_matrix(self, site: int, s: int) -> np.ndarray:
        return self.tensors[site][s]


# ---------------------------------------------------------------------------
# Amplitudes and dense expansion
# ---------------------------------------------------------------------------


def amplitude(chain: MpsChain, outcomes: Sequence[int]) -> complex:
    """⟨R| A[s_{n−1}]···A[s_0] |L⟩ for the given outcome string."""
    if len(outcomes) != chain.n:
        raise ValueError(f"{len(outcomes)} outcomes for {chain.n} sites")
    v = chain.L
    for i, s in enumerate(outcomes):
        s = int(s)
        if not 0 <= s < chain.d:
            raise ValueError(f"outcome {s} out of range at site {i}")
        v = chain.tensors[i][s] @ v
    return complex(np.vdot(chain.R, v))


def to_statevector(chain: MpsChain, normalize: bool = False) -> tuple[PureState, float]:
    """Expand the chain into a dense state.

    Returns ``(state, norm)`` where ``norm`` is the 2-norm of the raw amplitude
    vector; with ``normalize=True`` the returned state is scaled to unit norm.
    """
    check_cap([chain.d] * chain.n)
    carry = chain.L[np.newaxis, :]  # (configs, D)
    for i in range(chain.n):
        stacked = np.stack(chain.tensors[i], axis=0)  # (d, D, D)
        # new_carry[c, s, :] = A_i[s] @ carry[c]
        carry = np.einsum("sab,cb->csa", stacked, carry).reshape(-1, chain.D)
    amps = carry @ chain.R.conj()
    norm = float(np.linalg.norm(amps))
    if normalize:
        if norm == 0.0:
            raise ValueError("chain contracts to the zero state")
        amps = amps / norm
    return PureState((chain.d,) * chain.n, amps), norm


def project_local(chain: MpsChain, site: int, phi: np.ndarray) -> np.ndarray:
    """A[φ] = Σ_s ⟨φ|s⟩·A[s] = Σ_s conj(φ_s)·A[s] at ``site``.

    Measurement-basis vectors are supplied as kets; the conjugation implements
    the ⟨φ|s⟩ coefficients.
    """
    phi = np.asarray(phi, dtype=complex).ravel()
    if phi.size != chain.d:
        raise ValueError(f"basis ket of length {phi.size} for physical dimension {chain.d}")
    if np.linalg.norm(phi) == 0:
        raise ValueError("basis ket must be nonzero")
    mats = chain.tensors[site]
    out = np.zeros((chain.D, chain.D), dtype=complex)
    for s in range(chain.d):
        out += np.conj(phi[s]) * mats[s]
    return out


# ---------------------------------------------------------------------------
# Correlation functions
# ---------------------------------------------------------------------------


def expectation(state: PureState, obs: np.ndarray, site: int) -> float:
    """⟨O_site⟩ of a normalized dense state."""
    psi = state.normalized()
    t = np.moveaxis(psi.tensor(), site, 0).reshape(psi.dims[site], -1)
    val = np.einsum("ax,ab,bx->", t.conj(), np.asarray(obs, dtype=complex), t)
    return float(val.real)


def pair_expectation(state: PureState, obs: np.ndarray, i: int, j: int) -> float:
    """⟨O_i O_j⟩ of a normalized dense state (i ≠ j)."""
    psi = state.normalized()
    t = psi.tensor()
    t = np.moveaxis(t, (i, j), (0, 1)).reshape(psi.dims[i], psi.dims[j], -1)
    o = np.asarray(obs, dtype=complex)
    val = np.einsum("abx,ac,bd,cdx->", t.conj(), o, o, t)
    return float(val.real)


def two_point_correlation(
    chain: MpsChain, obs: np.ndarray, i: int, r: int, tol: float = DEFAULT_TOL
) -> float:
    """Connected correlator ⟨O_i O_{i+r}⟩ − ⟨O_i⟩⟨O_{i+r}⟩ of the normalized chain state.

    ``obs`` must be Hermitian, sites are 0-based, and ``i + r`` must stay inside
    the chain.  Computed from the exact dense state (oracle-grade, desk scale).
    """
    obs = np.asarray(obs, dtype=complex)
    if np.max(np.abs(obs - obs.conj().T)) > tol:
        raise ValueError("observable must be Hermitian")
    if r < 1 or i < 0 or i + r >= chain.n:
        raise ValueError(f"sites ({i}, {i}+{r}) out of range for n={chain.n}")
    state, _ = to_statevector(chain, normalize=True)
    return pair_expectation(state, obs, i, i + r) - expectation(state, obs, i) * expectation(
        state, obs, i + r
    )


# ---------------------------------------------------------------------------
# Correlation-space evolution
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CorrelationState:
    """Correlation-space vector plus the log of applied operators.

    ``annihilated`` flags a vector that was projected to (numerical) zero; this
    is not an error, orthogonal projections are legitimate branches.
    """

    vec: np.ndarray
    log: tuple[np.ndarray, ...] = field(default_factory=tuple)
    annihilated: bool = False

    def __init__(
        self,
        vec: np.ndarray,
        log: tuple[np.ndarray, ...] = (),
        annihilated: bool = False,
    ) -> None:
        vec = np.asarray(vec, dtype=complex).ravel()
        object.__setattr__(self, "vec", vec)
        object.__setattr__(self, "log", tuple(log))
        object.__setattr__(self, "annihilated", bool(annihilated))


def evolve(state: CorrelationState, op: np.ndarray) -> CorrelationState:
    """Left-multiply the correlation-space vector by ``op`` and append to the log."""
    op = np.asarray(op, dtype=complex)
    if op.shape[1] != state.vec.size:
        raise ValueError(f"operator shape {op.shape} on vector of length {state.vec.size}")
    new = op @ state.vec
    dead = bool(np.linalg.norm(new) <= 1e-14 * max(1.0, np.linalg.norm(state.vec)))
    return CorrelationState(new, state.log + (op,), state.annihilated or dead)


def right_environments(chain: MpsChain) -> list[np.ndarray]:
    """σ_j for j = 0..n: σ_n = |R⟩⟨R| and σ_{j−1} = Σ_s A_j[s]† σ_j A_j[s].

    ``σ_j`` weights a correlation vector after j sites have been projected:
    the Born marginal of a measured prefix (s_0..s_{j−1}) is v† σ_j v with
    v = A[s_{j−1}]···A[s_0] L, and v† σ_0 v at v = L is the squared state norm.
    """
    sigmas = [np.outer(chain.R, chain.R.conj())]
    for i in range(chain.n - 1, -1, -1):
        s_next = sigmas[0]
        acc = np.zeros_like(s_next)
        for m in chain.tensors[i]:
            acc += m.conj().T @ s_next @ m
        sigmas.insert(0, acc)
    return sigmas


def chain_norm_squared(chain: MpsChain) -> float:
    sigma0 = right_environments(chain)[0]
    return float(np.real(np.vdot(chain.L, sigma0 @ chain.L)))


# ---------------------------------------------------------------------------
# Cross validation
# ---------------------------------------------------------------------------


def cross_validate(
    chain: MpsChain,
    n_projection_checks: int = 8,
    seed: int = 7,
    tol: float = DEFAULT_TOL,
) -> dict:
    """Compare amplitude(), to_statevector() and chained evolve() predictions.

    Returns a report with the maximum deviations; ``consistent`` is true when
    every deviation is below ``tol``.  A corrupted tensor shows up as a large
    ``max_amplitude_deviation``.
    """
    state, norm = to_statevector(chain)
    dims = state.dims
    max_amp_dev = 0.0
    for flat in range(state.amps.size):
        idx = np.unravel_index(flat, dims)
        dev = abs(amplitude(chain, list(idx)) - state.amps[flat])
        max_amp_dev = max(max_amp_dev, float(dev))
    born_dev = abs(float(np.sum(np.abs(state.amps) ** 2)) - norm**2)

    rng = np.random.default_rng(seed)
    max_proj_dev = 0.0
    for _ in range(n_projection_checks):
        kets = [rng.normal(size=chain.d) + 1j * rng.normal(size=chain.d) for _ in range(chain.n)]
        kets = [k / np.linalg.norm(k) for k in kets]
        cs = CorrelationState(chain.L)
        for i, k in enumerate(kets):
            cs = evolve(cs, project_local(chain, i, k))
        via_evolve = complex(np.vdot(chain.R, cs.vec))
        bra = np.array([1.0 + 0j])
        for k in kets:
            bra = np.kron(bra, np.conj(k))
        via_dense = complex(bra @ state.amps)
        max_proj_dev = max(max_proj_dev, abs(via_evolve - via_dense))

    return {
        "n": chain.n,
        "d": chain.d,
        "D": chain.D,
        "norm": norm,
        "max_amplitude_deviation": max_amp_dev,
        "born_sum_deviation": float(born_dev),
        "max_projection_deviation": float(max_proj_dev),
        "consistent": bool(max(max_amp_dev, born_dev, max_proj_dev) < tol),
    }
