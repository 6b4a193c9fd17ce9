"""Constructors for every resource family, in chain/tensor form and dense oracle form.

Families
--------
* ``correlation_chain(k, n)`` — qubit chain with A[s] = G(k)|s⟩⟨s|, L = |+⟩,
  R = G⁻¹|+⟩.  X-type measurements transport the correlation state with G·Zˣ
  by-products; its connected ZZ correlator decays with the ratio ξ = 2sin²(π/k)−1.
* ``aklt_type_chain(n)`` — spin-1 chain with A[0] = H, A[1] = (X−iY)/√2,
  A[2] = (X+iY)/√2 (ladder operators √2|1⟩⟨0| and √2|0⟩⟨1|).
* weighted graphs on a grid: π-phase edges along rows, π/2-phase diagonals
  between adjacent rows; built either by circuit (``weighted_graph_state``) or by
  contracting the factorized site tensors (``wgs_network_state``).
* ``encoded_resource`` — blocks of 2k+1 qubits (k-qubit codeword + k+1 marker
  qubits |0…01⟩) encoding a small cluster state, superposed over all 2k+1 cyclic
  translates.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Iterable, Sequence

import numpy as np

from . import tensor as tz
from .mps import MpsChain
from .statevec import PureState, apply_gate, check_cap, cyclic_shift
from .tensor import LabeledTensor, contract, cphase, g_gate

# ---------------------------------------------------------------------------
# 1-D chains
# ---------------------------------------------------------------------------


def correlation_chain(k: int, n: int) -> MpsChain:
    """Qubit chain with A[s] = G(k)·|s⟩⟨s|, |L⟩ = |+⟩, |R⟩ = G⁻¹|+⟩ (k > 2)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    g = g_gate(k)
    mats = [g @ np.diag([1.0 + 0j, 0]), g @ np.diag([0, 1.0 + 0j])]
    L = tz.PLUS.copy()
    R = np.linalg.inv(g) @ tz.PLUS
    return MpsChain.uniform(n, mats, L, R)


def aklt_type_chain(
    n: int, L: np.ndarray | None = None, R: np.ndarray | None = None
) -> MpsChain:
    """Spin-1 chain with A[0] = H, A[1] = (X−iY)/√2, A[2] = (X+iY)/√2.

    Boundaries default to |0⟩ on both ends and are configurable; the gate
    identities being tested do not depend on the boundary choice.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    a0 = tz.H.copy()
    a1 = (tz.X - 1j * tz.Y) / np.sqrt(2)  # = √2·|1⟩⟨0|
    a2 = (tz.X + 1j * tz.Y) / np.sqrt(2)  # = √2·|0⟩⟨1|
    L = tz.KET0.copy() if L is None else np.asarray(L, dtype=complex)
    R = tz.KET0.copy() if R is None else np.asarray(R, dtype=complex)
    return MpsChain.uniform(n, [a0, a1, a2], L, R)


def projector_chain(n: int) -> MpsChain:
    """Reference chain with A[s] = |s⟩⟨s| and L = R = |0⟩ (product state |0…0⟩)."""
    mats = [np.diag([1.0 + 0j, 0]), np.diag([0, 1.0 + 0j])]
    return MpsChain.uniform(n, mats, tz.KET0, tz.KET0)


def cluster_chain_mps(n: int) -> MpsChain:
    """1-D cluster state in chain form, a cross-check against the circuit build.

    Site matrices A[s] = |s⟩⟨s̃| with |s̃⟩ the sign basis, so the transfer
    ⟨s̃_{i}|s_{i-1}⟩ = (−1)^{s_i s_{i-1}}/√2 reproduces the CZ sign pattern.
    Boundaries |L⟩ = |0⟩ and R = (1,1) make the expansion exactly
    2^{−n/2}·∏(−1)^{s_i s_{i+1}}, the circuit amplitudes with no leftover scale.
    """
    a0 = np.array([[1, 1], [0, 0]], dtype=complex) / np.sqrt(2)  # |0⟩⟨+|
    a1 = np.array([[0, 0], [1, -1]], dtype=complex) / np.sqrt(2)  # |1⟩⟨−|
    return MpsChain.uniform(n, [a0, a1], tz.KET0, np.array([1, 1], dtype=complex))


# ---------------------------------------------------------------------------
# Weighted graphs
# ---------------------------------------------------------------------------

Coord = tuple[int, int]


@dataclass(frozen=True)
class WeightedGraph:
    """Grid graph whose edges carry controlled-phase angles.

    ``edges`` holds ``(u, v, phase)`` with coordinates ``(row, col)`` and
    ``u < v`` lexicographically; the graph is undirected and self-loop-free.
    """

    rows: int
    cols: int
    edges: tuple[tuple[Coord, Coord, float], ...]

    def __post_init__(self) -> None:
        seen = set()
        for u, v, _phase in self.edges:
            if u == v:
                raise ValueError(f"self-loop at {u}")
            if not (self._in_grid(u) and self._in_grid(v)):
                raise ValueError(f"edge ({u},{v}) leaves the {self.rows}x{self.cols} grid")
            key = (u, v) if u < v else (v, u)
            if key in seen:
                raise ValueError(f"duplicate edge {key}")
            seen.add(key)

    def _in_grid(self, c: Coord) -> bool:
        return 0 <= c[0] < self.rows and 0 <= c[1] < self.cols

    @property
    def n_vertices(self) -> int:
        return self.rows * self.cols

    def vertex_index(self, c: Coord) -> int:
        if not self._in_grid(c):
            raise ValueError(f"{c} outside the {self.rows}x{self.cols} grid")
        return c[0] * self.cols + c[1]


def weighted_graph(rows: int, cols: int) -> WeightedGraph:
    """π-phase edges along every row; π/2-phase diagonals (r,c)–(r±1,c+1).

    Every diagonal whose endpoints both lie in the grid is present; boundary
    effects come only from the dangling-leg caps of the tensor form.
    """
    if rows < 1 or cols < 1:
        raise ValueError("grid must be at least 1x1")
    edges: list[tuple[Coord, Coord, float]] = []
    for r in range(rows):
        for c in range(cols - 1):
            edges.append((((r, c)), ((r, c + 1)), float(np.pi)))
    for r in range(rows):
        for c in range(cols - 1):
            for dr in (-1, 1):
                rr = r + dr
                if 0 <= rr < rows:
                    u, v = (r, c), (rr, c + 1)
                    if u > v:
                        u, v = v, u
                    edges.append((u, v, float(np.pi / 2)))
    # deduplicate while preserving deterministic order
    uniq: dict[tuple[Coord, Coord], float] = {}
    for u, v, p in edges:
        uniq.setdefault((u, v), p)
    return WeightedGraph(rows, cols, tuple((u, v, p) for (u, v), p in sorted(uniq.items())))


def graph_state(
    n_vertices: int, edges: Iterable[tuple[int, int, float]]
) -> PureState:
    """Apply CPhase(phase) on every edge to |+⟩^⊗n (order-independent)."""
    check_cap([2] * n_vertices)
    state = PureState.plus_states(n_vertices)
    for a, b, phase in edges:
        state = apply_gate(state, [int(a), int(b)], cphase(float(phase)))
    return state


def weighted_graph_state(g: WeightedGraph) -> PureState:
    """Dense state of the weighted graph (vertices in row-major order)."""
    return graph_state(
        g.n_vertices,
        ((g.vertex_index(u), g.vertex_index(v), p) for u, v, p in g.edges),
    )


def cluster_state(n_vertices: int, edges: Iterable[tuple[int, int]]) -> PureState:
    """Plain cluster state: all edges carry phase π."""
    return graph_state(n_vertices, ((a, b, float(np.pi)) for a, b in edges))


# ---------------------------------------------------------------------------
# Weighted-graph site tensors (factorized form) and network contraction
# ---------------------------------------------------------------------------

#: Leg roles: incoming legs carry ⟨s| deltas, outgoing legs carry kets.
WGS_IN_LEGS = ("l", "ld", "rd")
WGS_OUT_LEGS = ("r", "lu", "ru")


def _sket(s: int) -> np.ndarray:
    """S^s|+⟩ = (|0⟩ + i^s|1⟩)/√2."""
    return np.array([1, 1j**s], dtype=complex) / np.sqrt(2)


def _zket(s: int) -> np.ndarray:
    """Z^s|+⟩ = (|0⟩ + (−1)^s|1⟩)/√2."""
    return np.array([1, (-1.0) ** s], dtype=complex) / np.sqrt(2)


def wgs_site_tensor(s: int) -> LabeledTensor:
    """Site tensor slice at physical value ``s``: S^s|+⟩_{ru} S^s|+⟩_{lu} Z^s|+⟩_r ⟨s|_{ld}⟨s|_{rd}⟨s|_l.

    Axis order: (l, ld, rd, r, lu, ru), all dimension 2.
    """
    if s not in (0, 1):
        raise ValueError("physical value must be a bit")
    delta = np.zeros(2, dtype=complex)
    delta[s] = 1.0
    data = np.einsum(
        "a,b,c,d,e,f->abcdef", delta, delta, delta, _zket(s), _sket(s), _sket(s)
    )
    return LabeledTensor(("l", "ld", "rd", "r", "lu", "ru"), data)


def wgs_full_tensor() -> LabeledTensor:
    """Rank-7 site tensor with the physical axis ``s`` first."""
    data = np.stack([wgs_site_tensor(s).data for s in (0, 1)], axis=0)
    return LabeledTensor(("s", "l", "ld", "rd", "r", "lu", "ru"), data)


def wgs_boundary() -> dict[str, np.ndarray]:
    """Caps for dangling legs: ⟨0| on outgoing ru/lu/r legs, |+⟩ on incoming l/ld/rd."""
    ket0 = np.array([1, 0], dtype=complex)
    plus = np.array([1, 1], dtype=complex) / np.sqrt(2)
    return {"r": ket0, "lu": ket0, "ru": ket0, "l": plus, "ld": plus, "rd": plus}


def wgs_neighbor(coord: Coord, leg: str) -> tuple[Coord, str]:
    """The (site, leg) each outgoing leg plugs into: r→l right, ru→ld up-right, lu→rd up-left."""
    r, c = coord
    if leg == "r":
        return (r, c + 1), "l"
    if leg == "ru":
        return (r - 1, c + 1), "ld"
    if leg == "lu":
        return (r - 1, c - 1), "rd"
    raise ValueError(f"not an outgoing leg: {leg}")


def wgs_network_state(rows: int, cols: int) -> PureState:
    """Contract the factorized site-tensor network with boundary caps into a dense state.

    Sites are contracted in row-major order through the generic labeled-tensor
    engine; open physical axes survive as ``s_r_c`` labels and are reordered to
    row-major at the end.  Agrees with the circuit construction up to global
    phase — that duality is an acceptance criterion.
    """
    check_cap([2] * (rows * cols))
    caps = wgs_boundary()

    def in_grid(rc: Coord) -> bool:
        return 0 <= rc[0] < rows and 0 <= rc[1] < cols

    acc: LabeledTensor | None = None
    for r in range(rows):
        for c in range(cols):
            t = wgs_full_tensor().relabel(
                {leg: f"{leg}_{r}_{c}" for leg in ("s",) + WGS_IN_LEGS + WGS_OUT_LEGS}
            )
            # cap dangling legs of this site
            for leg in WGS_OUT_LEGS:
                if not in_grid(wgs_neighbor((r, c), leg)[0]):
                    cap = LabeledTensor((f"cap_{leg}_{r}_{c}",), caps[leg])
                    t = contract(t, cap, [(f"{leg}_{r}_{c}", f"cap_{leg}_{r}_{c}")])
            for leg in WGS_IN_LEGS:
                nbr = _incoming_source((r, c), leg)
                if not in_grid(nbr):
                    cap = LabeledTensor((f"cap_{leg}_{r}_{c}",), caps[leg])
                    t = contract(t, cap, [(f"{leg}_{r}_{c}", f"cap_{leg}_{r}_{c}")])
            if acc is None:
                acc = t
                continue
            # bonds between the accumulated network and this site
            pairs = []
            for leg in WGS_IN_LEGS:
                src = _incoming_source((r, c), leg)
                if in_grid(src) and src < (r, c):
                    out_leg = _outgoing_leg_toward(src, (r, c))
                    pairs.append((f"{out_leg}_{src[0]}_{src[1]}", f"{leg}_{r}_{c}"))
            for leg in WGS_OUT_LEGS:
                dst, in_leg = wgs_neighbor((r, c), leg)
                if in_grid(dst) and dst < (r, c):
                    pairs.append((f"{leg}_{r}_{c}", f"{in_leg}_{dst[0]}_{dst[1]}"))
            acc = contract(acc, t, [(a, b) if a in acc.labels else (b, a) for a, b in pairs])
    assert acc is not None
    order = [f"s_{r}_{c}" for r in range(rows) for c in range(cols)]
    perm = [acc.axis(lbl) for lbl in order]
    if sorted(perm) != list(range(len(acc.labels))):
        raise AssertionError(f"unexpected leftover labels {acc.labels}")
    data = np.transpose(acc.data, perm)
    # the boundary caps are not isometries, so the raw contraction carries a
    # lattice-dependent scale; normalize so the duality holds up to phase only
    return PureState((2,) * (rows * cols), data.ravel()).normalized()


def _incoming_source(coord: Coord, leg: str) -> Coord:
    """The neighbor whose outgoing leg feeds this incoming leg.

    Inverts :func:`wgs_neighbor`: ``l`` is fed by the left neighbor's ``r``,
    ``ld`` by the down-left neighbor's ``ru``, ``rd`` by the down-right
    neighbor's ``lu``.
    """
    r, c = coord
    if leg == "l":
        return (r, c - 1)
    if leg == "ld":
        return (r + 1, c - 1)
    if leg == "rd":
        return (r + 1, c + 1)
    raise ValueError(f"not an incoming leg: {leg}")


def _outgoing_leg_toward(src: Coord, dst: Coord) -> str:
    for leg in WGS_OUT_LEGS:
        if wgs_neighbor(src, leg)[0] == dst:
            return leg
    raise ValueError(f"no outgoing leg from {src} to {dst}")


# ---------------------------------------------------------------------------
# Encoded resource
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EncodedResourceSpec:
    """Block parameter k (block length 2k+1), block count m, and the base cluster edges.

    The default base graph is a ring cluster on the m logical qubits (for m ≤ 2
    the ring collapses to a single edge / no edge).
    """

    k: int
    m: int
    base_edges: tuple[tuple[int, int], ...] = field(default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        if self.k < 1 or self.m < 1:
            raise ValueError("k and m must be >= 1")
        if self.base_edges is None:
            edges = set()
            for i in range(self.m):
                a, b = i, (i + 1) % self.m
                if a != b:
                    edges.add((min(a, b), max(a, b)))
            object.__setattr__(self, "base_edges", tuple(sorted(edges)))

    @property
    def block(self) -> int:
        return 2 * self.k + 1

    @property
    def n_qubits(self) -> int:
        return self.m * self.block

    def codeword_sites(self, b: int, t: int = 0) -> list[int]:
        """Physical sites of block ``b``'s codeword under translation offset ``t``."""
        base = b * self.block
        return [(base + j + t) % self.n_qubits for j in range(self.k)]

    def marker_sites(self, b: int, t: int = 0) -> list[int]:
        base = b * self.block
        return [(base + self.k + j + t) % self.n_qubits for j in range(self.k + 1)]


def codeword_state(k: int, bit: int) -> np.ndarray:
    """|O_k⟩ = |0⟩^⊗k for logical 0; |W_k⟩ = single-excitation superposition for logical 1."""
    v = np.zeros(2**k, dtype=complex)
    if bit == 0:
        v[0] = 1.0
    else:
        for j in range(k):
            v[1 << (k - 1 - j)] = 1.0 / np.sqrt(k)
    return v


def marker_state(k: int) -> np.ndarray:
    """|0,…,0,1⟩ on k+1 qubits."""
    v = np.zeros(2 ** (k + 1), dtype=complex)
    v[1] = 1.0
    return v


def encoded_component(spec: EncodedResourceSpec, t: int = 0) -> PureState:
    """T^t|φ⟩: the encoded base cluster with markers, cyclically shifted by ``t`` sites."""
    check_cap([2] * spec.n_qubits)
    base = cluster_state(spec.m, spec.base_edges)
    marker = marker_state(spec.k)
    amps = np.zeros(2**spec.n_qubits, dtype=complex)
    # expand each logical configuration into codewords ⊗ markers
    for idx in range(2**spec.m):
        coeff = base.amps[idx]
        if coeff == 0:
            continue
        vec = np.array([1.0 + 0j])
        for q in range(spec.m):
            bit = (idx >> (spec.m - 1 - q)) & 1
            vec = np.kron(vec, codeword_state(spec.k, bit))
            vec = np.kron(vec, marker)
        amps += coeff * vec
    phi = PureState((2,) * spec.n_qubits, amps)
    if t % spec.n_qubits:
        # the translation acts block-internally: shifting by t within the cyclic row
        phi = cyclic_shift(phi, t % spec.n_qubits)
    return phi


def encoded_resource(spec: EncodedResourceSpec) -> PureState:
    """Normalized Σ_{t=0}^{2k} T^t|φ⟩ over all cyclic translates."""
    total = None
    for t in range(spec.block):
        comp = encoded_component(spec, t)
        total = comp.amps if total is None else total + comp.amps
    state = PureState((2,) * spec.n_qubits, total)
    return state.normalized()


# ---------------------------------------------------------------------------
# Resource specs (serializable)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ResourceSpec:
    family: str
    params: dict[str, Any]

    def to_json(self) -> dict[str, Any]:
        return {"family": self.family, "params": dict(sorted(self.params.items()))}

    @classmethod
    def from_json(cls, doc: dict[str, Any]) -> "ResourceSpec":
        return cls(family=doc["family"], params=dict(doc.get("params", {})))


_FAMILIES = ("correlation_chain", "aklt_type_chain", "projector_chain", "weighted_graph", "encoded")


def parse_resource_spec(text: str) -> ResourceSpec:
    """Parse either a JSON document or the compact ``family:key=val,key=val`` form."""
    text = text.strip()
    if text.startswith("{"):
        return ResourceSpec.from_json(json.loads(text))
    family, _, rest = text.partition(":")
    family = family.strip()
    params: dict[str, Any] = {}
    if rest.strip():
        for item in rest.split(","):
            key, _, val = item.partition("=")
            if not _:
                raise ValueError(f"malformed parameter {item!r} in resource spec")
            key = key.strip()
            try:
                params[key] = int(val)
            except ValueError:
                params[key] = float(val)
    if family not in _FAMILIES:
        raise ValueError(f"unknown resource family {family!r} (known: {', '.join(_FAMILIES)})")
    return ResourceSpec(family, params)


def build_resource(spec: ResourceSpec):
    """Instantiate a resource from its spec; returns a chain, graph, or spec object."""
    p = spec.params
    if spec.family == "correlation_chain":
        return correlation_chain(int(p["k"]), int(p["n"]))
    if spec.family == "aklt_type_chain":
        return aklt_type_chain(int(p["n"]))
    if spec.family == "projector_chain":
        return projector_chain(int(p["n"]))
    if spec.family == "weighted_graph":
        return weighted_graph(int(p["rows"]), int(p["cols"]))
    if spec.family == "encoded":
        return EncodedResourceSpec(k=int(p["k"]), m=int(p["m"]))
    raise ValueError(f"unknown resource family {spec.family!r}")
