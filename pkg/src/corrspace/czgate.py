"""Logical controlled-Z between the outer lines of a three-row weighted-graph lattice.

The lattice is the 3×N weighted graph state (π horizontals, π/2 diagonals).
Rows 0 and 2 are the two logical correlation lines; row 1 mediates.  A
*window* at anchor column ``a`` spans columns a−1..a+1: its eight fresh sites
(rows 0/2 in X, the two flanking mediator sites in Z) succeed when all eight
outcomes are 0, after which the central mediator (1, a) is measured in Y and
the remaining columns are transported out (X, Z, X per column).  On failure
the central site is finalized in Z and the protocol restarts at anchor a+3;
running out of windows exhausts the lattice.

Everything observable is computed two independent ways: the frontier
statevector simulation (`WgsFrontierSim`) supplies honest Born probabilities,
while `lattice_op` contracts the factorized site-tensor network with open
logical legs to produce the realized two-qubit operator of a fully measured
branch.  `logical_cz` drives an attempt/retry run and cross-checks its own
by-product bookkeeping against that contraction before returning a record.
"""
from __future__ import annotations

from typing import Iterable, Mapping, Sequence

import numpy as np

from . import tensor as tz
from .bases import BasisSpec, x_basis, y_basis, z_basis
from .groups import ProjectiveGroup, closure
from .protocols import ProtocolRecord, reduce_line
from .resources import (
    WGS_IN_LEGS,
    WGS_OUT_LEGS,
    _incoming_source,
    wgs_boundary,
    wgs_full_tensor,
    wgs_neighbor,
)
from .statevec import PureState, apply_gate, measure_site, site_probabilities
from .tensor import LabeledTensor, cphase, contract

Site = tuple[int, int]

#: diag(1, 1, 1, −1) on (upper ⊗ lower); upper = row 0 is the most significant bit.
CZ4 = np.diag([1.0, 1.0, 1.0, -1.0]).astype(complex)

ROWS = 3
TRANSPORT_BASES = (x_basis(), z_basis(), x_basis())


# ---------------------------------------------------------------------------
# Protocol schedule
# ---------------------------------------------------------------------------


def window_columns(anchor: int) -> tuple[int, int, int]:
    return (anchor - 1, anchor, anchor + 1)


def attempt_anchors(cols: int, anchor: int) -> list[int]:
    """Anchor columns tried in order: anchor, anchor+3, … while the window fits."""
    if anchor < 1:
        raise ValueError("anchor must leave a column to its left")
    out = []
    a = anchor
    while a + 1 <= cols - 1:
        out.append(a)
        a += 3
    return out


def fresh_sites(anchor: int) -> list[Site]:
    """The eight window sites whose outcomes gate success; central (1, a) deferred."""
    sites = []
    for c in window_columns(anchor):
        for r in range(ROWS):
            if (r, c) != (1, anchor):
                sites.append((r, c))
    return sites


def site_basis(site: Site, central_success: bool | None = None) -> BasisSpec:
    """Measurement basis of a site under the protocol.

    Rows 0/2 are always X; mediator sites are Z except a window's central site,
    which is Y on success and Z on failure (``central_success`` selects).
    """
    r, _c = site
    if r in (0, 2):
        return x_basis()
    if central_success is None:
        return z_basis()
    return y_basis() if central_success else z_basis()


# ---------------------------------------------------------------------------
# Frontier statevector simulation
# ---------------------------------------------------------------------------


class _FrontierCore:
    """Active-site amplitudes of the lazily materialized lattice (functional style).

    Columns appear on demand: materializing column j appends its three |+⟩
    qubits and applies the π horizontals and π/2 diagonals back to column j−1.
    A site may be measured once column ``c+1`` exists (all its edges are then
    present); measuring removes the qubit.  Active width never exceeds four
    columns during a window, so states stay ≤ 2¹²-dimensional.
    """

    __slots__ = ("rows", "cols", "sites", "amps", "next_col")

    def __init__(self, rows: int, cols: int, sites: tuple[Site, ...] = (),
                 amps: np.ndarray | None = None, next_col: int = 0) -> None:
        self.rows = rows
        self.cols = cols
        self.sites = sites
        self.amps = np.array([1.0 + 0j]) if amps is None else amps
        self.next_col = next_col

    def _state(self) -> PureState:
        return PureState((2,) * len(self.sites), self.amps)

    def materialize_column(self) -> "_FrontierCore":
        j = self.next_col
        if j >= self.cols:
            raise ValueError("no further columns")
        plus_block = np.full(2 ** self.rows, 2.0 ** (-self.rows / 2), dtype=complex)
        sites = self.sites + tuple((r, j) for r in range(self.rows))
        state = PureState((2,) * len(sites), np.kron(self.amps, plus_block))
        index = {s: i for i, s in enumerate(sites)}
        if j > 0:
            for r in range(self.rows):
                if (r, j - 1) in index:
                    state = apply_gate(state, [index[(r, j - 1)], index[(r, j)]],
                                       cphase(np.pi))
                for rr in (r - 1, r + 1):
                    if 0 <= rr < self.rows and (r, j - 1) in index:
                        state = apply_gate(state, [index[(r, j - 1)], index[(rr, j)]],
                                           cphase(np.pi / 2))
        return _FrontierCore(self.rows, self.cols, sites, state.amps, j + 1)

    def ensure_for(self, site: Site) -> "_FrontierCore":
        """Materialize through column c+1 so every edge at ``site`` exists."""
        need = min(site[1] + 1, self.cols - 1)
        core = self
        while core.next_col <= need:
            core = core.materialize_column()
        return core

    def probabilities(self, site: Site, basis: BasisSpec) -> np.ndarray:
        core = self.ensure_for(site)
        return site_probabilities(core._state(), core.sites.index(site), basis)

    def collapse(self, site: Site, basis: BasisSpec, outcome: int) -> tuple[float, "_FrontierCore"]:
        core = self.ensure_for(site)
        i = core.sites.index(site)
        res = measure_site(core._state(), i, basis, force=outcome, keep_site=False)
        sites = core.sites[:i] + core.sites[i + 1:]
        return res.probability, _FrontierCore(core.rows, core.cols, sites,
                                              res.post_state.amps, core.next_col)

    def split(self, site: Site, basis: BasisSpec, tol: float = 1e-14) -> list[tuple[int, float, "_FrontierCore"]]:
        """All nonzero-probability branches of measuring ``site``."""
        core = self.ensure_for(site)
        probs = core.probabilities(site, basis)
        out = []
        for o, p in enumerate(probs):
            if p > tol:
                _, child = core.collapse(site, basis, o)
                out.append((o, float(p), child))
        return out


class WgsFrontierSim:
    """Single-run measurement simulation of the 3×N weighted graph state."""

    def __init__(self, rows: int = ROWS, cols: int = 9) -> None:
        if rows != ROWS:
            raise ValueError("the logical-CZ lattice has exactly three rows")
        if cols < 3:
            raise ValueError("need at least one full window (3 columns)")
        self.core = _FrontierCore(rows, cols)
        self.measured: dict[Site, tuple[BasisSpec, int]] = {}
        self.probability = 1.0

    @property
    def rows(self) -> int:
        return self.core.rows

    @property
    def cols(self) -> int:
        return self.core.cols

    def measure(self, site: Site, basis: BasisSpec, force: int | None = None,
                rng: np.random.Generator | None = None) -> int:
        if site in self.measured:
            raise ValueError(f"site {site} already measured")
        if force is None:
            if rng is None:
                raise ValueError("sampling a measurement needs an rng")
            probs = self.core.probabilities(site, basis)
            force = int(rng.choice(len(probs), p=probs / probs.sum()))
        p, self.core = self.core.collapse(site, basis, int(force))
        self.measured[site] = (basis, int(force))
        self.probability *= p
        return int(force)

    def outcome(self, site: Site) -> int:
        return self.measured[site][1]


# ---------------------------------------------------------------------------
# Honest realized-operator contraction (open logical legs)
# ---------------------------------------------------------------------------


def lattice_op(measured: Mapping[Site, tuple[BasisSpec, int]], cols: int,
               rows: int = ROWS, open_rows: Sequence[int] = (0, 2)) -> np.ndarray:
    """Contract the fully measured lattice into its logical operator.

    Every site's physical index is projected on its measurement ket; the
    horizontal virtual legs of ``open_rows`` stay open at both lattice ends
    (l at column 0 = input, r at the last column = output); every other
    dangling leg takes the standard boundary cap.  Returns the 4×4 matrix
    M[(o_u, o_l), (i_u, i_l)] with the row-0 line most significant.  The scale
    carries the branch's amplitude factors; only the ray is meaningful.
    """
    caps = wgs_boundary()
    open_rows = tuple(open_rows)

    def in_grid(rc: Site) -> bool:
        return 0 <= rc[0] < rows and 0 <= rc[1] < cols

    acc: LabeledTensor | None = None
    done: set[Site] = set()
    open_labels: list[str] = []
    for c in range(cols):
        for r in range(rows):
            if (r, c) not in measured:
                raise ValueError(f"site {(r, c)} has no measurement record")
            basis, outcome = measured[(r, c)]
            ket = basis.vectors[outcome]
            full = wgs_full_tensor().relabel(
                {leg: f"{leg}_{r}_{c}" for leg in ("s",) + WGS_IN_LEGS + WGS_OUT_LEGS}
            )
            proj = LabeledTensor((f"s_{r}_{c}",), np.conj(ket))
            t = contract(full, proj, [(f"s_{r}_{c}", f"s_{r}_{c}")])
            for leg in WGS_OUT_LEGS:
                if in_grid(wgs_neighbor((r, c), leg)[0]):
                    continue
                if leg == "r" and r in open_rows and c == cols - 1:
                    t = t.relabel({f"r_{r}_{c}": f"out_{r}"})
                    open_labels.append(f"out_{r}")
                    continue
                cap = LabeledTensor((f"cap_{leg}_{r}_{c}",), caps[leg])
                t = contract(t, cap, [(f"{leg}_{r}_{c}", f"cap_{leg}_{r}_{c}")])
            for leg in WGS_IN_LEGS:
                if in_grid(_incoming_source((r, c), leg)):
                    continue
                if leg == "l" and r in open_rows and c == 0:
                    t = t.relabel({f"l_{r}_{c}": f"in_{r}"})
                    open_labels.append(f"in_{r}")
                    continue
                cap = LabeledTensor((f"cap_{leg}_{r}_{c}",), caps[leg])
                t = contract(t, cap, [(f"{leg}_{r}_{c}", f"cap_{leg}_{r}_{c}")])
            if acc is None:
                acc = t
                done.add((r, c))
                continue
            pairs = []
            for leg in WGS_IN_LEGS:
                src = _incoming_source((r, c), leg)
                if in_grid(src) and src in done:
                    out_leg = next(
                        lg for lg in WGS_OUT_LEGS if wgs_neighbor(src, lg)[0] == (r, c)
                    )
                    pairs.append((f"{out_leg}_{src[0]}_{src[1]}", f"{leg}_{r}_{c}"))
            for leg in WGS_OUT_LEGS:
                dst, in_leg = wgs_neighbor((r, c), leg)
                if in_grid(dst) and dst in done:
                    pairs.append((f"{in_leg}_{dst[0]}_{dst[1]}", f"{leg}_{r}_{c}"))
            acc = contract(acc, t, pairs)
            done.add((r, c))
    assert acc is not None
    order = [f"out_{open_rows[0]}", f"out_{open_rows[1]}",
             f"in_{open_rows[0]}", f"in_{open_rows[1]}"]
    if sorted(acc.labels) != sorted(order):
        raise AssertionError(f"unexpected leftover legs {acc.labels}")
    data = np.transpose(acc.data, [acc.axis(lbl) for lbl in order])
    return data.reshape(4, 4)


# ---------------------------------------------------------------------------
# Factor extraction and the Clifford by-product group
# ---------------------------------------------------------------------------


def factorize_local(m: np.ndarray, tol: float = 1e-9) -> tuple[np.ndarray, np.ndarray] | None:
    """Split a 4×4 matrix as kron(a, b), or None if it is not a tensor product.

    Works by the reshuffled-SVD test: m viewed as a matrix on (row pair) ×
    (column pair) index groups has rank 1 exactly when m = a ⊗ b.
    """
    m = np.asarray(m, dtype=complex)
    t = m.reshape(2, 2, 2, 2).transpose(0, 2, 1, 3).reshape(4, 4)
    u, s, vh = np.linalg.svd(t)
    if s[0] == 0.0 or s[1] > tol * s[0]:
        return None
    a = np.sqrt(s[0]) * u[:, 0].reshape(2, 2)
    b = np.sqrt(s[0]) * vh[0].reshape(2, 2)
    return a, b


def decompose_realized(
    m: np.ndarray,
    pre_upper: np.ndarray | None = None,
    pre_lower: np.ndarray | None = None,
    tol: float = 1e-9,
) -> tuple[str, np.ndarray, np.ndarray]:
    """Classify a realized logical operator modulo recorded input-side factors.

    Peels ``pre_upper ⊗ pre_lower`` off the input side, then returns
    ("cz", a, b) when the remainder is (a ⊗ b)·CZ or ("product", a, b) when it
    is a ⊗ b; anything else raises ``ArithmeticError`` because the lattice
    protocol cannot produce it.
    """
    n = np.asarray(m, dtype=complex)
    if pre_upper is not None or pre_lower is not None:
        pu = np.eye(2) if pre_upper is None else pre_upper
        pl = np.eye(2) if pre_lower is None else pre_lower
        n = n @ np.linalg.inv(np.kron(pu, pl))
    f = factorize_local(n @ CZ4, tol)
    if f is not None:
        return ("cz", f[0], f[1])
    f = factorize_local(n, tol)
    if f is not None:
        return ("product", f[0], f[1])
    raise ArithmeticError("realized operator is neither (a⊗b)·CZ nor a⊗b — implementation bug")


_CLIFFORD: ProjectiveGroup | None = None
_CLIFFORD_GEN_NAMES = ("H", "S")


def clifford_group() -> ProjectiveGroup:
    """⟨H, S⟩ modulo phase — order 24; the lattice's by-product group."""
    global _CLIFFORD
    if _CLIFFORD is None:
        _CLIFFORD = closure([tz.H, tz.S])
    return _CLIFFORD


def _unitize(m: np.ndarray) -> np.ndarray:
    scale = np.sqrt(np.trace(m.conj().T @ m).real / 2.0)
    if scale == 0.0:
        raise ValueError("zero matrix")
    return m / scale


def clifford_word(m: np.ndarray) -> tuple[str, ...]:
    """Generator names (leftmost outermost) of a matrix's Clifford class."""
    el = clifford_group().find(_unitize(m))
    if el is None:
        raise ValueError("matrix is not proportional to a ⟨H,S⟩ element")
    return tuple(_CLIFFORD_GEN_NAMES[i] for i in el.word)


_SEGMENTS = ("u", "l", "u_in", "l_in")


def tag_word(segment: str, word: Iterable[str]) -> tuple[str, ...]:
    if segment not in _SEGMENTS:
        raise ValueError(f"unknown by-product segment {segment!r}")
    return tuple(f"{segment}:{name}" for name in word)


def byproduct_factors(word: Sequence[str]) -> dict[str, np.ndarray]:
    """Rebuild the four single-qubit factors from a tagged by-product word.

    Returns {"u", "l", "u_in", "l_in"} matrices with the realized operator
    satisfying M ∝ (u ⊗ l) · CZ^{cz} · (u_in ⊗ l_in).
    """
    mats = {seg: np.eye(2, dtype=complex) for seg in _SEGMENTS}
    for letter in word:
        seg, _, name = letter.partition(":")
        if seg not in _SEGMENTS or not name:
            raise ValueError(f"malformed by-product letter {letter!r}")
        mats[seg] = mats[seg] @ tz.named_gate(name)
    return mats


# ---------------------------------------------------------------------------
# Per-column line factors (checked against the patch contraction)
# ---------------------------------------------------------------------------


def _line_factor(r: int, c: int, outcomes: Mapping[Site, int], cols: int) -> np.ndarray:
    """H·S^{2x+z} contributed to line ``r`` by transport-like column ``c``.

    The z sum runs over the mediator neighbours (1, c±1); absent neighbours
    (grid edge) enter as 0, which is exactly what the boundary caps contract
    to.  Row 0's mediators sit below it (ld/rd slots), row 2's above (lu/ru).
    """
    x = outcomes[(r, c)]
    z_left = outcomes[(1, c - 1)] if c - 1 >= 0 else 0
    z_right = outcomes[(1, c + 1)] if c + 1 <= cols - 1 else 0
    zs = (0, 0, z_left, z_right) if r == 0 else (z_left, z_right, 0, 0)
    formula, _patch = reduce_line(x, zs)
    return formula


def _ordered_product(factors: Iterable[np.ndarray]) -> np.ndarray:
    """Left-multiply in iteration order: later factors outermost."""
    out = np.eye(2, dtype=complex)
    for f in factors:
        out = f @ out
    return out


# ---------------------------------------------------------------------------
# The protocol driver
# ---------------------------------------------------------------------------


def logical_cz(
    sim: WgsFrontierSim,
    anchor: int = 1,
    mode: str = "sample",
    seed: int | None = None,
    outcomes: Mapping[Site, int] | str | None = None,
    raise_on_exhaust: bool = False,
    tol: float = 1e-9,
) -> ProtocolRecord:
    """Run the windowed CZ protocol on ``sim`` and return its branch record.

    mode "sample" draws outcomes from the lattice's Born distribution (seed
    required); mode "force" replays ``outcomes`` (a {(row, col): bit} mapping,
    or the string "designated" for the all-zero branch) and fails on
    zero-probability requests.  The returned record holds every site outcome
    plus a synthetic ``success`` flag, the joint branch probability, the
    honestly contracted 4×4 realized operator, a tagged by-product word (see
    :func:`byproduct_factors`), and the attempt count.  The driver recomputes
    the operator implied by its by-product bookkeeping and raises
    ``ArithmeticError`` if the contraction disagrees — that can only be a bug,
    not bad luck.  An exhausted lattice returns a ``success=0`` record unless
    ``raise_on_exhaust`` is set.
    """
    if mode not in ("sample", "force"):
        raise ValueError("mode must be sample or force")
    rng = None
    if mode == "sample":
        if seed is None:
            raise ValueError("sample mode needs a seed")
        rng = np.random.default_rng(seed)

    if mode == "force":
        if outcomes is None:
            raise ValueError("force mode needs outcomes")
        if outcomes == "designated":
            lookup = lambda site: 0  # noqa: E731 - tiny closure
        else:
            # a record's outcome dict can be replayed directly; its synthetic
            # "success" entry is not a site and is skipped
            table = {tuple(k) if not isinstance(k, str) else _parse_site(k): int(v)
                     for k, v in outcomes.items() if k != "success"}

            def lookup(site: Site) -> int:
                if site not in table:
                    raise ValueError(f"no forced outcome for site {site}")
                return table[site]
    else:
        lookup = None

    def do_measure(site: Site, basis: BasisSpec) -> int:
        if lookup is not None:
            return sim.measure(site, basis, force=lookup(site))
        return sim.measure(site, basis, rng=rng)

    cols = sim.cols
    anchors = attempt_anchors(cols, anchor)
    if not anchors:
        raise ValueError(f"no window fits in {cols} columns at anchor {anchor}")

    # leading transport columns before the first window
    for c in range(0, anchors[0] - 1):
        for r in range(ROWS):
            do_measure((r, c), TRANSPORT_BASES[r])

    success_anchor: int | None = None
    attempts = 0
    for a in anchors:
        attempts += 1
        window_ok = True
        for site in fresh_sites(a):
            o = do_measure(site, site_basis(site))
            window_ok = window_ok and o == 0
        do_measure((1, a), site_basis((1, a), central_success=window_ok))
        if window_ok:
            success_anchor = a
            break
    last_attempted = anchors[attempts - 1]

    # everything right of the last processed window is transported out
    for c in range(last_attempted + 2, cols):
        for r in range(ROWS):
            do_measure((r, c), TRANSPORT_BASES[r])

    if success_anchor is None and raise_on_exhaust:
        raise RuntimeError(f"lattice exhausted after {attempts} windows with no success")

    outcome_bits = {site: ob[1] for site, ob in sim.measured.items()}
    realized = lattice_op(sim.measured, cols)

    # by-product bookkeeping from the per-column reduction formulas
    if success_anchor is None:
        post_cols = [c for c in range(cols)]
        pre_cols: list[int] = []
    else:
        pre_cols = [c for c in range(cols) if c < success_anchor - 1]
        post_cols = [c for c in range(cols) if c > success_anchor + 1]
    factors = {
        r: {
            "pre": _ordered_product(_line_factor(r, c, outcome_bits, cols) for c in pre_cols),
            "post": _ordered_product(_line_factor(r, c, outcome_bits, cols) for c in post_cols),
        }
        for r in (0, 2)
    }
    pre_u, pre_l = factors[0]["pre"], factors[2]["pre"]
    kind, rem_u, rem_l = decompose_realized(realized, pre_u, pre_l, tol)
    if success_anchor is None:
        if kind != "product":
            raise ArithmeticError("exhausted branch did not reduce to a local product")
        left_u, left_l = rem_u, rem_l
    else:
        if kind != "cz":
            raise ArithmeticError("success branch did not realize CZ modulo local factors")
        left_u, left_l = rem_u, rem_l
        for r, mat in ((0, rem_u), (2, rem_l)):
            # the remainder must agree with post-window transport bookkeeping
            extra = np.linalg.inv(factors[r]["post"]) @ mat
            if clifford_group().find(_unitize(extra)) is None:
                raise ArithmeticError("window factor left the Clifford group")
    word = (
        tag_word("u", clifford_word(left_u))
        + tag_word("l", clifford_word(left_l))
        + tag_word("u_in", clifford_word(pre_u))
        + tag_word("l_in", clifford_word(pre_l))
    )

    record_outcomes = {f"{r},{c}": int(b) for (r, c), b in sorted(outcome_bits.items())}
    record_outcomes["success"] = int(success_anchor is not None)
    return ProtocolRecord(
        outcomes=record_outcomes,
        probability=float(sim.probability),
        realized_op=realized,
        byproduct=word,
        attempts=attempts,
    )


def _parse_site(text: str) -> Site:
    r, _, c = text.partition(",")
    return (int(r), int(c))


# ---------------------------------------------------------------------------
# Exhaustive merged-branch probability scan
# ---------------------------------------------------------------------------


def _canonical_key(core: _FrontierCore, digits: int = 12) -> tuple:
    v = core.amps
    n = np.linalg.norm(v)
    if n == 0.0:
        raise ValueError("zero frontier state")
    v = v / n
    idx = int(np.argmax(np.abs(v)))
    v = v * (np.conj(v[idx]) / abs(v[idx]))
    rounded = np.round(np.ascontiguousarray(v).view(np.float64), digits)
    return (core.sites, core.next_col, rounded.tobytes())


class _MergedSet:
    """Branch ensemble keyed by canonical frontier state.

    ``mass`` sums probability, ``count`` counts nonzero-probability leaves
    feeding the state; representatives are exact branch states, so conditional
    probabilities computed from them are exact for every merged branch (two
    branches merge only when their collapsed states coincide).
    """

    def __init__(self) -> None:
        self.table: dict[tuple, list] = {}

    def add(self, core: _FrontierCore, mass: float, count: int) -> None:
        key = _canonical_key(core)
        slot = self.table.get(key)
        if slot is None:
            self.table[key] = [core, mass, count]
        else:
            slot[1] += mass
            slot[2] += count

    def measure_all(self, site: Site, basis: BasisSpec) -> "_MergedSet":
        out = _MergedSet()
        for core, mass, count in self.table.values():
            for _o, p, child in core.split(site, basis):
                out.add(child, mass * p, count)
        return out

    def measure_split(self, site: Site, basis: BasisSpec) -> tuple["_MergedSet", "_MergedSet"]:
        """Separate the outcome-0 branches from the rest."""
        zero, rest = _MergedSet(), _MergedSet()
        for core, mass, count in self.table.values():
            for o, p, child in core.split(site, basis):
                (zero if o == 0 else rest).add(child, mass * p, count)
        return zero, rest

    @property
    def mass(self) -> float:
        return float(sum(slot[1] for slot in self.table.values()))

    @property
    def count(self) -> int:
        return int(sum(slot[2] for slot in self.table.values()))

    def __len__(self) -> int:
        return len(self.table)


def branch_probability_scan(cols: int = 9, anchor: int = 1) -> dict:
    """Exact masses of every protocol class by exhaustive merged enumeration.

    Walks all measurement branches of the windowed protocol, merging branches
    whose collapsed frontier states coincide (the only information future
    probabilities depend on), plus the window's running all-zero flag.  Returns
    per-class mass and nonzero-branch counts together with their total, which
    must come to 1.
    """
    anchors = attempt_anchors(cols, anchor)
    if not anchors:
        raise ValueError(f"no window fits in {cols} columns at anchor {anchor}")
    live = _MergedSet()
    live.add(_FrontierCore(ROWS, cols), 1.0, 1)
    for c in range(0, anchors[0] - 1):
        for r in range(ROWS):
            live = live.measure_all((r, c), TRANSPORT_BASES[r])

    classes: dict[str, dict] = {}
    max_states = 0
    for i, a in enumerate(anchors):
        ok = live
        failed = _MergedSet()
        for site in fresh_sites(a):
            zero, rest = ok.measure_split(site, site_basis(site))
            # branches that already failed keep measuring the remaining fresh sites
            failed = failed.measure_all(site, site_basis(site))
            for core, mass, count in rest.table.values():
                failed.add(core, mass, count)
            ok = zero
            max_states = max(max_states, len(ok) + len(failed))
        ok = ok.measure_all((1, a), site_basis((1, a), central_success=True))
        for c in range(a + 2, cols):
            for r in range(ROWS):
                ok = ok.measure_all((r, c), TRANSPORT_BASES[r])
        classes[f"success@{a}"] = {
            "mass": ok.mass, "branches": ok.count, "attempt": i + 1,
        }
        live = failed.measure_all((1, a), site_basis((1, a), central_success=False))
    for c in range(anchors[-1] + 2, cols):
        for r in range(ROWS):
            live = live.measure_all((r, c), TRANSPORT_BASES[r])
    classes["exhausted"] = {"mass": live.mass, "branches": live.count,
                            "attempt": len(anchors)}
    total = float(sum(v["mass"] for v in classes.values()))
    return {"classes": classes, "total": total, "peak_states": max_states}


def enumerate_branches(cols: int = 3, anchor: int = 1,
                       with_operators: bool = False) -> list[dict]:
    """Every protocol branch of a small lattice, leaf by leaf (no merging).

    Returns one entry per leaf with its site outcomes, probability, success
    flag and attempt count; optionally the honest realized operator.  Only
    sensible for lattices with a handful of windows (3×3 has 512 leaves).
    """
    anchors = attempt_anchors(cols, anchor)
    if not anchors:
        raise ValueError("no window fits")
    leaves: list[dict] = []

    def walk(core: _FrontierCore, prob: float,
             recorded: dict[Site, tuple[BasisSpec, int]],
             stage: tuple) -> None:
        # stage: ("lead", c, r) | ("window", i, j) | ("central", i, ok)
        #        | ("tail", a, c, r) | ("done", matched_anchor | None, attempts)
        if stage[0] == "done":
            _, matched, attempts = stage
            entry = {
                "outcomes": {site: ob[1] for site, ob in recorded.items()},
                "probability": prob,
                "success": matched is not None,
                "anchor": matched,
                "attempts": attempts,
            }
            if with_operators:
                entry["realized_op"] = lattice_op(recorded, cols)
            leaves.append(entry)
            return
        site, basis, nxt = _leaf_stage_step(stage, anchors, cols)
        for o, p, child in core.split(site, basis):
            rec = dict(recorded)
            rec[site] = (basis, o)
            walk(child, prob * p, rec, nxt(o, rec))

    first = ("lead", 0, 0) if anchors[0] > 1 else ("window", 0, 0)
    walk(_FrontierCore(ROWS, cols), 1.0, {}, first)
    return leaves


def _leaf_stage_step(stage: tuple, anchors: list[int], cols: int):
    """Next (site, basis, advance) of the leaf walk; advance maps (outcome, record) → stage."""
    if stage[0] == "lead":
        _, c, r = stage
        site, basis = (r, c), TRANSPORT_BASES[r]
        nxt_c, nxt_r = (c, r + 1) if r < ROWS - 1 else (c + 1, 0)
        after = ("window", 0, 0) if nxt_c > anchors[0] - 2 else ("lead", nxt_c, nxt_r)
        return site, basis, lambda o, rec: after
    if stage[0] == "window":
        _, i, j = stage
        a = anchors[i]
        sites = fresh_sites(a)
        site = sites[j]
        basis = site_basis(site)
        if j + 1 < len(sites):
            after = ("window", i, j + 1)
            return site, basis, lambda o, rec: after
        def advance(_o: int, rec: dict) -> tuple:
            ok = all(rec[s][1] == 0 for s in sites)
            return ("central", i, ok)
        return site, basis, advance
    if stage[0] == "central":
        _, i, ok = stage
        a = anchors[i]
        site = (1, a)
        basis = site_basis(site, central_success=ok)
        def advance(_o: int, rec: dict) -> tuple:
            if ok:
                c = a + 2
                return ("tail", a, c, 0) if c < cols else ("done", a, i + 1)
            if i + 1 < len(anchors):
                return ("window", i + 1, 0)
            c = a + 2
            return ("tail", None, c, 0) if c < cols else ("done", None, i + 1)
        return site, basis, advance
    if stage[0] == "tail":
        _, a, c, r = stage
        site, basis = (r, c), TRANSPORT_BASES[r]
        nxt_c, nxt_r = (c, r + 1) if r < ROWS - 1 else (c + 1, 0)
        matched = a
        attempts = (anchors.index(a) + 1) if a is not None else len(anchors)
        if nxt_c >= cols:
            after = ("done", matched, attempts)
        else:
            after = ("tail", a, nxt_c, nxt_r)
        return site, basis, lambda o, rec: after
    raise AssertionError(f"unknown stage {stage}")
