"""Measurement patterns on chains: serialization, execution, and the induced operators.

A :class:`MeasurementPattern` is an ordered list of single-site measurements
with named outcome variables, optional basis-override adaptation, and
by-product bookkeeping rules.  :func:`run_pattern` executes a pattern on a
chain in three modes:

* ``force``   — follow a given outcome assignment, return its record;
* ``sample``  — Born-sample outcomes site by site (seeded);
* ``enumerate`` — return every branch, probabilities summing to 1.

Probabilities are exact Born marginals of the (unnormalized) chain state,
computed with right environments; the realized correlation-space operator of a
branch is the ordered product of the projected site matrices A[φ].
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Iterator, Sequence

import numpy as np

from . import tensor as tz
from .bases import BasisSpec
from .config import DEFAULT_TOL
from .mps import MpsChain, CorrelationState, evolve, project_local, right_environments
from .resources import _sket, _zket
from .tensor import g_gate, phase_gate

# ---------------------------------------------------------------------------
# Pattern data model
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AdaptRule:
    """Basis override keyed on an earlier outcome variable.

    When variable ``on`` equals ``equals``, the step's basis is replaced by
    ``override`` (action ``"override"``) or the attempt is aborted and
    restarted elsewhere (action ``"restart"``, used by the lattice drivers).
    """

    on: str
    equals: int
    action: str = "override"
    override: BasisSpec | None = None

    def __post_init__(self) -> None:
        if self.action not in ("override", "restart"):
            raise ValueError(f"unknown adapt action {self.action!r}")
        if self.action == "override" and self.override is None:
            raise ValueError("override rule needs a basis")

    def to_json(self) -> dict[str, Any]:
        doc: dict[str, Any] = {"on": self.on, "equals": int(self.equals), "action": self.action}
        if self.override is not None:
            doc["basis"] = self.override.to_json()
        return doc

    @classmethod
    def from_json(cls, doc: dict[str, Any]) -> "AdaptRule":
        basis = BasisSpec.from_json(doc["basis"]) if "basis" in doc else None
        return cls(on=doc["on"], equals=int(doc["equals"]), action=doc["action"], override=basis)


@dataclass(frozen=True)
class MeasurementStep:
    """One measurement: a site, a basis, an outcome variable, optional adaptation.

    ``designated`` marks the branch treated as the deterministic baseline of a
    compiled pattern (0 unless a spin-1 phase step designates its S-branch).
    """

    site: int | tuple[int, int]
    basis: BasisSpec
    var: str
    adapt: AdaptRule | None = None
    designated: int = 0

    def to_json(self) -> dict[str, Any]:
        site = list(self.site) if isinstance(self.site, tuple) else int(self.site)
        doc: dict[str, Any] = {"site": site, "basis": self.basis.to_json(), "var": self.var}
        if self.adapt is not None:
            doc["adapt"] = self.adapt.to_json()
        if self.designated:
            doc["designated"] = int(self.designated)
        return doc

    @classmethod
    def from_json(cls, doc: dict[str, Any]) -> "MeasurementStep":
        raw_site = doc["site"]
        site = tuple(raw_site) if isinstance(raw_site, list) else int(raw_site)
        return cls(
            site=site,
            basis=BasisSpec.from_json(doc["basis"]),
            var=doc["var"],
            adapt=AdaptRule.from_json(doc["adapt"]) if "adapt" in doc else None,
            designated=int(doc.get("designated", 0)),
        )


@dataclass(frozen=True)
class MeasurementPattern:
    """Ordered adaptive local-measurement plan with by-product rules.

    ``byproduct_rules`` maps an outcome variable to, per outcome value, a list
    of generator names describing the by-product word that branch contributes
    (e.g. ``{"x0": {"0": ["G"], "1": ["G", "Z"]}}``).
    """

    steps: tuple[MeasurementStep, ...]
    byproduct_rules: dict[str, dict[str, list[str]]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        sites = [s.site for s in self.steps]
        if len(set(sites)) != len(sites):
            raise ValueError("each site may be measured at most once per attempt")
        seen: set[str] = set()
        for s in self.steps:
            if s.adapt is not None and s.adapt.on not in seen:
                raise ValueError(f"step at {s.site} adapts on later/unknown variable {s.adapt.on!r}")
            seen.add(s.var)
        if len(seen) != len(self.steps):
            raise ValueError("outcome variables must be distinct")

    @property
    def outcome_vars(self) -> tuple[str, ...]:
        return tuple(s.var for s in self.steps)

    def to_json(self) -> dict[str, Any]:
        return {
            "steps": [s.to_json() for s in self.steps],
            "outcome_vars": list(self.outcome_vars),
            "byproduct_rules": {
                var: {k: list(w) for k, w in rules.items()}
                for var, rules in sorted(self.byproduct_rules.items())
            },
        }

    @classmethod
    def from_json(cls, doc: dict[str, Any]) -> "MeasurementPattern":
        steps = tuple(MeasurementStep.from_json(s) for s in doc["steps"])
        rules = {
            var: {k: list(w) for k, w in r.items()}
            for var, r in doc.get("byproduct_rules", {}).items()
        }
        return cls(steps=steps, byproduct_rules=rules)

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))

    @classmethod
    def loads(cls, text: str) -> "MeasurementPattern":
        return cls.from_json(json.loads(text))


@dataclass(frozen=True)
class ProtocolRecord:
    """One executed/enumerated branch: outcomes, probability, induced operator, by-products."""

    outcomes: dict[str, int]
    probability: float
    realized_op: np.ndarray
    byproduct: tuple[str, ...] = ()
    attempts: int = 1

    def to_json(self) -> dict[str, Any]:
        return {
            "outcomes": {k: int(v) for k, v in sorted(self.outcomes.items())},
            "probability": float(self.probability),
            "realized_op": [
                [[float(z.real), float(z.imag)] for z in row] for row in self.realized_op
            ],
            "byproduct": list(self.byproduct),
            "attempts": int(self.attempts),
        }


# ---------------------------------------------------------------------------
# Pattern execution on chains
# ---------------------------------------------------------------------------


def _effective_basis(step: MeasurementStep, outcomes: dict[str, int]) -> BasisSpec:
    if step.adapt is None:
        return step.basis
    if step.adapt.action == "restart":
        raise ValueError(
            "restart rules are window-protocol semantics; use the lattice driver"
        )
    if outcomes.get(step.adapt.on) == step.adapt.equals:
        assert step.adapt.override is not None
        return step.adapt.override
    return step.basis


def _byproduct_word(
    pattern: MeasurementPattern, outcomes: dict[str, int]
) -> tuple[str, ...]:
    word: list[str] = []
    for step in pattern.steps:
        rules = pattern.byproduct_rules.get(step.var)
        if not rules:
            continue
        word = list(rules.get(str(outcomes[step.var]), [])) + word
    return tuple(word)


def run_pattern(
    chain: MpsChain,
    pattern: MeasurementPattern,
    mode: str = "enumerate",
    seed: int | None = None,
    outcomes: Sequence[int] | None = None,
    tol: float = DEFAULT_TOL,
) -> ProtocolRecord | list[ProtocolRecord]:
    """Execute a pattern on a chain; see module docstring for the three modes.

    Pattern sites must be the contiguous prefix 0, 1, …, len(steps)-1 of the
    chain, measured left to right (amplitudes are ordered products, so a gap
    before a measured site has no Born marginal on the boundary vector).  The
    probability of a branch is the Born marginal over the unmeasured tail.
    """
    sites = [int(s.site) for s in pattern.steps]  # type: ignore[arg-type]
    if sites != list(range(len(sites))):
        raise ValueError("chain patterns must measure sites 0,1,... in order")
    if sites and sites[-1] >= chain.n:
        raise ValueError(f"site {sites[-1]} beyond chain of {chain.n} sites")
    sigmas = right_environments(chain)
    norm2 = float(np.real(np.vdot(chain.L, sigmas[0] @ chain.L)))
    if norm2 <= 0:
        raise ValueError("chain state has zero norm")

    def weight(v: np.ndarray, measured_through: int) -> float:
        sigma = sigmas[measured_through]
        return float(np.real(np.vdot(v, sigma @ v)))

    def branch(
        prefix: dict[str, int], v: np.ndarray, op: np.ndarray, i: int
    ) -> Iterator[tuple[dict[str, int], np.ndarray, np.ndarray, float]]:
        """Expand step i on correlation vector v (weights are conditionals)."""
        step = pattern.steps[i]
        basis = _effective_basis(step, prefix)
        if basis.dim != chain.d:
            raise ValueError(f"basis dim {basis.dim} on a d={chain.d} chain")
        parent_w = weight(v, sites[i])
        for o, ket in enumerate(basis.vectors):
            a_phi = project_local(chain, sites[i], ket)
            nv = a_phi @ v
            w = weight(nv, sites[i] + 1)
            p = w / parent_w if parent_w > 0 else 0.0
            yield ({**prefix, step.var: o}, nv, a_phi @ op, p)

    d0 = chain.D

    if mode == "enumerate":
        records: list[ProtocolRecord] = []
        frontier = [({}, chain.L.copy(), np.eye(d0, dtype=complex), 1.0)]
        for i in range(len(pattern.steps)):
            nxt = []
            for prefix, v, op, p in frontier:
                for prefix2, v2, op2, cond in branch(prefix, v, op, i):
                    nxt.append((prefix2, v2, op2, p * cond))
            frontier = nxt
        for prefix, v, op, p in frontier:
            records.append(
                ProtocolRecord(
                    outcomes=prefix,
                    probability=p,
                    realized_op=op,
                    byproduct=_byproduct_word(pattern, prefix),
                )
            )
        # deterministic order: lexicographic in outcome tuples
        records.sort(key=lambda r: tuple(r.outcomes[s.var] for s in pattern.steps))
        return records

    if mode == "force":
        if outcomes is None or len(outcomes) != len(pattern.steps):
            raise ValueError("force mode needs one outcome per step")
        prefix: dict[str, int] = {}
        v = chain.L.copy()
        op = np.eye(d0, dtype=complex)
        p_total = 1.0
        for i, forced in enumerate(outcomes):
            found = None
            for prefix2, v2, op2, cond in branch(prefix, v, op, i):
                if prefix2[pattern.steps[i].var] == int(forced):
                    found = (prefix2, v2, op2, cond)
            assert found is not None
            prefix, v, op, cond = found
            if cond <= 1e-28:
                raise ValueError(
                    f"forced outcome {forced} at step {i} has zero probability"
                )
            p_total *= cond
        return ProtocolRecord(
            outcomes=prefix,
            probability=p_total,
            realized_op=op,
            byproduct=_byproduct_word(pattern, prefix),
        )

    if mode == "sample":
        if seed is None:
            raise ValueError("sample mode needs a seed")
        rng = np.random.default_rng(seed)
        prefix = {}
        v = chain.L.copy()
        op = np.eye(d0, dtype=complex)
        p_total = 1.0
        for i in range(len(pattern.steps)):
            options = list(branch(prefix, v, op, i))
            probs = np.array([max(o[3], 0.0) for o in options])
            probs = probs / probs.sum()
            pick = int(rng.choice(len(options), p=probs))
            prefix, v, op, cond = options[pick]
            p_total *= cond
        return ProtocolRecord(
            outcomes=prefix,
            probability=p_total,
            realized_op=op,
            byproduct=_byproduct_word(pattern, prefix),
        )

    raise ValueError(f"unknown mode {mode!r}")


# ---------------------------------------------------------------------------
# Named 1-D protocol pieces
# ---------------------------------------------------------------------------


def transport_op(x_outcomes: Sequence[int], k: int) -> np.ndarray:
    """B = G·Z^{x_m} ··· G·Z^{x_2} · G·Z^{x_1} — the transport by-product word.

    ``x_outcomes[0]`` is the first measured site's outcome (rightmost factor).
    """
    g = g_gate(k)
    out = np.eye(2, dtype=complex)
    for x in x_outcomes:
        step = g if not int(x) else g @ tz.Z
        out = step @ out
    return out


def phase_gate_step(phi: float, outcome: int, k: int) -> np.ndarray:
    """Branch operator of the measurement step that induces S(φ) on the chain.

    With the ⟨φ|s⟩ coefficient convention, measuring the Phase(−φ) observable
    projects onto kets (|0⟩ ± e^{−iφ}|1⟩)/√2 and yields the branch operators
    A[ket] = G·S(φ)/√2 (outcome 0) and G·Z·S(φ)/√2 (outcome 1); realizing a
    +φ phase gate therefore measures the −φ basis.  The exact (1/√2-scaled)
    branch operator is returned.
    """
    if outcome not in (0, 1):
        raise ValueError("outcome must be a bit")
    g = g_gate(k)
    branch = g @ phase_gate(phi) / np.sqrt(2)
    if outcome:
        branch = g @ tz.Z @ phase_gate(phi) / np.sqrt(2)
    return branch


def transport_pattern(n_sites: int, k: int, start: int = 0) -> MeasurementPattern:
    """All-X pattern over ``n_sites`` chain sites with G·Zˣ by-product rules."""
    steps = tuple(
        MeasurementStep(site=start + i, basis=BasisSpec("X"), var=f"x{i}")
        for i in range(n_sites)
    )
    rules = {f"x{i}": {"0": ["G"], "1": ["G", "Z"]} for i in range(n_sites)}
    return MeasurementPattern(steps=steps, byproduct_rules=rules)


def readout(chain: MpsChain, state: CorrelationState, site: int,
            rng: np.random.Generator | None = None,
            force: int | None = None) -> tuple[int, float, CorrelationState]:
    """Computational-basis readout of the correlation state at a chain site.

    Projects with A[|s⟩] = G-type site matrices restricted to |s⟩⟨s|; for the
    correlation chain this collapses the correlation system onto |s⟩ with the
    Born probability of the normalized correlation vector.
    """
    probs = []
    branches = []
    sigmas = right_environments(chain)
    base = float(np.real(np.vdot(state.vec, sigmas[site] @ state.vec)))
    for s in range(chain.d):
        ket = np.zeros(chain.d, dtype=complex)
        ket[s] = 1.0
        nxt = evolve(state, project_local(chain, site, ket))
        w = float(np.real(np.vdot(nxt.vec, sigmas[site + 1] @ nxt.vec)))
        probs.append(w / base if base > 0 else 0.0)
        branches.append(nxt)
    if force is not None:
        outcome = int(force)
        if probs[outcome] <= 1e-28:
            raise ValueError(f"forced readout {outcome} has zero probability")
    else:
        if rng is None:
            raise ValueError("pass an rng or force an outcome")
        p = np.array(probs)
        outcome = int(rng.choice(chain.d, p=p / p.sum()))
    return outcome, probs[outcome], branches[outcome]


# ---------------------------------------------------------------------------
# The five-site patch reduction (2-D line working horse)
# ---------------------------------------------------------------------------


def reduce_line(x: int, z_neighbors: Sequence[int], tol: float = 1e-10) -> tuple[np.ndarray, np.ndarray]:
    """Formula and patch-contraction operators for one reduced line site.

    An X-measurement (outcome ``x``) on a line site whose four diagonal
    neighbours were Z-measured with outcomes ``z_neighbors`` induces
    H·S^{2x+z} on the line, z = Σ z_neighbors.  Returns ``(formula, patch)``
    where ``patch`` is the honest contraction of the five-site patch built from
    the factorized site tensors; a disagreement beyond ``tol`` (up to phase)
    raises ``ArithmeticError`` since it can only mean an implementation bug.
    """
    zs = [int(b) for b in z_neighbors]
    if len(zs) != 4 or any(b not in (0, 1) for b in zs) or int(x) not in (0, 1):
        raise ValueError("need one x bit and four z bits")
    z = sum(zs)
    formula = tz.H @ np.linalg.matrix_power(tz.S, (2 * int(x) + z) % 4)

    # Patch contraction: center site from Eq.-style factors.  The X-projection
    # bra ⟨x±| hits the physical index; each Z-measured diagonal neighbour has
    # collapsed to |z⟩, so the center's incoming ld/rd deltas are evaluated at
    # the lower z's, and its outgoing lu/ru kets S^s|+⟩ are evaluated at the
    # upper z's.  What survives is the horizontal line map Z^s|+⟩⟨s|.
    z_lu, z_ru, z_ld, z_rd = zs
    xket = np.array([1, (-1) ** int(x)], dtype=complex) / np.sqrt(2)
    patch = np.zeros((2, 2), dtype=complex)
    for s in (0, 1):
        coeff = (
            np.conj(xket[s])
            * _sket(s)[z_lu]
            * _sket(s)[z_ru]
            * _sket(z_ld)[s]
            * _sket(z_rd)[s]
        )
        patch += coeff * np.outer(_zket(s), np.eye(2)[s])
    from .tensor import proportional_up_to_phase

    if proportional_up_to_phase(patch / np.linalg.norm(patch), formula / np.linalg.norm(formula), tol) is None:
        raise ArithmeticError(
            f"patch contraction disagrees with H·S^(2x+z) for x={x}, z={zs}"
        )
    return formula, patch
