"""Single-qubit gate compilation onto the 1-D chains, with adaptive execution.

Compilation targets two measurement primitives:

* correlation chain: phase gates S(θ) and transports G (so conjugated phase
  gates G⁻¹S(θ)G are available), Euler-decomposing the target about the z axis
  and the G-conjugated axis;
* spin-1 chain: S(θ), H branches, Euler-decomposing as S(a)·HS(b)H·S(c).

``compile_single_qubit`` emits a static :class:`MeasurementPattern` whose
designated branch realizes the target up to global phase and a recorded
by-product group element.  ``execute_compiled`` is the run-time adaptive
engine: it tracks the accumulated by-product frame, adapts measurement angles,
retries where needed, and finishes with a compensation walk that drives the
frame back to the identity, so every completed run realizes the target itself.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import least_squares

from . import tensor as tz
from .bases import BasisSpec
from .groups import ProjectiveGroup, closure
from .protocols import MeasurementPattern, MeasurementStep
from .tensor import g_gate, phase_gate, proportional_up_to_phase

# ---------------------------------------------------------------------------
# Euler decompositions
# ---------------------------------------------------------------------------


def to_su2(u: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Rescale a 2×2 unitary to determinant 1 (principal square root of det)."""
    u = np.asarray(u, dtype=complex)
    if u.shape != (2, 2):
        raise ValueError("target must be 2x2")
    if not np.allclose(u.conj().T @ u, np.eye(2), atol=tol):
        raise ValueError("target must be unitary")
    det = u[0, 0] * u[1, 1] - u[0, 1] * u[1, 0]
    return u / np.sqrt(det)


def euler_zxz(u: np.ndarray) -> tuple[float, float, float]:
    """Angles (a, b, c) with u ∝ S(a)·H S(b) H·S(c).

    Uses S(α)HS(β)HS(γ) = e^{i(α+β+γ)/2}·Rz(α)Rx(β)Rz(γ) and reads the angles
    off the SU(2) matrix entries; degenerate (diagonal/anti-diagonal) targets
    pin the free angle to c = 0.
    """
    su = to_su2(u)
    b = 2.0 * np.arctan2(abs(su[0, 1]), abs(su[0, 0]))
    if abs(su[0, 1]) < 1e-12:
        a = -2.0 * np.angle(su[0, 0])
        return (float(a), 0.0, 0.0)
    if abs(su[0, 0]) < 1e-12:
        a = -2.0 * np.angle(su[0, 1]) - np.pi
        return (float(a), float(np.pi), 0.0)
    apc = -2.0 * np.angle(su[0, 0])
    amc = -2.0 * np.angle(su[0, 1]) - np.pi
    return (float((apc + amc) / 2), float(b), float((apc - amc) / 2))


def zxz_matrix(a: float, b: float, c: float) -> np.ndarray:
    """S(a)·H S(b) H·S(c) (exact, with its accumulated phase)."""
    return phase_gate(a) @ tz.H @ phase_gate(b) @ tz.H @ phase_gate(c)


def conjugated_phase(b: float, k: int) -> np.ndarray:
    """G⁻¹·S(b)·G — the second rotation primitive on the correlation chain."""
    g = g_gate(k)
    return np.linalg.inv(g) @ phase_gate(b) @ g


def chain_product(angles: Sequence[float], k: int) -> np.ndarray:
    """S(θ_n)·G⁻¹S(θ_{n−1})G·…·S(θ_1): alternating z / conjugated-axis factors.

    ``angles[0]`` is applied first (rightmost); odd positions (0-based) are the
    conjugated-axis factors.
    """
    out = np.eye(2, dtype=complex)
    for i, th in enumerate(angles):
        f = conjugated_phase(th, k) if i % 2 else phase_gate(th)
        out = f @ out
    return out


def euler_two_axis(u: np.ndarray, k: int, tol: float = 1e-10) -> list[float]:
    """Angles realizing u ∝ chain_product(angles, k) on the k-chain.

    A three-angle solution S(a)·G⁻¹S(b)G·S(c) exists iff
    |u01| ≤ sin(2π/k) (the axes z and G⁻¹zG subtend angle 2π/k); it is solved
    in closed form.  Otherwise a longer alternating product (5, then 7 angles)
    is fitted by multi-start least squares to residual ``tol``.
    """
    su = to_su2(u)
    s_gamma = float(np.sin(2 * np.pi / k))
    c_gamma = float(np.cos(2 * np.pi / k))
    if abs(su[0, 1]) <= s_gamma * (1 - 1e-12):
        b = 2.0 * np.arcsin(min(1.0, abs(su[0, 1]) / s_gamma))
        # m00 of S(0)·G⁻¹S(b)G·S(0) = [(1+cosγ) + (1−cosγ)e^{ib}]/2
        m00 = ((1 + c_gamma) + (1 - c_gamma) * np.exp(1j * b)) / 2.0
        if abs(su[0, 0]) > 1e-12:
            delta = float(np.angle(su[0, 0]) - np.angle(m00))
            if abs(su[0, 1]) > 1e-12:
                c = float(np.angle(su[0, 1]) - delta - b / 2)
                a = float(np.angle(su[1, 0]) - delta - np.pi - b / 2)
            else:
                c = 0.0
                a = float(np.angle(su[1, 1]) - delta - np.angle(m00))
        else:
            c = float(np.angle(su[0, 1]) - b / 2)
            a = float(np.angle(su[1, 0]) - np.pi - b / 2)
        angles = [c, b, a]
        if _chain_residual(angles, su, k) < tol:
            return [float(x) for x in angles]
    # longer alternating products, fitted numerically
    rng = np.random.default_rng(12345)
    best: tuple[float, list[float]] | None = None
    for n_angles in (5, 7):
        for _ in range(12):
            x0 = rng.uniform(-np.pi, np.pi, size=n_angles)
            sol = least_squares(
                lambda x: _chain_residual_vec(x, su, k), x0, xtol=1e-15, ftol=1e-15, gtol=1e-15
            )
            res = _chain_residual(sol.x, su, k)
            if best is None or res < best[0]:
                best = (res, [float(v) for v in sol.x])
            if res < tol:
                return best[1]
        if best is not None and best[0] < tol:
            return best[1]
    assert best is not None
    raise ArithmeticError(
        f"two-axis decomposition did not converge (best residual {best[0]:.3e})"
    )


def _phase_aligned_diff(m: np.ndarray, target: np.ndarray) -> np.ndarray:
    tr = np.trace(target.conj().T @ m)
    ph = tr / abs(tr) if abs(tr) > 1e-14 else 1.0
    return m / ph - target


def _chain_residual_vec(angles: Sequence[float], su: np.ndarray, k: int) -> np.ndarray:
    d = _phase_aligned_diff(chain_product(angles, k), su)
    return np.concatenate([d.real.ravel(), d.imag.ravel()])


def _chain_residual(angles: Sequence[float], su: np.ndarray, k: int) -> float:
    return float(np.linalg.norm(_chain_residual_vec(angles, su, k)))


# ---------------------------------------------------------------------------
# Pattern emission (designated-branch plans)
# ---------------------------------------------------------------------------

_CORR_RULES = {"0": ["G"], "1": ["G", "Z"]}
_AKLT_RULES = {"0": ["H"], "1": ["X"], "2": ["Z", "X"]}


@dataclass(frozen=True)
class CompiledPattern:
    """A pattern plus the by-product the designated branch leaves behind."""

    pattern: MeasurementPattern
    family: str
    k: int | None
    target: np.ndarray
    designated_byproduct: tuple[str, ...]

    @property
    def designated_outcomes(self) -> tuple[int, ...]:
        return tuple(s.designated for s in self.pattern.steps)


def _aklt_intents(u: np.ndarray) -> list[tuple]:
    """Intent list (applied order) realizing u up to a Pauli frame."""
    su = to_su2(u)
    if proportional_up_to_phase(su, np.eye(2), 1e-12) is not None:
        return []
    if proportional_up_to_phase(su, tz.H, 1e-12) is not None:
        return [("H",)]
    if abs(su[0, 1]) < 1e-12 and abs(su[1, 0]) < 1e-12:
        return [("S", float(np.angle(su[1, 1]) - np.angle(su[0, 0])))]
    if abs(su[0, 0]) < 1e-12 and abs(su[1, 1]) < 1e-12:
        # anti-diagonal: u ∝ X·S(θ) with θ the upper/lower phase mismatch
        return [("S", float(np.angle(su[0, 1]) - np.angle(su[1, 0])))]
    a, b, c = euler_zxz(su)
    intents: list[tuple] = []
    for item in (("S", c), ("H",), ("S", b), ("H",), ("S", a)):
        if item[0] == "S" and abs(_wrap(item[1])) < 1e-12:
            continue
        intents.append(item)
    # cancel adjacent H pairs exposed by dropped zero rotations
    out: list[tuple] = []
    for item in intents:
        if out and item == ("H",) and out[-1] == ("H",):
            out.pop()
        else:
            out.append(item)
    return out


def _wrap(theta: float) -> float:
    return float(np.remainder(theta + np.pi, 2 * np.pi) - np.pi)


def compile_single_qubit(
    target: np.ndarray, family: str, k: int | None = None
) -> CompiledPattern:
    """Compile a 2×2 unitary into a designated-branch measurement plan.

    family "aklt": Euler split S(a)·HS(b)H·S(c); S factors are realized by the
    outcome-1 branch of an angle-adapted three-outcome phase basis, H factors
    by the outcome-0 branch.  family "correlation_chain" (requires ``k``):
    alternating z-axis / conjugated-axis factors; the designated branch is
    all-zero outcomes.  The emitted basis angle for an S(θ) factor is the
    (frame-adapted) negative of θ because projection coefficients are
    conjugated.
    """
    target = np.asarray(target, dtype=complex)
    if family == "aklt":
        return _compile_aklt(target)
    if family == "correlation_chain":
        if k is None or k <= 2:
            raise ValueError("correlation_chain compilation needs k > 2")
        return _compile_chain(target, int(k))
    raise ValueError(f"unknown family {family!r}")


def _compile_aklt(target: np.ndarray) -> CompiledPattern:
    intents = _aklt_intents(target)
    alpha = beta = 0  # frame X^alpha Z^beta, realized = frame · intended
    steps: list[MeasurementStep] = []
    rules: dict[str, dict[str, list[str]]] = {}
    for intent in intents:
        var = f"s{len(steps)}"
        if intent[0] == "S":
            phi = _wrap((-1) ** (alpha + 1) * intent[1])
            steps.append(
                MeasurementStep(
                    site=len(steps),
                    basis=BasisSpec("AkltPhase", phi=phi),
                    var=var,
                    designated=1,
                )
            )
            alpha ^= 1
        else:
            steps.append(
                MeasurementStep(
                    site=len(steps), basis=BasisSpec("AkltPhase", phi=0.0), var=var
                )
            )
            alpha, beta = beta, alpha
        rules[var] = dict(_AKLT_RULES)
    word = ("X",) * alpha + ("Z",) * beta
    return CompiledPattern(
        pattern=MeasurementPattern(steps=tuple(steps), byproduct_rules=rules),
        family="aklt",
        k=None,
        target=target,
        designated_byproduct=word,
    )


def _chain_intent_list(angles: Sequence[float]) -> list[tuple]:
    """Applied-order intents; identity factors are dropped (for odd slots the
    conjugating G-transfers cancel with them)."""
    intents: list[tuple] = []
    for i, th in enumerate(angles):
        if abs(_wrap(th)) < 1e-12:
            continue
        if i % 2:
            intents.extend([("G", +1), ("S", th), ("G", -1)])
        else:
            intents.append(("S", th))
    return intents


def _compile_chain(target: np.ndarray, k: int) -> CompiledPattern:
    intents = _chain_intent_list(euler_two_axis(target, k))
    m = 0  # frame G^m (designated path keeps the Z power at zero)
    steps: list[MeasurementStep] = []
    rules: dict[str, dict[str, list[str]]] = {}

    def emit(basis: BasisSpec) -> None:
        var = f"s{len(steps)}"
        steps.append(MeasurementStep(site=len(steps), basis=basis, var=var))
        rules[var] = dict(_CORR_RULES)

    for intent in intents:
        if intent[0] == "G":
            m -= intent[1]
        else:
            while m % k:
                emit(BasisSpec("X"))
                m += 1
            emit(BasisSpec("Phase", phi=_wrap(-intent[1])))
            m += 1
    word = ("G",) * (m % k)
    return CompiledPattern(
        pattern=MeasurementPattern(steps=tuple(steps), byproduct_rules=rules),
        family="correlation_chain",
        k=k,
        target=target,
        designated_byproduct=word,
    )


# ---------------------------------------------------------------------------
# Run-time adaptive execution with compensation
# ---------------------------------------------------------------------------


def aklt_branch(phi: float, outcome: int) -> np.ndarray:
    """Exact branch operator of the three-outcome phase basis on the spin-1 chain.

    outcome 0 → H; outcome 1 → [[0, e^{−iφ}], [1, 0]] ∝ S(φ)·X;
    outcome 2 → [[0, −e^{−iφ}], [1, 0]] ∝ Z·S(φ)·X.
    """
    if outcome == 0:
        return tz.H.copy()
    sign = 1.0 if outcome == 1 else -1.0
    return np.array([[0, sign * np.exp(-1j * phi)], [1, 0]], dtype=complex)


@dataclass
class ExecutionResult:
    """Transcript of one adaptive run: exact realized operator and bookkeeping."""

    outcomes: list[int] = field(default_factory=list)
    bases: list[BasisSpec] = field(default_factory=list)
    realized_op: np.ndarray = field(default_factory=lambda: np.eye(2, dtype=complex))
    sites_used: int = 0
    compensation_steps: int = 0

    def residual(self, target: np.ndarray) -> float:
        m = self.realized_op
        scale = np.sqrt(np.trace(m.conj().T @ m).real / 2.0)
        return float(np.linalg.norm(_phase_aligned_diff(m / scale, to_su2(target))))


class _Walk:
    """Outcome source: designated/forced path with BFS compensation, or seeded sampling."""

    def __init__(self, mode: str, seed: int | None):
        if mode not in ("force", "sample"):
            raise ValueError("mode must be force or sample")
        if mode == "sample" and seed is None:
            raise ValueError("sample mode needs a seed")
        self.mode = mode
        self.rng = np.random.default_rng(seed) if mode == "sample" else None

    def pick(self, n: int, designated: int) -> int:
        if self.rng is None:
            return designated
        return int(self.rng.integers(n))


def execute_compiled(
    compiled: CompiledPattern,
    mode: str = "force",
    seed: int | None = None,
    max_steps: int | None = None,
) -> ExecutionResult:
    """Run the adaptive engine until the target is realized with identity frame.

    In force mode every measurement yields its designated outcome and the final
    compensation word is found by breadth-first search; in sample mode outcomes
    are drawn uniformly (the exact Born weights of these branches on the
    uniform chains) and compensation is an honest random walk.  Uniform-chain
    Born weights: every branch operator here is proportional to a unitary and
    the bulk right environment is proportional to the identity, so outcomes are
    equidistributed.
    """
    if compiled.family == "aklt":
        return _execute_aklt(compiled, _Walk(mode, seed), max_steps)
    return _execute_chain(compiled, _Walk(mode, seed), max_steps)


def _execute_aklt(
    compiled: CompiledPattern, walk: _Walk, max_steps: int | None
) -> ExecutionResult:
    group = pauli_h_group()
    cap = max_steps if max_steps is not None else 64 * group.order
    res = ExecutionResult()
    alpha = beta = 0
    queue = deque(_aklt_intents(compiled.target))

    def measure(phi: float, outcome: int) -> None:
        res.outcomes.append(outcome)
        res.bases.append(BasisSpec("AkltPhase", phi=_wrap(phi)))
        res.realized_op = aklt_branch(_wrap(phi), outcome) @ res.realized_op
        res.sites_used += 1
        if res.sites_used > cap:
            raise RuntimeError("adaptive run exceeded its step budget")

    while queue:
        intent = queue[0]
        if intent[0] == "S":
            phi = (-1) ** (alpha + 1) * intent[1]
            o = walk.pick(3, designated=1)
            measure(phi, o)
            if o == 0:
                # unwanted H realized: frame swaps, cancel it before retrying
                alpha, beta = beta, alpha
                queue.appendleft(("H",))
                continue
            queue.popleft()
            alpha ^= 1
            if o == 2:
                beta ^= 1
        else:
            o = walk.pick(3, designated=0)
            measure(0.0, o)
            if o == 0:
                queue.popleft()
                alpha, beta = beta, alpha
            else:
                alpha ^= 1
                if o == 2:
                    beta ^= 1
    # compensation walk in ⟨H,Z⟩ via the φ=0 branches {H, X, XZ}
    frame = np.linalg.matrix_power(tz.X, alpha) @ np.linalg.matrix_power(tz.Z, beta)
    steps_mats = [tz.H, tz.X, tz.X @ tz.Z]
    if walk.rng is None:
        for o in _bfs_word(group, frame, steps_mats):
            measure(0.0, o)
            res.compensation_steps += 1
    else:
        while proportional_up_to_phase(frame, np.eye(2), 1e-9) is None:
            o = int(walk.rng.integers(3))
            measure(0.0, o)
            frame = steps_mats[o] @ frame
            res.compensation_steps += 1
            if res.compensation_steps > cap:
                raise RuntimeError("compensation walk exceeded its step budget")
    return res


def _execute_chain(
    compiled: CompiledPattern, walk: _Walk, max_steps: int | None
) -> ExecutionResult:
    k = compiled.k
    assert k is not None
    intents = _chain_intents(compiled)
    cap = max_steps if max_steps is not None else 64 * (2 * k) * max(1, len(intents))
    res = ExecutionResult()
    m, j = 0, 0  # frame G^m Z^j
    g = g_gate(k)

    def transport(x: int) -> None:
        nonlocal m, j
        res.outcomes.append(x)
        res.bases.append(BasisSpec("X"))
        step = g if x == 0 else g @ tz.Z
        res.realized_op = step @ res.realized_op / np.sqrt(2)
        m = ((-1) ** x) * m + 1
        j ^= x
        res.sites_used += 1
        if res.sites_used > cap:
            raise RuntimeError("adaptive run exceeded its step budget")

    for intent in intents:
        if intent[0] == "G":
            # bookkeeping only: intended gains G^e, so the frame absorbs G^{-e}
            # through its Z part (Z G Z = G^{-1})
            m -= ((-1) ** j) * intent[1]
        else:
            while m % k:
                transport(walk.pick(2, designated=0))
            phi = intent[1]  # S(φ) commutes with the frame's Z part
            x = walk.pick(2, designated=0)
            res.outcomes.append(x)
            res.bases.append(BasisSpec("Phase", phi=_wrap(-phi)))
            step = (g if x == 0 else g @ tz.Z) @ phase_gate(phi)
            res.realized_op = step @ res.realized_op / np.sqrt(2)
            m, j = ((-1) ** x) * m + 1, j ^ x
            res.sites_used += 1
    # final compensation: walk the frame G^m Z^j back to the identity
    while (m % k, j) != (0, 0):
        if walk.rng is None:
            x = _chain_comp_step(m % k, j, k)
        else:
            x = int(walk.rng.integers(2))
        transport(x)
        res.compensation_steps += 1
        if res.compensation_steps > cap:
            raise RuntimeError("compensation walk exceeded its step budget")
    return res


def _chain_intents(compiled: CompiledPattern) -> list[tuple]:
    return _chain_intent_list(euler_two_axis(compiled.target, int(compiled.k)))


def _chain_comp_step(m: int, j: int, k: int) -> int:
    """First move of a shortest x-word driving frame (m, j) to (0, 0)."""
    seen = {(m, j): None}
    q = deque([(m, j)])
    parent: dict[tuple[int, int], tuple[tuple[int, int], int]] = {}
    while q:
        state = q.popleft()
        if state == (0, 0):
            # walk back to the root to find the first step
            step = None
            while state in parent:
                state, step = parent[state][0], parent[state][1]
            assert step is not None
            return step
        mm, jj = state
        for x in (0, 1):
            nxt = ((((-1) ** x) * mm + 1) % k, jj ^ x)
            if nxt not in seen:
                seen[nxt] = None
                parent[nxt] = (state, x)
                q.append(nxt)
    raise AssertionError("frame walk state space is connected; unreachable")


def word_operator(word: Sequence[str], k: int | None = None) -> np.ndarray:
    """Matrix of a generator-name word; the leftmost name is the outermost factor."""
    m = np.eye(2, dtype=complex)
    for name in word:
        m = m @ (g_gate(int(k)) if name == "G" else tz.named_gate(name))
    return m


_PAULI_H_GROUP: ProjectiveGroup | None = None


def pauli_h_group() -> ProjectiveGroup:
    """⟨H, Z⟩ — projective order 8; the spin-1 chain's by-product group."""
    global _PAULI_H_GROUP
    if _PAULI_H_GROUP is None:
        _PAULI_H_GROUP = closure([tz.H, tz.Z])
    return _PAULI_H_GROUP


def _bfs_word(group: ProjectiveGroup, frame: np.ndarray, steps: list[np.ndarray]) -> list[int]:
    """Shortest step-index word w with steps[w_n]···steps[w_1]·frame ∝ 𝟙."""
    start = group.find(frame)
    if start is None:
        raise ValueError("frame not in the by-product group")
    seen = {start.key}
    q: deque[tuple] = deque([(start, [])])
    while q:
        at, word = q.popleft()
        if at.key == group.identity_key:
            return word
        for idx, s in enumerate(steps):
            nxt = group.find(s @ at.rep)
            if nxt is not None and nxt.key not in seen:
                seen.add(nxt.key)
                q.append((nxt, word + [idx]))
    raise AssertionError("step set does not generate the group; unreachable")
