"""Finite projective matrix groups: closure, words, and the randomness-compensation walk.

Elements are matrices modulo global phase.  Each element stores one canonical
representative (first largest-modulus entry made real positive) plus a witness
word over the generators; dedup hashing uses 6-decimal rounded entries with an
exact phase-proportionality re-check on lookup.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .config import DEFAULT_TOL
from .tensor import phase_canonical, proportional_up_to_phase

_ROUND_DIGITS = 6


class GroupClosureError(RuntimeError):
    """Raised when BFS closure exceeds the element budget (group possibly infinite)."""


def _key(canonical: np.ndarray) -> tuple:
    return tuple(np.round(canonical.ravel().view(float), _ROUND_DIGITS).tolist())


@dataclass(frozen=True)
class ProjectiveElement:
    """One group element: canonical representative plus a witness generator word."""

    rep: np.ndarray
    word: tuple[int, ...]

    @property
    def key(self) -> tuple:
        return _key(self.rep)


class ProjectiveGroup:
    """A finite set of phase-canonical matrices closed under multiplication.

    Attributes
    ----------
    generators:
        Canonicalized generator matrices (index order defines word indices).
    elements:
        Mapping key → :class:`ProjectiveElement`.
    cayley:
        ``(element key, generator index) → element key`` for right multiplication.
    """

    def __init__(
        self,
        generators: Sequence[np.ndarray],
        elements: dict[tuple, ProjectiveElement],
        cayley: dict[tuple[tuple, int], tuple],
        tol: float = DEFAULT_TOL,
    ) -> None:
        self.generators = tuple(generators)
        self.elements = dict(elements)
        self.cayley = dict(cayley)
        self.tol = tol
        self.dim = self.generators[0].shape[0]
        self.identity_key = _key(phase_canonical(np.eye(self.dim, dtype=complex)))

    @property
    def order(self) -> int:
        return len(self.elements)

    def find(self, m: np.ndarray) -> ProjectiveElement | None:
        """Membership lookup modulo phase (rounded key + exact re-verification)."""
        canonical = phase_canonical(np.asarray(m, dtype=complex))
        el = self.elements.get(_key(canonical))
        if el is not None and proportional_up_to_phase(canonical, el.rep, self.tol) is not None:
            return el
        # tolerate borderline rounding by a linear scan fallback
        for el in self.elements.values():
            if proportional_up_to_phase(canonical, el.rep, self.tol) is not None:
                return el
        return None

    def __contains__(self, m: np.ndarray) -> bool:
        return self.find(m) is not None

    def step(self, key: tuple, gen_index: int) -> tuple:
        return self.cayley[(key, gen_index)]

    def word_matrix(self, word: Sequence[int]) -> np.ndarray:
        """Multiply out a generator word (left-to-right product order)."""
        m = np.eye(self.dim, dtype=complex)
        for idx in word:
            m = m @ self.generators[idx]
        return m

    def element_for_word(self, word: Sequence[int]) -> ProjectiveElement:
        el = self.find(self.word_matrix(word))
        if el is None:
            raise KeyError("word leaves the closed element set (inconsistent group)")
        return el

    def inverse(self, el: ProjectiveElement) -> ProjectiveElement:
        inv = np.linalg.inv(el.rep)
        found = self.find(inv)
        if found is None:
            raise KeyError("inverse not present (inconsistent group)")
        return found


def closure(
    generators: Sequence[np.ndarray],
    tol: float = DEFAULT_TOL,
    max_order: int = 4096,
) -> ProjectiveGroup:
    """BFS closure of the generators modulo global phase.

    Starts from the identity and right-multiplies by generators; raises
    :class:`GroupClosureError` once more than ``max_order`` distinct projective
    elements appear (e.g. irrational-angle generators).
    """
    gens = []
    dim = None
    for g in generators:
        g = np.asarray(g, dtype=complex)
        if g.ndim != 2 or g.shape[0] != g.shape[1]:
            raise ValueError("generators must be square matrices")
        if dim is None:
            dim = g.shape[0]
        elif g.shape[0] != dim:
            raise ValueError("generators must share one dimension")
        if abs(np.linalg.det(g)) < 1e-12:
            raise ValueError("generators must be invertible")
        gens.append(phase_canonical(g))

    identity = ProjectiveElement(phase_canonical(np.eye(dim, dtype=complex)), ())
    elements: dict[tuple, ProjectiveElement] = {identity.key: identity}
    cayley: dict[tuple[tuple, int], tuple] = {}
    queue: deque[ProjectiveElement] = deque([identity])
    while queue:
        el = queue.popleft()
        for gi, g in enumerate(gens):
            product = phase_canonical(el.rep @ g)
            key = _key(product)
            existing = elements.get(key)
            if existing is not None:
                if proportional_up_to_phase(product, existing.rep, tol) is None:
                    raise GroupClosureError(
                        "rounded-key collision with mismatching matrices; tighten rounding"
                    )
                cayley[(el.key, gi)] = existing.key
                continue
            new = ProjectiveElement(product, el.word + (gi,))
            elements[key] = new
            cayley[(el.key, gi)] = key
            if len(elements) > max_order:
                raise GroupClosureError(
                    f"closure exceeded {max_order} elements; group possibly infinite"
                )
            queue.append(new)
    return ProjectiveGroup(gens, elements, cayley, tol=tol)


# ---------------------------------------------------------------------------
# Normal-form words
# ---------------------------------------------------------------------------


def normal_form_word(
    group: ProjectiveGroup,
    target: np.ndarray,
    a_index: int = 0,
    b_index: int = 1,
    tol: float | None = None,
) -> list[int]:
    """Exponents (k_1, …, k_n), k_i ∈ {0,1}, with target ≍ A·B^{k_1}·A·B^{k_2}···A·B^{k_n}.

    ``A`` and ``B`` are the generators at ``a_index``/``b_index``.  BFS over
    prefix products (each step appends A then optionally B) with projective
    dedup; raises ``KeyError`` if the target is not in the group and
    ``ValueError`` if no word of this shape exists.
    """
    tol = group.tol if tol is None else tol
    target_el = group.find(target)
    if target_el is None:
        raise KeyError("target is not an element of the group")
    A = group.generators[a_index]
    B = group.generators[b_index]
    start = np.eye(group.dim, dtype=complex)
    queue: deque[tuple[np.ndarray, tuple[int, ...]]] = deque([(start, ())])
    seen: set[tuple] = set()
    while queue:
        mat, ks = queue.popleft()
        for k in (0, 1):
            nxt = mat @ A if k == 0 else mat @ A @ B
            canonical = phase_canonical(nxt)
            key = _key(canonical)
            if key in seen:
                continue
            seen.add(key)
            word = ks + (k,)
            if proportional_up_to_phase(canonical, target_el.rep, tol) is not None:
                return list(word)
            queue.append((nxt, word))
    raise ValueError("no word of shape A·B^{k_1}···A·B^{k_n} reaches the target")


def word_exponents_matrix(
    group: ProjectiveGroup, ks: Sequence[int], a_index: int = 0, b_index: int = 1
) -> np.ndarray:
    """Multiply out the normal-form exponent list (for verification)."""
    A = group.generators[a_index]
    B = group.generators[b_index]
    m = np.eye(group.dim, dtype=complex)
    for k in ks:
        m = m @ A
        if k:
            m = m @ B
    return m


# ---------------------------------------------------------------------------
# Compensation walk
# ---------------------------------------------------------------------------

StepSampler = Callable[[np.random.Generator], Sequence[int]]


def transport_step_sampler(g_index: int = 0, z_index: int = 1) -> StepSampler:
    """One transported site appends G·Z^x with a fair outcome bit x."""

    def sample(rng: np.random.Generator) -> Sequence[int]:
        if rng.integers(2):
            return (g_index, z_index)
        return (g_index,)

    return sample


def compensation_walk(
    group: ProjectiveGroup,
    start: ProjectiveElement | np.ndarray,
    step_sampler: StepSampler | None = None,
    rng_seed: int | np.random.Generator = 0,
    cap: int = 10**6,
    collect_trace: bool = True,
) -> tuple[int, list[tuple[int, ...]]]:
    """Accumulate random by-products until the total returns to the identity.

    Starting from the pending by-product ``start``, each step left-multiplies
    the accumulated element by a sampled generator word (default: G·Zˣ with fair
    x, the transport by-product).  Returns the number of steps taken and the
    list of sampled words.  A ``start`` of identity takes 0 steps; exceeding
    ``cap`` raises ``RuntimeError``.
    """
    if step_sampler is None:
        step_sampler = transport_step_sampler()
    rng = (
        rng_seed
        if isinstance(rng_seed, np.random.Generator)
        else np.random.default_rng(rng_seed)
    )
    current = start.rep if isinstance(start, ProjectiveElement) else np.asarray(start, complex)
    current = phase_canonical(current)
    if group.find(current) is None:
        raise KeyError("start element is not in the group")
    eye = np.eye(group.dim, dtype=complex)
    trace: list[tuple[int, ...]] = []
    steps = 0
    while proportional_up_to_phase(current, eye, 1e-7) is None:
        if steps >= cap:
            raise RuntimeError(f"compensation walk did not terminate within {cap} steps")
        word = tuple(step_sampler(rng))
        current = phase_canonical(group.word_matrix(word) @ current)
        trace.append(word if collect_trace else ())
        steps += 1
    return steps, trace
