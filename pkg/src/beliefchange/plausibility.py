"""Plausibility measures as set-comparison oracles over a finite carrier.

A measure never materialises plausibility values; it only answers how two
subsets of its carrier compare.  Three concrete kinds are provided:

* ranked - a natural-number rank per element (lower rank = more plausible,
  infinity reserved for the unreachable), inducing a total preorder where
  the plausibility of a set is its minimum rank;
* preferential - a strict partial order on elements, lifted to sets by
  dominance: A is at least as plausible as B iff every element of B - A is
  beaten by some element of A that B - A does not beat back;
* custom - an arbitrary comparison callable, constrained only by the
  pointedness and monotonicity invariants.
"""
from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Hashable, Iterable, Mapping, Optional, Sequence, Tuple

from .formulas import (
    TRUE,
    And,
    Formula,
    Implies,
    Not,
    Or,
    Vocabulary,
    formula_of_extension,
)
from .reports import Report

INF = math.inf


class PlausibilityError(Exception):
    pass


class Ordering(Enum):
    LESS = "<"
    EQUAL = "="
    GREATER = ">"
    INCOMPARABLE = "<>"


class PlausibilityMeasure:
    """Base class: a comparison oracle over subsets of a finite carrier."""

    carrier: Tuple[Hashable, ...]

    def compare(self, a: Iterable[Hashable], b: Iterable[Hashable]) -> Ordering:
        raise NotImplementedError

    def at_least(self, a, b) -> bool:
        """Pl(a) >= Pl(b)."""
        return self.compare(a, b) in (Ordering.GREATER, Ordering.EQUAL)

    def more_plausible(self, a, b) -> bool:
        """Pl(a) > Pl(b)."""
        return self.compare(a, b) is Ordering.GREATER

    def is_bottom(self, a) -> bool:
        return self.compare(a, ()) is Ordering.EQUAL

    def _check_elements(self, a: frozenset):
        extra = a - self._carrier_set
        if extra:
            sample = ", ".join(sorted(map(repr, extra))[:3])
            raise PlausibilityError(f"elements outside carrier: {sample}")

    @property
    def _carrier_set(self) -> frozenset:
        cached = getattr(self, "_carrier_cache", None)
        if cached is None:
            cached = frozenset(self.carrier)
            self._carrier_cache = cached
        return cached


class RankedMeasure(PlausibilityMeasure):
    """Totally preordered measure given by a rank per element.

    Pl(A) corresponds to the *minimum* rank in A, so Pl(A | B) follows the
    max-of-plausibilities law for unions; the empty set (and any set of
    infinite rank) sits at bottom.
    """

    def __init__(self, carrier: Sequence[Hashable], ranks: Mapping[Hashable, float]):
        self.carrier = tuple(carrier)
        missing = [e for e in self.carrier if e not in ranks]
        if missing:
            raise PlausibilityError(f"missing ranks for {len(missing)} carrier elements")
        for e, r in ranks.items():
            if r != INF and (r < 0 or int(r) != r):
                raise PlausibilityError(f"rank of {e!r} must be a natural number or infinity")
        self.ranks = dict(ranks)

    def rank_of(self, a: Iterable[Hashable]) -> float:
        return min((self.ranks[e] for e in a), default=INF)

    def compare(self, a, b) -> Ordering:
        a, b = frozenset(a), frozenset(b)
        self._check_elements(a | b)
        ra, rb = self.rank_of(a), self.rank_of(b)
        if ra == rb:
            return Ordering.EQUAL
        return Ordering.GREATER if ra < rb else Ordering.LESS


class PreferentialMeasure(PlausibilityMeasure):
    """Dominance lift of a strict partial order on carrier elements.

    ``prec(x, y)`` means x is strictly preferred to (more normal than) y.
    When ``class_key`` is given, ``prec`` is read at the level of keys
    (elements sharing a key are order-equivalent and never prefer each
    other); set comparisons then collapse to key classes whenever that is
    sound, which keeps large carriers tractable.
    """

    def __init__(
        self,
        carrier: Sequence[Hashable],
        pairs: Optional[Iterable[Tuple[Hashable, Hashable]]] = None,
        prec: Optional[Callable[[Hashable, Hashable], bool]] = None,
        class_key: Optional[Callable[[Hashable], Hashable]] = None,
    ):
        self.carrier = tuple(carrier)
        if (pairs is None) == (prec is None):
            raise PlausibilityError("exactly one of pairs/prec must be given")
        if pairs is not None:
            if class_key is not None:
                raise PlausibilityError("explicit pairs are element-level; drop class_key")
            closed = _transitive_closure(set(pairs))
            for x, y in closed:
                if x == y:
                    raise PlausibilityError("preference order contains a cycle")
            self.pairs: Optional[frozenset] = frozenset(closed)
            self._key_prec = lambda x, y: (x, y) in self.pairs
        else:
            self.pairs = None
            self._key_prec = prec
        self.class_key = class_key

    def prec(self, x, y) -> bool:
        """Element-level strict preference."""
        if self.class_key is None:
            return self._key_prec(x, y)
        return self._key_prec(self.class_key(x), self.class_key(y))

    @staticmethod
    def _dominates(a: frozenset, b: frozenset, prec) -> bool:
        """Pl(a) >= Pl(b) under the dominance rule."""
        b_minus_a = b - a
        if not b_minus_a:
            return True
        if not a:
            return False
        anchors = [x for x in a if not any(prec(r, x) for r in b_minus_a)]
        return all(any(prec(x, r) for x in anchors) for r in b_minus_a)

    def compare(self, a, b) -> Ordering:
        a, b = frozenset(a), frozenset(b)
        self._check_elements(a | b)
        prec = self._key_prec
        if self.class_key is not None:
            key = self.class_key
            ka, kb = frozenset(map(key, a)), frozenset(map(key, b))
            # Collapsing to key classes is sound only if no class of one
            # side's difference also appears inside the other set.
            if not (ka & frozenset(map(key, b - a))) and not (
                kb & frozenset(map(key, a - b))
            ):
                a, b = ka, kb
            else:
                prec = self.prec
        ge_ab = self._dominates(a, b, prec)
        ge_ba = self._dominates(b, a, prec)
        if ge_ab and ge_ba:
            return Ordering.EQUAL
        if ge_ab:
            return Ordering.GREATER
        if ge_ba:
            return Ordering.LESS
        return Ordering.INCOMPARABLE


class CustomMeasure(PlausibilityMeasure):
    """Measure defined directly by a comparison callable on frozensets."""

    def __init__(
        self,
        carrier: Sequence[Hashable],
        compare_fn: Callable[[frozenset, frozenset], Ordering],
    ):
        self.carrier = tuple(carrier)
        self.compare_fn = compare_fn

    def compare(self, a, b) -> Ordering:
        a, b = frozenset(a), frozenset(b)
        self._check_elements(a | b)
        return self.compare_fn(a, b)


class MappedMeasure(PlausibilityMeasure):
    """Image of a base measure under a carrier bijection.

    Comparisons delegate to the base measure on mapped sets, so the image
    is order-isomorphic to the base by construction.
    """

    def __init__(self, carrier: Sequence[Hashable], base: PlausibilityMeasure, to_base: Callable):
        self.carrier = tuple(carrier)
        self.base = base
        self.to_base = to_base

    def compare(self, a, b) -> Ordering:
        a, b = frozenset(a), frozenset(b)
        self._check_elements(a | b)
        return self.base.compare(
            frozenset(map(self.to_base, a)), frozenset(map(self.to_base, b))
        )


def unwrap(measure: PlausibilityMeasure) -> PlausibilityMeasure:
    """Follow MappedMeasure delegation down to the underlying measure."""
    while isinstance(measure, MappedMeasure):
        measure = measure.base
    return measure


def _transitive_closure(pairs: set) -> set:
    closed = set(pairs)
    changed = True
    while changed:
        changed = False
        for (a, b), (c, d) in itertools.product(tuple(closed), repeat=2):
            if b == c and (a, d) not in closed:
                closed.add((a, d))
                changed = True
    return closed


def from_preference(
    carrier: Sequence[Hashable], pairs: Iterable[Tuple[Hashable, Hashable]]
) -> PreferentialMeasure:
    """Lift a strict preference order (x before y = x preferred) to a measure."""
    return PreferentialMeasure(carrier, pairs=pairs)


# ---------------------------------------------------------------------------
# Axioms


def _decode_triple(code: int, n: int):
    groups = ([], [], [])
    for i in range(n):
        code, part = divmod(code, 4)
        if part:
            groups[part - 1].append(i)
    return groups


def is_qualitative(
    measure: PlausibilityMeasure,
    budget: Optional[int] = 200_000,
    seed: int = 0,
) -> bool:
    """Check the two closure axioms behind default reasoning.

    For pairwise disjoint A, B, C: if Pl(A|B) > Pl(C) and Pl(A|C) > Pl(B)
    then Pl(A) > Pl(B|C); and a union of two bottom sets stays at bottom.
    Exhaustive over disjoint triples while they fit the budget, after which
    triples are sampled deterministically.
    """
    carrier = measure.carrier
    n = len(carrier)
    total = 4 ** n
    rng = random.Random(seed)
    if budget is None or total <= budget:
        codes: Iterable[int] = range(total)
    else:
        codes = (rng.randrange(total) for _ in range(budget))
    for code in codes:
        ia, ib, ic = _decode_triple(code, n)
        a = frozenset(carrier[i] for i in ia)
        b = frozenset(carrier[i] for i in ib)
        c = frozenset(carrier[i] for i in ic)
        if not c and measure.is_bottom(a) and measure.is_bottom(b):
            if not measure.is_bottom(a | b):
                return False
        if measure.more_plausible(a | b, c) and measure.more_plausible(a | c, b):
            if not measure.more_plausible(a, b | c):
                return False
    return True


def check_monotonicity(
    measure: PlausibilityMeasure, budget: Optional[int] = 100_000, seed: int = 0
) -> bool:
    """Subsets are never more plausible than their supersets."""
    carrier = measure.carrier
    n = len(carrier)
    total = 3 ** n  # per element: absent, in B only, or in A and B
    rng = random.Random(seed)
    codes: Iterable[int] = range(total) if budget is None or total <= budget else (
        rng.randrange(total) for _ in range(budget)
    )
    for code in codes:
        a, b = [], []
        for i in range(n):
            code, part = divmod(code, 3)
            if part >= 1:
                b.append(carrier[i])
            if part == 2:
                a.append(carrier[i])
        if measure.compare(frozenset(a), frozenset(b)) not in (Ordering.LESS, Ordering.EQUAL):
            return False
    return True


# ---------------------------------------------------------------------------
# Structures: a measure over labelled elements plus conditional semantics


@dataclass
class PlausibilityStructure:
    """A measure over elements that are labelled with worlds.

    ``labeling`` maps each carrier element to a world index of ``vocab``;
    formula extensions are evaluated through the labels.
    """

    measure: PlausibilityMeasure
    labeling: Mapping[Hashable, int]
    vocab: Vocabulary

    def __post_init__(self):
        missing = [e for e in self.measure.carrier if e not in self.labeling]
        if missing:
            raise PlausibilityError("labeling must cover the whole carrier")

    def holders(self, formula: Formula) -> frozenset:
        ext = self.vocab.extension(formula)
        return frozenset(e for e in self.measure.carrier if self.labeling[e] in ext)


def conditional_holds(
    structure: PlausibilityStructure, antecedent: Formula, consequent: Formula
) -> bool:
    """Truth of 'given antecedent, consequent is plausible'.

    Holds vacuously when the antecedent's set is at bottom; otherwise the
    antecedent-and-consequent set must be strictly more plausible than the
    antecedent-and-not-consequent set.
    """
    m = structure.measure
    ante = structure.holders(antecedent)
    if m.is_bottom(ante):
        return True
    good = structure.holders(And(antecedent, consequent))
    bad = structure.holders(And(antecedent, Not(consequent)))
    return m.more_plausible(good, bad)


def believes(structure: PlausibilityStructure, formula: Formula) -> bool:
    return conditional_holds(structure, TRUE, formula)


def preferential_conditional_holds(
    order: PreferentialMeasure,
    labeling: Mapping[Hashable, int],
    vocab: Vocabulary,
    antecedent: Formula,
    consequent: Formula,
) -> bool:
    """World-order reading of the conditional, used as an independent oracle.

    For every element satisfying the antecedent there must be an at least
    as preferred element satisfying antecedent-and-consequent, all of whose
    strict betters satisfy antecedent-implies-consequent.
    """
    ante_ext = vocab.extension(antecedent)
    good_ext = vocab.extension(And(antecedent, consequent))
    impl_ext = vocab.extension(Implies(antecedent, consequent))
    elements = order.carrier
    for w1 in elements:
        if labeling[w1] not in ante_ext:
            continue
        found = False
        for w2 in elements:
            if labeling[w2] not in good_ext:
                continue
            if w2 != w1 and not order.prec(w2, w1):
                continue  # witnesses must be at least as normal as w1
            if all(labeling[w3] in impl_ext for w3 in elements if order.prec(w3, w2)):
                found = True
                break
        if not found:
            return False
    return True


# ---------------------------------------------------------------------------
# Closure rules of the conditional (the usual core of default reasoning)


def extension_representatives(vocab: Vocabulary) -> list:
    """One canonical formula per extension, paired with a syntactic variant.

    The conditional's truth depends only on extensions, so this pool is
    exhaustive for the semantic closure rules at any formula depth; the
    double-negation variants give the left-equivalence rule real syntax
    changes to chew on.
    """
    if vocab.world_count > 8:
        raise PlausibilityError("representative pool only built for small vocabularies")
    pool = []
    for mask in range(1 << vocab.world_count):
        ws = frozenset(w for w in vocab.worlds() if (mask >> w) & 1)
        f = formula_of_extension(ws, vocab)
        pool.append((f, Not(Not(f))))
    return pool


def check_klm_closure(
    structure: PlausibilityStructure,
    formulas: Optional[Iterable[Formula]] = None,
) -> Report:
    """Check the closure rules of the conditional over generated formulas.

    Rules: REF (reflexivity), LLE (left logical equivalence), RW (right
    weakening), AND, OR, CM (cautious monotonicity).
    """
    vocab = structure.vocab
    if formulas is None:
        pairs = extension_representatives(vocab)
    else:
        pairs = [(f, Not(Not(f))) for f in formulas]
    reps = [p[0] for p in pairs]

    def cond(a: Formula, b: Formula) -> bool:
        return conditional_holds(structure, a, b)

    report = Report("klm")

    witness = ""
    for f in reps:
        if not cond(f, f):
            witness = f"{f} does not imply itself by default"
            break
    report.add("REF", not witness, witness)

    witness = ""
    for f, variant in pairs:
        for psi in reps:
            if cond(f, psi) != cond(variant, psi):
                witness = f"({f}) vs equivalent ({variant}) before {psi}"
                break
        if witness:
            break
    report.add("LLE", not witness, witness)

    witness = ""
    for f in reps:
        held = [psi for psi in reps if cond(f, psi)]
        for psi in held:
            ext_psi = vocab.extension(psi)
            for psi2 in reps:
                if ext_psi <= vocab.extension(psi2) and not cond(f, psi2):
                    witness = f"{f} => {psi} but not the weaker {psi2}"
                    break
            if witness:
                break
        if witness:
            break
    report.add("RW", not witness, witness)

    witness = ""
    for f in reps:
        held = [psi for psi in reps if cond(f, psi)]
        for p1, p2 in itertools.combinations_with_replacement(held, 2):
            if not cond(f, And(p1, p2)):
                witness = f"{f} => {p1} and {p2} but not their conjunction"
                break
        if witness:
            break
    report.add("AND", not witness, witness)

    witness = ""
    for psi in reps:
        held = [f for f in reps if cond(f, psi)]
        for f1, f2 in itertools.combinations_with_replacement(held, 2):
            if not cond(Or(f1, f2), psi):
                witness = f"{f1} => {psi} and {f2} => {psi} but not from their disjunction"
                break
        if witness:
            break
    report.add("OR", not witness, witness)

    witness = ""
    for f in reps:
        held = [psi for psi in reps if cond(f, psi)]
        for p1 in held:
            for p2 in held:
                if not cond(And(f, p1), p2):
                    witness = f"{f} => {p1} and {p2}, but ({f}) & ({p1}) /=> {p2}"
                    break
            if witness:
                break
        if witness:
            break
    report.add("CM", not witness, witness)
    return report
