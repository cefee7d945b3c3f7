"""Belief revision over ranked priors.

Revision operators act on model sets: a belief set is represented by its
extension, and revising by an observation keeps the lowest-ranked worlds
satisfying it.  The constructions here go both ways: an operator induces
a run system whose conditioning reproduces it, and a system with a ranked
prior induces an operator via its time-0 world ranking.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from .formulas import (
    FALSE,
    TRUE,
    And,
    Atom,
    Extension,
    Formula,
    Not,
    Vocabulary,
    formula_of_extension,
)
from .plausibility import (
    INF,
    Ordering,
    PlausibilityMeasure,
    RankedMeasure,
    extension_representatives,
    unwrap,
)
from .reports import Report
from .systems import LocalState, Run, System, _run_rank, bel, runs_with_observations


class RevisionError(Exception):
    pass


@dataclass
class RevisionOperator:
    """A semantic revision function: (belief extension, input extension) ->
    revised extension, total and deterministic."""

    apply: Callable[[Extension, Extension], Extension]
    vocab: Vocabulary
    provenance: str = "external"

    def __call__(self, belief: Extension, observed: Extension) -> Extension:
        return self.apply(frozenset(belief), frozenset(observed))


EpistemicState = Tuple[Formula, ...]


def _min_rank_worlds(ranks: Mapping[int, float], worlds: Iterable[int]) -> Extension:
    candidates = [(ranks.get(w, INF), w) for w in worlds]
    best = min((r for r, _ in candidates), default=INF)
    if best == INF:
        return frozenset()
    return frozenset(w for r, w in candidates if r == best)


def revise_from_ranking(
    ranks: Mapping[int, float], belief: Extension, observed: Extension
) -> Extension:
    """Keep the lowest-ranked worlds of the observation.

    The belief extension must be exactly the rank-minimal worlds; this is
    the coherence condition tying the ranking to the belief set.
    """
    minimal = _min_rank_worlds(ranks, ranks.keys())
    if frozenset(belief) != minimal:
        raise RevisionError(
            "belief extension does not equal the rank-minimal worlds of the ranking"
        )
    return _min_rank_worlds(ranks, observed)


def operator_from_ranking(ranks: Mapping[int, float], vocab: Vocabulary) -> RevisionOperator:
    ranks = dict(ranks)

    def apply(belief: Extension, observed: Extension) -> Extension:
        return revise_from_ranking(ranks, belief, observed)

    return RevisionOperator(apply, vocab, provenance="from-ranking")


# ---------------------------------------------------------------------------
# Postulates, checked semantically on extensions


def check_agm(
    op: RevisionOperator,
    belief: Extension,
    formulas: Optional[Sequence[Formula]] = None,
) -> Report:
    """Semantic renditions of the eight revision postulates.

    Belief sets are model sets, so set inclusion runs opposite to the
    syntactic direction: adding a formula to a belief set intersects its
    extension.  R6 is inherently syntactic; with extensions as inputs it
    is spot-checked through pairs of distinct parses of equivalent
    formulas, which necessarily collapse to the same argument.
    """
    vocab = op.vocab
    belief = frozenset(belief)
    if formulas is None:
        pool = extension_representatives(vocab)
    else:
        pool = [(f, Not(Not(f))) for f in formulas]
    exts = sorted({vocab.extension(f) for f, _ in pool}, key=sorted)
    report = Report("agm")

    def describe(e: Extension) -> str:
        return "{" + ",".join(vocab.world_str(w) for w in sorted(e)) + "}"

    witness = ""
    for ext in exts:
        if not op(belief, ext) <= vocab.all_worlds():
            witness = f"output not an extension for input {describe(ext)}"
            break
    report.add("R1", not witness, witness)

    witness = ""
    for ext in exts:
        if not op(belief, ext) <= ext:
            witness = f"revision by {describe(ext)} leaves its extension"
            break
    report.add("R2", not witness, witness)

    witness = ""
    for ext in exts:
        if not op(belief, ext) >= belief & ext:
            witness = f"revision by {describe(ext)} loses part of the belief overlap"
            break
    report.add("R3", not witness, witness)

    witness = ""
    for ext in exts:
        if belief & ext and not op(belief, ext) <= belief & ext:
            witness = f"consistent revision by {describe(ext)} adds foreign worlds"
            break
    report.add("R4", not witness, witness)

    witness = ""
    for ext in exts:
        if (not op(belief, ext)) != (not ext):
            witness = f"emptiness mismatch for input {describe(ext)}"
            break
    report.add("R5", not witness, witness)

    witness = ""
    for f, variant in pool:
        if vocab.extension(f) != vocab.extension(variant):
            witness = f"parses of {f} and {variant} disagree"
            break
        if op(belief, vocab.extension(f)) != op(belief, vocab.extension(variant)):
            witness = f"syntax of {f} leaked into the result"
            break
    report.add("R6", not witness, witness)

    witness = ""
    for ext_phi, ext_psi in itertools.product(exts, repeat=2):
        if not op(belief, ext_phi & ext_psi) >= op(belief, ext_phi) & ext_psi:
            witness = (
                f"conjunctive revision {describe(ext_phi)} & {describe(ext_psi)} "
                "dropped compatible worlds"
            )
            break
    report.add("R7", not witness, witness)

    witness = ""
    for ext_phi, ext_psi in itertools.product(exts, repeat=2):
        narrowed = op(belief, ext_phi) & ext_psi
        if narrowed and not op(belief, ext_phi & ext_psi) <= narrowed:
            witness = (
                f"conjunctive revision {describe(ext_phi)} & {describe(ext_psi)} "
                "added worlds beyond the narrowed result"
            )
            break
    report.add("R8", not witness, witness)
    return report


# ---------------------------------------------------------------------------
# Operator -> system


def system_from_ranking(
    vocab: Vocabulary,
    world_ranks: Mapping[int, float],
    menu: Sequence[Formula],
    horizon: int,
    universe: Optional[frozenset] = None,
) -> System:
    """Static-environment system whose prior ranks runs by initial world.

    Runs hold their environment world constant and observe any menu
    sequence true at that world, so observing carries no information
    beyond the observed formulas' truth.  TRUE is forced into the menu so
    every observation prefix extends to a full run.
    """
    menu = _with_true(menu)
    if universe is None:
        universe = vocab.all_worlds()
    runs = []
    for w in sorted(universe):
        choices = [o for o in menu if w in vocab.extension(o)]
        for obs in itertools.product(choices, repeat=horizon):
            runs.append(Run((w,) * (horizon + 1), obs))
    ranks = {run: world_ranks.get(run.envs[0], INF) for run in runs}
    prior = RankedMeasure(runs, ranks)
    return System(
        vocab=vocab,
        runs=tuple(runs),
        prior=prior,
        horizon=horizon,
        universe=frozenset(universe),
        menu=tuple(menu),
    )


def _with_true(menu: Sequence[Formula]) -> Tuple[Formula, ...]:
    menu = tuple(dict.fromkeys(menu))
    return menu if TRUE in menu else (TRUE,) + menu


def ranking_from_operator(op: RevisionOperator, belief: Extension) -> Dict[int, float]:
    """Recover a world ranking by probing the operator layer by layer.

    Layer 0 is the belief extension; each next layer is what the operator
    returns when revising by the formula of all still-unranked worlds.
    """
    vocab = op.vocab
    belief = frozenset(belief)
    if not belief:
        raise RevisionError("cannot rank from an inconsistent belief extension")
    ranks: Dict[int, float] = {w: 0 for w in belief}
    unranked = set(vocab.all_worlds()) - belief
    layer = 1
    while unranked:
        best = op(belief, frozenset(unranked))
        if not best or not best <= unranked:
            raise RevisionError("operator does not behave like a ranking on probes")
        for w in best:
            ranks[w] = layer
        unranked -= best
        layer += 1
    return ranks


def system_from_revision(
    op: RevisionOperator,
    belief: Extension,
    menu: Sequence[Formula],
    horizon: int,
) -> System:
    """Realise a revision operator as a run system.

    The initial belief must be consistent: conditioning can never leave an
    inconsistent state, so no system reproduces an operator that escapes
    one.  The returned system believes exactly ``belief`` at the start and
    ``op(belief, o)`` after observing any menu formula o.
    """
    if not belief:
        raise RevisionError("initial belief extension is empty (inconsistent belief set)")
    ranks = ranking_from_operator(op, belief)
    return system_from_ranking(op.vocab, ranks, menu, horizon)


# ---------------------------------------------------------------------------
# System -> operator


def characteristic_world_ranks(sys: System) -> Dict[int, float]:
    """Rank of each initial world: the best run rank that starts there."""
    cached = getattr(sys, "_char_ranks", None)
    if cached is not None:
        return cached
    base = unwrap(sys.prior)
    if not isinstance(base, RankedMeasure):
        raise RevisionError("characteristic ranking needs a ranked prior")
    ranks: Dict[int, float] = {w: INF for w in sys.universe}
    for run in sys.runs:
        r = _run_rank(sys.prior, run)
        w = run.envs[0]
        if r < ranks[w]:
            ranks[w] = r
    sys._char_ranks = ranks
    return ranks


def revision_from_system(sys: System, validate: bool = True) -> RevisionOperator:
    """Read a revision operator off a static ranked system.

    The operator conditions the system's run ranking, projected to initial
    worlds, on the input extension; it is defined for the system's initial
    belief extension only.
    """
    if validate:
        report = validate_rev(sys)
        if not report.all_passed:
            raise RevisionError(
                "system fails revision validation: "
                + "; ".join(r.text_line() for r in report.failures())
            )
    ranks = characteristic_world_ranks(sys)
    initial = bel(sys, ())

    def apply(belief: Extension, observed: Extension) -> Extension:
        if frozenset(belief) != initial:
            raise RevisionError("operator is induced at the system's initial belief only")
        return _min_rank_worlds(ranks, observed)

    return RevisionOperator(apply, sys.vocab, provenance="from-system")


def revise_at_state(sys: System, s_a: LocalState, observed: Formula) -> Extension:
    """One-step revision from an attainable non-initial state.

    Conditioning the characteristic ranking on past observations plus the
    new input; when the input contradicts the past there is no global
    state carrying it, the belief state collapses, and the consistency
    postulate is unsatisfiable from there.
    """
    s_a = tuple(s_a)
    if not runs_with_observations(sys, s_a):
        raise RevisionError("local state is not attainable in this system")
    past = sys.universe
    for o in s_a:
        past &= sys.vocab.extension(o)
    target = past & sys.vocab.extension(observed)
    if not target:
        return frozenset()
    return _min_rank_worlds(characteristic_world_ranks(sys), target)


# ---------------------------------------------------------------------------
# Epistemic states: arbitrary observation sequences


def epistemic_bel(sys: System, state: Sequence[Formula]) -> Extension:
    """Beliefs held at an arbitrary finite observation sequence.

    The sequence may be jointly inconsistent; beliefs are then read from
    its longest consistent suffix.  A sequence whose last element is
    itself inconsistent pins the agent to the absurd belief state.
    """
    state = tuple(state)
    if not state:
        return bel(sys, ())
    vocab = sys.vocab
    last = vocab.extension(state[-1]) & sys.universe
    if not last:
        return frozenset()
    suffix_ext = last
    start = len(state) - 1
    for k in range(len(state) - 2, -1, -1):
        tighter = suffix_ext & vocab.extension(state[k])
        if not tighter:
            break
        suffix_ext = tighter
        start = k
    return _min_rank_worlds(characteristic_world_ranks(sys), suffix_ext)


def longest_consistent_suffix(sys: System, state: Sequence[Formula]) -> Tuple[Formula, ...]:
    """The suffix actually used by :func:`epistemic_bel` (FALSE marks an
    inconsistent last element)."""
    state = tuple(state)
    if not state:
        return ()
    vocab = sys.vocab
    if not vocab.extension(state[-1]) & sys.universe:
        return (FALSE,)
    suffix_ext = vocab.extension(state[-1]) & sys.universe
    start = len(state) - 1
    for k in range(len(state) - 2, -1, -1):
        tighter = suffix_ext & vocab.extension(state[k])
        if not tighter:
            break
        suffix_ext = tighter
        start = k
    return state[start:]


def check_agm_epistemic(
    sys: System,
    sequences: Optional[Iterable[Sequence[Formula]]] = None,
    probes: Optional[Sequence[Formula]] = None,
) -> Report:
    """The revision postulates restated for sequence-valued epistemic
    states, with revision = append and beliefs = epistemic_bel; includes
    the extra collapsing rule for consistent back-to-back observations.
    """
    vocab = sys.vocab
    if probes is None:
        probes = list(sys.menu) or [f for f, _ in extension_representatives(vocab)]
    if sequences is None:
        menu = list(sys.menu)
        sequences = [()]
        for k in (1, 2):
            sequences += list(itertools.product(menu, repeat=k))
    sequences = [tuple(s) for s in sequences]
    report = Report("agm-epistemic")

    def ext(f: Formula) -> Extension:
        return vocab.extension(f) & sys.universe

    results = {}
    for name in ("R1'", "R2'", "R3'", "R4'", "R5'", "R6'", "R7'", "R8'", "R9'"):
        results[name] = ""

    for state in sequences:
        bel_here = epistemic_bel(sys, state)
        for phi in probes:
            after = epistemic_bel(sys, state + (phi,))
            tag = f"E={_seq_str(state)}, input {phi}"
            if not results["R1'"] and not after <= vocab.all_worlds():
                results["R1'"] = tag
            if not results["R2'"] and not after <= ext(phi):
                results["R2'"] = tag
            if not results["R3'"] and not after >= bel_here & ext(phi):
                results["R3'"] = tag
            if not results["R4'"] and bel_here & ext(phi) and not after <= bel_here & ext(phi):
                results["R4'"] = tag
            if not results["R5'"] and (not after) != (not ext(phi)):
                results["R5'"] = tag
            if not results["R6'"]:
                if epistemic_bel(sys, state + (Not(Not(phi)),)) != after:
                    results["R6'"] = tag
            for psi in probes:
                both = epistemic_bel(sys, state + (And(phi, psi),))
                tag2 = f"{tag}, then {psi}"
                if not results["R7'"] and not both >= after & ext(psi):
                    results["R7'"] = tag2
                if not results["R8'"] and after & ext(psi) and not both <= after & ext(psi):
                    results["R8'"] = tag2
                if not results["R9'"] and ext(And(phi, psi)):
                    stepped = epistemic_bel(sys, state + (phi, psi))
                    if stepped != both:
                        results["R9'"] = tag2
    for name, witness in results.items():
        report.add(name, not witness, witness)
    return report


def _seq_str(state: Sequence[Formula]) -> str:
    return "<" + ", ".join(str(f) for f in state) + ">"


# ---------------------------------------------------------------------------
# Validation of the revision conditions


def validate_rev(
    sys: System,
    formula_probes: Optional[Sequence[Formula]] = None,
    obs_sequences: Optional[Sequence[Sequence[Formula]]] = None,
    max_len: int = 2,
    budget: int = 100_000,
) -> Report:
    """Check the four conditions for revision behaviour plus the weaker
    observability variant of the fourth:

    REV1  environment propositions never change along a run;
    REV2  the prior over runs is ranked (total, union takes the max);
    REV3  every admissible world is plausibility-positive initially;
    REV4  comparing formulas after observing a sequence equals comparing
          them conjoined with the sequence up front;
    REV4' the same biconditional, demanded only when the observation
          sequence itself has positive plausibility with the formula.

    Formula quantification runs over the probe set (the menu, literals,
    and the constants, by default); observation sequences default to menu
    sequences up to ``max_len``.
    """
    vocab = sys.vocab
    report = Report("rev")

    witness = ""
    for run in sys.runs:
        for m in range(1, sys.horizon + 1):
            if run.envs[m] != run.envs[0]:
                witness = (
                    f"environment changed from {vocab.world_str(run.envs[0])} to "
                    f"{vocab.world_str(run.envs[m])} at time {m}"
                )
                break
        if witness:
            break
    report.add("REV1", not witness, witness)

    report.add("REV2", *_check_ranked(sys, budget))

    base = unwrap(sys.prior)
    ranked = isinstance(base, RankedMeasure)
    witness = ""
    for w in sorted(sys.universe):
        event = frozenset(r for r in sys.runs if r.envs[0] == w)
        if ranked:
            positive = any(_run_rank(sys.prior, r) < INF for r in event)
        else:
            positive = bool(event) and not sys.prior.is_bottom(event)
        if not positive:
            witness = f"world {vocab.world_str(w)} has bottom plausibility initially"
            break
    report.add("REV3", not witness, witness)

    if formula_probes is None:
        formula_probes = _default_probes(sys)
    if obs_sequences is None:
        obs_sequences = _default_obs_sequences(sys, max_len)

    rev4_witness, rev4p_witness = _check_observation_neutrality(
        sys, formula_probes, obs_sequences, budget
    )
    report.add("REV4", not rev4_witness, rev4_witness)
    report.add("REV4'", not rev4p_witness, rev4p_witness)
    report.note(
        f"observation-neutrality quantified over {len(list(formula_probes))} probes "
        f"and {len(list(obs_sequences))} observation sequences (the menu stands in "
        "for the full language)"
    )
    return report


def _default_probes(sys: System) -> List[Formula]:
    probes: List[Formula] = [TRUE, FALSE]
    for name in sys.vocab.props:
        base, _, stamp = name.partition("@")
        atom = Atom(base, int(stamp)) if stamp else Atom(base)
        probes += [atom, Not(atom)]
    probes += list(sys.menu)
    return list(dict.fromkeys(probes))


def _default_obs_sequences(sys: System, max_len: int) -> List[Tuple[Formula, ...]]:
    menu = list(sys.menu) or list(dict.fromkeys(o for r in sys.runs for o in r.obs))
    sequences: List[Tuple[Formula, ...]] = []
    for k in range(1, min(max_len, sys.horizon) + 1):
        if len(menu) ** k > 4096:
            break
        sequences += list(itertools.product(menu, repeat=k))
    return sequences


def _check_ranked(sys: System, budget: int) -> Tuple[bool, str]:
    base = unwrap(sys.prior)
    if isinstance(base, RankedMeasure):
        return True, ""
    runs = list(sys.runs)
    count = 0
    for r1, r2 in itertools.combinations(runs, 2):
        count += 1
        if count > budget:
            break
        if sys.prior.compare(frozenset([r1]), frozenset([r2])) is Ordering.INCOMPARABLE:
            return False, "incomparable singleton runs exist (prior is not total)"
    # totality also requires the union law; spot-check it
    count = 0
    for r1, r2 in itertools.combinations(runs, 2):
        count += 1
        if count > min(budget, 2000):
            break
        a, b = frozenset([r1]), frozenset([r2])
        union = a | b
        top = a if sys.prior.at_least(a, b) else b
        if sys.prior.compare(union, top) is not Ordering.EQUAL:
            return False, "union does not take the maximum of its parts"
    return True, ""


def _event_value(sys: System, event: frozenset, ranked: bool):
    if ranked:
        return min((_run_rank(sys.prior, r) for r in event), default=INF)
    return event


def _value_at_least(sys: System, va, vb, ranked: bool) -> bool:
    if ranked:
        return va <= vb  # smaller min rank = more plausible
    return sys.prior.at_least(va, vb)


def _value_positive(sys: System, v, ranked: bool) -> bool:
    if ranked:
        return v < INF
    return not sys.prior.is_bottom(v)


def _check_observation_neutrality(
    sys: System,
    probes: Sequence[Formula],
    obs_sequences: Sequence[Sequence[Formula]],
    budget: int,
) -> Tuple[str, str]:
    """Shared sweep for the strong and weak forms.

    The conditional side evaluates each probe at the time of the last
    observation (the reading conditioning actually uses); the conjunction
    side evaluates probe-and-observations at time 0.  Under REV1 the two
    timings coincide.
    """
    vocab = sys.vocab
    ranked = isinstance(unwrap(sys.prior), RankedMeasure)
    rev4 = ""
    rev4p = ""
    spent = 0
    for seq in obs_sequences:
        seq = tuple(seq)
        m = len(seq)
        conj_ext = sys.universe
        for o in seq:
            conj_ext = conj_ext & vocab.extension(o)
        prefix_runs = runs_with_observations(sys, seq)
        cond_vals = {}
        conj_vals = {}
        for f in probes:
            f_ext = vocab.extension(f)
            cond_event = frozenset(r for r in prefix_runs if r.envs[m] in f_ext)
            conj_event = frozenset(
                r for r in sys.runs if r.envs[0] in (f_ext & conj_ext)
            )
            cond_vals[f] = _event_value(sys, cond_event, ranked)
            conj_vals[f] = _event_value(sys, conj_event, ranked)
        for f, g in itertools.product(probes, repeat=2):
            spent += 1
            if spent > budget:
                return rev4, rev4p
            lhs = _value_at_least(sys, cond_vals[f], cond_vals[g], ranked)
            rhs = _value_at_least(sys, conj_vals[f], conj_vals[g], ranked)
            if lhs != rhs:
                tag = f"probes ({f}, {g}) after observing {_seq_str(seq)}"
                if not rev4:
                    rev4 = tag
                if not rev4p and _value_positive(sys, cond_vals[f], ranked):
                    rev4p = tag
        if rev4 and rev4p:
            break
    return rev4, rev4p
