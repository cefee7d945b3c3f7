"""Finite-horizon interpreted systems with a plausibility prior over runs.

A run pairs a sequence of environment worlds (length horizon+1) with the
sequence of formulas observed at times 1..horizon.  The agent's local
state at time m is the observation prefix of length m, which makes every
system synchronous with perfect recall by construction.  The prior over
runs induces, by conditioning on the runs compatible with a local state,
a plausibility measure over the points the agent considers possible.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

from .formulas import (
    TRUE,
    Extension,
    Formula,
    FormulaError,
    Vocabulary,
)
from .plausibility import (
    Ordering,
    PlausibilityMeasure,
    RankedMeasure,
    check_monotonicity,
    is_qualitative,
    unwrap,
)
from .reports import Report


class RunSystemError(Exception):
    pass


class HorizonError(RunSystemError):
    pass


class BudgetError(RunSystemError):
    pass


LocalState = Tuple[Formula, ...]


@dataclass(frozen=True)
class Run:
    """One possible history: environment worlds 0..H and observations 1..H."""

    envs: Tuple[int, ...]
    obs: Tuple[Formula, ...]

    def __post_init__(self):
        if len(self.envs) != len(self.obs) + 1:
            raise RunSystemError("a run needs exactly one more environment state than observations")

    @property
    def horizon(self) -> int:
        return len(self.obs)

    def local_state(self, time: int) -> LocalState:
        return self.obs[:time]


Point = Tuple[Run, int]


@dataclass
class System:
    """A finite set of runs with a shared vocabulary and a prior over runs.

    ``universe`` is the set of worlds admitted as environment states (the
    full enumeration for ordinary propositional reasoning, a constrained
    subset when the consequence relation carries extra axioms, e.g. circuit
    behaviour).  ``menu`` lists the observation formulas runs draw from.
    """

    vocab: Vocabulary
    runs: Tuple[Run, ...]
    prior: PlausibilityMeasure
    horizon: int
    universe: FrozenSet[int] = None  # type: ignore[assignment]
    menu: Tuple[Formula, ...] = ()
    point_measures: Optional[Dict[LocalState, PlausibilityMeasure]] = None

    def __post_init__(self):
        if self.universe is None:
            self.universe = self.vocab.all_worlds()
        self.runs = tuple(self.runs)
        for run in self.runs:
            if run.horizon != self.horizon:
                raise RunSystemError("all runs must share the system horizon")
        self._conditioned: Dict[LocalState, "ConditionedMeasure"] = {}
        self._bel_cache: Dict[LocalState, Extension] = {}
        self._cond_cache: Dict[tuple, bool] = {}

    # -- basic structure -----------------------------------------------------

    def points(self) -> Iterable[Point]:
        for run in self.runs:
            for m in range(self.horizon + 1):
                yield (run, m)

    def local_states(self) -> List[LocalState]:
        seen = dict.fromkeys(run.local_state(m) for run in self.runs for m in range(self.horizon + 1))
        return list(seen)

    def points_with_local_state(self, s_a: LocalState) -> Tuple[Point, ...]:
        m = len(s_a)
        if m > self.horizon:
            return ()
        return tuple((run, m) for run in self.runs if run.local_state(m) == s_a)

    def plaus_at(self, s_a: LocalState) -> PlausibilityMeasure:
        if self.point_measures is not None and s_a in self.point_measures:
            return self.point_measures[s_a]
        cached = self._conditioned.get(s_a)
        if cached is None:
            cached = ConditionedMeasure(self.points_with_local_state(s_a), self.prior)
            self._conditioned[s_a] = cached
        return cached


def indistinguishable(sys: System, p1: Point, p2: Point) -> bool:
    """Same observation prefix; synchrony makes equal times necessary."""
    r1, m1 = p1
    r2, m2 = p2
    return r1.local_state(m1) == r2.local_state(m2)


class ConditionedMeasure(PlausibilityMeasure):
    """Point-level measure induced by restricting the prior to a local state.

    The carrier holds the points the agent considers possible; comparisons
    delegate to the prior on the underlying run sets.
    """

    def __init__(self, points: Sequence[Point], prior: PlausibilityMeasure):
        self.carrier = tuple(points)
        self.prior = prior

    def compare(self, a, b) -> Ordering:
        a, b = frozenset(a), frozenset(b)
        self._check_elements(a | b)
        runs_a = frozenset(run for run, _ in a)
        runs_b = frozenset(run for run, _ in b)
        return self.prior.compare(runs_a, runs_b)


def condition_prior(sys: System, s_a: LocalState) -> PlausibilityMeasure:
    return sys.plaus_at(s_a)


# ---------------------------------------------------------------------------
# Beliefs


def bel(sys: System, s_a: LocalState) -> Extension:
    """Model set of the agent's belief set at a local state.

    A world survives iff its characterising formula is not disbelieved at
    the conditioned measure.  Unattainable local states, and states whose
    whole carrier sits at bottom, give the empty extension (the agent
    believes everything, including falsity).
    """
    cached = sys._bel_cache.get(s_a)
    if cached is not None:
        return cached
    measure = sys.plaus_at(s_a)
    points = measure.carrier
    result: Extension
    if not points:
        result = frozenset()
    else:
        base = unwrap(measure.prior) if isinstance(measure, ConditionedMeasure) else None
        if isinstance(base, RankedMeasure):
            result = _bel_min_rank(sys, points, measure)
        else:
            result = _bel_generic(points, measure)
    sys._bel_cache[s_a] = result
    return result


def _bel_min_rank(sys: System, points, measure: ConditionedMeasure) -> Extension:
    ranks = {run: _run_rank(measure.prior, run) for run, _ in points}
    best = min(ranks.values())
    if best == float("inf"):
        return frozenset()
    return frozenset(run.envs[m] for run, m in points if ranks[run] == best)


def _bel_generic(points, measure) -> Extension:
    all_points = frozenset(points)
    if measure.is_bottom(all_points):
        return frozenset()
    by_world: Dict[int, set] = {}
    for run, t in points:
        by_world.setdefault(run.envs[t], set()).add((run, t))
    out = set()
    for w, holders in by_world.items():
        rest = all_points - holders
        if measure.compare(frozenset(rest), frozenset(holders)) is not Ordering.GREATER:
            out.add(w)
    return frozenset(out)


# ---------------------------------------------------------------------------
# The temporal-epistemic language and its model checker


class KptFormula:
    """Marker base for modal/temporal nodes layered over plain formulas."""

    __slots__ = ()


@dataclass(frozen=True)
class Knows(KptFormula):
    sub: object


@dataclass(frozen=True)
class Believes(KptFormula):
    sub: object


@dataclass(frozen=True)
class Next(KptFormula):
    sub: object


@dataclass(frozen=True)
class Conditional(KptFormula):
    antecedent: object
    consequent: object


@dataclass(frozen=True)
class Learn(KptFormula):
    observed: Formula

    def __post_init__(self):
        if isinstance(self.observed, KptFormula):
            raise RunSystemError("learn takes a plain environment formula")


@dataclass(frozen=True)
class KNot(KptFormula):
    sub: object


@dataclass(frozen=True)
class KAnd(KptFormula):
    left: object
    right: object


def knot(f):
    return KNot(f)


def kand(left, right):
    return KAnd(left, right)


def model_check(sys: System, point: Point, formula) -> bool:
    """Recursive truth at a point.

    Plain formulas read the environment world; knowledge quantifies over
    indistinguishable points; the next-step operator advances time (and
    refuses to run off the horizon); belief abbreviates the conditional
    with a trivially true antecedent; learn(phi) is true exactly when the
    last observation is syntactically phi.
    """
    run, m = point
    if isinstance(formula, Formula):
        return sys.vocab.satisfies(run.envs[m], formula)
    if isinstance(formula, KNot):
        return not model_check(sys, point, formula.sub)
    if isinstance(formula, KAnd):
        return model_check(sys, point, formula.left) and model_check(sys, point, formula.right)
    if isinstance(formula, Learn):
        return m >= 1 and run.obs[m - 1] == formula.observed
    if isinstance(formula, Knows):
        s_a = run.local_state(m)
        return all(
            model_check(sys, p, formula.sub) for p in sys.points_with_local_state(s_a)
        )
    if isinstance(formula, Next):
        if m + 1 > sys.horizon:
            raise HorizonError(f"next-step operator at time {m} exceeds horizon {sys.horizon}")
        return model_check(sys, (run, m + 1), formula.sub)
    if isinstance(formula, Believes):
        return model_check(sys, point, Conditional(TRUE, formula.sub))
    if isinstance(formula, Conditional):
        # conditionals depend on the point only through its local state
        s_a = run.local_state(m)
        key = (s_a, formula.antecedent, formula.consequent)
        cached = sys._cond_cache.get(key)
        if cached is not None:
            return cached
        measure = sys.plaus_at(s_a)
        carrier = frozenset(measure.carrier)
        ante = _satisfying_points(sys, carrier, formula.antecedent)
        if measure.is_bottom(ante):
            result = True
        else:
            good = _satisfying_points(sys, ante, formula.consequent)
            result = measure.compare(good, ante - good) is Ordering.GREATER
        sys._cond_cache[key] = result
        return result
    raise RunSystemError(f"unknown formula node {formula!r}")


def _satisfying_points(sys: System, points: frozenset, formula) -> frozenset:
    if isinstance(formula, Formula):
        ext = sys.vocab.extension(formula)
        return frozenset(p for p in points if p[0].envs[p[1]] in ext)
    return frozenset(p for p in points if model_check(sys, p, formula))


# ---------------------------------------------------------------------------
# Run-set events


def runs_with_observations(sys: System, observations: Sequence[Formula]) -> frozenset:
    """Runs whose observation sequence starts with the given formulas."""
    m = len(observations)
    if m > sys.horizon:
        return frozenset()
    target = tuple(observations)
    return frozenset(r for r in sys.runs if r.obs[:m] == target)


def runs_matching(
    sys: System,
    formulas: Sequence[Optional[Formula]] = (),
    observations: Sequence[Formula] = (),
) -> frozenset:
    """Runs where formulas[i] holds of the time-i environment (None skips a
    position) and the observation sequence starts with ``observations``."""
    if len(formulas) > sys.horizon + 1 or len(observations) > sys.horizon:
        return frozenset()
    exts = [None if f is None else sys.vocab.extension(f) for f in formulas]
    target = tuple(observations)
    out = []
    for r in sys.runs:
        if target and r.obs[: len(target)] != target:
            continue
        if all(ext is None or r.envs[i] in ext for i, ext in enumerate(exts)):
            out.append(r)
    return frozenset(out)


# ---------------------------------------------------------------------------
# Conditioning consistency (the step-to-step local rule)


def check_prior_local_rule(sys: System, max_points: int = 12) -> Report:
    """Verify the step-to-step conditioning rule: for every reachable local
    state at time m+1 and all subset pairs (A, B) of its points, A is at
    most as plausible as B exactly when the time-m predecessor sets compare
    the same way under the time-m measure.

    For measures obtained by conditioning one prior both sides reduce to the
    same prior comparison, so this is a consistency self-check; it becomes a
    real test when per-state measures are supplied directly.  Ranked priors
    get a vectorised sweep over subset bitmasks; other priors fall back to
    explicit comparisons under a tighter size bound.
    """
    report = Report("prior-local-rule")
    base = unwrap(sys.prior)
    ranked = isinstance(base, RankedMeasure)
    seen = set()
    failures = []
    for run in sys.runs:
        for m in range(sys.horizon):
            s_next = run.local_state(m + 1)
            if s_next in seen:
                continue
            seen.add(s_next)
            nxt = sys.points_with_local_state(s_next)
            n = len(nxt)
            prev_measure = sys.plaus_at(run.local_state(m))
            next_measure = sys.plaus_at(s_next)
            prev_points = tuple((r, m) for r, _ in nxt)
            fast = (
                ranked
                and isinstance(next_measure, ConditionedMeasure)
                and isinstance(prev_measure, ConditionedMeasure)
            )
            limit = max_points if fast else min(max_points, 8)
            if n > limit:
                raise BudgetError(
                    f"{n} points share local state at time {m + 1}; limit is {limit}"
                )
            if fast:
                bad = _local_rule_ranked(sys, nxt, prev_points)
            else:
                bad = _local_rule_generic(nxt, prev_points, next_measure, prev_measure)
            if bad is not None:
                failures.append(f"local state {_state_str(s_next)}: {bad}")
    report.add("LOCAL-RULE", not failures, failures[0] if failures else "")
    return report


def _run_rank(prior: PlausibilityMeasure, run) -> float:
    from .plausibility import MappedMeasure

    m = prior
    x = run
    while isinstance(m, MappedMeasure):
        x = m.to_base(x)
        m = m.base
    return m.ranks[x]


def _minrank_table(ranks: Sequence[float], big: float):
    import numpy as np

    n = len(ranks)
    table = np.empty(1 << n)
    table[0] = big + 1.0
    for mask in range(1, 1 << n):
        low = mask & -mask
        rest = mask ^ low
        lowrank = ranks[low.bit_length() - 1]
        table[mask] = lowrank if not rest else min(table[rest], lowrank)
    return table


def _local_rule_ranked(sys: System, nxt, prev_points) -> Optional[str]:
    import numpy as np

    ranks_next = [_run_rank(sys.prior, r) for r, _ in nxt]
    ranks_prev = [_run_rank(sys.prior, r) for r, _ in prev_points]
    finite = [r for r in ranks_next + ranks_prev if r != float("inf")]
    big = (max(finite) + 1.0) if finite else 1.0
    mn = _minrank_table([min(r, big) for r in ranks_next], big)
    mp = _minrank_table([min(r, big) for r in ranks_prev], big)
    le_next = mn[:, None] >= mn[None, :]  # Pl(A) <= Pl(B) iff min rank of A >= of B
    le_prev = mp[:, None] >= mp[None, :]
    mismatch = le_next != le_prev
    if mismatch.any():
        flat = int(np.argmax(mismatch))
        a, b = divmod(flat, mn.shape[0])
        return f"subset masks ({a:#x}, {b:#x}) disagree"
    return None


def _local_rule_generic(nxt, prev_points, next_measure, prev_measure) -> Optional[str]:
    n = len(nxt)
    for mask_a in range(1 << n):
        a_next = frozenset(nxt[i] for i in range(n) if mask_a >> i & 1)
        a_prev = frozenset(prev_points[i] for i in range(n) if mask_a >> i & 1)
        for mask_b in range(1 << n):
            b_next = frozenset(nxt[i] for i in range(n) if mask_b >> i & 1)
            b_prev = frozenset(prev_points[i] for i in range(n) if mask_b >> i & 1)
            le_next = next_measure.compare(a_next, b_next) in (Ordering.LESS, Ordering.EQUAL)
            le_prev = prev_measure.compare(a_prev, b_prev) in (Ordering.LESS, Ordering.EQUAL)
            if le_next != le_prev:
                return f"subset masks ({mask_a:#x}, {mask_b:#x}) disagree"
    return None


def _state_str(s_a: LocalState) -> str:
    return "<" + ", ".join(str(f) for f in s_a) + ">"


# ---------------------------------------------------------------------------
# Belief change system validation


def validate_bcs(sys: System, budget: int = 20_000) -> Report:
    """Check the five conditions that make a system a belief change system:
    environment-determined propositions, observation-sequence local states,
    learn-atom semantics, reliable observations, and a conditioning prior.
    """
    report = Report("bcs")

    witness = ""
    for run in sys.runs:
        if len(run.envs) != sys.horizon + 1:
            witness = f"run {_run_str(sys, run)} has {len(run.envs)} environment states"
            break
        bad = [w for w in run.envs if w not in sys.universe]
        if bad:
            witness = f"environment state {sys.vocab.world_str(bad[0])} outside the universe"
            break
    report.add("BCS1", not witness, witness)

    witness = ""
    for run in sys.runs:
        if len(run.obs) != sys.horizon:
            witness = f"run {_run_str(sys, run)} has {len(run.obs)} observations"
            break
        try:
            for o in run.obs:
                if not isinstance(o, Formula):
                    raise FormulaError(f"observation {o!r} is not an environment formula")
                sys.vocab.extension(o)
        except FormulaError as exc:
            witness = f"observation not in the environment language: {exc}"
            break
    report.add("BCS2", not witness, witness)

    witness = ""
    menu = sys.menu or tuple(dict.fromkeys(o for r in sys.runs for o in r.obs))
    for run in sys.runs:
        for m in range(sys.horizon + 1):
            if m == 0:
                wrong = [o for o in menu if model_check(sys, (run, 0), Learn(o))]
                if wrong:
                    witness = f"learn({wrong[0]}) true at time 0"
                    break
            else:
                if not model_check(sys, (run, m), Learn(run.obs[m - 1])):
                    witness = f"learn({run.obs[m-1]}) false right after observing it"
                    break
                wrong = [
                    o for o in menu if o != run.obs[m - 1] and model_check(sys, (run, m), Learn(o))
                ]
                if wrong:
                    witness = f"learn({wrong[0]}) true without being observed"
                    break
        if witness:
            break
    report.add("BCS3", not witness, witness)

    witness = ""
    for run in sys.runs:
        for m in range(1, sys.horizon + 1):
            if run.envs[m] not in sys.vocab.extension(run.obs[m - 1]):
                witness = (
                    f"observation {run.obs[m-1]} false at time {m} in run {_run_str(sys, run)}"
                )
                break
        if witness:
            break
    report.add("BCS4", not witness, witness)

    witness = _check_conditioning(sys, budget)
    report.add("BCS5", not witness, witness)
    return report


def _check_conditioning(sys: System, budget: int) -> str:
    """The per-point measures must be exactly the prior conditioned on the
    local state; checked over subset pairs within budget."""
    if sys.point_measures:
        for s_a, override in sys.point_measures.items():
            conditioned = ConditionedMeasure(sys.points_with_local_state(s_a), sys.prior)
            pts = conditioned.carrier
            if tuple(override.carrier) != pts:
                return f"carrier mismatch at {_state_str(s_a)}"
            n = len(pts)
            pairs = itertools.product(range(1 << min(n, 7)), repeat=2)
            count = 0
            for mask_a, mask_b in pairs:
                count += 1
                if count > budget:
                    break
                a = frozenset(pts[i] for i in range(n) if mask_a >> i & 1)
                b = frozenset(pts[i] for i in range(n) if mask_b >> i & 1)
                if override.compare(a, b) != conditioned.compare(a, b):
                    return (
                        f"measure at {_state_str(s_a)} is not the conditioned prior "
                        f"(masks {mask_a:#x}, {mask_b:#x})"
                    )
    base = unwrap(sys.prior)
    if len(base.carrier) <= 6 and not is_qualitative(base, budget=budget):
        return "prior is not qualitative"
    if len(base.carrier) <= 10 and not check_monotonicity(base, budget=budget):
        return "prior violates monotonicity under union"
    return ""


def _run_str(sys: System, run: Run) -> str:
    envs = ",".join(sys.vocab.world_str(w) for w in run.envs)
    obs = ",".join(str(o) for o in run.obs)
    return f"[{envs} | {obs}]"
