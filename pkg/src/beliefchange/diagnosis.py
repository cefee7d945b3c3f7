"""Circuit diagnosis as a belief change system.

The environment state pairs a persistent set of faulty gates with current
line values; states are admissible when every healthy gate's output equals
its function of the inputs (faulty gates are unconstrained, which subsumes
stuck-at behaviour).  The agent drives test inputs, observes line values,
and ranks runs by how many gates they fault: fewer faults, more plausible.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Tuple

from .formulas import Atom, Formula, Not, Vocabulary, conj
from .plausibility import RankedMeasure
from .reports import Report
from .revision import validate_rev, _default_obs_sequences
from .systems import LocalState, Run, System, bel

GATE_KINDS = ("AND", "OR", "NOT", "XOR")


class DiagnosisError(Exception):
    pass


@dataclass(frozen=True)
class Gate:
    gid: str
    kind: str
    inputs: Tuple[str, ...]
    output: str

    def __post_init__(self):
        if self.kind not in GATE_KINDS:
            raise DiagnosisError(f"unknown gate kind {self.kind!r}")
        if self.kind == "NOT" and len(self.inputs) != 1:
            raise DiagnosisError("NOT gates take exactly one input")
        if self.kind != "NOT" and len(self.inputs) < 2:
            raise DiagnosisError(f"{self.kind} gates need at least two inputs")

    def evaluate(self, values: Mapping[str, bool]) -> bool:
        bits = [values[i] for i in self.inputs]
        if self.kind == "AND":
            return all(bits)
        if self.kind == "OR":
            return any(bits)
        if self.kind == "NOT":
            return not bits[0]
        return sum(bits) % 2 == 1  # XOR as parity


class Circuit:
    """An acyclic gate network with named lines.

    The vocabulary has one fault proposition per gate (``f_<gate>``) and
    one value proposition per line (``h_<line>``); a world is a full
    assignment to both.
    """

    def __init__(self, gates: Sequence[Gate], observed: Optional[Sequence[str]] = None):
        self.gates = tuple(gates)
        if not self.gates:
            raise DiagnosisError("a circuit needs at least one gate")
        driven: Dict[str, Gate] = {}
        for g in self.gates:
            if g.output in driven:
                raise DiagnosisError(f"line {g.output} driven by more than one gate")
            driven[g.output] = g
        lines: List[str] = []
        for g in self.gates:
            for line in g.inputs + (g.output,):
                if line not in lines:
                    lines.append(line)
        self.lines = tuple(lines)
        self.driven = driven
        self.input_lines = tuple(l for l in lines if l not in driven)
        consumed = {i for g in self.gates for i in g.inputs}
        self.output_lines = tuple(l for l in lines if l in driven and l not in consumed)
        self._check_acyclic()
        if observed is None:
            observed = self.input_lines + self.output_lines
        unknown = [l for l in observed if l not in self.lines]
        if unknown:
            raise DiagnosisError(f"observed line {unknown[0]!r} does not exist")
        self.observed = tuple(observed)
        self.vocab = Vocabulary(
            [f"f_{g.gid}" for g in self.gates] + [f"h_{l}" for l in self.lines]
        )

    def _check_acyclic(self):
        depth: Dict[str, int] = {l: 0 for l in self.lines if l not in self.driven}
        remaining = list(self.gates)
        while remaining:
            progressed = [
                g for g in remaining if all(i in depth for i in g.inputs)
            ]
            if not progressed:
                raise DiagnosisError("circuit contains a cycle")
            for g in progressed:
                depth[g.output] = 1 + max(depth[i] for i in g.inputs)
            remaining = [g for g in remaining if g not in progressed]

    # -- state helpers -------------------------------------------------------

    def fault_set(self, world: int) -> FrozenSet[str]:
        return frozenset(
            g.gid for g in self.gates if self.vocab.truth(world, f"f_{g.gid}")
        )

    def line_value(self, world: int, line: str) -> bool:
        return self.vocab.truth(world, f"h_{line}")

    def io_formula(self, world: int) -> Formula:
        """Conjunction of observed line literals, in declaration order."""
        literals = []
        for line in self.observed:
            atom = Atom(f"h_{line}")
            literals.append(atom if self.line_value(world, line) else Not(atom))
        return conj(literals)

    def all_fault_sets(self) -> List[FrozenSet[str]]:
        out = []
        ids = [g.gid for g in self.gates]
        for mask in range(1 << len(ids)):
            out.append(frozenset(g for i, g in enumerate(ids) if mask >> i & 1))
        return out


def consistent_states(circuit: Circuit) -> List[int]:
    """All worlds whose healthy gates compute correctly; persistent faults
    are a run-level constraint, not a state-level one."""
    states = []
    vocab = circuit.vocab
    for world in vocab.worlds():
        values = {l: circuit.line_value(world, l) for l in circuit.lines}
        faults = circuit.fault_set(world)
        ok = all(
            g.gid in faults or values[g.output] == g.evaluate(values)
            for g in circuit.gates
        )
        if ok:
            states.append(world)
    return states


def build_diag_system(circuit: Circuit, tests: Sequence[Mapping[str, bool]]) -> System:
    """Runs: pick a fault set, keep it forever, and at each step show line
    values consistent with that fault set and the step's test inputs; the
    agent observes the designated lines.  The prior ranks each run by the
    size of its fault set."""
    if not tests:
        raise DiagnosisError("at least one test vector is required")
    for t in tests:
        unknown = [l for l in t if l not in circuit.input_lines]
        if unknown:
            raise DiagnosisError(f"test sets non-input line {unknown[0]!r}")
    universe = consistent_states(circuit)
    by_fault: Dict[FrozenSet[str], List[int]] = {}
    for world in universe:
        by_fault.setdefault(circuit.fault_set(world), []).append(world)

    def matches(world: int, test: Mapping[str, bool]) -> bool:
        return all(circuit.line_value(world, l) == bool(v) for l, v in test.items())

    horizon = len(tests)
    runs: List[Run] = []
    for fault, worlds in sorted(by_fault.items(), key=lambda kv: sorted(kv[0])):
        steps = [worlds] + [[s for s in worlds if matches(s, t)] for t in tests]
        for envs in itertools.product(*steps):
            obs = tuple(circuit.io_formula(envs[m]) for m in range(1, horizon + 1))
            runs.append(Run(tuple(envs), obs))
    prior = RankedMeasure(
        runs, {r: len(circuit.fault_set(r.envs[0])) for r in runs}
    )
    menu = tuple(dict.fromkeys(o for r in runs for o in r.obs))
    return System(
        vocab=circuit.vocab,
        runs=tuple(runs),
        prior=prior,
        horizon=horizon,
        universe=frozenset(universe),
        menu=menu,
    )


def diag(sys: System, circuit: Circuit, s_a: LocalState) -> FrozenSet[FrozenSet[str]]:
    """Fault sets not ruled out by current beliefs: those whose complete
    fault description is not disbelieved."""
    return frozenset(circuit.fault_set(w) for w in bel(sys, tuple(s_a)))


def fault_consistent_with(circuit: Circuit, universe: Iterable[int], fault: FrozenSet[str], observation: Formula) -> bool:
    ext = circuit.vocab.extension(observation)
    return any(w in ext and circuit.fault_set(w) == fault for w in universe)


def check_prop_diag(sys: System, circuit: Circuit) -> Report:
    """Belief dynamics of diagnosis, step by step along every run prefix.

    A compatible observation filters the current diagnosis set; an
    incompatible (surprising) one replaces it with all minimal-cardinality
    fault sets consistent with the whole observation history.  Surprises
    discard every previous explanation and strictly grow the fault
    cardinality.
    """
    report = Report("diagnosis")
    universe = sorted(sys.universe)
    fault_sets = circuit.all_fault_sets()

    filter_bad = ""
    surprise_bad = ""
    disjoint_bad = ""
    cardinality_bad = ""
    seen = set()
    for run in sys.runs:
        for m in range(sys.horizon):
            prefix = run.local_state(m + 1)
            if prefix in seen:
                continue
            seen.add(prefix)
            before = diag(sys, circuit, prefix[:-1])
            after = diag(sys, circuit, prefix)
            new_obs = prefix[-1]
            surviving = frozenset(
                f for f in before if fault_consistent_with(circuit, universe, f, new_obs)
            )
            if surviving:
                if after != surviving and not filter_bad:
                    filter_bad = f"at {_prefix_str(prefix)}: filtering mismatch"
            else:
                consistent = [
                    f
                    for f in fault_sets
                    if all(
                        fault_consistent_with(circuit, universe, f, o) for o in prefix
                    )
                ]
                least = min((len(f) for f in consistent), default=None)
                expected = frozenset(f for f in consistent if len(f) == least)
                if after != expected and not surprise_bad:
                    surprise_bad = f"at {_prefix_str(prefix)}: surprise mismatch"
                if before & after and not disjoint_bad:
                    disjoint_bad = f"at {_prefix_str(prefix)}: explanations survived a surprise"
            if before and after and not (before & after):
                if min(len(f) for f in after) <= min(len(f) for f in before):
                    if not cardinality_bad:
                        cardinality_bad = (
                            f"at {_prefix_str(prefix)}: fault cardinality did not grow"
                        )
    report.add("FILTER", not filter_bad, filter_bad)
    report.add("SURPRISE", not surprise_bad, surprise_bad)
    report.add("DISJOINT", not disjoint_bad, disjoint_bad)
    report.add("CARDINALITY", not cardinality_bad, cardinality_bad)

    persistence_bad = ""
    for run in sys.runs:
        fault0 = circuit.fault_set(run.envs[0])
        if any(circuit.fault_set(s) != fault0 for s in run.envs[1:]):
            persistence_bad = "a run changes its fault set over time"
            break
    report.add("PERSISTENCE", not persistence_bad, persistence_bad)
    return report


def _prefix_str(prefix: LocalState) -> str:
    return "<" + ", ".join(str(o) for o in prefix) + ">"


def revision_report(sys: System, circuit: Circuit) -> Report:
    """Revision-condition verdicts for the diagnosis system.

    Fault literals are injected as candidate observations: they can never
    actually be observed, which is exactly what separates the strong
    observation-neutrality condition (fails) from its observable-only
    weakening (holds).
    """
    fault_probes = [(Atom(f"f_{g.gid}"),) for g in circuit.gates]
    obs_sequences = _default_obs_sequences(sys, 1) + fault_probes
    return validate_rev(sys, obs_sequences=obs_sequences)


def fault_projection(sys: System, circuit: Circuit) -> System:
    """Report-level projection onto the fault vocabulary alone.

    Line values change over time, so the full system breaks the static-
    propositions condition; faults are persistent, so rewriting each
    observation as the fault formula it supports yields an equivalent
    system about faults that satisfies it.
    """
    fault_vocab = Vocabulary([f"f_{g.gid}" for g in circuit.gates])
    universe = sorted(sys.universe)

    def fault_world(fault: FrozenSet[str]) -> int:
        return fault_vocab.world_of({f"f_{g.gid}": g.gid in fault for g in circuit.gates})

    obs_cache: Dict[Formula, Formula] = {}

    def project_obs(observation: Formula) -> Formula:
        cached = obs_cache.get(observation)
        if cached is None:
            compatible = sorted(
                {
                    fault_world(circuit.fault_set(w))
                    for w in universe
                    if w in sys.vocab.extension(observation)
                }
            )
            from .formulas import formula_of_extension

            cached = formula_of_extension(frozenset(compatible), fault_vocab)
            obs_cache[observation] = cached
        return cached

    projected: Dict[Run, int] = {}
    for run in sys.runs:
        fault = circuit.fault_set(run.envs[0])
        new_run = Run(
            (fault_world(fault),) * (sys.horizon + 1),
            tuple(project_obs(o) for o in run.obs),
        )
        projected.setdefault(new_run, len(fault))
    runs = tuple(projected)
    prior = RankedMeasure(runs, {r: projected[r] for r in runs})
    menu = tuple(dict.fromkeys(o for r in runs for o in r.obs))
    return System(
        vocab=fault_vocab,
        runs=runs,
        prior=prior,
        horizon=sys.horizon,
        universe=fault_vocab.all_worlds(),
        menu=menu,
    )


# ---------------------------------------------------------------------------
# circuit text format


def parse_circuit(text: str) -> Tuple[Circuit, List[Dict[str, bool]]]:
    """Parse the line-oriented circuit description.

    Directives: ``gate <id> <KIND> <in...> -> <out>``, ``observe <line...>``
    (optional; defaults to input and output lines), and ``test <line>=<bit>
    ...`` one per test step.
    """
    gates: List[Gate] = []
    observed: Optional[List[str]] = None
    tests: List[Dict[str, bool]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        kind = parts[0]
        if kind == "gate":
            if len(parts) < 6 or parts[-2] != "->":
                raise DiagnosisError(f"line {lineno}: malformed gate directive")
            gates.append(Gate(parts[1], parts[2], tuple(parts[3:-2]), parts[-1]))
        elif kind == "observe":
            observed = parts[1:]
        elif kind == "test":
            assignment: Dict[str, bool] = {}
            for item in parts[1:]:
                name, _, bit = item.partition("=")
                if bit not in ("0", "1"):
                    raise DiagnosisError(f"line {lineno}: bad assignment {item!r}")
                assignment[name] = bit == "1"
            tests.append(assignment)
        else:
            raise DiagnosisError(f"line {lineno}: unknown directive {kind!r}")
    circuit = Circuit(gates, observed)
    for t in tests:
        missing = [l for l in circuit.input_lines if l not in t]
        if missing:
            raise DiagnosisError(f"test leaves input line {missing[0]!r} unset")
    return circuit, tests
