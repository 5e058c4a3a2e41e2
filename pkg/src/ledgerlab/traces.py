"""Execution-trace prefixes, the prefix ultrametric, and safety monitors.

Traces are infinite in principle; here they are represented by finite
prefixes with an explicit observed length.  Distances are therefore either
exact (a difference was observed) or an upper bound 2^-n where n is the
shared observed length — never a silently truncated "exact" value.
"""
from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, List, Optional, Sequence, Tuple

from .core import CheckResult, Slot, Tx, UtxoSet, step_ledger, Rejection
from .graphs import PartialSieveHom, SimpleGraph, UnsupportedEnumerationError


@dataclass(frozen=True)
class TracePrefix:
    """Finite head of an execution trace, optionally with its lift.

    ``annotations`` holds one (environment, input) label per step, so its
    length is one less than the number of states.  ``truncated`` marks a
    prefix cut short by generator exhaustion.
    """

    states: Tuple
    annotations: Optional[Tuple] = None
    truncated: bool = False

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(self.states))
        if not self.states:
            raise ValueError("a trace prefix has at least one state")
        if self.annotations is not None:
            ann = tuple(tuple(a) for a in self.annotations)
            if len(ann) != len(self.states) - 1:
                raise ValueError("annotations must have one entry per step")
            object.__setattr__(self, "annotations", ann)

    def __len__(self) -> int:
        return len(self.states)

    def head(self, n: int) -> "TracePrefix":
        """The prefix with the first ``n`` states (n >= 1)."""
        if not 1 <= n <= len(self.states):
            raise ValueError("head length out of range")
        ann = None if self.annotations is None else self.annotations[: n - 1]
        return TracePrefix(self.states[:n], ann)


@dataclass(frozen=True)
class UltraDistance:
    """Dyadic trace distance, exact or an upper bound.

    ``value`` is in {0} ∪ {2^-k}; when ``exact`` is False it is only an
    upper bound determined by the shared observed length.
    """

    exact: bool
    value: Fraction


def ultra_distance(a: TracePrefix, b: TracePrefix) -> UltraDistance:
    """Distance 2^-k at the first differing index k.

    If no difference is visible within the shared observed length n, the
    result is the bound 2^-n.  Identity of objects is the only case treated
    as exact zero, since distinct prefixes may extend differently.
    """
    if a is b:
        return UltraDistance(True, Fraction(0))
    n = min(len(a), len(b))
    for k in range(n):
        if a.states[k] != b.states[k]:
            return UltraDistance(True, Fraction(1, 2 ** k))
    return UltraDistance(False, Fraction(1, 2 ** n))


def floor_neg_log2(r: Fraction) -> int:
    """⌊-log2 r⌋ for 0 < r <= 1, computed in exact rational arithmetic."""
    r = Fraction(r)
    if r <= 0:
        raise ValueError("radius must be positive")
    if r > 1:
        return 0
    n = 0
    while Fraction(1, 2 ** (n + 1)) >= r:
        n += 1
    return n


@dataclass(frozen=True)
class UltrametricReport:
    triples_checked: int
    triples_skipped: int
    violations: Tuple


def check_ultrametric_axioms(samples: Sequence[TracePrefix]) -> UltrametricReport:
    """Verify the strong triangle inequality and the isosceles property.

    Every triple with three exactly-computable pairwise distances is
    checked; triples with an inexact distance are skipped and counted.
    """
    checked = 0
    skipped = 0
    violations = []
    m = len(samples)
    dist = {}
    for i in range(m):
        for j in range(i + 1, m):
            dist[i, j] = ultra_distance(samples[i], samples[j])
    for i in range(m):
        for j in range(i + 1, m):
            for k in range(j + 1, m):
                ds = [dist[i, j], dist[j, k], dist[i, k]]
                if not all(d.exact for d in ds):
                    skipped += 1
                    continue
                checked += 1
                vals = sorted(d.value for d in ds)
                if vals[2] > max(vals[0], vals[1]):
                    violations.append(("strong-triangle", (i, j, k)))
                elif vals[1] != vals[2]:
                    violations.append(("isosceles", (i, j, k)))
    # symmetry holds by construction; verified cheaply on one pair per triple
    return UltrametricReport(checked, skipped, tuple(violations))


@dataclass(frozen=True)
class BallReport:
    members: Tuple[TracePrefix, ...]
    too_short: Tuple[TracePrefix, ...]
    head_length: int


def ball_members(
    center: TracePrefix, radius, candidates: Sequence[TracePrefix]
) -> BallReport:
    """Candidates inside the open ball: those sharing the ⌊-log2 r⌋-head.

    Radii collapse to the dyadic grid.  Candidates too short to decide
    membership are excluded and reported.
    """
    n = floor_neg_log2(Fraction(radius))
    members = []
    too_short = []
    for cand in candidates:
        if len(cand) < n or len(center) < n:
            too_short.append(cand)
        elif cand.states[:n] == center.states[:n]:
            members.append(cand)
    return BallReport(tuple(members), tuple(too_short), n)


@dataclass(frozen=True)
class NonExpansionReport:
    pairs_checked: int
    pairs_skipped: int
    violations: Tuple


def map_trace(hom: PartialSieveHom, prefix: TracePrefix) -> TracePrefix:
    """Apply a graph homomorphism to each state of a prefix."""
    return TracePrefix(tuple(hom(s) for s in prefix.states))


def check_non_expanding(
    hom: PartialSieveHom,
    trace_pairs: Sequence[Tuple[TracePrefix, TracePrefix]],
) -> NonExpansionReport:
    """Check d(f(a), f(b)) <= d(a, b) on pairs with exact source distance.

    Pairs containing a state outside the homomorphism domain are skipped
    and reported; on traces reachable from initial vertices this cannot
    happen because the domain is a sieve.
    """
    checked = 0
    skipped = 0
    violations = []
    for idx, (a, b) in enumerate(trace_pairs):
        if any(not hom.defined_at(s) for s in a.states + b.states):
            skipped += 1
            continue
        d_src = ultra_distance(a, b)
        d_img = ultra_distance(map_trace(hom, a), map_trace(hom, b))
        if not (d_src.exact and d_img.exact):
            # the image can only differ where the sources differ, so an
            # inexact image distance is already below the source bound
            skipped += 1
            continue
        checked += 1
        if d_img.value > d_src.value:
            violations.append(idx)
    return NonExpansionReport(checked, skipped, tuple(violations))


# --- safety monitors --------------------------------------------------------

@dataclass(frozen=True)
class SafetyMonitor:
    """A safety property given as a monotone bad-prefix recognizer.

    ``bad_prefix`` must be irremediable: once true on a prefix it stays
    true on every extension.  Monotonicity is checked by property tests at
    registration, not assumed.
    """

    name: str
    bad_prefix: Callable[[TracePrefix], bool]


def monitor_trace(monitor: SafetyMonitor, prefix: TracePrefix) -> Optional[int]:
    """Smallest index n whose (n+1)-state head is bad, or None if clean."""
    for n in range(len(prefix)):
        if monitor.bad_prefix(prefix.head(n + 1)):
            return n
    return None


def check_monitor_monotone(
    monitor: SafetyMonitor, samples: Iterable[TracePrefix]
) -> bool:
    """Spot-check irremediability: bad heads never become clean again."""
    for prefix in samples:
        bad = False
        for n in range(len(prefix)):
            now = monitor.bad_prefix(prefix.head(n + 1))
            if bad and not now:
                return False
            bad = bad or now
    return True


# --- validity and generation ------------------------------------------------

def validate_trace_prefix(
    prefix: TracePrefix,
    initial_utxos: Iterable[UtxoSet],
    initial_slots: Iterable[Slot],
    steps: Optional[Sequence[Tuple[Slot, Tx]]] = None,
    additional_checks=None,
) -> CheckResult:
    """Re-validate a ledger trace prefix against its lift.

    Checks: the first state and slot are valid initial ones, every step is
    a valid ledger transition landing on the recorded state, and the slots
    never decrease.
    """
    if steps is None:
        steps = prefix.annotations or ()
    if len(steps) != len(prefix) - 1:
        raise ValueError("need one (slot, tx) pair per step")
    if prefix.states[0] not in set(initial_utxos):
        return CheckResult(False, "not-initial-state")
    if steps and steps[0][0] not in set(initial_slots):
        return CheckResult(False, "not-initial-slot")
    prev_slot = None
    for k, (slot, tx) in enumerate(steps):
        if prev_slot is not None and slot < prev_slot:
            return CheckResult(False, "slots-decreasing")
        prev_slot = slot
        outcome = step_ledger(slot, prefix.states[k], tx, additional_checks)
        if isinstance(outcome, Rejection):
            return CheckResult(False, "step-%d-%s" % (k, outcome.reason))
        if outcome.after != prefix.states[k + 1]:
            return CheckResult(False, "state-mismatch-at-%d" % (k + 1,))
    return CheckResult(True)


def generate_valid_traces(
    initial_utxos: Sequence[UtxoSet],
    initial_slots: Sequence[Slot],
    propose: Callable[[random.Random, Slot, UtxoSet], Optional[Tx]],
    depth: int,
    count: int,
    seed: int,
    additional_checks=None,
    max_retries: int = 12,
) -> List[TracePrefix]:
    """Sample valid ledger trace prefixes, deterministically from a seed.

    ``propose`` suggests a candidate transaction for the current state;
    rejected or failed proposals are retried, and if no valid transaction
    is found the shorter prefix is returned with its ``truncated`` flag.
    """
    if depth < 1:
        raise ValueError("depth must be at least 1")
    rng = random.Random(seed)
    traces = []
    for _ in range(count):
        utxo = initial_utxos[rng.randrange(len(initial_utxos))]
        slot = initial_slots[rng.randrange(len(initial_slots))]
        states = [utxo]
        annotations = []
        truncated = False
        while len(states) < depth:
            placed = False
            for _attempt in range(max_retries):
                # the first step must use a valid initial slot
                advance = 0 if not annotations else rng.choice((0, 0, 0, 1, 2))
                step_slot = slot + advance
                tx = propose(rng, step_slot, states[-1])
                if tx is None:
                    continue
                outcome = step_ledger(step_slot, states[-1], tx, additional_checks)
                if isinstance(outcome, Rejection):
                    continue
                states.append(outcome.after)
                annotations.append((step_slot, tx))
                slot = step_slot
                placed = True
                break
            if not placed:
                truncated = True
                break
        traces.append(TracePrefix(tuple(states), tuple(annotations), truncated))
    return traces


# --- truncated lifts --------------------------------------------------------

def has_truncated_lift(
    target_prefix: TracePrefix, hom: PartialSieveHom, n: int
) -> Tuple[bool, Optional[Tuple]]:
    """Search for a source path of n+1 states mapping onto the target head.

    The source graph must be explicit and finite; the witness, when found,
    is one lifting path starting at an initial vertex.
    """
    if len(target_prefix) < n + 1:
        raise ValueError("target prefix must have at least n+1 states")
    if not isinstance(hom.source, SimpleGraph):
        raise UnsupportedEnumerationError("lift search needs an explicit source")
    goal = target_prefix.states[: n + 1]

    def extend(path):
        pos = len(path)
        if pos == n + 1:
            return path
        candidates = (
            hom.source.initial if pos == 0 else hom.source.successors(path[-1])
        )
        for v in candidates:
            if hom.defined_at(v) and hom(v) == goal[pos]:
                found = extend(path + (v,))
                if found is not None:
                    return found
        return None

    witness = extend(())
    return (witness is not None), witness
