"""Structured contracts: a contract spec plus state/input projections.

A structured contract is a triple (spec, pi, kappa): pi partially projects
ledger states to contract states, kappa totally projects transactions to
contract inputs.  The contract is implemented correctly when every valid
ledger step from a projectable state lands on a projectable state and the
projected states are related by the contract's own step function.

The concrete ledger a contract lives on may carve out transactions via the
``additional_checks`` hook (the stand-in for on-chain permission scripts);
correctness is stated relative to that ledger.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Sequence, Tuple

from .core import CheckResult, LedgerStep, Tx, UtxoSet
from .graphs import PartialSieveHom, SimpleGraph
from .traces import TracePrefix


@dataclass(frozen=True)
class ContractSpec:
    """Small-step contract semantics with a trivial environment.

    ``step(state, input)`` returns the next state or None when the
    transition is not permitted; it must be deterministic and pure.
    ``is_initial`` recognizes the valid start states.
    """

    step: Callable
    is_initial: Callable


@dataclass(frozen=True)
class StructuredContract:
    name: str
    spec: ContractSpec
    pi_defined: Callable[[UtxoSet], bool]
    pi: Callable[[UtxoSet], object]
    kappa: Callable[[Tx], object]
    #: ledger-side policy hook carving out the transactions this contract
    #: permits; None means the unrestricted ledger
    additional_checks: Optional[Callable] = None


def check_step_correctness(
    sc: StructuredContract, step: LedgerStep
) -> CheckResult:
    """The executable proof obligation for one ledger step.

    Vacuously true when the source state is outside Def pi; otherwise the
    target must be projectable and the contract step must agree.
    """
    if not sc.pi_defined(step.before):
        return CheckResult(True, "vacuous")
    if not sc.pi_defined(step.after):
        return CheckResult(False, "to-state-unprojectable")
    expected = sc.spec.step(sc.pi(step.before), sc.kappa(step.tx))
    if expected is None or expected != sc.pi(step.after):
        return CheckResult(False, "contract-step-mismatch")
    return CheckResult(True)


@dataclass(frozen=True)
class ContractReport:
    steps_checked: int
    failures: Tuple


def check_contract_on_traces(
    sc: StructuredContract, traces: Sequence[TracePrefix]
) -> ContractReport:
    """Check step correctness and square commutation along whole traces.

    For every annotated step the two projection routes must agree:
    projecting the ledger vertex to its state and then to the contract
    state equals mapping to the contract vertex and projecting its state.
    """
    checked = 0
    failures = []
    for t_idx, prefix in enumerate(traces):
        if prefix.annotations is None:
            raise ValueError("contract checking needs lifted traces")
        for k, (slot, tx) in enumerate(prefix.annotations):
            before, after = prefix.states[k], prefix.states[k + 1]
            step = LedgerStep(slot, before, tx, after)
            checked += 1
            verdict = check_step_correctness(sc, step)
            if not verdict:
                failures.append((t_idx, k, verdict.reason))
                continue
            if sc.pi_defined(before):
                # commuting square at the ledger vertex (slot, before, tx):
                # project to the state component and map through pi, vs.
                # map to the contract vertex (pi u, kappa t) and project
                phi = lambda v: v[1]
                sigma = lambda v: (sc.pi(v[1]), sc.kappa(v[2]))
                psi = lambda w: w[0]
                vertex = (slot, before, tx)
                if sc.pi(phi(vertex)) != psi(sigma(vertex)):
                    failures.append((t_idx, k, "square-mismatch"))
    return ContractReport(checked, tuple(failures))


def induce_trace_map(
    sc: StructuredContract, ledger_trace: TracePrefix
) -> TracePrefix:
    """Pointwise projection of a ledger trace to a contract trace.

    Lift annotations are mapped through kappa with the trivial environment.
    """
    for k, state in enumerate(ledger_trace.states):
        if not sc.pi_defined(state):
            raise ValueError("state %d outside the projection domain" % k)
    states = tuple(sc.pi(u) for u in ledger_trace.states)
    annotations = None
    if ledger_trace.annotations is not None:
        annotations = tuple((None, sc.kappa(tx)) for _, tx in ledger_trace.annotations)
    return TracePrefix(states, annotations)


def build_contract_graphs(
    sc: StructuredContract,
    state_universe: Iterable,
    input_universe: Iterable,
) -> Tuple[SimpleGraph, SimpleGraph, PartialSieveHom]:
    """Explicit contract transition graph, its state projection, and the hom.

    Vertices of the first graph are (state, input) pairs on which the step
    function is defined; edges follow the step relation.  The second graph
    is its projection onto states.
    """
    states = list(state_universe)
    inputs = list(input_universe)
    vertices = frozenset(
        (s, i) for s in states for i in inputs if sc.spec.step(s, i) is not None
    )
    edges = frozenset(
        (v, w)
        for v in vertices
        for w in vertices
        if sc.spec.step(v[0], v[1]) == w[0]
    )
    initial = frozenset(v for v in vertices if sc.spec.is_initial(v[0]))
    gamma = SimpleGraph(vertices, edges, initial)

    proj_states = frozenset(s for s, _ in vertices)
    proj_edges = frozenset(
        (s, sc.spec.step(s, i))
        for s, i in vertices
        if sc.spec.step(s, i) in proj_states
    )
    proj_initial = frozenset(s for s in proj_states if sc.spec.is_initial(s))
    gamma_prime = SimpleGraph(proj_states, proj_edges, proj_initial)

    psi = PartialSieveHom(gamma, gamma_prime, vertices, lambda v: v[0])
    return gamma, gamma_prime, psi


# --- the NFT example --------------------------------------------------------

MINT = "mint"
BURN = "burn"
NOOP = "noop"


def _nft_quantity(utxo: UtxoSet, token: bytes) -> int:
    return sum(out.quantity(token) for _, out in utxo.items())


def nft_contract(token: bytes = b"NFT") -> StructuredContract:
    """Non-fungible token tracker: contract state is the total quantity.

    The total quantity of the token may never exceed 1.  The ledger-side
    policy hook enforces the same bound on both sides of each transition,
    which is what makes the projection a correct implementation.
    """

    def step(state, inp):
        if inp == MINT:
            return state + 1 if state == 0 else None
        if inp == BURN:
            return state - 1 if state >= 1 else None
        if inp == NOOP:
            return state
        return None

    def kappa(tx: Tx):
        created = sum(out.quantity(token) for out in tx.outputs)
        consumed = sum(i.output.quantity(token) for i in tx.inputs)
        delta = created - consumed
        if delta > 0:
            return MINT
        if delta < 0:
            return BURN
        return NOOP

    def policy(slot, utxo, tx):
        from .core import apply_tx

        return (
            _nft_quantity(utxo, token) <= 1
            and _nft_quantity(apply_tx(utxo, tx), token) <= 1
        )

    return StructuredContract(
        name="nft",
        spec=ContractSpec(step=step, is_initial=lambda s: s in (0, 1)),
        pi_defined=lambda u: True,
        pi=lambda u: _nft_quantity(u, token),
        kappa=kappa,
        additional_checks=policy,
    )


#: contracts available to the command-line registry, by name
CONTRACTS = {"nft": nft_contract}
