"""Seeded generators for desk-scale ledger scenarios.

All randomness flows through an explicit ``random.Random`` instance, so a
fixed seed reproduces every scenario, trace, and file byte-for-byte.
"""
from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Callable, List, Optional, Tuple

from .core import Output, Tx, TxInput, UtxoSet, mk_outs

COIN = b"coin"

#: wide default validity window; keeps permuted replays slot-compatible
WIDE_INTERVAL = (0, 2 ** 20)


def _random_output(rng: random.Random, token: Optional[bytes] = None,
                   token_qty: int = 0) -> Output:
    value = {COIN: rng.randint(1, 99)}
    if token is not None and token_qty > 0:
        value[token] = token_qty
    return Output(
        address=rng.randbytes(4),
        value=value,
        datum=rng.randbytes(4),
    )


def make_genesis(
    rng: random.Random,
    n_outputs: int = 4,
    token: Optional[bytes] = None,
    token_present: bool = False,
) -> Tuple[List[Tx], UtxoSet]:
    """Inputless genesis transactions and the well-founded state they found."""
    txs = []
    utxo = UtxoSet()
    for k in range(max(1, (n_outputs + 1) // 2)):
        remaining = n_outputs - 2 * k
        outs = []
        for j in range(min(2, max(1, remaining))):
            with_token = token_present and k == 0 and j == 0
            outs.append(_random_output(rng, token, 1 if with_token else 0))
        tx = Tx(
            inputs=frozenset(),
            outputs=tuple(outs),
            validity_interval=WIDE_INTERVAL,
            additional_data=rng.randbytes(4),
        )
        txs.append(tx)
        utxo = utxo.union(mk_outs(tx))
    return txs, utxo


def make_proposer(
    token: Optional[bytes] = None,
    max_spend: int = 3,
    max_create: int = 3,
    interval: Tuple[int, int] = WIDE_INTERVAL,
) -> Callable[[random.Random, int, UtxoSet], Optional[Tx]]:
    """Build a random-transaction proposer for generate_valid_traces.

    When ``token`` is set, the proposer keeps its total quantity at most 1,
    occasionally minting, moving, or burning it.
    """

    def propose(rng: random.Random, slot: int, utxo: UtxoSet) -> Optional[Tx]:
        if len(utxo) == 0:
            return None
        refs = sorted(utxo.keys())
        n_spend = rng.randint(1, min(max_spend, len(refs)))
        spent = rng.sample(refs, n_spend)
        inputs = frozenset(TxInput(r, utxo.get(r)) for r in spent)

        n_create = rng.randint(1, max_create)
        token_slot = -1
        if token is not None:
            total = sum(out.quantity(token) for _, out in utxo.items())
            held = sum(utxo.get(r).quantity(token) for r in spent)
            free = total - held
            if free == 0:
                if held:
                    # token is being spent: usually move it, sometimes burn
                    if rng.random() < 0.8:
                        token_slot = rng.randrange(n_create)
                elif rng.random() < 0.3:
                    token_slot = rng.randrange(n_create)
        outputs = tuple(
            _random_output(rng, token, 1 if j == token_slot else 0)
            for j in range(n_create)
        )
        return Tx(
            inputs=inputs,
            outputs=outputs,
            validity_interval=interval,
            additional_data=rng.randbytes(4),
        )

    return propose


@dataclass(frozen=True)
class Scenario:
    """A reproducible starting point: genesis txs, initial state, and slot."""

    genesis_txs: Tuple[Tx, ...]
    initial_utxo: UtxoSet
    initial_slot: int


def make_scenario(
    seed: int,
    n_outputs: int = 4,
    token: Optional[bytes] = None,
    token_present: bool = False,
) -> Scenario:
    rng = random.Random(seed)
    txs, utxo = make_genesis(rng, n_outputs, token, token_present)
    return Scenario(tuple(txs), utxo, initial_slot=rng.randint(0, 8))
