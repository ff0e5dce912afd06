from __future__ import annotations

import pytest

from anonset.ledger import (
    DEPOSIT,
    WITHDRAWAL,
    BlockPosition,
    PoolConfig,
    PoolEvent,
    Transfer,
)


def addr(tag: str) -> str:
    """Deterministic canonical address from a short tag."""
    digest = tag.encode().hex()
    return "0x" + (digest * 40)[:40]


def deposit(pool_id: str, actor: str, height: int, tx: int = 0,
            sender: str | None = None) -> PoolEvent:
    return PoolEvent(pool_id=pool_id, kind=DEPOSIT,
                     block=BlockPosition(height, tx),
                     actor=actor, tx_sender=sender or actor)


def withdrawal(pool_id: str, actor: str, height: int, tx: int = 0,
               sender: str | None = None, relayer: str | None = None) -> PoolEvent:
    return PoolEvent(pool_id=pool_id, kind=WITHDRAWAL,
                     block=BlockPosition(height, tx),
                     actor=actor, tx_sender=relayer or sender or actor,
                     relayer=relayer)


def transfer(sender: str, recipient: str, amount: int, height: int,
             tx: int = 0, coin: str = "ETH") -> Transfer:
    return Transfer(block=BlockPosition(height, tx), sender=sender,
                    recipient=recipient, amount=amount, coin=coin)


D1, D2, W1 = addr("d1"), addr("d2"), addr("w1")


@pytest.fixture
def p100() -> PoolConfig:
    return PoolConfig(pool_id="P100", coin="ETH", denomination=100, am_weight=400)


@pytest.fixture
def p100_events() -> list[PoolEvent]:
    # d1 deposits once, d2 twice, w1 withdraws once
    return [
        deposit("P100", D1, 10),
        deposit("P100", D2, 11),
        deposit("P100", D2, 12),
        withdrawal("P100", W1, 20),
    ]
