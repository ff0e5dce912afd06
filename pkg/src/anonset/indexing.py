"""Queryable indexes over transfers and pool events.

The index is built once (single writer) and then only read, so a built
:class:`LedgerIndex` is safe to share between concurrent analyses.

Two families of queries live here:

* distance-``n`` depositor/withdrawer extensions, which walk native-coin
  transfers one hop at a time away from the pool, and
* most-recent-transfer covers, which attribute each deposit (withdrawal)
  to the latest incoming (earliest outgoing) transfers that add up to the
  pool denomination.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Iterable, Mapping, Sequence

from .errors import InputError, IngestError
from .ledger import (
    DEPOSIT,
    WITHDRAWAL,
    Address,
    Amount,
    PoolConfig,
    PoolEvent,
    Transfer,
    deposit_actors,
    withdrawal_actors,
)

USER_ACCOUNT = "user-account"
KNOWN_LABELS = frozenset({"contract", "exchange", "relayer", "malicious", USER_ACCOUNT})


class LabelBook:
    """Address labels; anything unlabeled defaults to ``user-account``."""

    def __init__(self, labels: Mapping[Address, Iterable[str]] | None = None):
        self._labels: dict[Address, frozenset[str]] = {}
        if labels:
            for addr, tags in labels.items():
                tagset = frozenset(tags)
                unknown = tagset - KNOWN_LABELS
                if unknown:
                    raise InputError(f"unknown labels for {addr}: {sorted(unknown)}")
                if tagset:
                    self._labels[addr] = tagset

    def labels_for(self, address: Address) -> frozenset[str]:
        return self._labels.get(address, frozenset({USER_ACCOUNT}))

    def is_relayer(self, address: Address) -> bool:
        return "relayer" in self._labels.get(address, frozenset())

    def is_user_account(self, address: Address) -> bool:
        """An externally owned account that is not a labeled exchange."""
        return not ({"contract", "exchange"} & self._labels.get(address, frozenset()))

    def addresses_with(self, label: str) -> frozenset[Address]:
        return frozenset(a for a, tags in self._labels.items() if label in tags)


@dataclass(frozen=True)
class TransferCover:
    """The most-recent-transfer cover of one deposit or withdrawal.

    ``claims`` lists the covering transfers in chronological order with
    values clipped so that claimed value plus ``shortfall`` equals the
    pool denomination exactly.
    """

    anchor: PoolEvent
    claims: tuple[Transfer, ...]
    shortfall: Amount

    @property
    def claimed_value(self) -> Amount:
        return sum(t.amount for t in self.claims)


def _transfer_key(t: Transfer):
    return (t.block, t.sender, t.recipient, t.amount, t.coin, t.internal)


def _event_key(e: PoolEvent):
    return (e.block, e.pool_id, e.kind, e.actor, e.tx_sender, e.relayer or "")


class LedgerIndex:
    """Immutable per-address / per-pool views over a transfer universe."""

    def __init__(self, transfers: Sequence[Transfer],
                 token_transfers: Sequence[Transfer],
                 events: Sequence[PoolEvent],
                 labels: LabelBook):
        self.labels = labels
        self.native_transfers = self._dedup_sort(transfers, "transfers")
        self.token_transfers = self._dedup_sort(token_transfers, "token_transfers")
        self.pool_events = self._dedup_sort_events(events)

        self._incoming: dict[Address, list[Transfer]] = {}
        self._outgoing: dict[Address, list[Transfer]] = {}
        for t in self.native_transfers:
            self._incoming.setdefault(t.recipient, []).append(t)
            self._outgoing.setdefault(t.sender, []).append(t)

        self._incoming_tok: dict[Address, list[Transfer]] = {}
        self._outgoing_tok: dict[Address, list[Transfer]] = {}
        for t in self.token_transfers:
            self._incoming_tok.setdefault(t.recipient, []).append(t)
            self._outgoing_tok.setdefault(t.sender, []).append(t)

        self._by_pool: dict[str, list[PoolEvent]] = {}
        for e in self.pool_events:
            self._by_pool.setdefault(e.pool_id, []).append(e)

    @staticmethod
    def _dedup_sort(records: Sequence[Transfer], kind: str) -> tuple[Transfer, ...]:
        seen: set = set()
        for pos, r in enumerate(records):
            key = _transfer_key(r)
            if key in seen:
                raise IngestError(f"duplicate record at position {pos}: {r}", file=kind)
            seen.add(key)
        return tuple(sorted(records, key=_transfer_key))

    @staticmethod
    def _dedup_sort_events(records: Sequence[PoolEvent]) -> tuple[PoolEvent, ...]:
        seen: set = set()
        for pos, r in enumerate(records):
            key = _event_key(r)
            if key in seen:
                raise IngestError(f"duplicate record at position {pos}: {r}",
                                  file="pool_events")
            seen.add(key)
        return tuple(sorted(records, key=_event_key))

    # -- plain accessors ----------------------------------------------------

    def incoming_native(self, address: Address) -> Sequence[Transfer]:
        return self._incoming.get(address, [])

    def outgoing_native(self, address: Address) -> Sequence[Transfer]:
        return self._outgoing.get(address, [])

    def incoming_tokens(self, address: Address) -> Sequence[Transfer]:
        return self._incoming_tok.get(address, [])

    def outgoing_tokens(self, address: Address) -> Sequence[Transfer]:
        return self._outgoing_tok.get(address, [])

    def events_for(self, pool_id: str) -> Sequence[PoolEvent]:
        return self._by_pool.get(pool_id, [])

    def pool_ids(self) -> tuple[str, ...]:
        return tuple(sorted(self._by_pool))

    # -- distance extensions --------------------------------------------------

    def depositors_at_distance(self, pool: PoolConfig, n: int, t: int) -> frozenset[Address]:
        """Addresses ``n`` native-coin hops upstream of the pool's deposits.

        Distance 1 is the deposit-actor set itself; each further hop picks
        up the senders of native transfers (up to the cut) into the
        previous frontier.
        """
        if n < 1:
            raise InputError("distance must be at least 1")
        frontier = deposit_actors(self.events_for(pool.pool_id), t)
        for _ in range(n - 1):
            frontier = frozenset(
                tr.sender
                for member in frontier
                for tr in self._incoming.get(member, [])
                if tr.block.height <= t)
        return frontier

    def withdrawers_at_distance(self, pool: PoolConfig, n: int, t: int) -> frozenset[Address]:
        """Mirror of :meth:`depositors_at_distance` downstream of withdrawals."""
        if n < 1:
            raise InputError("distance must be at least 1")
        frontier = withdrawal_actors(self.events_for(pool.pool_id), t)
        for _ in range(n - 1):
            frontier = frozenset(
                tr.recipient
                for member in frontier
                for tr in self._outgoing.get(member, [])
                if tr.block.height <= t)
        return frontier

    # -- most-recent-transfer covers ------------------------------------------

    def source_transfers(self, depositor: Address, pool: PoolConfig,
                         t: int) -> tuple[TransferCover, ...]:
        """Attribute each deposit to the depositor's latest incoming value.

        For every deposit (oldest first) the scan walks the unclaimed
        incoming native transfers backwards from the deposit and claims
        the minimal most-recent set whose value reaches the denomination.
        Claimed values are then attributed chronologically, clipping the
        latest claims so each cover sums to exactly the denomination; a
        transfer is claimable once across all of the address's deposits.
        Insufficient incoming value is reported as a shortfall, not an
        error.
        """
        deposits = [e for e in self.events_for(pool.pool_id)
                    if e.kind == DEPOSIT and e.actor == depositor
                    and e.block.height <= t]
        if not deposits:
            raise InputError(
                f"{depositor} has no deposit in pool {pool.pool_id} before the cut")
        incoming = [tr for tr in self._incoming.get(depositor, []) if tr.amount > 0]
        claimed: set[int] = set()
        covers = []
        for dep in deposits:
            chosen: list[int] = []
            acc = 0
            for i in range(len(incoming) - 1, -1, -1):
                if i in claimed or incoming[i].block >= dep.block:
                    continue
                chosen.append(i)
                acc += incoming[i].amount
                if acc >= pool.denomination:
                    break
            claimed.update(chosen)
            claims = _attribute(
                sorted((incoming[i] for i in chosen), key=_transfer_key),
                pool.denomination)
            covers.append(TransferCover(
                anchor=dep, claims=claims,
                shortfall=max(pool.denomination - acc, 0)))
        return tuple(covers)

    def sink_transfers(self, withdrawer: Address, pool: PoolConfig,
                       t: int) -> tuple[TransferCover, ...]:
        """Forward-scan mirror of :meth:`source_transfers`: each withdrawal
        claims the earliest unclaimed outgoing value after it."""
        withdrawals = [e for e in self.events_for(pool.pool_id)
                       if e.kind == WITHDRAWAL and e.actor == withdrawer
                       and e.block.height <= t]
        if not withdrawals:
            raise InputError(
                f"{withdrawer} has no withdrawal in pool {pool.pool_id} before the cut")
        outgoing = [tr for tr in self._outgoing.get(withdrawer, [])
                    if tr.amount > 0 and tr.block.height <= t]
        claimed: set[int] = set()
        covers = []
        for wd in withdrawals:
            chosen: list[int] = []
            acc = 0
            for i, tr in enumerate(outgoing):
                if i in claimed or tr.block <= wd.block:
                    continue
                chosen.append(i)
                acc += tr.amount
                if acc >= pool.denomination:
                    break
            claimed.update(chosen)
            claims = _attribute(
                sorted((outgoing[i] for i in chosen), key=_transfer_key),
                pool.denomination)
            covers.append(TransferCover(
                anchor=wd, claims=claims,
                shortfall=max(pool.denomination - acc, 0)))
        return tuple(covers)


def _attribute(claims: Sequence[Transfer], need: Amount) -> tuple[Transfer, ...]:
    """Clip claim values chronologically so they sum to min(need, total)."""
    out = []
    remaining = need
    for tr in claims:
        take = min(tr.amount, remaining)
        out.append(tr if take == tr.amount else replace(tr, amount=take))
        remaining -= take
    return tuple(out)


def build_index(transfers: Sequence[Transfer],
                token_transfers: Sequence[Transfer],
                events: Sequence[PoolEvent],
                labels: LabelBook | Mapping[Address, Iterable[str]] | None = None) -> LedgerIndex:
    """Build the immutable index; duplicate records are rejected.

    Input order is irrelevant: any permutation of the same records yields
    an index answering every query identically.
    """
    if not isinstance(labels, LabelBook):
        labels = LabelBook(labels)
    return LedgerIndex(transfers, token_transfers, events, labels)
