"""Linking heuristics and anonymity-set reduction.

Each heuristic inspects on-chain behavior, asserts same-owner address
pairs, and reports the pool's *simplified anonymity set*: the depositors
that still plausibly hold a balance once linked addresses are merged.

Every heuristic is a pure function over immutable inputs; per-pool
evaluations can run concurrently.

The simplified set is computed uniformly: merge balances along the link
pairs, keep the clusters whose merged balance is positive, and report
each such cluster once, by its lexicographically smallest *depositor*
member (a positive cluster always contains one, since a positive balance
requires more deposits than withdrawals somewhere in the cluster).  The
reduced set is therefore always a subset of the observed deposit-address
set, and merging more links can only shrink it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import InputError
from .indexing import LabelBook, LedgerIndex
from .ledger import (
    DEPOSIT,
    WITHDRAWAL,
    Address,
    LinkPair,
    PoolConfig,
    PoolEvent,
    connected_components,
    deposit_actors,
    events_for_pool,
    pool_state,
    withdrawal_actors,
)

H1 = "h1"
H2 = "h2"
H3 = "h3"
H4 = "h4"
H5 = "h5"


@dataclass(frozen=True)
class HeuristicResult:
    """Outcome of one heuristic on one pool at one cut."""

    heuristic: str
    pool_id: str
    as_of: int
    link_pairs: frozenset[LinkPair]
    anonymity_set: frozenset[Address]

    @property
    def size(self) -> int:
        return len(self.anonymity_set)


@dataclass(frozen=True)
class Cluster:
    """A maximal set of mutually linked addresses."""

    members: tuple[Address, ...]

    @property
    def size(self) -> int:
        return len(self.members)


def _reduced_set(pool: PoolConfig, events: Sequence[PoolEvent], t: int,
                 links: Iterable[LinkPair]) -> frozenset[Address]:
    """One representative depositor per positive-balance link cluster."""
    state = pool_state(pool, events, t)
    depositors = deposit_actors(events, t)
    members_linked: set[Address] = set()
    reduced: set[Address] = set()
    for component in connected_components(links):
        members_linked.update(component)
        balance = sum(state.entries.get(a, 0) for a in component)
        if balance > 0:
            reduced.add(min(component & depositors))
    for addr in depositors - members_linked:
        if state.entries.get(addr, 0) > 0:
            reduced.add(addr)
    return frozenset(reduced)


def h1_reuse(pool: PoolConfig, events: Sequence[PoolEvent], t: int) -> HeuristicResult:
    """Deposit-address reuse.

    An address appearing on both sides of a pool spends its own notes, so
    only depositors with a positive balance still hide anything.  No
    address pairs are linked; the reduction comes from the balance rule
    alone.
    """
    pool_events = events_for_pool(events, pool.pool_id)
    return HeuristicResult(
        heuristic=H1, pool_id=pool.pool_id, as_of=t,
        link_pairs=frozenset(),
        anonymity_set=_reduced_set(pool, pool_events, t, ()))


def h2_improper_sender(pool: PoolConfig, events: Sequence[PoolEvent],
                       labels: LabelBook, t: int) -> HeuristicResult:
    """Improper withdrawal sender.

    A withdrawal signed by one of the pool's own depositors, naming a
    different recipient, betrays that sender and recipient share an owner.
    Registered relayers are exempt: signing withdrawals for strangers is
    their whole job.
    """
    pool_events = events_for_pool(events, pool.pool_id)
    depositors = deposit_actors(pool_events, t)
    pairs = set()
    for e in pool_events:
        if e.kind != WITHDRAWAL or e.block.height > t:
            continue
        if e.tx_sender == e.actor or e.tx_sender not in depositors:
            continue
        if labels.is_relayer(e.tx_sender) or e.relayer is not None:
            continue
        pairs.add(LinkPair(e.tx_sender, e.actor, source=H2))
    return HeuristicResult(
        heuristic=H2, pool_id=pool.pool_id, as_of=t,
        link_pairs=frozenset(pairs),
        anonymity_set=_reduced_set(pool, pool_events, t, pairs))


def h3_related_pair(pool: PoolConfig, index: LedgerIndex, t: int) -> HeuristicResult:
    """Related deposit-withdrawal address pair.

    A depositor and a withdrawer directly connected by any native or token
    transfer (either direction, up to the cut) are treated as one owner.
    Deposits and withdrawals themselves are not transfer evidence; only
    the plain transfer record counts.
    """
    pool_events = index.events_for(pool.pool_id)
    depositors = deposit_actors(pool_events, t)
    withdrawers = withdrawal_actors(pool_events, t)
    pairs = set()
    for tr in list(index.native_transfers) + list(index.token_transfers):
        if tr.block.height > t or tr.sender == tr.recipient:
            continue
        a, b = tr.sender, tr.recipient
        if a in depositors and b in withdrawers and a != b:
            pairs.add(LinkPair(a, b, source=H3))
        if b in depositors and a in withdrawers and a != b:
            pairs.add(LinkPair(b, a, source=H3))
    return HeuristicResult(
        heuristic=H3, pool_id=pool.pool_id, as_of=t,
        link_pairs=frozenset(pairs),
        anonymity_set=_reduced_set(pool, pool_events, t, pairs))


def h4_intermediary(pool: PoolConfig, index: LedgerIndex,
                    labels: LabelBook, t: int) -> HeuristicResult:
    """Intermediary deposit address.

    A depositor whose entire incoming native-coin value (up to the cut)
    arrives from a single user account one hop out is treated as a
    throwaway of that funder.  Contract and exchange funders are excluded;
    receiving from an exchange says nothing about ownership.  Self
    transfers are ignored on both sides of the rule.
    """
    pool_events = index.events_for(pool.pool_id)
    depositors = deposit_actors(pool_events, t)
    pairs = set()
    for d1 in depositors:
        funders = {tr.sender
                   for tr in index.incoming_native(d1)
                   if tr.block.height <= t and tr.amount > 0 and tr.sender != d1}
        if len(funders) != 1:
            continue
        (d2,) = funders
        if not labels.is_user_account(d2):
            continue
        pairs.add(LinkPair(d1, d2, source=H4))
    return HeuristicResult(
        heuristic=H4, pool_id=pool.pool_id, as_of=t,
        link_pairs=frozenset(pairs),
        anonymity_set=_reduced_set(pool, pool_events, t, pairs))


def h5_cross_pool(pools: Iterable[PoolConfig], events: Sequence[PoolEvent],
                  t: int) -> dict[str, HeuristicResult]:
    """Cross-pool deposit pattern, evaluated jointly across pools.

    A depositor and a withdrawer are linked when they used exactly the
    same set of more than one pool, moved identical per-pool totals, and
    every withdrawal can be matched to an earlier deposit in its pool
    (equivalently, after sorting both sides per pool, each deposit
    precedes its same-rank withdrawal).  Each pool's anonymity set is then
    simplified with the pairs that involve it.
    """
    pool_list = sorted(pools, key=lambda p: p.pool_id)
    coins = {p.coin for p in pool_list}
    if len(pool_list) < 2:
        raise InputError("cross-pool matching needs at least two pools")
    if len(coins) != 1:
        raise InputError("cross-pool matching expects pools of one coin")
    known = {p.pool_id for p in pool_list}

    dep_blocks: dict[Address, dict[str, list]] = {}
    wd_blocks: dict[Address, dict[str, list]] = {}
    for e in events:
        if e.pool_id not in known or e.block.height > t:
            continue
        table = dep_blocks if e.kind == DEPOSIT else wd_blocks
        table.setdefault(e.actor, {}).setdefault(e.pool_id, []).append(e.block)

    def signature(per_pool: dict[str, list]) -> tuple:
        return tuple(sorted((pid, len(blocks)) for pid, blocks in per_pool.items()))

    by_sig_d: dict[tuple, list[Address]] = {}
    for d, per_pool in dep_blocks.items():
        if len(per_pool) > 1:
            by_sig_d.setdefault(signature(per_pool), []).append(d)
    by_sig_w: dict[tuple, list[Address]] = {}
    for w, per_pool in wd_blocks.items():
        if len(per_pool) > 1:
            by_sig_w.setdefault(signature(per_pool), []).append(w)

    pairs_by_pool: dict[str, set[LinkPair]] = {p.pool_id: set() for p in pool_list}
    for sig, ds in by_sig_d.items():
        for w in by_sig_w.get(sig, []):
            for d in ds:
                if d == w:
                    continue
                if all(
                    all(td < tw for td, tw in zip(sorted(dep_blocks[d][pid]),
                                                  sorted(wd_blocks[w][pid])))
                    for pid, _count in sig
                ):
                    pair = LinkPair(d, w, source=H5)
                    for pid, _count in sig:
                        pairs_by_pool[pid].add(pair)

    results = {}
    for pool in pool_list:
        pool_events = events_for_pool(events, pool.pool_id)
        involved = frozenset(pairs_by_pool[pool.pool_id])
        results[pool.pool_id] = HeuristicResult(
            heuristic=H5, pool_id=pool.pool_id, as_of=t,
            link_pairs=involved,
            anonymity_set=_reduced_set(pool, pool_events, t, involved))
    return results


def combine(pool: PoolConfig, results: Sequence[HeuristicResult],
            events: Sequence[PoolEvent], t: int) -> HeuristicResult:
    """Union the link pairs of several heuristic results on one pool.

    The combined anonymity set is never larger than the smallest input
    set: more links only coarsen the cluster partition, and a merged
    cluster is positive only if one of its parts was.
    """
    for r in results:
        if r.pool_id != pool.pool_id:
            raise InputError(f"result for pool {r.pool_id} combined into {pool.pool_id}")
        if r.as_of != t:
            raise InputError("cannot combine results taken at different cuts")
    links = frozenset().union(*(r.link_pairs for r in results)) if results else frozenset()
    pool_events = events_for_pool(events, pool.pool_id)
    tag = "+".join(r.heuristic for r in results) if results else "combined"
    return HeuristicResult(
        heuristic=tag, pool_id=pool.pool_id, as_of=t,
        link_pairs=links,
        anonymity_set=_reduced_set(pool, pool_events, t, links))


def clusters_from_links(pairs: Iterable[LinkPair]) -> tuple[Cluster, ...]:
    """Connected components of the link graph, members sorted, clusters
    ordered by their first member."""
    return tuple(Cluster(members=tuple(sorted(component)))
                 for component in connected_components(pairs))
