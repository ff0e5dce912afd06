"""Anonymity-set sizes, adversary metrics, and usage statistics.

Every ratio here is an exact :class:`fractions.Fraction`; rounding happens
only when a report is rendered, so repeated computation and comparison of
metrics never drifts.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .errors import DomainError, InputError
from .heuristics import Cluster, HeuristicResult
from .indexing import LabelBook
from .ledger import (
    WITHDRAWAL,
    Address,
    Amount,
    PoolConfig,
    PoolEvent,
    PoolState,
    deposit_actors,
    events_for_pool,
)

# Average deposit volume of the labeled attacker addresses; kept
# configurable because its scale depends on the dataset's base unit.
DEFAULT_FUND_THEN_DEPOSIT_THRESHOLD = 1881


def observed_anonymity_set(pool: PoolConfig, events: Sequence[PoolEvent],
                           t: int) -> frozenset[Address]:
    """The unique deposit addresses of the pool: its advertised anonymity."""
    return deposit_actors(events_for_pool(events, pool.pool_id), t)


def true_anonymity_set(state: PoolState) -> frozenset[Address]:
    """Depositors that still hold a positive balance.

    Only meaningful when the state's balances are trusted ground truth
    (synthetic traces); on real chains the remaining depositors are
    exactly what the pool hides.  The command-line layer enforces that
    mode; this function is pure set algebra.
    """
    return state.positive_addresses()


def adversary_advantage(set_size: int) -> Fraction:
    """Probability of naming the right depositor by uniform guessing."""
    if set_size < 1:
        raise DomainError("cannot link a withdrawal against an empty set")
    return Fraction(1, set_size)


def relative_advantage_increase(oas_size: int, sas_size: int) -> Fraction:
    """How much likelier the correct guess becomes after reduction.

    Equals ``oas/sas - 1``; in terms of the fractional reduction ``r`` it
    is ``1/(1-r) - 1``.
    """
    if sas_size < 1:
        raise DomainError("reduced anonymity set is empty")
    if oas_size < sas_size:
        raise InputError("reduced set cannot exceed the observed set")
    return Fraction(oas_size, sas_size) - 1


def advantage_increase_from_reduction(reduction: Fraction) -> Fraction:
    """Same metric expressed from a fractional set-size reduction."""
    if not 0 <= reduction < 1:
        raise DomainError(f"reduction must lie in [0, 1): {reduction}")
    return 1 / (1 - Fraction(reduction)) - 1


@dataclass(frozen=True)
class ClusterHistogram:
    counts: Mapping[int, int]

    @property
    def fractions(self) -> dict[int, Fraction]:
        total = sum(self.counts.values())
        return {size: Fraction(n, total) for size, n in self.counts.items()}

    @property
    def total(self) -> int:
        return sum(self.counts.values())


def cluster_size_histogram(clusters: Iterable[Cluster]) -> ClusterHistogram:
    counts: dict[int, int] = {}
    for c in clusters:
        counts[c.size] = counts.get(c.size, 0) + 1
    return ClusterHistogram(counts=dict(sorted(counts.items())))


@dataclass(frozen=True)
class RelayerUsage:
    pool_id: str
    relayers: int
    withdrawals: int
    relayed_withdrawals: int
    withdrawers: int
    relayed_withdrawers: int

    @property
    def relayed_withdrawal_share(self) -> Fraction:
        return Fraction(self.relayed_withdrawals, self.withdrawals) if self.withdrawals else Fraction(0)

    @property
    def relayed_withdrawer_share(self) -> Fraction:
        return Fraction(self.relayed_withdrawers, self.withdrawers) if self.withdrawers else Fraction(0)


def relayer_usage(pool: PoolConfig, events: Sequence[PoolEvent]) -> RelayerUsage:
    """Counts of relayed withdrawals and of withdrawers ever using one."""
    relayers: set[Address] = set()
    withdrawers: set[Address] = set()
    relayed_by: set[Address] = set()
    withdrawals = relayed = 0
    for e in events_for_pool(events, pool.pool_id):
        if e.kind != WITHDRAWAL:
            continue
        withdrawals += 1
        withdrawers.add(e.actor)
        if e.relayer is not None:
            relayed += 1
            relayers.add(e.relayer)
            relayed_by.add(e.actor)
    return RelayerUsage(
        pool_id=pool.pool_id,
        relayers=len(relayers),
        withdrawals=withdrawals,
        relayed_withdrawals=relayed,
        withdrawers=len(withdrawers),
        relayed_withdrawers=len(relayed_by))


@dataclass(frozen=True)
class FundThenDepositFlag:
    """An address that withdrew before it ever deposited, then paid in a
    volume above the configured threshold."""

    address: Address
    first_withdrawal: PoolEvent
    first_deposit: PoolEvent
    total_deposited: Amount
    labels: frozenset[str]


def fund_then_deposit_flags(pools: Iterable[PoolConfig],
                            events: Sequence[PoolEvent],
                            labels: LabelBook,
                            min_deposit: Amount = DEFAULT_FUND_THEN_DEPOSIT_THRESHOLD,
                            ) -> tuple[FundThenDepositFlag, ...]:
    """Withdraw-first addresses whose later deposits reach ``min_deposit``.

    The pattern matches actors who used the pools as a source of clean
    starting funds and came back to bury a much larger profit.
    """
    denominations = {p.pool_id: p.denomination for p in pools}
    first_wd: dict[Address, PoolEvent] = {}
    first_dep: dict[Address, PoolEvent] = {}
    volume: dict[Address, int] = {}
    for e in sorted(events, key=lambda e: e.block):
        if e.pool_id not in denominations:
            raise InputError(f"event for unknown pool {e.pool_id!r}")
        if e.kind == WITHDRAWAL:
            first_wd.setdefault(e.actor, e)
        else:
            first_dep.setdefault(e.actor, e)
            volume[e.actor] = volume.get(e.actor, 0) + denominations[e.pool_id]
    flags = []
    for addr, wd in first_wd.items():
        dep = first_dep.get(addr)
        if dep is None or wd.block >= dep.block:
            continue
        if volume[addr] < min_deposit:
            continue
        flags.append(FundThenDepositFlag(
            address=addr, first_withdrawal=wd, first_deposit=dep,
            total_deposited=volume[addr], labels=labels.labels_for(addr)))
    return tuple(sorted(flags, key=lambda f: f.address))


@dataclass(frozen=True)
class HeuristicStat:
    heuristic: str
    size: int
    reduction: Fraction


@dataclass(frozen=True)
class AnonymityReport:
    """Per-pool summary: observed set, per-heuristic reduced sets, and the
    adversary's exact odds before and after reduction."""

    pool_id: str
    as_of: int
    oas_size: int
    per_heuristic: tuple[HeuristicStat, ...]
    combined: HeuristicStat | None
    adv_observed: Fraction
    adv_reduced: Fraction | None
    r_adv: Fraction | None


def build_anonymity_report(pool: PoolConfig, events: Sequence[PoolEvent], t: int,
                           results: Sequence[HeuristicResult],
                           combined: HeuristicResult | None = None) -> AnonymityReport:
    oas = observed_anonymity_set(pool, events, t)
    if not oas:
        raise DomainError(f"pool {pool.pool_id} has no depositors at {t}")

    def stat(r: HeuristicResult) -> HeuristicStat:
        if not r.anonymity_set:
            raise DomainError(
                f"{r.heuristic} empties pool {pool.pool_id}: no positive balance left")
        return HeuristicStat(
            heuristic=r.heuristic, size=r.size,
            reduction=Fraction(len(oas) - r.size, len(oas)))

    per = tuple(stat(r) for r in results)
    comb = stat(combined) if combined is not None else None
    return AnonymityReport(
        pool_id=pool.pool_id, as_of=t, oas_size=len(oas),
        per_heuristic=per, combined=comb,
        adv_observed=adversary_advantage(len(oas)),
        adv_reduced=adversary_advantage(comb.size) if comb else None,
        r_adv=relative_advantage_increase(len(oas), comb.size) if comb else None)


def render_ratio(value: Fraction, places: int = 2) -> str:
    """Fixed-point decimal rendering with exact half-up rounding."""
    sign = "-" if value < 0 else ""
    scaled = abs(Fraction(value)) * 10 ** places
    units = scaled.numerator // scaled.denominator
    if 2 * (scaled.numerator % scaled.denominator) >= scaled.denominator:
        units += 1
    text = str(units).rjust(places + 1, "0")
    return f"{sign}{text[:-places]}.{text[-places:]}"


def render_percent(value: Fraction, places: int = 2) -> str:
    return render_ratio(Fraction(value) * 100, places) + "%"
