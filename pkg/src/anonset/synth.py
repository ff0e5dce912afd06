"""Seeded synthetic mixer traces with planted ground truth.

The generator emits a complete pool history (events, transfers, labels,
relayer registry, reward claims) in which every user follows exactly one
behavior script.  Each non-disciplined script produces precisely the
on-chain pattern one heuristic detects and nothing that triggers any
other, so heuristics can be verified for both recall and precision
against the planted links.

Isolation between behavior classes rests on three construction rules:

* the address space is partitioned per behavior class, so scripts can
  never collide on an address;
* every depositor outside the intermediary class is funded by a single
  exchange-labeled faucet, which the intermediary rule ignores; and
* only cross-pool users touch more than one pool, and their per-pool
  deposit-count vectors are pairwise distinct, so cross-pool matching
  cannot pair two different users.

Randomness comes from a splitmix64 stream seeded by the caller: identical
(config, seed) inputs reproduce the trace bit for bit on any platform.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

from .errors import ConfigError, InputError
from .ledger import (
    DEPOSIT,
    WITHDRAWAL,
    Address,
    BlockPosition,
    LinkPair,
    PoolConfig,
    PoolEvent,
    Transfer,
    pool_state,
)
from .mining import APClaim

DISCIPLINED = "disciplined"
H1_REUSER = "h1-reuser"
H2_IMPROPER = "h2-improper-sender"
H3_RELATED = "h3-related-transfer"
H4_INTERMEDIARY = "h4-intermediary"
H5_CROSS = "h5-cross-pool"
AM_SPECULATOR = "am-speculator"
ATTACKER = "attacker-fund-then-deposit"

BEHAVIORS = (DISCIPLINED, H1_REUSER, H2_IMPROPER, H3_RELATED,
             H4_INTERMEDIARY, H5_CROSS, AM_SPECULATOR, ATTACKER)

_BEHAVIOR_CODE = {name: i + 1 for i, name in enumerate(BEHAVIORS)}

_MASK64 = (1 << 64) - 1


class Prng:
    """splitmix64: state advances by the golden-gamma constant, outputs
    are finalized with two xor-shift multiplies.  Chosen for portability:
    the whole algorithm is right here."""

    def __init__(self, seed: int):
        self._state = seed & _MASK64

    def next_u64(self) -> int:
        self._state = (self._state + 0x9E3779B97F4A7C15) & _MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def randint(self, lo: int, hi: int) -> int:
        """Uniform-ish integer in [lo, hi]; the tiny modulo bias is
        irrelevant for trace generation."""
        if hi < lo:
            raise InputError("empty range")
        return lo + self.next_u64() % (hi - lo + 1)

    def choice(self, seq: Sequence):
        return seq[self.randint(0, len(seq) - 1)]


def _addr(behavior: str, user: int, role: int) -> Address:
    return f"0x{_BEHAVIOR_CODE[behavior]:02x}{user:036x}{role:02x}"


FAUCET = "0x" + "e" * 38 + "01"


def _relayer_addr(i: int) -> Address:
    return f"0x{'e' * 30}{i:08x}02"


@dataclass(frozen=True)
class BehaviorProfile:
    """Exact user-mix fractions per behavior; they must sum to one."""

    fractions: Mapping[str, Fraction]

    def __post_init__(self):
        unknown = set(self.fractions) - set(BEHAVIORS)
        if unknown:
            raise ConfigError(f"unknown behaviors: {sorted(unknown)}")
        total = sum(Fraction(f) for f in self.fractions.values())
        if any(Fraction(f) < 0 for f in self.fractions.values()):
            raise ConfigError("behavior fractions cannot be negative")
        if total != 1:
            raise ConfigError(f"behavior fractions must sum to 1, got {total}")

    @classmethod
    def pure(cls, behavior: str) -> "BehaviorProfile":
        return cls(fractions={behavior: Fraction(1)})

    @classmethod
    def from_weights(cls, weights: Mapping[str, int | Fraction]) -> "BehaviorProfile":
        total = sum(Fraction(w) for w in weights.values())
        if total <= 0:
            raise ConfigError("profile weights must be positive")
        return cls(fractions={name: Fraction(w) / total for name, w in weights.items()})

    def apportion(self, count: int) -> dict[str, int]:
        """Largest-remainder apportionment of ``count`` users, determinate
        down to the fixed behavior order."""
        shares = {b: Fraction(self.fractions.get(b, 0)) * count for b in BEHAVIORS}
        out = {b: math.floor(s) for b, s in shares.items()}
        leftover = count - sum(out.values())
        remainders = sorted(shares.items(), key=lambda kv: (kv[1] - math.floor(kv[1]), ),
                            reverse=True)
        for b, _ in remainders[:leftover]:
            out[b] += 1
        return {b: n for b, n in out.items() if n}


def standard_pools(coin: str = "ETH", scale: int = 1000) -> tuple[PoolConfig, ...]:
    """The canonical four denominations with their mining weights, in base
    units of ``scale`` per coin."""
    table = (("0.1", scale // 10, 10), ("1", scale, 20),
             ("10", scale * 10, 50), ("100", scale * 100, 400))
    return tuple(PoolConfig(pool_id=f"P{label}", coin=coin,
                            denomination=denom, am_weight=weight)
                 for label, denom, weight in table)


@dataclass(frozen=True)
class GeneratorConfig:
    profile: BehaviorProfile
    pools: tuple[PoolConfig, ...]
    user_count: int
    block_span: int
    first_block: int = 1_000
    am_launch: int | None = None
    # (pre-launch, post-launch) reuser fractions; enables the two-epoch
    # trace used to study the mining launch
    reuse_step: tuple[Fraction, Fraction] | None = None
    speculator_max_deposits: int = 3
    attacker_min_volume: int = 2_000
    relayer_count: int = 3


@dataclass(frozen=True)
class AmRecord:
    """Planted truth behind one reward claim."""

    recipient: Address
    pool_id: str
    deposit_blocks: tuple[int, ...]
    withdrawal_blocks: tuple[int, ...]
    ap: int
    claim_block: int


@dataclass(frozen=True)
class GroundTruth:
    links_by_heuristic: Mapping[str, frozenset[LinkPair]]
    user_links: frozenset[LinkPair]
    reusers: frozenset[Address]
    fully_withdrawn_reusers: frozenset[Address]
    attackers: frozenset[Address]
    am_truth: tuple[AmRecord, ...]
    true_balances: Mapping[str, Mapping[Address, int]]
    active_depositors: Mapping[str, frozenset[Address]]
    behaviors: Mapping[Address, str]

    @property
    def links(self) -> frozenset[LinkPair]:
        out: frozenset[LinkPair] = frozenset()
        for pairs in self.links_by_heuristic.values():
            out |= pairs
        return out


@dataclass(frozen=True)
class SynthTrace:
    coin: str
    pools: tuple[PoolConfig, ...]
    events: tuple[PoolEvent, ...]
    transfers: tuple[Transfer, ...]
    token_transfers: tuple[Transfer, ...]
    labels: Mapping[Address, tuple[str, ...]]
    relayers: tuple[Address, ...]
    ap_claims: tuple[APClaim, ...]
    am_launch: int | None
    first_block: int
    last_block: int
    ground_truth: GroundTruth


class _Builder:
    def __init__(self, first_block: int):
        self.cursor = first_block - 1
        self.events: list[PoolEvent] = []
        self.transfers: list[Transfer] = []
        self.token_transfers: list[Transfer] = []
        self.claims: list[APClaim] = []

    def tick(self) -> int:
        self.cursor += 1
        return self.cursor

    def fund(self, sender: Address, recipient: Address, amount: int,
             coin: str) -> Transfer:
        tr = Transfer(block=BlockPosition(self.tick()), sender=sender,
                      recipient=recipient, amount=amount, coin=coin)
        self.transfers.append(tr)
        return tr

    def token(self, sender: Address, recipient: Address, amount: int,
              coin: str) -> Transfer:
        tr = Transfer(block=BlockPosition(self.tick()), sender=sender,
                      recipient=recipient, amount=amount, coin=coin)
        self.token_transfers.append(tr)
        return tr

    def deposit(self, pool: PoolConfig, actor: Address) -> PoolEvent:
        e = PoolEvent(pool_id=pool.pool_id, kind=DEPOSIT,
                      block=BlockPosition(self.tick()),
                      actor=actor, tx_sender=actor)
        self.events.append(e)
        return e

    def withdraw(self, pool: PoolConfig, actor: Address,
                 tx_sender: Address | None = None,
                 relayer: Address | None = None) -> PoolEvent:
        e = PoolEvent(pool_id=pool.pool_id, kind=WITHDRAWAL,
                      block=BlockPosition(self.tick()),
                      actor=actor, tx_sender=relayer or tx_sender or actor,
                      relayer=relayer)
        self.events.append(e)
        return e

    def claim(self, recipient: Address, ap: int) -> APClaim:
        c = APClaim(recipient=recipient, block=self.tick(), ap=ap)
        self.claims.append(c)
        return c


def _count_vector(index: int, n_users: int, n_pools: int) -> list[int]:
    """Pairwise-distinct per-pool deposit counts via mixed-radix digits."""
    base = max(2, math.ceil(n_users ** (1 / n_pools)))
    while base ** n_pools < n_users:
        base += 1
    digits = []
    rest = index
    for _ in range(n_pools):
        digits.append(rest % base + 1)
        rest //= base
    return digits


def generate_trace(config: GeneratorConfig, seed: int) -> SynthTrace:
    """Deterministically expand a behavior mix into a full trace."""
    if config.user_count < 1:
        raise ConfigError("need at least one user")
    if config.block_span < 10:
        raise ConfigError("block span must be at least 10")
    if config.reuse_step is not None:
        return _generate_reuse_step(config, seed)

    counts = config.profile.apportion(config.user_count)
    if counts.get(H5_CROSS) and len(config.pools) < 2:
        raise ConfigError("cross-pool users need at least two pools")
    coins = {p.coin for p in config.pools}
    if len(coins) != 1:
        raise ConfigError("pools must share one coin")
    (coin,) = coins

    prng = Prng(seed)
    build = _Builder(config.first_block)
    relayers = tuple(_relayer_addr(i) for i in range(config.relayer_count))
    planted: dict[str, set[LinkPair]] = {h: set() for h in ("h1", "h2", "h3", "h4", "h5")}
    user_links: set[LinkPair] = set()
    reusers: set[Address] = set()
    fully_withdrawn: set[Address] = set()
    attackers: set[Address] = set()
    am_truth: list[AmRecord] = []
    behaviors: dict[Address, str] = {}

    def rel() -> Address:
        return relayers[prng.randint(0, len(relayers) - 1)]

    def one_pool() -> PoolConfig:
        return config.pools[prng.randint(0, len(config.pools) - 1)]

    h5_index = 0
    for behavior in BEHAVIORS:
        for u in range(counts.get(behavior, 0)):
            d = _addr(behavior, u, 0xD1)
            w = _addr(behavior, u, 0xA2)
            behaviors[d] = behavior

            if behavior == DISCIPLINED:
                pool = one_pool()
                k = prng.randint(1, 2)
                j = prng.randint(0, k)
                build.fund(FAUCET, d, k * pool.denomination, coin)
                for _ in range(k):
                    build.deposit(pool, d)
                for _ in range(j):
                    build.withdraw(pool, w, relayer=rel())
                if j:
                    user_links.add(LinkPair(d, w, source=DISCIPLINED))

            elif behavior == H1_REUSER:
                pool = one_pool()
                k = prng.randint(1, 2)
                j = prng.randint(0, k)
                build.fund(FAUCET, d, k * pool.denomination, coin)
                for _ in range(k):
                    build.deposit(pool, d)
                for _ in range(j):
                    build.withdraw(pool, d)
                reusers.add(d)
                if j == k:
                    fully_withdrawn.add(d)

            elif behavior == H2_IMPROPER:
                pool = one_pool()
                k = prng.randint(1, 2)
                build.fund(FAUCET, d, k * pool.denomination, coin)
                for _ in range(k):
                    build.deposit(pool, d)
                build.withdraw(pool, w, tx_sender=d)
                planted["h2"].add(LinkPair(d, w, source="h2"))
                user_links.add(LinkPair(d, w, source=H2_IMPROPER))

            elif behavior == H3_RELATED:
                pool = one_pool()
                build.fund(FAUCET, d, pool.denomination, coin)
                build.deposit(pool, d)
                build.withdraw(pool, w, relayer=rel())
                amount = prng.randint(1, pool.denomination)
                direction = prng.randint(0, 3)
                if direction == 0:
                    build.fund(d, w, amount, coin)
                elif direction == 1:
                    build.fund(w, d, amount, coin)
                elif direction == 2:
                    build.token(d, w, amount, "TOK")
                else:
                    build.token(w, d, amount, "TOK")
                planted["h3"].add(LinkPair(d, w, source="h3"))
                user_links.add(LinkPair(d, w, source=H3_RELATED))

            elif behavior == H4_INTERMEDIARY:
                pool = one_pool()
                funder = _addr(behavior, u, 0xF3)
                k = prng.randint(1, 2)
                build.fund(funder, d, k * pool.denomination, coin)
                for _ in range(k):
                    build.deposit(pool, d)
                planted["h4"].add(LinkPair(d, funder, source="h4"))
                user_links.add(LinkPair(d, funder, source=H4_INTERMEDIARY))

            elif behavior == H5_CROSS:
                vector = _count_vector(h5_index, counts[H5_CROSS], len(config.pools))
                h5_index += 1
                total = sum(c * p.denomination for c, p in zip(vector, config.pools))
                build.fund(FAUCET, d, total, coin)
                for count, pool in zip(vector, config.pools):
                    for _ in range(count):
                        build.deposit(pool, d)
                for count, pool in zip(vector, config.pools):
                    for _ in range(count):
                        build.withdraw(pool, w, relayer=rel())
                planted["h5"].add(LinkPair(d, w, source="h5"))
                user_links.add(LinkPair(d, w, source=H5_CROSS))

            elif behavior == AM_SPECULATOR:
                pool = one_pool()
                n = prng.randint(1, max(1, config.speculator_max_deposits))
                build.fund(FAUCET, d, n * pool.denomination, coin)
                dep_blocks = [build.deposit(pool, d).block.height for _ in range(n)]
                wd_blocks = [build.withdraw(pool, w, relayer=rel()).block.height
                             for _ in range(n)]
                ap = pool.am_weight * sum(tw - td for td, tw in zip(dep_blocks, wd_blocks))
                claim = build.claim(d, ap)
                am_truth.append(AmRecord(
                    recipient=d, pool_id=pool.pool_id,
                    deposit_blocks=tuple(dep_blocks),
                    withdrawal_blocks=tuple(wd_blocks),
                    ap=ap, claim_block=claim.block))
                user_links.add(LinkPair(d, w, source=AM_SPECULATOR))

            elif behavior == ATTACKER:
                pool = one_pool()
                build.withdraw(pool, d, relayer=rel())
                n = max(1, -(-config.attacker_min_volume // pool.denomination))
                build.fund(FAUCET, d, n * pool.denomination, coin)
                for _ in range(n):
                    build.deposit(pool, d)
                attackers.add(d)

    last_block = config.first_block + config.block_span
    if build.cursor > last_block:
        raise ConfigError(
            f"block span {config.block_span} too small: trace needs "
            f"{build.cursor - config.first_block + 1} blocks")
    if config.am_launch is not None and not (
            config.first_block < config.am_launch <= last_block):
        raise ConfigError("mining launch must fall inside the block span")

    labels: dict[Address, tuple[str, ...]] = {FAUCET: ("exchange",)}
    for r in relayers:
        labels[r] = ("relayer",)
    for a in sorted(attackers):
        labels[a] = ("malicious",)

    true_balances = {}
    active = {}
    for pool in config.pools:
        state = pool_state(pool, [e for e in build.events if e.pool_id == pool.pool_id],
                           last_block)
        true_balances[pool.pool_id] = dict(state.entries)
        active[pool.pool_id] = state.positive_addresses()

    return SynthTrace(
        coin=coin,
        pools=tuple(config.pools),
        events=tuple(build.events),
        transfers=tuple(build.transfers),
        token_transfers=tuple(build.token_transfers),
        labels=labels,
        relayers=relayers,
        ap_claims=tuple(build.claims),
        am_launch=config.am_launch,
        first_block=config.first_block,
        last_block=last_block,
        ground_truth=GroundTruth(
            links_by_heuristic={h: frozenset(v) for h, v in planted.items()},
            user_links=frozenset(user_links),
            reusers=frozenset(reusers),
            fully_withdrawn_reusers=frozenset(fully_withdrawn),
            attackers=frozenset(attackers),
            am_truth=tuple(am_truth),
            true_balances=true_balances,
            active_depositors=active,
            behaviors=behaviors))


def _generate_reuse_step(config: GeneratorConfig, seed: int) -> SynthTrace:
    """Two-epoch trace whose reuser share steps at the mining launch.

    Users split into equal-as-possible cohorts; the pre cohort acts
    strictly before the launch block, the post cohort from it onward.
    Within a cohort, the configured fraction of users deposits and fully
    withdraws with one address; the rest deposit and stay.  Counts are
    exact, so equal fractions give bitwise-equal window statistics.
    """
    if config.am_launch is None:
        raise ConfigError("reuse stepping needs a launch block")
    pre_frac, post_frac = (Fraction(f) for f in config.reuse_step)
    if not (0 <= pre_frac <= 1 and 0 <= post_frac <= 1):
        raise ConfigError("reuse fractions must lie in [0, 1]")
    coins = {p.coin for p in config.pools}
    if len(coins) != 1:
        raise ConfigError("pools must share one coin")
    (coin,) = coins
    last_block = config.first_block + config.block_span
    if not config.first_block < config.am_launch < last_block:
        raise ConfigError("launch block must fall strictly inside the span")

    prng = Prng(seed)
    pool = config.pools[0]
    pre_users = config.user_count // 2
    post_users = config.user_count - pre_users

    def reuser_count(frac: Fraction, cohort: int) -> int:
        return int(frac * cohort + Fraction(1, 2))

    build = _Builder(config.first_block)
    reusers: set[Address] = set()
    fully_withdrawn: set[Address] = set()
    behaviors: dict[Address, str] = {}

    def emit_cohort(size: int, n_reusers: int, tag: int) -> None:
        for u in range(size):
            d = _addr(H1_REUSER if u < n_reusers else DISCIPLINED, u, tag)
            build.fund(FAUCET, d, pool.denomination, coin)
            build.deposit(pool, d)
            if u < n_reusers:
                build.withdraw(pool, d)
                reusers.add(d)
                fully_withdrawn.add(d)
                behaviors[d] = H1_REUSER
            else:
                behaviors[d] = DISCIPLINED

    emit_cohort(pre_users, reuser_count(pre_frac, pre_users), 0x01)
    if build.cursor >= config.am_launch:
        raise ConfigError("pre-launch cohort does not fit before the launch block")
    build.cursor = config.am_launch - 1
    emit_cohort(post_users, reuser_count(post_frac, post_users), 0x02)
    if build.cursor > last_block:
        raise ConfigError("block span too small for the post-launch cohort")

    labels: dict[Address, tuple[str, ...]] = {FAUCET: ("exchange",)}
    relayers = tuple(_relayer_addr(i) for i in range(config.relayer_count))
    for r in relayers:
        labels[r] = ("relayer",)

    state = pool_state(pool, build.events, last_block)
    return SynthTrace(
        coin=coin, pools=tuple(config.pools),
        events=tuple(build.events),
        transfers=tuple(build.transfers),
        token_transfers=(),
        labels=labels, relayers=relayers, ap_claims=(),
        am_launch=config.am_launch,
        first_block=config.first_block, last_block=last_block,
        ground_truth=GroundTruth(
            links_by_heuristic={h: frozenset() for h in ("h1", "h2", "h3", "h4", "h5")},
            user_links=frozenset(),
            reusers=frozenset(reusers),
            fully_withdrawn_reusers=frozenset(fully_withdrawn),
            attackers=frozenset(),
            am_truth=(),
            true_balances={pool.pool_id: dict(state.entries)},
            active_depositors={pool.pool_id: state.positive_addresses()},
            behaviors=behaviors))
