"""Line-delimited dataset format: validation, ingestion, emission.

A dataset is a directory of JSON-lines record files plus a manifest.
Every file is validated line by line before any analysis runs; failures
name the file, line, and field.  Amounts travel as decimal strings in
base units so no reader ever needs floating point; block numbers are
plain unsigned integers.

The synthetic generator emits exactly this layout (plus an optional
``ground_truth.json`` sidecar), so generated traces round-trip through
ingestion losslessly.  The sidecar's presence is what marks a dataset as
synthetic: analyses that need true balances refuse to run without it.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping

from .errors import IngestError
from .indexing import KNOWN_LABELS, LabelBook, LedgerIndex, build_index
from .groundtruth import FollowEdge, NameTransfer, SubdomainGrant
from .ledger import (
    Address,
    BlockPosition,
    LinkPair,
    PoolConfig,
    PoolEvent,
    Transfer,
    normalize_address,
)
from .mining import APClaim
from .synth import AmRecord, GroundTruth, SynthTrace

MANIFEST_FILE = "manifest.json"
GROUND_TRUTH_FILE = "ground_truth.json"
RECORD_FILES = ("pools", "pool_events", "transfers", "token_transfers",
                "labels", "relayers", "ap_claims", "ens_transfers",
                "ens_subdomains", "airdrop_claims", "follow_edges")


@dataclass(frozen=True)
class Manifest:
    coin: str
    first_block: int
    last_block: int
    am_launch: int | None = None


@dataclass(frozen=True)
class Dataset:
    path: Path
    manifest: Manifest
    pools: tuple[PoolConfig, ...]
    events: tuple[PoolEvent, ...]
    transfers: tuple[Transfer, ...]
    token_transfers: tuple[Transfer, ...]
    labels: LabelBook
    relayers: tuple[Address, ...]
    ap_claims: tuple[APClaim, ...]
    ens_transfers: tuple[NameTransfer, ...]
    ens_subdomains: tuple[SubdomainGrant, ...]
    airdrop_claims: tuple[Transfer, ...]
    follow_edges: tuple[FollowEdge, ...]
    ground_truth: GroundTruth | None
    counts: Mapping[str, int]

    @property
    def has_ground_truth(self) -> bool:
        return self.ground_truth is not None

    def pool(self, pool_id: str) -> PoolConfig:
        for p in self.pools:
            if p.pool_id == pool_id:
                return p
        raise IngestError(f"unknown pool: {pool_id}")

    def build_index(self) -> LedgerIndex:
        return build_index(self.transfers, self.token_transfers,
                           self.events, self.labels)

    def summary(self) -> dict[str, int]:
        return dict(self.counts)


# ---------------------------------------------------------------------------
# field validation helpers


class _Row:
    def __init__(self, file: str, line: int, record: Any):
        self.file = file
        self.line = line
        if not isinstance(record, dict):
            raise IngestError("record is not an object", file=file, line=line)
        self.record = record

    def fail(self, field: str, message: str) -> IngestError:
        return IngestError(message, file=self.file, line=self.line, field=field)

    def _get(self, field: str):
        if field not in self.record:
            raise self.fail(field, "missing field")
        return self.record[field]

    def address(self, field: str) -> Address:
        value = self._get(field)
        if not isinstance(value, str):
            raise self.fail(field, "address must be a string")
        try:
            return normalize_address(value)
        except Exception:
            raise self.fail(field, f"malformed address: {value!r}")

    def optional_address(self, field: str) -> Address | None:
        if field not in self.record or self.record[field] is None:
            return None
        return self.address(field)

    def uint(self, field: str, default: int | None = None) -> int:
        if field not in self.record and default is not None:
            return default
        value = self._get(field)
        if not isinstance(value, int) or isinstance(value, bool) or value < 0:
            raise self.fail(field, "expected a non-negative integer")
        return value

    def amount(self, field: str) -> int:
        value = self._get(field)
        if not isinstance(value, str) or not value.isdigit():
            raise self.fail(field, "amounts are decimal strings of base units")
        return int(value)

    def text(self, field: str) -> str:
        value = self._get(field)
        if not isinstance(value, str) or not value:
            raise self.fail(field, "expected a non-empty string")
        return value

    def flag(self, field: str, default: bool = False) -> bool:
        if field not in self.record:
            return default
        value = self.record[field]
        if not isinstance(value, bool):
            raise self.fail(field, "expected a boolean")
        return value

    def position(self) -> BlockPosition:
        return BlockPosition(self.uint("block"), self.uint("tx_index", 0),
                             self.uint("log_index", 0))


def _read_lines(path: Path, name: str):
    file = path / f"{name}.jsonl"
    if not file.exists():
        raise IngestError("required file is missing", file=f"{name}.jsonl")
    rows = []
    with file.open() as handle:
        for i, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise IngestError(f"invalid JSON: {exc.msg}",
                                  file=f"{name}.jsonl", line=i)
            rows.append(_Row(f"{name}.jsonl", i, record))
    return rows


def _reject_duplicates(name: str, rows, parsed) -> None:
    seen: dict[Any, int] = {}
    for row, obj in zip(rows, parsed):
        if obj in seen:
            raise IngestError(
                f"duplicate record (first seen on line {seen[obj]})",
                file=f"{name}.jsonl", line=row.line)
        seen[obj] = row.line


def ingest(path: str | Path) -> Dataset:
    """Validate and load a dataset directory.

    Every record file must be present (empty is fine).  Core-chain records
    must fall inside the manifest's block range; side-channel files are
    not range-checked since their events may predate the observation
    window.
    """
    path = Path(path)
    manifest_path = path / MANIFEST_FILE
    if not manifest_path.exists():
        raise IngestError("manifest is missing", file=MANIFEST_FILE)
    try:
        raw = json.loads(manifest_path.read_text())
    except json.JSONDecodeError as exc:
        raise IngestError(f"invalid JSON: {exc.msg}", file=MANIFEST_FILE)
    row = _Row(MANIFEST_FILE, 1, raw)
    manifest = Manifest(
        coin=row.text("coin"),
        first_block=row.uint("first_block"),
        last_block=row.uint("last_block"),
        am_launch=row.uint("am_launch") if "am_launch" in raw else None)
    if manifest.last_block < manifest.first_block:
        raise IngestError("block range is inverted", file=MANIFEST_FILE,
                          field="last_block")

    def in_range(row: _Row, pos: BlockPosition) -> BlockPosition:
        if not manifest.first_block <= pos.height <= manifest.last_block:
            raise row.fail("block", "height outside the manifest block range")
        return pos

    counts: dict[str, int] = {}

    rows = _read_lines(path, "pools")
    pools = []
    for r in rows:
        try:
            pools.append(PoolConfig(pool_id=r.text("pool_id"), coin=r.text("coin"),
                                    denomination=r.amount("denomination"),
                                    am_weight=r.uint("am_weight", 1)))
        except IngestError:
            raise
        except Exception as exc:
            raise IngestError(str(exc), file="pools.jsonl", line=r.line)
    _reject_duplicates("pools", rows, pools)
    if len({p.pool_id for p in pools}) != len(pools):
        raise IngestError("pool ids must be unique", file="pools.jsonl")
    counts["pools"] = len(pools)
    known_pools = {p.pool_id for p in pools}

    rows = _read_lines(path, "pool_events")
    events = []
    for r in rows:
        pool_id = r.text("pool_id")
        if pool_id not in known_pools:
            raise r.fail("pool_id", f"unknown pool {pool_id!r}")
        try:
            events.append(PoolEvent(
                pool_id=pool_id, kind=r.text("kind"),
                block=in_range(r, r.position()),
                actor=r.address("actor"), tx_sender=r.address("tx_sender"),
                relayer=r.optional_address("relayer")))
        except IngestError:
            raise
        except Exception as exc:
            raise IngestError(str(exc), file="pool_events.jsonl", line=r.line)
    _reject_duplicates("pool_events", rows, events)
    counts["pool_events"] = len(events)

    def read_transfers(name: str, range_checked: bool) -> tuple[Transfer, ...]:
        rows = _read_lines(path, name)
        out = []
        for r in rows:
            pos = r.position()
            if range_checked:
                in_range(r, pos)
            out.append(Transfer(block=pos, sender=r.address("sender"),
                                recipient=r.address("recipient"),
                                amount=r.amount("amount"), coin=r.text("coin"),
                                internal=r.flag("internal")))
        _reject_duplicates(name, rows, out)
        counts[name] = len(out)
        return tuple(out)

    transfers = read_transfers("transfers", range_checked=True)
    token_transfers = read_transfers("token_transfers", range_checked=True)

    rows = _read_lines(path, "labels")
    label_map: dict[Address, set[str]] = {}
    for r in rows:
        label = r.text("label")
        if label not in KNOWN_LABELS:
            raise r.fail("label", f"unknown label {label!r}")
        label_map.setdefault(r.address("address"), set()).add(label)
    counts["labels"] = len(rows)

    rows = _read_lines(path, "relayers")
    relayers = tuple(r.address("address") for r in rows)
    _reject_duplicates("relayers", rows, relayers)
    for addr in relayers:
        label_map.setdefault(addr, set()).add("relayer")
    counts["relayers"] = len(relayers)

    rows = _read_lines(path, "ap_claims")
    claims = []
    for r in rows:
        height = r.uint("block")
        if not manifest.first_block <= height <= manifest.last_block:
            raise r.fail("block", "height outside the manifest block range")
        claims.append(APClaim(recipient=r.address("recipient"), block=height,
                              ap=r.uint("ap")))
    _reject_duplicates("ap_claims", rows, claims)
    counts["ap_claims"] = len(claims)

    rows = _read_lines(path, "ens_transfers")
    ens_transfers = []
    for r in rows:
        ens_transfers.append(NameTransfer(
            name=r.text("name"), sender=r.address("sender"),
            recipient=r.address("recipient"), block=r.uint("block"),
            expiry=r.uint("expiry")))
    _reject_duplicates("ens_transfers", rows, ens_transfers)
    counts["ens_transfers"] = len(ens_transfers)

    rows = _read_lines(path, "ens_subdomains")
    subdomains = []
    for r in rows:
        subdomains.append(SubdomainGrant(owner=r.address("owner"),
                                         assignee=r.address("assignee"),
                                         subdomain=r.text("subdomain")))
    _reject_duplicates("ens_subdomains", rows, subdomains)
    counts["ens_subdomains"] = len(subdomains)

    airdrops = []
    rows = _read_lines(path, "airdrop_claims")
    for r in rows:
        airdrops.append(Transfer(block=r.position(), sender=r.address("sender"),
                                 recipient=r.address("recipient"),
                                 amount=r.amount("amount"), coin=r.text("coin")))
    _reject_duplicates("airdrop_claims", rows, airdrops)
    counts["airdrop_claims"] = len(airdrops)

    rows = _read_lines(path, "follow_edges")
    edges = []
    for r in rows:
        edges.append(FollowEdge(follower=r.address("follower"),
                                followed=r.address("followed")))
    _reject_duplicates("follow_edges", rows, edges)
    counts["follow_edges"] = len(edges)

    ground_truth = None
    gt_path = path / GROUND_TRUTH_FILE
    if gt_path.exists():
        try:
            ground_truth = _parse_ground_truth(json.loads(gt_path.read_text()))
        except json.JSONDecodeError as exc:
            raise IngestError(f"invalid JSON: {exc.msg}", file=GROUND_TRUTH_FILE)

    return Dataset(
        path=path, manifest=manifest, pools=tuple(sorted(pools, key=lambda p: p.pool_id)),
        events=tuple(events), transfers=transfers,
        token_transfers=token_transfers,
        labels=LabelBook({a: frozenset(tags) for a, tags in label_map.items()}),
        relayers=relayers, ap_claims=tuple(claims),
        ens_transfers=tuple(ens_transfers), ens_subdomains=tuple(subdomains),
        airdrop_claims=tuple(airdrops), follow_edges=tuple(edges),
        ground_truth=ground_truth, counts=counts)


# ---------------------------------------------------------------------------
# emission


def _dump_line(record: dict) -> str:
    return json.dumps(record, sort_keys=True, separators=(",", ":")) + "\n"


def _transfer_record(t: Transfer) -> dict:
    return {"block": t.block.height, "tx_index": t.block.tx_index,
            "log_index": t.block.log_index, "sender": t.sender,
            "recipient": t.recipient, "amount": str(t.amount),
            "coin": t.coin, "internal": t.internal}


def _event_record(e: PoolEvent) -> dict:
    return {"pool_id": e.pool_id, "kind": e.kind, "block": e.block.height,
            "tx_index": e.block.tx_index, "log_index": e.block.log_index,
            "actor": e.actor, "tx_sender": e.tx_sender, "relayer": e.relayer}


def write_dataset(trace: SynthTrace, path: str | Path) -> Path:
    """Emit a synthetic trace in the ingestion layout (plus ground truth)."""
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)

    manifest = {"coin": trace.coin, "first_block": trace.first_block,
                "last_block": trace.last_block}
    if trace.am_launch is not None:
        manifest["am_launch"] = trace.am_launch
    (path / MANIFEST_FILE).write_text(json.dumps(manifest, sort_keys=True, indent=2) + "\n")

    def write(name: str, lines: list[str]) -> None:
        (path / f"{name}.jsonl").write_text("".join(lines))

    write("pools", [_dump_line({"pool_id": p.pool_id, "coin": p.coin,
                                "denomination": str(p.denomination),
                                "am_weight": p.am_weight})
                    for p in sorted(trace.pools, key=lambda p: p.pool_id)])
    write("pool_events", [_dump_line(_event_record(e))
                          for e in sorted(trace.events,
                                          key=lambda e: (e.block, e.pool_id, e.actor))])
    write("transfers", [_dump_line(_transfer_record(t))
                        for t in sorted(trace.transfers,
                                        key=lambda t: (t.block, t.sender, t.recipient))])
    write("token_transfers", [_dump_line(_transfer_record(t))
                              for t in sorted(trace.token_transfers,
                                              key=lambda t: (t.block, t.sender, t.recipient))])
    write("labels", [_dump_line({"address": a, "label": label})
                     for a in sorted(trace.labels)
                     for label in sorted(trace.labels[a])])
    write("relayers", [_dump_line({"address": a}) for a in sorted(trace.relayers)])
    write("ap_claims", [_dump_line({"recipient": c.recipient, "block": c.block,
                                    "ap": c.ap})
                        for c in sorted(trace.ap_claims,
                                        key=lambda c: (c.block, c.recipient))])
    for name in ("ens_transfers", "ens_subdomains", "airdrop_claims", "follow_edges"):
        write(name, [])

    gt = trace.ground_truth
    payload = {
        "links_by_heuristic": {h: sorted(p.addresses for p in pairs)
                               for h, pairs in gt.links_by_heuristic.items()},
        "user_links": sorted([p.a1, p.a2, p.source] for p in gt.user_links),
        "reusers": sorted(gt.reusers),
        "fully_withdrawn_reusers": sorted(gt.fully_withdrawn_reusers),
        "attackers": sorted(gt.attackers),
        "am_truth": [{"recipient": r.recipient, "pool_id": r.pool_id,
                      "deposit_blocks": list(r.deposit_blocks),
                      "withdrawal_blocks": list(r.withdrawal_blocks),
                      "ap": r.ap, "claim_block": r.claim_block}
                     for r in sorted(gt.am_truth, key=lambda r: (r.claim_block, r.recipient))],
        "true_balances": {pool: dict(sorted(balances.items()))
                          for pool, balances in sorted(gt.true_balances.items())},
        "active_depositors": {pool: sorted(addrs)
                              for pool, addrs in sorted(gt.active_depositors.items())},
        "behaviors": dict(sorted(gt.behaviors.items())),
    }
    (path / GROUND_TRUTH_FILE).write_text(
        json.dumps(payload, sort_keys=True, indent=2) + "\n")
    return path


def _parse_ground_truth(raw: dict) -> GroundTruth:
    return GroundTruth(
        links_by_heuristic={
            h: frozenset(LinkPair(a1, a2, source=h) for a1, a2 in pairs)
            for h, pairs in raw["links_by_heuristic"].items()},
        user_links=frozenset(LinkPair(a1, a2, source=source)
                             for a1, a2, source in raw["user_links"]),
        reusers=frozenset(raw["reusers"]),
        fully_withdrawn_reusers=frozenset(raw["fully_withdrawn_reusers"]),
        attackers=frozenset(raw["attackers"]),
        am_truth=tuple(AmRecord(recipient=r["recipient"], pool_id=r["pool_id"],
                                deposit_blocks=tuple(r["deposit_blocks"]),
                                withdrawal_blocks=tuple(r["withdrawal_blocks"]),
                                ap=r["ap"], claim_block=r["claim_block"])
                       for r in raw["am_truth"]),
        true_balances={pool: dict(balances)
                       for pool, balances in raw["true_balances"].items()},
        active_depositors={pool: frozenset(addrs)
                           for pool, addrs in raw["active_depositors"].items()},
        behaviors=dict(raw["behaviors"]))
