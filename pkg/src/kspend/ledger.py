"""Transactions, histories, and the damage metrics computed over them.

A transaction moves value from previously received transactions (its
inputs) to a new output map. Histories are sets of transactions closed
under the well-formedness clauses below; the spending number measures how
many conflicting spends of one input made it into a family of histories,
and the cover number measures how many mutually consistent "branches" the
family splits into.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Iterable, Iterator, Mapping

from .crypto import content_hash
from .errors import MalformedHistory, SizeLimitExceeded, UnresolvedInput

GENESIS_ISSUER = -1

# wire widths for the canonical encoding
_MAX_AMOUNT = 1 << 63
_GENESIS_WIRE = 0xFFFFFFFF

COVER_EXACT_CAP = 12


@dataclass(frozen=True)
class Transaction:
    """Immutable transfer record.

    ``outputs`` is stored sorted by recipient with zero amounts dropped and
    ``inputs`` as sorted 32-byte references, so equal content means equal
    value and equal canonical encoding. ``timestamp`` is optional; it only
    matters for the per-issuer predecessor clause of cluster analysis.
    """

    issuer: int
    outputs: tuple[tuple[int, int], ...]
    inputs: tuple[bytes, ...]
    timestamp: int | None = None
    message: bytes | None = None

    def pays(self, pid: int) -> int:
        for recipient, amount in self.outputs:
            if recipient == pid:
                return amount
        return 0


def make_tx(
    issuer: int,
    outputs: Mapping[int, int],
    inputs: Iterable[bytes] = (),
    timestamp: int | None = None,
    message: bytes | None = None,
) -> Transaction:
    """Normalize and validate the pieces of a transaction."""
    if not isinstance(issuer, int) or issuer < GENESIS_ISSUER:
        raise ValueError(f"bad issuer: {issuer!r}")
    out = []
    for recipient, amount in outputs.items():
        if not isinstance(recipient, int) or recipient < 0:
            raise ValueError(f"bad output recipient: {recipient!r}")
        if not isinstance(amount, int) or amount < 0 or amount >= _MAX_AMOUNT:
            raise ValueError(f"bad output amount: {amount!r}")
        if amount:
            out.append((recipient, amount))
    refs = sorted(set(inputs))
    for ref in refs:
        if not isinstance(ref, bytes) or len(ref) != 32:
            raise ValueError("input references must be 32-byte digests")
    if timestamp is not None and (not isinstance(timestamp, int) or timestamp < 1):
        raise ValueError(f"bad timestamp: {timestamp!r}")
    return Transaction(
        issuer=issuer,
        outputs=tuple(sorted(out)),
        inputs=tuple(refs),
        timestamp=timestamp,
        message=message,
    )


def genesis_tx(outputs: Mapping[int, int]) -> Transaction:
    """The funding root: no issuer, no inputs, exempt from validity."""
    return make_tx(GENESIS_ISSUER, outputs, (), timestamp=1)


def is_genesis(tx: Transaction) -> bool:
    return tx.issuer == GENESIS_ISSUER and not tx.inputs


def _be(value: int, width: int) -> bytes:
    return value.to_bytes(width, "big")


def encode_tx(tx: Transaction) -> bytes:
    """Canonical length-prefixed encoding; the signing and hashing preimage."""
    wire_issuer = _GENESIS_WIRE if tx.issuer == GENESIS_ISSUER else tx.issuer
    parts = [_be(wire_issuer, 4), _be(len(tx.outputs), 4)]
    for recipient, amount in tx.outputs:
        parts.append(_be(recipient, 4))
        parts.append(_be(amount, 8))
    parts.append(_be(len(tx.inputs), 4))
    parts.extend(tx.inputs)
    parts.append(_be(tx.timestamp or 0, 8))
    if tx.message is None:
        parts.append(b"\x00")
    else:
        parts.append(b"\x01")
        parts.append(_be(len(tx.message), 4))
        parts.append(tx.message)
    return b"".join(parts)


@lru_cache(maxsize=None)
def tx_ref(tx: Transaction) -> bytes:
    """Content hash of the canonical encoding."""
    return content_hash(encode_tx(tx))


def out_value(tx: Transaction) -> int:
    return sum(amount for _, amount in tx.outputs)


def conflicts(a: Transaction, b: Transaction) -> bool:
    """Distinct transactions by one issuer spending a shared input."""
    if a == b or a.issuer != b.issuer:
        return False
    return bool(set(a.inputs) & set(b.inputs))


def conflicting_pairs(
    txs: Iterable[Transaction],
) -> tuple[tuple[Transaction, Transaction], ...]:
    """Every conflicting pair among txs, ordered by reference within and across pairs."""
    entries = sorted(set(txs), key=tx_ref)
    return tuple(
        (a, b)
        for i, a in enumerate(entries)
        for b in entries[i + 1 :]
        if conflicts(a, b)
    )


@dataclass(frozen=True)
class WellFormedness:
    ok: bool
    failures: tuple[tuple[str, str], ...] = ()

    def clause_failed(self, clause: str) -> bool:
        return any(c == clause for c, _ in self.failures)


@dataclass(frozen=True)
class History:
    """A set of transactions containing the funding root."""

    txs: frozenset[Transaction]

    @staticmethod
    def of(txs: Iterable[Transaction]) -> "History":
        return History(frozenset(txs))

    def __contains__(self, tx: Transaction) -> bool:
        return tx in self.txs

    def __iter__(self) -> Iterator[Transaction]:
        return iter(self.txs)

    def __len__(self) -> int:
        return len(self.txs)

    @cached_property
    def by_ref(self) -> dict[bytes, Transaction]:
        return {tx_ref(tx): tx for tx in self.txs}

    def resolve(self, ref: bytes) -> Transaction:
        try:
            return self.by_ref[ref]
        except KeyError:
            raise UnresolvedInput(f"no transaction with reference {ref.hex()[:16]}…") from None

    def with_tx(self, tx: Transaction) -> "History":
        return History(self.txs | {tx})

    @cached_property
    def _base_report(self) -> WellFormedness:
        return _well_formed_base(self)

    @cached_property
    def issuers(self) -> frozenset[int]:
        return frozenset(tx.issuer for tx in self.txs if not is_genesis(tx))


def projection(h: History, issuer: int) -> frozenset[Transaction]:
    """The fragment of ``h`` issued by one process."""
    return frozenset(tx for tx in h.txs if tx.issuer == issuer and not is_genesis(tx))


def in_value(tx: Transaction, resolver: History) -> int:
    """Total paid to the issuer by the resolved inputs."""
    if is_genesis(tx):
        return 0
    return sum(resolver.resolve(ref).pays(tx.issuer) for ref in tx.inputs)


def tx_valid(tx: Transaction, resolver: History) -> bool:
    """Spends exactly what it received, and received something."""
    if is_genesis(tx):
        return True
    out = out_value(tx)
    return out > 0 and out == in_value(tx, resolver)


def inputs_incoming(tx: Transaction, resolver: History) -> bool:
    # definitional for transactions: every input must pay the issuer
    return all(resolver.resolve(ref).pays(tx.issuer) > 0 for ref in tx.inputs)


def _well_formed_base(h: History) -> WellFormedness:
    failures: list[tuple[str, str]] = []
    roots = [tx for tx in h.txs if is_genesis(tx)]
    if len(roots) != 1:
        failures.append(("t-validity", f"expected exactly one funding root, found {len(roots)}"))

    regular = [tx for tx in h.txs if not is_genesis(tx)]
    unresolved: set[Transaction] = set()
    for tx in regular:
        missing = [ref for ref in tx.inputs if ref not in h.by_ref]
        if missing:
            unresolved.add(tx)
            failures.append(
                ("completeness", f"{tx_ref(tx).hex()[:12]} has {len(missing)} unresolved input(s)")
            )

    for tx in regular:
        if tx in unresolved:
            continue
        if not inputs_incoming(tx, h):
            failures.append(
                ("t-validity", f"{tx_ref(tx).hex()[:12]} spends an input not paid to its issuer")
            )
        elif not tx_valid(tx, h):
            failures.append(
                ("t-validity", f"{tx_ref(tx).hex()[:12]} breaks value conservation")
            )

    ordered = sorted(h.txs, key=tx_ref)
    for i, a in enumerate(ordered):
        for b in ordered[i + 1 :]:
            if conflicts(a, b):
                failures.append(
                    (
                        "no-conflict",
                        f"{tx_ref(a).hex()[:12]} and {tx_ref(b).hex()[:12]} share an input",
                    )
                )

    # content-hash references make dependency cycles unconstructible, but the
    # clause stays checkable: walk the resolved graph
    state: dict[Transaction, int] = {}

    def cyclic(tx: Transaction) -> bool:
        mark = state.get(tx, 0)
        if mark == 1:
            return True
        if mark == 2:
            return False
        state[tx] = 1
        for ref in tx.inputs:
            dep = h.by_ref.get(ref)
            if dep is not None and cyclic(dep):
                return True
        state[tx] = 2
        return False

    for tx in ordered:
        if cyclic(tx):
            failures.append(("cycle-freedom", f"{tx_ref(tx).hex()[:12]} sits on a dependency cycle"))
            break

    return WellFormedness(ok=not failures, failures=tuple(failures))


def _timestamp_failures(h: History) -> list[tuple[str, str]]:
    failures = []
    for tx in sorted(h.txs, key=tx_ref):
        if is_genesis(tx):
            continue
        if tx.timestamp is None:
            failures.append(("predecessor", f"{tx_ref(tx).hex()[:12]} carries no timestamp"))
        elif tx.timestamp > 1 and not any(
            other.issuer == tx.issuer and other.timestamp == tx.timestamp - 1
            for other in h.txs
            if not is_genesis(other)
        ):
            failures.append(
                (
                    "predecessor",
                    f"{tx_ref(tx).hex()[:12]} (t={tx.timestamp}) lacks a same-issuer predecessor",
                )
            )
    return failures


def well_formed_report(h: History, *, check_timestamps: bool = False) -> WellFormedness:
    """Evaluate every clause, returning which ones failed and why."""
    base = h._base_report
    if not check_timestamps:
        return base
    failures = list(base.failures) + _timestamp_failures(h)
    return WellFormedness(ok=not failures, failures=tuple(failures))


def is_well_formed(h: History, *, check_timestamps: bool = False) -> bool:
    return well_formed_report(h, check_timestamps=check_timestamps).ok


def balance(h: History, pid: int) -> int:
    """Received minus spent; never negative on a well-formed history."""
    if not h._base_report.ok:
        raise MalformedHistory("balance requires a well-formed history")
    received = sum(tx.pays(pid) for tx in h.txs)
    spent = sum(out_value(tx) for tx in h.txs if tx.issuer == pid and not is_genesis(tx))
    return received - spent


def _as_histories(collection: Mapping[int, History] | Iterable[History]) -> list[History]:
    if isinstance(collection, Mapping):
        items = [collection[k] for k in sorted(collection)]
    else:
        items = list(collection)
    seen: list[History] = []
    for h in items:
        if h not in seen:
            seen.append(h)
    return seen


def spending_number(collection: Mapping[int, History] | Iterable[History]) -> int:
    """Largest count of distinct spends of one input by one issuer.

    Ranges over all transactions appearing anywhere in the collection;
    0 when nothing was spent at all.
    """
    histories = _as_histories(collection)
    for h in histories:
        if not h._base_report.ok:
            raise MalformedHistory("spending number requires well-formed histories")
    spenders: dict[tuple[int, bytes], set[bytes]] = {}
    for h in histories:
        for tx in h.txs:
            if is_genesis(tx):
                continue
            for ref in tx.inputs:
                spenders.setdefault((tx.issuer, ref), set()).add(tx_ref(tx))
    return max((len(s) for s in spenders.values()), default=0)


def _canonical_order(histories: list[History]) -> list[History]:
    return sorted(histories, key=lambda h: tuple(sorted(h.by_ref)))


def _compatible(a: History, b: History) -> bool:
    # pairwise cluster condition: per-issuer projections form a chain
    for issuer in a.issuers | b.issuers:
        pa = {tx_ref(tx) for tx in projection(a, issuer)}
        pb = {tx_ref(tx) for tx in projection(b, issuer)}
        if not (pa <= pb or pb <= pa):
            return False
    return True


def minimum_cover(
    collection: Mapping[int, History] | Iterable[History],
    *,
    cap: int = COVER_EXACT_CAP,
    check_timestamps: bool = True,
) -> tuple[tuple[History, ...], ...]:
    """Fewest clusters whose union is the collection.

    A cluster is a set of histories whose per-issuer projections are
    pairwise comparable, so clusters are exactly the cliques of the
    compatibility graph and the minimum cover is an exact minimum clique
    cover (computed as a coloring of the incompatibility graph).
    """
    histories = _canonical_order(_as_histories(collection))
    for h in histories:
        if not well_formed_report(h, check_timestamps=check_timestamps).ok:
            raise MalformedHistory("cover analysis requires well-formed histories")
    m = len(histories)
    if m == 0:
        return ()
    if m > cap:
        raise SizeLimitExceeded(f"cover search capped at {cap} histories, got {m}")

    incompat = [set() for _ in range(m)]
    for i in range(m):
        for j in range(i + 1, m):
            if not _compatible(histories[i], histories[j]):
                incompat[i].add(j)
                incompat[j].add(i)

    order = sorted(range(m), key=lambda v: (-len(incompat[v]), v))
    colors = [-1] * m

    def assign(idx: int, k: int) -> bool:
        if idx == m:
            return True
        v = order[idx]
        used = {colors[u] for u in incompat[v] if colors[u] != -1}
        limit = min(k, max((colors[u] for u in order[:idx] if colors[u] != -1), default=-1) + 2)
        for c in range(limit):
            if c in used:
                continue
            colors[v] = c
            if assign(idx + 1, k):
                return True
            colors[v] = -1
        return False

    for k in range(1, m + 1):
        colors = [-1] * m
        if assign(0, k):
            classes: dict[int, list[History]] = {}
            for v, c in enumerate(colors):
                classes.setdefault(c, []).append(histories[v])
            clusters = sorted(
                (tuple(cls) for cls in classes.values()),
                key=lambda cls: tuple(sorted(cls[0].by_ref)),
            )
            return tuple(clusters)
    raise AssertionError("coloring search must terminate")


def cover_number(
    collection: Mapping[int, History] | Iterable[History],
    *,
    cap: int = COVER_EXACT_CAP,
    check_timestamps: bool = True,
) -> int:
    return len(minimum_cover(collection, cap=cap, check_timestamps=check_timestamps))


@dataclass(frozen=True)
class Accusation:
    """Claim that the accused processes signed conflicting transactions.

    The proof carries (transaction, issuer signature) pairs in canonical
    order by transaction hash so equal evidence compares equal.
    """

    accused: frozenset[int]
    proof: tuple[tuple[Transaction, bytes], ...]

    @staticmethod
    def build(accused: Iterable[int], proof: Iterable[tuple[Transaction, bytes]]) -> "Accusation":
        canonical = tuple(sorted(set(proof), key=lambda pair: tx_ref(pair[0])))
        return Accusation(accused=frozenset(accused), proof=canonical)


def encode_accusation(acc: Accusation) -> bytes:
    parts = [_be(len(acc.accused), 4)]
    parts.extend(_be(pid, 4) for pid in sorted(acc.accused))
    parts.append(_be(len(acc.proof), 4))
    for tx, sig in acc.proof:
        parts.append(tx_ref(tx))
        parts.append(_be(len(sig), 4))
        parts.append(sig)
    return b"".join(parts)


def accusation_digest(acc: Accusation) -> bytes:
    return content_hash(encode_accusation(acc))


def verify_acc(acc: Accusation, public_keys: Mapping[int, bytes], scheme) -> bool:
    """Check an accusation on evidence alone; no trust model involved.

    Every proof pair must be validly signed by its issuer, every issuer
    must be among the accused, and each accused process must have at least
    two distinct pairwise-conflicting transactions in the proof.
    """
    if not acc.accused or not acc.proof:
        return False
    by_issuer: dict[int, list[Transaction]] = {}
    for tx, sig in acc.proof:
        public = public_keys.get(tx.issuer)
        if public is None or not scheme.verify(public, encode_tx(tx), sig):
            return False
        if tx.issuer not in acc.accused:
            return False
        by_issuer.setdefault(tx.issuer, []).append(tx)
    for pid in acc.accused:
        txs = by_issuer.get(pid, [])
        if len(set(txs)) < 2:
            return False
        if not all(conflicts(a, b) for i, a in enumerate(txs) for b in txs[i + 1 :]):
            return False
    return True
