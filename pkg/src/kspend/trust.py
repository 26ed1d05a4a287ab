"""Trust models, trust graphs, and the inconsistency number.

A trust model pairs per-process quorum systems with an inclusion-closed
fault model (stored by its maximal sets). Fixing a faulty set F and one
quorum choice per correct process yields a trust graph: correct processes
are adjacent when their chosen quorums intersect outside F. The
inconsistency number is the largest independent set any such graph admits,
over every faulty set in the downward closure of the fault model and every
choice of quorums; it bounds how many conflicting spends of one asset an
adversary can drive into correct histories.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from itertools import combinations
from typing import Iterable, Mapping, NamedTuple

from .errors import (
    InvalidFaultySet,
    InvalidParameters,
    InvalidQuorumMap,
    SchemaError,
    SizeLimitExceeded,
)

ProcessId = int
Quorum = frozenset[int]
QuorumMap = Mapping[int, Quorum]

MIS_EXACT_CAP = 24
DEFAULT_ENUM_BUDGET = 1 << 26


@dataclass(frozen=True)
class TrustModel:
    """Per-process quorum systems plus the maximal faulty sets."""

    n: int
    quorums: tuple[tuple[Quorum, ...], ...]
    fault_model: tuple[frozenset[int], ...]

    @staticmethod
    def build(
        n: int,
        quorums: Iterable[Iterable[Iterable[int]]],
        fault_model: Iterable[Iterable[int]],
    ) -> "TrustModel":
        if not isinstance(n, int) or n < 1:
            raise ValueError(f"process count must be a positive integer, got {n!r}")
        systems = []
        rows = list(quorums)
        if len(rows) != n:
            raise ValueError(f"expected one quorum system per process ({n}), got {len(rows)}")
        for pid, row in enumerate(rows):
            system = sorted({frozenset(q) for q in row}, key=sorted)
            if not system:
                raise ValueError(f"process {pid} has an empty quorum system")
            for q in system:
                if not q:
                    raise ValueError(f"process {pid} lists an empty quorum")
                if not all(isinstance(x, int) and 0 <= x < n for x in q):
                    raise ValueError(f"quorum {sorted(q)} of process {pid} is out of range")
            systems.append(tuple(system))
        maximal = sorted({frozenset(f) for f in fault_model}, key=lambda s: (len(s), sorted(s)))
        for f in maximal:
            if not all(isinstance(x, int) and 0 <= x < n for x in f):
                raise ValueError(f"faulty set {sorted(f)} is out of range")
        # drop sets absorbed by a superset; keep the empty set only when alone
        maximal = [f for f in maximal if not any(f < g for g in maximal)]
        if not maximal:
            maximal = [frozenset()]
        return TrustModel(n=n, quorums=tuple(systems), fault_model=tuple(maximal))

    def quorums_of(self, pid: int) -> tuple[Quorum, ...]:
        return self.quorums[pid]

    def processes(self) -> range:
        return range(self.n)


def allows_faulty(model: TrustModel, faulty: frozenset[int]) -> bool:
    """Membership in the downward closure of the fault model."""
    return any(faulty <= m for m in model.fault_model)


def self_inclusion_gaps(model: TrustModel) -> tuple[tuple[int, Quorum], ...]:
    """Quorums that omit their own process.

    Graph analysis is well defined either way, so loading such a model is
    allowed. The transfer protocol's settlement guarantees, however, assume
    every correct process sits in each of its own quorums; callers running
    simulations may want to surface these gaps.
    """
    return tuple(
        (pid, q)
        for pid in model.processes()
        for q in model.quorums[pid]
        if pid not in q
    )


def fault_closure(model: TrustModel) -> tuple[frozenset[int], ...]:
    """Every admissible faulty set, largest first, then lexicographic.

    Larger sets first makes witness search prefer faulty sets that can
    actually host a misbehaving source.
    """
    closure: set[frozenset[int]] = set()
    for maximal in model.fault_model:
        members = sorted(maximal)
        for r in range(len(members) + 1):
            closure.update(frozenset(c) for c in combinations(members, r))
    return tuple(sorted(closure, key=lambda s: (-len(s), sorted(s))))


def is_live(model: TrustModel, pid: int, faulty: frozenset[int]) -> bool:
    """A process is live when some quorum of it avoids the faulty set."""
    return any(not (q & faulty) for q in model.quorums[pid])


@dataclass(frozen=True)
class TrustGraph:
    nodes: frozenset[int]
    edges: frozenset[tuple[int, int]]
    faulty_set: frozenset[int]
    quorum_map: tuple[tuple[int, Quorum], ...]

    def adjacent(self, a: int, b: int) -> bool:
        return (min(a, b), max(a, b)) in self.edges


def build_trust_graph(model: TrustModel, faulty_set: Iterable[int], s: QuorumMap) -> TrustGraph:
    """Graph on correct processes; edge when quorums intersect outside F."""
    faulty = frozenset(faulty_set)
    if not allows_faulty(model, faulty):
        raise InvalidFaultySet(f"faulty set {sorted(faulty)} exceeds the fault model")
    correct = [p for p in model.processes() if p not in faulty]
    for pid, choice in s.items():
        if frozenset(choice) not in set(model.quorums[pid]):
            raise InvalidQuorumMap(f"process {pid}: {sorted(choice)} is not one of its quorums")
    for pid in correct:
        if pid not in s:
            raise InvalidQuorumMap(f"no quorum chosen for correct process {pid}")
    edges = set()
    for a, b in combinations(correct, 2):
        if (frozenset(s[a]) & frozenset(s[b])) - faulty:
            edges.add((a, b))
    return TrustGraph(
        nodes=frozenset(correct),
        edges=frozenset(edges),
        faulty_set=faulty,
        quorum_map=tuple(sorted((p, frozenset(s[p])) for p in s)),
    )


def _adjacency_masks(graph: TrustGraph) -> tuple[list[int], list[int]]:
    nodes = sorted(graph.nodes)
    index = {p: i for i, p in enumerate(nodes)}
    adj = [0] * len(nodes)
    for a, b in graph.edges:
        adj[index[a]] |= 1 << index[b]
        adj[index[b]] |= 1 << index[a]
    return nodes, adj


def _mis_size(adj: list[int], mask: int, floor: int = 0) -> int:
    best = floor

    def explore(candidates: int, size: int) -> None:
        nonlocal best
        if size + candidates.bit_count() <= best:
            return
        if candidates == 0:
            best = max(best, size)
            return
        # branch on the highest-degree remaining vertex
        pick, degree = -1, -1
        m = candidates
        while m:
            v = (m & -m).bit_length() - 1
            m &= m - 1
            d = (adj[v] & candidates).bit_count()
            if d > degree:
                pick, degree = v, d
        if degree == 0:
            best = max(best, size + candidates.bit_count())
            return
        bit = 1 << pick
        explore(candidates & ~adj[pick] & ~bit, size + 1)
        explore(candidates & ~bit, size)

    explore(mask, 0)
    return best


def independence_number(graph: TrustGraph, *, exact_cap: int = MIS_EXACT_CAP) -> int:
    """Exact maximum independent set size, by branch and bound."""
    count = len(graph.nodes)
    if count == 0:
        return 0
    if count > exact_cap:
        raise SizeLimitExceeded(f"exact independence capped at {exact_cap} nodes, got {count}")
    _, adj = _adjacency_masks(graph)
    return _mis_size(adj, (1 << count) - 1)


def max_independent_set(graph: TrustGraph, *, exact_cap: int = MIS_EXACT_CAP) -> frozenset[int]:
    """Lexicographically smallest maximum independent set."""
    count = len(graph.nodes)
    if count == 0:
        return frozenset()
    if count > exact_cap:
        raise SizeLimitExceeded(f"exact independence capped at {exact_cap} nodes, got {count}")
    nodes, adj = _adjacency_masks(graph)
    target = _mis_size(adj, (1 << count) - 1)
    chosen: list[int] = []
    mask = (1 << count) - 1
    remaining = target
    for i in range(count):
        bit = 1 << i
        if not mask & bit:
            continue
        rest = mask & ~adj[i] & ~bit
        if 1 + _mis_size(adj, rest) == remaining:
            chosen.append(nodes[i])
            mask = rest
            remaining -= 1
        else:
            mask &= ~bit
    return frozenset(chosen)


class Witness(NamedTuple):
    faulty_set: frozenset[int]
    quorum_map: dict[int, Quorum]
    independent_set: frozenset[int]


class _Budget:
    def __init__(self, cap: int):
        self.remaining = cap

    def spend(self, units: int) -> None:
        self.remaining -= units
        if self.remaining < 0:
            raise _Exhausted


class _Exhausted(Exception):
    pass


def _choice_masks(
    model: TrustModel, faulty: frozenset[int], correct: list[int]
) -> list[list[tuple[int, Quorum]]]:
    """Per correct process: (quorum − F) bitmasks with their lex-first quorum."""
    masks = []
    for pid in correct:
        seen: dict[int, Quorum] = {}
        for q in model.quorums[pid]:  # already in lex order
            m = 0
            for member in q:
                if member not in faulty:
                    m |= 1 << member
            if m not in seen:
                seen[m] = q
        masks.append(sorted(seen.items()))
    return masks


def _pack_max(masks: list[list[tuple[int, Quorum]]], budget: _Budget) -> int:
    """Largest set of processes assignable pairwise-disjoint masks.

    Equivalent to the best independence number over every quorum map for
    the fixed faulty set: only the members' choices matter, and mutual
    independence is exactly pairwise disjointness of the reduced masks.
    """
    m = len(masks)
    memo: dict[tuple[int, int], int] = {}

    def best(i: int, used: int) -> int:
        if i == m:
            return 0
        key = (i, used)
        hit = memo.get(key)
        if hit is not None:
            return hit
        budget.spend(1 + len(masks[i]))
        value = best(i + 1, used)
        for mask, _ in masks[i]:
            if mask & used == 0:
                value = max(value, 1 + best(i + 1, used | mask))
        memo[key] = value
        return value

    return best(0, 0)


def _lambda_and_witness(
    model: TrustModel, budget_cap: int
) -> tuple[int, Witness]:
    budget = _Budget(budget_cap)
    best = 0
    best_faulty: frozenset[int] | None = None
    closure = fault_closure(model)
    packed: dict[frozenset[int], list[list[tuple[int, Quorum]]]] = {}
    try:
        for faulty in closure:
            correct = [p for p in model.processes() if p not in faulty]
            masks = _choice_masks(model, faulty, correct)
            packed[faulty] = masks
            value = _pack_max(masks, budget)
            if value > best:
                best = value
                best_faulty = faulty
    except _Exhausted:
        raise SizeLimitExceeded(
            f"inconsistency search exceeded its budget of {budget_cap} units",
            partial_maximum=best,
        ) from None

    assert best_faulty is not None  # every model admits some faulty set and a node
    faulty = best_faulty
    correct = [p for p in model.processes() if p not in faulty]
    masks = packed[faulty]

    m = len(masks)
    memo: dict[tuple[int, int], int] = {}

    def suffix_best(i: int, used: int) -> int:
        if i == m:
            return 0
        key = (i, used)
        hit = memo.get(key)
        if hit is not None:
            return hit
        value = suffix_best(i + 1, used)
        for mask, _ in masks[i]:
            if mask & used == 0:
                value = max(value, 1 + suffix_best(i + 1, used | mask))
        memo[key] = value
        return value

    # greedy reconstruction: smallest members first, lex-smallest quorum per
    # member, lex-first filler quorums for everyone else
    chosen: dict[int, Quorum] = {}
    members: list[int] = []
    used = 0
    remaining = best
    for i, pid in enumerate(correct):
        if remaining == 0:
            break
        picked = None
        for mask, quorum in sorted(masks[i], key=lambda mq: sorted(mq[1])):
            if mask & used == 0 and 1 + suffix_best(i + 1, used | mask) == remaining:
                picked = (mask, quorum)
                break
        if picked is not None:
            members.append(pid)
            chosen[pid] = picked[1]
            used |= picked[0]
            remaining -= 1
    quorum_map = {
        pid: chosen.get(pid, model.quorums[pid][0]) for pid in correct
    }
    return best, Witness(
        faulty_set=faulty,
        quorum_map=quorum_map,
        independent_set=frozenset(members),
    )


def inconsistency_number(model: TrustModel, *, budget: int = DEFAULT_ENUM_BUDGET) -> int:
    """Worst independence number over the fault closure and all quorum maps."""
    value, _ = _lambda_and_witness(model, budget)
    return value


def max_independent_set_witness(
    model: TrustModel, *, budget: int = DEFAULT_ENUM_BUDGET
) -> Witness:
    """A (faulty set, quorum map, independent set) achieving the maximum."""
    _, witness = _lambda_and_witness(model, budget)
    return witness


def uniform_inconsistency(n: int, q: int, f: int) -> int:
    """Closed form for the symmetric model: all q-subsets, faults up to f."""
    if not (isinstance(n, int) and isinstance(q, int) and isinstance(f, int)):
        raise InvalidParameters("n, q, f must be integers")
    if not 0 < q <= n:
        raise InvalidParameters(f"need 0 < q <= n, got q={q}, n={n}")
    if not 0 <= f < q:
        raise InvalidParameters(f"need 0 <= f < q, got f={f}, q={q}")
    return (n - f) // (q - f)


def uniform_model(n: int, q: int, f: int) -> TrustModel:
    """Explicit symmetric model: every q-subset through p, every |F| <= f."""
    uniform_inconsistency(n, q, f)  # parameter validation
    systems = []
    for pid in range(n):
        others = [x for x in range(n) if x != pid]
        systems.append([frozenset(c) | {pid} for c in combinations(others, q - 1)])
    faults = [frozenset(c) for c in combinations(range(n), f)]
    return TrustModel.build(n, systems, faults)


def parse_model(obj: object) -> TrustModel:
    if not isinstance(obj, dict):
        raise SchemaError("trust model file must hold a JSON object")
    try:
        n = obj["n"]
        quorums = obj["quorums"]
        fault_model = obj["fault_model_maximal"]
    except (KeyError, TypeError) as exc:
        raise SchemaError(f"missing trust model field: {exc}") from None
    try:
        return TrustModel.build(n, quorums, fault_model)
    except (ValueError, TypeError) as exc:
        raise SchemaError(str(exc)) from None


def model_to_obj(model: TrustModel) -> dict:
    return {
        "n": model.n,
        "quorums": [[sorted(q) for q in system] for system in model.quorums],
        "fault_model_maximal": [sorted(f) for f in model.fault_model],
    }


def load_model(path: str) -> TrustModel:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            obj = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise SchemaError(f"cannot read trust model {path}: {exc}") from None
    return parse_model(obj)


def dump_model(model: TrustModel, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_obj(model), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_builtin_model(name: str) -> TrustModel:
    """Models shipped with the package, e.g. ``example1``."""
    try:
        text = resources.files("kspend.data").joinpath(f"{name}.json").read_text("utf-8")
    except (FileNotFoundError, ModuleNotFoundError) as exc:
        raise SchemaError(f"no builtin model named {name!r}") from exc
    return parse_model(json.loads(text))
