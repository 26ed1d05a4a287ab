"""Deterministic adversarial simulator for the transfer protocol.

A scenario fixes the trust model, the faulty set, scripted Byzantine sends,
honest transfer actions, and a scheduler. Faulty processes run no engine:
their entire behavior is the script, and the scheduler (the adversary)
controls delivery order but can never drop a message, so every run drains
to quiescence unless the event cap trips first. Runs are pure functions of
(scenario, seed): traces hash identically across repeats.
"""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping

from . import engine as eng
from . import properties as props
from .crypto import KeyPair, keychain, make_scheme
from .errors import (
    InvalidFaultySet,
    InvalidTransaction,
    MalformedHistory,
    SchemaError,
    SizeLimitExceeded,
)
from .ledger import (
    Accusation,
    History,
    Transaction,
    accusation_digest,
    encode_tx,
    genesis_tx,
    is_genesis,
    make_tx,
    minimum_cover,
    tx_ref,
)
from .trust import TrustModel, allows_faulty, inconsistency_number, model_to_obj, parse_model

DEFAULT_KEY_SEED = b"kspend"
DEFAULT_MAX_EVENTS = 100_000


@dataclass(frozen=True)
class PlanRule:
    """One adversarial phase: deliveries of this tx to these recipients."""

    tx_ref: bytes
    recipients: frozenset[int]


@dataclass(frozen=True)
class SchedulerSpec:
    kind: str  # fifo | random | adversarial
    seed: int | None = None
    plan: tuple[PlanRule, ...] = ()

    def __post_init__(self):
        if self.kind not in ("fifo", "random", "adversarial"):
            raise ValueError(f"unknown scheduler kind: {self.kind!r}")


@dataclass(frozen=True)
class ScriptedSend:
    """A directed send by a faulty process; signatures are filled at run time."""

    sender: int
    kind: str  # REQ | ECHO
    tx: Transaction
    recipients: frozenset[int]


@dataclass(frozen=True)
class Scenario:
    model: TrustModel
    faulty_set: frozenset[int]
    genesis: Transaction
    honest_actions: tuple[tuple[int, Transaction], ...] = ()
    scripts: tuple[ScriptedSend, ...] = ()
    scheduler: SchedulerSpec = SchedulerSpec("fifo")
    max_events: int = DEFAULT_MAX_EVENTS
    sig_scheme: str = "ed25519"
    key_seed: bytes = DEFAULT_KEY_SEED
    kcb_source: int | None = None
    disable_used_input_guard: bool = False
    name: str = ""

    @staticmethod
    def build(
        model: TrustModel,
        faulty_set: Iterable[int],
        genesis: Transaction,
        honest_actions: Iterable[tuple[int, Transaction]] = (),
        scripts: Iterable[ScriptedSend] = (),
        scheduler: SchedulerSpec = SchedulerSpec("fifo"),
        **kw,
    ) -> "Scenario":
        faulty = frozenset(faulty_set)
        if not allows_faulty(model, faulty):
            raise InvalidFaultySet(f"faulty set {sorted(faulty)} exceeds the fault model")
        if not is_genesis(genesis):
            raise ValueError("scenario genesis must be a funding root")
        actions = tuple(honest_actions)
        for pid, tx in actions:
            if pid in faulty:
                raise ValueError(f"honest action issued by declared-faulty process {pid}")
            if tx.issuer != pid:
                raise ValueError("honest action issuer mismatch")
        sends = tuple(scripts)
        for send in sends:
            if send.sender not in faulty:
                raise ValueError(f"script sender {send.sender} is not declared faulty")
            if send.tx.issuer not in faulty:
                # equivocation is allowed; forging correct-process signatures is not
                raise ValueError(f"scripted transaction issued by non-faulty {send.tx.issuer}")
            if send.kind not in (eng.REQ, eng.ECHO):
                raise ValueError(f"scripts may send REQ or ECHO, not {send.kind!r}")
        return Scenario(
            model=model,
            faulty_set=faulty,
            genesis=genesis,
            honest_actions=actions,
            scripts=sends,
            scheduler=scheduler,
            **kw,
        )


@dataclass(frozen=True)
class _Delivery:
    seq: int
    phase: int
    msg_id: int
    message: eng.Message
    recipient: int


@dataclass
class RunReport:
    scenario: Scenario
    seed_used: int | None
    quiescent: bool
    events: int
    trace: tuple
    trace_hash: str
    histories: dict[int, History]
    accusations: dict[int, frozenset[Accusation]]
    gamma_series: tuple[int, ...]
    gamma_max: int
    k_bound: int | None
    k_bound_note: str | None
    cover: int | None
    cover_note: str | None
    verdicts: dict[str, props.Verdict] = field(default_factory=dict)
    delivered: dict[int, bytes | None] | None = None
    unexecuted_actions: tuple[int, ...] = ()


def compute_trace_hash(trace: Iterable) -> str:
    digest = hashlib.sha256()
    for record in trace:
        digest.update(json.dumps(record, separators=(",", ":")).encode())
        digest.update(b"\n")
    return digest.hexdigest()


def _payload_id(msg: eng.Message) -> str:
    if msg.tx is not None:
        return tx_ref(msg.tx).hex()
    if msg.accusation is not None:
        return accusation_digest(msg.accusation).hex()
    return ""


def _phase_of(plan: tuple[PlanRule, ...], msg: eng.Message, recipient: int) -> int:
    if msg.tx is not None:
        ref = tx_ref(msg.tx)
        for i, rule in enumerate(plan):
            if rule.tx_ref == ref and recipient in rule.recipients:
                return i
    return len(plan)


class _Runtime:
    def __init__(self, scenario: Scenario, seed: int | None, check_invariants: bool):
        self.scenario = scenario
        self.check_invariants = check_invariants
        self.scheme = make_scheme(scenario.sig_scheme)
        self.keys, self.public_keys = keychain(scenario.model.n, self.scheme, scenario.key_seed)
        self.correct = [p for p in range(scenario.model.n) if p not in scenario.faulty_set]
        self.engines: dict[int, eng.ProcessState] = {
            p: eng.initial_state(
                p,
                scenario.model.n,
                scenario.model.quorums[p],
                self.keys[p].private,
                self.public_keys,
                scenario.sig_scheme,
                scenario.genesis,
                disable_used_input_guard=scenario.disable_used_input_guard,
            )
            for p in self.correct
        }
        sched = scenario.scheduler
        self.seed_used = None
        self.rng = None
        if sched.kind == "random":
            self.seed_used = seed if seed is not None else (sched.seed or 0)
            self.rng = random.Random(self.seed_used)
        self.plan = sched.plan if sched.kind == "adversarial" else ()
        self.seq = 0
        self.msg_count = 0
        self.deliveries: list[_Delivery] = []
        self.trace: list = []
        self.executed = [False] * len(scenario.honest_actions)
        self.spends: dict[tuple[int, bytes], set[bytes]] = {}
        self.gamma = 0
        self.gamma_series: list[int] = []

    # --- emission -------------------------------------------------------

    def enqueue(self, msg: eng.Message) -> None:
        msg_id = self.msg_count
        self.msg_count += 1
        recipients = sorted(r for r in msg.recipients if r != msg.sender)
        self.trace.append(
            ("send", msg_id, msg.kind, msg.sender, tuple(recipients), _payload_id(msg))
        )
        for r in recipients:
            self.deliveries.append(
                _Delivery(self.seq, _phase_of(self.plan, msg, r), msg_id, msg, r)
            )
            self.seq += 1

    def enqueue_scripts(self) -> None:
        for send in self.scenario.scripts:
            issuer_keys = self.keys[send.tx.issuer]
            issuer_sig = self.scheme.sign(issuer_keys, encode_tx(send.tx))
            if send.kind == eng.REQ:
                msg = eng.Message(
                    kind=eng.REQ,
                    sender=send.sender,
                    recipients=send.recipients,
                    tx=send.tx,
                    issuer_sig=issuer_sig,
                )
            else:
                echo_sig = self.scheme.sign(self.keys[send.sender], encode_tx(send.tx))
                msg = eng.Message(
                    kind=eng.ECHO,
                    sender=send.sender,
                    recipients=send.recipients,
                    tx=send.tx,
                    issuer_sig=issuer_sig,
                    echoer_sig=echo_sig,
                )
            self.enqueue(msg)

    # --- effects --------------------------------------------------------

    def note_acceptances(self, pid: int, added: Iterable[Transaction]) -> tuple[str, ...]:
        refs = []
        for tx in sorted(added, key=tx_ref):
            refs.append(tx_ref(tx).hex())
            if is_genesis(tx):
                continue
            for ref in tx.inputs:
                bucket = self.spends.setdefault((tx.issuer, ref), set())
                bucket.add(tx_ref(tx))
                if len(bucket) > self.gamma:
                    self.gamma = len(bucket)
        return tuple(refs)

    def apply(self, pid: int, fn, *args) -> tuple[tuple[str, ...], tuple[str, ...]]:
        state = self.engines[pid]
        before_hist = state.history.txs
        before_acc = set(state.accusations)
        out = fn(state, *args)
        for msg in out:
            self.enqueue(msg)
        accepted = self.note_acceptances(pid, state.history.txs - before_hist)
        new_acc = tuple(
            sorted(accusation_digest(a).hex() for a in state.accusations - before_acc)
        )
        if self.check_invariants and not state.history._base_report.ok:
            raise AssertionError(f"history of {pid} left well-formedness: "
                                 f"{state.history._base_report.failures}")
        return accepted, new_acc

    # --- scheduling -----------------------------------------------------

    def enabled_actions(self) -> list[int]:
        enabled = []
        per_issuer_blocked: set[int] = set()
        for idx, (pid, tx) in enumerate(self.scenario.honest_actions):
            if self.executed[idx] or pid in per_issuer_blocked:
                continue
            if eng.can_transfer(self.engines[pid], tx):
                enabled.append(idx)
            # preserve per-issuer order: later actions wait for earlier ones
            per_issuer_blocked.add(pid)
        return enabled

    def pick(self, enabled: list[int]):
        kind = self.scenario.scheduler.kind
        if kind == "random":
            pool_size = len(enabled) + len(self.deliveries)
            choice = self.rng.randrange(pool_size)
            if choice < len(enabled):
                return ("action", enabled[choice])
            return ("deliver", choice - len(enabled))
        if enabled:
            return ("action", enabled[0])
        if kind == "adversarial":
            pos = min(range(len(self.deliveries)),
                      key=lambda i: (self.deliveries[i].phase, self.deliveries[i].seq))
        else:
            pos = min(range(len(self.deliveries)), key=lambda i: self.deliveries[i].seq)
        return ("deliver", pos)

    def step_action(self, idx: int) -> None:
        pid, tx = self.scenario.honest_actions[idx]
        accepted, new_acc = self.apply(pid, eng.transfer, tx)
        self.executed[idx] = True
        self.trace.append(("action", idx, pid, tx_ref(tx).hex(), accepted, new_acc))

    def step_delivery(self, pos: int) -> None:
        d = self.deliveries.pop(pos)
        if d.recipient in self.engines:
            accepted, new_acc = self.apply(d.recipient, eng.handle_message, d.message)
        else:
            accepted, new_acc = (), ()  # faulty recipients are script-only
        self.trace.append(
            (
                "deliver",
                d.msg_id,
                d.message.kind,
                d.message.sender,
                d.recipient,
                _payload_id(d.message),
                accepted,
                new_acc,
            )
        )


def run(scenario: Scenario, *, seed: int | None = None, check_invariants: bool = False) -> RunReport:
    """Execute a scenario to quiescence (or the event cap) and report."""
    rt = _Runtime(scenario, seed, check_invariants)
    rt.enqueue_scripts()

    events = 0
    quiescent = False
    while True:
        enabled = rt.enabled_actions()
        if not enabled and not rt.deliveries:
            quiescent = True
            break
        if events >= scenario.max_events:
            break
        what, pos = rt.pick(enabled)
        if what == "action":
            rt.step_action(pos)
        else:
            rt.step_delivery(pos)
        events += 1
        rt.gamma_series.append(rt.gamma)

    histories = {p: rt.engines[p].history for p in rt.correct}
    accusations = {p: frozenset(rt.engines[p].accusations) for p in rt.correct}

    k_bound: int | None
    k_bound_note = None
    try:
        k_bound = inconsistency_number(scenario.model)
    except SizeLimitExceeded as exc:
        k_bound = None
        k_bound_note = str(exc)

    cover = None
    cover_note = None
    if quiescent:
        try:
            cover = len(minimum_cover(histories))
        except SizeLimitExceeded as exc:
            cover_note = str(exc)
        except MalformedHistory as exc:
            cover_note = str(exc)

    delivered = None
    if scenario.kcb_source is not None:
        genesis_ref = tx_ref(scenario.genesis)
        delivered = {}
        for p in rt.correct:
            mine = [
                tx
                for tx in histories[p].txs
                if tx.issuer == scenario.kcb_source and genesis_ref in tx.inputs
            ]
            if mine:
                # the no-conflict clause keeps this at one per process
                delivered[p] = sorted(mine, key=tx_ref)[0].message

    report = RunReport(
        scenario=scenario,
        seed_used=rt.seed_used,
        quiescent=quiescent,
        events=events,
        trace=tuple(rt.trace),
        trace_hash=compute_trace_hash(rt.trace),
        histories=histories,
        accusations=accusations,
        gamma_series=tuple(rt.gamma_series),
        gamma_max=rt.gamma,
        k_bound=k_bound,
        k_bound_note=k_bound_note,
        cover=cover,
        cover_note=cover_note,
        delivered=delivered,
        unexecuted_actions=tuple(i for i, done in enumerate(rt.executed) if not done),
    )
    report.verdicts = props.evaluate_properties(report)
    return report


# --- serialization --------------------------------------------------------


def tx_to_obj(tx: Transaction) -> dict:
    return {
        "issuer": tx.issuer,
        "outputs": {str(p): a for p, a in tx.outputs},
        "inputs": [ref.hex() for ref in tx.inputs],
        "timestamp": tx.timestamp,
        "message": tx.message.hex() if tx.message is not None else None,
    }


def tx_from_obj(obj: dict) -> Transaction:
    try:
        return make_tx(
            issuer=obj["issuer"],
            outputs={int(p): a for p, a in obj.get("outputs", {}).items()},
            inputs=[bytes.fromhex(ref) for ref in obj.get("inputs", [])],
            timestamp=obj.get("timestamp"),
            message=bytes.fromhex(obj["message"]) if obj.get("message") is not None else None,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"bad transaction object: {exc}") from None


def _accusation_to_obj(acc: Accusation) -> dict:
    return {
        "accused": sorted(acc.accused),
        "proof": [{"tx": tx_to_obj(tx), "sig": sig.hex()} for tx, sig in acc.proof],
    }


def _accusation_from_obj(obj: dict) -> Accusation:
    return Accusation.build(
        obj["accused"],
        [(tx_from_obj(p["tx"]), bytes.fromhex(p["sig"])) for p in obj["proof"]],
    )


def scenario_to_obj(scenario: Scenario) -> dict:
    return {
        "name": scenario.name,
        "model": model_to_obj(scenario.model),
        "faulty": sorted(scenario.faulty_set),
        "genesis": {str(p): a for p, a in scenario.genesis.outputs},
        "sig_scheme": scenario.sig_scheme,
        "key_seed": scenario.key_seed.hex(),
        "max_events": scenario.max_events,
        "kcb_source": scenario.kcb_source,
        "disable_used_input_guard": scenario.disable_used_input_guard,
        "honest_actions": [
            {"issuer": pid, "tx": tx_to_obj(tx)} for pid, tx in scenario.honest_actions
        ],
        "scripts": [
            {
                "sender": s.sender,
                "kind": s.kind,
                "to": sorted(s.recipients),
                "tx": tx_to_obj(s.tx),
            }
            for s in scenario.scripts
        ],
        "scheduler": {
            "kind": scenario.scheduler.kind,
            "seed": scenario.scheduler.seed,
            "plan": [
                {"tx": rule.tx_ref.hex(), "to": sorted(rule.recipients)}
                for rule in scenario.scheduler.plan
            ],
        },
    }


def _resolve_ref(token, table: dict[str, bytes]) -> bytes:
    if isinstance(token, str):
        if token in table:
            return table[token]
        if len(token) == 64:
            try:
                return bytes.fromhex(token)
            except ValueError:
                pass
    raise SchemaError(f"unresolvable input reference: {token!r}")


def _tx_from_spec(spec: dict, table: dict[str, bytes], default_tm: int | None) -> Transaction:
    if not isinstance(spec, dict):
        raise SchemaError("transaction spec must be an object")
    try:
        issuer = spec["issuer"]
        outputs = {int(p): a for p, a in spec.get("outputs", {}).items()}
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"bad transaction spec: {exc}") from None
    inputs = [_resolve_ref(tok, table) for tok in spec.get("inputs", [])]
    message = spec.get("message")
    if message is not None:
        message = message.encode() if not _is_hex(message) else bytes.fromhex(message)
    tm = spec.get("tm", spec.get("timestamp", default_tm))
    try:
        return make_tx(issuer, outputs, inputs, timestamp=tm, message=message)
    except ValueError as exc:
        raise SchemaError(str(exc)) from None


def _is_hex(s: str) -> bool:
    if not isinstance(s, str) or len(s) % 2 or not s:
        return False
    try:
        bytes.fromhex(s)
    except ValueError:
        return False
    return True


def scenario_from_obj(obj: dict, *, base_dir: str = ".") -> Scenario:
    """Accepts both the authoring format (symbolic refs) and the resolved one."""
    if not isinstance(obj, dict):
        raise SchemaError("scenario file must hold a JSON object")
    if "model" in obj:
        model = parse_model(obj["model"])
    elif "model_file" in obj:
        import os

        from .trust import load_model

        model = load_model(os.path.join(base_dir, obj["model_file"]))
    else:
        raise SchemaError("scenario needs a model or model_file")

    faulty = frozenset(obj.get("faulty", []))
    genesis_outputs = obj.get("genesis", {})
    if not isinstance(genesis_outputs, dict):
        raise SchemaError("genesis must map process ids to amounts")
    genesis = genesis_tx({int(p): a for p, a in genesis_outputs.items()})

    table: dict[str, bytes] = {"genesis": tx_ref(genesis)}

    actions: list[tuple[int, Transaction]] = []
    issued_counts: dict[int, int] = {}
    for idx, spec in enumerate(obj.get("honest_actions", [])):
        body = spec.get("tx", spec) if isinstance(spec, dict) else spec
        issuer = body.get("issuer") if isinstance(body, dict) else None
        if not isinstance(issuer, int):
            raise SchemaError(f"honest action {idx} lacks an issuer")
        issued_counts[issuer] = issued_counts.get(issuer, 0) + 1
        tx = _tx_from_spec(body, table, default_tm=issued_counts[issuer])
        actions.append((issuer, tx))
        table[f"action:{idx}"] = tx_ref(tx)

    # labelled transactions for scripts; resolve to a fixpoint so labels may
    # reference each other in any order
    labelled: dict[str, Transaction] = {}
    raw_txs = obj.get("transactions", {})
    remaining = dict(raw_txs)
    while remaining:
        progressed = False
        for label in sorted(remaining):
            try:
                tx = _tx_from_spec(remaining[label], table, default_tm=1)
            except SchemaError:
                continue
            labelled[label] = tx
            table[f"tx:{label}"] = tx_ref(tx)
            table[label] = tx_ref(tx)
            del remaining[label]
            progressed = True
        if not progressed:
            raise SchemaError(f"unresolvable transaction labels: {sorted(remaining)}")

    scripts: list[ScriptedSend] = []
    raw_scripts = obj.get("scripts", {})
    if isinstance(raw_scripts, dict):
        items = [(int(pid), send) for pid in sorted(raw_scripts, key=int) for send in raw_scripts[pid]]
    else:
        items = [(send["sender"], send) for send in raw_scripts]
    for sender, send in items:
        tx_spec = send.get("tx")
        if isinstance(tx_spec, str):
            key = tx_spec[3:] if tx_spec.startswith("tx:") else tx_spec
            if key not in labelled:
                raise SchemaError(f"script references unknown transaction {tx_spec!r}")
            tx = labelled[key]
        else:
            tx = _tx_from_spec(tx_spec, table, default_tm=1)
        kind = send.get("kind")
        if kind not in (eng.REQ, eng.ECHO):
            raise SchemaError(f"script kind must be REQ or ECHO, got {kind!r}")
        scripts.append(
            ScriptedSend(
                sender=sender,
                kind=kind,
                tx=tx,
                recipients=frozenset(send.get("to", [])),
            )
        )

    sched_obj = obj.get("scheduler", {"kind": "fifo"})
    plan = tuple(
        PlanRule(tx_ref=_resolve_ref(rule["tx"], table), recipients=frozenset(rule.get("to", [])))
        for rule in sched_obj.get("plan", [])
    )
    try:
        scheduler = SchedulerSpec(
            kind=sched_obj.get("kind", "fifo"),
            seed=sched_obj.get("seed"),
            plan=plan,
        )
    except ValueError as exc:
        raise SchemaError(str(exc)) from None

    key_seed = obj.get("key_seed")
    try:
        scenario = Scenario.build(
            model=model,
            faulty_set=faulty,
            genesis=genesis,
            honest_actions=actions,
            scripts=scripts,
            scheduler=scheduler,
            max_events=obj.get("max_events", DEFAULT_MAX_EVENTS),
            sig_scheme=obj.get("sig_scheme", "ed25519"),
            key_seed=bytes.fromhex(key_seed) if key_seed else DEFAULT_KEY_SEED,
            kcb_source=obj.get("kcb_source"),
            disable_used_input_guard=bool(obj.get("disable_used_input_guard", False)),
            name=obj.get("name", ""),
        )
    except (ValueError, InvalidFaultySet) as exc:
        if isinstance(exc, InvalidFaultySet):
            raise
        raise SchemaError(str(exc)) from None

    if obj.get("byzantine") == "synthesized-multispend":
        from .attack import synthesize_multispend_attack

        synthesized = synthesize_multispend_attack(
            model,
            sig_scheme=scenario.sig_scheme,
            key_seed=scenario.key_seed,
        )
        scenario = replace(
            synthesized,
            name=scenario.name or synthesized.name,
            max_events=scenario.max_events,
        )
    return scenario


def load_scenario(path: str) -> Scenario:
    import os

    try:
        with open(path, "r", encoding="utf-8") as fh:
            obj = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise SchemaError(f"cannot read scenario {path}: {exc}") from None
    return scenario_from_obj(obj, base_dir=os.path.dirname(path) or ".")


def _tuplify(value):
    if isinstance(value, list):
        return tuple(_tuplify(v) for v in value)
    return value


def report_to_obj(report: RunReport) -> dict:
    return {
        "scenario": scenario_to_obj(report.scenario),
        "seed_used": report.seed_used,
        "quiescent": report.quiescent,
        "events": report.events,
        "trace": [list(rec) for rec in report.trace],
        "trace_hash": report.trace_hash,
        "histories": {
            str(p): [tx_to_obj(tx) for tx in sorted(h.txs, key=tx_ref)]
            for p, h in report.histories.items()
        },
        "accusations": {
            str(p): [_accusation_to_obj(a) for a in sorted(accs, key=accusation_digest)]
            for p, accs in report.accusations.items()
        },
        "gamma_series": list(report.gamma_series),
        "gamma_max": report.gamma_max,
        "k_bound": report.k_bound,
        "k_bound_note": report.k_bound_note,
        "cover": report.cover,
        "cover_note": report.cover_note,
        "verdicts": {
            name: {"status": v.status, "detail": v.detail}
            for name, v in report.verdicts.items()
        },
        "delivered": {
            str(p): (m.hex() if m is not None else None) for p, m in report.delivered.items()
        }
        if report.delivered is not None
        else None,
        "unexecuted_actions": list(report.unexecuted_actions),
    }


def report_from_obj(obj: dict) -> RunReport:
    try:
        scenario = scenario_from_obj(obj["scenario"])
        delivered_obj = obj.get("delivered")
        return RunReport(
            scenario=scenario,
            seed_used=obj.get("seed_used"),
            quiescent=obj["quiescent"],
            events=obj["events"],
            trace=_tuplify(obj["trace"]),
            trace_hash=obj["trace_hash"],
            histories={
                int(p): History.of(tx_from_obj(t) for t in txs)
                for p, txs in obj["histories"].items()
            },
            accusations={
                int(p): frozenset(_accusation_from_obj(a) for a in accs)
                for p, accs in obj["accusations"].items()
            },
            gamma_series=tuple(obj["gamma_series"]),
            gamma_max=obj["gamma_max"],
            k_bound=obj.get("k_bound"),
            k_bound_note=obj.get("k_bound_note"),
            cover=obj.get("cover"),
            cover_note=obj.get("cover_note"),
            verdicts={
                name: props.Verdict(status=v["status"], detail=v.get("detail"))
                for name, v in obj.get("verdicts", {}).items()
            },
            delivered={
                int(p): (bytes.fromhex(m) if m is not None else None)
                for p, m in delivered_obj.items()
            }
            if delivered_obj is not None
            else None,
            unexecuted_actions=tuple(obj.get("unexecuted_actions", [])),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"bad report object: {exc}") from None
