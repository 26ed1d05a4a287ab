import dataclasses
import json
import random

import pytest

from kspend import fuzz
from kspend.errors import InvalidFaultySet, SchemaError
from kspend.ledger import genesis_tx, make_tx, spending_number, tx_ref
from kspend.sim import (
    PlanRule,
    Scenario,
    SchedulerSpec,
    ScriptedSend,
    compute_trace_hash,
    load_scenario,
    report_from_obj,
    report_to_obj,
    run,
    scenario_from_obj,
    scenario_to_obj,
)
from kspend.trust import TrustModel, model_to_obj, uniform_model


def all_trust(n=3):
    full = [list(range(n))]
    return TrustModel.build(n, [full] * n, [[]])


def simple_scenario(**kw):
    model = all_trust()
    genesis = genesis_tx({p: 10 for p in range(3)})
    tx = make_tx(0, {1: 10}, [tx_ref(genesis)], timestamp=1)
    base = dict(model=model, faulty_set=(), genesis=genesis,
                honest_actions=((0, tx),), sig_scheme="hmac")
    base.update(kw)
    return Scenario.build(**base)


# --- scenario validation ---------------------------------------------------


def test_scenario_build_validates():
    model = all_trust()
    genesis = genesis_tx({0: 10})
    tx = make_tx(0, {1: 10}, [tx_ref(genesis)], timestamp=1)

    with pytest.raises(InvalidFaultySet):
        Scenario.build(model=model, faulty_set={1}, genesis=genesis)
    with pytest.raises(ValueError):
        Scenario.build(model=model, faulty_set=(), genesis=tx)  # not a funding root
    with pytest.raises(ValueError):
        Scenario.build(model=model, faulty_set=(), genesis=genesis,
                       honest_actions=((1, tx),))  # issuer mismatch

    faulty_model = uniform_model(3, 2, 1)
    with pytest.raises(ValueError):
        # declared-faulty process cannot act honestly
        Scenario.build(model=faulty_model, faulty_set={0}, genesis=genesis,
                       honest_actions=((0, tx),))
    with pytest.raises(ValueError):
        # script sender must be faulty
        Scenario.build(model=faulty_model, faulty_set={0}, genesis=genesis,
                       scripts=(ScriptedSend(1, "REQ", tx, frozenset({2})),))
    faulty_tx = make_tx(1, {0: 10}, [tx_ref(genesis)], timestamp=1)
    with pytest.raises(ValueError):
        # scripted transactions may not impersonate correct processes
        Scenario.build(model=faulty_model, faulty_set={0}, genesis=genesis,
                       scripts=(ScriptedSend(0, "REQ", faulty_tx, frozenset({2})),))
    bad_kind_tx = make_tx(0, {0: 10}, [tx_ref(genesis)], timestamp=1)
    with pytest.raises(ValueError):
        Scenario.build(model=faulty_model, faulty_set={0}, genesis=genesis,
                       scripts=(ScriptedSend(0, "ACC", bad_kind_tx, frozenset({2})),))


def test_scheduler_spec_validates_kind():
    with pytest.raises(ValueError):
        SchedulerSpec("round-robin")


# --- execution -------------------------------------------------------------


def test_honest_run_reaches_everyone():
    report = run(simple_scenario())
    assert report.quiescent
    tx = report.scenario.honest_actions[0][1]
    for p in range(3):
        assert tx in report.histories[p].txs
    assert report.gamma_max == 1
    assert report.cover == 1
    assert all(v.status == "holds" for v in report.verdicts.values())
    assert report.unexecuted_actions == ()


def test_gamma_series_tracks_events_monotonically():
    report = run(simple_scenario())
    assert len(report.gamma_series) == report.events
    assert list(report.gamma_series) == sorted(report.gamma_series)
    assert report.gamma_series[-1] == report.gamma_max
    assert report.gamma_max == spending_number(report.histories)


def test_unfundable_action_stays_unexecuted():
    ghost = make_tx(0, {1: 1}, [b"\x42" * 32], timestamp=1)
    scenario = simple_scenario(honest_actions=((0, ghost),))
    report = run(scenario)
    assert report.quiescent
    assert report.unexecuted_actions == (0,)
    assert report.verdicts["validity"].status == "holds"  # never executed, nothing owed


def test_event_cap_reports_nonquiescent():
    report = run(simple_scenario(max_events=2))
    assert not report.quiescent and report.events == 2
    for name in ("validity", "termination", "agreement", "eventual-conviction"):
        assert report.verdicts[name].status == "vacuous"
    assert report.verdicts["k-spending"].status == "holds"


def test_per_issuer_actions_execute_in_listed_order():
    model = all_trust()
    genesis = genesis_tx({0: 10})
    first = make_tx(0, {0: 4, 1: 6}, [tx_ref(genesis)], timestamp=1)
    second = make_tx(0, {2: 4}, [tx_ref(first)], timestamp=2)
    scenario = Scenario.build(
        model=model, faulty_set=(), genesis=genesis,
        honest_actions=((0, first), (0, second)),
        sig_scheme="hmac",
    )
    report = run(scenario)
    assert report.quiescent and report.unexecuted_actions == ()
    order = [rec[1] for rec in report.trace if rec[0] == "action"]
    assert order == [0, 1]
    assert report.gamma_max == 1

    # listing the dependent one first wedges the issuer: later actions never
    # jump the queue, so the pair sits unexecuted and the run still drains
    wedged = Scenario.build(
        model=model, faulty_set=(), genesis=genesis,
        honest_actions=((0, second), (0, first)),
        sig_scheme="hmac",
    )
    wedged_report = run(wedged)
    assert wedged_report.quiescent
    assert wedged_report.unexecuted_actions == (0, 1)


def test_determinism_across_scheduler_kinds():
    rng = random.Random(40)
    base = fuzz.random_scenario(rng)
    for kind in ("fifo", "random", "adversarial"):
        scenario = dataclasses.replace(base, scheduler=SchedulerSpec(kind, seed=3))
        hashes = {run(scenario, seed=5).trace_hash for _ in range(3)}
        assert len(hashes) == 1, kind


def test_random_seed_priority():
    scenario = simple_scenario(scheduler=SchedulerSpec("random", seed=9))
    assert run(scenario).seed_used == 9
    assert run(scenario, seed=4).seed_used == 4
    assert run(simple_scenario(scheduler=SchedulerSpec("random"))).seed_used == 0


def test_reliable_delivery_between_correct_processes():
    rng = random.Random(77)
    for i in range(5):
        report = run(fuzz.random_scenario(rng), seed=i)
        if not report.quiescent:
            continue
        correct = set(report.histories)
        expected = set()
        for rec in report.trace:
            if rec[0] == "send" and rec[3] in correct:
                expected.update((rec[1], r) for r in rec[4] if r in correct)
        delivered = [
            (rec[1], rec[4])
            for rec in report.trace
            if rec[0] == "deliver" and rec[3] in correct and rec[4] in correct
        ]
        assert len(delivered) == len(set(delivered))  # exactly once
        assert set(delivered) == expected


def test_adversarial_plan_orders_phases_first():
    # same funding root the helper builds, so the action's input resolves
    genesis = genesis_tx({p: 10 for p in range(3)})
    tx = make_tx(0, {1: 10}, [tx_ref(genesis)], timestamp=1)
    plan = (PlanRule(tx_ref(tx), frozenset({2})),)
    scenario = simple_scenario(
        honest_actions=((0, tx),),
        scheduler=SchedulerSpec("adversarial", plan=plan),
    )
    report = run(scenario)
    deliveries = [rec for rec in report.trace if rec[0] == "deliver"]
    # the planned (tx -> 2) delivery outruns the unplanned ones
    assert deliveries[0][4] == 2 and deliveries[0][5] == tx_ref(tx).hex()
    assert report.quiescent


# --- serialization ---------------------------------------------------------


def test_scenario_roundtrip_through_json():
    rng = random.Random(8)
    for _ in range(10):
        scenario = fuzz.random_scenario(rng)
        obj = json.loads(json.dumps(scenario_to_obj(scenario)))
        assert scenario_from_obj(obj) == scenario


def test_report_roundtrip_through_json():
    rng = random.Random(9)
    scenario = fuzz.random_scenario(rng)
    report = run(scenario, seed=1)
    clone = report_from_obj(json.loads(json.dumps(report_to_obj(report))))
    assert clone.trace == report.trace
    assert clone.trace_hash == compute_trace_hash(clone.trace)
    assert clone.histories == report.histories
    assert clone.accusations == report.accusations
    assert clone.verdicts == report.verdicts
    assert clone.scenario == report.scenario
    assert clone.gamma_series == report.gamma_series


def test_authoring_format_symbolic_references(tmp_path):
    model_file = tmp_path / "model.json"
    model_file.write_text(json.dumps(model_to_obj(all_trust())))
    obj = {
        "model_file": "model.json",
        "faulty": [],
        "genesis": {"0": 10, "1": 2},
        "sig_scheme": "hmac",
        "honest_actions": [
            {"issuer": 0, "outputs": {"1": 4, "0": 6}, "inputs": ["genesis"]},
            {"issuer": 0, "outputs": {"2": 6}, "inputs": ["action:0"]},
            {"issuer": 1, "outputs": {"0": 2}, "inputs": ["genesis"]},
        ],
    }
    path = tmp_path / "scenario.json"
    path.write_text(json.dumps(obj))
    scenario = load_scenario(str(path))
    assert scenario.honest_actions[0][1].timestamp == 1
    assert scenario.honest_actions[1][1].timestamp == 2  # same issuer, auto-chained
    assert scenario.honest_actions[2][1].timestamp == 1
    ref = tx_ref(scenario.honest_actions[0][1])
    assert scenario.honest_actions[1][1].inputs == (ref,)
    report = run(scenario)
    assert report.quiescent and report.gamma_max == 1


def test_authoring_format_labelled_scripts():
    model = uniform_model(3, 2, 1)
    obj = {
        "model": model_to_obj(model),
        "faulty": [0],
        "genesis": {"0": 1},
        "sig_scheme": "hmac",
        "transactions": {
            "a": {"issuer": 0, "outputs": {"1": 1}, "inputs": ["genesis"]},
            "b": {"issuer": 0, "outputs": {"2": 1}, "inputs": ["genesis"]},
            "chain": {"issuer": 0, "outputs": {"1": 1}, "inputs": ["tx:a"], "tm": 2},
        },
        "scripts": {
            "0": [
                {"kind": "REQ", "tx": "a", "to": [1]},
                {"kind": "REQ", "tx": "tx:b", "to": [2]},
                {"kind": "ECHO", "tx": "chain", "to": [1, 2]},
            ]
        },
        "scheduler": {"kind": "adversarial", "plan": [{"tx": "a", "to": [1]}]},
    }
    scenario = scenario_from_obj(obj)
    assert len(scenario.scripts) == 3
    assert scenario.scripts[0].tx.outputs == ((1, 1),)
    assert scenario.scripts[2].tx.inputs == (tx_ref(scenario.scripts[0].tx),)
    assert scenario.scheduler.plan[0].tx_ref == tx_ref(scenario.scripts[0].tx)
    hex_ref = tx_ref(scenario.scripts[0].tx).hex()
    obj2 = dict(obj, scripts=[{"sender": 0, "kind": "REQ", "to": [1],
                               "tx": {"issuer": 0, "outputs": {"1": 1},
                                      "inputs": [hex_ref], "tm": 2}}])
    del obj2["scheduler"]
    scenario2 = scenario_from_obj(obj2)
    assert scenario2.scripts[0].tx.inputs == (bytes.fromhex(hex_ref),)


@pytest.mark.parametrize(
    "mutate",
    [
        lambda o: o.pop("model"),
        lambda o: o.update(genesis=[1, 2]),
        lambda o: o["scripts"]["0"].append({"kind": "REQ", "tx": "missing", "to": [1]}),
        lambda o: o["scripts"]["0"].append({"kind": "NOPE", "tx": "a", "to": [1]}),
        lambda o: o["transactions"].update(
            loop={"issuer": 0, "outputs": {"1": 1}, "inputs": ["loop"]}
        ),
        lambda o: o["honest_actions"].append({"outputs": {"1": 1}}),
    ],
)
def test_scenario_schema_errors(mutate):
    model = uniform_model(3, 2, 1)
    obj = {
        "model": model_to_obj(model),
        "faulty": [0],
        "genesis": {"0": 1},
        "honest_actions": [],
        "transactions": {"a": {"issuer": 0, "outputs": {"1": 1}, "inputs": ["genesis"]}},
        "scripts": {"0": [{"kind": "REQ", "tx": "a", "to": [1]}]},
    }
    mutate(obj)
    with pytest.raises(SchemaError):
        scenario_from_obj(obj)


def test_load_scenario_bad_file(tmp_path):
    with pytest.raises(SchemaError):
        load_scenario(str(tmp_path / "missing.json"))
    garbled = tmp_path / "bad.json"
    garbled.write_text("{not json")
    with pytest.raises(SchemaError):
        load_scenario(str(garbled))


def test_synthesized_tag_expands_to_attack(example1):
    obj = {
        "model": model_to_obj(example1),
        "faulty": [2],
        "genesis": {},
        "byzantine": "synthesized-multispend",
        "name": "tagged",
        "max_events": 500,
    }
    scenario = scenario_from_obj(obj)
    assert scenario.name == "tagged"
    assert scenario.max_events == 500
    assert scenario.scripts and scenario.kcb_source is not None
    report = run(scenario)
    assert report.gamma_max == 2


def test_trace_hash_sensitivity():
    report = run(simple_scenario())
    assert compute_trace_hash(report.trace) == report.trace_hash
    reversed_hash = compute_trace_hash(tuple(reversed(report.trace)))
    assert reversed_hash != report.trace_hash


def test_overdrawing_action_never_enables():
    model = all_trust()
    genesis = genesis_tx({0: 10})
    overdraw = make_tx(0, {1: 99}, [tx_ref(genesis)], timestamp=1)
    scenario = Scenario.build(model=model, faulty_set=(), genesis=genesis,
                              honest_actions=((0, overdraw),), sig_scheme="hmac")
    report = run(scenario)
    assert report.quiescent and report.unexecuted_actions == (0,)
    assert all(len(h.txs) == 1 for h in report.histories.values())
