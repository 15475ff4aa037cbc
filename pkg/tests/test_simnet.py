import json

import pytest
from hypothesis import given, settings, strategies as st

from gkdsim.adversary import ChannelAction, Interceptor
from gkdsim.algebra import Variant, domain_new
from gkdsim.errors import ConfigError, GkdError, MalformedTranscript
from gkdsim.protocol import ChallengeMessage
from gkdsim.simnet import (
    ScenarioConfig,
    Transcript,
    parse_broadcast_payload,
    roster_payload,
    parse_roster_payload,
    run_scenario,
    verify_transcript,
)
from conftest import scenario_dict


def run(**overrides):
    return run_scenario(ScenarioConfig.from_dict(scenario_dict(**overrides)))


# --- honest runs -----------------------------------------------------------------

def test_honest_run_all_accept_the_same_key():
    tr = run()
    assert all(oc.status == "accepted" for oc in tr.outcomes)
    keys = {oc.key for oc in tr.outcomes}
    assert keys == {tr.ground_truth.group_key}


def test_honest_event_steps_appear_once():
    tr = run()
    steps = [ev.step for ev in tr.events]
    assert steps == ["request", "announce", "challenge", "challenge", "challenge", "broadcast"]
    assert all(ev.verdict == "delivered" for ev in tr.events)


def test_explicit_keys_are_reduced_mod_m():
    tr = run(keys={"alice": 29893 + 5})
    assert tr.ground_truth.member_keys["alice"] == 5


def test_initiator_defaults_to_first_member():
    tr = run()
    assert tr.meta["initiator"] == "alice"
    assert tr.events[0].sender == "alice"
    tr = run(initiator="carol")
    assert tr.events[0].sender == "carol"


def test_field_variant_with_generated_modulus():
    tr = run(variant="field", modulus={"bits": 32}, members=["a", "b"])
    assert tr.meta["q"] is None
    assert tr.meta["modulus"] == tr.meta["p"]
    assert all(oc.status == "accepted" for oc in tr.outcomes)


# --- attack runs -----------------------------------------------------------------

def test_forge_run_plants_the_target_key():
    tr = run(adversary={"attacker": "carol", "victim": "bob", "target_key": "random"})
    gt = tr.ground_truth
    by_member = {oc.member: oc for oc in tr.outcomes}
    assert gt.adversary.recovered_key == gt.group_key
    assert gt.adversary.target_key != gt.group_key
    assert by_member["bob"].key == gt.adversary.target_key
    assert by_member["alice"].key == gt.group_key
    assert by_member["carol"].key == gt.group_key
    assert [ev.verdict for ev in tr.events].count("replaced") == 1


def test_forge_run_with_explicit_target():
    tr = run(adversary={"attacker": "alice", "victim": "carol", "target_key": 1234})
    assert tr.ground_truth.adversary.target_key == 1234
    by_member = {oc.member: oc for oc in tr.outcomes}
    assert by_member["carol"].key == 1234


def test_suppress_run_times_the_victim_out():
    tr = run(adversary={"attacker": "carol", "victim": "bob", "action": "suppress"})
    by_member = {oc.member: oc for oc in tr.outcomes}
    assert by_member["bob"].status == "timeout"
    assert by_member["alice"].status == by_member["carol"].status == "accepted"
    verdicts = [ev.verdict for ev in tr.events]
    assert verdicts.count("dropped") == 1 and verdicts.count("replaced") == 0


def test_forged_event_carries_both_payloads():
    tr = run(adversary={"attacker": "carol", "victim": "bob", "target_key": "random"})
    replaced = [ev for ev in tr.events if ev.verdict == "replaced"]
    assert len(replaced) == 1
    ev = replaced[0]
    assert ev.receivers == ("bob",)
    assert ev.delivered_payload is not None and ev.delivered_payload != ev.payload
    honest = [e for e in tr.events if e.step == "broadcast" and e.verdict == "delivered"]
    assert honest[0].payload == ev.payload


def test_attacker_copy_lands_before_the_victims():
    tr = run(adversary={"attacker": "carol", "victim": "bob", "target_key": "random"})
    bcast_events = [ev for ev in tr.events if ev.step == "broadcast"]
    assert "carol" in bcast_events[0].receivers
    assert bcast_events[-1].receivers == ("bob",)


# --- determinism ------------------------------------------------------------------

def test_same_config_same_bytes(tmp_path):
    cfg = ScenarioConfig.from_dict(scenario_dict(seed=99))
    a, b = run_scenario(cfg), run_scenario(cfg)
    assert a.to_jsonl() == b.to_jsonl()
    p1, p2 = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    a.save(p1)
    b.save(p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_different_seeds_differ():
    a = run(seed=1)
    b = run(seed=2)
    assert a.to_jsonl() != b.to_jsonl()


def test_transcript_file_round_trip(tmp_path):
    tr = run(adversary={"attacker": "carol", "victim": "bob", "target_key": "random"})
    path = tmp_path / "t.jsonl"
    tr.save(path)
    loaded = Transcript.load(path)
    assert loaded == tr
    assert loaded.to_jsonl() == tr.to_jsonl()


# --- verification ------------------------------------------------------------------

def test_verify_clean_on_fresh_transcripts():
    for adv in (
        None,
        {"attacker": "carol", "victim": "bob", "target_key": "random"},
        {"attacker": "carol", "victim": "bob", "action": "suppress"},
    ):
        report = verify_transcript(run(adversary=adv))
        assert report.ok, report.mismatches


def test_verify_confirms_forgery_relation():
    tr = run(adversary={"attacker": "carol", "victim": "bob", "target_key": "random"})
    report = verify_transcript(tr)
    assert any("share shift equals key shift" in c for c in report.checks)
    assert any("exactly the victim's share and the tag" in c for c in report.checks)


def _edit_payload_byte(tr: Transcript, event_index: int) -> Transcript:
    """Flip the low bit of the last payload byte of one event, via the file form."""
    lines = tr.to_jsonl().splitlines()
    rec = json.loads(lines[1 + event_index])  # meta is line 0
    assert rec["record"] == "event" and rec["index"] == event_index
    raw = bytearray(bytes.fromhex(rec["payload"]))
    raw[-1] ^= 1
    rec["payload"] = raw.hex()
    lines[1 + event_index] = json.dumps(rec, sort_keys=True, separators=(",", ":"))
    return Transcript.from_jsonl("\n".join(lines) + "\n")


@pytest.mark.parametrize("event_index", [0, 1, 2, 4, 5])
def test_verify_flags_edited_payload_at_the_exact_event(event_index):
    tr = run()
    tampered = _edit_payload_byte(tr, event_index)
    report = verify_transcript(tampered)
    assert not report.ok
    assert any(f"event {event_index}" in m for m in report.mismatches), report.mismatches


def test_verify_flags_edited_outcome():
    tr = run()
    lines = tr.to_jsonl().splitlines()
    idx = next(i for i, l in enumerate(lines) if '"record":"outcome"' in l)
    rec = json.loads(lines[idx])
    rec["key"] = (rec["key"] + 1) % tr.meta["modulus"]
    lines[idx] = json.dumps(rec, sort_keys=True, separators=(",", ":"))
    report = verify_transcript(Transcript.from_jsonl("\n".join(lines) + "\n"))
    assert not report.ok
    assert any("outcome" in m for m in report.mismatches)


def test_verify_flags_edited_ground_truth():
    tr = run()
    lines = tr.to_jsonl().splitlines()
    rec = json.loads(lines[-1])
    assert rec["record"] == "ground_truth"
    rec["group_key"] = (rec["group_key"] + 1) % tr.meta["modulus"]
    lines[-1] = json.dumps(rec, sort_keys=True, separators=(",", ":"))
    report = verify_transcript(Transcript.from_jsonl("\n".join(lines) + "\n"))
    assert not report.ok


def test_malformed_transcripts_raise():
    tr = run()
    text = tr.to_jsonl()
    with pytest.raises(MalformedTranscript):
        Transcript.from_jsonl("not json\n")
    with pytest.raises(MalformedTranscript):
        Transcript.from_jsonl(text.replace('"record":"meta"', '"record":"mystery"'))
    with pytest.raises(MalformedTranscript):
        # drop the meta line entirely
        Transcript.from_jsonl("\n".join(text.splitlines()[1:]) + "\n")
    # structurally parseable but missing a challenge event
    lines = [l for l in text.splitlines() if '"step":"challenge"' not in l or '"sender":"bob"' not in l]
    with pytest.raises(MalformedTranscript):
        verify_transcript(Transcript.from_jsonl("\n".join(lines) + "\n"))


def test_verify_flags_stripped_adversary_truth():
    tr = run(adversary={"attacker": "carol", "victim": "bob", "target_key": "random"})
    lines = tr.to_jsonl().splitlines()
    rec = json.loads(lines[-1])
    assert rec["record"] == "ground_truth"
    rec["adversary"] = None
    lines[-1] = json.dumps(rec, sort_keys=True, separators=(",", ":"))
    report = verify_transcript(Transcript.from_jsonl("\n".join(lines) + "\n"))
    assert not report.ok
    assert any("inconsistent with meta" in m for m in report.mismatches)


def test_verify_flags_renamed_adversary_victim():
    tr = run(adversary={"attacker": "carol", "victim": "bob", "target_key": "random"})
    lines = tr.to_jsonl().splitlines()
    rec = json.loads(lines[-1])
    rec["adversary"]["victim"] = "mallory"
    lines[-1] = json.dumps(rec, sort_keys=True, separators=(",", ":"))
    report = verify_transcript(Transcript.from_jsonl("\n".join(lines) + "\n"))
    assert not report.ok


def test_redacted_transcript_skips_recomputation():
    tr = run(redact=True, adversary={"attacker": "carol", "victim": "bob", "target_key": "random"})
    assert tr.ground_truth is None
    assert '"record":"ground_truth"' not in tr.to_jsonl()
    report = verify_transcript(tr)
    assert report.ok
    assert report.skipped and "redacted" in report.skipped[0]


# --- config validation ---------------------------------------------------------------

@pytest.mark.parametrize(
    "overrides",
    [
        {"members": ["solo"]},
        {"members": ["a", "a"]},
        {"members": ["alice", "kgc"]},
        {"variant": "banana"},
        {"seed": -4},
        {"modulus": {"p": 167}},            # ring without q
        {"modulus": {"p": 167, "q": 179, "bits": 8}},
        {"modulus": {}},
        {"modulus": {"bits": 2}},
        {"initiator": "mallory"},
        {"keys": {"mallory": 4}},
        {"keys": {"alice": -1}},
        {"adversary": {"attacker": "alice", "victim": "alice"}},
        {"adversary": {"attacker": "alice", "victim": "zoe"}},
        {"adversary": {"attacker": "alice", "victim": "bob", "action": "meddle"}},
        {"adversary": {"attacker": "alice", "victim": "bob", "action": "suppress", "target_key": 3}},
        {"id_width": 0},
        {"hash": {"algorithm": "nope"}},
        {"surprise": True},
    ],
)
def test_config_rejections(overrides):
    with pytest.raises(ConfigError):
        ScenarioConfig.from_dict(scenario_dict(**overrides))


def test_config_rejects_field_variant_with_q():
    with pytest.raises(ConfigError):
        ScenarioConfig.from_dict(
            scenario_dict(variant="field", modulus={"p": 23, "q": 29})
        )


def test_config_rejects_composite_primes_at_run():
    cfg = ScenarioConfig.from_dict(scenario_dict(modulus={"p": 6, "q": 7}))
    with pytest.raises(ConfigError):
        run_scenario(cfg)


def test_config_rejects_member_name_longer_than_id_width():
    with pytest.raises(ConfigError):
        ScenarioConfig.from_dict(scenario_dict(members=["x" * 17, "bob"]))


def test_config_file_round_trip(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(scenario_dict()))
    cfg = ScenarioConfig.from_file(path)
    assert cfg.members == ("alice", "bob", "carol")
    with pytest.raises(ConfigError):
        ScenarioConfig.from_file(tmp_path / "missing.json")
    path.write_text("{broken")
    with pytest.raises(ConfigError):
        ScenarioConfig.from_file(path)


# --- frozen transcript format ----------------------------------------------------------

GOLDEN_CONFIG = {
    "variant": "ring",
    "modulus": {"p": 5, "q": 7},
    "members": ["ann", "bob"],
    "keys": {"ann": 2, "bob": 3},
    "seed": 0,
}


def _golden_path(name):
    from pathlib import Path

    return Path(__file__).parent / "golden" / name


def test_golden_honest_transcript_bytes_frozen():
    tr = run_scenario(ScenarioConfig.from_dict(GOLDEN_CONFIG))
    assert tr.to_jsonl() == _golden_path("honest-ring35.jsonl").read_text()


def test_golden_attack_transcript_bytes_frozen():
    cfg = dict(GOLDEN_CONFIG)
    cfg["adversary"] = {"attacker": "bob", "victim": "ann", "target_key": 9}
    tr = run_scenario(ScenarioConfig.from_dict(cfg))
    assert tr.to_jsonl() == _golden_path("attack-ring35.jsonl").read_text()


def test_golden_transcripts_verify_clean():
    for name in ("honest-ring35.jsonl", "attack-ring35.jsonl"):
        report = verify_transcript(Transcript.load(_golden_path(name)))
        assert report.ok, (name, report.mismatches)


def test_golden_attack_values_match_hand_arithmetic():
    """Every intermediate of the m=35 attack run, recomputed by hand.

    With keys ann=2, bob=3 and seed-0 draws (challenges 2 and 31, nonce 31,
    group key 4): shares are <(1,2,4),(31,2,31)> = 159 = 19 and
    <(1,3,9),(31,2,31)> = 316 = 1 mod 35, so the masked shares are 20 and 3;
    the forgery shifts ann's share by (9 - 4) to 25, and ann unmasks
    25 + 19 = 44 = 9 mod 35.
    """
    cfg = dict(GOLDEN_CONFIG)
    cfg["adversary"] = {"attacker": "bob", "victim": "ann", "target_key": 9}
    tr = run_scenario(ScenarioConfig.from_dict(cfg))
    gt = tr.ground_truth
    assert gt.challenges == {"ann": 2, "bob": 31}
    assert gt.r0 == 31 and gt.group_key == 4
    ctx = domain_new(5, 7, variant=Variant.RING)
    honest_ev = next(e for e in tr.events if e.step == "broadcast" and e.verdict == "delivered")
    forged_ev = next(e for e in tr.events if e.verdict == "replaced")
    honest = parse_broadcast_payload(honest_ev.payload, ctx, 32, 2)
    forged = parse_broadcast_payload(forged_ev.delivered_payload, ctx, 32, 2)
    assert honest.masked_shares == (20, 3)
    assert forged.masked_shares == (25, 3)
    by_member = {oc.member: oc for oc in tr.outcomes}
    assert by_member["ann"].key == 9
    assert by_member["bob"].key == 4


# --- wire helpers ----------------------------------------------------------------------

def test_roster_payload_round_trip():
    ids = (b"alice", b"bob")
    assert parse_roster_payload(roster_payload(ids, 8), 8) == ids


def test_parse_broadcast_payload_length_check(ring35):
    with pytest.raises(MalformedTranscript):
        parse_broadcast_payload(b"\x00" * 10, ring35, 32, 2)


# --- interceptor contract at the network layer ------------------------------------------

def test_replacement_must_be_same_message_kind():
    from gkdsim.protocol import KgcBroadcast
    from gkdsim.simnet import _Network

    class KindBreaker(Interceptor):
        def intercept(self, sender, receiver, message):
            return ChannelAction.replace(ChallengeMessage(b"bob", 1))

    net = _Network(domain_new(5, 7, variant=Variant.RING), 16)
    net.control_link("kgc", "bob", KindBreaker())
    with pytest.raises(GkdError):
        net.send(
            "broadcast", "kgc", ("bob",),
            KgcBroadcast(b"\x00" * 32, 1, (2, 3)), lambda r, m: None,
        )


@given(seed=st.integers(min_value=0, max_value=2**32))
@settings(max_examples=15, deadline=None)
def test_replay_soundness_random_configs(seed):
    tr = run(
        seed=seed,
        adversary=(
            None if seed % 2 == 0
            else {"attacker": "alice", "victim": "carol", "target_key": "random"}
        ),
    )
    assert verify_transcript(tr).ok
