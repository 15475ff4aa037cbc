import json

from gkdsim.algebra import is_prime
from gkdsim.cli import EXIT_CONFIG, EXIT_OK, EXIT_SCENARIO, EXIT_VERIFY, main
from conftest import scenario_dict


def write_config(tmp_path, name="cfg.json", **overrides):
    path = tmp_path / name
    path.write_text(json.dumps(scenario_dict(**overrides)))
    return path


# --- gen-params -----------------------------------------------------------------

def test_gen_params_three_bit_ring(tmp_path, capsys):
    out = tmp_path / "params.json"
    code = main(["gen-params", "--bits", "3", "--variant", "ring", "--seed", "4", "--out", str(out)])
    assert code == EXIT_OK
    rec = json.loads(out.read_text())
    assert {rec["p"], rec["q"]} <= {5, 7}
    assert rec["p"] != rec["q"]
    assert rec["modulus"] == 35
    assert "fingerprint" in capsys.readouterr().out


def test_gen_params_five_bit_field(tmp_path):
    out = tmp_path / "params.json"
    assert main(["gen-params", "--bits", "5", "--variant", "field", "--out", str(out)]) == EXIT_OK
    rec = json.loads(out.read_text())
    assert rec["p"] == 23 and rec["q"] is None and rec["modulus"] == 23


def test_gen_params_64_bit_survives_verify(tmp_path, capsys):
    out = tmp_path / "params.json"
    assert main(["gen-params", "--bits", "64", "--variant", "ring", "--seed", "8", "--out", str(out)]) == EXIT_OK
    rec = json.loads(out.read_text())
    assert is_prime(rec["p"]) and is_prime(rec["q"])
    assert main(["verify", str(out)]) == EXIT_OK
    assert "re-checked" in capsys.readouterr().out


def test_gen_params_bits_too_small(tmp_path, capsys):
    out = tmp_path / "params.json"
    assert main(["gen-params", "--bits", "2", "--variant", "ring", "--out", str(out)]) == EXIT_CONFIG
    assert "error" in capsys.readouterr().err


def test_gen_params_deterministic(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    main(["gen-params", "--bits", "16", "--variant", "ring", "--seed", "3", "--out", str(a)])
    main(["gen-params", "--bits", "16", "--variant", "ring", "--seed", "3", "--out", str(b)])
    assert a.read_bytes() == b.read_bytes()


def test_verify_flags_doctored_params(tmp_path, capsys):
    out = tmp_path / "params.json"
    main(["gen-params", "--bits", "5", "--variant", "field", "--out", str(out)])
    rec = json.loads(out.read_text())
    rec["p"] = 21  # composite
    out.write_text(json.dumps(rec))
    assert main(["verify", str(out)]) == EXIT_VERIFY
    assert "re-check failed" in capsys.readouterr().err


# --- run ------------------------------------------------------------------------

def test_run_honest_demo(tmp_path, capsys):
    cfg = write_config(tmp_path)
    out = tmp_path / "t.jsonl"
    assert main(["run", str(cfg), "--out", str(out)]) == EXIT_OK
    stdout = capsys.readouterr().out
    assert stdout.count("accepted key") == 3
    assert "all members accepted the same key" in stdout
    assert out.exists()


def test_run_attack_demo(tmp_path, capsys):
    cfg = write_config(
        tmp_path, adversary={"attacker": "carol", "victim": "bob", "target_key": "random"}
    )
    assert main(["run", str(cfg), "--out", str(tmp_path / "t.jsonl")]) == EXIT_OK
    stdout = capsys.readouterr().out
    assert "victim accepted forged key; honest key differs" in stdout


def test_run_suppress_demo(tmp_path, capsys):
    cfg = write_config(
        tmp_path, adversary={"attacker": "carol", "victim": "bob", "action": "suppress"}
    )
    assert main(["run", str(cfg), "--out", str(tmp_path / "t.jsonl")]) == EXIT_OK
    assert "victim timed out" in capsys.readouterr().out


def test_run_rejects_single_member_roster(tmp_path, capsys):
    cfg = write_config(tmp_path, members=["solo"])
    assert main(["run", str(cfg)]) == EXIT_CONFIG
    assert "error" in capsys.readouterr().err


def test_run_rejects_missing_config(tmp_path, capsys):
    assert main(["run", str(tmp_path / "nope.json")]) == EXIT_CONFIG


def test_run_seed_override_changes_transcript(tmp_path):
    cfg = write_config(tmp_path)
    a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    main(["run", str(cfg), "--out", str(a)])
    main(["run", str(cfg), "--out", str(b), "--seed", "12345"])
    assert a.read_bytes() != b.read_bytes()


def test_run_default_transcript_path(tmp_path, capsys):
    cfg = write_config(tmp_path)
    assert main(["run", str(cfg)]) == EXIT_OK
    assert (tmp_path / "cfg.transcript.jsonl").exists()


def test_run_verbose_prints_events(tmp_path, capsys):
    cfg = write_config(tmp_path)
    main(["run", str(cfg), "--out", str(tmp_path / "t.jsonl"), "-v"])
    stdout = capsys.readouterr().out
    assert "request" in stdout and "broadcast" in stdout


def test_run_reports_scenario_failure(tmp_path, capsys, monkeypatch):
    # force an impossible outcome to exercise the exit-4 path
    import gkdsim.cli as cli_mod

    cfg = write_config(tmp_path)
    real = cli_mod.run_scenario

    def sabotage(config):
        tr = real(config)
        doctored = tuple(
            type(oc)(member=oc.member, status="rejected", key=None, reason="tag_mismatch")
            for oc in tr.outcomes
        )
        return type(tr)(
            meta=tr.meta, events=tr.events, outcomes=doctored, ground_truth=tr.ground_truth
        )

    monkeypatch.setattr(cli_mod, "run_scenario", sabotage)
    assert main(["run", str(cfg), "--out", str(tmp_path / "t.jsonl")]) == EXIT_SCENARIO
    assert "did not meet" in capsys.readouterr().err


# --- verify ----------------------------------------------------------------------

def test_verify_fresh_transcript(tmp_path, capsys):
    cfg = write_config(tmp_path)
    out = tmp_path / "t.jsonl"
    main(["run", str(cfg), "--out", str(out)])
    capsys.readouterr()
    assert main(["verify", str(out)]) == EXIT_OK
    assert "no mismatches" in capsys.readouterr().out


def test_verify_attack_transcript_prints_relation(tmp_path, capsys):
    cfg = write_config(
        tmp_path, adversary={"attacker": "alice", "victim": "carol", "target_key": "random"}
    )
    out = tmp_path / "t.jsonl"
    main(["run", str(cfg), "--out", str(out)])
    capsys.readouterr()
    assert main(["verify", str(out)]) == EXIT_OK
    stdout = capsys.readouterr().out
    assert "share shift equals key shift" in stdout


def test_verify_tampered_transcript(tmp_path, capsys):
    cfg = write_config(tmp_path)
    out = tmp_path / "t.jsonl"
    main(["run", str(cfg), "--out", str(out)])
    lines = out.read_text().splitlines()
    rec = json.loads(lines[3])  # a challenge event
    raw = bytearray(bytes.fromhex(rec["payload"]))
    raw[-1] ^= 0x10
    rec["payload"] = raw.hex()
    lines[3] = json.dumps(rec, sort_keys=True, separators=(",", ":"))
    out.write_text("\n".join(lines) + "\n")
    capsys.readouterr()
    assert main(["verify", str(out)]) == EXIT_VERIFY
    captured = capsys.readouterr()
    assert "MISMATCH" in captured.out and "event 2" in captured.out


def test_verify_malformed_file(tmp_path, capsys):
    bad = tmp_path / "bad.jsonl"
    bad.write_text("this is not a transcript\n")
    assert main(["verify", str(bad)]) == EXIT_VERIFY
    assert main(["verify", str(tmp_path / "absent.jsonl")]) == EXIT_VERIFY


def test_verify_type_mangled_inputs(tmp_path, capsys):
    params = tmp_path / "params.json"
    params.write_text(json.dumps({
        "record": "parameters", "variant": "ring", "bits": 3,
        "p": "abc", "q": 7, "modulus": 35, "byte_width": 1, "seed": 0,
    }))
    assert main(["verify", str(params)]) == EXIT_VERIFY

    cfg = write_config(tmp_path)
    out = tmp_path / "t.jsonl"
    main(["run", str(cfg), "--out", str(out)])
    lines = out.read_text().splitlines()
    meta = json.loads(lines[0])
    meta["id_width"] = "wide"
    lines[0] = json.dumps(meta, sort_keys=True, separators=(",", ":"))
    out.write_text("\n".join(lines) + "\n")
    assert main(["verify", str(out)]) == EXIT_VERIFY


# --- explain ---------------------------------------------------------------------

def test_explain_attack_transcript(tmp_path, capsys):
    cfg = write_config(
        tmp_path, adversary={"attacker": "carol", "victim": "bob", "target_key": "random"}
    )
    out = tmp_path / "t.jsonl"
    main(["run", str(cfg), "--out", str(out)])
    capsys.readouterr()
    assert main(["explain", str(out)]) == EXIT_OK
    stdout = capsys.readouterr().out
    assert "REPLACED in transit" in stdout
    assert "controls the kgc->bob link" in stdout
    assert "planted" in stdout


def test_explain_redacted_transcript(tmp_path, capsys):
    cfg = write_config(tmp_path, redact=True)
    out = tmp_path / "t.jsonl"
    main(["run", str(cfg), "--out", str(out)])
    capsys.readouterr()
    assert main(["explain", str(out)]) == EXIT_OK
    assert "ground truth: redacted" in capsys.readouterr().out
