"""Command-line front door.

Subcommands:
  gen-params  generate safe-prime parameters and write them to a file
  run         execute a scenario config, write the transcript, report outcomes
  verify      re-check a transcript (or a parameter file) and report mismatches
  explain     render a transcript as a human-readable narrative

Exit codes are stable and meant for scripting:
  0 success, 2 configuration/parameter error, 3 verification failure,
  4 scenario ran but did not meet its success condition.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import sys
from pathlib import Path

from .algebra import (
    DomainContext,
    SeededRng,
    Variant,
    domain_new,
    gen_distinct_safe_primes,
    gen_safe_prime,
)
from .errors import (
    CompositeWhenPrimeRequired,
    ConfigError,
    EqualFactors,
    GkdError,
    MalformedTranscript,
    ModulusTooSmall,
)
from .simnet import (
    ACTION_FORGE,
    ACTION_SUPPRESS,
    KGC_NAME,
    ScenarioConfig,
    Transcript,
    VERDICT_DROPPED,
    VERDICT_REPLACED,
    parse_broadcast_payload,
    run_scenario,
    verify_transcript,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_VERIFY = 3
EXIT_SCENARIO = 4


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gkdsim",
        description="group key distribution testbed: honest runs, insider forgery, transcript replay",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen-params", help="generate safe-prime domain parameters")
    gen.add_argument("--bits", type=int, required=True, help="bit length per prime (>= 3)")
    gen.add_argument("--variant", choices=[v.value for v in Variant], required=True)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", type=Path, default=None, help="output file (default params-<variant>-<bits>bit.json)")
    gen.set_defaults(func=cmd_gen_params)

    run = sub.add_parser("run", help="run a scenario config and write its transcript")
    run.add_argument("config", type=Path)
    run.add_argument("--out", type=Path, default=None, help="transcript path (default <config>.transcript.jsonl)")
    run.add_argument("--seed", type=int, default=None, help="override the config seed")
    run.add_argument("--variant", choices=[v.value for v in Variant], default=None, help="override the config variant")
    run.add_argument("-v", "--verbose", action="store_true", help="print every event")
    run.set_defaults(func=cmd_run)

    ver = sub.add_parser("verify", help="replay-check a transcript, or re-check a parameter file")
    ver.add_argument("path", type=Path)
    ver.set_defaults(func=cmd_verify)

    exp = sub.add_parser("explain", help="annotated step-by-step narrative of a transcript")
    exp.add_argument("path", type=Path)
    exp.set_defaults(func=cmd_explain)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (ModulusTooSmall, EqualFactors, CompositeWhenPrimeRequired) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except MalformedTranscript as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_VERIFY
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG


# ---------------------------------------------------------------------------
# gen-params
# ---------------------------------------------------------------------------

def cmd_gen_params(args) -> int:
    variant = Variant(args.variant)
    rng = SeededRng(args.seed)
    if variant is Variant.RING:
        p, q = gen_distinct_safe_primes(args.bits, rng)
        ctx = domain_new(p, q, variant=variant)
    else:
        p, q = gen_safe_prime(args.bits, rng), None
        ctx = domain_new(p, variant=variant)
    record = {
        "record": "parameters",
        "variant": variant.value,
        "bits": args.bits,
        "p": p,
        "q": q,
        "modulus": ctx.modulus,
        "byte_width": ctx.byte_width,
        "seed": args.seed,
    }
    out = args.out or Path(f"params-{variant.value}-{args.bits}bit.json")
    data = json.dumps(record, sort_keys=True, separators=(",", ":")) + "\n"
    out.write_text(data)
    digest = hashlib.sha256(data.encode()).hexdigest()
    print(f"wrote {out}")
    print(f"modulus: {ctx.modulus} ({ctx.modulus.bit_length()} bits, {ctx.byte_width}-byte residues)")
    print(f"fingerprint: sha256:{digest[:16]}")
    return EXIT_OK


def _verify_parameters(record: dict) -> int:
    try:
        variant = Variant(record["variant"])
        p, q = record["p"], record["q"]
        bits, modulus, byte_width = record["bits"], record["modulus"], record["byte_width"]
        for name, value in (("p", p), ("q", q), ("bits", bits),
                            ("modulus", modulus), ("byte_width", byte_width)):
            if value is not None and not isinstance(value, int):
                raise ValueError(f"{name} must be an integer")
    except (KeyError, ValueError) as e:
        print(f"parameter file invalid: {e}", file=sys.stderr)
        return EXIT_VERIFY
    try:
        ctx = domain_new(p, q, variant=variant) if variant is Variant.RING else domain_new(p, variant=variant)
    except GkdError as e:
        print(f"primality re-check failed: {e}", file=sys.stderr)
        return EXIT_VERIFY
    problems = []
    if ctx.modulus != modulus:
        problems.append(f"modulus {modulus} != p*q product {ctx.modulus}")
    if ctx.byte_width != byte_width:
        problems.append(f"byte_width {byte_width} != {ctx.byte_width}")
    for name, value in (("p", p), ("q", q)):
        if value is not None and value.bit_length() != bits:
            problems.append(f"{name} has {value.bit_length()} bits, file says {bits}")
    if problems:
        for pr in problems:
            print(f"mismatch: {pr}", file=sys.stderr)
        return EXIT_VERIFY
    primes = f"p={p}" + (f", q={q}" if q is not None else "")
    print(f"parameters ok: {primes} (safe-primality re-checked), modulus {modulus}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# run
# ---------------------------------------------------------------------------

def cmd_run(args) -> int:
    cfg = ScenarioConfig.from_file(args.config)
    if args.seed is not None:
        if args.seed < 0:
            raise ConfigError("seed must be non-negative")
        cfg = dataclasses.replace(cfg, seed=args.seed)
    if args.variant is not None:
        cfg = dataclasses.replace(cfg, variant=Variant(args.variant))
    cfg.validate()

    tr = run_scenario(cfg)
    out = args.out or args.config.with_suffix(".transcript.jsonl")
    tr.save(out)

    if args.verbose:
        for line in _event_lines(tr):
            print(line)
    ok, lines = summarize_run(tr)
    for line in lines:
        print(line)
    print(f"transcript written to {out}")
    if not ok:
        print("scenario did not meet its success condition", file=sys.stderr)
        return EXIT_SCENARIO
    return EXIT_OK


def summarize_run(tr: Transcript) -> tuple[bool, list[str]]:
    """Human summary plus the success verdict the exit status is based on."""
    meta = tr.meta
    lines = [
        f"variant {meta['variant']}, modulus {meta['modulus']}, "
        f"{meta['t']} members, seed {meta['seed']}"
    ]
    by_member = {oc.member: oc for oc in tr.outcomes}
    for oc in tr.outcomes:
        if oc.status == "accepted":
            lines.append(f"  {oc.member}: accepted key {oc.key}")
        elif oc.status == "rejected":
            lines.append(f"  {oc.member}: rejected ({oc.reason})")
        else:
            lines.append(f"  {oc.member}: timeout ({oc.reason})")

    adv = meta.get("adversary")
    gt = tr.ground_truth
    if adv is None:
        keys = {oc.key for oc in tr.outcomes}
        ok = all(oc.status == "accepted" for oc in tr.outcomes) and len(keys) == 1
        if ok and gt is not None and keys != {gt.group_key}:
            ok = False
        lines.append(
            "honest run: all members accepted the same key" if ok
            else "honest run FAILED: outcomes disagree"
        )
        return ok, lines

    victim = adv["victim"]
    vic = by_member[victim]
    others = [oc for oc in tr.outcomes if oc.member != victim]
    if adv["action"] == ACTION_SUPPRESS:
        ok = vic.status == "timeout" and all(o.status == "accepted" for o in others)
        lines.append(
            "suppression: victim timed out, everyone else accepted" if ok
            else "suppression FAILED: victim produced an outcome or others rejected"
        )
        return ok, lines

    ok = vic.status == "accepted" and all(o.status == "accepted" for o in others)
    if gt is not None and gt.adversary is not None:
        ok = ok and vic.key == gt.adversary.target_key
        ok = ok and all(o.key == gt.group_key for o in others)
        if ok and vic.key != gt.group_key:
            lines.append("victim accepted forged key; honest key differs")
            lines.append(f"  planted key {vic.key}, true group key {gt.group_key}")
        elif ok:
            lines.append("victim accepted the planted key (identical to the true key)")
        else:
            lines.append("attack FAILED: victim or honest members did not accept as planned")
    else:
        honest_keys = {o.key for o in others}
        ok = ok and len(honest_keys) == 1 and vic.key not in honest_keys
        lines.append(
            "victim accepted forged key; honest key differs" if ok
            else "attack FAILED: victim or honest members did not accept as planned"
        )
    return ok, lines


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------

def cmd_verify(args) -> int:
    first = _first_record(args.path)
    if first.get("record") == "parameters":
        return _verify_parameters(first)
    tr = Transcript.load(args.path)
    report = verify_transcript(tr)
    for line in report.checks:
        print(f"ok: {line}")
    for line in report.skipped:
        print(f"skipped: {line}")
    for line in report.mismatches:
        print(f"MISMATCH: {line}")
    if not report.ok:
        print(f"{len(report.mismatches)} mismatch(es) found", file=sys.stderr)
        return EXIT_VERIFY
    print("transcript verified: no mismatches")
    return EXIT_OK


def _first_record(path: Path) -> dict:
    try:
        with open(path) as fh:
            for line in fh:
                if line.strip():
                    rec = json.loads(line)
                    if isinstance(rec, dict):
                        return rec
                    break
    except OSError as e:
        raise MalformedTranscript(f"cannot read {path}: {e}") from None
    except json.JSONDecodeError as e:
        raise MalformedTranscript(f"{path} is not a transcript or parameter file: {e}") from None
    raise MalformedTranscript(f"{path} contains no records")


# ---------------------------------------------------------------------------
# explain
# ---------------------------------------------------------------------------

_STEP_BLURBS = {
    "request": "initiator asks the KGC for a group key over the listed roster",
    "announce": "KGC echoes the roster, fixing member order for the session",
    "challenge": "member publishes a fresh random challenge",
    "broadcast": "KGC publishes tag, nonce and one masked share per member",
}


def cmd_explain(args) -> int:
    tr = Transcript.load(args.path)
    try:
        return _explain(tr)
    except (KeyError, ValueError, TypeError) as e:
        raise MalformedTranscript(f"transcript fields invalid: {e}") from None


def _explain(tr: Transcript) -> int:
    meta = tr.meta
    print(
        f"scenario: {meta['variant']} variant, modulus {meta['modulus']}, "
        f"members {', '.join(meta['members'])}, seed {meta['seed']}"
    )
    adv = meta.get("adversary")
    if adv:
        print(
            f"adversary: {adv['attacker']} controls the {KGC_NAME}->{adv['victim']} link "
            f"({adv['action']})"
        )
    for line in _event_lines(tr):
        print(line)
    print("outcomes:")
    for oc in tr.outcomes:
        if oc.status == "accepted":
            note = f"accepted key {oc.key}"
        elif oc.status == "rejected":
            note = f"rejected: {oc.reason}"
        else:
            note = "timeout: never received the key broadcast"
        print(f"  {oc.member}: {note}")
    gt = tr.ground_truth
    if gt is None:
        print("ground truth: redacted")
    else:
        print(f"ground truth: group key {gt.group_key}, nonce {gt.r0}")
        if gt.adversary and gt.adversary.action == ACTION_FORGE:
            print(
                f"  {gt.adversary.attacker} recovered {gt.adversary.recovered_key} from its own "
                f"share and planted {gt.adversary.target_key} on {gt.adversary.victim}"
            )
    return EXIT_OK


def _event_lines(tr: Transcript) -> list[str]:
    meta = tr.meta
    ctx = DomainContext(
        modulus=meta["modulus"],
        variant=Variant(meta["variant"]),
        byte_width=meta["byte_width"],
    )
    lines = []
    for ev in tr.events:
        route = f"{ev.sender} -> {','.join(ev.receivers)}"
        detail = _STEP_BLURBS.get(ev.step, "")
        if ev.step == "challenge":
            detail = f"{detail}: {int.from_bytes(ev.payload, 'big')}"
        elif ev.step == "broadcast":
            bc = parse_broadcast_payload(ev.payload, ctx, meta["digest_size"], meta["t"])
            detail = (
                f"{detail}: tag {bc.auth.hex()[:12]}.., nonce {bc.r0}, "
                f"shares {list(bc.masked_shares)}"
            )
        mark = ""
        if ev.verdict == VERDICT_REPLACED:
            fb = parse_broadcast_payload(ev.delivered_payload, ctx, meta["digest_size"], meta["t"])
            mark = (
                f"  [REPLACED in transit: tag {fb.auth.hex()[:12]}.., "
                f"shares {list(fb.masked_shares)}]"
            )
        elif ev.verdict == VERDICT_DROPPED:
            mark = "  [DROPPED in transit]"
        lines.append(f"  {ev.index:>2}. {ev.step:<9} {route:<28} {detail}{mark}")
    return lines


if __name__ == "__main__":
    sys.exit(main())
