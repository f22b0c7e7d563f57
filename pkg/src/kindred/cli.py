"""Command-line entry point: ``kindred <group> <command> [options]``.

Exit codes: 0 success, 1 validation error, 2 scenario assertion failed,
64 usage error.
"""

from __future__ import annotations

import argparse
import json
import os
import random
import sys
from pathlib import Path

from . import analysis, dna_encoding, gossip_sim, walkthrough, whistle
from .commitment import CommitmentError, DigestSetRequest, HashId, build_request, compare_request
from .handshake import HandshakeError
from .seeding import derive_seed
from .str_core import DEFAULT_PANEL, GenotypePair, Marker, ProfileError, StrProfile, dump_profile, parse_profile, paternity_consistent, profile_to_dict

EXIT_OK, EXIT_INVALID, EXIT_SCENARIO, EXIT_USAGE = 0, 1, 2, 64


class UsageError(Exception):
    pass


class ScenarioFailed(Exception):
    def __init__(self, report: dict, message: str):
        super().__init__(message)
        self.report = report


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def _color(text: str, code: str) -> str:
    if os.environ.get("KINDRED_NO_COLOR") or not sys.stdout.isatty():
        return text
    return f"\033[{code}m{text}\033[0m"


def _render(doc: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"
    lines = []
    for key in sorted(doc):
        value = doc[key]
        if isinstance(value, bool):
            value = _color("yes", "32") if value else _color("no", "31")
        elif isinstance(value, (dict, list)):
            value = json.dumps(value, sort_keys=True)
        lines.append(f"{key}: {value}")
    return "\n".join(lines) + "\n"


def _read(path: str) -> str:
    return sys.stdin.read() if path == "-" else Path(path).read_text()


def _config(args) -> dict:
    return json.loads(Path(args.config).read_text()) if args.config else {}


def _pick(args, cfg: dict, name: str, key: str, default):
    value = getattr(args, name, None)
    if value is not None:
        return value
    return cfg.get(key, default)


# -- profile ------------------------------------------------------------------


def cmd_profile_gen(args, cfg):
    rng = random.Random(derive_seed(args.seed, "profile"))
    panel = DEFAULT_PANEL[: args.markers]
    entries = [(Marker(n, m), GenotypePair(*rng.sample(range(5, 40), 2))) for n, m in panel]
    return profile_to_dict(StrProfile(entries))


def cmd_profile_check(args, cfg):
    profile = parse_profile(_read(args.profile), source=args.profile)
    doc = {"valid": True, "markers": len(profile), "canonical": json.loads(dump_profile(profile))}
    if args.parent:
        parent = parse_profile(_read(args.parent), source=args.parent)
        per_marker, overall = paternity_consistent(profile, parent)
        doc["paternity"] = {"per_marker": dict(sorted(per_marker.items())), "consistent": overall}
    return doc


# -- request ------------------------------------------------------------------


def cmd_request_build(args, cfg):
    profile = parse_profile(_read(args.profile), source=args.profile)
    return build_request(profile, args.factor, HashId(args.hash), args.ttl).to_dict()


def cmd_request_compare(args, cfg):
    incoming = DigestSetRequest.from_dict(json.loads(_read(args.incoming)))
    local = DigestSetRequest.from_dict(json.loads(_read(args.local)))
    return compare_request(incoming, local).to_dict()


# -- handshake ----------------------------------------------------------------


def cmd_handshake_demo(args, cfg):
    fixture = walkthrough.load_fixture(args.fixtures)
    report = walkthrough.run_demo(fixture, seed=derive_seed(args.seed, "handshake"))
    if not report["keys_equal"]:
        raise ScenarioFailed(report, "handshake did not end with equal session keys")
    return report


# -- sim ----------------------------------------------------------------------


def _graph(args, cfg) -> gossip_sim.SocialGraph:
    if args.graph:
        return gossip_sim.SocialGraph.from_json(_read(args.graph))
    if "graph" in cfg:
        return gossip_sim.SocialGraph.from_dict(cfg["graph"])
    topo = cfg.get("topology", {"kind": args.topology, "size": args.size})
    kind, size = topo.get("kind", "ring"), int(topo.get("size", 10))
    if kind == "ring":
        return gossip_sim.SocialGraph.ring(size)
    if kind == "complete":
        return gossip_sim.SocialGraph.complete(size)
    if kind == "star":
        return gossip_sim.SocialGraph.star(size)
    if kind == "tree":
        return gossip_sim.SocialGraph.tree(int(topo.get("fanout", 10)), size)
    if kind == "chords":
        return gossip_sim.SocialGraph.ring_with_chords(size, int(topo.get("chords", size // 2)), derive_seed(args.seed, "graph"))
    raise UsageError(f"unknown topology {kind!r}")


def _world_kw(args, cfg) -> dict:
    return {
        "rate_limit": int(_pick(args, cfg, "rate_limit", "rateLimit", gossip_sim.DEFAULT_RATE_LIMIT)),
        "window": int(cfg.get("window", gossip_sim.DEFAULT_WINDOW)),
        "padded_size": int(_pick(args, cfg, "padded_size", "paddedSize", gossip_sim.DEFAULT_PADDED_SIZE)),
        "limit_forwarded": bool(cfg.get("limitForwarded", False)),
    }


def _origin(args, cfg, graph) -> str:
    origin = _pick(args, cfg, "origin", "origin", None) or graph.nodes[0]
    if origin not in graph:
        raise UsageError(f"origin {origin!r} is not in the graph")
    return origin


def _ttl(args, cfg) -> int:
    return int(_pick(args, cfg, "ttl", "ttl", gossip_sim.DEFAULT_TTL))


def cmd_sim_flood(args, cfg):
    graph = _graph(args, cfg)
    kw = _world_kw(args, cfg)
    world = gossip_sim.World(graph, seed=derive_seed(args.seed, "sim"), **kw)
    env = gossip_sim.make_envelope(ttl=_ttl(args, cfg), padded_size=kw["padded_size"])
    return gossip_sim.run_flood(world, env, _origin(args, cfg, graph)).to_dict()


def cmd_sim_dos(args, cfg):
    graph = _graph(args, cfg)
    kw = _world_kw(args, cfg)
    droppers = args.dropper or cfg.get("droppers", [])
    origin = _origin(args, cfg, graph)
    env = gossip_sim.make_envelope(ttl=_ttl(args, cfg), padded_size=kw["padded_size"])
    report = gossip_sim.scenario_dos(graph, droppers, origin, env, **kw).to_dict()
    target = _pick(args, cfg, "target", "target", None)
    if target is not None:
        report["target"] = target
        report["delivered"] = target in report["first_delivery"]
        if not report["delivered"]:
            raise ScenarioFailed(report, f"{target} was not reached")
    return report


def cmd_sim_flooding(args, cfg):
    graph = _graph(args, cfg)
    attackers = args.attacker or cfg.get("attackers") or [graph.nodes[0]]
    volume = int(_pick(args, cfg, "volume", "volume", 50))
    return gossip_sim.scenario_flooding(graph, attackers, volume, ttl=_ttl(args, cfg), **_world_kw(args, cfg)).to_dict()


def cmd_sim_anonymity(args, cfg):
    graph = _graph(args, cfg)
    kw = _world_kw(args, cfg)
    monitored = [tuple(e.split(",")) for e in args.monitor] if args.monitor else [tuple(e) for e in cfg.get("observerEdges", [])]
    observers = args.observer or cfg.get("observers", [])
    monitored += gossip_sim.edges_of(graph, observers)
    origin = _origin(args, cfg, graph)
    env = gossip_sim.make_envelope(ttl=_ttl(args, cfg), padded_size=kw["padded_size"])
    transcript = gossip_sim.scenario_origin_anonymity(graph, monitored, origin, env, **kw)
    doc = transcript.to_dict()
    doc["origin"] = origin
    doc["verified_by_replay"] = gossip_sim.verify_candidates(graph, transcript, monitored, env, **kw)
    if not doc["verified_by_replay"]:
        raise ScenarioFailed(doc, "candidate replay did not reproduce the transcript")
    return doc


def cmd_sim_tagging(args, cfg):
    graph = _graph(args, cfg)
    kw = _world_kw(args, cfg)
    origin = _origin(args, cfg, graph)
    rng = random.Random(derive_seed(args.seed, "tagging"))
    organism = whistle.random_organism(rng, label="tagged")
    key = whistle.derive_whistle_key(organism)
    env = whistle.encrypt_payload(key, b"tagged", padded_size=kw["padded_size"], nonce=rng.randbytes(whistle.NONCE_SIZE)).to_envelope(_ttl(args, cfg))
    helpers = args.helper or cfg.get("helpers") or [n for n in graph.nodes if n != origin][:1]
    behaviors = {
        h: gossip_sim.NodeBehavior(gossip_sim.Kind.HELPER, whistle.Helper([key], seed=derive_seed(args.seed, "helper", h)), halts_on_success=args.masquerade)
        for h in helpers
    }
    report = gossip_sim.scenario_tagging(graph, env, origin, behaviors, **kw)
    doc = report.to_dict()
    if not report.coverage_equal:
        raise ScenarioFailed(doc, "tagged coverage differs from untagged coverage")
    return doc


# -- whistle ------------------------------------------------------------------


def _organism(args) -> whistle.OrganismDna:
    records = whistle.parse_fasta(_read(args.fasta))
    if not records:
        raise whistle.WhistleError(f"{args.fasta}: no FASTA records")
    return records[0]


def _ctx(args) -> whistle.DropContext:
    return whistle.DropContext(args.sentence, args.address)


def cmd_whistle_derive(args, cfg):
    key = whistle.derive_whistle_key(_organism(args), _ctx(args))
    return {"key": key.hex(), "transcript": key.transcript}


def cmd_whistle_encrypt(args, cfg):
    key = whistle.derive_whistle_key(_organism(args), _ctx(args))
    data = Path(args.input).read_bytes()
    nonce = random.Random(derive_seed(args.seed, "nonce")).randbytes(whistle.NONCE_SIZE)
    env = whistle.encrypt_payload(key, data, padded_size=args.padded_size or gossip_sim.DEFAULT_PADDED_SIZE, nonce=nonce)
    blob = env.to_bytes()
    if args.cipher_out:
        Path(args.cipher_out).write_bytes(blob)
    return {"size": len(blob), "plaintext_size": len(data), "nonce": env.nonce.hex(), "tag": env.tag.hex(), "fingerprint": gossip_sim.fingerprint(blob)}


def cmd_whistle_sim(args, cfg):
    rng = random.Random(derive_seed(args.seed, "whistle"))
    n_helpers = int(_pick(args, cfg, "helpers", "helpers", 10))
    graph = _graph(args, cfg)
    if len(graph) < n_helpers + 1:
        raise UsageError("graph too small for the requested number of helpers")
    kw = _world_kw(args, cfg)
    world = gossip_sim.World(graph, seed=derive_seed(args.seed, "sim"), **kw)
    origin = _origin(args, cfg, graph)
    others = [n for n in graph.nodes if n != origin]
    chosen = rng.sample(others, n_helpers)
    organisms = [whistle.random_organism(rng, label=f"organism-{i}") for i in range(n_helpers)]
    contexts = [whistle.DropContext(f"Sentence {i}.", f"{i} Rue de la Paix") for i in range(n_helpers)]
    helpers = {node: [(organisms[i], contexts[i])] for i, node in enumerate(chosen)}
    plaintext = rng.randbytes(1024)
    report = whistle.simulate_drop(world, origin, (organisms[0], contexts[0]), helpers, plaintext, ttl=_ttl(args, cfg))
    doc = report.to_dict()
    doc["matching_helper"] = chosen[0]
    ok = doc["decryptions"][chosen[0]] == 1 and sum(doc["decryptions"].values()) == 1
    ok = ok and all(p["wait_days"] >= 7 for p in doc["publications"])
    doc["passed"] = ok
    if not ok:
        raise ScenarioFailed(doc, "drop did not reach exactly the matching helper")
    return doc


# -- analyze / cf -------------------------------------------------------------


def cmd_analyze_fp(args, cfg):
    return analysis.fp_report(args.rule, args.trials, derive_seed(args.seed, "mc") if args.split_seed else args.seed, args.markers)


def cmd_analyze_cost(args, cfg):
    return analysis.cost_report(analysis.CostModel(args.values, args.markers, args.years, args.hospitals))


def cmd_cf(args, cfg):
    return dna_encoding.cf_sqrt(args.n, args.terms).to_dict()


def cmd_cf_digits(args, cfg):
    return {"sequence": args.sequence, "digits": dna_encoding.seq_to_digits(args.sequence)}


# -- parser -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--config")
    common.add_argument("--out")
    common.add_argument("--format", choices=("json", "text"), default="json")

    parser = _Parser(prog="kindred", description=__doc__.splitlines()[0], parents=[common])
    groups = parser.add_subparsers(dest="group", required=True, parser_class=_Parser)

    def sub(group, name, func, help=None):
        p = group.add_parser(name, parents=[common], help=help)
        p.set_defaults(func=func)
        return p

    prof = groups.add_parser("profile", help="STR profile tools").add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    p = sub(prof, "gen", cmd_profile_gen)
    p.add_argument("--markers", type=int, default=len(DEFAULT_PANEL))
    p = sub(prof, "check", cmd_profile_check)
    p.add_argument("profile")
    p.add_argument("--parent")

    req = groups.add_parser("request", help="digest-set requests").add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    p = sub(req, "build", cmd_request_build)
    p.add_argument("--profile", required=True)
    p.add_argument("--factor", required=True)
    p.add_argument("--hash", choices=[h.value for h in HashId if h is not HashId.KDF], default="H1")
    p.add_argument("--ttl", type=int, default=8)
    p = sub(req, "compare", cmd_request_compare)
    p.add_argument("incoming")
    p.add_argument("local")

    hs = groups.add_parser("handshake", help="mutual authentication").add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    p = sub(hs, "demo", cmd_handshake_demo)
    p.add_argument("--fixtures")

    sim = groups.add_parser("sim", help="flood scenarios").add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    for name, func in (
        ("flood", cmd_sim_flood),
        ("dos", cmd_sim_dos),
        ("flooding", cmd_sim_flooding),
        ("anonymity", cmd_sim_anonymity),
        ("tagging", cmd_sim_tagging),
    ):
        p = sub(sim, name, func)
        p.add_argument("--graph")
        p.add_argument("--topology", default="ring", choices=("ring", "complete", "star", "tree", "chords"))
        p.add_argument("--size", type=int, default=10)
        p.add_argument("--origin")
        p.add_argument("--ttl", type=int)
        p.add_argument("--rate-limit", dest="rate_limit", type=int)
        p.add_argument("--padded-size", dest="padded_size", type=int)
        if name == "dos":
            p.add_argument("--dropper", action="append")
            p.add_argument("--target")
        if name == "flooding":
            p.add_argument("--attacker", action="append")
            p.add_argument("--volume", type=int)
        if name == "anonymity":
            p.add_argument("--monitor", action="append", help="edge as 'u,v'")
            p.add_argument("--observer", action="append", help="node whose edges are all monitored")
        if name == "tagging":
            p.add_argument("--helper", action="append")
            p.add_argument("--masquerade", action="store_true", help="helpers stop relaying after decrypting")

    wh = groups.add_parser("whistle", help="dead-drop keys").add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    for name, func in (("derive", cmd_whistle_derive), ("encrypt", cmd_whistle_encrypt)):
        p = sub(wh, name, func)
        p.add_argument("--fasta", required=True)
        p.add_argument("--sentence")
        p.add_argument("--address")
        if name == "encrypt":
            p.add_argument("--in", dest="input", required=True)
            p.add_argument("--cipher-out")
            p.add_argument("--padded-size", dest="padded_size", type=int)
    p = sub(wh, "sim", cmd_whistle_sim)
    p.add_argument("--graph")
    p.add_argument("--topology", default="chords", choices=("ring", "complete", "star", "tree", "chords"))
    p.add_argument("--size", type=int, default=40)
    p.add_argument("--origin")
    p.add_argument("--ttl", type=int, default=40)
    p.add_argument("--helpers", type=int)
    p.add_argument("--rate-limit", dest="rate_limit", type=int)
    p.add_argument("--padded-size", dest="padded_size", type=int)

    an = groups.add_parser("analyze", help="security arithmetic").add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    p = sub(an, "fp", cmd_analyze_fp)
    p.add_argument("--rule", choices=[r.value for r in analysis.MatchRule], default="multiset")
    p.add_argument("--trials", type=int, default=1_000_000)
    p.add_argument("--markers", type=int, default=16)
    p.add_argument("--split-seed", action="store_true", help="derive the Monte-Carlo seed from --seed")
    p = sub(an, "cost", cmd_analyze_cost)
    p.add_argument("--values", type=int, default=10)
    p.add_argument("--markers", type=int, default=16)
    p.add_argument("--years", type=int, default=93)
    p.add_argument("--hospitals", type=int, default=1000)

    p = groups.add_parser("cf", parents=[common], help="continued fraction of sqrt(n)")
    p.set_defaults(func=cmd_cf)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--terms", type=int, default=10)

    p = groups.add_parser("digits", parents=[common], help="map bases to digits")
    p.set_defaults(func=cmd_cf_digits)
    p.add_argument("sequence")
    return parser


def _emit(doc: dict, args) -> None:
    text = _render(doc, args.format)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        cfg = _config(args)
        doc = args.func(args, cfg)
    except UsageError as exc:
        sys.stderr.write(f"{exc}\n")
        return EXIT_USAGE
    except ScenarioFailed as exc:
        _emit(exc.report, args)
        sys.stderr.write(f"scenario failed: {exc}\n")
        return EXIT_SCENARIO
    except (ProfileError, CommitmentError, HandshakeError, whistle.WhistleError, dna_encoding.EncodingError,
            gossip_sim.SimulationError, ValueError, OSError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INVALID
    _emit(doc, args)
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
