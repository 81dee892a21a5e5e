"""Command line: ``cssim {gen-corpus,run,attack,print-schema}``.

stdout carries exactly one JSON document (or nothing with ``--out``);
diagnostics go to stderr. Exit codes: 0 success, 1 internal error, 2 usage
or config error.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from importlib import resources
from pathlib import Path

from .adversary import run_attack_campaign
from .config import ATTACK_NAMES, ConfigError, ScenarioConfig
from .corpus import generate_corpus
from .protocol import Simulation, scenario_corpus

SCHEMAS = ("metrics", "attacks", "config")
EXIT_OK, EXIT_INTERNAL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def load_schema(name: str) -> dict:
    if name not in SCHEMAS:
        raise UsageError(f"unknown schema {name!r}; choose from {', '.join(SCHEMAS)}")
    return json.loads(resources.files("cssim").joinpath(f"data/{name}.schema.json").read_text())


def demo_config_path() -> Path:
    return Path(str(resources.files("cssim").joinpath("data/demo.json")))


def dumps(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _log(args, msg: str) -> None:
    if not args.quiet:
        print(msg, file=sys.stderr)


def _config(args) -> ScenarioConfig:
    if args.config is None:
        raise UsageError("--config is required")
    cfg = ScenarioConfig.load(args.config)
    if args.seed is not None:
        cfg = cfg.replace(seed=args.seed)
    if args.jobs is not None:
        cfg = cfg.replace(jobs=args.jobs)
    return cfg


def _attack(cfg: ScenarioConfig, corpus, name: str) -> dict:
    a = cfg.attacks
    images = corpus.images[: a.images]
    return run_attack_campaign(images, name, cfg.seed, a.edit_fraction, a.max_delta, a.max_queries, cfg.jobs)


def cmd_gen_corpus(args) -> dict:
    if args.db < 0 or args.benign < 0:
        raise UsageError("counts must be non-negative")
    seed = 0 if args.seed is None else args.seed
    corpus = generate_corpus(seed, args.db, args.benign, args.side)
    manifest = corpus.write(args.out)
    _log(args, f"wrote {len(corpus)} images to {args.out}")
    return {"manifest": str(manifest), "db": args.db, "benign": args.benign, "seed": seed}


def cmd_run(args) -> dict:
    cfg = _config(args)
    t0 = time.perf_counter()
    sim = Simulation(cfg)
    sim.populate()
    sim.run_workload()
    sim.sweep()
    metrics = sim.metrics()
    _log(args, f"simulation: {metrics['reports']} reports in {time.perf_counter() - t0:.2f}s")
    attacks = {name: _attack(cfg, sim.corpus, name) for name in ATTACK_NAMES if getattr(cfg.attacks, name)}
    if attacks:
        metrics["attacks"] = attacks
    return metrics


def cmd_attack(args) -> dict:
    if args.attack not in ATTACK_NAMES:
        raise UsageError(f"unknown attack {args.attack!r}; choose from {', '.join(ATTACK_NAMES)}")
    cfg = _config(args)
    corpus = scenario_corpus(cfg)
    t0 = time.perf_counter()
    out = _attack(cfg, corpus, args.attack)
    _log(args, f"{args.attack}: {out['successes']}/{out['images']} in {time.perf_counter() - t0:.2f}s")
    return out


def cmd_print_schema(args) -> dict:
    return load_schema(args.name)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", metavar="PATH")
    common.add_argument("--seed", type=int, metavar="N", help="override the config seed")
    common.add_argument("--out", metavar="PATH", help="write the JSON document here instead of stdout")
    common.add_argument("--quiet", action="store_true", help="no diagnostics on stderr")
    common.add_argument("--jobs", type=int, metavar="N", help="threads for attack campaigns")

    parser = _Parser(prog="cssim", description="Client-side scanning pipeline simulator.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser, required=True)

    g = sub.add_parser("gen-corpus", parents=[common], help="write a synthetic PGM corpus")
    g.add_argument("--db", type=int, default=100)
    g.add_argument("--benign", type=int, default=900)
    g.add_argument("--side", type=int, default=256)
    g.set_defaults(func=cmd_gen_corpus)

    r = sub.add_parser("run", parents=[common], help="run a scenario and emit metrics")
    r.set_defaults(func=cmd_run)

    a = sub.add_parser("attack", parents=[common], help="run an evade or collide campaign")
    a.add_argument("attack")
    a.set_defaults(func=cmd_attack)

    s = sub.add_parser("print-schema", parents=[common], help="print a shipped JSON schema")
    s.add_argument("name", nargs="?", default="metrics")
    s.set_defaults(func=cmd_print_schema)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "gen-corpus" and args.out is None:
            raise UsageError("gen-corpus needs --out DIR")
        if args.jobs is not None and args.jobs < 1:
            raise UsageError("--jobs must be >= 1")
        doc = args.func(args)
        text = dumps(doc)
        if args.out and args.command != "gen-corpus":
            Path(args.out).write_text(text)
        else:
            sys.stdout.write(text)
        return EXIT_OK
    except (UsageError, ConfigError) as exc:
        print(f"cssim: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # noqa: BLE001
        print(f"cssim: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
