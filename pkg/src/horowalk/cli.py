"""Command line entry point.

Exit codes: 0 success, 1 invariant or acceptance failure, 2 config error.
"""
from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path
from typing import Optional

from . import horo, spaces
from .config import SCHEMA_VERSION, ConfigError, csv_text, load_config, read_config, write_atomic
from .experiments import run as run_experiment
from .experiments import strip_growth_table
from .spaces import ModelSpace
from .walks import StepDistribution, sample_path
from .words import encode

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _emit(obj: dict) -> None:
    obj = {"schema_version": SCHEMA_VERSION, **obj}
    print(json.dumps(obj, indent=2, sort_keys=True, default=_num))


def _num(x):
    if isinstance(x, Fraction):
        return int(x) if x.denominator == 1 else float(x)
    return str(x)


def _point(space: ModelSpace, text: str):
    if space.model == spaces.WEDGE:
        ray, s = text.split(":")
        return space.point((int(ray), Fraction(s)))
    if space.model == spaces.ZXZ2:
        n, b = text.split(":")
        return space.point((int(n), int(b)))
    if space.model == spaces.LINE:
        return space.point(Fraction(text))
    return space.point(text)


def _boundary(space: ModelSpace, text: str):
    if space.model == spaces.LINE:
        return spaces.LineEnd(1 if text.lstrip("+") in ("inf", "1") else -1)
    if space.model == spaces.WEDGE:
        return spaces.WedgeEnd(int(text))
    return spaces.end_of(text)


def _horofunction(args) -> horo.Horofunction:
    space = ModelSpace(args.model, args.rank)
    if args.busemann is not None:
        return horo.BusemannHoro(space, _boundary(space, args.busemann))
    if args.y is None:
        raise ConfigError("give --y POINT or --busemann END")
    return horo.OrbitHoro(space, _point(space, args.y))


def cmd_horo(args) -> int:
    params = {"model": args.model, "y": args.y, "busemann": args.busemann}
    if args.action == "eval":
        h = _horofunction(args)
        results = {z: horo.horo_eval(h, _point(h.space, z)) for z in args.z}
    elif args.action == "classify":
        h = _horofunction(args)
        results = {"class": horo.classify(h, args.probe_budget).value}
    else:
        results = _limit_check(args.example, args.n)
        params = {"example": args.example, "n": args.n}
    _emit({"type": f"horo-{args.action}", "params": params, "results": results})
    return EXIT_OK


def _limit_check(example: str, n: int) -> dict:
    if example == "wedge-busemann":
        space = ModelSpace(spaces.WEDGE)
        tests = [horo.wedge_point(i, s) for i in range(1, 6) for s in (0, 1, 2, 3)]
        seq = [horo.wedge_ray_horo(k) for k in range(1, n + 1)]
        dev = horo.deviation_series(seq, horo.rho(space, space.basepoint), tests)
        return {"deviations": dev}
    if example == "wedge-orbit":
        space = ModelSpace(spaces.WEDGE)
        tests = [horo.wedge_point(i, s) for i in range(1, 6) for s in (0, 1, 2, 3)]
        seq = [horo.rho(space, horo.wedge_point(k, k)) for k in range(1, n + 1)]
        dev = horo.deviation_series(seq, horo.rho(space, space.basepoint), tests)
        return {"deviations": dev}
    if example == "f2z2-oscillation":
        space = ModelSpace(spaces.F2Z2)
        c = space.point("c")
        path = [space.point("a" * k + ("c" if k % 2 else "")) for k in range(1, n + 1)]
        return {"values_at_c": [horo.horo_eval(horo.rho(space, y), c) for y in path]}
    raise ConfigError(f"unknown example {example!r}")


def cmd_walk(args) -> int:
    mu = _step_from_arg(args.step)
    path = sample_path(mu, args.n, args.seed, args.backward)
    rows = [[k, encode(w) or "1", len(w) + w.bit] for k, w in enumerate(path.locations)]
    text = csv_text(["t", "word", "distance"], rows)
    _write_or_print(text, args.out)
    return EXIT_OK


def _step_from_arg(text: str) -> StepDistribution:
    if text == "uniform":
        return StepDistribution.uniform()
    p = Path(text)
    if p.exists():
        return StepDistribution.from_json(json.loads(p.read_text()))
    return StepDistribution.from_json(json.loads(text))


def _write_or_print(text: str, out: Optional[str]) -> None:
    if out:
        write_atomic(out, text)
    else:
        sys.stdout.write(text)


def _run_config(cfg, out: Optional[str]) -> int:
    table, record = run_experiment(cfg)
    target = out or cfg.output
    if target:
        write_atomic(target, table.csv())
        write_atomic(str(Path(target).with_suffix(".json")), record.to_json())
    else:
        sys.stdout.write(table.csv())
    print(json.dumps(record.payload, sort_keys=True, default=_num), file=sys.stderr)
    return EXIT_OK


def cmd_estimate(args) -> int:
    obj = json.loads(Path(args.config).read_text()) if args.config else {}
    obj.setdefault("estimator", args.name)
    if obj["estimator"] != args.name:
        raise ConfigError(f"config is for {obj['estimator']!r}, not {args.name!r}")
    obj.setdefault("seed", 0)
    obj.setdefault("trials", 100)
    cfg = load_config(obj, args.seed)
    return _run_config(cfg, args.out)


def cmd_run(args) -> int:
    cfg = read_config(args.config, args.seed)
    return _run_config(cfg, args.out)


def cmd_strips(args) -> int:
    if args.action == "enumerate":
        table = strip_growth_table(args.alpha, args.beta, args.K, args.R, args.v, args.r)
        _write_or_print(table.csv(), args.out)
        return EXIT_OK
    if not args.config:
        raise ConfigError("strips series needs --config")
    obj = json.loads(Path(args.config).read_text())
    obj["estimator"] = "strips"
    cfg = load_config(obj, args.seed)
    return _run_config(cfg, args.out)


def cmd_verify(args) -> int:
    from .verify import summary, verify

    outcomes = verify(args.level, args.inject_fault)
    print(summary(outcomes))
    failed = [o for o in outcomes if not o.ok]
    print(f"{len(outcomes) - len(failed)}/{len(outcomes)} suites passed")
    return EXIT_FAIL if failed else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="horowalk", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    h = sub.add_parser("horo", help="evaluate and classify horofunctions")
    h.add_argument("action", choices=["eval", "classify", "limit-check"])
    h.add_argument("--model", default="tree", choices=list(spaces.MODELS))
    h.add_argument("--rank", type=int, default=2)
    h.add_argument("--y", help="point for the orbit horofunction rho_y")
    h.add_argument("--busemann", help="end for a Busemann function, e.g. '(a)', '+inf', ray index")
    h.add_argument("--z", nargs="*", default=[], help="evaluation points")
    h.add_argument("--probe-budget", type=int, default=0)
    h.add_argument("--example", default="wedge-busemann",
                   choices=["wedge-busemann", "wedge-orbit", "f2z2-oscillation"])
    h.add_argument("--n", type=int, default=8)
    h.set_defaults(func=cmd_horo)

    w = sub.add_parser("walk", help="print a seeded sample path")
    w.add_argument("--step", default="uniform", help="'uniform', a JSON file or inline JSON")
    w.add_argument("--n", type=int, required=True)
    w.add_argument("--seed", type=int, default=0)
    w.add_argument("--backward", type=int, default=0)
    w.add_argument("--out")
    w.set_defaults(func=cmd_walk)

    e = sub.add_parser("estimate", help="run one estimator")
    e.add_argument("name", choices=["drift", "tail", "persistence", "hitting", "decay",
                                    "translation", "tracking", "midpoint"])
    e.add_argument("--config")
    e.add_argument("--out")
    e.add_argument("--seed", type=int)
    e.set_defaults(func=cmd_estimate)

    s = sub.add_parser("strips", help="bounded-geometry strips")
    s.add_argument("action", choices=["enumerate", "series"])
    s.add_argument("--alpha", default="(A)")
    s.add_argument("--beta", default="(a)")
    s.add_argument("--K", default="1")
    s.add_argument("--R", default="3")
    s.add_argument("--v", default="aaaa")
    s.add_argument("--r", type=int, default=20)
    s.add_argument("--config")
    s.add_argument("--out")
    s.add_argument("--seed", type=int)
    s.set_defaults(func=cmd_strips)

    v = sub.add_parser("verify", help="run the invariant suites")
    v.add_argument("level", choices=["quick", "full"], nargs="?", default="quick")
    v.add_argument("--inject-fault", choices=["flip-shadow"], help="mutation smoke test")
    v.set_defaults(func=cmd_verify)

    r = sub.add_parser("run", help="run an experiment config")
    r.add_argument("config")
    r.add_argument("--out")
    r.add_argument("--seed", type=int)
    r.set_defaults(func=cmd_run)
    return ap


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, json.JSONDecodeError, spaces.UnsupportedModel, spaces.ModelMismatch) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
