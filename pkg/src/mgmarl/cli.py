"""Command-line entry point: ``mgmarl {train,eval,verify,export-plots}``."""

import argparse
import csv
import json
import os
import sys
import tempfile
import time
import warnings
from importlib import resources

import numpy as np

from .envs import make_game
from .oracle.suites import SUITES
from .trainer import CheckpointMismatch, evaluate, load_config, run_stage1, run_stage2
from .trainer.config import METHODS

RUNS_ENV = "MGMARL_RUNS"
ENV_CONFIGS = {"nav": "nav.ini", "navigation": "nav.ini", "merge": "merge.ini", "lane_merge": "merge.ini",
               "sumo": "merge.ini", "checkers": "checkers.ini"}


def default_config(env):
    try:
        name = ENV_CONFIGS[env]
    except KeyError:
        raise SystemExit(f"unknown environment {env!r}") from None
    return str(resources.files("mgmarl") / "configs" / name)


def write_json_atomic(path, data):
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(suffix=".json", dir=directory)
    with os.fdopen(fd, "w") as fh:
        json.dump(data, fh, indent=2, sort_keys=True, default=_jsonable)
    os.replace(tmp, path)


def _jsonable(value):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"cannot serialise {type(value).__name__}")


# -- train -------------------------------------------------------------------

def cmd_train(args):
    config_path = args.config or default_config(args.env)
    overrides = {"seed": args.seed}
    if args.episodes is not None:
        overrides["episodes"] = args.episodes
    cfg = load_config(config_path, args.stage, args.method, overrides)
    env_options = dict(cfg.env)
    env_name = args.env or env_options.get("env")
    if env_name is None:
        raise SystemExit("no environment given (use --env or an [env] section)")
    env_options.pop("env", None)
    game = make_game(env_name, **env_options)
    if args.stage == 2 and args.method in ("cm3", "qv") and not args.from_checkpoint:
        raise SystemExit(f"method {args.method} needs --from-checkpoint (a stage-1 checkpoint)")
    if args.from_checkpoint and not os.path.exists(args.from_checkpoint):
        raise SystemExit(f"checkpoint not found: {args.from_checkpoint}")

    root = os.environ.get(RUNS_ENV, "runs")
    label = "stage1" if args.stage == 1 else args.method
    out_dir = args.out or os.path.join(root, f"{env_name}-{label}-seed{args.seed}")
    os.makedirs(out_dir, exist_ok=True)
    manifest_path = os.path.join(out_dir, "manifest.json")
    manifest = {
        "status": "running", "env": env_name, "stage": args.stage, "method": cfg.method,
        "seed": args.seed, "config_path": os.path.abspath(config_path), "config": cfg.to_dict(),
        "from_checkpoint": os.path.abspath(args.from_checkpoint) if args.from_checkpoint else None,
        "checkpoint": None, "metrics": None,
    }
    write_json_atomic(manifest_path, manifest)
    start = time.perf_counter()
    try:
        if args.stage == 1:
            result = run_stage1(cfg, game, out_dir)
        else:
            result = run_stage2(cfg, game, args.from_checkpoint, out_dir)
    except CheckpointMismatch as exc:
        manifest.update(status="failed", error=str(exc))
        write_json_atomic(manifest_path, manifest)
        raise SystemExit(f"checkpoint does not fit the stage-2 networks: {exc}") from None
    manifest.update(
        status="complete", checkpoint=os.path.abspath(result["checkpoint"]),
        metrics=os.path.abspath(os.path.join(out_dir, "metrics.jsonl")),
        summary=result["summary"], wall_seconds=time.perf_counter() - start,
    )
    write_json_atomic(manifest_path, manifest)
    print(json.dumps({"run": out_dir, **result["summary"]}, default=_jsonable))
    return 0


# -- eval --------------------------------------------------------------------

def cmd_eval(args):
    if args.episodes <= 0:
        raise SystemExit("--episodes must be positive")
    options = {}
    if args.scenario:
        if args.env not in ("merge", "lane_merge", "sumo"):
            raise SystemExit("--scenario applies to the lane-merge environment")
        options = {"scenario": args.scenario, "traffic": args.traffic}
    game = make_game(args.env, **options)
    try:
        stats = evaluate(args.checkpoint, game, args.episodes, seed=args.seed)
    except (CheckpointMismatch, FileNotFoundError) as exc:
        raise SystemExit(f"cannot evaluate: {exc}") from None
    print(json.dumps({"env": args.env, "scenario": args.scenario, **stats}, default=_jsonable))
    return 0


# -- verify ------------------------------------------------------------------

def cmd_verify(args):
    suite = SUITES[args.suite]
    kwargs = {}
    if args.suite in ("identities", "gradients"):
        kwargs = {"trials": args.trials or (50 if args.suite == "identities" else 20), "seed": args.seed}
    elif args.suite == "variance":
        kwargs = {"seed": args.seed}
    report = suite(**kwargs)
    print(json.dumps(report, default=_jsonable))
    return 0 if report["passed"] else 1


# -- export-plots ------------------------------------------------------------

def _eval_curve(path):
    episodes, values = [], []
    with open(path) as fh:
        for line in fh:
            record = json.loads(line)
            if record.get("kind") == "eval":
                episodes.append(record["episode"])
                values.append(record["joint_return"])
    return episodes, values


def export_curves(metrics_paths, out_path):
    """Mean and std of the joint evaluation return across runs, per episode index."""
    curves = [_eval_curve(p) for p in metrics_paths]
    if not curves or not all(c[0] for c in curves):
        raise ValueError("every metrics file needs at least one evaluation record")
    length = min(len(c[0]) for c in curves)
    if any(len(c[0]) != length for c in curves):
        warnings.warn(f"runs differ in length; truncating to the common prefix of {length} points")
    reference = curves[0][0][:length]
    for episodes, _ in curves:
        if episodes[:length] != reference:
            raise ValueError("evaluation cadences differ between runs")
    values = np.array([c[1][:length] for c in curves])
    with open(out_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["episode", "mean", "std", "runs"])
        for i, ep in enumerate(reference):
            writer.writerow([ep, repr(float(values[:, i].mean())), repr(float(values[:, i].std())), len(curves)])
    return length


def cmd_export_plots(args):
    try:
        n = export_curves(args.metrics, args.out)
    except ValueError as exc:
        raise SystemExit(str(exc)) from None
    print(json.dumps({"out": args.out, "points": n, "runs": len(args.metrics)}))
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="mgmarl", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    train = sub.add_parser("train", help="run one curriculum stage")
    train.add_argument("config", nargs="?", help="INI config (defaults to the packaged one for --env)")
    train.add_argument("--stage", type=int, choices=(1, 2), required=True)
    train.add_argument("--method", choices=METHODS, default="cm3")
    train.add_argument("--env")
    train.add_argument("--seed", type=int, default=0)
    train.add_argument("--from-checkpoint")
    train.add_argument("--episodes", type=int, help="override the configured episode count")
    train.add_argument("--out", help="run directory (default: $MGMARL_RUNS/<env>-<method>-seed<k>)")
    train.set_defaults(func=cmd_train)

    ev = sub.add_parser("eval", help="evaluate a checkpoint")
    ev.add_argument("--checkpoint", required=True)
    ev.add_argument("--env", required=True)
    ev.add_argument("--episodes", type=int, default=100)
    ev.add_argument("--scenario", choices=("C1", "C2", "C3", "C4"))
    ev.add_argument("--traffic", type=int, default=8, help="background vehicles in scenario mode")
    ev.add_argument("--seed", type=int, default=0)
    ev.set_defaults(func=cmd_eval)

    ver = sub.add_parser("verify", help="run an oracle suite")
    ver.add_argument("--suite", choices=sorted(SUITES), required=True)
    ver.add_argument("--trials", type=int)
    ver.add_argument("--seed", type=int, default=0)
    ver.set_defaults(func=cmd_verify)

    ex = sub.add_parser("export-plots", help="aggregate evaluation curves into CSV")
    ex.add_argument("--metrics", nargs="+", required=True)
    ex.add_argument("--out", required=True)
    ex.set_defaults(func=cmd_export_plots)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.command == "train" and args.config is None and args.env is None:
        raise SystemExit("train needs a config file or --env")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
