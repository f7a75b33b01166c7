"""Command-line entry point.

Subcommands: pretrain (expert warm start only), train (full mixture training
with checkpoint + log), bench (trajectory benchmark from a checkpoint), sweep
(estimate-noise robustness sweep), eval-once (one sample, all algorithms,
printed). Shared flags: --config <json>, --seed <int>, --out <dir>, --quiet.

Exit codes: 0 success, 1 usage error, 2 config error, 3 runtime/numeric error.
"""

import argparse
import dataclasses
import json
import os
import sys

import numpy as np

from . import bench as bench_mod
from . import env
from . import train as train_mod
from .policies import (dmoe_decide, load_team, make_dmoe_policy,
                       naive_wmmse_team, perfect_csi_oracle, save_team,
                       tdma_powers)
from .rate import sum_rate

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_CONFIG = 2
EXIT_RUNTIME = 3

_STREAM_EVAL_ONCE = 20
_DEFAULT_SWEEP = (0.0, 0.05, 0.1, 0.2, 0.3)


class ConfigError(ValueError):
    """Bad configuration input (file, key, or value)."""


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with code 2 on usage errors; remap to this tool's usage code
    def error(self, message):
        raise _UsageError(message)


def _build_parser() -> _Parser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="JSON config file")
    common.add_argument("--seed", type=int, metavar="N",
                        help="override the config seeds")
    common.add_argument("--out", metavar="DIR", default=".",
                        help="output directory (created if missing)")
    common.add_argument("--quiet", action="store_true",
                        help="suppress progress output")

    p = _Parser(prog="teammoe",
                description="Decentralized power control on an interference "
                            "channel with noisy CSIT: training and benchmarks.")
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")
    sub.add_parser("pretrain", parents=[common],
                   help="warm-start the expert columns and save the team")
    tp = sub.add_parser("train", parents=[common],
                        help="full mixture training; writes checkpoint and log")
    tp.add_argument("--checkpoint-every", type=int, default=0, metavar="N",
                    help="also save an intermediate checkpoint every N updates")
    bp = sub.add_parser("bench", parents=[common],
                        help="run the trajectory benchmark from a checkpoint")
    bp.add_argument("--checkpoint", required=True, metavar="PATH",
                    help="trained policy team (JSON)")
    sp = sub.add_parser("sweep", parents=[common],
                        help="estimate-noise sweep from a checkpoint")
    sp.add_argument("--checkpoint", required=True, metavar="PATH")
    ep = sub.add_parser("eval-once", parents=[common],
                        help="draw one sample and print every algorithm's "
                             "powers and sum-rate")
    ep.add_argument("--checkpoint", metavar="PATH",
                    help="optional trained team for the mixture-policy row")
    ep.add_argument("--gamma", metavar="G1,G2,...",
                    help="true quality vector (default: all ones)")
    return p


# --- config file ---------------------------------------------------------------

_TOP_KEYS = {"k", "p_max", "train", "bench", "trajectory", "sweep"}
_TRAIN_KEYS = {f.name for f in dataclasses.fields(train_mod.TrainConfig)}
_BENCH_KEYS = {f.name for f in dataclasses.fields(bench_mod.BenchConfig)} \
    - {"trajectory", "p_max"}
_RETRAIN_KEYS = {f.name for f in dataclasses.fields(train_mod.SlotRetrainConfig)}
_TRAJ_KEYS = {"intervals", "slots_per_interval"}
_SWEEP_KEYS = {"sigma_list"}


def _check_keys(d, allowed, where):
    if not isinstance(d, dict):
        raise ConfigError(f"{where} must be a JSON object")
    for key in d:
        if key not in allowed:
            raise ConfigError(f"unknown key {key!r} in {where}")


def _load_config(path):
    if path is None:
        return {}
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")
    try:
        with open(path) as f:
            doc = json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigError(f"config file {path} is not valid JSON: {e}") from e
    _check_keys(doc, _TOP_KEYS, "config")
    _check_keys(doc.get("train", {}), _TRAIN_KEYS, "'train'")
    bench_doc = dict(doc.get("bench", {}))
    _check_keys(bench_doc, _BENCH_KEYS, "'bench'")
    _check_keys(bench_doc.get("retrain", {}), _RETRAIN_KEYS, "'bench.retrain'")
    _check_keys(doc.get("trajectory", {}), _TRAJ_KEYS, "'trajectory'")
    _check_keys(doc.get("sweep", {}), _SWEEP_KEYS, "'sweep'")
    return doc


class _Settings:
    """Validated run settings assembled from config file plus flags."""

    def __init__(self, doc, args):
        try:
            self.k = int(doc.get("k", 2))
            self.p_max = float(doc.get("p_max", 1.0))
            train_doc = dict(doc.get("train", {}))
            if args.seed is not None:
                train_doc["seed"] = args.seed
            self.train = train_mod.TrainConfig(**train_doc)
            if "trajectory" in doc:
                self.trajectory = bench_mod.Trajectory(**doc["trajectory"])
            else:
                self.trajectory = bench_mod.default_trajectory()
            bench_doc = dict(doc.get("bench", {}))
            if "retrain" in bench_doc:
                bench_doc["retrain"] = train_mod.SlotRetrainConfig(**bench_doc["retrain"])
            for name in ("algorithms", "r_up"):
                if name in bench_doc:
                    bench_doc[name] = tuple(bench_doc[name])
            if args.seed is not None:
                bench_doc["seed"] = args.seed
            self.bench = bench_mod.BenchConfig(trajectory=self.trajectory,
                                               p_max=self.p_max, **bench_doc)
            self.sweep_sigmas = [float(s) for s in
                                 doc.get("sweep", {}).get("sigma_list", _DEFAULT_SWEEP)]
        except (TypeError, ValueError) as e:
            if isinstance(e, ConfigError):
                raise
            raise ConfigError(str(e)) from e
        if self.k < 1:
            raise ConfigError("k must be >= 1")
        if self.p_max <= 0:
            raise ConfigError("p_max must be positive")


def _progress(quiet):
    if quiet:
        return None
    def report(done, total):
        print(f"  {done}/{total}", file=sys.stderr)
    return report


def _load_checkpoint(path):
    if not os.path.exists(path):
        raise ConfigError(f"checkpoint file not found: {path}")
    try:
        return load_team(path)
    except (ValueError, KeyError, json.JSONDecodeError) as e:
        raise ConfigError(f"checkpoint {path} is not a valid policy team: {e}") from e


def _fmt(x) -> str:
    return format(float(x), ".6g")


def _fmt_vec(v) -> str:
    return ",".join(_fmt(x) for x in np.asarray(v).ravel())


# --- subcommand handlers ---------------------------------------------------------

def _cmd_pretrain(s: _Settings, args) -> int:
    rng = env.substream(s.train.seed, 0)
    policies = [make_dmoe_policy(s.k, s.p_max, rng) for _ in range(s.k)]
    policies = train_mod.pretrain_experts(policies, s.train,
                                          env.substream(s.train.seed, 1))
    path = os.path.join(args.out, "pretrained_policy.json")
    save_team(policies, path)
    if not args.quiet:
        print(path)
    return EXIT_OK


def _cmd_train(s: _Settings, args) -> int:
    def save_intermediate(upd, policies):
        save_team(policies, os.path.join(args.out, f"checkpoint_{upd}.json"))

    policies, records = train_mod.train_dmoe(
        s.train, s.k, s.p_max,
        checkpoint_every=args.checkpoint_every,
        checkpoint_cb=save_intermediate if args.checkpoint_every > 0 else None)
    policy_path = os.path.join(args.out, "dmoe_policy.json")
    log_path = os.path.join(args.out, "train_log.csv")
    save_team(policies, policy_path)
    bench_mod.write_train_log_csv(records, log_path)
    if not args.quiet:
        print(policy_path)
        print(log_path)
    return EXIT_OK


def _cmd_bench(s: _Settings, args) -> int:
    team = _load_checkpoint(args.checkpoint)
    results = bench_mod.run_benchmark(s.bench, team, progress=_progress(args.quiet))
    path = os.path.join(args.out, "bench_results.csv")
    bench_mod.write_results_csv(results, path)
    if not args.quiet:
        print(path)
    return EXIT_OK


def _cmd_sweep(s: _Settings, args) -> int:
    team = _load_checkpoint(args.checkpoint)
    rows = bench_mod.sweep_sigma(s.bench, s.sweep_sigmas, team,
                                 progress=_progress(args.quiet))
    path = os.path.join(args.out, "sweep_results.csv")
    bench_mod.write_sweep_csv(rows, path)
    if not args.quiet:
        print(path)
    return EXIT_OK


def _cmd_eval_once(s: _Settings, args) -> int:
    team = _load_checkpoint(args.checkpoint) if args.checkpoint else None
    if args.gamma is not None:
        try:
            gamma = np.array([float(x) for x in args.gamma.split(",")])
            gamma = env.validate_quality(gamma)
        except ValueError as e:
            raise ConfigError(f"bad --gamma value: {args.gamma!r} ({e})") from e
        if gamma.shape[0] != s.k:
            raise ConfigError(f"--gamma has {gamma.shape[0]} entries but k={s.k}")
    else:
        gamma = np.ones(s.k)
    rng = env.substream(s.bench.seed, _STREAM_EVAL_ONCE)
    batch = env.sample_batch_arrays(gamma, s.bench.sigma_n, 1, rng)
    sample = env.batch_to_samples(batch)[0]
    g = sample.true_channel

    print(f"gamma: {_fmt_vec(gamma)}")
    print(f"sigma_n: {_fmt(s.bench.sigma_n)}")
    print(f"quality_estimate: {_fmt_vec(sample.observations[0].quality_estimate)}")
    for i in range(s.k):
        print(f"true_channel_row{i}: {_fmt_vec(g[i])}")
    print("algorithm powers sum_rate")

    def show(name, p):
        print(f"{name} {_fmt_vec(p)} {_fmt(sum_rate(g, np.asarray(p)))}")

    if team is not None:
        show("dmoe", [dmoe_decide(team[j], sample.observations[j])
                      for j in range(s.k)])
    if s.k <= 3:
        show("oracle", perfect_csi_oracle(g, s.p_max, s.bench.grid_points))
    show("tdma", tdma_powers(s.k, 0, s.p_max))
    show("wmmse_naive", naive_wmmse_team(sample.observations, s.p_max,
                                         s.bench.wmmse_max_iter, s.bench.wmmse_tol))
    return EXIT_OK


_HANDLERS = {
    "pretrain": _cmd_pretrain,
    "train": _cmd_train,
    "bench": _cmd_bench,
    "sweep": _cmd_sweep,
    "eval-once": _cmd_eval_once,
}


def cli_main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as e:
        print(parser.format_usage(), file=sys.stderr, end="")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as e:  # --help lands here
        return EXIT_OK if e.code in (0, None) else EXIT_USAGE
    try:
        os.makedirs(args.out, exist_ok=True)
        settings = _Settings(_load_config(args.config), args)
        return _HANDLERS[args.command](settings, args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, KeyError, OSError, FloatingPointError, RuntimeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_RUNTIME


def main() -> None:
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
