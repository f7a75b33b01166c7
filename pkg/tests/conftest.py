"""Shared fixtures: the reference ("desk") configuration and its trained and
benchmarked artifacts, computed once per session. The heavy fixtures are only
built when a test actually requests them."""

import argparse
import dataclasses
import os
import time

import pytest

from teammoe import bench as bench_mod
from teammoe import cli
from teammoe import env
from teammoe.policies import make_dmoe_policy
from teammoe.train import pretrain_experts, train_dmoe

DESK_CONFIG = os.path.join(os.path.dirname(__file__), os.pardir, "configs",
                           "desk.json")


@pytest.fixture(scope="session")
def desk_settings():
    doc = cli._load_config(DESK_CONFIG)
    return cli._Settings(doc, argparse.Namespace(seed=None))


@pytest.fixture(scope="session")
def desk_pretrained(desk_settings):
    """Mixture team after the warm-start phase only, at the reference scale."""
    s = desk_settings
    init_rng = env.substream(s.train.seed, 0)
    team = [make_dmoe_policy(s.k, s.p_max, init_rng) for _ in range(s.k)]
    return pretrain_experts(team, s.train, env.substream(s.train.seed, 1))


@pytest.fixture(scope="session")
def desk_team(desk_settings):
    """(policy team, training records, wall seconds) at the reference scale."""
    t0 = time.time()
    team, records = train_dmoe(desk_settings.train, desk_settings.k,
                               desk_settings.p_max)
    return team, records, time.time() - t0


@pytest.fixture(scope="session")
def desk_results(desk_settings, desk_team):
    """(all-algorithm benchmark rows for the reference seed, wall seconds)."""
    t0 = time.time()
    results = bench_mod.run_benchmark(desk_settings.bench, desk_team[0])
    return results, time.time() - t0


@pytest.fixture(scope="session")
def desk_seed_results(desk_settings, desk_team, desk_results):
    """Benchmark rows per seed (0, 1, 2); extra seeds run the mixture and the
    retrained plain-net baselines only."""
    out = {desk_settings.bench.seed: desk_results[0]}
    for seed in (1, 2):
        tcfg = dataclasses.replace(desk_settings.train, seed=seed)
        bcfg = dataclasses.replace(desk_settings.bench, seed=seed,
                                   algorithms=("dmoe", "teamdnn"))
        team, _ = train_dmoe(tcfg, desk_settings.k, desk_settings.p_max)
        out[seed] = bench_mod.run_benchmark(bcfg, team)
    return out


@pytest.fixture(scope="session")
def desk_sweep(desk_settings, desk_team):
    return bench_mod.sweep_sigma(desk_settings.bench,
                                 desk_settings.sweep_sigmas, desk_team[0])
