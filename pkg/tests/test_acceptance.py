"""Acceptance criteria 1-10; each test prints one PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -s``; the lines are also
collected into the terminal summary.
"""
import filecmp
import subprocess
import sys
from types import SimpleNamespace

import numpy as np
import pytest
from scipy.stats import spearmanr

from conftest import ACCEPTANCE_LINES, random_snapshot
from nomafl.allocation import full_set_allocate, oma_select, oracle_max_selection, select_and_allocate
from nomafl.fl import (
    FLConfig,
    LogisticModel,
    MLPModel,
    loss_and_gradient,
    make_gaussian_mixture,
    partition_iid,
    rounds_to_fraction,
    run_nfl,
)
from nomafl.fl.data import DataShard
from nomafl.harness.config import ScenarioConfig
from nomafl.harness.experiments import run_allocation_sweep, run_fl_replication, sweep_snapshot
from nomafl.noma import OrderedPowers, chain_feasible, max_decodable_count, sic_decode

GAMMAS = (0.5, 1.0, 2.0)
SWEEP_CFG = ScenarioConfig(gamma=1.0, replications=100, sweep_grid=tuple(range(10, 81, 10)))


def report(number, name, passed, detail):
    line = f"[{'PASS' if passed else 'FAIL'}] criterion {number:2d} {name}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return passed


# ---------------------------------------------------------------- shared corpora


@pytest.fixture(scope="session")
def decodability_corpus():
    """10^4 (snapshot, gamma, [results]) triples; half drawn from the vehicular channel."""
    rng = np.random.default_rng(20240601)
    cfg = ScenarioConfig()
    out = []
    for i in range(10_000):
        n = int(rng.integers(1, 21))
        gamma = float(rng.choice(GAMMAS))
        if i % 2:
            snap = random_snapshot(rng, n)
        else:
            snap = sweep_snapshot(cfg.replace(master_seed=1), i, n)
        results = [
            select_and_allocate(snap, gamma),
            select_and_allocate(snap, gamma, redistribute=False),
            oma_select(snap, gamma),
            full_set_allocate(snap, gamma),
        ]
        out.append((snap, gamma, results))
    return out


@pytest.fixture(scope="session")
def oracle_corpus():
    cfg = ScenarioConfig(master_seed=2)
    rng = np.random.default_rng(7)
    out = []
    for i in range(500):
        n = int(rng.integers(1, 7))
        snap = sweep_snapshot(cfg, i, n)
        out.append((snap, 1.0, [select_and_allocate(snap, 1.0), oracle_max_selection(snap, 1.0)]))
    return out


@pytest.fixture(scope="session")
def sweep_table():
    return run_allocation_sweep(SWEEP_CFG)


# ---------------------------------------------------------------- criteria


def test_criterion_01_decodability(decodability_corpus):
    failures = checked = 0
    for _, _, results in decodability_corpus:
        for res in results:
            if res.m_t:
                checked += 1
                failures += not res.decode().all_decoded
    ok = report(1, "decodability soundness", failures == 0, f"{checked} nonempty selections, {failures} decode failures")
    assert ok


def test_criterion_02_oracle(oracle_corpus):
    worse = equal = 0
    for _, _, (nfl, orc) in oracle_corpus:
        worse += nfl.m_t > orc.m_t
        equal += nfl.m_t == orc.m_t
    rate = equal / len(oracle_corpus)
    ok = report(2, "oracle dominance and near-optimality", worse == 0 and rate >= 0.8,
                f"{worse} dominance violations, optimal on {rate:.1%} of {len(oracle_corpus)} (need >= 80%)")
    assert ok


def test_criterion_03_bound(decodability_corpus, oracle_corpus):
    violations = checked = 0
    produced = [(s, g, r) for s, g, rs in decodability_corpus + oracle_corpus for r in rs]
    for n in SWEEP_CFG.sweep_grid:
        for rep in range(SWEEP_CFG.replications):
            snap = sweep_snapshot(SWEEP_CFG, rep, n)
            for fn in (select_and_allocate, oma_select, full_set_allocate):
                produced.append((snap, 1.0, fn(snap, 1.0)))
    for snap, gamma, res in produced:
        if res.m_t and res.decode().all_decoded:
            checked += 1
            top = float(res.allocation.received.max())
            violations += res.m_t > max_decodable_count(top, snap.noise_power, gamma)
    ok = report(3, "joining-count bound", violations == 0, f"{checked} decodable allocations, {violations} violations")
    assert ok


def random_feasible_chain(rng):
    gamma = float(rng.choice(GAMMAS))
    noise = float(10 ** rng.uniform(-13, 1))
    m = int(rng.integers(1, 16))
    slack = 1 + rng.exponential(0.5, m) * (rng.random(m) < 0.7)  # many exact-boundary cases
    p = np.empty(m)
    p[-1] = noise * gamma * slack[-1]
    if m >= 2:
        p[-2] = max((p[-1] + noise) * gamma * slack[-2], p[-1])
    for n in range(m - 3, -1, -1):
        p[n] = (1 + gamma) * p[n + 1] * slack[n]
    return p, noise, gamma


def test_criterion_04_chain_sufficiency():
    rng = np.random.default_rng(404)
    count = failures = 0
    while count < 10_000:
        if count % 2:
            p, noise, gamma = random_feasible_chain(rng)
        else:
            # unconstrained draws, keep only the chain-feasible ones
            gamma = float(rng.choice(GAMMAS))
            noise = 1.0
            p = np.sort(10 ** rng.uniform(-1, 6, int(rng.integers(1, 8))))[::-1]
        op = OrderedPowers(p, noise, gamma)
        if not chain_feasible(op):
            continue
        count += 1
        failures += not sic_decode(op).all_decoded
    ok = report(4, "chain condition sufficiency", failures == 0, f"{count} feasible vectors, {failures} decode failures")
    assert ok


def test_criterion_05_connected_vs_n(sweep_table):
    s = sweep_table.summary()
    grid = SWEEP_CFG.sweep_grid
    nfl = [s[("nfl", n)]["mean_m_t"] for n in grid]
    oma = [s[("oma", n)]["mean_m_t"] for n in grid]
    outage = [s[("fullset", n)]["outage"] for n in grid]
    rho = spearmanr(grid, nfl).statistic
    rise = outage[-1] - outage[0]
    ok = rho >= 0.9 and max(oma) <= 1 and rise >= 0.3
    report(5, "connected vehicles versus N", ok,
           f"spearman={rho:.3f} (>=0.9), nfl mean m_t {nfl[0]:.2f}->{nfl[-1]:.2f}, "
           f"max oma mean={max(oma):.2f} (<=1), full-set outage {outage[0]:.2f}->{outage[-1]:.2f} (rise {rise:.2f} >= 0.3)")
    assert ok


def test_criterion_06_joining_ratio(sweep_table):
    s = sweep_table.summary()
    margins = []
    for n in SWEEP_CFG.sweep_grid:
        jr = {a: s[(a, n)]["mean_joining_ratio"] for a in ("nfl", "oma", "fullset")}
        margins.append(jr["nfl"] - max(jr["oma"], jr["fullset"]))
    ok = min(margins) > 0
    report(6, "joining ratio above both baselines", ok, f"smallest margin over the grid {min(margins):.4f} (> 0)")
    assert ok


class AllVehicles:
    """Stub channel and allocator admitting every vehicle."""

    def __init__(self, n):
        self.n = n

    def shard_of(self):
        return {i: i for i in range(self.n)}

    def next_snapshot(self):
        return None

    def __call__(self, snap):
        return SimpleNamespace(selected=tuple(range(self.n)))


def test_criterion_07_centralized_equivalence():
    worst = 0.0
    for seed in range(20):
        rng = np.random.default_rng(seed)
        n_clients = int(rng.integers(2, 9))
        k = int(rng.integers(3, 20))
        data = make_gaussian_mixture(n_clients * k, rng, n_features=7, n_classes=3, separation=2.0)
        shards = partition_iid(data, n_clients, rng)
        model = LogisticModel(7, 3) if seed % 2 else MLPModel(7, 3, hidden=6)
        w0 = rng.normal(0, 0.5, model.dimension)
        stub = AllVehicles(n_clients)
        cfg = FLConfig(rounds=1, local_steps=1, eta=0.3, batch_size=None, aggregation="weighted", seed=seed)
        run = run_nfl(cfg, stub, stub, shards, data, model, w0=w0)
        assert run.metrics[0].joining_ratio == 1.0
        _, g = loss_and_gradient(model, w0, DataShard(data.features, data.labels, np.arange(len(data))))
        central = w0 - (0.3 / k) * g  # per-sample step eta / k_n, equal shards
        worst = max(worst, float(np.max(np.abs(run.weights - central))))
    ok = worst <= 1e-9
    report(7, "federated average equals centralized step", ok, f"20 instances, max componentwise gap {worst:.2e} (<= 1e-9)")
    assert ok


def test_criterion_08_gradient_check():
    rng = np.random.default_rng(808)
    worst = {}
    for family in ("logistic", "mlp"):
        errs = []
        for _ in range(10):
            d, c = int(rng.integers(2, 8)), int(rng.integers(2, 6))
            model = LogisticModel(d, c) if family == "logistic" else MLPModel(d, c, hidden=int(rng.integers(2, 8)))
            X = rng.normal(size=(30, d))
            y = rng.integers(0, c, 30)
            shard = DataShard(X, y, np.arange(30))
            batch = rng.integers(0, 30, int(rng.integers(1, 30)))
            w = rng.normal(0, 0.5, model.dimension)
            _, g = loss_and_gradient(model, w, shard, batch)
            num = np.empty_like(w)
            for i in range(len(w)):
                e = np.zeros_like(w)
                e[i] = 1e-6
                num[i] = (loss_and_gradient(model, w + e, shard, batch)[0]
                          - loss_and_gradient(model, w - e, shard, batch)[0]) / 2e-6
            errs.append(np.linalg.norm(g - num) / max(np.linalg.norm(num), 1e-12))
        worst[family] = max(errs)
    ok = max(worst.values()) <= 1e-5
    report(8, "gradient check", ok, ", ".join(f"{k} worst rel err {v:.1e}" for k, v in worst.items()) + " (<= 1e-5)")
    assert ok


FL_CFG = ScenarioConfig(
    n_vehicles=40, rounds=150, local_steps=2, eta=0.05, batch_size=32,
    scale_by_shard_size=False, model="logistic", class_separation=3.0, alpha_d=0.4,
)


def test_criterion_09_learning_speed():
    rounds = {}
    for part in ("iid", "dirichlet"):
        for seed in range(10):
            cfg = FL_CFG.replace(partition=part, master_seed=seed)
            for alloc in ("nfl", "oma"):
                run, _ = run_fl_replication(cfg, 0, alloc)
                rounds[(part, seed, alloc)] = rounds_to_fraction([m.test_accuracy for m in run.metrics], 0.9)
    faster = {p: sum(rounds[(p, s, "nfl")] < rounds[(p, s, "oma")] for s in range(10)) for p in ("iid", "dirichlet")}
    slower = sum(rounds[("dirichlet", s, "nfl")] > rounds[("iid", s, "nfl")] for s in range(10))
    ok = faster["iid"] >= 9 and faster["dirichlet"] >= 9 and slower >= 8
    report(9, "learning speed ordering", ok,
           f"nfl faster than oma: iid {faster['iid']}/10, dirichlet {faster['dirichlet']}/10 (>= 9); "
           f"dirichlet slower than iid: {slower}/10 (>= 8)")
    assert ok


def test_criterion_10_determinism(tmp_path):
    cfg = tmp_path / "scenario.cfg"
    cfg.write_text(
        "replications = 3\nsweep_grid = 10,40,80\n"
        "n_vehicles = 12\nrounds = 20\nsamples_per_client = 40\nlocal_steps = 3\npartition = dirichlet\n"
    )
    outputs = []
    for run in (0, 1):
        files = []
        for cmd, fmt in (("sweep", "csv"), ("sweep", "jsonl"), ("train", "csv"), ("train", "jsonl"), ("allocate", "csv")):
            out = tmp_path / f"{cmd}-{fmt}-{run}.out"
            proc = subprocess.run(
                [sys.executable, "-m", "nomafl", cmd, "--config", str(cfg), "--seed", "17",
                 "--format", fmt, "--out", str(out)],
                capture_output=True, text=True,
            )
            assert proc.returncode == 0, proc.stderr
            files.append(out)
        outputs.append(files)
    same = [filecmp.cmp(a, b, shallow=False) for a, b in zip(*outputs)]
    ok = all(same)
    report(10, "determinism", ok, f"{sum(same)}/{len(same)} metric files byte-identical across two executions")
    assert ok
