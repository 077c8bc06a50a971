"""Acceptance suite: one test per exit criterion, each printing a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -s`` to see the lines.
"""

import sys
import time
from pathlib import Path

import numpy as np
from scipy.stats import kstest, wilcoxon

from trsearch.core import EvaluationRecord, rng_stream
from trsearch.evalproto import spawn_evaluator
from trsearch.harness import load_config, run_experiment
from trsearch.objectives import ObjectiveSpec, brute_force_optimum, make_objective
from trsearch.optimizers import OptimizerConfig, run_optimizer, run_trs, run_zero_order, zero_order_equivalent
from trsearch.regions import AdaptationConfig, CenterStrategy, TrustRegionState, adapt_length, record_batch_outcome, restart_region
from trsearch.sampling import MaskConfig, SobolEngine, affine_map, draw_mask, gaussian_perturbation, probability_cap

ROOT = Path(__file__).resolve().parents[1]
SEEDS = range(20)


def verdict(n, name, ok, detail, started):
    print(f"\n[criterion {n:2d}] {'PASS' if ok else 'FAIL'}  {name}: {detail} ({time.perf_counter() - started:.1f}s)")
    assert ok, detail


def mixture(dim=64, seed=0):
    return make_objective(ObjectiveSpec(kind="gaussian_mixture", dim=dim, seed=seed))


def test_c01_gaussian_spread():
    t0 = time.perf_counter()
    errs = {}
    for ell in (0.05, 0.8, 2.4):
        d = gaussian_perturbation(ell, 100_000, rng_stream(0, f"acceptance/spread/{ell}"))
        errs[ell] = abs(d.var() / (ell**2 / 12) - 1)
    ok = max(errs.values()) < 0.02 and time.perf_counter() - t0 < 5
    verdict(1, "gaussian spread", ok, f"max relative variance error {max(errs.values()):.4f} (< 0.02)", t0)


def test_c02_sobol_stratification():
    t0 = time.perf_counter()
    u = SobolEngine(2).draw(2**8)
    counts = np.zeros((16, 16), dtype=int)
    np.add.at(counts, tuple(np.floor(u * 16).astype(int).T), 1)
    bound_ok = all(np.max(np.abs(affine_map(u, ell))) <= ell / 2 for ell in (0.05, 0.8, 2.4))
    ok = bool(np.all(counts == 1)) and bound_ok and time.perf_counter() - t0 < 1
    verdict(2, "sobol stratification", ok, f"cells with one point {int((counts == 1).sum())}/256, bound {bound_ok}", t0)


def test_c03_adaptation_state_machine():
    t0 = time.perf_counter()
    cfg = AdaptationConfig()

    def drive(kind, n):
        r = TrustRegionState.initial(0, np.zeros(2), 0.0, cfg.l_init)
        best, seen, restarted = 0.0, [], None
        for i in range(n):
            best += kind == "s"
            r = record_batch_outcome(r, [best if kind == "s" else -1.0])
            r, restart = adapt_length(r, cfg)
            if restart:
                r = restart_region(r, [EvaluationRecord(0, np.ones(2), 3.0, None, 0)], cfg)
                restarted = r.side_length
                break
            if i % 3 == 2:
                seen.append(r.side_length)
        return seen, restarted

    up, _ = drive("s", 9)
    down, reset = drive("f", 30)
    exp_down = [0.8 / 1.5**n for n in range(1, 7)] + [0.05]
    ok = (
        np.allclose(up, [1.2, 1.8, 2.4], rtol=0, atol=1e-12)
        and up[-1] == 2.4
        and np.allclose(down, exp_down, rtol=0, atol=1e-12)
        and abs(down[0] - 0.5333) < 5e-5
        and abs(down[1] - 0.3556) < 5e-5
        and reset == 0.8
        and time.perf_counter() - t0 < 1
    )
    verdict(3, "adaptation", ok, f"expand {[round(x, 4) for x in up]}, contract {[round(x, 4) for x in down]}, restart -> {reset}", t0)


def test_c04_mask_constraint_safety():
    t0 = time.perf_counter()
    cfg = MaskConfig()
    violations, accepted_13 = 0, []
    per_length = 25_000
    for ell in (1.0, 1.3, 1.7, 2.1):
        rng = rng_stream(0, f"acceptance/mask/{ell}")
        cap = {1.0: 1.0, 1.3: 0.7, 1.7: 0.5, 2.1: 0.2}[ell]
        for _ in range(per_length):
            p, mask = draw_mask(cfg, ell, 8, rng)
            violations += (p > probability_cap(ell)) or p > cap or not mask.any()
            if ell == 1.3:
                accepted_13.append(p)
    pv = kstest(accepted_13, "uniform", args=(0.1, 0.6)).pvalue
    ok = violations == 0 and pv > 0.01 and time.perf_counter() - t0 < 10
    verdict(4, "mask constraints", ok, f"{violations} violations in {4 * per_length} draws, KS p={pv:.3f}", t0)


def test_c05_zero_order_equivalence():
    t0 = time.perf_counter()
    same = []
    for seed in range(3):
        cfg = OptimizerConfig(algorithm="zero_order", dim=8, n_total=400, seed=seed)
        spec = ObjectiveSpec(kind="sphere", dim=8, seed=seed)
        zo = run_zero_order(cfg, make_objective(spec))
        trs = run_trs(zero_order_equivalent(cfg), make_objective(spec))
        same.append(
            len(zo.records) == len(trs.records) == 400
            and all(
                a.candidate.tobytes() == b.candidate.tobytes() and a.reward == b.reward
                for a, b in zip(zo.records, trs.records)
            )
        )
    ok = all(same) and time.perf_counter() - t0 < 5
    verdict(5, "zero-order special case", ok, f"bit-identical trajectories for seeds 0-2: {same}", t0)


def test_c06_budget_fairness():
    t0 = time.perf_counter()
    cfg = load_config(ROOT / "configs" / "default.toml")
    bad = []
    for budget in cfg.nfe_grid:
        counts = set()
        for opt in cfg.optimizers:
            c = OptimizerConfig.from_dict({**opt.config.to_dict(), "n_total": budget, "seed": 0})
            r = run_optimizer(c, make_objective(cfg.objective))
            counts.add(r.total_evaluations)
        if counts != {budget // cfg.batch_size * cfg.batch_size}:
            bad.append((budget, counts))
    verdict(6, "budget fairness", not bad, f"mismatches {bad}" if bad else f"budgets {cfg.nfe_grid} exact across algorithms", t0)


def test_c07_optimization_ordering():
    t0 = time.perf_counter()
    res = {}
    for algorithm in ("trs", "zero_order", "random"):
        res[algorithm] = np.array([
            run_optimizer(OptimizerConfig(algorithm=algorithm, dim=64, n_total=2000, batch_size=20, k_regions=5, seed=s), mixture()).best_reward
            for s in SEEDS
        ])
    med = {a: float(np.median(v)) for a, v in res.items()}
    p = wilcoxon(res["trs"], res["random"], alternative="greater").pvalue
    ok = med["trs"] >= med["zero_order"] >= med["random"] and p < 0.05 and time.perf_counter() - t0 < 300
    detail = (
        f"medians TRS {med['trs']:.4f}, zero-order {med['zero_order']:.4f}, random {med['random']:.4f}; "
        f"Wilcoxon TRS>random p={p:.2e}"
    )
    verdict(7, "optimization ordering", ok, detail, t0)


def test_c08_oracle_proximity():
    t0 = time.perf_counter()
    hits = 0
    for s in SEEDS:
        spec = ObjectiveSpec(kind="gaussian_mixture", dim=2, seed=s)
        _, oracle = brute_force_optimum(spec, 401)
        r = run_trs(OptimizerConfig(dim=2, n_total=2000, seed=s), make_objective(spec))
        hits += r.best_reward >= 0.99 * oracle
    ok = hits >= 18 and time.perf_counter() - t0 < 120
    verdict(8, "oracle proximity", ok, f"{hits}/20 seeds within 99% of the grid oracle", t0)


def test_c09_center_strategy_direction():
    t0 = time.perf_counter()
    means = {}
    for strategy in CenterStrategy:
        means[strategy.value] = float(np.mean([
            run_trs(OptimizerConfig(dim=64, n_total=2000, center_strategy=strategy, seed=s), mixture()).best_reward
            for s in SEEDS
        ]))
    top = means["GlobalTopk"]
    ok = all(top >= v for v in means.values()) and time.perf_counter() - t0 < 600
    verdict(9, "center strategies", ok, ", ".join(f"{k} {v:.4f}" for k, v in means.items()), t0)


def test_c10_external_transparency():
    t0 = time.perf_counter()
    cfg = OptimizerConfig(dim=16, n_total=1000, seed=5)
    local = run_trs(cfg, make_objective(ObjectiveSpec(kind="sphere", dim=16, seed=0)))
    with spawn_evaluator([sys.executable, "-m", "trsearch.mock_eval", "sphere"], dim=16) as handle:
        remote = run_trs(cfg, handle)
    strip = lambda r: r.to_dict(include_history=True, include_wall_time=False)
    ok = remote.valid and strip(local) == strip(remote) and time.perf_counter() - t0 < 30
    verdict(10, "external evaluator transparency", ok, f"reports identical: {strip(local) == strip(remote)}", t0)


def test_c11_determinism(tmp_path):
    t0 = time.perf_counter()
    cfg = load_config(ROOT / "configs" / "default.toml")

    def summary(out):
        result = run_experiment(cfg.with_overrides(output_dir=out))
        assert not result.failures
        return [line.rsplit(",", 1)[0] for line in (out / "summary.csv").read_text().splitlines()]

    a, b = summary(tmp_path / "a"), summary(tmp_path / "b")
    ok = a == b and len(a) == 241
    verdict(11, "determinism", ok, f"{len(a) - 1} rows, identical without wall_time: {a == b}", t0)
