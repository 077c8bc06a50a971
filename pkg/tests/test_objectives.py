import threading

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from trsearch.core import ConfigError
from trsearch.objectives import (
    KINDS,
    ObjectiveSpec,
    brute_force_optimum,
    hidden_parameters,
    make_objective,
)
from trsearch.optimizers import OptimizerConfig, run_random_search


def test_sphere_maximum_at_target():
    spec = ObjectiveSpec(kind="sphere", dim=6, seed=4)
    t = hidden_parameters(spec)["target"]
    obj = make_objective(spec)
    assert obj([t])[0] == 0.0
    assert obj([t + 0.1])[0] < 0


def test_mixture_dominant_mode():
    spec = ObjectiveSpec(kind="gaussian_mixture", dim=16, seed=2)
    h = hidden_parameters(spec)
    assert h["weights"][0] == 1.0 and np.all(h["weights"][1:] < 1.0) and np.all(h["weights"] > 0)
    assert np.all(np.linalg.norm(h["centers"], axis=1) <= 2 * np.sqrt(16))
    assert make_objective(spec)([h["centers"][0]])[0] >= h["weights"][0]


@pytest.mark.parametrize("kind", KINDS)
def test_purity_and_order_invariance(kind):
    dim = 2 if kind == "discrete_grid" else 5
    spec = ObjectiveSpec(kind=kind, dim=dim, seed=1)
    X = np.random.default_rng(0).standard_normal((12, dim))
    a = make_objective(spec)(X)
    b = make_objective(spec)(X)
    assert a == b and len(a) == 12 and all(np.isfinite(a))
    perm = np.random.default_rng(1).permutation(12)
    assert make_objective(spec)(X[perm]) == [a[i] for i in perm]


def test_distinct_seeds_give_distinct_functions():
    X = np.zeros((1, 4)) + 0.3
    r = {make_objective(ObjectiveSpec(kind="toy_flow", dim=4, seed=s))(X)[0] for s in range(5)}
    assert len(r) == 5


def test_toy_flow_target_reachable():
    spec = ObjectiveSpec(kind="toy_flow", dim=8, seed=3)
    h = hidden_parameters(spec)
    assert h["W1"].shape == (16, 8) and h["W2"].shape == (8, 16)
    assert make_objective(spec)([h["source"]])[0] == 0.0


def test_rastrigin_rotation_is_orthogonal():
    Q = hidden_parameters(ObjectiveSpec(kind="rotated_rastrigin", dim=7))["rotation"]
    assert np.allclose(Q @ Q.T, np.eye(7), atol=1e-12)
    assert make_objective(ObjectiveSpec(kind="rotated_rastrigin", dim=7))([np.zeros(7)])[0] == 0.0


def test_eval_count_is_thread_safe():
    obj = make_objective(ObjectiveSpec(kind="sphere", dim=3))
    X = np.zeros((5, 3))
    threads = [threading.Thread(target=lambda: [obj(X) for _ in range(50)]) for _ in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert obj.eval_count == 8 * 50 * 5


def test_hidden_parameters_not_public():
    obj = make_objective(ObjectiveSpec(kind="sphere", dim=3))
    public = [n for n in dir(obj) if not n.startswith("_")]
    assert not any(isinstance(getattr(obj, n), np.ndarray) for n in public)


@pytest.mark.parametrize(
    "kw",
    [dict(dim=0), dict(kind="discrete_grid", dim=4), dict(kind="nope"), dict(n_components=0)],
)
def test_invalid_specs(kw):
    with pytest.raises(ConfigError):
        ObjectiveSpec(**kw)


def test_spec_round_trip():
    s = ObjectiveSpec(kind="toy_flow", dim=3, seed=9)
    assert ObjectiveSpec.from_dict(s.to_dict()) == s
    with pytest.raises(ConfigError):
        ObjectiveSpec.from_dict({"kind": "sphere", "colour": 1})


def test_discrete_grid_oracle_is_table_max():
    spec = ObjectiveSpec(kind="discrete_grid", dim=2, grid_resolution=16, seed=5)
    table = hidden_parameters(spec)["table"]
    nodes = np.linspace(-spec.extent, spec.extent, 16)
    x, r = brute_force_optimum(spec)
    i, j = np.unravel_index(np.argmax(table), table.shape)
    assert r == table.max()
    assert np.array_equal(x, [nodes[i], nodes[j]])


def test_oracle_ties_lexicographic():
    spec = ObjectiveSpec(kind="discrete_grid", dim=2, grid_resolution=2, seed=0)
    obj = make_objective(spec)
    obj._table[:] = 1.0
    from trsearch import objectives

    orig = objectives.make_objective
    objectives.make_objective = lambda s: obj
    try:
        x, _ = brute_force_optimum(spec)
    finally:
        objectives.make_objective = orig
    assert np.array_equal(x, [-spec.extent, -spec.extent])


def test_sphere_oracle_within_one_cell():
    spec = ObjectiveSpec(kind="sphere", dim=2, seed=1)
    t = hidden_parameters(spec)["target"]
    assert np.all(np.abs(t) < spec.extent)
    x, _ = brute_force_optimum(spec, 401)
    step = 2 * spec.extent / 400
    assert np.all(np.abs(x - t) <= step)


def test_oracle_dimension_limit():
    with pytest.raises(ConfigError):
        brute_force_optimum(ObjectiveSpec(kind="sphere", dim=4))


def test_random_search_exhausts_three_point_grid():
    # 3 nodes on [-1, 1]: standard-normal draws snap to -1, 0 or 1
    spec = ObjectiveSpec(kind="discrete_grid", dim=1, grid_resolution=3, extent=1.0, seed=2)
    obj = make_objective(spec)
    _, optimum = brute_force_optimum(spec)
    found = 0
    for seed in range(50):
        cfg = OptimizerConfig(algorithm="random", dim=1, n_total=3, batch_size=3, seed=seed)
        r = run_random_search(cfg, make_objective(spec))
        snapped = {int(obj.snap(rec.candidate)[0]) for rec in r.records}
        if len(snapped) == 3:
            assert r.best_reward == optimum
            found += 1
    assert found > 0


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31), st.sampled_from(["sphere", "gaussian_mixture", "toy_flow"]))
def test_same_spec_same_function(seed, kind):
    spec = ObjectiveSpec(kind=kind, dim=3, seed=seed)
    X = np.linspace(-1, 1, 9).reshape(3, 3)
    assert make_objective(spec)(X) == make_objective(spec)(X)
