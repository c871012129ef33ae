import numpy as np
import pytest
from scipy.spatial import ConvexHull

from moasha.bench import AnalyticBenchmark, TabularBenchmark, generate_tabular
from moasha.core import sample_configuration
from moasha.pareto import non_dom_sorting


@pytest.fixture(scope="module")
def table():
    return generate_tabular(10_000, seed=0, max_budget=50)


def test_curves_decay(table):
    err = table.curves[:, :, 0]
    assert np.all(err[:, -1] <= err[:, 0])
    assert np.all(np.diff(err, axis=1) <= 1e-15)


def test_curves_approach_their_limit():
    t = generate_tabular(200, seed=1, max_budget=2000)
    tail = t.curves[:, -1, 0]
    assert np.all(np.abs(t.curves[:, -2, 0] - tail) < 1e-3)


def test_error_and_cost_anticorrelated(table):
    corr = np.corrcoef(table.curves[:, -1, 0], table.curves[:, -1, 1])[0, 1]
    assert corr < 0


def test_lookup_is_deterministic_and_checked(table):
    assert table.lookup(17, 10) == table.lookup(17, 10)
    with pytest.raises(LookupError):
        table.lookup(10_000, 1)
    with pytest.raises(ValueError):
        table.lookup(0, 51)
    with pytest.raises(ValueError):
        table.lookup(0, 1.5)


def test_evaluate_duration_scales_with_budget(table):
    config = sample_configuration(table.search_space(), np.random.default_rng(0))
    (_, d1), (_, d9) = table.evaluate(config, 1), table.evaluate(config, 9)
    assert d9 == pytest.approx(9 * d1)
    assert 0.5 <= d1 <= 2.0


def test_single_config_table_front():
    t = TabularBenchmark(np.array([[[0.3, 2.0], [0.2, 2.0]]]), np.array([1.0]))
    assert t.true_front().points.tolist() == [[0.2, 2.0]]


def test_true_front_is_first_front(table):
    final = table.curves[:, -1, :]
    assert sorted(table.true_front().config_ids) == non_dom_sorting(final)[0]


def test_save_load_round_trip(tmp_path):
    t = generate_tabular(20, seed=3, n_objectives=3, max_budget=9, noise=0.01)
    path = tmp_path / "table.json"
    t.save(path)
    again = TabularBenchmark.load(path)
    np.testing.assert_array_equal(again.curves, t.curves)
    np.testing.assert_array_equal(again.unit_cost, t.unit_cost)
    assert again.objective_names == t.objective_names


def test_load_rejects_other_formats(tmp_path):
    path = tmp_path / "x.json"
    path.write_text('{"format": "something-else"}')
    with pytest.raises(ValueError):
        TabularBenchmark.load(path)


@pytest.mark.parametrize("kind", ["concave", "convex"])
def test_full_fidelity_points_on_or_above_front(kind):
    b = AnalyticBenchmark(kind, dim=4, sigma=0.2, max_budget=81)
    rng = np.random.default_rng(1)
    for i in range(300):
        (y1, y2), _ = b.evaluate(sample_configuration(b.search_space(), rng, i), 81)
        if 0 <= y1 <= 1:
            assert y2 >= b.front_curve(y1) - 1e-12


def test_noise_shrinks_with_budget():
    b = AnalyticBenchmark("concave", dim=3, sigma=0.5, max_budget=81)
    rng = np.random.default_rng(2)
    gaps = {1: [], 81: []}
    for i in range(200):
        c = sample_configuration(b.search_space(), rng, i)
        clean = b.noiseless(np.array(list(c.params.values())))
        for r in gaps:
            gaps[r].append(np.subtract(b.evaluate(c, r)[0], clean))
    assert np.all(np.asarray(gaps[1]) >= 0)
    assert np.mean(gaps[81]) < np.mean(gaps[1]) / 5


def test_concave_front_lies_inside_hull_of_extremes():
    front = AnalyticBenchmark("concave").true_front(101).points
    # the chord between (0,1) and (1,0) is y1 + y2 = 1; a concave front bulges above it
    interior = front[1:-1]
    assert np.all(interior.sum(axis=1) > 1)
    hull = ConvexHull(np.vstack([front, [[1, 1]]]))
    assert set(hull.vertices) == {0, len(front) - 1, len(front)}


def test_only_extremes_minimize_a_linear_weighting_on_concave_front():
    front = AnalyticBenchmark("concave").true_front(1001).points
    for w in np.linspace(0.01, 0.99, 25):
        best = np.argmin(front @ np.array([w, 1 - w]))
        assert best in (0, len(front) - 1)


def test_convex_front_is_convex():
    front = AnalyticBenchmark("convex").true_front(101).points
    assert np.all(front[1:-1].sum(axis=1) < 1)


def test_analytic_validation():
    with pytest.raises(ValueError):
        AnalyticBenchmark("wavy")
    with pytest.raises(ValueError):
        AnalyticBenchmark(dim=1)
