import json

import numpy as np
import pytest

from chebds import tuning
from chebds.exceptions import InputError
from chebds.tuning import GridCell


def cells(*rows):
    return [GridCell(mu, beta, m, mse) for mu, beta, m, mse in rows]


def test_single_cell():
    idx, rule, _ = tuning.select(cells((0.9, 0.5, 50, 1e-3)))
    assert idx == 0 and rule == tuning.RULE_FALLBACK


def test_only_passing_cell_wins():
    grid = cells((0.6, 0.5, 50, 1e-3), (0.7, 0.5, 200, 5e-6), (0.8, 0.5, 25, 2e-5))
    idx, rule, _ = tuning.select(grid)
    assert idx == 1 and rule == tuning.RULE_MIN_LAYERS


def test_min_layers_then_lowest_beta():
    grid = cells((0.6, 0.9, 50, 1e-6), (0.6, 0.3, 50, 9e-6), (0.6, 0.1, 75, 8e-6))
    idx, rule, alt = tuning.select(grid)
    assert idx == 1 and rule == tuning.RULE_MIN_LAYERS and alt == 0


def test_significant_reduction():
    grid = cells((0.6, 0.5, 50, 5e-6), (0.6, 0.5, 75, 4e-7), (0.6, 0.5, 100, 1e-9))
    idx, rule, _ = tuning.select(grid)
    assert idx == 1 and rule == tuning.RULE_SIGNIFICANT


def test_fallback_global_min():
    grid = cells((0.6, 0.5, 50, 3e-4), (0.6, 0.7, 75, 2e-4), (0.9, 0.5, 25, 5e-4))
    idx, rule, _ = tuning.select(grid)
    assert idx == 1 and rule == tuning.RULE_FALLBACK


def test_failed_cells_ignored():
    grid = [GridCell(0.6, 0.5, 50, float("inf"), error="boom"), *cells((0.7, 0.5, 50, 1e-3))]
    assert tuning.select(grid)[0] == 1
    with pytest.raises(InputError):
        tuning.select(grid[:1])


def test_selection_is_pure_function_of_cells():
    rng = np.random.default_rng(0)
    grid = [GridCell(mu, b, m, float(10 ** rng.uniform(-7, -3)))
            for mu in (0.6, 0.9) for b in (0.3, 0.5, 0.9) for m in (25, 50, 75)]
    first = tuning.select(grid)
    reordered = list(reversed(grid))
    idx, rule, _ = tuning.select(reordered)
    assert reordered[idx] == grid[first[0]] and rule == first[1]


@pytest.fixture(scope="module")
def small_report():
    from chebds import spectral, unstable_spiral

    demo = unstable_spiral(1, 150)
    emb = spectral.build_embedding(spectral.GraphSpec(150, 3))
    aligned = spectral.align_to_demo(emb, demo)
    return tuning.grid_search(demo, aligned, mus=[0.9, 0.6], betas=[0.9, 0.5],
                              layer_budgets=[20, 5], threshold=1e-5)


def test_grid_search_order_and_prefix(small_report):
    keys = [(c.mu, c.beta, c.layers) for c in small_report.grid]
    assert keys == sorted(keys) and len(keys) == 8
    for mu in (0.6, 0.9):
        for beta in (0.5, 0.9):
            a, b = [c for c in small_report.grid if (c.mu, c.beta) == (mu, beta)]
            assert b.mse <= a.mse


def test_grid_search_matches_direct_fit(small_report):
    from chebds import diffeo, spectral, unstable_spiral

    demo = unstable_spiral(1, 150)
    aligned = spectral.align_to_demo(spectral.build_embedding(spectral.GraphSpec(150, 3)), demo)
    cell = next(c for c in small_report.grid if (c.mu, c.beta, c.layers) == (0.6, 0.9, 5))
    direct = diffeo.fit(aligned, demo.points, mu=0.6, beta=0.9, max_layers=5, mse_stop=0.0)
    assert cell.mse == direct.normalized_mse


def test_parallel_matches_serial(small_report):
    from chebds import spectral, unstable_spiral

    demo = unstable_spiral(1, 150)
    aligned = spectral.align_to_demo(spectral.build_embedding(spectral.GraphSpec(150, 3)), demo)
    par = tuning.grid_search(demo, aligned, mus=[0.9, 0.6], betas=[0.9, 0.5],
                             layer_budgets=[20, 5], jobs=2)
    assert par.to_dict() == small_report.to_dict()


def test_report_exports(small_report, tmp_path):
    small_report.save_json(tmp_path / "r.json")
    doc = json.loads((tmp_path / "r.json").read_text())
    assert doc["selected"] == small_report.selected and len(doc["grid"]) == 8
    paths = small_report.save_heatmaps(tmp_path)
    assert [p.rsplit("/", 1)[1] for p in paths] == ["heatmap_M5.csv", "heatmap_M20.csv"]
    rows = (tmp_path / "heatmap_M20.csv").read_text().splitlines()
    assert rows[0] == "mu\\beta,0.5,0.9" and len(rows) == 3
    assert rows[1].startswith("0.6,")
