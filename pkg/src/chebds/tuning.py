"""Hyperparameter grid search over ``(mu, beta, layers)`` for the deformation fit."""

import csv
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import diffeo
from ._validation import check_points, check_same_shape
from .exceptions import ChebDSError, InputError

DEFAULT_THRESHOLD = 1e-5
# Extra layers are worth it when they buy a tenfold lower error at most 50% more layers.
REDUCTION_FACTOR = 10.0
LAYER_SLACK = 1.5

RULE_MIN_LAYERS = "min-layers"
RULE_SIGNIFICANT = "significant-reduction"
RULE_FALLBACK = "fallback-min-mse"


@dataclass(frozen=True)
class GridCell:
    mu: float
    beta: float
    layers: int
    mse: float
    used_layers: int = 0
    error: str = ""

    @property
    def ok(self):
        return not self.error and np.isfinite(self.mse)

    def to_dict(self):
        return {
            "mu": self.mu,
            "beta": self.beta,
            "layers": self.layers,
            "mse": self.mse if np.isfinite(self.mse) else None,
            "used_layers": self.used_layers,
            "error": self.error,
        }


@dataclass(frozen=True)
class TuningReport:
    grid: tuple
    selected: int
    selection_rule: str
    threshold: float
    lowest_mse_alternative: int = None

    @property
    def best(self):
        return self.grid[self.selected]

    def to_dict(self):
        return {
            "format": "chebds.tuning",
            "version": 1,
            "threshold": self.threshold,
            "selected": self.selected,
            "selection_rule": self.selection_rule,
            "lowest_mse_alternative": self.lowest_mse_alternative,
            "grid": [cell.to_dict() for cell in self.grid],
        }

    def save_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=1, sort_keys=True)
            fh.write("\n")

    def save_heatmaps(self, directory, prefix="heatmap"):
        """One CSV per layer budget: ``mu`` down the rows, ``beta`` across."""
        mus = sorted({c.mu for c in self.grid})
        betas = sorted({c.beta for c in self.grid})
        paths = []
        for layers in sorted({c.layers for c in self.grid}):
            table = {(c.mu, c.beta): c for c in self.grid if c.layers == layers}
            path = os.path.join(directory, f"{prefix}_M{layers}.csv")
            with open(path, "w", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(["mu\\beta"] + [repr(b) for b in betas])
                for mu in mus:
                    row = [repr(mu)]
                    for beta in betas:
                        cell = table.get((mu, beta))
                        row.append(repr(cell.mse) if cell is not None and cell.ok else "")
                    writer.writerow(row)
            paths.append(path)
        return paths


def select(grid, threshold=DEFAULT_THRESHOLD):
    """Apply the selection rule to ``(mu, beta, layers, mse)`` cells.

    Among cells below ``threshold`` the smallest layer count wins, ties going
    to the lowest ``beta``.  A cell with up to 50% more layers replaces it when
    its error is at least ten times lower.  Without any cell under the
    threshold, the lowest error wins.

    Returns ``(index, rule, alternative)`` where ``alternative`` is the
    lowest-error cell sharing the winner's layer count.
    """
    cells = list(grid)
    if not cells:
        raise InputError("empty grid")
    valid = [i for i, c in enumerate(cells) if c.ok]
    if not valid:
        raise InputError("every grid cell failed")
    passing = [i for i in valid if cells[i].mse < threshold]
    if not passing:
        idx = min(valid, key=lambda i: (cells[i].mse, cells[i].layers, cells[i].beta, i))
        return idx, RULE_FALLBACK, None
    fewest = min(cells[i].layers for i in passing)
    group = [i for i in passing if cells[i].layers == fewest]
    idx = min(group, key=lambda i: (cells[i].beta, cells[i].mse, i))
    alternative = min(group, key=lambda i: (cells[i].mse, cells[i].beta, i))
    rule = RULE_MIN_LAYERS
    better = [
        i for i in passing
        if fewest < cells[i].layers <= LAYER_SLACK * fewest
        and cells[i].mse <= cells[idx].mse / REDUCTION_FACTOR
    ]
    if better:
        idx = min(better, key=lambda i: (cells[i].layers, cells[i].beta, cells[i].mse, i))
        rule = RULE_SIGNIFICANT
        same = [i for i in passing if cells[i].layers == cells[idx].layers]
        alternative = min(same, key=lambda i: (cells[i].mse, cells[i].beta, i))
    return idx, rule, alternative


def _fit_column(args):
    source, target, mu, beta, budgets, fit_kwargs = args
    try:
        model = diffeo.fit(source, target, mu=mu, beta=beta, max_layers=max(budgets),
                           mse_stop=0.0, **fit_kwargs)
    except ChebDSError as exc:
        return [(m, float("inf"), 0, f"{type(exc).__name__}: {exc}") for m in budgets]
    out = []
    for m in budgets:
        used = min(m, model.n_layers)
        out.append((m, model.history[used], used, ""))
    return out


def grid_search(demo, embedding_aligned, mus, betas, layer_budgets,
                threshold=DEFAULT_THRESHOLD, jobs=1, **fit_kwargs):
    """Fit every ``(mu, beta, layers)`` combination and pick one.

    Greedy fitting makes a model with fewer layers a prefix of one with
    more, so each ``(mu, beta)`` pair is fitted once at the largest budget
    and the error at smaller budgets is read off the fit history.  Cells
    that fail are recorded with their error and do not abort the search.
    """
    target = check_points(getattr(demo, "points", demo), name="demo")
    source = check_points(embedding_aligned, name="embedding_aligned")
    check_same_shape(source, target, ("embedding_aligned", "demo"))
    mus = sorted(float(m) for m in mus)
    betas = sorted(float(b) for b in betas)
    budgets = sorted(int(m) for m in layer_budgets)
    if not (mus and betas and budgets):
        raise InputError("grids must be non-empty")
    tasks = [(source, target, mu, beta, budgets, fit_kwargs) for mu in mus for beta in betas]
    if jobs and jobs > 1:
        with ProcessPoolExecutor(max_workers=int(jobs)) as pool:
            results = list(pool.map(_fit_column, tasks))
    else:
        results = [_fit_column(t) for t in tasks]
    cells = []
    for (_, _, mu, beta, _, _), column in zip(tasks, results):
        for m, mse, used, err in column:
            cells.append(GridCell(mu, beta, m, float(mse), used, err))
    cells.sort(key=lambda c: (c.mu, c.beta, c.layers))
    idx, rule, alt = select(cells, threshold)
    return TuningReport(tuple(cells), idx, rule, float(threshold), alt)
