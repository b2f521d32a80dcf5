"""Grid sweeps over config keys."""

from __future__ import annotations

import itertools
import sys
from pathlib import Path

import numpy as np

from ..errors import ConfigError
from .config import ExperimentConfig, split_key
from .runner import fmt, record_path, run_jobs, worker_count

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib


def _parse_value(text: str):
    text = text.strip()
    try:
        return tomllib.loads(f"v = {text}")["v"]
    except tomllib.TOMLDecodeError:
        return text


def parse_grid(spec: str) -> dict:
    """Parse ``"optimizer.p=2,3,4;optimizer.eta=0.1,0.01"`` into a dict of lists."""
    grid = {}
    for part in filter(None, (s.strip() for s in spec.split(";"))):
        key, eq, values = part.partition("=")
        if not eq:
            raise ConfigError(f"grid entry {part!r} is missing '='")
        split_key(key.strip())
        grid[key.strip()] = [_parse_value(v) for v in values.split(",") if v.strip()]
    return grid


def grid_cells(grid: dict) -> list:
    """Cartesian product with keys sorted and values in given order."""
    for key in grid:
        split_key(key)
    keys = sorted(grid)
    return [dict(zip(keys, combo)) for combo in itertools.product(*(grid[k] for k in keys))]


def sweep(grid: dict, base: ExperimentConfig, out_dir=None) -> list:
    """Run every grid cell for every seed; return one summary dict per cell.

    Diverged runs do not stop the sweep; the cell is flagged instead.
    """
    cells = grid_cells(grid)
    configs = [base.with_overrides(c) for c in cells]
    jobs = []
    for i, cfg in enumerate(configs):
        for s in cfg.seeds:
            jobs.append((cfg.to_dict(), s, f"cell{i:03d}"))
    records = run_jobs(jobs, worker_count(base))
    out_dir = out_dir if out_dir is not None else base.output

    summary, k = [], 0
    for i, (cell, cfg) in enumerate(zip(cells, configs)):
        recs = records[k:k + len(cfg.seeds)]
        k += len(cfg.seeds)
        finals, best = [], np.inf
        for rec in recs:
            loss = rec.channel("loss")
            stat = rec.channel("stationarity")
            if loss.size:
                finals.append(loss[-1])
            if stat.size:
                best = min(best, float(stat.min()))
        row = {"cell": i, **cell,
               "final_loss": float(np.mean(finals)) if finals else float("nan"),
               "best_stationarity": best,
               "diverged": any(r.diverged for r in recs)}
        summary.append(row)
        if out_dir is not None:
            for rec in recs:
                rec.write_csv(record_path(out_dir, rec))
    if out_dir is not None:
        write_summary(summary, Path(out_dir) / "summary.csv")
    return summary


def write_summary(rows: list, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    cols = list(rows[0]) if rows else ["cell"]
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(cols) + "\n")
        for r in rows:
            fh.write(",".join(v if isinstance(v, str) else fmt(v) for v in (r[c] for c in cols)) + "\n")
    return path
