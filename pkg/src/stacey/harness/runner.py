"""Trajectory execution and the RunRecord CSV format.

CSV layout: a metadata block of ``# key=value`` lines (config hash, seed,
wall time, notes), then a header row and the data rows. Only the data
section is covered by the determinism guarantee.
"""

from __future__ import annotations

import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from ..errors import DivergenceError
from ..geometry import stationarity_measure
from ..optimizers import HyperParams, get_stepper, init_state
from ..problems import Dataset, Problem, StochasticOracle, stochastic_gradient
from .config import ExperimentConfig, build_problem

log = logging.getLogger(__name__)

BASE_COLUMNS = ["t", "eta_t", "loss", "stationarity", "grad_l2", "grad_linf", "update_linf"]
WORKERS_ENV = "STACEY_WORKERS"
ACCURACY_NOTE = "held-out accuracy is a desk-scale analogue, not comparable to benchmark test accuracy"


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


@dataclass
class RunRecord:
    columns: list
    rows: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)
    diverged: bool = False

    @property
    def run_id(self) -> str:
        return self.meta.get("run_id", "run")

    @property
    def seed(self) -> int:
        return int(self.meta.get("seed", 0))

    @property
    def final_theta(self) -> Optional[np.ndarray]:
        return self.meta.get("final_theta")

    def channel(self, name: str) -> np.ndarray:
        if name not in self.columns:
            raise KeyError(f"channel {name!r} not in record; available: {self.columns[1:]}")
        return np.array([row[name] for row in self.rows if not row.get("diverged")], dtype=float)

    def data_csv(self) -> str:
        cols = self.columns + ["diverged"]
        lines = [",".join(cols)]
        for row in self.rows:
            lines.append(",".join(fmt(row.get(c, 0)) for c in cols))
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        head = []
        for key in ("run_id", "config_hash", "seed", "optimizer", "p", "wall_time_s", "note"):
            if key in self.meta:
                head.append(f"# {key}={self.meta[key]}")
        return "\n".join(head) + ("\n" if head else "") + self.data_csv()

    def write_csv(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="\n") as fh:
            fh.write(self.to_csv())
        return path

    @classmethod
    def read_csv(cls, path) -> "RunRecord":
        meta, lines = {}, []
        with open(path) as fh:
            for line in fh:
                line = line.rstrip("\n")
                if line.startswith("#"):
                    key, _, val = line[1:].strip().partition("=")
                    meta[key] = val
                elif line:
                    lines.append(line)
        header = lines[0].split(",")
        rows = []
        for line in lines[1:]:
            vals = line.split(",")
            row = {}
            for c, v in zip(header, vals):
                row[c] = int(v) if c in ("t", "diverged") else float(v)
            rows.append(row)
        cols = [c for c in header if c != "diverged"]
        rec = cls(columns=cols, rows=rows, meta=meta)
        rec.diverged = any(r.get("diverged") for r in rows)
        return rec


def run_trajectory(problem: Problem, optimizer: str, hp: HyperParams, oracle: StochasticOracle,
                   T: int, log_every: int = 1, strict_init: bool = False,
                   test_data: Optional[Dataset] = None, theta0=None, meta: Optional[dict] = None
                   ) -> RunRecord:
    """Run ``T`` steps; log iterates t = 0, log_every, ... and the final t = T.

    Row t describes theta_t: full-batch loss and gradient statistics, the
    step size eta_t applied at step t, and ||theta_t - theta_{t-1}||_inf.
    A divergence ends the record with a row flagged ``diverged``.
    """
    step = get_stepper(optimizer)
    theta = problem.theta0.copy() if theta0 is None else np.array(theta0, dtype=float)
    state = init_state(theta, strict_init)
    has_acc = hasattr(problem, "accuracy")
    columns = list(BASE_COLUMNS)
    if has_acc:
        columns.append("train_acc")
        if test_data is not None:
            columns.append("test_acc")
    rec = RunRecord(columns=columns, meta=dict(meta or {}))
    last_update = 0.0
    lo, hi = theta.copy(), theta.copy()

    def log_row(t):
        g = problem.grad(theta)
        row = {
            "t": t,
            "eta_t": hp.eta_at(t),
            "loss": problem.value(theta),
            "stationarity": stationarity_measure(g, hp.p),
            "grad_l2": float(np.linalg.norm(g)),
            "grad_linf": float(np.max(np.abs(g))),
            "update_linf": last_update,
        }
        if has_acc:
            row["train_acc"] = problem.accuracy(theta)
            if test_data is not None:
                row["test_acc"] = problem.accuracy(theta, test_data)
        rec.rows.append(row)

    for t in range(T):
        if t % log_every == 0:
            log_row(t)
        g_tilde = stochastic_gradient(problem, theta, oracle, t)
        try:
            new = step(theta, g_tilde, hp, state)
        except DivergenceError as exc:
            log.warning("run diverged: %s", exc)
            row = {c: math.nan for c in columns}
            row.update(t=t + 1, eta_t=hp.eta_at(t + 1), diverged=True)
            rec.rows.append(row)
            rec.diverged = True
            break
        last_update = float(np.max(np.abs(new - theta)))
        theta = new
        np.minimum(lo, theta, out=lo)
        np.maximum(hi, theta, out=hi)
    else:
        log_row(T)
    # componentwise envelope of every iterate, for post-hoc region checks
    rec.meta.update(final_theta=theta, theta_lo=lo, theta_hi=hi)
    return rec


def run_single(cfg: ExperimentConfig, seed: int, run_id: Optional[str] = None) -> RunRecord:
    problem, test = build_problem(cfg, seed)
    hp = cfg.hyperparams()
    fam = cfg.family_hash()
    meta = {
        "run_id": run_id or f"{cfg.optimizer_name}-{fam[:8]}",
        "config_hash": fam,
        "seed": seed,
        "optimizer": cfg.optimizer_name,
        "p": str(hp.p),
    }
    if test is not None:
        meta["note"] = ACCURACY_NOTE
    start = time.perf_counter()
    rec = run_trajectory(problem, cfg.optimizer_name, hp, cfg.oracle_for(seed), cfg.T,
                         cfg.log_every, cfg.strict_init, test, meta=meta)
    rec.meta["wall_time_s"] = f"{time.perf_counter() - start:.3f}"
    return rec


def _job(args):
    cfg_dict, seed, run_id = args
    rec = run_single(ExperimentConfig.from_dict(cfg_dict), seed, run_id)
    for key in ("final_theta", "theta_lo", "theta_hi"):
        rec.meta.pop(key, None)
    return rec


def worker_count(cfg: Optional[ExperimentConfig] = None) -> int:
    env = os.environ.get(WORKERS_ENV)
    if env:
        return max(1, int(env))
    if cfg is not None and "workers" in cfg.run:
        return max(1, int(cfg.run["workers"]))
    return 1


def run_jobs(jobs, workers: int = 1):
    """Run ``(cfg_dict, seed, run_id)`` jobs, returning records in job order."""
    if workers <= 1 or len(jobs) <= 1:
        return [_job(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_job, jobs))


def record_path(out_dir, rec: RunRecord) -> Path:
    return Path(out_dir) / f"{rec.run_id}_seed{rec.seed}.csv"


def run_experiment(cfg: ExperimentConfig, out_dir=None, run_id: Optional[str] = None) -> list:
    """One RunRecord per configured seed; CSVs written when an output dir is known."""
    run_id = run_id or f"{cfg.optimizer_name}-{cfg.family_hash()[:8]}"
    jobs = [(cfg.to_dict(), s, run_id) for s in cfg.seeds]
    records = run_jobs(jobs, worker_count(cfg))
    out_dir = out_dir if out_dir is not None else cfg.output
    if out_dir is not None:
        for rec in records:
            rec.write_csv(record_path(out_dir, rec))
    return records
