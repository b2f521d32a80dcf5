"""Experiment configuration files.

A config is a TOML document with four tables::

    [problem]
    name = "logistic"          # quadratic | rosenbrock | logistic | mlp
    dataset = "two-gaussians"  # two-gaussians | two-moons | path to a DSB1 file
    n_samples = 500
    n_features = 20
    data_seed = 0

    [optimizer]
    name = "stacey_pp"         # or give preset = "cifar-stacey-pp"
    p = 3                      # number or "inf"
    eta = 0.01

    [oracle]
    mode = "additive"          # additive | minibatch
    batch_size = 1             # integer or "T"
    sigma = 0.1                # scalar or per-coordinate list

    [run]
    T = 1000
    seeds = [0, 1, 2]
    log_every = 1
    output = "runs/example"

Keys not listed in the tables below are rejected. Optimizer keys given
explicitly override the preset.
"""

from __future__ import annotations

import copy
import hashlib
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import tomli_w

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

from ..errors import ConfigError
from ..geometry import PNorm
from ..optimizers import STEPPERS, HyperParams
from ..presets import PRESETS, preset_fields
from ..problems import (
    LogisticProblem,
    MLPProblem,
    QuadraticProblem,
    RosenbrockProblem,
    StochasticOracle,
    generate_synthetic,
    load_dataset,
    random_quadratic,
)
from ..schedules import Schedule

PROBLEM_KEYS = {
    "name", "dim", "cond", "seed", "diag_a", "b", "dataset", "n_samples", "n_features",
    "separation", "data_seed", "l2_reg", "hidden", "activation", "init_seed", "train_fraction",
}
OPTIMIZER_KEYS = {
    "name", "preset", "p", "eta", "alpha", "tau", "beta1", "beta2", "lambda", "eps",
    "schedule", "warmup_steps", "floor_fraction", "strict_init",
}
ORACLE_KEYS = {"mode", "batch_size", "sigma"}
RUN_KEYS = {"T", "seeds", "log_every", "output", "workers"}
SECTIONS = {"problem": PROBLEM_KEYS, "optimizer": OPTIMIZER_KEYS, "oracle": ORACLE_KEYS, "run": RUN_KEYS}

PROBLEMS = ("quadratic", "rosenbrock", "logistic", "mlp")

# HyperParams field name for each optimizer config key
_HP_FIELDS = {"p": "p", "eta": "eta", "alpha": "alpha", "tau": "tau", "beta1": "beta1",
              "beta2": "beta2", "lambda": "lam", "eps": "eps"}


@dataclass
class ExperimentConfig:
    problem: dict
    optimizer: dict
    oracle: dict = field(default_factory=dict)
    run: dict = field(default_factory=dict)

    def __post_init__(self):
        self.validate()

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        unknown = set(data) - set(SECTIONS)
        if unknown:
            raise ConfigError(f"unknown config section(s): {sorted(unknown)}")
        return cls(**{k: copy.deepcopy(dict(data.get(k, {}))) for k in SECTIONS})

    def to_dict(self) -> dict:
        return {k: copy.deepcopy(getattr(self, k)) for k in SECTIONS}

    def validate(self) -> None:
        for section, allowed in SECTIONS.items():
            table = getattr(self, section)
            if not isinstance(table, dict):
                raise ConfigError(f"[{section}] must be a table")
            bad = set(table) - allowed
            if bad:
                raise ConfigError(f"unknown key {section}.{sorted(bad)[0]}")
        if self.problem.get("name") not in PROBLEMS:
            raise ConfigError(f"problem.name must be one of {PROBLEMS}, got {self.problem.get('name')!r}")
        preset = self.optimizer.get("preset")
        if preset is not None and preset not in PRESETS:
            raise ConfigError(f"optimizer.preset: unknown preset {preset!r}")
        name = self.optimizer_name
        if name not in STEPPERS:
            raise ConfigError(f"optimizer.name: unknown optimizer {name!r}; known: {sorted(STEPPERS)}")
        if self.T < 1:
            raise ConfigError("run.T must be >= 1")
        seeds = self.seeds
        if not seeds:
            raise ConfigError("run.seeds must list at least one seed")
        if any(not isinstance(s, int) or isinstance(s, bool) for s in seeds):
            raise ConfigError("run.seeds must be integers")
        if self.log_every < 1:
            raise ConfigError("run.log_every must be >= 1")
        try:
            self.hyperparams()
            self.oracle_for(seeds[0])
        except ConfigError:
            raise
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc

    @property
    def optimizer_name(self) -> str:
        name = self.optimizer.get("name")
        if name is None and "preset" in self.optimizer:
            name = PRESETS[self.optimizer["preset"]][0]
        return name

    @property
    def T(self) -> int:
        return int(self.run.get("T", 100))

    @property
    def seeds(self) -> list:
        return list(self.run.get("seeds", [0]))

    @property
    def log_every(self) -> int:
        return int(self.run.get("log_every", 1))

    @property
    def output(self):
        out = self.run.get("output")
        return Path(out) if out else None

    def hyperparams(self) -> HyperParams:
        opt = self.optimizer
        fields = {}
        sched = {"kind": "constant", "warmup_steps": 0, "floor_fraction": 0.0}
        if "preset" in opt:
            _, pf = preset_fields(opt["preset"])
            sched["kind"] = pf.pop("schedule_kind")
            sched["warmup_steps"] = pf.pop("warmup_steps")
            fields.update(pf)
        for key, hp_name in _HP_FIELDS.items():
            if key in opt:
                fields[hp_name] = opt[key]
        if "p" in fields:
            fields["p"] = PNorm(fields["p"])
        if "schedule" in opt:
            sched["kind"] = opt["schedule"]
        for key in ("warmup_steps", "floor_fraction"):
            if key in opt:
                sched[key] = opt[key]
        fields["schedule"] = Schedule(sched["kind"], self.T, int(sched["warmup_steps"]),
                                      float(sched["floor_fraction"]))
        return HyperParams(**fields)

    @property
    def strict_init(self) -> bool:
        return bool(self.optimizer.get("strict_init", False))

    def oracle_for(self, seed: int) -> StochasticOracle:
        o = self.oracle
        return StochasticOracle(
            mode=o.get("mode", "additive"),
            batch_size=o.get("batch_size", 1),
            sigma=o.get("sigma", 0.0),
            seed=seed,
            horizon=self.T,
        )

    def family_hash(self) -> str:
        """Hash of everything except seeds, output location and worker count."""
        d = self.to_dict()
        for k in ("seeds", "output", "workers"):
            d["run"].pop(k, None)
        blob = json.dumps(d, sort_keys=True, separators=(",", ":"), default=str)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def with_overrides(self, overrides: dict) -> "ExperimentConfig":
        d = self.to_dict()
        for path, value in overrides.items():
            section, key = split_key(path)
            d[section][key] = value
        return ExperimentConfig.from_dict(d)


def split_key(path: str) -> tuple[str, str]:
    section, _, key = path.partition(".")
    if section not in SECTIONS or not key or key not in SECTIONS[section]:
        raise ConfigError(f"unknown config key {path!r}")
    return section, key


def parse_config(text: str) -> ExperimentConfig:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config syntax error: {exc}") from exc
    return ExperimentConfig.from_dict(data)


def load_config(path) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)


def dump_config(cfg: ExperimentConfig) -> str:
    return tomli_w.dumps(cfg.to_dict())


def build_problem(cfg: ExperimentConfig, seed: int):
    """Return ``(problem, held_out_dataset_or_None)`` for a run with ``seed``.

    Dataset problems split off a held-out set (default 20%) with a seeded
    shuffle; MLP weights are initialised from ``init_seed`` or the run seed.
    """
    pc = cfg.problem
    name = pc["name"]
    if name == "quadratic":
        if "diag_a" in pc:
            a = pc["diag_a"]
            b = pc.get("b", [0.0] * len(a))
            return QuadraticProblem(a, b), None
        return random_quadratic(int(pc.get("dim", 10)), int(pc.get("seed", 0)),
                                float(pc.get("cond", 100.0))), None
    if name == "rosenbrock":
        return RosenbrockProblem(int(pc.get("dim", 2))), None

    ds_name = pc.get("dataset", "two-gaussians")
    data_seed = int(pc.get("data_seed", 0))
    if ds_name in ("two-gaussians", "two-moons"):
        data = generate_synthetic(ds_name, int(pc.get("n_samples", 500)), data_seed,
                                  n_features=int(pc.get("n_features", 2)),
                                  separation=float(pc.get("separation", 4.0)))
    else:
        data = load_dataset(ds_name)
    frac = float(pc.get("train_fraction", 0.8))
    if frac < 1.0:
        train, test = data.split(frac, data_seed)
    else:
        train, test = data, None
    if name == "logistic":
        return LogisticProblem(train, float(pc.get("l2_reg", 0.0))), test
    init_seed = int(pc.get("init_seed", seed))
    return MLPProblem(train, int(pc.get("hidden", 8)), pc.get("activation", "tanh"), init_seed), test
