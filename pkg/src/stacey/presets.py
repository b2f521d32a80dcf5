"""Hyperparameter presets from the published CIFAR / ImageNet / LLM tables.

Each preset maps to ``(optimizer_name, fields)`` where ``fields`` are
HyperParams keyword arguments. Entries the tables leave blank keep the
HyperParams defaults. Every preset uses cosine decay; the ImageNet runs also
used 10K warm-up steps.
"""

from __future__ import annotations

from .optimizers import HyperParams
from .schedules import Schedule

PRESETS = {
    # CIFAR, ResNet-18, batch 128
    "cifar-sgd": ("sgd_momentum", dict(eta=0.02, beta1=0.9, lam=2e-4)),
    "cifar-adam": ("adam", dict(eta=1e-3, beta1=0.9, beta2=0.999, lam=5e-4, eps=1e-8)),
    "cifar-adamw": ("adamw", dict(eta=0.01, beta1=0.9, beta2=0.999, lam=5e-4, eps=1e-8)),
    "cifar-lion": ("lion", dict(eta=1e-3, beta1=0.9, beta2=0.99, lam=0.01)),
    "cifar-stacey-pp": ("stacey_pp", dict(p=2, eta=0.1, alpha=0.1, beta1=0.9, beta2=0.99,
                                          lam=0.01, tau=0.001, eps=1e-12)),
    "cifar-stacey-p2": ("stacey_p2", dict(p=2, eta=0.1, alpha=0.1, beta1=0.9, beta2=0.99,
                                          lam=0.01, tau=0.001, eps=1e-12)),
    # ImageNet, ResNet-50, batch 256
    "imagenet-sgd": ("sgd_momentum", dict(eta=0.01, beta1=0.9, lam=5e-4)),
    "imagenet-adamw": ("adamw", dict(eta=2e-3, beta1=0.9, beta2=0.999, lam=5e-3, eps=1e-4)),
    "imagenet-lion": ("lion", dict(eta=3e-4, beta1=0.9, beta2=0.99, lam=0.01)),
    "imagenet-stacey-pp": ("stacey_pp", dict(p=3, eta=0.01, alpha=1e-3, beta1=0.9, beta2=0.999,
                                             lam=1e-3, tau=0.001, eps=1e-8)),
    "imagenet-stacey-p2": ("stacey_p2", dict(p=2.8, eta=0.01, alpha=1e-3, beta1=0.9, beta2=0.999,
                                             lam=1e-3, tau=0.001, eps=1e-8)),
    # llama-100m pretraining, batch 16
    "llm-sgd": ("sgd_momentum", dict(eta=0.01, beta1=0.9, lam=5e-4)),
    "llm-adam": ("adam", dict(eta=1e-4, beta1=0.9, beta2=0.999, lam=0.01, eps=1e-8)),
    "llm-adamw": ("adamw", dict(eta=1e-4, beta1=0.9, beta2=0.999, lam=0.05, eps=1e-8)),
    "llm-lion": ("lion", dict(eta=0.05, beta1=0.9, beta2=0.999, lam=0.01)),
    "llm-stacey-pp": ("stacey_pp", dict(p=3, eta=0.01, alpha=0.1, beta1=0.9, beta2=0.99,
                                        lam=0.01, tau=0.001, eps=1e-8)),
    "llm-stacey-p2": ("stacey_p2", dict(p=2.8, eta=0.01, alpha=0.1, beta1=0.9, beta2=0.99,
                                        lam=5e-4, tau=0.001, eps=1e-8)),
}

PRESET_BATCH_SIZE = {"cifar": 128, "imagenet": 256, "llm": 16}
PRESET_WARMUP = {"imagenet": 10_000}


def preset_fields(name: str) -> tuple[str, dict]:
    """Return ``(optimizer_name, hyperparameter fields)`` including schedule hints."""
    try:
        opt, fields = PRESETS[name]
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; known: {sorted(PRESETS)}") from None
    family = name.split("-", 1)[0]
    fields = dict(fields)
    warm = PRESET_WARMUP.get(family, 0)
    fields["schedule_kind"] = "cosine-with-warmup" if warm else "cosine"
    fields["warmup_steps"] = warm
    return opt, fields


def load_preset(name: str, total_steps: int = 1) -> tuple[str, HyperParams]:
    opt, fields = preset_fields(name)
    kind = fields.pop("schedule_kind")
    warm = fields.pop("warmup_steps")
    sched = Schedule(kind=kind, total_steps=total_steps, warmup_steps=warm)
    return opt, HyperParams(schedule=sched, **fields)
