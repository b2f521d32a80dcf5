"""Long-format export of run channels for external plotting."""

from __future__ import annotations

import math
from pathlib import Path

from .runner import RunRecord, fmt


def _sample_std(values) -> float:
    n = len(values)
    if n < 2:
        return 0.0
    mean = sum(values) / n
    return math.sqrt(sum((v - mean) ** 2 for v in values) / (n - 1))


def export_plot_data(records: list, channels: list, out_path) -> Path:
    """Write ``run_id,seed,t,channel,value`` rows, then seed mean/std rows per channel.

    Aggregate rows use run_id ``mean`` / ``std`` and an empty seed; the std is
    the sample (n - 1) standard deviation, 0 for a single record.
    """
    if not records:
        raise ValueError("no records to export")
    families = {r.meta.get("config_hash") for r in records}
    if len(families) > 1:
        raise ValueError(f"records come from different config families: {sorted(map(str, families))}")
    available = set.intersection(*(set(r.columns) for r in records)) - {"t"}
    for ch in channels:
        if ch not in available:
            raise KeyError(f"channel {ch!r} not in records; available: {sorted(available)}")

    lines = ["run_id,seed,t,channel,value"]
    by_t = {ch: {} for ch in channels}
    for rec in records:
        for ch in channels:
            for row in rec.rows:
                if row.get("diverged"):
                    continue
                lines.append(f"{rec.run_id},{rec.seed},{row['t']},{ch},{fmt(row[ch])}")
                by_t[ch].setdefault(int(row["t"]), []).append(float(row[ch]))
    for ch in channels:
        for t in sorted(by_t[ch]):
            vals = by_t[ch][t]
            lines.append(f"mean,,{t},{ch},{fmt(sum(vals) / len(vals))}")
            lines.append(f"std,,{t},{ch},{fmt(_sample_std(vals))}")
    out = Path(out_path)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    return out


def load_records(paths) -> list:
    return [RunRecord.read_csv(p) for p in paths]
