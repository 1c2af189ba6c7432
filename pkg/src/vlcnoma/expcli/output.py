"""CSV and per-figure plot-data writers for sweep results."""

from __future__ import annotations

import csv
from collections import defaultdict
from dataclasses import astuple, dataclass, fields
from pathlib import Path
from typing import Iterable, Sequence

from .sweep import ResultRow

CSV_HEADER = "scenario,allocation,num_users,seed,avg_ber,sum_rate_bps,handover_count,wall_time_s"


class PlotDataError(ValueError):
    pass


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def emit_csv(rows: Iterable[ResultRow], path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [CSV_HEADER]
    lines.extend(",".join(_fmt(v) for v in astuple(r)) for r in rows)
    path.write_text("\n".join(lines) + "\n")
    return path


def read_csv(path: str | Path) -> list[ResultRow]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if ",".join(header) != CSV_HEADER:
            raise ValueError(f"unexpected CSV header in {path}")
        types = [f.type for f in fields(ResultRow)]
        casts = {"str": str, "int": int, "float": float}
        return [ResultRow(*(casts[t](v) for t, v in zip(types, rec))) for rec in reader]


@dataclass(frozen=True)
class Figure:
    name: str
    metric: str
    # curve slug -> (scenario, allocation); None means "any allocation"
    curves: dict[str, tuple[str, str | None]]


FIGURES = {
    "fig2a": Figure(
        "fig2a",
        "avg_ber",
        {"static-0.3": ("none", "static:0.3"), "static-0.4": ("none", "static:0.4"), "grpa": ("none", "grpa")},
    ),
    "fig2b": Figure(
        "fig2b",
        "sum_rate_bps",
        {"no-tuning": ("none", "static:0.4"), "angle-tuning": ("angle", "static:0.4"), "fov-tuning": ("fov", "static:0.4")},
    ),
    "fig2c": Figure(
        "fig2c",
        "sum_rate_bps",
        {"no-tuning": ("none", "grpa"), "angle-tuning": ("angle", "grpa"), "fov-tuning": ("fov", "grpa")},
    ),
    "fig3": Figure(
        "fig3",
        "handover_count",
        {"fixed-fov": ("none", None), "tunable-fov": ("fov-ho", None)},
    ),
}


def _series(rows: Sequence[ResultRow], scenario: str, allocation: str | None, metric: str):
    if allocation is None:
        # mobility and association do not depend on the allocation scheme
        present = sorted({r.allocation for r in rows if r.scenario == scenario})
        if not present:
            return None
        allocation = "grpa" if "grpa" in present else present[0]
    groups = defaultdict(list)
    for r in rows:
        if r.scenario == scenario and r.allocation == allocation:
            groups[r.num_users].append(getattr(r, metric))
    if not groups:
        return None
    return [(n, sum(v) / len(v)) for n, v in sorted(groups.items())]


def emit_plotdata(
    rows: Sequence[ResultRow], out_dir: str | Path, figures: Sequence[str] | None = None
) -> list[Path]:
    """Write one two-column series file per (figure, curve).

    Column 1 is the user count, column 2 the seed-averaged metric. With
    ``figures=None`` every figure the rows can support is written; naming a
    figure whose scenario or allocation is missing raises PlotDataError.
    """
    out_dir = Path(out_dir)
    strict = figures is not None
    names = list(figures) if strict else list(FIGURES)
    written = []
    for name in names:
        if name not in FIGURES:
            raise PlotDataError(f"unknown figure {name!r}; known: {sorted(FIGURES)}")
        fig = FIGURES[name]
        series = {}
        for slug, (scenario, allocation) in fig.curves.items():
            s = _series(rows, scenario, allocation, fig.metric)
            if s is None:
                if strict:
                    raise PlotDataError(
                        f"{name}: no rows for curve {slug!r} (scenario={scenario}, allocation={allocation or 'any'})"
                    )
                break
            series[slug] = s
        else:
            out_dir.mkdir(parents=True, exist_ok=True)
            for slug, s in series.items():
                path = out_dir / f"{name}_{slug}.dat"
                body = "".join(f"{n} {v!r}\n" for n, v in s)
                path.write_text(f"# num_users {fig.metric}\n" + body)
                written.append(path)
    return written
