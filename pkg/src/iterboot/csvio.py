"""CSV emission and parsing for aggregate curves.

One fixed column order is shared by simulation aggregates and analytic
curves so the two overlay directly. Floats are rendered with 9
significant digits; integer columns as plain integers. Emission is
atomic (write to a temp file, then rename) and byte-stable: parsing an
emitted file and re-emitting it reproduces identical bytes.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

from .analytic import PolicyEvaluation
from .engine import AggregateTrace

__all__ = [
    "AGG_COLUMNS",
    "AggRow",
    "format_float",
    "aggregate_rows",
    "analytic_rows",
    "write_agg_csv",
    "read_agg_csv",
    "write_text_atomic",
    "law_csv_text",
    "run_trace_csv_text",
]

AGG_COLUMNS = (
    "policy_label",
    "source",
    "T",
    "n_t",
    "mean_N_t",
    "mean_gap",
    "se_gap",
    "mean_cum_cost",
    "se_cum_cost",
    "runs_completed",
    "runs_diverged",
)

_INT_COLUMNS = {"T", "n_t", "runs_completed", "runs_diverged"}
_FLOAT_COLUMNS = {"mean_N_t", "mean_gap", "se_gap", "mean_cum_cost", "se_cum_cost"}


@dataclass(frozen=True)
class AggRow:
    policy_label: str
    source: str  # "sim" or "analytic"
    T: int
    n_t: int
    mean_N_t: float
    mean_gap: float
    se_gap: float
    mean_cum_cost: float
    se_cum_cost: float
    runs_completed: int
    runs_diverged: int


def format_float(x: float) -> str:
    """Render with 9 significant digits; stable under parse/re-render."""
    return format(float(x), ".9g")


def aggregate_rows(label: str, agg: AggregateTrace) -> list[AggRow]:
    """Rows for a simulation aggregate, T ascending."""
    return [
        AggRow(
            policy_label=label,
            source="sim",
            T=int(agg.T[i]),
            n_t=int(agg.n[i]),
            mean_N_t=float(agg.mean_N[i]),
            mean_gap=float(agg.mean_gap[i]),
            se_gap=float(agg.se_gap[i]),
            mean_cum_cost=float(agg.mean_cum_cost[i]),
            se_cum_cost=float(agg.se_cum_cost[i]),
            runs_completed=agg.runs_completed,
            runs_diverged=agg.runs_diverged,
        )
        for i in range(len(agg.T))
    ]


def analytic_rows(label: str, ev: PolicyEvaluation) -> list[AggRow]:
    """Rows for an analytic curve in the same schema (SEs are zero,
    run counts are zero; the source column distinguishes them)."""
    return [
        AggRow(
            policy_label=label,
            source="analytic",
            T=int(ev.T[i]),
            n_t=int(ev.n[i]),
            mean_N_t=float(ev.mean_N[i]),
            mean_gap=float(ev.gap[i]),
            se_gap=0.0,
            mean_cum_cost=float(ev.cum_cost[i]),
            se_cum_cost=0.0,
            runs_completed=0,
            runs_diverged=0,
        )
        for i in range(len(ev.T))
    ]


def _render(row: AggRow) -> list[str]:
    out = []
    for col in AGG_COLUMNS:
        v = getattr(row, col)
        if col in _INT_COLUMNS:
            out.append(str(int(v)))
        elif col in _FLOAT_COLUMNS:
            out.append(format_float(v))
        else:
            out.append(str(v))
    return out


def write_text_atomic(path: str | Path, text: str) -> None:
    """Write text via a temp file in the same directory, then rename."""
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def write_agg_csv(path: str | Path, rows: Iterable[AggRow]) -> None:
    """Emit rows sorted by (policy_label, T), header always present."""
    ordered = sorted(rows, key=lambda r: (r.policy_label, r.T))
    lines = [",".join(AGG_COLUMNS)]
    lines.extend(",".join(_render(r)) for r in ordered)
    write_text_atomic(path, "\n".join(lines) + "\n")


def read_agg_csv(path: str | Path) -> list[AggRow]:
    """Parse a file written by :func:`write_agg_csv`."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != AGG_COLUMNS:
            raise ValueError(f"unexpected CSV header in {path}: {header}")
        rows = []
        for rec in reader:
            if not rec:
                continue
            data = dict(zip(AGG_COLUMNS, rec))
            rows.append(
                AggRow(
                    policy_label=data["policy_label"],
                    source=data["source"],
                    T=int(data["T"]),
                    n_t=int(data["n_t"]),
                    mean_N_t=float(data["mean_N_t"]),
                    mean_gap=float(data["mean_gap"]),
                    se_gap=float(data["se_gap"]),
                    mean_cum_cost=float(data["mean_cum_cost"]),
                    se_cum_cost=float(data["se_cum_cost"]),
                    runs_completed=int(data["runs_completed"]),
                    runs_diverged=int(data["runs_diverged"]),
                )
            )
    return rows


def law_csv_text(label: str, ev: PolicyEvaluation) -> str:
    """Detail file for analytic curves: marginal-law trajectory with the
    mean serialized as comma-joined coordinates in a quoted field."""
    lines = ["policy_label,T,mu,sigma2_T,reward,gap"]
    for i in range(len(ev.T)):
        mu = ",".join(format_float(c) for c in ev.mu[i])
        lines.append(
            ",".join(
                [
                    label,
                    str(int(ev.T[i])),
                    f'"{mu}"',
                    format_float(ev.sigma2_T[i]),
                    format_float(ev.reward[i]),
                    format_float(ev.gap[i]),
                ]
            )
        )
    return "\n".join(lines) + "\n"


def run_trace_csv_text(trace) -> str:
    """Per-run trace CSV; theta serialized as comma-joined coordinates."""
    lines = ["t,n_t,N_t,theta,expected_reward_after,cum_cost"]
    for rec in trace.records:
        theta = ",".join(format_float(c) for c in rec.theta_after)
        lines.append(
            ",".join(
                [
                    str(rec.t),
                    str(rec.n_t),
                    str(rec.N_t),
                    f'"{theta}"',
                    format_float(rec.expected_reward_after),
                    format_float(rec.cum_cost),
                ]
            )
        )
    return "\n".join(lines) + "\n"
