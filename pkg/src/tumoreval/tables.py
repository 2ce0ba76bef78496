"""Fixed-width text rendering for the metric and model-comparison tables.

Layout: a left-aligned row-label column, then right-aligned value columns
separated by two spaces. Column groups (e.g. ``Dice`` over ``ET WT TC``) get a
title line above the column headers and are separated by `` | ``. A dashed
rule separates headers from values. Trailing whitespace is stripped.
"""
from __future__ import annotations

from typing import Sequence

from .metrics import METRICS, REGIONS, SummaryStats

__all__ = ["render_grid", "render_metric_table", "STAT_ROWS"]

_GAP = "  "
_GROUP_SEP = " | "

# (row label, Stat attribute)
STAT_ROWS = (
    ("Mean", "mean"),
    ("Std.", "std"),
    ("Median", "median"),
    ("25 quantile", "q25"),
    ("75 quantile", "q75"),
)

_METRIC_TITLES = {
    "dice": "Dice",
    "sensitivity": "Sensitivity",
    "specificity": "Specificity",
    "hd95": "HD95 (mm)",
}


def render_grid(
    row_labels: Sequence[str],
    headers: Sequence[str],
    rows: Sequence[Sequence[str]],
    groups: Sequence[tuple[str, int]] | None = None,
    corner: str = "",
) -> str:
    """Render pre-formatted cells as a text table.

    ``groups`` is a list of ``(title, n_columns)`` spans that must cover all
    columns in order. Returns the table with a trailing newline.
    """
    ncol = len(headers)
    if any(len(r) != ncol for r in rows) or len(rows) != len(row_labels):
        raise ValueError("rows must match row_labels and headers in shape")
    if groups is None:
        spans = [("", ncol)]
    else:
        spans = list(groups)
        if sum(n for _, n in spans) != ncol:
            raise ValueError("column groups must cover every column exactly once")

    widths = [max([len(headers[c])] + [len(r[c]) for r in rows]) for c in range(ncol)]
    start = 0
    for title, n in spans:
        span_w = sum(widths[start:start + n]) + len(_GAP) * (n - 1)
        if len(title) > span_w:
            widths[start + n - 1] += len(title) - span_w
        start += n
    label_w = max([len(corner)] + [len(s) for s in row_labels])

    def blocks(cells: Sequence[str]) -> list[str]:
        out, start = [], 0
        for _, n in spans:
            out.append(_GAP.join(cells[c].rjust(widths[c]) for c in range(start, start + n)))
            start += n
        return out

    def line(label: str, parts: list[str]) -> str:
        return (label.ljust(label_w) + _GAP + _GROUP_SEP.join(parts)).rstrip()

    lines = []
    if groups is not None:
        titles, start = [], 0
        for title, n in spans:
            span_w = sum(widths[start:start + n]) + len(_GAP) * (n - 1)
            titles.append(title.ljust(span_w))
            start += n
        lines.append(line("", titles))
    header = line(corner, blocks(headers))
    lines.append(header)
    total = label_w + len(_GAP) + sum(widths) + len(_GAP) * (ncol - len(spans)) + len(_GROUP_SEP) * (len(spans) - 1)
    lines.append("-" * total)
    for label, cells in zip(row_labels, rows):
        lines.append(line(label, blocks(cells)))
    return "\n".join(lines) + "\n"


def _fmt_metric(metric: str, value: float) -> str:
    if metric == "hd95":
        return f"{value:.1f}"
    return f"{100.0 * value:.2f}"


def render_metric_table(stats: SummaryStats) -> str:
    """Summary table: Dice, sensitivity, specificity (percent) and HD95 (mm) by region."""
    headers = [r.value for _ in METRICS for r in REGIONS]
    groups = [(_METRIC_TITLES[m], len(REGIONS)) for m in METRICS]
    rows = []
    for _, attr in STAT_ROWS:
        rows.append(
            [_fmt_metric(m, getattr(stats[(m, r)], attr)) for m in METRICS for r in REGIONS]
        )
    return render_grid([label for label, _ in STAT_ROWS], headers, rows, groups)
