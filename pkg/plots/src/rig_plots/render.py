"""Render threshold figures from rig sweep CSV files.

Reads the sweep command's CSV schema (comment lines start with '#') and
draws P{no isolated nodes} against the varied parameter: one curve per
metric with a +-2 standard error band, the analytic bound curves where the
file carries them, and dashed vertical markers at the critical values.

The script never re-runs simulations; the CSV file is the entire input, so
rendering the same file twice gives the same figure.
"""
from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

EXPECTED_COLUMNS = ["metric", "n", "r", "p", "trials", "seed", "p_hat",
                    "stderr", "mean_isolated", "mean_isolated_sq",
                    "analytic_E_I", "prob_lower", "prob_upper"]

METRIC_STYLE = {
    "circle": {"color": "#0173b2", "label": "unit circle"},
    "interval": {"color": "#de8f05", "label": "unit interval"},
}


class SchemaError(ValueError):
    """The CSV does not conform to the sweep schema."""


@dataclass(frozen=True)
class FigureSpec:
    """One figure: input CSV, x-axis variable, markers, output path."""

    csv_path: str
    x: str  # "r" or "p"
    markers: tuple[float, ...] = field(default_factory=tuple)
    out_path: str = "figure.png"

    def __post_init__(self) -> None:
        if self.x not in ("r", "p"):
            raise ValueError(f"x must be 'r' or 'p', got {self.x!r}")


def _to_float(text: str) -> float | None:
    return float(text) if text else None


def load_rows(csv_path: str) -> list[dict]:
    """Parse a sweep CSV; raises SchemaError naming any offending column."""
    with open(csv_path, newline="") as fh:
        reader = csv.reader(line for line in fh if not line.startswith("#"))
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError("file has no header row") from None
        for column in EXPECTED_COLUMNS:
            if column not in header:
                raise SchemaError(f"missing column: {column}")
        idx = {column: header.index(column) for column in EXPECTED_COLUMNS}
        rows = []
        for record in reader:
            if not record or not any(record):
                continue
            try:
                rows.append({
                    "metric": record[idx["metric"]],
                    "r": float(record[idx["r"]]),
                    "p": float(record[idx["p"]]),
                    "p_hat": float(record[idx["p_hat"]]),
                    "stderr": float(record[idx["stderr"]]),
                    "prob_lower": _to_float(record[idx["prob_lower"]]),
                    "prob_upper": _to_float(record[idx["prob_upper"]]),
                })
            except (IndexError, ValueError) as exc:
                raise SchemaError(f"bad data row: {record!r} ({exc})") from None
    return rows


def _check_varied(rows: list[dict], x: str) -> None:
    xs = sorted({row[x] for row in rows})
    if len(xs) < 2:
        raise SchemaError(
            f"x-axis variable {x!r} does not vary in this file; "
            f"column {x!r} holds {xs}")
    other = "p" if x == "r" else "r"
    if len({row[other] for row in rows}) != 1:
        raise SchemaError(f"fixed parameter {other!r} varies in this file")


def render(spec: FigureSpec) -> None:
    """Draw the figure described by spec; raises before writing on bad input."""
    rows = load_rows(spec.csv_path)
    if not rows:
        raise SchemaError("no data rows in file")
    _check_varied(rows, spec.x)

    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for metric, style in METRIC_STYLE.items():
        series = sorted((row for row in rows if row["metric"] == metric),
                        key=lambda row: row[spec.x])
        if not series:
            continue
        xs = [row[spec.x] for row in series]
        ys = [row["p_hat"] for row in series]
        es = [row["stderr"] for row in series]
        ax.plot(xs, ys, "-o", ms=3, color=style["color"], label=style["label"])
        ax.fill_between(xs, [y - 2 * e for y, e in zip(ys, es)],
                        [y + 2 * e for y, e in zip(ys, es)],
                        color=style["color"], alpha=0.2, linewidth=0)
        for bound, dash in (("prob_lower", (0, (2, 2))), ("prob_upper", (0, (5, 2)))):
            pts = [(row[spec.x], row[bound]) for row in series
                   if row[bound] is not None]
            if pts:
                ax.plot([q[0] for q in pts], [q[1] for q in pts],
                        linestyle=dash, linewidth=1.0, color=style["color"],
                        alpha=0.8)
    for value in spec.markers:
        ax.axvline(value, color="0.3", linestyle="--", linewidth=1.0)
    ax.set_xlabel("transmission range r" if spec.x == "r"
                  else "link probability p")
    ax.set_ylabel("P{no isolated nodes}")
    ax.set_ylim(-0.02, 1.02)
    ax.legend(loc="best")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(spec.out_path, dpi=150)
    plt.close(fig)


def _parse_markers(text: str) -> tuple[float, ...]:
    if not text:
        return ()
    try:
        return tuple(float(tok) for tok in text.split(",") if tok.strip())
    except ValueError as exc:
        raise SystemExit(f"error: bad --markers value {text!r} ({exc})")


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="rig-plot",
        description="Render a threshold figure from a rig sweep CSV")
    parser.add_argument("--in", dest="csv_path", required=True)
    parser.add_argument("--x", choices=["r", "p"], required=True)
    parser.add_argument("--markers", default="",
                        help="comma-separated critical values, e.g. 0.092,0.123")
    parser.add_argument("--out", required=True)
    args = parser.parse_args(argv)
    spec = FigureSpec(args.csv_path, args.x, _parse_markers(args.markers),
                      args.out)
    try:
        render(spec)
    except (SchemaError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
