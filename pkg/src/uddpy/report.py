"""Report writers: per-quantile CSV, JSON summaries and the plotly sweep report."""

import csv
import io
import json
from datetime import datetime
from typing import Any, Dict, List, Optional

import plotly.graph_objects as go
from plotly.subplots import make_subplots

from .codec import PathLike, atomic_write
from .evaluation import AccuracyReport, SweepResult

CSV_HEADER = ("q", "estimate", "exact", "rel_err")


def profile_csv(report: AccuracyReport) -> str:
    """One ``q,estimate,exact,rel_err`` row per grid point, with a header line."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for q, estimate, exact, rel_err in report.rows():
        writer.writerow((repr(q), repr(estimate), repr(exact), repr(rel_err)))
    return buffer.getvalue()


def to_json(document: Dict[str, Any]) -> str:
    return json.dumps(document, indent=2, sort_keys=False)


def write_profile_csv(path: PathLike, report: AccuracyReport):
    atomic_write(path, profile_csv(report))


def write_json(path: PathLike, document: Dict[str, Any]):
    atomic_write(path, to_json(document) + "\n")


class SweepReportGenerator:
    """Builds an HTML page of plotly charts from a scaling sweep."""

    def __init__(self, alpha0: float, m: int, n: int):
        """Initialize the report generator.

        Args:
            alpha0: Initial accuracy used by every run
            m: Bucket limit used by every run
            n: Stream length per dataset
        """
        self.alpha0 = alpha0
        self.m = m
        self.n = n
        self.timestamp = datetime.now().strftime("%Y-%m-%d %H:%M:%S")

    def create_collapse_chart(self, result: SweepResult) -> str:
        """Grouped bars of total collapses per dataset, one group per policy (largest p)."""
        largest = max(row.procs for row in result.rows)
        policies: Dict[str, Dict[str, int]] = {}
        for row in result.rows:
            if row.procs == largest:
                policies.setdefault(row.policy, {})[row.dataset] = row.collapses

        fig = go.Figure()
        for policy, counts in policies.items():
            datasets = list(counts)
            fig.add_trace(
                go.Bar(
                    name=policy,
                    x=datasets,
                    y=[counts[d] for d in datasets],
                    text=[str(counts[d]) for d in datasets],
                    textposition="outside",
                    hovertemplate="<b>%{x}</b><br>Collapses: %{y}<extra></extra>",
                )
            )
        fig.update_layout(
            title=f"Number of collapses (p={largest})",
            xaxis_title="Dataset",
            yaxis_title="Collapses",
            yaxis_type="log",
            barmode="group",
            height=450,
        )
        return fig.to_html(full_html=False, include_plotlyjs=False, div_id="collapses")

    def create_runtime_chart(self, result: SweepResult) -> str:
        """Log-log mean total runtime against process count, one line per dataset and policy."""
        series: Dict[str, List] = {}
        for row in result.rows:
            label = f"{row.dataset} / {row.policy}"
            series.setdefault(label, []).append((row.procs, row.timings["total"].mean))

        fig = go.Figure()
        for label, points in series.items():
            points.sort()
            fig.add_trace(
                go.Scatter(
                    name=label,
                    x=[p for p, _ in points],
                    y=[t for _, t in points],
                    mode="lines+markers",
                    hovertemplate="p=%{x}<br>%{y:.3f}s<extra></extra>",
                )
            )
        fig.update_layout(
            title="Running time vs processes",
            xaxis_title="Processes",
            yaxis_title="Seconds",
            xaxis_type="log",
            yaxis_type="log",
            height=450,
        )
        return fig.to_html(full_html=False, include_plotlyjs=False, div_id="runtime")

    def create_error_profile_chart(self, result: SweepResult) -> str:
        """Relative error per quantile for every (dataset, policy) pair, one panel per dataset."""
        datasets = sorted({dataset for dataset, _ in result.profiles})
        fig = make_subplots(rows=len(datasets), cols=1, subplot_titles=datasets)
        for index, dataset in enumerate(datasets, start=1):
            for (name, policy), report in result.profiles.items():
                if name != dataset:
                    continue
                fig.add_trace(
                    go.Scatter(
                        name=f"{dataset} / {policy}",
                        x=report.grid,
                        y=report.rel_err,
                        mode="lines",
                        hovertemplate="q=%{x:.3f}<br>rel err %{y:.2e}<extra></extra>",
                    ),
                    row=index,
                    col=1,
                )
        fig.update_yaxes(type="log")
        fig.update_layout(title="Relative error by quantile", height=320 * max(len(datasets), 1))
        return fig.to_html(full_html=False, include_plotlyjs=False, div_id="error-profile")

    def generate_accuracy_table(self, result: SweepResult) -> str:
        """HTML table of q0-accuracy and final alpha per dataset and policy."""
        table = result.accuracy_table()
        policies = sorted({policy for row in table.values() for policy in row})
        header = "".join(f"<th>{p} q0</th><th>{p} &alpha;</th>" for p in policies)
        body = []
        for dataset, cells in table.items():
            values = []
            for policy in policies:
                cell = cells.get(policy)
                if cell is None:
                    values.append("<td>-</td><td>-</td>")
                else:
                    values.append(
                        f"<td>{cell['q0_accuracy']:.3f}</td><td>{cell['alpha_final']:.4g}</td>"
                    )
            body.append(f"<tr><td>{dataset}</td>{''.join(values)}</tr>")
        return (
            f"<table><thead><tr><th>Dataset</th>{header}</tr></thead>"
            f"<tbody>{''.join(body)}</tbody></table>"
        )

    def generate_html_header(self) -> str:
        return f"""<!DOCTYPE html>
<html lang="en">
<head>
    <meta charset="utf-8">
    <title>uddpy sweep report - {self.timestamp}</title>
    <script src="https://cdn.plot.ly/plotly-latest.min.js"></script>
    <style>
        body {{ font-family: -apple-system, 'Segoe UI', Roboto, Helvetica, Arial, sans-serif; margin: 20px; }}
        .container {{ max-width: 1200px; margin: 0 auto; }}
        .chart-container {{ margin: 30px 0; }}
        table {{ border-collapse: collapse; margin: 20px 0; }}
        th, td {{ border: 1px solid #ccc; padding: 6px 12px; text-align: right; }}
        .subtitle {{ color: #666; }}
    </style>
</head>
<body>
    <div class="container">
        <h1>📊 Sketch scaling sweep</h1>
        <div class="subtitle">alpha0={self.alpha0} | m={self.m} | n={self.n} | generated {self.timestamp}</div>
"""

    def generate_full_report(self, result: SweepResult) -> str:
        html_parts = [self.generate_html_header()]
        html_parts.append("<h2>Accuracy</h2>")
        html_parts.append(self.generate_accuracy_table(result))
        for chart in (
            self.create_collapse_chart(result),
            self.create_runtime_chart(result),
            self.create_error_profile_chart(result),
        ):
            html_parts.append(f'<div class="chart-container">{chart}</div>')
        html_parts.append("    </div>\n</body>\n</html>\n")
        return "".join(html_parts)

    def save_report(self, result: SweepResult, filename: Optional[PathLike] = None) -> str:
        """Write the HTML report and return the path used.

        Args:
            result: Sweep output
            filename: Optional filename (defaults to a timestamped name)
        """
        if filename is None:
            filename = f"sweep_report_{datetime.now().strftime('%Y%m%d_%H%M%S')}.html"
        atomic_write(filename, self.generate_full_report(result))
        return str(filename)
