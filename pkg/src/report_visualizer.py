"""
Report Visualizer for the approximation toolkit
Plotly figures for survival curves, block-hit fractions and hit-count growth
"""
import logging
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import pandas as pd
import plotly.graph_objects as go
from plotly.subplots import make_subplots

from src.metric_lab import TrialReport, survival_curve

logger = logging.getLogger(__name__)


class ReportVisualizer:
    """Interactive figures for experiment reports"""

    def __init__(self):
        self.palette = self.load_palette()

    def load_palette(self) -> Dict[str, str]:
        return {
            "survival": "#4ECDC4",
            "band": "rgba(78, 205, 196, 0.2)",
            "blocks": "#45B7D1",
            "hits": "#FF6B6B",
            "bound": "red",
        }

    def survival_figure(self, reports: List[TrialReport]) -> go.Figure:
        """Survival fraction against Q, one trace per report, with 1-sigma error bars"""
        figure = go.Figure()
        for report in reports:
            frame = survival_curve(report)
            psi = report.parameters.get("psi", {})
            figure.add_trace(go.Scatter(
                x=frame["Q"],
                y=frame["survival"],
                error_y=dict(type="data", array=frame["stderr"], visible=True),
                mode="lines+markers",
                name=psi.get("text", report.experiment),
            ))
        figure.update_layout(
            title="Uniform survival",
            xaxis_title="Q",
            yaxis_title="fraction surviving",
            xaxis_type="log",
            yaxis_range=[0, 1.05],
        )
        return figure

    def block_figure(self, report: TrialReport) -> go.Figure:
        """Hit fraction per dyadic block"""
        frame = report.to_frame()
        figure = go.Figure(data=[
            go.Bar(
                x=frame["statistic"],
                y=frame["fraction"],
                error_y=dict(type="data", array=frame["stderr"], visible=True),
                marker_color=self.palette["blocks"],
            )
        ])
        figure.update_layout(
            title=f"Block-hit fractions ({report.experiment})",
            xaxis_title="block",
            yaxis_title="fraction of samples with a hit",
            showlegend=False,
        )
        return figure

    def hits_figure(
        self, counts: List[Tuple[int, int]], qualities: List[float], bound: Optional[float] = None
    ) -> go.Figure:
        """Hit counts against Qmax beside the quality of every hit, with the search factor marked"""
        frame = pd.DataFrame(counts, columns=["Q", "count"])
        figure = make_subplots(rows=1, cols=2, subplot_titles=("Hits up to Q", "Hit quality"))
        figure.add_trace(go.Scatter(x=frame["Q"], y=frame["count"], mode="lines+markers",
                                    marker_color=self.palette["hits"], name="count"), row=1, col=1)
        figure.add_trace(go.Histogram(x=qualities, nbinsx=40, marker_color=self.palette["blocks"],
                                      name="quality"), row=1, col=2)
        if bound is not None:
            figure.add_vline(x=bound, line_color=self.palette["bound"], line_dash="dash", row=1, col=2)
        figure.update_xaxes(type="log", title_text="Q", row=1, col=1)
        figure.update_xaxes(title_text="N^2 |xi - (am+r)/N| / ab", row=1, col=2)
        figure.update_layout(title="Asymptotic hits", showlegend=False)
        return figure

    def write_html(self, figures: Dict[str, go.Figure], path: str) -> Path:
        """All figures in one self-contained page"""
        target = Path(path)
        target.parent.mkdir(parents=True, exist_ok=True)
        parts = []
        for index, (name, figure) in enumerate(figures.items()):
            parts.append(f"<h2>{name}</h2>")
            parts.append(figure.to_html(full_html=False, include_plotlyjs="cdn" if index == 0 else False))
        target.write_text("<html><body>\n" + "\n".join(parts) + "\n</body></html>\n", encoding="utf-8")
        logger.info("wrote %d figures to %s", len(figures), target)
        return target
