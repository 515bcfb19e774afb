from fractions import Fraction

from src.asymptotic import hit_counts
from src.metric_lab import khintchine_block_trial, uniform_survival
from src.report_visualizer import ReportVisualizer
from src.uniform import PsiSpec


def test_survival_figure_names_traces_by_psi(odd_odd):
    reports = [
        uniform_survival(odd_odd, PsiSpec(1, 1, 0), 8, [10, 100], seed=1),
        uniform_survival(odd_odd, PsiSpec(Fraction(1, 10), 1, 0), 8, [10, 100], seed=1),
    ]
    figure = ReportVisualizer().survival_figure(reports)
    assert len(figure.data) == 2
    assert figure.data[0].name == PsiSpec(1, 1, 0).to_text()
    assert list(figure.data[0].x) == [10, 100]


def test_block_figure(classical):
    report = khintchine_block_trial(classical, PsiSpec(1, 1, 0), (10, 40), 8, seed=2)
    figure = ReportVisualizer().block_figure(report)
    assert list(figure.data[0].x) == report.to_frame()["statistic"].tolist()


def test_hits_figure_and_html(tmp_path, golden, classical):
    visualizer = ReportVisualizer()
    counts = hit_counts(golden, classical, Fraction(1, 2), [10, 100, 1000])
    figure = visualizer.hits_figure(counts, [0.4, 0.45, 0.5])
    assert len(figure.data) == 2
    target = visualizer.write_html({"hits": figure, "again": figure}, str(tmp_path / "out" / "hits.html"))
    page = target.read_text()
    assert "<h2>hits</h2>" in page and "<h2>again</h2>" in page
    assert page.count("cdn.plot.ly") == 1


def test_hits_figure_marks_factor_bound(golden, classical):
    visualizer = ReportVisualizer()
    counts = hit_counts(golden, classical, Fraction(1, 2), [10, 100])
    figure = visualizer.hits_figure(counts, [0.4, 0.45], bound=0.5)
    (line,) = figure.layout.shapes
    assert line.x0 == line.x1 == 0.5
    assert line.line.color == visualizer.palette["bound"]
