"""Figure rendering produces non-empty PNGs for every report type."""
import numpy as np

from pitchcov import figures
from pitchcov.evaluation import AblationPoint, CoefficientCorrelations, CrossMatrix


def test_trace_figure(tmp_path):
    t = np.linspace(0.0, 2.0, 100)
    gold = 6.0 * np.sin(t) + 12.0
    figures.plot_trace(t, gold, gold + 0.4, tmp_path / "trace.png", title="demo")
    assert (tmp_path / "trace.png").stat().st_size > 0


def test_matrix_figure(tmp_path):
    matrix = CrossMatrix(
        [f"c{i}" for i in range(3)],
        np.array([[0.99, 0.4, -0.1], [0.5, 0.98, 0.2], [0.1, 0.3, 0.97]]),
        np.array([[True, True, False], [True, True, False], [False, False, True]]),
        runs=10,
    )
    figures.plot_matrix(matrix, tmp_path / "matrix.png")
    assert (tmp_path / "matrix.png").stat().st_size > 0


def test_ablation_figure(tmp_path):
    points = [AblationPoint(0.1 * k, 2.0 - 0.1 * k, 0.9 + 0.01 * k) for k in range(1, 11)]
    figures.plot_ablation(points, tmp_path / "ablation.png")
    assert (tmp_path / "ablation.png").stat().st_size > 0


def test_percoeff_figure(tmp_path):
    rng = np.random.default_rng(0)
    result = CoefficientCorrelations(
        rng.uniform(-1, 1, 40), rng.uniform(0, 1, 40), np.zeros(40, dtype=bool)
    )
    result.constant[3] = True
    figures.plot_coefficient_correlations(result, tmp_path / "pc.png")
    assert (tmp_path / "pc.png").stat().st_size > 0


def test_rendering_is_deterministic(tmp_path):
    t = np.linspace(0.0, 1.0, 50)
    for name in ("a.png", "b.png"):
        figures.plot_trace(t, np.sin(t), np.cos(t), tmp_path / name)
    assert (tmp_path / "a.png").read_bytes() == (tmp_path / "b.png").read_bytes()
