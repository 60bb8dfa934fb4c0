"""Reference fields: series anchors, symmetry, and the SOR cross-check."""

import math

import numpy as np
import pytest

from boxpinn import oracle
from boxpinn.errors import ConfigError, ConvergenceError
from boxpinn.evaluation import abs_diff
from boxpinn.oracle import GridField, fd_solve, grid_coords, oracle_grid, series_solution

# recomputed with a 60-digit evaluation of the series before the build
CENTER_REFERENCE = 0.25
ANCHOR_05_075 = 0.5405292182595099
ANCHOR_025_05 = 0.18202833188693836
ANCHOR_05_09 = 0.8016894653419546
ANCHOR_01_03 = 0.03754937707766118


def test_center_value_is_a_quarter():
    assert abs(series_solution(0.5, 0.5, 200) - CENTER_REFERENCE) <= 1e-9


def test_point_anchors():
    assert series_solution(0.5, 0.75, 200) == pytest.approx(ANCHOR_05_075, abs=1e-12)
    assert series_solution(0.5, 0.75, 200) == pytest.approx(0.5406, abs=1e-3)
    assert series_solution(0.25, 0.5, 200) == pytest.approx(ANCHOR_025_05, abs=1e-12)
    assert series_solution(0.5, 0.9, 300) == pytest.approx(ANCHOR_05_09, abs=1e-12)
    assert series_solution(0.1, 0.3, 200) == pytest.approx(ANCHOR_01_03, abs=1e-12)


def test_grounded_sides_are_exact_zeros(rng):
    for v in rng.uniform(0, 1, 20):
        assert series_solution(float(v), 0.0, 50) == 0.0
        assert series_solution(0.0, float(v), 50) == 0.0
        assert series_solution(1.0, float(v), 50) == 0.0


def test_excited_side_returns_datum():
    assert series_solution(0.5, 1.0, 10) == 1.0
    assert series_solution(1e-9, 1.0, 10) == 1.0
    assert series_solution(0.0, 1.0, 10) == 0.0
    assert series_solution(1.0, 1.0, 10) == 0.0


def test_truncation_tail_bound(rng):
    """|u_{2m} - u_m| <= exp(-(2m+1) pi (1-y)) for y away from the top."""
    for m in (1, 5, 25):
        for _ in range(20):
            x = float(rng.uniform(0, 1))
            y = float(rng.uniform(0, 0.95))
            gap = abs(series_solution(x, y, 2 * m) - series_solution(x, y, m))
            assert gap <= math.exp(-(2 * m + 1) * math.pi * (1.0 - y)) + 1e-15


def test_series_is_harmonic_by_finite_differences(rng):
    h = 1e-4
    for _ in range(100):
        x = float(rng.uniform(0.05, 0.95))
        y = float(rng.uniform(0.05, 0.9))
        u = series_solution
        lap = (
            u(x + h, y, 200) + u(x - h, y, 200) + u(x, y + h, 200) + u(x, y - h, 200)
            - 4.0 * u(x, y, 200)
        ) / h**2
        assert abs(lap) <= 1e-4


def test_series_rejects_bad_arguments():
    with pytest.raises(ConfigError):
        series_solution(0.5, 0.5, 0)
    with pytest.raises(ConfigError):
        oracle_grid(1, 10)
    with pytest.raises(ConfigError):
        oracle_grid(11, 0)


def test_grid_coords_span_unit_interval():
    coords = grid_coords(101)
    assert coords[0] == 0.0 and coords[-1] == 1.0
    assert coords[1] == pytest.approx(0.01)
    assert len(coords) == 101


def test_oracle_grid_shape_and_boundaries():
    field = oracle_grid(101, 200)
    assert field.values.shape == (101, 101)
    assert field.values.size == 10201
    assert np.all(field.values[0] == 0.0)  # grounded bottom
    assert np.all(field.values[:, 0] == 0.0)  # grounded left
    assert np.all(field.values[:, -1] == 0.0)  # grounded right
    assert np.all(field.values[-1, 1:-1] == 1.0)  # excited side
    assert field.values[-1, 0] == 0.0 and field.values[-1, -1] == 0.0  # corner rule


def test_oracle_grid_mirror_symmetry():
    field = oracle_grid(101, 200)
    assert np.abs(field.values - field.values[:, ::-1]).max() <= 1e-12


def test_oracle_grid_obeys_maximum_principle():
    field = oracle_grid(101, 200)
    assert field.values.min() >= 0.0
    assert field.values.max() <= 1.0


def test_grid_matches_pointwise_series(rng):
    field = oracle_grid(21, 150)
    coords = grid_coords(21)
    for _ in range(10):
        i, j = rng.integers(0, 21, 2)
        assert field.values[j, i] == series_solution(float(coords[i]), float(coords[j]), 150)


def test_fd_solver_single_interior_node():
    field = fd_solve(3, max_sweeps=50, tol=1e-14)
    assert field.values[1, 1] == 0.25  # mean of its four boundary neighbours


def test_fd_solver_maximum_principle():
    field = fd_solve(41, tol=1e-9)
    assert field.values.min() >= 0.0 and field.values.max() <= 1.0


def test_fd_solver_against_series():
    field = fd_solve(41, tol=1e-10)
    truth = oracle_grid(41, 300)
    band = grid_coords(41) <= 0.95
    gap = np.abs(field.values - truth.values)[band, :].max()
    assert gap <= 0.02  # O(h^2) at this resolution


def test_fd_solver_reports_non_convergence():
    with pytest.raises(ConvergenceError) as info:
        fd_solve(41, max_sweeps=3, tol=1e-14)
    assert info.value.residual > 1e-14


def test_fd_solver_validates_arguments():
    with pytest.raises(ConfigError):
        fd_solve(2)
    with pytest.raises(ConfigError):
        fd_solve(11, max_sweeps=0)


def test_grid_field_validation():
    GridField.from_values(np.zeros((3, 3)))
    with pytest.raises(ValueError):
        GridField.from_values(np.zeros((3, 4)))
    with pytest.raises(ValueError):
        GridField.from_values(np.zeros((1, 1)))
    with pytest.raises(ValueError):
        GridField.from_values(np.zeros(9))


def test_abs_diff_of_oracles_is_small():
    a = oracle_grid(31, 200)
    b = oracle_grid(31, 400)
    _, stats = abs_diff(a, b)
    assert stats.max_abs_below_y95 <= 1e-12  # tail is negligible away from the top
