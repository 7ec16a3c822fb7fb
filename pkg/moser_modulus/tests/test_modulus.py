"""Tests for the discrete p-modulus solver critical functionality."""
import math
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np
import pytest
from scipy import optimize

from moser_modulus.config import Messages
from moser_modulus.densitylab import trial_seed
from moser_modulus.errors import (
    ArtifactIOError,
    CoveragePreconditionError,
    ModulusConvergenceError,
    PreconditionError,
    ValidationError,
)
from moser_modulus.geometry import SquareUnion
from moser_modulus.modulus import (
    CurveFamily,
    Grid,
    GridDensity,
    IsoMode,
    corollary_bound,
    energy,
    graph_family,
    is_admissible,
    level_sets,
    line_integral,
    modulus_trend,
    moser_probe,
    point_family,
    rectangle_modulus,
    single_curve_modulus,
    solve_modulus,
    spanning_family,
    square_symmetries,
    witness_check,
)
from moser_modulus.modulus.io import (
    heatmap_svg,
    instance_from_json,
    instance_to_json,
    read_instance,
    result_from_json,
    result_to_json,
    write_instance,
    write_trace_csv,
)
from moser_modulus.wormgraphs import graph_polyline, sample_omega


@pytest.fixture
def grid16():
    """16 x 16 grid on the unit square."""
    return Grid(16)


@pytest.fixture
def crossing(grid16):
    """Horizontal crossings of a 2 x 1 rectangle scaled into the unit square."""
    return spanning_family(2.0, 1.0, grid16.resolution)


@pytest.fixture
def bent(rng):
    """Six bent polylines through the centre of the square."""
    return point_family((0.5, 0.5), 6, rng)


def test_grid_validation():
    """Test error handling: Grids need at least two cells per side."""
    with pytest.raises(ValidationError):
        Grid(1)


def test_cell_boxes_order():
    """Test critical path: Flat index is ix * N + iy."""
    boxes = Grid(2).cell_boxes()
    assert boxes.shape == (4, 4)
    np.testing.assert_allclose(boxes[1], [0.0, 0.5, 0.5, 1.0])
    np.testing.assert_allclose(boxes[2], [0.5, 0.0, 1.0, 0.5])


def test_density_validation():
    """Test error handling: Densities are nonnegative with the grid's shape."""
    grid = Grid(2)
    with pytest.raises(ValidationError):
        GridDensity(grid, np.full((2, 2), -1.0))
    with pytest.raises(ValidationError):
        GridDensity(grid, np.ones((3, 3)))


def test_line_integral_clips_to_square():
    """Test critical path: Pieces outside the unit square carry no density."""
    rho = GridDensity.constant(Grid(2), 1.0)
    assert line_integral(rho, [(-0.5, 0.5), (1.5, 0.5)]) == pytest.approx(1.0)


def test_diagonal_incidence():
    """Test critical path: The diagonal crosses N cells, each in length sqrt(2)/N."""
    # Arrange
    grid = Grid(4)
    fam = CurveFamily.of([[(0.0, 0.0), (1.0, 1.0)]])

    # Act
    matrix = fam.incidence(grid)

    # Assert
    assert matrix.nnz == 4
    np.testing.assert_allclose(matrix.data, math.sqrt(2.0) / 4)
    assert set(matrix.indices.tolist()) == {0, 5, 10, 15}


def test_family_validation():
    """Test error handling: Curves need two points and one label each."""
    with pytest.raises(ValidationError):
        CurveFamily.of([[(0.0, 0.0)]])
    with pytest.raises(ValidationError):
        CurveFamily.of([[(0.0, 0.0), (1.0, 0.0)]], [{}, {}])


def test_family_composition(crossing):
    """Test critical path: Concatenation and subsets keep curves and labels together."""
    both = crossing + crossing.subset([0])
    assert len(both) == len(crossing) + 1
    assert both.labels[-1] == crossing.labels[0]
    np.testing.assert_allclose(both.lengths, 1.0)


def test_is_admissible_reports_worst():
    """Test critical path: The shortest curve is the worst under a constant density."""
    rho = GridDensity.constant(Grid(4), 1.0)
    fam = CurveFamily.of([[(0.0, 0.1), (1.0, 0.1)], [(0.0, 0.6), (0.5, 0.6)]])
    ok, worst, integral = is_admissible(rho, fam)
    assert not ok
    assert worst == 1
    assert integral == pytest.approx(0.5)


def test_energy_requires_p_above_one():
    """Test error handling: Energy exponent must exceed 1."""
    with pytest.raises(ValidationError):
        energy(GridDensity.constant(Grid(2), 1.0), 1.0)


def test_rectangle_oracle_formula():
    """Test critical path: Continuum crossing modulus after scaling into the square."""
    assert rectangle_modulus(2.0, 1.0, 4.0, scale=0.5) == pytest.approx(0.5)
    assert rectangle_modulus(1.0, 1.0, 3.0) == pytest.approx(1.0)


@pytest.mark.parametrize("p", [2.0, 4.0])
def test_solver_matches_rectangle_oracle(crossing, grid16, p):
    """Test critical path: Cell-centre crossings of a 2 x 1 rectangle have modulus 1/2."""
    # Act
    result = solve_modulus(crossing, grid16, p, tol=1e-4)

    # Assert
    assert result.value == pytest.approx(rectangle_modulus(2.0, 1.0, p, 0.5), rel=1e-3)
    assert result.dual_bound <= result.value * (1 + 1e-9)
    assert result.tolerance <= 1e-4
    ok, _, _ = is_admissible(result.density, crossing, slack=1e-9)
    assert ok


def test_single_curve_closed_form(grid16):
    """Test critical path: The solver reproduces the one-curve formula."""
    curve = np.array([[0.1, 0.2], [0.7, 0.9]])
    fam = CurveFamily.of([curve])
    expected = single_curve_modulus(grid16, curve, 4.0)
    assert solve_modulus(fam, grid16, 4.0, tol=1e-4).value == pytest.approx(expected, rel=1e-3)


def test_threshold_scaling(crossing, grid16):
    """Test critical path: Requiring line integral s multiplies the modulus by s^p."""
    base = solve_modulus(crossing, grid16, 3.0, tol=1e-4)
    doubled = solve_modulus(crossing, grid16, 3.0, tol=1e-4, threshold=2.0)
    assert doubled.value == pytest.approx(8.0 * base.value, rel=2e-3)


def test_solver_matches_direct_minimization(bent):
    """Test critical path: Dual constraint generation agrees with a direct primal solve."""
    # Arrange
    grid = Grid(4)
    p = 4.0
    a = grid.cell_area
    L = bent.incidence(grid).toarray()
    x0 = np.full(grid.size, 2.0 / L.sum(axis=1).min())

    # Act
    direct = optimize.minimize(
        lambda x: a * np.sum(x**p), x0, jac=lambda x: a * p * x ** (p - 1),
        method="SLSQP", bounds=[(0.0, None)] * grid.size,
        constraints=[{"type": "ineq", "fun": lambda x: L @ x - 1.0, "jac": lambda x: L}],
        options={"ftol": 1e-12, "maxiter": 500},
    )
    result = solve_modulus(bent, grid, p, tol=1e-5)

    # Assert
    assert direct.success
    assert result.value == pytest.approx(direct.fun, rel=1e-2)
    assert result.dual_bound <= direct.fun * (1 + 1e-6)


def test_modulus_monotone_in_family(bent, grid16):
    """Test critical path: A subfamily never has a larger certified modulus."""
    full = solve_modulus(bent, grid16, 4.0, tol=1e-4)
    part = solve_modulus(bent.subset([0, 1]), grid16, 4.0, tol=1e-4)
    assert part.dual_bound <= full.value * (1 + 1e-9)


def test_solver_trace_recorded(bent, grid16):
    """Test critical path: One trace row per constraint-generation round."""
    result = solve_modulus(bent, grid16, 4.0, tol=1e-3)
    assert len(result.trace) >= result.rounds
    assert result.trace[-1]["round"] >= 1
    assert result.multipliers is not None


@pytest.mark.parametrize("p, tol", [(1.0, 1e-3), (4.0, 0.0)])
def test_solver_parameter_validation(crossing, grid16, p, tol):
    """Test error handling: p > 1 and a positive tolerance are required."""
    with pytest.raises(ValidationError):
        solve_modulus(crossing, grid16, p, tol=tol)


def test_solver_rejects_empty_family(grid16):
    """Test error handling: The empty family has no modulus to estimate."""
    with pytest.raises(ValidationError):
        solve_modulus(CurveFamily(()), grid16, 4.0)


def test_solver_rejects_curves_outside_square(grid16):
    """Test error handling: Curves that miss the square and zero-length curves."""
    with pytest.raises(PreconditionError):
        solve_modulus(CurveFamily.of([[(2.0, 2.0), (3.0, 3.0)]]), grid16, 4.0)
    with pytest.raises(PreconditionError):
        solve_modulus(CurveFamily.of([[(0.5, 0.5), (0.5, 0.5)]]), grid16, 4.0)


def test_solver_iteration_cap(bent, grid16):
    """Test error handling: Hitting the iteration cap raises with the best estimate."""
    with pytest.raises(ModulusConvergenceError) as excinfo:
        solve_modulus(bent, grid16, 4.0, tol=1e-9, max_iter=1)
    assert excinfo.value.iterations >= 1


def test_level_sets_classes():
    """Test critical path: Class j holds 2^(j-2) <= rho < 2^(j-1), class 0 below 1/2."""
    # Arrange
    rho = GridDensity(Grid(2), np.array([[0.25, 0.5], [1.0, 3.0]]))

    # Act
    levels = level_sets(rho)

    # Assert
    np.testing.assert_array_equal(levels.classes, [[0, 1], [2, 3]])
    assert levels.j_max == 3
    assert levels.counts() == {0: 1, 1: 1, 2: 1, 3: 1}
    assert np.all(rho.values <= levels.ceiling())


def test_witness_found_for_constant_density():
    """Test critical path: A unit density on a unit crossing gives j* = 2."""
    rho = GridDensity.constant(Grid(4), 1.0)
    report = witness_check(rho, [(0.0, 0.375), (1.0, 0.375)])
    assert report.ok
    assert report.j_star == 2
    assert report.value == pytest.approx(4.0)
    assert report.chain_holds


def test_witness_below_one():
    """Test edge case: Inadmissible densities are reported, not raised."""
    rho = GridDensity.constant(Grid(4), 0.5)
    report = witness_check(rho, [(0.0, 0.375), (1.0, 0.375)])
    assert not report.ok
    assert report.notes == [Messages.INTEGRAL_BELOW_ONE.format(value=report.integral)]


def test_witness_falls_back_to_summable_criterion():
    """Test edge case: Mass spread over three levels misses the strict criterion."""
    # Arrange
    values = np.zeros((100, 100))
    values[0:45, 0] = 0.99
    values[45:69, 0] = 1.99
    values[69:81, 0] = 3.99
    rho = GridDensity(Grid(100), values)

    # Act
    report = witness_check(rho, [(0.0, 0.005), (0.81, 0.005)])

    # Assert
    assert report.integral >= 1.0
    assert report.j_star is None
    assert report.summable_ok
    assert Messages.WITNESS_STRICT_MISSED in report.notes


def test_spanning_family_rows(crossing):
    """Test critical path: Rows through cell centres below the scaled height."""
    assert len(crossing) == 8
    assert crossing.labels[0]["scale"] == 0.5


def test_spanning_family_validation():
    """Test error handling: Rectangle sides must be positive."""
    with pytest.raises(ValidationError):
        spanning_family(0.0, 1.0, 8)


def test_point_family_passes_through_center(bent):
    """Test critical path: Every bent curve has the centre as its middle point."""
    for curve in bent.curves:
        np.testing.assert_allclose(curve[1], [0.5, 0.5])


def test_square_symmetries_preserve_square():
    """Test critical path: The 8 symmetries permute the corners of the unit square."""
    corners = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    expected = {tuple(c) for c in corners}
    symmetries = square_symmetries()
    assert len(symmetries) == 8
    for iota in symmetries:
        image = {tuple(np.round(c, 9) + 0.0) for c in iota.apply_many(corners)}
        assert image == expected


def test_graph_family_prefix_property():
    """Test critical path: Graph i is seeded by trial_seed(seed, i)."""
    # Act
    small = graph_family(2, 3, seed=4)
    large = graph_family(3, 3, seed=4)

    # Assert
    assert len(large) == 3
    for a, b in zip(small.curves, large.curves):
        np.testing.assert_allclose(a, b)
    expected = np.asarray(graph_polyline(sample_omega(3, trial_seed(4, 2)), 3))
    np.testing.assert_allclose(large.curves[2], expected, atol=1e-12)


def test_graph_family_net_mode():
    """Test critical path: Net mode places every graph under the 8 symmetries."""
    fam = graph_family(2, 2, seed=0, iso_mode=IsoMode.NET)
    assert len(fam) == 16


def test_moser_probe_refinement():
    """Test critical path: The refined grid never certifies a larger modulus."""
    # Act
    report = moser_probe(2.0, 2, 3, Grid(8), seed=0, tol=1e-3)

    # Assert
    assert Messages.OUTSIDE_THEOREM_RANGE.format(p=2.0) in report.notes
    assert report.refined is not None
    assert report.refined.dual_bound <= report.result.value * (1 + 1e-9)
    assert report.to_dict()["refined_N"] == 16


def test_modulus_trend(crossing):
    """Test critical path: One value per resolution."""
    trend = modulus_trend(crossing, 4.0, [16, 32], tol=1e-3)
    assert trend.resolutions == (16, 32)
    assert len(trend.values) == 2


@pytest.fixture
def strip_cover():
    """The vertical strip [0, 1/4] x [0, 1] as four squares."""
    return SquareUnion.of(*(((0.0, 0.25 * i), 0.25) for i in range(4)))


def test_corollary_bound_identity(strip_cover):
    """Test critical path: Support area equals delta^p times the energy."""
    # Arrange
    fam = spanning_family(1.0, 1.0, 4)

    # Act
    report = corollary_bound(0.25, 4.0, strip_cover, fam, grid=Grid(4), solve=True, tol=1e-4)

    # Assert
    assert report.admissible
    assert report.support_area == pytest.approx(0.25)
    assert report.identity_holds
    assert report.modulus == pytest.approx(1.0, rel=1e-3)
    assert report.bound_holds


def test_corollary_coverage_precondition(strip_cover):
    """Test error handling: Curves must meet the cover in length delta."""
    fam = spanning_family(1.0, 1.0, 4)
    with pytest.raises(CoveragePreconditionError) as excinfo:
        corollary_bound(0.5, 4.0, strip_cover, fam, grid=Grid(4))
    assert excinfo.value.curve_index == 0


def test_instance_document(bent, tmp_path):
    """Test critical path: Instance files restore the family, grid and exponent."""
    # Act
    path = write_instance(tmp_path / "instance.json", bent, Grid(8), 4.0)
    fam, grid, p = read_instance(path)

    # Assert
    assert grid.resolution == 8 and p == 4.0
    assert len(fam) == len(bent)
    np.testing.assert_allclose(fam.curves[0], bent.curves[0])


def test_instance_document_errors():
    """Test error handling: Wrong schema and missing keys."""
    with pytest.raises(ArtifactIOError):
        instance_from_json({"schema": "other", "N": 4, "p": 4, "curves": []})
    with pytest.raises(ArtifactIOError):
        instance_from_json({"N": 4, "curves": []})
    with pytest.raises(ArtifactIOError):
        read_instance(Path("/nonexistent/instance.json"))


def test_result_artifacts(crossing, grid16, tmp_path):
    """Test critical path: Result document, trace CSV and heatmap."""
    # Arrange
    result = solve_modulus(crossing, grid16, 4.0, tol=1e-3)

    # Act
    restored = result_from_json(result_to_json(result))
    trace = write_trace_csv(tmp_path / "trace.csv", result)
    svg = heatmap_svg(result.density, tmp_path / "density.svg", crossing)

    # Assert
    assert restored.value == result.value
    np.testing.assert_allclose(restored.density.values, result.density.values)
    assert trace.read_text().startswith("round,active")
    assert 'id="curves"' in svg.read_text()
    assert instance_to_json(crossing, grid16, 4.0)["N"] == 16


def test_incidence_built_once_across_threads(bent, grid16, monkeypatch):
    """Test critical path: Concurrent callers share one incidence matrix per grid."""
    # Arrange
    builds = []
    build = CurveFamily._build_incidence

    def slow_build(self, grid):
        builds.append(grid.resolution)
        time.sleep(0.05)
        return build(self, grid)

    monkeypatch.setattr(CurveFamily, "_build_incidence", slow_build)

    # Act
    with ThreadPoolExecutor(max_workers=8) as pool:
        matrices = list(pool.map(lambda _: bent.incidence(grid16), range(16)))

    # Assert
    assert builds == [16]
    assert all(m is matrices[0] for m in matrices)


@pytest.mark.slow
@pytest.mark.parametrize("w, h, p", [(1.0, 1.0, 2.0), (2.0, 1.0, 2.0), (1.0, 1.0, 4.0)])
def test_rectangle_oracle_fine_grid(w, h, p):
    """Test critical path: Crossing families at N = 256 match h * w^(1-p) within 3%."""
    # Arrange
    grid = Grid(256)
    fam = spanning_family(w, h, grid.resolution)
    expected = rectangle_modulus(w, h, p, fam.labels[0]["scale"])

    # Act
    result = solve_modulus(fam, grid, p, tol=1e-3)

    # Assert
    assert result.value == pytest.approx(expected, rel=0.03)
    assert result.dual_bound <= expected * (1 + 1e-9)
    assert result.tolerance <= 1e-3


@pytest.mark.slow
@pytest.mark.parametrize("N", [4, 8, 16])
@pytest.mark.parametrize("p", [2.0, 4.0])
def test_solver_matches_direct_minimization_fine(bent, N, p):
    """Test critical path: Constraint generation agrees with a direct primal solve to 1e-4."""
    # Arrange
    grid = Grid(N)
    a = grid.cell_area
    L = bent.incidence(grid).toarray()
    x0 = np.full(grid.size, 2.0 / L.sum(axis=1).min())
    f0 = a * np.sum(x0**p)

    # Act
    direct = optimize.minimize(
        lambda x: a * np.sum(x**p) / f0, x0, jac=lambda x: a * p * x ** (p - 1) / f0,
        method="SLSQP", bounds=[(0.0, None)] * grid.size,
        constraints=[{"type": "ineq", "fun": lambda x: L @ x - 1.0, "jac": lambda x: L}],
        options={"ftol": 1e-12, "maxiter": 2000},
    )
    result = solve_modulus(bent, grid, p, tol=1e-5)

    # Assert
    assert np.all(L @ direct.x >= 1.0 - 1e-7)
    assert result.value == pytest.approx(direct.fun * f0, rel=1e-4)
    assert result.dual_bound <= direct.fun * f0 * (1 + 1e-6)


def _random_family(rng):
    center = rng.uniform(0.35, 0.65, size=2)
    return point_family(center, int(rng.integers(2, 9)), rng)


@pytest.mark.slow
@pytest.mark.parametrize("instance", range(50))
def test_modulus_monotone_random_instances(instance):
    """Test critical path: Subfamilies never certify more than the whole family."""
    # Arrange
    rng = np.random.default_rng(1000 + instance)
    fam = _random_family(rng)
    keep = sorted(rng.choice(len(fam), size=max(1, len(fam) // 2), replace=False).tolist())
    p = float(rng.choice([2.0, 3.0, 4.0]))

    # Act
    full = solve_modulus(fam, Grid(8), p, tol=1e-4)
    part = solve_modulus(fam.subset(keep), Grid(8), p, tol=1e-4)

    # Assert
    assert full.tolerance <= 1e-4 and part.tolerance <= 1e-4
    assert part.dual_bound <= full.value * (1 + 1e-9)


@pytest.mark.slow
@pytest.mark.parametrize("instance", range(50))
def test_modulus_subadditive_random_instances(instance):
    """Test critical path: mod(A + B) never exceeds mod(A) + mod(B)."""
    # Arrange
    rng = np.random.default_rng(2000 + instance)
    first, second = _random_family(rng), _random_family(rng)
    p = float(rng.choice([2.0, 3.0, 4.0]))

    # Act
    a = solve_modulus(first, Grid(8), p, tol=1e-4)
    b = solve_modulus(second, Grid(8), p, tol=1e-4)
    union = solve_modulus(first + second, Grid(8), p, tol=1e-4)

    # Assert
    assert union.tolerance <= 1e-4
    assert union.dual_bound <= (a.value + b.value) * (1 + 1e-9)
    assert union.value >= max(a.dual_bound, b.dual_bound) * (1 - 1e-9)


@pytest.mark.slow
@pytest.mark.parametrize("family", range(10))
def test_common_point_two_modulus_vanishes(family):
    """Test critical path: Curves through one point lose 2-modulus under refinement."""
    # Arrange
    rng = np.random.default_rng(3000 + family)
    fam = point_family((0.5, 0.5), 8, rng)

    # Act
    trend = modulus_trend(fam, 2.0, [64, 128, 256], tol=1e-3)

    # Assert
    assert trend.strictly_decreasing
    assert all(d <= v * (1 + 1e-9) for d, v in zip(trend.dual_bounds, trend.values))


@pytest.mark.slow
def test_worm_family_modulus_at_scale():
    """Test critical path: p = 4, 64 graphs at depth 6 on N = 256 and 512."""
    # Act
    report = moser_probe(4.0, 64, 6, Grid(256), seed=0, tol=1e-3)
    enlarged = moser_probe(4.0, 128, 6, Grid(256), seed=0, tol=1e-3, refine=False)

    # Assert
    assert report.notes == []
    assert report.result.value > 0 and report.result.dual_bound > 0
    assert report.refined is not None and report.refined.grid.resolution == 512
    assert report.refined.dual_bound <= report.result.value * (1 + 1e-9)
    assert 0 < report.refinement_ratio <= 1 + 2e-3
    assert enlarged.result.value >= report.result.dual_bound * (1 - 1e-9)
