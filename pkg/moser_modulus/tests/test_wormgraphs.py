"""Tests for the parallelogram construction critical functionality."""
from fractions import Fraction

import numpy as np
import pytest

from moser_modulus.config import Config
from moser_modulus.errors import (
    ArtifactIOError,
    DepthExhaustedError,
    PreconditionError,
    StreamExhaustedError,
    ValidationError,
)
from moser_modulus.wormgraphs import (
    AlternatingExtremes,
    CellFlag,
    ConstantPiles,
    ScriptedPiles,
    SeededPiles,
    ad_regularity_profile,
    audit_generation,
    build_sequence,
    child,
    designation,
    eval_f,
    eval_f_many,
    first_difference,
    graph_polyline,
    quadtree_sample,
    root,
    sample_omega,
    slope_sup,
)
from moser_modulus.wormgraphs.cells import nearest_string_length
from moser_modulus.wormgraphs.serialization import (
    generation_svg,
    omega_from_json,
    omega_to_json,
    quadtree_svg,
)


def test_greedy_sequence_values(seq3):
    """Test critical path: m_k = ceil(100 k^2 2^k / n_{k-1})."""
    assert seq3.m == (1, 200, 8, 5)
    assert seq3.n == (1, 200, 1600, 8000)
    assert seq3.violations() == []


def test_sequence_lipschitz_sum(seq3):
    """Test critical path: Exact sum of 2^k / n_k stays below 1/3."""
    assert seq3.lipschitz_sum() == Fraction(2, 200) + Fraction(4, 1600) + Fraction(8, 8000)
    assert seq3.lipschitz_sum() < Fraction(1, 3)


def test_long_sequence_is_sound():
    """Test critical path: Growth bounds hold at the maximum depth."""
    seq = build_sequence(Config.MAX_DEPTH)
    assert seq.violations() == []


@pytest.mark.parametrize("depth", [0, -1, Config.MAX_DEPTH + 1])
def test_sequence_depth_validation(depth):
    """Test error handling: Depth must lie in [1, MAX_DEPTH]."""
    with pytest.raises(ValidationError):
        build_sequence(depth)


@pytest.mark.parametrize("k, expected", [(0, 1), (1, 1), (3, 3), (4, 4), (6, 8)])
def test_nearest_string_length(k, expected):
    """Test critical path: String length is 2^(k/2) rounded."""
    assert nearest_string_length(k) == expected


def test_designation_layout():
    """Test critical path: Strings separated by single exceptional cells, last cell normal."""
    # Act
    strings, exceptional, deficit = designation(4)

    # Assert
    assert strings == ((0, 4), (5, 9), (10, 16))
    assert exceptional == (4, 9)
    assert deficit == 2


def test_designation_of_root():
    """Test edge case: Generation 0 is one normal string."""
    assert designation(0) == (((0, 1),), (), 0)


@pytest.mark.parametrize("k", range(0, 12))
def test_designation_covers_all_cells(k):
    """Test critical path: Strings and exceptional cells partition the generation."""
    strings, exceptional, _ = designation(k)
    covered = sorted([i for a, b in strings for i in range(a, b)] + list(exceptional))
    assert covered == list(range(2 ** k))
    assert (2 ** k - 1) not in exceptional


def test_child_of_root(seq3):
    """Test critical path: First subdivision keeps the chosen pile and halves it."""
    # Act
    g1 = child(root(), seq3, ConstantPiles(3))

    # Assert
    assert g1.gen == 1
    assert len(g1.cells) == 2
    assert g1.choices == (3,)
    assert all(c.y0 == Fraction(2, 200) and c.slope == 0 for c in g1.cells)
    assert g1.height == Fraction(1, 200)


def test_child_beyond_depth_fails(seq3):
    """Test error handling: The last generation has no children."""
    w = sample_omega(3, 1)
    with pytest.raises(DepthExhaustedError):
        child(w.gens[-1], seq3, SeededPiles(1))


def test_scripted_piles_exhaustion():
    """Test error handling: A short script runs out during sampling."""
    with pytest.raises(StreamExhaustedError):
        sample_omega(2, 0, ScriptedPiles([1]))


def test_scripted_pile_out_of_range():
    """Test error handling: Scripted piles must lie in 1..m."""
    with pytest.raises(ValidationError):
        sample_omega(1, 0, ScriptedPiles([500]))


def test_seeded_piles_rejects_negative_seed():
    """Test error handling: Seeds are nonnegative 64-bit integers."""
    with pytest.raises(ValidationError):
        SeededPiles(-1)


def test_sampling_is_deterministic():
    """Test critical path: The same seed gives the same branch bit for bit."""
    # Act
    a = sample_omega(4, 99)
    b = sample_omega(4, 99)

    # Assert
    assert first_difference(a, b) is None
    assert a.choices == b.choices


def test_first_difference_locates_divergence():
    """Test critical path: Branches differing in the first choice split at generation 1."""
    a = sample_omega(2, 0, ScriptedPiles([1, 1]))
    b = sample_omega(2, 0, ScriptedPiles([2, 1]))
    assert first_difference(a, b) == 1


@pytest.mark.parametrize("chooser", [None, ConstantPiles(1), ConstantPiles(10 ** 6),
                                     AlternatingExtremes()])
def test_generations_pass_audit(chooser):
    """Test critical path: Every generation is nested, sized and sloped correctly."""
    # Arrange
    w = sample_omega(6, 3, chooser)

    # Act
    problems = [audit_generation(g, w.seq, w.gens[k - 1] if k else None)
                for k, g in enumerate(w.gens)]

    # Assert
    assert all(p == [] for p in problems)


def test_audit_reports_tampering(sample):
    """Test error handling: A broken flag list is reported."""
    g = sample.gens[-1]
    broken = type(g)(g.gen, g.cells, g.strings, (), g.choices, g.deficit)
    problems = audit_generation(broken, sample.seq)
    assert any("exceptional" in p for p in problems)


def test_first_and_last_cells_normal(sample):
    """Test critical path: Boundary cells are never exceptional."""
    for g in sample.gens:
        assert g.cells[0].flag is CellFlag.NORMAL
        assert g.cells[-1].flag is CellFlag.NORMAL


def test_slope_bound_with_steepest_connectors():
    """Test critical path: Alternating extreme piles still keep |slope| < 1/3."""
    w = sample_omega(8, 0, AlternatingExtremes())
    assert 0 < slope_sup(w) < Fraction(1, 3)


def test_eval_f_on_flat_graph(flat_sample):
    """Test critical path: Bottom piles give the constant graph at half the cell height."""
    # Act
    value = eval_f(flat_sample, Fraction(1, 3))

    # Assert
    assert value == Fraction(1, 2 * 8000)
    np.testing.assert_allclose(eval_f_many(flat_sample, np.array([0.0, 0.5, 1.0])),
                               1 / 16000)


def test_eval_f_matches_float_version(sample):
    """Test critical path: Exact and vectorized evaluation agree."""
    xs = np.linspace(0.0, 1.0, 33)
    exact = [float(eval_f(sample, Fraction(x))) for x in xs]
    np.testing.assert_allclose(eval_f_many(sample, xs), exact, atol=1e-12)


def test_eval_f_is_lipschitz(sample):
    """Test critical path: The graph is 1/3-Lipschitz between dyadic points."""
    xs = np.linspace(0.0, 1.0, 257)
    ys = eval_f_many(sample, xs)
    assert np.max(np.abs(np.diff(ys)) / np.diff(xs)) < 1 / 3 + 1e-9


def test_eval_f_errors(flat_sample):
    """Test error handling: Depth-0 samples and abscissae outside [0, 1]."""
    with pytest.raises(PreconditionError):
        eval_f(sample_omega(0, 0), 0.5)
    with pytest.raises(ValidationError):
        eval_f(flat_sample, 1.5)
    with pytest.raises(ValidationError):
        eval_f_many(flat_sample, np.array([-0.1]))


def test_graph_polyline_shape(sample):
    """Test critical path: 2^k + 1 boundary midpoints from x = 0 to x = 1."""
    points = graph_polyline(sample, 3)
    assert len(points) == 9
    assert points[0].x == 0.0 and points[-1].x == 1.0


def test_graph_polyline_rejects_bad_depth(sample):
    """Test error handling: Polyline depth must not exceed the sample's."""
    with pytest.raises(ValidationError):
        graph_polyline(sample, sample.depth + 1)


def test_json_document_restores_sample(sample):
    """Test critical path: Exact rationals survive the JSON document."""
    # Act
    restored = omega_from_json(omega_to_json(sample))

    # Assert
    assert restored.gens == sample.gens
    assert restored.seq == sample.seq
    assert restored.seed == sample.seed


def test_json_schema_checked(sample):
    """Test error handling: Unknown schemas are rejected."""
    doc = omega_to_json(sample)
    doc["schema"] = "something/else"
    with pytest.raises(ArtifactIOError):
        omega_from_json(doc)


def test_generation_svg_written(sample, tmp_path):
    """Test critical path: SVG drawing with exceptional cells in their own group."""
    path = generation_svg(sample.gens[-1], tmp_path / "g.svg", stretch=20.0)
    text = path.read_text()
    assert "<svg" in text
    assert 'id="exceptional"' in text


def test_quadtree_levels():
    """Test critical path: Level d keeps 2^d squares, each inside its parent."""
    # Act
    qt = quadtree_sample(5, 11)

    # Assert
    for level in range(1, 6):
        squares = qt.squares(level)
        assert len(squares) == 2 ** level
        assert qt.area(level) == pytest.approx(2.0 ** -level)
        parents = {tuple(p) for p in qt.squares(level - 1)}
        assert all(tuple(s // 2) in parents for s in squares)


def test_quadtree_depth_validation():
    """Test error handling: Quadtree depth is bounded."""
    with pytest.raises(ValidationError):
        quadtree_sample(Config.QUADTREE_MAX_DEPTH + 1, 0)


def test_ad_profile_counts(rng):
    """Test critical path: Every disc centred on the set meets a retained square."""
    qt = quadtree_sample(6, 5)
    profile = ad_regularity_profile(qt, 50, rng)
    assert np.all(profile.counts >= 1)
    assert 0.0 <= profile.within_band <= 1.0
    assert profile.summary()["discs"] == 50.0


def test_quadtree_svg_written(tmp_path):
    """Test critical path: Quadtree drawing of the finest level."""
    path = quadtree_svg(quadtree_sample(3, 1), tmp_path / "q.svg")
    assert path.exists()


@pytest.mark.slow
@pytest.mark.parametrize("seed", range(100))
def test_deep_sample_exact_and_lipschitz(seed):
    """Test critical path: Depth-12 samples pass the exact audit and the Lipschitz bound."""
    # Arrange
    w = sample_omega(12, seed)
    rng = np.random.default_rng(seed)
    xs = rng.uniform(0.0, 1.0, size=(10_000, 2))

    # Act
    problems = [p for k in range(1, w.depth + 1)
                for p in audit_generation(w.gens[k], w.seq, w.gens[k - 1])]
    jumps = np.abs(eval_f_many(w, xs[:, 0]) - eval_f_many(w, xs[:, 1]))

    # Assert
    assert problems == []
    assert slope_sup(w) < Fraction(1, 3)
    g = w.gens[-1]
    assert sum((c.area for c in g.cells), Fraction(0)) == Fraction(1, w.seq.n[12])
    assert g.cells[0].flag is CellFlag.NORMAL and g.cells[-1].flag is CellFlag.NORMAL
    assert np.all(jumps <= np.abs(xs[:, 0] - xs[:, 1]) + 2.0 / w.seq.n[12] + 1e-12)
