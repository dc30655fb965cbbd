import numpy as np
import pytest

from tanimoto import ValidationError
from tanimoto.core import general_tanimoto_l1, general_tanimoto_minmax
from tanimoto.piecewise import PartitionLabel as L
from tanimoto.piecewise import evaluate_fg, partition_indices, tanimoto_via_fg

from conftest import area_oracle, random_pairs


@pytest.mark.parametrize(
    "a, x, label",
    [
        (1.0, 2.0, L.POS_HIGH),
        (-1.0, -0.5, L.NEG_MID),
        (1.0, 1.0, L.POS_HIGH),  # a_j <= x_j is the non-strict side
        (1.0, -0.1, L.POS_XNEG),
        (1.0, 0.0, L.POS_MID),
        (1.0, 0.5, L.POS_MID),
        (0.0, 0.0, L.POS_HIGH),
        (0.0, -2.0, L.POS_XNEG),
        (-1.0, -2.0, L.NEG_LOW),
        (-1.0, -1.0, L.NEG_MID),
        (-1.0, 0.0, L.NEG_XPOS),
        (-1.0, 3.0, L.NEG_XPOS),
    ],
)
def test_partition_table(a, x, label):
    assert partition_indices([a], [x]) == [label]


def test_partition_is_exhaustive(rng):
    for a, x in random_pairs(rng, 200):
        labels = partition_indices(a, x)
        counts = np.bincount([int(v) for v in labels], minlength=6)
        assert counts.sum() == a.size


def test_nonnegative_inputs_use_two_regions(rng):
    a, x = rng.uniform(0, 5, 50), rng.uniform(0, 5, 50)
    assert set(partition_indices(a, x)) <= {L.POS_MID, L.POS_HIGH}


def test_fg_example():
    fg = evaluate_fg([1, -1], [2, -3])
    assert (fg.f_value, fg.g_value) == (2.0, 5.0)
    assert area_oracle([1, -1], [2, -3]) == (2, 5)
    assert tanimoto_via_fg([1, -1], [2, -3]) == 0.4


def test_fg_diagonal():
    a = np.array([1.5, -2.0, 0.0, 4.0])
    fg = evaluate_fg(a, a)
    assert fg.f_value == fg.g_value == np.abs(a).sum()
    interior = ~fg.boundary
    assert np.all((fg.f_subgradient - fg.g_subgradient)[interior] == 0)
    assert fg.boundary.all()


def test_fg_single_coordinate_subgradient():
    fg = evaluate_fg([1.0], [2.0])
    assert fg.f_subgradient.tolist() == [0.0]
    assert fg.g_subgradient.tolist() == [1.0]


def test_subgradient_table():
    # one coordinate per label, in table order
    a = np.array([1.0, 1.0, 1.0, -1.0, -1.0, -1.0])
    x = np.array([-0.5, 0.5, 2.0, -2.0, -0.5, 0.5])
    fg = evaluate_fg(a, x)
    assert fg.labels.tolist() == [0, 1, 2, 3, 4, 5]
    assert fg.f_subgradient.tolist() == [0, 1, 0, 0, -1, 0]
    assert fg.g_subgradient.tolist() == [-1, 0, 1, -1, 0, 1]
    assert not fg.boundary.any()


@pytest.mark.parametrize("a, x", [([0.0], [0.0]), ([0.0, 0.0], [0.0, 0.0])])
def test_zero_g_convention(a, x):
    assert tanimoto_via_fg(a, x) == 0.0


def test_fg_invariants(rng):
    for a, x in random_pairs(rng, 500):
        fg = evaluate_fg(a, x)
        assert fg.g_value >= fg.f_value >= 0


def test_three_way_agreement(rng):
    for a, x in random_pairs(rng, 10_000):
        v = tanimoto_via_fg(a, x)
        assert abs(v - general_tanimoto_minmax(a, x)) <= 1e-12 * (1 + v)
        assert abs(v - general_tanimoto_l1(a, x)) <= 1e-12 * (1 + v)


def test_weighted_fg_matches_core(rng):
    for a, x in random_pairs(rng, 300):
        w = rng.uniform(0, 2, a.size)
        assert tanimoto_via_fg(a, x, w) == pytest.approx(general_tanimoto_minmax(a, x, w), abs=1e-12)
        fg = evaluate_fg(a, x, w)
        inter, union = area_oracle(a, x, w)
        assert fg.f_value == pytest.approx(float(inter), rel=1e-12, abs=1e-12)
        assert fg.g_value == pytest.approx(float(union), rel=1e-12, abs=1e-12)


def test_subgradients_match_finite_differences(rng):
    checked = 0
    while checked < 200:
        n = int(rng.integers(1, 17))
        a, x = rng.uniform(-10, 10, n), rng.uniform(-10, 10, n)
        scale = max(1.0, np.abs(np.concatenate([a, x])).max())
        eps = 1e-6 * scale
        if np.any(np.abs(x) <= eps) or np.any(np.abs(x - a) <= eps):
            continue
        fg = evaluate_fg(a, x)
        h = 1e-6 * scale
        for j in range(n):
            e = np.zeros(n)
            e[j] = h
            plus, minus = evaluate_fg(a, x + e), evaluate_fg(a, x - e)
            dF = (plus.f_value - minus.f_value) / (2 * h)
            dG = (plus.g_value - minus.g_value) / (2 * h)
            assert dF == pytest.approx(fg.f_subgradient[j], rel=1e-4, abs=1e-4)
            assert dG == pytest.approx(fg.g_subgradient[j], rel=1e-4, abs=1e-4)
        checked += 1


def test_boundary_subgradient_is_one_sided():
    # x_j == a_j >= 0 sits in POS_HIGH: right-hand derivative of G is +1
    fg = evaluate_fg([1.0], [1.0])
    assert fg.boundary.tolist() == [True]
    h = 1e-7
    right = (evaluate_fg([1.0], [1.0 + h]).g_value - fg.g_value) / h
    assert right == pytest.approx(fg.g_subgradient[0], abs=1e-6)


def test_length_mismatch():
    with pytest.raises(ValidationError):
        evaluate_fg([1, 2], [1])
    with pytest.raises(ValidationError):
        partition_indices([1], [1, 2])
