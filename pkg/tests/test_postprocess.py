import numpy as np
import pytest

from leakseg.postprocess import binarize, dilate, erode, opening

from oracles import naive_opening


def random_mask(rng, h=32, w=32, density=0.4):
    return (rng.random((h, w)) < density).astype(np.uint8)


def test_binarize_strict_inequality():
    prob = np.full((4, 4), 0.5)
    assert binarize(prob, 0.5).sum() == 0


def test_binarize_identity_on_binary():
    gt = np.array([[0, 1], [1, 0]], dtype=float)
    assert np.array_equal(binarize(gt, 0.5), gt.astype(np.uint8))


def test_binarize_high_threshold():
    assert binarize(np.full((3, 3), 0.8), 0.9).sum() == 0


def test_binarize_rejects_bad_threshold():
    with pytest.raises(ValueError):
        binarize(np.zeros((2, 2)), 0.0)


def test_opening_requires_odd_kernel():
    with pytest.raises(ValueError):
        opening(np.zeros((4, 4), dtype=np.uint8), 4)


def test_opening_kernel_one_is_identity():
    rng = np.random.default_rng(3)
    m = random_mask(rng)
    assert np.array_equal(opening(m, 1), m)


def test_opening_all_zero():
    assert opening(np.zeros((10, 10), dtype=np.uint8), 5).sum() == 0


def test_speck_removed_square_preserved():
    mask = np.zeros((20, 20), dtype=np.uint8)
    mask[2:5, 2:5] = 1  # 3x3 speck
    mask[6:18, 6:18] = 1  # 12x12 square
    opened = opening(mask, 9)
    assert opened[2:5, 2:5].sum() == 0
    expected = np.zeros_like(mask)
    expected[6:18, 6:18] = 1
    assert np.array_equal(opened, expected)


@pytest.mark.parametrize("kernel", [3, 5, 9])
def test_matches_naive_oracle(kernel):
    rng = np.random.default_rng(kernel)
    for _ in range(50):
        m = random_mask(rng)
        assert np.array_equal(opening(m, kernel), naive_opening(m, kernel))


def test_erode_dilate_match_oracle_components():
    from oracles import naive_dilate, naive_erode

    rng = np.random.default_rng(11)
    m = random_mask(rng, 16, 16)
    assert np.array_equal(erode(m, 5), naive_erode(m, 5))
    assert np.array_equal(dilate(m, 5), naive_dilate(m, 5))


def test_idempotence():
    rng = np.random.default_rng(7)
    for k in (3, 5, 9):
        m = random_mask(rng)
        once = opening(m, k)
        assert np.array_equal(opening(once, k), once)


def test_anti_extensive():
    rng = np.random.default_rng(9)
    for k in (3, 5, 9):
        m = random_mask(rng)
        opened = opening(m, k)
        assert np.all(opened <= m)


def test_monotone_in_the_mask():
    rng = np.random.default_rng(13)
    for k in (3, 5, 9):
        small = random_mask(rng, density=0.3)
        extra = random_mask(rng, density=0.2)
        large = np.maximum(small, extra)
        o_small = opening(small, k)
        o_large = opening(large, k)
        assert np.all(o_small <= o_large)


def test_rejects_non_binary():
    with pytest.raises(ValueError):
        opening(np.full((4, 4), 2, dtype=np.uint8), 3)
