import numpy as np
import pytest

from leakseg import tape
from leakseg.decoder import FpnDecoder
from leakseg.gradcheck import check
from leakseg.losses import (boundary_weight_map, loss, loss_gradcheck,
                            segmentation_loss)
from leakseg.tape import Tensor

from gradutil import first_safe_seed
from oracles import naive_loss, naive_weight_map


def make_maps(rng, c, base_hw, n=1):
    return {
        8: Tensor(rng.normal(size=(n, c, base_hw, base_hw))),
        16: Tensor(rng.normal(size=(n, c, base_hw // 2, base_hw // 2))),
        32: Tensor(rng.normal(size=(n, c, base_hw // 4, base_hw // 4))),
    }


# -- decoder -----------------------------------------------------------------------


def test_decoder_full_resolution_output():
    rng = np.random.default_rng(0)
    dec = FpnDecoder(8, 16, rng)
    maps = {
        8: Tensor(rng.normal(size=(1, 8, 44, 44))),
        16: Tensor(rng.normal(size=(1, 8, 22, 22))),
        32: Tensor(rng.normal(size=(1, 8, 11, 11))),
    }
    logits = dec(maps, (352, 352))
    assert logits.shape == (1, 1, 352, 352)


def test_decoder_small_shapes():
    rng = np.random.default_rng(1)
    dec = FpnDecoder(4, 8, rng)
    logits = dec(make_maps(rng, 4, 8), (64, 64))
    assert logits.shape == (1, 1, 64, 64)


def test_decoder_zero_inputs_zero_biases():
    rng = np.random.default_rng(2)
    dec = FpnDecoder(4, 8, rng)
    for name, p in dec.params().items():
        if name.endswith(".bias"):
            p.data[...] = 0.0
    maps = {s: Tensor(np.zeros((1, 4, 16 // (s // 8), 16 // (s // 8)))) for s in (8, 16, 32)}
    logits = dec(maps, (32, 32)).data
    assert np.allclose(logits, 0.0)
    prob = 1.0 / (1.0 + np.exp(-logits))
    assert np.allclose(prob, 0.5)


def test_decoder_linearity_without_activations():
    rng = np.random.default_rng(3)
    dec = FpnDecoder(3, 6, rng)
    for name, p in dec.params().items():
        if name.endswith(".bias"):
            p.data[...] = 0.0
    maps = make_maps(rng, 3, 8)
    base = dec(maps, (32, 32), activations=False).data
    scaled_maps = {s: Tensor(2.5 * m.data) for s, m in maps.items()}
    scaled = dec(scaled_maps, (32, 32), activations=False).data
    assert np.allclose(scaled, 2.5 * base, atol=1e-10)


def test_decoder_rejects_inconsistent_scales():
    rng = np.random.default_rng(4)
    dec = FpnDecoder(4, 8, rng)
    maps = make_maps(rng, 4, 8)
    maps[16] = Tensor(rng.normal(size=(1, 4, 5, 5)))
    with pytest.raises(ValueError, match="inconsistent"):
        dec(maps, (64, 64))


def test_decoder_gradcheck():
    def builder(seed):
        rng = np.random.default_rng(seed)
        dec = FpnDecoder(3, 4, np.random.default_rng(seed))
        maps = make_maps(rng, 3, 8)
        inputs = {f"in{s}": tape.parameter(maps[s].data) for s in (8, 16, 32)}
        readout = rng.normal(size=(1, 1, 16, 16))

        def forward():
            tensor_maps = {s: inputs[f"in{s}"] for s in (8, 16, 32)}
            return tape.sum_(tape.mul(dec(tensor_maps, (16, 16)), readout))

        tensors = dict(inputs)
        tensors.update(dec.params())
        return forward, tensors

    forward, tensors = first_safe_seed(builder)
    report = check(forward, tensors, tol=1e-3)
    assert report["passed"], report["errors"]


# -- weight map -------------------------------------------------------------------


def test_weight_map_uniform_regions():
    assert np.allclose(boundary_weight_map(np.zeros((16, 16))), 1.0)
    assert np.allclose(boundary_weight_map(np.ones((16, 16))), 1.0)


def test_weight_map_range_and_boundary_emphasis():
    gt = np.zeros((40, 40))
    gt[10:30, 10:30] = 1.0
    w = boundary_weight_map(gt)
    assert w.min() >= 1.0 and w.max() <= 6.0
    assert w[10, 10] > w[20, 20]  # corner outweighs deep interior


def test_weight_map_matches_naive_meanpool():
    rng = np.random.default_rng(5)
    for shape in ((8, 8), (16, 16), (33, 17)):
        gt = (rng.random(shape) < 0.5).astype(float)
        assert np.allclose(boundary_weight_map(gt), naive_weight_map(gt), atol=1e-10)


# -- loss -------------------------------------------------------------------------


def test_perfect_prediction_zero_loss():
    gt = np.zeros((8, 8))
    gt[2:6, 2:6] = 1.0
    out = loss(gt.copy(), gt)
    assert out.wbce == pytest.approx(0.0, abs=1e-9)
    assert out.wiou == pytest.approx(0.0, abs=1e-9)
    assert out.total == pytest.approx(0.0, abs=1e-9)


def test_empty_scene_fixed_point():
    out = loss(np.zeros((8, 8)), np.zeros((8, 8)))
    assert out.total == pytest.approx(0.0, abs=1e-9)
    assert np.allclose(out.weight_map, 1.0)


def test_loss_matches_scripted_oracle():
    gt = np.zeros((8, 8))
    gt[2:6, 2:6] = 1.0
    prob = np.full((8, 8), 0.5)
    out = loss(prob, gt)
    total, wbce, wiou = naive_loss(prob, gt)
    assert out.wbce == pytest.approx(wbce, abs=1e-6)
    assert out.wiou == pytest.approx(wiou, abs=1e-6)
    assert out.total == pytest.approx(total, abs=1e-6)


def test_loss_matches_oracle_random_instances():
    rng = np.random.default_rng(6)
    for _ in range(10):
        gt = (rng.random((9, 7)) < 0.4).astype(float)
        prob = rng.uniform(0.01, 0.99, size=(9, 7))
        out = loss(prob, gt)
        total, wbce, wiou = naive_loss(prob, gt)
        assert out.total == pytest.approx(total, abs=1e-9)


def test_loss_nonnegative_and_zero_iff_exact():
    rng = np.random.default_rng(7)
    for _ in range(10):
        gt = (rng.random((6, 6)) < 0.5).astype(float)
        prob = rng.uniform(0.0, 1.0, size=(6, 6))
        out = loss(prob, gt)
        assert out.total >= 0.0
        if not np.array_equal(prob, gt):
            assert out.total > 0.0


def test_loss_weight_scale_invariance():
    # wBCE normalizes by the weight mass, so scaling the map is exactly
    # neutral; wIoU is a ratio of weighted sums and is neutral up to the
    # fixed +1 smoothing term in numerator and denominator
    from leakseg.losses import IOU_EPS, weighted_loss_terms

    rng = np.random.default_rng(8)
    gt = (rng.random((8, 8)) < 0.4).astype(float)
    prob = rng.uniform(0.05, 0.95, size=(8, 8))
    w = boundary_weight_map(gt)
    scale = 3.7
    with tape.no_grad():
        a = weighted_loss_terms(Tensor(prob), gt, w)
        b = weighted_loss_terms(Tensor(prob), gt, scale * w)
    assert float(a[0]) == pytest.approx(float(b[0]), abs=1e-12)
    union = (w * (prob + gt - prob * gt)).sum()
    bound = IOU_EPS / min(union + IOU_EPS, scale * union + IOU_EPS)
    assert abs(float(a[1]) - float(b[1])) <= bound


def test_loss_validates_inputs():
    with pytest.raises(ValueError):
        loss(np.full((4, 4), 1.2), np.zeros((4, 4)))
    with pytest.raises(ValueError):
        loss(np.zeros((4, 4)), np.full((4, 4), 0.5))
    with pytest.raises(ValueError):
        loss(np.zeros((4, 4)), np.zeros((5, 5)))


def test_loss_gradcheck_random_instance():
    rng = np.random.default_rng(9)
    gt = (rng.random((4, 4)) < 0.5).astype(float)
    prob = rng.uniform(0.1, 0.9, size=(4, 4))
    report = loss_gradcheck(prob, gt)
    assert report["passed"], report


def test_loss_gradcheck_8x8():
    rng = np.random.default_rng(10)
    gt = np.zeros((8, 8))
    gt[3:7, 2:5] = 1.0
    prob = rng.uniform(0.2, 0.8, size=(8, 8))
    report = loss_gradcheck(prob, gt)
    assert report["passed"], report


def test_gradient_pushes_down_on_empty_gt():
    prob = tape.parameter(np.full((6, 6), 0.5))
    gt = np.zeros((6, 6))
    total, _, _ = segmentation_loss(prob, gt)
    total.backward()
    assert (prob.grad > 0).all()  # increasing prob increases the loss everywhere


def test_batch_loss_is_mean_of_frames():
    rng = np.random.default_rng(11)
    gts = np.stack([(rng.random((8, 8)) < 0.4).astype(float) for _ in range(3)])
    probs = rng.uniform(0.1, 0.9, size=(3, 8, 8))
    with tape.no_grad():
        total, wbce, wiou = segmentation_loss(Tensor(probs), gts)
    singles = [loss(probs[i], gts[i]).total for i in range(3)]
    assert float(total) == pytest.approx(np.mean(singles), abs=1e-9)
