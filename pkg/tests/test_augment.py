import numpy as np
import pytest

from tubalaug.augment import (PRESETS, TAdafParams, augment_backward,
                              augment_backward_batch, augment_forward,
                              augment_forward_batch, combine)
from tubalaug.errors import ConfigError, ShapeError, StateError
from tubalaug.network import build_mlp
from tubalaug.selfcheck import composed_loss_and_grads, gradient_check
from tubalaug.tensor3 import permute
from tubalaug.tprod import tprod_naive


def rand_img(rng, m=4):
    return rng.uniform(-1, 1, (m, m, 3))


class TestParams:
    def test_identity_init_shapes_and_count(self):
        p = TAdafParams.identity_init(32, 32)
        assert p.w1.shape == (3, 3, 32) and p.w2.shape == (3, 3, 32)
        assert p.num_params == 576

    def test_weight_sum_enforced(self):
        with pytest.raises(ConfigError):
            TAdafParams.identity_init(4, 4, weights=(0.5, 0.5, 0.5))

    def test_checkpoint_round_trip(self):
        rng = np.random.default_rng(0)
        p = TAdafParams.identity_init(5, 5, weights=PRESETS["433"],
                                      activation="tanh")
        p.w1 += rng.normal(0, 0.1, p.w1.shape)
        q = TAdafParams.from_checkpoint_section(p.checkpoint_section())
        assert np.array_equal(q.w1, p.w1) and np.array_equal(q.w2, p.w2)
        assert q.weights == p.weights and q.activation == p.activation


class TestCombine:
    def test_convexity(self):
        r = np.array([0.3, 0.7])
        for preset in PRESETS.values():
            assert np.allclose(combine((r, r, r), preset), r)

    def test_preset_433(self):
        out = combine((np.array([1.0, 0]), np.array([0.0, 1]),
                       np.array([0.0, 1])), PRESETS["433"])
        assert np.allclose(out, [0.4, 0.6])

    def test_preset_333(self):
        out = combine((np.array([3.0, 0]), np.array([0.0, 3]),
                       np.array([0.0, 0])), PRESETS["333"])
        assert np.allclose(out, [1, 1])

    def test_bad_weights(self):
        with pytest.raises(ConfigError):
            combine((np.zeros(2),) * 3, (0.5, 0.4, 0.2))


class TestForward:
    def test_identity_at_init(self):
        rng = np.random.default_rng(1)
        img = rand_img(rng, 6)
        params = TAdafParams.identity_init(6, 6)
        branches, _ = augment_forward(img, params)
        for br in branches:
            assert np.allclose(br, img, atol=1e-12)

    def test_scaled_identity(self):
        rng = np.random.default_rng(2)
        img = rand_img(rng, 5)
        params = TAdafParams.identity_init(5, 5)
        params.w1 *= 2.0
        branches, _ = augment_forward(img, params)
        assert np.allclose(branches[0], img)
        assert np.allclose(branches[1], 2 * img, atol=1e-12)
        assert np.allclose(branches[2], img, atol=1e-12)

    def test_matches_naive_pipeline_oracle(self):
        rng = np.random.default_rng(3)
        img = rand_img(rng, 4)
        params = TAdafParams.identity_init(4, 4, activation="tanh")
        params.w1 += rng.normal(0, 0.3, params.w1.shape)
        params.w2 += rng.normal(0, 0.3, params.w2.shape)
        branches, _ = augment_forward(img, params)
        # independent route: explicit permutes + definitional T-product
        a1 = permute(img, (1, 3, 2))
        b1 = permute(np.tanh(tprod_naive(a1, params.w1)), (1, 3, 2))
        a2 = permute(img, (2, 3, 1))
        b2 = permute(np.tanh(tprod_naive(a2, params.w2)), (3, 1, 2))
        assert np.allclose(branches[1], b1, atol=1e-10)
        assert np.allclose(branches[2], b2, atol=1e-10)

    def test_non_square_rejected(self):
        params = TAdafParams.identity_init(4, 4)
        with pytest.raises(ShapeError):
            augment_forward(np.zeros((4, 6, 3)), params)

    def test_mismatched_params_rejected(self):
        params = TAdafParams.identity_init(4, 4)
        with pytest.raises(ShapeError):
            augment_forward(np.zeros((6, 6, 3)), params)

    def test_batch_matches_per_image(self):
        rng = np.random.default_rng(4)
        imgs = rng.uniform(-1, 1, (3, 4, 4, 3))
        params = TAdafParams.identity_init(4, 4, activation="relu")
        params.w1 += rng.normal(0, 0.2, params.w1.shape)
        batch_branches, _ = augment_forward_batch(imgs, params)
        for i in range(3):
            single, _ = augment_forward(imgs[i], params)
            for bb, sb in zip(batch_branches, single):
                assert np.allclose(bb[i], sb, atol=1e-12)


class TestBackward:
    def test_zero_grads_give_zero(self):
        rng = np.random.default_rng(5)
        img = rand_img(rng, 4)
        params = TAdafParams.identity_init(4, 4)
        _, cache = augment_forward(img, params)
        z = np.zeros_like(img)
        dw1, dw2, dimg = augment_backward((z, z, z), cache, params)
        assert not dw1.any() and not dw2.any() and not dimg.any()

    def test_scalar_case_analytic(self):
        # 1x1x3 image: both branch T-products have depth 1, so the map is
        # the plain matrix product a(1x3) @ W(3x3); differentiate directly.
        rng = np.random.default_rng(6)
        img = rng.normal(size=(1, 1, 3))
        params = TAdafParams.identity_init(1, 1, activation="tanh")
        params.w1 += rng.normal(0, 0.3, params.w1.shape)
        params.w2 += rng.normal(0, 0.3, params.w2.shape)
        g = [rng.normal(size=(1, 1, 3)) for _ in range(3)]
        _, cache = augment_forward(img, params)
        dw1, dw2, dimg = augment_backward(g, cache, params)

        a = img.ravel()[None, :]  # 1x3 row
        for w, grad_branch, dw in ((params.w1[:, :, 0], g[1], dw1),
                                   (params.w2[:, :, 0], g[2], dw2)):
            z = a @ w
            delta = grad_branch.ravel()[None, :] * (1 - np.tanh(z) ** 2)
            assert np.allclose(dw[:, :, 0], a.T @ delta, atol=1e-10)
        dimg_expected = (g[0].ravel()
                         + (g[1].ravel()[None, :] * (1 - np.tanh(a @ params.w1[:, :, 0]) ** 2)) @ params.w1[:, :, 0].T
                         + (g[2].ravel()[None, :] * (1 - np.tanh(a @ params.w2[:, :, 0]) ** 2)) @ params.w2[:, :, 0].T)
        assert np.allclose(dimg.ravel(), dimg_expected.ravel(), atol=1e-10)

    def test_full_finite_difference_check(self):
        rng = np.random.default_rng(7)
        model = build_mlp((6, 6), 3, hidden=8, seed=1)
        params = TAdafParams.identity_init(6, 6)
        params.w1 += rng.normal(0, 0.05, params.w1.shape)
        params.w2 += rng.normal(0, 0.05, params.w2.shape)
        img = rng.uniform(-1, 1, (6, 6, 3))
        assert gradient_check(img, 2, params, model) <= 1e-4

    def test_frozen_zeroes_weight_grads(self):
        rng = np.random.default_rng(8)
        img = rand_img(rng, 4)
        params = TAdafParams.identity_init(4, 4)
        params.frozen = True
        _, cache = augment_forward(img, params)
        g = [rng.normal(size=(4, 4, 3)) for _ in range(3)]
        dw1, dw2, dimg = augment_backward(g, cache, params)
        assert not dw1.any() and not dw2.any()
        assert dimg.any()  # image gradient still flows

    def test_branch_weight_zeroing(self):
        rng = np.random.default_rng(9)
        model = build_mlp((4, 4), 3, hidden=6, seed=2)
        params = TAdafParams.identity_init(4, 4, weights=(1.0, 0.0, 0.0))
        params.w1 += rng.normal(0, 0.1, params.w1.shape)
        img = rand_img(rng, 4)
        _, dw1, dw2, _, _ = composed_loss_and_grads(img, 0, params, model)
        assert not dw1.any() and not dw2.any()

    def test_stale_cache_rejected(self):
        rng = np.random.default_rng(10)
        img = rand_img(rng, 4)
        params = TAdafParams.identity_init(4, 4)
        _, cache = augment_forward(img, params)
        g = np.zeros((2, 5, 5, 3))
        with pytest.raises(StateError):
            augment_backward_batch((g, g, g), cache, params)

    def test_batch_backward_matches_sum_of_singles(self):
        rng = np.random.default_rng(11)
        imgs = rng.uniform(-1, 1, (3, 4, 4, 3))
        params = TAdafParams.identity_init(4, 4, activation="tanh")
        params.w1 += rng.normal(0, 0.2, params.w1.shape)
        grads = tuple(rng.normal(size=(3, 4, 4, 3)) for _ in range(3))
        _, cache = augment_forward_batch(imgs, params)
        dw1, dw2, dimgs = augment_backward_batch(grads, cache, params)
        dw1_sum = np.zeros_like(dw1)
        dw2_sum = np.zeros_like(dw2)
        for i in range(3):
            _, ci = augment_forward(imgs[i], params)
            a, b, di = augment_backward([g[i] for g in grads], ci, params)
            dw1_sum += a
            dw2_sum += b
            assert np.allclose(dimgs[i], di, atol=1e-10)
        assert np.allclose(dw1, dw1_sum, atol=1e-10)
        assert np.allclose(dw2, dw2_sum, atol=1e-10)
