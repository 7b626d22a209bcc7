import numpy as np
import pytest

from tubalaug.augment import TAdafParams
from tubalaug.metrics import (accuracy_floor, min_available_epochs,
                              param_accounting)
from tubalaug.network import build_lenet, build_mlp


def scan_oracle(series, floor):
    """Brute-force re-statement of the definition: first epoch at the bar."""
    for t, acc in enumerate(series, start=1):
        if acc >= floor:
            return t
    return None


class TestFloor:
    def test_published_example(self):
        assert accuracy_floor(0.6888) == pytest.approx(0.68)

    def test_exact_boundary(self):
        assert accuracy_floor(0.68) == pytest.approx(0.68)

    def test_low_value(self):
        assert accuracy_floor(0.3859) == pytest.approx(0.38)


class TestMinAvailableEpochs:
    def test_floor_step(self):
        lam, floor, _ = min_available_epochs([[0.5]], [0.5, 0.6888, 0.61])
        assert lam == pytest.approx(0.6888)
        assert floor == pytest.approx(0.68)

    def test_linear_scan_example(self):
        series = [0.50, 0.67, 0.683, 0.69]
        _, floor, t = min_available_epochs([series], [0.5, 0.6888])
        assert floor == pytest.approx(0.68)
        assert t == [3]

    def test_never_reached(self):
        _, _, t = min_available_epochs([[0.5] * 10], [0.5, 0.6888])
        assert t == [None]

    def test_empty_series(self):
        with pytest.raises(ValueError):
            min_available_epochs([[]], [0.5])
        with pytest.raises(ValueError):
            min_available_epochs([[0.5]], [])

    def test_matches_scan_oracle_on_random_series(self):
        rng = np.random.default_rng(0)
        for _ in range(1000):
            n = int(rng.integers(1, 40))
            baseline = rng.uniform(0, 1, n)
            series = rng.uniform(0, 1, int(rng.integers(1, 40)))
            lam, floor, (t_base, t_s) = min_available_epochs(
                [baseline, series], baseline)
            assert lam == baseline.max()
            assert floor == np.floor(lam * 100 + 1e-12) / 100
            assert t_base == scan_oracle(baseline, floor)
            assert t_s == scan_oracle(series, floor)


class TestParamAccounting:
    def test_armed_32x32(self):
        model = build_lenet(100, seed=0)
        params = TAdafParams.identity_init(32, 32)
        _, additional, _ = param_accounting(model, params)
        assert additional == 576

    def test_unarmed(self):
        model = build_mlp((8, 8), 4, seed=0)
        base, additional, ratio = param_accounting(model, None)
        assert additional == 0 and ratio == 0
        assert base == model.num_params()

    def test_published_ratio_arithmetic(self):
        # 576 / 145,578 prints as 0.3957%
        assert f"{576 / 145578 * 100:.4f}%" == "0.3957%"

    def test_lenet_parameter_count_reported(self):
        # the exact historical variant is unspecified; just sanity-check the
        # order of magnitude against the published 145,578 figure
        model = build_lenet(100, seed=0)
        assert 50_000 < model.num_params() < 300_000
