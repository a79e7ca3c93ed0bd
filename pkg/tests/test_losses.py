"""Loss-function tests: hand-computed values, a brute-force integer-grid
area oracle for GIoU, and central-finite-difference gradient checks."""

import math

import numpy as np
import pytest

from gpk.errors import DomainError
from gpk.losses import (
    COMPONENT_NAMES,
    LossWeights,
    angle_loss,
    focal_loss,
    giou_loss_2d,
    l1_loss,
    laplace_depth_loss,
    total_loss,
)


def central_diff(f, x, h=1e-5):
    return (f(x + h) - f(x - h)) / (2.0 * h)


def rel_err(a, b):
    return abs(a - b) / max(abs(a), abs(b), 1e-12)


def grid_area_oracle(boxes, lo=-20, hi=20):
    """Pixel-count areas of intersection/union/hull for integer boxes."""
    grids = []
    for left, top, right, bottom in boxes:
        g = np.zeros((hi - lo, hi - lo), dtype=bool)
        g[top - lo : bottom - lo, left - lo : right - lo] = True
        grids.append(g)
    a, b = grids
    inter = (a & b).sum()
    union = (a | b).sum()
    hull_l = min(boxes[0][0], boxes[1][0])
    hull_t = min(boxes[0][1], boxes[1][1])
    hull_r = max(boxes[0][2], boxes[1][2])
    hull_b = max(boxes[0][3], boxes[1][3])
    hull = (hull_r - hull_l) * (hull_b - hull_t)
    return inter, union, hull


class TestFocal:
    def test_probability_domain(self):
        for bad in (0.0, 1.0, -0.1, 1.1):
            with pytest.raises(DomainError):
                focal_loss(bad, 1)

    def test_target_domain(self):
        with pytest.raises(DomainError):
            focal_loss(0.5, 2)

    def test_reduces_to_weighted_ce_at_gamma_zero(self):
        loss, _ = focal_loss(0.7, 1, gamma=0.0, alpha=0.25)
        assert loss == pytest.approx(-0.25 * math.log(0.7), abs=1e-15)

    def test_confident_correct_prediction_downweighted(self):
        easy, _ = focal_loss(0.99, 1)
        hard, _ = focal_loss(0.5, 1)
        assert easy < hard

    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(0)
        for _ in range(500):
            p = rng.uniform(0.02, 0.98)
            target = int(rng.integers(0, 2))
            _, grad = focal_loss(p, target)
            num = central_diff(lambda x: focal_loss(x, target)[0], p)
            assert rel_err(grad, num) < 1e-4


class TestL1AndAngle:
    def test_l1_values_and_gradient(self):
        loss, grad = l1_loss(3.0, 5.5)
        assert (loss, grad) == (2.5, -1.0)
        assert l1_loss(5.5, 5.5) == (0.0, 0.0)

    def test_l1_gradient_finite_difference(self):
        rng = np.random.default_rng(1)
        for _ in range(200):
            pred, target = rng.uniform(-10, 10, 2)
            if abs(pred - target) < 1e-3:
                continue
            _, grad = l1_loss(pred, target)
            num = central_diff(lambda x: l1_loss(x, target)[0], pred)
            assert rel_err(grad, num) < 1e-4

    def test_angle_wraps(self):
        loss, _ = angle_loss(math.pi - 0.1, -math.pi + 0.1)
        assert loss == pytest.approx(0.2, abs=1e-12)
        assert angle_loss(0.3, 0.3)[0] == 0.0

    def test_angle_bounded_by_pi(self):
        rng = np.random.default_rng(2)
        for _ in range(300):
            a, b = rng.uniform(-10, 10, 2)
            assert angle_loss(a, b)[0] <= math.pi + 1e-12


class TestGiou:
    def test_identical_boxes_zero(self):
        assert giou_loss_2d((0, 0, 4, 4), (0, 0, 4, 4)) == 0.0

    def test_matches_integer_grid_oracle(self):
        rng = np.random.default_rng(3)
        for _ in range(300):
            boxes = []
            for _ in range(2):
                left, top = rng.integers(-15, 10, 2)
                boxes.append(
                    (int(left), int(top),
                     int(left + rng.integers(1, 10)),
                     int(top + rng.integers(1, 10)))
                )
            inter, union, hull = grid_area_oracle(boxes)
            want = 1.0 - (inter / union - (hull - union) / hull)
            assert giou_loss_2d(*boxes) == pytest.approx(want, abs=1e-12)

    def test_far_apart_approaches_two(self):
        loss = giou_loss_2d((0, 0, 1, 1), (999, 999, 1000, 1000))
        assert 1.9 < loss < 2.0

    def test_degenerate_box_rejected(self):
        with pytest.raises(DomainError):
            giou_loss_2d((0, 0, 0, 4), (0, 0, 4, 4))


class TestLaplaceDepth:
    def test_exact_prediction_unit_sigma(self):
        loss, grad_d, grad_s = laplace_depth_loss(50.0, 50.0, 1.0)
        assert (loss, grad_d) == (0.0, 0.0)
        assert grad_s == 1.0  # d/ds log(s) at s=1

    def test_unit_error_unit_sigma(self):
        loss, _, grad_s = laplace_depth_loss(51.0, 50.0, 1.0)
        assert loss == 2.0
        assert grad_s == -1.0  # -2 + 1

    def test_sigma_domain(self):
        with pytest.raises(DomainError):
            laplace_depth_loss(1.0, 1.0, 0.0)

    def test_gradients_match_finite_differences(self):
        rng = np.random.default_rng(4)
        for _ in range(500):
            d_gt = rng.uniform(5, 200)
            d_pre = d_gt + rng.uniform(0.1, 20) * rng.choice([-1, 1])
            sigma = rng.uniform(0.2, 10)
            _, grad_d, grad_s = laplace_depth_loss(d_pre, d_gt, sigma)
            num_d = central_diff(
                lambda x: laplace_depth_loss(x, d_gt, sigma)[0], d_pre
            )
            num_s = central_diff(
                lambda s: laplace_depth_loss(d_pre, d_gt, s)[0], sigma
            )
            assert rel_err(grad_d, num_d) < 1e-4
            assert rel_err(grad_s, num_s) < 1e-4

    def test_sigma_minimum_at_twice_abs_error(self):
        # Stationarity: for fixed error, loss is minimized at sigma = 2|delta|.
        delta = 3.0
        best = 2.0 * delta
        sigmas = np.linspace(0.5, 20, 400)
        vals = [laplace_depth_loss(delta, 0.0, s)[0] for s in sigmas]
        assert abs(sigmas[int(np.argmin(vals))] - best) < 0.1
        assert laplace_depth_loss(delta, 0.0, best)[2] == pytest.approx(
            0.0, abs=1e-12
        )


class TestTotal:
    def test_default_weights(self):
        assert LossWeights().as_tuple() == (2, 10, 5, 2, 1, 1, 1, 1)

    def test_all_zero(self):
        assert total_loss([0.0] * 8) == 0.0

    def test_unit_components_default_weights(self):
        assert total_loss([1.0] * 8) == 23.0

    def test_dict_components(self):
        comps = dict.fromkeys(COMPONENT_NAMES, 1.0)
        assert total_loss(comps) == 23.0

    def test_linearity(self):
        base = [0.5, 1.0, 0.25, 2.0, 1.5, 0.1, 3.0, 0.7]
        bumped = list(base)
        bumped[2] *= 2.0
        assert total_loss(bumped) - total_loss(base) == pytest.approx(
            5.0 * base[2], abs=1e-12
        )

    def test_negative_weight_rejected(self):
        with pytest.raises(DomainError):
            LossWeights(w1=-1.0)

    def test_wrong_component_count(self):
        with pytest.raises(DomainError):
            total_loss([1.0] * 7)
