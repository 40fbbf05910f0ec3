import math

import numpy as np
import pytest

from privcore import RandomSource, gen_gaussian_cloud, gen_mixture


class TestGaussianCloud:
    def test_empty(self):
        assert gen_gaussian_cloud(0, 3, RandomSource(0)).shape == (0, 3)

    def test_mean_concentrates(self):
        n, d = 5000, 10
        pts = gen_gaussian_cloud(n, d, RandomSource(1))
        assert np.linalg.norm(pts.mean(axis=0)) <= 3 * math.sqrt(d / n)

    def test_covariance_near_identity(self):
        n, d = 20000, 5
        pts = gen_gaussian_cloud(n, d, RandomSource(2))
        cov = pts.T @ pts / n
        assert np.abs(cov - np.eye(d)).max() <= 6 * math.sqrt(1.0 / n)

    def test_active_in_noise_free_mode(self):
        pts = gen_gaussian_cloud(10, 2, RandomSource(3, noise_free=True))
        assert np.abs(pts).sum() > 0


class TestMixture:
    def test_clipping(self):
        pts, _ = gen_mixture(500, 4, 3, "unit-ball", 0.5, 1.0, RandomSource(0))
        assert np.linalg.norm(pts, axis=1).max() <= 1.0 + 1e-12

    def test_label_counts_balanced(self):
        _, labels = gen_mixture(103, 4, 2, "unit-ball", 0.1, None, RandomSource(1))
        counts = np.bincount(labels, minlength=4)
        assert counts.min() >= 103 // 4
        assert counts.max() <= 103 // 4 + 1

    def test_hypercube_center_distances(self):
        # Centers drawn from {1,2}^d differ in about half the coordinates,
        # so pairwise distances concentrate near sqrt(d/2).
        d = 400
        dists = []
        for seed in range(30):
            pts, labels = gen_mixture(4, 2, d, "hypercube-{1,2}", 1e-12, None, RandomSource(seed))
            c0 = pts[labels == 0].mean(axis=0)
            c1 = pts[labels == 1].mean(axis=0)
            dists.append(np.linalg.norm(c0 - c1))
        assert np.mean(dists) == pytest.approx(math.sqrt(d / 2), rel=0.1)

    def test_unknown_spec_rejected(self):
        with pytest.raises(ValueError):
            gen_mixture(10, 2, 2, "donut", 0.1, None, RandomSource(0))
