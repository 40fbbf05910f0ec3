"""Synthetic data generators for the experiment harness."""

import math

import numpy as np

from .rng import RandomSource


def gen_gaussian_cloud(n: int, d: int, rng: RandomSource) -> np.ndarray:
    """n standard-normal points in d dimensions."""
    return rng.generator.standard_normal((n, d))


def gen_mixture(
    n: int,
    k: int,
    d: int,
    center_spec: str,
    sigma2: float,
    clip_norm: float | None,
    rng: RandomSource,
) -> tuple[np.ndarray, np.ndarray]:
    """Samples from an equal-weight spherical Gaussian mixture with labels.

    ``center_spec`` picks how the k centers are drawn: ``"unit-ball"``
    (uniform in the unit ball) or ``"hypercube-{1,2}"`` (each coordinate
    uniform over {1, 2}, giving pairwise center distance about sqrt(d/2)).
    Components get n // k samples each, the first n % k components one
    extra.  When ``clip_norm`` is set every sample is clipped to that L2
    norm.  The returned points are shuffled, with labels aligned.
    """
    gen = rng.generator
    if center_spec == "unit-ball":
        raw = gen.standard_normal((k, d))
        raw /= np.linalg.norm(raw, axis=1, keepdims=True)
        radii = gen.random(k) ** (1.0 / d)
        centers = raw * radii[:, None]
    elif center_spec == "hypercube-{1,2}":
        centers = gen.integers(1, 3, size=(k, d)).astype(float)
    else:
        raise ValueError(f"unknown center_spec: {center_spec!r}")

    sizes = [n // k + (1 if i < n % k else 0) for i in range(k)]
    points = np.empty((n, d))
    labels = np.empty(n, dtype=int)
    pos = 0
    sigma = math.sqrt(sigma2)
    for i, size in enumerate(sizes):
        points[pos : pos + size] = centers[i] + sigma * gen.standard_normal((size, d))
        labels[pos : pos + size] = i
        pos += size
    if clip_norm is not None:
        norms = np.linalg.norm(points, axis=1)
        over = norms > clip_norm
        points[over] *= (clip_norm / norms[over])[:, None]
    order = gen.permutation(n)
    return points[order], labels[order]
