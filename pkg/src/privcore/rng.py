"""Seedable randomness with derived child streams and a noise-free test mode.

Every randomized operation in the package draws from a ``RandomSource``.
Sub-computations derive independent child streams by hashing
(seed, label path), so the result never depends on the order in which
parallel workers consume randomness.
"""

import hashlib

import numpy as np


class RandomSource:
    """Deterministic random source with labeled child streams.

    Parameters
    ----------
    seed : int
        64-bit root seed.  Identical seed and identical call sequence give
        bit-identical draws across runs and platforms.
    noise_free : bool
        When set, every privacy-noise draw (``gaussian``, ``laplace``,
        ``normal_matrix``) returns exactly zero and privacy-critical
        permutations collapse to the identity, while data randomness
        (shuffles, subsampling, Bernoulli keep bits) still uses the
        generator.  Pipelines then become deterministic functions of
        (data, parameters, seed), which golden tests rely on.
    """

    def __init__(self, seed: int, noise_free: bool = False, _path: tuple = ()):
        self.seed = int(seed)
        self.noise_free = bool(noise_free)
        self._path = _path
        digest = hashlib.sha256(repr((self.seed,) + _path).encode()).digest()
        self._gen = np.random.Generator(
            np.random.PCG64(int.from_bytes(digest[:16], "little"))
        )

    def child(self, label) -> "RandomSource":
        """Derive an independent stream keyed by (this stream, label)."""
        return RandomSource(self.seed, self.noise_free, self._path + (str(label),))

    @property
    def generator(self) -> np.random.Generator:
        """The underlying generator, for data randomness (never zeroed)."""
        return self._gen

    # -- privacy noise: zero in noise-free mode -----------------------------

    def gaussian(self, sigma: float, size=None):
        if sigma < 0:
            raise ValueError(f"sigma must be nonnegative, got {sigma}")
        if self.noise_free or sigma == 0:
            return 0.0 if size is None else np.zeros(size)
        return self._gen.normal(0.0, sigma, size=size)

    def laplace(self, scale: float, size=None):
        if scale < 0:
            raise ValueError(f"scale must be nonnegative, got {scale}")
        if self.noise_free or scale == 0:
            return 0.0 if size is None else np.zeros(size)
        return self._gen.laplace(0.0, scale, size=size)

    def normal_matrix(self, shape):
        """Matrix of independent standard normals (zero in noise-free mode)."""
        if self.noise_free:
            return np.zeros(shape)
        return self._gen.standard_normal(shape)

    def privacy_permutation(self, k: int) -> np.ndarray:
        """Uniform permutation used as part of a mechanism's output space.

        Returns the identity in noise-free mode so golden tests can pin
        pipeline outputs; ordinary data shuffles should use ``shuffle``.
        """
        if self.noise_free:
            return np.arange(k)
        return self._gen.permutation(k)

    # -- data randomness: active in every mode ------------------------------

    def bernoulli(self, probs: np.ndarray) -> np.ndarray:
        probs = np.asarray(probs, dtype=float)
        return self._gen.random(probs.shape) < probs

    def shuffle_indices(self, n: int) -> np.ndarray:
        return self._gen.permutation(n)

    def subsample(self, n: int, m: int) -> np.ndarray:
        """m indices drawn without replacement from range(n)."""
        return self._gen.choice(n, size=m, replace=False)


def add_gaussian_noise(v, sigma: float, rng: RandomSource):
    """Add spherical Gaussian noise of scale sigma to a vector."""
    v = np.asarray(v, dtype=float)
    return v + rng.gaussian(sigma, size=v.shape)


def add_laplace_noise(x: float, scale: float, rng: RandomSource) -> float:
    """Add Laplace noise of the given scale to a scalar."""
    return float(x) + float(rng.laplace(scale))
