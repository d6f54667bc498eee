"""Dense numeric primitives shared by every layer.

Vectors are 1-D float64 numpy arrays, matrices are 2-D row-major float64
arrays. Elementwise add/mul and scalar ops are numpy's native operators on
those arrays; this module adds the pieces that need shape checks, numerical
stabilization, or seeded determinism.
"""

from __future__ import annotations

import numpy as np

Vector = np.ndarray  # 1-D
Matrix = np.ndarray  # 2-D, row-major


class Rng:
    """Deterministic random source: same seed, same stream, any platform.

    One instance drives all randomness of a run (init, shuffling, dropout),
    and is never shared between concurrent consumers.
    """

    def __init__(self, seed: int):
        self.seed = int(seed)
        self._gen = np.random.Generator(np.random.PCG64(self.seed))

    def uniform(self, lo: float, hi: float, shape=None) -> np.ndarray:
        return self._gen.uniform(lo, hi, shape)

    def random(self, shape=None) -> np.ndarray:
        return self._gen.random(shape)

    def permutation(self, n: int) -> np.ndarray:
        return self._gen.permutation(n)

    def integers(self, lo: int, hi: int, shape=None):
        return self._gen.integers(lo, hi, shape)


def matvec(m: Matrix, v: Vector) -> Vector:
    """Matrix-vector product with an explicit shape check."""
    m = np.asarray(m)
    v = np.asarray(v)
    if m.ndim != 2 or v.ndim != 1 or m.shape[1] != v.shape[0]:
        raise ValueError(
            f"matvec shape mismatch: matrix {m.shape} vs vector {v.shape}"
        )
    return m @ v


def softmax_stable(v: Vector) -> Vector:
    """Softmax with max-subtraction so large finite inputs never overflow.

    Entries of -inf (used for masking) come out exactly zero; at least one
    entry must be finite.
    """
    v = np.asarray(v, dtype=float)
    if v.size == 0:
        raise ValueError("softmax of an empty vector")
    hi = np.max(v)
    if not np.isfinite(hi):
        raise ValueError("softmax input has no finite entry")
    e = np.exp(v - hi)
    return e / e.sum()


def sigmoid(x):
    """Logistic function, stable on both tails."""
    x = np.asarray(x, dtype=float)
    e = np.exp(-np.abs(x))
    return np.where(x >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


tanh = np.tanh


def outer(a: Vector, b: Vector) -> Matrix:
    return np.outer(a, b)


def argmax(v: Vector) -> int:
    """Index of the largest entry; ties break toward the lowest index."""
    v = np.asarray(v)
    if v.size == 0:
        raise ValueError("argmax of an empty vector")
    return int(np.argmax(v))


def uniform_init(rng: Rng, rows: int, cols: int, lo: float = -0.1, hi: float = 0.1) -> Matrix:
    """Matrix with i.i.d. entries from U(lo, hi), deterministic given the rng."""
    if not lo < hi:
        raise ValueError(f"uniform_init needs lo < hi, got [{lo}, {hi})")
    return rng.uniform(lo, hi, (rows, cols))
