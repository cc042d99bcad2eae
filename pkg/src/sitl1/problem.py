"""The over-determined error-detection problem ``y = A x + e``."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, InvalidInput
from .linalg import as_matrix, as_vector, numerical_rank

__all__ = ["Problem"]


@dataclass(frozen=True, eq=False)
class Problem:
    """Design matrix ``a`` (n x r, rank r) and observation ``y`` (n,).

    Arrays are copied and frozen on construction.
    """

    a: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        a = as_matrix(self.a, "A").copy()
        y = as_vector(self.y, "y").copy()
        n, r = a.shape
        if y.size != n:
            raise DimensionMismatch(f"A has {n} rows but y has {y.size} entries")
        if not n > r:
            raise InvalidInput(f"need more rows than columns, got A of shape {a.shape}")
        if numerical_rank(a) != r:
            raise InvalidInput("A must have full column rank")
        a.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.a.shape[0]

    @property
    def r(self) -> int:
        return self.a.shape[1]

    def transformed(self, phi) -> Problem:
        """The problem ``(phi A, phi y)``."""
        phi = np.asarray(phi, dtype=float)
        return Problem(phi @ self.a, phi @ self.y)
