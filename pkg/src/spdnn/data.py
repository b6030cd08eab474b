"""Supervised sample container shared by simulators, losses, and training."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericError, ShapeError


@dataclass(frozen=True)
class SupervisedSet:
    """Lag-embedded (input, target) pairs as dense float64 arrays.

    ``X`` has shape (n, d) and ``y`` shape (n,); rows are aligned.
    """

    X: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        X = np.ascontiguousarray(np.asarray(self.X, dtype=np.float64))
        y = np.ascontiguousarray(np.asarray(self.y, dtype=np.float64))
        if X.ndim != 2 or y.ndim != 1:
            raise ShapeError(f"expected X (n, d) and y (n,), got {X.shape} and {y.shape}")
        if X.shape[0] != y.shape[0]:
            raise ShapeError(f"X has {X.shape[0]} rows but y has {y.shape[0]}")
        if not (np.isfinite(X).all() and np.isfinite(y).all()):
            raise NumericError("supervised data contains non-finite values")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    def __len__(self) -> int:
        return self.y.shape[0]

    @property
    def dim(self) -> int:
        return self.X.shape[1]

    def subset(self, idx) -> "SupervisedSet":
        return SupervisedSet(self.X[idx], self.y[idx])
