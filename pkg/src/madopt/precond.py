"""Preconditioner actions for the multisecant step.

A preconditioner supplies the action v -> P_k^{-1} v used as the base
inverse-Jacobian estimate (scaled by alpha) in the quasi-Newton update.
The action may change between outer iterations; the engine calls
:meth:`Preconditioner.update` with the iteration index before applying.
"""

import numpy as np

__all__ = [
    "CallablePreconditioner",
    "DiagonalPreconditioner",
    "IdentityPreconditioner",
    "MatrixPreconditioner",
    "Preconditioner",
]


class Preconditioner:
    """Base contract: the action of an approximate inverse Jacobian."""

    def update(self, k: int) -> None:
        """Called once per outer iteration; stationary preconditioners ignore it."""

    def apply(self, v: np.ndarray) -> np.ndarray:
        raise NotImplementedError


class IdentityPreconditioner(Preconditioner):
    """P^{-1} = I; with this choice the step reduces to residual mixing."""

    def apply(self, v: np.ndarray) -> np.ndarray:
        return v


class DiagonalPreconditioner(Preconditioner):
    """P^{-1} = diag(d)^{-1}: componentwise division by the stored diagonal."""

    def __init__(self, d):
        d = np.asarray(d, dtype=float)
        if d.ndim != 1:
            raise ValueError("diagonal must be a 1-d vector")
        if np.any(d == 0.0):
            raise ValueError("diagonal entries must all be nonzero")
        self.d = d

    def apply(self, v: np.ndarray) -> np.ndarray:
        return v / self.d


class MatrixPreconditioner(Preconditioner):
    """Dense P^{-1} given explicitly; mainly the oracle-inverse test mode."""

    def __init__(self, inverse):
        self.inverse = np.asarray(inverse, dtype=float)
        if self.inverse.ndim != 2 or self.inverse.shape[0] != self.inverse.shape[1]:
            raise ValueError("inverse must be a square matrix")

    def apply(self, v: np.ndarray) -> np.ndarray:
        return self.inverse @ v


class CallablePreconditioner(Preconditioner):
    """Wrap a user function fn(v, k); k is the current outer-iteration index.

    Lets nonstationary preconditioners be expressed without subclassing.
    """

    def __init__(self, fn):
        self.fn = fn
        self._k = 0

    def update(self, k: int) -> None:
        self._k = k

    def apply(self, v: np.ndarray) -> np.ndarray:
        return np.asarray(self.fn(v, self._k), dtype=float)
