"""Finite-dimensional complex value spaces with p-norms."""

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInput, InvalidArgument


@dataclass(frozen=True)
class ValueSpace:
    """The space C^d equipped with the p-norm of order ``r``.

    Parameters
    ----------
    dim : int
        Number of complex components.
    r : float
        Order of the norm, ``1 <= r <= inf``. ``r = 2`` is the euclidean norm.
    """

    dim: int = 1
    r: float = 2.0

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 1:
            raise InvalidArgument(f"dim must be a positive integer, got {self.dim}")
        if not (self.r >= 1):
            raise InvalidArgument(f"norm order must satisfy r >= 1, got {self.r}")
        object.__setattr__(self, "dim", int(self.dim))
        object.__setattr__(self, "r", float(self.r))

    @property
    def norm_kind(self):
        return "euclidean" if self.r == 2 else f"p_norm({self.r:g})"

    def norms(self, values):
        """Pointwise norms of an array whose last axis holds the components."""
        values = np.asarray(values)
        if values.shape[-1] != self.dim:
            raise InvalidArgument(
                f"expected {self.dim} components, got {values.shape[-1]}")
        a = np.abs(values)
        if self.dim == 1:
            return a[..., 0]
        if self.r == 2:
            return np.sqrt(np.sum(a * a, axis=-1))
        if self.r == 1:
            return np.sum(a, axis=-1)
        if np.isinf(self.r):
            return np.max(a, axis=-1)
        # scale by the largest modulus to avoid overflow in the power sum
        top = np.max(a, axis=-1, keepdims=True)
        safe = np.where(top > 0, top, 1.0)
        return top[..., 0] * np.sum((a / safe) ** self.r, axis=-1) ** (1.0 / self.r)

    def to_dict(self):
        return {"dim": self.dim, "r": self.r, "norm_kind": self.norm_kind}


def as_evector(v, space):
    """Return ``v`` as a complex component vector conforming to ``space``."""
    v = np.asarray(v, dtype=complex)
    if v.ndim != 1 or v.shape[0] != space.dim:
        raise InvalidArgument(
            f"vector of shape {v.shape} does not conform to dimension {space.dim}")
    return v


def e_norm(v, space: ValueSpace) -> float:
    """Norm of a single vector in ``space``."""
    return float(space.norms(as_evector(v, space)))


def e_unit(v, space: ValueSpace):
    """Normalize ``v`` to unit length; raises for the zero vector."""
    v = as_evector(v, space)
    nrm = e_norm(v, space)
    if nrm == 0:
        raise DegenerateInput("cannot normalize the zero vector")
    return v / nrm
