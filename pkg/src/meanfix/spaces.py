"""Finite-dimensional sequence-space points, lp norms, balls and product norms.

Points of l^p are represented as finitely supported vectors of a fixed
dimension ``d`` (plain read-only ``float64`` numpy arrays).  For the shift
type maps in :mod:`meanfix.examples` this truncation is exact: if
``x_j = 0`` for ``j > d`` then every coordinate of ``Tx`` beyond ``d - 1``
vanishes as well, so nothing is lost by never storing it.

A product point ``(x_1, ..., x_n)`` is an ``(n, d)`` array.  Every function
here also accepts leading batch axes, e.g. ``(m, d)`` for ``m`` points or
``(m, n, d)`` for ``m`` product points.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

__all__ = [
    "WEIGHT_TOL",
    "BallDomain",
    "as_seqvec",
    "as_product_point",
    "check_exponent",
    "lp_norm",
    "convex_combine",
    "product_norm",
    "in_ball",
    "diagonal",
    "basis_vector",
]

#: absolute tolerance on "weights sum to one" and exact-norm comparisons
WEIGHT_TOL = 1e-12


def _freeze(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


def check_exponent(p: float) -> float:
    """Validate an lp exponent, which must be finite and at least 1."""
    p = float(p)
    if not np.isfinite(p) or p < 1.0:
        raise ValueError(f"exponent p must lie in [1, inf), got {p!r}")
    return p


def as_seqvec(coords) -> np.ndarray:
    """Return ``coords`` as an immutable 1-D float64 vector.

    Raises
    ------
    ValueError
        If the input is not one-dimensional, is empty, or holds NaN/inf.
    """
    v = np.array(coords, dtype=np.float64)
    if v.ndim != 1 or v.size == 0:
        raise ValueError(f"a point must be a non-empty 1-D vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError("point has non-finite coordinates")
    return _freeze(v)


def as_product_point(parts) -> np.ndarray:
    """Stack ``n`` equal-length points into an immutable ``(n, d)`` array."""
    pp = np.array(parts, dtype=np.float64)
    if pp.ndim != 2 or pp.shape[0] < 1 or pp.shape[1] < 1:
        raise ValueError(f"a product point needs n >= 1 parts of equal dim, got shape {pp.shape}")
    if not np.all(np.isfinite(pp)):
        raise ValueError("product point has non-finite coordinates")
    return _freeze(pp)


def basis_vector(k: int, dim: int) -> np.ndarray:
    """The unit vector ``e_k`` (1-based, as in sequence notation)."""
    if not 1 <= k <= dim:
        raise ValueError(f"basis index {k} outside 1..{dim}")
    e = np.zeros(dim)
    e[k - 1] = 1.0
    return _freeze(e)


def diagonal(x, n: int) -> np.ndarray:
    """The diagonal product point ``(x, ..., x)`` with ``n`` copies."""
    x = np.asarray(x, dtype=np.float64)
    return np.repeat(x[..., None, :], n, axis=-2)


def lp_norm(v, p: float = 2.0) -> np.ndarray | float:
    """``(sum |v_i|^p)^(1/p)`` along the last axis."""
    p = check_exponent(p)
    v = np.asarray(v, dtype=np.float64)
    if np.isnan(v).any():
        raise ValueError("lp_norm of a vector containing NaN")
    a = np.abs(v)
    if p == 1.0:
        out = a.sum(axis=-1)
    elif p == 2.0:
        out = np.sqrt(np.einsum("...i,...i->...", a, a))
    else:
        # scale by the max entry so a**p neither under- nor overflows
        m = a.max(axis=-1, keepdims=True)
        safe = np.where(m > 0, m, 1.0)
        out = safe[..., 0] * ((a / safe) ** p).sum(axis=-1) ** (1.0 / p)
    return float(out) if np.ndim(out) == 0 else out


def convex_combine(weights: Sequence[float], points) -> np.ndarray:
    """Weighted sum ``sum_k w_k x_k`` of points stacked on axis ``-2``.

    ``points`` has shape ``(..., n, d)``; ``weights`` has length ``n``, is
    nonnegative, and sums to one within :data:`WEIGHT_TOL`.
    """
    w = np.asarray(weights, dtype=np.float64)
    pts = np.asarray(points, dtype=np.float64)
    if w.ndim != 1 or pts.ndim < 2 or pts.shape[-2] != w.size:
        raise ValueError(
            f"dimension mismatch: {w.size} weights for points of shape {pts.shape}"
        )
    if np.any(w < 0) or abs(w.sum() - 1.0) > WEIGHT_TOL:
        raise ValueError(f"weights must be nonnegative and sum to 1, got {w.tolist()}")
    return np.einsum("k,...kd->...d", w, pts)


def product_norm(pp, weights: Sequence[float], p: float = 1.0, ambient_p: float | None = None):
    """The weighted product norm ``(sum_k w_k ||x_k||^p)^(1/p)``.

    Parameters
    ----------
    pp : array_like, shape (..., n, d)
        Product point(s).
    weights : sequence of float
        The ``n`` weights; usually ``MultiIndex.weights``.
    p : float
        Outer exponent (the multi-index exponent).
    ambient_p : float, optional
        Exponent of the norm on each factor.  Defaults to ``p``.

    For a diagonal tuple ``(x, ..., x)`` the result equals
    ``lp_norm(x, ambient_p)`` since the weights sum to one.
    """
    p = check_exponent(p)
    ambient_p = p if ambient_p is None else check_exponent(ambient_p)
    w = np.asarray(weights, dtype=np.float64)
    pp = np.asarray(pp, dtype=np.float64)
    if pp.ndim < 2 or pp.shape[-2] != w.size:
        raise ValueError(f"length mismatch: {w.size} weights, product point shape {pp.shape}")
    norms = lp_norm(pp, ambient_p)
    if p == 1.0:
        return _scalar(np.einsum("k,...k->...", w, norms))
    m = np.max(norms, axis=-1, keepdims=True)
    safe = np.where(m > 0, m, 1.0)
    out = safe[..., 0] * np.einsum("k,...k->...", w, (norms / safe) ** p) ** (1.0 / p)
    return _scalar(out)


def _scalar(out):
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class BallDomain:
    """Closed ball ``{x : ||x - center||_p <= radius}`` in ``R^dim``."""

    dim: int
    p: float = 1.0
    radius: float = 1.0
    center: np.ndarray = field(default=None, compare=False)  # type: ignore[assignment]

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 1:
            raise ValueError(f"dim must be a positive integer, got {self.dim!r}")
        object.__setattr__(self, "dim", int(self.dim))
        object.__setattr__(self, "p", check_exponent(self.p))
        if not (np.isfinite(self.radius) and self.radius > 0):
            raise ValueError(f"radius must be positive, got {self.radius!r}")
        object.__setattr__(self, "radius", float(self.radius))
        c = np.zeros(self.dim) if self.center is None else as_seqvec(self.center)
        if c.size != self.dim:
            raise ValueError(f"center has dim {c.size}, expected {self.dim}")
        object.__setattr__(self, "center", _freeze(np.array(c)))

    @property
    def diameter(self) -> float:
        return 2.0 * self.radius

    def contains(self, v, slack: float = 0.0):
        return in_ball(v, self, slack)

    def project(self, v) -> np.ndarray:
        """Radially pull points outside the ball back onto its boundary."""
        v = np.asarray(v, dtype=np.float64)
        off = v - self.center
        r = np.asarray(lp_norm(off, self.p))
        scale = np.where(r > self.radius, self.radius / np.where(r > 0, r, 1.0), 1.0)
        return self.center + off * scale[..., None]

    def describe(self) -> dict:
        return {
            "dim": self.dim,
            "p": self.p,
            "radius": self.radius,
            "center": self.center.tolist(),
        }


def in_ball(v, dom: BallDomain, slack: float = 0.0):
    """True iff ``||v - center||_p <= radius + slack`` (vectorised over rows)."""
    v = np.asarray(v, dtype=np.float64)
    if v.shape[-1] != dom.dim:
        raise ValueError(f"point dim {v.shape[-1]} does not match domain dim {dom.dim}")
    out = np.asarray(lp_norm(v - dom.center, dom.p)) <= dom.radius + slack
    return bool(out) if out.ndim == 0 else out
