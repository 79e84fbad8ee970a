"""Concrete maps: the l1 / l2 shift examples, the discontinuous f, and baselines.

Registry ids: ``ex1-l1``, ``ex2-l2``, ``disc-f``, ``affine``, ``identity``
(plus ``shift-average``).  The two shift examples act on the first ``d``
coordinates of a sequence; since they shift left, finitely supported inputs
give outputs whose last coordinate is zero, so the truncation is exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .mappings import MappingHandle, MultiIndex
from .spaces import BallDomain, in_ball, lp_norm

__all__ = [
    "DomainError",
    "SQRT2",
    "T0",
    "tau_scalar",
    "sigma_scalar",
    "example1_T",
    "example2_S",
    "discontinuous_f",
    "example1",
    "example2",
    "disc_f",
    "baseline_maps",
    "Example",
    "REGISTRY_IDS",
    "get_example",
]

SQRT2 = math.sqrt(2.0)
#: inner breakpoint of sigma
T0 = (SQRT2 - 1.0) / SQRT2
_DOMAIN_SLACK = 1e-9


class DomainError(ValueError):
    """A point was passed outside the domain of a map."""


def _check_interval(t, lo, hi, name):
    t = np.asarray(t, dtype=np.float64)
    if np.isnan(t).any() or np.any(t < lo - _DOMAIN_SLACK) or np.any(t > hi + _DOMAIN_SLACK):
        raise DomainError(f"{name} is defined on [{lo}, {hi}]")
    return t


def _odd_piecewise(t, knot, slope, shift):
    # zero on the closed middle interval; both formulas vanish at +-knot
    return np.where(t >= knot, slope * t - shift, np.where(t <= -knot, slope * t + shift, 0.0))


def tau_scalar(t):
    """``2t + 1`` on ``[-1, -1/2]``, ``0`` on ``[-1/2, 1/2]``, ``2t - 1`` on ``[1/2, 1]``."""
    t = _check_interval(t, -1.0, 1.0, "tau")
    out = _odd_piecewise(t, 0.5, 2.0, 1.0)
    return float(out) if out.ndim == 0 else out


def sigma_scalar(t):
    """Like :func:`tau_scalar` with slope ``sqrt 2`` and breakpoints ``+-T0``."""
    t = _check_interval(t, -1.0, 1.0, "sigma")
    out = _odd_piecewise(t, T0, SQRT2, SQRT2 - 1.0)
    return float(out) if out.ndim == 0 else out


def _shift_map(x, first, second_scale):
    x = np.asarray(x, dtype=np.float64)
    out = np.zeros_like(x)
    d = x.shape[-1]
    if d >= 2:
        out[..., 0] = first(x[..., 1])
    if d >= 3:
        out[..., 1] = second_scale * x[..., 2]
    if d >= 4:
        out[..., 2:-1] = x[..., 3:]
    return out


def _check_ball(x, dom, name):
    if not np.all(in_ball(x, dom, _DOMAIN_SLACK)):
        raise DomainError(f"{name}: input outside the unit l{dom.p:g} ball")


def example1_T(x):
    """``T(x_1, x_2, x_3, ...) = (tau(x_2), 2/3 x_3, x_4, ...)`` on the unit l1 ball."""
    x = np.asarray(x, dtype=np.float64)
    _check_ball(x, BallDomain(x.shape[-1], 1.0), "example1_T")
    return _shift_map(x, tau_scalar, 2.0 / 3.0)


def example2_S(x):
    """``S(x_1, x_2, x_3, ...) = (sigma(x_2), sqrt(2/3) x_3, x_4, ...)`` on the unit l2 ball."""
    x = np.asarray(x, dtype=np.float64)
    _check_ball(x, BallDomain(x.shape[-1], 2.0), "example2_S")
    return _shift_map(x, sigma_scalar, math.sqrt(2.0 / 3.0))


def discontinuous_f(x):
    """1 at exactly 0, else 0, on ``[0, 1]``."""
    x = _check_interval(x, 0.0, 1.0, "f")
    out = np.where(x == 0.0, 1.0, 0.0)
    return float(out) if out.ndim == 0 else out


def example1(dim: int = 16) -> MappingHandle:
    return MappingHandle(BallDomain(dim, 1.0), example1_T, "ex1-l1")


def example2(dim: int = 16) -> MappingHandle:
    return MappingHandle(BallDomain(dim, 2.0), example2_S, "ex2-l2")


def disc_f() -> MappingHandle:
    """The discontinuous f as a map of the 1-d ball ``[0, 1]``."""
    return MappingHandle(BallDomain(1, 1.0, radius=0.5, center=[0.5]), discontinuous_f, "disc-f")


def baseline_maps(kind: str, dim: int = 16, p: float = 1.0, offset=None) -> MappingHandle:
    """Genuinely nonexpansive control maps of the unit lp ball.

    ``affine-contraction``
        ``x -> x/2 + c``; needs ``||c||_p <= 1/2`` to keep the ball invariant.
    ``coordinate-shift-average``
        ``x -> (x + Lx)/2`` with ``L`` the left shift.
    ``identity``
    """
    dom = BallDomain(dim, p)
    if kind == "affine-contraction":
        c = np.zeros(dim) if offset is None else np.asarray(offset, dtype=np.float64)
        if c.shape != (dim,):
            raise ValueError(f"offset must have dim {dim}")
        if lp_norm(c, p) > 0.5 * dom.radius:
            raise ValueError("offset too large: x/2 + c would leave the ball")
        c = c.copy()
        c.flags.writeable = False
        return MappingHandle(dom, lambda x: 0.5 * x + c, "affine")
    if kind == "coordinate-shift-average":

        def ev(x):
            s = np.zeros_like(x)
            s[..., :-1] = x[..., 1:]
            return 0.5 * (x + s)

        return MappingHandle(dom, ev, "shift-average")
    if kind == "identity":
        return MappingHandle(dom, lambda x: np.array(x, dtype=np.float64), "identity")
    raise ValueError(f"unknown baseline kind {kind!r}")


@dataclass(frozen=True)
class Example:
    """A registry entry: the map plus its natural multi-index."""

    id: str
    T: MappingHandle
    alpha: MultiIndex
    affine: bool = False
    nonexpansive: bool = False


REGISTRY_IDS = ("ex1-l1", "ex2-l2", "disc-f", "affine", "identity", "shift-average")

#: offset used by the registered affine contraction (fixed point 0.4 e_1)
AFFINE_OFFSET_SCALE = 0.2


def get_example(example_id: str, dim: int = 16) -> Example:
    """Look a map up by string id."""
    half = MultiIndex((0.5, 0.5), 1.0)
    if example_id == "ex1-l1":
        return Example(example_id, example1(dim), half)
    if example_id == "ex2-l2":
        return Example(example_id, example2(dim), MultiIndex((0.5, 0.5), 2.0))
    if example_id == "disc-f":
        return Example(example_id, disc_f(), half)
    if example_id == "affine":
        c = np.zeros(dim)
        c[0] = AFFINE_OFFSET_SCALE
        return Example(example_id, baseline_maps("affine-contraction", dim, offset=c),
                       MultiIndex((0.6, 0.4), 1.0), affine=True, nonexpansive=True)
    if example_id == "identity":
        return Example(example_id, baseline_maps("identity", dim), half, affine=True, nonexpansive=True)
    if example_id == "shift-average":
        return Example(example_id, baseline_maps("coordinate-shift-average", dim), half,
                       affine=True, nonexpansive=True)
    raise KeyError(f"unknown example id {example_id!r}; choose from {', '.join(REGISTRY_IDS)}")
