"""Seeded point and pair samplers for ball domains.

Three strategies are mixed (default 40/40/20):

``uniform``
    uniform in the lp ball (generalised-Gaussian construction, valid for any p);
``boundary``
    uniform direction, pushed out to the sphere of the ball;
``sparse``
    at most three nonzero coordinates, uniform in the ball of that face.

Pairs are formed either from two independent draws or as a local pair
``y = x + delta`` with a sparse perturbation of log-uniform size.  The local
pairs matter: the expansion of the example maps lives in single coordinates,
which independent draws almost never isolate.

A sampler owns mutable RNG state and should not be shared between threads.
"""

from __future__ import annotations

import numpy as np

from .spaces import BallDomain, lp_norm

__all__ = ["PairSampler", "STRATEGIES"]

STRATEGIES = ("uniform", "boundary", "sparse")
_MAX_SPARSE = 3


class PairSampler:
    """Draw points and distinct pairs from a :class:`BallDomain`.

    Parameters
    ----------
    domain : BallDomain
    seed : int
    mix : tuple of 3 floats
        Probabilities of the uniform / boundary / sparse strategies.
    local_fraction : float
        Share of pairs built as a local perturbation of the first point.
    """

    def __init__(self, domain: BallDomain, seed: int = 0, mix=(0.4, 0.4, 0.2), local_fraction=0.5):
        self.domain = domain
        self.seed = int(seed)
        mix = np.asarray(mix, dtype=np.float64)
        if mix.shape != (3,) or np.any(mix < 0) or not np.isclose(mix.sum(), 1.0):
            raise ValueError(f"mix must be 3 nonnegative probabilities, got {mix}")
        self.mix = mix
        self.local_fraction = float(local_fraction)
        self.rng = np.random.default_rng(self.seed)

    # unit-ball draws centred at the origin
    def _uniform(self, m: int, d: int) -> np.ndarray:
        p = self.domain.p
        g = self.rng.gamma(1.0 / p, 1.0, size=(m, d)) ** (1.0 / p)
        g *= self.rng.choice((-1.0, 1.0), size=(m, d))
        w = self.rng.exponential(size=(m, 1))
        return g / (np.sum(np.abs(g) ** p, axis=1, keepdims=True) + w) ** (1.0 / p)

    def _boundary(self, m: int, d: int) -> np.ndarray:
        g = self._uniform(m, d)
        r = lp_norm(g, self.domain.p)
        r = np.where(r > 0, r, 1.0)
        return g / r[:, None]

    def _sparse(self, m: int, d: int) -> np.ndarray:
        out = np.zeros((m, d))
        k = self.rng.integers(1, min(_MAX_SPARSE, d) + 1, size=m)
        for size in np.unique(k):
            rows = np.flatnonzero(k == size)
            vals = self._uniform(rows.size, int(size))
            # random supports without replacement, one per row
            support = np.argsort(self.rng.random((rows.size, d)), axis=1)[:, :size]
            out[rows[:, None], support] = vals
        return out

    def _draw_unit(self, m: int) -> np.ndarray:
        d = self.domain.dim
        which = self.rng.choice(3, size=m, p=self.mix)
        out = np.empty((m, d))
        for i, fn in enumerate((self._uniform, self._boundary, self._sparse)):
            rows = np.flatnonzero(which == i)
            if rows.size:
                out[rows] = fn(rows.size, d)
        return out

    def points(self, m: int) -> np.ndarray:
        """``m`` points of the ball, shape ``(m, dim)``."""
        dom = self.domain
        return dom.center + dom.radius * self._draw_unit(m)

    def _perturb(self, x: np.ndarray) -> np.ndarray:
        m, d = x.shape
        dom = self.domain
        scale = dom.radius * 10.0 ** self.rng.uniform(-4.0, 0.0, size=(m, 1))
        delta = self._sparse(m, d)
        y = x + scale * delta
        return dom.project(y)

    def pairs(self, m: int) -> tuple[np.ndarray, np.ndarray]:
        """``m`` pairs of distinct ball points, as two ``(m, dim)`` arrays."""
        x = self.points(m)
        y = np.empty_like(x)
        local = self.rng.random(m) < self.local_fraction
        if local.any():
            y[local] = self._perturb(x[local])
        if (~local).any():
            y[~local] = self.points(int((~local).sum()))
        same = np.all(x == y, axis=1)
        for _ in range(100):
            if not same.any():
                break
            y[same] = self.points(int(same.sum()))
            same = np.all(x == y, axis=1)
        return x, y

    def product_points(self, m: int, n: int) -> np.ndarray:
        """``m`` product points of ``C^n``, shape ``(m, n, dim)``."""
        return self.points(m * n).reshape(m, n, self.domain.dim)
