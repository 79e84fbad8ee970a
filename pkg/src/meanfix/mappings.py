"""Multi-indices, self-maps of ball domains, and the maps derived from them.

Given a self-map ``T`` and a multi-index ``alpha = (a_1, ..., a_n)``:

* ``iterate(T, k)``   -- ``T^k``
* ``t_alpha(T, a)``   -- ``x -> sum_k a_k T^k x``
* ``tau_alpha(T, a)`` -- ``x -> T(sum_k a_k T^(k-1) x)`` with ``T^0 = I``
* ``tilde_t``         -- ``(x_1, ..., x_n) -> (T x_1, T^2 x_2, ..., T^n x_n)``
* ``j_map``           -- ``tilde_t`` evaluated on the diagonal of the
  weighted mean ``a_1 x_1 + ... + a_n x_n``

All evaluators act on the last axis, so batches of points go through in a
single call.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .sampling import PairSampler
from .spaces import (
    WEIGHT_TOL,
    BallDomain,
    as_seqvec,
    check_exponent,
    convex_combine,
    lp_norm,
    product_norm,
)

__all__ = [
    "MultiIndex",
    "MappingHandle",
    "LipschitzEstimate",
    "iterate",
    "t_alpha",
    "tau_alpha",
    "tilde_t",
    "JMap",
    "j_map",
    "collapse_zero_weights",
    "estimate_lipschitz",
]


@dataclass(frozen=True)
class MultiIndex:
    """Weights ``(a_1, ..., a_n)`` summing to one, with ``a_1, a_n > 0``, and exponent ``p``."""

    weights: tuple
    p: float = 1.0

    def __post_init__(self):
        w = tuple(float(a) for a in self.weights)
        if len(w) < 1:
            raise ValueError("a multi-index needs at least one weight")
        if any(not np.isfinite(a) or a < 0 for a in w):
            raise ValueError(f"weights must be finite and nonnegative, got {w}")
        if abs(sum(w) - 1.0) > WEIGHT_TOL:
            raise ValueError(f"weights must sum to 1, got sum {sum(w)!r}")
        if w[0] <= 0 or w[-1] <= 0:
            raise ValueError(f"first and last weights must be positive, got {w}")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "p", check_exponent(self.p))

    @classmethod
    def parse(cls, text: str, p: float = 1.0) -> "MultiIndex":
        """Build from a comma list such as ``"0.5,0.5"``."""
        try:
            w = [float(s) for s in text.split(",") if s.strip()]
        except ValueError as exc:
            raise ValueError(f"cannot parse weights {text!r}") from exc
        return cls(tuple(w), p)

    @property
    def n(self) -> int:
        return len(self.weights)

    @property
    def a1(self) -> float:
        return self.weights[0]

    @property
    def has_zeros(self) -> bool:
        return any(a == 0 for a in self.weights)

    def as_list(self) -> list:
        return list(self.weights)


Evaluator = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class MappingHandle:
    """An evaluatable self-map of a ball domain.

    ``evaluator`` must accept arrays of shape ``(..., dim)`` and be
    deterministic.  The self-map property is a contract checked by sampling
    (see :func:`meanfix.verification.check_self_map`), never proven.
    """

    domain: BallDomain
    evaluator: Evaluator
    label: str = "T"

    def __call__(self, x) -> np.ndarray:
        return self.evaluator(np.asarray(x, dtype=np.float64))

    def derived(self, evaluator: Evaluator, label: str) -> "MappingHandle":
        return MappingHandle(self.domain, evaluator, label)


def _power(T: MappingHandle, k: int, x: np.ndarray) -> np.ndarray:
    for _ in range(k):
        x = T(x)
    return x


def _powers(T: MappingHandle, kmax: int, x: np.ndarray) -> list:
    """``[x, Tx, ..., T^kmax x]``."""
    out = [x]
    for _ in range(kmax):
        out.append(T(out[-1]))
    return out


def iterate(T: MappingHandle, k: int) -> MappingHandle:
    """The ``k``-fold composition ``T^k``."""
    if int(k) != k or k < 1:
        raise ValueError(f"iteration count must be a positive integer, got {k!r}")
    k = int(k)
    if k == 1:
        return T
    return T.derived(lambda x: _power(T, k, x), f"{T.label}^{k}")


def t_alpha(T: MappingHandle, alpha: MultiIndex) -> MappingHandle:
    """``x -> sum_k a_k T^k x``; for n=2 this is ``(a_1 I + a_2 T) o T``."""
    w = alpha.weights

    def ev(x):
        pw = _powers(T, alpha.n, x)
        return sum(a * pw[k + 1] for k, a in enumerate(w) if a != 0)

    return T.derived(ev, f"{T.label}_alpha{list(w)}")


def tau_alpha(T: MappingHandle, alpha: MultiIndex) -> MappingHandle:
    """``x -> T(a_1 x + a_2 T x + ... + a_n T^(n-1) x)``."""
    w = alpha.weights

    def ev(x):
        pw = _powers(T, alpha.n - 1, x)
        return T(sum(a * pw[k] for k, a in enumerate(w) if a != 0))

    return T.derived(ev, f"tau_alpha{list(w)}[{T.label}]")


def _default_powers(n: int) -> tuple:
    return tuple(range(1, n + 1))


def tilde_t(T: MappingHandle, alpha: MultiIndex, pp, powers: Sequence[int] | None = None) -> np.ndarray:
    """Componentwise ``(T^{k_1} x_1, ..., T^{k_n} x_n)``, by default ``k_j = j``."""
    pp = np.asarray(pp, dtype=np.float64)
    powers = _default_powers(alpha.n) if powers is None else tuple(powers)
    if pp.ndim < 2 or pp.shape[-2] != alpha.n or len(powers) != alpha.n:
        raise ValueError(f"length mismatch: multi-index of length {alpha.n}, product point shape {pp.shape}")
    return np.stack([_power(T, k, pp[..., j, :]) for j, k in enumerate(powers)], axis=-2)


def collapse_zero_weights(alpha: MultiIndex) -> tuple:
    """Drop zero weights.

    Returns the multi-index of the nonzero weights (order preserved) and the
    1-based positions ``k_1 < ... < k_nu`` they came from; ``k_1 = 1`` and
    ``k_nu = n`` because the end weights are positive.

    >>> collapse_zero_weights(MultiIndex((0.5, 0.0, 0.5)))
    (MultiIndex(weights=(0.5, 0.5), p=1.0), (1, 3))
    """
    keep = [(k + 1, a) for k, a in enumerate(alpha.weights) if a != 0]
    return MultiIndex(tuple(a for _, a in keep), alpha.p), tuple(k for k, _ in keep)


class JMap:
    """``J(x_1, ..., x_n) = (T^{k_1} xbar, ..., T^{k_nu} xbar)`` on ``C^nu``.

    Zero weights are collapsed on construction, so the product norm carried
    here is always a genuine norm.  ``J`` is nonexpansive in that norm
    whenever ``T`` is (alpha, p)-nonexpansive.
    """

    def __init__(self, T: MappingHandle, alpha: MultiIndex):
        self.T = T
        self.original = alpha
        self.alpha, self.powers = collapse_zero_weights(alpha)
        self.ambient_p = T.domain.p

    @property
    def n(self) -> int:
        return self.alpha.n

    def mean(self, pp) -> np.ndarray:
        return convex_combine(self.alpha.weights, pp)

    def __call__(self, pp) -> np.ndarray:
        pp = np.asarray(pp, dtype=np.float64)
        if pp.ndim < 2 or pp.shape[-2] != self.n:
            raise ValueError(f"length mismatch: J acts on {self.n}-tuples, got shape {pp.shape}")
        xbar = self.mean(pp)
        pw = _powers(self.T, self.powers[-1], xbar)
        return np.stack([pw[k] for k in self.powers], axis=-2)

    def norm(self, pp):
        return product_norm(pp, self.alpha.weights, self.alpha.p, self.ambient_p)

    def diagonal_point(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        return np.repeat(x[..., None, :], self.n, axis=-2)


def j_map(T: MappingHandle, alpha: MultiIndex) -> JMap:
    return JMap(T, alpha)


@dataclass(frozen=True)
class LipschitzEstimate:
    """Largest observed ratio ``||Tx - Ty|| / ||x - y||`` (a lower bound on k(T))."""

    k_hat: float
    pairs_sampled: int
    argmax_pair: tuple

    def to_dict(self) -> dict:
        x, y = self.argmax_pair
        return {
            "k_hat": self.k_hat,
            "pairs_sampled": self.pairs_sampled,
            "argmax_x": np.asarray(x).tolist(),
            "argmax_y": np.asarray(y).tolist(),
        }


def _ratios(T: MappingHandle, x: np.ndarray, y: np.ndarray):
    p = T.domain.p
    den = np.asarray(lp_norm(x - y, p))
    num = np.asarray(lp_norm(T(x) - T(y), p))
    ok = den > 0
    r = np.zeros_like(den)
    r[ok] = num[ok] / den[ok]
    return r, ok


def estimate_lipschitz(T: MappingHandle, sampler: PairSampler, trials: int, batch: int = 20000) -> LipschitzEstimate:
    """Sample ``trials`` distinct pairs and keep the worst expansion ratio.

    Coincident pairs are skipped and resampled; a ``ValueError`` is raised only
    when no valid pair can be drawn at all.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    best, best_pair, done = -1.0, None, 0
    attempts = 0
    while done < trials:
        m = min(batch, trials - done)
        x, y = sampler.pairs(m)
        r, ok = _ratios(T, x, y)
        attempts += m
        if not ok.any():
            if attempts >= 10 * trials:
                raise ValueError("sampler produced only coincident pairs")
            continue
        r_ok = np.where(ok, r, -np.inf)
        i = int(np.argmax(r_ok))
        if r_ok[i] > best:
            best, best_pair = float(r_ok[i]), (as_seqvec(x[i]), as_seqvec(y[i]))
        done += int(ok.sum())
    return LipschitzEstimate(best, done, best_pair)
