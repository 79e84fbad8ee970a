"""Sampled inequality checks, expansion-witness search and threshold conditions.

Sampling can refute an inequality but never establish it, so every sampled
verdict is either ``"violated"`` or ``"no-violation-found"``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterator, NamedTuple, Sequence

import numpy as np

from .mappings import MappingHandle, MultiIndex, _powers
from .sampling import PairSampler
from .spaces import as_seqvec, lp_norm

__all__ = [
    "SAMPLE_SLACK",
    "CONDITION_TOL",
    "ConditionResult",
    "WitnessReport",
    "MeanCheck",
    "check_self_map",
    "check_mean_nonexpansive",
    "mean_excess",
    "find_expansion_witness",
    "cond_gjp2",
    "cond_n3",
    "cond_gjp_n3_improved",
    "cond_gjp_general",
    "cond_remark_general",
    "cond_n3_bound_comparison",
    "remark_k_upper_bounds",
    "simplex_grid",
    "conditions_sweep",
]

SAMPLE_SLACK = 1e-9
CONDITION_TOL = 1e-12
_HALF_SQRT2 = math.sqrt(2.0) / 2.0


@dataclass(frozen=True)
class ConditionResult:
    """``verdict == (lhs <= rhs + CONDITION_TOL)`` for one condition at one multi-index."""

    condition_id: str
    alpha: tuple
    p: float
    lhs: float
    rhs: float
    extra: dict = field(default_factory=dict)

    @property
    def verdict(self) -> bool:
        return self.lhs <= self.rhs + CONDITION_TOL

    def to_dict(self) -> dict:
        d = {
            "condition_id": self.condition_id,
            "alpha": list(self.alpha),
            "p": self.p,
            "verdict": self.verdict,
            "lhs": self.lhs,
            "rhs": self.rhs,
        }
        d.update(self.extra)
        return d

    def csv_row(self, n: int) -> list:
        return [*self.alpha[:n], self.p, self.condition_id, int(self.verdict), repr(self.lhs), repr(self.rhs)]


@dataclass(frozen=True)
class WitnessReport:
    """A pair ``(x, y)`` whose expansion ratio exceeds one."""

    x: np.ndarray
    y: np.ndarray
    ratio: float
    kind: str  # "nonexpansive" or "mean"

    def to_dict(self) -> dict:
        return {"x": self.x.tolist(), "y": self.y.tolist(), "ratio": self.ratio, "kind": self.kind}


class MeanCheck(NamedTuple):
    max_slack: float
    violations: list
    trials: int
    n_violations: int

    @property
    def verdict(self) -> str:
        return "violated" if self.n_violations else "no-violation-found"


def check_self_map(T: MappingHandle, trials: int = 100_000, seed: int = 0, slack: float = SAMPLE_SLACK):
    """Count sampled ball points that ``T`` sends outside the ball (plus slack).

    Returns ``(n_outside, worst_excess)``.
    """
    dom = T.domain
    x = PairSampler(dom, seed).points(trials)
    excess = np.asarray(lp_norm(T(x) - dom.center, dom.p)) - dom.radius
    return int(np.sum(excess > slack)), float(excess.max())


def mean_excess(T: MappingHandle, alpha: MultiIndex, x, y) -> np.ndarray:
    """``sum_k a_k ||T^k x - T^k y||^p - ||x - y||^p`` for each pair (ambient norm of T)."""
    q = T.domain.p
    p = alpha.p
    px = _powers(T, alpha.n, np.asarray(x, dtype=np.float64))
    py = _powers(T, alpha.n, np.asarray(y, dtype=np.float64))
    lhs = sum(a * np.asarray(lp_norm(px[k + 1] - py[k + 1], q)) ** p
              for k, a in enumerate(alpha.weights) if a != 0)
    return lhs - np.asarray(lp_norm(px[0] - py[0], q)) ** p


def check_mean_nonexpansive(
    T: MappingHandle,
    alpha: MultiIndex,
    trials: int = 100_000,
    seed: int = 0,
    pairs: tuple | None = None,
    slack: float = SAMPLE_SLACK,
    max_report: int = 100,
) -> MeanCheck:
    """Sample the (alpha, p)-mean inequality.

    ``pairs`` overrides sampling with explicit ``(X, Y)`` arrays.  At most
    ``max_report`` violating pairs are kept; ``n_violations`` counts all.
    """
    if pairs is None:
        if trials < 1:
            raise ValueError("trials must be >= 1")
        x, y = PairSampler(T.domain, seed).pairs(trials)
    else:
        x, y = (np.asarray(a, dtype=np.float64) for a in pairs)
    ex = mean_excess(T, alpha, x, y)
    bad = np.flatnonzero(ex > slack)
    worst = bad[np.argsort(-ex[bad])][:max_report]
    violations = [(x[i].tolist(), y[i].tolist(), float(ex[i])) for i in worst]
    return MeanCheck(float(ex.max()), violations, len(ex), int(bad.size))


def _witness_objective(T, alpha):
    q = T.domain.p

    if alpha is None:
        def f(x, y):
            den = np.asarray(lp_norm(x - y, q))
            num = np.asarray(lp_norm(T(x) - T(y), q))
            return np.where(den > 0, num / np.where(den > 0, den, 1.0), 0.0)
        return f

    def f(x, y):
        den = np.asarray(lp_norm(x - y, q)) ** alpha.p
        num = mean_excess(T, alpha, x, y) + den
        return np.where(den > 0, num / np.where(den > 0, den, 1.0), 0.0)

    return f


def find_expansion_witness(
    T: MappingHandle,
    trials: int = 20_000,
    refine_steps: int = 200,
    seed: int = 0,
    alpha: MultiIndex | None = None,
) -> WitnessReport | None:
    """Random search followed by coordinatewise hill climbing on the ratio.

    Without ``alpha`` the ratio is ``||Tx - Ty|| / ||x - y||``; with it, the
    mean ratio ``sum a_k ||T^k x - T^k y||^p / ||x - y||^p``.  Returns ``None``
    when no ratio above ``1 + 1e-9`` turns up.
    """
    dom = T.domain
    sampler = PairSampler(dom, seed)
    obj = _witness_objective(T, alpha)
    x, y = sampler.pairs(trials)
    r = obj(x, y)
    i = int(np.argmax(r))
    bx, by, best = x[i].copy(), y[i].copy(), float(r[i])

    d = dom.dim
    step = 0.1 * dom.radius
    shrink = (1e-6 / 0.1) ** (1.0 / max(refine_steps, 1))
    for s in range(refine_steps):
        which, coord = divmod(s % (2 * d), d)
        cands = []
        for sign in (1.0, -1.0):
            cx, cy = bx.copy(), by.copy()
            (cx if which == 0 else cy)[coord] += sign * step
            cx, cy = dom.project(cx), dom.project(cy)
            cands.append((cx, cy))
        cx = np.stack([c[0] for c in cands])
        cy = np.stack([c[1] for c in cands])
        rc = obj(cx, cy)
        j = int(np.argmax(rc))
        if rc[j] > best and np.any(cx[j] != cy[j]):
            bx, by, best = cx[j], cy[j], float(rc[j])
        step *= shrink

    if best <= 1.0 + SAMPLE_SLACK:
        return None
    return WitnessReport(as_seqvec(bx), as_seqvec(by), best, "nonexpansive" if alpha is None else "mean")


# -- threshold conditions ---------------------------------------------------

def _need_n(alpha: MultiIndex, n: int, name: str):
    if alpha.n != n:
        raise ValueError(f"{name} needs a multi-index of length {n}, got {alpha.n}")


def cond_gjp2(alpha: MultiIndex) -> ConditionResult:
    """``a_2^p <= a_1`` (for p = 1: ``a_1 >= 1/2``)."""
    _need_n(alpha, 2, "cond_gjp2")
    a1, a2 = alpha.weights
    return ConditionResult("gjp2", alpha.weights, alpha.p, a2 ** alpha.p, a1)


def cond_n3(alpha: MultiIndex) -> ConditionResult:
    """``1 - 2 a_1^2 <= a_2`` for n = 3, p = 1.

    Also evaluates the equivalent ``a_1^2 - a_1 (a_2 + a_3) - a_3 >= 0`` and
    raises ``ArithmeticError`` if the two verdicts ever disagree.
    """
    _need_n(alpha, 3, "cond_n3")
    if alpha.p != 1.0:
        raise ValueError("cond_n3 is stated for p = 1")
    a1, a2, a3 = alpha.weights
    res = ConditionResult("n3", alpha.weights, alpha.p, 1.0 - 2.0 * a1 * a1, a2)
    dual = a1 * a1 - a1 * (a2 + a3) - a3
    dual_verdict = dual >= -CONDITION_TOL
    if dual_verdict != res.verdict:
        raise ArithmeticError(f"cond_n3 forms disagree at {alpha.weights}: {res.lhs - res.rhs} vs {dual}")
    return ConditionResult("n3", alpha.weights, alpha.p, res.lhs, res.rhs,
                           {"dual_form": dual, "dual_verdict": dual_verdict})


def cond_gjp_n3_improved(alpha: MultiIndex) -> ConditionResult:
    """``a_1 in [1/2, sqrt2/2)`` and ``(1 - a_1)/2 <= a_2`` for n = 3, p = 1.

    Encoded as a single margin: ``lhs`` is the largest violation among the
    three constraints and ``rhs = 0``.
    """
    _need_n(alpha, 3, "cond_gjp_n3_improved")
    if alpha.p != 1.0:
        raise ValueError("cond_gjp_n3_improved is stated for p = 1")
    a1, a2, _ = alpha.weights
    upper = a1 - _HALF_SQRT2 if a1 < _HALF_SQRT2 else 1.0  # strict upper end
    margin = max(0.5 - a1, upper, 0.5 * (1.0 - a1) - a2)
    return ConditionResult("gjp-n3-improved", alpha.weights, alpha.p, margin, 0.0,
                           {"alpha2_lower_bound": 0.5 * (1.0 - a1)})


def cond_gjp_general(alpha: MultiIndex) -> ConditionResult:
    """``(1 - a_1)(1 - a_1^((n-1)/p)) <= a_1^((n-1)/p) (1 - a_1^(1/p))``."""
    a1, n, p = alpha.a1, alpha.n, alpha.p
    s = a1 ** ((n - 1) / p)
    return ConditionResult("gjp-general", alpha.weights, p, (1.0 - a1) * (1.0 - s), s * (1.0 - a1 ** (1.0 / p)))


def cond_remark_general(alpha: MultiIndex, k_ests: Sequence[float]) -> ConditionResult:
    """``1 >= k(T) * sum_{m=2}^n (sum_{j=m}^n a_j) k(T^(m-2))``.

    ``k_ests[j]`` is an estimate of ``k(T^j)``; ``k_ests[0]`` must be 1 and
    ``k_ests[1]`` is ``k(T)``, so at least ``max(2, n - 1)`` entries are
    needed.  With sampled (lower-bound) estimates the verdict is only a
    necessary-condition check; with upper bounds it is sufficient.
    """
    n = alpha.n
    k = [float(v) for v in k_ests]
    if not k or k[0] != 1.0:
        raise ValueError("k_ests[0] stands for the identity and must equal 1")
    if len(k) < max(2, n - 1):
        raise ValueError(f"need k(T^j) for j = 0..{max(1, n - 2)}, got {len(k)} values")
    w = alpha.weights
    total = sum(sum(w[m - 1:]) * k[m - 2] for m in range(2, n + 1))
    return ConditionResult("remark-general", w, alpha.p, k[1] * total, 1.0, {"k_ests": k})


def remark_k_upper_bounds(alpha: MultiIndex) -> list:
    """Upper bounds on ``k(T^j)``, j = 0..max(1, n-2), valid for any (alpha, p)-nonexpansive T.

    ``a_j ||T^j x - T^j y||^p <= ||x - y||^p`` gives ``k(T^j) <= a_j^(-1/p)``
    when ``a_j > 0``; submultiplicativity gives ``k(T^j) <= k(T)^j``.
    """
    w, p = alpha.weights, alpha.p
    kT = w[0] ** (-1.0 / p)
    out = [1.0, kT]
    for j in range(2, max(2, alpha.n - 1)):
        b = kT ** j
        if w[j - 1] > 0:
            b = min(b, w[j - 1] ** (-1.0 / p))
        out.append(b)
    return out


def cond_n3_bound_comparison(alpha1: float) -> ConditionResult:
    """Compare the two lower bounds on ``a_2``: ``(1 - a_1)/2`` against ``1 - 2 a_1^2``."""
    return ConditionResult("n3-bound-comparison", (alpha1,), 1.0, 0.5 * (1.0 - alpha1), 1.0 - 2.0 * alpha1 ** 2,
                           {"strict": 0.5 * (1.0 - alpha1) < 1.0 - 2.0 * alpha1 ** 2})


def simplex_grid(n: int, step: float = 0.01) -> Iterator[tuple]:
    """Multi-indices on the simplex with spacing ``step``; end weights at least ``step``."""
    m = int(round(1.0 / step))
    if not math.isclose(m * step, 1.0):
        raise ValueError("step must divide 1")
    if n == 1:
        yield (1.0,)
        return
    for head in itertools.product(range(m + 1), repeat=n - 1):
        last = m - sum(head)
        if head[0] < 1 or last < 1:
            continue
        yield tuple(c / m for c in (*head, last))


def conditions_sweep(n: int, p: float = 1.0, step: float = 0.01) -> list:
    """Every applicable condition at every grid multi-index of length ``n``."""
    rows = []
    for w in simplex_grid(n, step):
        a = MultiIndex(w, p)
        if n == 2:
            rows.append(cond_gjp2(a))
        if n == 3 and p == 1.0:
            rows.append(cond_n3(a))
            rows.append(cond_gjp_n3_improved(a))
            if a.a1 < _HALF_SQRT2:
                c = cond_n3_bound_comparison(a.a1)
                rows.append(ConditionResult(c.condition_id, w, p, c.lhs, c.rhs, c.extra))
        rows.append(cond_gjp_general(a))
        if n >= 2:
            rows.append(cond_remark_general(a, remark_k_upper_bounds(a)))
    return rows
