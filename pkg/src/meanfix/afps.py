"""Approximate fixed point sequences for ``J`` and the residuals derived from them.

Two schemes drive ``||Jz - z|| -> 0`` on the product of balls:

* Krasnoselskii-Mann, ``z <- (1 - lam) z + lam J z``.  For nonexpansive ``J``
  its residual is nonincreasing in any norm, so an increase is a sign that
  ``J`` is not nonexpansive for the chosen multi-index.
* anchored Picard iteration on ``z -> (1 - eps) J z + eps a``, a
  ``(1 - eps)``-contraction whose fixed point has residual at most
  ``eps * diam``.

:func:`residual_family` then reads off, at a terminal iterate, every residual
that the existence argument pushes to zero.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from .mappings import JMap, MappingHandle, MultiIndex, collapse_zero_weights, t_alpha, tau_alpha
from .spaces import convex_combine, lp_norm

__all__ = [
    "MONOTONE_SLACK",
    "DivergenceError",
    "IterationTrace",
    "km_iterate",
    "anchored_iterate",
    "anchored_afps",
    "ResidualReport",
    "residual_family",
    "GJPChainResult",
    "gjp_chain_check",
    "product_diameter",
]

log = logging.getLogger(__name__)

MONOTONE_SLACK = 1e-12


class DivergenceError(ArithmeticError):
    """An iteration produced non-finite values or failed to settle."""


@dataclass
class IterationTrace:
    """Per-step primary residuals of one run plus its terminal point."""

    scheme: str
    param: float
    residuals: np.ndarray
    final: np.ndarray
    converged: bool
    tol: float
    max_iter: int
    seed: int | None = None
    wall_clock: float = 0.0
    increases: list = field(default_factory=list)
    snapshots: dict = field(default_factory=dict)

    @property
    def steps(self) -> int:
        return len(self.residuals) - 1

    @property
    def final_residual(self) -> float:
        return float(self.residuals[-1])

    @property
    def monotone(self) -> bool:
        return not self.increases

    def summary(self) -> dict:
        return {
            "scheme": self.scheme,
            "param": self.param,
            "steps": self.steps,
            "final_residual": self.final_residual,
            "converged": self.converged,
            "tol": self.tol,
            "max_iter": self.max_iter,
            "seed": self.seed,
            "monotone": self.monotone,
            "n_increases": len(self.increases),
        }


def _norm_of(F, norm):
    if norm is not None:
        return norm
    if isinstance(F, JMap):
        return F.norm
    raise TypeError("pass norm= for maps without a product norm")


def _finite(z, step):
    if not np.all(np.isfinite(z)):
        raise DivergenceError(f"non-finite iterate at step {step}")


def km_iterate(
    F: Callable,
    z0,
    lam: float = 0.5,
    max_iter: int = 100_000,
    tol: float = 1e-3,
    norm: Callable | None = None,
    seed: int | None = None,
    snapshot_every: int | None = None,
) -> IterationTrace:
    """Krasnoselskii-Mann iteration until ``||F z - z|| <= tol`` or ``max_iter``.

    Residual increases larger than ``MONOTONE_SLACK`` are recorded in
    ``trace.increases`` rather than raised.
    """
    if not 0.0 < lam < 1.0:
        raise ValueError(f"lambda must lie in (0, 1), got {lam}")
    norm = _norm_of(F, norm)
    t0 = time.perf_counter()
    z = np.array(z0, dtype=np.float64)
    Fz = F(z)
    _finite(Fz, 0)
    res = [float(norm(Fz - z))]
    snaps = {0: z.copy()} if snapshot_every else {}
    increases = []
    k = 0
    while res[-1] > tol and k < max_iter:
        k += 1
        z = (1.0 - lam) * z + lam * Fz
        Fz = F(z)
        _finite(Fz, k)
        r = float(norm(Fz - z))
        if r > res[-1] + MONOTONE_SLACK:
            increases.append((k, r - res[-1]))
        res.append(r)
        if snapshot_every and k % snapshot_every == 0:
            snaps[k] = z.copy()
    if snapshot_every:
        snaps[k] = z.copy()
    if increases:
        log.warning("KM residual increased at %d steps (first at %d)", len(increases), increases[0][0])
    return IterationTrace(
        "km", lam, np.asarray(res), z, res[-1] <= tol, tol, max_iter,
        seed, time.perf_counter() - t0, increases, snaps,
    )


def product_diameter(F: JMap) -> float:
    """Diameter of ``C^n`` under the product norm: ``2 * radius``."""
    return F.T.domain.diameter


def anchored_iterate(
    F: Callable,
    anchor,
    eps: float,
    inner_tol: float = 1e-10,
    max_inner: int = 10_000_000,
    norm: Callable | None = None,
    seed: int | None = None,
) -> IterationTrace:
    """Picard iteration for ``z -> (1 - eps) F z + eps * anchor`` started at the anchor.

    Stops when successive iterates differ by less than ``inner_tol``.  The
    trace records ``||F z_k - z_k||`` at every step.
    """
    if not 0.0 < eps < 1.0:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    norm = _norm_of(F, norm)
    t0 = time.perf_counter()
    a = np.array(anchor, dtype=np.float64)
    z = a.copy()
    res = []
    for k in range(max_inner):
        Fz = F(z)
        _finite(Fz, k)
        res.append(float(norm(Fz - z)))
        z_new = (1.0 - eps) * Fz + eps * a
        if norm(z_new - z) < inner_tol:
            z = z_new
            break
        z = z_new
    else:
        raise DivergenceError(f"anchored iteration did not settle in {max_inner} steps; is F expansive?")
    res.append(float(norm(F(z) - z)))
    return IterationTrace("anchored", eps, np.asarray(res), z, True, inner_tol, max_inner,
                          seed, time.perf_counter() - t0)


def anchored_afps(F: Callable, anchor, eps: float, inner_tol: float = 1e-10, **kw) -> tuple:
    """Return ``(z*, ||F z* - z*||)`` for the anchored contraction."""
    tr = anchored_iterate(F, anchor, eps, inner_tol, **kw)
    return tr.final, tr.final_residual


@dataclass(frozen=True)
class ResidualReport:
    """Residuals at one product point ``(x_1, ..., x_nu)`` with ``x = x_1``.

    ``r[j]``        ``||T^{k_j} xbar - x_j||``
    ``r_chain[j]``  ``||T^{k_{j+1} - 1} x - x_{j+1}||``
    ``r_tau``       ``||tau_alpha x - x||``
    ``r_t_alpha``   ``||T_alpha z - z||`` with ``z = sum a_j T^{k_j - 1} x``
    ``r_T``         ``||T x - x||``
    """

    r: tuple
    r_chain: tuple
    r_tau: float
    r_t_alpha: float
    r_T: float
    powers: tuple
    primary: float | None = None

    def entries(self) -> dict:
        out = {f"r{j + 1}": v for j, v in enumerate(self.r)}
        out.update({f"r_chain{j + 1}": v for j, v in enumerate(self.r_chain)})
        out.update(r_tau=self.r_tau, r_tAlpha=self.r_t_alpha, r_T=self.r_T)
        return out

    def chain_consistent(self, k_T: float, slack: float = 1e-9) -> bool:
        """``r_chain[j] <= k(T)^{k_{j+1}-1} r_1 + r_{j+1}`` for every j."""
        return all(
            rc <= k_T ** (self.powers[j + 1] - 1) * self.r[0] + self.r[j + 1] + slack
            for j, rc in enumerate(self.r_chain)
        )

    def to_dict(self) -> dict:
        d = dict(self.entries())
        d["powers"] = list(self.powers)
        d["primary"] = self.primary
        return d


def residual_family(T: MappingHandle, alpha: MultiIndex, pp, primary: float | None = None) -> ResidualReport:
    """All residuals at ``pp``; zero weights of ``alpha`` are collapsed first."""
    ca, powers = collapse_zero_weights(alpha)
    pp = np.asarray(pp, dtype=np.float64)
    if pp.ndim != 2 or pp.shape[0] != ca.n:
        raise ValueError(f"length mismatch: expected {ca.n} parts, got shape {pp.shape}")
    p = T.domain.p
    w = ca.weights
    xbar = convex_combine(w, pp)
    pw_bar = [xbar]
    for _ in range(powers[-1]):
        pw_bar.append(T(pw_bar[-1]))
    r = tuple(float(lp_norm(pw_bar[k] - pp[j], p)) for j, k in enumerate(powers))

    x = pp[0]
    pw_x = [x]
    for _ in range(powers[-1]):
        pw_x.append(T(pw_x[-1]))
    r_chain = tuple(
        float(lp_norm(pw_x[powers[j + 1] - 1] - pp[j + 1], p)) for j in range(ca.n - 1)
    )
    z = sum(a * pw_x[k - 1] for a, k in zip(w, powers))
    r_tau = float(lp_norm(tau_alpha(T, alpha)(x) - x, p))
    r_t_alpha = float(lp_norm(t_alpha(T, alpha)(z) - z, p))
    r_T = float(lp_norm(pw_x[1] - x, p))
    return ResidualReport(r, r_chain, r_tau, r_t_alpha, r_T, powers, primary)


class GJPChainResult(NamedTuple):
    bound: float
    observed: float
    passed: bool


def gjp_chain_check(T: MappingHandle, alpha: MultiIndex, x, tau_residual: float) -> GJPChainResult:
    """Bound ``||Tx - x||`` by ``||tau_alpha x - x|| / (1 - a_2 a_1^(-1/p))``.

    Valid when ``T`` is (alpha, p)-nonexpansive with ``a_2^p < a_1``, so that
    ``k(T) <= a_1^(-1/p)``.  The equality case makes the denominator zero and
    is refused.
    """
    if alpha.n != 2:
        raise ValueError("the chain check needs a multi-index of length 2")
    a1, a2 = alpha.weights
    p = alpha.p
    if a2 ** p >= a1:
        raise ValueError(f"refusing: a_2^p = {a2 ** p:g} >= a_1 = {a1:g}, the bound degenerates")
    c = 1.0 - a2 * a1 ** (-1.0 / p)
    bound = float(tau_residual) / c
    x = np.asarray(x, dtype=np.float64)
    observed = float(lp_norm(T(x) - x, T.domain.p))
    return GJPChainResult(bound, observed, observed <= bound * (1.0 + 1e-6))
