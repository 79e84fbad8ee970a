"""Command-line driver.

Subcommands::

    meanfix examples verify --example ex1-l1
    meanfix afps run --example ex1-l1 --alpha 0.5,0.5 --p 1 --dim 16
    meanfix conditions sweep --n 3 --p 1
    meanfix lipschitz --example ex2-l2
    meanfix witness --example ex1-l1

Exit codes: 0 all checks passed, 1 a mathematical check failed,
2 configuration or IO error.  ``MEANFIX_SEED`` sets the default seed.
"""

from __future__ import annotations

import argparse
import logging
import math
import os
import sys
from dataclasses import asdict, dataclass

import numpy as np

from . import report
from .afps import (
    DivergenceError,
    anchored_iterate,
    gjp_chain_check,
    km_iterate,
    product_diameter,
    residual_family,
)
from .examples import REGISTRY_IDS, T0, get_example, sigma_scalar, tau_scalar
from .mappings import MultiIndex, estimate_lipschitz, iterate, j_map, t_alpha, tau_alpha
from .sampling import PairSampler
from .spaces import basis_vector, lp_norm
from .verification import (
    SAMPLE_SLACK,
    check_mean_nonexpansive,
    check_self_map,
    conditions_sweep,
    find_expansion_witness,
)

log = logging.getLogger("meanfix")

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2
EXACT_TOL = 1e-12
#: maps that are contractions get a tight default tolerance
_CONTRACTION_BASELINES = ("affine", "identity", "shift-average")
_WITNESS_MIN = {"ex1-l1": 1.5, "ex2-l2": 1.2, "disc-f": 1.0}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    example: str
    dim: int
    alpha: tuple
    p: float
    scheme: str
    lam: float
    eps: float
    max_iter: int
    tol: float
    seed: int
    trials: int
    out: str | None
    format: str

    @property
    def multi_index(self) -> MultiIndex:
        return MultiIndex(self.alpha, self.p)

    def echo(self) -> dict:
        d = {}
        for k, v in asdict(self).items():
            d["lambda" if k == "lam" else k] = list(v) if k == "alpha" else v
        return d


def _default_seed() -> int:
    env = os.environ.get("MEANFIX_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise ConfigError(f"MEANFIX_SEED must be an integer, got {env!r}")


def build_config(args, default_format="json", default_trials=100_000) -> ExperimentConfig:
    if args.example not in REGISTRY_IDS:
        raise ConfigError(f"unknown example {args.example!r}; choose from {', '.join(REGISTRY_IDS)}")
    dim = 16 if args.dim is None else args.dim
    if args.example in ("ex1-l1", "ex2-l2") and dim < 3:
        raise ConfigError("the shift examples need --dim >= 3")
    if dim < 1:
        raise ConfigError("--dim must be positive")
    ex = get_example(args.example, dim)
    try:
        if args.alpha is None:
            mi = ex.alpha if args.p is None else MultiIndex(ex.alpha.weights, args.p)
        else:
            mi = MultiIndex.parse(args.alpha, ex.alpha.p if args.p is None else args.p)
    except ValueError as exc:
        raise ConfigError(str(exc))
    tol = args.tol
    if tol is None:
        tol = 1e-10 if args.example in _CONTRACTION_BASELINES or args.scheme == "anchored" else 1e-3
    seed = _default_seed() if args.seed is None else args.seed
    trials = default_trials if args.trials is None else args.trials
    if trials < 1 or args.max_iter < 1:
        raise ConfigError("--trials and --max-iter must be positive")
    if not 0 < args.lam < 1 or not 0 < args.eps < 1:
        raise ConfigError("--lambda and --eps must lie in (0, 1)")
    return ExperimentConfig(
        args.example, ex.T.domain.dim, mi.weights, mi.p, args.scheme, args.lam, args.eps,
        args.max_iter, tol, seed, trials, args.out, args.format or default_format,
    )


def _check(name, passed, **info) -> dict:
    d = {"name": name, "passed": bool(passed)}
    d.update(info)
    return d


def _finish(command, cfg: ExperimentConfig, checks: list, body: dict) -> int:
    passed = all(c["passed"] for c in checks)
    for c in checks:
        log.info("%-4s %s", "PASS" if c["passed"] else "FAIL", c["name"])
    payload = {"command": command, "config": cfg.echo(), "passed": passed, "checks": checks}
    payload.update(body)
    if cfg.format == "csv":
        rows = [(c["name"], int(c["passed"])) for c in checks]
        text = report.dump_csv(["check", "passed"], rows, cfg.echo())
    else:
        text = report.dump_json(payload)
    report.emit(text, cfg.out)
    return EXIT_OK if passed else EXIT_FAIL


# -- examples verify ---------------------------------------------------------

def _close(a, b, tol=EXACT_TOL) -> bool:
    return bool(np.max(np.abs(np.asarray(a, dtype=float) - np.asarray(b, dtype=float))) <= tol)


def _exact_checks(cfg: ExperimentConfig, ex) -> list:
    T, d = ex.T, cfg.dim
    checks = []
    if ex.id == "ex1-l1":
        half = MultiIndex((0.5, 0.5), 1.0)
        e3 = basis_vector(3, d)

        def vec(*head):
            v = np.zeros(d)
            v[: len(head)] = head
            return v

        Te3, T2e3 = T(e3), iterate(T, 2)(e3)
        ta, tau = t_alpha(T, half)(e3), tau_alpha(T, half)(e3)
        checks += [
            _check("T e3 = (0, 2/3, 0, ...)", _close(Te3, vec(0, 2 / 3)), value=Te3),
            _check("T^2 e3 = (1/3, 0, ...)", _close(T2e3, vec(1 / 3)), value=T2e3),
            _check("T_alpha e3 = (1/6, 1/3, 0, ...)", _close(ta, vec(1 / 6, 1 / 3)), value=ta),
            _check("tau_alpha e3 = (0, 1/3, 0, ...)", _close(tau, vec(0, 1 / 3)), value=tau),
            _check("l1 gap between tau_alpha e3 and T_alpha e3 is 1/6",
                   abs(lp_norm(ta - tau, 1) - 1 / 6) <= EXACT_TOL, value=lp_norm(ta - tau, 1)),
            _check("tau(1/3) = 0", tau_scalar(1 / 3) == 0.0),
            _check("tau(2/3) = 1/3", abs(tau_scalar(2 / 3) - 1 / 3) <= EXACT_TOL),
        ]
        x, y = vec(0, 1), vec(0, 0.5)
        r = lp_norm(T(x) - T(y), 1) / lp_norm(x - y, 1)
        checks.append(_check("ratio at (0,1,0..),(0,1/2,0..) is 2", abs(r - 2) <= EXACT_TOL, value=r))
    elif ex.id == "ex2-l2":
        e3 = basis_vector(3, d)
        want = np.zeros(d)
        want[1] = math.sqrt(2 / 3)
        x, y = np.zeros(d), np.zeros(d)
        x[1], y[1] = 1.0, T0
        num, den = lp_norm(T(x) - T(y), 2), lp_norm(x - y, 2)
        checks += [
            _check("S e3 = (0, sqrt(2/3), 0, ...)", _close(T(e3), want), value=T(e3)),
            _check("sigma(t0) = 0", sigma_scalar(T0) == 0.0),
            _check("sigma(1) = 1", abs(sigma_scalar(1.0) - 1.0) <= EXACT_TOL),
            _check("||Sx - Sy|| = 1 > ||x - y|| = 1/sqrt2 at (0,1,..),(0,t0,..)",
                   abs(num - 1) <= EXACT_TOL and abs(den - 1 / math.sqrt(2)) <= EXACT_TOL, ratio=num / den),
        ]
    elif ex.id == "disc-f":
        grid = np.concatenate([[0.0], np.arange(1, 1_000_001) / 1_000_000])[:, None]
        alphas = {(0.5, 0.5), (0.3, 0.7), (0.9, 0.1), tuple(cfg.alpha)}
        checks.append(_check("f(0) = 1 and f(0.5) = 0", T(np.array([0.0]))[0] == 1.0 and T(np.array([0.5]))[0] == 0.0))
        for a in sorted(alphas):
            if len(a) != 2:
                continue
            out = tau_alpha(T, MultiIndex(a, 1.0))(grid)
            checks.append(_check(f"f(a1 x + a2 f(x)) = 0 on 10^6+1 grid, alpha={list(a)}",
                                 bool(np.all(out == 0.0)), n_points=int(grid.shape[0])))
    if ex.affine:
        xs = PairSampler(T.domain, cfg.seed + 7).points(1000)
        mi = cfg.multi_index
        gap = float(np.max(np.abs(tau_alpha(T, mi)(xs) - t_alpha(T, mi)(xs))))
        checks.append(_check("tau_alpha = T_alpha for an affine map", gap <= 1e-10, max_gap=gap))
    return checks


def cmd_examples_verify(cfg: ExperimentConfig) -> int:
    ex = get_example(cfg.example, cfg.dim)
    T, mi = ex.T, cfg.multi_index
    checks = []
    for name, M in (("T", T), ("T^2", iterate(T, 2)), ("T_alpha", t_alpha(T, mi)), ("tau_alpha", tau_alpha(T, mi))):
        bad, worst = check_self_map(M, cfg.trials, cfg.seed)
        checks.append(_check(f"self-map: {name}(B) in B", bad == 0, outside=bad, worst_excess=worst))

    if ex.id == "disc-f":
        ys = np.linspace(1e-3, 0.1, 100)[:, None]
        mc = check_mean_nonexpansive(T, mi, pairs=(np.zeros_like(ys), ys))
        checks.append(_check("mean inequality fails at pairs (0, y)", mc.n_violations > 0,
                             verdict=mc.verdict, max_slack=mc.max_slack))
        est = estimate_lipschitz(tau_alpha(T, mi), PairSampler(T.domain, cfg.seed), min(cfg.trials, 10_000))
        checks.append(_check("composite is constant, hence nonexpansive", est.k_hat == 0.0, k_hat=est.k_hat))
    else:
        mc = check_mean_nonexpansive(T, mi, cfg.trials, cfg.seed)
        checks.append(_check(f"mean inequality alpha={list(mi.weights)} p={mi.p:g}", mc.n_violations == 0,
                             verdict=mc.verdict, max_slack=mc.max_slack, n_violations=mc.n_violations))

    wit = find_expansion_witness(T, min(cfg.trials, 20_000), 200, cfg.seed)
    want = _WITNESS_MIN.get(ex.id)
    if want is None:
        checks.append(_check("no expansion witness (nonexpansive map)", wit is None,
                             ratio=None if wit is None else wit.ratio))
    else:
        checks.append(_check(f"expansion witness with ratio >= {want:g}", wit is not None and wit.ratio >= want,
                             witness=wit))
    checks += _exact_checks(cfg, ex)
    return _finish("examples verify", cfg, checks, {})


# -- afps run -----------------------------------------------------------------

def cmd_afps_run(cfg: ExperimentConfig) -> int:
    ex = get_example(cfg.example, cfg.dim)
    T, mi = ex.T, cfg.multi_index
    J = j_map(T, mi)
    start = PairSampler(T.domain, cfg.seed).points(1)[0]
    z0 = J.diagonal_point(start)
    try:
        if cfg.scheme == "km":
            tr = km_iterate(J, z0, cfg.lam, cfg.max_iter, cfg.tol, seed=cfg.seed)
        else:
            tr = anchored_iterate(J, z0, cfg.eps, cfg.tol, seed=cfg.seed)
    except DivergenceError as exc:
        log.error("iteration diverged: %s", exc)
        return EXIT_FAIL
    primary = tr.final_residual
    fam = residual_family(T, mi, tr.final, primary)
    k_hat = estimate_lipschitz(T, PairSampler(T.domain, cfg.seed + 1), cfg.trials).k_hat
    scale = 10.0 * max(1.0, k_hat) * primary
    checks = []
    if cfg.scheme == "km":
        checks.append(_check("residual below tol", tr.converged, steps=tr.steps, residual=primary))
        checks.append(_check("residual nonincreasing", tr.monotone, increases=len(tr.increases)))
    else:
        bound = cfg.eps * product_diameter(J) + 10 * cfg.tol
        checks.append(_check("anchored residual <= eps*diam + 10*inner_tol", primary <= bound,
                             residual=primary, bound=bound))
    checks.append(_check("residual family within 10*max(1,k_hat)*primary",
                         all(v <= scale for k, v in fam.entries().items() if k != "r_T"),
                         k_hat=k_hat, scale=scale))
    checks.append(_check("chain consistency", fam.chain_consistent(k_hat)))
    extra = {"k_hat_T": k_hat}
    body = {"trace": tr.summary(), "residual_report": fam.to_dict(), "k_hat_T": k_hat}
    if J.n == 2 and J.alpha.weights[1] ** mi.p < J.alpha.weights[0]:
        g = gjp_chain_check(T, J.alpha, tr.final[0], fam.r_tau)
        checks.append(_check("gjp chain: ||Tx - x|| <= r_tau / (1 - a2 a1^(-1/p))", g.passed,
                             bound=g.bound, observed=g.observed))
        body["gjp_chain"] = g._asdict()
        extra.update(gjp_bound=g.bound, gjp_observed=g.observed)
    if cfg.format == "csv":
        text = report.dump_csv(["step", "metric", "value"], report.trace_rows(tr, fam, extra), cfg.echo())
        report.emit(text, cfg.out)
        passed = all(c["passed"] for c in checks)
        for c in checks:
            log.info("%-4s %s", "PASS" if c["passed"] else "FAIL", c["name"])
        return EXIT_OK if passed else EXIT_FAIL
    return _finish("afps run", cfg, checks, body)


# -- conditions sweep ------------------------------------------------------------

def cmd_conditions_sweep(n: int, p: float, step: float, out, fmt: str) -> int:
    if n < 1 or p < 1 or not 0 < step <= 0.5:
        raise ConfigError("need n >= 1, p >= 1 and 0 < step <= 0.5")
    try:
        rows = conditions_sweep(n, p, step)
    except ValueError as exc:
        raise ConfigError(str(exc))
    config = {"n": n, "p": p, "step": step}
    if fmt == "json":
        text = report.dump_json({"command": "conditions sweep", "config": config,
                                 "rows": [r.to_dict() for r in rows]})
    else:
        header = [f"alpha{k + 1}" for k in range(n)] + ["p", "condition_id", "verdict", "lhs", "rhs"]
        text = report.dump_csv(header, (r.csv_row(n) for r in rows), config)
    report.emit(text, out)
    return EXIT_OK


# -- lipschitz ------------------------------------------------------------------

def cmd_lipschitz(cfg: ExperimentConfig) -> int:
    ex = get_example(cfg.example, cfg.dim)
    T, mi = ex.T, cfg.multi_index
    maps = (("T", T), ("T^2", iterate(T, 2)), ("T_alpha", t_alpha(T, mi)), ("tau_alpha", tau_alpha(T, mi)))
    ests = {name: estimate_lipschitz(M, PairSampler(T.domain, cfg.seed + i), cfg.trials)
            for i, (name, M) in enumerate(maps)}
    k_tau = ests["tau_alpha"].k_hat
    body = {"estimates": {k: v.to_dict() for k, v in ests.items()},
            "tau_alpha_nonexpansive_evidence": k_tau <= 1.0 + SAMPLE_SLACK}
    checks = []
    if mi.n == 2:
        naive = 1.0 + mi.weights[1] / mi.weights[0] ** 2
        body["naive_tau_bound"] = naive
        checks.append(_check("k_hat(tau_alpha) <= 1 + a2/a1^2", k_tau <= naive + 1e-6, k_hat=k_tau, bound=naive))
    return _finish("lipschitz", cfg, checks, body)


# -- witness ---------------------------------------------------------------------

def cmd_witness(cfg: ExperimentConfig, refine_steps: int, mean: bool) -> int:
    ex = get_example(cfg.example, cfg.dim)
    wit = find_expansion_witness(ex.T, cfg.trials, refine_steps, cfg.seed, cfg.multi_index if mean else None)
    body = {"witness": None if wit is None else wit.to_dict()}
    cfg_fmt = cfg if cfg.format == "json" else ExperimentConfig(**{**asdict(cfg), "format": "json"})
    return _finish("witness", cfg_fmt, [], body)


# -- argument parsing -----------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _common() -> argparse.ArgumentParser:
    c = argparse.ArgumentParser(add_help=False)
    c.add_argument("--example", default="ex1-l1", help=f"one of {', '.join(REGISTRY_IDS)}")
    c.add_argument("--alpha", help="comma-separated weights, e.g. 0.5,0.5")
    c.add_argument("--p", type=float, help="exponent of the mean inequality")
    c.add_argument("--dim", type=int, help="truncation dimension (default 16)")
    c.add_argument("--scheme", choices=("km", "anchored"), default="km")
    c.add_argument("--lambda", dest="lam", type=float, default=0.5)
    c.add_argument("--eps", type=float, default=1e-3)
    c.add_argument("--max-iter", type=int, default=100_000)
    c.add_argument("--tol", type=float)
    c.add_argument("--seed", type=int, help="RNG seed (default: $MEANFIX_SEED or 0)")
    c.add_argument("--trials", type=int)
    c.add_argument("--out", help="output file (default: stdout)")
    c.add_argument("--format", choices=("csv", "json"))
    c.add_argument("-v", "--verbose", action="store_true", help="log each check to stderr")
    return c


def make_parser() -> argparse.ArgumentParser:
    common = _common()
    ap = _Parser(prog="meanfix", description=__doc__.split("\n\n")[0])
    sub = ap.add_subparsers(dest="group", required=True, parser_class=_Parser)

    g = sub.add_parser("examples", help="checks on the registered maps")
    gs = g.add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    gs.add_parser("verify", parents=[common], help="self-map, mean inequality, witnesses, exact values")

    g = sub.add_parser("afps", help="approximate fixed point sequences of J")
    gs = g.add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    gs.add_parser("run", parents=[common], help="iterate J and report the residual family")

    g = sub.add_parser("conditions", help="threshold conditions on the weight simplex")
    gs = g.add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    sw = gs.add_parser("sweep", parents=[common])
    sw.add_argument("--n", type=int, default=2, help="length of the multi-index")
    sw.add_argument("--step", type=float, default=0.01, help="grid spacing")

    sub.add_parser("lipschitz", parents=[common], help="sampled Lipschitz lower bounds")
    w = sub.add_parser("witness", parents=[common], help="search for an expansion witness")
    w.add_argument("--refine-steps", type=int, default=200)
    w.add_argument("--mean", action="store_true", help="search violations of the mean inequality instead")
    return ap


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    try:
        if args.group == "conditions":
            return cmd_conditions_sweep(args.n, 1.0 if args.p is None else args.p, args.step,
                                        args.out, args.format or "csv")
        if args.group == "examples":
            return cmd_examples_verify(build_config(args))
        if args.group == "afps":
            return cmd_afps_run(build_config(args, default_format="json", default_trials=20_000))
        if args.group == "lipschitz":
            return cmd_lipschitz(build_config(args))
        if args.group == "witness":
            return cmd_witness(build_config(args, default_trials=20_000), args.refine_steps, args.mean)
    except ConfigError as exc:
        print(f"meanfix: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"meanfix: IO error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
