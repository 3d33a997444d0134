"""Command-line front end.

Verbs:

* ``deterministic``: closed-form orbit, Lamé solutions and a ``mu(q)`` sweep.
* ``simulate``: per-seed expansion paths with an Euler-Maruyama column.
* ``validate``: Monte-Carlo checks of the probability bounds and of the
  bounded-driver convergence results; exit status 1 if any check fails.
* ``convergence``: the horizon ``T_sigma`` and the tail bound as JSON.

Settings come from built-in defaults, then an optional JSON ``--config``
file, then command-line flags (flags win).  The default output directory is
``$ANHARMONIC_OUT`` if set, else ``./anharmonic_out``.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from .bounds import (
    MIN_ENSEMBLE,
    EventCounter,
    doob_probability_bound,
    gamma_recursion,
    truncation_probability_bound,
)
from .convergence import (
    VARIANTS,
    DivergedError,
    coefficient_envelope,
    driver_coefficients,
    envelope_ratios,
    example_driver,
    m_functional,
    n_functional,
    solve_T_sigma,
    tail_bound,
)
from .elliptic import EllipticDomainError
from .lame import OscillatorParams, ParameterError, fundamental_pair, mu, u1, u2, x0
from .oracle import euler_maruyama
from .stochastic import (
    TimeGrid,
    expand,
    sample_brownian,
    sample_increments,
    expand_batch,
    truncated_sum,
    write_metadata,
    write_paths_csv,
)

log = logging.getLogger("anharmonic")

ENV_OUT = "ANHARMONIC_OUT"
EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2
BATCH = 500


class ConfigError(ValueError):
    """Invalid run configuration (exit status 2)."""


@dataclass
class RunConfig:
    """Everything a command needs; ``None`` means "use the command default"."""

    a: float = 1.0
    c: float = -1.0
    y: float = 0.0
    eta_sign: int = 1
    sigma: float | None = None
    conv_sigma: float = 0.01
    t_end: float | None = None
    dt: float = 1e-3
    order: int | None = None
    paths: int | None = None
    seed: int = 0
    noise: str = "additive"
    driver: str = "brownian"
    variant: str = "standard"
    negative_control: bool = False
    out: str | None = None

    def params(self) -> OscillatorParams:
        try:
            return OscillatorParams(self.a, self.c, self.y, self.eta_sign)
        except (ParameterError, EllipticDomainError) as exc:
            raise ConfigError(str(exc)) from exc

    def grid(self, params: OscillatorParams, t_end: float | None = None) -> TimeGrid:
        return TimeGrid.from_dt(t_end or self.t_end or params.period, self.dt)

    def out_dir(self) -> Path:
        path = Path(self.out or os.environ.get(ENV_OUT) or "anharmonic_out")
        path.mkdir(parents=True, exist_ok=True)
        return path

    def check(self) -> None:
        if self.dt <= 0:
            raise ConfigError("--dt must be positive")
        if self.t_end is not None and self.t_end <= 0:
            raise ConfigError("--t-end must be positive")
        if self.sigma is not None and self.sigma < 0:
            raise ConfigError("--sigma must be nonnegative")
        if self.conv_sigma <= 0:
            raise ConfigError("--conv-sigma must be positive")
        if self.order is not None and self.order < 0:
            raise ConfigError("--order must be >= 0")
        if self.paths is not None and self.paths < 1:
            raise ConfigError("--paths must be >= 1")
        if self.noise not in ("additive", "multiplicative"):
            raise ConfigError("--noise must be additive or multiplicative")
        if self.driver not in ("brownian", "bounded-example"):
            raise ConfigError("--driver must be brownian or bounded-example")
        if self.variant not in VARIANTS:
            raise ConfigError(f"--variant must be one of {VARIANTS}")
        if self.driver == "bounded-example" and self.noise != "additive":
            raise ConfigError("the bounded driver is only defined for additive noise")


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config file must hold a JSON object")
    known = {f.name for f in fields(RunConfig)}
    data = {k.replace("-", "_"): v for k, v in data.items()}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    return data


def build_config(ns: argparse.Namespace) -> RunConfig:
    merged = _load_config(ns.config)
    for f in fields(RunConfig):
        value = getattr(ns, f.name, None)
        if value is not None:
            merged[f.name] = value
    try:
        cfg = RunConfig(**merged)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    cfg.check()
    return cfg


# --------------------------------------------------------------------------- commands


def cmd_deterministic(cfg: RunConfig) -> int:
    params = cfg.params()
    pair = fundamental_pair(params)
    grid = cfg.grid(params)
    t = grid.times
    u = params.omega * t + params.phase
    out = cfg.out_dir()
    cols = {
        "t": t,
        "x0": x0(t, params),
        "u1": u1(u, params.q),
        "u2": u2(u, params.q),
        "w1": pair.w1(t),
        "w2": pair.w2(t),
    }
    _write_columns(out / "deterministic.csv", cols)
    q = np.linspace(0.01, 0.99, 99)
    _write_columns(out / "mu_sweep.csv", {"q": q, "mu": np.array([mu(v) for v in q])})
    write_metadata(out / "deterministic.json", params=params, dt=grid.dt, t_end=grid.t_end, period=params.period)
    log.info("wrote %s", out)
    return EXIT_OK


def cmd_simulate(cfg: RunConfig) -> int:
    params = cfg.params()
    pair = fundamental_pair(params)
    grid = cfg.grid(params)
    sigma = 0.05 if cfg.sigma is None else cfg.sigma
    order = 3 if cfg.order is None else cfg.order
    n_paths = 3 if cfg.paths is None else cfg.paths
    out = cfg.out_dir()
    driver = example_driver() if cfg.driver == "bounded-example" else None
    records = []
    for i in range(n_paths):
        seed = cfg.seed + i
        path = sample_brownian(grid, seed)
        if driver is None:
            coeffs = expand(pair, path, order, cfg.noise).paths
            run = euler_maruyama(params, sigma, path, noise_mode=cfg.noise)
        else:
            coeffs = driver_coefficients(pair, driver, grid, path.values, order)[0]
            z = driver.values(path.values, grid.times)
            run = euler_maruyama(params, sigma, path, driver_increments=np.diff(z))
        name = f"path_seed{seed}.csv"
        write_paths_csv(out / name, grid, coeffs, sigma, extra={"x_em": run.x})
        records.append({"file": name, "seed": seed, "exploded": run.exploded, "blowup_index": run.blowup_index})
    write_metadata(
        out / "simulate.json",
        params=params,
        seed=cfg.seed,
        dt=grid.dt,
        t_end=grid.t_end,
        sigma=sigma,
        order=order,
        noise_mode=cfg.noise,
        driver=cfg.driver,
        paths=records,
    )
    log.info("wrote %d paths to %s", n_paths, out)
    return EXIT_OK


def _bounds_section(cfg: RunConfig, params, pair, sigma: float, n_paths: int) -> tuple[dict, list[bool]]:
    grid = cfg.grid(params)
    orders = (1, 2, 3)
    tables = gamma_recursion(pair, grid, max(orders))
    counters = {n: EventCounter(tables, sigma, n) for n in orders}
    rng = np.random.default_rng(cfg.seed)
    done = 0
    while done < n_paths:
        k = min(BATCH, n_paths - done)
        coeffs = expand_batch(pair, grid, sample_increments(grid, rng, k), max(orders))
        for counter in counters.values():
            counter.update(coeffs)
        done += k
    rows, ok = [], []
    for n in orders:
        res = counters[n].result()
        for kind, bound_fn, frac, se in (
            ("coefficient", doob_probability_bound, res.coefficient_fraction, res.coefficient_se),
            ("truncation", truncation_probability_bound, res.truncation_fraction, res.truncation_se),
        ):
            bound = bound_fn(pair, grid.t_end, sigma, n)
            passed = bound.vacuous or frac >= bound.value - 3.0 * se
            ok.append(passed)
            rows.append(
                {
                    "n": n,
                    "event": kind,
                    "analytic_bound": bound.value,
                    "empirical_fraction": frac,
                    "standard_error": se,
                    "vacuous": bound.vacuous,
                    "passed": passed,
                }
            )
        ok.append(res.implication_violations == 0)
        rows.append({"n": n, "event": "implication", "violations": res.implication_violations})
        rows.append({"n": n, "event": "tightness", "quantiles": res.tightness_quantiles})
    section = {"T": grid.t_end, "dt": grid.dt, "sigma": sigma, "n_paths": n_paths, "rows": rows}
    return section, ok


def _convergence_section(cfg: RunConfig, params, pair) -> tuple[dict, list[bool]]:
    driver = example_driver()
    sigma = cfg.conv_sigma
    order = 8 if cfg.order is None else cfg.order
    T_sigma = solve_T_sigma(pair, driver, sigma, cfg.variant)
    M = m_functional(pair, driver, T_sigma, cfg.variant)
    N = n_functional(pair, T_sigma, cfg.variant)
    residual = abs(4.0 * sigma * M * N - 1.0)
    at_root = tail_bound(pair, driver, sigma, T_sigma, cfg.variant)
    T = T_sigma / 2.0
    grid = TimeGrid.from_dt(T, cfg.dt)
    bound = tail_bound(pair, driver, sigma, T, cfg.variant)
    rng = np.random.default_rng(cfg.seed + 1)
    n_paths = MIN_ENSEMBLE
    increments = sample_increments(grid, rng, n_paths)
    values = np.zeros((n_paths, grid.n_steps + 1))
    np.cumsum(increments, axis=-1, out=values[:, 1:])
    coeffs = driver_coefficients(pair, driver, grid, values, order)
    dev = np.abs(truncated_sum(coeffs, sigma, order) - coeffs[:, 0, :]).max(axis=-1)
    envelope = coefficient_envelope(pair, driver, T, order, cfg.variant)
    ratios = envelope_ratios(coeffs, envelope)
    scale = 0.9 * float(ratios.max()) if cfg.negative_control else 1.0
    envelope_ok = bool(np.all(ratios <= scale))
    checks = {
        "residual": residual <= 1e-10,
        "tail_bound_at_root": at_root == 1.0 / (2.0 * N),
        "tail_bound_paths": bool(np.all(dev <= bound)),
        "coefficient_envelope": envelope_ok,
    }
    section = {
        "driver_name": driver.name,
        "sigma": sigma,
        "variant": cfg.variant,
        "T_sigma": T_sigma,
        "N_at_T_sigma": N,
        "M_at_T_sigma": M,
        "residual": residual,
        "tail_bound_at_T_sigma": at_root,
        "T_checked": T,
        "tail_bound": bound,
        "max_deviation": float(dev.max()),
        "order": order,
        "n_paths": n_paths,
        "envelope_ratios": ratios.tolist(),
        "envelope_scale": scale,
        "negative_control": cfg.negative_control,
        "checks": checks,
    }
    return section, list(checks.values())


def cmd_validate(cfg: RunConfig) -> int:
    n_paths = 10_000 if cfg.paths is None else cfg.paths
    if n_paths < MIN_ENSEMBLE:
        raise ConfigError(f"validate needs --paths >= {MIN_ENSEMBLE}")
    if cfg.driver != "brownian" or cfg.noise != "additive":
        raise ConfigError("validate runs the additive Brownian suite; drop --driver/--noise")
    params = cfg.params()
    pair = fundamental_pair(params)
    sigma = 0.02 if cfg.sigma is None else cfg.sigma
    if sigma <= 0:
        raise ConfigError("validate needs --sigma > 0")
    start = time.perf_counter()
    bounds, ok_b = _bounds_section(cfg, params, pair, sigma, n_paths)
    try:
        conv, ok_c = _convergence_section(cfg, params, pair)
    except DivergedError as exc:
        conv, ok_c = {"error": str(exc)}, [False]
    passed = all(ok_b) and all(ok_c)
    report = {
        "params": asdict(params),
        "seed": cfg.seed,
        "bounds": bounds,
        "convergence": conv,
        "passed": passed,
        "elapsed_seconds": time.perf_counter() - start,
    }
    out = cfg.out_dir()
    write_metadata(out / "validate.json", **report)
    log.info("validate %s; report in %s", "passed" if passed else "FAILED", out / "validate.json")
    return EXIT_OK if passed else EXIT_FAIL


def cmd_convergence(cfg: RunConfig) -> int:
    if cfg.driver != "bounded-example":
        raise ConfigError("convergence needs --driver bounded-example (no horizon exists for Brownian noise)")
    params = cfg.params()
    pair = fundamental_pair(params)
    sigma = cfg.conv_sigma if cfg.sigma is None else cfg.sigma
    if sigma <= 0:
        raise ConfigError("convergence needs --sigma > 0")
    driver = example_driver()
    try:
        T_sigma = solve_T_sigma(pair, driver, sigma, cfg.variant)
    except DivergedError as exc:
        log.error("%s", exc)
        return EXIT_FAIL
    report = {
        "params": asdict(params),
        "driver_name": driver.name,
        "sigma": sigma,
        "T_sigma": T_sigma,
        "N_at_T_sigma": n_functional(pair, T_sigma, cfg.variant),
        "tail_bound": tail_bound(pair, driver, sigma, T_sigma, cfg.variant),
        "variant_flags": {"variant": cfg.variant, "derivative_sup_norms_in_M": cfg.variant == "standard"},
    }
    write_metadata(cfg.out_dir() / "convergence.json", **report)
    return EXIT_OK


COMMANDS = {
    "deterministic": cmd_deterministic,
    "simulate": cmd_simulate,
    "validate": cmd_validate,
    "convergence": cmd_convergence,
}


# --------------------------------------------------------------------------- parsing


def _write_columns(path: Path, cols: dict[str, np.ndarray]) -> None:
    names = list(cols)
    with path.open("w", newline="\n") as fh:
        fh.write(",".join(names) + "\n")
        for row in zip(*(cols[n] for n in names), strict=True):
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("orbit")
    g.add_argument("--a", type=float, help="largest root of the energy polynomial (default 1)")
    g.add_argument("--c", type=float, help="smallest root (default -1)")
    g.add_argument("--y", type=float, help="initial position in [c, -a-c] (default 0)")
    g.add_argument("--eta-sign", type=int, choices=(1, -1), help="branch of the initial velocity")
    s = common.add_argument_group("simulation")
    s.add_argument("--sigma", type=float, help="noise level")
    s.add_argument("--conv-sigma", type=float, help="noise level for the bounded-driver checks (default 0.01)")
    s.add_argument("--t-end", type=float, help="horizon (default: one period of x0)")
    s.add_argument("--dt", type=float, help="grid step (default 1e-3)")
    s.add_argument("--order", type=int, help="truncation order")
    s.add_argument("--paths", type=int, help="number of realisations")
    s.add_argument("--seed", type=int, help="base seed (path i uses seed + i)")
    s.add_argument("--noise", choices=("additive", "multiplicative"))
    s.add_argument("--driver", choices=("brownian", "bounded-example"))
    s.add_argument("--variant", choices=VARIANTS, help="M/N functional variant")
    o = common.add_argument_group("output")
    o.add_argument("--out", help=f"output directory (default ${ENV_OUT} or ./anharmonic_out)")
    o.add_argument("--config", help="JSON file with defaults; flags override it")
    o.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="anharmonic", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("deterministic", parents=[common], help="orbit, Lamé solutions and mu(q) sweep")
    sub.add_parser("simulate", parents=[common], help="per-seed expansion paths with an EM column")
    v = sub.add_parser("validate", parents=[common], help="Monte-Carlo validation report")
    v.add_argument(
        "--negative-control",
        action="store_true",
        default=None,
        help="shrink the coefficient envelope below the observed maximum (must fail)",
    )
    sub.add_parser("convergence", parents=[common], help="horizon and tail bound for the bounded driver")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = build_config(ns)
        return COMMANDS[ns.command](cfg)
    except ConfigError as exc:
        print(f"anharmonic: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
