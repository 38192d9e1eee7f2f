"""Batch front-end: run both divergence engines over case configurations.

Subcommands:

    hmmdiv run <config.json | benchmark> [--methods mc,fredholm] [--check] [--out DIR]
    hmmdiv selftest
    hmmdiv print-defaults

`run` evaluates every case over its alpha grid and writes three artifacts to
the output directory: table.txt (aligned, 4 decimals), table.csv (full
precision, same values), and diagnostics.json (solver health and timings).
The token `benchmark` stands for the bundled eight-case configuration, which
`print-defaults` prints as JSON for editing. With `--check`, the run is
compared against the reference bands and the exit status reports violations,
naming every failing cell.

Config schema (JSON):

    {
      "alphas": [0.5, "kl", 2.0],
      "mc":   {"n": 2000, "reps": 100, "burn_in": 100, "seed": 0},
      "grid": {"N": 16, "a": 15.0, "quad_points": 201},
      "cases": [
        {"name": "case1", "family": "B",
         "theta1": {"p01": 0.41, "p10": 0.6, "mu": [2.0, 1.0],
                    "phi": 0.0, "psi1": 1.0, "psi2": 0.0, "sigma": 1.5},
         "theta":  {...}}
      ]
    }

theta1 generates the data; theta is the alternative. Family "A" models use
keys {p00, p11, mu, psi, sigma} with per-state pairs. Top-level alphas, mc,
and grid apply to every case; a case may override any of them. The
environment variable HMMDIV_THREADS caps how many cases run concurrently
(0 or unset = auto).
"""

from __future__ import annotations

import argparse
import concurrent.futures
import json
import math
import os
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from . import cases as bench
from .fredholm import GridSpec, build_kernel, j_alpha, j_log, solve_invariant
from .models import ModelAParams, ModelBParams, validate_model
from .montecarlo import (
    McConfig,
    estimate_from_log_ratios,
    replication_log_ratios,
)

METHODS = ("mc", "fredholm")


class ConfigError(ValueError):
    """Malformed configuration; the message names the offending key."""


@dataclass(frozen=True)
class CaseSpec:
    name: str
    family: str
    theta1: ModelAParams | ModelBParams
    theta: ModelAParams | ModelBParams
    alphas: tuple
    mc: McConfig = field(default_factory=McConfig)
    grid: GridSpec = field(default_factory=GridSpec)

    def __post_init__(self):
        if self.family not in ("A", "B"):
            raise ConfigError(f"case {self.name!r}: family must be 'A' or 'B'")
        want = ModelAParams if self.family == "A" else ModelBParams
        for label, theta in (("theta1", self.theta1), ("theta", self.theta)):
            if not isinstance(theta, want):
                raise ConfigError(
                    f"case {self.name!r}: {label} does not match family {self.family}"
                )
            problems = validate_model(theta)
            if problems:
                raise ConfigError(
                    f"case {self.name!r}: {label} invalid: " + "; ".join(problems)
                )
        object.__setattr__(self, "alphas", tuple(self.alphas))
        if not self.alphas:
            raise ConfigError(f"case {self.name!r}: alphas must be non-empty")
        for a in self.alphas:
            if isinstance(a, str):
                if a.lower() != "kl":
                    raise ConfigError(
                        f"case {self.name!r}: alpha {a!r} is not a number or 'kl'"
                    )
            elif not float(a) > 0:
                raise ConfigError(f"case {self.name!r}: alpha must be > 0, got {a}")


@dataclass(frozen=True)
class ResultRow:
    case: str
    alpha: object
    fredholm: float | None = None
    mc_mean: float | None = None
    mc_sd: float | None = None
    rel_err_pct: float | None = None
    fredholm_seconds: float | None = None
    mc_seconds: float | None = None


def _is_kl(alpha) -> bool:
    if isinstance(alpha, str):
        return alpha.lower() == "kl"
    return abs(float(alpha) - 1.0) < 1e-8


# ---------------------------------------------------------------------------
# config parsing


_THETA_KEYS = {
    "A": ("p00", "p11", "mu", "psi", "sigma"),
    "B": ("p01", "p10", "mu", "phi", "psi1", "psi2", "sigma"),
}


def _parse_theta(doc: dict, family: str, where: str):
    if not isinstance(doc, dict):
        raise ConfigError(f"{where}: expected an object")
    keys = _THETA_KEYS[family]
    missing = [k for k in keys if k not in doc]
    if missing:
        raise ConfigError(f"{where}: missing key(s) {', '.join(missing)}")
    extra = [k for k in doc if k not in keys]
    if extra:
        raise ConfigError(f"{where}: unknown key(s) {', '.join(extra)}")
    try:
        if family == "A":
            return ModelAParams(
                p00=float(doc["p00"]),
                p11=float(doc["p11"]),
                mu=tuple(float(v) for v in doc["mu"]),
                psi=tuple(float(v) for v in doc["psi"]),
                sigma=tuple(float(v) for v in doc["sigma"]),
            )
        return ModelBParams(
            p01=float(doc["p01"]),
            p10=float(doc["p10"]),
            mu=tuple(float(v) for v in doc["mu"]),
            phi=float(doc["phi"]),
            psi1=float(doc["psi1"]),
            psi2=float(doc["psi2"]),
            sigma=float(doc["sigma"]),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def _theta_dict(theta) -> dict:
    if isinstance(theta, ModelAParams):
        return {
            "p00": theta.p00, "p11": theta.p11, "mu": list(theta.mu),
            "psi": list(theta.psi), "sigma": list(theta.sigma),
        }
    return {
        "p01": theta.p01, "p10": theta.p10, "mu": list(theta.mu),
        "phi": theta.phi, "psi1": theta.psi1, "psi2": theta.psi2,
        "sigma": theta.sigma,
    }


def _parse_mc(doc: dict, where: str) -> McConfig:
    allowed = {"n", "reps", "burn_in", "seed"}
    extra = set(doc) - allowed
    if extra:
        raise ConfigError(f"{where}.mc: unknown key(s) {', '.join(sorted(extra))}")
    try:
        return McConfig(
            n=int(doc.get("n", 2000)),
            reps=int(doc.get("reps", 100)),
            burn_in=int(doc.get("burn_in", 100)),
            seed=int(doc.get("seed", 0)),
        )
    except ValueError as exc:
        raise ConfigError(f"{where}.mc: {exc}") from exc


def _parse_grid(doc: dict, where: str) -> GridSpec:
    allowed = {"N", "a", "quad_points"}
    extra = set(doc) - allowed
    if extra:
        raise ConfigError(f"{where}.grid: unknown key(s) {', '.join(sorted(extra))}")
    try:
        return GridSpec(
            N=int(doc.get("N", 16)),
            a=float(doc.get("a", 15.0)),
            quad_points=int(doc.get("quad_points", 201)),
        )
    except ValueError as exc:
        raise ConfigError(f"{where}.grid: {exc}") from exc


def _parse_alphas(raw, where: str) -> tuple:
    if not isinstance(raw, (list, tuple)) or not raw:
        raise ConfigError(f"{where}.alphas: expected a non-empty list")
    out = []
    for a in raw:
        if isinstance(a, str):
            if a.lower() != "kl":
                raise ConfigError(f"{where}.alphas: {a!r} is not a number or 'kl'")
            out.append("kl")
        else:
            out.append(float(a))
    return tuple(out)


def parse_config(doc: dict) -> list[CaseSpec]:
    """Turn a parsed JSON document into CaseSpecs, applying top-level
    alphas/mc/grid as defaults that individual cases may override."""
    if not isinstance(doc, dict):
        raise ConfigError("top level: expected an object")
    if "cases" not in doc or not isinstance(doc["cases"], list) or not doc["cases"]:
        raise ConfigError("top level: 'cases' must be a non-empty list")
    known = {"cases", "alphas", "mc", "grid"}
    extra = set(doc) - known
    if extra:
        raise ConfigError(f"top level: unknown key(s) {', '.join(sorted(extra))}")

    default_alphas = _parse_alphas(doc["alphas"], "top level") if "alphas" in doc else None
    default_mc = _parse_mc(doc.get("mc", {}), "top level")
    default_grid = _parse_grid(doc.get("grid", {}), "top level")

    specs = []
    for idx, c in enumerate(doc["cases"]):
        where = f"cases[{idx}]"
        if not isinstance(c, dict):
            raise ConfigError(f"{where}: expected an object")
        for key in ("name", "family", "theta1", "theta"):
            if key not in c:
                raise ConfigError(f"{where}: missing key {key!r}")
        unknown = set(c) - {"name", "family", "theta1", "theta", "alphas", "mc", "grid"}
        if unknown:
            raise ConfigError(f"{where}: unknown key(s) {', '.join(sorted(unknown))}")
        family = str(c["family"])
        if family not in ("A", "B"):
            raise ConfigError(f"{where}.family: must be 'A' or 'B', got {family!r}")
        alphas = (_parse_alphas(c["alphas"], where) if "alphas" in c
                  else default_alphas)
        if alphas is None:
            raise ConfigError(f"{where}: no alphas given (top-level or per-case)")
        specs.append(
            CaseSpec(
                name=str(c["name"]),
                family=family,
                theta1=_parse_theta(c["theta1"], family, f"{where}.theta1"),
                theta=_parse_theta(c["theta"], family, f"{where}.theta"),
                alphas=alphas,
                mc=_parse_mc(c["mc"], where) if "mc" in c else default_mc,
                grid=_parse_grid(c["grid"], where) if "grid" in c else default_grid,
            )
        )
    names = [s.name for s in specs]
    if len(set(names)) != len(names):
        raise ConfigError("cases: names must be unique")
    return specs


def serialize_config(specs: list[CaseSpec]) -> dict:
    """Inverse of parse_config, fully explicit per case (round-trips)."""
    return {
        "cases": [
            {
                "name": s.name,
                "family": s.family,
                "theta1": _theta_dict(s.theta1),
                "theta": _theta_dict(s.theta),
                "alphas": list(s.alphas),
                "mc": {"n": s.mc.n, "reps": s.mc.reps,
                       "burn_in": s.mc.burn_in, "seed": s.mc.seed},
                "grid": {"N": s.grid.N, "a": s.grid.a,
                         "quad_points": s.grid.quad_points},
            }
            for s in specs
        ]
    }


def default_config() -> dict:
    """The bundled benchmark configuration: all eight case pairs over the
    full alpha grid at default simulation and lattice settings."""
    return serialize_config(
        [
            CaseSpec(
                name=f"case{k}",
                family="B",
                theta1=t1,
                theta=t,
                alphas=bench.ALPHA_GRID,
            )
            for k, (t1, t) in sorted(bench.CASES.items())
        ]
    )


def load_config(path: str) -> list[CaseSpec]:
    if path == "benchmark":
        return parse_config(default_config())
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path!r} is not valid JSON: {exc}") from exc
    return parse_config(doc)


# ---------------------------------------------------------------------------
# execution


def _fredholm_case_values(spec: CaseSpec) -> tuple[dict, dict, float]:
    """All Fredholm values for one case, sharing kernel solves across the
    alpha grid: every Renyi order reuses the theta-filter solve, and the KL
    rows add one theta1-filter solve."""
    t0 = time.perf_counter()
    values: dict = {}
    diag: dict = {}
    if spec.theta1 == spec.theta:
        for a in spec.alphas:
            values[a] = 0.0
        diag["identity"] = True
        return values, diag, time.perf_counter() - t0

    # the theta-filter solve serves both the Renyi orders and the KL cross term
    k0 = build_kernel(spec.theta1, spec.theta, spec.grid, spec.family)
    m0 = solve_invariant(k0)
    residuals = [m0.eigen_residual]
    col_devs = [float(np.abs(k0.pre_norm_col_sums - 1.0).max())]
    iters = m0.iterations
    if any(_is_kl(a) for a in spec.alphas):
        k1 = build_kernel(spec.theta1, spec.theta1, spec.grid, spec.family)
        m1 = solve_invariant(k1)
        residuals.append(m1.eigen_residual)
        col_devs.append(float(np.abs(k1.pre_norm_col_sums - 1.0).max()))
        iters += m1.iterations
        kl_value = (j_log(spec.theta1, spec.theta1, m1, spec.grid)
                    - j_log(spec.theta, spec.theta1, m0, spec.grid))
    for a in spec.alphas:
        if _is_kl(a):
            values[a] = kl_value
        else:
            j = j_alpha(spec.theta1, spec.theta, float(a), m0, spec.grid)
            values[a] = math.log(j) / (float(a) - 1.0)
    diag["eigen_residual"] = max(residuals)
    diag["max_col_sum_deviation"] = max(col_devs)
    diag["iterations"] = iters
    diag["grid"] = {"N": spec.grid.N, "a": spec.grid.a,
                    "quad_points": spec.grid.quad_points}
    return values, diag, time.perf_counter() - t0


def _run_case(spec: CaseSpec, methods) -> tuple[list[ResultRow], dict]:
    methods = tuple(methods)
    for m in methods:
        if m not in METHODS:
            raise ValueError(f"unknown method {m!r}; choose from {METHODS}")
    if not methods:
        raise ValueError("at least one method is required")

    n_rows = len(spec.alphas)
    diag: dict = {}
    fred_values: dict = {}
    fred_time = None
    if "fredholm" in methods:
        fred_values, fred_diag, seconds = _fredholm_case_values(spec)
        diag.update(fred_diag)
        diag["fredholm_seconds"] = seconds
        fred_time = seconds / n_rows

    mc_rows: dict = {}
    mc_time = None
    if "mc" in methods:
        t0 = time.perf_counter()
        rho = replication_log_ratios(spec.theta1, spec.theta, spec.mc)
        shared = time.perf_counter() - t0
        per_alpha = []
        for a in spec.alphas:
            t1 = time.perf_counter()
            est = estimate_from_log_ratios(rho, 1.0 if _is_kl(a) else float(a))
            per_alpha.append(time.perf_counter() - t1)
            mc_rows[a] = est
        mc_time = {a: shared / n_rows + dt for a, dt in zip(spec.alphas, per_alpha)}
        diag["mc_seconds"] = shared + sum(per_alpha)

    rows = []
    for a in spec.alphas:
        fred = fred_values.get(a)
        est = mc_rows.get(a)
        rel = None
        if fred is not None and est is not None and est.mean != 0.0:
            rel = (fred - est.mean) / est.mean * 100.0
        rows.append(
            ResultRow(
                case=spec.name,
                alpha=a,
                fredholm=fred,
                mc_mean=None if est is None else est.mean,
                mc_sd=None if est is None else est.std_dev,
                rel_err_pct=rel,
                fredholm_seconds=fred_time,
                mc_seconds=None if mc_time is None else mc_time[a],
            )
        )
    return rows, diag


def run_case(spec: CaseSpec, methods=METHODS) -> list[ResultRow]:
    """One ResultRow per alpha, populated for the requested methods.

    Work shared across the alpha grid (path simulation and filtering for MC,
    kernel solves for Fredholm) is timed once and amortized evenly over the
    rows, so the per-row times add up to the case's wall time.
    """
    rows, _ = _run_case(spec, methods)
    return rows


def _thread_count(n_cases: int) -> int:
    raw = os.environ.get("HMMDIV_THREADS", "0")
    try:
        val = int(raw)
    except ValueError:
        raise ConfigError(f"HMMDIV_THREADS must be an integer, got {raw!r}")
    if val < 0:
        raise ConfigError(f"HMMDIV_THREADS must be >= 0, got {val}")
    if val == 0:
        val = os.cpu_count() or 1
    return max(1, min(val, n_cases))


def run_cases(specs: list[CaseSpec], methods=METHODS, with_diagnostics=False):
    """Run every case, possibly concurrently; row order is by case then
    alpha regardless of scheduling."""
    workers = _thread_count(len(specs))
    if workers == 1:
        results = [_run_case(s, methods) for s in specs]
    else:
        with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda s: _run_case(s, methods), specs))
    rows = [row for case_rows, _ in results for row in case_rows]
    if with_diagnostics:
        return rows, {s.name: d for s, (_, d) in zip(specs, results)}
    return rows


# ---------------------------------------------------------------------------
# reference bands (--check)


def check_rows(specs: list[CaseSpec], rows: list[ResultRow]) -> list[str]:
    """Compare results against the applicable bands; returns one message per
    failing cell (empty = all good).

    Cross-method: |fredholm - mc| <= 3 * mc sd whenever both methods ran.
    Benchmark cases additionally check the deterministic value against the
    reference within max(0.01, 5%) and the MC mean within 3 reference sd of
    the reference mean.
    """
    by_params = {pair: k for k, pair in bench.CASES.items()}
    spec_by_name = {s.name: s for s in specs}
    failures = []
    for row in rows:
        spec = spec_by_name[row.case]
        cell = f"{row.case} alpha={row.alpha}"
        if row.fredholm is not None and row.mc_mean is not None and row.mc_sd:
            if abs(row.fredholm - row.mc_mean) > 3.0 * row.mc_sd:
                failures.append(
                    f"{cell}: |fredholm - mc| = "
                    f"{abs(row.fredholm - row.mc_mean):.4f} exceeds 3*sd = "
                    f"{3.0 * row.mc_sd:.4f}"
                )
        bench_id = by_params.get((spec.theta1, spec.theta))
        key = "kl" if _is_kl(row.alpha) else float(row.alpha)
        ref = bench.REFERENCE.get(key, {}).get(bench_id) if bench_id else None
        if ref is None:
            continue
        ref_det, ref_mean, ref_sd = ref
        if row.fredholm is not None:
            band = max(0.01, 0.05 * abs(ref_det))
            if abs(row.fredholm - ref_det) > band:
                failures.append(
                    f"{cell}: fredholm {row.fredholm:.4f} outside "
                    f"{ref_det:.4f} +- {band:.4f}"
                )
        if row.mc_mean is not None:
            if abs(row.mc_mean - ref_mean) > 3.0 * ref_sd:
                failures.append(
                    f"{cell}: mc mean {row.mc_mean:.4f} outside "
                    f"{ref_mean:.4f} +- {3.0 * ref_sd:.4f}"
                )
    return failures


# ---------------------------------------------------------------------------
# artifacts


def _fmt(value, decimals=4, width=10) -> str:
    if value is None:
        return " " * width
    return f"{value:{width}.{decimals}f}"


def format_table(rows: list[ResultRow]) -> str:
    header = (
        f"{'case':<10} {'alpha':>6} {'fredholm':>10} {'mc_mean':>10} "
        f"{'mc_sd':>10} {'re_pct':>10} {'fred_s':>8} {'mc_s':>8}"
    )
    lines = [header, "-" * len(header)]
    for r in rows:
        alpha = r.alpha if isinstance(r.alpha, str) else f"{r.alpha:g}"
        lines.append(
            f"{r.case:<10} {alpha:>6} {_fmt(r.fredholm)} {_fmt(r.mc_mean)} "
            f"{_fmt(r.mc_sd)} {_fmt(r.rel_err_pct)} "
            f"{_fmt(r.fredholm_seconds, 3, 8)} {_fmt(r.mc_seconds, 3, 8)}"
        )
    return "\n".join(lines) + "\n"


def format_csv(rows: list[ResultRow]) -> str:
    out = ["case,alpha,fredholm,mc_mean,mc_sd,re_pct,fredholm_seconds,mc_seconds"]
    for r in rows:
        cells = [r.case, str(r.alpha)]
        for v in (r.fredholm, r.mc_mean, r.mc_sd, r.rel_err_pct,
                  r.fredholm_seconds, r.mc_seconds):
            cells.append("" if v is None else repr(float(v)))
        out.append(",".join(cells))
    return "\n".join(out) + "\n"


def reproduce_table(config_path: str, methods=METHODS, out_dir: str = ".",
                    check: bool = False):
    """Run a config end to end and write table.txt, table.csv, and
    diagnostics.json into out_dir. Returns (rows, failures); failures is
    empty unless check is set and bands were violated."""
    specs = load_config(config_path)
    t0 = time.perf_counter()
    rows, per_case = run_cases(specs, methods, with_diagnostics=True)
    elapsed = time.perf_counter() - t0

    diagnostics = {
        "config_path": config_path,
        "config": serialize_config(specs),  # self-describing artifact
        "methods": list(methods),
        "wall_seconds": elapsed,
        "cases": per_case,
    }

    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "table.txt"), "w", encoding="utf-8") as fh:
        fh.write(format_table(rows))
    with open(os.path.join(out_dir, "table.csv"), "w", encoding="utf-8") as fh:
        fh.write(format_csv(rows))

    failures = check_rows(specs, rows) if check else []
    diagnostics["check_failures"] = failures
    with open(os.path.join(out_dir, "diagnostics.json"), "w", encoding="utf-8") as fh:
        json.dump(diagnostics, fh, indent=2, default=float)
        fh.write("\n")
    return rows, failures


# ---------------------------------------------------------------------------
# selftest


def selftest(out=print) -> bool:
    """Fast internal consistency suite: likelihood oracles, identity laws,
    Q-function spot checks against simulation. Returns True when everything
    passes."""
    from .cases import CASES, gaussian_kl
    from .forward import brute_force_log_likelihood, log_likelihood
    from .fredholm import (
        divergence_fredholm,
        noncentral_chisq1_cdf,
        q_four_state,
        q_two_state,
    )
    from .models import sample_path
    from .montecarlo import estimate_renyi_mc
    from scipy.stats import ncx2

    ok = True

    def report(name, passed, detail=""):
        nonlocal ok
        passed = bool(passed)
        ok = ok and passed
        out(f"{'PASS' if passed else 'FAIL'}  {name}{'  ' + detail if detail else ''}")

    t1, t = CASES[1]
    path = sample_path(t1, 8, burn_in=10, seed=7)
    delta = abs(log_likelihood(t1, path.y, path.y_prev)
                - brute_force_log_likelihood(t1, path.y, path.y_prev))
    report("forward filter matches path-sum oracle", delta <= 1e-9, f"delta={delta:.2e}")

    est = estimate_renyi_mc(t1, t1, 1.5, cfg=None)
    report("identity law, simulation engine", est.mean == 0.0 and est.std_dev == 0.0)

    res = divergence_fredholm(t1, t1, 1.5)
    report("identity law, deterministic engine", res.value == 0.0)

    rng = np.random.default_rng(123)
    worst = 0.0
    for _ in range(5):
        x = float(rng.uniform(0, 20))
        lam = float(rng.uniform(0, 10))
        worst = max(worst, abs(noncentral_chisq1_cdf(x, lam) - ncx2.cdf(x, 1, lam)))
    report("noncentral chi-square CDF vs reference", worst <= 1e-10,
           f"max delta={worst:.2e}")

    ta_gen = ModelAParams(0.6, 0.7, (0.5, -0.5), (0.2, -0.1), (1.0, 1.4))
    ta_filt = ModelAParams(0.5, 0.5, (0.8, -0.2), (0.1, 0.3), (1.2, 0.9))
    worst = 0.0
    for _ in range(3):
        u = float(rng.normal())
        z = float(rng.uniform(0.2, 4.0))
        j = int(rng.integers(0, 2))
        qv = q_two_state(u, z, j, ta_gen, ta_filt)
        y = ta_gen.mu[j] + ta_gen.psi[j] * u + ta_gen.sigma[j] * rng.standard_normal(100000)
        num = np.exp(-0.5 * ((y - ta_filt.mu[0] - ta_filt.psi[0] * u) / ta_filt.sigma[0]) ** 2) / ta_filt.sigma[0]
        den = np.exp(-0.5 * ((y - ta_filt.mu[1] - ta_filt.psi[1] * u) / ta_filt.sigma[1]) ** 2) / ta_filt.sigma[1]
        mc = float(np.mean(num / den <= z))
        se = max(math.sqrt(mc * (1 - mc) / y.size), 1e-4)
        worst = max(worst, abs(qv - mc) / se)
    report("two-state Q vs indicator simulation", worst <= 4.0,
           f"worst={worst:.2f} s.e.")

    tb1, tb = CASES[7]
    worst = 0.0
    for _ in range(3):
        x = float(rng.uniform(0.1, 0.9))
        u = float(rng.normal())
        w = float(rng.uniform(0.05, 0.95))
        j = int(rng.integers(0, 2))
        k = int(rng.integers(0, 2))
        qv = q_four_state(x, u, w, j, k, tb1, tb)
        mu = tb1.mu
        y = (tb1.psi2 * mu[j] + tb1.psi1 * mu[k] + tb1.phi * u
             + tb1.sigma * rng.standard_normal(100000))
        pf = np.array([[1 - tb.p01, tb.p01], [tb.p10, 1 - tb.p10]])
        muf = tb.mu
        f = [np.exp(-0.5 * ((y - tb.psi2 * muf[i] - tb.psi1 * muf[jj] - tb.phi * u) / tb.sigma) ** 2)
             for i in (0, 1) for jj in (0, 1)]
        g = ((1 - x) * pf[0, 0] * w * f[0] - x * pf[0, 1] * w * f[1]
             + (1 - x) * pf[1, 0] * (1 - w) * f[2] - x * pf[1, 1] * (1 - w) * f[3])
        mc = float(np.mean(g <= 0))
        se = max(math.sqrt(mc * (1 - mc) / y.size), 1e-4)
        worst = max(worst, abs(qv - mc) / se)
    report("four-state Q vs indicator simulation", worst <= 4.0,
           f"worst={worst:.2f} s.e.")

    kl8 = gaussian_kl(2.0, 0.9, 1.0, 1.0)
    res = divergence_fredholm(*CASES[8], "kl")
    report("closed-form KL anchor (case 8)", abs(res.value - kl8) <= 0.02 * kl8,
           f"value={res.value:.5f} oracle={kl8:.5f}")
    return ok


# ---------------------------------------------------------------------------
# entry point


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="hmmdiv",
        description="Divergence rates between Markov switching models, "
                    "by simulation and by a deterministic Fredholm method.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a JSON config (or 'benchmark')")
    p_run.add_argument("config", help="path to config JSON, or 'benchmark'")
    p_run.add_argument("--methods", default="mc,fredholm",
                       help="comma-separated subset of mc,fredholm")
    p_run.add_argument("--check", action="store_true",
                       help="verify results against reference bands; "
                            "nonzero exit on any violation")
    p_run.add_argument("--out", default=".", help="output directory")

    sub.add_parser("selftest", help="run the built-in oracle and identity suite")
    sub.add_parser("print-defaults", help="print the bundled benchmark config")

    args = parser.parse_args(argv)

    if args.command == "print-defaults":
        json.dump(default_config(), sys.stdout, indent=2)
        sys.stdout.write("\n")
        return 0

    if args.command == "selftest":
        return 0 if selftest() else 1

    methods = tuple(m.strip() for m in args.methods.split(",") if m.strip())
    for m in methods:
        if m not in METHODS:
            print(f"error: unknown method {m!r}", file=sys.stderr)
            return 2
    try:
        rows, failures = reproduce_table(args.config, methods, args.out, args.check)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    print(format_table(rows), end="")
    if failures:
        print(f"\n{len(failures)} check failure(s):", file=sys.stderr)
        for f in failures:
            print(f"  {f}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
