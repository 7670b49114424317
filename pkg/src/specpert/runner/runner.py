"""Experiment execution, reports, sweeps and plot-data files."""
import copy
import csv
import itertools
import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..asymptotics import compare_fits, estimate_exponent, fit_two_sequence, fit_two_term
from ..checks import (
    EPS,
    check_lemma1_condition,
    check_theorem1_condition,
    coefficient_sum_check,
    extremal_J_check,
    frak_C_check,
    head_extremizer,
    homotopy_check,
    localization_check,
    sandwich_check,
    sign_of,
    stationarity_check,
    tail_extremizer,
)
from ..errors import CONFIG_INVALID, SpecPertError
from ..gen_eigen import solve_generalized
from ..kernel_expr import custom, kernel_from_config
from ..models import (
    AsymptoticLaw,
    PerturbationMatrix,
    Wobble,
    build_diagonal_K,
    build_power_law_perturbation,
    build_random_sign_perturbation,
    build_rank_one_perturbation,
    build_two_sequence_K,
    metric_perturbation_from_kernel,
    nystrom_model,
    split_sign,
)
from .config import CHECK_PARAMS, load_config, validate_config

REPORT_FILE = "report.json"
TIMINGS_FILE = "timings.json"
SUMMARY_FILE = "sweep_summary.csv"
SUMMARY_COLUMNS = ("sigma", "delta", "N", "delta_a", "delta_b", "c2_star", "passed_count",
                   "check_count", "exit_code")

DEFAULT_NS = (10, 50, 100)
DEFAULT_EXTREMAL_NS = (10, 20, 50, 100, 200)
DEFAULT_FRAK_NS = tuple(range(100, 1001, 100))


@dataclass
class ExperimentReport:
    """Everything a run produced. ``to_dict`` is the on-disk JSON.

    Timings and the raw spectra are kept on the object only, so the JSON
    is byte-identical between repeated runs.
    """

    config: dict
    model: dict = field(default_factory=dict)
    perturbation: dict = field(default_factory=dict)
    base_fit: dict = None
    perturbed_fit: dict = None
    verdict: dict = None
    c2_star: float = None
    checks: list = field(default_factory=list)
    artifacts: list = field(default_factory=list)
    exit_code: int = 0
    error: dict = None
    timings: dict = field(default_factory=dict, compare=False)
    data: dict = field(default_factory=dict, compare=False, repr=False)

    _FIELDS = ("config", "model", "perturbation", "base_fit", "perturbed_fit", "verdict", "c2_star",
               "checks", "artifacts", "exit_code", "error")

    def to_dict(self):
        return _clean({k: getattr(self, k) for k in self._FIELDS})

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, indent=2, allow_nan=False) + "\n"

    @classmethod
    def from_dict(cls, d):
        unknown = set(d) - set(cls._FIELDS)
        if unknown:
            raise ValueError(f"unknown report fields {sorted(unknown)}")
        return cls(**copy.deepcopy(d))

    @property
    def passed_count(self):
        return sum(1 for c in self.checks if c.get("passed"))


def load_report(path):
    with open(path, encoding="utf-8") as fh:
        return ExperimentReport.from_dict(json.load(fh))


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    return obj


# --- building blocks --------------------------------------------------------

def _law(cfg):
    delta = math.inf if cfg.get("delta") is None else cfg["delta"]
    return AsymptoticLaw(cfg["a"], cfg["b"], cfg["exponent"], delta)


def build_model(cfg, backend="lapack"):
    m = cfg["model"]
    if m["type"] == "DIAGONAL":
        w = m["wobble"]
        return build_diagonal_K(_law(m["law"]), m["N"], Wobble(w["kind"], w["c"], w["seed"]))
    if m["type"] == "TWO_SEQUENCE":
        return build_two_sequence_K(_law(m["law1"]), _law(m["law2"]), m["N"])
    K = nystrom_model(kernel_from_config(m["kernel"]), m["N"], m["rule"], backend=backend)
    if m["retain"] is not None and m["retain"] < K.dim:
        K = K.truncated(m["retain"])
    return K


def build_perturbation(cfg, K):
    p = cfg["perturbation"]
    N = K.dim
    recipe = p["recipe"]
    if recipe == "zero":
        return PerturbationMatrix.zero(N)
    if recipe == "rank_one":
        return build_rank_one_perturbation(p["sigma"], p["delta"], N, p["mode"])
    if recipe == "random_sign":
        return build_random_sign_perturbation(p["sigma"], p["delta"], N, p["seed"])
    if recipe == "power_law":
        return build_power_law_perturbation(p["sigma"], p["decay"], N)
    if K.nystrom is None:
        raise SpecPertError(CONFIG_INVALID, "perturbation.recipe: 'kernel' needs a NYSTROM model")
    return metric_perturbation_from_kernel(K, custom(p["kernel"]))


def _default_delta(cfg):
    p, m = cfg["perturbation"], cfg["model"]
    if "delta" in p:
        return p["delta"]
    law = m.get("law") or m.get("law1")
    if law and law.get("delta") is not None:
        return law["delta"]
    return 1.0


def _exponent(cfg, K):
    if cfg["fit"]["exponent"] is not None:
        return cfg["fit"]["exponent"]
    if K.law is not None:
        return K.law.exponent
    return estimate_exponent(K.lambdas)


def _fits(cfg, K, values, exponent):
    f = cfg["fit"]
    if K.law2 is not None:
        base = fit_two_sequence(K.lambdas, exponent, f["window"])
        pert = fit_two_sequence(values, exponent, f["window"])
        verdicts = {s: compare_fits(getattr(base, s), getattr(pert, s), f["tol_a"], f["tol_b"])
                    for s in ("odd", "even")}
        verdict = {s: v.to_dict() for s, v in verdicts.items()}
        verdict["preserved"] = all(v.preserved for v in verdicts.values())
        return ({"odd": base.odd, "even": base.even}, {"odd": pert.odd, "even": pert.even}, verdict)
    base = fit_two_term(K.lambdas, exponent, f["window"])
    pert = fit_two_term(values, exponent, f["window"])
    return base, pert, compare_fits(base, pert, f["tol_a"], f["tol_b"]).to_dict()


def _fit_dict(fit):
    if isinstance(fit, dict):
        return {k: v.to_dict() for k, v in fit.items()}
    return fit.to_dict()


def c2_star(lambdas, values, delta):
    """Smallest ``c`` with ``|lam_n / lambda_n - 1| <= c n^-(1+delta)`` for all n."""
    n = np.arange(1, lambdas.size + 1, dtype=np.float64)
    return float(np.max(np.abs(values / lambdas - 1.0) * n ** (1.0 + delta)))


# --- check suite ------------------------------------------------------------

def _indices(spec, default, N, lo=1):
    ns = [int(v) for v in spec.get("ns", default) if lo <= v <= N]
    if not ns:
        raise SpecPertError(CONFIG_INVALID, f"checks.{spec['name']}: no index in range {lo}..{N}")
    return sorted(set(ns))


def _renamed(report, suffix):
    report.check_name = f"{report.check_name}{suffix}"
    return report


def _run_check(spec, ctx):
    K, B, S = ctx["K"], ctx["B"], ctx["S"]
    name = spec["name"]
    delta = spec.get("delta", ctx["delta"])
    if name == "lemma1_condition":
        return [check_lemma1_condition(B, delta)]
    if name == "theorem1_condition":
        return [check_theorem1_condition(B, delta)]
    if name == "localization":
        return [localization_check(K, S, delta, rtol=spec.get("rtol", 100 * EPS))]
    if name == "sandwich":
        return [sandwich_check(K, B, slack=spec.get("slack", 1e-10), backend=ctx["backend"])]
    if name == "homotopy":
        steps = spec.get("steps", ctx["steps"])
        return [homotopy_check(K, B, steps, margin=spec.get("margin", 0.1), workers=ctx["workers"],
                               backend=ctx["backend"])]
    if name == "frak_C":
        ns = _indices(spec, DEFAULT_FRAK_NS, K.dim, lo=2)
        return [frak_C_check(K, delta, ns, c=spec.get("c", 1.0), side=spec.get("side", "HEAD"),
                             ratio_limit=spec.get("ratio_limit", 10.0), exponent=ctx["exponent"])]

    bp, bm = ctx["parts"]()
    if name == "stationarity":
        out = []
        for n in _indices(spec, DEFAULT_NS, K.dim):
            tol = spec.get("tol", 1e-8)
            out.append(_renamed(stationarity_check(K, bp, head_extremizer(K, bp, n), tol=tol), f"@{n}"))
            out.append(_renamed(stationarity_check(K, bm, tail_extremizer(K, bm, n), tol=tol), f"@{n}"))
        return out
    if name == "coefficient_sum":
        out = []
        for n in _indices(spec, DEFAULT_NS, K.dim):
            c = spec.get("c")
            out.append(_renamed(coefficient_sum_check(K, bp, head_extremizer(K, bp, n), delta, c=c), f"@{n}"))
            out.append(_renamed(coefficient_sum_check(K, bm, tail_extremizer(K, bm, n), delta, c=c), f"@{n}"))
        return out
    if name == "extremal_J":
        ns = _indices(spec, DEFAULT_EXTREMAL_NS, K.dim)
        parts = [p for p in (bp, bm) if sign_of(p) != "ZERO"] or [bp]
        return [extremal_J_check(K, p, delta, ns) for p in parts]
    raise SpecPertError(CONFIG_INVALID, f"unknown check {name!r}")


# --- plot data --------------------------------------------------------------

def _fmt(v):
    if isinstance(v, str):
        return v
    if isinstance(v, (bool, np.bool_, int, np.integer)):
        return str(int(v))
    return "%.17g" % float(v)


def write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def emit_plotdata(report, directory):
    """Write spectrum and localisation columns; returns the file names written.

    Two-sequence reports get ``spectrum_odd.csv`` and ``spectrum_even.csv``
    instead of a single ``spectrum.csv``.
    """
    data = report.data
    if not data or "base_fit" not in data:
        raise ValueError("report has no in-memory fits to plot")
    lam, pert, exponent = data["lambdas"], data["values"], data["exponent"]
    base_fit, pert_fit = data["base_fit"], data["perturbed_fit"]
    os.makedirs(directory, exist_ok=True)
    header = ("n", "lambda", "lambda_pert", "mu_base", "mu_pert", "residual_base", "residual_pert")
    mu_b = lam ** (-1.0 / exponent)
    mu_p = pert ** (-1.0 / exponent)
    ranks = np.arange(1, lam.size + 1)
    written = []

    def rows(sel, fb, fp):
        r = ranks[sel]
        res_b = mu_b[sel] - (fb.a_hat * r + fb.b_hat)
        res_p = mu_p[sel] - (fp.a_hat * r + fp.b_hat)
        return zip(r, lam[sel], pert[sel], mu_b[sel], mu_p[sel], res_b, res_p)

    if isinstance(base_fit, dict):
        for side, parity in (("odd", 1), ("even", 0)):
            fname = f"spectrum_{side}.csv"
            write_csv(os.path.join(directory, fname), header,
                      rows(ranks % 2 == parity, base_fit[side], pert_fit[side]))
            written.append(fname)
    else:
        write_csv(os.path.join(directory, "spectrum.csv"), header,
                  rows(np.ones(lam.size, dtype=bool), base_fit, pert_fit))
        written.append("spectrum.csv")

    half = data["c2"] * ranks.astype(np.float64) ** (-(1.0 + data["delta"]))
    write_csv(os.path.join(directory, "localization.csv"), ("n", "delta_lower", "delta_upper", "lambda_pert"),
              zip(ranks, lam * (1.0 - half), lam * (1.0 + half), pert))
    written.append("localization.csv")
    return written


# --- run --------------------------------------------------------------------

def _apply_overrides(cfg, seed=None, formats=None):
    cfg = copy.deepcopy(cfg)
    if seed is not None:
        if cfg["perturbation"]["recipe"] == "random_sign":
            cfg["perturbation"]["seed"] = int(seed)
        if cfg["model"]["type"] == "DIAGONAL":
            cfg["model"]["wobble"]["seed"] = int(seed)
    if formats is not None:
        cfg["output"]["formats"] = sorted(set(formats))
    return cfg


def run_config(cfg, out_dir=None, *, only=None, seed=None, formats=None, workers=1, write=True):
    """Execute a validated config. Solver errors end up in ``report.error`` with exit code 2."""
    cfg = _apply_overrides(cfg, seed, formats)
    if only is not None:
        for name in only:
            if name not in CHECK_PARAMS:
                raise SpecPertError(CONFIG_INVALID, f"--only: unknown check {name!r}")
        known = {c["name"] for c in cfg["checks"]}
        cfg["checks"] = [c for c in cfg["checks"] if c["name"] in only] + \
            [{"name": n} for n in dict.fromkeys(only) if n not in known]
    out_dir = out_dir or cfg["output"]["directory"]
    report = ExperimentReport(config=cfg)
    timings = report.timings
    backend = cfg["solver"]["backend"]
    try:
        t0 = time.perf_counter()
        K = build_model(cfg, backend)
        B = build_perturbation(cfg, K)
        timings["build"] = time.perf_counter() - t0
        report.model = {"type": K.provenance, "dim": K.dim, "lambda_1": float(K.lambdas[0])}
        report.perturbation = {"tag": dict(B.tag), "norm_2": float(np.linalg.norm(B.array, 2)),
                               "sign": sign_of(B)}

        t0 = time.perf_counter()
        S = solve_generalized(K, B, vectors=False, backend=backend)
        timings["solve"] = time.perf_counter() - t0
        delta = _default_delta(cfg)
        exponent = _exponent(cfg, K)
        report.model["exponent"] = exponent
        report.c2_star = c2_star(K.lambdas, S.values, delta)

        t0 = time.perf_counter()
        base, pert, verdict = _fits(cfg, K, S.values, exponent)
        report.base_fit, report.perturbed_fit, report.verdict = _fit_dict(base), _fit_dict(pert), verdict
        timings["fit"] = time.perf_counter() - t0
        report.data = {"lambdas": K.lambdas, "values": S.values, "exponent": exponent, "delta": delta,
                       "c2": report.c2_star, "base_fit": base, "perturbed_fit": pert}

        split = {}

        def parts():
            if "p" not in split:
                split["p"] = split_sign(B)
            return split["p"]

        ctx = {"K": K, "B": B, "S": S, "delta": delta, "exponent": exponent, "backend": backend,
               "steps": cfg["solver"]["homotopy_steps"], "workers": workers, "parts": parts}
        for spec in cfg["checks"]:
            t0 = time.perf_counter()
            try:
                results = _run_check(spec, ctx)
            except SpecPertError as exc:
                report.checks.append({"check_name": spec["name"], "passed": False,
                                      "error": {"code": exc.code, "message": exc.message}})
                report.error = {"code": exc.code, "message": exc.message}
            else:
                report.checks.extend(r.to_dict() for r in results)
            timings[f"check:{spec['name']}"] = time.perf_counter() - t0
    except SpecPertError as exc:
        report.error = {"code": exc.code, "message": exc.message}

    if report.error is not None:
        report.exit_code = 2
    else:
        report.exit_code = 0 if all(c["passed"] for c in report.checks) else 1
    if write:
        _write(report, out_dir)
    return report


def _write(report, out_dir):
    os.makedirs(out_dir, exist_ok=True)
    formats = report.config["output"]["formats"]
    artifacts = []
    if "csv" in formats:
        if report.data:
            artifacts.extend(emit_plotdata(report, out_dir))
        write_csv(os.path.join(out_dir, "checks.csv"), ("check_name", "passed", "worst_index", "min_margin"),
                  [(c["check_name"], int(c["passed"]), c.get("worst_index", 0), _min_margin(c))
                   for c in report.checks])
        artifacts.append("checks.csv")
    if "json" in formats:
        artifacts.extend([REPORT_FILE, TIMINGS_FILE])
    report.artifacts = artifacts
    if "json" in formats:
        with open(os.path.join(out_dir, REPORT_FILE), "w", encoding="utf-8") as fh:
            fh.write(report.to_json())
        with open(os.path.join(out_dir, TIMINGS_FILE), "w", encoding="utf-8") as fh:
            json.dump(report.timings, fh, sort_keys=True, indent=2)


def _min_margin(check):
    margins = [m for _, m in check.get("per_index_margins", []) if isinstance(m, float)]
    return min(margins) if margins else math.nan


def run(config_path, out_dir=None, **kwargs):
    """Load, validate and execute ``config_path``. Config errors raise CONFIG_INVALID."""
    return run_config(load_config(config_path), out_dir, **kwargs)


# --- sweep ------------------------------------------------------------------

def _grid(cfg, grid):
    grid = dict(grid if grid is not None else cfg.get("sweep", {}))
    p = cfg["perturbation"]
    if "sigma" in grid and "sigma" not in p:
        raise SpecPertError(CONFIG_INVALID, f"sweep.sigma: recipe {p['recipe']} has no sigma")
    sig = grid.get("sigma", [p.get("sigma")])
    dels = grid.get("delta", [_default_delta(cfg)])
    ns = grid.get("N", [cfg["model"]["N"]])
    return list(itertools.product(sig, dels, ns))


def _point_config(cfg, sigma, delta, N):
    c = copy.deepcopy(cfg)
    c.pop("sweep", None)
    if sigma is not None and "sigma" in c["perturbation"]:
        c["perturbation"]["sigma"] = float(sigma)
    c["perturbation"]["delta"] = float(delta)
    c["model"]["N"] = int(N)
    return c


def _summary_row(sigma, delta, N, report):
    da = db = math.nan
    v = report.verdict
    if v is not None:
        if "odd" in v:
            da = max((v[s]["delta_a"] for s in ("odd", "even")), key=abs)
            db = max((v[s]["delta_b"] for s in ("odd", "even")), key=abs)
        else:
            da, db = v["delta_a"], v["delta_b"]
    c2 = report.c2_star if report.c2_star is not None else math.nan
    sigma = math.nan if sigma is None else sigma
    return (float(sigma), float(delta), int(N), float(da), float(db), float(c2),
            report.passed_count, len(report.checks), report.exit_code)


def sweep(config, grid=None, out_dir=None, *, workers=1, seed=None, formats=None):
    """Run every point of the (sigma, delta, N) grid; returns ``(reports, summary_path)``.

    ``config`` is a path or a validated config dict. Points run in parallel
    (threads) and a failing point does not stop the others.
    """
    cfg = load_config(config) if isinstance(config, (str, os.PathLike)) else validate_config(config)
    out_dir = out_dir or cfg["output"]["directory"]
    points = _grid(cfg, grid)

    def one(i_point):
        i, (s, d, n) = i_point
        pcfg = _point_config(cfg, s, d, n)
        point_dir = os.path.join(out_dir, f"point_{i:03d}")
        try:
            return run_config(validate_config(pcfg), point_dir, seed=seed, formats=formats)
        except SpecPertError as exc:
            return ExperimentReport(config=pcfg, exit_code=2, error={"code": exc.code, "message": exc.message})

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            reports = list(pool.map(one, enumerate(points)))
    else:
        reports = [one(p) for p in enumerate(points)]
    os.makedirs(out_dir, exist_ok=True)
    summary = os.path.join(out_dir, SUMMARY_FILE)
    write_csv(summary, SUMMARY_COLUMNS, [_summary_row(s, d, n, r) for (s, d, n), r in zip(points, reports)])
    return reports, summary
