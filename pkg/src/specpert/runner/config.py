"""JSON experiment configs.

Schema (keys not listed here are rejected)::

    {
      "name": "demo",                              optional label
      "model": {                                   one of
        "type": "DIAGONAL", "N": 2000,
            "law": {"a": "pi", "b": "-pi/2", "exponent": 2, "delta": 1},
            "wobble": {"kind": "NONE|DETERMINISTIC|RANDOM", "c": 0.1, "seed": 1}
        "type": "TWO_SEQUENCE", "N": 2000, "law1": {...}, "law2": {...}
        "type": "NYSTROM", "N": 1000, "kernel": "BROWNIAN_MOTION" | {"name": "CUSTOM", "expression": "..."},
            "rule": "GAUSS_LEGENDRE|MIDPOINT", "retain": 250
      },
      "perturbation": {"recipe": "zero|rank_one|random_sign|power_law|kernel",
                       "sigma": 0.1, "delta": 1, "mode": "LEMMA1|THEOREM1", "seed": 42,
                       "decay": 0.25, "kernel": "<expression>"},
      "solver": {"backend": "lapack|native", "rtol": 1e-10, "homotopy_steps": 11},
      "fit": {"exponent": 2, "window": [50, 1000], "tol_a": null, "tol_b": null},
      "checks": ["all"] | ["sandwich", {"name": "stationarity", "ns": [10, 50]}, ...],
      "output": {"directory": "out", "formats": ["json", "csv"]},
      "sweep": {"sigma": [...], "delta": [...], "N": [...]}
    }

``retain`` keeps only the leading Nyström eigenpairs; the discrete tail is
quadrature noise that no eigensolver resolves to relative accuracy.
Numbers may be given as constant expressions (``"pi"``, ``"-pi/2"``).
"""
import copy
import json
import math

from ..errors import CONFIG_INVALID, SpecPertError
from ..kernel_expr import parse_constant

MAX_N = 5000

ALL_CHECKS = (
    "lemma1_condition",
    "theorem1_condition",
    "localization",
    "sandwich",
    "stationarity",
    "coefficient_sum",
    "frak_C",
    "extremal_J",
    "homotopy",
)

# allowed parameters per check; "delta" defaults to the perturbation's delta
CHECK_PARAMS = {
    "lemma1_condition": {"delta"},
    "theorem1_condition": {"delta"},
    "localization": {"delta", "rtol"},
    "sandwich": {"slack"},
    "stationarity": {"ns", "tol"},
    "coefficient_sum": {"delta", "ns", "c"},
    "frak_C": {"delta", "ns", "c", "side", "ratio_limit"},
    "extremal_J": {"delta", "ns"},
    "homotopy": {"steps", "margin"},
}

RECIPES = ("zero", "rank_one", "random_sign", "power_law", "kernel")
_RECIPE_KEYS = {
    "zero": set(),
    "rank_one": {"sigma", "delta", "mode"},
    "random_sign": {"sigma", "delta", "seed"},
    "power_law": {"sigma", "decay", "delta"},
    "kernel": {"kernel", "delta"},
}
_TOP = {"name", "model", "perturbation", "solver", "fit", "checks", "output", "sweep"}


def _fail(path, msg):
    raise SpecPertError(CONFIG_INVALID, f"{path}: {msg}")


def _obj(cfg, path, allowed, required=()):
    if not isinstance(cfg, dict):
        _fail(path, "expected an object")
    for k in sorted(set(cfg) - set(allowed)):
        _fail(f"{path}.{k}", "unknown key")
    for k in required:
        if k not in cfg:
            _fail(f"{path}.{k}", "missing")
    return cfg


def _num(value, path, *, positive=False, nonneg=False):
    try:
        v = parse_constant(value)
    except SpecPertError as exc:
        _fail(path, exc.message)
    if not math.isfinite(v):
        _fail(path, "must be finite")
    if positive and not v > 0:
        _fail(path, "must be positive")
    if nonneg and v < 0:
        _fail(path, "must be nonnegative")
    return v


def _int(value, path, lo=None, hi=None):
    if isinstance(value, bool) or not isinstance(value, int):
        _fail(path, "expected an integer")
    if lo is not None and value < lo:
        _fail(path, f"must be >= {lo}")
    if hi is not None and value > hi:
        _fail(path, f"must be <= {hi}")
    return value


def _choice(value, path, options):
    if not isinstance(value, str) or value.upper() not in {o.upper() for o in options}:
        _fail(path, f"expected one of {', '.join(options)}")
    return value.upper()


def _law(cfg, path):
    _obj(cfg, path, {"a", "b", "exponent", "delta"}, ("a", "b", "exponent"))
    out = {"a": _num(cfg["a"], f"{path}.a", positive=True),
           "b": _num(cfg["b"], f"{path}.b"),
           "exponent": _num(cfg["exponent"], f"{path}.exponent", positive=True)}
    delta = cfg.get("delta")
    out["delta"] = None if delta is None else _num(delta, f"{path}.delta", positive=True)
    return out


def _model(cfg):
    path = "model"
    _obj(cfg, path, {"type", "N", "law", "wobble", "law1", "law2", "kernel", "rule", "retain"}, ("type", "N"))
    kind = _choice(cfg["type"], f"{path}.type", ("DIAGONAL", "TWO_SEQUENCE", "NYSTROM"))
    out = {"type": kind, "N": _int(cfg["N"], f"{path}.N", 20, MAX_N)}
    allowed = {"DIAGONAL": {"law", "wobble"}, "TWO_SEQUENCE": {"law1", "law2"},
               "NYSTROM": {"kernel", "rule", "retain"}}[kind]
    for k in sorted(set(cfg) - {"type", "N"} - allowed):
        _fail(f"{path}.{k}", f"not valid for a {kind} model")
    if kind == "DIAGONAL":
        if "law" not in cfg:
            _fail(f"{path}.law", "missing")
        out["law"] = _law(cfg["law"], f"{path}.law")
        w = _obj(cfg.get("wobble", {}), f"{path}.wobble", {"kind", "c", "seed"})
        out["wobble"] = {
            "kind": _choice(w.get("kind", "NONE"), f"{path}.wobble.kind", ("NONE", "DETERMINISTIC", "RANDOM")),
            "c": _num(w.get("c", 0.0), f"{path}.wobble.c", nonneg=True),
            "seed": None if w.get("seed") is None else _int(w["seed"], f"{path}.wobble.seed", 0),
        }
    elif kind == "TWO_SEQUENCE":
        for k in ("law1", "law2"):
            if k not in cfg:
                _fail(f"{path}.{k}", "missing")
            out[k] = _law(cfg[k], f"{path}.{k}")
    else:
        if "kernel" not in cfg:
            _fail(f"{path}.kernel", "missing")
        kern = cfg["kernel"]
        if isinstance(kern, dict):
            _obj(kern, f"{path}.kernel", {"name", "expression"}, ("name",))
        elif not isinstance(kern, str):
            _fail(f"{path}.kernel", "expected a name or an object")
        out["kernel"] = copy.deepcopy(kern)
        out["rule"] = _choice(cfg.get("rule", "GAUSS_LEGENDRE"), f"{path}.rule", ("GAUSS_LEGENDRE", "MIDPOINT"))
        out["retain"] = None if cfg.get("retain") is None else _int(cfg["retain"], f"{path}.retain", 20, MAX_N)
    return out


def _perturbation(cfg):
    path = "perturbation"
    _obj(cfg, path, {"recipe", "sigma", "delta", "mode", "seed", "decay", "kernel"}, ("recipe",))
    recipe = cfg["recipe"]
    if recipe not in RECIPES:
        _fail(f"{path}.recipe", f"expected one of {', '.join(RECIPES)}")
    for k in sorted(set(cfg) - {"recipe"} - _RECIPE_KEYS[recipe]):
        _fail(f"{path}.{k}", f"not a parameter of recipe {recipe}")
    out = {"recipe": recipe}
    if "sigma" in _RECIPE_KEYS[recipe]:
        out["sigma"] = _num(cfg.get("sigma", 0.0), f"{path}.sigma")
    if "delta" in cfg:
        out["delta"] = _num(cfg["delta"], f"{path}.delta", positive=True)
    elif recipe in ("rank_one", "random_sign"):
        _fail(f"{path}.delta", "missing")
    if recipe == "rank_one":
        out["mode"] = _choice(cfg.get("mode", "THEOREM1"), f"{path}.mode", ("LEMMA1", "THEOREM1"))
    if recipe == "random_sign":
        out["seed"] = _int(cfg.get("seed", 0), f"{path}.seed", 0)
    if recipe == "power_law":
        if "decay" not in cfg:
            _fail(f"{path}.decay", "missing")
        out["decay"] = _num(cfg["decay"], f"{path}.decay", positive=True)
    if recipe == "kernel":
        if not isinstance(cfg.get("kernel"), str):
            _fail(f"{path}.kernel", "expected an expression string")
        out["kernel"] = cfg["kernel"]
    return out


def _solver(cfg):
    path = "solver"
    _obj(cfg, path, {"backend", "rtol", "homotopy_steps"})
    return {"backend": _choice(cfg.get("backend", "lapack"), f"{path}.backend", ("lapack", "native")).lower(),
            "rtol": _num(cfg.get("rtol", 1e-10), f"{path}.rtol", positive=True),
            "homotopy_steps": _int(cfg.get("homotopy_steps", 11), f"{path}.homotopy_steps", 2, 1001)}


def _fit(cfg, N):
    path = "fit"
    _obj(cfg, path, {"exponent", "window", "tol_a", "tol_b"})
    out = {"exponent": None, "window": None, "tol_a": None, "tol_b": None}
    if cfg.get("exponent") is not None:
        out["exponent"] = _num(cfg["exponent"], f"{path}.exponent", positive=True)
    if cfg.get("window") is not None:
        w = cfg["window"]
        if not isinstance(w, list) or len(w) != 2:
            _fail(f"{path}.window", "expected [n_min, n_max]")
        lo = _int(w[0], f"{path}.window[0]", 2, N)
        hi = _int(w[1], f"{path}.window[1]", lo, N)
        out["window"] = [lo, hi]
    for k in ("tol_a", "tol_b"):
        if cfg.get(k) is not None:
            out[k] = _num(cfg[k], f"{path}.{k}", positive=True)
    return out


def _ns(value, path):
    # indices beyond the model dimension are dropped at run time (sweeps vary N)
    if not isinstance(value, list) or not value:
        _fail(path, "expected a non-empty list of indices")
    return [_int(v, f"{path}[{i}]", 1, MAX_N) for i, v in enumerate(value)]


def _checks(cfg):
    if cfg == "all":
        cfg = ["all"]
    if not isinstance(cfg, list):
        _fail("checks", "expected a list")
    out = []
    for i, item in enumerate(cfg):
        path = f"checks[{i}]"
        if item == "all":
            out.extend({"name": name} for name in ALL_CHECKS)
            continue
        if isinstance(item, str):
            item = {"name": item}
        if not isinstance(item, dict) or "name" not in item:
            _fail(path, "expected a check name or an object with 'name'")
        name = item["name"]
        if name not in CHECK_PARAMS:
            _fail(f"{path}.name", f"unknown check {name!r}")
        _obj(item, path, CHECK_PARAMS[name] | {"name"})
        spec = {"name": name}
        for k, v in item.items():
            if k == "name":
                continue
            if k == "ns":
                spec[k] = _ns(v, f"{path}.ns")
            elif k == "steps":
                spec[k] = _int(v, f"{path}.steps", 2, 1001)
            elif k == "side":
                spec[k] = _choice(v, f"{path}.side", ("HEAD", "TAIL"))
            else:
                spec[k] = _num(v, f"{path}.{k}", positive=True)
        out.append(spec)
    return out


def _output(cfg):
    path = "output"
    _obj(cfg, path, {"directory", "formats"})
    directory = cfg.get("directory", "out")
    if not isinstance(directory, str) or not directory:
        _fail(f"{path}.directory", "expected a path")
    formats = cfg.get("formats", ["json"])
    if isinstance(formats, str):
        formats = [formats]
    if not isinstance(formats, list) or not formats:
        _fail(f"{path}.formats", "expected a list")
    for i, f in enumerate(formats):
        if f not in ("json", "csv"):
            _fail(f"{path}.formats[{i}]", "expected 'json' or 'csv'")
    return {"directory": directory, "formats": sorted(set(formats))}


def _sweep(cfg):
    path = "sweep"
    _obj(cfg, path, {"sigma", "delta", "N"})
    out = {}
    for k, v in cfg.items():
        if not isinstance(v, list) or not v:
            _fail(f"{path}.{k}", "expected a non-empty list")
        if k == "N":
            out[k] = [_int(x, f"{path}.N[{i}]", 20, MAX_N) for i, x in enumerate(v)]
        else:
            out[k] = [_num(x, f"{path}.{k}[{i}]", positive=(k == "delta")) for i, x in enumerate(v)]
    return out


def validate_config(raw):
    """Check ``raw`` against the schema and return a normalised copy with defaults filled in."""
    _obj(raw, "config", _TOP, ("model", "perturbation"))
    name = raw.get("name", "experiment")
    if not isinstance(name, str):
        _fail("name", "expected a string")
    model = _model(raw["model"])
    cfg = {
        "name": name,
        "model": model,
        "perturbation": _perturbation(raw["perturbation"]),
        "solver": _solver(raw.get("solver", {})),
        "fit": _fit(raw.get("fit", {}), model["N"]),
        "checks": _checks(raw.get("checks", [])),
        "output": _output(raw.get("output", {})),
    }
    if "sweep" in raw:
        cfg["sweep"] = _sweep(raw["sweep"])
    return cfg


def load_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise SpecPertError(CONFIG_INVALID, f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from None
    return validate_config(raw)
