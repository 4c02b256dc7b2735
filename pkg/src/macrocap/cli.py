"""Command-line front end: JSON config in, CSV sweep plus run manifest out.

Usage::

    macrocap run --config cfg.json --out result.csv
    macrocap validate --config cfg.json
    macrocap preset --list
    macrocap preset --show S3

Exit codes: 0 ok, 1 configuration error, 2 at least one engine failed
(the failing cells hold ``nan`` and the run continues).
"""

import argparse
import copy
import csv
import datetime
import hashlib
import io
import json
import math
import platform
import sys
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .capacity_approx import approx_capacity
from .capacity_bounds import MAX_BOUND_COLUMNS, high_snr_approx, jensen_bound, low_snr_approx
from .capacity_exact import exact_capacity_details
from .channel import (
    SCENARIO_ALPHAS,
    CorrelationSpec,
    DropGeometry,
    ScenarioSpec,
    apply_correlation,
    noise_power,
)
from .errors import ConfigError, MacrocapError
from .montecarlo import default_workers, mc_capacity

ENGINES = ("exact", "approx", "bound", "lowsnr", "highsnr", "mc")
COLUMNS = ("rho_db", "exact_bits", "approx_bits", "jensen_bits",
           "lowsnr_bits", "highsnr_bits", "mc_bits", "mc_stderr")
_ENGINE_COLUMN = {"exact": "exact_bits", "approx": "approx_bits", "bound": "jensen_bits",
                  "lowsnr": "lowsnr_bits", "highsnr": "highsnr_bits", "mc": "mc_bits"}
DEFAULT_MC_TRIALS = 100_000
EXIT_OK, EXIT_CONFIG, EXIT_ENGINE = 0, 1, 2

_DROP_FIELDS = {
    "n_bs": int, "antennas_per_bs": int, "n_users": int, "antennas_per_user": int,
    "shadowing_db": float, "pathloss_exp": float, "target_snr_db": float,
    "coverage": float, "calibration_samples": int, "seed": int,
}
_SCENARIO_KEYS = {"kind", "preset", "rho_db", "powers", "alphas", "traces", "n_r",
                  "table_id", "geometry", *_DROP_FIELDS}
_TOP_KEYS = {"scenario", "engines", "mc_trials", "seed", "output", "correlation"}


def _sweep(start, stop, step):
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    return [start + i * step for i in range(n)]


def _table_preset(sid):
    return {
        "scenario": {"preset": sid, "rho_db": {"start": 0, "stop": 20, "step": 5}},
        "engines": list(ENGINES),
        "mc_trials": DEFAULT_MC_TRIALS,
        "seed": 1,
    }


PRESETS = {sid: _table_preset(sid) for sid in sorted(SCENARIO_ALPHAS)}
PRESETS["drop-3x3"] = {
    "scenario": {"kind": "random-drop", "n_bs": 3, "n_users": 3, "seed": 1,
                 "rho_db": {"start": 0, "stop": 25, "step": 5}},
    "engines": ["approx", "bound", "mc"],
    "mc_trials": DEFAULT_MC_TRIALS,
    "seed": 1,
}
PRESETS["drop-6x6"] = {
    "scenario": {"kind": "random-drop", "n_bs": 3, "antennas_per_bs": 2, "n_users": 6, "seed": 1,
                 "rho_db": {"start": 0, "stop": 25, "step": 5}},
    "engines": ["bound", "lowsnr", "highsnr"],
    "mc_trials": DEFAULT_MC_TRIALS,
    "seed": 1,
}
_PRESET_NOTES = {sid: "two users, three receive sites, alphas=%g/%g, power ratio %g" % SCENARIO_ALPHAS[sid]
                 for sid in SCENARIO_ALPHAS}
_PRESET_NOTES["drop-3x3"] = "random drop, 3 single-antenna sites, 3 users"
_PRESET_NOTES["drop-6x6"] = "random drop, 3 two-antenna sites, 6 users, bound engines only"


@dataclass
class RunConfig:
    """Validated run description."""

    scenario: ScenarioSpec
    engines: tuple
    mc_trials: int = DEFAULT_MC_TRIALS
    seed: int = 0
    output: str = None
    correlation: CorrelationSpec = None
    raw: dict = field(default_factory=dict, repr=False)

    def power_matrix(self):
        P = self.scenario.power_matrix()
        if self.correlation is not None:
            P = apply_correlation(P, self.correlation)
        return P


@dataclass
class CapacityResult:
    """Per-SNR engine outputs (bits/s/Hz); ``None`` marks an engine not run."""

    rho_db: float
    values: dict
    mc_stderr: float = None
    jittered: bool = None
    timings: dict = field(default_factory=dict)
    errors: dict = field(default_factory=dict)


class _Checker:
    """Collects field-path errors instead of stopping at the first one."""

    def __init__(self):
        self.errors = []

    def fail(self, path, msg):
        self.errors.append(f"{path}: {msg}")

    def number(self, obj, key, path, kind=float, positive=False, nonneg=False, default=None):
        if key not in obj:
            return default
        v = obj[key]
        ok = isinstance(v, (int, float)) and not isinstance(v, bool)
        if ok and kind is int and not float(v).is_integer():
            ok = False
        if not ok or not math.isfinite(v):
            self.fail(f"{path}.{key}", f"expected {'an integer' if kind is int else 'a finite number'}, got {v!r}")
            return default
        v = kind(v)
        if positive and not v > 0:
            self.fail(f"{path}.{key}", f"must be > 0, got {v}")
        if nonneg and v < 0:
            self.fail(f"{path}.{key}", f"must be >= 0, got {v}")
        return v

    def vector(self, obj, key, path, positive=True):
        v = obj.get(key)
        if not isinstance(v, list) or not v:
            self.fail(f"{path}.{key}", "expected a non-empty list of numbers")
            return None
        out = []
        for j, x in enumerate(v):
            if isinstance(x, bool) or not isinstance(x, (int, float)) or not math.isfinite(x):
                self.fail(f"{path}.{key}[{j}]", f"expected a finite number, got {x!r}")
            elif positive and not x > 0:
                self.fail(f"{path}.{key}[{j}]", f"must be > 0, got {x}")
            else:
                out.append(float(x))
        return tuple(out) if len(out) == len(v) else None

    def unknown(self, obj, allowed, path):
        for k in sorted(set(obj) - set(allowed)):
            self.fail(f"{path}.{k}" if path else k, "unknown field")


def _parse_rho(chk, obj):
    v = obj.get("rho_db")
    if v is None:
        chk.fail("scenario.rho_db", "required")
        return ()
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        v = [v]
    if isinstance(v, dict):
        chk.unknown(v, {"start", "stop", "step"}, "scenario.rho_db")
        start = chk.number(v, "start", "scenario.rho_db")
        stop = chk.number(v, "stop", "scenario.rho_db")
        step = chk.number(v, "step", "scenario.rho_db", positive=True)
        if None in (start, stop, step):
            if any(k not in v for k in ("start", "stop", "step")):
                chk.fail("scenario.rho_db", "range needs start, stop and step")
            return ()
        if stop < start:
            chk.fail("scenario.rho_db", "stop must be >= start")
            return ()
        return tuple(_sweep(start, stop, step))
    if isinstance(v, list):
        return chk.vector({"rho_db": v}, "rho_db", "scenario", positive=False) or ()
    chk.fail("scenario.rho_db", "expected a number, a list or {start, stop, step}")
    return ()


def _parse_matrix(chk, v, path, cplx=False):
    if not isinstance(v, list) or not v or not all(isinstance(r, list) and r for r in v):
        chk.fail(path, "expected a non-empty list of non-empty rows")
        return None
    if len({len(r) for r in v}) != 1:
        chk.fail(path, "rows have different lengths")
        return None
    out = []
    for i, row in enumerate(v):
        vals = []
        for j, x in enumerate(row):
            try:
                if isinstance(x, bool) or (isinstance(x, str) and not cplx):
                    raise TypeError
                val = complex(x) if cplx else float(x)
            except (TypeError, ValueError):
                chk.fail(f"{path}[{i}][{j}]", f"not a number: {x!r}")
                return None
            if not np.isfinite(val):
                chk.fail(f"{path}[{i}][{j}]", "must be finite")
                return None
            if not cplx and val < 0:
                chk.fail(f"{path}[{i}][{j}]", "power must be >= 0")
                return None
            vals.append(val)
        out.append(vals)
    return out


def _parse_scenario(chk, obj):
    path = "scenario"
    if not isinstance(obj, dict):
        chk.fail(path, "expected an object")
        return None, None
    chk.unknown(obj, _SCENARIO_KEYS, path)
    rho = _parse_rho(chk, obj)
    kind = obj.get("kind")
    if "preset" in obj:
        if kind not in (None, "table"):
            chk.fail(f"{path}.preset", "only valid for kind 'table'")
        kind = "table"
        obj = {**obj, "table_id": obj["preset"]}
    if kind not in ("explicit", "exponential", "table", "random-drop"):
        chk.fail(f"{path}.kind", f"expected one of explicit, exponential, table, random-drop; got {kind!r}")
        return None, None
    kw = {"kind": kind, "rho_db": rho}
    shape = None
    if kind == "table":
        sid = obj.get("table_id")
        if not isinstance(sid, str) or sid.upper() not in SCENARIO_ALPHAS:
            chk.fail(f"{path}.preset", f"unknown preset {sid!r}; expected one of {', '.join(sorted(SCENARIO_ALPHAS))}")
        else:
            kw["table_id"] = sid.upper()
            shape = (3, 2)
    elif kind == "explicit":
        m = _parse_matrix(chk, obj.get("powers"), f"{path}.powers")
        if m is not None:
            if not any(x > 0 for r in m for x in r):
                chk.fail(f"{path}.powers", "all powers are zero")
            kw["powers"] = tuple(tuple(r) for r in m)
            shape = (len(m), len(m[0]))
    elif kind == "exponential":
        a = chk.vector(obj, "alphas", path)
        t = chk.vector(obj, "traces", path)
        n_r = chk.number(obj, "n_r", path, kind=int, positive=True)
        if n_r is None and "n_r" not in obj:
            chk.fail(f"{path}.n_r", "required")
        if a is not None and t is not None and len(a) != len(t):
            chk.fail(f"{path}.traces", f"length {len(t)} differs from alphas length {len(a)}")
        elif a is not None and t is not None and n_r:
            kw.update(alphas=a, traces=t, n_r=n_r)
            shape = (n_r, len(a))
    else:
        for k, typ in _DROP_FIELDS.items():
            v = chk.number(obj, k, path, kind=typ,
                           positive=k in ("n_bs", "antennas_per_bs", "n_users", "antennas_per_user",
                                          "pathloss_exp", "calibration_samples"),
                           nonneg=k in ("shadowing_db", "seed"))
            if v is not None:
                kw[k] = v
        cov = kw.get("coverage")
        if cov is not None and not 0 < cov < 1:
            chk.fail(f"{path}.coverage", "must lie in (0, 1)")
        g = obj.get("geometry")
        if g is not None:
            if not isinstance(g, dict):
                chk.fail(f"{path}.geometry", "expected an object")
            else:
                chk.unknown(g, {"cell_radius", "bs_radius", "min_distance"}, f"{path}.geometry")
                gk = {}
                for k in ("cell_radius", "min_distance"):
                    v = chk.number(g, k, f"{path}.geometry", positive=True)
                    if v is not None:
                        gk[k] = v
                v = chk.number(g, "bs_radius", f"{path}.geometry", nonneg=True)
                if v is not None:
                    gk["bs_radius"] = v
                kw["geometry"] = DropGeometry(**gk)
        d = ScenarioSpec(kind="random-drop")
        shape = (kw.get("n_bs", d.n_bs) * kw.get("antennas_per_bs", d.antennas_per_bs),
                 kw.get("n_users", d.n_users) * kw.get("antennas_per_user", d.antennas_per_user))
    return kw, shape


def _parse_correlation(chk, obj):
    if obj is None:
        return None
    if not isinstance(obj, dict):
        chk.fail("correlation", "expected an object")
        return None
    chk.unknown(obj, {"receive", "transmit"}, "correlation")
    blocks = {}
    for side in ("receive", "transmit"):
        v = obj.get(side)
        if not isinstance(v, list) or not v:
            chk.fail(f"correlation.{side}", "expected a non-empty list of square matrices")
            return None
        mats = [_parse_matrix(chk, b, f"correlation.{side}[{j}]", cplx=True) for j, b in enumerate(v)]
        if any(m is None for m in mats):
            return None
        blocks[side] = [np.array(m) for m in mats]
    try:
        return CorrelationSpec(receive=tuple(blocks["receive"]), transmit=tuple(blocks["transmit"]))
    except MacrocapError as exc:
        chk.fail("correlation", str(exc))
        return None


def parse_config(obj):
    """Validate a decoded JSON config and build a :class:`RunConfig`.

    Raises
    ------
    ConfigError
        Listing every problem found, each prefixed by its field path.
    """
    chk = _Checker()
    if not isinstance(obj, dict):
        raise ConfigError(["<root>: expected a JSON object"])
    chk.unknown(obj, _TOP_KEYS, "")
    if "scenario" not in obj:
        chk.fail("scenario", "required")
        kw, shape = None, None
    else:
        kw, shape = _parse_scenario(chk, obj["scenario"])
    engines = obj.get("engines")
    if not isinstance(engines, list) or not engines:
        chk.fail("engines", f"expected a non-empty list drawn from {', '.join(ENGINES)}")
        engines = []
    else:
        for j, e in enumerate(engines):
            if e not in ENGINES:
                chk.fail(f"engines[{j}]", f"unknown engine {e!r}; expected one of {', '.join(ENGINES)}")
        if len(set(map(str, engines))) != len(engines):
            chk.fail("engines", "duplicate entries")
    trials = chk.number(obj, "mc_trials", "", kind=int, default=DEFAULT_MC_TRIALS)
    if trials is not None and trials < 2:
        chk.fail("mc_trials", f"must be >= 2, got {trials}")
    seed = chk.number(obj, "seed", "", kind=int, nonneg=True, default=0)
    if seed is not None and seed >= 2 ** 64:
        chk.fail("seed", "must fit in 64 bits")
    out = obj.get("output")
    if out is not None and not isinstance(out, str):
        chk.fail("output", "expected a path string")
    corr = _parse_correlation(chk, obj.get("correlation"))
    if shape is not None:
        n_r, n_t = shape
        if "exact" in engines:
            if n_t != 2:
                chk.fail("engines", f"exact engine requires N=2 (got N={n_t})")
            if n_r < 3:
                chk.fail("engines", f"exact engine requires n_R>=3 (got n_R={n_r})")
        if "approx" in engines and n_r < n_t:
            chk.fail("engines", f"approx engine requires n_R>=N (got n_R={n_r}, N={n_t})")
        if {"bound", "highsnr"} & set(engines) and min(shape) > MAX_BOUND_COLUMNS:
            chk.fail("engines", f"bound engines support min(n_R, N) <= {MAX_BOUND_COLUMNS}")
    if kw is not None and kw.get("kind") == "random-drop" and "seed" not in kw and seed is not None:
        # a drop without its own seed follows the run seed
        kw["seed"] = seed
    if chk.errors:
        raise ConfigError(chk.errors)
    cfg = RunConfig(scenario=ScenarioSpec(**kw), engines=tuple(engines), mc_trials=trials,
                    seed=seed, output=out, correlation=corr, raw=copy.deepcopy(obj))
    try:
        P = cfg.power_matrix()
    except MacrocapError as exc:
        raise ConfigError([f"scenario: {exc}"]) from None
    if corr is not None and P.P.shape != shape:
        raise ConfigError(["correlation: block sizes do not match the power matrix"])
    return cfg


def validate(obj):
    """Return the list of configuration errors (empty when valid)."""
    try:
        parse_config(obj)
    except ConfigError as exc:
        return exc.errors
    return []


def load_config(path):
    """Read and validate a JSON config file."""
    try:
        with open(path, encoding="utf-8") as fh:
            obj = json.load(fh)
    except OSError as exc:
        raise ConfigError([f"<file>: cannot read {path}: {exc.strerror}"]) from None
    except json.JSONDecodeError as exc:
        raise ConfigError([f"<file>: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}"]) from None
    return parse_config(obj)


def config_hash(obj):
    """SHA-256 of the canonical JSON encoding."""
    blob = json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=True)
    return hashlib.sha256(blob.encode()).hexdigest()


def _run_point(P, rho_db, cfg):
    sigma2 = noise_power(P, rho_db)
    res = CapacityResult(rho_db=rho_db, values={})
    gamma = 1.0 / sigma2
    calls = {
        "exact": lambda: exact_capacity_details(P, sigma2),
        "approx": lambda: approx_capacity(P, sigma2),
        "bound": lambda: jensen_bound(P, gamma).bits,
        "lowsnr": lambda: low_snr_approx(P, gamma),
        "highsnr": lambda: high_snr_approx(P, gamma),
        # one worker per point: points already run concurrently
        "mc": lambda: mc_capacity(P, sigma2, cfg.mc_trials, cfg.seed, workers=1),
    }
    for eng in ENGINES:
        if eng not in cfg.engines:
            continue
        t0 = time.perf_counter()
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                out = calls[eng]()
            if eng == "exact":
                res.jittered = out.jittered
                out = out.bits
            elif eng == "mc":
                res.mc_stderr = out.stderr
                out = out.mean
            if not math.isfinite(out):
                raise ArithmeticError("non-finite result")
            res.values[eng] = float(out)
        except (MacrocapError, ArithmeticError, ValueError) as exc:
            res.values[eng] = math.nan
            if eng == "mc":
                res.mc_stderr = math.nan
            res.errors[eng] = f"{type(exc).__name__}: {exc}"
        res.timings[eng] = time.perf_counter() - t0
    return res


def compute(cfg, workers=None):
    """Evaluate every SNR point; results come back in SNR order."""
    P = np.asarray(cfg.power_matrix(), dtype=float)
    workers = default_workers() if workers is None else max(1, int(workers))
    rhos = list(cfg.scenario.rho_db)
    if workers == 1 or len(rhos) <= 1:
        return [_run_point(P, r, cfg) for r in rhos]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda r: _run_point(P, r, cfg), rhos))


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float) and math.isnan(v):
        return "nan"
    return format(float(v), ".9g")


def format_csv(results):
    """CSV text with the fixed header and 9 significant digits."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for r in results:
        row = {c: None for c in COLUMNS}
        row["rho_db"] = r.rho_db
        for eng, v in r.values.items():
            row[_ENGINE_COLUMN[eng]] = v
        row["mc_stderr"] = r.mc_stderr
        w.writerow([_fmt(row[c]) for c in COLUMNS])
    return buf.getvalue()


def _manifest(cfg, results, P, wall):
    return {
        "config_hash": config_hash(cfg.raw),
        "config": cfg.raw,
        "seed": cfg.seed,
        "mc_trials": cfg.mc_trials if "mc" in cfg.engines else None,
        "power_matrix": np.asarray(P).tolist(),
        "versions": {
            "macrocap": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
        },
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds"),
        "wall_seconds": wall,
        "points": [
            {"rho_db": r.rho_db, "jittered": r.jittered, "timings": r.timings, "errors": r.errors}
            for r in results
        ],
    }


def run(cfg, out_path, workers=None):
    """Run a validated config, write the CSV and ``<out>.manifest.json``.

    Returns
    -------
    int
        ``0`` if every engine succeeded, ``2`` otherwise.
    """
    t0 = time.perf_counter()
    results = compute(cfg, workers)
    text = format_csv(results)
    with open(out_path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    man = _manifest(cfg, results, cfg.power_matrix(), time.perf_counter() - t0)
    with open(out_path + ".manifest.json", "w", encoding="utf-8") as fh:
        json.dump(man, fh, indent=2, allow_nan=True)
        fh.write("\n")
    return EXIT_ENGINE if any(r.errors for r in results) else EXIT_OK


def _print_errors(errors):
    for e in errors:
        print(f"config error: {e}", file=sys.stderr)


def main(argv=None):
    parser = argparse.ArgumentParser(prog="macrocap", description="Ergodic sum capacity of macrodiversity MIMO channels.")
    sub = parser.add_subparsers(dest="cmd", required=True)
    p_run = sub.add_parser("run", help="evaluate a config and write CSV plus manifest")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--out", help="CSV path (defaults to the config's output field)")
    p_val = sub.add_parser("validate", help="check a config without running it")
    p_val.add_argument("--config", required=True)
    p_pre = sub.add_parser("preset", help="list or print built-in configs")
    g = p_pre.add_mutually_exclusive_group(required=True)
    g.add_argument("--list", action="store_true")
    g.add_argument("--show", metavar="NAME")
    args = parser.parse_args(argv)

    if args.cmd == "preset":
        if args.list:
            for name in PRESETS:
                print(f"{name}\t{_PRESET_NOTES[name]}")
            return EXIT_OK
        if args.show not in PRESETS:
            print(f"unknown preset {args.show!r}; try --list", file=sys.stderr)
            return EXIT_CONFIG
        print(json.dumps(PRESETS[args.show], indent=2))
        return EXIT_OK

    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        _print_errors(exc.errors)
        return EXIT_CONFIG
    if args.cmd == "validate":
        print("ok")
        return EXIT_OK
    out = args.out or cfg.output
    if not out:
        _print_errors(["output: no --out given and no output field in the config"])
        return EXIT_CONFIG
    code = run(cfg, out)
    if code:
        print("one or more engines failed; see the manifest", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
