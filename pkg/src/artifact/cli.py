"""Batch experiment runner: one JSON config in, CSV/PGM/JSON files out.

Usage::

    discretize-lab EXPERIMENT --config cfg.json [--out DIR] [--threads K] [--dry-run]
    discretize-lab run --config cfg.json     # experiment taken from the config

Exit codes: 0 success, 2 invalid config, 3 budget exceeded, 4 numeric failure.
Failures print a JSON object ``{"error": ..., "kind": ..., "exit_code": ...}``
on stderr and write it to ``DIR/error.json``.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import platform
import sys
import time
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__
from . import engine, linear, measures, rotation, transfer
from .grid import Grid
from .maps import MapExpr, from_json

log = logging.getLogger("artifact.cli")

EXIT_OK, EXIT_CONFIG, EXIT_BUDGET, EXIT_NUMERIC = 0, 2, 3, 4


class ConfigError(ValueError):
    pass


# -- schema -------------------------------------------------------------------

_N_RANGE = {
    "type": "object",
    "properties": {"from": {"type": "integer", "minimum": 1},
                   "to": {"type": "integer", "minimum": 1},
                   "stride": {"type": "integer", "minimum": 1}},
    "required": ["from", "to"],
    "additionalProperties": False,
}
_N = {"oneOf": [{"type": "integer", "minimum": 1},
                {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 1},
                _N_RANGE]}
_INT = {"type": "integer", "minimum": 1}
_MAP = {"oneOf": [{"type": "string"}, {"type": "object"}]}
_MATRIX = {"type": "array", "items": {"type": "array", "items": {"type": "number"}}}
_SEQ = {"type": "array", "items": {"oneOf": [{"type": "number"}, _MATRIX]}, "minItems": 1}
_RANDOM = {
    "type": "object",
    "properties": {"kind": {"enum": ["sl2", "rotation"]}, "k": _INT, "count": _INT},
    "required": ["kind", "k"],
    "additionalProperties": False,
}
_POINT = {"type": "array", "items": {"type": "number"}, "minItems": 1, "maxItems": 2}

_PARAMS = {
    "recurrence-sweep": ({"map": _MAP, "N": _N, "budget": _INT}, ["map", "N"], False),
    "orbit-measure": ({"map": _MAP, "N": _INT, "x": _POINT, "resolution": _INT,
                       "kmax": {"type": "integer", "minimum": 0}}, ["map", "N", "x"], False),
    "measure-raster": ({"map": _MAP, "N": _INT, "x": _POINT, "resolution": _INT,
                        "kmax": {"type": "integer", "minimum": 0}}, ["map", "N", "x"], False),
    "global-measure": ({"map": _MAP, "N": _INT, "resolution": _INT,
                        "kmax": {"type": "integer", "minimum": 0}}, ["map", "N"], False),
    "rotation-observable": ({"map": _MAP, "K": _INT, "T": _INT}, ["map", "K", "T"], True),
    "rotation-discretized": ({"map": _MAP, "N": _INT}, ["map", "N"], False),
    "rotation-asymptotic": ({"map": _MAP, "N": _N}, ["map", "N"], False),
    "linear-rate": ({"matrices": {"type": "array", "items": _MATRIX, "minItems": 1},
                     "random": _RANDOM, "R": _INT}, ["R"], False),
    "linear-geometry": ({"matrix": _MATRIX, "samples": _INT, "R": _INT,
                         "V": {"type": "integer", "minimum": 0}, "fiber_points": _INT},
                        ["matrix"], False),
    "roundoff": ({"sequence": _SEQ, "R": _INT, "bins": {"type": "integer", "minimum": 0}},
                 ["sequence", "R"], False),
    "minkowski": ({"matrix": _MATRIX, "lattice": _MATRIX, "R": _INT, "S": {
        "oneOf": [{"type": "object", "properties": {"box": {"type": "integer", "minimum": 0}},
                   "required": ["box"], "additionalProperties": False},
                  {"type": "object", "properties": {"stripe": _INT},
                   "required": ["stripe"], "additionalProperties": False},
                  {"type": "array", "items": {"type": "array", "items": {"type": "integer"},
                                              "minItems": 2, "maxItems": 2}}]},
        "exact": {"type": "boolean"}}, ["S"], False),
    "hajos": ({"matrix": _MATRIX, "B_max": _INT}, ["matrix"], False),
    "lax": ({"map": _MAP, "N": _INT, "s": _INT,
             "max_radius": {"type": "integer", "minimum": 0}}, ["map", "N"], False),
    "transfer-converge": ({"map": _MAP, "N": _N, "M": _INT,
                           "m": {"type": "integer", "minimum": 0},
                           "kmax": {"type": "integer", "minimum": 0}},
                          ["map", "N"], False),
    "localglobal": ({"map": _MAP, "N": _INT, "t": _INT, "samples": _INT, "R": _INT},
                    ["map", "N"], False),
}

EXPERIMENTS = tuple(_PARAMS)


def schema_for(name: str) -> dict:
    props, required, stochastic = _PARAMS[name]
    props = dict(props, experiment={"const": name}, seed={"type": "integer", "minimum": 0})
    return {
        "type": "object",
        "properties": props,
        "required": required + (["seed"] if stochastic else []),
        "additionalProperties": False,
    }


def validate(config: dict, experiment: str | None = None) -> str:
    """Check ``config`` against the experiment schema; return the experiment name."""
    if not isinstance(config, dict):
        raise ConfigError("config must be a JSON object")
    name = experiment or config.get("experiment")
    if name is None:
        raise ConfigError("no experiment given")
    if name not in _PARAMS:
        raise ConfigError(f"unknown experiment {name!r}")
    if config.get("experiment", name) != name:
        raise ConfigError(f"config is for {config['experiment']!r}, not {name!r}")
    try:
        jsonschema.validate(config, schema_for(name))
    except jsonschema.ValidationError as exc:
        raise ConfigError(exc.message) from None
    if name == "linear-rate" and ("matrices" in config) == ("random" in config):
        raise ConfigError("linear-rate needs exactly one of 'matrices' or 'random'")
    if name == "linear-rate" and "random" in config and "seed" not in config:
        raise ConfigError("random sequences need a seed")
    if name == "minkowski" and ("matrix" in config) == ("lattice" in config):
        raise ConfigError("minkowski needs exactly one of 'matrix' or 'lattice'")
    if "map" in config:
        _map(config)
    if isinstance(config.get("N"), dict) and config["N"]["to"] < config["N"]["from"]:
        raise ConfigError("empty N range")
    return name


def _map(config) -> MapExpr:
    try:
        return from_json(config["map"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad map: {exc}") from None


def _orders(n_spec) -> list[int]:
    if isinstance(n_spec, int):
        return [n_spec]
    if isinstance(n_spec, list):
        return [int(n) for n in n_spec]
    return list(range(n_spec["from"], n_spec["to"] + 1, n_spec.get("stride", 1)))


def config_hash(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()


# -- output helpers ---------------------------------------------------------------

def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return str(v)


class Writer:
    """Collects files and writes them once, in a fixed order."""

    def __init__(self, out: Path):
        self.out = out
        self.files: dict[str, bytes] = {}

    def csv(self, name, header, rows):
        lines = [",".join(header)] + [",".join(_fmt(v) for v in r) for r in rows]
        self.files[name] = ("\n".join(lines) + "\n").encode()

    def json(self, name, obj):
        self.files[name] = (json.dumps(obj, indent=2, sort_keys=True, default=_jsonable) + "\n").encode()

    def raw(self, name, data: bytes):
        self.files[name] = data

    def flush(self):
        self.out.mkdir(parents=True, exist_ok=True)
        for name in sorted(self.files):
            (self.out / name).write_bytes(self.files[name])
        return sorted(self.files)


def _jsonable(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    return str(o)


def _hull_rows(hull):
    return [(float(a), float(b)) for a, b in hull]


def _rng(config):
    return np.random.Generator(np.random.Philox(config.get("seed", 0)))


# -- experiments --------------------------------------------------------------------

def _recurrence_sweep(cfg, w: Writer):
    m = _map(cfg)
    rows = engine.recurrence_sweep(m, _orders(cfg["N"]), budget=cfg.get("budget", engine.DEFAULT_BUDGET))
    cols = engine.RECURRENCE_COLUMNS
    w.csv("recurrence.csv", cols, [[r[c] for c in cols] for r in rows])


def _measure_outputs(w, mu, cfg, summary):
    r = measures.raster(mu, cfg.get("resolution", 128))
    w.raw("raster.pgm", r.to_pgm())
    w.raw("raster.csv", r.to_csv().encode())
    summary["dyadic_distance_to_lebesgue"] = measures.dyadic_distance(
        mu, "lebesgue", cfg.get("kmax", 7))
    summary["atoms"] = int(len(mu.ordinals))
    w.json("measure.json", summary)


def _orbit_measure(cfg, w):
    m = _map(cfg)
    g = Grid(m.dim, cfg["N"])
    x = cfg["x"][0] if m.dim == 1 else cfg["x"]
    mu = measures.mu_x(engine.discretize(m, g), x)
    _measure_outputs(w, mu, cfg, {"N": g.N, "cycle_length": int(len(mu.ordinals))})


def _global_measure(cfg, w):
    m = _map(cfg)
    g = Grid(m.dim, cfg["N"])
    a = engine.full_sweep_analysis(engine.discretize(m, g))
    mu = measures.mu_global(a)
    _measure_outputs(w, mu, cfg, {"N": g.N, "n_cycles": a.n_cycles,
                                  "degree_of_recurrence": a.degree_of_recurrence})


def _rotation_observable(cfg, w):
    s = rotation.observable_sample(_map(cfg), cfg["K"], cfg["T"], cfg["seed"])
    rows = [(v[0], v[1], x[0], x[1]) for v, x in zip(s.vectors, s.starts)]
    w.csv("vectors.csv", ("vx", "vy", "start_x", "start_y"), rows)
    w.csv("hull.csv", ("vx", "vy"), _hull_rows(s.hull))


def _rotation_set(w, s: rotation.RotationSetSample):
    rows = [(v[0], v[1], int(q)) for v, q in zip(s.vectors, s.periods)]
    w.csv("vectors.csv", ("vx", "vy", "period"), rows)
    w.csv("hull.csv", ("vx", "vy"), _hull_rows(s.hull))
    w.json("summary.json", {"cycles": len(s), "distinct": s.distinct(),
                            "hull": [[str(a), str(b)] for a, b in s.hull],
                            "hausdorff_to_unit_square": rotation.hausdorff_to_unit_square(s.hull)})


def _rotation_discretized(cfg, w):
    _rotation_set(w, rotation.discretized_rotation_set(_map(cfg), Grid(2, cfg["N"])))


def _rotation_asymptotic(cfg, w):
    _rotation_set(w, rotation.asymptotic_union(_map(cfg), _orders(cfg["N"])))


def _linear_rate(cfg, w):
    R = cfg["R"]
    if "matrices" in cfg:
        seqs = [[np.array(a, dtype=float) for a in cfg["matrices"]]]
    else:
        rng = _rng(cfg)
        gen = linear.random_sl2 if cfg["random"]["kind"] == "sl2" else linear.random_rotations
        seqs = [gen(rng, cfg["random"]["k"]) for _ in range(cfg["random"].get("count", 1))]
    curves = [linear.sequence_rate(s, R, diagnostic=False).taus for s in seqs]
    mean = np.mean(curves, axis=0)
    w.csv("rates.csv", ("k", "tau"), [(k + 1, t) for k, t in enumerate(mean)])
    if len(seqs) > 1:
        rows = [(i, k + 1, t) for i, c in enumerate(curves) for k, t in enumerate(c)]
        w.csv("rates_all.csv", ("sequence", "k", "tau"), rows)
    last = linear.sequence_rate(seqs[0], R)
    w.json("summary.json", {"R": R, "sequences": len(seqs), "mean_tau_last": float(mean[-1]),
                            "diagnostic_first_sequence": last.diagnostic})


def _linear_geometry(cfg, w):
    A = np.array(cfg["matrix"], dtype=float)
    g = linear.mean_rate_geometric(A, cfg.get("samples", 600))
    out = {"mean_rate": g.value, "stderr": g.stderr}
    R = cfg.get("R", 200)
    out["tau"] = linear.sequence_rate([A], R).tau
    V = cfg.get("V")
    if V:
        F = linear.pattern_indicator([A], R)
        tab = linear.difference_table(F, V)
        w.csv("differences.csv", ("vx", "vy", "rho"), list(tab.rows()))
        out["window_density"] = float(linear.window_density(F))
        out["mean_rho"] = tab.mean()
    if cfg.get("fiber_points"):
        pts = _rng(cfg).integers(-10_000, 10_001, (cfg["fiber_points"], 2))
        rep = linear.fiber_cardinality_check(A, pts)
        out["fiber_check"] = {"passed": rep.passed, "checked": rep.checked,
                              "mismatches": rep.mismatches}
    w.json("geometry.json", out)


def _roundoff(cfg, w):
    rep = linear.roundoff_statistics(cfg["sequence"], cfg["R"], cfg.get("bins", 0))
    out = rep.as_dict()
    if rep.histograms:
        out["histograms"] = rep.histograms
    w.json("roundoff.json", out)


def _minkowski(cfg, w):
    from fractions import Fraction

    S = cfg["S"]
    if isinstance(S, dict) and "box" in S:
        pts = linear.box_points(S["box"])
    elif isinstance(S, dict):
        pts = linear.stripe_set(S["stripe"])
    else:
        pts = [tuple(p) for p in S]
    V = max(max(abs(a), abs(b)) for a, b in pts)
    R = cfg.get("R", max(200, 4 * V))
    if "lattice" in cfg:
        B = np.array(cfg["lattice"], dtype=float)
        F = linear.lattice_indicator(B, R)
        density = Fraction(1, int(round(abs(np.linalg.det(B)))))
    else:
        F = linear.pattern_indicator([np.array(cfg["matrix"], dtype=float)], R)
        density = linear.window_density(F)
    tab = linear.difference_table(F, V)
    res = linear.minkowski_check(tab, density, pts, exact=cfg.get("exact", False))
    w.json("minkowski.json", {"lhs": str(res.lhs), "rhs": str(res.rhs),
                              "lhs_value": float(res.lhs), "rhs_value": float(res.rhs),
                              "passed": bool(res.passed), "equality": bool(res.equality)})


def _hajos(cfg, w):
    B_max = cfg.get("B_max", 20)
    A = np.array(cfg["matrix"], dtype=float)
    try:
        res = linear.hajos_witness(A, B_max)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    out = {"B_max": B_max, "found": res is not None}
    if res is not None:
        out["P"], out["B"] = res[0].tolist(), res[1].tolist()
        out["PAB"] = (res[0] @ A @ res[1]).tolist()
    w.json("hajos.json", out)


def _lax(cfg, w):
    m = _map(cfg)
    g = Grid(2, cfg["N"])
    r = engine.lax_cyclic_approximation(m, g, cfg.get("s", 4), cfg.get("max_radius", 3))
    w.csv("permutation.csv", ("ordinal", "image"), enumerate(r.permutation.tolist()))
    w.json("lax.json", {"N": g.N, "distance": r.distance, "matching_radius": r.matching_radius,
                        "max_rank_shift": r.max_rank_shift, "max_cell_shift": r.max_cell_shift,
                        "single_cycle": engine.is_single_cycle(r.permutation)})


def _transfer_converge(cfg, w):
    f = _map(cfg)
    op = transfer.TransferOperator(f, cfg.get("M", 2**14))
    phi0 = transfer.srb_density(f, op=op)
    w.csv("phi0.csv", ("x", "phi0"), [(i / op.M, v) for i, v in enumerate(phi0.values)])
    consts = transfer.transfer_constants(f, phi0)
    one = transfer.CircleDensity.constant(op.M)
    m_max = cfg.get("m", 30)
    rows = []
    for m, phi in enumerate(op.iterates(one, m_max)):
        rows.append((m, phi.sup_distance(phi0), transfer.mpmath.nstr(consts.bound(m), 17)))
    w.csv("operator.csv", ("m", "sup_distance", "bound"), rows)
    kmax = cfg.get("kmax", 64)
    curve, summary = [], []
    for N in _orders(cfg["N"]):
        g = Grid(1, N)
        d = engine.discretize(f, g)
        mu = measures.uniform(g)
        dist = []
        for k in range(kmax + 1):
            dist.append(measures.dyadic_distance(phi0, mu))
            curve.append((N, k, dist[-1]))
            mu = measures.pushforward(d, mu, 1)
        summary.append((N, min(dist), int(np.argmin(dist))))
    w.csv("distance.csv", ("N", "k", "distance"), curve)
    w.csv("minimum.csv", ("N", "min_distance", "argmin_k"), summary)
    w.json("constants.json", consts.as_dict())


def _localglobal(cfg, w):
    m = _map(cfg)
    t = cfg.get("t", 1)
    if m.dim == 1:
        r = transfer.localglobal_expanding(m, t, cfg.get("samples", 4096), cfg["N"])
        out = {"integral": r.integral, "stderr": r.stderr, "tau_N": r.tau_N, "N": r.N,
               "tree_operator_max_rel_err": r.tree_operator_max_rel_err}
    else:
        side = cfg.get("samples", 16)
        e = linear.localglobal_estimate(m, t, side, cfg.get("R", 100))
        tau = engine.rate_of_injectivity(engine.discretize(m, Grid(2, cfg["N"])), t)
        out = {"integral": e.value, "stderr": e.stderr, "tau_N": tau, "N": cfg["N"]}
    out["difference"] = abs(out["integral"] - out["tau_N"])
    out["t"] = t
    w.json("localglobal.json", out)


_RUNNERS = {
    "recurrence-sweep": _recurrence_sweep,
    "orbit-measure": _orbit_measure,
    "measure-raster": _orbit_measure,
    "global-measure": _global_measure,
    "rotation-observable": _rotation_observable,
    "rotation-discretized": _rotation_discretized,
    "rotation-asymptotic": _rotation_asymptotic,
    "linear-rate": _linear_rate,
    "linear-geometry": _linear_geometry,
    "roundoff": _roundoff,
    "minkowski": _minkowski,
    "hajos": _hajos,
    "lax": _lax,
    "transfer-converge": _transfer_converge,
    "localglobal": _localglobal,
}


def _versions():
    import mpmath
    import numba
    import scipy

    return {"artifact": __version__, "python": platform.python_version(),
            "numpy": np.__version__, "scipy": scipy.__version__,
            "numba": numba.__version__, "mpmath": mpmath.__version__}


def run(config: dict, out, experiment: str | None = None, dry_run=False) -> int:
    """Validate and execute one experiment; returns the exit code."""
    out = Path(out)
    try:
        name = validate(config, experiment)
        if dry_run:
            print(json.dumps({"experiment": name, "valid": True}))
            return EXIT_OK
        t0 = time.perf_counter()
        w = Writer(out)
        _RUNNERS[name](config, w)
        files = w.flush()
        manifest = {"experiment": name, "config": config, "config_sha256": config_hash(config),
                    "versions": _versions(), "wall_time_s": time.perf_counter() - t0,
                    "outputs": files}
        (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
        return EXIT_OK
    except ConfigError as exc:
        return _fail(out, "config", exc, EXIT_CONFIG, dry_run)
    except (transfer.NotExpanding, rotation.NotHomotopicToIdentity) as exc:
        return _fail(out, "config", exc, EXIT_CONFIG, dry_run)
    except engine.BudgetExceeded as exc:
        return _fail(out, "budget", exc, EXIT_BUDGET, dry_run)
    except (transfer.NoConvergence, engine.MatchingError, ArithmeticError,
            linear.WindowExhausted, np.linalg.LinAlgError) as exc:
        return _fail(out, "numeric", exc, EXIT_NUMERIC, dry_run)


def _fail(out: Path, kind, exc, code, dry_run):
    err = {"error": str(exc), "kind": kind, "type": type(exc).__name__, "exit_code": code}
    print(json.dumps(err), file=sys.stderr)
    if not dry_run:
        out.mkdir(parents=True, exist_ok=True)
        (out / "error.json").write_text(json.dumps(err, indent=2) + "\n")
    return code


def build_parser():
    p = argparse.ArgumentParser(prog="discretize-lab", description=__doc__.splitlines()[0])
    p.add_argument("experiment", choices=("run",) + EXPERIMENTS)
    p.add_argument("--config", required=True, help="JSON config file ('-' for stdin)")
    p.add_argument("--out", default="out", help="output directory")
    p.add_argument("--threads", type=int, default=None, help="worker threads for the kernels")
    p.add_argument("--dry-run", action="store_true", help="validate the config and stop")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        text = sys.stdin.read() if args.config == "-" else Path(args.config).read_text()
        config = json.loads(text)
    except (OSError, json.JSONDecodeError) as exc:
        return _fail(Path(args.out), "config", exc, EXIT_CONFIG, args.dry_run)
    if args.threads:
        import numba

        numba.set_num_threads(max(1, min(args.threads, numba.config.NUMBA_NUM_THREADS)))
    exp = None if args.experiment == "run" else args.experiment
    return run(config, args.out, exp, args.dry_run)


if __name__ == "__main__":
    sys.exit(main())
