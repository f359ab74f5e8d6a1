"""Command-line front end.

Commands: ``digitize``, ``visibility``, ``normals``, ``bench``, ``pattern``.
Settings come from built-in defaults, then an optional ``--config`` file of
``key = value`` lines (TOML), then command-line flags. Exit codes: 0 on
success, 2 on usage errors, 3 on validation failures or oracle mismatch.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import bench, io
from .cubical import as_codes, complex_of_points, pick_main_axis, star_codes, to_lattice_map
from .engine import VisibilityGraph, pairs_to_rows, pattern_match, visibility_all
from .normals import EstimatorParams, error_metrics, estimate_normals, mean_visibility_distance
from .oracles import brute_force_pairs, oracle_pairs
from .shapes import SHAPES, digitize_surface, make_shape

log = logging.getLogger("digivis")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INVALID = 3

COMMANDS = ("digitize", "visibility", "normals", "bench", "pattern")
EXPERIMENTS = ("visibility", "convergence")
# the star-inclusion oracle is quadratic in pointels; past this size only
# the pairwise baseline is used as a check
STAR_ORACLE_LIMIT = 400


class UsageError(Exception):
    pass


class ValidationError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    shape: str | None = None
    params: dict = field(default_factory=dict)
    h: list[float] = field(default_factory=lambda: [1.0])
    radius: int | None = None
    sigma: float = 4.0
    sigma_law: float | None = None
    rmax: int | None = None
    threads: int = 1
    seed: int = 0
    out: str = "out"
    input: str | None = None
    graph: str | None = None
    pattern: str | None = None
    random: int | None = None
    check_oracle: bool = False
    experiment: str = "visibility"
    baseline: bool = True

    def validate(self) -> None:
        if self.command not in COMMANDS:
            raise UsageError(f"unknown command {self.command!r}")
        if self.shape is not None and self.shape not in SHAPES:
            raise UsageError(f"unknown shape {self.shape!r}; valid shapes: {', '.join(SHAPES)}")
        if not self.h or any(not (isinstance(h, (int, float)) and h > 0) for h in self.h):
            raise UsageError(f"gridstep must be positive, got {self.h}")
        if self.radius is not None and self.radius < 1:
            raise UsageError(f"radius must be >= 1, got {self.radius}")
        if not self.sigma > 0:
            raise UsageError(f"sigma must be positive, got {self.sigma}")
        if self.sigma_law is not None and not self.sigma_law > 0:
            raise UsageError(f"sigma-law constant must be positive, got {self.sigma_law}")
        if self.rmax is not None and self.rmax < 1:
            raise UsageError(f"rmax must be >= 1, got {self.rmax}")
        if self.threads < 1:
            raise UsageError(f"threads must be >= 1, got {self.threads}")
        if self.experiment not in EXPERIMENTS:
            raise UsageError(f"unknown experiment {self.experiment!r}; choose from {', '.join(EXPERIMENTS)}")
        if self.random is not None and self.random < 1:
            raise UsageError("--random needs a positive point count")
        if self.command == "digitize" and self.shape is None:
            raise UsageError("digitize needs --shape")
        if self.command in ("visibility", "normals", "pattern"):
            sources = [self.input is not None, self.shape is not None, self.random is not None]
            if sum(sources) != 1:
                raise UsageError(f"{self.command} needs exactly one of --input, --shape, --random")
        if self.command == "pattern" and self.pattern is None:
            raise UsageError("pattern needs --pattern")

    def estimator(self, h: float) -> EstimatorParams:
        sigma = self.sigma_law * math.sqrt(1.0 / h) if self.sigma_law is not None else self.sigma
        return EstimatorParams(sigma, self.rmax)

    def to_dict(self) -> dict:
        return asdict(self)


# -- configuration ------------------------------------------------------------


def _parse_value(text: str):
    try:
        return tomllib.loads(f"v = {text}")["v"]
    except tomllib.TOMLDecodeError:
        return text


def _parse_params(items) -> dict:
    out = {}
    for item in items or []:
        key, sep, val = item.partition("=")
        if not sep or not key:
            raise UsageError(f"--param expects key=value, got {item!r}")
        out[key.strip()] = _parse_value(val.strip())
    return out


def load_config_file(path) -> dict:
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise UsageError(f"bad config {path}: {exc}") from exc
    out = {}
    for key, val in raw.items():
        key = key.replace("-", "_")
        if key not in RunConfig.__dataclass_fields__ or key == "command":
            raise UsageError(f"unknown config key {key!r}")
        out[key] = val
    if "h" in out and not isinstance(out["h"], list):
        out["h"] = [out["h"]]
    return out


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value settings file (TOML); flags override it")
    common.add_argument("--shape", help=f"implicit shape: {', '.join(SHAPES)}")
    common.add_argument("--param", action="append", metavar="KEY=VALUE", help="shape parameter override")
    common.add_argument("--h", type=float, nargs="+", help="gridstep(s)")
    common.add_argument("--radius", type=int, help="visibility radius r (l-inf, lattice units)")
    common.add_argument("--sigma", type=float, help="Gaussian scale in lattice units")
    common.add_argument("--sigma-law", type=float, help="use sigma = C * sqrt(1/h) instead of --sigma")
    common.add_argument("--rmax", type=int, help="visibility cap for the estimator (default ceil(2 sigma))")
    common.add_argument("--threads", type=int, help="worker threads for the direction sweep")
    common.add_argument("--seed", type=int, help="seed for random fixtures")
    common.add_argument("--out", help="output path prefix")
    common.add_argument("--input", help="surface file (.surf) or integer point list")
    common.add_argument("--graph", help="precomputed visibility graph (.graph)")
    common.add_argument("--pattern", help="point list used as structuring element")
    common.add_argument("--random", type=int, metavar="N", help="random 2d fixture of N points in a 10x10 box")
    common.add_argument("--check-oracle", action="store_true", default=None, help="verify against the reference oracles")
    common.add_argument("--experiment", choices=EXPERIMENTS, help="bench: timing/distance or normal convergence")
    common.add_argument("--no-baseline", dest="baseline", action="store_false", default=None, help="bench: skip the brute-force timing")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="digivis", description="Exact digital visibility and visibility normals.")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True
    helps = {
        "digitize": "Gauss-digitize a shape; write OBJ, surface dump and stats",
        "visibility": "compute the visibility graph of a surface or point set",
        "normals": "estimate visibility normals and error metrics",
        "bench": "timing, mean visibility distance and convergence ladders",
        "pattern": "translations of a pattern whose star fits inside a set's star",
    }
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=helps[name])
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    values: dict = {}
    if args.config:
        values.update(load_config_file(args.config))
    for key in RunConfig.__dataclass_fields__:
        if key in ("command", "params"):
            continue
        val = getattr(args, key, None)
        if val is not None:
            values[key] = val
    params = dict(values.pop("params", {}) or {})
    params.update(_parse_params(args.param))
    cfg = RunConfig(command=args.command, params=params, **values)
    if cfg.command == "bench":
        if cfg.shape is None:
            cfg.shape = "sphere"
        if args.h is None and "h" not in values:
            cfg.h = [1.0, 0.5, 0.25, 0.125] if cfg.experiment == "convergence" else [0.5, 0.25, 0.125, 0.0625]
    cfg.validate()
    return cfg


# -- helpers ------------------------------------------------------------------


def _out(cfg: RunConfig, h: float | None, suffix: str) -> Path:
    base = cfg.out
    if h is not None and len(cfg.h) > 1:
        base = f"{base}_h{h:g}"
    path = Path(base + suffix)
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def _shape(cfg: RunConfig):
    try:
        return make_shape(cfg.shape, **cfg.params)
    except KeyError as exc:
        raise UsageError(exc.args[0]) from exc
    except (TypeError, ValueError) as exc:
        raise UsageError(f"bad parameters for {cfg.shape}: {exc}") from exc


def _random_points(cfg: RunConfig) -> np.ndarray:
    rng = np.random.default_rng(cfg.seed)
    n = min(cfg.random, 100)
    flat = rng.choice(100, size=n, replace=False)
    return np.stack([flat // 10, flat % 10], axis=1)


def _load_input(cfg: RunConfig, h: float):
    """Return ``(complex codes, surface or None, shape or None)``."""
    if cfg.random is not None:
        pts = _random_points(cfg)
        return as_codes(complex_of_points(map(tuple, pts.tolist()))), None, None
    if cfg.shape is not None:
        shape = _shape(cfg)
        surf = digitize_surface(shape, h)
        if not len(surf.surfels):
            raise ValidationError(f"{shape.name} at h={h:g} digitizes to an empty set")
        return surf.complex, surf, shape
    path = Path(cfg.input)
    if not path.exists():
        raise UsageError(f"no such file: {path}")
    with open(path, "rb") as fh:
        magic = fh.read(4)
    try:
        if magic == io.SURF_MAGIC:
            surf, meta = io.load_surface(path)
            shape = None
            if meta.get("shape"):
                shape = make_shape(meta["shape"], **meta.get("params", {}))
            return surf.complex, surf, shape
        pts = io.read_points(path)
    except io.FormatError as exc:
        raise ValidationError(str(exc)) from exc
    return as_codes(complex_of_points(map(tuple, pts.tolist()))), None, None


def _pair_columns(d: int) -> list[str]:
    names = "xyz" if d <= 3 else [str(i) for i in range(d)]
    return [f"p{c}" for c in names[:d]] + [f"q{c}" for c in names[:d]]


def _check(codes, G: VisibilityGraph) -> None:
    """Compare the engine against the oracles; raise on any difference."""
    engine = {tuple(r) for r in pairs_to_rows(G).tolist()}
    points, pairs = brute_force_pairs(codes, G.radius)
    baseline = {tuple(points[i].tolist() + points[j].tolist()) for i, j in pairs}
    if engine != baseline:
        raise ValidationError(f"oracle mismatch: {len(engine ^ baseline)} pairs differ from the pairwise baseline")
    if len(points) <= STAR_ORACLE_LIMIT:
        star = {a + b for a, b in oracle_pairs(map(tuple, codes.tolist()), G.radius)}
        if engine != star:
            raise ValidationError(f"oracle mismatch: {len(engine ^ star)} pairs differ from the star-inclusion oracle")
    log.info("oracle check passed on %d pairs", len(engine))


# -- commands -----------------------------------------------------------------


def cmd_digitize(cfg: RunConfig) -> int:
    shape = _shape(cfg)
    conf = cfg.to_dict()
    for h in cfg.h:
        surf = digitize_surface(shape, h)
        if not len(surf.inside):
            raise ValidationError(f"{shape.name} at h={h:g} digitizes to an empty set")
        meta = dict(conf, h=h, shape=shape.name, params=_jsonable(shape.params))
        io.save_surface(_out(cfg, h, ".surf"), surf, meta)
        if surf.dim == 3:
            io.write_obj(_out(cfg, h, ".obj"), surf, config=meta)
        print(f"shape={shape.name} h={h:g} voxels={len(surf.inside)} surfels={len(surf.surfels)} pointels={len(surf.pointels)}")
    return EXIT_OK


def _jsonable(params: dict) -> dict:
    return {k: (list(v) if isinstance(v, tuple) else v) for k, v in params.items()}


def cmd_visibility(cfg: RunConfig) -> int:
    r = cfg.radius if cfg.radius is not None else 8
    hs = cfg.h if cfg.shape is not None else [cfg.h[0]]
    for h in hs:
        codes, surf, _ = _load_input(cfg, h)
        t0 = time.perf_counter()
        G = visibility_all(codes, r, threads=cfg.threads)
        rows = pairs_to_rows(G)
        seconds = time.perf_counter() - t0
        meta = dict(cfg.to_dict(), radius=r, h=h)
        io.write_csv(_out(cfg, h, ".pairs.csv"), "pairs", _pair_columns(G.dim), rows.tolist(), meta)
        io.save_graph(_out(cfg, h, ".graph"), G, meta)
        rec = bench.BenchRecord(cfg.shape or "input", h, len(G.points), r, "engine", seconds, len(rows))
        io.write_csv(_out(cfg, h, ".bench.csv"), "bench", list(rec.COLUMNS), [rec.row()], meta)
        print(f"pointels={len(G.points)} r={r} directions={len(G.directions)} pairs={len(rows)} seconds={seconds:.3f}")
        if cfg.check_oracle:
            _check(codes, G)
            print("oracle=ok")
    return EXIT_OK


def cmd_normals(cfg: RunConfig) -> int:
    if cfg.random is not None:
        raise UsageError("normals needs a surface: use --shape or --input")
    hs = cfg.h if cfg.shape is not None else [cfg.h[0]]
    for h in hs:
        params = cfg.estimator(h)
        codes, surf, shape = _load_input(cfg, h)
        if surf is None:
            raise UsageError("normals needs a surface file or a shape, not a bare point list")
        if cfg.graph is not None:
            try:
                G, _ = io.load_graph(cfg.graph)
            except (OSError, io.FormatError) as exc:
                raise ValidationError(f"cannot load graph {cfg.graph}: {exc}") from exc
            if G.radius < params.rmax:
                raise ValidationError(
                    f"graph radius {G.radius} is too small for sigma={params.sigma:g}: rmax={params.rmax} requires r >= {params.rmax}"
                )
        else:
            r = cfg.radius if cfg.radius is not None else params.rmax
            if r < params.rmax:
                raise ValidationError(f"radius {r} is too small for sigma={params.sigma:g}: requires r >= {params.rmax}")
            G = visibility_all(codes, r, threads=cfg.threads)
        try:
            field_ = estimate_normals(surf, G, params)
        except ValueError as exc:
            raise ValidationError(str(exc)) from exc
        meta = dict(cfg.to_dict(), h=h, sigma=params.sigma, rmax=params.rmax)
        d = surf.dim
        names = "xyz"[:d]
        rows = [list(p) + list(n) + [int(f)] for p, n, f in zip(field_.points.tolist(), field_.normals.tolist(), field_.flags.tolist())]
        io.write_csv(_out(cfg, h, ".normals.csv"), "normals", [f"p{c}" for c in names] + [f"n{c}" for c in names] + ["flag"], rows, meta)
        if d == 3:
            io.write_obj(_out(cfg, h, ".normals.obj"), surf, field_.normals, colors=True, config=meta)
        line = f"h={h:g} sigma={params.sigma:g} rmax={params.rmax} pointels={len(surf.pointels)} flagged={int((field_.flags != 0).sum())}"
        if shape is not None:
            mask = surf.evaluation_mask(params.rmax + 1)
            truth = bench.reference_normals(shape, surf)
            est = type(field_)(field_.points[mask], field_.normals[mask], field_.flags[mask])
            ref = type(truth)(truth.points[mask], truth.normals[mask], truth.flags[mask])
            rmse, emax = error_metrics(est, ref)
            line += f" evaluated={int(mask.sum())} rmse={rmse:.6g} emax={emax:.6g}"
        print(line)
    return EXIT_OK


def cmd_bench(cfg: RunConfig) -> int:
    shape = _shape(cfg)
    meta = cfg.to_dict()
    if cfg.experiment == "convergence":
        params = [cfg.estimator(h) for h in cfg.h]
        rows = []
        for h, p in zip(cfg.h, params):
            rows += bench.convergence_ladder(shape, [h], p, threads=cfg.threads)
        cols = ["shape", "h", "pointels", "rmse", "emax", "seconds"]
        io.write_csv(_out(cfg, None, ".convergence.csv"), "convergence", cols, [[r[c] for c in cols] for r in rows], meta)
        for r in rows:
            print(f"h={r['h']:g} pointels={r['pointels']} rmse={r['rmse']:.6g} emax={r['emax']:.6g}")
        if len(rows) > 1:
            hs = [r["h"] for r in rows]
            print(f"rmse_slope={bench.fit_exponent(hs, [r['rmse'] for r in rows]):.4f} "
                  f"emax_slope={bench.fit_exponent(hs, [r['emax'] for r in rows]):.4f}")
        return EXIT_OK

    r = cfg.radius if cfg.radius is not None else 10
    records, dist = [], []
    for h in cfg.h:
        surf = digitize_surface(shape, h)
        if not len(surf.surfels):
            raise ValidationError(f"{shape.name} at h={h:g} digitizes to an empty set")
        recs, G = bench.time_visibility(surf, r, shape.name, baseline=cfg.baseline, threads=cfg.threads)
        records += recs
        lattice = mean_visibility_distance(surf, G)
        dist.append({"h": h, "pointels": len(surf.pointels), "lattice": lattice, "world": h * lattice})
        for rec in recs:
            print(f"h={h:g} pointels={rec.pointels} r={r} algorithm={rec.algorithm} seconds={rec.seconds:.3f} pairs={rec.pairs}")
    io.write_csv(_out(cfg, None, ".bench.csv"), "bench", list(bench.BenchRecord.COLUMNS), [rec.row() for rec in records], meta)
    cols = ["h", "pointels", "lattice", "world"]
    io.write_csv(_out(cfg, None, ".distance.csv"), "mean-distance", cols, [[d[c] for c in cols] for d in dist], meta)
    for d in dist:
        print(f"h={d['h']:g} mean_lattice={d['lattice']:.4f} mean_world={d['world']:.4f}")
    if len(dist) > 1:
        print(f"exponent={bench.fit_exponent([d['h'] for d in dist], [d['world'] for d in dist]):.4f}")
    engine = [rec.seconds for rec in records if rec.algorithm == "engine"]
    if len(engine) > 1 and any(b < a for a, b in zip(engine, engine[1:])):
        log.warning("engine timing is not monotone in the number of pointels")
    return EXIT_OK


def cmd_pattern(cfg: RunConfig) -> int:
    codes, _, _ = _load_input(cfg, cfg.h[0])
    try:
        pat = io.read_points(cfg.pattern)
    except OSError as exc:
        raise UsageError(f"cannot read pattern {cfg.pattern}: {exc}") from exc
    except io.FormatError as exc:
        raise ValidationError(str(exc)) from exc
    if pat.shape[1] != codes.shape[1]:
        raise ValidationError("pattern and input have different dimensions")
    omega = to_lattice_map(star_codes(codes), pick_main_axis(codes))
    found = sorted(pattern_match(omega, complex_of_points(map(tuple, pat.tolist()))))
    d = codes.shape[1]
    io.write_csv(_out(cfg, None, ".matches.csv"), "matches", [f"t{c}" for c in "xyz"[:d]], found, cfg.to_dict())
    print(f"matches={len(found)}")
    return EXIT_OK


HANDLERS = {
    "digitize": cmd_digitize,
    "visibility": cmd_visibility,
    "normals": cmd_normals,
    "bench": cmd_bench,
    "pattern": cmd_pattern,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args)
        log.info("config %s", json.dumps(cfg.to_dict(), sort_keys=True))
        return HANDLERS[cfg.command](cfg)
    except UsageError as exc:
        print(f"digivis: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValidationError as exc:
        print(f"digivis: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
