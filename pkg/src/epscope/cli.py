"""Command-line front end: ``epscope <sweep|locate|encircle>``.

Exit codes: 0 success, 2 invalid configuration or parameters, 3 numerical
failure. Results are written to the output directory as CSV/JSON.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from . import __version__
from .epfind import SearchRegion, conjugate_pairing_check, ep_closed_form, locate
from .errors import (
    InvalidParameterError,
    LoopThroughEPError,
    NoPassageError,
    NumericalError,
    ScanUnreliableError,
)
from .model import MatrixFamily, TwoLevelParams, two_level_family
from .monodromy import LoopSpec, encircle
from .spectra import set_jitter_seed
from .sweep import classify_crossing, sweep_real, write_csv

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3
COMMANDS = ("sweep", "locate", "encircle")


class ConfigError(InvalidParameterError):
    """Malformed or inconsistent configuration; ``field`` locates the problem."""

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}" if field else message)
        self.field = field


@dataclass(frozen=True)
class SweepConfig:
    lambda_min: float
    lambda_max: float
    steps: int
    with_vectors: bool = False


@dataclass(frozen=True)
class LocateConfig:
    region: tuple | None = None
    grid: tuple = (64, 64)
    closed_form: bool = False


@dataclass(frozen=True)
class RunConfig:
    model: TwoLevelParams | MatrixFamily
    sweep: SweepConfig | None = None
    locate: LocateConfig | None = None
    encircle: LoopSpec | None = None
    gauge: str = "biorthogonal"

    def family(self) -> MatrixFamily:
        if isinstance(self.model, TwoLevelParams):
            return two_level_family(self.model)
        return self.model


# --- JSON <-> values ---------------------------------------------------------

def _complex_to_json(z):
    z = complex(z)
    return {"re": z.real, "im": z.imag}


def _number(value, field):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(field, f"expected a number, got {value!r}")
    if not math.isfinite(value):
        raise ConfigError(field, "must be finite")
    return float(value)


def _integer(value, field, low):
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(field, f"expected an integer, got {value!r}")
    if value < low:
        raise ConfigError(field, f"must be >= {low}, got {value}")
    return value


def _complex(value, field):
    if isinstance(value, dict):
        _keys(value, field, required={"re", "im"})
        return complex(_number(value["re"], f"{field}.re"), _number(value["im"], f"{field}.im"))
    return complex(_number(value, field))


def _keys(obj, field, required=(), optional=()):
    if not isinstance(obj, dict):
        raise ConfigError(field, f"expected an object, got {type(obj).__name__}")
    missing = set(required) - set(obj)
    if missing:
        raise ConfigError(field, f"missing key(s) {', '.join(sorted(missing))}")
    unknown = set(obj) - set(required) - set(optional)
    if unknown:
        raise ConfigError(field, f"unknown key(s) {', '.join(sorted(unknown))}")


def _matrix(value, field):
    if not isinstance(value, list) or not value or not all(isinstance(r, list) for r in value):
        raise ConfigError(field, "expected a nested array (list of rows)")
    n = len(value)
    if any(len(r) != n for r in value):
        raise ConfigError(field, f"matrix must be square ({n} rows)")
    return np.array([[_complex(x, f"{field}[{i}][{j}]") for j, x in enumerate(r)]
                     for i, r in enumerate(value)], dtype=complex)


_TWO_LEVEL_FIELDS = [f.name for f in fields(TwoLevelParams)]


def _parse_model(obj):
    _keys(obj, "model", optional=("two_level", "general"))
    if ("two_level" in obj) == ("general" in obj):
        raise ConfigError("model", "exactly one of 'two_level' or 'general' is required")
    if "two_level" in obj:
        tl = obj["two_level"]
        _keys(tl, "model.two_level", optional=_TWO_LEVEL_FIELDS)
        kwargs = {}
        for name, value in tl.items():
            field = f"model.two_level.{name}"
            kwargs[name] = (_complex(value, field) if name in ("eps1", "eps2")
                            else _number(value, field))
        try:
            return TwoLevelParams(**kwargs)
        except InvalidParameterError as exc:
            raise ConfigError("model.two_level", str(exc)) from exc
    g = obj["general"]
    _keys(g, "model.general", required=("h0", "h1"), optional=("a", "mu"))
    mats = {k: _matrix(g[k], f"model.general.{k}") for k in ("h0", "h1", "a") if k in g}
    mu = _number(g.get("mu", 0.0), "model.general.mu")
    try:
        return MatrixFamily(mats["h0"], mats["h1"], mats.get("a"), mu)
    except InvalidParameterError as exc:
        raise ConfigError("model.general", str(exc)) from exc


def parse_config(obj) -> RunConfig:
    """Validate a decoded JSON document and build a :class:`RunConfig`."""
    _keys(obj, "", required=("model",), optional=("sweep", "locate", "encircle"))
    model = _parse_model(obj["model"])
    sweep = locate_cfg = loop = None
    gauge = "biorthogonal"
    if "sweep" in obj:
        s = obj["sweep"]
        _keys(s, "sweep", required=("lambda_min", "lambda_max", "steps"),
              optional=("with_vectors",))
        lo, hi = _number(s["lambda_min"], "sweep.lambda_min"), _number(s["lambda_max"], "sweep.lambda_max")
        if lo >= hi:
            raise ConfigError("sweep", f"empty range: lambda_min={lo} >= lambda_max={hi}")
        wv = s.get("with_vectors", False)
        if not isinstance(wv, bool):
            raise ConfigError("sweep.with_vectors", "expected true or false")
        sweep = SweepConfig(lo, hi, _integer(s["steps"], "sweep.steps", 2), wv)
    if "locate" in obj:
        s = obj["locate"]
        _keys(s, "locate", optional=("region", "grid", "closed_form"))
        closed = s.get("closed_form", False)
        if not isinstance(closed, bool):
            raise ConfigError("locate.closed_form", "expected true or false")
        region = None
        if "region" in s:
            r = s["region"]
            if not isinstance(r, list) or len(r) != 4:
                raise ConfigError("locate.region", "expected [re_min, re_max, im_min, im_max]")
            region = tuple(_number(x, f"locate.region[{i}]") for i, x in enumerate(r))
        elif not closed:
            raise ConfigError("locate", "needs 'region' or 'closed_form': true")
        grid = s.get("grid", [64, 64])
        if not isinstance(grid, list) or len(grid) != 2:
            raise ConfigError("locate.grid", "expected [nr, ni]")
        grid = tuple(_integer(x, f"locate.grid[{i}]", 8) for i, x in enumerate(grid))
        locate_cfg = LocateConfig(region, grid, closed)
        if region is not None:
            try:
                _region(locate_cfg)
            except InvalidParameterError as exc:
                raise ConfigError("locate.region", str(exc)) from exc
    if "encircle" in obj:
        s = obj["encircle"]
        _keys(s, "encircle", required=("center", "radius"), optional=("steps", "loops", "gauge"))
        center = _complex(s["center"], "encircle.center")
        radius = _number(s["radius"], "encircle.radius")
        steps = _integer(s.get("steps", 4096), "encircle.steps", 64)
        loops = _integer(s.get("loops", 1), "encircle.loops", 1)
        gauge = s.get("gauge", gauge)
        if gauge not in ("biorthogonal", "hermitian"):
            raise ConfigError("encircle.gauge", f"unknown gauge {gauge!r}")
        try:
            loop = LoopSpec(center, radius, steps, loops)
        except InvalidParameterError as exc:
            raise ConfigError("encircle", str(exc)) from exc
    return RunConfig(model, sweep, locate_cfg, loop, gauge)


def config_to_dict(cfg: RunConfig) -> dict:
    """Inverse of :func:`parse_config`."""
    m = cfg.model
    if isinstance(m, TwoLevelParams):
        tl = {}
        for name in _TWO_LEVEL_FIELDS:
            v = getattr(m, name)
            tl[name] = _complex_to_json(v) if name in ("eps1", "eps2") else v
        model = {"two_level": tl}
    else:
        model = {"general": {
            "h0": [[_complex_to_json(x) for x in row] for row in m.h0],
            "h1": [[_complex_to_json(x) for x in row] for row in m.h1],
            "a": [[_complex_to_json(x) for x in row] for row in m.a],
            "mu": m.mu,
        }}
    out = {"model": model}
    if cfg.sweep:
        s = cfg.sweep
        out["sweep"] = {"lambda_min": s.lambda_min, "lambda_max": s.lambda_max,
                        "steps": s.steps, "with_vectors": s.with_vectors}
    if cfg.locate:
        s = cfg.locate
        block = {"closed_form": s.closed_form, "grid": list(s.grid)}
        if s.region is not None:
            block["region"] = list(s.region)
        out["locate"] = block
    if cfg.encircle:
        s = cfg.encircle
        out["encircle"] = {"center": _complex_to_json(s.center), "radius": s.radius,
                           "steps": s.steps, "loops": s.loops, "gauge": cfg.gauge}
    return out


# --- presets -----------------------------------------------------------------

def _fig1(mu, center, radius):
    return {
        "model": {"two_level": {
            "eps1": {"re": 1.0, "im": 0.0}, "eps2": {"re": 2.0, "im": 0.0},
            "omega1": 1.0, "omega2": -1.0, "phi1": 0.2,
            "mu": mu, "sigma1": 1.0, "sigma2": 0.0, "phi2": 0.0,
        }},
        "sweep": {"lambda_min": 0.0, "lambda_max": 1.0, "steps": 200, "with_vectors": False},
        "locate": {"region": [-1.0, 1.0, -1.0, 1.0], "grid": [128, 128], "closed_form": False},
        "encircle": {"center": _complex_to_json(center), "radius": radius,
                     "steps": 4096, "loops": 1},
    }


PRESETS = {
    "fig1-top": _fig1(0.35, 0.5286826 - 0.0335235j, 0.02),
    "fig1-bottom": _fig1(0.5, 0.5578851 + 0.0355561j, 0.02),
    "fig1-mu0": _fig1(0.0, 0.5 * complex(math.cos(0.4), math.sin(0.4)), 0.1),
    "fig1-real-ep": _fig1(math.tan(0.4), 0.5 / math.cos(0.4), 0.1),
}


def load_config(path) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError("", f"cannot read {path}: {exc.strerror}") from exc
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("", f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    return parse_config(obj)


# --- commands ----------------------------------------------------------------

def _region(lc: LocateConfig) -> SearchRegion:
    re_min, re_max, im_min, im_max = lc.region
    return SearchRegion(re_min, re_max, im_min, im_max, grid_re=lc.grid[0], grid_im=lc.grid[1])


def _ep_json(ep):
    return {"lambda_c": _complex_to_json(ep.lambda_c), "pair": list(ep.pair),
            "residual": float(ep.residual), "gap": float(ep.gap),
            "energy": _complex_to_json(ep.energy)}


def _write_json(path, obj):
    path.write_text(json.dumps(obj, indent=2) + "\n")


def _closest_pair(energies):
    n = energies.shape[1]
    best = None
    for i in range(n):
        for j in range(i + 1, n):
            g = float(np.min(np.abs(energies[:, i] - energies[:, j])))
            if best is None or g < best[0]:
                best = (g, (i, j))
    return best[1]


def cmd_sweep(cfg: RunConfig, out: Path) -> int:
    if cfg.sweep is None:
        raise ConfigError("sweep", "config has no 'sweep' block")
    s = cfg.sweep
    t = sweep_real(cfg.family(), s.lambda_min, s.lambda_max, s.steps, s.with_vectors)
    write_csv(t, out / "trajectories.csv")
    summary = {"lambda_min": s.lambda_min, "lambda_max": s.lambda_max, "steps": s.steps,
               "points": len(t), "degenerate_steps": int(np.sum(t.degenerate)),
               "kind": None}
    if t.n >= 2:
        pair = _closest_pair(t.energies)
        summary["pair"] = list(pair)
        try:
            c = classify_crossing(t, pair)
        except NoPassageError as exc:
            summary["note"] = str(exc)
        else:
            summary.update(kind=c.kind.value, crossing_lambda=c.crossing_lambda,
                           ep_distance=None if math.isnan(c.ep_distance) else c.ep_distance,
                           min_gap=c.min_gap,
                           nearest_ep=None if c.nearest_ep is None
                           else _complex_to_json(c.nearest_ep.lambda_c))
    _write_json(out / "summary.json", summary)
    print(f"sweep: {len(t)} points, kind {summary['kind']}")
    return EXIT_OK


def cmd_locate(cfg: RunConfig, out: Path) -> int:
    if cfg.locate is None:
        raise ConfigError("locate", "config has no 'locate' block")
    lc = cfg.locate
    if lc.closed_form:
        if not isinstance(cfg.model, TwoLevelParams):
            raise ConfigError("locate.closed_form", "closed form needs a two_level model")
        eps = ep_closed_form(cfg.model)
        if lc.region is not None:
            region = _region(lc)
            eps = [ep for ep in eps if region.contains(ep.lambda_c)]
    else:
        eps = locate(cfg.family(), _region(lc))
    report = conjugate_pairing_check(eps)
    _write_json(out / "eps.json", {
        "eps": [_ep_json(ep) for ep in eps],
        "pairing": {"pairs": [list(p) for p in report.pairs],
                    "singletons": list(report.singletons),
                    "all_paired": report.all_paired},
    })
    print(f"locate: {len(eps)} EP(s)")
    for ep in eps:
        print(f"  {ep.lambda_c.real:+.8f} {ep.lambda_c.imag:+.8f}i  residual {ep.residual:.1e}")
    return EXIT_OK


def cmd_encircle(cfg: RunConfig, out: Path) -> int:
    if cfg.encircle is None:
        raise ConfigError("encircle", "config has no 'encircle' block")
    res = encircle(cfg.family(), cfg.encircle, gauge=cfg.gauge)
    _write_json(out / "monodromy.json", {
        "permutation": list(res.permutation),
        "phases": [_complex_to_json(p) for p in res.phases],
        "factors": [_complex_to_json(p) for p in res.factors],
        "discretization_error": res.discretization_error,
        "min_gap": res.min_gap,
        "points": res.points,
        "gauge": res.gauge,
    })
    phases = ", ".join(f"{p.real:+.6f}{p.imag:+.6f}i" for p in res.phases)
    print(f"encircle: permutation {list(res.permutation)}, phases [{phases}]")
    return EXIT_OK


_HANDLERS = {"sweep": cmd_sweep, "locate": cmd_locate, "encircle": cmd_encircle}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="epscope", description="Exceptional points of non-Hermitian matrix families.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("command", choices=COMMANDS)
    source = parser.add_mutually_exclusive_group(required=True)
    source.add_argument("--config", metavar="FILE", help="JSON run configuration")
    source.add_argument("--preset", metavar="NAME", choices=sorted(PRESETS),
                        help="built-in configuration: " + ", ".join(sorted(PRESETS)))
    parser.add_argument("-o", "--output", metavar="DIR", default=".",
                        help="output directory (created if missing)")
    parser.add_argument("--seed", type=int, default=0, help="solver jitter seed (default 0)")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    set_jitter_seed(args.seed)
    try:
        cfg = parse_config(PRESETS[args.preset]) if args.preset else load_config(args.config)
        out = Path(args.output)
        try:
            out.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise ConfigError("output", f"cannot create {out}: {exc.strerror}") from exc
        return _HANDLERS[args.command](cfg, out)
    except InvalidParameterError as exc:
        print(f"epscope: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ScanUnreliableError as exc:
        print(f"epscope: scan unreliable: {exc.failed_cells} of {exc.total_cells} cells failed",
              file=sys.stderr)
        return EXIT_NUMERIC
    except LoopThroughEPError as exc:
        radii = ", ".join(f"{r:.4g}" for r in exc.suggested_radii)
        print(f"epscope: {exc}; try radius {radii}", file=sys.stderr)
        return EXIT_NUMERIC
    except NumericalError as exc:
        print(f"epscope: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"epscope: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
