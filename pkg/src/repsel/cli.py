"""``repsel`` command line: load -> normalize -> distance -> select -> evaluate.

Every run writes a ``manifest.json`` holding the resolved configuration and
sha256 hashes of the input and of every output, so ``repsel rerun`` can repeat
it and check that the bytes match. Settings come from built-in defaults, then
an optional TOML file (``--config``; top-level keys, optionally overridden by
a table named after the subcommand), then flags.

Exit codes: 0 ok, 1 internal error, 2 configuration error, 3 data error,
4 solver budget exhausted before optimality was proven (outputs are still
written and the gap is reported). Errors go to stderr as one JSON object
naming the failing stage.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from contextlib import contextmanager
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from . import __version__
from ._validation import DataError, GeometryError, check_n_periods
from .distance import build_matrix
from .evaluation import elbow, fidelity
from .exact import solve_exact
from .io import (
    read_selection,
    sha256_file,
    write_distance_csv,
    write_elbow_csv,
    write_fidelity,
    write_json,
    write_representatives_csv,
    write_selection,
)
from .kmeans import kmeans_medoid
from .selection import BOUNDED, k_for_target_days, local_search_swap, solve_greedy
from .timeseries import SliceGeometry, load_csv, normalize

logger = logging.getLogger("repsel")

EXIT_OK, EXIT_INTERNAL, EXIT_CONFIG, EXIT_DATA, EXIT_BUDGET = 0, 1, 2, 3, 4

COMMON_DEFAULTS = {
    "input": None,
    "features": None,
    "normalize": "minmax",
    "truncate_to_hours": None,
    "stride": 24,
}
DEFAULTS = {
    "select": {**COMMON_DEFAULTS, "length_days": 1, "periods": None, "target_days": None, "solver": "exact",
               "time_limit": 600.0, "node_limit": None, "seed": 0, "out": "out", "dump_distance_matrix": False},
    "baseline-kmeans": {**COMMON_DEFAULTS, "periods": None, "seed": 0, "max_iter": 300, "out": "out"},
    "elbow": {**COMMON_DEFAULTS, "lengths": [1, 2, 3, 4, 5], "target_days": None, "k_values": None,
              "time_limit": 600.0, "node_limit": None, "out": "elbow.csv"},
    "evaluate": {**COMMON_DEFAULTS, "selection": None, "out": "fidelity.json"},
    "dump-distance": {**COMMON_DEFAULTS, "length_days": 1, "out": "distance.csv"},
}


class ConfigError(ValueError):
    pass


class StageError(Exception):
    def __init__(self, stage: str, exc: BaseException, code: int):
        super().__init__(str(exc))
        self.stage, self.exc, self.code = stage, exc, code


@contextmanager
def stage(name: str):
    try:
        yield
    except StageError:
        raise
    except (ConfigError, GeometryError) as exc:
        raise StageError(name, exc, EXIT_CONFIG) from exc
    except (DataError, OSError, UnicodeDecodeError) as exc:
        raise StageError(name, exc, EXIT_DATA) from exc
    except ValueError as exc:
        code = EXIT_DATA if name in ("load", "normalize") else EXIT_CONFIG if name == "config" else EXIT_INTERNAL
        raise StageError(name, exc, code) from exc
    except Exception as exc:  # noqa: BLE001 - reported with its stage, never swallowed
        raise StageError(name, exc, EXIT_INTERNAL) from exc


# ---------------------------------------------------------------- arguments

def _int_list(text) -> list[int]:
    if isinstance(text, (list, tuple)):
        return [int(v) for v in text]
    try:
        return [int(v) for v in str(text).split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"expected comma-separated integers, got {text!r}") from exc


def _str_list(text) -> list[str]:
    if isinstance(text, (list, tuple)):
        return [str(v) for v in text]
    return [v.strip() for v in str(text).split(",") if v.strip()]


def _add_input(p: argparse.ArgumentParser) -> None:
    p.add_argument("-i", "--input", help="hourly CSV with a timestamp column")
    p.add_argument("--features", help="comma-separated feature columns (default: all but timestamp)")
    p.add_argument("--normalize", choices=["minmax", "zscore", "none"])
    p.add_argument("--truncate-to-hours", type=int, metavar="N", help="keep only the first N rows")
    p.add_argument("--stride", type=int, help="hours per segment (default 24)")
    p.add_argument("--config", help="TOML file with defaults for any option")


def _add_budget(p: argparse.ArgumentParser) -> None:
    p.add_argument("--time-limit", type=float, metavar="SECS", help="per-solve wall clock budget (default 600)")
    p.add_argument("--node-limit", type=int, help="per-solve branch-and-bound node budget (deterministic)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="repsel", description="Select representative multi-day periods.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log solver progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)
    kw = {"argument_default": argparse.SUPPRESS}

    p = sub.add_parser("select", help="choose representative periods", **kw)
    _add_input(p)
    p.add_argument("--length-days", type=int, help="period length in segments")
    p.add_argument("--periods", type=int, help="number of periods k")
    p.add_argument("--target-days", type=float, help="derive k = round(target / length)")
    p.add_argument("--solver", choices=["exact", "greedy", "swap"])
    _add_budget(p)
    p.add_argument("--seed", type=int, help="recorded in the manifest; the solvers are deterministic")
    p.add_argument("--out", help="output directory")
    p.add_argument("--dump-distance-matrix", action="store_true", help="also write distance.csv")

    p = sub.add_parser("baseline", help="comparison baselines")
    bsub = p.add_subparsers(dest="baseline", required=True)
    b = bsub.add_parser("kmeans", help="k-means over days with medoid representatives", **kw)
    _add_input(b)
    b.add_argument("--periods", type=int, help="number of clusters k")
    b.add_argument("--seed", type=int, help="k-means++ seed")
    b.add_argument("--max-iter", type=int, help="Lloyd iteration cap (default 300)")
    b.add_argument("--out", help="output directory")

    p = sub.add_parser("elbow", help="objective versus k for several period lengths", **kw)
    _add_input(p)
    p.add_argument("--lengths", help="comma-separated period lengths in days")
    p.add_argument("--target-days", type=float, help="add k = round(target / length) for each length")
    p.add_argument("--k-values", help="comma-separated k values solved for every length")
    _add_budget(p)
    p.add_argument("--out", help="output CSV")

    p = sub.add_parser("evaluate", help="fidelity of a selection against the full year", **kw)
    _add_input(p)
    p.add_argument("--selection", help="selection.json to evaluate")
    p.add_argument("--out", help="output JSON")

    p = sub.add_parser("dump-distance", help="write the distance matrix as CSV", **kw)
    _add_input(p)
    p.add_argument("--length-days", type=int)
    p.add_argument("--out", help="output CSV")

    p = sub.add_parser("rerun", help="repeat a run from its manifest and compare output hashes")
    p.add_argument("manifest")
    p.add_argument("--out", help="write outputs here instead of the recorded location")
    return parser


def _command_name(ns) -> str:
    return "baseline-kmeans" if ns.command == "baseline" else ns.command


def resolve_config(ns) -> dict:
    """Merge defaults, the optional TOML file and explicit flags (flags win)."""
    name = _command_name(ns)
    cfg = dict(DEFAULTS[name])
    flags = {k: v for k, v in vars(ns).items() if k not in ("command", "baseline", "verbose", "config")}
    config_path = getattr(ns, "config", None)
    if config_path:
        try:
            with open(config_path, "rb") as fh:
                raw = tomllib.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {config_path}: {exc}") from exc
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"invalid TOML in {config_path}: {exc}") from exc
        section = raw.pop(name, {})
        for key in DEFAULTS:
            raw.pop(key, None)
        from_file = {k.replace("-", "_"): v for k, v in {**raw, **section}.items()}
        unknown = sorted(set(from_file) - set(cfg))
        if unknown:
            raise ConfigError(f"unknown keys for {name} in {config_path}: {unknown}")
        cfg.update(from_file)
    cfg.update(flags)
    return _normalize_config(name, cfg)


def _normalize_config(name: str, cfg: dict) -> dict:
    if name != "evaluate" and not cfg.get("input"):
        raise ConfigError("no input given (use --input or set 'input' in the config file)")
    if cfg.get("features") is not None:
        cfg["features"] = _str_list(cfg["features"])
    if cfg["normalize"] not in ("minmax", "zscore", "none"):
        raise ConfigError(f"unknown normalization {cfg['normalize']!r}")
    for key in ("lengths", "k_values"):
        if cfg.get(key) is not None:
            cfg[key] = _int_list(cfg[key])
    if name == "select" and cfg["solver"] not in ("exact", "greedy", "swap"):
        raise ConfigError(f"unknown solver {cfg['solver']!r}")
    if name in ("select", "baseline-kmeans") and cfg.get("periods") is None and cfg.get("target_days") is None:
        raise ConfigError("give --periods (or --target-days for select)")
    if name == "elbow" and cfg.get("k_values") is None and cfg.get("target_days") is None:
        raise ConfigError("give --target-days and/or --k-values")
    if name == "evaluate" and not cfg.get("selection"):
        raise ConfigError("give --selection")
    for key in ("time_limit", "node_limit", "periods", "length_days", "stride", "max_iter"):
        v = cfg.get(key)
        if v is not None and (isinstance(v, bool) or v <= 0):
            raise ConfigError(f"{key} must be positive, got {v!r}")
    return cfg


# ---------------------------------------------------------------- pipeline

def _csv_features(path) -> list[str]:
    with open(path, newline="", encoding="utf-8") as fh:
        header = next(csv.reader(fh), [])
    return [c for c in header if c != "timestamp"]


def _load(cfg: dict):
    with stage("load"):
        features = cfg["features"] or _csv_features(cfg["input"])
        series = load_csv(cfg["input"], features, truncate_to_hours=cfg["truncate_to_hours"])
    with stage("normalize"):
        return normalize(series, cfg["normalize"])


def _geometry(cfg: dict, length_days: int, t: int) -> SliceGeometry:
    with stage("config"):
        return SliceGeometry.from_days(length_days, t, u=cfg["stride"])


def _source(cfg: dict) -> dict:
    return {
        "input": str(cfg["input"]),
        "features": list(cfg["features"]),
        "normalize": cfg["normalize"],
        "truncate_to_hours": cfg["truncate_to_hours"],
        "stride": cfg["stride"],
    }


def _file_in(out: Path, name: str) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    return out / name


def run_select(cfg: dict) -> tuple[dict, int]:
    series = _load(cfg)
    cfg["features"] = list(series.feature_names)
    g = _geometry(cfg, cfg["length_days"], series.hours)
    with stage("config"):
        k = cfg["periods"] if cfg["periods"] is not None else k_for_target_days(cfg["target_days"], cfg["length_days"])
        check_n_periods(k, g.m)
    with stage("distance"):
        D = build_matrix(series, g)
    with stage("select"):
        if cfg["solver"] == "greedy":
            sel = solve_greedy(D, k)
        elif cfg["solver"] == "swap":
            sel = local_search_swap(D, solve_greedy(D, k))
        else:
            sel = solve_exact(D, k, time_limit=cfg["time_limit"], node_limit=cfg["node_limit"])
    with stage("evaluate"):
        report = fidelity(series, sel)
    out = Path(cfg["out"])
    with stage("write"):
        outputs = {
            "selection.json": write_selection(_file_in(out, "selection.json"), sel, _source(cfg)),
            "representatives.csv": write_representatives_csv(out / "representatives.csv", series, sel),
            "fidelity.json": write_fidelity(out / "fidelity.json", report),
        }
        if cfg["dump_distance_matrix"]:
            outputs["distance.csv"] = write_distance_csv(out / "distance.csv", D)
    print(f"selected k={sel.k} periods of {g.days_per_period} day(s): {list(sel.chosen)}")
    print(f"objective {sel.objective!r} ({sel.optimality}); outputs in {out}")
    return outputs, _budget_code([sel])


def run_kmeans(cfg: dict) -> tuple[dict, int]:
    series = _load(cfg)
    cfg["features"] = list(series.feature_names)
    g = _geometry(cfg, 1, series.hours)
    with stage("config"):
        check_n_periods(cfg["periods"], g.n)
    with stage("select"):
        sel = kmeans_medoid(series, cfg["periods"], seed=cfg["seed"], max_iters=cfg["max_iter"], geometry=g)
    with stage("evaluate"):
        report = fidelity(series, sel)
    out = Path(cfg["out"])
    with stage("write"):
        outputs = {
            "selection.json": write_selection(_file_in(out, "selection.json"), sel, _source(cfg)),
            "representatives.csv": write_representatives_csv(out / "representatives.csv", series, sel),
            "fidelity.json": write_fidelity(out / "fidelity.json", report),
        }
    print(f"k-means medoids (k={sel.k}, seed={cfg['seed']}): {list(sel.chosen)}")
    print(f"snippet objective {sel.objective!r}; outputs in {out}")
    return outputs, EXIT_OK


def run_elbow(cfg: dict) -> tuple[dict, int]:
    series = _load(cfg)
    cfg["features"] = list(series.feature_names)
    plans = []
    with stage("config"):
        if not cfg["lengths"]:
            raise ConfigError("no lengths given")
        for length in cfg["lengths"]:
            g = SliceGeometry.from_days(length, series.hours, u=cfg["stride"])
            ks = set(cfg["k_values"] or [])
            if cfg["target_days"] is not None:
                ks.add(k_for_target_days(cfg["target_days"], length))
            for k in ks:
                check_n_periods(k, g.m)
            plans.append((g, sorted(ks)))
    curves = []
    for g, ks in plans:
        with stage("distance"):
            D = build_matrix(series, g)
        with stage("select"):
            curve = elbow(D, ks, time_limit=cfg["time_limit"], node_limit=cfg["node_limit"])
        curves.append(curve)
        for p in curve.points:
            print(f"length {g.days_per_period} k={p.k:>3} days={p.total_days:>3} objective {p.objective!r} ({p.status})")
    with stage("write"):
        out = Path(cfg["out"])
        out.parent.mkdir(parents=True, exist_ok=True)
        outputs = {out.name: write_elbow_csv(out, curves)}
    bounded = [(c.length_days, p) for c in curves for p in c.points if p.status == BOUNDED]
    for length, p in bounded:
        gap = "unknown" if p.lower_bound is None else f"{max(0.0, 1 - p.lower_bound / p.objective):.3%}"
        print(json.dumps({"stage": "select", "warning": "budget exhausted", "length_days": length, "k": p.k,
                          "gap": gap}), file=sys.stderr)
    return outputs, EXIT_BUDGET if bounded else EXIT_OK


def run_evaluate(cfg: dict) -> tuple[dict, int]:
    with stage("load"):
        sel, source = read_selection(cfg["selection"])
        if source:
            for key in ("input", "features", "normalize", "truncate_to_hours", "stride"):
                if key in source and (cfg.get(key) is None or cfg[key] == DEFAULTS["evaluate"][key]):
                    cfg[key] = source[key]
        if not cfg.get("input"):
            raise ConfigError("selection has no recorded input; give --input")
    series = _load(cfg)
    cfg["features"] = list(series.feature_names)
    with stage("evaluate"):
        report = fidelity(series, sel)
    with stage("write"):
        out = Path(cfg["out"])
        out.parent.mkdir(parents=True, exist_ok=True)
        outputs = {out.name: write_fidelity(out, report)}
    for name in series.feature_names:
        print(f"{name}: duration-curve NRMSE {report.duration_curve_nrmse[name]:.6g}, "
              f"mean error {report.mean_error[name]:.6g}")
    print(f"correlation error {report.correlation_error:.6g}")
    return outputs, EXIT_OK


def run_dump_distance(cfg: dict) -> tuple[dict, int]:
    series = _load(cfg)
    cfg["features"] = list(series.feature_names)
    g = _geometry(cfg, cfg["length_days"], series.hours)
    with stage("distance"):
        D = build_matrix(series, g)
    with stage("write"):
        out = Path(cfg["out"])
        out.parent.mkdir(parents=True, exist_ok=True)
        outputs = {out.name: write_distance_csv(out, D)}
    print(f"wrote {g.n} x {g.m} distance matrix to {out}")
    return outputs, EXIT_OK


RUNNERS = {
    "select": run_select,
    "baseline-kmeans": run_kmeans,
    "elbow": run_elbow,
    "evaluate": run_evaluate,
    "dump-distance": run_dump_distance,
}


def _budget_code(selections) -> int:
    bounded = [s for s in selections if s.optimality == BOUNDED]
    for s in bounded:
        gap = "unknown" if s.gap is None else f"{s.gap:.3%}"
        print(json.dumps({"stage": "select", "warning": "budget exhausted", "k": s.k, "gap": gap}),
              file=sys.stderr)
    return EXIT_BUDGET if bounded else EXIT_OK


def _manifest_path(command: str, cfg: dict) -> Path:
    out = Path(cfg["out"])
    if command in ("select", "baseline-kmeans"):
        return out / "manifest.json"
    return out.with_name(out.stem + ".manifest.json")


def execute(command: str, cfg: dict) -> tuple[dict, int]:
    """Run one subcommand from a resolved config and write its manifest."""
    outputs, code = RUNNERS[command](cfg)
    with stage("write"):
        manifest = {
            "tool": "repsel",
            "version": __version__,
            "command": command,
            "config": cfg,
            "input_sha256": sha256_file(cfg["input"]),
            "outputs": {name: sha256_file(path) for name, path in sorted(outputs.items())},
        }
        write_json(_manifest_path(command, cfg), manifest)
    return manifest, code


def rerun(manifest_path, out=None) -> int:
    with stage("config"):
        try:
            manifest = json.loads(Path(manifest_path).read_text(encoding="utf-8"))
            command, cfg = manifest["command"], dict(manifest["config"])
        except (OSError, ValueError, KeyError) as exc:
            raise ConfigError(f"unreadable manifest {manifest_path}: {exc}") from exc
        if command not in RUNNERS:
            raise ConfigError(f"manifest names unknown command {command!r}")
    with stage("load"):
        if sha256_file(cfg["input"]) != manifest["input_sha256"]:
            raise DataError(f"input {cfg['input']} changed since the manifest was written")
    if out is not None:
        cfg["out"] = out
    fresh, code = execute(command, cfg)
    differing = sorted(n for n, h in manifest["outputs"].items() if fresh["outputs"].get(n) != h)
    if differing:
        print(json.dumps({"stage": "rerun", "error": "OutputMismatch", "files": differing}), file=sys.stderr)
        return EXIT_INTERNAL
    print(f"rerun reproduced {len(manifest['outputs'])} output file(s) byte for byte")
    return code


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        if ns.command == "rerun":
            return rerun(ns.manifest, getattr(ns, "out", None))
        with stage("config"):
            cfg = resolve_config(ns)
        return execute(_command_name(ns), cfg)[1]
    except StageError as err:
        print(json.dumps({"stage": err.stage, "error": type(err.exc).__name__, "message": str(err.exc)}),
              file=sys.stderr)
        return err.code


if __name__ == "__main__":
    sys.exit(main())
