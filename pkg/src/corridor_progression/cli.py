"""Command-line entry point: ``cpa <subcommand> ...``.

Every subcommand reads files, writes deterministic outputs under ``--out``
and finishes with a ``manifest.json`` (input digests, resolved config, tool
version). Failures print a JSON error report on stderr and exit nonzero.
"""

from __future__ import annotations

import argparse
import hashlib
import io
import json
import logging
import os
import sys
from pathlib import Path

from . import CorridorError, DegenerateInputError, SchemaError, SynthError, __version__
from . import diagrams, ingest, matching, metrics, render, synth
from .corridor import PlanEntry, load_corridor

logger = logging.getLogger("cpa")

EXIT_ERROR = 2

# flag defaults, lowest precedence (config file and flags override them)
DEFAULTS = {
    "corridor": None,
    "input": [],
    "out": ".",
    "paths": "all",
    "plan": None,
    "direction": None,
    "dt": None,
    "dx": 100.0,
    "threshold": diagrams.QUEUE_THRESHOLD_MPH,
    "seed": None,
    "scenario": None,
    "clean": False,
    "cycle": None,
}


def sha256_of(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def workers() -> int:
    try:
        return max(int(os.environ.get("CPA_THREADS", "1")), 1)
    except ValueError:
        return 1


class Run:
    """Resolved configuration plus the bookkeeping for one invocation."""

    def __init__(self, command: str, cfg: dict):
        self.command = command
        self.cfg = cfg
        self.out = Path(cfg["out"])
        self.inputs: list = []
        self.outputs: list = []
        self.warnings: list = []

    def need(self, key: str):
        if not self.cfg.get(key):
            raise CorridorError(f"{self.command}: --{key} is required")
        return self.cfg[key]

    def check_positive(self, *keys):
        for k in keys:
            v = self.cfg.get(k)
            if v is not None and not float(v) > 0:
                raise CorridorError(f"--{k} must be positive, got {v}")

    def input_file(self, path) -> Path:
        p = Path(path)
        if not p.is_file():
            raise FileNotFoundError(f"no such file: {p}")
        self.inputs.append(p)
        return p

    def write_text(self, name: str, text: str) -> Path:
        self.out.mkdir(parents=True, exist_ok=True)
        p = self.out / name
        p.write_text(text, encoding="utf-8", newline="")
        self.outputs.append(p)
        return p

    def write_with(self, name: str, writer, *args) -> Path:
        buf = io.StringIO(newline="")
        writer(*args, buf)
        return self.write_text(name, buf.getvalue())

    def warn(self, message: str):
        self.warnings.append(message)
        print(f"warning: {message}", file=sys.stderr)

    def manifest(self) -> dict:
        cfg = {k: self.cfg[k] for k in sorted(self.cfg)}
        doc = {
            "tool": "cpa",
            "version": __version__,
            "command": self.command,
            "config": cfg,
            "inputs": {str(p): sha256_of(p) for p in self.inputs},
            "outputs": {p.name: sha256_of(p) for p in self.outputs},
            "warnings": self.warnings,
        }
        self.out.mkdir(parents=True, exist_ok=True)
        (self.out / "manifest.json").write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
        return doc


# --------------------------------------------------------------------------
# shared loading
# --------------------------------------------------------------------------


def _model(run: Run):
    return load_corridor(run.input_file(run.need("corridor")))


def _journeys(run: Run, model):
    paths = run.need("input")
    diag: list = []
    wps = ingest.read_waypoint_files([run.input_file(p) for p in paths], diag)
    for d in diag[:20]:
        run.warn(str(d))
    if len(diag) > 20:
        run.warn(f"{len(diag) - 20} more malformed rows skipped")
    if run.cfg["clean"]:
        return ingest.clean(wps, model).journeys
    return ingest.assemble_journeys(wps)


def _matched(run: Run, model):
    m = matching.match_all(_journeys(run, model), model, workers())
    m = matching.select_paths(m, matching.parse_path_set(run.cfg["paths"]), model)
    if not m:
        run.warn("no journeys left after filtering; outputs are empty")
    return m


def _directions(run: Run, model) -> list:
    d = run.cfg["direction"]
    if d is None:
        return list(model.direction_labels)
    if d not in model.direction_labels:
        raise CorridorError(f"unknown direction {d!r}; have {list(model.direction_labels)}")
    return [d]


def _plans(run: Run, model) -> list:
    if run.cfg["plan"] is None:
        return list(model.timing_plan)
    return [model.timing_plan.get(run.cfg["plan"])]


def _zset(run: Run) -> str:
    return matching.path_set_name(matching.parse_path_set(run.cfg["paths"]))


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------


def cmd_ingest(run: Run):
    model = _model(run)
    diag: list = []
    paths = [run.input_file(p) for p in run.need("input")]
    wps = ingest.read_waypoint_files(paths, diag)
    res = ingest.clean(wps, model)
    run.write_with("cleaned.csv", ingest.write_journeys, res.journeys)
    report = {"tally": res.tally, "malformed_rows": [str(d) for d in diag]}
    run.write_text("ingest_report.json", json.dumps(report, indent=2) + "\n")
    if not res.journeys:
        run.warn("no journeys survived cleaning; outputs are empty")


def cmd_od_matrix(run: Run):
    model = _model(run)
    m = matching.match_all(_journeys(run, model), model, workers())
    od = matching.build_od_matrix(m, model.fence_labels)
    run.write_with("od_matrix.csv", od.write_csv)
    run.write_text("od_summary.json", json.dumps({"journeys": len(m), "unknown_endpoint": od.unknown}, indent=2) + "\n")
    if not m:
        run.warn("no journeys in input; outputs are empty")


def cmd_metrics(run: Run):
    model = _model(run)
    m = _matched(run, model)
    trips = metrics.compute_trips(m, model)
    run.write_with("trips.csv", metrics.write_trips_csv, trips)
    rows = metrics.metrics_by_plan_and_direction(trips, model)
    plans = {e.name for e in _plans(run, model)}
    dirs = set(_directions(run, model))
    rows = [r for r in rows if r["plan"] in plans and r["direction"] in dirs]
    run.write_with("metrics.csv", metrics.write_metrics_csv, rows)


def cmd_tsd(run: Run):
    model = _model(run)
    run.check_positive("cycle")
    m = _matched(run, model)
    spec = render.RenderSpec()
    for entry in _plans(run, model):
        c = run.cfg["cycle"] or entry.cycle_length_s
        for d in _directions(run, model):
            trs = diagrams.build_cyclic_tsd([x for x in m if x.direction == d], entry, model, c)
            stem = render.svg_name("tsd", entry.name, d, _zset(run))[:-4]
            run.write_with(stem + ".csv", diagrams.write_tsd_csv, trs)
            title = f"{model.name} {entry.name} {d}: C = {render.fmt(c)} s, {len(trs)} journeys"
            run.write_text(stem + ".svg", render.render_tsd(trs, model, c, spec, title))


def cmd_ppd(run: Run):
    model = _model(run)
    run.check_positive("dt", "dx", "cycle")
    m = _matched(run, model)
    for entry in _plans(run, model):
        if run.cfg["cycle"]:
            entry = PlanEntry(entry.name, entry.start, entry.end, float(run.cfg["cycle"]))
        spec = diagrams.ppd_spec(entry, model, run.cfg["dt"] or 1.0, run.cfg["dx"])
        for d in _directions(run, model):
            grid = diagrams.rasterize_into_ppd([x for x in m if x.direction == d], entry, model, spec)
            stem = render.svg_name("ppd", entry.name, d, _zset(run))[:-4]
            run.write_with(stem + ".csv", diagrams.write_grid_csv, grid)
            title = f"{model.name} {entry.name} {d}: C = {render.fmt(entry.cycle_length_s)} s"
            run.write_text(stem + ".svg", render.render_ppd(grid, model, render.RenderSpec(color_scale="ppd"), title))


def cmd_heatmap(run: Run):
    model = _model(run)
    run.check_positive("dt", "dx", "threshold")
    m = _matched(run, model)
    spec = diagrams.heatmap_spec(model, run.cfg["dt"] or 3600.0, run.cfg["dx"])
    thr = float(run.cfg["threshold"])
    for d in _directions(run, model):
        grid = diagrams.build_speed_heatmap([x for x in m if x.direction == d], model, spec)
        stem = render.svg_name("heatmap", "day", d, _zset(run))[:-4]
        run.write_with(stem + ".csv", lambda fh: diagrams.write_grid_csv(grid, fh, thr))
        rs = render.RenderSpec(color_scale="speed", threshold_mph=thr)
        run.write_text(stem + ".svg", render.render_heatmap(grid, model, rs, f"{model.name} {d}: mean speed"))


def cmd_synth(run: Run):
    if run.cfg["scenario"]:
        sc = synth.load_scenario(run.input_file(run.cfg["scenario"]))
    else:
        sc = synth.default_scenario()
    if run.cfg["seed"] is not None:
        sc = sc.replace(seed=int(run.cfg["seed"]))
    res = synth.generate(sc)
    for p in synth.write_outputs(res, run.out).values():
        run.outputs.append(p)
    if not res.ledger:
        run.warn("scenario produced no vehicles; outputs are empty")


COMMANDS = {
    "ingest": (cmd_ingest, "clip, filter and write cleaned waypoints"),
    "od-matrix": (cmd_od_matrix, "origin-destination journey counts"),
    "metrics": (cmd_metrics, "per-trip and per-plan progression measures"),
    "tsd": (cmd_tsd, "cyclic time-space diagrams"),
    "ppd": (cmd_ppd, "platoon progression diagrams"),
    "heatmap": (cmd_heatmap, "hour x milepost mean speed heat maps"),
    "synth": (cmd_synth, "generate a synthetic corridor, waypoints and ground-truth ledger"),
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cpa", description="Signalized-corridor progression analytics.")
    p.add_argument("--version", action="version", version=f"cpa {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        s = sub.add_parser(name, help=help_text, argument_default=argparse.SUPPRESS)
        s.add_argument("--config", help="JSON file of option values; flags override it")
        s.add_argument("--out", help="output directory (default: current directory)")
        s.add_argument("-v", "--verbose", action="store_true")
        if name == "synth":
            s.add_argument("--scenario", help="scenario JSON (default: built-in four-signal corridor)")
            s.add_argument("--seed", type=int)
            continue
        s.add_argument("--corridor", help="corridor definition JSON")
        s.add_argument("--input", action="append", help="waypoint CSV (repeatable)")
        if name != "ingest":
            s.add_argument("--clean", action="store_true", help="clip and filter raw input first")
            s.add_argument("--paths", help="all | end-to-end | O:D,O:D,...")
        if name in ("metrics", "tsd", "ppd"):
            s.add_argument("--plan", help="timing plan name (default: every plan)")
        if name in ("metrics", "tsd", "ppd", "heatmap"):
            s.add_argument("--direction", help="direction label (default: both)")
        if name in ("tsd", "ppd"):
            s.add_argument("--cycle", type=float, help="override the plan cycle length, s")
        if name in ("ppd", "heatmap"):
            s.add_argument("--dt", type=float, help="time bin, s (ppd 1, heatmap 3600)")
            s.add_argument("--dx", type=float, help="milepost bin, ft (default 100)")
        if name == "heatmap":
            s.add_argument("--threshold", type=float, help="queued below this mean speed, mph (default 35)")
    return p


def resolve_config(ns: argparse.Namespace) -> dict:
    cfg = dict(DEFAULTS)
    flags = vars(ns)
    if flags.get("config"):
        path = Path(flags["config"])
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
        except OSError as exc:
            raise FileNotFoundError(f"cannot read config {path}: {exc.strerror}") from None
        if not isinstance(doc, dict):
            raise CorridorError(f"config {path} must be a JSON object")
        unknown = set(doc) - set(DEFAULTS)
        if unknown:
            raise CorridorError(f"config {path} has unknown key(s) {sorted(unknown)}")
        cfg.update(doc)
    for k, v in flags.items():
        if k in DEFAULTS:
            cfg[k] = v
    if isinstance(cfg["input"], str):
        cfg["input"] = [cfg["input"]]
    return cfg


def _error_report(exc: BaseException) -> dict:
    doc = {"error": type(exc).__name__, "message": str(exc)}
    diag = getattr(exc, "diagnostics", None)
    if diag:
        doc["diagnostics"] = [str(d) for d in diag]
    return doc


def main(argv=None) -> int:
    ns = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(ns, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(ns)
        run = Run(ns.command, cfg)
        COMMANDS[ns.command][0](run)
        run.manifest()
    except (CorridorError, SchemaError, SynthError, DegenerateInputError, OSError, ValueError) as exc:
        print(json.dumps(_error_report(exc), indent=2), file=sys.stderr)
        return EXIT_ERROR
    return 0


if __name__ == "__main__":
    sys.exit(main())
