"""``modelock`` command line.

Every flag can also come from ``--config file.json``: a JSON object whose
keys are the flag names (dashes or underscores).  Flags given on the command
line win; unknown keys are rejected; relative paths in the config resolve
against the config file's directory.

Exit codes: 0 ok, 2 usage, 3 io, 4 missing prediction, 5 degenerate input.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .errors import DegenerateInputError, InvalidArgumentError, MissingPredictionError, ModeLockError

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_MISSING, EXIT_DEGENERATE = 0, 2, 3, 4, 5


class UsageError(Exception):
    pass


# per subcommand: flag defaults, and which flags hold paths
DEFAULTS = {
    "synth-wave": {"span": None, "n": None, "amplitude": 1.0, "samples": 1001, "include_fundamental": False,
                   "out": None, "heatmap": None},
    "synth-filter": {"span": None, "n": None, "orientation": 0.0, "length": None, "envelope": "boxcar",
                     "sigma": None, "kind": "pulse", "out": None, "heatmap": None},
    "gen-data": {"seed": 0, "count": 10000, "train": 8500, "canvas": [256, 256], "label_width": 1,
                 "axis_mode": "vertical", "outline_only": False, "width_choices": None, "workers": None,
                 "out": None},
    "detect": {"manifest": None, "spans": None, "orients": None, "n": 4,
               "length": 9.0, "threshold": 0.7, "nms_radius": 2, "kind": "cavity", "envelope": "boxcar",
               "sigma": None, "split": "test", "out": None, "responses": None},
    "eval": {"manifest": None, "pred": None, "tolerance": None, "split": "test", "miou": False, "out": None},
    "analyze": {"map": None, "axis": None, "axis_from_manifest": None, "manifest": None, "Lmin": 10.0,
                "Lmax": 80.0, "nmin": 1, "nmax": 16, "cuts": 32, "half_extent": None, "out": None,
                "profile": None, "heatmap": None},
}
PATHS = {"out", "heatmap", "manifest", "pred", "map", "profile", "responses"}
REQUIRED = {
    "synth-wave": ("span", "n", "out"),
    "synth-filter": ("span", "n", "out"),
    "gen-data": ("out",),
    "detect": ("manifest", "out"),
    "eval": ("manifest", "pred", "out"),
    "analyze": ("map", "out"),
}


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="modelock", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="JSON file supplying any of the flags below")
        sp.add_argument("--quiet", action="store_true", default=None, help="print one JSON line on success")

    sp = sub.add_parser("synth-wave", help="sample a mode-locked superposition over [0, L] to CSV")
    sp.add_argument("--span", type=float)
    sp.add_argument("--n", type=int)
    sp.add_argument("--amplitude", type=float)
    sp.add_argument("--samples", type=int)
    sp.add_argument("--include-fundamental", action="store_true", default=None)
    sp.add_argument("--out")
    sp.add_argument("--heatmap", help="PGM with one band per component and the superposition last")
    common(sp)

    sp = sub.add_parser("synth-filter", help="build one oriented filter (MLAR1 + JSON sidecar)")
    sp.add_argument("--span", type=float)
    sp.add_argument("--n", type=int)
    sp.add_argument("--orientation", type=float, help="axis direction in radians")
    sp.add_argument("--length", type=float)
    sp.add_argument("--envelope", choices=["boxcar", "gaussian"])
    sp.add_argument("--sigma", type=float)
    sp.add_argument("--kind", choices=["pulse", "cavity"])
    sp.add_argument("--out")
    sp.add_argument("--heatmap", help="also write a min-max normalized PGM of the taps")
    common(sp)

    sp = sub.add_parser("gen-data", help="generate the synthetic rectangle dataset")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--count", type=int)
    sp.add_argument("--train", type=int)
    sp.add_argument("--canvas", type=int, nargs=2, metavar=("H", "W"))
    sp.add_argument("--label-width", type=int)
    sp.add_argument("--axis-mode", choices=["vertical", "horizontal", "both"])
    sp.add_argument("--outline-only", action="store_true", default=None)
    sp.add_argument("--width-choices", type=int, nargs="+")
    sp.add_argument("--workers", type=int)
    sp.add_argument("--out")
    common(sp)

    sp = sub.add_parser("detect", help="detect symmetry axes on a dataset split")
    sp.add_argument("--manifest")
    sp.add_argument("--spans", type=float, nargs="+", help="default: cover the dataset's rectangle widths")
    sp.add_argument("--orients", type=float, nargs="+",
                    help="axis orientations in radians (default: the dataset's labelled axes)")
    sp.add_argument("--n", type=int)
    sp.add_argument("--length", type=float)
    sp.add_argument("--threshold", type=float)
    sp.add_argument("--nms-radius", type=int)
    sp.add_argument("--kind", choices=["pulse", "cavity"])
    sp.add_argument("--envelope", choices=["boxcar", "gaussian"])
    sp.add_argument("--sigma", type=float)
    sp.add_argument("--split", choices=["train", "test", "all"])
    sp.add_argument("--out")
    sp.add_argument("--responses", help="directory for response heatmaps (PGM) and MLAR1 maps")
    common(sp)

    sp = sub.add_parser("eval", help="F-measure of predicted skeletons against labels")
    sp.add_argument("--manifest")
    sp.add_argument("--pred")
    sp.add_argument("--tolerance", type=float)
    sp.add_argument("--split", choices=["train", "test", "all"])
    sp.add_argument("--miou", action="store_true", default=None)
    sp.add_argument("--out")
    common(sp)

    sp = sub.add_parser("analyze", help="score a response/feature map for the mode-locking pattern")
    sp.add_argument("--map")
    sp.add_argument("--axis", type=float, nargs=4, metavar=("X0", "Y0", "X1", "Y1"))
    sp.add_argument("--axis-from-manifest", type=int, metavar="ID")
    sp.add_argument("--manifest")
    sp.add_argument("--Lmin", type=float)
    sp.add_argument("--Lmax", type=float)
    sp.add_argument("--nmin", type=int)
    sp.add_argument("--nmax", type=int)
    sp.add_argument("--cuts", type=int)
    sp.add_argument("--half-extent", type=float)
    sp.add_argument("--out")
    sp.add_argument("--profile", help="profile CSV path (default: <out>.profile.csv)")
    sp.add_argument("--heatmap", help="also write a min-max normalized PGM of the map")
    common(sp)
    return p


def _resolve(args: argparse.Namespace) -> dict:
    """Merge defaults < config file < command line."""
    defaults = DEFAULTS[args.command]
    opts = dict(defaults)
    opts["quiet"] = False
    if args.config:
        cfg_path = Path(args.config)
        try:
            cfg = json.loads(cfg_path.read_text())
        except json.JSONDecodeError as e:
            raise UsageError(f"config {cfg_path}: {e}") from None
        if not isinstance(cfg, dict):
            raise UsageError(f"config {cfg_path}: expected a JSON object")
        for key, value in cfg.items():
            k = key.replace("-", "_")
            if k not in defaults and k != "quiet":
                raise UsageError(f"config {cfg_path}: unknown key {key!r} for {args.command}")
            if k in PATHS and isinstance(value, str):
                value = str((cfg_path.parent / value).resolve()) if not Path(value).is_absolute() else value
            opts[k] = value
    for k in list(defaults) + ["quiet"]:
        v = getattr(args, k, None)
        if v is not None:
            opts[k] = v
    missing = [k for k in REQUIRED[args.command] if opts.get(k) is None]
    if missing:
        raise UsageError("missing required option(s): " + ", ".join("--" + m.replace("_", "-") for m in missing))
    return opts


def _emit(opts, payload: dict, lines) -> None:
    if opts["quiet"]:
        print(json.dumps(payload, sort_keys=True))
    else:
        for line in lines:
            print(line)


def cmd_synth_wave(o) -> None:
    from .wave_core import make_bank, pulse_metrics, sample_superposition

    bank = make_bank(o["span"], o["n"], o["amplitude"], o["include_fundamental"])
    wf = sample_superposition(bank, 0.0, bank.span_L, o["samples"])
    out = Path(o["out"])
    wf.to_csv(out)
    metrics_path = out.with_suffix(".metrics.json")
    metrics = pulse_metrics(wf).as_dict()
    metrics_path.write_text(json.dumps(metrics, sort_keys=True, indent=2) + "\n")
    if o["heatmap"]:
        from .formats import write_heatmap
        from .wave_core import eval_wave

        rows = [eval_wave(w, wf.x) for w in bank.waves] + [np.asarray(wf.samples)]
        write_heatmap(o["heatmap"], np.repeat(np.array(rows), 16, axis=0))
    _emit(o, {"csv": str(out), "metrics": str(metrics_path), **metrics}, [str(out), str(metrics_path)])


def cmd_synth_filter(o) -> None:
    from .filter_bank import FilterSpec, make_filter, save_filter
    from .formats import write_heatmap

    spec = FilterSpec(o["span"], o["n"], o["orientation"], o["length"], o["envelope"], o["sigma"], o["kind"])
    f = make_filter(spec)
    save_filter(f, o["out"])
    if o["heatmap"]:
        write_heatmap(o["heatmap"], f.taps)
    _emit(o, {"filter": str(o["out"]), "shape": list(f.shape)}, [str(o["out"])])


def cmd_gen_data(o) -> None:
    from .scene_gen import gen_dataset

    m = gen_dataset(o["seed"], o["count"], o["train"], tuple(o["canvas"]), o["label_width"], o["axis_mode"],
                    o["out"], o["outline_only"], o["width_choices"], o["workers"])
    path = Path(o["out"]) / "manifest.jsonl"
    _emit(o, {"manifest": str(path), "count": m.count, "train": m.split[0], "test": m.split[1]}, [str(path)])


def _split(o):
    return None if o["split"] == "all" else o["split"]


def cmd_detect(o) -> None:
    from .axis_detector import DetectorConfig, dataset_defaults, detect
    from .formats import write_binary_pgm, write_heatmap, write_mlar1
    from .scene_gen import load_manifest, scene_name

    manifest = load_manifest(o["manifest"])
    canvas = manifest.canvas if all(manifest.canvas) else manifest.load_image(manifest.ids()[0]).shape
    auto = dataset_defaults(canvas, manifest.axis_mode, manifest.width_choices)
    spans = o["spans"] if o["spans"] is not None else auto["spans"]
    orients = o["orients"] if o["orients"] is not None else auto["orientations"]
    cfg = DetectorConfig(spans=spans, orientations=orients, n=o["n"], length=o["length"],
                         envelope=o["envelope"], sigma=o["sigma"], kind=o["kind"], nms_radius=o["nms_radius"],
                         threshold=o["threshold"])
    bank = cfg.build_bank()
    gains = cfg.gains(bank)
    out = Path(o["out"])
    out.mkdir(parents=True, exist_ok=True)
    resp_dir = Path(o["responses"]) if o["responses"] else None
    if resp_dir:
        resp_dir.mkdir(parents=True, exist_ok=True)
    ids = manifest.ids(_split(o))
    for i in ids:
        skeleton, resp, _ = detect(manifest.load_image(i), cfg, bank, gains, return_response=True)
        write_binary_pgm(out / scene_name(i), skeleton)
        if resp_dir:
            write_heatmap(resp_dir / scene_name(i), resp)
            write_mlar1(resp_dir / f"{i:05d}.mlar", resp)
    _emit(o, {"pred": str(out), "count": len(ids)}, [str(out)])


def cmd_eval(o) -> None:
    from .scene_gen import load_manifest
    from .skeleton_metrics import batch_eval

    manifest = load_manifest(o["manifest"])
    result = batch_eval(manifest, o["pred"], o["tolerance"], _split(o), o["miou"])
    out = Path(o["out"])
    result.write(out)
    micro_f = result.micro.f_measure
    _emit(o, {"micro_f": round(micro_f, 4), "macro_f": round(result.macro["f"], 4), "report": str(out),
              "csv": str(out.with_suffix(".csv"))}, [f"{micro_f:.4f}"])


def cmd_analyze(o) -> None:
    from .formats import read_map, write_heatmap
    from .pattern_analyzer import AxisHypothesis, analyze_map
    from .scene_gen import load_manifest

    if (o["axis"] is None) == (o["axis_from_manifest"] is None):
        raise UsageError("give exactly one of --axis or --axis-from-manifest")
    if o["axis"] is not None:
        axis = AxisHypothesis(tuple(o["axis"]), "user_supplied")
    else:
        if o["manifest"] is None:
            raise UsageError("--axis-from-manifest needs --manifest")
        rec = load_manifest(o["manifest"]).record(int(o["axis_from_manifest"]))
        axis = AxisHypothesis(tuple(rec["axes"][0]), "ground_truth")
    resp = read_map(o["map"])
    report = analyze_map(resp, axis, (o["Lmin"], o["Lmax"]), (o["nmin"], o["nmax"]), o["cuts"], o["half_extent"])
    out = Path(o["out"])
    out.write_text(report.to_json() + "\n")
    profile_path = Path(o["profile"]) if o["profile"] else out.with_suffix(".profile.csv")
    report.profile.to_csv(profile_path)
    if o["heatmap"]:
        write_heatmap(o["heatmap"], resp)
    d = report.as_dict()
    _emit(o, {"report": str(out), "profile": str(profile_path), **d},
          [str(out), f"ncc={report.ncc_score:.4f} L={report.fitted_L:g} n={report.fitted_n} "
                     f"excitation={report.center_excitation} inhibition={report.lateral_inhibition}"])


COMMANDS = {
    "synth-wave": cmd_synth_wave,
    "synth-filter": cmd_synth_filter,
    "gen-data": cmd_gen_data,
    "detect": cmd_detect,
    "eval": cmd_eval,
    "analyze": cmd_analyze,
}


def main(argv=None) -> int:
    parser = _parser()
    args = parser.parse_args(argv)  # exits 2 on malformed flags
    try:
        opts = _resolve(args)
        COMMANDS[args.command](opts)
    except (UsageError, InvalidArgumentError) as e:
        print(f"modelock {args.command}: {e}", file=sys.stderr)
        return EXIT_USAGE
    except MissingPredictionError as e:
        print(f"modelock {args.command}: {e}", file=sys.stderr)
        return EXIT_MISSING
    except DegenerateInputError as e:
        print(f"modelock {args.command}: {e}", file=sys.stderr)
        return EXIT_DEGENERATE
    except OSError as e:
        print(f"modelock {args.command}: {e}", file=sys.stderr)
        return EXIT_IO
    except (ModeLockError, ValueError) as e:
        print(f"modelock {args.command}: {e}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
