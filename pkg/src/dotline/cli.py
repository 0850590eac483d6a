"""Batch command-line entry point.

Subcommands: synth, merge, detect, predict, evaluate, fit.  Every output
file carries a provenance header (config + seed); detections are
line-delimited JSON, tabular results are CSV.  Exit codes: 0 success,
2 usage, 3 I/O, 4 schema mismatch.

The default output root comes from ``$DOTLINE_OUT`` (falling back to the
current directory) so batch scripts need not repeat ``--out``.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from .datasets import (
    DATASET_KINDS,
    DatasetManifest,
    ManifestEntry,
    STATIC_PB_GRID,
    SchemaError,
    edge_from_dict,
    generate_dataset,
    load_stimulus,
)
from .detector import (
    DetectorConfig,
    Detection,
    detect_in_merged,
    detect_in_video,
    detection_from_record,
    detection_record,
)
from .evaluation import (
    build_grid,
    build_tpr_curve,
    empirical_threshold,
    fit_integration,
    read_tpr_csv,
    score_detection,
    write_grid_csv,
    write_tpr_csv,
)
from .merging import merge_frames
from .pbm import read_pbm, write_pbm
from .prediction import PredictionContext, decision_curve, predicted_log_nfa
from .stimuli import DegradationParams

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_SCHEMA = 4


def _out_root(value: str | None) -> Path:
    if value is not None:
        return Path(value)
    return Path(os.environ.get("DOTLINE_OUT", "."))


_PATH_ARGS = {"out", "data", "detections", "subject", "frames", "family"}


def _provenance(args: argparse.Namespace) -> list[str]:
    # Paths are recorded as basenames so reruns rooted elsewhere stay
    # byte-identical.
    fields = {}
    for k, v in sorted(vars(args).items()):
        if k == "func" or v is None:
            continue
        if k in _PATH_ARGS:
            if isinstance(v, list):
                v = [Path(str(item).split("=")[-1]).name for item in v]
            else:
                v = Path(str(v)).name
        fields[k] = v
    return [f"dotline {args.command}", f"config {json.dumps(fields, default=str)}"]


# --- synth ----------------------------------------------------------------


def cmd_synth(args) -> int:
    out = _out_root(args.out) / args.kind
    manifest = generate_dataset(args.kind, args.seed, out)
    print(f"{args.kind}: {len(manifest.entries)} stimuli -> {out}")
    return EXIT_OK


# --- merge ----------------------------------------------------------------


def cmd_merge(args) -> int:
    frames_dir = Path(args.frames)
    paths = sorted(frames_dir.glob("*.pbm"))
    if args.nf is not None:
        paths = paths[: args.nf]
    if not paths:
        print(f"no .pbm frames in {frames_dir}", file=sys.stderr)
        return EXIT_IO
    merged = merge_frames([read_pbm(p) for p in paths])
    out = Path(args.out) if args.out else frames_dir.with_suffix(".merged.pbm")
    write_pbm(out, merged)
    print(f"merged {len(paths)} frames -> {out}")
    return EXIT_OK


# --- detect ---------------------------------------------------------------


def _detect_entry(task) -> list[dict]:
    data_dir, entry_dict, config, seed, index, stride, max_steps, fixed_pb = task
    entry = ManifestEntry(**entry_dict)
    frames = load_stimulus(data_dir, entry)
    rng = np.random.default_rng((seed, index))
    if fixed_pb is None:
        # Oracle density of the merged frame actually under test.
        p_b = entry.p_b
        if len(frames) > 1 and config.n_f > 1:
            p_b = 1.0 - (1.0 - p_b) ** config.n_f
        config = replace(config, oracle_p_b=p_b)
    if len(frames) == 1:
        dets = [detect_in_merged(frames[0], config, rng)]
    else:
        dets = detect_in_video(
            frames, config, stride=stride, rng=rng, max_steps=max_steps
        )
    out = []
    for det in dets:
        rec = detection_record(det)
        rec["stimulus_id"] = entry.stimulus_id
        out.append(rec)
    return out


def cmd_detect(args) -> int:
    data_dir = Path(args.data)
    manifest = DatasetManifest.load(data_dir / "manifest.json")
    entries = manifest.entries
    if args.limit is not None:
        entries = entries[: args.limit]
    config = DetectorConfig(
        edge_length=args.length,
        widths=tuple(args.widths),
        epsilon=args.eps,
        n_f=args.nf,
        ransac_iterations=args.iters,
        oracle_p_b=args.pb if args.pb is not None else 0.0,
        seed=args.seed,
    )
    tasks = [
        (
            str(data_dir),
            vars(e).copy(),
            config,
            args.seed,
            i,
            args.stride,
            args.max_steps,
            args.pb,
        )
        for i, e in enumerate(entries)
    ]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_detect_entry, tasks, chunksize=4))
    else:
        results = [_detect_entry(t) for t in tasks]
    out = _out_root(args.out) / "detections.jsonl"
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w") as f:
        header = {
            "_header": {
                "command": "detect",
                "seed": args.seed,
                "config": {
                    "edge_length": config.edge_length,
                    "widths": list(config.widths),
                    "epsilon": config.epsilon,
                    "n_f": config.n_f,
                    "ransac_iterations": config.ransac_iterations,
                    "oracle_p_b": config.oracle_p_b,
                },
                "data": data_dir.name,
            }
        }
        f.write(json.dumps(header) + "\n")
        for recs in results:
            for rec in recs:
                f.write(json.dumps(rec) + "\n")
    n_det = sum(r["detected"] for recs in results for r in recs)
    print(f"{len(entries)} stimuli, {n_det} detections -> {out}")
    return EXIT_OK


# --- predict ----------------------------------------------------------------


def cmd_predict(args) -> int:
    ctx = PredictionContext(
        image_side=args.side,
        edge_length=args.length,
        clean_width=args.we,
        candidate_width=args.w,
        n_widths=args.n_widths,
        epsilon=args.eps,
    )
    out_dir = _out_root(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    tag = f"{args.case}-w{args.w:g}"
    if args.case == "static":
        pb_grid = list(STATIC_PB_GRID)
        widths_per_pb = None
    else:
        ts = list(range(1, args.t_max + 1))
        pb_grid = [1.0 - (1.0 - args.pb1) ** t for t in ts]
        widths_per_pb = ts

    surface = out_dir / f"nfa-{tag}.csv"
    pf_grid = np.round(np.arange(0.0, args.pf_max + 1e-9, 0.005), 4)
    with open(surface, "w") as f:
        for line in _provenance(args):
            f.write(f"# {line}\n")
        f.write("p_b,p_f,log10_nfa\n")
        for i, p_b in enumerate(pb_grid):
            col_ctx = ctx
            if widths_per_pb is not None:
                from dataclasses import replace

                col_ctx = replace(ctx, clean_width=float(widths_per_pb[i]))
            for p_f in pf_grid:
                lg = predicted_log_nfa(col_ctx, DegradationParams(p_b, float(p_f)))
                f.write(f"{p_b:.6g},{p_f:.6g},{lg:.6g}\n")

    curve = decision_curve(
        ctx, args.case, pb_grid, epsilon=args.eps, clean_widths=widths_per_pb
    )
    contour = out_dir / f"contour-{tag}.csv"
    with open(contour, "w") as f:
        for line in _provenance(args):
            f.write(f"# {line}\n")
        f.write("p_b,p_f_star\n")
        for p_b, p_f in zip(curve.p_b, curve.p_f_star):
            f.write(f"{p_b:.6g},{'' if p_f is None else f'{p_f:.6g}'}\n")
    print(f"prediction surface -> {surface}\ncontour -> {contour}")
    return EXIT_OK


# --- evaluate ---------------------------------------------------------------


def _load_detections(path: Path) -> dict[str, list[Detection]]:
    per_stim: dict[str, list[Detection]] = {}
    with open(path) as f:
        for line in f:
            rec = json.loads(line)
            if "_header" in rec:
                continue
            per_stim.setdefault(rec["stimulus_id"], []).append(
                detection_from_record(rec)
            )
    return per_stim


def cmd_evaluate(args) -> int:
    data_dir = Path(args.data)
    manifest = DatasetManifest.load(data_dir / "manifest.json")
    detections = _load_detections(Path(args.detections))
    out_dir = _out_root(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    header = _provenance(args)

    if manifest.kind.endswith("image"):
        case = "static" if manifest.kind == "static-image" else "dynamic-merged"
        scored = []
        for entry in manifest.entries:
            if entry.stimulus_id not in detections:
                continue
            det = detections[entry.stimulus_id][0]
            truth = edge_from_dict(entry.edge) if entry.edge else None
            scored.append(
                (entry.stimulus_id, score_detection(det, truth, case) if truth else 0)
            )
        ids = {s for s, _ in scored}
        params = {
            k: v for k, v in manifest.params_by_id().items() if k in ids
        }
        grid = build_grid(scored, params)
        write_grid_csv(out_dir / "grid.csv", grid, header)
        with open(out_dir / "thresholds.csv", "w") as f:
            for line in header:
                f.write(f"# {line}\n")
            f.write("p_b,v\n")
            for p_b in grid.p_b_values():
                try:
                    v = empirical_threshold(grid, p_b)
                except ValueError:
                    continue
                f.write(f"{p_b:.6g},{v:.6g}\n")
        print(f"grid -> {out_dir / 'grid.csv'}")
    else:
        outcomes = []
        for entry in manifest.entries:
            if entry.stimulus_id not in detections:
                continue
            dets = detections[entry.stimulus_id]
            outcomes.append(
                (entry.stimulus_id, any(d.candidate is not None for d in dets))
            )
        ids = {s for s, _ in outcomes}
        info = {k: v for k, v in manifest.edge_info_by_id().items() if k in ids}
        curve = build_tpr_curve(outcomes, info)
        write_tpr_csv(out_dir / "tpr.csv", curve, header)
        print(f"tpr -> {out_dir / 'tpr.csv'} (fpr={curve.fpr:.4f})")
    return EXIT_OK


# --- fit --------------------------------------------------------------------


def cmd_fit(args) -> int:
    subject = read_tpr_csv(args.subject)
    family = {}
    for item in args.family:
        name, _, path = item.partition("=")
        family[int(name)] = read_tpr_csv(path)
    ranking = fit_integration(subject, family)
    out = _out_root(args.out) / "fit.csv"
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w") as f:
        for line in _provenance(args):
            f.write(f"# {line}\n")
        f.write("rank,n_f,l2_distance\n")
        for rank, (n_f, dist) in enumerate(ranking, start=1):
            f.write(f"{rank},{n_f},{dist:.6f}\n")
    print(f"best n_f = {ranking[0][0]} (L2 {ranking[0][1]:.4f}) -> {out}")
    return EXIT_OK


# --- parser -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dotline",
        description="Random-dot edge stimuli, a contrario detection, and scoring.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a stimulus dataset")
    p.add_argument("--kind", choices=DATASET_KINDS, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("merge", help="boolean-union a directory of frames")
    p.add_argument("--frames", required=True)
    p.add_argument("--nf", type=int, default=None, help="merge only the first N frames")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_merge)

    p = sub.add_parser("detect", help="run the detector over a dataset")
    p.add_argument("--data", required=True, help="dataset directory with manifest.json")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--eps", type=float, default=1.0)
    p.add_argument("--widths", type=float, nargs="+", default=[8.0])
    p.add_argument("--length", type=float, default=200.0)
    p.add_argument("--nf", type=int, default=1)
    p.add_argument("--iters", type=int, default=2000)
    p.add_argument("--stride", type=int, default=None)
    p.add_argument(
        "--max-steps", type=int, default=None,
        help="evaluate at most N windows per video (1 = first-merge decision)",
    )
    p.add_argument("--pb", type=float, default=None, help="oracle background density")
    p.add_argument("--limit", type=int, default=None, help="first N manifest entries")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("predict", help="closed-form NFA grids and contours")
    p.add_argument("--case", choices=["static", "dynamic"], required=True)
    p.add_argument("--w", type=float, default=8.0)
    p.add_argument("--eps", type=float, default=1.0)
    p.add_argument("--side", type=int, default=300)
    p.add_argument("--length", type=float, default=200.0)
    p.add_argument("--we", type=float, default=1.0)
    p.add_argument("--n-widths", type=int, default=1)
    p.add_argument("--pb1", type=float, default=0.005)
    p.add_argument("--t-max", type=int, default=10)
    p.add_argument("--pf-max", type=float, default=0.3)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("evaluate", help="score detections against a manifest")
    p.add_argument("--data", required=True)
    p.add_argument("--detections", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("fit", help="rank integration depths by L2 curve distance")
    p.add_argument("--subject", required=True, help="subject tpr.csv")
    p.add_argument(
        "--family", nargs="+", required=True, metavar="NF=FILE",
        help="family curves as nf=path pairs",
    )
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_fit)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SchemaError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
