"""Command-line front end.

Subcommands: synth, detect, blowup, verify-theorem1, context-map,
report. Each writes a report.json (sorted keys, timing quarantined in
one subtree) plus any per-point log-log profile CSVs into --out-dir,
and prints a short summary to stdout.

Exit codes: 0 on success, 2 on validation or input problems, 3 when a
theorem verification ran and failed. Scripts and CI key off these.
"""

import argparse
import json
import os
import sys
import time

import numpy as np

from . import __version__
from .contextmap import AggregatorSpec, ContextWindow, context_map, hybrid_embed, nearest_divisor_component
from .cone import DirectionCluster, TangentConeEstimate
from .dimension import DEFAULT_V_MIN, RegressionWindow, TwoPoint
from .errors import DesingError
from .geometry import projective_from_vector
from . import io as dio
from .pipeline import (
    BlowupConfig,
    ConeConfig,
    detect,
    resolve_params,
    verify_theorem,
)
from .report import (
    dump_report,
    finish_timing,
    load_report,
    locus_payload,
    make_report,
    params_payload,
    profile_csv,
    summary_lines,
    theorem_payload,
    to_jsonable,
)
from .singularity import SINGULAR
from .synth import SynthSpec, generate

_WORKERS_ENV = "DESING_WORKERS"


def _default_workers():
    try:
        return max(1, int(os.environ.get(_WORKERS_ENV, "1")))
    except ValueError:
        return 1


def _add_io_args(p):
    p.add_argument("--input", required=True, help="cloud file to analyze")
    p.add_argument(
        "--in-format",
        choices=list(dio.FORMATS),
        default=dio.CSV_FORMAT,
        help="input cloud format (default csv)",
    )
    p.add_argument(
        "--out-dir",
        default="desing-out",
        help="directory for report.json and profile CSVs",
    )


def _add_detector_args(p):
    p.add_argument("--epsilon", type=float, default=1.0, help="variation threshold")
    p.add_argument(
        "--r-max",
        default="auto",
        help="analysis window radius, or 'auto' for 0.3 x q90 centroid distance",
    )
    p.add_argument("--v-min", type=int, default=DEFAULT_V_MIN, help="min ball population")
    p.add_argument(
        "--estimator",
        default="regression:5",
        help="'twopoint' or 'regression:W' (odd W >= 3)",
    )
    p.add_argument("--grid-count", type=int, default=32, help="radii per grid")


def _add_cone_args(p):
    p.add_argument(
        "--center-index",
        type=int,
        required=True,
        help="index of the point to blow up",
    )
    p.add_argument("--k", default="auto", help="cluster count, or 'auto'")
    p.add_argument(
        "--merge-deg",
        type=float,
        default=20.0,
        help="merge centroids closer than this many degrees",
    )
    p.add_argument(
        "--r-loc",
        default="auto",
        help="direction-harvest radius, or 'auto' from the witness scale",
    )
    p.add_argument(
        "--lambda",
        dest="lam",
        default="median",
        help="angular scale: 'median', 'separation', or a number",
    )
    p.add_argument(
        "--dense-divisor",
        type=int,
        default=0,
        help="extra exploratory divisor points (excluded from verdicts)",
    )


def _parse_estimator(text):
    if text == "twopoint":
        return TwoPoint()
    if text == "regression":
        return RegressionWindow(5)
    if text.startswith("regression:"):
        return RegressionWindow(int(text.split(":", 1)[1]))
    raise DesingError(f"unknown estimator {text!r}")


def _parse_r_max(text):
    if text == "auto":
        return None
    value = float(text)
    if not value > 0.0:
        raise DesingError(f"r_max must be positive, got {value}")
    return value


def _parse_lambda(text):
    if text in ("median", "separation"):
        return text
    return float(text)


def _params_from_args(cloud, args):
    return resolve_params(
        cloud,
        epsilon=args.epsilon,
        r_max=_parse_r_max(args.r_max),
        v_min=args.v_min,
        estimator=_parse_estimator(args.estimator),
        grid_count=args.grid_count,
    )


def _cone_cfg_from_args(args):
    return ConeConfig(
        k=None if args.k == "auto" else int(args.k),
        merge_threshold=float(np.deg2rad(args.merge_deg)),
        r_loc=None if args.r_loc == "auto" else float(args.r_loc),
    )


def _ensure_out(args):
    os.makedirs(args.out_dir, exist_ok=True)
    return args.out_dir


def _emit(report, out_dir, started, extra_files=()):
    """Write report.json plus any (relative_path, text) side files,
    then print the summary. Returns the report path."""
    finish_timing(report, started)
    path = os.path.join(out_dir, "report.json")
    dump_report(report, path)
    for rel, text in extra_files:
        full = os.path.join(out_dir, rel)
        os.makedirs(os.path.dirname(full), exist_ok=True)
        with open(full, "w", encoding="utf-8") as fh:
            fh.write(text)
    for line in summary_lines(report["command"], report["payload"]):
        print(line)
    print(f"report: {path}")
    return path


def _cmd_synth(args):
    started = time.time()
    out_dir = _ensure_out(args)
    spec = SynthSpec(
        kind=args.kind,
        n=args.n,
        dims=tuple(int(x) for x in args.dims.split(",")),
        samples=tuple(int(x) for x in args.samples.split(",")),
        sigma=args.sigma,
        seed=args.seed,
        radius=args.radius,
        min_angle=float(np.deg2rad(args.min_angle_deg)),
        opening_angle=float(np.deg2rad(args.opening_deg)),
        include_center=not args.no_center,
    )
    cloud, truth = generate(spec)
    cloud_path = os.path.join(out_dir, args.out)
    dio.write_cloud(cloud, cloud_path, args.out_format)
    truth_payload = {
        "kind": truth.kind,
        "dims": list(truth.dims),
        "center_index": truth.center_index,
        "sigma": truth.sigma,
        "radius": truth.radius,
        "singular_points": to_jsonable(truth.singular_points),
        "bases": to_jsonable(truth.bases),
        "membership": truth.membership.tolist(),
        "cone_frames": to_jsonable(truth.cone_frames),
    }
    truth_path = os.path.join(out_dir, "truth.json")
    with open(truth_path, "w", encoding="utf-8") as fh:
        json.dump(truth_payload, fh, sort_keys=True, indent=2)
        fh.write("\n")
    # paths are stored relative to --out-dir so reruns into different
    # directories stay byte-identical
    payload = {
        "n_points": len(cloud),
        "n": cloud.n,
        "cloud_path": args.out,
        "truth_path": "truth.json",
    }
    config = {
        "kind": spec.kind,
        "n": spec.n,
        "dims": list(spec.dims),
        "samples": list(spec.samples),
        "sigma": spec.sigma,
        "seed": spec.seed,
        "radius": spec.radius,
        "min_angle_deg": args.min_angle_deg,
        "opening_deg": args.opening_deg,
        "include_center": spec.include_center,
        "out": args.out,
        "out_format": args.out_format,
    }
    report = make_report("synth", config, payload, __version__)
    _emit(report, out_dir, started)
    return 0


def _cmd_detect(args):
    started = time.time()
    out_dir = _ensure_out(args)
    cloud = dio.ingest(args.input, args.in_format)
    params = _params_from_args(cloud, args)
    locus = detect(cloud, params, workers=args.workers)
    payload = locus_payload(locus)
    config = {
        "input": args.input,
        "in_format": args.in_format,
        "params": params_payload(params),
        "workers": args.workers,
    }
    report = make_report("detect", config, payload, __version__)

    extra = []
    from .singularity import point_profile

    for index in locus.singular_ids:
        profile = point_profile(cloud, index, params)
        extra.append((os.path.join("profiles", f"point_{index}.csv"), profile_csv(profile)))
    _emit(report, out_dir, started, extra)
    return 0


def _run_theorem(args):
    cloud = dio.ingest(args.input, args.in_format)
    params = _params_from_args(cloud, args)
    record = verify_theorem(
        cloud,
        args.center_index,
        params,
        cone_cfg=_cone_cfg_from_args(args),
        blow_cfg=BlowupConfig(
            lam=_parse_lambda(args.lam), dense_divisor=args.dense_divisor
        ),
    )
    config = {
        "input": args.input,
        "in_format": args.in_format,
        "center_index": args.center_index,
        "params": params_payload(params),
        "k": args.k,
        "merge_deg": args.merge_deg,
        "r_loc": args.r_loc,
        "lambda": args.lam,
        "dense_divisor": args.dense_divisor,
    }
    return cloud, record, config


def _theorem_files(record):
    files = [
        (
            os.path.join("profiles", "center.csv"),
            profile_csv(record.center.profile),
        )
    ]
    for v in record.verdicts:
        if v.profile.samples:
            tag = (
                f"exceptional_{v.cluster_index}"
                if v.cluster_index is not None
                else "dense"
            )
            files.append(
                (os.path.join("profiles", f"{tag}.csv"), profile_csv(v.profile))
            )
    return files


def _cmd_blowup(args):
    started = time.time()
    out_dir = _ensure_out(args)
    cloud, record, config = _run_theorem(args)
    payload = theorem_payload(record)
    report = make_report("blowup", config, payload, __version__)

    from .geometry import PointCloud

    bases = PointCloud(record.blownup._bases)
    dirs = PointCloud(record.blownup._dir_reps)
    dio.write_raw(bases, os.path.join(out_dir, "strict_bases.rawf64"), dio.RAW_F64)
    dio.write_raw(dirs, os.path.join(out_dir, "strict_dirs.rawf64"), dio.RAW_F64)
    _emit(report, out_dir, started, _theorem_files(record))
    return 0


def _cmd_verify(args):
    started = time.time()
    out_dir = _ensure_out(args)
    _, record, config = _run_theorem(args)
    payload = theorem_payload(record)
    report = make_report("verify-theorem1", config, payload, __version__)
    _emit(report, out_dir, started, _theorem_files(record))
    return 0 if record.passed else 3


def _cone_from_payload(cone_payload_dict):
    clusters = []
    for c in cone_payload_dict["clusters"]:
        clusters.append(
            DirectionCluster(
                centroid=projective_from_vector(np.asarray(c["centroid"])),
                member_ids=tuple(c.get("member_ids", ())),
                spread=float(c.get("spread", 0.0)),
                dim=c.get("dim"),
            )
        )
    return TangentConeEstimate(
        center=None,
        r_loc=float(cone_payload_dict.get("r_loc", float("nan"))),
        clusters=tuple(clusters),
    )


def _cmd_context_map(args):
    started = time.time()
    out_dir = _ensure_out(args)
    table = dio.ingest(args.table, args.in_format)
    with open(args.sequence, "r", encoding="utf-8") as fh:
        token_ids = json.load(fh)
    if not isinstance(token_ids, list) or not all(
        isinstance(t, int) for t in token_ids
    ):
        raise DesingError(f"{args.sequence}: expected a JSON list of token ids")
    rows = table.points[token_ids]
    window = ContextWindow.from_sequence(rows, args.position, args.window_k)
    spec = (
        AggregatorSpec.mean()
        if args.aggregator == "mean"
        else AggregatorSpec.from_json_file(args.aggregator)
    )
    point = context_map(window, spec, table.n)
    payload = {
        "token_id": token_ids[args.position],
        "position": args.position,
        "window_size": len(window),
        "divisor_point": point.rep.tolist(),
        "nearest_component": None,
        "hybrid": None,
    }
    if args.cone_report:
        stored = load_report(args.cone_report)
        payload["nearest_component"] = nearest_divisor_component(
            point, _cone_from_payload(stored["payload"]["cone"])
        )
    if args.locus_report:
        stored = load_report(args.locus_report)
        singular_ids = set(stored["payload"]["singular_ids"])
        token = token_ids[args.position]
        if token in singular_ids:
            payload["hybrid"] = {
                "kind": "desingularized",
                "divisor_point": point.rep.tolist(),
            }
        else:
            payload["hybrid"] = {
                "kind": "regular",
                "vector": table.points[token].tolist(),
            }
    config = {
        "table": args.table,
        "in_format": args.in_format,
        "sequence": args.sequence,
        "position": args.position,
        "window_k": args.window_k,
        "aggregator": args.aggregator,
        "cone_report": args.cone_report,
        "locus_report": args.locus_report,
    }
    report = make_report("context-map", config, payload, __version__)
    _emit(report, out_dir, started)
    return 0


def _cmd_report(args):
    stored = load_report(args.input)
    for line in summary_lines(stored.get("command", ""), stored.get("payload", {})):
        print(line)
    payload = stored.get("payload", {})
    if payload.get("passed") is False:
        return 3
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="desing",
        description=(
            "Detect dimension-instability singularities in embedding clouds,"
            " blow them up, and verify geometric regularization."
        ),
    )
    parser.add_argument(
        "--version", action="version", version=f"%(prog)s {__version__}"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic cloud with ground truth")
    p.add_argument("--kind", required=True, choices=["flatpatch", "crossinglines", "union", "cone", "spherepatch"])
    p.add_argument("--n", type=int, required=True, help="ambient dimension")
    p.add_argument("--dims", required=True, help="comma list, e.g. 1,2")
    p.add_argument("--samples", required=True, help="comma list, e.g. 1500,1500")
    p.add_argument("--sigma", type=float, default=0.01, help="expected noise displacement")
    p.add_argument("--seed", type=int, required=True, help="Philox seed (required)")
    p.add_argument("--radius", type=float, default=1.0)
    p.add_argument("--min-angle-deg", type=float, default=30.0)
    p.add_argument("--opening-deg", type=float, default=45.0)
    p.add_argument("--no-center", action="store_true", help="omit the exact intersection point")
    p.add_argument("--out", default="cloud.csv", help="cloud filename inside --out-dir")
    p.add_argument("--out-format", choices=list(dio.FORMATS), default=dio.CSV_FORMAT)
    p.add_argument("--out-dir", default="desing-out")
    p.set_defaults(fn=_cmd_synth)

    p = sub.add_parser("detect", help="sweep the cloud for singular points")
    _add_io_args(p)
    _add_detector_args(p)
    p.add_argument("--workers", type=int, default=_default_workers(), help=f"thread count (default ${_WORKERS_ENV} or 1)")
    p.set_defaults(fn=_cmd_detect)

    p = sub.add_parser("blowup", help="blow up one point and report the construction")
    _add_io_args(p)
    _add_detector_args(p)
    _add_cone_args(p)
    p.set_defaults(fn=_cmd_blowup)

    p = sub.add_parser("verify-theorem1", help="blow up and check regularization at every exceptional point")
    _add_io_args(p)
    _add_detector_args(p)
    _add_cone_args(p)
    p.set_defaults(fn=_cmd_verify)

    p = sub.add_parser("context-map", help="aggregate a context window onto the divisor")
    p.add_argument("--table", required=True, help="embedding table file")
    p.add_argument("--in-format", choices=list(dio.FORMATS), default=dio.CSV_FORMAT)
    p.add_argument("--sequence", required=True, help="JSON list of token ids")
    p.add_argument("--position", type=int, required=True, help="index into the sequence")
    p.add_argument("--window-k", type=int, default=5, help="context radius in tokens")
    p.add_argument("--aggregator", default="mean", help="'mean' or a weights JSON path")
    p.add_argument("--cone-report", default=None, help="blowup/verify report for component lookup")
    p.add_argument("--locus-report", default=None, help="detect report for the hybrid branch")
    p.add_argument("--out-dir", default="desing-out")
    p.set_defaults(fn=_cmd_context_map)

    p = sub.add_parser("report", help="re-render a stored report")
    p.add_argument("--input", required=True, help="report.json path")
    p.set_defaults(fn=_cmd_report)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except DesingError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
