"""Report assembly and serialization.

Reports are plain JSON with sorted keys and a fixed layout, so two
runs with the same configuration produce byte-identical files except
for the single "timing" subtree. Everything volatile (wall-clock,
durations) is quarantined there on purpose: determinism is a
contract, and diffing two reports should show real differences only.
"""

import json
import time
from dataclasses import asdict, is_dataclass

import numpy as np

from .geometry import ProjectivePoint

SCHEMA_VERSION = "1"


def to_jsonable(obj):
    """Recursively convert toolkit objects into JSON-serializable data."""
    if obj is None or isinstance(obj, (bool, int, str)):
        return obj
    if isinstance(obj, float):
        return obj
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return [to_jsonable(x) for x in obj.tolist()]
    if isinstance(obj, ProjectivePoint):
        return {"rep": obj.rep.tolist()}
    if is_dataclass(obj) and not isinstance(obj, type):
        return {k: to_jsonable(v) for k, v in asdict(obj).items()}
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, set, frozenset)):
        seq = sorted(obj) if isinstance(obj, (set, frozenset)) else obj
        return [to_jsonable(x) for x in seq]
    return repr(obj)


def profile_payload(profile):
    return {
        "point_id": to_jsonable(profile.point_id),
        "samples": [
            {"r": s.r, "volume": s.volume, "dim": s.dim}
            for s in profile.samples
        ],
    }


def witness_payload(witness):
    if witness is None:
        return None
    return {
        "r1": witness.r1,
        "r2": witness.r2,
        "dim_r1": witness.dim_r1,
        "dim_r2": witness.dim_r2,
        "variation": witness.variation,
    }


def locus_payload(locus):
    return {
        "params": params_payload(locus.params),
        "n_points": len(locus.verdicts),
        "counts": {
            status: sum(1 for v in locus.verdicts if v.status == status)
            for status in ("regular", "singular", "undetermined")
        },
        "singular_ids": list(locus.singular_ids),
        "witnesses": {
            str(i): witness_payload(w) for i, w in sorted(locus.witnesses.items())
        },
        "verdicts": [
            {
                "index": v.index,
                "status": v.status,
                "defined_samples": v.defined_samples,
                "witness": witness_payload(v.witness),
                "reason": v.reason,
            }
            for v in locus.verdicts
        ],
    }


def params_payload(params):
    est = params.estimator
    name = type(est).__name__
    return {
        "epsilon": params.epsilon,
        "r_max": params.r_max,
        "v_min": params.v_min,
        "estimator": name if name != "RegressionWindow" else f"{name}({est.w})",
        "grid_count": params.grid_count,
    }


def cone_payload(cone):
    return {
        "k": cone.k,
        "r_loc": cone.r_loc,
        "skipped_coincident": cone.skipped_coincident,
        "iterations": cone.iterations,
        "clusters": [
            {
                "centroid": c.centroid.rep.tolist(),
                "size": len(c.member_ids),
                "member_ids": list(c.member_ids),
                "spread": c.spread,
                "dim": c.dim,
            }
            for c in cone.clusters
        ],
    }


def theorem_payload(record):
    return {
        "center": {
            "index": record.center.index,
            "is_singular": record.center.is_singular,
            "variation": record.center.variation,
            "witness": witness_payload(record.center.witness),
            "profile": profile_payload(record.center.profile),
        },
        "cone": cone_payload(record.cone),
        "lambda": record.lam,
        "lambda_policy": record.lam_policy,
        "lifted_count": len(record.blownup.lifted),
        "exceptional_count": len(record.blownup.exceptional),
        "isomorphism_away_from_center": {
            "ok": record.iso_ok,
            **to_jsonable(record.iso_report),
        },
        "exceptional_verdicts": [
            {
                "cluster_index": v.cluster_index,
                "status": v.status,
                "max_variation": v.max_variation,
                "witness_r": list(v.witness_r) if v.witness_r else None,
                "median_dim": v.median_dim,
                "purity": list(v.purity),
                "unassigned_fraction": list(v.unassigned_fraction),
                "profile": profile_payload(v.profile),
            }
            for v in record.verdicts
        ],
        "passed": record.passed,
    }


def make_report(command, config, payload, version):
    return {
        "schema_version": SCHEMA_VERSION,
        "tool": {"name": "desing", "version": version},
        "command": command,
        "config": to_jsonable(config),
        "payload": to_jsonable(payload),
        "timing": {},
    }


def finish_timing(report, started):
    report["timing"] = {
        "started_unix": started,
        "elapsed_s": time.time() - started,
    }
    return report


def dump_report(report, path):
    text = json.dumps(report, sort_keys=True, indent=2) + "\n"
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)
    return text


def load_report(path):
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def strip_timing(report):
    """Copy of a report dict with the volatile subtree removed; two
    deterministic runs must agree on this projection byte for byte."""
    out = {k: v for k, v in report.items() if k != "timing"}
    return json.dumps(out, sort_keys=True, indent=2)


def profile_csv(profile):
    """Log-log plot data for one point: r, V, dim per line; dim is the
    empty field where undefined."""
    lines = ["r,V,dim"]
    for s in profile.samples:
        dim = "" if s.dim is None else repr(s.dim)
        lines.append(f"{s.r!r},{s.volume},{dim}")
    return "\n".join(lines) + "\n"


def summary_lines(command, payload):
    """Human-oriented one-screen summary for stdout."""
    lines = []
    if command == "detect":
        counts = payload["counts"]
        lines.append(
            f"points: {payload['n_points']}  regular: {counts['regular']}"
            f"  singular: {counts['singular']}"
            f"  undetermined: {counts['undetermined']}"
        )
        if payload["singular_ids"]:
            shown = ", ".join(str(i) for i in payload["singular_ids"][:20])
            more = len(payload["singular_ids"]) - 20
            lines.append(
                "singular ids: " + shown + (f" (+{more} more)" if more > 0 else "")
            )
    elif command in ("blowup", "verify-theorem1"):
        lines.append(
            f"center index: {payload['center']['index']}"
            f"  variation: {_fmt(payload['center']['variation'])}"
            f"  singular: {payload['center']['is_singular']}"
        )
        lines.append(
            f"cone: k={payload['cone']['k']}"
            f"  lambda={_fmt(payload['lambda'])} ({payload['lambda_policy']})"
            f"  lifted={payload['lifted_count']}"
        )
        for v in payload.get("exceptional_verdicts", []):
            lines.append(
                f"  exceptional[{v['cluster_index']}]"
                f" status={v['status']}"
                f" max_variation={_fmt(v['max_variation'])}"
                f" median_dim={_fmt(v['median_dim'])}"
            )
        if "passed" in payload:
            lines.append(f"theorem verdict: {'PASS' if payload['passed'] else 'FAIL'}")
    elif command == "context-map":
        lines.append(f"divisor point: {payload['divisor_point']}")
        if payload.get("nearest_component") is not None:
            lines.append(f"nearest component: {payload['nearest_component']}")
    elif command == "synth":
        lines.append(
            f"wrote {payload['n_points']} points in R^{payload['n']}"
            f" to {payload['cloud_path']}"
        )
    return lines


def _fmt(x):
    return "n/a" if x is None else f"{x:.4f}"
