"""JSON and CSV forms of profiles, delta tables and definition reports.

JSON is written with sorted keys and a fixed layout so that equal inputs give
byte-identical files. Exact rationals are split into ``*_num``/``*_den``;
infinities are written as the string ``"inf"``.
"""

from __future__ import annotations

import csv
import io
import json
import math
from fractions import Fraction
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

from .harness import DeltaEstimate
from .reductions import AchievementRatio, ChernoffPlan, DefinitionReport, SphereMeasurement
from .strata import ConvergenceReport, DensityProfile, DensityValue


def jsonable(obj: Any) -> Any:
    if isinstance(obj, Fraction):
        return {"num": obj.numerator, "den": obj.denominator}
    if isinstance(obj, float):
        if math.isinf(obj):
            return "inf" if obj > 0 else "-inf"
        if math.isnan(obj):
            return "nan"
        return obj
    if isinstance(obj, Mapping):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    return obj


def dumps(doc: Any) -> str:
    return json.dumps(jsonable(doc), sort_keys=True, indent=2, allow_nan=False) + "\n"


def number_fields(prefix: str, value: Any) -> dict[str, Any]:
    if isinstance(value, Fraction):
        return {f"{prefix}_num": value.numerator, f"{prefix}_den": value.denominator}
    return {f"{prefix}_float": value}


def as_float(value: Any) -> float:
    if value == "inf":
        return math.inf
    return float(value)


def point_to_dict(p: DensityValue) -> dict[str, Any]:
    return {
        "n": p.n,
        "mode": p.mode,
        **number_fields("value", p.value),
        "half_width": p.half_width,
        "confidence": p.confidence,
        "samples": p.samples,
    }


def point_value(point: Mapping[str, Any]) -> Fraction | float:
    if "value_num" in point:
        return Fraction(point["value_num"], point["value_den"])
    return float(point["value_float"])


def classification_to_dict(r: ConvergenceReport | None) -> dict[str, Any] | None:
    if r is None:
        return None
    return {
        "class": r.label,
        "rho": r.rho,
        "d": r.d,
        "residual": r.residual,
        "exp_rate": r.exp_rate,
        "exp_residual": r.exp_residual,
        "radii": list(r.radii),
        "d_max": r.d_max,
        "strong_ratio": r.strong_ratio,
    }


def profile_to_dict(profile: DensityProfile, classification: ConvergenceReport | None = None) -> dict[str, Any]:
    return {
        "set_label": profile.label,
        "mode": profile.mode,
        "points": [point_to_dict(p) for p in profile.points],
        "classification": classification_to_dict(classification),
    }


def profile_rows(profile: DensityProfile) -> list[dict[str, Any]]:
    rows = []
    for p in profile.points:
        rows.append({
            "set_label": profile.label,
            "n": p.n,
            "mode": p.mode,
            "value": float(p.value),
            "value_exact": str(p.value) if p.exact else "",
            "half_width": p.half_width,
            "samples": p.samples,
        })
    return rows


def delta_to_dict(est: DeltaEstimate) -> dict[str, Any]:
    return {
        "x": est.x.bits,
        "n": est.n,
        "mode": est.mode,
        **number_fields("delta", est.delta),
        "half_width": est.half_width,
        "trials": est.trials,
        "mean_steps": est.mean_steps,
        "max_halting_steps": est.max_halting_steps,
        "outcome_histogram": dict(est.histogram),
    }


def delta_row(est: DeltaEstimate) -> dict[str, Any]:
    d = delta_to_dict(est)
    d["delta"] = float(est.delta)
    d["delta_exact"] = str(est.delta) if isinstance(est.delta, Fraction) else ""
    d["outcome_histogram"] = ";".join(f"{k}={v}" for k, v in est.histogram)
    for key in ("delta_num", "delta_den", "delta_float"):
        d.pop(key, None)
    return d


def ratio_to_dict(r: AchievementRatio) -> dict[str, Any]:
    return {
        "x": r.x.bits,
        "n": r.x.n,
        "mode": r.mode,
        "T": r.T,
        "mean_T": r.mean_T,
        **number_fields("delta", r.delta),
        **number_fields("ratio", r.ratio),
        "expected_ratio": r.expected_ratio,
        "halted": r.halted,
        "infinite": r.infinite,
    }


def ratio_row(r: AchievementRatio) -> dict[str, Any]:
    return {
        "x": r.x.bits,
        "n": r.x.n,
        "mode": r.mode,
        "T": "" if r.T is None else r.T,
        "delta": float(r.delta),
        "ratio": "inf" if r.infinite else float(r.ratio),
        "expected_ratio": "inf" if math.isinf(r.expected_ratio) else r.expected_ratio,
        "halted": r.halted,
    }


def plan_to_dict(plan: ChernoffPlan | None) -> dict[str, Any] | None:
    if plan is None:
        return None
    return {"n": plan.n, "c": plan.c, "k": plan.k, "epsilon": plan.epsilon}


def measurement_to_dict(m: SphereMeasurement) -> dict[str, Any]:
    return {
        "n": m.n,
        "fuel": m.fuel,
        "inputs": m.inputs,
        "densities": {k: point_to_dict(v) for k, v in m.densities().items()},
        "plan": plan_to_dict(m.plan),
    }


def definition_report_to_dict(r: DefinitionReport) -> dict[str, Any]:
    return {
        "inverter": r.inverter,
        "candidate": r.candidate,
        "c": r.c,
        "tested_degrees": list(r.degrees),
        "mode": r.mode,
        "rows": [measurement_to_dict(m) for m in r.rows],
        "verdicts": dict(r.verdicts),
        "classifications": {k: classification_to_dict(v) for k, v in r.classifications.items()},
        "settings": dict(r.settings),
    }


def definition_rows(r: DefinitionReport) -> list[dict[str, Any]]:
    rows = []
    for m in r.rows:
        row: dict[str, Any] = {"inverter": r.inverter, "candidate": r.candidate, "c": r.c, "n": m.n, "fuel": m.fuel}
        for key, d in m.densities().items():
            row[key] = float(d.value)
            row[f"{key}_half_width"] = d.half_width
        row["k"] = m.plan.k if m.plan else ""
        row["epsilon"] = m.plan.epsilon if m.plan else ""
        rows.append(row)
    return rows


def csv_text(rows: Sequence[Mapping[str, Any]], fieldnames: Iterable[str] | None = None) -> str:
    buf = io.StringIO()
    names = list(fieldnames) if fieldnames is not None else (list(rows[0]) if rows else [])
    writer = csv.DictWriter(buf, fieldnames=names, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


def write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    tmp.replace(path)
