"""Command-line experiment runner.

Usage::

    owfbench check   --config exp.yaml [--out DIR] [--seed N] [--exact|--sampled]
    owfbench density --config exp.yaml ...
    owfbench delta   --config exp.yaml ...
    owfbench amplify --config exp.yaml ...
    owfbench ratio   --config exp.yaml ...
    owfbench compare REPORT.json REPORT.json [...] [--out DIR]

The config is a flat YAML mapping (see ``CONFIG_KEYS``). Every run writes
``<verb>.json`` and ``<verb>.csv`` into the output directory, and only after
the whole experiment has finished.

Exit codes: 0 success, 2 config error, 3 cap violation, 4 I/O error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any, Callable, Sequence

import yaml

from . import __version__
from .candidates import CANDIDATES, INVERTERS, build_candidate, build_inverter
from .harness import DEFAULT_TAPE_CAP, CandidateFunction, InverterProgram, measure_delta, pmap, success_set
from .reductions import (
    TapeBudgetError,
    amplify,
    chernoff_plan,
    clip,
    definition_check,
    ratio_from_delta,
)
from .reports import (
    csv_text,
    definition_report_to_dict,
    definition_rows,
    delta_row,
    delta_to_dict,
    dumps,
    point_value,
    profile_rows,
    profile_to_dict,
    ratio_row,
    ratio_to_dict,
    write_text,
)
from .strata import (
    DEFAULT_CONFIDENCE,
    DEFAULT_ENUMERATION_CAP,
    EXACT,
    REFERENCE_SETS,
    SAMPLED,
    CapExceeded,
    DensityProfile,
    Sphere,
    classify_convergence,
    density_profile,
    exact_density,
    mc_density,
    sample_input,
)

log = logging.getLogger("owfbench")

EXIT_OK, EXIT_CONFIG, EXIT_CAP, EXIT_IO = 0, 2, 3, 4
VERBS = ("density", "delta", "check", "amplify", "ratio")


class ConfigError(ValueError):
    pass


CONFIG_KEYS = {
    "candidate": "registry name of the candidate function (required)",
    "weights": "weight count w for subset_sum",
    "inverter": "inverter name or list of names (required except for density with 'set')",
    "set": "reference set name for the density verb instead of a success set",
    "n_min": "smallest radius (required)",
    "n_max": "largest radius (required)",
    "n_step": "radius step (default 1)",
    "c": "exponent c or list of exponents (default 1)",
    "seed": "64-bit seed (required)",
    "mode": "exact or sampled (default exact)",
    "trials": "coin tapes per input in sampled mode (default 1000)",
    "inputs": "inputs per sphere in sampled mode (default 256)",
    "samples": "inputs per sphere for sampled density (default 1000)",
    "fuel": "absolute fuel per run",
    "fuel_degree": "polynomial fuel schedule: fuel_scale * n**fuel_degree",
    "fuel_scale": "multiplier for fuel_degree (default 1)",
    "confidence": "confidence level of Hoeffding intervals (default 0.95)",
    "degrees": "tested polynomial degrees for verdicts (default [1, 2, 3])",
    "repetitions": "amplify: fixed repetition count instead of the Chernoff plan",
    "tape_cap": "largest coin-tape length enumerated exactly (default 20)",
    "sphere_cap": "largest sphere enumerated exactly (default 24)",
    "workers": "threads used for per-input measurements (default 1)",
    "out": "output directory (default current directory)",
}


@dataclass(frozen=True)
class ExperimentConfig:
    candidate: str
    n_range: tuple[int, ...]
    seed: int
    inverters: tuple[str, ...] = ()
    set_name: str | None = None
    weights: int | None = None
    c_values: tuple[float, ...] = (1,)
    mode: str = EXACT
    trials: int = 1000
    inputs: int = 256
    samples: int = 1000
    fuel: int | None = None
    fuel_degree: float | None = None
    fuel_scale: int = 1
    confidence: float = DEFAULT_CONFIDENCE
    degrees: tuple[int, ...] = (1, 2, 3)
    repetitions: int | None = None
    tape_cap: int = DEFAULT_TAPE_CAP
    sphere_cap: int = DEFAULT_ENUMERATION_CAP
    workers: int = 1
    out: str = "."

    def fuel_at(self, n: int) -> int:
        if self.fuel is not None:
            return self.fuel
        return max(1, int(self.fuel_scale * n ** self.fuel_degree))

    def fuel_schedule(self) -> dict[str, Any]:
        if self.fuel is not None:
            return {"absolute": self.fuel}
        return {"scale": self.fuel_scale, "degree": self.fuel_degree}

    def candidate_params(self) -> dict[str, Any]:
        return {"w": self.weights} if self.weights is not None else {}

    def to_dict(self) -> dict[str, Any]:
        # execution details that cannot change results stay out of reports
        d = asdict(self)
        d.pop("out")
        d.pop("workers")
        return d


def _as_list(value: Any) -> list:
    return list(value) if isinstance(value, (list, tuple)) else [value]


def _int(raw: dict, key: str, default: int | None = None, minimum: int = 0) -> int | None:
    value = raw.get(key, default)
    if value is None:
        return None
    if isinstance(value, bool) or not isinstance(value, int) or value < minimum:
        raise ConfigError(f"{key} must be an integer >= {minimum}, got {value!r}")
    return value


def parse_config(raw: Any) -> ExperimentConfig:
    """Validate a raw mapping and resolve every registry name it mentions."""
    if not isinstance(raw, dict):
        raise ConfigError("config must be a key-value mapping")
    unknown = sorted(set(raw) - set(CONFIG_KEYS))
    if unknown:
        raise ConfigError(f"unknown config keys: {unknown}")
    for key in ("candidate", "n_min", "n_max", "seed"):
        if key not in raw:
            raise ConfigError(f"missing required key {key!r}")

    candidate = raw["candidate"]
    if candidate not in CANDIDATES:
        raise ConfigError(f"unknown candidate {candidate!r}; known: {sorted(CANDIDATES)}")
    seed = _int(raw, "seed")
    if seed >= 1 << 64:
        raise ConfigError("seed must fit in 64 bits")
    n_min, n_max = _int(raw, "n_min"), _int(raw, "n_max")
    n_step = _int(raw, "n_step", 1, minimum=1)
    n_range = tuple(range(n_min, n_max + 1, n_step))
    if not n_range:
        raise ConfigError("n range is empty")

    inverters = tuple(str(v) for v in _as_list(raw.get("inverter", [])))
    for name in inverters:
        if name not in INVERTERS:
            raise ConfigError(f"unknown inverter {name!r}; known: {sorted(INVERTERS)}")
        scope = INVERTERS[name][1]
        if scope is not None and candidate not in scope:
            raise ConfigError(f"inverter {name!r} does not apply to candidate {candidate!r}")
    set_name = raw.get("set")
    if set_name is not None and set_name not in REFERENCE_SETS:
        raise ConfigError(f"unknown reference set {set_name!r}; known: {sorted(REFERENCE_SETS)}")

    c_values = tuple(_as_list(raw.get("c", 1)))
    if not c_values or any(isinstance(c, bool) or not isinstance(c, (int, float)) or c <= 0 for c in c_values):
        raise ConfigError("c must be a positive number or a list of them")
    mode = raw.get("mode", EXACT)
    if mode not in (EXACT, SAMPLED):
        raise ConfigError(f"mode must be 'exact' or 'sampled', got {mode!r}")
    if "fuel" in raw and "fuel_degree" in raw:
        raise ConfigError("give either fuel or fuel_degree, not both")
    fuel = _int(raw, "fuel", minimum=1)
    fuel_degree = raw.get("fuel_degree")
    if fuel is None and fuel_degree is None:
        raise ConfigError("a fuel schedule is required: fuel or fuel_degree")
    if fuel_degree is not None and (not isinstance(fuel_degree, (int, float)) or fuel_degree < 0):
        raise ConfigError("fuel_degree must be a non-negative number")
    confidence = raw.get("confidence", DEFAULT_CONFIDENCE)
    if not isinstance(confidence, float) or not 0 < confidence < 1:
        raise ConfigError("confidence must be a float in (0, 1)")
    degrees = tuple(_as_list(raw.get("degrees", [1, 2, 3])))
    if not degrees or any(isinstance(e, bool) or not isinstance(e, int) or e < 1 for e in degrees):
        raise ConfigError("degrees must be positive integers")
    weights = _int(raw, "weights", minimum=1)
    if weights is not None and candidate != "subset_sum":
        raise ConfigError("weights only applies to subset_sum")
    out = raw.get("out", ".")
    if not isinstance(out, str):
        raise ConfigError("out must be a path string")

    return ExperimentConfig(
        candidate=candidate,
        n_range=n_range,
        seed=seed,
        inverters=inverters,
        set_name=set_name,
        weights=weights,
        c_values=c_values,
        mode=mode,
        trials=_int(raw, "trials", 1000, minimum=1),
        inputs=_int(raw, "inputs", 256, minimum=1),
        samples=_int(raw, "samples", 1000, minimum=1),
        fuel=fuel,
        fuel_degree=fuel_degree,
        fuel_scale=_int(raw, "fuel_scale", 1, minimum=1),
        confidence=confidence,
        degrees=degrees,
        repetitions=_int(raw, "repetitions", minimum=1),
        tape_cap=_int(raw, "tape_cap", DEFAULT_TAPE_CAP),
        sphere_cap=_int(raw, "sphere_cap", DEFAULT_ENUMERATION_CAP),
        workers=_int(raw, "workers", 1, minimum=1),
        out=out,
    )


def load_config(path: str | Path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    try:
        return yaml.safe_load(text) or {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"config is not valid YAML: {exc}") from None


# ---------------------------------------------------------------------------
# experiments


def _meta(verb: str, cfg: ExperimentConfig) -> dict[str, Any]:
    return {
        "verb": verb,
        "version": __version__,
        "seed": cfg.seed,
        "mode": cfg.mode,
        "caps": {"tape_cap": cfg.tape_cap, "sphere_cap": cfg.sphere_cap},
        "fuel": cfg.fuel_schedule(),
        "config": cfg.to_dict(),
    }


def _setup(cfg: ExperimentConfig) -> tuple[CandidateFunction, list[InverterProgram]]:
    f = build_candidate(cfg.candidate, **cfg.candidate_params())
    return f, [build_inverter(name, f, cfg.candidate) for name in cfg.inverters]


def _radii(cfg: ExperimentConfig, f: CandidateFunction) -> list[int]:
    radii = [n for n in cfg.n_range if f.accepts(n)]
    if not radii:
        raise ConfigError(f"no radius in {cfg.n_range[0]}..{cfg.n_range[-1]} lies in the domain of {f.name}")
    return radii


def _inputs(cfg: ExperimentConfig, n: int) -> list:
    if cfg.mode == EXACT:
        if n > cfg.sphere_cap:
            raise CapExceeded(f"sphere too large for exact mode: n={n} exceeds cap {cfg.sphere_cap}")
        return list(Sphere(n))
    return [sample_input(cfg.seed, n, j, purpose="inputs") for j in range(cfg.inputs)]


def _plans(radii: Sequence[int], c: float) -> list[dict[str, Any]]:
    return [
        {"n": n, "k": p.k, "epsilon": p.epsilon}
        for n in radii if n >= 2
        for p in [chernoff_plan(n, c)]
    ]


def run_density(cfg: ExperimentConfig) -> tuple[dict, str]:
    f, inverters = _setup(cfg)
    profiles: list[tuple[DensityProfile, dict[str, Any]]] = []
    if cfg.set_name is not None:
        R = REFERENCE_SETS[cfg.set_name]()
        prof = density_profile(R, cfg.n_range, cfg.mode, cfg.samples, cfg.seed, cfg.confidence, cfg.sphere_cap)
        profiles.append((prof, {}))
    else:
        if not inverters:
            raise ConfigError("density needs an inverter or a reference set")
        radii = _radii(cfg, f)
        for A in inverters:
            for c in cfg.c_values:
                points = []
                for n in radii:
                    S = success_set(A, f, n, c, cfg.fuel_at(n), cfg.mode, cfg.trials, cfg.seed,
                                    cfg.confidence, cfg.tape_cap, cfg.sphere_cap, cfg.workers)
                    if cfg.mode == EXACT:
                        points.append(exact_density(S, n, cfg.sphere_cap))
                    else:
                        points.append(mc_density(S, n, cfg.samples, cfg.seed, cfg.confidence))
                profiles.append((DensityProfile(S.label, tuple(points)),
                                 {"inverter": A.name, "c": c, "plans": _plans(radii, c)}))

    doc = _meta("density", cfg)
    doc["profiles"] = []
    rows = []
    for prof, extra in profiles:
        cls = classify_convergence(prof) if len(prof.points) >= 4 else None
        doc["profiles"].append({**profile_to_dict(prof, cls), **extra})
        rows.extend(profile_rows(prof))
    return doc, csv_text(rows)


def run_delta(cfg: ExperimentConfig) -> tuple[dict, str]:
    f, inverters = _setup(cfg)
    if not inverters:
        raise ConfigError("delta needs at least one inverter")
    doc = _meta("delta", cfg)
    doc["tables"] = []
    rows = []
    for A in inverters:
        entries = []
        for n in _radii(cfg, f):
            ests = pmap(lambda x: measure_delta(A, f, x, cfg.fuel_at(n), cfg.mode, cfg.trials, cfg.seed,
                                                cfg.confidence, cfg.tape_cap),
                        _inputs(cfg, n), cfg.workers)
            entries.extend(delta_to_dict(e) for e in ests)
            rows.extend({"inverter": A.name, **delta_row(e)} for e in ests)
        doc["tables"].append({"inverter": A.name, "rows": entries})
    return doc, csv_text(rows)


def _checks(cfg: ExperimentConfig, f: CandidateFunction, programs: Sequence[tuple[InverterProgram, float, dict]]) -> tuple[list, list]:
    reports, rows = [], []
    radii = _radii(cfg, f)
    for A, c, extra in programs:
        rep = definition_check(A, f, radii, c, cfg.fuel_at, cfg.degrees, cfg.mode, cfg.trials, cfg.inputs,
                               cfg.seed, cfg.confidence, cfg.tape_cap, cfg.sphere_cap, cfg.workers)
        reports.append({**definition_report_to_dict(rep), **extra})
        rows.extend(definition_rows(rep))
    return reports, rows


def run_check(cfg: ExperimentConfig) -> tuple[dict, str]:
    f, inverters = _setup(cfg)
    if not inverters:
        raise ConfigError("check needs at least one inverter")
    doc = _meta("check", cfg)
    doc["reports"], rows = _checks(cfg, f, [(A, c, {}) for A in inverters for c in cfg.c_values])
    return doc, csv_text(rows)


def run_amplify(cfg: ExperimentConfig) -> tuple[dict, str]:
    f, inverters = _setup(cfg)
    if not inverters:
        raise ConfigError("amplify needs at least one inverter")
    radii = _radii(cfg, f)
    programs = []
    for A in inverters:
        for c in cfg.c_values:
            base = A if A.total else clip(A, c)
            amp = amplify(base, f, c, repetitions=cfg.repetitions)
            plans = []
            for n in radii:
                k = cfg.repetitions if cfg.repetitions is not None else chernoff_plan(n, c).k
                plans.append({
                    "n": n,
                    "k": k,
                    "epsilon": chernoff_plan(n, c).epsilon if n >= 2 else None,
                    "segment_length": base.tape_length(n),
                    "tape_length": amp.tape_length(n),
                })
            programs.append((amp, c, {"base": A.name, "clipped": not A.total, "amplification": plans}))
    doc = _meta("amplify", cfg)
    doc["reports"], rows = _checks(cfg, f, programs)
    return doc, csv_text(rows)


def run_ratio(cfg: ExperimentConfig) -> tuple[dict, str]:
    f, inverters = _setup(cfg)
    if not inverters:
        raise ConfigError("ratio needs at least one inverter")
    doc = _meta("ratio", cfg)
    doc["tables"] = []
    rows = []
    for A in inverters:
        entries = []
        for n in _radii(cfg, f):
            ests = pmap(lambda x: measure_delta(A, f, x, cfg.fuel_at(n), cfg.mode, cfg.trials, cfg.seed,
                                                cfg.confidence, cfg.tape_cap),
                        _inputs(cfg, n), cfg.workers)
            ratios = [ratio_from_delta(e) for e in ests]
            entries.extend(ratio_to_dict(r) for r in ratios)
            rows.extend({"inverter": A.name, **ratio_row(r)} for r in ratios)
        doc["tables"].append({"inverter": A.name, "rows": entries})
    return doc, csv_text(rows)


RUNNERS: dict[str, Callable[[ExperimentConfig], tuple[dict, str]]] = {
    "density": run_density,
    "delta": run_delta,
    "check": run_check,
    "amplify": run_amplify,
    "ratio": run_ratio,
}


def run_experiment(verb: str, cfg: ExperimentConfig, out_dir: Path) -> tuple[Path, Path]:
    """Run one verb and write ``<verb>.json`` and ``<verb>.csv``; returns both paths."""
    doc, table = RUNNERS[verb](cfg)
    json_path, csv_path = out_dir / f"{verb}.json", out_dir / f"{verb}.csv"
    write_text(json_path, dumps(doc))
    write_text(csv_path, table)
    return json_path, csv_path


# ---------------------------------------------------------------------------
# comparison


def extract_series(doc: dict, key: str = "noticeable") -> list[dict[str, Any]]:
    """Per-radius density series of every experiment in a report.

    ``check``/``amplify`` reports contribute the ``key`` density of each
    (inverter, c) entry; ``density`` reports contribute each profile.
    """
    series = []
    if "profiles" in doc:
        for prof in doc["profiles"]:
            points = {p["n"]: (point_value(p), p["half_width"]) for p in prof["points"]}
            cls = prof.get("classification") or {}
            series.append({"label": prof["set_label"], "points": points, "class": cls.get("class")})
    elif "reports" in doc:
        for rep in doc["reports"]:
            points = {
                row["n"]: (point_value(row["densities"][key]), row["densities"][key]["half_width"])
                for row in rep["rows"]
            }
            cls = rep["classifications"].get(key) or {}
            series.append({"label": f"{rep['inverter']} c={rep['c']}", "points": points, "class": cls.get("class")})
    else:
        raise ConfigError("report has neither profiles nor definition reports")
    return series


def compare_profiles(docs: Sequence[dict], key: str = "noticeable") -> dict[str, Any]:
    """Align the first series of each report on common radii and take differences to the first."""
    if len(docs) < 2:
        raise ConfigError("compare needs at least two reports")
    series = []
    for doc in docs:
        found = extract_series(doc, key)
        if not found:
            raise ConfigError("a report contains no series")
        series.append(found[0])
    common = sorted(set.intersection(*(set(s["points"]) for s in series)))
    if not common:
        raise ConfigError("reports cover disjoint radius ranges")
    base = series[0]
    rows = []
    for n in common:
        row: dict[str, Any] = {"n": n}
        for i, s in enumerate(series):
            value, hw = s["points"][n]
            row[f"value_{i}"] = float(value)
            row[f"half_width_{i}"] = hw
            row[f"delta_{i}"] = float(value - base["points"][n][0])
        rows.append(row)
    return {
        "labels": [s["label"] for s in series],
        "classifications": [s["class"] for s in series],
        "radii": common,
        "rows": rows,
    }


# ---------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="owfbench", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"owfbench {__version__}")
    sub = parser.add_subparsers(dest="verb", required=True)
    for verb in VERBS:
        p = sub.add_parser(verb)
        p.add_argument("--config", required=True, help="flat YAML experiment config")
        p.add_argument("--out", help="output directory (overrides config 'out')")
        p.add_argument("--seed", type=int, help="override the config seed")
        group = p.add_mutually_exclusive_group()
        group.add_argument("--exact", dest="mode", action="store_const", const=EXACT)
        group.add_argument("--sampled", dest="mode", action="store_const", const=SAMPLED)
    p = sub.add_parser("compare")
    p.add_argument("reports", nargs="+", help="JSON reports to align")
    p.add_argument("--key", default="noticeable", help="density series to compare in check/amplify reports")
    p.add_argument("--out", help="directory for comparison.json / comparison.csv")
    return parser


def _compare(args: argparse.Namespace) -> int:
    docs = []
    for path in args.reports:
        try:
            docs.append(json.loads(Path(path).read_text()))
        except OSError as exc:
            print(f"error: cannot read {path}: {exc}", file=sys.stderr)
            return EXIT_IO
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path} is not a JSON report: {exc}") from None
    result = compare_profiles(docs, args.key)
    table = csv_text(result["rows"])
    for i, (label, cls) in enumerate(zip(result["labels"], result["classifications"])):
        print(f"# {i}: {label} [{cls or 'unclassified'}]")
    sys.stdout.write(table)
    if args.out:
        out = Path(args.out)
        write_text(out / "comparison.json", dumps(result))
        write_text(out / "comparison.csv", table)
    return EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        if args.verb == "compare":
            return _compare(args)
        raw = load_config(args.config)
        if args.seed is not None:
            raw = {**(raw if isinstance(raw, dict) else {}), "seed": args.seed}
        if args.mode is not None:
            raw = {**raw, "mode": args.mode}
        cfg = parse_config(raw)
        out_dir = Path(args.out if args.out is not None else cfg.out)
        paths = run_experiment(args.verb, cfg, out_dir)
    except (ConfigError, KeyError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (CapExceeded, TapeBudgetError) as exc:
        print(f"cap violation: {exc}", file=sys.stderr)
        return EXIT_CAP
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    for p in paths:
        print(p)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
