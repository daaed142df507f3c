"""Command-line batch runner for modulus and duality experiments.

A run reads one JSON document describing experiments, builds every scene up
front (so malformed configs fail before anything is written), runs the
independent (scene, class, p, task) jobs on a thread pool and writes
``report.json``, ``summary.csv`` and ``run.log`` in job-key order.

Config layout::

    {
      "seed": 0,
      "outputs": {"dir": "out", "formats": ["json", "csv", "log"]},
      "experiments": [
        {"scene": "flat_torus", "params": {"lengths": [2, 1], "resolution": 32},
         "sweep": {"resolution": [16, 32]},
         "classes": ["x"], "p": [1.5, 2, 3],
         "tasks": ["dmod", "duality", "cmod", "corollary"],
         "solver": {"tolerance": 1e-8, "max_iter": 200},
         "cmod": {"max_outer": 50, "warm_start": ["explicit", "forms"]},
         "assertions": {"dmod_product_tol": {"2": 1e-6, "default": 1e-3}}}
      ]
    }

A single experiment may also be given at the top level instead of a list.
"""

from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import logging
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from . import __version__
from .cmod import CmodOptions, check_corollary, form_density, minimize_cmod
from .dmod import (SolverOptions, complementary, conjugate, identify_dual_class,
                   minimize_dmod, verify_duality)
from .errors import ConfigError, ModwedgeError, UnknownScene
from .homology import relative_homology
from .scenes import SCENES, format_params, get_scene, list_scenes

log = logging.getLogger("modwedge")

EXIT_OK, EXIT_CONFIG, EXIT_ASSERTION, EXIT_NOT_CONVERGED = 0, 2, 3, 4
TASKS = ("dmod", "duality", "cmod", "corollary")
FORMATS = ("json", "csv", "log")
CSV_VERSION = "modwedge-summary v1"
CSV_COLUMNS = ["scene", "params", "class", "p", "task", "value", "product", "residual",
               "iterations"]
ASSERTION_KEYS = {"dmod_product_tol", "expected_rtol", "integer_tol",
                  "classical_product_max", "classical_strictly_decreasing"}
EXPERIMENT_KEYS = {"scene", "params", "sweep", "classes", "p", "tasks", "solver", "cmod",
                   "assertions"}
WARM_STARTS = ("explicit", "forms")


# --- serialization -------------------------------------------------------------

def fmt_float(x) -> str:
    """Seventeen significant digits, enough to round-trip a double."""
    return "%.17g" % x


def _encode(obj) -> str:
    """JSON text with every float written by ``fmt_float``; non-finite floats become null."""
    if isinstance(obj, dict):
        items = (f"{json.dumps(str(k))}: {_encode(v)}" for k, v in obj.items())
        return "{" + ", ".join(items) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(_encode(v) for v in obj) + "]"
    if isinstance(obj, np.ndarray):
        return _encode(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return fmt_float(float(obj)) if math.isfinite(obj) else "null"
    if obj is None:
        return "null"
    return json.dumps(str(obj))


# --- configuration -------------------------------------------------------------

@dataclass
class Experiment:
    """One validated experiment block with its scenes already built."""

    index: int
    scene: str
    variants: list
    classes: list
    ps: list
    tasks: list
    solver: SolverOptions
    cmod: CmodOptions
    warm_start: list
    assertions: dict


@dataclass
class ExperimentConfig:
    """A validated run configuration."""

    seed: int
    out_dir: str | None
    formats: list
    experiments: list = field(default_factory=list)


def _options(cls, doc, what, skip=()):
    if doc is None:
        return cls(), {}
    if not isinstance(doc, dict):
        raise ConfigError(f"{what} must be an object")
    names = {f.name for f in fields(cls)}
    extra = {k: v for k, v in doc.items() if k in skip}
    unknown = set(doc) - names - set(skip)
    if unknown:
        raise ConfigError(f"unknown {what} option(s): {', '.join(sorted(unknown))}")
    kwargs = {k: v for k, v in doc.items() if k in names}
    for key, value in kwargs.items():
        if isinstance(value, (int, float)) and not isinstance(value, bool) and value <= 0 \
                and key not in ("max_winding", "seed"):
            raise ConfigError(f"{what} option {key} must be positive")
    try:
        return cls(**kwargs), extra
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def _check_p(p):
    if isinstance(p, bool) or not isinstance(p, (int, float)) or not 1 < p < math.inf:
        raise ConfigError(f"exponent {p!r} must satisfy 1 < p < inf")
    return float(p)


def _variants(block):
    base = block.get("params") or {}
    if isinstance(base, str):
        from .scenes import parse_params
        base = parse_params(base)
    if not isinstance(base, dict):
        raise ConfigError("params must be an object or a key=value;... string")
    sweep = block.get("sweep") or {}
    if not isinstance(sweep, dict) or any(not isinstance(v, list) or not v
                                          for v in sweep.values()):
        raise ConfigError("sweep must map parameter names to non-empty lists")
    keys = list(sweep)
    combos = itertools.product(*(sweep[k] for k in keys)) if keys else [()]
    return [{**base, **dict(zip(keys, combo))} for combo in combos]


def load_config(path, seed=None) -> ExperimentConfig:
    """Read and validate a config, building every scene it names.

    Raises:
        ConfigError: unreadable file, malformed document, unknown scene or
            class, bad exponent or tolerance.
    """
    try:
        doc = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("the config must be a JSON object")
    blocks = doc.get("experiments")
    if blocks is None:
        blocks = [{k: v for k, v in doc.items() if k in EXPERIMENT_KEYS}]
    if not isinstance(blocks, list) or not blocks:
        raise ConfigError("experiments must be a non-empty list")
    outputs = doc.get("outputs") or {}
    if not isinstance(outputs, dict):
        raise ConfigError("outputs must be an object")
    formats = outputs.get("formats", list(FORMATS))
    if not isinstance(formats, list) or any(f not in FORMATS for f in formats):
        raise ConfigError(f"outputs.formats must be a subset of {list(FORMATS)}")
    seed_value = doc.get("seed", 0) if seed is None else seed
    if isinstance(seed_value, bool) or not isinstance(seed_value, int):
        raise ConfigError("seed must be an integer")
    cfg = ExperimentConfig(seed_value, outputs.get("dir"), formats)
    for i, block in enumerate(blocks):
        cfg.experiments.append(_experiment(i, block, seed_value))
    return cfg


def _experiment(i, block, seed) -> Experiment:
    if not isinstance(block, dict):
        raise ConfigError(f"experiment {i} must be an object")
    unknown = set(block) - EXPERIMENT_KEYS
    if unknown:
        raise ConfigError(f"experiment {i}: unknown key(s) {', '.join(sorted(unknown))}")
    name = block.get("scene")
    if name not in SCENES:
        raise ConfigError(f"experiment {i}: unknown scene {name!r}")
    ps = block.get("p", [2.0])
    if not isinstance(ps, list) or not ps:
        raise ConfigError(f"experiment {i}: p must be a non-empty list")
    ps = [_check_p(p) for p in ps]
    tasks = block.get("tasks", ["duality"])
    if not isinstance(tasks, list) or not tasks or any(t not in TASKS for t in tasks):
        raise ConfigError(f"experiment {i}: tasks must be a non-empty subset of {list(TASKS)}")
    solver, _ = _options(SolverOptions, block.get("solver"), "solver")
    solver.seed = seed
    cmod, extra = _options(CmodOptions, block.get("cmod"), "cmod", skip=("warm_start",))
    warm = extra.get("warm_start", list(WARM_STARTS))
    if not isinstance(warm, list) or any(w not in WARM_STARTS for w in warm):
        raise ConfigError(f"cmod.warm_start must be a subset of {list(WARM_STARTS)}")
    assertions = block.get("assertions") or {}
    if not isinstance(assertions, dict) or set(assertions) - ASSERTION_KEYS:
        raise ConfigError(f"experiment {i}: assertions must use keys {sorted(ASSERTION_KEYS)}")
    _check_tolerances(i, assertions)
    variants = []
    for params in _variants(block):
        try:
            scene = get_scene(name, params)
        except ModwedgeError as exc:
            raise ConfigError(f"experiment {i}: {exc}") from exc
        variants.append(scene)
    classes = block.get("classes")
    if classes is None:
        classes = [lab for lab in variants[0].featured_classes if lab not in variants[0].flags]
    if not isinstance(classes, list) or not classes:
        raise ConfigError(f"experiment {i}: classes must be a non-empty list")
    for scene in variants:
        for lab in classes:
            if lab not in scene.featured_classes:
                raise ConfigError(f"experiment {i}: scene {name} has no class {lab!r}")
    return Experiment(i, name, variants, classes, ps, tasks, solver, cmod, warm, assertions)


def _check_tolerances(i, assertions):
    for key in ("dmod_product_tol", "expected_rtol", "integer_tol", "classical_product_max"):
        if key not in assertions:
            continue
        val = assertions[key]
        vals = val.values() if isinstance(val, dict) else [val]
        for v in vals:
            if isinstance(v, bool) or not isinstance(v, (int, float)) or not v > 0:
                raise ConfigError(f"experiment {i}: {key} must be positive")
        if isinstance(val, dict):
            for k in val:
                if k != "default":
                    try:
                        float(k)
                    except ValueError as exc:
                        raise ConfigError(f"experiment {i}: bad exponent key {k!r}") from exc


def _tol_for(spec, p):
    if not isinstance(spec, dict):
        return float(spec)
    for k, v in spec.items():
        if k != "default" and float(k) == p:
            return float(v)
    if "default" in spec:
        return float(spec["default"])
    return None


# --- jobs --------------------------------------------------------------------

@dataclass
class Job:
    key: tuple
    experiment: Experiment
    variant: int
    label: str
    p: float
    task: str


@dataclass
class Outcome:
    job: Job
    record: dict
    row: dict
    converged: bool
    log_lines: list


def _jobs(cfg: ExperimentConfig) -> list:
    jobs = []
    for exp in cfg.experiments:
        for v, _ in enumerate(exp.variants):
            for lab in exp.classes:
                for p in exp.ps:
                    for task in exp.tasks:
                        key = (exp.index, v, exp.classes.index(lab), exp.ps.index(p),
                               TASKS.index(task))
                        jobs.append(Job(key, exp, v, lab, p, task))
    return sorted(jobs, key=lambda j: j.key)


def _expected(scene, quantity, label, p):
    e = scene.expected_for(quantity, label)
    return None if e is None else e.to_json(p)


def _dual_class(scene, label, p, opts):
    """The featured dual class, or the class identified from the p-minimizer."""
    X = scene.complex
    c = scene.featured_classes[label]
    if label in scene.duals:
        return scene.featured_classes[scene.duals[label]]
    omega = minimize_dmod(X, c, p, opts).minimizer
    y = identify_dual_class(X, omega, c.rel)
    Hd = relative_homology(X, X.dimension - c.degree, complementary(c.rel))
    return Hd.homology_class([float(v) for v in y], label=f"PD({label})")


def _run_job(job: Job) -> Outcome:
    exp = job.experiment
    scene = exp.variants[job.variant]
    X = scene.complex
    c = scene.featured_classes[job.label]
    p = job.p
    head = {"scene": scene.name, "params": format_params(scene.params), "class": job.label,
            "p": p, "task": job.task}
    row = dict(head, value=None, product=None, residual=None, iterations=None)
    lines = [f"job {_key_text(job)} {head['scene']} [{head['params']}] class {job.label} "
             f"p {fmt_float(p)} task {job.task}"]
    record = dict(head)
    try:
        converged = _dispatch(job, scene, X, c, p, exp, record, row, lines)
    except ModwedgeError as exc:
        record["error"] = f"{type(exc).__name__}: {exc}"
        lines.append(f"  error {record['error']}")
        converged = False
    record["converged"] = converged
    return Outcome(job, record, row, converged, lines)


def _dmod_lines(res, lines, name):
    for it, delta, val, res_norm in res.history:
        lines.append(f"  {name} iter {it} smoothing {fmt_float(delta)} objective "
                     f"{fmt_float(val)} gradient {fmt_float(res_norm)}")
    lines.append(f"  {name} value {fmt_float(res.value)} residual {fmt_float(res.residual)} "
                 f"converged {res.converged}")


def _cmod_lines(res, lines, name):
    for rnd, lo, up, ell, n_active in res.history:
        lines.append(f"  {name} round {rnd} lower {fmt_float(lo)} upper {fmt_float(up)} "
                     f"oracle {fmt_float(ell)} active {n_active}")
    lines.append(f"  {name} bracket [{fmt_float(res.value_lower)}, "
                 f"{fmt_float(res.value_upper)}] converged {res.converged}")


def _warm(scene, label, exp, X, c, p):
    cands = []
    if "explicit" in exp.warm_start and label in scene.densities:
        cands.append(scene.densities[label])
    if "forms" in exp.warm_start:
        cands.append(form_density(X, minimize_dmod(X, c, p, exp.solver).minimizer))
    return cands or None


def _dispatch(job, scene, X, c, p, exp, record, row, lines) -> bool:
    if job.task == "dmod":
        res = minimize_dmod(X, c, p, exp.solver)
        record["result"] = res.to_json()
        record["expected"] = _expected(scene, "dmod", job.label, p)
        row.update(value=res.value, residual=res.residual, iterations=res.iterations)
        _dmod_lines(res, lines, "dmod")
        return res.converged
    if job.task == "duality":
        rep = verify_duality(X, c, p, exp.solver)
        record["result"] = rep.to_json()
        record["expected"] = _expected(scene, "dmod", job.label, p)
        record["expected_product"] = _expected(scene, "dmod_product", job.label, p)
        row.update(value=rep.dmod_p_c, product=rep.product,
                   residual=max(rep.result_p.residual, rep.result_q.residual),
                   iterations=rep.result_p.iterations + rep.result_q.iterations)
        _dmod_lines(rep.result_p, lines, "dmod_p")
        _dmod_lines(rep.result_q, lines, "dmod_q")
        lines.append(f"  product {fmt_float(rep.product)} pairing {fmt_float(rep.pairing_check)}")
        return rep.converged
    if job.task == "cmod":
        res = minimize_cmod(X, c, p, exp.cmod, rho0=_warm(scene, job.label, exp, X, c, p))
        record["result"] = res.to_json()
        record["expected"] = (_expected(scene, "cmod", job.label, p)
                              or _expected(scene, "cmod_upper", job.label, p))
        row.update(value=res.value_upper, residual=res.value_upper - res.value_lower,
                   iterations=res.iterations)
        _cmod_lines(res, lines, "cmod")
        return res.converged
    # corollary: a certified upper bound on both factors is the deliverable, so
    # an open bracket does not count as non-convergence
    q = conjugate(p)
    cprime = _dual_class(scene, job.label, p, exp.solver)
    rep = check_corollary(X, c, cprime, p, exp.cmod,
                          rho_c=_warm(scene, job.label, exp, X, c, p),
                          rho_cprime=_warm(scene, scene.duals.get(job.label, ""), exp, X,
                                           cprime, q))
    record["result"] = rep.to_json()
    record["expected_product"] = _expected(scene, "cmod_product_upper", job.label, p)
    row.update(value=rep.result_p.value_upper, product=rep.product_upper,
               residual=rep.product_upper - rep.product_lower,
               iterations=rep.result_p.iterations + rep.result_q.iterations)
    _cmod_lines(rep.result_p, lines, "cmod_p")
    _cmod_lines(rep.result_q, lines, "cmod_q")
    lines.append(f"  classical product in [{fmt_float(rep.product_lower)}, "
                 f"{fmt_float(rep.product_upper)}]")
    return rep.result_p.certified_length >= 1 - 1e-9 and rep.result_q.certified_length >= 1 - 1e-9


def _key_text(job):
    return ".".join(str(k) for k in job.key)


# --- assertions -----------------------------------------------------------------

def _compare(value, exp_doc, rtol):
    target = exp_doc["value"]
    rel = exp_doc["relation"]
    if rel == "eq":
        return abs(value - target) <= rtol * max(abs(target), 1e-300)
    if rel == "le":
        return value <= target * (1 + rtol)
    return value < target


def check_assertions(outcomes) -> list:
    """Evaluate the configured assertions; returns one dict per check."""
    checks = []

    def add(job, name, ok, detail):
        checks.append({"job": _key_text(job), "assertion": name, "passed": bool(ok),
                       "detail": detail})

    for out in outcomes:
        job, rec, a = out.job, out.record, out.job.experiment.assertions
        if "error" in rec:
            continue
        res = rec["result"]
        if job.task == "duality" and "dmod_product_tol" in a:
            tol = _tol_for(a["dmod_product_tol"], job.p)
            if tol is not None:
                dev = abs(res["product"] - 1)
                add(job, "dmod_product_tol", dev <= tol,
                    f"|product-1| = {fmt_float(dev)} vs {fmt_float(tol)}")
        if job.task == "duality" and "integer_tol" in a and res["integerness_gap"] is not None:
            gap = res["integerness_gap"]
            add(job, "integer_tol", gap <= a["integer_tol"], f"gap {fmt_float(gap)}")
        if "expected_rtol" in a and rec.get("expected") and job.task in ("dmod", "duality",
                                                                          "cmod"):
            value = out.row["value"]
            ok = _compare(value, rec["expected"], float(a["expected_rtol"]))
            add(job, "expected_rtol", ok, f"value {fmt_float(value)} vs "
                f"{rec['expected']['relation']} {fmt_float(rec['expected']['value'])}")
        if job.task == "corollary" and "classical_product_max" in a:
            up = res["product_upper"]
            add(job, "classical_product_max", up <= a["classical_product_max"],
                f"product_upper {fmt_float(up)} vs {fmt_float(a['classical_product_max'])}")
    # monotonicity across sweep variants, per experiment, class and p
    groups = {}
    for out in outcomes:
        job = out.job
        if job.task == "corollary" and job.experiment.assertions.get(
                "classical_strictly_decreasing") and "error" not in out.record:
            groups.setdefault((job.experiment.index, job.label, job.p), []).append(out)
    for (_, label, p), outs in sorted(groups.items()):
        vals = [o.record["result"]["product_upper"] for o in sorted(outs, key=lambda o: o.job.key)]
        ok = all(b < a for a, b in zip(vals, vals[1:])) and all(v < 1 for v in vals)
        add(outs[0].job, "classical_strictly_decreasing", ok,
            f"class {label} p {fmt_float(p)} products " + ", ".join(map(fmt_float, vals)))
    return checks


# --- output ------------------------------------------------------------------------

def summary_csv(outcomes) -> str:
    """CSV summary with a versioned header comment and fixed column order."""
    buf = io.StringIO()
    buf.write(f"# {CSV_VERSION}: {','.join(CSV_COLUMNS)}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for out in outcomes:
        row = out.row
        writer.writerow([fmt_float(row[c]) if isinstance(row[c], float)
                         else ("" if row[c] is None else row[c]) for c in CSV_COLUMNS])
    return buf.getvalue()


def resolve_out_dir(cli_out, cfg: ExperimentConfig) -> Path:
    """--out, then MODWEDGE_OUT, then outputs.dir, then ./modwedge-out."""
    for candidate in (cli_out, os.environ.get("MODWEDGE_OUT"), cfg.out_dir):
        if candidate:
            return Path(candidate)
    return Path("modwedge-out")


def run(config_path, jobs: int = 1, out=None, seed=None) -> int:
    """Execute a config; returns the process exit code."""
    try:
        cfg = load_config(config_path, seed)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if jobs < 1:
        print("config error: --jobs must be at least 1", file=sys.stderr)
        return EXIT_CONFIG
    out_dir = resolve_out_dir(out, cfg)
    job_list = _jobs(cfg)
    log.info("running %d job(s) on %d worker(s)", len(job_list), jobs)
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        outcomes = list(pool.map(_run_job, job_list))
    checks = check_assertions(outcomes)
    all_converged = all(o.converged for o in outcomes)
    all_passed = all(c["passed"] for c in checks)
    if not all_converged:
        code = EXIT_NOT_CONVERGED
    elif not all_passed:
        code = EXIT_ASSERTION
    else:
        code = EXIT_OK
    report = {"version": __version__, "config": str(config_path), "seed": cfg.seed,
              "jobs": [o.record for o in outcomes], "assertions": checks,
              "all_converged": all_converged, "all_assertions_passed": all_passed,
              "exit_code": code}
    out_dir.mkdir(parents=True, exist_ok=True)
    if "json" in cfg.formats:
        (out_dir / "report.json").write_text(_encode(report) + "\n")
    if "csv" in cfg.formats:
        (out_dir / "summary.csv").write_text(summary_csv(outcomes))
    if "log" in cfg.formats:
        text = [line for o in outcomes for line in o.log_lines]
        text += [f"assertion {c['assertion']} job {c['job']} "
                 f"{'PASS' if c['passed'] else 'FAIL'}: {c['detail']}" for c in checks]
        text.append(f"exit {code}")
        (out_dir / "run.log").write_text("\n".join(text) + "\n")
    for o in outcomes:
        r = o.row
        print(f"{r['scene']:<14} {r['params']:<32} {r['class']:<8} p={fmt_float(r['p']):<4} "
              f"{r['task']:<9} value={'' if r['value'] is None else fmt_float(r['value'])} "
              f"product={'' if r['product'] is None else fmt_float(r['product'])} "
              f"converged={o.converged}")
    for c in checks:
        if not c["passed"]:
            print(f"assertion failed: {c['assertion']} (job {c['job']}): {c['detail']}")
    print(f"wrote {out_dir}")
    return code


def export_mesh(name, params) -> str:
    """JSON for the complex of a scene: cells, markings and incidence."""
    scene = get_scene(name, params)
    return _encode({"scene": name, "params": scene.params,
                    "complex": scene.complex.to_json(),
                    "classes": {lab: c.representative().to_json()
                                for lab, c in scene.featured_classes.items()}})


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="modwedge",
                                     description="Form and classical modulus experiments.")
    parser.add_argument("--version", action="version", version=f"modwedge {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0,
                        help="log progress to stderr (-vv for per-iteration detail)")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run a JSON experiment config")
    p_run.add_argument("config")
    p_run.add_argument("--jobs", type=int, default=1, help="concurrent jobs")
    p_run.add_argument("--out", help="output directory (overrides MODWEDGE_OUT)")
    p_run.add_argument("--seed", type=int, help="override the config seed")
    sub.add_parser("list-scenes", help="list registered scenes")
    p_desc = sub.add_parser("describe", help="describe a scene")
    p_desc.add_argument("scene")
    p_desc.add_argument("params", nargs="?", default="",
                        help="key=value;key=value (defaults when omitted)")
    p_exp = sub.add_parser("export-mesh", help="print a scene complex as JSON")
    p_exp.add_argument("scene")
    p_exp.add_argument("params", nargs="?", default="")
    p_exp.add_argument("-o", "--output", help="write to a file instead of stdout")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = {0: logging.WARNING, 1: logging.INFO}.get(args.verbose, logging.DEBUG)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "run":
            return run(args.config, args.jobs, args.out, args.seed)
        if args.command == "list-scenes":
            print(list_scenes())
            return EXIT_OK
        if args.command == "describe":
            if args.scene not in SCENES:
                raise UnknownScene(f"unknown scene {args.scene!r}")
            entry = SCENES[args.scene]
            print(f"{args.scene}: {entry.summary}")
            for key, (_, default, doc) in entry.schema.items():
                print(f"  param {key} (default {default}): {doc}")
            print(get_scene(args.scene, args.params).describe())
            return EXIT_OK
        text = export_mesh(args.scene, args.params)
        if args.output:
            Path(args.output).write_text(text + "\n")
        else:
            print(text)
        return EXIT_OK
    except (UnknownScene, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
