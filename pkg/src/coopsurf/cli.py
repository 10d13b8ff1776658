"""Command-line front end: ``run``, ``preset`` and ``compare``."""

from __future__ import annotations

import argparse
import hashlib
import itertools
import json
import os
import sys
import time
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import __version__
from . import config as config_mod
from .config import ScenarioConfig
from .coupling import AtomArray, casimir_shift_and_rate
from .dynamics import DriveField, simulate_decay, sweep_decay_vs_height
from .errors import ConfigError, CoopSurfError, GridMismatchError

ENV_OUTPUT_DIR = "COOPSURF_OUTPUT_DIR"
EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


def _fmt(x) -> str:
    return f"{x:.17g}"


def _tag(x) -> str:
    return f"{x:g}".replace(".", "p").replace("-", "m")


@dataclass(frozen=True)
class Case:
    wavelength: float
    n: int
    kd: float
    kh: float
    with_surface: bool

    @property
    def label(self) -> str:
        kind = "surface" if self.with_surface else "free"
        return f"{kind}_lam{_tag(self.wavelength)}_n{self.n}_kd{_tag(self.kd)}_kh{_tag(self.kh)}"


def decay_cases(cfg: ScenarioConfig, surface_present: bool):
    kinds = [True] if surface_present else [False]
    if surface_present and cfg.include_free_space:
        kinds.append(False)
    seen, cases = set(), []
    for kind, lam, n, kd, kh in itertools.product(kinds, cfg.wavelength, cfg.n, cfg.kd, cfg.kh_values()):
        if n == 1:
            kd = cfg.kd[0]  # spacing is irrelevant for a single atom
        c = Case(float(lam), int(n), float(kd), float(kh), kind)
        if c not in seen:
            seen.add(c)
            cases.append(c)
    return cases


def _run_case(args):
    cfg_dict, base_dir, case = args
    cfg = config_mod.from_dict(cfg_dict, base_dir)
    model = cfg.surface_model(base_dir)
    surface = (model, case.wavelength) if (case.with_surface and model is not None) else None
    drive = DriveField(cfg.drive_vector(), cfg.omega0, cfg.delta_eff)
    res = simulate_decay(AtomArray(case.n, case.kd, case.kh, cfg.d_vector()), surface, drive, cfg.t_grid(),
                         cfg.sommerfeld_config(), cfg.coupling_scale, cfg.detuning_convention,
                         tuple(cfg.fit_window))
    return {
        "case": case,
        "t": res.trace.t,
        "p": res.trace.p_norm,
        "fit": res.fit,
        "late": res.late_fit,
        "matrices": res.matrices.to_json(),
        "M": res.evolution.to_json(),
        "err": res.matrices.err_estimate,
        "segments": res.matrices.segments_used,
    }


class _Writer:
    """Serialised file output; records checksums for the manifest."""

    def __init__(self, out_dir: str):
        self.out_dir = out_dir
        self.files = []
        os.makedirs(out_dir, exist_ok=True)

    def write(self, name: str, text: str):
        path = os.path.join(self.out_dir, name)
        data = text.encode()
        with open(path, "wb") as fh:
            fh.write(data)
        self.files.append({"path": name, "sha256": hashlib.sha256(data).hexdigest(), "bytes": len(data)})
        return path

    def json(self, name: str, obj):
        return self.write(name, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def trace_csv(t, p) -> str:
    lines = ["t_over_tau0,p_norm"]
    lines += [f"{_fmt(a)},{_fmt(b)}" for a, b in zip(t, p)]
    return "\n".join(lines) + "\n"


def _fit_record(case: Case, fit, late=None) -> dict:
    rec = {"kh": case.kh, "kd": case.kd, "n": case.n, "wavelength": case.wavelength,
           "surface": case.with_surface, "tau_over_tau0": fit.tau_over_tau0,
           "residual": fit.residual, "window": list(fit.window)}
    if late is not None:
        # diagnostic only: slow tail over t/τ0 in [4, 10]
        rec["late_tau_over_tau0"] = late.tau_over_tau0
    return rec


def _executor(workers, n_tasks):
    workers = workers or os.cpu_count() or 1
    if workers <= 1 or n_tasks <= 1:
        return None
    return ProcessPoolExecutor(max_workers=min(workers, n_tasks))


def _map(fn, tasks, workers):
    ex = _executor(workers, len(tasks))
    if ex is None:
        return [fn(t) for t in tasks]
    with ex:
        return list(ex.map(fn, tasks))


def _gnuplot(cfg: ScenarioConfig, traces) -> str:
    if cfg.mode == "table":
        return ("set datafile separator ','\nset logscale y\nset xlabel 'kh'\n"
                "plot 'table.csv' using 3:(abs($4)) with linespoints title '|delta|/Gamma', \\\n"
                "     'table.csv' using 3:5 with linespoints title '(Gamma+Gamma_z)/Gamma'\n")
    if cfg.mode == "sweep":
        return ("set datafile separator ','\nset xlabel 'kh'\nset ylabel 'tau/tau0'\n"
                "plot 'sweep.csv' using 4:5 with points title 'N=1', \\\n"
                "     'sweep.csv' using 4:6 with points title 'N', \\\n"
                "     'sweep.csv' using 4:7 with lines title 'difference'\n")
    parts = [f"'{name}' using 1:2 with lines title '{label}'" for label, name in traces]
    return ("set datafile separator ','\nset logscale y\nset xlabel 't/tau0'\nset ylabel 'P/P0'\n"
            "plot " + ", \\\n     ".join(parts) + "\n")


def _run_table(cfg, model, w: _Writer, summary):
    rows = ["wavelength_um,h_um,kh,delta_over_gamma,total_rate_over_gamma"]
    sc = cfg.sommerfeld_config()
    for lam in cfg.wavelength:
        for kh in cfg.kh_values():
            if model is None:
                d, gz = 0.0, 0.0
            else:
                d, gz = casimir_shift_and_rate((model, lam), kh, cfg.d_vector(), sc, cfg.coupling_scale)
            h = kh * lam / (2 * np.pi)
            rows.append(",".join(_fmt(x) for x in (lam, h, kh, d, 1.0 + gz)))
    w.write("table.csv", "\n".join(rows) + "\n")


def _run_decay(cfg, model, base_dir, w: _Writer, summary, workers):
    cases = decay_cases(cfg, model is not None)
    tasks = [(cfg.to_dict(), base_dir, c) for c in cases]
    results = _map(_run_case, tasks, workers)
    fits, mats, traces, case_index = [], {}, [], []
    for r in results:
        c = r["case"]
        name = f"trace_{c.label}.csv"
        w.write(name, trace_csv(r["t"], r["p"]))
        traces.append((c.label, name))
        fits.append(_fit_record(c, r["fit"], r["late"]))
        mats[c.label] = {"couplings": r["matrices"], "evolution": r["M"]}
        case_index.append({"label": c.label, "trace": name, "tau_over_tau0": r["fit"].tau_over_tau0})
        summary["max_err"] = max(summary["max_err"], r["err"])
        summary["segments"] += r["segments"]
    w.json("fits.json", fits)
    w.json("matrices.json", mats)
    return case_index, traces


def _run_sweep(cfg, model, w: _Writer, summary, workers):
    if len(cfg.n) != 1:
        raise ConfigError("sweep mode takes a single n (N=1 is always included)", field="n")
    rows = ["wavelength_um,n,kd,kh,tau_single,tau_multi,difference"]
    fits = []
    ex = _executor(workers, len(cfg.kh_values()))
    try:
        for lam, kd in itertools.product(cfg.wavelength, cfg.kd):
            surface = None if model is None else (model, lam)
            drive = DriveField(cfg.drive_vector(), cfg.omega0, cfg.delta_eff)
            out = sweep_decay_vs_height(cfg.kh_values(), cfg.n[0], kd, surface, cfg.d_vector(), drive,
                                        cfg.sommerfeld_config(), cfg.coupling_scale,
                                        tuple(cfg.fit_window), executor=ex)
            for r in out:
                rows.append(",".join(_fmt(x) for x in (lam, cfg.n[0], kd, r.kh, r.tau_single,
                                                          r.tau_multi, r.difference)))
                for n, tau in ((1, r.tau_single), (cfg.n[0], r.tau_multi)):
                    fits.append({"kh": r.kh, "kd": kd, "n": n, "wavelength": lam,
                                 "tau_over_tau0": tau, "residual": None, "window": list(cfg.fit_window)})
    finally:
        if ex is not None:
            ex.shutdown()
    w.write("sweep.csv", "\n".join(rows) + "\n")
    w.json("fits.json", fits)


def run_config(cfg: ScenarioConfig, out_dir: str, base_dir: str = ".", workers=None) -> dict:
    """Execute a scenario and write its artifacts; returns the manifest.

    The manifest is written even when the computation fails; numeric
    failures are re-raised after it is on disk.
    """
    t0 = time.perf_counter()
    w = _Writer(out_dir)
    summary = {"max_err": 0.0, "segments": 0}
    manifest = {"name": cfg.name, "mode": cfg.mode, "version": __version__, "config_hash": cfg.hash(),
                "config": cfg.to_dict(), "cases": [], "errors": [], "status": "ok"}
    failure = None
    try:
        w.write("config.yaml", config_mod.dumps(cfg))
        model = cfg.surface_model(base_dir)
        traces = []
        workers = workers or cfg.workers
        if cfg.mode == "table":
            _run_table(cfg, model, w, summary)
        elif cfg.mode == "sweep":
            _run_sweep(cfg, model, w, summary, workers)
        else:
            manifest["cases"], traces = _run_decay(cfg, model, base_dir, w, summary, workers)
            manifest["time_grid"] = {"t_max": cfg.time["t_max"], "points": cfg.time["points"]}
        w.write("plot.gp", _gnuplot(cfg, traces))
    except CoopSurfError as exc:
        failure = exc
        manifest["status"] = "failed"
        manifest["errors"].append({"type": type(exc).__name__, "message": str(exc),
                                   "scenario": cfg.name, "traceback": traceback.format_exc(limit=3)})
    manifest["files"] = w.files
    manifest["integration"] = {"max_error_estimate": summary["max_err"], "segments_used": summary["segments"]}
    manifest["wall_time_s"] = time.perf_counter() - t0
    with open(os.path.join(out_dir, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    if failure is not None:
        raise failure
    return manifest


def _default_out(cfg: ScenarioConfig, override=None) -> str:
    if override:
        return override
    if cfg.output_dir:
        return cfg.output_dir
    return os.path.join(os.environ.get(ENV_OUTPUT_DIR, "runs"), cfg.name)


def _load_trace(path):
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return data[:, 0], data[:, 1]


def compare(manifest_a: str, manifest_b: str, case_a=None, case_b=None) -> dict:
    """Pointwise max |ΔP/P0| and fitted-τ difference between matched traces."""
    docs = []
    for path in (manifest_a, manifest_b):
        with open(path) as fh:
            docs.append((os.path.dirname(os.path.abspath(path)), json.load(fh)))
    (da, ma), (db, mb) = docs
    ca = {c["label"]: c for c in ma.get("cases", [])}
    cb = {c["label"]: c for c in mb.get("cases", [])}
    if case_a or case_b:
        pairs = [(case_a or case_b, case_b or case_a)]
    else:
        pairs = [(k, k) for k in ca if k in cb]
        if not pairs and len(ca) == 1 and len(cb) == 1:
            pairs = [(next(iter(ca)), next(iter(cb)))]
    if not pairs:
        raise GridMismatchError("no matching traces between the two runs")
    report = {"a": manifest_a, "b": manifest_b, "pairs": []}
    for la, lb in pairs:
        if la not in ca or lb not in cb:
            raise GridMismatchError(f"case {la!r} or {lb!r} not present")
        ta, pa = _load_trace(os.path.join(da, ca[la]["trace"]))
        tb, pb = _load_trace(os.path.join(db, cb[lb]["trace"]))
        if ta.shape != tb.shape or not np.array_equal(ta, tb):
            raise GridMismatchError(f"time grids differ between {la!r} and {lb!r}")
        tau_a, tau_b = ca[la]["tau_over_tau0"], cb[lb]["tau_over_tau0"]
        report["pairs"].append({"case_a": la, "case_b": lb,
                                "max_abs_deviation": float(np.max(np.abs(pa - pb))),
                                "tau_a": tau_a, "tau_b": tau_b,
                                "tau_difference": tau_a - tau_b, "tau_ratio": tau_a / tau_b})
    report["max_abs_deviation"] = max(p["max_abs_deviation"] for p in report["pairs"])
    return report


def _report_text(report: dict) -> str:
    lines = [f"{'case_a':<40} {'case_b':<40} {'max|dP|':>11} {'tau_a':>10} {'tau_b':>10} {'dtau':>11}"]
    for p in report["pairs"]:
        lines.append(f"{p['case_a']:<40} {p['case_b']:<40} {p['max_abs_deviation']:11.3e} "
                     f"{p['tau_a']:10.5f} {p['tau_b']:10.5f} {p['tau_difference']:11.3e}")
    return "\n".join(lines)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="coopsurf", description="Cooperative decay of atoms near a surface")
    sub = ap.add_subparsers(dest="command", required=True)
    p = sub.add_parser("run", help="run a scenario from a YAML config")
    p.add_argument("config")
    p.add_argument("--out", help=f"output directory (default: config output_dir, ${ENV_OUTPUT_DIR}/<name>)")
    p.add_argument("--workers", type=int, help="worker processes (default: number of cores)")
    p = sub.add_parser("preset", help="run a built-in scenario")
    p.add_argument("name", choices=sorted(config_mod.PRESETS))
    p.add_argument("--out")
    p.add_argument("--workers", type=int)
    p.add_argument("--dump-config", action="store_true", help="print the preset YAML and exit")
    p = sub.add_parser("compare", help="compare traces of two runs")
    p.add_argument("manifest_a")
    p.add_argument("manifest_b")
    p.add_argument("--case-a")
    p.add_argument("--case-b")
    p.add_argument("--json", help="write the report as JSON to this path")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "compare":
            report = compare(args.manifest_a, args.manifest_b, args.case_a, args.case_b)
            print(_report_text(report))
            if args.json:
                with open(args.json, "w") as fh:
                    json.dump(report, fh, indent=2)
                    fh.write("\n")
            return EXIT_OK
        if args.command == "preset":
            cfg = config_mod.preset(args.name)
            if args.dump_config:
                print(config_mod.dumps(cfg), end="")
                return EXIT_OK
            base_dir = "."
        else:
            cfg = config_mod.load(args.config)
            base_dir = os.path.dirname(os.path.abspath(args.config))
        out = _default_out(cfg, args.out)
        manifest = run_config(cfg, out, base_dir, args.workers)
        print(f"{cfg.name}: {len(manifest['files'])} files written to {out} "
              f"({manifest['wall_time_s']:.1f} s)")
        return EXIT_OK
    except (ConfigError, GridMismatchError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CoopSurfError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
