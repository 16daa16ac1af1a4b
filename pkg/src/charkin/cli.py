"""``charkin`` command-line front end.

Exit codes: 0 success, 1 numerical failure (monitor breach, tolerance
breach), 2 configuration or input error. Failures print one JSON object on
stderr.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, io
from .charfn import as_classical, convert_ordering, make_state_charfn
from .config import ConfigError, RunConfig, dumps, hamiltonian_rep
from .evolution import (
    STAR_PRODUCT_KAPPA,
    EvolveConfig,
    MonitorBreach,
    RhsMethod,
    evolve,
    rhs,
    write_monitor_csv,
)
from .fock import FOCK_INVERSE_KAPPA, operator_charfn, von_neumann_rate
from .grid import CharField, Ordering
from .hamiltonian import GRID_HAMILTONIAN_KAPPA, distributional_from_symbol
from .wigner import from_wigner, to_wigner

log = logging.getLogger("charkin")

DEFAULT_ORACLE_TOL = {
    RhsMethod.DISTRIBUTIONAL: 1e-4,
    RhsMethod.QUADRATURE: 1e-2,
    RhsMethod.STAR_PRODUCT: 1e-2,
}


class NumericalFailure(RuntimeError):
    def __init__(self, message: str, details: dict | None = None):
        super().__init__(message)
        self.details = details or {}


def kappa_constants() -> dict:
    return {
        "star_product": STAR_PRODUCT_KAPPA,
        "grid_hamiltonian": GRID_HAMILTONIAN_KAPPA,
        "fock_inverse": FOCK_INVERSE_KAPPA,
    }


def _out_dir(args, cfg: RunConfig | None) -> Path:
    if args.out:
        path = Path(args.out)
    elif os.environ.get("CHARKIN_OUT"):
        path = Path(os.environ["CHARKIN_OUT"])
    elif cfg is not None:
        path = Path(cfg.output_dir)
    else:
        path = Path("charkin_out")
    path.mkdir(parents=True, exist_ok=True)
    return path


def _load(args) -> RunConfig:
    if not args.config:
        raise ConfigError(f"{args.command} needs --config")
    return RunConfig.load(args.config)


def _write_manifest(out: Path, command: str, cfg: RunConfig | None, artifacts: list[str],
                    extra: dict | None = None) -> None:
    manifest = {
        "command": command,
        "version": __version__,
        "kappa": kappa_constants(),
        "config": cfg.echo() if cfg else None,
        "artifacts": sorted(artifacts),
    }
    if extra:
        manifest.update(extra)
    (out / "manifest.json").write_text(dumps(manifest) + "\n")


def initial_field(cfg: RunConfig, grid, ordering: Ordering) -> CharField:
    """Oracle-built initial state; classical runs start from the Wigner function."""
    n_max = int(cfg.oracle.get("n_max", 32))
    if ordering is Ordering.CLASSICAL:
        return as_classical(make_state_charfn(cfg.state, grid, Ordering.SYMMETRIC, n_max))
    return make_state_charfn(cfg.state, grid, ordering, n_max)


def _save_field(out: Path, stem: str, field: CharField, formats, tag: str | None = None) -> list[str]:
    written = []
    if "bin" in formats:
        written.append(str(io.write_dump(out / f"{stem}.chkn", field.data, field.grid,
                                         tag or field.ordering.value).relative_to(out)))
    if "csv" in formats:
        written.append(str(io.write_csv(out / f"{stem}.csv", field.data, field.grid,
                                        tag or field.ordering.value).relative_to(out)))
    return written


# -- commands ----------------------------------------------------------------------

def cmd_evolve(args) -> dict:
    cfg = _load(args)
    out = _out_dir(args, cfg)
    grid = cfg.grid.build()
    ordering = cfg.ordering
    ev = cfg.evolve
    C0 = initial_field(cfg, grid, ordering)
    ham = hamiltonian_rep(cfg, grid, ordering, ev.method)
    econf = EvolveConfig(
        dt=ev.dt, t_final=ev.t_final, method=ev.method, kind=ordering, cadence=ev.cadence,
        snapshot_cadence=ev.snapshot_cadence, norm_tol=ev.norm_tol, herm_tol=ev.herm_tol,
        bound_tol=ev.bound_tol, dump_dir=str(out / "breach"), threads=args.threads,
    )
    try:
        traj = evolve(C0, ham, econf)
    except MonitorBreach as exc:
        raise NumericalFailure(str(exc), {"t": exc.t, "report": exc.report}) from None
    snap_dir = out / "snapshots"
    snap_dir.mkdir(exist_ok=True)
    artifacts = []
    index = []
    for i, snap in enumerate(traj.snapshots):
        files = _save_field(snap_dir, f"snap_{i:05d}", snap.field, cfg.formats)
        index.append((snap.t, files[0]))
        artifacts += [f"snapshots/{f}" for f in files]
    with open(out / "snapshots.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "file"])
        for t, name in index:
            writer.writerow([repr(float(t)), f"snapshots/{name}"])
    write_monitor_csv(out / "monitors.csv", traj.monitors)
    artifacts += ["snapshots.csv", "monitors.csv"]
    summary = {
        "status": "ok",
        "steps": econf.n_steps,
        "snapshots": len(traj.snapshots),
        "max_norm_drift": traj.max_monitor("norm_drift"),
        "max_herm_defect": traj.max_monitor("herm_defect"),
    }
    _write_manifest(out, "evolve", cfg, artifacts + ["manifest.json"], {"summary": summary})
    return summary


def _read_run(path: Path) -> list[tuple[float, io.Dump]]:
    index = path / "snapshots.csv"
    if not index.exists():
        raise ConfigError(f"{path} is not a run directory (no snapshots.csv)")
    rows = []
    with open(index) as fh:
        for row in csv.DictReader(fh):
            name = row["file"]
            if not name.endswith(".chkn"):
                raise ConfigError(f"{path}: compare needs binary snapshots")
            rows.append((float(row["t"]), io.read_dump(path / name)))
    return rows


def compare_runs(a: Path, b: Path) -> list[dict]:
    """Per-time L2 and max-norm distances between two runs' snapshots."""
    run_a, run_b = _read_run(a), _read_run(b)
    if len(run_a) != len(run_b):
        raise ConfigError("runs have different numbers of snapshots")
    rows = []
    for (ta, da), (tb, db) in zip(run_a, run_b):
        if not np.isclose(ta, tb, rtol=1e-9, atol=1e-12):
            raise ConfigError(f"snapshot times differ: {ta} vs {tb}")
        if not da.grid.compatible(db.grid):
            raise ConfigError("grid mismatch between runs")
        diff = da.data - db.data
        rows.append({
            "t": ta,
            "l2": float(np.sqrt(np.sum(np.abs(diff) ** 2) * da.grid.cell_volume)),
            "linf": float(np.max(np.abs(diff))),
        })
    return rows


def cmd_compare(args) -> dict:
    cfg = RunConfig.load(args.config) if args.config else None
    runs = list(args.runs or [])
    if not runs and cfg is not None:
        runs = [cfg.compare.get("a"), cfg.compare.get("b")]
    if len(runs) != 2 or not all(runs):
        raise ConfigError("compare needs two run directories")
    rows = compare_runs(Path(runs[0]), Path(runs[1]))
    out = _out_dir(args, cfg)
    with open(out / "compare.csv", "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=["t", "l2", "linf"])
        writer.writeheader()
        writer.writerows(rows)
    _write_manifest(out, "compare", cfg, ["compare.csv", "manifest.json"],
                    {"runs": [str(r) for r in runs]})
    return {"status": "ok", "rows": rows}


def hbar_scan(cfg: RunConfig, hbars) -> list[dict]:
    """Relative gap between symmetric and classical RHS as the kernel's hbar varies.

    State and Weyl symbol are fixed at the configured hbar; only the kernel
    sees the scanned value, and ``hbar = 0`` is the classical kernel itself.
    """
    grid = cfg.grid.build()
    if grid.dims != 1 or not cfg.hamiltonian.is_polynomial:
        raise ConfigError("hbar-scan needs a single-mode polynomial Hamiltonian")
    C = make_state_charfn(cfg.state, grid, Ordering.SYMMETRIC, int(cfg.oracle.get("n_max", 32)))
    symbol = cfg.hamiltonian.symbol(grid.hbar, grid.omega)
    classical = rhs(C.copy(ordering=Ordering.CLASSICAL),
                    distributional_from_symbol(symbol, Ordering.CLASSICAL),
                    Ordering.CLASSICAL, RhsMethod.DISTRIBUTIONAL).data
    scale = max(float(np.linalg.norm(classical)), 1e-300)
    rows = []
    for h in hbars:
        h = float(h)
        if h < 0:
            raise ConfigError("hbar values must be non-negative")
        if h == 0:
            quantum, kind = classical, Ordering.CLASSICAL
        else:
            gh = grid.with_hbar(h)
            quantum = rhs(C.copy(grid=gh), distributional_from_symbol(symbol, Ordering.SYMMETRIC),
                          Ordering.SYMMETRIC, RhsMethod.DISTRIBUTIONAL).data
            kind = Ordering.SYMMETRIC
        rows.append({"hbar": h, "defect": float(np.linalg.norm(quantum - classical) / scale),
                     "kernel": kind.value})
    return rows


def cmd_hbar_scan(args) -> dict:
    cfg = _load(args)
    hbars = cfg.hbar_scan.get("hbars", [0.4, 0.2, 0.1])
    if not isinstance(hbars, list) or not hbars:
        raise ConfigError("hbar_scan.hbars must be a non-empty list")
    rows = hbar_scan(cfg, hbars)
    out = _out_dir(args, cfg)
    with open(out / "hbar_scan.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["hbar", "defect"])
        for r in rows:
            writer.writerow([repr(r["hbar"]), repr(r["defect"])])
    ratios = [a["defect"] / b["defect"] if b["defect"] > 0 else None
              for a, b in zip(rows, rows[1:])]
    _write_manifest(out, "hbar-scan", cfg, ["hbar_scan.csv", "manifest.json"])
    return {"status": "ok", "rows": rows, "ratios": ratios}


def oracle_check(cfg: RunConfig, threads: int = 1) -> list[dict]:
    """RHS-vs-oracle relative errors at t = 0 for each enabled method."""
    grid = cfg.grid.build()
    ordering = cfg.ordering
    if grid.dims != 1 or not ordering.is_quantum or not cfg.hamiltonian.is_polynomial:
        raise ConfigError("oracle-check needs a single-mode quantum run with a polynomial Hamiltonian")
    n_max = int(cfg.oracle.get("n_max", 20))
    methods = cfg.oracle.get("methods", [cfg.evolve.method])
    tolerance = {**DEFAULT_ORACLE_TOL, **cfg.oracle.get("tolerance", {})}
    if len(cfg.state) != 1:
        raise ConfigError("oracle-check is single-mode")
    rho = cfg.state[0].density(n_max)
    H = cfg.hamiltonian.operator(grid.hbar, grid.omega)
    rate = von_neumann_rate(rho, H.matrix(n_max), grid.hbar)
    reference = operator_charfn(rate, grid, ordering)
    C = make_state_charfn(cfg.state, grid, ordering, n_max)
    ref_norm = float(np.linalg.norm(reference))
    rows = []
    for method in methods:
        if method not in RhsMethod.ALL:
            raise ConfigError(f"unknown method {method!r}")
        if method == RhsMethod.STAR_PRODUCT and ordering is not Ordering.NORMAL:
            raise ConfigError("star_product needs normal order")
        ham = hamiltonian_rep(cfg, grid, ordering, method)
        kw = {"threads": threads} if method != RhsMethod.DISTRIBUTIONAL else {}
        got = rhs(C, ham, ordering, method, **kw).data
        err = float(np.linalg.norm(got - reference))
        rel = err / ref_norm if ref_norm > 0 else err
        tol = float(tolerance.get(method, 1e-2))
        rows.append({"method": method, "rel_err": rel, "tolerance": tol, "pass": rel <= tol})
    return rows


def cmd_oracle_check(args) -> dict:
    cfg = _load(args)
    rows = oracle_check(cfg, args.threads)
    out = _out_dir(args, cfg)
    report = {"status": "ok" if all(r["pass"] for r in rows) else "fail", "checks": rows}
    (out / "oracle_report.json").write_text(dumps(report) + "\n")
    _write_manifest(out, "oracle-check", cfg, ["oracle_report.json", "manifest.json"])
    if report["status"] != "ok":
        raise NumericalFailure("oracle tolerance exceeded", report)
    return report


def cmd_convert(args) -> dict:
    cfg = RunConfig.load(args.config) if args.config else None
    spec = dict(cfg.convert) if cfg else {}
    for key in ("input", "to", "format"):
        if getattr(args, key, None):
            spec[key] = getattr(args, key)
    if not spec.get("input") or not spec.get("to"):
        raise ConfigError("convert needs an input dump and a target ('to')")
    fmt = spec.get("format", "csv")
    if fmt not in ("csv", "bin"):
        raise ConfigError("convert.format must be 'csv' or 'bin'")
    try:
        dump = io.read_dump(spec["input"])
    except (OSError, io.DumpFormatError) as exc:
        raise ConfigError(str(exc)) from None
    target = spec["to"]
    if target not in io.TAGS:
        raise ConfigError(f"unknown conversion target {target!r}")
    if dump.tag == io.WIGNER_TAG:
        from .wigner import WignerField

        field = from_wigner(WignerField(dump.grid, dump.data))
    else:
        field = dump.as_charfield()
    try:
        if target == io.WIGNER_TAG:
            data, tag = to_wigner(field).data, io.WIGNER_TAG
        elif target == Ordering.CLASSICAL.value:
            data, tag = as_classical(field).data, target
        else:
            data, tag = convert_ordering(field, target).data, target
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    out = _out_dir(args, cfg)
    stem = Path(spec["input"]).stem + f"_{tag}"
    writer = io.write_csv if fmt == "csv" else io.write_dump
    path = writer(out / f"{stem}.{'csv' if fmt == 'csv' else 'chkn'}", data, dump.grid, tag)
    return {"status": "ok", "output": str(path)}


COMMANDS = {
    "evolve": cmd_evolve,
    "compare": cmd_compare,
    "hbar-scan": cmd_hbar_scan,
    "oracle-check": cmd_oracle_check,
    "convert": cmd_convert,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="charkin", description="Characteristic-function kinetics")
    parser.add_argument("--version", action="version", version=f"charkin {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON run configuration")
        p.add_argument("--threads", type=int, default=1, help="worker threads for quadrature")
        p.add_argument("--out", help="output directory (overrides CHARKIN_OUT and the config)")
        if name == "compare":
            p.add_argument("runs", nargs="*", help="two run directories")
        if name == "convert":
            p.add_argument("--input", help="binary dump to convert")
            p.add_argument("--to", help="target ordering or 'wigner'")
            p.add_argument("--format", choices=["csv", "bin"])
    return parser


def _fail(code: int, kind: str, message: str, details: dict | None = None) -> int:
    payload = {"status": "error", "code": code, "kind": kind, "message": message}
    if details:
        payload["details"] = details
    print(json.dumps(payload, default=str), file=sys.stderr)
    return code


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0) and 2
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.threads < 1:
        return _fail(2, "config", "--threads must be at least 1")
    try:
        result = COMMANDS[args.command](args)
    except ConfigError as exc:
        return _fail(2, "config", str(exc))
    except NumericalFailure as exc:
        return _fail(1, "numerical", str(exc), exc.details)
    print(dumps(result))
    return 0


if __name__ == "__main__":
    sys.exit(main())
