"""Command-line driver: ``simulate``, ``diagnose``, ``besov`` and ``gap``.

A run directory holds::

    config.toml            verbatim copy of the configuration
    series.csv             energy balance (t, E, D, cumD, residual)
    series-<law>.csv       further laws from diagnostics.laws
    anomalous.csv          law, window, eps, int chi da_eps (when a ladder is set)
    snapshots/index.json   sample times and component layout of the snapshots
    snapshots/sNNNNN.olf   OLF1 snapshots of all unknowns stacked
    report.json            run summary, balances, anomalous, besov, flags

Every file carries the schema version and the SHA-256 of the configuration.
Outputs depend only on the configuration and on ``HALLFLUX_THREADS``.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__, besov, diagnostics, fields, hmhd, mll
from .config import SYSTEM_LAWS, RunConfig, load_config
from .errors import BlowUpError, ComparisonError, DataError, HallfluxError, UsageError
from .mollify import make_mollifier
from .timestepping import Trajectory

SCHEMA_VERSION = 1
COMPONENTS = {"mll": ("m", "E", "H"), "mhd": ("u", "B"), "hmhd": ("u", "B")}

log = logging.getLogger("hallflux")


def _num(x) -> str:
    """Shortest round-trip decimal."""
    return repr(float(x))


def _json_safe(value):
    if isinstance(value, dict):
        return {k: _json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    if isinstance(value, np.ndarray):
        return _json_safe(value.tolist())
    if isinstance(value, (np.floating, float)):
        v = float(value)
        return v if math.isfinite(v) else str(v)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.bool_):
        return bool(value)
    return value


def _write_json(path: Path, data: dict) -> None:
    path.write_text(json.dumps(_json_safe(data), indent=2, sort_keys=False) + "\n", encoding="utf-8")


def _write_csv(path: Path, header: list, rows, comment: str) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        fh.write(f"# {comment}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _stamp(cfg_hash: str, kind: str, **extra) -> str:
    parts = [f"hallflux-{kind}/{SCHEMA_VERSION}", f"config_sha256={cfg_hash}"]
    parts += [f"{k}={v}" for k, v in extra.items()]
    return " ".join(parts)


def write_series(path: Path, report, cfg_hash: str) -> None:
    cols = report.columns()
    header = list(cols)
    rows = ([_num(cols[c][i]) for c in header] for i in range(len(report.times)))
    _write_csv(path, header, rows, _stamp(cfg_hash, "series", law=report.law))


# ---------------------------------------------------------------------------
# trajectories and snapshots


def _stack(state, system) -> np.ndarray:
    return np.concatenate([getattr(state, name) for name in COMPONENTS[system]])


def write_snapshots(directory: Path, cfg: RunConfig, states) -> list:
    directory.mkdir(parents=True, exist_ok=True)
    chosen = []
    if cfg.snapshot_every > 0:
        last = len(states) - 1
        chosen = [i for i in range(len(states)) if i % cfg.snapshot_every == 0 or i == last]
    entries = []
    for i in chosen:
        name = f"s{i:05d}.olf"
        fields.write_snapshot(directory / name, _stack(states[i], cfg.system))
        entries.append({"file": name, "sample": i, "t": float(states[i].t)})
    layout = [f"{name}{k}" for name in COMPONENTS[cfg.system] for k in (1, 2, 3)]
    _write_json(
        directory / "index.json",
        {"schema_version": SCHEMA_VERSION, "config_sha256": cfg.sha256, "system": cfg.system,
         "components": layout, "snapshots": entries},
    )
    return entries


def _state_from(cfg: RunConfig, t: float, data: np.ndarray):
    g = cfg.grid
    if cfg.system == "mll":
        return mll.MllState(g, t, data[0:3], data[3:6], data[6:9], cfg.scheme,
                            cfg.eps if cfg.scheme == "penalized" else None)
    eps = cfg.eps if cfg.scheme == "regularized" else None
    return hmhd.MhdState(g, t, data[0:3], data[3:6], cfg.system, eps, cfg.kernel)


def load_run(run_dir, minimum: int = 1) -> tuple[RunConfig, Trajectory]:
    """Configuration and snapshot trajectory of a run directory."""
    run_dir = Path(run_dir)
    cfg_path = run_dir / "config.toml"
    index_path = run_dir / "snapshots" / "index.json"
    if not cfg_path.exists():
        raise DataError(f"{run_dir}: not a run directory (config.toml missing)")
    cfg = load_config(cfg_path)
    entries = json.loads(index_path.read_text()) ["snapshots"] if index_path.exists() else []
    if len(entries) < minimum:
        raise DataError(
            f"{run_dir}: {len(entries)} snapshot(s) stored, this command needs at least {minimum}; "
            f"rerun with output.snapshot_every >= 1 so that at least {minimum} samples are kept "
            f"(the run has time.sample_every = {cfg.sample_every})"
        )
    states = [_state_from(cfg, e["t"], fields.read_snapshot(run_dir / "snapshots" / e["file"])) for e in entries]
    return cfg, Trajectory(cfg.grid, cfg.system, states)


# ---------------------------------------------------------------------------
# reports


def balance_report(trajectory: Trajectory, law: str, quadrature: str):
    system = trajectory[0].variant if isinstance(trajectory[0], hmhd.MhdState) else "mll"
    if law == f"{system}-energy":
        return (mll.energy_report if system == "mll" else hmhd.energy_report)(trajectory, quadrature)
    kind = {"fluid-helicity": "fluid", "crossed-helicity": "crossed", "total-helicity": "total"}.get(law, "magneto")
    return hmhd.helicity_report(trajectory, kind, quadrature)


def anomalous_records(states, laws, ladder, windows, kind, quadrature) -> list:
    """One record per (law, window): the ladder values and, with three radii or more, the log-log fit."""
    grid = states[0].grid
    out = []
    for law in laws:
        if law not in diagnostics.ANOMALOUS_LAWS:
            continue
        per_eps = [diagnostics.windowed_anomalous(states, law, make_mollifier(grid, e, kind), windows, quadrature)
                   for e in ladder]
        for w in per_eps[0] if per_eps else ():
            values = [d[w] for d in per_eps]
            rec = {"law": law, "window": w, "eps": list(ladder), "values": values}
            mags = np.abs(values)
            if len(ladder) >= 3:
                if np.all(mags == 0):
                    rec.update(slope=diagnostics.EXACT_ZERO, r_squared=None)
                elif np.all(mags > 0):
                    slope, _, r2 = diagnostics.fit_loglog(ladder, mags)
                    rec.update(slope=slope, r_squared=r2)
            out.append(rec)
    return out


def write_anomalous_csv(path: Path, records: list, cfg_hash: str) -> None:
    rows = [[r["law"], r["window"], _num(e), _num(v)] for r in records for e, v in zip(r["eps"], r["values"])]
    _write_csv(path, ["law", "window", "eps", "anomalous"], rows, _stamp(cfg_hash, "anomalous"))


def besov_records(cfg: RunConfig, trajectory: Trajectory, exponents, field_name: str, shells) -> list:
    samples = besov.SampledField.from_trajectory(trajectory, field_name)
    laws = ("mll-energy", "mll-interpolated") if cfg.system == "mll" else ("onsager-energy", "mhd-energy",
                                                                          "mhd-crossed-helicity")
    out = []
    for alpha, p, r in exponents:
        verdicts = {}
        for law in laws:
            m = besov.exponent_map(alpha, law)
            verdicts[law] = {"exponent": m.exponent, "admissible": m.admissible, "verdict": m.verdict}
        rec = {"field": field_name, "alpha": alpha, "p": p, "r": r, "verdicts": verdicts, "profile": None}
        if 0 < alpha < 2:
            rec["profile"] = besov.tilde_norm(samples, alpha, p, r, shells).to_json()
        else:
            rec["note"] = f"alpha={alpha!r} is outside (0, 2): {besov.OUTSIDE}; no profile computed"
        out.append(rec)
    return out


# ---------------------------------------------------------------------------
# commands


def simulate(cfg: RunConfig, out_dir: Path | None = None) -> tuple[Path, int]:
    """Run ``cfg`` and write its run directory; returns the directory and the exit status."""
    out = Path(out_dir) if out_dir is not None else cfg.out_dir
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.toml").write_text(cfg.text, encoding="utf-8")
    state = cfg.initial_state()
    module = mll if cfg.system == "mll" else hmhd
    extra = {} if cfg.system == "mll" else {"dealias": cfg.dealias}
    dt = cfg.dt if cfg.dt is not None else module.stable_dt(state)
    log.info("simulating %s (%s) on n=%d to t=%g with dt=%g", cfg.system, cfg.scheme, cfg.n, cfg.t_end, dt)
    states, flags, status = [], [], "ok"
    try:
        for s in module.simulate(state, cfg.t_end, dt, cfg.sample_every, **extra):
            states.append(s)
    except BlowUpError as exc:
        status = "blow-up"
        flags.append({"kind": "blow-up", "t": exc.t, "message": str(exc)})
        log.error("%s; writing partial outputs", exc)
    traj = Trajectory(cfg.grid, cfg.system, states)
    write_snapshots(out / "snapshots", cfg, states)

    balances = []
    if len(states) >= 2:
        for law in [cfg.energy_law] + [x for x in cfg.laws if x != cfg.energy_law]:
            rep = balance_report(traj, law, cfg.quadrature)
            name = "series.csv" if law == cfg.energy_law else f"series-{law}.csv"
            write_series(out / name, rep, cfg.sha256)
            balances.append({**rep.to_json(), "series": name})

    anomalous = []
    if cfg.ladder and states:
        anomalous = anomalous_records(states, cfg.laws, cfg.ladder, cfg.windows, cfg.mollifier_kind, cfg.quadrature)
        if anomalous:
            write_anomalous_csv(out / "anomalous.csv", anomalous, cfg.sha256)

    if cfg.suitability and len(states) >= 3 and cfg.system != "mll":
        rep = diagnostics.suitability_monitor(traj, cfg.energy_law, windows="octants", quadrature=cfg.quadrature)
        for e in rep.flagged:
            flags.append({"kind": "suitability", "eps": e.eps, "window": e.window, "measured": e.measured,
                          "formula": e.formula, "scale": e.scale})

    besov_out = besov_records(cfg, traj, cfg.besov_exponents, cfg.besov_field, cfg.besov_shells) if states else []

    final = states[-1] if states else state
    report = {
        "schema_version": SCHEMA_VERSION,
        "config_sha256": cfg.sha256,
        "version": __version__,
        "run": {
            "system": cfg.system, "scheme": cfg.scheme, "eps": cfg.eps, "n": cfg.n, "L": cfg.box,
            "preset": cfg.preset, "seed": cfg.seed, "dt": dt, "t_end": cfg.t_end, "samples": len(states),
            "t_final": final.t, "status": status, "constraints": final.constraints(),
        },
        "balances": balances,
        "anomalous": anomalous,
        "besov": besov_out,
        "flags": flags,
    }
    _write_json(out / "report.json", report)
    return out, 0 if status == "ok" else 1


def diagnose(run_dir, laws=None, ladder=None, windows=None, quadrature=None) -> dict:
    """Balances, anomalous ladders and fits over the stored snapshots; written to ``<run>/diagnose.json``."""
    cfg, traj = load_run(run_dir, minimum=2)
    laws = laws or cfg.laws
    for law in laws:
        if law not in diagnostics.LAWS:
            raise UsageError(f"unknown law {law!r}; expected one of {diagnostics.LAWS}")
        diagnostics.check_law(traj[0], law)
        if law not in SYSTEM_LAWS[cfg.system]:
            raise UsageError(f"{law} is not balanced for the {cfg.system} system")
    ladder = list(cfg.ladder if ladder is None else ladder)
    windows = windows or cfg.windows
    quadrature = quadrature or cfg.quadrature
    balances = [balance_report(traj, law, quadrature).to_json() for law in laws]
    records = anomalous_records(list(traj), laws, ladder, windows, cfg.mollifier_kind, quadrature) if ladder else []
    out = {"schema_version": SCHEMA_VERSION, "config_sha256": cfg.sha256, "snapshots": len(traj),
           "balances": balances, "anomalous": records}
    run_dir = Path(run_dir)
    _write_json(run_dir / "diagnose.json", out)
    if records:
        write_anomalous_csv(run_dir / "diagnose-anomalous.csv", records, cfg.sha256)
    return out


def besov_scan(run_dir, exponents, field_name=None, shells=None) -> list:
    cfg, traj = load_run(run_dir, minimum=1)
    field_name = field_name or cfg.besov_field
    if field_name not in COMPONENTS[cfg.system]:
        raise UsageError(f"field {field_name!r} is not an unknown of the {cfg.system} system")
    records = besov_records(cfg, traj, exponents, field_name, shells if shells is not None else cfg.besov_shells)
    _write_json(Path(run_dir) / "besov.json",
                {"schema_version": SCHEMA_VERSION, "config_sha256": cfg.sha256, "profiles": records})
    return records


def gap(dir_a, dir_b, quadrature: str = "simpson"):
    cfg_a, run_a = load_run(dir_a, minimum=1)
    cfg_b, run_b = load_run(dir_b, minimum=1)
    if cfg_a.system != cfg_b.system:
        raise ComparisonError(f"system mismatch: {cfg_a.system} vs {cfg_b.system}")
    if cfg_a.system == "mll":
        return mll.weak_strong_gap_mll(run_a, run_b, quadrature)
    return hmhd.weak_strong_gap_hall(run_a, run_b, quadrature)


# ---------------------------------------------------------------------------
# argument parsing


def _radius(text: str) -> str | float:
    text = text.strip()
    return text if text.endswith("h") else float(text)


def _exponent(text: str) -> float:
    return math.inf if text.strip().lower() == "inf" else float(text)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hallflux", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a configuration")
    p.add_argument("config", help="TOML run configuration")
    p.add_argument("--out", help="run directory (overrides output.directory)")

    p = sub.add_parser("diagnose", help="balances and anomalous dissipation from stored snapshots")
    p.add_argument("run_dir")
    p.add_argument("--law", action="append", help="law to evaluate (repeatable)")
    p.add_argument("--eps", nargs="+", type=_radius, help='mollifier radii, numbers or multiples of h like "4h"')
    p.add_argument("--window", action="append", choices=diagnostics.WINDOW_PRESETS, help="window preset (repeatable)")
    p.add_argument("--quadrature", choices=("simpson", "trapezoid"))

    p = sub.add_parser("besov", help="Besov profile of a stored field")
    p.add_argument("run_dir")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--p", type=_exponent, required=True)
    p.add_argument("--r", type=_exponent, required=True)
    p.add_argument("--field", help="unknown to analyse (default from the config)")
    p.add_argument("--shells", nargs="+", type=int, help="shell multipliers of h")

    p = sub.add_parser("gap", help="weak-strong gap between two runs")
    p.add_argument("dir_a")
    p.add_argument("dir_b")
    p.add_argument("--out", help="CSV destination (default stdout)")
    return parser


def _resolve_radii(run_dir, radii):
    if radii is None:
        return None
    cfg = load_config(Path(run_dir) / "config.toml")
    return [float(r[:-1]) * cfg.grid.h if isinstance(r, str) else r for r in radii]


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        if args.command == "simulate":
            cfg = load_config(args.config)
            out, status = simulate(cfg, args.out)
            print(out)
            return status
        if args.command == "diagnose":
            ladder = _resolve_radii(args.run_dir, args.eps)
            out = diagnose(args.run_dir, args.law, ladder, args.window, args.quadrature)
            print(json.dumps(_json_safe(out), indent=2))
            return 0
        if args.command == "besov":
            out = besov_scan(args.run_dir, [(args.alpha, args.p, args.r)], args.field, args.shells)
            print(json.dumps(_json_safe(out), indent=2))
            return 0
        series = gap(args.dir_a, args.dir_b)
        rows = [[_num(t), _num(v)] for t, v in zip(series.times, series.values)]
        column = "L" if series.name.endswith("mll") else "J"
        if args.out:
            _write_csv(Path(args.out), ["t", column], rows, f"hallflux-gap/{SCHEMA_VERSION} functional={series.name}")
        else:
            writer = csv.writer(sys.stdout, lineterminator="\n")
            writer.writerow(["t", column])
            writer.writerows(rows)
        return 0
    except HallfluxError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
