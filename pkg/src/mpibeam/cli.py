"""Command-line front end: ``mpibeam <command> [--config PATH] [--out DIR] ...``."""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import analysis, beam, decoder, scpa, waveform
from .config import ConfigError, RunConfig, load

COMMANDS = ("error-sweep", "contours", "efficiency", "beam", "modulate", "vectors")


class CheckFailed(RuntimeError):
    pass


def _write_rows(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])


def cmd_error_sweep(cfg: RunConfig, out: Path):
    p, run = cfg.params, cfg.run
    if not p["m_list"] or not p["k_list"]:
        raise ConfigError("m_list and k_list must be non-empty")
    grid = analysis.default_amplitude_grid(p["amp_lo_db"], p["amp_hi_db"], p["amp_step_db"])
    by_m = analysis.rms_error_sweep(
        analysis.ErrorSweepSpec(p["m_list"], [p["k"]], grid, p["n_phase"], run["quant_mode"]),
        threads=run["threads"])
    by_k = analysis.rms_error_sweep(
        analysis.ErrorSweepSpec([p["m_for_k"]], p["k_list"], grid, p["n_phase"], run["quant_mode"]),
        threads=run["threads"])
    files = {
        "phase_error_vs_M.csv": by_m,
        "amplitude_error_vs_M.csv": by_m,
        "phase_error_vs_k.csv": by_k,
        "amplitude_error_vs_k.csv": by_k,
    }
    for name, res in files.items():
        res.to_csv(out / name)
    return sorted(files)


def cmd_contours(cfg: RunConfig, out: Path):
    p = cfg.params
    cont = analysis.contour_map(p["m"], p["k"], p["levels"], p["tol"])
    name = f"contours_M{p['m']}_k{p['k']}.csv"
    analysis.write_contours_csv(out / name, cont, p["m"], p["k"])
    return [name]


def cmd_efficiency(cfg: RunConfig, out: Path):
    p = cfg.params
    sc = scpa.ScpaConfig(v_dd=p["v_dd"], r_opt=p["r_opt"], k=p["k"], M=p["m"], f0=p["f0"],
                         c_unit=p["c_unit"], q_nw=p["q_nw"])
    amps = 10 ** (analysis.default_amplitude_grid(p["amp_lo_db"], 0.0, p["amp_step_db"]) / 20)
    thetas = 2 * math.pi * np.arange(p["n_theta"]) / p["n_theta"]
    curve = scpa.efficiency_curve(sc, amps, thetas, cfg.run["quant_mode"])

    # closed form against the composed power models on every state of sector 0
    N = sc.N
    axis = np.arange(0, N + 1, max(1, N // 512))
    n1, n2 = np.meshgrid(axis, axis, indexing="ij")
    live = (n1 + n2 <= N) & ((n1 + n2) > 0)
    a = scpa.drain_efficiency(sc, (n1[live], n2[live]))
    b = scpa.efficiency_from_powers(sc, (n1[live], n2[live]))
    worst = float(np.max(np.abs(a - b) / b))
    if worst > 1e-12:
        raise CheckFailed(f"closed-form efficiency deviates from composed value by {worst:.3g}")

    name = "efficiency.csv"
    _write_rows(out / name, ("amplitude", "p_out_db", "eta"),
                [(r["amplitude"], r["p_out_db"], r["eta"]) for r in curve])
    (out / "scpa_summary.json").write_text(json.dumps({
        "q_nw": scpa.network_q(sc), "l_ser_h": scpa.series_inductance(sc),
        "c_unit_f": sc.c_unit, "eta_identity_max_rel_err": worst}, indent=1) + "\n")
    return [name, "scpa_summary.json"]


def cmd_beam(cfg: RunConfig, out: Path):
    p = cfg.params
    geom = beam.ArrayGeometry(p["n_elements"], p["spacing"])
    if p["measured_table"]:
        model = beam.MeasuredElement.from_csv(p["measured_table"], p["phase_bits"])
        if p["calibrate"]:
            model = model.calibrated()
    else:
        model = beam.QuantizedElement(p["m"], p["k"], cfg.run["quant_mode"])
    n_grid = int(round(180 / p["grid_step_deg"]))
    grid = np.radians(np.linspace(-90.0, 90.0, n_grid + 1))
    n_steer = int(round((p["steer_hi_deg"] - p["steer_lo_deg"]) / p["steer_step_deg"]))
    steer_deg = p["steer_lo_deg"] + p["steer_step_deg"] * np.arange(n_steer + 1)
    base = beam.BeamScenario(geom, 0.0, None, model)
    real, ideal = beam.steering_sweep(base, np.radians(steer_deg), grid)
    rms_ph, rms_amp = beam.beam_error_metrics(real, ideal, grid, np.radians(steer_deg))

    files = []
    idx = np.abs(grid[None, :] - np.radians(steer_deg)[:, None]).argmin(axis=1)
    rows = []
    for i, s in enumerate(steer_deg):
        r, d = real[i, idx[i]], ideal[i, idx[i]]
        rows.append((s, math.degrees(np.angle(r / d)), 20 * math.log10(abs(r) / abs(d))))
    _write_rows(out / "beam_errors.csv", ("steer_deg", "phase_err_deg", "amp_err_db"), rows)
    _write_rows(out / "beam_summary.csv", ("metric", "value"),
                [("rms_beam_phase_err_deg", rms_ph), ("rms_beam_amp_err_db", rms_amp)])
    files += ["beam_errors.csv", "beam_summary.csv"]
    for s in p["pattern_steer_deg"]:
        sc = beam.BeamScenario(geom, math.radians(s), None, model)
        tag = f"{s:g}".replace("-", "m").replace(".", "p")
        for label, scen in (("realized", sc),
                            ("ideal", beam.BeamScenario(geom, sc.steer, None, beam.IdealElement()))):
            name = f"pattern_{label}_steer{tag}.csv"
            beam.write_pattern_csv(out / name, grid, beam.scenario_pattern(scen, grid))
            files.append(name)
    return files


def cmd_modulate(cfg: RunConfig, out: Path):
    p = cfg.params
    sig = waveform.generate(p["scheme"], p["order"], p["bandwidth"], p["sample_rate"],
                            seed=cfg.run["seed"], n_samples=p["n_samples"])
    if p["detrough"] > 0:
        sig = waveform.detrough(sig, p["detrough"])
    y = waveform.transmit(sig, p["m"], p["k"], p["mode"], cfg.run["quant_mode"])
    rep = waveform.measure(y, sig, p["bandwidth"], p["measurement_bandwidth"])
    (out / "metrics.json").write_text(rep.to_json() + "\n")
    waveform.write_iq(out / "reference.iq", sig.samples, sig.sample_rate)
    waveform.write_iq(out / "realized.iq", y, sig.sample_rate)
    f, pdb = rep.psd
    _write_rows(out / "psd.csv", ("freq_hz", "psd_db_hz"), zip(f, pdb))
    return ["metrics.json", "reference.iq", "reference.iq.hdr", "realized.iq", "realized.iq.hdr",
            "psd.csv"]


def cmd_vectors(cfg: RunConfig, out: Path):
    p = cfg.params
    dcfg = decoder.DecoderConfig(p["m"], p["k"], p["phase_bits"], p["unary_bits"], p["active_bits"])
    rng = np.random.default_rng(cfg.run["seed"])
    inputs = decoder.random_inputs(rng, p["count"], dcfg, p["beam_every"])
    decoder.write_vectors(out / "vectors.txt", inputs, dcfg)
    return ["vectors.txt"]


HANDLERS = {
    "error-sweep": cmd_error_sweep,
    "contours": cmd_contours,
    "efficiency": cmd_efficiency,
    "beam": cmd_beam,
    "modulate": cmd_modulate,
    "vectors": cmd_vectors,
}


def _parse_set(items):
    out = {}
    for item in items or []:
        key, sep, val = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        out[key.strip()] = val.strip()
    return out


def build_parser():
    ap = argparse.ArgumentParser(prog="mpibeam", description=__doc__)
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", metavar="PATH")
    ap.add_argument("--out", metavar="DIR", default=".")
    ap.add_argument("--seed", type=int, metavar="U64")
    ap.add_argument("--threads", type=int, metavar="N")
    ap.add_argument("--quant-mode", choices=("rounding", "exhaustive"))
    ap.add_argument("--set", action="append", metavar="KEY=VALUE",
                    help="override a key of the command's config section")
    return ap


def _fail(kind, msg, code):
    sys.stderr.write(json.dumps({"error": kind, "message": msg}) + "\n")
    return code


def main(argv=None):
    args = build_parser().parse_args(argv)
    threads = args.threads
    if threads is None and os.environ.get("MPIBEAM_THREADS"):
        threads = os.environ["MPIBEAM_THREADS"]
    if args.seed is not None and not 0 <= args.seed < 2 ** 64:
        return _fail("usage", "seed must be an unsigned 64-bit integer", 2)
    try:
        cfg = load(args.command.replace("-", "_"), args.config, _parse_set(args.set),
                   {"seed": args.seed, "threads": threads, "quant_mode": args.quant_mode})
        if cfg.run["threads"] < 1:
            raise ConfigError("threads must be >= 1")
        if cfg.run["quant_mode"] not in ("rounding", "exhaustive"):
            raise ConfigError(f"unknown quant_mode {cfg.run['quant_mode']!r}")
        table = cfg.params.get("measured_table")
        if table and not Path(table).is_file():
            raise ConfigError(f"measured table not found: {table}")
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        if not os.access(out, os.W_OK):
            raise ConfigError(f"output directory not writable: {out}")
    except (ConfigError, OSError) as exc:
        return _fail("usage", str(exc), 2)
    try:
        files = HANDLERS[args.command](cfg, out)
    except ConfigError as exc:
        return _fail("usage", str(exc), 2)
    except CheckFailed as exc:
        return _fail("check", str(exc), 1)
    except (ValueError, RuntimeError, OSError) as exc:
        return _fail(type(exc).__name__, str(exc), 1)
    for f in files:
        print(out / f)
    return 0


if __name__ == "__main__":
    sys.exit(main())
