"""Composite experiments chaining the device modules, plus the scenario
runner that writes reproducible report bundles.

A scenario is a JSON object

    {"kind": "<field_sweep|power_sweep|correlation_run|rng_grid|comms_demo>",
     "seed": <int>, "params": {...}, "out_dir": "..." (optional)}

`run` executes the named chain, writes CSV/JSON/waveform/PBM artifacts and
rendered figures into the output directory, and finishes with a manifest
(inputs hash, seeds, generator identity, output hashes).  Two runs of the
same scenario produce byte-identical data artifacts; only the manifest
timestamp differs.
"""

import hashlib
import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, comms, presets
from .coupling import CouplingCurve, device_coupling_curve
from .dispersion import MaterialFilm, find_k_for_frequency
from .dynamics import (BelowThresholdError, SystemParams, max_stable_step,
                       mode_splitting, phase_diffusion, saturation_number,
                       simulate_pair)
from .rngstream import GENERATOR_ID, stream
from .rngtest import digitize, run_suite
from .stats import correlation_report, phase_stats
from .tableio import write_csv
from .units import TWO_PI, hz_to_angular
from .waveio import write_waveform

KINDS = ("field_sweep", "power_sweep", "correlation_run", "rng_grid",
         "comms_demo")


@dataclass(frozen=True)
class Scenario:
    """Named experiment with its parameter grid and seed."""

    kind: str
    seed: int = 12345
    params: dict = field(default_factory=dict)
    out_dir: str | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"scenario kind must be one of {KINDS}")
        if not isinstance(self.params, dict):
            raise ValueError("params must be a JSON object")
        if self.params.get("grid") == []:
            raise ValueError("empty grid")

    @classmethod
    def from_json(cls, path) -> "Scenario":
        spec = json.loads(Path(path).read_text())
        return cls(kind=spec["kind"], seed=int(spec.get("seed", 12345)),
                   params=spec.get("params", {}),
                   out_dir=spec.get("out_dir"))

    def canonical_json(self) -> str:
        return json.dumps({"kind": self.kind, "seed": self.seed,
                           "params": self.params}, sort_keys=True)


def default_field_grid() -> np.ndarray:
    """Field grid resolving the degenerate-to-split transition window."""
    return np.concatenate([np.linspace(560.0, 604.0, 12),
                           np.linspace(605.0, 608.8, 20),
                           [610.0, 612.0]])


def field_sweep(film: MaterialFilm, curve: CouplingCurve, h_grid,
                pump_freq: float = presets.PUMP_FREQ,
                coupling_anchor: float = presets.COUPLING_GAP,
                mean_loss: float = presets.MAGNON_LOSS) -> list[dict]:
    """Splitting-versus-field table.

    For each field, the lowest-k crossing of the magnon branch with half
    the pump frequency is found, the gap coupling is read off the
    normalized curve anchored at the measured k = 0 value, and the
    frequency splitting follows as sqrt(max(g'^2 - kappa^2, 0)).  Fields
    whose band never reaches the target get regime "no crossing".
    """
    target = hz_to_angular(pump_freq / 2.0)
    rows = []
    for h in np.asarray(h_grid, dtype=float):
        f = film.with_field(float(h))
        roots = find_k_for_frequency(f, target, bracket=(0.0, 1e8))
        if not roots:
            rows.append({"field_oe": float(h), "k_cross": None,
                         "coupling": None, "splitting_hz": None,
                         "regime": "no crossing"})
            continue
        k = roots[0]
        g_eff = coupling_anchor * curve.g_at(k)
        delta = mode_splitting(g_eff, mean_loss)
        rows.append({"field_oe": float(h), "k_cross": k,
                     "coupling": g_eff, "splitting_hz": delta / TWO_PI,
                     "regime": "degenerate" if delta == 0.0
                     else "non-degenerate"})
    return rows


def power_sweep(params: SystemParams, power_ratios) -> dict:
    """Occupation and output-power proxy against pump power.

    Power enters through drive = drive_ref sqrt(P/P_ref); the grid is in
    units of the threshold power.  Occupation is zero below threshold
    and grows as sqrt(P/P_th - 1); the splitting column stays constant
    (it depends on the coupling, not the drive), and the output proxy is
    occupation times the cavity loss (photon emission rate).
    """
    ratios = np.asarray(power_ratios, dtype=float)
    if len(ratios) == 0:
        raise ValueError("empty power grid")
    if ratios.max() <= 1.0:
        raise ValueError("power grid must span the threshold")
    delta = mode_splitting(params.coupling, params.mean_loss)
    rows = []
    for r in ratios:
        drive = params.threshold_drive * math.sqrt(max(r, 0.0))
        p = params.with_drive(drive)
        try:
            n = saturation_number(p)
        except BelowThresholdError:
            n = 0.0
        rows.append({"power_over_threshold": float(r), "drive": drive,
                     "occupation": n,
                     "output_proxy": n * params.cavity_loss,
                     "splitting_hz": delta / TWO_PI})
    return {"rows": rows, "threshold_drive": params.threshold_drive}


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    h.update(path.read_bytes())
    return h.hexdigest()


def _json_dump(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def run(scenario: Scenario, out_dir=None) -> dict:
    """Execute a scenario and write its report bundle plus manifest."""
    out = Path(out_dir or scenario.out_dir or f"magpo-{scenario.kind}")
    out.mkdir(parents=True, exist_ok=True)
    runner = {
        "field_sweep": _run_field_sweep,
        "power_sweep": _run_power_sweep,
        "correlation_run": _run_correlation,
        "rng_grid": _run_rng_grid,
        "comms_demo": _run_comms_demo,
    }[scenario.kind]
    try:
        outputs = runner(scenario, out)
    except Exception as exc:
        partial = {
            "scenario": json.loads(scenario.canonical_json()),
            "failed_stage": scenario.kind,
            "error": f"{type(exc).__name__}: {exc}",
            "generator": GENERATOR_ID,
            "version": __version__,
        }
        _json_dump(out / "manifest.json", partial)
        raise
    manifest = {
        "scenario": json.loads(scenario.canonical_json()),
        "inputs_sha256": hashlib.sha256(
            scenario.canonical_json().encode()).hexdigest(),
        "seed": scenario.seed,
        "generator": GENERATOR_ID,
        "version": __version__,
        "created_unix": time.time(),
        "outputs": {name: _sha256(out / name) for name in sorted(outputs)},
    }
    _json_dump(out / "manifest.json", manifest)
    return manifest


def _maybe_figures(enabled: bool):
    if not enabled:
        return None
    from . import plots
    return plots


def _run_field_sweep(sc: Scenario, out: Path) -> list[str]:
    p = sc.params
    film = presets.device_film()
    curve = device_coupling_curve(film)
    grid = np.asarray(p["h_grid"], float) if "h_grid" in p \
        else default_field_grid()
    rows = field_sweep(film, curve, grid,
                       pump_freq=p.get("pump_freq", presets.PUMP_FREQ))
    write_csv(out / "field_sweep.csv",
              ["field_oe", "k_cross", "coupling", "splitting_hz", "regime"],
              rows)
    outputs = ["field_sweep.csv"]
    plots = _maybe_figures(p.get("figures", True))
    if plots:
        plots.field_sweep_figure(rows, out / "field_sweep.png")
        outputs.append("field_sweep.png")
    return outputs


def _run_power_sweep(sc: Scenario, out: Path) -> list[str]:
    p = sc.params
    params = presets.reference_pair_params()
    ratios = p.get("power_ratios") or np.linspace(0.25, 4.0, 16).tolist()
    result = power_sweep(params, ratios)
    write_csv(out / "power_sweep.csv",
              ["power_over_threshold", "drive", "occupation", "output_proxy",
               "splitting_hz"], result["rows"])
    _json_dump(out / "power_sweep.json",
               {"threshold_drive": result["threshold_drive"]})
    outputs = ["power_sweep.csv", "power_sweep.json"]
    plots = _maybe_figures(p.get("figures", True))
    if plots:
        plots.power_sweep_figure(result["rows"], out / "power_sweep.png")
        outputs.append("power_sweep.png")
    return outputs


def _run_correlation(sc: Scenario, out: Path) -> list[str]:
    p = sc.params
    params = presets.reference_pair_params()
    trajectories = int(p.get("trajectories", 8))
    duration = float(p.get("duration_s", 1.2e-3))
    store_rate = float(p.get("store_rate_hz", 2e6))
    dt_max = max_stable_step(params)
    substeps = int(math.ceil(1.0 / (store_rate * dt_max)))
    step = 1.0 / (store_rate * substeps)
    result = simulate_pair(params, step, duration, seed=sc.seed,
                           trajectories=trajectories, store_every=substeps,
                           initial="steady")
    outputs = []
    for traj in range(min(trajectories, int(p.get("saved_waveforms", 2)))):
        sig, idl = result.to_waveforms(traj)
        for name, wf in (("signal", sig), ("idler", idl)):
            fname = f"traj{traj:03d}_{name}.magw"
            write_waveform(out / fname, wf)
            outputs.append(fname)
    x1, p1, x2, p2 = result.quadratures()
    max_lag = int(p.get("max_lag_samples", min(600, x1.shape[1] // 4)))
    report = correlation_report(x1, p1, x2, p2, result.sample_rate, max_lag)
    _json_dump(out / "correlation_report.json", report.to_dict())
    outputs.append("correlation_report.json")
    phi1, phi2 = result.phases()
    stats = phase_stats(phi1.ravel(), phi2.ravel())
    _json_dump(out / "phase_stats.json", stats.to_dict())
    outputs.append("phase_stats.json")
    centers = 0.5 * (stats.bin_edges[1:] + stats.bin_edges[:-1])
    write_csv(out / "phase_histograms.csv",
              ["phase_rad", "sum_count", "diff_count"],
              zip(centers, stats.sum_hist, stats.diff_hist))
    outputs.append("phase_histograms.csv")
    n_sat = saturation_number(params)
    d_hz, tau_c = phase_diffusion(params, n_sat)
    _json_dump(out / "coherence.json", {
        "predicted_linewidth_hz": d_hz,
        "predicted_tau_c_s": tau_c,
        "fitted_tau_c_s": report.coherence_times,
    })
    outputs.append("coherence.json")
    plots = _maybe_figures(p.get("figures", True))
    if plots:
        plots.correlation_matrix_figure(report, out / "correlation_matrix.png")
        plots.lag_curves_figure(report, out / "correlation_curves.png")
        plots.phase_hist_figure(stats, out / "phase_histograms.png")
        plots.quadrature_cloud_figure(x1, p1, x2, p2,
                                      out / "quadrature_clouds.png")
        outputs += ["correlation_matrix.png", "correlation_curves.png",
                    "phase_histograms.png", "quadrature_clouds.png"]
    return outputs


def simulated_phase_trace(params: SystemParams, duration: float, seed: int,
                          store_interval: float):
    """One steady-state trajectory's signal phase, sampled uniformly.

    Returns (phases, sample_rate); used by the randomness grid, which
    digitizes one trace at several strides like the source experiment
    digitized one measured waveform.
    """
    dt_max = max_stable_step(params)
    substeps = int(math.ceil(store_interval / dt_max))
    step = store_interval / substeps
    run_r = simulate_pair(params, step, duration, seed=seed, trajectories=1,
                          store_every=substeps, initial="steady")
    phi1, _ = run_r.phases()
    return phi1[0], run_r.sample_rate


def effective_coherence_time(params: SystemParams, seed: int,
                             trajectories: int = 4) -> float:
    """Coherence time fitted from a short simulated quadrature record.

    The diffusion formula tau_c = 4 n / (n_th kappa) is a large-occupation
    asymptote; near threshold (n comparable to n_th) the envelope
    decorrelates faster.  Sampling intervals for randomness work are
    therefore referred to the source's own fitted coherence time, the same
    calibration the bench procedure uses on measured waveforms.
    """
    from .stats import ensemble_correlation, fit_coherence_time

    _, tau_formula = phase_diffusion(params, saturation_number(params))
    store = tau_formula / 200.0
    dt_max = max_stable_step(params)
    substeps = int(math.ceil(store / dt_max))
    step = store / substeps
    run_r = simulate_pair(params, step, 8.0 * tau_formula, seed=seed,
                          trajectories=trajectories, store_every=substeps,
                          initial="steady")
    x1 = run_r.vplus.real
    max_lag = x1.shape[1] // 3
    lags, rho = ensemble_correlation([(t, t) for t in x1], max_lag)
    tau, _ = fit_coherence_time(lags / run_r.sample_rate, np.abs(rho))
    return tau


def _run_rng_grid(sc: Scenario, out: Path) -> list[str]:
    p = sc.params
    ratio = float(p.get("occupation_ratio", 4.0))
    params = presets.scaled_pair_params(ratio)
    schemes = p.get("schemes", ["bpsk", "qpsk", "8psk"])
    intervals = p.get("intervals_tau_c", [0.5, 2.0, 10.0])
    target_bits = int(p.get("target_bits", 5000))
    # intervals are multiples of the source's own fitted coherence time
    tau_c = effective_coherence_time(params, seed=sc.seed + 1)

    # one phase trace covers every (scheme, interval) cell, mirroring the
    # single measured waveform the grid is derived from
    min_bits_per = min({"bpsk": 1, "qpsk": 2, "8psk": 3}[s] for s in schemes)
    store = min(intervals) * tau_c / 2.0
    duration = (target_bits // min_bits_per + 2) * max(intervals) * tau_c
    phases, rate = simulated_phase_trace(params, duration, sc.seed, store)

    grid_rows = []
    reports = {}
    test_names = None
    for scheme in schemes:
        for mult in intervals:
            interval = mult * tau_c
            bs = digitize(phases, interval, rate, scheme,
                          source=f"{scheme}-{mult:g}tau")
            rep = run_suite(bs)
            reports[f"{scheme}@{mult:g}"] = rep
            if test_names is None:
                test_names = [r.name for r in rep.rows]
            row = {"scheme": scheme, "interval_tau_c": mult,
                   "interval_s": interval, "n_bits": rep.n_bits,
                   "n_passed": rep.n_passed}
            for r in rep.rows:
                row[r.name] = ("" if r.status != "ok"
                               else ("pass" if r.passed else "fail"))
            grid_rows.append(row)
    header = (["scheme", "interval_tau_c", "interval_s", "n_bits",
               "n_passed"] + test_names)
    write_csv(out / "rng_grid.csv", header, grid_rows)
    _json_dump(out / "rng_reports.json",
               {k: v.to_dict() for k, v in reports.items()})
    outputs = ["rng_grid.csv", "rng_reports.json"]
    plots = _maybe_figures(p.get("figures", True))
    if plots:
        plots.rng_grid_figure(grid_rows, test_names, out / "rng_grid.png")
        outputs.append("rng_grid.png")
    return outputs


def _run_comms_demo(sc: Scenario, out: Path) -> list[str]:
    p = sc.params
    cfg_kwargs = {k: p[k] for k in
                  ("symbol_rate", "rx_rate", "upsample", "snr_db", "loss",
                   "delay", "search_halfwidth", "occupation_ratio")
                  if k in p}
    config = comms.LinkConfig(**cfg_kwargs)
    if "image_pbm" in p:
        image = comms.read_pbm(p["image_pbm"])
    else:
        image = comms.demo_image()
    result = comms.image_roundtrip(image, config, seed=sc.seed)
    comms.write_pbm(out / "sent.pbm", image)
    comms.write_pbm(out / "received.pbm", result["image"])
    outputs = ["sent.pbm", "received.pbm"]
    for key, name in (("image_signal_only", "signal_only.pbm"),
                      ("image_idler_only", "idler_only.pbm")):
        if result.get(key) is not None:
            comms.write_pbm(out / name, result[key])
            outputs.append(name)
    _json_dump(out / "link_report.json", {
        "ber": result["ber"],
        "ber_signal_only": result["ber_signal_only"],
        "ber_idler_only": result["ber_idler_only"],
        "recovered_lag_s": result["lag"],
        "true_delay_s": config.delay,
        "snr_db": config.snr_db,
        "phase_offset": result["phase_offset"],
    })
    outputs.append("link_report.json")
    plots = _maybe_figures(p.get("figures", True))
    if plots:
        plots.image_panel_figure(
            {"sent": image, "received": result["image"],
             "signal only": result.get("image_signal_only"),
             "idler only": result.get("image_idler_only")},
            out / "images.png")
        outputs.append("images.png")
    return outputs
