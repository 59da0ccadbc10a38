"""Command-line interface.

Subcommands: dispersion, resonator, coupling, dynamics, stats, rngtest,
comms, run.  Frequencies are Hz and fields Oe on all flags; --plot
renders a PNG next to each delimited output.  Errors exit non-zero; with
--error-json the diagnostic is emitted as one JSON object on stdout.
"""

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, presets
from .units import TWO_PI, dbm_to_watts, hz_to_angular
from .tableio import write_csv, read_csv


def _out_dir(args) -> Path:
    out = Path(os.environ.get("MAGPO_OUT_DIR", args.out_dir or "."))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _film_args(sub):
    sub.add_argument("--thickness-um", type=float, default=3.0)
    sub.add_argument("--ms-gauss", type=float, default=1750.0,
                     help="saturation magnetization as 4 pi M_S (G)")
    sub.add_argument("--gamma", type=float, default=2.8e6,
                     help="gyromagnetic ratio (Hz/Oe)")
    sub.add_argument("--exchange", type=float, default=5.4e-9,
                     help="exchange constant D (Oe cm^2)")
    sub.add_argument("--field-oe", type=float, default=595.0)
    sub.add_argument("--angle-deg", type=float, default=38.0)


def _film_from(args):
    from .dispersion import MaterialFilm
    return MaterialFilm(thickness=args.thickness_um * 1e-6,
                        four_pi_ms=args.ms_gauss, gamma=args.gamma,
                        exchange=args.exchange, field=args.field_oe,
                        angle=math.radians(args.angle_deg))


def cmd_dispersion(args):
    from .dispersion import ellipticity, magnon_frequency
    film = _film_from(args)
    ks = np.linspace(0.0, args.k_max, args.samples)
    rows = []
    for k in ks:
        rho, e = ellipticity(film, k)
        rows.append({"k_rad_per_m": float(k),
                     "freq_hz": magnon_frequency(film, k, args.index) / TWO_PI,
                     "rho_k": rho, "e_k": e})
    out = _out_dir(args) / (args.out or "dispersion.csv")
    write_csv(out, ["k_rad_per_m", "freq_hz", "rho_k", "e_k"], rows)
    print(out)
    if args.plot:
        from .plots import dispersion_figure
        print(dispersion_figure(rows, out.with_suffix(".png")))
    return 0


def cmd_resonator_modes(args):
    from .resonator import REFERENCE_GEOMETRY, ResonatorGeometry, \
        resonance_frequencies, resonance_wavenumbers
    if args.left_mm is None:
        geom = REFERENCE_GEOMETRY
    else:
        geom = ResonatorGeometry(
            narrow_len=args.narrow_mm * 1e-3, left_len=args.left_mm * 1e-3,
            right_len=args.right_mm * 1e-3,
            impedance_ratio=args.impedance_ratio, z0=args.z0,
            phase_velocity=args.velocity)
    freqs = resonance_frequencies(geom, args.n_modes)
    ks = resonance_wavenumbers(
        geom, (1e-6, (args.n_modes + 2) * math.pi / geom.total_len
               * max(1.0, geom.impedance_ratio)))[: args.n_modes]
    rows = [{"mode": i + 1, "k_rad_per_m": k, "freq_hz": f}
            for i, (k, f) in enumerate(zip(ks, freqs))]
    out = _out_dir(args) / (args.out or "resonator_modes.csv")
    write_csv(out, ["mode", "k_rad_per_m", "freq_hz"], rows)
    print(out)
    return 0


def _loaded_params(args):
    from .resonator import LoadedCavityParams
    return LoadedCavityParams(
        omega_r=hz_to_angular(args.f_r_ghz * 1e9),
        kappa_r=TWO_PI * args.kappa_r_mhz * 1e6,
        kappa_e=TWO_PI * args.kappa_e_mhz * 1e6,
        kappa_m=TWO_PI * args.kappa_m_mhz * 1e6,
        g=TWO_PI * args.g_mhz * 1e6, gamma=args.gamma,
        four_pi_ms=args.ms_gauss)


def cmd_resonator_s21map(args):
    from .resonator import s21_map
    p = _loaded_params(args)
    freqs = np.linspace(args.f_min_ghz, args.f_max_ghz, args.f_points) * 1e9
    fields = np.linspace(args.h_min, args.h_max, args.h_points)
    mag = s21_map(p, hz_to_angular(freqs), fields)
    rows = []
    for i, f in enumerate(freqs):
        for j, h in enumerate(fields):
            rows.append({"freq_hz": float(f), "field_oe": float(h),
                         "mag_s21": float(mag[i, j])})
    out = _out_dir(args) / (args.out or "s21_map.csv")
    write_csv(out, ["freq_hz", "field_oe", "mag_s21"], rows)
    print(out)
    if args.plot:
        from .plots import s21_map_figure
        print(s21_map_figure(freqs, fields, mag, out.with_suffix(".png")))
    return 0


def cmd_resonator_fit(args):
    from .resonator import fit_anticrossing
    header, raw = read_csv(args.map)
    idx = {h: i for i, h in enumerate(header)}
    freqs = sorted({float(r[idx["freq_hz"]]) for r in raw})
    fields = sorted({float(r[idx["field_oe"]]) for r in raw})
    mag = np.zeros((len(freqs), len(fields)))
    fi = {f: i for i, f in enumerate(freqs)}
    hj = {h: j for j, h in enumerate(fields)}
    for r in raw:
        mag[fi[float(r[idx["freq_hz"]])],
            hj[float(r[idx["field_oe"]])]] = float(r[idx["mag_s21"]])
    params, report = fit_anticrossing(hz_to_angular(np.array(freqs)),
                                      np.array(fields), mag,
                                      gamma=args.gamma,
                                      four_pi_ms=args.ms_gauss)
    result = {
        "f_r_hz": params.omega_r / TWO_PI,
        "kappa_r_hz": params.kappa_r / TWO_PI,
        "kappa_e_hz": params.kappa_e / TWO_PI,
        "kappa_m_hz": params.kappa_m / TWO_PI,
        "g_hz": params.g / TWO_PI,
        "residual_norm": report["residual_norm"],
        "uncertainty": report["uncertainty"],
    }
    print(json.dumps(result, indent=2, sort_keys=True))
    return 0


def cmd_resonator_pumpfield(args):
    from .resonator import pump_field_strength
    h = pump_field_strength(dbm_to_watts(args.power_dbm), args.q, args.z0,
                            args.width_um * 1e-6)
    print(f"{h:.17g}")
    return 0


def cmd_coupling_curve(args):
    from .coupling import device_coupling_curve
    film = _film_from(args)
    curve = device_coupling_curve(film, k_max=args.k_max, n_k=args.samples)
    rows = [{"k_rad_per_m": float(k), "g_norm": float(g), "p_norm": float(p),
             "rho_k": float(r)}
            for k, g, p, r in zip(curve.k, curve.g_norm, curve.p_norm,
                                  curve.rho)]
    out = _out_dir(args) / (args.out or "coupling_curve.csv")
    write_csv(out, ["k_rad_per_m", "g_norm", "p_norm", "rho_k"], rows)
    print(out)
    if args.plot:
        from .plots import coupling_figure
        print(coupling_figure(curve, out.with_suffix(".png")))
    return 0


def cmd_coupling_threshold(args):
    from .coupling import threshold_field
    from .dispersion import ellipticity
    film = _film_from(args)
    rho, _ = ellipticity(film, args.k)
    h_th = threshold_field(TWO_PI * args.kappa_mhz * 1e6, rho, args.gamma,
                           args.p_ratio)
    print(json.dumps({"threshold_oe": h_th, "rho_k": rho,
                      "kappa_hz": args.kappa_mhz * 1e6,
                      "p_ratio": args.p_ratio}, indent=2, sort_keys=True))
    return 0


def _system_params(args):
    from .dynamics import SystemParams
    if args.params:
        spec = json.loads(Path(args.params).read_text())
        return SystemParams(**spec)
    return presets.reference_pair_params()


def cmd_dynamics_eig(args):
    from .dynamics import analytic_eigenvalues, build_matrix_m
    p = _system_params(args)
    n = args.n_magnon if args.n_magnon is not None else 0.0
    lam_num = np.linalg.eigvals(build_matrix_m(p, n))
    lam_ana = analytic_eigenvalues(p, n)
    order = np.argsort(-lam_num.real)
    rows = [{"numeric_real": float(lam_num[i].real),
             "numeric_imag": float(lam_num[i].imag)} for i in order]
    for i, row in enumerate(rows):
        row["analytic_real"] = float(sorted(lam_ana, key=lambda z: -z.real)[i].real)
        row["analytic_imag"] = float(sorted(lam_ana, key=lambda z: -z.real)[i].imag)
    out = _out_dir(args) / (args.out or "eigenvalues.csv")
    write_csv(out, ["numeric_real", "numeric_imag", "analytic_real",
                    "analytic_imag"], rows)
    print(out)
    return 0


def cmd_dynamics_simulate(args):
    from .dynamics import max_stable_step, simulate_pair
    from .waveio import write_waveform
    p = _system_params(args)
    step = args.step if args.step else max_stable_step(p)
    run = simulate_pair(p, step, args.duration, seed=args.seed,
                        trajectories=args.trajectories,
                        store_every=args.store_every, initial=args.initial)
    out = _out_dir(args)
    for traj in range(run.trajectories):
        sig, idl = run.to_waveforms(traj)
        for name, wf in (("signal", sig), ("idler", idl)):
            path = out / f"traj{traj:03d}_{name}.magw"
            write_waveform(path, wf)
            print(path)
    return 0


def cmd_dynamics_fpfit(args):
    from .dynamics import fit_fp, fp_mode
    header, raw = read_csv(args.samples)
    col = header.index("occupation")
    samples = np.array([float(r[col]) for r in raw])
    scale, excess = fit_fp(samples)
    print(json.dumps({"radius_scale": scale, "pump_excess": excess,
                      "mode_occupation": fp_mode(scale, excess)},
                     indent=2, sort_keys=True))
    return 0


def cmd_stats(args):
    from .stats import correlation_report, phase_stats
    from .waveio import read_waveform
    sig = read_waveform(args.signal)
    idl = read_waveform(args.idler)
    x1, p1 = sig.samples.real, sig.samples.imag
    x2, p2 = idl.samples.real, idl.samples.imag
    max_lag = int(args.max_lag_s * sig.sample_rate) if args.max_lag_s \
        else min(600, len(x1) // 4)
    report = correlation_report(x1, p1, x2, p2, sig.sample_rate, max_lag)
    ps = phase_stats(np.angle(sig.samples), np.angle(idl.samples))
    out = _out_dir(args)
    (out / "correlation_report.json").write_text(
        json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n")
    centers = 0.5 * (ps.bin_edges[1:] + ps.bin_edges[:-1])
    write_csv(out / "phase_histograms.csv",
              ["phase_rad", "sum_count", "diff_count"],
              zip(centers, ps.sum_hist, ps.diff_hist))
    print(out / "correlation_report.json")
    print(out / "phase_histograms.csv")
    if args.plot:
        from .plots import correlation_matrix_figure, phase_hist_figure
        print(correlation_matrix_figure(report, out / "correlation_matrix.png"))
        print(phase_hist_figure(ps, out / "phase_histograms.png"))
    return 0


def cmd_rngtest(args):
    from .rngtest import Bitstream, Provenance, digitize, run_suite
    from .waveio import read_waveform
    if args.waveform:
        wf = read_waveform(args.waveform)
        bs = digitize(wf.phases(), args.interval_s, wf.sample_rate,
                      args.scheme, source=str(args.waveform))
    elif args.bits:
        raw = Path(args.bits).read_bytes()
        bs = Bitstream(data=raw, n_bits=8 * len(raw),
                       provenance=Provenance(scheme="raw", interval=0.0,
                                             source=str(args.bits)))
    else:
        raise SystemExit("need --waveform or --bits")
    report = run_suite(bs)
    out = _out_dir(args) / (args.out or "rngtest_report.json")
    out.write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True)
                   + "\n")
    print(out)
    for row in report.rows:
        verdict = row.status if row.status != "ok" else \
            ("pass" if row.passed else "fail")
        print(f"{row.name:18s} {verdict}")
    return 0


def _link_config(args):
    from .comms import LinkConfig
    kwargs = {}
    for name in ("symbol_rate", "rx_rate", "upsample", "snr_db", "loss",
                 "delay", "occupation_ratio"):
        v = getattr(args, name, None)
        if v is not None:
            kwargs[name] = v
    return LinkConfig(**kwargs)


def cmd_comms_send(args):
    from .comms import (ChannelModel, Frame, demo_image,
                        noise_variance_for_snr, propagate, qpsk_modulate,
                        read_pbm, simulate_link_pair, write_pbm)
    from .waveio import write_waveform
    cfg = _link_config(args)
    image = read_pbm(args.image) if args.image else demo_image()
    flat = image.ravel()
    payload = np.concatenate([flat, np.zeros(len(flat) % 2, dtype=np.uint8)])
    frame = Frame(payload=payload, symbol_rate=cfg.symbol_rate)
    sig_tx, idler = simulate_link_pair(cfg, frame.n_symbols, args.seed)
    tx = qpsk_modulate(frame, sig_tx)
    channel = ChannelModel(loss=cfg.loss,
                           noise_variance=noise_variance_for_snr(
                               tx, cfg.snr_db, cfg.loss),
                           delay=cfg.delay, upsample=cfg.upsample)
    rx = propagate(tx, channel, seed=args.seed)
    out = _out_dir(args)
    write_waveform(out / "rx.magw", rx)
    write_waveform(out / "idler.magw", idler)
    write_pbm(out / "sent.pbm", image)
    meta = {"symbol_rate": cfg.symbol_rate, "snr_db": cfg.snr_db,
            "delay": cfg.delay, "search_halfwidth": cfg.search_halfwidth,
            "image_shape": list(image.shape), "seed": args.seed,
            "payload_bits": payload.tolist()}
    (out / "link_meta.json").write_text(json.dumps(meta, sort_keys=True))
    for name in ("rx.magw", "idler.magw", "sent.pbm", "link_meta.json"):
        print(out / name)
    return 0


def cmd_comms_receive(args):
    from .comms import (Frame, LinkLostError, bit_error_rate,
                        correlation_receive, single_channel_decode, write_pbm)
    from .waveio import read_waveform
    meta = json.loads(Path(args.meta).read_text())
    rx = read_waveform(args.rx)
    idler = read_waveform(args.idler)
    payload = np.array(meta["payload_bits"], dtype=np.uint8)
    frame = Frame(payload=payload, symbol_rate=meta["symbol_rate"])
    window = (max(0.0, meta["delay"] - meta["search_halfwidth"]),
              meta["delay"] + meta["search_halfwidth"])
    result = correlation_receive(rx, idler, frame, window)
    shape = meta["image_shape"]
    n_px = shape[0] * shape[1]
    image = result.bits[:n_px].reshape(shape)
    out = _out_dir(args)
    write_pbm(out / "received.pbm", image)
    report = {"ber": bit_error_rate(payload, result.bits),
              "recovered_lag_s": result.lag_seconds,
              "phase_offset": result.phase_offset}
    try:
        single = single_channel_decode(rx, frame, result.lag_seconds)
        report["ber_signal_only"] = bit_error_rate(payload, single)
    except LinkLostError:
        report["ber_signal_only"] = None
    (out / "receive_report.json").write_text(
        json.dumps(report, indent=2, sort_keys=True) + "\n")
    print(out / "received.pbm")
    print(out / "receive_report.json")
    return 0


def cmd_comms_bersweep(args):
    from .comms import ber_sweep, demo_image
    cfg = _link_config(args)
    payload = demo_image().ravel()
    payload = np.concatenate([payload,
                              np.zeros(len(payload) % 2, dtype=np.uint8)])
    if args.bits and args.bits < len(payload):
        payload = payload[: args.bits - args.bits % 2]
    grid = np.linspace(args.snr_min, args.snr_max, args.points)
    rows = ber_sweep(payload, grid, range(args.seed, args.seed + args.seeds),
                     cfg)
    out = _out_dir(args) / (args.out or "ber_sweep.csv")
    write_csv(out, ["snr_db", "ber_correlation", "ber_single_channel",
                    "n_seeds"], rows)
    print(out)
    if args.plot:
        from .plots import ber_sweep_figure
        print(ber_sweep_figure(rows, out.with_suffix(".png")))
    return 0


def cmd_run(args):
    from .scenario import Scenario, run
    sc = Scenario.from_json(args.scenario)
    if args.seed is not None:
        sc = Scenario(kind=sc.kind, seed=args.seed, params=sc.params,
                      out_dir=sc.out_dir)
    manifest = run(sc, out_dir=args.out_dir)
    print(json.dumps({"out_dir": args.out_dir or sc.out_dir
                      or f"magpo-{sc.kind}",
                      "outputs": sorted(manifest["outputs"])}, indent=2))
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="magpo",
        description="Cavity-magnonic parametric pair simulator and toolkit")
    ap.add_argument("--version", action="version", version=__version__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=12345)
    common.add_argument("--out-dir", default=None)
    common.add_argument("--config", default=None,
                        help="JSON file with default overrides")
    common.add_argument("--error-json", action="store_true",
                        help="emit errors as a JSON object on stdout")
    common.add_argument("--plot", action="store_true",
                        help="render figures next to delimited outputs")
    sub = ap.add_subparsers(dest="command", required=True)

    d = sub.add_parser("dispersion", parents=[common],
                       help="magnon band and ellipticity table")
    _film_args(d)
    d.add_argument("--k-max", type=float, default=1e6)
    d.add_argument("--samples", type=int, default=201)
    d.add_argument("--index", type=int, default=0)
    d.add_argument("--out", default=None)
    d.set_defaults(fn=cmd_dispersion)

    r = sub.add_parser("resonator", parents=[common],
                       help="resonator modes, transmission, fits")
    rs = r.add_subparsers(dest="subcommand", required=True)
    rm = rs.add_parser("modes", parents=[common])
    rm.add_argument("--narrow-mm", type=float, default=2.0)
    rm.add_argument("--left-mm", type=float, default=None)
    rm.add_argument("--right-mm", type=float, default=None)
    rm.add_argument("--impedance-ratio", type=float, default=3.0)
    rm.add_argument("--z0", type=float, default=50.0)
    rm.add_argument("--velocity", type=float, default=2.013e8)
    rm.add_argument("--n-modes", type=int, default=4)
    rm.add_argument("--out", default=None)
    rm.set_defaults(fn=cmd_resonator_modes)
    rs21 = rs.add_parser("s21map", parents=[common])
    for flag, default in (("--g-mhz", 70.3), ("--kappa-r-mhz", 82.4),
                          ("--kappa-e-mhz", 30.0), ("--kappa-m-mhz", 68.8),
                          ("--f-r-ghz", 3.354), ("--f-min-ghz", 3.15),
                          ("--f-max-ghz", 3.55), ("--h-min", 560.0),
                          ("--h-max", 660.0), ("--gamma", 2.8e6),
                          ("--ms-gauss", 1750.0)):
        rs21.add_argument(flag, type=float, default=default)
    rs21.add_argument("--f-points", type=int, default=81)
    rs21.add_argument("--h-points", type=int, default=41)
    rs21.add_argument("--out", default=None)
    rs21.set_defaults(fn=cmd_resonator_s21map)
    rf = rs.add_parser("fit", parents=[common])
    rf.add_argument("--map", required=True)
    rf.add_argument("--gamma", type=float, default=2.8e6)
    rf.add_argument("--ms-gauss", type=float, default=1750.0)
    rf.set_defaults(fn=cmd_resonator_fit)
    rp = rs.add_parser("pumpfield", parents=[common])
    rp.add_argument("--power-dbm", type=float, required=True)
    rp.add_argument("--q", type=float, required=True)
    rp.add_argument("--z0", type=float, default=50.0)
    rp.add_argument("--width-um", type=float, default=40.0)
    rp.set_defaults(fn=cmd_resonator_pumpfield)

    c = sub.add_parser("coupling", parents=[common],
                       help="coupling curves and threshold field")
    cs = c.add_subparsers(dest="subcommand", required=True)
    cc = cs.add_parser("curve", parents=[common])
    _film_args(cc)
    cc.add_argument("--k-max", type=float, default=1e6)
    cc.add_argument("--samples", type=int, default=201)
    cc.add_argument("--out", default=None)
    cc.set_defaults(fn=cmd_coupling_curve)
    ct = cs.add_parser("threshold", parents=[common])
    _film_args(ct)
    ct.add_argument("--k", type=float, default=0.0)
    ct.add_argument("--kappa-mhz", type=float, default=68.8)
    ct.add_argument("--p-ratio", type=float, default=1.0)
    ct.set_defaults(fn=cmd_coupling_threshold)

    dy = sub.add_parser("dynamics", parents=[common],
                        help="matrix eigenvalues and pair simulation")
    dys = dy.add_subparsers(dest="subcommand", required=True)
    de = dys.add_parser("eig", parents=[common])
    de.add_argument("--params", default=None)
    de.add_argument("--n-magnon", type=float, default=None)
    de.add_argument("--out", default=None)
    de.set_defaults(fn=cmd_dynamics_eig)
    ds = dys.add_parser("simulate", parents=[common])
    ds.add_argument("--params", default=None)
    ds.add_argument("--step", type=float, default=None)
    ds.add_argument("--duration", type=float, required=True)
    ds.add_argument("--trajectories", type=int, default=1)
    ds.add_argument("--store-every", type=int, default=100)
    ds.add_argument("--initial", choices=["vacuum", "steady"],
                    default="vacuum")
    ds.set_defaults(fn=cmd_dynamics_simulate)
    df = dys.add_parser("fpfit", parents=[common])
    df.add_argument("--samples", required=True,
                    help="CSV with an 'occupation' column")
    df.set_defaults(fn=cmd_dynamics_fpfit)

    st = sub.add_parser("stats", parents=[common],
                        help="correlation report from waveform files")
    st.add_argument("--signal", required=True)
    st.add_argument("--idler", required=True)
    st.add_argument("--max-lag-s", type=float, default=None)
    st.set_defaults(fn=cmd_stats)

    rt = sub.add_parser("rngtest", parents=[common],
                        help="digitize a waveform and run the test suite")
    rt.add_argument("--waveform", default=None)
    rt.add_argument("--bits", default=None,
                    help="raw bit file (packed bytes)")
    rt.add_argument("--scheme", choices=["bpsk", "qpsk", "8psk"],
                    default="bpsk")
    rt.add_argument("--interval-s", type=float, default=1e-3)
    rt.add_argument("--out", default=None)
    rt.set_defaults(fn=cmd_rngtest)

    cm = sub.add_parser("comms", parents=[common],
                        help="correlated-pair link simulation")
    cms = cm.add_subparsers(dest="subcommand", required=True)
    for name, fn in (("send", cmd_comms_send),):
        cp = cms.add_parser(name, parents=[common])
        cp.add_argument("--image", default=None, help="plain PBM (P1) file")
        for flag, typ in (("--symbol-rate", float), ("--rx-rate", float),
                          ("--upsample", int), ("--snr-db", float),
                          ("--loss", float), ("--delay", float),
                          ("--occupation-ratio", float)):
            cp.add_argument(flag, type=typ, default=None)
        cp.set_defaults(fn=fn)
    cr = cms.add_parser("receive", parents=[common])
    cr.add_argument("--rx", required=True)
    cr.add_argument("--idler", required=True)
    cr.add_argument("--meta", required=True)
    cr.set_defaults(fn=cmd_comms_receive)
    cb = cms.add_parser("bersweep", parents=[common])
    cb.add_argument("--snr-min", type=float, default=-14.0)
    cb.add_argument("--snr-max", type=float, default=-2.0)
    cb.add_argument("--points", type=int, default=4)
    cb.add_argument("--seeds", type=int, default=3)
    cb.add_argument("--bits", type=int, default=200)
    cb.add_argument("--out", default=None)
    for flag, typ in (("--symbol-rate", float), ("--rx-rate", float),
                      ("--upsample", int), ("--snr-db", float),
                      ("--loss", float), ("--delay", float),
                      ("--occupation-ratio", float)):
        cb.add_argument(flag, type=typ, default=None)
    cb.set_defaults(fn=cmd_comms_bersweep)

    rn = sub.add_parser("run", parents=[common],
                        help="execute a scenario file")
    rn.add_argument("scenario")
    rn.set_defaults(fn=cmd_run)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    if args.config:
        # config files provide flag defaults; explicit flags win
        overrides = json.loads(Path(args.config).read_text())
        for key, value in overrides.items():
            attr = key.replace("-", "_")
            if hasattr(args, attr) and ap.get_default(attr) == getattr(args, attr):
                setattr(args, attr, value)
    try:
        return args.fn(args)
    except Exception as exc:  # noqa: BLE001 - single CLI error funnel
        if getattr(args, "error_json", False):
            print(json.dumps({"error": type(exc).__name__,
                              "message": str(exc)}))
        else:
            print(f"magpo: error: {type(exc).__name__}: {exc}",
                  file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
