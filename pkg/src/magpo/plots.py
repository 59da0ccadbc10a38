"""Figure rendering for the report paths.

Every CSV/JSON report the CLI and scenario runner emit can be rendered to
a PNG next to the delimited output.  All figures go through the Agg
backend; functions take the already-computed rows/reports and a target
path, and return the path.
"""

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def dispersion_figure(rows, path):
    """Band and ellipticity against wave number."""
    k = np.array([r["k_rad_per_m"] for r in rows])
    f = np.array([r["freq_hz"] for r in rows])
    rho = np.array([r["rho_k"] for r in rows])
    fig, (ax1, ax2) = plt.subplots(2, 1, sharex=True, figsize=(6, 5))
    ax1.plot(k, f / 1e9)
    ax1.set_ylabel("frequency (GHz)")
    ax2.plot(k, rho)
    ax2.set_ylabel(r"ellipticity $\rho_k$")
    ax2.set_xlabel("wave number (rad/m)")
    return _save(fig, path)


def coupling_figure(curve, path):
    fig, (ax1, ax2) = plt.subplots(2, 1, sharex=True, figsize=(6, 5))
    ax1.plot(curve.k, curve.g_norm)
    ax1.set_ylabel(r"$|g_k| / |g_0|$")
    ax2.plot(curve.k, curve.p_norm)
    ax2.axhline(0.5, color="gray", lw=0.5)
    ax2.set_ylabel(r"$P_k / P_0$")
    ax2.set_xlabel("wave number (rad/m)")
    return _save(fig, path)


def s21_map_figure(freqs_hz, fields_oe, mag, path):
    fig, ax = plt.subplots(figsize=(6, 4.5))
    im = ax.pcolormesh(fields_oe, np.asarray(freqs_hz) / 1e9, mag,
                       shading="auto")
    fig.colorbar(im, ax=ax, label="|s21|")
    ax.set_xlabel("field (Oe)")
    ax.set_ylabel("frequency (GHz)")
    return _save(fig, path)


def field_sweep_figure(rows, path):
    h = np.array([r["field_oe"] for r in rows])
    d = np.array([np.nan if r["splitting_hz"] is None else r["splitting_hz"]
                  for r in rows])
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(h, d / 1e6, "o-")
    ax.set_xlabel("field (Oe)")
    ax.set_ylabel("splitting (MHz)")
    return _save(fig, path)


def power_sweep_figure(rows, path):
    p = np.array([r["power_over_threshold"] for r in rows])
    n = np.array([r["occupation"] for r in rows])
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(p, n, "o-")
    ax.axvline(1.0, color="gray", lw=0.5)
    ax.set_xlabel("pump power / threshold power")
    ax.set_ylabel("steady occupation")
    return _save(fig, path)


def correlation_matrix_figure(report, path):
    fig, ax = plt.subplots(figsize=(4.4, 4))
    im = ax.imshow(report.matrix, vmin=-1, vmax=1, cmap="RdBu_r")
    ax.set_xticks(range(4), report.labels)
    ax.set_yticks(range(4), report.labels)
    for i in range(4):
        for j in range(4):
            ax.text(j, i, f"{report.matrix[i, j]:.2f}",
                    ha="center", va="center", fontsize=8)
    fig.colorbar(im, ax=ax)
    return _save(fig, path)


def lag_curves_figure(report, path):
    fig, ax = plt.subplots(figsize=(6, 4))
    for key, rho in report.curves.items():
        ax.plot(report.lag_seconds * 1e3, rho, label=key)
    ax.set_xlabel("lag (ms)")
    ax.set_ylabel("correlation")
    ax.legend(fontsize=8)
    return _save(fig, path)


def phase_hist_figure(stats, path):
    centers = 0.5 * (stats.bin_edges[1:] + stats.bin_edges[:-1])
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(8, 3.2), sharey=True)
    width = centers[1] - centers[0]
    ax1.bar(centers, stats.sum_hist, width=width)
    ax1.set_xlabel(r"$\varphi_1 + \varphi_2$ (rad)")
    ax2.bar(centers, stats.diff_hist, width=width)
    ax2.set_xlabel(r"$\varphi_1 - \varphi_2$ (rad)")
    ax1.set_ylabel("count")
    return _save(fig, path)


def quadrature_cloud_figure(x1, p1, x2, p2, path):
    fig, axes = plt.subplots(1, 2, figsize=(8, 4))
    for ax, (x, p, t) in zip(axes, [(x1, p1, "mode 1"), (x2, p2, "mode 2")]):
        ax.plot(np.ravel(x), np.ravel(p), ".", ms=1, alpha=0.3)
        ax.set_xlabel(f"X {t}")
        ax.set_ylabel(f"P {t}")
        ax.set_aspect("equal")
    return _save(fig, path)


def rng_grid_figure(rows, test_names, path):
    schemes = sorted({r["scheme"] for r in rows})
    fig, ax = plt.subplots(figsize=(0.8 * len(test_names) + 2,
                                    0.4 * len(rows) + 1.5))
    grid = np.zeros((len(rows), len(test_names)))
    ylabels = []
    for i, r in enumerate(rows):
        ylabels.append(f'{r["scheme"]} @ {r["interval_tau_c"]:g} tau')
        for j, t in enumerate(test_names):
            grid[i, j] = {"pass": 1.0, "fail": 0.0}.get(r.get(t), 0.5)
    ax.imshow(grid, cmap="RdYlGn", vmin=0, vmax=1, aspect="auto")
    ax.set_xticks(range(len(test_names)), test_names, rotation=45,
                  ha="right", fontsize=7)
    ax.set_yticks(range(len(rows)), ylabels, fontsize=7)
    return _save(fig, path)


def ber_sweep_figure(rows, path):
    snr = [r["snr_db"] for r in rows]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.semilogy(snr, [max(r["ber_correlation"], 1e-6) for r in rows],
                "o-", label="correlation receiver")
    if rows and rows[0].get("ber_single_channel") is not None:
        ax.semilogy(snr, [max(r["ber_single_channel"], 1e-6) for r in rows],
                    "s--", label="single channel")
    ax.set_xlabel("per-sample SNR (dB)")
    ax.set_ylabel("bit error rate")
    ax.legend()
    return _save(fig, path)


def image_panel_figure(images: dict, path):
    present = [(k, v) for k, v in images.items() if v is not None]
    fig, axes = plt.subplots(1, len(present),
                             figsize=(3 * len(present), 2.6))
    if len(present) == 1:
        axes = [axes]
    for ax, (name, img) in zip(axes, present):
        ax.imshow(img, cmap="gray_r", interpolation="nearest")
        ax.set_title(name, fontsize=9)
        ax.axis("off")
    return _save(fig, path)
