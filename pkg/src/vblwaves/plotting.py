"""Matplotlib renderings of the reproduction figures (written to files only)."""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

RED = "#c0392b"
BLUE = "#2471a3"
LIGHT = "#a9cce3"


def _finish(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def hopf_figure(path, neighbours, orbit, x, phi, c):
    """Phase portrait with nearby trajectories, and the wave profile."""
    fig, (ax0, ax1) = plt.subplots(1, 2, figsize=(10, 4.2))
    for p, v in neighbours:
        ax0.plot(p, v, color=LIGHT, lw=0.7)
    ax0.plot(orbit[0], orbit[1], color=RED, lw=1.8)
    ax0.set_xlabel(r"$\varphi$")
    ax0.set_ylabel(r"$\varphi'$")
    ax0.set_title(f"(a) phase plane, c = {c:.4g}")
    ax1.plot(x, phi, color=RED, lw=1.8)
    ax1.set_xlabel("x")
    ax1.set_ylabel(r"$\varphi$")
    ax1.set_title("(b) periodic wave")
    return _finish(fig, path)


def homoclinic_figure(path, loop, orbit, x, phi, x_pulse, phi_pulse, c_pulse, c_wave):
    """Homoclinic loop against a nearby large-period orbit, in the plane and along x."""
    fig, (ax0, ax1) = plt.subplots(1, 2, figsize=(10, 4.2))
    ax0.plot(loop[0], loop[1], "--", color=BLUE, lw=1.5, label=f"pulse, c = {c_pulse:.5f}")
    ax0.plot(orbit[0], orbit[1], color=RED, lw=1.5, label=f"wave, c = {c_wave:.5f}")
    ax0.set_xlabel(r"$\varphi$")
    ax0.set_ylabel(r"$\varphi'$")
    ax0.legend(loc="best", fontsize=8)
    ax0.set_title("(a) phase plane")
    ax1.plot(x_pulse, phi_pulse, "--", color=BLUE, lw=1.5)
    ax1.plot(x, phi, color=RED, lw=1.5)
    ax1.set_xlabel("x")
    ax1.set_ylabel(r"$\varphi$")
    ax1.set_title("(b) profiles")
    return _finish(fig, path)
