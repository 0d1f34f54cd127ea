"""Droplet rendering to 2D projection images.

Each label gets a panel showing the band-limited function resynthesized from
the droplet's harmonic coefficients on a dense latitude-longitude mesh: hue
encodes the complex phase, luminance the magnitude.  Output is deterministic
for a fixed input so renders can be diffed in regression tests.
"""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from matplotlib.colors import hsv_to_rgb  # noqa: E402

from .droplet import Droplet, harmonic_coefficients, spherical_harmonic  # noqa: E402
from .errors import DomainError  # noqa: E402

PROJECTIONS = ("mollweide", "latlong")

# fixed hash salt so SVG element ids do not change between runs
matplotlib.rcParams["svg.hashsalt"] = "wigtomo"


def _mesh(n_theta: int = 91, n_phi: int = 181):
    theta = np.linspace(0.0, math.pi, n_theta)
    phi = np.linspace(0.0, 2.0 * math.pi, n_phi)
    return np.meshgrid(theta, phi, indexing="ij")


def synthesize(f: Droplet, n_theta: int = 91, n_phi: int = 181):
    """Evaluate each label's function on a dense mesh from its coefficients."""
    tt, pp = _mesh(n_theta, n_phi)
    coeffs = harmonic_coefficients(f)
    fields = {label: np.zeros(tt.shape, dtype=complex) for label in f.labels}
    for (label, j, m), c in coeffs.items():
        fields[label] += c * spherical_harmonic(j, m, tt, pp)
    return tt, pp, fields


def _phase_image(field: np.ndarray, vmax: float) -> np.ndarray:
    hue = (np.angle(field) + math.pi) / (2.0 * math.pi)
    value = np.abs(field) / vmax if vmax > 0 else np.zeros_like(hue)
    hsv = np.stack([hue, np.ones_like(hue), np.clip(value, 0.0, 1.0)], axis=-1)
    return hsv_to_rgb(hsv)


def render_droplet(
    f: Droplet,
    out_path,
    projection: str = "mollweide",
    mesh: tuple[int, int] = (91, 181),
):
    """Render a droplet file to an image; SVG output is byte-deterministic."""
    if projection not in PROJECTIONS:
        raise DomainError(
            f"projection must be one of {PROJECTIONS}, got {projection!r}"
        )
    tt, pp, fields = synthesize(f, *mesh)
    vmax = max((np.max(np.abs(field)) for field in fields.values()), default=0.0)
    labels = f.labels
    empty = vmax < 1e-15

    fig = plt.figure(figsize=(4.2 * max(len(labels), 1), 3.2))
    for idx, label in enumerate(labels):
        name = "identity part" if label == "" else f"label {label}"
        if projection == "mollweide" and not empty:
            ax = fig.add_subplot(1, len(labels), idx + 1, projection="mollweide")
            lon = pp - math.pi
            lat = math.pi / 2.0 - tt
            rgb = _phase_image(fields[label], vmax)
            ax.pcolormesh(lon, lat, rgb[:-1, :-1], rasterized=True)
            ax.set_xticks([])
            ax.set_yticks([])
        else:
            ax = fig.add_subplot(1, len(labels), idx + 1)
            if empty:
                ax.text(
                    0.5,
                    0.5,
                    "empty droplet\n(no signal)",
                    ha="center",
                    va="center",
                    transform=ax.transAxes,
                )
                ax.set_xticks([])
                ax.set_yticks([])
            else:
                rgb = _phase_image(fields[label], vmax)
                ax.imshow(
                    rgb,
                    origin="upper",
                    extent=(0.0, 360.0, 180.0, 0.0),
                    aspect="auto",
                )
                ax.set_xlabel("azimuth [deg]")
                ax.set_ylabel("polar [deg]")
        ax.set_title(f"{name}  (max |f| = {np.max(np.abs(fields[label])):.3g})")
    meta_bits = [f"{k}={v}" for k, v in sorted(f.meta.items()) if v not in ("", None)]
    fig.suptitle(
        "hue = phase, luminance = magnitude" + (" -- ALL-ZERO INPUT" if empty else "")
    )
    if meta_bits:
        fig.text(0.01, 0.01, "  ".join(meta_bits), fontsize=7)
    fig.savefig(out_path, metadata=_deterministic_metadata(str(out_path)))
    plt.close(fig)


def _deterministic_metadata(path: str) -> dict | None:
    if path.endswith(".svg"):
        return {"Date": None}
    if path.endswith(".png"):
        return {"Software": "wigtomo"}
    return None


def plot_study_summary(summary: dict, out_path, title: str = "mean process fidelity"):
    """Line plot of mean fidelity (with std bars) against the shot budget."""
    shots = sorted(int(k) for k in summary)
    fig, ax = plt.subplots(figsize=(5.0, 3.6))
    for method, marker in (("plain", "o"), ("optimized", "s")):
        means = [summary[str(s)][method]["mean"] for s in shots]
        stds = [summary[str(s)][method]["std"] for s in shots]
        ax.errorbar(shots, means, yerr=stds, marker=marker, capsize=3, label=method)
    ax.set_xscale("log")
    ax.set_xlabel("shots")
    ax.set_ylabel("mean fidelity")
    ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    fig.savefig(out_path, metadata=_deterministic_metadata(str(out_path)))
    plt.close(fig)
