"""Figure rendering for CLI reports.

Every renderer takes the already-computed report payload and a target path,
draws one matplotlib figure on the Agg backend, and saves it with fixed
metadata so repeated runs produce byte-identical PNG files.
"""

from __future__ import annotations

from typing import Any, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)
import numpy as np  # noqa: E402

_SAVE_KW = {"metadata": {"Software": "corrspace"}, "dpi": 120}


def _save(fig, path: str) -> None:
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)


def correlation_figure(rows: Sequence[dict[str, Any]], path: str) -> None:
    """Semi-log magnitude of the connected correlator against separation."""
    r = [row["r"] for row in rows]
    mags = [abs(row["correlator"]) for row in rows]
    fig, ax = plt.subplots(figsize=(5.0, 3.4))
    ax.semilogy(r, [max(m, 1e-18) for m in mags], "o-", color="tab:blue")
    ax.set_xlabel("separation r")
    ax.set_ylabel("|connected correlator|")
    ax.set_xticks(r)
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    _save(fig, path)


def cayley_figure(table: Sequence[Sequence[int]], path: str) -> None:
    """Multiplication table of the closed group as an index heat map."""
    arr = np.asarray(table, dtype=float)
    fig, ax = plt.subplots(figsize=(4.2, 4.0))
    im = ax.imshow(arr, cmap="viridis", interpolation="nearest")
    ax.set_xlabel("right factor")
    ax.set_ylabel("left factor")
    fig.colorbar(im, ax=ax, label="product index")
    fig.tight_layout()
    _save(fig, path)


def branch_figure(probabilities: Sequence[float], path: str) -> None:
    """Probability of every enumerated branch, in enumeration order."""
    fig, ax = plt.subplots(figsize=(5.0, 3.4))
    ax.bar(range(len(probabilities)), probabilities, color="tab:purple")
    ax.set_xlabel("branch")
    ax.set_ylabel("probability")
    fig.tight_layout()
    _save(fig, path)


def operator_figure(op: Sequence[Sequence[Sequence[float]]], path: str) -> None:
    """Magnitudes of the realized operator's entries (op given as re/im pairs)."""
    mat = np.array([[complex(re, im) for re, im in row] for row in op])
    fig, ax = plt.subplots(figsize=(3.8, 3.4))
    im = ax.imshow(np.abs(mat), cmap="magma", interpolation="nearest", vmin=0.0)
    ax.set_xticks(range(mat.shape[1]))
    ax.set_yticks(range(mat.shape[0]))
    fig.colorbar(im, ax=ax, label="|entry|")
    fig.tight_layout()
    _save(fig, path)


def scan_figure(classes: dict[str, dict[str, Any]], path: str) -> None:
    """Log-scale mass of each protocol class from the exhaustive scan."""
    names = list(classes)
    masses = [classes[n]["mass"] for n in names]
    fig, ax = plt.subplots(figsize=(5.2, 3.4))
    ax.bar(range(len(names)), masses, color="tab:green")
    ax.set_yscale("log")
    ax.set_xticks(range(len(names)))
    ax.set_xticklabels(names, rotation=30, ha="right")
    ax.set_ylabel("probability mass")
    fig.tight_layout()
    _save(fig, path)


def entropy_figure(z_bits: Sequence[float], vn_bits: Sequence[float], path: str) -> None:
    """Per-site Z-basis and von Neumann entropies as grouped bars."""
    sites = np.arange(len(z_bits))
    width = 0.4
    fig, ax = plt.subplots(figsize=(5.6, 3.4))
    ax.bar(sites - width / 2, z_bits, width, label="S_Z", color="tab:blue")
    ax.bar(sites + width / 2, vn_bits, width, label="S_vN", color="tab:orange")
    ax.set_xlabel("site")
    ax.set_ylabel("entropy (bits)")
    ax.legend()
    fig.tight_layout()
    _save(fig, path)
