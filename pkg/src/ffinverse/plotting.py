"""Static SVG scatter plots of joint spectra."""

from __future__ import annotations

import io

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def spectrum_svg(specs, c0=None, title: str | None = None, marker_size: float = 1.5) -> str:
    """SVG text of the joint spectra with the singular value marked; byte-stable."""
    with plt.rc_context({"svg.hashsalt": "ffinverse", "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(6, 5))
        for s in sorted(specs, key=lambda s: -s.hbar):
            ax.scatter(s.points[:, 0], s.points[:, 1], s=marker_size, lw=0,
                       label=f"hbar = {s.hbar:.4g}")
        if c0 is not None:
            ax.plot([c0[0]], [c0[1]], "x", color="crimson", ms=9, mew=2, label="singular value")
        ax.set_xlabel("J")
        ax.set_ylabel("H")
        if title:
            ax.set_title(title)
        ax.legend(loc="upper right", fontsize=8, markerscale=4)
        buf = io.StringIO()
        fig.savefig(buf, format="svg", metadata={"Date": None})
        plt.close(fig)
    return buf.getvalue()
