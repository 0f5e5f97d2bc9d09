"""Figure defaults for the summary plots."""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

STYLE = {
    "figure.figsize": (5.0, 3.6),
    "font.size": 9,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "grid.linestyle": ":",
    "lines.linewidth": 1.2,
    "lines.markersize": 4,
    "legend.fontsize": 7,
    "legend.frameon": False,
    "savefig.bbox": "tight",
    # keep SVG output byte-stable across runs
    "svg.hashsalt": "zakotfs",
    "svg.fonttype": "none",
}

MARKERS = {"do": "o", "sp": "s", "separate": "^", "perfect": "d"}


def new_axes():
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
    return fig, ax


def save_figure(fig, path):
    with plt.rc_context(STYLE):
        fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def label(scheme: str, alpha) -> str:
    names = {"do": "DO (differential)", "sp": "SP", "separate": "Separate", "perfect": "Perfect CSI"}
    if scheme == "sp" and alpha == alpha:  # alpha is NaN for non-SP rows
        return f"SP, alpha={alpha:g}"
    return names.get(scheme, scheme)
