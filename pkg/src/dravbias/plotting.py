"""Bar-chart rendering of a DomainReport, written next to the tabular output."""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .eval_harness import DomainReport, row_label  # noqa: E402

_STYLE = {
    "font.size": 9,
    "axes.titlesize": 10,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "legend.fontsize": 7,
    "legend.frameon": False,
    "svg.hashsalt": "dravbias",
}


def plot_domain_report(report: DomainReport, path, title: str = "Gender-biased translations"):
    """Grouped bars: one group per domain, one bar per (language, system, level) row.

    Returns the written path.  Output is byte-stable for equal reports (no
    timestamps in the PNG metadata).
    """
    domains = report.domains() or ["Politics", "Sports", "Profession"]
    keys = report.row_keys()
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots(figsize=(max(6.0, 1.8 * len(domains) + 3.5), 3.4))
        x = np.arange(len(domains))
        width = 0.8 / max(1, len(keys))
        for i, key in enumerate(keys):
            heights, labels = [], []
            for d in domains:
                cell = report.cell(key, d)
                # absent or all-Indeterminate cells stay empty instead of reading as 0%
                pct = None if cell is None else cell.percent
                heights.append(np.nan if pct is None else pct)
                labels.append("" if pct is None else f"{pct}%")
            bars = ax.bar(x - 0.4 + width * (i + 0.5), heights, width, label=row_label(*key))
            ax.bar_label(bars, labels=labels, fontsize=6, padding=1)
        ax.set_xticks(x)
        ax.set_xticklabels(domains)
        ax.set_ylim(0, 110)
        ax.set_ylabel("biased (%)")
        ax.set_title(title)
        if keys:
            ax.legend(loc="upper left", bbox_to_anchor=(1.0, 1.0))
        fig.tight_layout()
        fig.savefig(path, dpi=120, metadata={"Software": None})
        plt.close(fig)
    return path
