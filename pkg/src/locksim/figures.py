"""Campaign figures, rendered headless next to the report files."""

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .faultlab import CampaignResult, OUTCOMES

# keep outcome colors stable across figures
_COLORS = {"masked": "#7f8c8d", "detected": "#2980b9",
           "sdc": "#c0392b", "hang": "#f39c12"}

_PNG_META = {"Date": None, "Software": None}


def outcome_bar_path(base):
    return f"{base}.outcomes.png"


def latency_hist_path(base):
    return f"{base}.latency.png"


def render_campaign_figures(camp: CampaignResult, base: str) -> list:
    """Write the outcome and latency figures for one campaign; `base` is
    the report path without extension.  Returns the written paths."""
    written = []
    counts = camp.counts

    fig, ax = plt.subplots(figsize=(5.0, 3.2))
    xs = range(len(OUTCOMES))
    ax.bar(xs, [counts[o] for o in OUTCOMES],
           color=[_COLORS[o] for o in OUTCOMES])
    ax.set_xticks(list(xs))
    ax.set_xticklabels(OUTCOMES)
    ax.set_ylabel("injections")
    ax.set_title(f"{camp.workload_name}: outcomes at stagger "
                 f"{camp.stagger} ({len(camp.records)} runs)")
    fig.tight_layout()
    path = outcome_bar_path(base)
    fig.savefig(path, metadata=_PNG_META)
    plt.close(fig)
    written.append(path)

    hist = camp.latency_histogram
    fig, ax = plt.subplots(figsize=(5.0, 3.2))
    if hist:
        ax.bar(list(hist.keys()), list(hist.values()), width=0.9,
               color=_COLORS["detected"])
        ax.set_xlabel("cycles from injection to error")
    else:
        ax.text(0.5, 0.5, "no detections", ha="center", va="center",
                transform=ax.transAxes)
    ax.set_ylabel("detections")
    ax.set_title(f"{camp.workload_name}: detection latency at stagger "
                 f"{camp.stagger}")
    fig.tight_layout()
    path = latency_hist_path(base)
    fig.savefig(path, metadata=_PNG_META)
    plt.close(fig)
    written.append(path)
    return written
