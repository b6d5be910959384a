"""Figure rendering for report files. Always best-effort: callers treat a
figure as a bonus next to the delimited report, never as the deliverable."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def _style(ax, xlabel: str, ylabel: str, title: str) -> None:
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.spines["top"].set_visible(False)
    ax.spines["right"].set_visible(False)
    ax.grid(True, alpha=0.3)


def render_bench_figure(curves: dict, out_path: str) -> None:
    """curves: algo -> dict with lists 'k', 'cum_s', 'cost_mean'."""
    fig, (ax_time, ax_cost) = plt.subplots(1, 2, figsize=(11, 4.2))
    for algo, c in curves.items():
        ax_time.plot(c["k"], c["cum_s"], marker="o", label=algo)
        ax_cost.plot(c["k"], c["cost_mean"], marker="s", label=algo)
    _style(ax_time, "k", "cumulative seconds", "Cumulative seeding runtime")
    _style(ax_cost, "k", "mean cost", "Mean seeding cost")
    ax_time.legend()
    ax_cost.legend()
    fig.tight_layout()
    fig.savefig(out_path, bbox_inches="tight", dpi=130)
    plt.close(fig)


def render_seed_figure(per_round: list, out_path: str) -> None:
    """per_round: list of (round, trials, seconds) for one representative run."""
    rounds = [r[0] for r in per_round]
    trials = [r[1] for r in per_round]
    seconds = [r[2] for r in per_round]
    fig, (ax_tr, ax_s) = plt.subplots(1, 2, figsize=(11, 4.2))
    ax_tr.bar(rounds, trials, color="#4878cf")
    _style(ax_tr, "round", "rejection trials", "Trials per seeding round")
    ax_s.bar(rounds, seconds, color="#6acc65")
    _style(ax_s, "round", "seconds", "Time per seeding round")
    fig.tight_layout()
    fig.savefig(out_path, bbox_inches="tight", dpi=130)
    plt.close(fig)
