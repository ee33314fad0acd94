#!/usr/bin/env python3
"""Render PNGs from the CSVs written by `nonnormal`. Reads nothing else."""

import argparse
import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import pandas as pd


def curves(df, out, ylabel, log=False):
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for name in df.columns[1:]:
        ax.plot(df["k"], df[name], label=name)
    ax.set_xlabel("k")
    ax.set_ylabel(ylabel)
    if log:
        ax.set_yscale("log")
    ax.legend()
    fig.tight_layout()
    fig.savefig(out, dpi=150)
    plt.close(fig)


def decoding(df, out):
    means = df.groupby(["nonlinearity", "sigma", "kind"])["r2"].mean().unstack("kind")
    fig, ax = plt.subplots(figsize=(6, 3.5))
    means.plot.bar(ax=ax)
    ax.set_ylabel("mean r2")
    ax.set_ylim(0, 1.05)
    fig.tight_layout()
    fig.savefig(out, dpi=150)
    plt.close(fig)


def losses(df, out):
    tasks = sorted({rid.split("-")[0] for rid in df["run_id"]})
    fig, axes = plt.subplots(1, len(tasks), figsize=(5 * len(tasks), 3.5), squeeze=False)
    for ax, task in zip(axes[0], tasks):
        sub = df[df["run_id"].str.startswith(task + "-")]
        # best setting per init: lowest mean final loss over seeds
        finals = sub.sort_values("step").groupby("run_id").tail(1)
        finals = finals.assign(setting=finals["param"].astype(str) + "/" + finals["lr"].astype(str))
        best = finals.groupby(["init", "setting"])["validation_loss"].mean().groupby("init").idxmin()
        for init, (_, setting) in best.items():
            rows = sub[(sub["init"] == init) &
                       (sub["param"].astype(str) + "/" + sub["lr"].astype(str) == setting)]
            stats = rows.groupby("step")["validation_loss"].agg(["mean", "sem"]).fillna(0)
            ax.plot(stats.index, stats["mean"], label=f"{init} {setting}")
            ax.fill_between(stats.index, stats["mean"] - stats["sem"], stats["mean"] + stats["sem"], alpha=0.3)
        ax.set_title(task)
        ax.set_xlabel("step")
        ax.set_ylabel("validation loss")
        ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(out, dpi=150)
    plt.close(fig)


def success_bars(df, out):
    fig, ax = plt.subplots(figsize=(4, 3.5))
    ax.bar(df["model"], df["successes"])
    for x, (s, n) in enumerate(zip(df["successes"], df["runs"])):
        ax.text(x, s, f"{s}/{n}", ha="center", va="bottom")
    ax.set_ylabel("successful runs")
    fig.tight_layout()
    fig.savefig(out, dpi=150)
    plt.close(fig)


def profiles(df, out, window=20):
    labels = list(dict.fromkeys(df["label"]))
    fig, ax = plt.subplots(figsize=(6, 3.5))
    for label in labels:
        sub = df[(df["label"] == label) & (df["offset"].abs() <= window)]
        ax.errorbar(sub["offset"], sub["mean_weight"], yerr=sub["sem"], label=label, capsize=2)
    ax.axvline(0, color="grey", lw=0.5)
    ax.set_xlabel("rank offset i - j")
    ax.set_ylabel("mean weight")
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(out, dpi=150)
    plt.close(fig)


def beta(df, out):
    fig, ax = plt.subplots(figsize=(4, 3.5))
    ax.errorbar(df["beta"], df["mean_loss"], yerr=df["sem"], marker="o", capsize=2)
    ax.set_xlabel("beta")
    ax.set_ylabel("final validation loss")
    fig.tight_layout()
    fig.savefig(out, dpi=150)
    plt.close(fig)


PLOTS = {
    "memory_curves.csv": lambda df, out: curves(df, out, "J(k)", log=True),
    "amplification.csv": lambda df, out: curves(df, out, "|W^k v|"),
    "decoding.csv": decoding,
    "losses.csv": losses,
    "success_bars.csv": success_bars,
    "profiles.csv": profiles,
    "beta.csv": beta,
}


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("directory", nargs="?", default=".", type=Path)
    parser.add_argument("--out", type=Path, help="where to write PNGs (default: next to the CSVs)")
    args = parser.parse_args()
    out_dir = args.out or args.directory
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, plot in PLOTS.items():
        path = args.directory / name
        if not path.exists():
            continue
        df = pd.read_csv(path)
        if df.empty:
            print(f"{name}: no rows, skipped")
            continue
        target = out_dir / (path.stem + ".png")
        plot(df, target)
        print(f"wrote {target}")


if __name__ == "__main__":
    main()
