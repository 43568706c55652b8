"""SVG charts for method comparisons and convergence sweeps."""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .evaluation import grid_means, summarize  # noqa: E402

# fixed salt and no timestamp so reruns write identical files
plt.rcParams["svg.hashsalt"] = "melanfis"
_META = {"Date": None}


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata=_META)
    plt.close(fig)
    return Path(path)


def comparison_charts(reports, out_dir):
    """Grouped train/test bars per method for accuracy and sensitivity."""
    out_dir = Path(out_dir)
    rows = summarize(reports)
    names = [r["method"] for r in rows]
    pos = range(len(rows))
    written = []
    for metric, label in (("accuracy", "Accuracy"), ("sensitivity", "Sensitivity")):
        fig, ax = plt.subplots(figsize=(6, 4))
        ax.bar([p - 0.2 for p in pos], [100 * r[f"train_{metric}"] for r in rows], 0.4, label="train")
        ax.bar([p + 0.2 for p in pos], [100 * r[f"test_{metric}"] for r in rows], 0.4, label="test")
        ax.set_xticks(list(pos))
        ax.set_xticklabels(names)
        ax.set_ylabel(f"{label} (%)")
        ax.set_ylim(0, 100)
        ax.legend(loc="lower right")
        written.append(_save(fig, out_dir / f"{metric}.svg"))
    return written


def convergence_charts(reports, out_dir):
    """Metric vs iterations (one line per subset size) and metric vs subset
    size (one line per iteration budget)."""
    out_dir = Path(out_dir)
    cells = grid_means(reports)
    sizes = sorted({c["subset_size"] for c in cells})
    iters = sorted({c["iterations"] for c in cells})
    lookup = {(c["subset_size"], c["iterations"]): c for c in cells}
    written = []
    for key in ("train_accuracy", "train_sensitivity", "test_accuracy", "test_sensitivity"):
        fig, ax = plt.subplots(figsize=(6, 4))
        for s in sizes:
            ax.plot(iters, [100 * lookup[(s, i)][key] for i in iters], marker="o", label=f"{s} images")
        ax.set_xlabel("iterations")
        ax.set_ylabel(key.replace("_", " ") + " (%)")
        ax.legend(loc="lower right")
        written.append(_save(fig, out_dir / f"convergence_{key}.svg"))
    for key in ("test_accuracy", "test_sensitivity"):
        fig, ax = plt.subplots(figsize=(6, 4))
        for i in iters:
            ax.plot(sizes, [100 * lookup[(s, i)][key] for s in sizes], marker="o", label=f"{i} iterations")
        ax.set_xlabel("images")
        ax.set_ylabel(key.replace("_", " ") + " (%)")
        ax.legend(loc="lower right")
        written.append(_save(fig, out_dir / f"by_size_{key}.svg"))
    return written
