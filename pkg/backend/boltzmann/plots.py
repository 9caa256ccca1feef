import logging

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

logger = logging.getLogger(__name__)


def plot_moments(frame, path, title=None):
    """Kinetic energy, entropy and (when present) reference error against time"""
    columns = [c for c in ("ke", "entropy", "err_vs_reference") if c in frame]
    fig, axes = plt.subplots(1, len(columns), figsize=(4.5 * len(columns), 3.5), squeeze=False)
    for ax, column in zip(axes[0], columns):
        ax.plot(frame["t"], frame[column])
        ax.set_xlabel("t")
        ax.set_ylabel(column)
        if column == "err_vs_reference":
            ax.set_yscale("log")
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    logger.debug(f"Saved moment plot to {path}")
    return path


def plot_loss(frame, path, title=None):
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.semilogy(frame["epoch"], frame["train_loss"], label="train")
    val = frame.dropna(subset=["val_loss"])
    if len(val):
        ax.semilogy(val["epoch"], val["val_loss"], "o", markersize=3, label="validation")
    ax.set_xlabel("epoch")
    ax.set_ylabel("relative L2 loss")
    ax.legend()
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    logger.debug(f"Saved loss plot to {path}")
    return path
