"""Attentive-probe hyperparameter sweep, selected on clean validation accuracy."""

from itertools import product

import numpy as np

from .attentive import AttentiveProbe

DEFAULT_SWEEP_GRID = {
    "depth": (1, 2),
    "heads": (4, 8),
    "mlp_ratio": (2.0, 4.0),
    "lr": (1e-3, 3e-4),
}


def sweep_attentive(
    train_tokens: np.ndarray,
    train_labels: np.ndarray,
    val_tokens: np.ndarray,
    val_labels: np.ndarray,
    grid: dict | None = None,
    **base_options,
) -> tuple:
    """Train one probe per grid point; keep the best validation accuracy.

    Ties go to the earlier grid point, so the sweep is deterministic given
    seeds. Returns (best probe, selection record). The record lists every
    candidate with its validation accuracy so the choice is auditable.
    """
    grid = dict(DEFAULT_SWEEP_GRID if grid is None else grid)
    names = list(grid)
    candidates = [dict(zip(names, values)) for values in product(*(grid[n] for n in names))]

    best = None
    best_acc = -1.0
    trials = []
    for point in candidates:
        options = dict(base_options)
        options.update(point)
        probe = AttentiveProbe(**options).fit(train_tokens, train_labels)
        acc = float((probe.predict(val_tokens) == np.asarray(val_labels)).mean())
        trials.append({"params": point, "val_accuracy": acc})
        if acc > best_acc:
            best, best_acc = probe, acc

    selection = {
        "criterion": "clean validation accuracy",
        "selected": trials[int(np.argmax([t["val_accuracy"] for t in trials]))]["params"],
        "val_accuracy": best_acc,
        "trials": trials,
    }
    return best, selection
