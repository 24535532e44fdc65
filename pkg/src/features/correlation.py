"""
Correlation-based feature pruning
"""

from typing import List, Sequence, Tuple

import numpy as np
import pandas as pd

from src.errors import ParameterError


def prune_correlated(X: np.ndarray, names: Sequence[str], threshold: float = 0.80,
                     return_dropped: bool = False):
    """
    Repeatedly remove one feature of the most correlated pair.

    While some kept pair has |Pearson r| > threshold, take the pair with the
    largest |r| and drop the member with the larger total |r| against the other
    kept features (ties drop the later feature in schema order).

    Args:
        X: Samples x features matrix (already transformed)
        names: Feature names in schema order
        threshold: Absolute correlation limit
        return_dropped: Also return dropped names in drop order

    Returns:
        Kept names in schema order, or (kept, dropped) when return_dropped
    """
    names = list(names)
    if len(names) < 2:
        raise ParameterError("Correlation pruning needs at least two features")
    frame = pd.DataFrame(np.asarray(X, dtype=np.float64), columns=names)
    corr = frame.corr(method='pearson').abs().fillna(0.0).to_numpy()
    np.fill_diagonal(corr, 0.0)

    kept = list(range(len(names)))
    dropped: List[str] = []
    while len(kept) > 1:
        sub = corr[np.ix_(kept, kept)]
        i, j = np.unravel_index(np.argmax(sub), sub.shape)
        if sub[i, j] <= threshold:
            break
        first, second = (i, j) if i < j else (j, i)
        totals = sub.sum(axis=1)
        victim = first if totals[first] > totals[second] else second
        dropped.append(names[kept[victim]])
        del kept[victim]

    kept_names = [names[i] for i in kept]
    if return_dropped:
        return kept_names, dropped
    return kept_names
