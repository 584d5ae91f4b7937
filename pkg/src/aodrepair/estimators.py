"""scikit-learn style wrappers.

Input is a two-column integer array ``[group, value]``. Like outlier
detectors, ``fit_predict`` labels rows ``+1`` (kept) or ``-1`` (removed).
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, OutlierMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .cardrepair import RepairOptions, card_repair
from .errors import InputError
from .heurrepair import heur_repair
from .ingest import zscore_filter
from .relmodel import Aod, Relation, Row


def relation_from_array(X) -> Relation:
    X = check_array(X, dtype=None, ensure_min_samples=0)
    if X.shape[1] != 2:
        raise InputError(f"expected 2 columns [group, value], got {X.shape[1]}")
    if not np.issubdtype(X.dtype, np.integer):
        as_int = X.astype(np.int64)
        if not np.array_equal(as_int, X):
            raise InputError("group and value columns must hold integers; scale them first")
        X = as_int
    return Relation(Row(i, int(g), int(a)) for i, (g, a) in enumerate(X.tolist()))


class AODRepair(OutlierMixin, BaseEstimator):
    """Delete a minimum (exact) or small (heuristic) set of rows so the aggregate is monotone in the group.

    Parameters mirror the command line: ``algorithm`` is ``"exact"`` or
    ``"heur"``; ``packer``, ``h_bound`` and ``dict_pruning`` only affect the
    exact algorithm.
    """

    def __init__(
        self,
        alpha="max",
        direction="increasing",
        algorithm="heur",
        packer="optimized",
        h_bound=None,
        dict_pruning="none",
        optimized_heuristic=True,
    ):
        self.alpha = alpha
        self.direction = direction
        self.algorithm = algorithm
        self.packer = packer
        self.h_bound = h_bound
        self.dict_pruning = dict_pruning
        self.optimized_heuristic = optimized_heuristic

    def _repair(self, relation):
        aod = Aod(self.alpha, self.direction)
        if self.algorithm == "exact":
            opts = RepairOptions(self.packer, self.h_bound, self.dict_pruning)
            return card_repair(relation, aod, opts)
        if self.algorithm == "heur":
            return heur_repair(relation, aod, optimized=self.optimized_heuristic)
        raise ValueError(f"algorithm must be 'exact' or 'heur', got {self.algorithm!r}")

    def fit(self, X, y=None):
        relation = relation_from_array(X)
        self.n_features_in_ = 2
        self.result_ = self._repair(relation)
        mask = np.ones(len(relation), dtype=bool)
        mask[list(self.result_.removed_ids)] = False
        self.kept_mask_ = mask
        self.removed_indices_ = np.flatnonzero(~mask)
        return self

    def fit_predict(self, X, y=None):
        self.fit(X)
        return np.where(self.kept_mask_, 1, -1)

    def __sklearn_is_fitted__(self):
        return hasattr(self, "result_")

    @property
    def removed_count_(self) -> int:
        check_is_fitted(self)
        return len(self.removed_indices_)


class ZScoreFilter(OutlierMixin, BaseEstimator):
    """Drop values more than ``tau`` population standard deviations from the mean."""

    def __init__(self, tau=2.0, scope="global"):
        self.tau = tau
        self.scope = scope

    def fit(self, X, y=None):
        relation = relation_from_array(X)
        self.n_features_in_ = 2
        _, removed = zscore_filter(relation, self.tau, self.scope)
        mask = np.ones(len(relation), dtype=bool)
        mask[removed] = False
        self.kept_mask_ = mask
        self.removed_indices_ = np.flatnonzero(~mask)
        return self

    def fit_predict(self, X, y=None):
        return np.where(self.fit(X).kept_mask_, 1, -1)
