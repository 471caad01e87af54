"""scikit-learn style wrappers.

Each row of ``X`` is one weight pair on a grid of depth ``L``: the first
``2^L`` columns are the leaf values of one weight, the last ``2^L`` those of
the other.  ``on="dual"`` reads the pair as ``(u, v)``, ``on="primal"`` as
``(w, σ)``.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_exponents, check_weight_pairs, split_pair
from .characteristics import weights
from .dyadic import Grid, StepFn
from .extremal import DUAL, FORWARD, best_constant_N, lambda_norm, testing_constant
from .forms import WeightSetting
from .sparse import random_sparse_family


def _setting(row, grid, cfg, on):
    a, b = split_pair(row)
    a, b = StepFn(grid, a), StepFn(grid, b)
    if on == "dual":
        return WeightSetting.from_duals(a, b, cfg)
    if on == "primal":
        return WeightSetting(a, b, cfg)
    raise ValueError(f"on must be 'dual' or 'primal', got {on!r}")


class WeightCharacteristics(TransformerMixin, BaseEstimator):
    """Map weight pairs to their A_inf / joint A_r characteristics."""

    FEATURES = ("ainf_u", "ainf_v", "joint_ar", "two_weight_rhs", "one_sup_rhs")

    def __init__(self, p0=1.0, q0=np.inf, p=2.0, q=2.0, on="dual", flavor="fw"):
        self.p0 = p0
        self.q0 = q0
        self.p = p
        self.q = q
        self.on = on
        self.flavor = flavor

    def fit(self, X, y=None):
        X, L = check_weight_pairs(X)
        self.cfg_ = check_exponents(self.p0, self.q0, self.p, self.q)
        self.depth_ = L
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "depth_")
        X, _ = check_weight_pairs(X, self.depth_)
        grid = Grid(self.depth_)
        out = np.empty((X.shape[0], len(self.FEATURES)))
        for i, row in enumerate(X):
            st = _setting(row, grid, self.cfg_, self.on)
            u, v = st.u, st.v
            out[i] = (
                float(weights.ainf_cubes(u, self.flavor).max()),
                float(weights.ainf_cubes(v, self.flavor).max()),
                weights.joint_ar(v, u, self.cfg_.r),
                weights.two_weight_ainf_rhs(v, u, self.cfg_, self.flavor),
                weights.one_supremum_rhs(v, u, self.cfg_, self.flavor),
            )
        return out

    def get_feature_names_out(self, input_features=None):
        return np.array(self.FEATURES, dtype=object)


class SparseFormNorm(BaseEstimator):
    """Best constants of the sparse form for weight pairs, one family per fit.

    ``target`` selects ``"N"`` (the form itself), ``"lambda"`` (the reduced
    operator) or ``"testing"`` (sum of both testing constants).
    """

    def __init__(self, p0=1.0, q0=np.inf, p=2.0, q=2.0, on="dual", target="N", density=0.6,
                 tol=1e-8, restarts=8, random_state=0):
        self.p0 = p0
        self.q0 = q0
        self.p = p
        self.q = q
        self.on = on
        self.target = target
        self.density = density
        self.tol = tol
        self.restarts = restarts
        self.random_state = random_state

    def fit(self, X, y=None):
        X, L = check_weight_pairs(X)
        if self.target not in ("N", "lambda", "testing"):
            raise ValueError(f"unknown target {self.target!r}")
        self.cfg_ = check_exponents(self.p0, self.q0, self.p, self.q)
        self.depth_ = L
        self.n_features_in_ = X.shape[1]
        self.family_ = random_sparse_family(Grid(L), None, 0.5, self.density, int(self.random_state or 0))
        return self

    def _one(self, st):
        seed = int(self.random_state or 0)
        if self.target == "testing":
            return (testing_constant(st, self.family_, FORWARD).value
                    + testing_constant(st, self.family_, DUAL).value)
        lam = lambda_norm(st, self.family_, tol=self.tol, restarts=self.restarts, seed=seed)
        if self.target == "lambda":
            return lam.value
        return best_constant_N(st, self.family_, tol=self.tol, restarts=self.restarts, seed=seed,
                               reduced=lam).value

    def predict(self, X):
        check_is_fitted(self, "family_")
        X, _ = check_weight_pairs(X, self.depth_)
        grid = Grid(self.depth_)
        return np.array([self._one(_setting(row, grid, self.cfg_, self.on)) for row in X])
