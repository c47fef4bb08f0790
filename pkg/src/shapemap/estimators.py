"""scikit-learn style wrappers around a configured congruence.

Rows of ``X`` are base points in layout order (x's then y's).
"""

from __future__ import annotations

import warnings

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from . import collapse as col
from .config import Config, load_config
from .expr.dual import to_float_array
from .shape import shape_at, total_shape_at


def _resolve(config) -> Config:
    if isinstance(config, Config):
        return config
    if config is None:
        raise ValueError("a config path or Config object is required")
    return load_config(str(config))


class _ConfiguredMixin:
    def _fit_config(self):
        cfg = _resolve(self.config)
        self.config_ = cfg
        self.direction_ = cfg.direction(self.direction)
        self.feature_names_in_ = np.array(cfg.layout.base_names, dtype=object)
        self.n_features_in_ = len(cfg.layout.base_names)
        return cfg

    def _check_X(self, X):
        check_is_fitted(self, "config_")
        X = check_array(X, dtype=float)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        return X


class ShapeTraceTransformer(_ConfiguredMixin, TransformerMixin, BaseEstimator):
    """Map base points to ``[Tr A, T_1, ..., T_n]`` (trace and trace form)."""

    def __init__(self, config=None, direction=None):
        self.config = config
        self.direction = direction

    def fit(self, X=None, y=None):
        self._fit_config()
        if X is not None:
            self._check_X(X)
        return self

    def transform(self, X):
        X = self._check_X(X)
        cfg, d = self.config_, self.direction_.direction
        out = np.empty((X.shape[0], 1 + cfg.layout.n))
        for r, u in enumerate(X):
            u = list(u)
            S = to_float_array(shape_at(cfg.system, cfg.congruence, d, u))
            T = to_float_array(total_shape_at(cfg.system, cfg.congruence, d, u))
            out[r, 0] = np.trace(S)
            out[r, 1:] = np.einsum("ssi->i", T)
        return out

    def get_feature_names_out(self, input_features=None):
        check_is_fitted(self, "config_")
        return np.array(["trace", *(f"traceform_{x}" for x in self.config_.layout.independent)], dtype=object)


class CollapseEstimator(_ConfiguredMixin, BaseEstimator):
    """Predict the extrapolated collapse parameter for each starting point.

    ``predict`` returns NaN for curves without a collapse estimate.
    """

    def __init__(self, config=None, direction=None, h=None, span=None, vol_min=None, C_big=None, C_max=None):
        self.config = config
        self.direction = direction
        self.h = h
        self.span = span
        self.vol_min = vol_min
        self.C_big = C_big
        self.C_max = C_max

    def fit(self, X=None, y=None):
        cfg = self._fit_config()
        run = cfg.run
        pick = lambda value, key: run[key] if value is None else value
        self.options_ = col.ScanOptions(h=pick(self.h, "h"), vol_min=pick(self.vol_min, "vol_min"),
                                        C_big=pick(self.C_big, "C_big"), C_max=pick(self.C_max, "C_max"),
                                        mu0=run["mu0"])
        self.span_ = self.direction_.span if self.span is None else float(self.span)
        if X is not None:
            self._check_X(X)
        return self

    def scan(self, x) -> col.CollapseReport:
        check_is_fitted(self, "options_")
        cfg = self.config_
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            return col.collapse_scan(cfg.system, cfg.congruence, self.direction_.direction, list(x),
                                     self.span_, self.options_)

    def predict(self, X):
        X = self._check_X(X)
        out = np.full(X.shape[0], np.nan)
        for r, x in enumerate(X):
            rep = self.scan(x)
            if rep.s_extrapolated is not None:
                out[r] = rep.s_extrapolated
        return out
