"""scikit-learn style wrappers.

Samples are operators (OperatorSpec objects, their JSON dicts, or square
arrays), so ``X`` is a sequence rather than a 2-D numeric array; the
validation helper below plays the role of ``check_array``.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from . import operators as ops
from . import recurrence as rec
from . import spectral as spec
from . import verdict
from .exceptions import RejectedInputError

LABELS = np.array([verdict.INCONCLUSIVE, verdict.NOT_SUPER_RECURRENT, verdict.SUPER_RECURRENT])


def check_operators(X) -> list:
    """Coerce a sequence of operator-like samples; raises RejectedInputError."""
    if ops.is_operator(X) or isinstance(X, dict):
        raise RejectedInputError("X must be a sequence of operators, not a single operator")
    if isinstance(X, np.ndarray) and X.ndim == 2:
        raise RejectedInputError("X must be a sequence of operators; wrap a single matrix in a list")
    out = []
    for i, item in enumerate(X):
        if isinstance(item, dict):
            out.append(ops.from_json(item, f"X[{i}]"))
        else:
            try:
                out.append(ops.as_operator(item))
            except RejectedInputError as exc:
                raise RejectedInputError(f"X[{i}]: {exc}") from None
    if not out:
        raise RejectedInputError("X is empty")
    return out


class SpectralFeatures(TransformerMixin, BaseEstimator):
    """Operators -> [modulus_spread, circle_radius, diagonalizable, dense_range, spectral_radius].

    Undecided entries (no common radius, undecided diagonalizability) are NaN.
    """

    feature_names = ("modulus_spread", "circle_radius", "diagonalizable", "dense_range", "spectral_radius")

    def __init__(self, tol: float = spec.DEFAULT_TOL):
        self.tol = tol

    def fit(self, X, y=None):
        check_operators(X)
        self.n_features_out_ = len(self.feature_names)
        return self

    def transform(self, X):
        check_is_fitted(self, "n_features_out_")
        rows = []
        for op in check_operators(X):
            r = spec.spectrum(op, self.tol)
            rows.append([
                r.modulus_spread,
                np.nan if r.circle_radius is None else r.circle_radius,
                np.nan if r.diagonalizable is None else float(r.diagonalizable),
                float(r.dense_range),
                float(np.max(r.moduli)) if r.moduli.size else 0.0,
            ])
        return np.asarray(rows, dtype=float)

    def get_feature_names_out(self, input_features=None):
        return np.asarray(self.feature_names, dtype=object)


class SuperRecurrenceClassifier(ClassifierMixin, BaseEstimator):
    """Predicts super_recurrent / not_super_recurrent / inconclusive per operator.

    Nothing is learned: ``fit`` only validates and records the label set, so
    the estimator composes with pipelines and ``score``.
    """

    def __init__(self, epsilon: float = 1e-6, n_max=None, threshold: float = verdict.PROBE_THRESHOLD,
                 n_probes: int = verdict.N_PROBES, seed: int = 0):
        self.epsilon = epsilon
        self.n_max = n_max
        self.threshold = threshold
        self.n_probes = n_probes
        self.seed = seed

    def _params(self):
        return rec.DetectionParams(self.epsilon, self.n_max)

    def fit(self, X, y=None):
        check_operators(X)
        self._params()
        if not (0 < self.threshold <= 1):
            raise RejectedInputError("threshold must be in (0, 1]")
        self.classes_ = LABELS.copy()
        return self

    def classify(self, X) -> list:
        """Full :class:`~superrec.verdict.SRecClassification` records."""
        check_is_fitted(self, "classes_")
        return [verdict.classify(op, self._params(), operator_id=str(i), seed=self.seed,
                                 threshold=self.threshold, n_probes=self.n_probes)
                for i, op in enumerate(check_operators(X))]

    def predict(self, X):
        return np.asarray([c.final for c in self.classify(X)], dtype=object)
