"""Small input-validation helpers shared by the estimators and simulators."""

import numbers

import numpy as np
from sklearn.utils.validation import check_array

from .exceptions import ConfigError


def check_positive(name, value, allow_zero=False):
    if not isinstance(value, numbers.Real) or not np.isfinite(value):
        raise ConfigError(f"{name} must be a finite real number, got {value!r}")
    if value < 0 or (value == 0 and not allow_zero):
        bound = ">= 0" if allow_zero else "> 0"
        raise ConfigError(f"{name} must be {bound}, got {value!r}")
    return float(value)


def check_iq(X):
    """Return IQ data as an ``(n, 2)`` float array.

    Accepts a complex vector or an ``(n, 2)`` real array.
    """
    X = np.asarray(X)
    if np.iscomplexobj(X):
        X = np.ravel(X)
        X = np.column_stack([X.real, X.imag])
    X = check_array(X, dtype=np.float64)
    if X.shape[1] != 2:
        raise ValueError(f"IQ data must have 2 columns, got shape {X.shape}")
    return X


def as_complex(X):
    X = np.asarray(X)
    if np.iscomplexobj(X):
        return np.ravel(X).astype(np.complex128)
    X = check_iq(X)
    return X[:, 0] + 1j * X[:, 1]


def check_labels(y, n):
    y = np.asarray(y).ravel()
    if y.shape[0] != n:
        raise ValueError(f"expected {n} labels, got {y.shape[0]}")
    labels = np.unique(y)
    if not np.all(np.isin(labels, [0, 1])):
        raise ValueError(f"labels must be 0 (no pulse) or 1 (pi pulse), got {labels}")
    return y.astype(np.int64)
