"""State assignment and readout-fidelity analytics.

A two-component Gaussian mixture is fitted in the IQ plane by EM with full
covariances, initialised from the labelled class means. The projection axis
runs through the two component means with the threshold at their midpoint;
a shared-width 1D mixture is then refitted on the projections.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin
from sklearn.utils.validation import check_is_fitted
from statsmodels.stats.proportion import proportion_confint

from ._validation import as_complex, check_iq, check_labels
from .exceptions import (
    DegenerateFitError,
    IncompleteDesignError,
    InsufficientDataError,
    MaxIterationsError,
)

MIN_SHOTS = 100
MIN_WEIGHT = 1e-3
SIGMA_FLOOR = 1e-12


@dataclass(frozen=True)
class GaussianMixture1D:
    mean0: float
    mean1: float
    sigma: float
    weights: tuple[float, float]

    @property
    def separation(self):
        return abs(self.mean1 - self.mean0)

    @property
    def snr(self):
        """Mean separation over the single-state width."""
        return self.separation / self.sigma

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        norm = 1.0 / (np.sqrt(2 * np.pi) * self.sigma)
        return sum(w * norm * np.exp(-0.5 * ((x - m) / self.sigma) ** 2)
                   for w, m in zip(self.weights, (self.mean0, self.mean1)))


@dataclass(frozen=True)
class ProjectionAxis:
    origin: complex
    direction: complex
    threshold: float = 0.0

    def __post_init__(self):
        if not np.isclose(abs(self.direction), 1.0, rtol=1e-12):
            raise ValueError("projection direction must be a unit complex number")

    def project(self, s):
        s = as_complex(s) if not np.isscalar(s) else complex(s)
        return np.real((s - self.origin) * np.conj(self.direction))

    def assign(self, s):
        """1 (e) where the projection reaches the threshold, else 0 (g)."""
        return (np.asarray(self.project(s)) >= self.threshold).astype(np.int8)


@dataclass
class Mixture2D:
    means: np.ndarray
    covariances: np.ndarray
    weights: np.ndarray
    log_likelihood: list = field(default_factory=list)
    n_iter: int = 0


def _log_gauss2(X, mean, cov):
    d = X - mean
    det = cov[0, 0] * cov[1, 1] - cov[0, 1] * cov[1, 0]
    inv = np.array([[cov[1, 1], -cov[0, 1]], [-cov[1, 0], cov[0, 0]]]) / det
    quad = np.einsum("ni,ij,nj->n", d, inv, d)
    return -0.5 * quad - 0.5 * np.log(det) - np.log(2 * np.pi)


def _check_weights(weights):
    if np.min(weights) < MIN_WEIGHT:
        raise DegenerateFitError(f"mixture component weight {np.min(weights):.3g} below {MIN_WEIGHT}")


def fit_gmm_2d(X, y, tol=1e-8, max_iter=500):
    """EM for a two-component full-covariance mixture in the IQ plane.

    Component k starts at the mean and covariance of the shots labelled k.
    Converges when the log-likelihood gain per shot drops below ``tol``.
    """
    X = check_iq(X)
    y = check_labels(y, len(X))
    if len(X) < MIN_SHOTS:
        raise InsufficientDataError(f"need at least {MIN_SHOTS} shots, got {len(X)}")
    if not (np.any(y == 0) and np.any(y == 1)):
        raise InsufficientDataError("both prepared states are required")
    means = np.array([X[y == k].mean(axis=0) for k in (0, 1)])
    sep = np.linalg.norm(means[1] - means[0])
    floor = (SIGMA_FLOOR * max(sep, np.finfo(float).tiny)) ** 2 * np.eye(2)
    covs = np.array([np.cov(X[y == k].T, bias=True).reshape(2, 2) + floor for k in (0, 1)])
    weights = np.array([np.mean(y == 0), np.mean(y == 1)])
    n = len(X)
    trace = []
    prev = -np.inf
    for it in range(1, max_iter + 1):
        logp = np.column_stack([np.log(weights[k]) + _log_gauss2(X, means[k], covs[k]) for k in (0, 1)])
        total = logsumexp(logp, axis=1)
        ll = float(total.sum())
        trace.append(ll)
        if (ll - prev) / n < tol:
            _check_weights(weights)
            return Mixture2D(means, covs, weights, trace, it)
        prev = ll
        resp = np.exp(logp - total[:, None])
        nk = resp.sum(axis=0)
        weights = nk / n
        _check_weights(weights)
        means = (resp.T @ X) / nk[:, None]
        for k in (0, 1):
            d = X - means[k]
            covs[k] = (resp[:, k, None] * d).T @ d / nk[k] + floor
    raise MaxIterationsError(f"EM did not converge in {max_iter} iterations",
                             diagnostics={"log_likelihood": trace, "weights": weights.tolist()})


def fit_gmm_1d(x, mean0, mean1, tol=1e-8, max_iter=500, weights=(0.5, 0.5)):
    """EM for two Gaussians with a shared width on projected data."""
    x = np.asarray(x, dtype=float)
    n = len(x)
    m = np.array([mean0, mean1], dtype=float)
    w = np.array(weights, dtype=float)
    sep = abs(mean1 - mean0)
    floor = SIGMA_FLOOR * max(sep, np.finfo(float).tiny)
    var = max(np.var(x - m[np.argmin(np.abs(x[:, None] - m), axis=1)]), floor ** 2)
    prev = -np.inf
    trace = []
    for _ in range(max_iter):
        logp = np.log(w) - 0.5 * (x[:, None] - m) ** 2 / var - 0.5 * np.log(2 * np.pi * var)
        total = logsumexp(logp, axis=1)
        ll = float(total.sum())
        trace.append(ll)
        if (ll - prev) / n < tol:
            _check_weights(w)
            return GaussianMixture1D(float(m[0]), float(m[1]), float(np.sqrt(var)), (float(w[0]), float(w[1])))
        prev = ll
        r = np.exp(logp - total[:, None])
        nk = r.sum(axis=0)
        w = nk / n
        _check_weights(w)
        m = (r * x[:, None]).sum(axis=0) / nk
        var = max(float((r * (x[:, None] - m) ** 2).sum() / n), floor ** 2)
    raise MaxIterationsError(f"1D EM did not converge in {max_iter} iterations",
                             diagnostics={"log_likelihood": trace})


def fit_gmm_2d_then_project(X, y, tol=1e-8, max_iter=500):
    """Fit the IQ mixture, build the projection axis and refit in 1D.

    Returns ``(GaussianMixture1D, ProjectionAxis)``; the axis points from the
    ground component (initialised from label 0) to the excited one.
    """
    mix1, axis, _ = _fit_all(X, y, tol, max_iter)
    return mix1, axis


def _fit_all(X, y, tol, max_iter):
    mix = fit_gmm_2d(X, y, tol, max_iter)
    mu = mix.means[:, 0] + 1j * mix.means[:, 1]
    d = mu[1] - mu[0]
    if d == 0:
        raise DegenerateFitError("mixture components share the same mean")
    axis = ProjectionAxis(complex(0.5 * (mu[0] + mu[1])), complex(d / abs(d)), 0.0)
    x = axis.project(as_complex(X))
    half = abs(d) / 2
    mix1 = fit_gmm_1d(x, -half, half, tol, max_iter, weights=tuple(mix.weights))
    return mix1, axis, mix


def assign(s, axis):
    """'g' or 'e' for a single shot; ties at the threshold go to 'e'."""
    return "e" if axis.project(complex(s)) >= axis.threshold else "g"


class GMMStateClassifier(ClassifierMixin, TransformerMixin, BaseEstimator):
    """Binary readout classifier on IQ shots.

    ``fit`` takes shots (complex vector or ``(n, 2)`` array) and the prepared
    labels (0 = no pulse, 1 = pi pulse). ``transform`` returns the projection
    onto the fitted axis, ``predict`` the assigned state.
    """

    def __init__(self, tol=1e-8, max_iter=500):
        self.tol = tol
        self.max_iter = max_iter

    def fit(self, X, y):
        X = check_iq(X)
        y = check_labels(y, len(X))
        self.mixture_, self.axis_, self.mixture_2d_ = _fit_all(X, y, self.tol, self.max_iter)
        self.classes_ = np.array([0, 1])
        self.n_features_in_ = 2
        return self

    def transform(self, X):
        check_is_fitted(self, "axis_")
        return self.axis_.project(as_complex(check_iq(X)))[:, None]

    def decision_function(self, X):
        return self.transform(X)[:, 0] - self.axis_.threshold

    def predict(self, X):
        return (self.decision_function(X) >= 0).astype(np.int64)

    @property
    def snr(self):
        check_is_fitted(self, "mixture_")
        return self.mixture_.snr


# Fidelity --------------------------------------------------------------------

def wilson_interval(successes, n, alpha=0.05):
    lo, hi = proportion_confint(successes, n, alpha=alpha, method="wilson")
    return float(lo), float(hi)


@dataclass(frozen=True)
class FidelityReport:
    p_g0: float
    p_e_pi: float
    snr: float | None
    ci_g0: tuple[float, float]
    ci_e_pi: tuple[float, float]
    shots: tuple[int, int]

    @property
    def p_c(self):
        return (self.p_g0 + self.p_e_pi) / 2

    def to_dict(self):
        return {"P(g|0)": self.p_g0, "P(e|pi)": self.p_e_pi, "P_c": self.p_c, "SNR": self.snr,
                "P(g|0)_ci95": list(self.ci_g0), "P(e|pi)_ci95": list(self.ci_e_pi),
                "shots": list(self.shots)}


def fidelity_report(assigned_0, assigned_pi, snr=None):
    """Assignment probabilities from the states assigned to each preparation.

    Assignments are 0 for g and 1 for e.
    """
    a0 = np.asarray(assigned_0).ravel()
    a1 = np.asarray(assigned_pi).ravel()
    if not len(a0) or not len(a1):
        raise InsufficientDataError("both prepared states are required")
    g0 = int(np.sum(a0 == 0))
    e1 = int(np.sum(a1 == 1))
    return FidelityReport(g0 / len(a0), e1 / len(a1), snr, wilson_interval(g0, len(a0)),
                          wilson_interval(e1, len(a1)), (len(a0), len(a1)))


def state_labels(n_qubits, prepared=False):
    sym = ("0", "π") if prepared else ("g", "e")
    return ["".join(sym[b] for b in bits) for bits in itertools.product((0, 1), repeat=n_qubits)]


@dataclass(frozen=True)
class AssignmentMatrix:
    """P(assigned | prepared); rows are preparations, qubit 1 is the MSB."""

    matrix: np.ndarray
    shots: np.ndarray

    @property
    def n_qubits(self):
        return int(np.log2(self.matrix.shape[0]))

    @property
    def diagonal_mean(self):
        return float(np.mean(np.diag(self.matrix)))

    @property
    def below_diagonal(self):
        return float(np.tril(self.matrix, -1).sum())

    @property
    def above_diagonal(self):
        return float(np.triu(self.matrix, 1).sum())

    def excitation_loss(self):
        """Mass assigned to outcomes with fewer excitations than prepared."""
        pop = np.array([bin(i).count("1") for i in range(self.matrix.shape[0])])
        return float(self.matrix[pop[:, None] > pop[None, :]].sum())

    def marginal_fidelities(self):
        """Per-qubit P_c from the marginals of the joint assignments."""
        n = self.n_qubits
        out = []
        idx = np.arange(2 ** n)
        for q in range(n):
            bit = (idx >> (n - 1 - q)) & 1
            correct = (bit[:, None] == bit[None, :])
            p_correct = (self.matrix * correct).sum(axis=1)
            out.append(0.5 * (p_correct[bit == 0].mean() + p_correct[bit == 1].mean()))
        return np.array(out)

    def diagnostics(self, p_c=None):
        p_c = self.marginal_fidelities() if p_c is None else np.asarray(p_c)
        return {"diagonal_mean": self.diagonal_mean, "product_prediction": float(np.prod(p_c)),
                "below_diagonal": self.below_diagonal, "above_diagonal": self.above_diagonal,
                "excitation_loss": self.excitation_loss(),
                "ground_fidelity": float(self.matrix[0, 0]), "top_fidelity": float(self.matrix[-1, -1])}

    def to_csv(self, path):
        labels = state_labels(self.n_qubits)
        prep = state_labels(self.n_qubits, prepared=True)
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("prepared," + ",".join(labels) + "\n")
            for name, row in zip(prep, self.matrix):
                fh.write(name + "," + ",".join(f"{v:.10g}" for v in row) + "\n")


def assignment_matrix(assigned, n_qubits=4, min_shots=10_000):
    """Empirical joint assignment matrix.

    ``assigned`` maps each preparation (tuple of 0/1, qubit 1 first) to an
    ``(shots, n_qubits)`` array of assignments (0 = g, 1 = e).
    """
    size = 2 ** n_qubits
    M = np.zeros((size, size))
    shots = np.zeros(size, dtype=np.int64)
    for prep in itertools.product((0, 1), repeat=n_qubits):
        if prep not in assigned:
            raise IncompleteDesignError(f"preparation {''.join(map(str, prep))} is missing")
        a = np.asarray(assigned[prep], dtype=np.int64).reshape(-1, n_qubits)
        if len(a) < min_shots:
            raise InsufficientDataError(f"preparation {''.join(map(str, prep))} has {len(a)} shots, "
                                        f"need {min_shots}")
        row = int("".join(map(str, prep)), 2)
        codes = a @ (1 << np.arange(n_qubits - 1, -1, -1))
        M[row] = np.bincount(codes, minlength=size) / len(a)
        shots[row] = len(a)
    return AssignmentMatrix(M, shots)
