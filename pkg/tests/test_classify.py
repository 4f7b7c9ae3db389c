import numpy as np
import pytest
from factories import gaussian_shots
from hypothesis import given
from hypothesis import strategies as st
from scipy.special import erfc
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from remux.classify import (
    SIGMA_FLOOR,
    AssignmentMatrix,
    GMMStateClassifier,
    ProjectionAxis,
    assign,
    assignment_matrix,
    fidelity_report,
    fit_gmm_2d,
    fit_gmm_2d_then_project,
    state_labels,
    wilson_interval,
)
from remux.exceptions import DegenerateFitError, IncompleteDesignError, InsufficientDataError, MaxIterationsError
from remux.pipeline import joint_assignment, readout_fidelity

# Fitting -------------------------------------------------------------------------------

def test_point_clusters_hit_sigma_floor():
    X = np.r_[-np.ones(200), np.ones(200)].astype(complex)
    y = np.r_[np.zeros(200, int), np.ones(200, int)]
    mix, axis = fit_gmm_2d_then_project(X, y)
    assert (mix.mean0, mix.mean1) == pytest.approx((-1.0, 1.0))
    assert axis.origin == pytest.approx(0.0) and axis.threshold == 0.0
    assert mix.sigma == pytest.approx(SIGMA_FLOOR * 2.0)


def test_recovers_synthetic_snr():
    X, y = gaussian_shots(3.0, 50_000, np.random.default_rng(1))
    clf = GMMStateClassifier().fit(X, y)
    assert clf.snr == pytest.approx(3.0, rel=0.02)
    assert abs(clf.axis_.direction - np.exp(0.7j)) < 0.02


def test_gaussian_overlap_oracle():
    snr = 2.6
    X, y = gaussian_shots(snr, 200_000, np.random.default_rng(2))
    clf = GMMStateClassifier().fit(X, y)
    a = clf.predict(X)
    rep = fidelity_report(a[y == 0], a[y == 1], snr=clf.snr)
    assert rep.p_c == pytest.approx(1 - 0.5 * erfc(snr / (2 * np.sqrt(2))), abs=0.002)


def test_em_degenerate_and_insufficient():
    rng = np.random.default_rng(3)
    with pytest.raises(InsufficientDataError):
        fit_gmm_2d(rng.standard_normal(50) + 0j, np.r_[np.zeros(25), np.ones(25)])
    with pytest.raises(InsufficientDataError):
        fit_gmm_2d(rng.standard_normal(500) + 0j, np.zeros(500))
    # one shot labelled 1 gives a component far below the weight floor
    X = rng.standard_normal(5000) + 0j
    X[-1] = 50.0
    with pytest.raises(DegenerateFitError):
        fit_gmm_2d(X, np.r_[np.zeros(4999), 1])


@given(st.integers(0, 2 ** 32 - 1), st.floats(2.0, 6.0), st.floats(0.05, 20.0), st.floats(-np.pi, np.pi))
def test_assignments_invariant_under_rotation_and_scale(seed, snr, scale, angle):
    X, y = gaussian_shots(snr, 300, np.random.default_rng(seed))
    k = scale * np.exp(1j * angle)

    def outcome(Z):
        try:
            return GMMStateClassifier().fit(Z, y).predict(Z)
        except MaxIterationsError:  # a slow fit must be slow in every frame
            return None

    a, b = outcome(X), outcome(k * X)
    assert (a is None) == (b is None)
    if a is not None:
        np.testing.assert_array_equal(a, b)


@given(st.integers(0, 2 ** 32 - 1), st.floats(0.5, 4.0), st.floats(0.0, 0.3))
def test_em_log_likelihood_is_monotone(seed, snr, flip):
    rng = np.random.default_rng(seed)
    X, y = gaussian_shots(snr, 300, rng)
    y = np.where(rng.random(len(y)) < flip, 1 - y, y)  # mislabelled shots make EM work harder
    try:
        ll = np.array(fit_gmm_2d(X, y, max_iter=200).log_likelihood)
    except MaxIterationsError as exc:  # strongly overlapping blobs converge slowly; the trace is still checked
        ll = np.array(exc.diagnostics["log_likelihood"])
    assert np.all(np.diff(ll) >= -1e-9 * np.abs(ll[1:]))


def test_estimator_api():
    X, y = gaussian_shots(3.0, 500, np.random.default_rng(4))
    clf = GMMStateClassifier(tol=1e-6)
    assert clone(clf).get_params() == {"tol": 1e-6, "max_iter": 500}
    clf.fit(np.column_stack([X.real, X.imag]), y)
    assert clf.transform(X).shape == (1000, 1)
    assert clf.score(X, y) > 0.9
    with pytest.raises(NotFittedError):
        GMMStateClassifier().predict(X)


# Assignment ---------------------------------------------------------------------------------

def test_assign_rule():
    axis = ProjectionAxis(0.5 + 0.5j, 1j, 0.0)
    assert assign(0.5 + 0.0j, axis) == "g"
    assert assign(0.5 + 1.0j, axis) == "e"
    assert assign(0.5 + 0.5j, axis) == "e"  # tie goes to e
    with pytest.raises(ValueError):
        ProjectionAxis(0, 2.0)


def test_classifier_ground_mean_is_g():
    X, y = gaussian_shots(3.0, 2000, np.random.default_rng(6))
    clf = GMMStateClassifier().fit(X, y)
    mu = clf.mixture_2d_.means
    assert clf.predict(np.array([mu[0, 0] + 1j * mu[0, 1], mu[1, 0] + 1j * mu[1, 1]])).tolist() == [0, 1]


# Fidelity --------------------------------------------------------------------------------------

def test_error_free_report():
    rep = fidelity_report(np.zeros(1000), np.ones(1000))
    assert rep.p_c == 1.0 and rep.p_g0 == 1.0
    assert rep.ci_g0[1] == pytest.approx(1.0) and rep.ci_g0[0] > 0.99
    with pytest.raises(InsufficientDataError):
        fidelity_report([], [1])


@given(st.integers(0, 500), st.integers(1, 500))
def test_report_p_c_is_exact_mean(k, n):
    k = min(k, n)
    a0 = np.r_[np.zeros(k), np.ones(n - k)]
    rep = fidelity_report(a0, np.ones(7))
    assert rep.p_c == (rep.p_g0 + rep.p_e_pi) / 2


def test_wilson_interval_reference():
    # 95 % Wilson interval for 81/263 (Newcombe 1998 table)
    lo, hi = wilson_interval(81, 263)
    assert (lo, hi) == pytest.approx((0.2553, 0.3662), abs=1e-4)


def test_assignment_matrix_identity_and_errors():
    perfect = {p: np.tile(p, (10, 1)) for p in __import__("itertools").product((0, 1), repeat=4)}
    am = assignment_matrix(perfect, min_shots=10)
    np.testing.assert_array_equal(am.matrix, np.eye(16))
    assert am.diagonal_mean == 1.0
    del perfect[(1, 0, 1, 0)]
    with pytest.raises(IncompleteDesignError, match="1010"):
        assignment_matrix(perfect, min_shots=10)
    with pytest.raises(InsufficientDataError):
        assignment_matrix({p: np.tile(p, (5, 1)) for p in __import__("itertools").product((0, 1), repeat=4)},
                          min_shots=10)


@given(st.integers(0, 2 ** 32 - 1))
def test_assignment_matrix_row_stochastic(seed):
    rng = np.random.default_rng(seed)
    import itertools

    data = {p: rng.integers(0, 2, (int(rng.integers(1, 60)), 4)) for p in itertools.product((0, 1), repeat=4)}
    m = assignment_matrix(data, min_shots=1).matrix
    assert np.all((m >= 0) & (m <= 1))
    np.testing.assert_allclose(m.sum(axis=1), 1.0, atol=1e-12)


def test_state_labels_order():
    assert state_labels(2) == ["gg", "ge", "eg", "ee"]
    assert state_labels(1, prepared=True) == ["0", "π"]
    m = AssignmentMatrix(np.eye(4), np.ones(4))
    assert m.n_qubits == 2


# Shipped device -------------------------------------------------------------------------------

@pytest.fixture(scope="module")
def device_fit(device):
    return readout_fidelity(device, 100_000)


def test_device_q1_ground_fidelity(device_fit):
    reports, _, _ = device_fit
    assert reports[0].p_g0 == pytest.approx(0.992, abs=0.002)


def test_device_mean_fidelity(device_fit):
    reports, _, _ = device_fit
    assert np.mean([r.p_c for r in reports]) == pytest.approx(0.986, abs=0.004)


@pytest.mark.parametrize("k, expected", list(enumerate([0.984, 0.986, 0.986, 0.987])))
def test_device_per_qubit_fidelity(device_fit, k, expected):
    reports, _, _ = device_fit
    assert reports[k].p_c == pytest.approx(expected, abs=0.003)


@pytest.mark.xfail(strict=True, reason="the generator is calibrated on fidelities; its separation-over-width SNR "
                                       "for Q3 is 2.6, below the published 3.1")
def test_device_q3_snr(device_fit):
    _, clfs, _ = device_fit
    assert clfs[2].snr / 2 == pytest.approx(3.1, rel=0.05)


@pytest.fixture(scope="module")
def device_matrix(device, device_fit):
    reports, clfs, _ = device_fit
    return reports, joint_assignment(device, 20_000, clfs)


def test_device_matrix_factorizes(device_matrix):
    reports, am = device_matrix
    prediction = np.prod([r.p_c for r in reports])
    assert am.diagonal_mean == pytest.approx(prediction, abs=0.005)
    diag = np.diag(am.matrix)
    assert np.argmax(diag) == 0 and np.argmin(diag) == 15
    assert am.below_diagonal > am.above_diagonal


def test_device_matrix_diagonal_factorizes_per_row(device_matrix):
    """Each diagonal entry equals the product of its per-qubit marginals within 3 standard errors."""
    _, am = device_matrix
    n = am.n_qubits
    idx = np.arange(2 ** n)
    for row in idx:
        marg = []
        for q in range(n):
            bit = (idx >> (n - 1 - q)) & 1
            marg.append(am.matrix[row, bit == bit[row]].sum())
        p, shots = am.matrix[row, row], am.shots[row]
        se = np.sqrt(p * (1 - p) / shots)
        assert abs(p - np.prod(marg)) < 3 * se + 1e-12
