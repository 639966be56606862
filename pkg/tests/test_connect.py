import numpy as np
import pytest
import scipy.integrate

from multiwell import connect, potentials

SIGMA_DW = 2.0 * np.sqrt(2.0) / 3.0  # int sqrt(2 W) du for the double well


def test_double_well_profile_matches_tanh(dw_profile):
    prof = dw_profile["profile"]
    assert prof.converged and prof.residual <= 1e-8
    exact = np.tanh(prof.eta / np.sqrt(2.0))
    assert np.max(np.abs(prof.values[:, 0] - exact)) <= 1e-3


def test_action_against_quadrature_oracle(dw_profile, double_well):
    # independent oracle: sigma = int_{-1}^{1} sqrt(2 W(u)) du
    oracle, err = scipy.integrate.quad(lambda u: np.sqrt(2.0 * double_well.value(u)), -1.0, 1.0)
    assert err < 1e-10
    assert oracle == pytest.approx(SIGMA_DW, abs=1e-10)
    assert connect.action(dw_profile["profile"]) == pytest.approx(oracle, abs=1e-3)


def test_equipartition_residual_and_order(double_well, dw_profile):
    r1 = connect.equipartition_residual(dw_profile["profile"])
    assert r1 <= 1e-4
    prof2 = connect.solve_connection(double_well, [-1.0], [1.0], 10.0, 4000, tol=1e-8)
    r2 = connect.equipartition_residual(prof2)
    assert r1 / r2 >= 3.0


def test_equipartition_trivial_and_witness(double_well, dw_profile):
    prof = dw_profile["profile"]
    const = connect.ConnectionProfile(
        eta=prof.eta,
        values=np.ones_like(prof.values),
        a_minus=np.array([1.0]),
        a_plus=np.array([1.0]),
        potential=double_well,
    )
    assert connect.equipartition_residual(const) == 0.0
    perturbed = connect.ConnectionProfile(
        eta=prof.eta,
        values=prof.values + 0.05 * np.sin(prof.eta)[:, None],
        a_minus=prof.a_minus,
        a_plus=prof.a_plus,
        potential=double_well,
    )
    assert connect.equipartition_residual(perturbed) > connect.equipartition_residual(prof)


def test_action_scaling_competitor(double_well, dw_profile):
    # compressing the profile breaks equipartition and raises the action
    prof = dw_profile["profile"]
    squeezed = connect.ConnectionProfile(
        eta=prof.eta,
        values=prof.sample(2.0 * prof.eta),
        a_minus=prof.a_minus,
        a_plus=prof.a_plus,
        potential=double_well,
    )
    assert connect.action(squeezed) > connect.action(prof)


def test_action_minimality_among_perturbations(double_well, dw_profile):
    prof = dw_profile["profile"]
    base = connect.action(prof)
    rng = np.random.default_rng(5)
    bump = np.exp(-0.5 * prof.eta**2)
    for _ in range(20):
        z = rng.normal(scale=0.05) * np.sin(rng.uniform(0.3, 3.0) * prof.eta) * bump
        comp = connect.ConnectionProfile(
            eta=prof.eta,
            values=prof.values + z[:, None],
            a_minus=prof.a_minus,
            a_plus=prof.a_plus,
            potential=double_well,
        )
        assert connect.action(comp) >= base - 1e-12


def test_identical_endpoints_rejected(double_well):
    with pytest.raises(connect.ConnectionError):
        connect.solve_connection(double_well, [1.0], [1.0], 10.0, 100)


def test_non_well_endpoint_rejected(double_well):
    with pytest.raises(connect.ConnectionError):
        connect.solve_connection(double_well, [-1.0], [0.5], 10.0, 100)


def test_triple_well_connection(triangle_profile, triple_well):
    assert triangle_profile.converged
    assert triangle_profile.residual <= 1e-9
    assert connect.action(triangle_profile) > 0
    assert connect.equipartition_residual(triangle_profile) <= 1e-3


def test_endpoint_decay(dw_profile, double_well):
    K, k = connect.tail_decay_rate(dw_profile["profile"])
    expected = np.sqrt(2.0) * double_well.c  # sqrt of the well Hessian eigenvalue
    assert k > 0.8 * double_well.c
    assert abs(k - expected) / expected < 0.2


def test_hyperbolicity_gap_double_well(dw_profile):
    # symmetric-class gap of the linearization at tanh: exactly 3/2
    gap = connect.hyperbolicity_gap(dw_profile["profile"])
    assert gap == pytest.approx(1.5, abs=0.02)


def test_translation_mode_is_antisymmetric(dw_profile):
    vals, parities = connect.linearized_spectrum(dw_profile["profile"])
    assert abs(vals[0]) < 1e-2  # near-zero translation mode
    assert parities[0] == -1  # excluded from the symmetric class


def test_constant_profile_gap_bounded_below(double_well):
    eta = np.linspace(-10, 10, 801)
    const = connect.ConnectionProfile(
        eta=eta,
        values=np.ones((801, 1)),
        a_minus=np.array([1.0]),
        a_plus=np.array([1.0]),
        potential=double_well,
    )
    vals, _ = connect.linearized_spectrum(const)
    gap = float(np.min(np.abs(vals)))
    assert gap >= 2.0 * double_well.c**2 - 0.05  # operator is -(d/dx)^2 + W''(a)


def test_profile_sample_and_reverse(dw_profile):
    prof = dw_profile["profile"]
    rev = prof.reversed()
    assert np.allclose(rev.a_minus, prof.a_plus)
    assert np.allclose(rev.sample(np.array([0.0])), prof.sample(np.array([0.0])), atol=1e-9)
    assert np.allclose(prof.sample(np.array([100.0]))[0], prof.a_plus)


def test_save_profile_roundtrip(tmp_path, dw_profile):
    path = tmp_path / "profile.csv"
    connect.save_profile(dw_profile["profile"], path)
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    assert np.array_equal(data[:, 0], dw_profile["profile"].eta)
    assert np.array_equal(data[:, 1], dw_profile["profile"].values[:, 0])
