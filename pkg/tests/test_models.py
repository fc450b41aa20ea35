import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ffinverse.errors import ClassificationError, InputError
from ffinverse.flows import integrate_flow
from ffinverse.models import (ChampagneBottle, CoupledSpins, NormalFormLocal, PhasePoint,
                              critical_linearization, evaluate_F, hamiltonian_fields,
                              linearized_flows, quadratic_normalization)

MODELS = [NormalFormLocal(), ChampagneBottle(), CoupledSpins(0.5, 1.0), CoupledSpins(0.4, 1.3)]


def random_points(model, n, rng):
    if model.n_spheres:
        x = rng.normal(size=(n, 6))
        return model.project(x)
    return rng.uniform(-1, 1, size=(n, 4))


# --- evaluate_F ---------------------------------------------------------------

def test_normal_form_value():
    assert evaluate_F(NormalFormLocal(), [1, 0, 0, 1]) == pytest.approx((1.0, 0.0), abs=1e-15)


def test_champagne_origin():
    assert evaluate_F(ChampagneBottle(), np.zeros(4)) == pytest.approx((0.0, 0.0), abs=1e-15)


@pytest.mark.parametrize("t", [0.0, 0.3, 0.5, 1.0])
def test_spins_north_south(t):
    x = np.array([0, 0, 1, 0, 0, -1.0])
    assert evaluate_F(CoupledSpins(t), x) == pytest.approx((0.0, 1 - 2 * t), abs=1e-15)


def test_critical_value_is_F_of_critical_point():
    for m in MODELS:
        assert np.allclose(evaluate_F(m, m.critical_point), m.critical_value, atol=1e-10)


def test_point_from_other_model_rejected():
    with pytest.raises(InputError):
        evaluate_F(ChampagneBottle(), PhasePoint("normal-form", np.zeros(4)))


def test_off_sphere_point_rejected():
    with pytest.raises(InputError):
        evaluate_F(CoupledSpins(), np.array([0, 0, 1.1, 0, 0, -1.0]))


# --- Hamiltonian fields --------------------------------------------------------

@pytest.mark.parametrize("m", MODELS, ids=lambda m: m.model_id)
def test_fields_vanish_at_critical_point(m):
    XJ, XH = hamiltonian_fields(m, m.critical_point)
    assert np.abs(XJ).max() < 1e-14 and np.abs(XH).max() < 1e-14


def test_q1_flow_preserves_q2():
    m = NormalFormLocal()
    XJ, _ = hamiltonian_fields(m, [1, 0, 0, 1])
    dq2 = m.gradients(np.array([1.0, 0, 0, 1]))[1]
    assert abs(dq2 @ XJ) < 1e-15


def test_spins_J_flow_keeps_unit_spheres():
    m = CoupledSpins(0.5)
    x = m.project(np.array([0.3, 0.5, 0.7, -0.2, 0.9, 0.1]))
    y = integrate_flow(m, x, (1.0, 0.0), 2 * np.pi, tol=1e-12).coords
    # check drift of the unprojected values along the way too
    for T in np.linspace(0.5, 2 * np.pi, 5):
        z = integrate_flow(m, x, (1.0, 0.0), T, tol=1e-12).coords
        assert abs(np.linalg.norm(z[:3]) - 1) < 1e-9 and abs(np.linalg.norm(z[3:]) - 1) < 1e-9
    assert np.abs(y - x).max() < 1e-8


@pytest.mark.parametrize("m", MODELS, ids=lambda m: m.model_id)
def test_poisson_commute(m, rng):
    X = random_points(m, 100, rng)
    F = m.fields(X)          # (n, 2, dim)
    G = m.gradients(X)
    assert np.abs(np.einsum("nd,nd->n", G[:, 0], F[:, 1])).max() < 1e-10
    # fields annihilate dF
    assert np.abs(np.einsum("nkd,nld->nkl", G, F)).max() < 1e-10


@pytest.mark.parametrize("m", MODELS[2:], ids=lambda m: m.model_id)
def test_sphere_fields_tangent(m, rng):
    X = random_points(m, 100, rng)
    F = m.fields(X)
    for k in range(2):
        s = X[:, 3 * k:3 * k + 3]
        assert np.abs(np.einsum("nd,nkd->nk", s, F[:, :, 3 * k:3 * k + 3])).max() < 1e-12


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-1, 1), min_size=6, max_size=6), st.floats(0.05, 0.95),
       st.floats(0.5, 2.0))
def test_poisson_commute_random_spins(v, t, R):
    v = np.array(v)
    if np.linalg.norm(v[:3]) < 1e-3 or np.linalg.norm(v[3:]) < 1e-3:
        return
    m = CoupledSpins(t, R)
    x = m.project(v)
    dJ = m.gradients(x)[0]
    XH = m.fields(x)[1]
    assert abs(dJ @ XH) < 1e-12


# --- linearization ---------------------------------------------------------------

def test_champagne_linearization():
    # oracle: the linearized H flow splits into blocks [[0, 1], [2, 0]] on (r, p_r)
    oracle = np.sort(np.linalg.eigvals(np.array([[0.0, 1.0], [2.0, 0.0]])).real)
    assert oracle == pytest.approx([-np.sqrt(2), np.sqrt(2)], abs=1e-15)
    lin = critical_linearization(ChampagneBottle())
    assert lin.a == pytest.approx(oracle[1], rel=1e-12)
    assert lin.b == pytest.approx(0.0, abs=1e-12)
    assert np.allclose(lin.normalization, [[1, 0], [0, 1 / np.sqrt(2)]], atol=1e-12)


def test_normal_form_linearization():
    lin = critical_linearization(NormalFormLocal())
    assert (lin.a, lin.b) == pytest.approx((1.0, 0.0), abs=1e-12)
    assert np.allclose(quadratic_normalization(NormalFormLocal()).normalization, np.eye(2))


def _spins_oracle(t):
    """Linearized flows of coupled spins in Darboux charts at (north, south).

    Independent construction: near the north pole u1 = (x1, y1) with
    omega = dx1^dy1, near the south pole omega = -dx2^dy2; J and H expanded
    to second order with z = +-(1 - (x^2 + y^2)/2).
    """
    W = np.zeros((4, 4))
    W[0, 1], W[1, 0], W[2, 3], W[3, 2] = 1, -1, -1, 1
    HJ = np.diag([-1.0, -1.0, 1.0, 1.0])
    HH = np.zeros((4, 4))
    HH[0, 0] = HH[1, 1] = -(1 - t) + t
    HH[2, 2] = HH[3, 3] = t
    HH[0, 2] = HH[2, 0] = HH[1, 3] = HH[3, 1] = t
    return np.linalg.solve(W, HJ), np.linalg.solve(W, HH)


def test_spins_focus_focus_against_oracle():
    AJ, AH = _spins_oracle(0.5)
    ev = np.linalg.eigvals(AH)
    a_or, b_or = np.abs(ev.real).max(), np.abs(ev.imag).max()
    # frozen oracle values: a = sqrt(3)/4, b = 1/4
    assert (a_or, b_or) == pytest.approx((np.sqrt(3) / 4, 0.25), abs=1e-12)
    lin = critical_linearization(CoupledSpins(0.5, 1.0))
    assert lin.pattern == "focus-focus"
    assert (lin.a, lin.b) == pytest.approx((a_or, b_or), abs=1e-10)


def test_spins_normalization_rows():
    lin = quadratic_normalization(CoupledSpins(0.5, 1.0))
    L = lin.normalization
    assert np.allclose(L[0], [1, 0], atol=1e-14)
    bs = lin.orientation * lin.b
    assert np.allclose(L[1], [-bs / lin.a, 1 / lin.a], atol=1e-12)
    assert L[1] == pytest.approx([-0.5773502691896258, 2.309401076758503], abs=1e-10)


def test_non_focus_parameters():
    with pytest.raises(ClassificationError, match="elliptic|a = 0|expected"):
        critical_linearization(CoupledSpins(0.1))


def test_other_side_is_focus_focus():
    lin = critical_linearization(CoupledSpins(0.9))
    assert lin.a == pytest.approx(0.2958, abs=1e-4)


@pytest.mark.parametrize("lam", [0.5, 2.0])
@pytest.mark.parametrize("base", [ChampagneBottle(), CoupledSpins(0.5)], ids=["champagne", "spins"])
def test_eigenvalues_scale_linearly(base, lam):
    scaled = type(base)(**{**base.__dict__, "h_scale": lam})
    e0 = np.sort_complex(np.linalg.eigvals(linearized_flows(base)[1]))
    e1 = np.sort_complex(np.linalg.eigvals(linearized_flows(scaled)[1]))
    assert np.allclose(e1, lam * e0, atol=1e-12)
    assert critical_linearization(scaled).a == pytest.approx(lam * critical_linearization(base).a)


@pytest.mark.parametrize("m", [ChampagneBottle(), CoupledSpins(0.5), CoupledSpins(0.35, 1.7)],
                         ids=lambda m: m.model_id)
def test_two_jet_is_normal_form(m):
    """L (F - c0) has Hessians of (q1, q2) in the computed symplectic frame."""
    lin = quadratic_normalization(m)
    L, E = lin.normalization, lin.frame
    Hs = m.intrinsic_hessians(m.critical_point.coords)
    Hq = NormalFormLocal()._hessians(None)
    for k in range(2):
        Hk = L[k, 0] * Hs[0] + L[k, 1] * Hs[1]
        assert np.abs(E.T @ Hk @ E - Hq[k]).max() < 1e-8
    # the frame is symplectic: omega(e_i, e_j) matches the standard form
    W = m.symplectic_matrix()
    W0 = NormalFormLocal().symplectic_matrix()
    assert np.abs(E.T @ W @ E - W0).max() < 1e-10
