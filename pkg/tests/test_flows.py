import numpy as np
import pytest

from ffinverse.errors import InputError, RangeError
from ffinverse.flows import (PathInC, action_increment, fiber_seed, integrate_flow, lift_angles,
                             random_fiber_points, rotation_numbers, rotation_numbers_batch,
                             tau_winding)
from ffinverse.models import ChampagneBottle, CoupledSpins, normalized_momentum

CHAMP = ChampagneBottle()
SPINS = CoupledSpins(0.5)


# --- integrate_flow -------------------------------------------------------------

def test_zero_time_is_identity():
    A = fiber_seed(SPINS, (0.1, 0.05))
    assert np.array_equal(integrate_flow(SPINS, A, (0.3, 1.0), 0.0).coords, A.coords)


def test_J_flow_is_2pi_periodic():
    A = fiber_seed(SPINS, (0.1, 0.05))
    B = integrate_flow(SPINS, A, (1.0, 0.0), 2 * np.pi, tol=1e-11)
    assert np.abs(B.coords - A.coords).max() < 1e-8


def test_flow_conserves_F():
    A = fiber_seed(SPINS, (0.2, -0.1))
    B = integrate_flow(SPINS, A, (0.4, 1.0), 7.0, tol=1e-10)
    assert np.abs(normalized_momentum(SPINS, B.coords) - (0.2, -0.1)).max() < 1e-10


def test_champagne_step_refinement():
    A = fiber_seed(CHAMP, (0.1, 0.05))
    a = integrate_flow(CHAMP, A, (0.0, 1.0), 1.0, tol=1e-10).coords
    b = integrate_flow(CHAMP, A, (0.0, 1.0), 1.0, tol=1e-12, chunk=0.5).coords
    assert np.abs(a - b).max() < 1e-8


# --- fiber_seed -------------------------------------------------------------------

def test_seed_on_given_fiber_is_returned():
    A = fiber_seed(SPINS, (0.1, 0.05))
    c = normalized_momentum(SPINS, A.coords)
    B = fiber_seed(SPINS, c, guess=A)
    assert np.array_equal(A.coords, B.coords)


def test_seed_outside_image():
    with pytest.raises(RangeError):
        fiber_seed(CoupledSpins(0.5, 1.0), (3.0, 0.0), normalized=False)


def test_champagne_seed_residual():
    A = fiber_seed(CHAMP, (0.1, 0.05))
    assert np.abs(normalized_momentum(CHAMP, A.coords) - (0.1, 0.05)).max() < 1e-10


# --- rotation numbers ---------------------------------------------------------------

@pytest.mark.parametrize("m", [CHAMP, SPINS], ids=["champagne", "spins"])
def test_rotation_numbers_close_the_orbit(m):
    c = (0.1, 0.05)
    tau = rotation_numbers(m, c)
    assert 0 <= tau.tau1 < 2 * np.pi and tau.tau2 > 0
    from ffinverse.models import quadratic_normalization
    L = quadratic_normalization(m).normalization
    A = fiber_seed(m, c)
    y = integrate_flow(m, A, (L[1, 0], L[1, 1]), tau.tau2, 1e-12)
    y = integrate_flow(m, y, (1.0, 0.0), tau.tau1, 1e-12)
    assert np.abs(y.coords - A.coords).max() < 1e-8


def test_rotation_numbers_seed_independent(rng):
    c = (0.12, -0.07)
    X = random_fiber_points(SPINS, c, 8, rng)
    T = rotation_numbers_batch(SPINS, np.tile(c, (8, 1)), seeds=X)
    ref = T[0]
    d1 = np.abs(np.angle(np.exp(1j * (T[:, 0] - ref[0]))))
    assert np.all(d1 < 1e-6 * (1 + ref[0]))
    assert np.all(np.abs(T[:, 1] - ref[1]) < 1e-6 * (1 + ref[1]))


def test_champagne_refinement():
    a = rotation_numbers(CHAMP, (0.0, 0.05), rtol=1e-11)
    b = rotation_numbers(CHAMP, (0.0, 0.05), rtol=1e-13)
    assert abs(a.tau1 - b.tau1) < 1e-6 and abs(a.tau2 - b.tau2) < 1e-6


def test_tau2_log_growth():
    eps = np.array([1e-2, 1e-3, 1e-4])
    T = rotation_numbers_batch(CHAMP, np.stack([eps, 0 * eps], axis=1), exclusion=0.0)
    d = np.diff(T[:, 1])
    assert d[1] / d[0] == pytest.approx(1.0, abs=0.1)


def test_exclusion_disk():
    with pytest.raises(InputError, match="exclusion"):
        rotation_numbers(CHAMP, (1e-3, 0.0))


# --- action increments and winding ---------------------------------------------------

def test_contractible_loop_has_zero_increment():
    loop = PathInC.circle(0.05, 8, center=(0.2, 0.0))
    assert abs(action_increment(CHAMP, loop)) < 1e-6


def test_path_then_reverse_cancels():
    p = PathInC.segment((0.1, 0.0), (0.12, 0.08), 3)
    assert abs(action_increment(CHAMP, p.then(p.reversed()))) < 1e-9


def test_segment_quadrature_refinement():
    p = PathInC.segment((0.1, 0.0), (0.1, 0.05))
    a = action_increment(CHAMP, p)
    b = action_increment(CHAMP, PathInC.segment((0.1, 0.0), (0.1, 0.05), 3), n_gauss=8)
    assert abs(a - b) < 1e-7


def test_homotopic_paths_agree():
    a, b = (0.1, -0.05), (0.1, 0.05)
    straight = PathInC.segment(a, b, 3)
    bent = PathInC(np.array([a, (0.2, -0.05), (0.2, 0.05), b]))
    assert abs(action_increment(CHAMP, straight) - action_increment(CHAMP, bent)) < 1e-6


def test_path_into_exclusion_disk():
    with pytest.raises(InputError):
        action_increment(CHAMP, PathInC.segment((-0.1, 0.0), (0.1, 0.0)))


def test_winding_zero_without_c0():
    assert tau_winding(CHAMP, PathInC.circle(0.05, 12, center=(0.2, 0.0))) == 0


@pytest.mark.parametrize("m", [CHAMP, SPINS], ids=["champagne", "spins"])
def test_winding_around_c0(m):
    w = tau_winding(m, PathInC.circle(0.15, 48))
    # the lift of tau1 gains -2 pi per counterclockwise turn for both models
    assert w == -1
    assert tau_winding(m, PathInC.circle(0.15, 48, turns=2)) == 2 * w
    assert tau_winding(m, PathInC.circle(0.15, 48).reversed()) == -w


def test_winding_is_additive():
    a = PathInC.circle(0.15, 48)
    b = PathInC.circle(0.05, 12, center=(0.25, 0.0))
    assert tau_winding(CHAMP, a.then(a)) == 2 * tau_winding(CHAMP, a)
    assert tau_winding(CHAMP, a.then(b)) == tau_winding(CHAMP, a) + tau_winding(CHAMP, b)


def test_lift_refuses_large_jumps():
    with pytest.raises(InputError):
        lift_angles([0.0, 2.0])
    assert np.allclose(lift_angles([6.2, 0.05, 0.3]), [6.2, 2 * np.pi + 0.05, 2 * np.pi + 0.3])
