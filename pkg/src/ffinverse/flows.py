"""Hamiltonian flows, fiber seeds, rotation numbers and action increments.

Momentum-map values handed to this module are values of the normalized map
Phi = L (F - c0), with L from ``models.quadratic_normalization``; in these
coordinates J generates the 2 pi periodic flow and the critical value is 0.

Batches of trajectories are integrated as one stacked ODE system with
scipy's DOP853, so a grid of rotation numbers costs about as much as the
slowest single orbit.
"""

from __future__ import annotations

import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .errors import InputError, NumericalFailure, RangeError
from .models import (ClassicalModel, PhasePoint, Value2, quadratic_normalization,
                     to_raw)

log = logging.getLogger(__name__)

THREADS_ENV = "FFINVERSE_THREADS"
TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class RotationNumbers:
    tau1: float
    tau2: float
    c: Value2


@dataclass(frozen=True)
class PathInC:
    """Ordered samples in the c-plane; ``closed`` joins the last to the first."""

    samples: np.ndarray
    closed: bool = False

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=float).reshape(-1, 2)
        if len(s) < 2:
            raise InputError("a path needs at least two samples")
        object.__setattr__(self, "samples", s)

    @classmethod
    def circle(cls, radius, n, center=(0.0, 0.0), start=0.0, turns=1):
        th = start + TWO_PI * np.arange(n * turns) / n
        pts = np.asarray(center) + radius * np.stack([np.cos(th), np.sin(th)], axis=1)
        return cls(pts, closed=True)

    @classmethod
    def segment(cls, a, b, n=2):
        s = np.linspace(0.0, 1.0, n)[:, None]
        return cls((1 - s) * np.asarray(a, float) + s * np.asarray(b, float))

    def reversed(self) -> "PathInC":
        return PathInC(self.samples[::-1].copy(), self.closed)

    def then(self, other: "PathInC") -> "PathInC":
        return PathInC(np.vstack([self.samples, other.samples]), self.closed and other.closed)

    def vertices(self) -> np.ndarray:
        s = self.samples
        return np.vstack([s, s[:1]]) if self.closed else s


def exclusion_radius(model: ClassicalModel) -> float:
    return 0.02 * model.working_radius


# --- integration --------------------------------------------------------------

def _stacked_rhs(model, coeffs, n):
    def rhs(t, y):
        x = y.reshape(n, model.dim)
        return model.field(x, coeffs).ravel()
    return rhs


def _solve(model, X0, coeffs, t0, t1, rtol, atol, dense=False):
    n = len(X0)
    sol = solve_ivp(_stacked_rhs(model, coeffs, n), (t0, t1), X0.ravel(), method="DOP853",
                    rtol=rtol, atol=atol, dense_output=dense)
    if sol.status != 0:
        raise NumericalFailure(f"integration stopped at t={sol.t[-1]:.6g} "
                               f"(started at {X0[0].tolist()}): {sol.message}")
    return sol


def _batch_tol(rtol, n):
    # the stacked system uses an RMS error norm; tighten it with the batch size
    return max(rtol / np.sqrt(n), 3e-14)


def integrate_flow(model: ClassicalModel, pt, coeffs, time: float, tol: float = 1e-10,
                   chunk: float = 5.0) -> PhasePoint:
    """Flow of coeffs[0] X_J + coeffs[1] X_H for ``time``, re-projected every chunk."""
    x = np.asarray(pt.coords if isinstance(pt, PhasePoint) else pt, dtype=float)
    x = model.validate(x)[None, :]
    if time == 0:
        return PhasePoint(model.model_id, x[0])
    rtol = max(min(1e-3 * tol, 1e-11), 3e-14)
    n_chunks = max(1, int(np.ceil(abs(time) / chunk)))
    edges = np.linspace(0.0, time, n_chunks + 1)
    for t0, t1 in zip(edges[:-1], edges[1:]):
        sol = _solve(model, x, coeffs, t0, t1, rtol, rtol)
        x = model.project(sol.y[:, -1].reshape(1, -1))
    return PhasePoint(model.model_id, x[0])


# --- fiber seeds -------------------------------------------------------------

def _tangent_gradients(model, X):
    G = model.gradients(X)
    for k in range(model.n_spheres):
        sl = slice(3 * k, 3 * k + 3)
        s = X[:, None, sl]
        G[..., sl] -= np.sum(G[..., sl] * s, axis=-1, keepdims=True) * s
    return G


def _newton_fiber(model, X, targets, max_iter=20, tol=1e-12):
    X = np.array(X, dtype=float)
    for it in range(max_iter + 1):
        r = model.momentum(X) - targets
        if np.all(np.abs(r) < tol):
            return X, it
        G = _tangent_gradients(model, X)
        GGt = G @ np.swapaxes(G, 1, 2)
        step = np.einsum("nij,nj->ni", np.swapaxes(G, 1, 2), np.linalg.solve(GGt, r[..., None])[..., 0])
        X = model.project(X - step)
    bad = np.where(np.any(np.abs(model.momentum(X) - targets) >= tol, axis=1))[0]
    raise NumericalFailure(f"Newton did not reach the fiber for values {targets[bad[:3]].tolist()}")


def fiber_seeds(model: ClassicalModel, cs, normalized: bool = True) -> np.ndarray:
    """Points on the fibers over a batch of values, shape (n, dim)."""
    cs = np.atleast_2d(np.asarray(cs, dtype=float))
    raw = to_raw(model, cs) if normalized else cs
    X = []
    for f in raw:
        s = model.seed(f)
        if s is None:
            raise RangeError(f"value {f.tolist()} is outside the image of F for {model.model_id}")
        X.append(s)
    X, _ = _newton_fiber(model, np.array(X), raw)
    return X


def fiber_seed(model: ClassicalModel, c, guess=None, normalized: bool = True) -> PhasePoint:
    """A point A with Phi(A) = c (or F(A) = c when ``normalized`` is False)."""
    c = np.asarray(c, dtype=float)
    raw = to_raw(model, c) if normalized else c
    if guess is not None:
        g = guess.coords if isinstance(guess, PhasePoint) else np.asarray(guess, float)
        g = model.validate(g)
        if np.all(np.abs(model.momentum(g) - raw) < 1e-12):
            return PhasePoint(model.model_id, g)
        X, _ = _newton_fiber(model, g[None], raw[None])
        return PhasePoint(model.model_id, X[0])
    return PhasePoint(model.model_id, fiber_seeds(model, c[None], normalized)[0])


# --- first returns of the reduced H flow --------------------------------------

def _reduced_velocity(model, X, coeffs):
    # the reduced coordinates are quadratic, so a central difference is exact
    h = 1e-4
    V = model.field(X, coeffs)
    return (model.reduced(X + h * V) - model.reduced(X - h * V)) / (2 * h)


def first_returns(model: ClassicalModel, X0, coeffs=(0.0, 1.0), rtol: float = 1e-12,
                  t_cap: float = 400.0, chunk: float = 4.0, dt_sample: float = 0.02,
                  proximity: float = 0.3):
    """First return times of the reduced flow of coeffs . (X_J, X_H).

    Returns (T, X_T) where X_T is the point reached at time T; it lies on the
    J-orbit of the starting point.
    """
    X0 = np.atleast_2d(np.asarray(X0, dtype=float))
    n = len(X0)
    rho0 = model.reduced(X0)
    nv = _reduced_velocity(model, X0, coeffs)
    nn = np.linalg.norm(nv, axis=1)
    if np.any(nn < 1e-10):
        raise NumericalFailure("reduced flow is stationary at a seed (relative equilibrium)")
    nv = nv / nn[:, None]
    T = np.full(n, np.nan)
    XT = np.full_like(X0, np.nan)
    dmax = np.zeros(n)
    active = np.arange(n)
    X = X0.copy()
    t0 = 0.0
    while len(active):
        if t0 >= t_cap:
            raise NumericalFailure(f"no return within t={t_cap} for {len(active)} orbit(s); "
                                   f"first start {X0[active[0]].tolist()}")
        t1 = t0 + chunk
        m = len(active)
        tol = _batch_tol(rtol, m)
        sol = _solve(model, X, coeffs, t0, t1, tol, tol, dense=True)
        ts = np.linspace(t0, t1, int(np.ceil(chunk / dt_sample)) + 1)
        Y = sol.sol(ts).reshape(m, model.dim, len(ts)).transpose(0, 2, 1)
        rho = model.reduced(Y)
        diff = rho - rho0[active, None, :]
        g = np.einsum("mkj,mj->mk", diff, nv[active])
        d = np.linalg.norm(diff, axis=2)
        dcum = np.maximum.accumulate(np.maximum(d, dmax[active, None]), axis=1)
        done = np.zeros(m, dtype=bool)
        for i in range(m):
            cand = np.where((g[i, :-1] < 0) & (g[i, 1:] >= 0)
                            & (d[i, 1:] < proximity * dcum[i, 1:]))[0]
            if len(cand) == 0:
                continue
            k = cand[0]
            gi = active[i]
            sl = slice(i * model.dim, (i + 1) * model.dim)

            def gfun(t, sl=sl, gi=gi):
                y = sol.sol(t)[sl]
                return float((model.reduced(y) - rho0[gi]) @ nv[gi])

            tr = brentq(gfun, ts[k], ts[k + 1], xtol=1e-15, rtol=4 * np.finfo(float).eps,
                        maxiter=200)
            T[gi] = tr
            XT[gi] = model.project(sol.sol(tr)[sl])
            done[i] = True
        dmax[active] = dcum[:, -1]
        keep = ~done
        X = model.project(sol.y[:, -1].reshape(m, model.dim)[keep])
        active = active[keep]
        t0 = t1
    return T, XT


# --- rotation numbers ------------------------------------------------------------

def _check_regular(model, cs, exclusion=None):
    r = np.linalg.norm(cs, axis=1)
    rex = exclusion_radius(model) if exclusion is None else exclusion
    if np.any(r < rex):
        raise InputError(f"value(s) inside the exclusion disk |c| < {rex:g} around the critical value")


def _taus_serial(model, cs, X, rtol):
    lin = quadratic_normalization(model)
    L = lin.normalization
    if abs(L[0, 0] - 1.0) > 1e-12 or abs(L[0, 1]) > 1e-12:
        raise InputError("rotation numbers need J to be the first normalized coordinate")
    TH, XT = first_returns(model, X, (0.0, 1.0), rtol=rtol)
    tau2 = TH / L[1, 1]
    theta = model.s1_phase(X, XT)
    tau1 = np.mod(-(L[1, 0] * tau2 + theta), TWO_PI)
    return np.stack([tau1, tau2], axis=1)


def _threads() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def rotation_numbers_batch(model: ClassicalModel, cs, seeds=None, rtol: float = 1e-12,
                           exclusion: float | None = None) -> np.ndarray:
    """(tau1, tau2) for each value in ``cs``; returns an (n, 2) array.

    ``exclusion`` overrides the radius of the disk around 0 where values are refused.
    """
    cs = np.atleast_2d(np.asarray(cs, dtype=float))
    if not model.has_compact_fibers:
        raise InputError(f"{model.model_id} has no compact fibers; rotation numbers undefined")
    _check_regular(model, cs, exclusion)
    X = fiber_seeds(model, cs) if seeds is None else model.validate(np.atleast_2d(seeds))
    workers = min(_threads(), len(cs))
    if workers <= 1:
        return _taus_serial(model, cs, X, rtol)
    parts = np.array_split(np.arange(len(cs)), workers)
    with ProcessPoolExecutor(workers) as ex:
        futs = [ex.submit(_taus_serial, model, cs[p], X[p], rtol) for p in parts]
        return np.vstack([f.result() for f in futs])


def rotation_numbers(model: ClassicalModel, c, seed=None, rtol: float = 1e-12,
                     exclusion: float | None = None) -> RotationNumbers:
    """tau1 in [0, 2 pi) and tau2 > 0 at the regular value c of Phi."""
    c = np.asarray(c, dtype=float)
    X = None
    if seed is not None:
        X = (seed.coords if isinstance(seed, PhasePoint) else np.asarray(seed))[None]
    tau = rotation_numbers_batch(model, c[None], X, rtol, exclusion)[0]
    return RotationNumbers(float(tau[0]), float(tau[1]), Value2.of(c))


def random_fiber_points(model: ClassicalModel, c, n: int, rng: np.random.Generator,
                        max_time: float = 5.0) -> np.ndarray:
    """n points on the fiber over c, spread by random joint flows from a seed."""
    A = fiber_seed(model, c).coords
    L = quadratic_normalization(model).normalization
    out = []
    for _ in range(n):
        s, t = rng.uniform(0, TWO_PI), rng.uniform(0, max_time)
        y = integrate_flow(model, A, (L[1, 0], L[1, 1]), t, tol=1e-12).coords
        out.append(model.s1_flow(y, s))
    return model.project(np.array(out))


# --- path functionals ------------------------------------------------------------

def _segment_distance(a, b, p=np.zeros(2)):
    d = b - a
    s = np.clip(np.dot(p - a, d) / max(np.dot(d, d), 1e-300), 0.0, 1.0)
    return np.linalg.norm(a + s * d - p)


def _check_path(model, path: PathInC):
    v = path.vertices()
    rex = exclusion_radius(model)
    for a, b in zip(v[:-1], v[1:]):
        if _segment_distance(a, b) < rex:
            raise InputError(f"path segment {a.tolist()} -> {b.tolist()} enters the exclusion disk "
                             f"(radius {rex:g})")


def lift_angles(theta, max_jump: float = np.pi / 2) -> np.ndarray:
    """Nearest-continuation lift of angles; refuses jumps that are ambiguous."""
    theta = np.asarray(theta, dtype=float)
    d = np.mod(np.diff(theta) + np.pi, TWO_PI) - np.pi
    if len(d) and np.max(np.abs(d)) > max_jump:
        k = int(np.argmax(np.abs(d)))
        raise InputError(f"angle jump {d[k]:.3f} between samples {k} and {k + 1} is too large "
                         "for an unambiguous lift")
    return np.concatenate([theta[:1], theta[0] + np.cumsum(d)])


def action_increment(model: ClassicalModel, path: PathInC, n_gauss: int = 6) -> float:
    """Integral of tau1 dc1 + tau2 dc2 along the path, tau1 lifted continuously."""
    _check_path(model, path)
    v = path.vertices()
    xg, wg = np.polynomial.legendre.leggauss(n_gauss)
    s = 0.5 * (xg + 1.0)
    nodes = (v[:-1, None, :] * (1 - s)[None, :, None] + v[1:, None, :] * s[None, :, None])
    taus = rotation_numbers_batch(model, nodes.reshape(-1, 2))
    tau1 = lift_angles(taus[:, 0]).reshape(len(v) - 1, n_gauss)
    tau2 = taus[:, 1].reshape(len(v) - 1, n_gauss)
    dv = v[1:] - v[:-1]
    integrand = tau1 * dv[:, 0:1] + tau2 * dv[:, 1:2]
    return float(0.5 * np.sum(integrand * wg[None, :]))


def tau_winding(model: ClassicalModel, loop: PathInC) -> int:
    """Winding of the continuous lift of tau1 around a closed loop."""
    if not loop.closed:
        raise InputError("tau_winding needs a closed loop")
    _check_path(model, loop)
    taus = rotation_numbers_batch(model, loop.samples)
    lifted = lift_angles(np.append(taus[:, 0], taus[0, 0]))
    w = (lifted[-1] - lifted[0]) / TWO_PI
    return int(np.rint(w))
