"""Classical integrable systems with a focus-focus critical point.

Three built-in models are provided:

* ``CoupledSpins(t, R)`` on S^2 x S^2, with symplectic form equal to the area
  form on the first sphere and R times the area form on the second.
* ``ChampagneBottle()`` on R^4, H = |p|^2/2 + r^4 - r^2 with angular momentum J.
* ``NormalFormLocal()`` on R^4, F = (q1, q2) = (x eta - y xi, x xi + y eta).

All functions act on ambient coordinates stored in the last axis and broadcast
over leading axes, so a batch of points is an array of shape (n, dim).

Conventions: on R^4 the coordinates are (x, y, xi, eta) with
omega = dxi^dx + deta^dy, and Hamiltonian fields satisfy i_X omega = -df, i.e.
X_f = (f_xi, f_eta, -f_x, -f_y).  On a sphere with omega = s.(u x v) the same
convention gives X_f = s x grad f.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import ClassificationError, InputError, NumericalFailure


class Value2(NamedTuple):
    """A value c = (c1, c2) of a momentum map."""

    c1: float
    c2: float

    @classmethod
    def of(cls, c) -> "Value2":
        c = np.asarray(c, dtype=float).reshape(2)
        if not np.all(np.isfinite(c)):
            raise InputError(f"non-finite value {c}")
        return cls(float(c[0]), float(c[1]))


@dataclass(frozen=True)
class PhasePoint:
    """A point of phase space tagged with the model it belongs to."""

    model_id: str
    coords: np.ndarray = field(compare=False)

    def __post_init__(self):
        object.__setattr__(self, "coords", np.asarray(self.coords, dtype=float).copy())


_J2 = np.array([[0.0, 1.0], [-1.0, 0.0]])


class ClassicalModel:
    """Interface shared by the built-in models.

    Subclasses define ``dim``, ``momentum``, ``gradients``, ``_hessians`` and
    the S^1 helpers.  ``h_scale`` multiplies H; it exists so that rescaling
    of the Hamiltonian can be tested.
    """

    dim: int = 4
    n_spheres: int = 0
    working_radius: float = 0.5

    @property
    def model_id(self) -> str:
        raise NotImplementedError

    @property
    def kind(self) -> str:
        return type(self).__name__

    # --- geometry -----------------------------------------------------------
    def validate(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.dim:
            raise InputError(f"{self.model_id}: expected {self.dim} coordinates, got {x.shape[-1]}")
        if not np.all(np.isfinite(x)):
            raise InputError(f"{self.model_id}: non-finite coordinates")
        for k in range(self.n_spheres):
            nrm = np.linalg.norm(x[..., 3 * k:3 * k + 3], axis=-1)
            if np.any(np.abs(nrm - 1.0) > 1e-12):
                raise InputError(f"{self.model_id}: sphere {k + 1} coordinates are not unit vectors")
        return x

    def project(self, x) -> np.ndarray:
        """Map ambient coordinates back onto the phase space."""
        x = np.array(x, dtype=float)
        for k in range(self.n_spheres):
            s = x[..., 3 * k:3 * k + 3]
            x[..., 3 * k:3 * k + 3] = s / np.linalg.norm(s, axis=-1, keepdims=True)
        return x

    def hamiltonian_vector(self, x, grad) -> np.ndarray:
        """Hamiltonian vector field of a function with ambient gradient ``grad``."""
        raise NotImplementedError

    def fields(self, x) -> np.ndarray:
        """X_J and X_H stacked along axis -2, shape (..., 2, dim)."""
        g = self.gradients(x)
        return np.stack([self.hamiltonian_vector(x, g[..., 0, :]),
                         self.hamiltonian_vector(x, g[..., 1, :])], axis=-2)

    def field(self, x, coeffs) -> np.ndarray:
        """The field coeffs[0] X_J + coeffs[1] X_H."""
        g = self.gradients(x)
        a, b = coeffs
        return self.hamiltonian_vector(x, a * g[..., 0, :] + b * g[..., 1, :])

    def tangent_basis(self, x) -> np.ndarray:
        """dim x 4 matrix whose columns span the tangent space at a single point."""
        return np.eye(4)

    def symplectic_matrix(self) -> np.ndarray:
        """omega(e_i, e_j) in the basis returned by ``tangent_basis``."""
        W = np.zeros((4, 4))
        W[2, 0], W[0, 2], W[3, 1], W[1, 3] = 1.0, -1.0, 1.0, -1.0
        return W

    def intrinsic_hessians(self, x) -> np.ndarray:
        """Hessians of J and H in the tangent basis at a critical point x."""
        return self._hessians(x)

    # --- S^1 action ---------------------------------------------------------
    def s1_flow(self, x, s) -> np.ndarray:
        raise NotImplementedError

    def s1_phase(self, a, b) -> np.ndarray:
        """Angle s with s1_flow(a, s) = b, for b on the J-orbit of a."""
        raise NotImplementedError

    def reduced(self, x) -> np.ndarray:
        """Polynomial invariants of the S^1 action (separate J-orbits)."""
        raise NotImplementedError

    def seed(self, f) -> np.ndarray | None:
        """A point with F(point) = f (raw values) or None if none is found."""
        raise NotImplementedError

    @property
    def has_compact_fibers(self) -> bool:
        return True


def _planar_reduced(x):
    z = x[..., 0] + 1j * x[..., 1]
    w = x[..., 2] + 1j * x[..., 3]
    zw = z * np.conj(w)
    return np.stack([np.abs(z) ** 2, np.abs(w) ** 2, zw.real, zw.imag], axis=-1)


def _planar_rotate(x, s):
    x = np.asarray(x, dtype=float)
    s = np.asarray(s, dtype=float)[..., None]
    c, sn = np.cos(s[..., 0]), np.sin(s[..., 0])
    out = np.empty(np.broadcast_shapes(x.shape, s.shape[:-1] + (4,)))
    out[..., 0] = c * x[..., 0] - sn * x[..., 1]
    out[..., 1] = sn * x[..., 0] + c * x[..., 1]
    out[..., 2] = c * x[..., 2] - sn * x[..., 3]
    out[..., 3] = sn * x[..., 2] + c * x[..., 3]
    return out


def _planar_phase(a, b):
    za = a[..., 0] + 1j * a[..., 1]
    wa = a[..., 2] + 1j * a[..., 3]
    zb = b[..., 0] + 1j * b[..., 1]
    wb = b[..., 2] + 1j * b[..., 3]
    return np.angle(zb * np.conj(za) + wb * np.conj(wa))


def _planar_field(grad):
    return np.stack([grad[..., 2], grad[..., 3], -grad[..., 0], -grad[..., 1]], axis=-1)


@dataclass(frozen=True)
class NormalFormLocal(ClassicalModel):
    """The quadratic model F = (q1, q2); its fibers are not compact."""

    @property
    def model_id(self) -> str:
        return "normal-form"

    @property
    def critical_point(self) -> PhasePoint:
        return PhasePoint(self.model_id, np.zeros(4))

    @property
    def critical_value(self) -> Value2:
        return Value2(0.0, 0.0)

    @property
    def has_compact_fibers(self) -> bool:
        return False

    def momentum(self, x):
        x = np.asarray(x, dtype=float)
        q1 = x[..., 0] * x[..., 3] - x[..., 1] * x[..., 2]
        q2 = x[..., 0] * x[..., 2] + x[..., 1] * x[..., 3]
        return np.stack([q1, q2], axis=-1)

    def gradients(self, x):
        x = np.asarray(x, dtype=float)
        X, Y, XI, ETA = (x[..., i] for i in range(4))
        g1 = np.stack([ETA, -XI, -Y, X], axis=-1)
        g2 = np.stack([XI, ETA, X, Y], axis=-1)
        return np.stack([g1, g2], axis=-2)

    def _hessians(self, x):
        H1 = np.zeros((4, 4))
        H1[0, 3] = H1[3, 0] = 1.0
        H1[1, 2] = H1[2, 1] = -1.0
        H2 = np.zeros((4, 4))
        H2[0, 2] = H2[2, 0] = 1.0
        H2[1, 3] = H2[3, 1] = 1.0
        return np.stack([H1, H2])

    def hamiltonian_vector(self, x, grad):
        return _planar_field(grad)

    def s1_flow(self, x, s):
        return _planar_rotate(x, s)

    def s1_phase(self, a, b):
        return _planar_phase(np.asarray(a), np.asarray(b))

    def reduced(self, x):
        return _planar_reduced(np.asarray(x, dtype=float))

    def seed(self, f):
        # (1, 0, xi, eta) has q1 = eta and q2 = xi.
        return np.array([1.0, 0.0, f[1], f[0]])


@dataclass(frozen=True)
class ChampagneBottle(ClassicalModel):
    """H = (xi^2 + eta^2)/2 + r^4 - r^2 (times h_scale), J = x eta - y xi."""

    h_scale: float = 1.0

    @property
    def model_id(self) -> str:
        return "champagne"

    @property
    def critical_point(self) -> PhasePoint:
        return PhasePoint(self.model_id, np.zeros(4))

    @property
    def critical_value(self) -> Value2:
        return Value2(0.0, 0.0)

    def momentum(self, x):
        x = np.asarray(x, dtype=float)
        X, Y, XI, ETA = (x[..., i] for i in range(4))
        r2 = X * X + Y * Y
        J = X * ETA - Y * XI
        H = self.h_scale * (0.5 * (XI * XI + ETA * ETA) + r2 * r2 - r2)
        return np.stack([J, H], axis=-1)

    def gradients(self, x):
        x = np.asarray(x, dtype=float)
        X, Y, XI, ETA = (x[..., i] for i in range(4))
        r2 = X * X + Y * Y
        gJ = np.stack([ETA, -XI, -Y, X], axis=-1)
        k = 4.0 * r2 - 2.0
        gH = self.h_scale * np.stack([k * X, k * Y, XI, ETA], axis=-1)
        return np.stack([gJ, gH], axis=-2)

    def _hessians(self, x):
        X, Y = x[0], x[1]
        HJ = np.zeros((4, 4))
        HJ[0, 3] = HJ[3, 0] = 1.0
        HJ[1, 2] = HJ[2, 1] = -1.0
        HH = np.zeros((4, 4))
        HH[0, 0] = 12 * X * X + 4 * Y * Y - 2
        HH[1, 1] = 4 * X * X + 12 * Y * Y - 2
        HH[0, 1] = HH[1, 0] = 8 * X * Y
        HH[2, 2] = HH[3, 3] = 1.0
        return np.stack([HJ, self.h_scale * HH])

    def hamiltonian_vector(self, x, grad):
        return _planar_field(grad)

    def s1_flow(self, x, s):
        return _planar_rotate(x, s)

    def s1_phase(self, a, b):
        return _planar_phase(np.asarray(a), np.asarray(b))

    def reduced(self, x):
        return _planar_reduced(np.asarray(x, dtype=float))

    def seed(self, f):
        # Seed family: (r, 0, p_r, J/r) with r at the bottom of the effective
        # potential J^2/(2r^2) + r^4 - r^2, and p_r fixed by the energy.
        J, H = float(f[0]), float(f[1]) / self.h_scale
        roots = np.roots([4.0, -2.0, 0.0, -J * J])
        u = max(r.real for r in roots if abs(r.imag) < 1e-9 and r.real > 0)
        r = np.sqrt(u)
        veff = J * J / (2 * u) + u * u - u
        if H < veff:
            return None
        return np.array([r, 0.0, np.sqrt(2.0 * (H - veff)), J / r])


@dataclass(frozen=True)
class CoupledSpins(ClassicalModel):
    """Coupled angular momenta on S^2 x S^2.

    J = z1 + R z2 and H = (1 - t) z1 + t s1.s2 (times h_scale).  With the
    second sphere carrying R times the area form, J generates a 2 pi periodic
    rotation of both spheres about the z-axis.
    """

    t: float = 0.5
    R: float = 1.0
    h_scale: float = 1.0

    dim = 6
    n_spheres = 2

    def __post_init__(self):
        if not (np.isfinite(self.t) and np.isfinite(self.R) and self.R > 0):
            raise InputError(f"invalid CoupledSpins parameters t={self.t}, R={self.R}")

    @property
    def model_id(self) -> str:
        return f"coupled-spins(t={self.t!r},R={self.R!r})"

    @property
    def critical_point(self) -> PhasePoint:
        return PhasePoint(self.model_id, np.array([0.0, 0.0, 1.0, 0.0, 0.0, -1.0]))

    @property
    def critical_value(self) -> Value2:
        return Value2(1.0 - self.R, self.h_scale * (1.0 - 2.0 * self.t))

    def momentum(self, x):
        x = np.asarray(x, dtype=float)
        s1, s2 = x[..., :3], x[..., 3:]
        J = s1[..., 2] + self.R * s2[..., 2]
        H = self.h_scale * ((1 - self.t) * s1[..., 2] + self.t * np.sum(s1 * s2, axis=-1))
        return np.stack([J, H], axis=-1)

    def gradients(self, x):
        x = np.asarray(x, dtype=float)
        s1, s2 = x[..., :3], x[..., 3:]
        gJ = np.zeros(x.shape)
        gJ[..., 2] = 1.0
        gJ[..., 5] = self.R
        gH = np.concatenate([self.t * s2, self.t * s1], axis=-1)
        gH[..., 2] += 1 - self.t
        return np.stack([gJ, self.h_scale * gH], axis=-2)

    def hamiltonian_vector(self, x, grad):
        x = np.asarray(x, dtype=float)
        v1 = np.cross(x[..., :3], grad[..., :3])
        v2 = np.cross(x[..., 3:], grad[..., 3:]) / self.R
        return np.concatenate([v1, v2], axis=-1)

    def tangent_basis(self, x):
        B = np.zeros((6, 4))
        for k in range(2):
            s = x[3 * k:3 * k + 3]
            a = np.array([1.0, 0.0, 0.0]) if abs(s[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
            b1 = a - (a @ s) * s
            b1 /= np.linalg.norm(b1)
            B[3 * k:3 * k + 3, 2 * k] = b1
            B[3 * k:3 * k + 3, 2 * k + 1] = np.cross(s, b1)
        return B

    def symplectic_matrix(self):
        W = np.zeros((4, 4))
        W[:2, :2] = _J2
        W[2:, 2:] = self.R * _J2
        return W

    def intrinsic_hessians(self, x):
        # Hessian of f((s + Bv)/|s + Bv|) at v = 0, sphere by sphere.
        x = np.asarray(x, dtype=float)
        B = self.tangent_basis(x)
        g = self.gradients(x)
        amb = np.zeros((2, 6, 6))
        amb[1, :3, 3:] = amb[1, 3:, :3] = self.h_scale * self.t * np.eye(3)
        out = np.empty((2, 4, 4))
        for f in range(2):
            corr = np.zeros((6, 6))
            for k in range(2):
                sl = slice(3 * k, 3 * k + 3)
                corr[sl, sl] = (g[f, sl] @ x[sl]) * np.eye(3)
            out[f] = B.T @ (amb[f] - corr) @ B
        return out

    def s1_flow(self, x, s):
        # X_J = s x e_z on each sphere: u = x + i y rotates as exp(-i s) u.
        x = np.asarray(x, dtype=float)
        s = np.asarray(s, dtype=float)
        c, sn = np.cos(s), np.sin(s)
        out = np.array(np.broadcast_to(x, np.broadcast_shapes(x.shape, s.shape + (6,))))
        for k in (0, 3):
            X, Y = x[..., k].copy(), x[..., k + 1].copy()
            out[..., k] = c * X + sn * Y
            out[..., k + 1] = -sn * X + c * Y
        return out

    def s1_phase(self, a, b):
        a, b = np.asarray(a), np.asarray(b)
        ua1, ua2 = a[..., 0] + 1j * a[..., 1], a[..., 3] + 1j * a[..., 4]
        ub1, ub2 = b[..., 0] + 1j * b[..., 1], b[..., 3] + 1j * b[..., 4]
        return -np.angle(ub1 * np.conj(ua1) + ub2 * np.conj(ua2))

    def reduced(self, x):
        x = np.asarray(x, dtype=float)
        u1 = x[..., 0] + 1j * x[..., 1]
        u2 = x[..., 3] + 1j * x[..., 4]
        p = u1 * np.conj(u2)
        return np.stack([x[..., 2], x[..., 5], p.real, p.imag], axis=-1)

    def seed(self, f):
        # Seed family: s1 = (rho1, 0, z1), s2 = (rho2 cos psi, rho2 sin psi, z2)
        # with z2 = (J - z1)/R and psi fixed by H; z1 chosen with the most
        # interior value of cos psi.
        J, H = float(f[0]), float(f[1]) / self.h_scale
        t, R = self.t, self.R
        z1 = np.linspace(-1, 1, 4001)[1:-1]
        z2 = (J - z1) / R
        ok = np.abs(z2) < 1
        if not np.any(ok):
            return None
        z1, z2 = z1[ok], z2[ok]
        r1, r2 = np.sqrt(1 - z1 ** 2), np.sqrt(1 - z2 ** 2)
        if t == 0:
            i = np.argmin(np.abs(z1 - H))
            if abs(z1[i] - H) > 1e-3:
                return None
            cpsi = np.zeros_like(z1)
        else:
            cpsi = (H - (1 - t) * z1 - t * z1 * z2) / (t * r1 * r2)
            i = np.argmin(np.abs(cpsi))
            if abs(cpsi[i]) > 1:
                return None
        psi = np.arccos(np.clip(cpsi[i], -1, 1))
        s1 = [r1[i], 0.0, z1[i]]
        s2 = [r2[i] * np.cos(psi), r2[i] * np.sin(psi), z2[i]]
        return self.project(np.array(s1 + s2))


# --- public operations --------------------------------------------------------

def _coords(model: ClassicalModel, pt) -> np.ndarray:
    if isinstance(pt, PhasePoint):
        if pt.model_id != model.model_id:
            raise InputError(f"point belongs to {pt.model_id}, not {model.model_id}")
        return model.validate(pt.coords)
    return model.validate(pt)


def evaluate_F(model: ClassicalModel, pt) -> Value2:
    """Momentum map (J, H) at a point."""
    return Value2.of(model.momentum(_coords(model, pt)))


def hamiltonian_fields(model: ClassicalModel, pt) -> tuple[np.ndarray, np.ndarray]:
    """(X_J, X_H) at a point, as ambient vectors."""
    X = model.fields(_coords(model, pt))
    return X[0], X[1]


@dataclass(frozen=True)
class FocusLinearData:
    """Linear data of a focus-focus point.

    ``normalization`` is L with L (F - c0) = (q1, q2) + O(3) in the symplectic
    frame ``frame_ambient`` (columns e_x, e_y, e_xi, e_eta).
    ``frame`` holds the same vectors in tangent-basis coordinates.  ``b`` is
    reported non-negative; ``orientation`` is the sign it had in that frame.
    """

    a: float
    b: float
    normalization: np.ndarray
    orientation: int
    pattern: str
    joint_eigenvalues: np.ndarray
    frame: np.ndarray | None = None
    frame_ambient: np.ndarray | None = None


def _joint_eigen(AJ, AH):
    # Commuting matrices share eigenvectors; diagonalize a generic combination
    # and read off both eigenvalues with Rayleigh quotients.
    for mix in (0.6180339887498949, 1.4142135623730951, 0.3183098861837907):
        vals, V = np.linalg.eig(AH + mix * AJ)
        pairs = []
        good = True
        for k in range(4):
            v = V[:, k]
            nv = np.vdot(v, v)
            lj = np.vdot(v, AJ @ v) / nv
            lh = np.vdot(v, AH @ v) / nv
            scale = 1.0 + np.abs(lj) + np.abs(lh)
            if (np.linalg.norm(AJ @ v - lj * v) > 1e-8 * scale * np.linalg.norm(v)
                    or np.linalg.norm(AH @ v - lh * v) > 1e-8 * scale * np.linalg.norm(v)):
                good = False
                break
            pairs.append((lj, lh, v))
        if good:
            return pairs
    raise NumericalFailure("linearizations of J and H have no common eigenbasis")


def _describe(vals, tol):
    v = np.asarray(vals)
    if np.all(np.abs(v) < tol):
        return "zero"
    if np.all(np.abs(v.real) < tol):
        return "elliptic (purely imaginary " + ", ".join(f"{z.imag:+.6g}i" for z in v) + ")"
    if np.all(np.abs(v.imag) < tol):
        return "hyperbolic (real " + ", ".join(f"{z.real:+.6g}" for z in v) + ")"
    return "complex (" + ", ".join(f"{z.real:+.6g}{z.imag:+.6g}i" for z in v) + ")"


def linearized_flows(model: ClassicalModel) -> tuple[np.ndarray, np.ndarray]:
    """Matrices of the linearized flows of J and H at the critical point."""
    p = model.critical_point.coords
    W = model.symplectic_matrix()
    Hs = model.intrinsic_hessians(p)
    Winv = np.linalg.inv(W)
    return Winv @ Hs[0], Winv @ Hs[1]


@functools.lru_cache(maxsize=64)
def critical_linearization(model: ClassicalModel) -> FocusLinearData:
    """Classify the critical point and return (a, b) and the pencil normalization."""
    AJ, AH = linearized_flows(model)
    scale = 1.0 + np.abs(AJ).max() + np.abs(AH).max()
    tol = 1e-8 * scale
    pairs = _joint_eigen(AJ, AH)
    lj = np.array([p[0] for p in pairs])
    lh = np.array([p[1] for p in pairs])
    j_ok = np.all(np.abs(lj.real) < tol) and np.all(np.abs(np.abs(lj.imag) - 1.0) < tol) \
        and np.sum(lj.imag > 0) == 2
    if not j_ok:
        raise ClassificationError(f"{model.model_id}: J-linearization is {_describe(lj, tol)}, "
                                  "expected +-i (doubled)")
    # the eigenvector with (lambda_J, lambda_H) = (i, a + ib) in the normal form
    cands = [(lh_, v) for lj_, lh_, v in pairs if lj_.imag > 0]
    lh_sel, v_sel = max(cands, key=lambda p: p[0].real)
    a, b_signed = lh_sel.real, lh_sel.imag
    if abs(a) < tol:
        raise ClassificationError(f"{model.model_id}: H-linearization is {_describe(lh, tol)}; "
                                  "not focus-focus (a = 0)")
    G = np.array([[1.0, 0.0], [b_signed, a]])
    L = np.linalg.inv(G)
    orientation = 1 if b_signed >= 0 else -1
    return FocusLinearData(a=float(a), b=float(abs(b_signed)), normalization=L,
                           orientation=orientation,
                           pattern="focus-focus",
                           joint_eigenvalues=np.stack([lj, lh], axis=1))


def _nullspace(M, dim=2):
    _, s, Vt = np.linalg.svd(M)
    return Vt[-dim:].T


@functools.lru_cache(maxsize=64)
def quadratic_normalization(model: ClassicalModel) -> FocusLinearData:
    """L = dg(0)^-1 and a linear symplectic frame in which L(F - c0) = (q1, q2) + O(3)."""
    lin = critical_linearization(model)
    L = lin.normalization
    AJ, AH = linearized_flows(model)
    A1 = L[0, 0] * AJ + L[0, 1] * AH
    A2 = L[1, 0] * AJ + L[1, 1] * AH
    W = model.symplectic_matrix()
    Eplus = _nullspace(A2 - np.eye(4))
    Eminus = _nullspace(A2 + np.eye(4))
    ex = Eplus[:, 0]
    ey = A1 @ ex
    M = np.array([[ex @ W.T @ m for m in Eminus.T],   # omega(m, e_x) = m^T W e_x
                  [ey @ W.T @ m for m in Eminus.T]])
    if abs(np.linalg.det(M)) < 1e-12:
        raise NumericalFailure(f"{model.model_id}: degenerate pencil, no symplectic frame")
    exi = Eminus @ np.linalg.solve(M, [1.0, 0.0])
    eeta = Eminus @ np.linalg.solve(M, [0.0, 1.0])
    frame = np.stack([ex, ey, exi, eeta], axis=1)
    B = model.tangent_basis(model.critical_point.coords)
    return FocusLinearData(a=lin.a, b=lin.b, normalization=L, orientation=lin.orientation,
                           pattern=lin.pattern, joint_eigenvalues=lin.joint_eigenvalues,
                           frame=frame, frame_ambient=B @ frame)


def normalized_momentum(model: ClassicalModel, x) -> np.ndarray:
    """Phi = L (F - c0) evaluated on a batch of points."""
    L = quadratic_normalization(model).normalization
    return (model.momentum(x) - np.asarray(model.critical_value)) @ L.T


def to_raw(model: ClassicalModel, c) -> np.ndarray:
    """Raw momentum-map value F with L (F - c0) = c."""
    L = quadratic_normalization(model).normalization
    return np.asarray(model.critical_value) + np.linalg.solve(L, np.asarray(c, dtype=float).T).T
