"""Affine charts of joint-spectrum windows, integral transitions and monodromy.

A chart labels the eigenvalues of a window by integers k so that
lambda = P(k) with P a low-degree polynomial map; P is the local inverse of
the action map divided by 2 pi hbar.  Labels are grown outward from the point
nearest the window center: each ring of new points is labeled by inverting
the current fit, so smooth distortion of the lattice is followed rather than
assumed away.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .errors import DetectionError, InputError, TransitionError
from .flows import PathInC
from .models import Value2

TWO_PI = 2.0 * np.pi


# --- lattice reduction ---------------------------------------------------------------

def gauss_reduce(B) -> tuple[np.ndarray, np.ndarray]:
    """Lagrange-Gauss reduction of the columns of B; returns (B U, U) with U unimodular."""
    B = np.array(B, dtype=float)
    U = np.eye(2, dtype=np.int64)
    b = [B[:, 0].copy(), B[:, 1].copy()]
    u = [U[:, 0].copy(), U[:, 1].copy()]
    if b[0] @ b[0] > b[1] @ b[1]:
        b.reverse()
        u.reverse()
    for _ in range(200):
        mu = int(np.rint((b[0] @ b[1]) / (b[0] @ b[0])))
        b[1] = b[1] - mu * b[0]
        u[1] = u[1] - mu * u[0]
        if b[1] @ b[1] < b[0] @ b[0] * (1 - 1e-12):
            b.reverse()
            u.reverse()
        else:
            break
    Bred = np.stack(b, axis=1)
    U = np.stack(u, axis=1)
    # canonical signs: first column points to c1 > 0 (or c2 > 0), det > 0
    if Bred[0, 0] < -1e-14 * np.abs(Bred).max() or (abs(Bred[0, 0]) <= 1e-14 * np.abs(Bred).max()
                                                     and Bred[1, 0] < 0):
        Bred[:, 0] *= -1
        U[:, 0] *= -1
    if np.linalg.det(Bred) < 0:
        Bred[:, 1] *= -1
        U[:, 1] *= -1
    return Bred, U


def _int_inverse(U) -> np.ndarray:
    U = np.asarray(U, dtype=np.int64)
    det = int(U[0, 0] * U[1, 1] - U[0, 1] * U[1, 0])
    if det not in (1, -1):
        raise InputError(f"matrix {U.tolist()} is not in GL(2,Z)")
    return det * np.array([[U[1, 1], -U[0, 1]], [-U[1, 0], U[0, 0]]], dtype=np.int64)


# --- polynomial chart model -------------------------------------------------------

def _exponents(deg):
    return [(i, d - i) for d in range(deg + 1) for i in range(d, -1, -1)]


@dataclass
class PolyMap:
    """lambda = sum_a coef[a] (k/scale)^a with total degree <= degree."""

    degree: int
    scale: float
    coef: np.ndarray        # (n_monomials, 2)

    @classmethod
    def fit(cls, k, pts, degree):
        k = np.asarray(k, float)
        scale = max(1.0, float(np.abs(k).max()))
        V = cls._vander(k / scale, degree)
        coef, *_ = np.linalg.lstsq(V, pts, rcond=None)
        return cls(degree, scale, coef)

    @staticmethod
    def _vander(u, degree):
        return np.stack([u[:, 0] ** i * u[:, 1] ** j for i, j in _exponents(degree)], axis=1)

    def __call__(self, k):
        k = np.atleast_2d(np.asarray(k, float))
        return self._vander(k / self.scale, self.degree) @ self.coef

    def jacobian(self, k):
        """d lambda / d k, shape (n, 2, 2)."""
        k = np.atleast_2d(np.asarray(k, float))
        u = k / self.scale
        d1, d2 = [], []
        for i, j in _exponents(self.degree):
            d1.append(i * u[:, 0] ** max(i - 1, 0) * u[:, 1] ** j if i else 0 * u[:, 0])
            d2.append(j * u[:, 0] ** i * u[:, 1] ** max(j - 1, 0) if j else 0 * u[:, 0])
        J1 = np.stack(d1, axis=1) @ self.coef / self.scale
        J2 = np.stack(d2, axis=1) @ self.coef / self.scale
        return np.stack([J1, J2], axis=-1)

    def invert(self, pts, guess, iters=8):
        kap = np.array(guess, dtype=float)
        for _ in range(iters):
            r = pts - self(kap)
            kap = kap + np.linalg.solve(self.jacobian(kap), r[..., None])[..., 0]
        return kap


def _degree_for(n, max_degree):
    for d in range(max_degree, 0, -1):
        if n >= 3 * (d + 1) * (d + 2) // 2:
            return d
    return 1


# --- charts ---------------------------------------------------------------------------

@dataclass
class LatticeChart:
    center: Value2
    base: Value2
    basis: np.ndarray                 # columns: lattice vectors at the center
    labels: np.ndarray                # (m, 2) integer labels
    indices: np.ndarray               # (m,) indices of the labeled points in the spectrum
    residual: float
    hbar: float
    radius: float
    poly: PolyMap = field(repr=False)
    k_center: np.ndarray = field(repr=False)
    spectrum_key: int = field(repr=False, default=0)
    n_window: int = 0

    def label_map(self) -> dict:
        return {int(i): (int(a), int(b)) for i, (a, b) in zip(self.indices, self.labels)}

    def jacobian_at(self, lam) -> np.ndarray:
        """d lambda / d k at the spectral point lam."""
        lam = np.asarray(lam, float).reshape(1, 2)
        kap = self.poly.invert(lam, self.k_center[None])
        return self.poly.jacobian(kap)[0]

    def relabeled(self, B) -> "LatticeChart":
        """Same chart with labels k -> B k (B in GL(2,Z))."""
        B = np.asarray(B, dtype=np.int64)
        Binv = _int_inverse(B)
        k = self.labels @ B.T
        poly = PolyMap.fit(k, _poly_points(self), self.poly.degree)
        return LatticeChart(self.center, self.base, self.basis @ Binv, k, self.indices,
                            self.residual, self.hbar, self.radius, poly, B @ self.k_center,
                            self.spectrum_key, self.n_window)

    def to_json(self) -> dict:
        return {"center": list(self.center), "basis": self.basis.tolist(),
                "residual": self.residual, "labels": int(len(self.labels)),
                "radius": self.radius, "hbar": self.hbar}


def _poly_points(chart):
    return chart.poly(chart.labels)


def window_radius(spec, center, target: int = 100, c0=None, max_frac: float = 0.7) -> float:
    """Radius holding ``target`` points, kept below max_frac * |center - c0|."""
    n = min(target, len(spec.points))
    d, _ = spec.tree.query(np.asarray(center, float), k=n)
    r = float(np.atleast_1d(d)[-1]) * (1 + 1e-9)
    if c0 is not None:
        r = min(r, max_frac * float(np.linalg.norm(np.asarray(center) - np.asarray(c0))))
    return r


def fit_chart(spec, center, radius: float | None = None, *, target: int = 100, c0=None,
              max_degree: int = 3, min_points: int = 30, grow: float = 1.5,
              accept: float = 0.3, r_min: float | None = None) -> LatticeChart:
    """Label the window around ``center`` by a local lattice chart.

    With ``c0`` given the center must keep ``r_min`` (default 25 hbar) away from it.
    """
    center = np.asarray(center, float)
    if c0 is not None:
        rmin = 25.0 * spec.hbar if r_min is None else r_min
        if np.linalg.norm(center - np.asarray(c0)) < rmin:
            raise InputError(f"chart center within r_min = {rmin:g} of the singular value")
    if radius is None:
        radius = window_radius(spec, center, target, c0)
    idx = np.sort(np.asarray(spec.tree.query_ball_point(center, radius), dtype=np.int64))
    m = len(idx)
    if m < min_points:
        raise DetectionError(f"window at {center.tolist()} (radius {radius:.4g}) holds {m} points; "
                             f"need {min_points}")
    P = spec.points[idx]
    ltree = cKDTree(P)
    b0 = int(np.argmin(np.linalg.norm(P - center, axis=1)))
    base = P[b0]

    # seed basis from the nearest neighbours of the base point
    _, nb = ltree.query(base, k=min(13, m))
    vecs = P[nb[1:]] - base
    v1 = vecs[0]
    v2 = None
    for d in vecs[1:]:
        if abs(v1[0] * d[1] - v1[1] * d[0]) > 0.3 * np.linalg.norm(v1) * np.linalg.norm(d):
            v2 = d
            break
    if v2 is None:
        raise DetectionError(f"no two independent lattice directions near {base.tolist()}")
    E, _ = gauss_reduce(np.stack([v1, v2], axis=1))

    kap = np.full((m, 2), np.nan)
    dist = np.linalg.norm(P - base, axis=1)
    r_stage = 2.5 * np.linalg.norm(E, axis=0).max()
    first = dist <= r_stage
    kap[first] = np.linalg.solve(E, (P[first] - base).T).T
    lab = np.rint(kap)
    good = first & (np.abs(kap - lab).max(axis=1) < accept)
    poly = None
    while True:
        n_good = int(good.sum())
        poly = PolyMap.fit(lab[good], P[good], _degree_for(n_good, max_degree))
        if r_stage >= radius:
            break
        r_stage = min(r_stage * grow, radius)
        new = (dist <= r_stage) & ~good
        if np.any(new):
            gi = np.where(good)[0]
            _, near = cKDTree(P[gi]).query(P[new])
            kn = lab[gi[near]]
            Jn = poly.jacobian(kn)
            guess = kn + np.linalg.solve(Jn, (P[new] - poly(kn))[..., None])[..., 0]
            kk = poly.invert(P[new], guess, iters=4)
            rk = np.rint(kk)
            ok = np.abs(kk - rk).max(axis=1) < accept
            w = np.where(new)[0]
            lab[w[ok]] = rk[ok]
            good[w[ok]] = True

    # final labeling pass over the whole window with the final fit
    kk = poly.invert(P, np.where(good[:, None], lab, poly.invert(P, np.zeros((m, 2)), 1)), iters=4)
    rk = np.rint(kk)
    good = np.abs(kk - rk).max(axis=1) < accept
    lab = rk
    if good.sum() < max(min_points, 0.9 * m):
        raise DetectionError(f"only {int(good.sum())} of {m} window points fit a lattice at "
                             f"{center.tolist()}")
    lab = lab[good].astype(np.int64)
    Pg, idx = P[good], idx[good]
    if len(np.unique(lab, axis=0)) != len(lab):
        raise DetectionError(f"duplicate labels in window at {center.tolist()}")

    poly = PolyMap.fit(lab, Pg, _degree_for(len(lab), max_degree))
    kc = poly.invert(center[None], np.zeros((1, 2)))[0]
    J = poly.jacobian(kc[None])[0]
    Bred, U = gauss_reduce(J)
    Uinv = _int_inverse(U)
    lab = lab @ Uinv.T
    poly = PolyMap.fit(lab, Pg, poly.degree)
    kc = Uinv @ kc
    basis = poly.jacobian(kc[None])[0]
    residual = float(np.linalg.norm(Pg - poly(lab), axis=1).max())
    colmin = float(np.linalg.norm(basis, axis=0).min())
    if residual >= 0.1 * colmin:
        raise DetectionError(f"window at {center.tolist()} is not a lattice: residual {residual:.3g} "
                             f">= 0.1 * {colmin:.3g}")
    bi = int(np.where((lab == 0).all(axis=1))[0][0]) if np.any((lab == 0).all(axis=1)) else 0
    return LatticeChart(Value2.of(center), Value2.of(Pg[bi]), basis, lab, idx, residual,
                        spec.hbar, float(radius), poly, kc, id(spec), m)


def chart_differentials(chart: LatticeChart) -> np.ndarray:
    """Jacobian of the actions 2 pi hbar k with respect to lambda at the chart center."""
    return TWO_PI * chart.hbar * np.linalg.inv(chart.basis)


# --- transitions -------------------------------------------------------------------------

@dataclass(frozen=True)
class TransitionMatrix:
    """k_b = entries @ k_a + offset on the overlap of two charts."""

    entries: np.ndarray
    offset: np.ndarray = field(default_factory=lambda: np.zeros(2, dtype=np.int64))
    deviation: float = 0.0
    jacobian_deviation: float = 0.0
    n_common: int = 0

    def __post_init__(self):
        e = np.asarray(self.entries)
        if not np.allclose(e, np.rint(e)):
            raise InputError("transition entries must be integers")
        e = np.rint(e).astype(np.int64)
        det = int(e[0, 0] * e[1, 1] - e[0, 1] * e[1, 0])
        if det not in (1, -1):
            raise InputError(f"transition {e.tolist()} has determinant {det}")
        object.__setattr__(self, "entries", e)
        object.__setattr__(self, "offset", np.rint(np.asarray(self.offset)).astype(np.int64))

    @property
    def det(self) -> int:
        e = self.entries
        return int(e[0, 0] * e[1, 1] - e[0, 1] * e[1, 0])

    def inverse(self) -> "TransitionMatrix":
        inv = _int_inverse(self.entries)
        return TransitionMatrix(inv, -inv @ self.offset, self.deviation, self.jacobian_deviation,
                                self.n_common)

    def then(self, other: "TransitionMatrix") -> "TransitionMatrix":
        """The map 'self, followed by other'."""
        return TransitionMatrix(other.entries @ self.entries,
                                other.entries @ self.offset + other.offset,
                                max(self.deviation, other.deviation),
                                max(self.jacobian_deviation, other.jacobian_deviation))

    def apply(self, k):
        return np.asarray(k) @ self.entries.T + self.offset


def identity_transition() -> TransitionMatrix:
    return TransitionMatrix(np.eye(2, dtype=np.int64))


def chart_transition(a: LatticeChart, b: LatticeChart, min_common: int = 10,
                     jacobian_tol: float = 0.1) -> TransitionMatrix:
    """Integral affine map between the labels of two overlapping charts."""
    if a.spectrum_key != b.spectrum_key:
        raise InputError("charts come from different spectra")
    common, ia, ib = np.intersect1d(a.indices, b.indices, return_indices=True)
    if len(common) < min_common:
        raise TransitionError(f"charts at {list(a.center)} and {list(b.center)} share "
                              f"{len(common)} labeled points; need {min_common}")
    ka, kb = a.labels[ia].astype(float), b.labels[ib].astype(float)
    X = np.hstack([ka, np.ones((len(ka), 1))])
    coef, *_ = np.linalg.lstsq(X, kb, rcond=None)
    C, d = coef[:2].T, coef[2]
    Ci, di = np.rint(C), np.rint(d)
    dev = float(max(np.abs(C - Ci).max(), np.abs(d - di).max()))
    if dev > 0.1:
        raise TransitionError(f"label map between charts at {list(a.center)} and {list(b.center)} "
                              f"is not integral (deviation {dev:.3g})")
    if not np.array_equal(ka @ Ci.T + di, kb):
        raise TransitionError(f"labels of charts at {list(a.center)} and {list(b.center)} are not "
                              "related by one affine map")
    # the same relation on chart Jacobians, evaluated at a common point
    mid = 0.5 * (np.asarray(a.center) + np.asarray(b.center))
    pts = a.poly(a.labels[ia])
    p = pts[int(np.argmin(np.linalg.norm(pts - mid, axis=1)))]
    M = np.linalg.solve(b.jacobian_at(p), a.jacobian_at(p))
    jdev = float(np.abs(M - Ci).max())
    if jdev > jacobian_tol:
        raise TransitionError(f"chart differentials at {p.tolist()} give a non-integral transition "
                              f"(deviation {jdev:.3g})")
    return TransitionMatrix(Ci, di, dev, jdev, len(common))


# --- monodromy -----------------------------------------------------------------------

@dataclass(frozen=True)
class Conjugacy:
    kind: str                   # "Identity", "Unipotent" or "Other"
    k: int | None = None
    trace: int | None = None

    def __str__(self):
        if self.kind == "Unipotent":
            return f"Unipotent({self.k})"
        if self.kind == "Other":
            return f"Other(trace={self.trace}, det={self.k})"
        return self.kind


def conjugacy_class(M) -> Conjugacy:
    """Normal form [[1, k], [0, 1]], k >= 0, up to GL(2,Z) conjugacy and inversion."""
    M = np.asarray(M, dtype=np.int64)
    det = int(M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0])
    tr = int(M[0, 0] + M[1, 1])
    if det == 1 and tr == 2:
        N = M - np.eye(2, dtype=np.int64)
        k = math.gcd(*(abs(int(x)) for x in N.ravel()))
        return Conjugacy("Identity") if k == 0 else Conjugacy("Unipotent", k)
    return Conjugacy("Other", det, tr)


@dataclass
class MonodromyResult:
    """Monodromy of a loop of charts.

    ``label_map`` is the product P of the transitions (k -> P k + d after one
    turn).  ``matrix`` is its transpose, the action on cycle coordinates:
    a normalized focus-focus loop gives [[1, +-1], [0, 1]] with the S^1
    cycle e1 invariant.
    """

    matrix: TransitionMatrix
    conjugacy: Conjugacy
    loop: PathInC
    label_map: TransitionMatrix
    charts: list = field(repr=False, default_factory=list)
    transitions: list = field(repr=False, default_factory=list)

    def to_json(self) -> dict:
        return {"matrix": self.matrix.entries.tolist(), "conjugacy": str(self.conjugacy),
                "label_map": self.label_map.entries.tolist(),
                "n_charts": len(self.charts),
                "max_deviation": max((t.deviation for t in self.transitions), default=0.0),
                "max_jacobian_deviation": max((t.jacobian_deviation for t in self.transitions),
                                              default=0.0)}


def chart_chain(spec, centers, *, closed: bool, radius=None, target: int = 100, c0=None,
                min_common: int = 10, max_subdivide: int = 6, jacobian_tol: float = 0.1,
                relabel=None, **fit_kw):
    """Charts along a center path, subdivided until neighbours overlap, plus transitions."""
    centers = [np.asarray(c, float) for c in centers]

    def fit(c):
        ch = fit_chart(spec, c, radius, target=target, c0=c0, **fit_kw)
        return ch.relabeled(relabel) if relabel is not None else ch

    charts = [fit(c) for c in centers]
    out_c, out_ch, trans = [centers[0]], [charts[0]], []
    nxt = list(zip(centers[1:] + ([centers[0]] if closed else []),
                   charts[1:] + ([charts[0]] if closed else [])))
    depth = {}
    stack = list(reversed(nxt))
    while stack:
        c, ch = stack.pop()
        prev = out_ch[-1]
        n_common = len(np.intersect1d(prev.indices, ch.indices))
        if n_common < max(min_common, 0.25 * min(len(prev.indices), len(ch.indices))):
            key = (tuple(out_c[-1]), tuple(c))
            dd = depth.get(key, 0)
            if dd >= max_subdivide:
                raise TransitionError(f"windows at {out_c[-1].tolist()} and {c.tolist()} do not "
                                      "overlap even after subdivision")
            mid = 0.5 * (out_c[-1] + c)
            mch = fit(mid)
            depth[(tuple(out_c[-1]), tuple(mid))] = dd + 1
            depth[(tuple(mid), tuple(c))] = dd + 1
            stack.append((c, ch))
            stack.append((mid, mch))
            continue
        try:
            trans.append(chart_transition(prev, ch, min_common, jacobian_tol))
        except TransitionError as exc:
            raise TransitionError(f"segment {len(trans)}: {exc}") from None
        out_c.append(c)
        out_ch.append(ch)
    if closed:
        out_c.pop()
        out_ch.pop()
    return out_c, out_ch, trans


def transport_loop(spec, centers: PathInC, radius=None, *, target: int = 100, c0=None,
                   relabel=None, **kw) -> MonodromyResult:
    """Monodromy of the chart labels around a closed loop of centers."""
    if not centers.closed:
        raise InputError("transport_loop needs a closed center path")
    cs, charts, trans = chart_chain(spec, list(centers.samples), closed=True, radius=radius,
                                    target=target, c0=c0, relabel=relabel, **kw)
    P = identity_transition()
    for t in trans:
        P = P.then(t)
    M = TransitionMatrix(P.entries.T)
    return MonodromyResult(M, conjugacy_class(M.entries), PathInC(np.array(cs), True), P,
                           charts, trans)


def dump_charts(charts) -> str:
    return json.dumps([c.to_json() for c in charts], indent=1, sort_keys=True)
