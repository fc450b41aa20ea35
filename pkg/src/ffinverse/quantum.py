"""Joint spectra: coupled spins, synthetic Bohr-Sommerfeld lattices, set distances."""

from __future__ import annotations

import csv
import functools
import io
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.spatial import cKDTree

from .errors import InputError, NumericalFailure
from .invariant import ActionModelParams, TaylorPoly, singular_action

log = logging.getLogger(__name__)

TWO_PI = 2.0 * np.pi


class JointSpectrum:
    """Joint eigenvalues (n, 2) at one value of hbar.

    ``labels`` is optional integer data attached by the synthetic generator.
    """

    def __init__(self, hbar: float, points, provenance: dict | None = None, labels=None,
                 dedupe_tol: float = 1e-13):
        if not (hbar > 0 and np.isfinite(hbar)):
            raise InputError(f"hbar must be positive, got {hbar}")
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        if not np.all(np.isfinite(pts)):
            raise InputError("spectrum contains non-finite points")
        keep = _dedupe(pts, dedupe_tol)
        self.hbar = float(hbar)
        self.points = pts[keep]
        self.labels = None if labels is None else np.asarray(labels, dtype=np.int64)[keep]
        self.provenance = dict(provenance or {"kind": "File"})

    def __len__(self):
        return len(self.points)

    @functools.cached_property
    def tree(self) -> cKDTree:
        return cKDTree(self.points)

    def transformed(self, L, c0=(0.0, 0.0)) -> "JointSpectrum":
        """Spectrum in normalized coordinates L (lambda - c0)."""
        pts = (self.points - np.asarray(c0)) @ np.asarray(L).T
        prov = dict(self.provenance, normalized=np.asarray(L).tolist())
        return JointSpectrum(self.hbar, pts, prov, self.labels)

    def restricted(self, center, r_in: float, r_out: float) -> np.ndarray:
        r = np.linalg.norm(self.points - np.asarray(center), axis=1)
        return self.points[(r >= r_in) & (r <= r_out)]


def _dedupe(pts, tol):
    if len(pts) < 2:
        return np.arange(len(pts))
    pairs = cKDTree(pts).query_pairs(tol, output_type="ndarray")
    if len(pairs) == 0:
        return np.arange(len(pts))
    drop = np.zeros(len(pts), dtype=bool)
    for i, j in pairs:
        if not drop[i]:
            drop[j] = True
    return np.where(~drop)[0]


# --- spins -------------------------------------------------------------------------

def _check_spin(j):
    if j < 0.5 or abs(2 * j - round(2 * j)) > 1e-12:
        raise InputError(f"spin {j} is not a positive half-integer")
    return round(2 * j) / 2


def _spin_sparse(j):
    """Sparse (S+, Sz) for spin j in the basis m = j, j-1, ..., -j (unnormalized)."""
    m = j - np.arange(int(round(2 * j)) + 1)
    plus = np.sqrt(j * (j + 1) - m[1:] * (m[1:] + 1))
    Sp = sp.diags(plus, 1, format="csr")
    Sz = sp.diags(m, 0, format="csr")
    return Sp, Sz, m


def spin_operators(j):
    """(Sx, Sy, Sz, hbar) with S/N, N = sqrt(j(j+1)), so that Sx^2 + Sy^2 + Sz^2 = 1."""
    j = _check_spin(j)
    N = math.sqrt(j * (j + 1))
    Sp, Sz, _ = _spin_sparse(j)
    Sp = Sp.toarray()
    Sx = (Sp + Sp.T) / (2 * N)
    Sy = (Sp - Sp.T) / (2j * N)
    return Sx.astype(complex), Sy, Sz.toarray().astype(complex) / N, 1.0 / N


def coupled_operators(j1, j2, t):
    """Sparse (J, H) on C^(2j1+1) x C^(2j2+1) and the m-values of the product basis."""
    j1, j2 = _check_spin(j1), _check_spin(j2)
    N1, N2 = math.sqrt(j1 * (j1 + 1)), math.sqrt(j2 * (j2 + 1))
    Sp1, Sz1, m1 = _spin_sparse(j1)
    Sp2, Sz2, m2 = _spin_sparse(j2)
    I1, I2 = sp.identity(len(m1), format="csr"), sp.identity(len(m2), format="csr")
    # J = (S1z + S2z)/N1: the classical J = z1 + R z2 with R = N2/N1
    Jop = (sp.kron(Sz1, I2) + sp.kron(I1, Sz2)) / N1
    # S1.S2 = S1z S2z + (S1+ S2- + S1- S2+)/2
    dot = sp.kron(Sz1, Sz2) + 0.5 * (sp.kron(Sp1, Sp2.T) + sp.kron(Sp1.T, Sp2))
    Hop = (1 - t) * sp.kron(Sz1, I2) / N1 + t * dot / (N1 * N2)
    mm1 = np.repeat(m1, len(m2))
    mm2 = np.tile(m2, len(m1))
    return Jop.tocsr(), Hop.tocsr(), mm1, mm2, 1.0 / N1


def joint_spectrum_coupled(j1, j2, t) -> JointSpectrum:
    """Joint spectrum of (J, H) for coupled spins, block-diagonalized by m1 + m2."""
    Jop, Hop, mm1, mm2, hbar = coupled_operators(j1, j2, t)
    comm = Jop @ Hop - Hop @ Jop
    cnorm = abs(comm).max() if comm.nnz else 0.0
    if cnorm > 1e-12:
        raise NumericalFailure(f"[J, H] = {cnorm:.3g}; operators do not commute")
    msum = mm1 + mm2
    Jdiag = Jop.diagonal()
    pts = []
    for m in np.unique(msum):
        idx = np.where(msum == m)[0]
        block = Hop[idx][:, idx].toarray()
        if np.abs(block - block.T).max() > 1e-14:
            raise NumericalFailure(f"H block m={m} is not symmetric")
        ev = np.linalg.eigvalsh(block)
        pts.append(np.stack([np.full(len(ev), Jdiag[idx[0]]), ev], axis=1))
    pts = np.vstack(pts)
    return JointSpectrum(hbar, pts, {"kind": "CoupledSpins", "j1": float(j1), "j2": float(j2),
                                     "t": float(t)})


# --- synthetic Bohr-Sommerfeld spectra -----------------------------------------------

@dataclass(frozen=True)
class Annulus:
    r_max: float = 0.3
    r_min_factor: float = 25.0          # r_min(hbar) = r_min_factor * hbar
    r_min_floor: float = 0.0
    center: tuple = (0.0, 0.0)

    def r_min(self, hbar: float) -> float:
        return max(self.r_min_factor * hbar, self.r_min_floor)


@dataclass(frozen=True)
class BSGenerator:
    """Lattice 2 pi hbar Z^2 pulled back by an action map.

    By default the actions are the focus-focus model A1 = 2 pi c1,
    A2 = K + S(c) - Im(c log c - c).  ``action_map`` replaces them by an
    arbitrary smooth invertible map (vectorized over (n, 2) arrays).
    ``g1`` is either a constant 2-vector or a callable c -> (n, 2).
    """

    action_params: ActionModelParams = field(
        default_factory=lambda: ActionModelParams(0.0, TaylorPoly(1), -1))
    hbars: Sequence[float] = (1e-3,)
    domain: Annulus = field(default_factory=Annulus)
    g1: object = None
    action_map: Callable | None = None
    jacobian: Callable | None = None


def _ff_a2(c1, c2, params: ActionModelParams, lift):
    # lift = 0: principal branch; lift = 1: cut on the positive real axis
    c = c1 + 1j * c2
    if lift:
        arg = np.mod(np.angle(c), TWO_PI)
        lg = np.log(np.abs(c)) + 1j * arg
        sing = -np.imag(c * lg - c)
    else:
        sing = singular_action(c1, c2)
    return params.K + sing + params.S(c1, c2)


def _ff_tau2(c1, c2, params):
    return params.S.gradient(c1, c2)[1] - 0.5 * np.log(c1 * c1 + c2 * c2)


def _column_roots(c1, lo, hi, hb, params, lift):
    """All c2 in [lo, hi] with A2(c1, c2) in 2 pi hbar Z (A2 increasing in c2)."""
    grid = np.linspace(lo, hi, 64)
    tau = _ff_tau2(np.full_like(grid, c1), grid, params)
    if np.any(tau <= 0):
        raise NumericalFailure(f"action map not invertible on column c1={c1:g} (tau2 <= 0)")
    a_lo, a_hi = _ff_a2(c1, lo, params, lift), _ff_a2(c1, hi, params, lift)
    k = np.arange(np.ceil(a_lo / (TWO_PI * hb)), np.floor(a_hi / (TWO_PI * hb)) + 1)
    if len(k) == 0:
        return np.empty(0), k
    target = TWO_PI * hb * k
    agrid = _ff_a2(c1, grid, params, lift)
    x = np.interp(target, agrid, grid)
    blo, bhi = np.full_like(x, lo), np.full_like(x, hi)
    for _ in range(60):
        f = _ff_a2(c1, x, params, lift) - target
        blo = np.where(f < 0, x, blo)
        bhi = np.where(f > 0, x, bhi)
        step = f / _ff_tau2(c1, x, params)
        xn = x - step
        out = (xn <= blo) | (xn >= bhi)
        xn = np.where(out, 0.5 * (blo + bhi), xn)
        if np.all(np.abs(f) < 1e-13):
            break
        x = xn
    return x, k.astype(np.int64)


def _apply_g1(pts, hb, g1):
    if g1 is None:
        return pts
    shift = g1(pts) if callable(g1) else np.broadcast_to(np.asarray(g1, float), pts.shape)
    return pts + hb * shift


def _synth_focus(gen: BSGenerator, hb: float):
    par = gen.action_params
    if par.branch != -1:
        log.info("focus-focus synthesis always uses the closed singular part; branch flag ignored")
    r_min, r_max = gen.domain.r_min(hb), gen.domain.r_max
    kmax = int(np.floor(r_max / hb))
    pts, labs = [], []
    skipped = 0
    for k1 in range(-kmax, kmax + 1):
        c1 = hb * k1
        h_out = math.sqrt(max(r_max ** 2 - c1 ** 2, 0.0))
        if abs(c1) >= r_min:
            pieces = [(-h_out, h_out, 0 if c1 > 0 else 1)]
        else:
            h_in = math.sqrt(r_min ** 2 - c1 ** 2)
            pieces = [(h_in, h_out, 0), (-h_out, -h_in, 1 if c1 < 0 else 0)]
        for lo, hi, lift in pieces:
            if hi <= lo:
                continue
            c2, k2 = _column_roots(c1, lo, hi, hb, par, lift)
            if len(c2) == 0:
                continue
            res = np.abs(_ff_a2(c1, c2, par, lift) - TWO_PI * hb * k2)
            ok = res < 1e-9
            skipped += int(np.sum(~ok))
            pts.append(np.stack([np.full(ok.sum(), c1), c2[ok]], axis=1))
            labs.append(np.stack([np.full(ok.sum(), k1), k2[ok]], axis=1))
    if skipped:
        log.warning("skipped %d lattice sites where Newton failed", skipped)
    pts, labs = np.vstack(pts), np.vstack(labs)
    r = np.linalg.norm(pts, axis=1)
    keep = (r >= r_min) & (r <= r_max)
    return pts[keep], labs[keep]


def _num_jac(A, x, h=1e-7):
    e1, e2 = np.array([h, 0.0]), np.array([0.0, h])
    d1 = (A(x + e1) - A(x - e1)) / (2 * h)
    d2 = (A(x + e2) - A(x - e2)) / (2 * h)
    return np.stack([d1, d2], axis=-1)


def _synth_generic(gen: BSGenerator, hb: float, n_grid: int = 200):
    A = gen.action_map
    jac = gen.jacobian or (lambda x: _num_jac(A, x))
    d = gen.domain
    r_min, r_max = d.r_min(hb), d.r_max
    g = np.linspace(-r_max, r_max, n_grid)
    X = np.array(np.meshgrid(g, g, indexing="ij")).reshape(2, -1).T + np.asarray(d.center)
    rr = np.linalg.norm(X - np.asarray(d.center), axis=1)
    X = X[(rr <= r_max) & (rr >= r_min)]
    dets = np.linalg.det(jac(X))
    if np.any(np.abs(dets) < 1e-12) or (np.any(dets > 0) and np.any(dets < 0)):
        raise NumericalFailure("action map is not invertible on the domain (Jacobian check)")
    AX = A(X) / (TWO_PI * hb)
    kmin, kmax = np.floor(AX.min(axis=0)) - 1, np.ceil(AX.max(axis=0)) + 1
    kk = np.array(np.meshgrid(np.arange(kmin[0], kmax[0] + 1), np.arange(kmin[1], kmax[1] + 1),
                              indexing="ij")).reshape(2, -1).T
    _, near = cKDTree(AX).query(kk)
    x = X[near].copy()
    target = TWO_PI * hb * kk
    for _ in range(50):
        f = A(x) - target
        if np.all(np.abs(f) < 1e-13):
            break
        x = x - np.linalg.solve(jac(x), f[..., None])[..., 0]
    res = np.linalg.norm(A(x) - target, axis=1)
    rr = np.linalg.norm(x - np.asarray(d.center), axis=1)
    tol = 1e-9
    ok = (res < tol) & (rr <= r_max + 1e-12) & (rr >= r_min - 1e-12)
    # far sites whose nearest sample was outside the domain simply fail to land inside it
    return x[ok], kk[ok].astype(np.int64)


def bs_synthesize(gen: BSGenerator) -> list:
    """Synthetic joint spectra g_hbar(2 pi hbar Z^2 ∩ D), one per hbar."""
    out = []
    for hb in gen.hbars:
        if not hb > 0:
            raise InputError(f"hbar must be positive, got {hb}")
        if gen.action_map is None:
            pts, labs = _synth_focus(gen, hb)
            kind = {"kind": "Synthetic", "model": "focus-focus",
                    "K": gen.action_params.K, "S": gen.action_params.S.to_json()}
        else:
            pts, labs = _synth_generic(gen, hb)
            kind = {"kind": "Synthetic", "model": "custom"}
        kind["r_min"] = gen.domain.r_min(hb)
        kind["r_max"] = gen.domain.r_max
        shifted = _apply_g1(pts, hb, gen.g1)
        out.append(JointSpectrum(hb, shifted, kind, labs))
    return out


# --- distances --------------------------------------------------------------------

def hausdorff_distance(A, B) -> float:
    """max(sup_a d(a, B), sup_b d(b, A)) for finite point sets."""
    A = np.asarray(A, float).reshape(-1, 2)
    B = np.asarray(B, float).reshape(-1, 2)
    if len(A) == 0 or len(B) == 0:
        raise InputError("Hausdorff distance of an empty set")
    dA, _ = cKDTree(B).query(A)
    dB, _ = cKDTree(A).query(B)
    return float(max(dA.max(), dB.max()))


def hbar_order_fit(pairs) -> tuple:
    """Slope and prefactor of log d = log C + N log hbar; (inf, 0) when all d vanish."""
    pairs = np.asarray(pairs, float)
    if len(np.unique(pairs[:, 0])) < 3:
        raise InputError("need at least 3 distinct hbar values")
    pos = pairs[pairs[:, 1] > 0]
    if len(pos) < 2:
        return math.inf, 0.0
    slope, icpt = np.polyfit(np.log(pos[:, 0]), np.log(pos[:, 1]), 1)
    return float(slope), float(np.exp(icpt))


# --- CSV ----------------------------------------------------------------------------

def spectra_to_csv(specs) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["hbar", "lambda1", "lambda2"])
    for s in specs:
        for p in s.points:
            w.writerow([repr(s.hbar), repr(float(p[0])), repr(float(p[1]))])
    return buf.getvalue()


def spectra_from_csv(text: str) -> list:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or [h.strip() for h in rows[0]] != ["hbar", "lambda1", "lambda2"]:
        raise InputError("spectrum CSV must start with the header hbar,lambda1,lambda2")
    groups: dict = {}
    for n, r in enumerate(rows[1:], start=2):
        if not r:
            continue
        try:
            hb, a, b = (float(x) for x in r)
        except ValueError as exc:
            raise InputError(f"line {n}: {exc}") from None
        groups.setdefault(hb, []).append((a, b))
    if not groups:
        raise InputError("spectrum CSV has no rows")
    return [JointSpectrum(hb, pts, {"kind": "File"}) for hb, pts in sorted(groups.items(),
                                                                          reverse=True)]
