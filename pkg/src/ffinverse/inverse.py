"""From joint spectra to the Taylor series invariant, and comparison of two systems.

The spectral pipeline labels the spectrum by lattice charts on a few rings
around the singular value, transports the labels along a tree of
overlapping charts, fixes the basis of actions with the monodromy (the
single-valued action is the S^1 one), reads the rotation numbers off the
action differentials and fits S to the regularized form.  The classical
pipeline computes the same form from Hamiltonian flows on a grid.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError, NumericalFailure, StructuralError
from .flows import PathInC, rotation_numbers_batch
from .invariant import (PAIRINGS, ConventionChoice, SigmaGrid, TaylorPoly, closedness_residual,
                        fit_gradient, monomials, regularize_arrays, select_convention,
                        unwrap_to_reference)
from .lattice import (LatticeChart, MonodromyResult, TransitionMatrix, _int_inverse, chart_chain,
                      chart_differentials, conjugacy_class, identity_transition, window_radius)
from .models import ClassicalModel, quadratic_normalization
from .quantum import JointSpectrum, hbar_order_fit

log = logging.getLogger(__name__)

TWO_PI = 2.0 * np.pi


# --- basis fixing ----------------------------------------------------------------------

def _primitive(v) -> np.ndarray:
    v = np.asarray(v, dtype=np.int64)
    g = math.gcd(abs(int(v[0])), abs(int(v[1])))
    return v // g


def _complete(u) -> np.ndarray:
    """Integer w with det [u; w] = 1 for a primitive row u (extended Euclid)."""
    p, q = int(u[0]), int(u[1])
    # find x, y with p y - q x = 1
    old_r, r = p, -q
    old_s, s = 1, 0
    old_t, t = 0, 1
    while r:
        k = old_r // r
        old_r, r = r, old_r - k * r
        old_s, s = s, old_s - k * s
        old_t, t = t, old_t - k * t
    # old_s * p + old_t * (-q) = old_r = +-1
    y, x = old_s * old_r, old_t * old_r
    assert p * y - q * x == 1
    return np.array([x, y], dtype=np.int64)


def fix_basis(monodromy: MonodromyResult, charts=None) -> TransitionMatrix:
    """Change of labels k -> B k that puts the root chart in the normal basis.

    Row 1 of B is the action invariant under the monodromy, oriented so that
    dI1/dc1 > 0; row 2 completes it in GL(2,Z) with tau2 > 0 and
    0 <= tau1 < dI1/dc1 (about 2 pi) at the root chart center.
    """
    M = monodromy.matrix.entries
    cls = conjugacy_class(M)
    if cls.kind != "Unipotent":
        raise StructuralError(f"monodromy {M.tolist()} is {cls}; not a focus-focus loop")
    if cls.k != 1:
        raise StructuralError(f"monodromy {M.tolist()} is {cls}; only a simple focus-focus "
                              "point (k = 1) is supported")
    charts = monodromy.charts if charts is None else charts
    if not charts:
        raise InputError("fix_basis needs the root chart")
    D0 = chart_differentials(charts[0])
    N = M - np.eye(2, dtype=np.int64)
    # invariant column vector of M: kernel of N
    row = N[0] if np.any(N[0]) else N[1]
    u = _primitive(np.array([-row[1], row[0]]))
    if (u @ D0)[0] < 0:
        u = -u
    w = _complete(u)
    if (w @ D0)[1] < 0:
        w = -w
    a = (u @ D0)[0]
    w = w - int(math.floor((w @ D0)[0] / a)) * u
    return TransitionMatrix(np.stack([u, w]))


# --- chart network -----------------------------------------------------------------

@dataclass
class _Node:
    center: np.ndarray
    chart: LatticeChart
    frame: TransitionMatrix      # root labels -> node labels
    angle: float                 # continuous polar angle of the center
    ring: int


def _n_ring_nodes(spec, radius, c0, target, r_min, min_nodes=12):
    w = window_radius(spec, (radius, 0.0), target, c0)
    return max(min_nodes, int(math.ceil(TWO_PI * radius / (0.8 * w))))


def _chain_frames(charts, transitions, start: TransitionMatrix):
    frames = [start]
    for t in transitions:
        frames.append(frames[-1].then(t))
    return frames[:len(charts)]


def _network(spec, radii, main: int, c0, *, target, r_min, relabel, theta0=0.0, nodes=None,
             fit_kw=None):
    """Charts along rings of the given radii, joined by a radial chain at theta0."""
    fit_kw = dict(fit_kw or {})
    kw = dict(target=target, c0=c0, r_min=r_min, relabel=relabel, **fit_kw)
    c0 = np.asarray(c0, float)
    radii = list(radii)
    rm = radii[main]

    def ring_centers(r, n):
        th = theta0 + TWO_PI * np.arange(n) / n
        return c0 + r * np.stack([np.cos(th), np.sin(th)], axis=1), th

    n_main = nodes[main] if nodes else _n_ring_nodes(spec, rm, c0, target, r_min)
    cs, th = ring_centers(rm, n_main)
    mc, mch, mtr = chart_chain(spec, list(cs), closed=True, **kw)
    P = identity_transition()
    for t in mtr:
        P = P.then(t)
    M = TransitionMatrix(P.entries.T)
    mono = MonodromyResult(M, conjugacy_class(M.entries), PathInC(np.array(mc), True), P, mch, mtr)

    out = []
    frames = _chain_frames(mch, mtr, identity_transition())
    for c, ch, f in zip(mc, mch, frames):
        out.append(_Node(c, ch, f, theta0 + _angle_from(c - c0, theta0), main))

    # radial chain through every ring radius at theta0
    e = np.array([math.cos(theta0), math.sin(theta0)])
    for side in (sorted([r for r in radii if r > rm]), sorted([r for r in radii if r < rm],
                                                            reverse=True)):
        if not side:
            continue
        path = [c0 + rm * e] + [c0 + r * e for r in side]
        rc, rch, rtr = chart_chain(spec, path, closed=False, **kw)
        rframes = _chain_frames(rch, rtr, identity_transition())
        for r in side:
            k = int(np.argmin([abs(np.linalg.norm(c - c0) - r) for c in rc]))
            ring = radii.index(r)
            n = nodes[ring] if nodes else _n_ring_nodes(spec, r, c0, target, r_min)
            cs_r, _ = ring_centers(r, n)
            oc, och, otr = chart_chain(spec, list(cs_r), closed=False, **kw)
            for c, ch, f in zip(oc, och, _chain_frames(och, otr, rframes[k])):
                out.append(_Node(c, ch, f, theta0 + _angle_from(c - c0, theta0), ring))
    return out, mono


def _angle_from(v, theta0):
    return float(np.mod(np.arctan2(v[1], v[0]) - theta0, TWO_PI))


def _node_differentials(nodes, B: TransitionMatrix):
    """Action differentials in the fixed basis; rows dI1, dI2 as functions of c."""
    out = []
    for n in nodes:
        D = chart_differentials(n.chart)
        # k_node = F k_root + d  =>  d(k_root) = F^-1 d(k_node)
        out.append(B.entries @ _int_inverse(n.frame.entries) @ D)
    return np.array(out)


# --- reports -----------------------------------------------------------------------

@dataclass
class ReconstructionReport:
    S: TaylorPoly
    monodromy: MonodromyResult
    sigma1_at_0: float
    basis_fix: TransitionMatrix
    convention: ConventionChoice
    hbar: float
    diagnostics: dict = field(default_factory=dict)
    samples: tuple = field(default=None, repr=False)     # (c, tau) arrays
    root_differential: np.ndarray = field(default=None, repr=False)

    def to_json(self) -> dict:
        return {"order": self.S.order, "coeffs": self.S.to_json(),
                "stderr": [{"i": i, "j": j, "value": v} for (i, j), v in sorted(self.S.stderr.items())],
                "sigma1_at_0": self.sigma1_at_0, "pairing": self.convention.pairing,
                "epsilon": self.convention.epsilon, "residuals": self.convention.residuals,
                "monodromy": self.monodromy.to_json(), "basis_fix": self.basis_fix.entries.tolist(),
                "hbar": self.hbar, "diagnostics": self.diagnostics}


def _normalize_sigma1(S: TaylorPoly) -> TaylorPoly:
    """Shift the (1, 0) coefficient (sigma1(0)) into [0, 2 pi)."""
    co = dict(S.coeffs)
    co[(1, 0)] = float(np.mod(co[(1, 0)], TWO_PI))
    return TaylorPoly(S.order, co, S.residual, S.stderr)


def _fit_convention(cs, taus, angles, N):
    fits = {}

    def score(p, e):
        sig = regularize_arrays(cs, taus, e, arg_lift=angles)
        fits[(p, e)] = fit_gradient(cs, sig, N, p)
        return fits[(p, e)].residual

    choice = select_convention(score)
    return choice, fits[(choice.pairing, choice.epsilon)]


def _cloud_radius(spec, n_sectors=16):
    """Largest circle around 0 that stays inside the point cloud."""
    th = np.arctan2(spec.points[:, 1], spec.points[:, 0])
    r = np.linalg.norm(spec.points, axis=1)
    sect = np.floor((th + np.pi) / (TWO_PI / n_sectors)).astype(int)
    return float(min(r[sect == s].max() for s in range(n_sectors) if np.any(sect == s)))


def _default_annulus(spec, target, r_min):
    w = float(np.median(spec.tree.query(spec.points[:: max(1, len(spec) // 200)], k=target)[0][:, -1]))
    r_out = _cloud_radius(spec) - 2 * w
    r_in = r_min + 2 * w
    return r_in, r_out


def reconstruct_invariant(specs, c0=(0.0, 0.0), N: int = 3, *, L=None, annulus=None,
                          n_rings: int = 4, target: int = 100, relabel=None, r_min=None,
                          fit_kw=None) -> ReconstructionReport:
    """Taylor series invariant S from a family of joint spectra (smallest hbar is used).

    With ``L`` the spectra are first mapped to L (lambda - c0); otherwise to
    lambda - c0.  Either way the first action is expected to be 2 pi c1, and
    its measured deviation is reported.  ``relabel`` (an integer matrix)
    scrambles every chart's labels before transport, for gauge checks.
    """
    if not specs:
        raise InputError("need at least one spectrum")
    if not 1 <= N <= 4:
        raise InputError("Taylor order must be in 1..4")
    spec = min(specs, key=lambda s: s.hbar)
    spec = spec.transformed(np.eye(2) if L is None else L, c0)
    hb = spec.hbar
    rmin = 25.0 * hb if r_min is None else float(r_min)
    r_in, r_out = annulus if annulus is not None else _default_annulus(spec, target, rmin)
    if not r_out > r_in:
        raise InputError(f"no annulus admits charts at hbar={hb:g}: r_in={r_in:.3g} >= r_out={r_out:.3g}")
    radii = list(np.linspace(r_in, r_out, n_rings)) if n_rings > 1 else [0.5 * (r_in + r_out)]
    main = len(radii) // 2
    nodes, mono = _network(spec, radii, main, (0.0, 0.0), target=target, r_min=rmin,
                           relabel=relabel, fit_kw=fit_kw)
    root = mono.charts[0]
    B = fix_basis(mono, [root])
    D = _node_differentials(nodes, B)
    cs = np.array([n.center for n in nodes])
    taus = D[:, 1, :]
    angles = np.array([n.angle for n in nodes])
    first_dev = float(np.abs(D[:, 0, :] - np.array([TWO_PI, 0.0])).max() / TWO_PI)
    if np.any(taus[:, 1] <= 0):
        raise NumericalFailure("recovered tau2 is not positive on the whole annulus")
    choice, S = _fit_convention(cs, taus, angles, N)
    S = _normalize_sigma1(S)
    diag = {"n_charts": len(nodes), "n_ring_charts": len(mono.charts),
            "annulus": [float(r_in), float(r_out)], "r_min": rmin,
            "first_action_deviation": first_dev, "fit_residual": S.residual,
            "max_transition_deviation": max(t.deviation for t in mono.transitions),
            "max_jacobian_deviation": max(t.jacobian_deviation for t in mono.transitions),
            "max_chart_residual": max(n.chart.residual / np.linalg.norm(n.chart.basis, axis=0).min()
                                      for n in nodes)}
    return ReconstructionReport(S, mono, S.coeffs[(1, 0)], B, choice, hb, diag, (cs, taus),
                                chart_differentials(root))


def ring_rotation_numbers(spec, radius: float, n: int, c0=(0.0, 0.0), *, L=None, target: int = 100,
                          r_min=None, theta0: float = 0.0, fit_kw=None):
    """Spectral (tau1, tau2) at n equally spaced values on a ring of the given radius.

    Returns (cs, taus) in the coordinates L (lambda - c0); tau1 is reduced to [0, 2 pi).
    """
    spec = spec.transformed(np.eye(2) if L is None else L, c0)
    rmin = 25.0 * spec.hbar if r_min is None else float(r_min)
    m = max(1, int(math.ceil(_n_ring_nodes(spec, radius, (0, 0), target, rmin) / n)))
    nodes, mono = _network(spec, [radius], 0, (0.0, 0.0), target=target, r_min=rmin,
                           relabel=None, theta0=theta0, nodes=[n * m], fit_kw=fit_kw)
    B = fix_basis(mono, [mono.charts[0]])
    th = theta0 + TWO_PI * np.arange(n) / n
    want = radius * np.stack([np.cos(th), np.sin(th)], axis=1)
    pick = [int(np.argmin(np.linalg.norm([nd.center for nd in nodes] - w, axis=1))) for w in want]
    D = _node_differentials([nodes[i] for i in pick], B)
    taus = D[:, 1, :].copy()
    taus[:, 0] = np.mod(taus[:, 0], TWO_PI)
    return want, taus


# --- comparison ------------------------------------------------------------------------

@dataclass(frozen=True)
class Verdict:
    kind: str                 # "Match", "Mismatch" or "HypothesisFailed"
    tol: float
    degree: int | None = None

    def __str__(self):
        if self.kind == "Mismatch":
            return f"Mismatch(degree={self.degree})"
        if self.kind == "Match":
            return f"Match(tol={self.tol:g})"
        return "HypothesisFailed"


@dataclass
class ComparisonReport:
    distances: list            # (hbar, Hausdorff distance)
    exponent: float | None
    prefactor: float | None
    B: TransitionMatrix
    S_A: TaylorPoly
    S_B: TaylorPoly
    deltas: dict
    verdict: Verdict
    notes: list = field(default_factory=list)
    reports: tuple = field(default=None, repr=False)

    def to_json(self) -> dict:
        return {"distances": [[h, d] for h, d in self.distances],
                "exponent": None if self.exponent is None or math.isinf(self.exponent) else self.exponent,
                "exponent_infinite": bool(self.exponent is not None and math.isinf(self.exponent)),
                "prefactor": self.prefactor, "B": self.B.entries.tolist(),
                "S_A": self.S_A.to_json(), "S_B": self.S_B.to_json(),
                "deltas": [{"i": i, "j": j, "value": v} for (i, j), v in sorted(self.deltas.items())],
                "verdict": str(self.verdict), "notes": self.notes}


def _annulus_distance(A: JointSpectrum, B: JointSpectrum, r_in, r_out):
    """Hausdorff distance on the annulus; boundary layers only serve as targets."""
    margin = 3.0 * float(np.median(A.tree.query(A.points[:: max(1, len(A) // 200)], k=2)[0][:, 1]))
    def inner(S):
        r = np.linalg.norm(S.points, axis=1)
        return S.points[(r >= r_in + margin) & (r <= r_out - margin)]
    a_in, b_in = inner(A), inner(B)
    if len(a_in) == 0 or len(b_in) == 0:
        raise InputError("annulus holds no spectral points")
    dA, _ = B.tree.query(a_in)
    dB, _ = A.tree.query(b_in)
    return float(max(dA.max(), dB.max()))


def _pair_hbars(specsA, specsB):
    pairs = []
    for a in specsA:
        m = [b for b in specsB if abs(b.hbar - a.hbar) <= 1e-9 * a.hbar]
        if not m:
            raise InputError(f"no spectrum with hbar={a.hbar:g} in the second family")
        pairs.append((a, m[0]))
    return sorted(pairs, key=lambda p: p[0].hbar)


def compare_systems(specsA, specsB, annulus=None, tol: float = 0.01, N: int = 3, c0=(0.0, 0.0), *,
                    L_A=None, L_B=None, **kw) -> ComparisonReport:
    """Decide whether two spectrum families share the Taylor series invariant up to order N."""
    pairs = _pair_hbars(specsA, specsB)
    notes = []
    TA = [a.transformed(np.eye(2) if L_A is None else L_A, c0) for a, _ in pairs]
    TB = [b.transformed(np.eye(2) if L_B is None else L_B, c0) for _, b in pairs]
    if L_A is None and L_B is None:
        notes.append("spectrum-only comparison: both families are assumed to share c-coordinates")
    distances = []
    for a, b in zip(TA, TB):
        if annulus is not None:
            r_in, r_out = annulus
        else:
            r_in, r_out = 25.0 * a.hbar, min(_cloud_radius(a), _cloud_radius(b))
        distances.append((a.hbar, _annulus_distance(a, b, r_in, r_out)))
    exponent = prefactor = None
    if len(distances) >= 3:
        exponent, prefactor = hbar_order_fit(distances)
    else:
        notes.append("fewer than 3 hbar values: no order fit")
    recA = reconstruct_invariant(TA, (0.0, 0.0), N, annulus=annulus, **kw)
    recB = reconstruct_invariant(TB, (0.0, 0.0), N, annulus=annulus, **kw)
    Bm = np.rint(recA.root_differential @ np.linalg.inv(recB.root_differential))
    try:
        Bt = TransitionMatrix(Bm)
    except InputError:
        raise NumericalFailure(f"action differentials of the two systems are not related by "
                               f"GL(2,Z): {Bm.tolist()}") from None
    deltas, bad = {}, []
    for m in monomials(N):
        d = recA.S.coeffs[m] - recB.S.coeffs[m]
        deltas[m] = d
        if abs(d) > tol + recA.S.stderr[m] + recB.S.stderr[m]:
            bad.append(sum(m))
    if bad:
        verdict = Verdict("Mismatch", tol, min(bad))
    elif exponent is not None and exponent < 1 - 1e-6:
        verdict = Verdict("HypothesisFailed", tol)
    else:
        verdict = Verdict("Match", tol)
    if exponent is not None and exponent < 1.6:
        notes.append(f"spectra agree only to order hbar^{exponent:.3g}; the O(hbar^2) hypothesis "
                     "does not hold")
    return ComparisonReport(distances, exponent, prefactor, Bt, recA.S, recB.S, deltas, verdict,
                            notes, (recA, recB))


# --- classical pipeline ------------------------------------------------------------

@dataclass
class ClassicalInvariantReport:
    S: TaylorPoly
    convention: ConventionChoice
    sigma1_at_0: float
    residuals: dict          # "(pairing, eps)" -> (residual at h, residual at h/2)
    spacing: float
    annulus: tuple
    samples: tuple = field(default=None, repr=False)

    @property
    def accepted(self) -> tuple:
        return self.residuals[f"{self.convention.pairing},{self.convention.epsilon:+d}"]

    @property
    def ratio(self) -> float:
        r = self.accepted
        return r[0] / r[1]

    @property
    def rejected_factor(self) -> float:
        """Residual of the other pairing (same eps) over the accepted one, at h/2."""
        other = [p for p in PAIRINGS if p != self.convention.pairing][0]
        return self.residuals[f"{other},{self.convention.epsilon:+d}"][1] / self.accepted[1]

    def to_json(self) -> dict:
        return {"order": self.S.order, "coeffs": self.S.to_json(), "sigma1_at_0": self.sigma1_at_0,
                "pairing": self.convention.pairing, "epsilon": self.convention.epsilon,
                "residuals": {k: list(v) for k, v in self.residuals.items()},
                "spacing": self.spacing, "annulus": list(self.annulus),
                "convergence_ratio": self.ratio, "rejected_factor": self.rejected_factor}


def classical_invariant(model: ClassicalModel, N: int = 3, h: float = 0.03,
                        annulus=(0.15, 0.35), rtol: float = 1e-12) -> ClassicalInvariantReport:
    """S from Hamiltonian flows on a grid of normalized values in an annulus.

    Rotation numbers are computed on the grid of spacing h/2; the closedness
    residual is evaluated with both spacings at the nodes of the coarse grid,
    which gives the convergence ratio of the stencil.
    """
    quadratic_normalization(model)
    r_in, r_out = annulus
    if not 0 < r_in < r_out:
        raise InputError(f"bad annulus {annulus}")
    hf = h / 2
    n = int(math.ceil((r_out + 2 * h) / h))
    g = hf * np.arange(-2 * n, 2 * n + 1)
    C1, C2 = np.meshgrid(g, g, indexing="ij")
    r = np.hypot(C1, C2)
    mask = (r >= r_in - h) & (r <= r_out + h)
    cs = np.stack([C1[mask], C2[mask]], axis=1)
    taus = rotation_numbers_batch(model, cs, rtol=rtol)
    if np.any(taus[:, 1] <= 0):
        raise NumericalFailure("tau2 is not positive on the annulus")
    core = np.hypot(cs[:, 0], cs[:, 1])
    core = (core >= r_in) & (core <= r_out)
    coarse = np.zeros_like(mask)
    coarse[::2, ::2] = True
    nodes = np.stack([C1[coarse & mask], C2[coarse & mask]], axis=1)
    rn = np.hypot(nodes[:, 0], nodes[:, 1])
    nodes = nodes[(rn >= r_in) & (rn <= r_out)]

    residuals = {}
    for e in (1, -1):
        sig = regularize_arrays(cs, taus, e)
        sig[:, 0] = unwrap_to_reference(sig[:, 0])
        s1 = np.full(C1.shape, np.nan)
        s2 = s1.copy()
        s1[mask], s2[mask] = sig[:, 0], sig[:, 1]
        fine = SigmaGrid(g, g, s1, s2)
        crs = SigmaGrid(g[::2], g[::2], s1[::2, ::2], s2[::2, ::2])
        for p in PAIRINGS:
            residuals[f"{p},{e:+d}"] = (closedness_residual(crs, p, nodes),
                                        closedness_residual(fine, p, nodes))
    choice = select_convention(lambda p, e: residuals[f"{p},{e:+d}"][1])
    choice = ConventionChoice(choice.pairing, choice.epsilon,
                              {k: v[1] for k, v in residuals.items()})
    sig = regularize_arrays(cs, taus, choice.epsilon)
    sig[:, 0] = unwrap_to_reference(sig[:, 0])
    S = _normalize_sigma1(fit_gradient(cs[core], sig[core], N, choice.pairing))
    return ClassicalInvariantReport(S, choice, S.coeffs[(1, 0)], residuals, h, (r_in, r_out),
                                    (cs, taus))
