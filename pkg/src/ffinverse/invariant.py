"""Log-regularized rotation numbers sigma, closedness checks and the Taylor fit of S.

With log_eps(c) = log(c1 + i eps c2):

    sigma1 = tau1 - Im log_eps(c),    sigma2 = tau2 + Re log_eps(c).

The index pairing ("standard": sigma1 dc1 + sigma2 dc2, "swapped":
sigma2 dc1 + sigma1 dc2) and eps are not fixed a priori; ``select_convention``
picks the combination whose form is closed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InputError
from .models import Value2

PAIRINGS = ("standard", "swapped")


@dataclass(frozen=True)
class SigmaSample:
    c: Value2
    sigma1: float
    sigma2: float
    branch: int = 0     # number of 2 pi turns of the log away from the principal branch
    epsilon: int = 1


@dataclass(frozen=True)
class TaylorPoly:
    """Polynomial S(c) = sum coeffs[(i, j)] c1^i c2^j with 1 <= i + j <= order."""

    order: int
    coeffs: dict = field(default_factory=dict)
    residual: float = 0.0
    stderr: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.order < 1:
            raise InputError("Taylor order must be at least 1")
        if (0, 0) in self.coeffs:
            raise InputError("S has no constant term")
        full = {m: float(self.coeffs.get(m, 0.0)) for m in monomials(self.order)}
        extra = set(self.coeffs) - set(full)
        if extra:
            raise InputError(f"monomials {sorted(extra)} exceed order {self.order}")
        object.__setattr__(self, "coeffs", full)

    def __call__(self, c1, c2):
        c1, c2 = np.asarray(c1, float), np.asarray(c2, float)
        return sum(v * c1 ** i * c2 ** j for (i, j), v in self.coeffs.items())

    def gradient(self, c1, c2):
        c1, c2 = np.asarray(c1, float), np.asarray(c2, float)
        d1 = sum(i * v * c1 ** (i - 1) * c2 ** j for (i, j), v in self.coeffs.items() if i)
        d2 = sum(j * v * c1 ** i * c2 ** (j - 1) for (i, j), v in self.coeffs.items() if j)
        return np.asarray(d1 + 0 * c1), np.asarray(d2 + 0 * c1)

    def significant(self, k: float = 3.0) -> dict:
        """Coefficients larger than k standard errors."""
        return {m: abs(v) > k * self.stderr.get(m, 0.0) for m, v in self.coeffs.items()}

    def to_json(self) -> list:
        return [{"i": i, "j": j, "value": v} for (i, j), v in sorted(self.coeffs.items())]


def monomials(order: int) -> list:
    return [(i, d - i) for d in range(1, order + 1) for i in range(d, -1, -1)]


@dataclass(frozen=True)
class ActionModelParams:
    K: float
    S: TaylorPoly
    branch: int = 1


def log_eps(c1, c2, epsilon: int = 1, arg_lift=None):
    """(Re, Im) of log(c1 + i eps c2); ``arg_lift`` supplies a continuous arg(c1 + i c2)."""
    c1, c2 = np.asarray(c1, float), np.asarray(c2, float)
    re = 0.5 * np.log(c1 * c1 + c2 * c2)
    arg = np.arctan2(c2, c1) if arg_lift is None else np.asarray(arg_lift, float)
    return re, epsilon * arg


def regularize_sigma(c, taus, branch: int = 1, arg_lift=None) -> SigmaSample:
    """sigma from (tau1, tau2) at c for orientation ``branch`` = eps."""
    c = Value2.of(c)
    t1, t2 = (taus.tau1, taus.tau2) if hasattr(taus, "tau1") else taus
    re, im = log_eps(c.c1, c.c2, branch, arg_lift)
    principal = np.arctan2(c.c2, c.c1)
    turns = 0 if arg_lift is None else int(np.rint((float(arg_lift) - principal) / (2 * np.pi)))
    return SigmaSample(c, float(t1 - im), float(t2 + re), turns, branch)


def regularize_arrays(cs, taus, epsilon: int, arg_lift=None):
    """Vectorized sigma for (n, 2) arrays of values and rotation numbers."""
    cs, taus = np.asarray(cs, float), np.asarray(taus, float)
    re, im = log_eps(cs[:, 0], cs[:, 1], epsilon, arg_lift)
    return np.stack([taus[:, 0] - im, taus[:, 1] + re], axis=1)


def unwrap_to_reference(values, period: float = 2 * np.pi, reference=None):
    """Shift each value by multiples of ``period`` into (ref - period/2, ref + period/2]."""
    v = np.asarray(values, float)
    if reference is None:
        reference = np.angle(np.mean(np.exp(2j * np.pi * v[np.isfinite(v)] / period))) * period / (2 * np.pi)
    return reference + np.mod(v - reference + period / 2, period) - period / 2


@dataclass(frozen=True)
class SigmaGrid:
    """sigma on a rectangular grid; NaN marks nodes that were not sampled."""

    c1: np.ndarray
    c2: np.ndarray
    sigma1: np.ndarray   # shape (len(c1), len(c2))
    sigma2: np.ndarray

    @property
    def spacing(self) -> float:
        return float(self.c1[1] - self.c1[0])


def closedness_residual(grid: SigmaGrid, pairing: str = "standard", nodes=None) -> float:
    """Max centered-difference curl over interior nodes whose four neighbors are sampled.

    ``nodes`` ((n, 2) values) restricts the maximum to those grid nodes, so that
    stencils of different spacing can be compared at the same points.
    """
    if pairing not in PAIRINGS:
        raise InputError(f"unknown pairing {pairing!r}")
    s1, s2 = np.asarray(grid.sigma1, float), np.asarray(grid.sigma2, float)
    if s1.shape[0] < 3 or s1.shape[1] < 3:
        raise InputError("closedness needs at least a 3 x 3 grid")
    f, g = (s1, s2) if pairing == "standard" else (s2, s1)
    h1 = np.diff(grid.c1).mean()
    h2 = np.diff(grid.c2).mean()
    # form f dc1 + g dc2 is closed iff d_1 g = d_2 f
    dg1 = (g[2:, 1:-1] - g[:-2, 1:-1]) / (2 * h1)
    df2 = (f[1:-1, 2:] - f[1:-1, :-2]) / (2 * h2)
    curl = dg1 - df2
    ok = np.isfinite(curl)
    if nodes is not None:
        nodes = np.atleast_2d(np.asarray(nodes, float))
        i = np.rint((nodes[:, 0] - grid.c1[1]) / h1).astype(int)
        j = np.rint((nodes[:, 1] - grid.c2[1]) / h2).astype(int)
        inside = (i >= 0) & (i < curl.shape[0]) & (j >= 0) & (j < curl.shape[1])
        sel = np.zeros_like(ok)
        sel[i[inside], j[inside]] = True
        ok &= sel
    if not np.any(ok):
        raise InputError("no interior node has four sampled neighbors")
    return float(np.max(np.abs(curl[ok])))


def _design(c1, c2, order):
    mons = monomials(order)
    D1 = np.stack([i * c1 ** max(i - 1, 0) * c2 ** j if i else 0 * c1 for i, j in mons], axis=1)
    D2 = np.stack([j * c1 ** i * c2 ** max(j - 1, 0) if j else 0 * c1 for i, j in mons], axis=1)
    return mons, D1, D2


def fit_gradient(cs, sigma, order: int = 3, pairing: str = "standard", weights=None) -> TaylorPoly:
    """Least-squares S with dS matching the sample form for the given pairing."""
    if not 1 <= order <= 4:
        raise InputError("Taylor order must be in 1..4")
    if pairing not in PAIRINGS:
        raise InputError(f"unknown pairing {pairing!r}")
    cs, sigma = np.asarray(cs, float), np.asarray(sigma, float)
    g1, g2 = (sigma[:, 0], sigma[:, 1]) if pairing == "standard" else (sigma[:, 1], sigma[:, 0])
    mons, D1, D2 = _design(cs[:, 0], cs[:, 1], order)
    A = np.vstack([D1, D2])
    b = np.concatenate([g1, g2])
    if weights is not None:
        w = np.sqrt(np.concatenate([weights, weights]))
        A, b = A * w[:, None], b * w
    # column scaling keeps the normal equations well conditioned
    scale = np.linalg.norm(A, axis=0)
    scale[scale == 0] = 1.0
    coef, _, rank, sv = np.linalg.lstsq(A / scale, b, rcond=None)
    if rank < len(mons) or sv[-1] < 1e-10 * sv[0]:
        raise InputError("sample set does not determine the Taylor coefficients (rank deficient)")
    coef = coef / scale
    res = b - A @ coef
    dof = max(len(b) - len(mons), 1)
    rms = float(np.sqrt(np.mean(res ** 2)))
    cov = np.linalg.pinv((A.T @ A)) * float(res @ res) / dof
    stderr = {m: float(np.sqrt(max(cov[k, k], 0.0))) for k, m in enumerate(mons)}
    return TaylorPoly(order, dict(zip(mons, coef.tolist())), residual=rms, stderr=stderr)


def fit_taylor(samples, N: int = 3, pairing: str = "standard", weights=None) -> TaylorPoly:
    """Fit S with S(0) = 0 from a list of SigmaSample (or a (cs, sigma) tuple)."""
    if isinstance(samples, tuple):
        cs, sigma = samples
    else:
        cs = np.array([[s.c.c1, s.c.c2] for s in samples])
        sigma = np.array([[s.sigma1, s.sigma2] for s in samples])
    return fit_gradient(cs, sigma, N, pairing, weights)


def singular_action(c1, c2):
    """-Im(c log c - c) with c = c1 + i c2 (principal branch).

    Its gradient is (-arg c, -log|c|); going once counterclockwise around 0 adds
    -2 pi c1, which is why I2 = K + S + singular_action is compatible with a
    lattice of actions (I1, I2) with I1 = 2 pi c1.
    """
    c = np.asarray(c1, float) + 1j * np.asarray(c2, float)
    with np.errstate(divide="ignore", invalid="ignore"):
        v = -np.imag(np.where(c == 0, 0, c * np.log(np.where(c == 0, 1, c)) - c))
    return v


def action_model_eval(c, params: ActionModelParams) -> float:
    """K - Re(z log z - z) + S(c) with z = c1 + i eps c2; equal to K at c = 0."""
    c = Value2.of(c)
    z = complex(c.c1, params.branch * c.c2)
    sing = 0.0 if z == 0 else -(z * np.log(z) - z).real
    return float(params.K + sing + params.S(c.c1, c.c2))


@dataclass(frozen=True)
class ConventionChoice:
    pairing: str
    epsilon: int
    residuals: dict      # "(pairing, eps)" -> residual used for the decision


def select_convention(score) -> ConventionChoice:
    """Pick (pairing, eps) minimizing ``score(pairing, eps)``.

    ``score`` returns a residual, e.g. a closedness residual or the misfit of a
    polynomial gradient; the closed form is the one the model supports.
    """
    res = {}
    for p in PAIRINGS:
        for e in (1, -1):
            res[f"{p},{e:+d}"] = float(score(p, e))
    best = min(res, key=res.get)
    p, e = best.split(",")
    return ConventionChoice(p, int(e), res)
