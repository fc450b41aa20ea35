"""End-to-end acceptance criteria; each prints one PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py`` (lines appear in the summary) or
``python tests/test_acceptance.py``.
"""
import functools
import time

import numpy as np

from ffinverse.flows import PathInC, random_fiber_points, rotation_numbers_batch
from ffinverse.invariant import ActionModelParams, TaylorPoly
from ffinverse.inverse import (classical_invariant, compare_systems, reconstruct_invariant,
                               ring_rotation_numbers)
from ffinverse.lattice import transport_loop
from ffinverse.models import CoupledSpins, quadratic_normalization
from ffinverse.quantum import (BSGenerator, bs_synthesize, hausdorff_distance, hbar_order_fit,
                               joint_spectrum_coupled)

RESULTS = []
TWO_PI = 2 * np.pi
S_STAR = TaylorPoly(2, {(1, 0): 0.3, (0, 1): 0.2, (2, 0): 0.05, (1, 1): -0.04, (0, 2): 0.02})
SPINS = CoupledSpins(0.5)


def criterion(n, name):
    def wrap(fn):
        @functools.wraps(fn)
        def run():
            t = time.perf_counter()
            detail = ""
            try:
                detail = fn() or ""
            except Exception as exc:
                RESULTS.append(f"C{n} FAIL {name} ({time.perf_counter() - t:.1f} s): "
                               f"{type(exc).__name__}: {exc}")
                raise
            RESULTS.append(f"C{n} PASS {name} ({time.perf_counter() - t:.1f} s) {detail}")
        return run
    return wrap


def synth(S, hbars):
    return bs_synthesize(BSGenerator(ActionModelParams(0.0, S, -1), hbars))


def circ(d):
    return abs(np.mod(d + np.pi, TWO_PI) - np.pi)


@criterion(1, "synthetic round trip")
def test_c1_round_trip():
    t = time.perf_counter()
    rep = reconstruct_invariant(synth(S_STAR, [2e-3, 1e-3, 5e-4]), (0, 0), 2)
    elapsed = time.perf_counter() - t
    errs = {}
    for m, v in S_STAR.coeffs.items():
        d = rep.S.coeffs[m] - v
        errs[m] = (circ(d) if m == (1, 0) else abs(d)) / abs(v)
    assert rep.hbar == 5e-4
    assert max(errs[m] for m in [(1, 0), (0, 1)]) < 0.02, errs
    assert max(errs[m] for m in [(2, 0), (1, 1), (0, 2)]) < 0.05, errs
    assert elapsed < 60, elapsed
    return f"max rel err deg1 {max(errs[(1, 0)], errs[(0, 1)]):.1e}, deg2 " \
           f"{max(errs[(2, 0)], errs[(1, 1)], errs[(0, 2)]):.1e}"


@criterion(2, "monodromy")
def test_c2_monodromy():
    t = time.perf_counter()
    loop = PathInC.circle(0.15, 16)
    a = transport_loop(synth(S_STAR, [1e-3])[0], loop, c0=(0, 0))
    # 25 hbar at j = 30 exceeds the loop radius, so the exclusion is lifted here
    b = transport_loop(joint_spectrum_coupled(30, 30, 0.5), loop, c0=(0, 0), r_min=0.0)
    elapsed = time.perf_counter() - t
    assert str(a.conjugacy) == "Unipotent(1)", a.conjugacy
    assert str(b.conjugacy) == "Unipotent(1)", b.conjugacy
    assert len(a.charts) >= 12 and len(b.charts) >= 12
    assert elapsed < 30, elapsed
    return f"synthetic {a.conjugacy} ({len(a.charts)} charts), spins {b.conjugacy} " \
           f"({len(b.charts)} charts)"


@criterion(3, "integral transitions")
def test_c3_transitions():
    res = transport_loop(synth(S_STAR, [1e-3])[0], PathInC.circle(0.15, 12), c0=(0, 0))
    dev = [t.deviation for t in res.transitions]
    assert len(res.charts) >= 12
    assert all(abs(t.det) == 1 for t in res.transitions)
    assert max(dev) < 1e-3, max(dev)
    return f"{len(dev)}/{len(dev)} transitions integral, max deviation {max(dev):.1e}"


@criterion(4, "sigma closedness")
def test_c4_closedness():
    rep = classical_invariant(SPINS)
    assert (rep.convention.pairing, rep.convention.epsilon) == ("standard", -1)
    assert 3.5 <= rep.ratio <= 4.5, rep.ratio
    assert rep.rejected_factor >= 10, rep.rejected_factor
    return f"ratio {rep.ratio:.3f}, rejected/accepted {rep.rejected_factor:.0f}"


@criterion(5, "tau base-point independence")
def test_c5_base_point():
    rng = np.random.default_rng(20261014)
    values = [(0.1, 0.05), (-0.2, 0.1), (0.25, -0.15), (0.05, 0.3), (-0.3, -0.2), (0.15, 0.02)]
    spread = 0.0
    for c in values:
        X = random_fiber_points(SPINS, c, 8, rng)
        T = rotation_numbers_batch(SPINS, np.tile(c, (8, 1)), seeds=X)
        s1 = circ(T[:, 0] - T[0, 0]).max() / abs(T[0, 0])
        s2 = np.ptp(T[:, 1]) / abs(T[0, 1])
        spread = max(spread, s1, s2)
    assert spread < 1e-6, spread
    return f"max relative spread {spread:.1e}"


@criterion(6, "classical-spectral consistency")
def test_c6_consistency():
    L = quadratic_normalization(SPINS).normalization
    hbars, errs = [], []
    for j in (30, 60, 100):
        spec = joint_spectrum_coupled(j, j, 0.5)
        cs, ts = ring_rotation_numbers(spec, 0.35, 8, L=L, r_min=0.0)
        tc = rotation_numbers_batch(SPINS, cs)
        errs.append(max(circ(ts[:, 0] - tc[:, 0]).max(), np.abs(ts[:, 1] - tc[:, 1]).max()))
        hbars.append(spec.hbar)
    slope, _ = hbar_order_fit(np.stack([hbars, errs], axis=1))
    assert slope >= 0.8, slope
    return "max errors " + ", ".join(f"{e:.1e}" for e in errs) + f"; slope {slope:.2f}"


@criterion(7, "contrapositive sensitivity")
def test_c7_sensitivity():
    other = TaylorPoly(2, dict(S_STAR.coeffs))
    other.coeffs[(2, 0)] += 0.03
    hbars = [2e-3, 1e-3, 5e-4]
    A, B = synth(S_STAR, hbars), synth(other, hbars)
    rep = compare_systems(A, B, N=2)
    assert rep.verdict.kind == "Mismatch" and rep.verdict.degree == 2, rep.verdict
    assert abs(abs(rep.deltas[(2, 0)]) - 0.03) <= 0.2 * 0.03, rep.deltas
    same = compare_systems(A, A, N=2)
    assert same.verdict.kind == "Match", same.verdict
    assert same.B.entries.tolist() == [[1, 0], [0, 1]]
    return f"{rep.verdict}, delta(2,0) {rep.deltas[(2, 0)]:+.4f}; self {same.verdict}"


@criterion(8, "Hausdorff and order fit")
def test_c8_hausdorff():
    A = np.array([[0.0, 0.0], [1.0, 0.0]])
    assert hausdorff_distance(A, A) == 0.0
    assert hausdorff_distance([[0.0, 0.0]], [[3.0, 4.0]]) == 5.0
    assert hausdorff_distance(A, [[0.0, 0.0]]) == 1.0
    h = np.array([1e-1, 1e-2, 1e-3])
    N, C = hbar_order_fit(np.stack([h, 3 * h ** 2], axis=1))
    assert abs(N - 2.0) < 1e-9 and abs(C - 3.0) < 1e-9
    N0, _ = hbar_order_fit(np.stack([h, np.full(3, 0.7)], axis=1))
    assert abs(N0) < 1e-12
    return f"exponent {N:.12f}"


@criterion(9, "gauge invariance")
def test_c9_gauge():
    specs = synth(S_STAR, [1e-3])
    base = reconstruct_invariant(specs, (0, 0), 2)
    worst = 0.0
    for U in ([[0, 1], [1, 0]], [[1, 1], [0, 1]], [[-1, 0], [0, -1]]):
        rep = reconstruct_invariant(specs, (0, 0), 2, relabel=np.array(U))
        worst = max(worst, max(abs(rep.S.coeffs[m] - v) for m, v in base.S.coeffs.items()))
    assert worst <= base.S.residual, (worst, base.S.residual)
    return f"max change {worst:.1e} vs fit residual {base.S.residual:.1e}"


if __name__ == "__main__":
    for name, fn in list(globals().items()):
        if name.startswith("test_c"):
            try:
                fn()
            except Exception:
                pass
    print("\n".join(RESULTS))
