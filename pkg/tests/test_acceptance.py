"""Acceptance criteria, one test per criterion.

Under pytest a summary section prints one PASS/FAIL line per criterion.  The
file also runs as a script: ``python tests/test_acceptance.py``.
"""
import itertools
import math
import os
import subprocess
import sys
import time

import numpy as np
import pytest

from caplab.bodies import ball, box, ellipsoid, p_product, polydisc, volume_monte_carlo
from caplab.capacities_ehz import clarke_dual_solve, ehz_closed_form
from caplab.capacities_gh import c_infinity_estimate, gh_capacity_convex, verify_gh_p_product
from caplab.seqcomb import CapacitySequence, ball_decomposition_audit, lemma_calculus_min, minmax_identity_audit
from caplab.systolic import (BodyData, free_sum_ratio, free_sum_ratio_direct, g_function, g_logconvexity_audit,
                             p_product_systolic_check)
from caplab.toric import box_profile, simplex_profile

INF = math.inf


def criterion(number, title):
    return pytest.mark.criterion(number, title)


def _timed(fn, *args):
    t = time.perf_counter()
    out = fn(*args)
    return out, time.perf_counter() - t


# -- 1 ---------------------------------------------------------------------------------------


def _lattice_min(h, n, k):
    return min(h(v) for v in itertools.product(range(k + 1), repeat=n) if sum(v) == k)


@criterion(1, "GH convex formula vs exhaustive lattice enumeration, 50 profiles, k <= 12")
def test_criterion_01_gh_convex_brute_force():
    rng = np.random.default_rng(101)

    def run():
        worst, exact_ok = 0.0, True
        for idx in range(50):
            n = int(rng.integers(1, 4))
            integer = idx % 2 == 0
            a = rng.integers(1, 6, n).astype(float) if integer else rng.uniform(0.3, 4.0, n)
            if idx % 4 < 2:
                prof = simplex_profile(a)
                h = lambda v, a=a: max(x * y for x, y in zip(a, v))  # noqa: E731
            else:
                prof = box_profile(a)
                h = lambda v, a=a: sum(x * y for x, y in zip(a, v))  # noqa: E731
            for k in range(1, 13):
                got, want = gh_capacity_convex(prof, k), _lattice_min(h, n, k)
                if integer:
                    exact_ok &= got == want
                worst = max(worst, abs(got - want) / want)
        return worst, exact_ok

    (worst, exact_ok), seconds = _timed(run)
    assert exact_ok
    assert worst <= 1e-9
    assert seconds < 10


# -- 2 ---------------------------------------------------------------------------------------


@criterion(2, "p-product capacity identity, convex p in {2,2.5,3,4,inf} and concave p in {1,1.25,1.5,2}")
def test_criterion_02_product_identity():
    rng = np.random.default_rng(102)

    def prof(kind, n):
        a = rng.integers(2, 13, n) / 4.0
        return simplex_profile(a) if kind == "simplex" else box_profile(a)

    def run():
        failures = []
        for k1, k2 in itertools.product(("simplex", "box"), repeat=2):
            o1, o2 = prof(k1, int(rng.integers(1, 3))), prof(k2, int(rng.integers(1, 3)))
            for p in (2.0, 2.5, 3.0, 4.0, INF):
                rep = verify_gh_p_product(o1, o2, p, 12, "convex", 1e-9)
                if not rep.passed:
                    failures.append(rep.checks[0].witness)
        for n1, n2 in ((1, 1), (1, 2), (2, 1)):
            o1, o2 = prof("simplex", n1), prof("simplex", n2)
            for p in (1.0, 1.25, 1.5, 2.0):
                rep = verify_gh_p_product(o1, o2, p, 12, "concave", 1e-7)
                if not rep.passed:
                    failures.append(rep.checks[0].witness)
        return failures

    failures, seconds = _timed(run)
    assert failures == []
    assert seconds < 60


# -- 3, 4 ------------------------------------------------------------------------------------


@criterion(3, "loop-space solver matches the closed-form product rule within 2%")
def test_criterion_03_solver_product_rule():
    cases = [
        (ellipsoid([1.0, 2.0]), 1.0),
        (p_product(1.5, [ellipsoid([1.0]), ellipsoid([1.0])]), 2.0 ** (-1.0 / 3.0)),
        (p_product(3.0, [ellipsoid([1.0, 1.0]), ellipsoid([2.0, 2.0])]), 1.0),
    ]

    def run():
        return [(clarke_dual_solve(body, seed=42).capacity, ehz_closed_form(body), want) for body, want in cases]

    rows, seconds = _timed(run)
    for solved, closed, want in rows:
        assert closed == pytest.approx(want, rel=1e-12)
        assert abs(solved - want) / want <= 0.02
    assert seconds < 300


@criterion(4, "solver calibration on discs of area 0.5, 1, 3 and on B^4[1] within 1%")
def test_criterion_04_solver_calibration():
    for body, want in ((ball(0.5, 2), 0.5), (ball(1.0, 2), 1.0), (ball(3.0, 2), 3.0), (ball(1.0, 4), 1.0)):
        assert abs(clarke_dual_solve(body, seed=42).capacity - want) / want <= 0.01


# -- 5, 6, 7 ---------------------------------------------------------------------------------


@criterion(5, "systolic inequality for p-products, equality exactly at p=2 with equal capacities")
def test_criterion_05_systolic_inequality():
    bodies = [ball(1.0, 2), ball(1.0, 4), ellipsoid([1.0, 3.0]), polydisc([1.0, 2.0]), box([1.0, 0.5]),
              ellipsoid([1.0, 2.0, 0.5])]
    data = [BodyData(ehz_closed_form(b), b.closed_form_volume, b.dim // 2) for b in bodies]
    bad = []
    for K in data:
        for T in data:
            for ratio in (1.0, 2.0):
                lam = ratio * K.capacity / T.capacity
                Ts = BodyData(lam * T.capacity, lam ** T.n * T.volume, T.n)
                for p in (1.0, 1.5, 2.0, 2.5, 4.0, INF):
                    rep = p_product_systolic_check(K, Ts, p)
                    gap = 1.0 - rep["systolic_inequality"].computed
                    found = rep["systolic_equality_case"].witness["equality_found"]
                    expected = p == 2.0 and ratio == 1.0
                    if gap < -1e-12 or found != expected or (not expected and gap <= 1e-12):
                        bad.append((K, Ts, p, gap))
    assert bad == []


@criterion(6, "free-sum ratio (2/3) 5^(1/3) > 1 and first-principles recomputation for n <= 6")
def test_criterion_06_free_sum():
    assert abs(free_sum_ratio(2) - 2.0 / 3.0 * 5 ** (1.0 / 3.0)) <= 1e-10
    assert free_sum_ratio(2) > 1
    for n in range(1, 7):
        assert abs(free_sum_ratio_direct(n) - free_sum_ratio(n)) <= 1e-10


@criterion(7, "g(1/2) = 1, g(1) < 1 and ln g strictly convex for 1 <= n, m <= 8")
def test_criterion_07_g_audit():
    for n in range(1, 9):
        for m in range(1, 9):
            assert abs(g_function(0.5, n, m) - 1.0) <= 1e-12
            assert g_function(1.0, n, m) < 1.0
            rep = g_logconvexity_audit(n, m, 501)
            assert rep["g_log_convexity"].passed, rep["g_log_convexity"].witness


# -- 8 ---------------------------------------------------------------------------------------


@criterion(8, "c^k/k at k=2000 approaches 2/3 for E(1,2) and 1 for P(1,2)")
def test_criterion_08_c_infinity():
    def run():
        e = gh_capacity_convex(simplex_profile([1.0, 2.0]), 2000) / 2000
        p = gh_capacity_convex(box_profile([1.0, 2.0]), 2000) / 2000
        est = c_infinity_estimate(lambda k: gh_capacity_convex(simplex_profile([1.0, 2.0]), k), 2000)
        return e, p, est

    (e, p, est), seconds = _timed(run)
    assert abs(e - 2.0 / 3.0) <= 1e-2 and abs(est.estimate - e) == 0.0
    assert abs(p - 1.0) <= 1e-2
    assert seconds < 30


# -- 9, 10, 11 -------------------------------------------------------------------------------


@criterion(9, "min-max, max-min and merged sequence coincide on 1000 random pairs, k <= 10")
def test_criterion_09_minmax_identity():
    rng = np.random.default_rng(109)

    def seq():
        steps = rng.integers(1, 4, 12).astype(float) if rng.random() < 0.5 else rng.uniform(0.1, 2.0, 12)
        return CapacitySequence(tuple(np.cumsum(steps)))

    failures = [rep for rep in (minmax_identity_audit(seq(), seq(), 10) for _ in range(1000)) if not rep.passed]
    assert failures == []


@criterion(10, "calculus minimum closed form vs 10^6-point grid within 1e-6")
def test_criterion_10_calculus_minimum():
    x = np.linspace(0.0, 1.0, 10 ** 6)
    for a, b in itertools.product((0.5, 1.0, 2.0), repeat=2):
        for q in (1.0, 1.5, 2.0, 3.0, 6.0):
            grid = float(np.min(a * x ** (q / 2) + b * (1 - x) ** (q / 2)))
            assert abs(lemma_calculus_min(a, b, q) - grid) <= 1e-6


@criterion(11, "ball decomposition audit: p=4 flags k=3 (sqrt5 vs 2), p=2 consistent for k <= 8")
def test_criterion_11_ball_audit():
    seq = CapacitySequence(tuple(float(k) for k in range(1, 9)))
    rep = ball_decomposition_audit(seq, seq, 4.0, 1, 1, 1.0)
    check = rep["ball_consistency"]
    assert not check.passed
    at3 = [m for m in check.witness["mismatches"] if m["k"] == 3]
    assert at3 and abs(at3[0]["computed"] - math.sqrt(5)) <= 1e-12 and at3[0]["ball"] == 2.0
    assert ball_decomposition_audit(seq, seq, 2.0, 1, 1, 1.0, k_max=8).passed


# -- 12 --------------------------------------------------------------------------------------


@criterion(12, "p-product volume closed forms vs 10^6-sample Monte Carlo, and the free-sum square")
def test_criterion_12_volumes():
    rng = np.random.default_rng(112)
    makers = [
        lambda: ellipsoid(rng.uniform(0.5, 2.0, int(rng.integers(1, 3)))),
        lambda: polydisc(rng.uniform(0.5, 2.0, int(rng.integers(1, 3)))),
        lambda: box(rng.uniform(0.5, 1.5, 2)),
        lambda: ball(float(rng.uniform(0.5, 2.0)), 2),
    ]
    ps = [1.0, 1.5, 2.0, 3.0, INF]
    for i in range(10):
        factors = [makers[int(rng.integers(len(makers)))]() for _ in range(2)]
        p = ps[i % len(ps)] if i < 5 else float(rng.uniform(1.0, 6.0))
        body = p_product(p, factors)
        mean, se = volume_monte_carlo(body, 10 ** 6, seed=i)
        assert abs(mean - body.closed_form_volume) <= 4 * se, (p, mean, body.closed_form_volume, se)
    assert p_product(1.0, [box([1.0]), box([1.0])]).closed_form_volume == 2.0


# -- 13 --------------------------------------------------------------------------------------


@criterion(13, "two runs of verify --seed 42 give byte-identical JSON")
def test_criterion_13_determinism(tmp_path):
    outputs = []
    for threads in ("1", "4"):
        path = tmp_path / f"report_{threads}.json"
        env = dict(os.environ, CAPLAB_THREADS=threads)
        proc = subprocess.run([sys.executable, "-m", "caplab", "verify", "--seed", "42", "--out", str(path)],
                              env=env, capture_output=True, text=True, timeout=1800)
        assert proc.returncode == 0, proc.stdout + proc.stderr
        outputs.append(path.read_bytes())
    assert outputs[0] == outputs[1]


if __name__ == "__main__":
    import tempfile
    from pathlib import Path

    tests = sorted((name, fn) for name, fn in globals().items() if name.startswith("test_criterion_"))
    passed = 0
    for name, fn in tests:
        mark = fn.pytestmark[0]
        number, title = mark.args
        t = time.perf_counter()
        try:
            if "tmp_path" in fn.__code__.co_varnames[:fn.__code__.co_argcount]:
                with tempfile.TemporaryDirectory() as tmp:
                    fn(Path(tmp))
            else:
                fn()
            ok = True
        except AssertionError:
            ok = False
        passed += ok
        print(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {title} ({time.perf_counter() - t:.1f} s)",
              flush=True)
    print(f"{passed}/{len(tests)} acceptance criteria passed")
    sys.exit(0 if passed == len(tests) else 1)
