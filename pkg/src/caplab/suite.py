"""The verification suite: every theorem-level check at desk scale."""
from __future__ import annotations

import math
import os
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import capacities_gh as gh
from . import seqcomb, systolic
from .bodies import ball, ellipsoid, p_product
from .capacities_ehz import clarke_dual_solve, ehz_closed_form, ehz_p_product, glue_period
from .errors import InvalidInputError
from .report import CheckResult, VerificationReport
from .toric import box_profile, cube_capacity, profile_p_product, simplex_profile

INF = math.inf


def _rel(a, b):
    return abs(a - b) / abs(b)


def _profile(rng, kind, n):
    # weights on a 1/4 grid keep ties (and exact lattice arithmetic) in play
    a = rng.integers(2, 13, size=n) / 4.0
    return simplex_profile(a) if kind == "simplex" else box_profile(a)


def _describe(profile):
    return {"shape": profile.shape, "a": list(profile.params["a"])}


def _fold(name, reports, tolerance, deviation, witness_extra=None):
    """One CheckResult from many sub-reports: worst deviation, first failure."""
    worst, failure = 0.0, None
    for rep in reports:
        for c in rep.checks:
            worst = max(worst, deviation(c))
            if failure is None and not c.passed:
                failure = {"check": c.check, "meta": rep.meta, "computed": c.computed, "witness": c.witness}
    witness = {"cases": len(reports)}
    if failure is not None:
        witness["first_failure"] = failure
    if witness_extra:
        witness.update(witness_extra)
    return CheckResult(name, "pass" if failure is None else "fail", worst, 0.0, tolerance, witness)


# -- checks --------------------------------------------------------------------------------


def check_thm1_2(rng):
    bodies = [
        ("B^2[1]", (1.0, 1.0, 1)),
        ("B^4[1]", (1.0, 0.5, 2)),
        ("E(1,2)", (1.0, 1.0, 2)),
        ("P(1,2)", (1.0, 2.0, 2)),
        ("E(1,1,3)", (1.0, 0.5, 3)),
    ]
    reports = []
    equality_cases = 0
    for _, K in bodies:
        for _, T in bodies:
            for ratio in (1.0, 2.0):
                lam = ratio * K[0] / T[0]
                T_scaled = (lam * T[0], lam ** T[2] * T[1], T[2])
                for p in (1.0, 1.5, 2.0, 2.5, 4.0, INF):
                    rep = systolic.p_product_systolic_check(K, T_scaled, p)
                    equality_cases += rep["systolic_equality_case"].witness["equality_found"]
                    reports.append(rep)

    def dev(c):
        return max(0.0, c.computed - 1.0) if c.check == "systolic_inequality" else 0.0

    return _fold("thm1_2", reports, 1e-12, dev, {"equality_cases": equality_cases})


def check_prop1_4(rng, seed):
    cases = [
        ("E(1,2)", ellipsoid([1.0, 2.0]), 1.0, 0.02),
        ("E(1,1) x_1.5 E(1,1)", p_product(1.5, [ellipsoid([1.0]), ellipsoid([1.0])]), 2.0 ** (-1.0 / 3.0), 0.02),
        ("E(1,1) x_3 E(2,2)", p_product(3.0, [ellipsoid([1.0, 1.0]), ellipsoid([2.0, 2.0])]), 1.0, 0.02),
        ("disc a=0.5", ball(0.5, 2), 0.5, 0.01),
        ("disc a=1", ball(1.0, 2), 1.0, 0.01),
        ("disc a=3", ball(3.0, 2), 3.0, 0.01),
        ("B^4[1]", ball(1.0, 4), 1.0, 0.01),
    ]
    rows, worst, failed = [], 0.0, None
    for label, body, expected, tol in cases:
        closed = ehz_closed_form(body)
        result = clarke_dual_solve(body, seed=seed)
        dev = _rel(result.capacity, expected)
        rows.append({"body": label, "solver": result.capacity, "closed_form": closed, "expected": expected,
                     "tolerance": tol, "iterations": result.iterations})
        worst = max(worst, dev)
        if (dev > tol or _rel(closed, expected) > 1e-12) and failed is None:
            failed = rows[-1]
    glue = glue_period(1.0, 1.0, 1.0)
    rule = ehz_p_product([1.0, 1.0], 1.0)
    if abs(glue - rule) > 1e-12 and failed is None:
        failed = {"glue_period": glue, "ehz_p_product": rule}
    witness = {"cases": rows, "glue_vs_rule": [glue, rule], "calibration": "c = (pi^p min F)^(2/p)"}
    if failed is not None:
        witness["first_failure"] = failed
    return CheckResult("prop1_4", "pass" if failed is None else "fail", worst, 0.0, 0.02, witness)


def check_thm1_6_convex(rng):
    reports, max_reading = [], 0.0
    for k1 in ("simplex", "box"):
        for k2 in ("simplex", "box"):
            o1 = _profile(rng, k1, int(rng.integers(1, 3)))
            o2 = _profile(rng, k2, int(rng.integers(1, 3)))
            for p in (2.0, 2.5, 3.0, 4.0, INF):
                rep = gh.verify_gh_p_product(o1, o2, p, 12, "convex", 1e-9)
                rep.meta.update({"omega1": _describe(o1), "omega2": _describe(o2)})
                reports.append(rep)
                if p == INF:
                    # the alternative p = inf reading (max instead of sum), surfaced for comparison
                    c1, c2 = gh.gh_sequence(o1, 12, "convex"), gh.gh_sequence(o2, 12, "convex")
                    lattice = gh.gh_sequence(profile_p_product(o1, o2, p), 12, "convex")
                    for k in range(1, 13):
                        alt = seqcomb.p_combination(c1, c2, p, k, "convex", infinity_rule="max")
                        max_reading = max(max_reading, _rel(alt, lattice.c(k)))
    return _fold("thm1_6_convex", reports, 1e-9, lambda c: c.computed,
                 {"p_inf_max_reading_deviation": max_reading})


def check_thm1_6_concave(rng):
    reports = []
    for n1, n2 in ((1, 1), (1, 2), (2, 1)):
        o1, o2 = _profile(rng, "simplex", n1), _profile(rng, "simplex", n2)
        for p in (1.0, 1.25, 1.5, 2.0):
            rep = gh.verify_gh_p_product(o1, o2, p, 12, "concave", 1e-7)
            rep.meta.update({"omega1": _describe(o1), "omega2": _describe(o2)})
            reports.append(rep)
    return _fold("thm1_6_concave", reports, 1e-7, lambda c: c.computed)


def check_thm1_7(rng):
    k_big = 1000
    rows, worst, failed = [], 0.0, None
    combos = [("simplex", "simplex", p) for p in (1.0, 1.5, 2.0, 3.0, INF)]
    combos += [("box", "simplex", p) for p in (2.0, 4.0, INF)] + [("box", "box", 3.0)]
    for k1, k2, p in combos:
        o1, o2 = _profile(rng, k1, 1), _profile(rng, k2, 1)
        prod = profile_p_product(o1, o2, p)
        formula = gh.c_infinity_p_product([cube_capacity(o1), cube_capacity(o2)], p)
        cube = cube_capacity(prod)
        branch = "convex" if prod.convex else "concave"
        fn = gh.gh_capacity_convex if branch == "convex" else gh.gh_capacity_concave
        est = fn(prod, k_big) / k_big
        dev_cube, dev_est = _rel(cube, formula), _rel(est, formula)
        rows.append({"p": p, "omega1": _describe(o1), "omega2": _describe(o2), "formula": formula,
                     "cube_capacity": cube, "c_k_over_k": est})
        worst = max(worst, dev_est)
        if (dev_cube > 1e-12 or dev_est > 1e-2) and failed is None:
            failed = rows[-1]
    # ellipsoid and polydisc limits at k = 2000
    for label, profile, limit in (("E(1,2)", simplex_profile([1.0, 2.0]), 2.0 / 3.0),
                                  ("P(1,2)", box_profile([1.0, 2.0]), 1.0)):
        est = gh.c_infinity_estimate(lambda k: gh.gh_capacity_convex(profile, k), 2000)
        rows.append({"body": label, "c_k_over_k": est.estimate, "limit": limit, "tail_slope": est.tail_slope})
        worst = max(worst, abs(est.estimate - limit))
        if abs(est.estimate - limit) > 1e-2 and failed is None:
            failed = rows[-1]
    witness = {"cases": rows}
    if failed is not None:
        witness["first_failure"] = failed
    return CheckResult("thm1_7", "pass" if failed is None else "fail", worst, 0.0, 1e-2, witness)


def _random_increasing(rng, length):
    if rng.random() < 0.5:
        return np.cumsum(rng.integers(1, 4, size=length)).astype(float)
    return np.cumsum(rng.uniform(0.1, 2.0, size=length))


def check_appendix_lemma(rng):
    reports = []
    for _ in range(1000):
        s1, s2 = _random_increasing(rng, 10), _random_increasing(rng, 10)
        reports.append(seqcomb.minmax_identity_audit(s1, s2, 10))
    return _fold("appendix_lemma", reports, 0.0, lambda c: 0.0 if c.passed else 1.0)


def check_lemma_calculus(rng):
    x = np.linspace(0.0, 1.0, 10 ** 6 + 1)
    worst, failed = 0.0, None
    for a in (0.5, 1.0, 2.0):
        for b in (0.5, 1.0, 2.0):
            for q in (1.0, 1.5, 2.0, 3.0, 6.0):
                grid = float(np.min(a * x ** (q / 2) + b * (1 - x) ** (q / 2)))
                closed = seqcomb.lemma_calculus_min(a, b, q)
                dev = abs(grid - closed)
                worst = max(worst, dev)
                if dev > 1e-6 and failed is None:
                    failed = {"a": a, "b": b, "q": q, "grid": grid, "formula": closed}
    return CheckResult("lemma_calculus", "pass" if failed is None else "fail", worst, 0.0, 1e-6,
                       {"cases": 45, "first_failure": failed} if failed else {"cases": 45})


def check_g_convexity(rng):
    reports, worst_half = [], 0.0
    bad_one = None
    for n in range(1, 9):
        for m in range(1, 9):
            reports.append(systolic.g_logconvexity_audit(n, m, grid=501))
            worst_half = max(worst_half, abs(systolic.g_function(0.5, n, m) - 1.0))
            g1 = systolic.g_function(1.0, n, m)
            if not g1 < 1.0 and bad_one is None:
                bad_one = {"n": n, "m": m, "g_one": g1}
    result = _fold("g_convexity", reports, 1e-12, lambda c: 0.0, {"g_half_max_deviation": worst_half})
    if worst_half > 1e-12 or bad_one is not None:
        result.status = "fail"
        result.witness["g_one_failure"] = bad_one
    result.computed = worst_half
    return result


def check_free_sum_remark(rng):
    target = (2.0 / 3.0) * 5.0 ** (1.0 / 3.0)
    value = systolic.free_sum_ratio(2)
    devs = {n: abs(systolic.free_sum_ratio(n) - systolic.free_sum_ratio_direct(n)) for n in range(1, 7)}
    worst = max([abs(value - target)] + list(devs.values()))
    above = {n: systolic.free_sum_ratio(n) > 1.0 for n in range(1, 7)}
    ok = worst <= 1e-10 and value > 1.0 and all(above[n] for n in range(2, 7)) and not above[1]
    witness = {"ratio_n2": value, "ratio_n1": systolic.free_sum_ratio(1), "exceeds_one": above}
    return CheckResult("free_sum_remark", "pass" if ok else "fail", worst, 0.0, 1e-10, witness)


def check_ball_audit(rng):
    disc = tuple(float(k) for k in range(1, 9))
    p4 = seqcomb.ball_decomposition_audit(disc, disc, 4.0, 1, 1, 1.0, k_max=8)
    p2 = seqcomb.ball_decomposition_audit(disc, disc, 2.0, 1, 1, 1.0, k_max=8)
    cons = p4["ball_consistency"]
    k3 = None
    if cons.witness:
        k3 = next((row for row in cons.witness["mismatches"] if row["k"] == 3), None)
    flagged = (cons.status == "fail" and k3 is not None
               and abs(k3["computed"] - math.sqrt(5.0)) <= 1e-12 and k3["ball"] == 2.0)
    ok = flagged and p2.passed
    witness = {"p4_first_failure": cons.witness["first_failure"] if cons.witness else None,
               "p4_k3": k3, "p2_consistent": p2.passed, "p_inf_rule": "sum (Cartesian); max reading behind a flag"}
    dev = abs(k3["computed"] - math.sqrt(5.0)) if k3 else math.inf
    return CheckResult("ball_audit", "pass" if ok else "fail", dev, 0.0, 1e-12, witness)


def check_monotonicity(rng):
    cases = [("B^4[1]", simplex_profile([1.0, 1.0]), 50), ("P(1,2)", box_profile([1.0, 2.0]), 50),
             ("E(1,2)", simplex_profile([1.0, 2.0]), 50), ("E(1,2,3)", simplex_profile([1.0, 2.0, 3.0]), 20)]
    reports = []
    for label, profile, i_max in cases:
        rep = gh.gh_monotonicity_audit(profile, i_max)
        rep.meta["body"] = label
        reports.append(rep)
    return _fold("monotonicity", reports, 0.0, lambda c: 0.0)


CHECKS = {
    "thm1_2": check_thm1_2,
    "prop1_4": check_prop1_4,
    "thm1_6_convex": check_thm1_6_convex,
    "thm1_6_concave": check_thm1_6_concave,
    "thm1_7": check_thm1_7,
    "appendix_lemma": check_appendix_lemma,
    "lemma_calculus": check_lemma_calculus,
    "g_convexity": check_g_convexity,
    "free_sum_remark": check_free_sum_remark,
    "ball_audit": check_ball_audit,
    "monotonicity": check_monotonicity,
}


def _worker_count(jobs: int) -> int:
    cap = os.environ.get("CAPLAB_THREADS")
    limit = os.cpu_count() or 1
    if cap:
        try:
            limit = max(1, int(cap))
        except ValueError:
            raise InvalidInputError(f"CAPLAB_THREADS must be an integer, got {cap!r}") from None
    return max(1, min(limit, jobs))


def _run_one(name, seed):
    # every check gets its own stream derived from (seed, name): results do not depend on scheduling
    rng = np.random.default_rng([seed, sorted(CHECKS).index(name)])
    start = time.perf_counter()
    fn = CHECKS[name]
    result = fn(rng, seed) if name == "prop1_4" else fn(rng)
    return result, 1000.0 * (time.perf_counter() - start)


def run_verification_suite(selection=None, seed: int = 0) -> VerificationReport:
    """Run the named checks (all by default); the report is ordered by check name."""
    names = sorted(CHECKS) if not selection else sorted(set(selection))
    unknown = [n for n in names if n not in CHECKS]
    if unknown:
        raise InvalidInputError(f"unknown check(s): {', '.join(unknown)}; known: {', '.join(sorted(CHECKS))}")
    workers = _worker_count(len(names))
    if workers == 1:
        outcomes = [_run_one(n, seed) for n in names]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(lambda n: _run_one(n, seed), names))
    report = VerificationReport(meta={"seed": seed, "selection": names, "p_inf_rule": "sum"})
    for name, (result, ms) in zip(names, outcomes):
        report.add(result)
        report.timings[name] = round(ms, 1)
    return report
