"""Gutt-Hutchings capacities of convex and concave toric domains.

Convex:  c^k = min { h_Omega(v) : v in N^n, |v| = k }
Concave: c^k = max { [v]_Omega : v in N^n_{>0}, |v| = k + n - 1 }
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterator

import numpy as np

from . import seqcomb
from .errors import InvalidInputError, WrongConvexityError
from .report import CheckResult, VerificationReport
from .seqcomb import CapacitySequence
from .toric import ToricProfile, cube_capacity, profile_face_value, profile_p_product, profile_support

__all__ = [
    "enumerate_compositions", "compositions_array", "gh_capacity_convex", "gh_capacity_concave",
    "gh_sequence", "gh_p_product_formula", "verify_gh_p_product", "c_infinity_estimate",
    "c_infinity_p_product", "cube_capacity", "gh_monotonicity_audit",
]

# exhaustive enumeration below these sizes, branch and bound above
EXHAUSTIVE_MAX_N = 6
EXHAUSTIVE_MAX_K = 30


def enumerate_compositions(n: int, k: int, strict: bool = False) -> Iterator[tuple]:
    """Yield every v in N^n (N_{>0}^n if strict) with sum k, in lexicographic order."""
    if n < 1 or k < 0:
        raise InvalidInputError("need n >= 1 and k >= 0")
    low = 1 if strict else 0
    if k < low * n:
        return

    def rec(prefix, remaining, slots):
        if slots == 1:
            yield prefix + (remaining,)
            return
        for first in range(low, remaining - low * (slots - 1) + 1):
            yield from rec(prefix + (first,), remaining - first, slots - 1)

    yield from rec((), k, n)


def compositions_array(n: int, k: int, strict: bool = False) -> np.ndarray:
    rows = list(enumerate_compositions(n, k, strict))
    return np.array(rows, dtype=float).reshape(len(rows), n)


def _require(profile: ToricProfile, convex: bool):
    if convex and not profile.convex:
        raise WrongConvexityError(f"profile is {profile.convexity}; the convex formula needs a convex profile")
    if not convex and not profile.concave:
        raise WrongConvexityError(f"profile is {profile.convexity}; the concave formula needs a concave profile")


def gh_capacity_convex(profile: ToricProfile, k: int, method: str = "auto") -> float:
    """c^k_GH of a convex toric domain.

    ``method``: "exhaustive", "bnb" (branch and bound using monotonicity of
    h_Omega on the orthant) or "auto".
    """
    _require(profile, True)
    if k < 1:
        raise InvalidInputError("k must be >= 1")
    if method == "auto":
        method = "exhaustive" if profile.n <= EXHAUSTIVE_MAX_N and k <= EXHAUSTIVE_MAX_K else "bnb"
    if method == "exhaustive":
        return float(np.min(profile_support(profile, compositions_array(profile.n, k))))
    if method == "bnb":
        return _convex_bnb(profile, k)
    raise InvalidInputError(f"unknown method {method!r}")


def _convex_bnb(profile: ToricProfile, k: int) -> float:
    n = profile.n
    h = lambda v: profile_support(profile, v)  # noqa: E731
    if n == 1:
        return float(h(np.array([k], dtype=float)))
    # incumbent from the axis vectors k e_i
    best = float(np.min(h(k * np.eye(n))))

    def rec(prefix, remaining, depth):
        nonlocal best
        if depth == n - 2:
            # vectorise over the last free coordinate
            first = np.arange(remaining + 1, dtype=float)
            rows = np.zeros((first.size, n))
            rows[:, :depth] = prefix
            rows[:, depth] = first
            rows[:, depth + 1] = remaining - first
            best = min(best, float(np.min(h(rows))))
            return
        for first in range(remaining + 1):
            partial = np.zeros(n)
            partial[:depth] = prefix
            partial[depth] = first
            # h is monotone on the orthant: zero-padding bounds every completion
            if float(h(partial)) >= best:
                break
            rec(partial[:depth + 1], remaining - first, depth + 1)

    rec(np.zeros(0), k, 0)
    return best


def gh_capacity_concave(profile: ToricProfile, k: int, method: str = "auto") -> float:
    """c^k_GH of a concave toric domain (``method`` is passed to the face-value evaluator)."""
    _require(profile, False)
    if k < 1:
        raise InvalidInputError("k must be >= 1")
    vs = compositions_array(profile.n, k + profile.n - 1, strict=True)
    return float(np.max(profile_face_value(profile, vs, method=method)))


def gh_sequence(profile: ToricProfile, k_max: int, branch: str = None, method: str = "auto") -> CapacitySequence:
    """c^1..c^{k_max}; branch defaults to convex when the profile allows it."""
    if branch is None:
        branch = "convex" if profile.convex else "concave"
    fn = gh_capacity_convex if branch == "convex" else gh_capacity_concave
    return CapacitySequence(tuple(fn(profile, k, method) for k in range(1, k_max + 1)), f"GH[{branch}]")


def gh_p_product_formula(c1, c2, p: float, k: int, branch: str) -> float:
    """Capacity of a p-product of toric domains from the factor sequences."""
    return seqcomb.p_combination(c1, c2, p, k, branch)


def _branch_for(omega1, omega2, p):
    if p >= 2 and omega1.convex and omega2.convex:
        return "convex"
    if p <= 2 and omega1.concave and omega2.concave:
        return "concave"
    raise WrongConvexityError(f"no formula for {omega1.convexity} x {omega2.convexity} profiles at p={p}")


def verify_gh_p_product(omega1: ToricProfile, omega2: ToricProfile, p: float, k_max: int,
                        branch: str = None, rtol: float = None) -> VerificationReport:
    """Compare the lattice capacities of the product profile with the split formula."""
    branch = branch or _branch_for(omega1, omega2, p)
    if rtol is None:
        rtol = 1e-9 if branch == "convex" else 1e-7
    product = profile_p_product(omega1, omega2, p)
    c1 = gh_sequence(omega1, k_max, branch)
    c2 = gh_sequence(omega2, k_max, branch)
    direct = gh_sequence(product, k_max, branch)
    worst, witness = 0.0, None
    rows = []
    for k in range(1, k_max + 1):
        lhs = direct.c(k)
        rhs = gh_p_product_formula(c1, c2, p, k, branch)
        dev = abs(lhs - rhs) / abs(rhs)
        rows.append({"k": k, "product": lhs, "formula": rhs})
        if dev > worst:
            worst = dev
        if dev > rtol and witness is None:
            witness = {"k": k, "product": lhs, "formula": rhs}
    report = VerificationReport(meta={"p": p, "branch": branch, "k_max": k_max})
    report.add(CheckResult(
        check=f"gh_p_product[{branch},p={p}]",
        status="pass" if worst <= rtol else "fail",
        computed=worst,
        expected=0.0,
        tolerance=rtol,
        witness=witness,
    ))
    return report


@dataclass(frozen=True)
class CInfinityEstimate:
    estimate: float
    tail_slope: float
    ks: tuple
    normalized: tuple


def c_infinity_estimate(capacity_at: Callable[[int], float], k_max: int, points: int = 10) -> CInfinityEstimate:
    """c^{k_max}/k_max, with the slope of c^k/k over the last decade [k_max/10, k_max]."""
    if k_max < 10:
        raise InvalidInputError("k_max must be >= 10")
    ks = sorted(set(int(round(t)) for t in np.geomspace(k_max / 10, k_max, points)))
    ks[-1] = k_max
    normalized = [capacity_at(k) / k for k in ks]
    slope = (normalized[-1] - normalized[0]) / (ks[-1] - ks[0])
    return CInfinityEstimate(normalized[-1], slope, tuple(ks), tuple(normalized))


def c_infinity_p_product(values, p: float) -> float:
    """(sum c_i^{-p/2})^{-2/p}; p=inf gives min."""
    if math.isinf(p):
        return min(values)
    return sum(c ** (-p / 2.0) for c in values) ** (-2.0 / p)


def gh_monotonicity_audit(profile: ToricProfile, i_max: int) -> VerificationReport:
    """Check c^i < c^{n+i} for i = 1..i_max."""
    seq = gh_sequence(profile, i_max + profile.n)
    violations = [{"i": i, "c_i": seq.c(i), "c_n_plus_i": seq.c(profile.n + i)}
                  for i in range(1, i_max + 1) if not seq.c(i) < seq.c(profile.n + i)]
    gaps = [seq.c(profile.n + i) - seq.c(i) for i in range(1, i_max + 1)]
    report = VerificationReport(meta={"n": profile.n, "i_max": i_max})
    report.add(CheckResult(
        check="gh_monotonicity",
        status="pass" if not violations else "fail",
        computed=min(gaps),
        expected=0.0,
        tolerance=0.0,
        witness=violations[0] if violations else None,
    ))
    return report

