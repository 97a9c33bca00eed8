"""Combinatorics of capacity sequences c^1, c^2, ... (with c^0 = 0)."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Tuple


from .errors import InvalidInputError, TruncationError
from .report import CheckResult, VerificationReport


@dataclass(frozen=True)
class CapacitySequence:
    values: Tuple[float, ...]
    label: str = ""

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        object.__setattr__(self, "values", vals)
        if any(not (v > 0 and math.isfinite(v)) for v in vals):
            raise InvalidInputError(f"capacity sequence {self.label!r} must be positive and finite")
        if any(b < a for a, b in zip(vals, vals[1:])):
            raise InvalidInputError(f"capacity sequence {self.label!r} must be non-decreasing")

    def __len__(self):
        return len(self.values)

    def c(self, i: int) -> float:
        """The i-th capacity, 1-based, with c^0 = 0."""
        if i == 0:
            return 0.0
        if i > len(self.values):
            raise TruncationError(f"sequence {self.label!r} has only {len(self.values)} terms, need c^{i}")
        return self.values[i - 1]


def as_sequence(s, label: str = "") -> CapacitySequence:
    if isinstance(s, CapacitySequence):
        return s
    return CapacitySequence(tuple(s), label)


def power_mean(x: float, y: float, e: float) -> float:
    """(x^e + y^e)^(1/e), overflow-safe; e=+inf gives max, e=-inf min.

    Zero arguments are allowed only for e > 0, where they drop out.
    """
    if e == math.inf:
        return max(x, y)
    if e == -math.inf:
        return min(x, y)
    if e == 0:
        raise InvalidInputError("exponent must be nonzero")
    if min(x, y) < 0 or (e < 0 and min(x, y) == 0):
        raise InvalidInputError("power mean with a nonpositive exponent needs positive arguments")
    if e == 1:
        return x + y
    terms = [t for t in (x, y) if t > 0]
    if not terms:
        return 0.0
    if len(terms) == 1:
        return terms[0]
    # scale by the dominant term so every ratio power is <= 1
    scale = max(terms) if e > 0 else min(terms)
    return scale * sum((t / scale) ** e for t in terms) ** (1.0 / e)


def combination_exponent(p: float, infinity_rule: str = "sum") -> float:
    """p/(p-2); at p=inf the Cartesian rule ("sum", exponent 1) or the max reading."""
    if math.isinf(p):
        if infinity_rule == "sum":
            return 1.0
        if infinity_rule == "max":
            return math.inf
        raise InvalidInputError(f"unknown infinity rule {infinity_rule!r}")
    if p == 2:
        raise InvalidInputError("the exponent p/(p-2) is singular at p=2")
    return p / (p - 2.0)


# -- merged sequence --------------------------------------------------------------


def merged_with_provenance(s1, s2, k: int):
    """k-th smallest term of the union with repetitions: ``(value, label, index)``.

    Ties are broken by (value, label, index); the value never depends on it.
    """
    value, label, _, index = _merged(as_sequence(s1, "s1"), as_sequence(s2, "s2"), k)
    return value, label, index


def _merged(s1, s2, k):
    if k < 1:
        raise InvalidInputError("k must be >= 1")
    if k > len(s1) + len(s2):
        raise TruncationError(f"need at least {k} terms in total, have {len(s1) + len(s2)}")
    pool = [(v, s1.label, 0, i + 1) for i, v in enumerate(s1.values)]
    pool += [(v, s2.label, 1, j + 1) for j, v in enumerate(s2.values)]
    pool.sort()
    value = pool[k - 1][0]
    # unseen terms are >= the last known one, so they cannot undercut value
    if value > s1.values[-1] or value > s2.values[-1]:
        raise TruncationError(f"M_{k} is not determined by the given prefixes")
    return pool[k - 1]


def merged_sequence(s1, s2, k: int) -> float:
    return merged_with_provenance(s1, s2, k)[0]


# -- p-combinations --------------------------------------------------------------


def best_split(s1, s2, p: float, k: int, branch: str, infinity_rule: str = "sum"):
    """Evaluate the p-combination of two sequences at index k.

    ``branch="convex"``: min over i+j=k (i, j >= 0, c^0 = 0), needs p >= 2.
    ``branch="concave"``: max over i+j=k+1 with i, j >= 1, needs 1 <= p <= 2.
    Returns ``(value, (i, j))``; at p=2 the split is that of the merged sequence.
    """
    s1, s2 = as_sequence(s1, "s1"), as_sequence(s2, "s2")
    if k < 1:
        raise InvalidInputError("k must be >= 1")
    if branch == "convex" and not p >= 2:
        raise InvalidInputError(f"convex branch needs p >= 2, got {p}")
    if branch == "concave" and not 1 <= p <= 2:
        raise InvalidInputError(f"concave branch needs 1 <= p <= 2, got {p}")
    if branch not in ("convex", "concave"):
        raise InvalidInputError(f"unknown branch {branch!r}")
    if p == 2:
        value, _, which, index = _merged(s1, s2, k)
        return value, ((index, None) if which == 0 else (None, index))
    e = combination_exponent(p, infinity_rule)
    if branch == "convex":
        splits = [(i, k - i) for i in range(k + 1)]
        pick = min
    else:
        splits = [(i, k + 1 - i) for i in range(1, k + 1)]
        pick = max
    scored = [(power_mean(s1.c(i), s2.c(j), e), (i, j)) for i, j in splits]
    return pick(scored, key=lambda t: t[0])


def p_combination(s1, s2, p: float, k: int, branch: str, infinity_rule: str = "sum") -> float:
    return best_split(s1, s2, p, k, branch, infinity_rule)[0]


def conjecture_capacity_eval(s1, s2, p: float, k: int, infinity_rule: str = "sum") -> float:
    """Conjectured c^k of a p-product from the factor sequences.

    The branch follows p: min-combination above 2, max-combination below 2,
    merged sequence at 2.  ``infinity_rule`` picks the p=inf reading: "sum"
    (exponent limit p/(p-2) -> 1, the Cartesian product rule) or "max".
    """
    if not p >= 1:
        raise InvalidInputError(f"p must be >= 1, got {p}")
    if p == 2:
        return merged_sequence(s1, s2, k)
    return p_combination(s1, s2, p, k, "convex" if p > 2 else "concave", infinity_rule)


# -- lemmas -----------------------------------------------------------------------


def lemma_calculus_min(a: float, b: float, q: float) -> float:
    """min over x in [0,1] of a x^(q/2) + b (1-x)^(q/2), in closed form."""
    if not (a > 0 and b > 0):
        raise InvalidInputError("a and b must be positive")
    if not q >= 1:
        raise InvalidInputError(f"q must be >= 1, got {q}")
    if q <= 2:
        return min(a, b)
    e = 2.0 / (2.0 - q)
    return power_mean(a, b, e)


def minmax_identity_audit(s1, s2, k_max: int) -> VerificationReport:
    """Brute-force min-max, max-min and merged-sequence values for k = 1..k_max."""
    s1, s2 = as_sequence(s1, "s1"), as_sequence(s2, "s2")
    witness = None
    rows = []
    for k in range(1, k_max + 1):
        minmax = min(max(s1.c(i), s2.c(k - i)) for i in range(k + 1))
        maxmin = max(min(s1.c(i), s2.c(k + 1 - i)) for i in range(1, k + 1))
        merged = merged_sequence(s1, s2, k)
        rows.append((minmax, maxmin, merged))
        if witness is None and not (minmax == maxmin == merged):
            witness = {"k": k, "minmax": minmax, "maxmin": maxmin, "merged": merged}
    report = VerificationReport(meta={"k_max": k_max})
    report.add(CheckResult(
        check="minmax_identity",
        status="pass" if witness is None else "fail",
        computed=[r[2] for r in rows],
        expected=[r[0] for r in rows],
        tolerance=0.0,
        witness=witness,
    ))
    return report


def ball_sequence(r: float, d: int, length: int) -> CapacitySequence:
    """c^k(B^{2d}[r]) = r * ceil(k/d)."""
    return CapacitySequence(tuple(r * math.ceil(k / d) for k in range(1, length + 1)), f"B^{2 * d}[{r}]")


def ball_decomposition_audit(sX, sY, p: float, n: int, m: int, r: float,
                             k_max: int = None, infinity_rule: str = "sum",
                             rtol: float = 1e-12) -> VerificationReport:
    """Compare the conjectured capacities of X x_p Y with those of B^{2(n+m)}[r].

    The ``ball_consistency`` check passes when every index agrees; its witness
    lists every disagreement (first one first).  At p=2 the factor sequences
    are also compared against the balls of their own dimensions.
    """
    sX, sY = as_sequence(sX, "X"), as_sequence(sY, "Y")
    k_max = 2 * (n + m) if k_max is None else k_max
    if min(len(sX), len(sY)) < min(k_max, 2 * (n + m)):
        raise TruncationError(f"sequences need at least {min(k_max, 2 * (n + m))} terms")
    ball = ball_sequence(r, n + m, k_max)
    mismatches = []
    for k in range(1, k_max + 1):
        value = conjecture_capacity_eval(sX, sY, p, k, infinity_rule)
        target = ball.c(k)
        if abs(value - target) > rtol * target:
            mismatches.append({"k": k, "computed": value, "ball": target})
    report = VerificationReport(meta={"p": p, "n": n, "m": m, "r": r, "k_max": k_max})
    report.add(CheckResult(
        check="ball_consistency",
        status="pass" if not mismatches else "fail",
        computed=len(mismatches),
        expected=0,
        tolerance=rtol,
        witness={"first_failure": mismatches[0]["k"], "mismatches": mismatches} if mismatches else None,
    ))
    if p == 2:
        for seq, d, name in ((sX, n, "X"), (sY, m, "Y")):
            ref = ball_sequence(r, d, len(seq))
            devs = [{"k": k, "value": seq.c(k), "ball": ref.c(k)}
                    for k in range(1, len(seq) + 1) if abs(seq.c(k) - ref.c(k)) > rtol * ref.c(k)]
            report.add(CheckResult(
                check=f"factor_{name}_matches_ball",
                status="pass" if not devs else "fail",
                computed=len(devs),
                expected=0,
                tolerance=rtol,
                witness=devs or None,
            ))
    return report

