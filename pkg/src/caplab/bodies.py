"""Convex bodies described by gauge and support evaluators.

Coordinates on R^{2n} are interleaved symplectic pairs ``(q_1, p_1, ..., q_n, p_n)``
so that concatenating factors of a product keeps every pair intact.  All
evaluators are vectorised over leading axes: ``gauge(x)`` maps an array of
shape ``(..., dim)`` to shape ``(...)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import InvalidInputError, InvalidSpecError, InvariantViolation, UnsupportedBodyError

KINDS = ("ball", "ellipsoid", "polydisc", "box", "toric", "p_product", "custom")

Evaluator = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class BodyOracle:
    """A convex body containing the origin in its interior.

    ``support_grad`` is only provided for bodies whose support function is
    differentiable away from the origin; the loop-space solver needs it.
    """

    dim: int
    gauge: Evaluator
    support: Evaluator
    kind: str = "custom"
    closed_form_volume: Optional[float] = None
    smooth: bool = False
    support_grad: Optional[Evaluator] = None
    params: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.dim < 1:
            raise InvalidSpecError(f"dimension must be positive, got {self.dim}")
        if self.kind not in KINDS:
            raise InvalidSpecError(f"unknown body kind {self.kind!r}")

    def contains(self, x) -> np.ndarray:
        return self.gauge(x) <= 1.0


@dataclass(frozen=True)
class PProductSpec:
    p: float
    factors: tuple

    def __post_init__(self):
        if not self.p >= 1:
            raise InvalidSpecError(f"p-product exponent must be >= 1, got {self.p}")
        if len(self.factors) == 0:
            raise InvalidSpecError("p-product needs at least one factor")

    @property
    def q(self) -> float:
        return conjugate_exponent(self.p)

    @property
    def dim(self) -> int:
        return sum(f.dim for f in self.factors)


def conjugate_exponent(p: float) -> float:
    """Return q with 1/p + 1/q = 1 (p=1 gives inf, p=inf gives 1)."""
    if p == 1:
        return math.inf
    if math.isinf(p):
        return 1.0
    return p / (p - 1.0)


def _positive_params(values, name) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(values, dtype=float))
    if arr.ndim != 1 or arr.size == 0:
        raise InvalidSpecError(f"{name} must be a non-empty list of numbers", f"/{name}")
    for i, v in enumerate(arr):
        if not (np.isfinite(v) and v > 0):
            raise InvalidSpecError(f"{name}[{i}] must be a positive finite number, got {v}", f"/{name}/{i}")
    return arr


def _pair_norms(x) -> np.ndarray:
    """Euclidean norms of the complex coordinates z_k = (q_k, p_k)."""
    x = np.asarray(x, dtype=float)
    pairs = x.reshape(x.shape[:-1] + (x.shape[-1] // 2, 2))
    return np.sqrt(np.sum(pairs * pairs, axis=-1))


# -- standard bodies ---------------------------------------------------------


def ellipsoid(a: Sequence[float]) -> BodyOracle:
    """E(a_1, ..., a_n) = {sum pi |z_k|^2 / a_k <= 1} in R^{2n}."""
    a = _positive_params(a, "a")
    n = a.size
    sq_radii = np.repeat(a / math.pi, 2)  # semi-axis squared per real coordinate

    def gauge(x):
        x = np.asarray(x, dtype=float)
        return np.sqrt(np.sum(x * x / sq_radii, axis=-1))

    def support(u):
        u = np.asarray(u, dtype=float)
        return np.sqrt(np.sum(sq_radii * u * u, axis=-1))

    def support_grad(u):
        u = np.asarray(u, dtype=float)
        h = support(u)[..., None]
        with np.errstate(invalid="ignore", divide="ignore"):
            g = sq_radii * u / h
        return np.where(h > 0, g, 0.0)

    return BodyOracle(
        dim=2 * n,
        gauge=gauge,
        support=support,
        kind="ellipsoid",
        closed_form_volume=float(np.prod(a) / math.factorial(n)),
        smooth=True,
        support_grad=support_grad,
        params={"a": tuple(a.tolist())},
    )


def ball(capacity: float, dim: int) -> BodyOracle:
    """B^{dim}[capacity]: the Euclidean ball of radius sqrt(capacity/pi)."""
    if dim < 2 or dim % 2:
        raise InvalidSpecError(f"ball dimension must be a positive even integer, got {dim}", "/dim")
    if not (np.isfinite(capacity) and capacity > 0):
        raise InvalidSpecError(f"capacity must be positive, got {capacity}", "/capacity")
    body = ellipsoid([capacity] * (dim // 2))
    return BodyOracle(
        dim=body.dim,
        gauge=body.gauge,
        support=body.support,
        kind="ball",
        closed_form_volume=body.closed_form_volume,
        smooth=True,
        support_grad=body.support_grad,
        params={"capacity": float(capacity), "a": body.params["a"]},
    )


def polydisc(a: Sequence[float]) -> BodyOracle:
    """P(a_1, ..., a_n) = B^2[a_1] x ... x B^2[a_n]."""
    a = _positive_params(a, "a")
    radii = np.sqrt(a / math.pi)

    def gauge(x):
        return np.max(_pair_norms(x) / radii, axis=-1)

    def support(u):
        return np.sum(radii * _pair_norms(u), axis=-1)

    return BodyOracle(
        dim=2 * a.size,
        gauge=gauge,
        support=support,
        kind="polydisc",
        closed_form_volume=float(np.prod(a)),
        smooth=False,
        params={"a": tuple(a.tolist())},
    )


def box(half_widths: Sequence[float]) -> BodyOracle:
    """The axis-parallel box prod [-w_i, w_i]; any dimension."""
    w = _positive_params(half_widths, "half_widths")

    def gauge(x):
        return np.max(np.abs(np.asarray(x, dtype=float)) / w, axis=-1)

    def support(u):
        return np.sum(w * np.abs(np.asarray(u, dtype=float)), axis=-1)

    return BodyOracle(
        dim=w.size,
        gauge=gauge,
        support=support,
        kind="box",
        closed_form_volume=float(np.prod(2.0 * w)),
        smooth=False,
        params={"half_widths": tuple(w.tolist())},
    )


def make_standard_body(kind: str, **params) -> BodyOracle:
    """Build a standard body from tagged parameters.

    >>> make_standard_body("ball", capacity=1.0, dim=2).closed_form_volume
    1.0
    """
    if kind == "ball":
        return ball(params["capacity"], params.get("dim", 2))
    if kind == "ellipsoid":
        return ellipsoid(params["a"])
    if kind == "polydisc":
        return polydisc(params["a"])
    if kind == "box":
        return box(params["half_widths"])
    raise InvalidSpecError(f"not a standard body kind: {kind!r}", "/type")


# -- p-products ----------------------------------------------------------------


def _split(x, dims):
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != sum(dims):
        raise InvalidInputError(f"expected last axis of length {sum(dims)}, got {x.shape[-1]}")
    out, start = [], 0
    for d in dims:
        out.append(x[..., start:start + d])
        start += d
    return out


def _p_combine(values, p):
    """(sum v_i^p)^(1/p) over the leading axis; max for p=inf."""
    values = np.asarray(values, dtype=float)
    if math.isinf(p):
        return np.max(values, axis=0)
    if p == 1:
        return np.sum(values, axis=0)
    top = np.max(values, axis=0)
    safe = np.where(top > 0, top, 1.0)
    return np.where(top > 0, safe * np.sum((values / safe) ** p, axis=0) ** (1.0 / p), 0.0)


def gauge_p_product(spec: PProductSpec, x) -> np.ndarray:
    dims = [f.dim for f in spec.factors]
    parts = _split(x, dims)
    return _p_combine([f.gauge(xi) for f, xi in zip(spec.factors, parts)], spec.p)


def support_p_product(spec: PProductSpec, u) -> np.ndarray:
    dims = [f.dim for f in spec.factors]
    parts = _split(u, dims)
    return _p_combine([f.support(ui) for f, ui in zip(spec.factors, parts)], spec.q)


def _support_grad_p_product(spec: PProductSpec, u) -> np.ndarray:
    q = spec.q
    dims = [f.dim for f in spec.factors]
    parts = _split(u, dims)
    hs = [f.support(ui) for f, ui in zip(spec.factors, parts)]
    h = _p_combine(hs, q)
    blocks = []
    for f, ui, hi in zip(spec.factors, parts, hs):
        with np.errstate(invalid="ignore", divide="ignore"):
            weight = np.where(h > 0, (hi / np.where(h > 0, h, 1.0)) ** (q - 1.0), 0.0)
        blocks.append(weight[..., None] * f.support_grad(ui))
    return np.concatenate(blocks, axis=-1)


def gamma_ratio(dims: Sequence[int], p: float) -> float:
    """prod Gamma(d_i/p + 1) / Gamma(sum d_i / p + 1); equals 1 for p=inf."""
    if math.isinf(p):
        return 1.0
    args = [d / p + 1.0 for d in dims]
    total = sum(dims) / p + 1.0
    if total < 170.0:
        return math.prod(math.gamma(t) for t in args) / math.gamma(total)
    return math.exp(sum(math.lgamma(t) for t in args) - math.lgamma(total))


def volume_exact_p_product(spec: PProductSpec) -> float:
    """Volume of a p-product from the factor volumes, folded left to right."""
    vols = [f.closed_form_volume for f in spec.factors]
    if any(v is None for v in vols):
        raise UnsupportedBodyError("every factor needs a closed-form volume")
    dim, vol = spec.factors[0].dim, vols[0]
    for f, v in zip(spec.factors[1:], vols[1:]):
        vol = gamma_ratio([dim, f.dim], spec.p) * vol * v
        dim += f.dim
    return float(vol)


def p_product(p: float, factors: Sequence[BodyOracle]) -> BodyOracle:
    p = float(p)
    spec = PProductSpec(p=p, factors=tuple(factors))
    try:
        volume = volume_exact_p_product(spec)
    except UnsupportedBodyError:
        volume = None
    smooth = all(f.smooth for f in spec.factors) and 1.0 < p < math.inf
    grad = None
    if all(f.support_grad is not None for f in spec.factors) and p > 1.0:
        grad = lambda u: _support_grad_p_product(spec, u)  # noqa: E731
    return BodyOracle(
        dim=spec.dim,
        gauge=lambda x: gauge_p_product(spec, x),
        support=lambda u: support_p_product(spec, u),
        kind="p_product",
        closed_form_volume=volume,
        smooth=smooth,
        support_grad=grad,
        params={"p": p, "factors": spec.factors},
    )


# -- validation and volume -------------------------------------------------------


def check_invariants(body: BodyOracle, samples: int = 100, seed: int = 0, rtol: float = 1e-9) -> None:
    """Sample the gauge/support invariants; raise InvariantViolation on failure."""
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((samples, body.dim))
    u = rng.standard_normal((samples, body.dim))
    lam = rng.uniform(0.1, 10.0, size=samples)

    gx, hu = body.gauge(x), body.support(u)
    if not (np.all(np.isfinite(gx)) and np.all(gx > 0)):
        raise InvariantViolation("gauge must be finite and positive away from the origin")
    if not np.allclose(body.gauge(lam[:, None] * x), lam * gx, rtol=rtol, atol=0):
        raise InvariantViolation("gauge is not positively 1-homogeneous")
    if not np.allclose(body.support(lam[:, None] * u), lam * hu, rtol=rtol, atol=0):
        raise InvariantViolation("support is not positively 1-homogeneous")
    sub = body.support(u + u[::-1])
    if np.any(sub > (hu + hu[::-1]) * (1 + rtol)):
        raise InvariantViolation("support is not subadditive")
    pairing = np.sum(x * u, axis=-1)
    if np.any(pairing > gx * hu * (1 + rtol) + 1e-12):
        raise InvariantViolation("duality pairing <x,u> <= |x|_K h_K(u) fails")


def bounding_box(body: BodyOracle):
    eye = np.eye(body.dim)
    return -body.support(-eye), body.support(eye)


def volume_monte_carlo(body: BodyOracle, samples: int, seed: int, chunk: int = 1 << 16):
    """Hit-or-miss volume estimate; returns ``(mean, standard_error)``."""
    if samples < 1:
        raise InvalidInputError("samples must be >= 1")
    lo, hi = bounding_box(body)
    box_volume = float(np.prod(hi - lo))
    rng = np.random.default_rng(seed)
    hits, done = 0, 0
    while done < samples:
        m = min(chunk, samples - done)
        pts = lo + (hi - lo) * rng.random((m, body.dim))
        hits += int(np.count_nonzero(body.gauge(pts) <= 1.0))
        done += m
    frac = hits / samples
    return box_volume * frac, box_volume * math.sqrt(frac * (1.0 - frac) / samples)
