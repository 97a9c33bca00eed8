"""Toric domains X_Omega = mu^{-1}(Omega) with mu(z) = pi (|z_1|^2, ..., |z_n|^2).

A profile Omega in the closed orthant is described by its gauge on the
orthant.  Closed forms are used for weighted simplices, boxes and l^s
orthant balls; composite (p-product) and custom profiles fall back to a
numeric search over the gauge-normalised boundary {theta / |theta|_Omega}.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import optimize, special

from . import bodies
from .bodies import BodyOracle, _p_combine, conjugate_exponent
from .errors import InvalidInputError, InvalidSpecError, InvariantViolation

SHAPES = ("simplex_weighted", "box", "lp_orthant", "p_product", "custom")

# custom boundary searches are limited to this many orthant coordinates
MAX_CUSTOM_DIM = 3
GRID_PER_ANGLE = 16
ZOOM_POINTS = 9
ZOOM_TOL = 1e-12
ZOOM_CHUNK = 512
POLISH_STEP = 0.02
EDGE_BAND = 0.05


@dataclass(frozen=True)
class ToricProfile:
    n: int
    gauge_plus: Callable[[np.ndarray], np.ndarray]
    shape: str = "custom"
    convex: bool = False
    concave: bool = False
    params: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.n < 1:
            raise InvalidSpecError(f"profile dimension must be positive, got {self.n}")
        if self.shape not in SHAPES:
            raise InvalidSpecError(f"unknown profile shape {self.shape!r}")

    @property
    def convexity(self) -> str:
        if self.convex and self.concave:
            return "both"
        if self.convex:
            return "convex"
        if self.concave:
            return "concave"
        return "unknown"

    def scaled(self, lam: float) -> "ToricProfile":
        """The profile lam * Omega (gauge divided by lam)."""
        if not lam > 0:
            raise InvalidInputError("scale factor must be positive")
        g = self.gauge_plus
        params = dict(self.params)
        for key in ("a", "radii"):
            if key in params:
                params[key] = tuple(lam * t for t in params[key])
        if self.shape == "p_product":
            f1, f2 = params["factors"]
            params["factors"] = (f1.scaled(lam), f2.scaled(lam))
        return ToricProfile(self.n, lambda x: g(x) / lam, self.shape, self.convex, self.concave, params)


def _orthant(v, n, name="v") -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.shape[-1] != n:
        raise InvalidInputError(f"{name} must have last axis {n}, got {v.shape[-1]}")
    return v


# -- constructors ------------------------------------------------------------------


def simplex_profile(a) -> ToricProfile:
    """{sum x_i / a_i <= 1}; moment image of E(a)."""
    a = bodies._positive_params(a, "a")
    return ToricProfile(
        n=a.size,
        gauge_plus=lambda x: np.sum(np.asarray(x, dtype=float) / a, axis=-1),
        shape="simplex_weighted",
        convex=True,
        concave=True,
        params={"a": tuple(a.tolist())},
    )


def box_profile(a) -> ToricProfile:
    """prod [0, a_i]; moment image of P(a)."""
    a = bodies._positive_params(a, "a")
    return ToricProfile(
        n=a.size,
        gauge_plus=lambda x: np.max(np.asarray(x, dtype=float) / a, axis=-1),
        shape="box",
        convex=True,
        concave=a.size == 1,
        params={"a": tuple(a.tolist())},
    )


def lp_orthant_profile(power: float, radii) -> ToricProfile:
    """{sum (x_i / r_i)^s <= 1}: convex for s >= 1, concave for s <= 1."""
    r = bodies._positive_params(radii, "radii")
    s = float(power)
    if not s > 0:
        raise InvalidSpecError(f"power must be positive, got {power}", "/power")
    if math.isinf(s):
        prof = box_profile(r)
        return ToricProfile(r.size, prof.gauge_plus, "lp_orthant", True, r.size == 1,
                            {"power": s, "radii": tuple(r.tolist())})

    def gauge(x):
        y = np.asarray(x, dtype=float) / r
        return _p_combine(np.moveaxis(y, -1, 0), s)

    return ToricProfile(
        n=r.size,
        gauge_plus=gauge,
        shape="lp_orthant",
        convex=s >= 1 or r.size == 1,
        concave=s <= 1 or r.size == 1,
        params={"power": s, "radii": tuple(r.tolist())},
    )


def profile_p_product(omega1: ToricProfile, omega2: ToricProfile, p: float) -> ToricProfile:
    """Profile of X_{Omega1} x_p X_{Omega2}: the (p/2)-product of the profiles."""
    p = float(p)
    if not p >= 1:
        raise InvalidInputError(f"p must be >= 1, got {p}")
    s = p / 2.0
    n1 = omega1.n

    def gauge(x):
        x = np.asarray(x, dtype=float)
        return _p_combine([omega1.gauge_plus(x[..., :n1]), omega2.gauge_plus(x[..., n1:])], s)

    return ToricProfile(
        n=n1 + omega2.n,
        gauge_plus=gauge,
        shape="p_product",
        convex=omega1.convex and omega2.convex and p >= 2,
        concave=omega1.concave and omega2.concave and p <= 2,
        params={"p": p, "factors": (omega1, omega2)},
    )


def profile_from_spec(spec: dict, pointer: str = "") -> ToricProfile:
    """Parse {"type": "simplex"|"box"|"lp_orthant", ...}; unknown keys are errors."""
    if not isinstance(spec, dict):
        raise InvalidSpecError("profile must be a JSON object", pointer)
    kind = spec.get("type")
    allowed = {"simplex": {"type", "a"}, "box": {"type", "a"}, "lp_orthant": {"type", "power", "radii"}}
    if kind not in allowed:
        raise InvalidSpecError(f"unknown profile type {kind!r}", pointer + "/type")
    for key in spec:
        if key not in allowed[kind]:
            raise InvalidSpecError(f"unknown key {key!r}", f"{pointer}/{key}")
    for key in allowed[kind] - {"type"}:
        if key not in spec:
            raise InvalidSpecError(f"missing key {key!r}", f"{pointer}/{key}")
    if kind == "lp_orthant":
        power = spec["power"]
        if power == "inf":
            power = math.inf
        if isinstance(power, bool) or not isinstance(power, (int, float)):
            raise InvalidSpecError("power must be a number or \"inf\"", pointer + "/power")
        values = _number_list(spec["radii"], pointer + "/radii")
    else:
        values = _number_list(spec["a"], pointer + "/a")
    try:
        if kind == "simplex":
            return simplex_profile(values)
        if kind == "box":
            return box_profile(values)
        return lp_orthant_profile(power, values)
    except InvalidSpecError as exc:
        raise InvalidSpecError(exc.message, pointer + exc.pointer) from None


def _number_list(value, pointer):
    if not isinstance(value, list) or not value:
        raise InvalidSpecError("expected a non-empty list of numbers", pointer)
    for i, v in enumerate(value):
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise InvalidSpecError("expected a number", f"{pointer}/{i}")
    return value


# -- boundary search ---------------------------------------------------------------


def _angles_to_directions(phi) -> np.ndarray:
    """Hyperspherical angles in [0, pi/2]^{n-1} -> unit vectors in the closed orthant."""
    phi = np.atleast_2d(phi)
    m, k = phi.shape
    out = np.ones((m, k + 1))
    sin_prod = np.ones(m)
    for i in range(k):
        out[:, i] = sin_prod * np.cos(phi[:, i])
        sin_prod = sin_prod * np.sin(phi[:, i])
    out[:, k] = sin_prod
    return np.clip(out, 0.0, None)


def boundary_extremum(gauge_plus, n: int, objective, rows, sense: str = "min", seeds: int = 3) -> np.ndarray:
    """Extremise ``objective`` over {w >= 0 : |w|_Omega = 1}, once per row of ``rows``.

    ``objective(W, R)`` gets boundary points W of shape (r, m, n) and the rows
    R of shape (r, d), and returns (r, m).  A 16-per-angle grid is followed by
    zooming around the best ``seeds`` grid points; this finds the global
    extremum whenever the sublevel sets on the boundary are connected, which
    holds for linear objectives on convex and concave profiles.
    """
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    sign = 1.0 if sense == "min" else -1.0
    if n == 1:
        w = np.ones((1, 1)) / gauge_plus(np.ones((1, 1)))[:, None]
        return objective(np.broadcast_to(w, (rows.shape[0], 1, 1)), rows)[:, 0]
    if n > MAX_CUSTOM_DIM:
        raise InvalidInputError(f"numeric boundary search is limited to n <= {MAX_CUSTOM_DIM}, got {n}")
    if rows.shape[0] > ZOOM_CHUNK:
        return np.concatenate([boundary_extremum(gauge_plus, n, objective, rows[i:i + ZOOM_CHUNK], sense, seeds)
                               for i in range(0, rows.shape[0], ZOOM_CHUNK)])
    k = n - 1
    r = rows.shape[0]

    def values(phi):  # phi: (r, m, k)
        theta = _angles_to_directions(phi.reshape(-1, k))
        w = theta / gauge_plus(theta)[:, None]
        return sign * objective(w.reshape(r, -1, n), rows)

    def values_row(phi, i):
        theta = _angles_to_directions(np.asarray(phi)[None, :])
        w = theta / gauge_plus(theta)[:, None]
        return sign * objective(w[None], rows[i:i + 1])[0, 0]

    axis = np.linspace(0.0, math.pi / 2, GRID_PER_ANGLE)
    grid = np.array(np.meshgrid(*([axis] * k), indexing="ij")).reshape(k, -1).T
    vals = values(np.broadcast_to(grid, (r,) + grid.shape))
    best = vals.min(axis=1)
    seeds = min(seeds, grid.shape[0])
    centers = grid[np.argsort(vals, axis=1, kind="stable")[:, :seeds]]  # (r, seeds, k)
    offsets = np.linspace(-1.0, 1.0, ZOOM_POINTS)
    offsets = np.array(np.meshgrid(*([offsets] * k), indexing="ij")).reshape(k, -1).T
    half_width = axis[1] - axis[0]
    while half_width > ZOOM_TOL:
        pts = np.clip(centers[:, :, None, :] + half_width * offsets, 0.0, math.pi / 2)
        vals = values(pts.reshape(r, -1, k)).reshape(r, seeds, -1)
        pick = np.argmin(vals, axis=2)
        centers = np.take_along_axis(pts, pick[:, :, None, None], axis=2)[:, :, 0, :]
        best = np.minimum(best, vals.min(axis=(1, 2)))
        # in one angle the extremum lies within one spacing (half_width / 4) of the best sample
        half_width /= 3.0
    if k > 1:
        # in two or more angles narrow curved valleys defeat the zoom; polish each row
        start = centers[np.arange(r), np.argmin(
            values(centers.reshape(r, -1, k)).reshape(r, seeds), axis=1)]
        for i in range(r):
            f = lambda phi: float(values_row(phi, i))  # noqa: E731
            fatol = 1e-14 * max(1.0, abs(best[i]))
            res = optimize.minimize(f, start[i], method="Nelder-Mead", bounds=[(0.0, math.pi / 2)] * k,
                                    options={"xatol": 1e-10, "fatol": fatol, "maxiter": 4000,
                                             "initial_simplex": _local_simplex(start[i], POLISH_STEP)})
            best[i] = min(best[i], res.fun)
            near = np.minimum(res.x, math.pi / 2 - res.x) < EDGE_BAND
            if np.any(near):
                snapped = np.where(near, np.where(res.x < math.pi / 4, 0.0, math.pi / 2), res.x)
                at_edge = float(values_row(snapped, i))
                best[i] = min(best[i], at_edge)
                if at_edge <= res.fun:
                    continue
                # an interior minimum hugging an edge sits in a power-law cusp; logit angles make it smooth
                g = lambda y: float(values_row(math.pi / 2 * special.expit(y), i))  # noqa: E731
                y0 = special.logit(np.clip(res.x / (math.pi / 2), 1e-12, 1 - 1e-12))
                res = optimize.minimize(g, y0, method="Nelder-Mead",
                                        options={"xatol": 1e-10, "fatol": fatol, "maxiter": 4000,
                                                 "initial_simplex": _local_simplex(y0, 1.0, upper=np.inf)})
                best[i] = min(best[i], res.fun)
    return sign * best


def _local_simplex(start, size, upper=math.pi / 2):
    pts = [start.copy()]
    for i in range(start.size):
        pt = start.copy()
        pt[i] = pt[i] + size if pt[i] + size <= upper else pt[i] - size
        pts.append(pt)
    return np.array(pts)


# -- functionals --------------------------------------------------------------------


def _check_nonnegative(v):
    if np.any(v < 0):
        raise InvalidInputError("v must be componentwise nonnegative")


def profile_support(profile: ToricProfile, v, method: str = "auto"):
    """h_Omega(v) = sup_{w in Omega} <v, w> for v >= 0 (vectorised over leading axes)."""
    v = _orthant(v, profile.n)
    _check_nonnegative(v)
    if method == "numeric" or profile.shape == "custom":
        return _on_rows(v, lambda rows: boundary_extremum(profile.gauge_plus, profile.n, _linear, rows, "max"))
    shape, par = profile.shape, profile.params
    if shape == "simplex_weighted":
        return np.max(v * np.asarray(par["a"]), axis=-1)
    if shape == "box":
        return np.sum(v * np.asarray(par["a"]), axis=-1)
    if shape == "lp_orthant":
        s, rv = par["power"], v * np.asarray(par["radii"])
        if s <= 1:
            return np.max(rv, axis=-1)
        return _p_combine(np.moveaxis(rv, -1, 0), conjugate_exponent(s))
    # p_product: support of an s-product is the conjugate-exponent combination
    f1, f2 = par["factors"]
    s = par["p"] / 2.0
    h1 = profile_support(f1, v[..., :f1.n], method)
    h2 = profile_support(f2, v[..., f1.n:], method)
    return _p_combine([h1, h2], conjugate_exponent(s) if s >= 1 else math.inf)


def profile_face_value(profile: ToricProfile, v, method: str = "auto"):
    """[v]_Omega = min over the closure of the outer boundary of <v, w>."""
    v = _orthant(v, profile.n)
    if np.any(v <= 0):
        raise InvalidInputError("[v]_Omega needs a strictly positive v")
    shape, par = profile.shape, profile.params
    if method == "numeric" or shape in ("custom", "p_product"):
        return _on_rows(v, lambda rows: boundary_extremum(profile.gauge_plus, profile.n, _linear, rows, "min"))
    if shape in ("simplex_weighted", "box"):
        # the closure of the outer boundary reaches every axis point a_i e_i
        return np.min(v * np.asarray(par["a"]), axis=-1)
    s, rv = par["power"], v * np.asarray(par["radii"])
    if s >= 1:
        return np.min(rv, axis=-1)
    return _p_combine(np.moveaxis(rv, -1, 0), s / (s - 1.0))


def _linear(w, rows):
    return np.einsum("rmn,rn->rm", w, rows)


def _on_rows(v, fn):
    out = fn(v.reshape(-1, v.shape[-1]))
    return out.reshape(v.shape[:-1]) if v.ndim > 1 else out[0]


def cube_capacity(profile: ToricProfile) -> float:
    return float(1.0 / profile.gauge_plus(np.ones(profile.n)))


# -- toric bodies --------------------------------------------------------------------


def moment_map(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    pairs = x.reshape(x.shape[:-1] + (x.shape[-1] // 2, 2))
    return math.pi * np.sum(pairs * pairs, axis=-1)


def toric_volume(profile: ToricProfile) -> Optional[float]:
    shape, par = profile.shape, profile.params
    if shape == "simplex_weighted":
        return float(np.prod(par["a"]) / math.factorial(profile.n))
    if shape == "box":
        return float(np.prod(par["a"]))
    if shape == "lp_orthant":
        s, n = par["power"], profile.n
        if math.isinf(s):
            return float(np.prod(par["radii"]))
        return float(np.prod(par["radii"]) * math.exp(n * math.lgamma(1 + 1 / s) - math.lgamma(1 + n / s)))
    if shape == "p_product":
        f1, f2 = par["factors"]
        v1, v2 = toric_volume(f1), toric_volume(f2)
        if v1 is None or v2 is None:
            return None
        return bodies.gamma_ratio([2 * f1.n, 2 * f2.n], par["p"]) * v1 * v2
    return None


def toric_body(profile: ToricProfile) -> BodyOracle:
    """X_Omega with gauge sqrt(|mu(x)|_Omega)."""
    n, shape, par = profile.n, profile.shape, profile.params

    def gauge(x):
        return np.sqrt(profile.gauge_plus(moment_map(x)))

    grad = None
    smooth = False
    if shape == "simplex_weighted":
        ell = bodies.ellipsoid(par["a"])
        support, grad, smooth = ell.support, ell.support_grad, True
    elif shape == "box":
        support = bodies.polydisc(par["a"]).support
    elif shape == "lp_orthant":
        t = 2.0 * par["power"]
        scale = np.sqrt(np.asarray(par["radii"]) / math.pi)
        t_conj = math.inf if t <= 1 else conjugate_exponent(t)

        def support(u):
            w = scale * bodies._pair_norms(u)
            return _p_combine(np.moveaxis(w, -1, 0), t_conj)
    elif shape == "p_product":
        f1, f2 = par["factors"]
        prod = bodies.p_product(par["p"], [toric_body(f1), toric_body(f2)])
        support, grad, smooth = prod.support, prod.support_grad, prod.smooth
    else:
        def support(u):
            u = np.asarray(u, dtype=float)
            mods = bodies._pair_norms(u)
            return _on_rows(mods, lambda rows: boundary_extremum(
                profile.gauge_plus, n, lambda w, r: _linear(np.sqrt(w / math.pi), r), rows, "max"))

    return BodyOracle(
        dim=2 * n,
        gauge=gauge,
        support=support,
        kind="toric",
        closed_form_volume=toric_volume(profile),
        smooth=smooth,
        support_grad=grad,
        params={"profile": profile},
    )


# -- validation ----------------------------------------------------------------------


def validate_profile(profile: ToricProfile, samples: int = 10_000, seed: int = 0, rtol: float = 1e-9) -> None:
    """Sample homogeneity and the convexity/concavity tags."""
    rng = np.random.default_rng(seed)
    x = rng.random((samples, profile.n))
    y = rng.random((samples, profile.n))
    lam = rng.uniform(0.1, 10.0, size=samples)
    g = profile.gauge_plus
    gx, gy = g(x), g(y)
    if not np.allclose(g(lam[:, None] * x), lam * gx, rtol=rtol, atol=0):
        raise InvariantViolation("profile gauge is not positively 1-homogeneous")
    if profile.convex:
        # subadditivity of the gauge of the unconditional extension
        sx = x * rng.choice([-1.0, 1.0], size=x.shape)
        sy = y * rng.choice([-1.0, 1.0], size=y.shape)
        if np.any(g(np.abs(sx + sy)) > (gx + gy) * (1 + rtol)):
            raise InvariantViolation("convex-tagged profile fails sampled midpoint convexity")
    if profile.concave:
        if np.any(g(x + y) < (gx + gy) * (1 - rtol)):
            raise InvariantViolation("concave-tagged profile fails the reverse triangle inequality")
