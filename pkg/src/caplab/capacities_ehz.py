"""EHZ capacity: closed-form p-product rule, period gluing, and a loop-space solver.

The solver minimises the scale-invariant dual action functional

    F(z) = mean_t h_K(z'(t))^p / A(z)^(p/2)

over zero-mean loops z(t) = 2 Re sum_{j=1..N} a_j e^{ijt} in R^{2n}, and returns
c = (pi^p min F)^(2/p).  With this normalisation the disc of area a gives a.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import List, Sequence

import numpy as np

from .bodies import BodyOracle
from .errors import InvalidInputError, SolverDidNotConverge, UnsupportedBodyError
from .seqcomb import power_mean

DEFAULT_MODES = 12
DEFAULT_SAMPLES = 1024


# -- closed forms ---------------------------------------------------------------------


def ehz_p_product(c_values: Sequence[float], p: float) -> float:
    """c_EHZ of a p-product from the factor capacities, folded left to right."""
    if not p >= 1:
        raise InvalidInputError(f"p must be >= 1, got {p}")
    values = [float(c) for c in c_values]
    if not values or any(not c > 0 for c in values):
        raise InvalidInputError("capacities must be positive")
    if p >= 2:
        return min(values)
    e = p / (p - 2.0)
    out = values[0]
    for c in values[1:]:
        out = power_mean(out, c, e)
    return out


def glue_period(t1: float, t2: float, p: float) -> float:
    """Period of the closed characteristic glued from periods t1, t2 on a p-product."""
    if not (t1 > 0 and t2 > 0):
        raise InvalidInputError("periods must be positive")
    if p == 2:
        raise InvalidInputError("gluing is undefined at p=2 (the exponent p/(p-2) is singular)")
    if not p >= 1:
        raise InvalidInputError(f"p must be >= 1, got {p}")
    e = 1.0 if math.isinf(p) else p / (p - 2.0)
    return power_mean(t1, t2, e)


def ehz_closed_form(body: BodyOracle) -> float:
    """c_EHZ for bodies whose capacity is known in closed form."""
    kind, par = body.kind, body.params
    if kind == "ball":
        return float(par["capacity"])
    if kind in ("ellipsoid", "polydisc"):
        return float(min(par["a"]))
    if kind == "box":
        w = np.asarray(par["half_widths"])
        if w.size % 2:
            raise UnsupportedBodyError("a box needs an even dimension to carry a symplectic structure")
        return float(np.min(4.0 * w[0::2] * w[1::2]))
    if kind == "p_product":
        return ehz_p_product([ehz_closed_form(f) for f in par["factors"]], par["p"])
    if kind == "toric":
        from .capacities_gh import gh_capacity_concave, gh_capacity_convex

        profile = par["profile"]
        if profile.convex:
            return gh_capacity_convex(profile, 1)
        if profile.concave:
            return gh_capacity_concave(profile, 1)
    raise UnsupportedBodyError(f"no closed-form capacity for a {kind} body")


# -- loops ------------------------------------------------------------------------------


@dataclass(frozen=True)
class LoopConfiguration:
    """Loop z(t) = 2 Re sum_j a_j e^{ijt}; ``coeffs[j-1]`` holds a_j (a_{-j} is its conjugate)."""

    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.ndim != 2 or c.shape[0] < 1 or c.shape[1] % 2:
            raise InvalidInputError("coefficients must have shape (modes, 2n)")
        object.__setattr__(self, "coeffs", c)

    @property
    def modes(self) -> int:
        return self.coeffs.shape[0]

    @property
    def dim(self) -> int:
        return self.coeffs.shape[1]

    def positions(self, samples: int = DEFAULT_SAMPLES) -> np.ndarray:
        cos, sin, _ = _basis(self.modes, samples)
        return 2.0 * (cos @ self.coeffs.real - sin @ self.coeffs.imag)

    def velocities(self, samples: int = DEFAULT_SAMPLES) -> np.ndarray:
        return _velocities(self.coeffs.real, self.coeffs.imag, samples)

    def scaled(self, lam: float) -> "LoopConfiguration":
        return LoopConfiguration(lam * self.coeffs)

    def reversed(self) -> "LoopConfiguration":
        return LoopConfiguration(np.conj(self.coeffs))

    @classmethod
    def circle(cls, area: float, dim: int = 2, pair: int = 0, modes: int = 1) -> "LoopConfiguration":
        """Positively oriented round circle of the given enclosed area in plane ``pair``."""
        r = math.sqrt(abs(area) / math.pi)
        c = np.zeros((modes, dim), dtype=complex)
        c[0, 2 * pair] = r / 2
        c[0, 2 * pair + 1] = -1j * r / 2
        loop = cls(c)
        return loop if area >= 0 else loop.reversed()


@lru_cache(maxsize=32)
def _basis(modes: int, samples: int):
    t = 2.0 * math.pi * np.arange(samples) / samples
    j = np.arange(1, modes + 1)
    arg = np.outer(t, j)
    return np.cos(arg), np.sin(arg), j.astype(float)


def _velocities(re, im, samples):
    cos, sin, j = _basis(re.shape[0], samples)
    return -2.0 * ((sin * j) @ re + (cos * j) @ im)


def _action(re, im) -> float:
    _, _, j = _basis(re.shape[0], 4)
    rq, rp, iq, ip = re[:, 0::2], re[:, 1::2], im[:, 0::2], im[:, 1::2]
    return float(4.0 * math.pi * np.sum(j[:, None] * (iq * rp - rq * ip)))


def _action_grad(re, im):
    _, _, j = _basis(re.shape[0], 4)
    w = 4.0 * math.pi * j[:, None]
    g_re, g_im = np.empty_like(re), np.empty_like(im)
    g_re[:, 0::2] = -w * im[:, 1::2]
    g_re[:, 1::2] = w * im[:, 0::2]
    g_im[:, 0::2] = w * re[:, 1::2]
    g_im[:, 1::2] = -w * re[:, 0::2]
    return g_re, g_im


def action(z: LoopConfiguration) -> float:
    """Symplectic action (1/2) int <-J z', z> dt for omega = dq ^ dp."""
    return _action(z.coeffs.real, z.coeffs.imag)


def _require_smooth(body: BodyOracle):
    if not body.smooth or body.support_grad is None:
        raise UnsupportedBodyError(f"the loop-space solver needs a smooth body, got {body.kind}")


def clarke_objective(body: BodyOracle, z: LoopConfiguration, p: float = 2.0,
                     samples: int = DEFAULT_SAMPLES) -> float:
    """(1/2pi) int_0^{2pi} h_K(z'(t))^p dt by the periodic trapezoid rule."""
    _require_smooth(body)
    if not p > 1:
        raise InvalidInputError("the dual functional needs p > 1")
    if samples & (samples - 1):
        raise InvalidInputError("samples must be a power of two")
    if z.dim != body.dim:
        raise InvalidInputError("loop and body dimensions differ")
    return float(np.mean(body.support(z.velocities(samples)) ** p))


def _functional(body, re, im, p, samples, with_grad=True):
    """F = Phi / A^(p/2) and its gradient with respect to (Re a, Im a)."""
    a = _action(re, im)
    if not a > 0:
        return math.inf, None, None
    vel = _velocities(re, im, samples)
    h = body.support(vel)
    phi = float(np.mean(h ** p))
    f = phi / a ** (p / 2.0)
    if not with_grad:
        return f, None, None
    cos, sin, j = _basis(re.shape[0], samples)
    g_vel = (p / samples) * (h ** (p - 1.0))[:, None] * body.support_grad(vel)
    dphi_re = -2.0 * (sin * j).T @ g_vel
    dphi_im = -2.0 * (cos * j).T @ g_vel
    da_re, da_im = _action_grad(re, im)
    scale = a ** (-p / 2.0)
    corr = (p / 2.0) * phi * a ** (-p / 2.0 - 1.0)
    return f, scale * dphi_re - corr * da_re, scale * dphi_im - corr * da_im


def clarke_functional(body: BodyOracle, z: LoopConfiguration, p: float = 2.0,
                      samples: int = DEFAULT_SAMPLES):
    """Scale-invariant functional and its gradient as a complex array (d/dRe + i d/dIm)."""
    _require_smooth(body)
    f, g_re, g_im = _functional(body, z.coeffs.real, z.coeffs.imag, p, samples)
    grad = None if g_re is None else g_re + 1j * g_im
    return f, grad


@dataclass
class ClarkeResult:
    capacity: float
    loop: LoopConfiguration
    objective: float
    grad_norm: float
    iterations: int
    converged: bool
    restart_capacities: List[float]

    def __iter__(self):
        yield self.capacity
        yield self.loop


def capacity_from_objective(value: float, p: float) -> float:
    return (math.pi ** p * value) ** (2.0 / p)


def _kink_blocks(body, offset=0):
    """Coordinate ranges of product factors whose support enters with exponent q < 2.

    At a loop with such a block identically zero, h^p has a cusp (h_i^q with
    q < 2), so plain gradient descent only creeps towards it.
    """
    if body.kind != "p_product":
        return []
    out = []
    for f in body.params["factors"]:
        if body.params["p"] > 2:
            out.append((offset, offset + f.dim))
        out.extend(_kink_blocks(f, offset))
        offset += f.dim
    return out


def _zero_blocks(body, blocks, re, im, f, p, samples):
    """Zero every block whose removal does not increase F (active-manifold step)."""
    changed = False
    for lo, hi in blocks:
        if not (np.any(re[:, lo:hi]) or np.any(im[:, lo:hi])):
            continue
        t_re, t_im = re.copy(), im.copy()
        t_re[:, lo:hi] = 0.0
        t_im[:, lo:hi] = 0.0
        f_new = _functional(body, t_re, t_im, p, samples, with_grad=False)[0]
        if f_new <= f:
            norm = 1.0 / math.sqrt(_action(t_re, t_im))
            re, im, f, changed = t_re * norm, t_im * norm, f_new, True
    return re, im, changed


def _descend(body, re, im, p, samples, gtol, max_iter):
    _, _, j = _basis(re.shape[0], samples)
    precond = (1.0 / j ** 2)[:, None]
    blocks = _kink_blocks(body)
    f, g_re, g_im = _functional(body, re, im, p, samples)
    step = 1.0
    gnorm = math.sqrt(float(np.sum(g_re ** 2) + np.sum(g_im ** 2)))
    it = 0
    while it < max_iter and gnorm > gtol:
        d_re, d_im = -precond * g_re, -precond * g_im
        slope = float(np.sum(g_re * d_re) + np.sum(g_im * d_im))
        step = min(step * 2.0, 1e6)
        while True:
            n_re, n_im = re + step * d_re, im + step * d_im
            f_new = _functional(body, n_re, n_im, p, samples, with_grad=False)[0]
            if f_new <= f + 1e-4 * step * slope or step < 1e-14:
                break
            step *= 0.5
        if not f_new < math.inf:
            break
        norm = 1.0 / math.sqrt(_action(n_re, n_im))
        re, im = n_re * norm, n_im * norm
        f_prev = f
        f, g_re, g_im = _functional(body, re, im, p, samples)
        gnorm = math.sqrt(float(np.sum(g_re ** 2) + np.sum(g_im ** 2)))
        it += 1
        if blocks and it % 25 == 0:
            re, im, changed = _zero_blocks(body, blocks, re, im, f, p, samples)
            if changed:
                f, g_re, g_im = _functional(body, re, im, p, samples)
                gnorm = math.sqrt(float(np.sum(g_re ** 2) + np.sum(g_im ** 2)))
                step = 1.0
                continue
        if step < 1e-14 and f >= f_prev:
            break
    return f, re, im, gnorm, it


def clarke_dual_solve(body: BodyOracle, p: float = 2.0, modes: int = DEFAULT_MODES, restarts: int = 20,
                      seed: int = 0, samples: int = DEFAULT_SAMPLES, gtol: float = 1e-8,
                      max_iter: int = 10_000) -> ClarkeResult:
    """Minimise the dual action functional by preconditioned gradient descent, multi-start.

    The returned loop is normalised to unit action.  Raises SolverDidNotConverge
    if the best restart ends with gradient norm above ``gtol``.
    """
    _require_smooth(body)
    if not p > 1:
        raise InvalidInputError("the dual functional needs p > 1")
    rng = np.random.default_rng(seed)
    j = np.arange(1, modes + 1, dtype=float)[:, None]
    best = None
    caps = []
    for _ in range(restarts):
        re = rng.standard_normal((modes, body.dim)) / j
        im = rng.standard_normal((modes, body.dim)) / j
        a = _action(re, im)
        if a < 0:
            im, a = -im, -a
        if not a > 0:
            continue
        re, im = re / math.sqrt(a), im / math.sqrt(a)
        f, re, im, gnorm, it = _descend(body, re, im, p, samples, gtol, max_iter)
        caps.append(capacity_from_objective(f, p))
        if best is None or f < best[0]:
            best = (f, re, im, gnorm, it)
    f, re, im, gnorm, it = best
    result = ClarkeResult(
        capacity=capacity_from_objective(f, p),
        loop=LoopConfiguration(re + 1j * im),
        objective=f,
        grad_norm=gnorm,
        iterations=it,
        converged=gnorm <= gtol,
        restart_capacities=caps,
    )
    if not result.converged:
        raise SolverDidNotConverge(
            f"gradient norm {gnorm:.3g} > {gtol:g} after {it} iterations",
            best_capacity=result.capacity, grad_norm=gnorm)
    return result
