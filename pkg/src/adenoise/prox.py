"""Blockwise proximal setups and the prox-mappings used by the solvers.

A setup splits ``R^N`` into ``m+1`` blocks of size ``k`` and equips it with the
group norm ``sum_j ||u^j||_2`` and the distance-generating function

    omega(u) = C / 2 * (sum_j ||u^j||_2 ** q) ** (2 / q),
    C = (m+1) ** ((q-1)(2-q)/q) / c,

with ``(q, c) = (2, 1/(m+1))`` for ``m <= 1`` and
``(1 + 1/log(m+1), 1/(e log(m+1)))`` otherwise. Two instances matter here:
the complex l1-setup (one block per complex coordinate) and the l2-setup
(one block). All prox-mappings reduce to problems in the complex view

    min_zeta  Re<zeta, z> + C/2 ||zeta||_q^2 + penalty(zeta)

whose minimizers point along ``-z`` coordinatewise, leaving a problem in the
magnitudes only.
"""
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.optimize import brentq

from .errors import InvalidArgument
from .signals import vec, vec_adjoint

__all__ = [
    "ProximalSetup",
    "BregmanPoint",
    "Penalty",
    "make_setup",
    "dgf",
    "dgf_grad",
    "bregman_divergence",
    "omega_radius_bound",
    "prox_composite",
    "prox_pen_q1",
    "prox_pen_q2",
    "project_l1_ball_complex",
    "project_l2_ball",
    "prox_con_l1setup",
    "soft_threshold",
]

_ROOT_XTOL = 1e-12
_ROOT_MAXITER = 200


@dataclass(frozen=True)
class ProximalSetup:
    """Norm / d.-g.f. pair on ``R^N`` with ``N = block_count * block_size``."""

    block_count: int
    block_size: int
    kind: str = "custom"

    def __post_init__(self):
        if self.block_count < 1 or self.block_size < 1:
            raise InvalidArgument("block_count and block_size must be positive")
        if (self.block_count * self.block_size) % 2:
            raise InvalidArgument("total dimension must be even")

    @classmethod
    def complex_l1(cls, n):
        """One 2-block per complex coordinate of ``C^{n+1}``."""
        return cls(n + 1, 2, "l1")

    @classmethod
    def l2(cls, n):
        """A single block holding all ``2(n+1)`` coordinates."""
        return cls(1, 2 * (n + 1), "l2")

    @property
    def m(self):
        return self.block_count - 1

    @property
    def dim(self):
        return self.block_count * self.block_size

    @cached_property
    def q_tilde(self):
        if self.m <= 1:
            return 2.0
        return 1.0 + 1.0 / math.log(self.m + 1)

    @cached_property
    def c_tilde(self):
        if self.m <= 1:
            return 1.0 / (self.m + 1)
        return 1.0 / (math.e * math.log(self.m + 1))

    @cached_property
    def p_tilde(self):
        q = self.q_tilde
        return math.inf if q == 1.0 else q / (q - 1.0)

    @cached_property
    def const(self):
        """``C(m, q, c)``, the factor in front of ``||.||_q^2 / 2``."""
        q = self.q_tilde
        return (self.m + 1) ** ((q - 1.0) * (2.0 - q) / q) / self.c_tilde

    @property
    def complex_view(self):
        """True when every block is one complex coordinate or there is one block."""
        return self.block_size == 2 or self.block_count == 1

    def block_norms(self, u):
        u = np.asarray(u, dtype=np.float64)
        if u.shape != (self.dim,):
            raise InvalidArgument(f"expected a vector of size {self.dim}, got shape {u.shape}")
        return np.linalg.norm(u.reshape(self.block_count, self.block_size), axis=1)

    def norm(self, u):
        return float(self.block_norms(u).sum())

    def dual_norm(self, g):
        return float(self.block_norms(g).max())


def make_setup(kind, n):
    """``kind`` is ``"l1"`` (complex l1-setup) or ``"l2"``."""
    if kind == "l1":
        return ProximalSetup.complex_l1(n)
    if kind == "l2":
        return ProximalSetup.l2(n)
    raise InvalidArgument(f"unknown setup {kind!r}; expected 'l1' or 'l2'")


def _qnorm(x, q):
    """``||x||_q`` for nonnegative ``x``, scaled to avoid overflow."""
    top = x.max() if x.size else 0.0
    if top <= 0.0:
        return 0.0
    if q == math.inf:
        return float(top)
    return float(top * np.sum((x / top) ** q) ** (1.0 / q))


def dgf(setup, u):
    """The distance-generating function ``omega(u)``."""
    norms = setup.block_norms(u)
    return 0.5 * setup.const * _qnorm(norms, setup.q_tilde) ** 2


def dgf_grad(setup, u):
    """Gradient of ``omega``; blocks with zero norm get a zero subgradient."""
    u = np.asarray(u, dtype=np.float64)
    norms = setup.block_norms(u)
    q = setup.q_tilde
    total = _qnorm(norms, q)
    if total == 0.0:
        return np.zeros_like(u)
    scale = np.zeros_like(norms)
    nz = norms > 0
    # C ||norms||_q^{2-q} ||u^j||^{q-2} u^j
    scale[nz] = setup.const * total ** (2.0 - q) * norms[nz] ** (q - 2.0)
    blocks = u.reshape(setup.block_count, setup.block_size) * scale[:, None]
    return blocks.ravel()


def bregman_divergence(setup, u, xi):
    """``D_u(xi) = omega(xi) - omega(u) - <omega'(u), xi - u>``."""
    u = np.asarray(u, dtype=np.float64)
    xi = np.asarray(xi, dtype=np.float64)
    return dgf(setup, xi) - dgf(setup, u) - float(dgf_grad(setup, u) @ (xi - u))


def omega_radius_bound(setup, R):
    """``sqrt(2 max omega)`` over the group-norm ball of radius ``R``.

    ``omega`` is increasing in the block norms and ``||.||_q <= ||.||_1``, so
    the maximum ``C R^2 / 2`` sits at any single-block point of norm ``R``.
    """
    if R < 0:
        raise InvalidArgument("radius must be nonnegative")
    if math.isinf(R):
        return math.inf
    return math.sqrt(setup.const) * R


@dataclass(frozen=True)
class BregmanPoint:
    """A prox center with its cached d.-g.f. value and gradient."""

    point: np.ndarray
    dgf_value: float
    dgf_grad: np.ndarray

    @classmethod
    def at(cls, setup, u):
        u = np.asarray(u, dtype=np.float64)
        return cls(u, dgf(setup, u), dgf_grad(setup, u))


@dataclass(frozen=True)
class Penalty:
    """``weight * ||u||_{C,1} ** power`` plus the indicator of a ball.

    ``ball`` selects the ball norm: 1 for ``||.||_{C,1}``, 2 for ``||.||_{C,2}``.
    """

    weight: float = 0.0
    power: int = 1
    radius: float = math.inf
    ball: int = 1

    def __post_init__(self):
        if self.weight < 0:
            raise InvalidArgument("penalty weight must be nonnegative")
        if self.radius < 0:
            raise InvalidArgument("ball radius must be nonnegative")
        if self.power not in (1, 2) or self.ball not in (1, 2):
            raise InvalidArgument("power and ball must be 1 or 2")

    @property
    def constrained(self):
        return not math.isinf(self.radius)

    def scaled(self, factor):
        """Same penalty with the weight multiplied by ``factor``."""
        return Penalty(self.weight * factor, self.power, self.radius, self.ball)

    def value(self, u):
        """Penalty term only (feasibility is not checked here)."""
        if self.weight == 0.0:
            return 0.0
        return self.weight * float(np.abs(vec_adjoint(u)).sum()) ** self.power


def soft_threshold(x, threshold):
    """``(|x| - threshold)_+ * sign(x)`` for real or complex ``x``; ties map to 0."""
    x = np.asarray(x)
    if not np.issubdtype(x.dtype, np.inexact):
        x = x.astype(np.float64)
    mag = np.abs(x)
    shrunk = np.maximum(mag - threshold, 0.0)
    out = np.zeros_like(x)
    nz = shrunk > 0
    out[nz] = x[nz] / mag[nz] * shrunk[nz]
    return out


def _with_phase(z, mags):
    """``-z/|z| * mags``; zero where ``z`` or ``mags`` vanish."""
    out = np.zeros(z.shape, dtype=np.complex128)
    a = np.abs(z)
    nz = (a > 0) & (mags > 0)
    out[nz] = -z[nz] / a[nz] * mags[nz]
    return out


def _magnitudes_q1(setup, a, threshold):
    """Explicit magnitudes solving the l1-penalized prox for given ``|z|``."""
    theta = np.maximum(a - threshold, 0.0)
    q = setup.q_tilde
    if q == 2.0:
        return theta / setup.const
    top = theta.max() if theta.size else 0.0
    if top <= 0.0:
        return np.zeros_like(theta)
    p = setup.p_tilde
    t = theta / top
    tnorm = np.sum(t**p) ** (1.0 / p)
    return top * tnorm ** (2.0 - p) * t ** (p - 1.0) / setup.const


def prox_pen_q1(setup, z, threshold):
    """Minimize ``Re<zeta, z> + C/2 ||zeta||_q^2 + threshold * ||zeta||_1``.

    Closed form: soft-threshold ``|z|`` then map through the gradient of the
    conjugate norm; phases are opposite to ``z``.
    """
    if threshold < 0:
        raise InvalidArgument("threshold must be nonnegative")
    z = np.asarray(z, dtype=np.complex128)
    return _with_phase(z, _magnitudes_q1(setup, np.abs(z), threshold))


def prox_pen_q2(setup, z, weight):
    """Minimize ``Re<zeta, z> + C/2 ||zeta||_q^2 + weight * ||zeta||_1^2``.

    For fixed ``t`` the problem with threshold ``2 * weight * t`` is explicit;
    the fixed point ``t = ||zeta(t)||_1`` is found by a bracketed root search.
    """
    if weight < 0 or not np.isfinite(weight):
        raise InvalidArgument("weight must be finite and nonnegative")
    z = np.asarray(z, dtype=np.complex128)
    a = np.abs(z)
    if not np.all(np.isfinite(a)):
        raise InvalidArgument("non-finite input")
    rho0 = _magnitudes_q1(setup, a, 0.0)
    top = float(rho0.sum())
    if weight == 0.0 or top == 0.0:
        return _with_phase(z, rho0)

    def gap(t):
        return float(_magnitudes_q1(setup, a, 2.0 * weight * t).sum()) - t

    if gap(top) > 0:
        raise RuntimeError("root bracket not found in prox_pen_q2")
    t_star = brentq(gap, 0.0, top, xtol=_ROOT_XTOL, rtol=4 * np.finfo(float).eps, maxiter=_ROOT_MAXITER)
    return _with_phase(z, _magnitudes_q1(setup, a, 2.0 * weight * t_star))


def _simplex_threshold(a, radius):
    """Smallest ``mu >= 0`` with ``sum (a - mu)_+ <= radius`` (sort-and-threshold)."""
    if a.sum() <= radius:
        return 0.0
    if radius <= 0.0:
        return float(a.max())
    s = np.sort(a)[::-1]
    css = np.cumsum(s) - radius
    idx = np.arange(1, s.size + 1)
    hits = np.nonzero(s - css / idx > 0)[0]
    k = hits[-1] if hits.size else 0  # index 0 always qualifies in exact arithmetic
    return float(css[k] / (k + 1))


def project_l1_ball_complex(z, R):
    """Euclidean projection onto ``{zeta : sum_j |zeta_j| <= R}``.

    Phases are kept; magnitudes are shrunk by the common sort-and-threshold
    level.
    """
    if R < 0:
        raise InvalidArgument("radius must be nonnegative")
    z = np.asarray(z)
    if not np.issubdtype(z.dtype, np.inexact):
        z = z.astype(np.float64)
    mu = _simplex_threshold(np.abs(z), R)
    if mu == 0.0:
        return z.copy()
    return soft_threshold(z, mu)


def project_l2_ball(z, R):
    """Radial projection onto the Euclidean ball of radius ``R``."""
    if R < 0:
        raise InvalidArgument("radius must be nonnegative")
    z = np.asarray(z)
    if not np.issubdtype(z.dtype, np.inexact):
        z = z.astype(np.float64)
    nrm = float(np.linalg.norm(z))
    if nrm <= R:
        return z.copy()
    return z * (R / nrm)


def prox_con_l1setup(setup, z, R, threshold=0.0):
    """Minimize ``Re<zeta, z> + C/2 ||zeta||_q^2 + threshold ||zeta||_1`` s.t. ``||zeta||_1 <= R``.

    The ball constraint is handled through its multiplier: the penalized
    solution with threshold ``threshold + mu`` is explicit, and ``mu >= 0`` is
    located by a bracketed root search on ``||zeta(mu)||_1 = R``.
    """
    if R <= 0:
        raise InvalidArgument("radius must be positive")
    z = np.asarray(z, dtype=np.complex128)
    a = np.abs(z)
    rho = _magnitudes_q1(setup, a, threshold)
    if rho.sum() <= R:
        return _with_phase(z, rho)
    if setup.q_tilde == 2.0:
        # magnitudes (a - thr - mu)_+ / C: a scaled simplex projection
        mu = _simplex_threshold(np.maximum(a - threshold, 0.0), setup.const * R)
        rho = _magnitudes_q1(setup, a, threshold + mu)
    else:
        hi = float(a.max()) - threshold

        def excess(mu):
            return float(_magnitudes_q1(setup, a, threshold + mu).sum()) - R

        mu = brentq(excess, 0.0, hi, xtol=_ROOT_XTOL, rtol=4 * np.finfo(float).eps, maxiter=_ROOT_MAXITER)
        rho = _magnitudes_q1(setup, a, threshold + mu)
    total = rho.sum()
    if total > R:
        rho *= R / total
    return _with_phase(z, rho)


def prox_composite(setup, u, g, penalty=None):
    """``argmin_xi <g, xi> + D_u(xi) + penalty(xi)`` over the penalty's ball.

    ``u`` is a spectral vector or a :class:`BregmanPoint`. Supported: any
    setup with l1-type penalties/balls; the ``||.||_{C,2}`` ball only under a
    single-block (l2) setup.
    """
    if penalty is None:
        penalty = Penalty()
    if not setup.complex_view:
        raise InvalidArgument("prox is implemented for the complex l1- and l2-setups only")
    grad = u.dgf_grad if isinstance(u, BregmanPoint) else dgf_grad(setup, u)
    g = np.asarray(g, dtype=np.float64)
    if g.shape != (setup.dim,):
        raise InvalidArgument(f"expected a vector of size {setup.dim}, got shape {g.shape}")
    z = vec_adjoint(g - grad)

    if penalty.ball == 2 and penalty.constrained:
        if setup.q_tilde != 2.0 or setup.block_count != 1:
            raise InvalidArgument("an l2-ball domain requires the l2-setup")
        if penalty.power != 1 and penalty.weight > 0:
            raise InvalidArgument("squared penalty over a ball is not supported")
        zeta = prox_pen_q1(setup, z, penalty.weight)
        return vec(project_l2_ball(zeta, penalty.radius))

    if penalty.power == 2 and penalty.weight > 0:
        if penalty.constrained:
            raise InvalidArgument("squared penalty over a ball is not supported")
        return vec(prox_pen_q2(setup, z, penalty.weight))

    if penalty.constrained:
        if penalty.radius == 0.0:
            return np.zeros(setup.dim)
        return vec(prox_con_l1setup(setup, z, penalty.radius, penalty.weight))
    return vec(prox_pen_q1(setup, z, penalty.weight))
