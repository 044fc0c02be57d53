"""Fast Gradient Method and Composite Mirror Prox.

Both methods start at the omega-center ``0`` and only touch the problem
through gradient/field evaluations and the prox-mappings of
:mod:`adenoise.prox`.
"""
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import certificates as cert
from .errors import DivergedError, InvalidArgument
from .prox import BregmanPoint, Penalty, bregman_divergence, omega_radius_bound, prox_composite
from .signals import complex_norm

__all__ = [
    "CompositeProblem",
    "SaddleProblem",
    "StoppingRule",
    "SolveTrace",
    "fgm_run",
    "fgm_apriori_bound",
    "cmp_run",
    "cmp_run_adaptive",
]

_MAX_BACKTRACKS = 50
_GROWTH = 1.2
_MAX_GROWTH = 1e6  # adaptive eta never exceeds this multiple of its starting value


@dataclass(frozen=True)
class CompositeProblem:
    """``min_u f(u) + penalty(u)`` with ``f`` smooth and ``L_f``-Lipschitz gradient.

    ``omega_radius`` is ``Omega_*[U]``; when known it yields the a-priori
    accuracy bound used for stopping.
    """

    smooth_value: Callable
    smooth_grad: Callable
    setup: object
    penalty: Penalty
    lipschitz: float
    omega_radius: Optional[float] = None

    def __post_init__(self):
        if not self.lipschitz >= 0 or not math.isfinite(self.lipschitz):
            raise InvalidArgument("Lipschitz constant must be finite and nonnegative")

    def objective(self, u):
        return self.smooth_value(u) + self.penalty.value(u)


class SaddleProblem:
    """``min_{||u||_{C,1} <= R} max_{||v||_{C,q} <= 1} <v, Au - b> + lam ||u||_{C,1}``.

    ``R = inf`` gives the penalized variant; its effective primal radius
    ``||b||_{C,p} / lam`` (any minimizer is no worse than ``u = 0``) enters the
    joint setup. Norms on the two blocks are those of ``setup_u``/``setup_v``.
    """

    def __init__(self, matvec, rmatvec, b, dual_q, setup_u, setup_v, lipschitz, lam=0.0, radius=math.inf):
        if dual_q not in (1, 2):
            raise InvalidArgument("dual ball must be q = 1 or q = 2")
        if lam < 0 or radius < 0:
            raise InvalidArgument("lam and radius must be nonnegative")
        if math.isinf(radius) and lam == 0:
            raise InvalidArgument("an unconstrained primal domain needs lam > 0")
        if dual_q == 2 and setup_v.block_count != 1:
            raise InvalidArgument("the l2 dual ball requires the l2-setup")
        self.matvec = matvec
        self.rmatvec = rmatvec
        self.b = np.asarray(b, dtype=np.float64)
        self.dual_q = dual_q
        self.dual_p = math.inf if dual_q == 1 else 2
        self.setup_u = setup_u
        self.setup_v = setup_v
        self.lipschitz = float(lipschitz)
        self.lam = float(lam)
        self.radius = float(radius)
        self.penalty_u = Penalty(self.lam, 1, self.radius, 1)
        self.ball_v = Penalty(0.0, 1, 1.0, dual_q)
        self.dim_u = setup_u.dim
        self.dim_v = setup_v.dim
        self.omega_v = omega_radius_bound(setup_v, 1.0)
        self.omega_u = omega_radius_bound(setup_u, self.effective_radius)
        if self.omega_u == 0.0:
            # degenerate domain {0}: any positive weight gives the same iterates
            self.omega_u = self.omega_v

    @property
    def effective_radius(self):
        if not math.isinf(self.radius):
            return self.radius
        return complex_norm(self.b, self.dual_p) / self.lam

    def split(self, w):
        return w[: self.dim_u], w[self.dim_u:]

    def field(self, w):
        """``F(w) = [A^T v; b - A u]``."""
        u, v = self.split(w)
        return np.concatenate([self.rmatvec(v), self.b - self.matvec(u)])

    def lmo_u(self, a):
        """``max_U <a, u> - lam ||u||_{C,1}``."""
        excess = complex_norm(a, math.inf) - self.lam
        if math.isinf(self.radius):
            return 0.0 if excess <= 0 else math.inf
        return self.radius * max(excess, 0.0)

    def lmo_v(self, a):
        """``max_{||v||_{C,q} <= 1} <a, v>``: the dual norm."""
        return complex_norm(a, self.dual_p)

    def primal_value(self, u):
        return complex_norm(self.matvec(u) - self.b, self.dual_p) + self.lam * complex_norm(u, 1)

    def dual_value(self, v):
        part = self.lmo_u(-self.rmatvec(v))
        return -math.inf if math.isinf(part) else -float(v @ self.b) - part

    def default_stepsize(self):
        """``1 / L`` for the field under the joint norm, ``Omega_U Omega_V / L_F``."""
        if self.lipschitz == 0.0:
            return 1.0
        return self.omega_u * self.omega_v / self.lipschitz


@dataclass(frozen=True)
class StoppingRule:
    """When to stop.

    ``kind`` is ``"budget"`` (run ``max_iter`` iterations), ``"certificate"``
    (absolute accuracy ``tolerance``) or ``"statistical"`` (``tolerance`` is
    the statistical accuracy). The last two differ only in the reported
    reason. ``fallback_iter`` is an a-priori iteration count after which an
    accuracy-based run stops even without a certificate confirming it.
    """

    kind: str = "budget"
    max_iter: int = 1000
    tolerance: Optional[float] = None
    fallback_iter: Optional[int] = None

    def __post_init__(self):
        if self.kind not in ("budget", "certificate", "statistical"):
            raise InvalidArgument(f"unknown stopping rule {self.kind!r}")
        if self.max_iter < 0:
            raise InvalidArgument("max_iter must be nonnegative")
        if self.kind != "budget" and not (self.tolerance is not None and self.tolerance > 0):
            raise InvalidArgument("accuracy-based stopping needs a positive tolerance")

    @classmethod
    def budget(cls, max_iter):
        return cls("budget", max_iter)

    @property
    def accuracy_based(self):
        return self.kind != "budget"


@dataclass
class SolveTrace:
    """Per-iteration records plus final and averaged iterates.

    ``objective`` holds the objective (FGM) or the primal value of the
    averaged iterate (CMP). ``certificate`` holds the a-priori bound (FGM) or
    the certificate gap bound (CMP); ``dual`` and ``rel_accuracy`` are CMP only.
    """

    method: str
    iterations: list = field(default_factory=list)
    objective: list = field(default_factory=list)
    certificate: list = field(default_factory=list)
    dual: list = field(default_factory=list)
    rel_accuracy: list = field(default_factory=list)
    stepsize: list = field(default_factory=list)
    seconds: list = field(default_factory=list)
    final: Optional[np.ndarray] = None
    averaged: Optional[np.ndarray] = None
    stop_reason: str = "budget"
    stop_iteration: int = 0
    backtracks: int = 0

    @property
    def solution(self):
        """The iterate the method reports: ``u^T`` (FGM) or the averaged ``w^T`` (CMP)."""
        return self.averaged if self.averaged is not None else self.final

    def column(self, name):
        return np.asarray(getattr(self, name), dtype=np.float64)


def _check_finite(x, t, what):
    if not np.all(np.isfinite(x)):
        raise DivergedError(f"non-finite {what} at iteration {t}", iteration=t)


def fgm_apriori_bound(problem, stepsize, T):
    """``Omega^2 / (2 eta A_T)`` with ``A_T = T(T+3)/4``; ``inf`` when ``Omega`` is unknown."""
    if problem.omega_radius is None or math.isinf(problem.omega_radius):
        return math.inf
    if T == 0:
        return math.inf
    return problem.omega_radius**2 / (2.0 * stepsize * T * (T + 3) / 4.0)


def _fgm_iterations_needed(problem, stepsize, tolerance):
    omega = problem.omega_radius
    if omega is None or math.isinf(omega):
        return None
    # smallest T with T(T+3) >= 2 Omega^2 / (eta tol)
    need = 2.0 * omega**2 / (stepsize * tolerance)
    T = max(0, math.ceil((-3.0 + math.sqrt(9.0 + 4.0 * need)) / 2.0))
    while T * (T + 3) < need:
        T += 1
    return T


def fgm_run(problem, stepsize=None, max_iter=None, stop=None, callback=None, record_every=1):
    """Run FGM from ``u = 0``.

    With ``a_t = (t+2)/2`` and ``A_t = sum_{s<t} a_s`` the iteration is

        u_t      = Prox_{eta A_t Psi, 0}(eta g^t)
        u_{t+1/3} = tau_t u_t + (1 - tau_t) u^t,        tau_t = a_t / A_{t+1}
        u_{t+2/3} = Prox_{eta a_t Psi, u_t}(eta a_t grad f(u_{t+1/3}))
        u^{t+1}  = tau_t u_{t+2/3} + (1 - tau_t) u^t,   g^{t+1} = g^t + a_t grad f(u_{t+1/3})

    The penalty weight follows the accumulated gradient weight, so composite
    problems converge to the penalized minimizer.

    ``callback(t, u^t)`` runs after every iteration; returning ``True`` stops
    the run (that iteration is then recorded).
    """
    stop = _resolve_stop(stop, max_iter)
    eta = stepsize
    if eta is None:
        eta = 1.0 / problem.lipschitz if problem.lipschitz > 0 else 1.0
    if not eta > 0:
        raise InvalidArgument("stepsize must be positive")
    limit = stop.max_iter
    reason = "budget"
    if stop.accuracy_based:
        needed = _fgm_iterations_needed(problem, eta, stop.tolerance)
        if needed is not None and needed <= limit:
            limit, reason = needed, stop.kind
        elif needed is None and stop.fallback_iter is not None and stop.fallback_iter <= limit:
            limit, reason = stop.fallback_iter, stop.kind

    setup, penalty = problem.setup, problem.penalty
    zero = np.zeros(setup.dim)
    center = BregmanPoint.at(setup, zero)
    u_bar = zero.copy()
    g_acc = np.zeros(setup.dim)
    A = 0.0
    trace = SolveTrace("fgm")
    clock = 0.0

    def record(t, u):
        trace.iterations.append(t)
        trace.objective.append(problem.objective(u))
        trace.certificate.append(fgm_apriori_bound(problem, eta, t))
        trace.stepsize.append(eta)
        trace.seconds.append(clock)

    record(0, u_bar)
    t = 0
    for t in range(limit):
        start = time.perf_counter()
        a = 0.5 * (t + 2)
        tau = a / (A + a)
        u_t = prox_composite(setup, center, eta * g_acc, penalty.scaled(eta * A))
        u13 = tau * u_t + (1.0 - tau) * u_bar
        grad = problem.smooth_grad(u13)
        _check_finite(grad, t + 1, "gradient")
        g = a * grad
        u23 = prox_composite(setup, u_t, eta * g, penalty.scaled(eta * a))
        u_bar = tau * u23 + (1.0 - tau) * u_bar
        g_acc += g
        A += a
        clock += time.perf_counter() - start
        done = t + 1
        halt = callback is not None and bool(callback(done, u_bar))
        if halt:
            reason = "callback"
        if done % record_every == 0 or done == limit or halt:
            record(done, u_bar)
        if halt:
            break
    trace.final = u_bar
    trace.stop_iteration = trace.iterations[-1]
    trace.stop_reason = reason
    return trace


def _resolve_stop(stop, max_iter):
    if stop is None:
        return StoppingRule.budget(1000 if max_iter is None else max_iter)
    if max_iter is not None and max_iter != stop.max_iter:
        return StoppingRule(stop.kind, max_iter, stop.tolerance, stop.fallback_iter)
    return stop


class _Averager:
    """Uniform or suffix averaging of the half-iterates.

    Suffix mode restarts accumulators at geometric checkpoints and reports
    the one covering at least the last ``fraction`` of the points.
    """

    def __init__(self, dim_u, dim_v, fraction=None):
        if fraction is not None and not 0 < fraction <= 1:
            raise InvalidArgument("suffix fraction must lie in (0, 1]")
        self.dims = (dim_u, dim_v)
        self.fraction = None if fraction == 1 else fraction
        self.states = []
        self.next_start = 1
        self.count = 0

    def add(self, point, field_value, gamma, penalty_value):
        self.count += 1
        t = self.count
        if not self.states or (self.fraction is not None and t >= self.next_start):
            self.states.append((t, cert.CertificateState(*self.dims)))
            if self.fraction is not None:
                self.next_start = max(t + 1, math.ceil(t / (1.0 - self.fraction)))
        for _, state in self.states:
            cert.update(state, point, field_value, gamma, penalty_value)
        if self.fraction is not None:
            limit = (1.0 - self.fraction) * t + 1.0
            keep = 0
            for i, (s, _) in enumerate(self.states):
                if s <= limit:
                    keep = i
            self.states = self.states[keep:]

    @property
    def current(self):
        return self.states[0][1] if self.states else None


def _joint_prox(problem, center_u, center_v, g, eta):
    """Prox of the joint setup ``Omega_V^2 omega_U + Omega_U^2 omega_V`` at ``w``."""
    ou2, ov2 = problem.omega_u**2, problem.omega_v**2
    g_u, g_v = problem.split(g)
    u = prox_composite(problem.setup_u, center_u, eta * g_u / ov2, problem.penalty_u.scaled(eta / ov2))
    v = prox_composite(problem.setup_v, center_v, eta * g_v / ou2, problem.ball_v)
    return np.concatenate([u, v])


def _joint_divergence(problem, w, w_next):
    u, v = problem.split(w)
    u1, v1 = problem.split(w_next)
    return (problem.omega_v**2 * bregman_divergence(problem.setup_u, u, u1)
            + problem.omega_u**2 * bregman_divergence(problem.setup_v, v, v1))


def cmp_run(problem, stepsize=None, max_iter=None, stop=None, averaging="uniform", callback=None,
            record_every=1, adaptive=False):
    """Run CMP from ``w = 0`` and average the half-iterates ``w_{t+1/2}``.

    ``averaging`` is ``"uniform"`` or ``("suffix", fraction)``. With
    ``adaptive=True`` each step is accepted once

        eta [<F(w_{t+1/2}), w_{t+1/2} - w_{t+1}> + Psi(u_{t+1/2}) - Psi(u_{t+1})] <= D_{w_t}(w_{t+1})

    (otherwise ``eta`` is halved, at most 50 times per iteration) and ``eta``
    grows by 1.2 after acceptance, up to ``1e6`` times its initial value. Averaging weights equal the stepsizes.

    ``callback(t, state)`` receives the certificate state after every
    iteration; returning ``True`` stops the run.
    """
    stop = _resolve_stop(stop, max_iter)
    fraction = None
    if averaging == "uniform":
        pass
    elif isinstance(averaging, (tuple, list)) and len(averaging) == 2 and averaging[0] == "suffix":
        fraction = float(averaging[1])
    elif averaging == "suffix":
        fraction = 0.5
    else:
        raise InvalidArgument(f"unknown averaging {averaging!r}")
    eta = problem.default_stepsize() if stepsize is None else float(stepsize)
    if not eta > 0 or not math.isfinite(eta):
        raise InvalidArgument("stepsize must be positive and finite")
    eta_cap = _MAX_GROWTH * eta

    setup_u, setup_v = problem.setup_u, problem.setup_v
    w = np.zeros(problem.dim_u + problem.dim_v)
    avg = _Averager(problem.dim_u, problem.dim_v, fraction)
    trace = SolveTrace("cmp-adaptive" if adaptive else "cmp")
    clock = 0.0
    reason = "budget"
    tolerance = stop.tolerance if stop.accuracy_based else None

    for t in range(stop.max_iter):
        start = time.perf_counter()
        u, v = problem.split(w)
        center_u = BregmanPoint.at(setup_u, u)
        center_v = BregmanPoint.at(setup_v, v)
        F_w = problem.field(w)
        _check_finite(F_w, t + 1, "field")
        tries = 0
        while True:
            w_half = _joint_prox(problem, center_u, center_v, F_w, eta)
            F_half = problem.field(w_half)
            _check_finite(F_half, t + 1, "field")
            w_next = _joint_prox(problem, center_u, center_v, F_half, eta)
            if not adaptive:
                break
            u_half, u_next = w_half[: problem.dim_u], w_next[: problem.dim_u]
            lin = float(F_half @ (w_half - w_next))
            lin += problem.penalty_u.value(u_half) - problem.penalty_u.value(u_next)
            delta = eta * lin - _joint_divergence(problem, w, w_next)
            if delta <= 1e-12 * (1.0 + abs(eta * lin)):
                break
            tries += 1
            trace.backtracks += 1
            if tries > _MAX_BACKTRACKS:
                raise DivergedError(f"stepsize search failed at iteration {t + 1}", iteration=t + 1)
            eta *= 0.5
        _check_finite(w_next, t + 1, "iterate")
        gamma = eta
        avg.add(w_half, F_half, gamma, problem.penalty_u.value(w_half[: problem.dim_u]))
        w = w_next
        if adaptive:
            eta = min(eta * _GROWTH, eta_cap)
        clock += time.perf_counter() - start
        done = t + 1
        state = avg.current
        bound = None
        if tolerance is not None:
            bound = cert.gap_bound(state, problem)
            if bound <= tolerance:
                reason = stop.kind
            elif stop.fallback_iter is not None and done >= stop.fallback_iter:
                reason = stop.kind
        if callback is not None and callback(done, state):
            reason = "callback"
        last = done == stop.max_iter or reason != "budget"
        if done % record_every == 0 or last:
            _record_cmp(trace, problem, state, done, gamma, clock, bound)
        if last:
            break

    trace.final = w
    state = avg.current
    trace.averaged = w.copy() if state is None else state.averaged_iterate
    trace.stop_iteration = trace.iterations[-1] if trace.iterations else 0
    trace.stop_reason = reason
    return trace


def _record_cmp(trace, problem, state, t, eta, clock, bound=None):
    u_avg = state.averaged_u
    primal = complex_norm(state.averaged_field_v, problem.dual_p) + problem.lam * complex_norm(u_avg, 1)
    dual = cert.dual_lower_bound(state, problem)
    if bound is None:
        bound = cert.gap_bound(state, problem)
    trace.iterations.append(t)
    trace.objective.append(primal)
    trace.dual.append(dual)
    trace.certificate.append(bound)
    trace.rel_accuracy.append(bound / dual if dual > 0 else math.inf)
    trace.stepsize.append(eta)
    trace.seconds.append(clock)


def cmp_run_adaptive(problem, max_iter=None, stop=None, stepsize=None, averaging="uniform", callback=None,
                     record_every=1):
    """CMP with backtracking stepsizes; see :func:`cmp_run`."""
    return cmp_run(problem, stepsize, max_iter, stop, averaging, callback, record_every, adaptive=True)
