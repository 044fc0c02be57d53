"""The six convolution-type estimators and their tuning rules.

Kinds
-----
``con-uf`` / ``pen-uf``
    uniform fit ``Res_inf``; saddle form with an l1 dual ball.
``con-ls`` / ``pen-ls``
    least squares ``Res_2^2 / 2``; composite form solved by FGM.
``con-ls-star`` / ``pen-ls-star``
    non-squared ``Res_2``; saddle form with an l2 dual ball.

``con-*`` kinds restrict ``||F_n phi||_1 <= r_bar / sqrt(n+1)``; ``pen-*``
kinds add ``lam ||F_n phi||_1`` to the residual.
"""
import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .convolution import build_operator, operator_norm_bound
from .errors import ConfigError, InvalidArgument
from .prox import Penalty, make_setup, omega_radius_bound
from .signals import ComplexSignal, complex_norm, idft, vec_adjoint
from .solvers import CompositeProblem, SaddleProblem, SolveTrace, StoppingRule, cmp_run, fgm_run

__all__ = [
    "KINDS",
    "EstimatorConfig",
    "EstimatorSolution",
    "build_problem",
    "solve",
    "residual",
    "primal_value",
    "dual_value",
    "default_lambda_uf",
    "default_lambda_ls",
    "statistical_accuracy",
    "predicted_iterations",
    "default_r_bar",
]

KINDS = ("con-uf", "con-ls", "pen-uf", "pen-ls", "con-ls-star", "pen-ls-star")
_STOPPING = ("budget", "certificate", "statistical")


def _is_least_squares(kind):
    return kind in ("con-ls", "pen-ls")


def _constrained(kind):
    return kind.startswith("con-")


@dataclass(frozen=True)
class EstimatorConfig:
    """Everything needed to turn observations into a filter.

    ``lam="auto"`` picks the theoretical value (needs ``sigma``; not
    available for ``pen-ls-star``). ``tolerance`` is the target accuracy of
    ``stopping="certificate"``; ``statistical`` stopping derives it from
    ``sigma`` and ``r_bar`` (``r = 1`` when ``r_bar`` is absent).
    """

    kind: str
    r_bar: Optional[float] = None
    lam: Union[float, str, None] = None
    sigma: Optional[float] = None
    delta: float = 0.05
    setup_u: str = "l1"
    setup_v: Optional[str] = None
    stopping: str = "budget"
    max_iter: int = 1000
    tolerance: Optional[float] = None
    accuracy_constant: float = 1.0
    stepsize: Optional[float] = None
    averaging: Union[str, tuple] = "uniform"
    adaptive: bool = False
    record_every: int = 1
    lipschitz: Optional[float] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"kind must be one of {', '.join(KINDS)}; got {self.kind!r}")
        if _constrained(self.kind):
            if self.r_bar is None:
                raise ConfigError(f"{self.kind} requires r_bar")
            if not self.r_bar >= 0:
                raise ConfigError("r_bar must be nonnegative")
        else:
            if self.lam is None:
                raise ConfigError(f"{self.kind} requires lam (a number or 'auto')")
            if self.lam == "auto":
                if self.kind == "pen-ls-star":
                    raise ConfigError("pen-ls-star has no theoretical lam; give a number")
                if self.sigma is None:
                    raise ConfigError("lam='auto' requires sigma")
            elif isinstance(self.lam, str) or not self.lam >= 0:
                raise ConfigError("lam must be a nonnegative number or 'auto'")
        if self.sigma is not None and not self.sigma >= 0:
            raise ConfigError("sigma must be nonnegative")
        if not 0 < self.delta < 1:
            raise ConfigError("delta must lie in (0, 1)")
        if self.setup_u not in ("l1", "l2"):
            raise ConfigError("setup_u must be 'l1' or 'l2'")
        if self.setup_v not in (None, "l1", "l2"):
            raise ConfigError("setup_v must be 'l1' or 'l2'")
        if self.kind.endswith("star") and self.setup_v == "l1":
            raise ConfigError("the l2 dual ball of the starred kinds needs setup_v='l2'")
        if self.stopping not in _STOPPING:
            raise ConfigError(f"stopping must be one of {', '.join(_STOPPING)}")
        if self.stopping == "certificate" and not (self.tolerance is not None and self.tolerance > 0):
            raise ConfigError("certificate stopping requires a positive tolerance")
        if self.stopping == "statistical" and not (self.sigma is not None and self.sigma > 0):
            raise ConfigError("statistical stopping requires sigma > 0")
        if self.max_iter < 0 or self.record_every < 1:
            raise ConfigError("max_iter must be >= 0 and record_every >= 1")

    @property
    def dual_setup(self):
        if self.kind.endswith("star"):
            return "l2"
        return self.setup_v or "l1"

    def resolved_lambda(self, n):
        if _constrained(self.kind):
            return 0.0
        if self.lam != "auto":
            return float(self.lam)
        if self.kind == "pen-uf":
            return default_lambda_uf(self.sigma, n, self.delta)
        return default_lambda_ls(self.sigma, n, self.delta)


@dataclass
class EstimatorSolution:
    filter_spectral: np.ndarray
    filter_time: ComplexSignal
    denoised: np.ndarray
    trace: SolveTrace
    r_realized: float
    lam: float
    epsilon_star: Optional[float]
    problem: object


def default_lambda_uf(sigma, n, delta=0.05):
    """``16 sigma sqrt((n+1)(1 + log((n+1)/delta)))``."""
    _check_tuning(sigma, n, delta)
    return 16.0 * sigma * math.sqrt((n + 1) * (1.0 + math.log((n + 1) / delta)))


def default_lambda_ls(sigma, n, delta=0.05):
    """``8 sqrt(2) sigma^2 sqrt(n+1) (2 + log(8(n+1)/delta))``."""
    _check_tuning(sigma, n, delta)
    return 8.0 * math.sqrt(2.0) * sigma**2 * math.sqrt(n + 1) * (2.0 + math.log(8 * (n + 1) / delta))


def _check_tuning(sigma, n, delta):
    if not sigma > 0:
        raise InvalidArgument("sigma must be positive")
    if n < 0:
        raise InvalidArgument("n must be nonnegative")
    if not 0 < delta < 1:
        raise InvalidArgument("delta must lie in (0, 1)")


def statistical_accuracy(kind, sigma, r, constant=1.0):
    """``c sigma r`` for kinds with a non-squared residual, ``c sigma^2 r^2`` for ``con-ls``/``pen-ls``."""
    if kind not in KINDS:
        raise InvalidArgument(f"unknown kind {kind!r}")
    if not sigma > 0 or not r >= 1 or not constant > 0:
        raise InvalidArgument("need sigma > 0, r >= 1 and a positive constant")
    if _is_least_squares(kind):
        return constant * sigma**2 * r**2
    return constant * sigma * r


def predicted_iterations(op, sigma, r, residual_value):
    """Diagnostic iteration counts ``(T_star, T_fast)``.

    ``T_star = ||F_2n y||_inf / sigma`` and ``T_fast = r ||F_2n y||_inf / Res_2``,
    with all hidden constants set to one.
    """
    if not sigma > 0:
        raise InvalidArgument("sigma must be positive")
    peak = float(np.abs(op.diag).max())
    t_fast = math.inf if residual_value <= 0 else r * peak / residual_value
    return peak / sigma, t_fast


def default_r_bar(subspace_dim):
    """``2 dim(S)``; a helper only, never applied implicitly."""
    if subspace_dim < 0:
        raise InvalidArgument("subspace dimension must be nonnegative")
    return 2.0 * subspace_dim


def residual(op, u, p=2):
    """``||A u - b||_{C,p}`` for ``p`` in ``{2, inf}``."""
    if p not in (2, math.inf):
        raise InvalidArgument("p must be 2 or inf")
    return complex_norm(op.matvec(u) - op.b, p)


def primal_value(problem, u):
    """Primal objective; the full objective for least-squares problems."""
    if isinstance(problem, CompositeProblem):
        return problem.objective(u)
    return problem.primal_value(u)


def dual_value(problem, v):
    """Closed-form dual objective; ``-inf`` when the penalized inner minimum is unbounded."""
    return problem.dual_value(v)


def build_problem(op, config):
    """The optimization problem for ``config`` on operator ``op``."""
    n = op.n
    lam = config.resolved_lambda(n)
    radius = config.r_bar / math.sqrt(n + 1) if _constrained(config.kind) else math.inf
    bound = operator_norm_bound(op)
    setup_u = make_setup(config.setup_u, n)
    if _is_least_squares(config.kind):
        lipschitz = config.lipschitz if config.lipschitz is not None else bound**2
        if math.isinf(radius):
            # 1/2 ||b||^2 >= objective(u*) >= lam ||u*||_1
            eff = math.inf if lam == 0 else float(op.b @ op.b) / (2.0 * lam)
        else:
            eff = radius

        def value(u):
            r = op.matvec(u) - op.b
            return 0.5 * float(r @ r)

        def grad(u):
            return op.rmatvec(op.matvec(u) - op.b)

        return CompositeProblem(value, grad, setup_u, Penalty(lam, 1, radius, 1), lipschitz,
                                omega_radius_bound(setup_u, eff))
    q = 2 if config.kind.endswith("star") else 1
    if not _constrained(config.kind) and lam == 0:
        raise ConfigError(f"{config.kind} needs lam > 0")
    lipschitz = config.lipschitz if config.lipschitz is not None else bound
    return SaddleProblem(op.matvec, op.rmatvec, op.b, q, setup_u, make_setup(config.dual_setup, n),
                         lipschitz, lam=lam, radius=radius)


def _stopping_rule(op, config, problem):
    if config.stopping == "budget":
        return StoppingRule.budget(config.max_iter), None
    if config.stopping == "certificate":
        return StoppingRule("certificate", config.max_iter, config.tolerance), None
    r = max(1.0, config.r_bar) if config.r_bar is not None else 1.0
    eps = statistical_accuracy(config.kind, config.sigma, r, config.accuracy_constant)
    fallback = None
    if isinstance(problem, SaddleProblem) and math.isinf(problem.radius):
        # a-priori rate r ||F_2n y||_inf / T reaches c sigma r at this T
        peak = float(np.abs(op.diag).max())
        fallback = max(1, math.ceil(peak / (config.accuracy_constant * config.sigma)))
    return StoppingRule("statistical", config.max_iter, eps, fallback), eps


def solve(y, config, callback=None):
    """Fit the filter for observations ``y`` on ``[-n, n]``."""
    op = build_operator(y)
    problem = build_problem(op, config)
    stop, eps = _stopping_rule(op, config, problem)
    if isinstance(problem, CompositeProblem):
        trace = fgm_run(problem, config.stepsize, stop=stop, callback=callback, record_every=config.record_every)
        u = trace.final
    else:
        trace = cmp_run(problem, config.stepsize, stop=stop, averaging=config.averaging, callback=callback,
                        record_every=config.record_every, adaptive=config.adaptive)
        u = trace.averaged[: problem.dim_u]
    return _solution(op, u, trace, problem, config, eps)


def _solution(op, u, trace, problem, config, eps):
    u = np.array(u, dtype=np.float64)
    phi = ComplexSignal.one_sided(idft(vec_adjoint(u)))
    denoised = idft(vec_adjoint(op.matvec(u)))
    r_real = math.sqrt(op.n + 1) * complex_norm(u, 1)
    lam = problem.penalty.weight if isinstance(problem, CompositeProblem) else problem.lam
    return EstimatorSolution(u, phi, denoised, trace, r_real, lam, eps, problem)

