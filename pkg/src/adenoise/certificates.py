"""Online accuracy certificates for the saddle-point solver.

For weights ``gamma_tau > 0`` and points ``z_tau = [u_tau; v_tau]`` where the
field was evaluated, the duality gap of the weighted average ``z^t`` obeys

    gap(z^t) <= max_U [<-F_u^t, u> - Psi(u)] + max_V <-F_v^t, v>
                + sum_tau lambda_tau (<F(z_tau), z_tau> + Psi(u_tau)),

with ``F^t`` the weighted field average. Every term is a running sum, so the
bound costs ``O(N)`` per update and needs no stored history. For a bilinear
field and ``Psi = 0`` the bound is the exact gap.
"""
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgument

__all__ = ["CertificateState", "update", "merge", "gap_bound", "dual_lower_bound", "relative_accuracy"]


@dataclass
class CertificateState:
    """Weighted running sums over the points ``z_tau``."""

    dim_u: int
    dim_v: int
    weight_total: float = 0.0
    count: int = 0
    sum_point: np.ndarray = field(default=None, repr=False)
    sum_field: np.ndarray = field(default=None, repr=False)
    sum_inner: float = 0.0
    sum_penalty: float = 0.0

    def __post_init__(self):
        n = self.dim_u + self.dim_v
        if self.sum_point is None:
            self.sum_point = np.zeros(n)
        if self.sum_field is None:
            self.sum_field = np.zeros(n)

    @property
    def averaged_iterate(self):
        return self.sum_point / self.weight_total

    @property
    def averaged_u(self):
        return self.averaged_iterate[: self.dim_u]

    @property
    def averaged_v(self):
        return self.averaged_iterate[self.dim_u:]

    @property
    def averaged_field_u(self):
        return self.sum_field[: self.dim_u] / self.weight_total

    @property
    def averaged_field_v(self):
        return self.sum_field[self.dim_u:] / self.weight_total

    @property
    def averaged_inner(self):
        """``sum_tau lambda_tau (<F(z_tau), z_tau> + Psi(u_tau))``."""
        return (self.sum_inner + self.sum_penalty) / self.weight_total


def update(state, point, field_value, gamma, penalty_value=0.0):
    """Fold ``(z_tau, F(z_tau), Psi(u_tau))`` with weight ``gamma`` into ``state`` in place."""
    if not gamma > 0:
        raise InvalidArgument("certificate weights must be positive")
    point = np.asarray(point, dtype=np.float64)
    field_value = np.asarray(field_value, dtype=np.float64)
    if point.shape != state.sum_point.shape or field_value.shape != state.sum_field.shape:
        raise InvalidArgument("dimension mismatch in certificate update")
    state.weight_total += gamma
    state.count += 1
    state.sum_point += gamma * point
    state.sum_field += gamma * field_value
    state.sum_inner += gamma * float(field_value @ point)
    state.sum_penalty += gamma * penalty_value
    return state


def merge(first, second):
    """State equivalent to feeding ``first``'s points and then ``second``'s."""
    if (first.dim_u, first.dim_v) != (second.dim_u, second.dim_v):
        raise InvalidArgument("cannot merge states of different dimensions")
    return CertificateState(
        first.dim_u,
        first.dim_v,
        first.weight_total + second.weight_total,
        first.count + second.count,
        first.sum_point + second.sum_point,
        first.sum_field + second.sum_field,
        first.sum_inner + second.sum_inner,
        first.sum_penalty + second.sum_penalty,
    )


def gap_bound(state, problem):
    """Upper bound on ``primal(u^t) - dual(v^t)``; ``inf`` if the primal max is unbounded.

    ``problem`` must provide ``lmo_u(a) = max_U [<a, u> - Psi(u)]`` and
    ``lmo_v(a) = max_V <a, v>``.
    """
    if state.weight_total <= 0:
        raise InvalidArgument("certificate has no points")
    primal_part = problem.lmo_u(-state.averaged_field_u)
    if math.isinf(primal_part):
        return math.inf
    bound = primal_part + problem.lmo_v(-state.averaged_field_v) + state.averaged_inner
    return max(bound, 0.0)


def dual_lower_bound(state, problem):
    """Dual value at ``v^t``, read off the averaged field (bilinear problems)."""
    primal_part = problem.lmo_u(-state.averaged_field_u)
    if math.isinf(primal_part):
        return -math.inf
    return -float(state.averaged_v @ problem.b) - primal_part


def relative_accuracy(state, problem):
    """``gap_bound / dual(v^t)`` when the dual value is positive, else ``inf``."""
    low = dual_lower_bound(state, problem)
    if not low > 0:
        return math.inf
    return gap_bound(state, problem) / low
