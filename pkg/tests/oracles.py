"""Independent reference solvers used only by the test-suite."""
import warnings

import cvxpy as cp
import numpy as np

from adenoise.prox import dgf, dgf_grad


def pair_norms(xi):
    return cp.norm(cp.reshape(xi, (xi.shape[0] // 2, 2), order="C"), 2, axis=1)


def prox_objective(setup, u, g, penalty, xi):
    """Objective of the composite prox-mapping, up to a constant."""
    lin = float((g - dgf_grad(setup, u)) @ xi)
    return lin + dgf(setup, xi) + penalty.value(xi)


def prox_oracle(setup, u, g, penalty):
    """Solve the composite prox problem with a generic conic solver.

    The returned point is pulled back into the feasible ball so that its
    objective value is a fair comparison.
    """
    N = setup.dim
    xi = cp.Variable(N)
    lin = g - dgf_grad(setup, u)
    blocks = cp.norm(cp.reshape(xi, (setup.block_count, setup.block_size), order="C"), 2, axis=1)
    if setup.block_count == 1:
        omega = 0.5 * setup.const * cp.sum_squares(xi)
    else:
        omega = 0.5 * setup.const * cp.square(cp.pnorm(blocks, setup.q_tilde))
    l1 = cp.sum(pair_norms(xi))
    obj = lin @ xi + omega
    if penalty.weight > 0:
        obj = obj + penalty.weight * (l1 if penalty.power == 1 else cp.square(l1))
    cons = []
    if penalty.constrained:
        cons.append((l1 if penalty.ball == 1 else cp.norm(xi, 2)) <= penalty.radius)
    prob = cp.Problem(cp.Minimize(obj), cons)
    with warnings.catch_warnings():
        # "solution may be inaccurate" at these tight tolerances; callers compare objectives
        warnings.simplefilter("ignore", UserWarning)
        prob.solve(solver=cp.CLARABEL, tol_gap_abs=1e-12, tol_gap_rel=1e-12, tol_feas=1e-12, max_iter=500)
    sol = np.asarray(xi.value, dtype=float)
    if penalty.constrained:
        z = sol.view(np.complex128)
        size = np.abs(z).sum() if penalty.ball == 1 else np.linalg.norm(sol)
        if size > penalty.radius:
            sol = sol * (penalty.radius / size)
    return sol


def assemble(matvec, dim):
    """Dense matrix of a linear map on ``R^dim``, column by column."""
    return np.column_stack([matvec(e) for e in np.eye(dim)])


def residual_problem_oracle(M, b, *, p, lam=0.0, radius=None, squared=False):
    """``min ||M u - b||_{C,p} (squared/2 if requested) + lam ||u||_{C,1}`` s.t. ``||u||_{C,1} <= radius``.

    ``p`` is ``"inf"`` or ``2``. Returns ``(value, u)``.
    """
    u = cp.Variable(M.shape[1])
    r = M @ u - b
    if p == "inf":
        res = cp.max(pair_norms(r))
    else:
        res = cp.norm(r, 2)
    obj = 0.5 * cp.sum_squares(r) if squared else res
    l1 = cp.sum(pair_norms(u))
    if lam:
        obj = obj + lam * l1
    cons = [] if radius is None else [l1 <= radius]
    prob = cp.Problem(cp.Minimize(obj), cons)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)
        prob.solve(solver=cp.CLARABEL, tol_gap_abs=1e-11, tol_gap_rel=1e-11, tol_feas=1e-11, max_iter=500)
    return float(prob.value), np.asarray(u.value, dtype=float)
