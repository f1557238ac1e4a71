"""Quasi-Newton maximization of the dual function over a polar cone.

The smallest conic singular value of A over a polyhedral cone K solves

    0.5 * sigma_min(A; K)^2 = min { 0.5 ||A x||^2 : x in K, ||x|| = 1 },

and its Lagrangian dual maximizes the concave function theta(u) =
min_{||x||=1} 0.5 ||A x||^2 + <u, x> over the polar cone of K.  Strong
duality holds for this pair, so a dual maximizer certifies the primal
optimum through a vanishing gap and complementarity <u*, x*> = 0.

The solver ascends theta with a BFGS model: each iteration picks a
minimizer x*_u as supergradient, maximizes the centered quadratic model

    <g, u - u_l> - (1 / (2 t)) <u - u_l, H^{-1} (u - u_l)>

over the polar cone (a nonnegative QP in generator coordinates), and
backtracks on the trust scale t until theta does not decrease.  The
inverse model H is updated with the standard inverse BFGS formula fed
with the negated gradient difference, which keeps the curvature
condition meaningful for a concave objective.  A plain projected
supergradient step with diminishing length is the safeguard for
nonsmooth regions where no model step ascends.
"""

import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from .cones import ConeG, ConeH, member_h, nnqp_bb, polar_g
from .sphere_qp import (
    SpectralDecomposition,
    decompose_gram,
    dual_value,
    solution_representative,
    solve_sphere_qp,
)

__all__ = [
    "DualState",
    "ConicSvResult",
    "SolverOptions",
    "supergradient",
    "qn_step",
    "bfgs_update_inverse",
    "solve",
    "recover_primal",
    "duality_gap",
]


@dataclass
class DualState:
    """Dual iterate: point in the polar cone, inverse model, value, supergradient."""

    u: np.ndarray
    h_inv: np.ndarray
    theta: float
    g: np.ndarray
    iter: int = 0


@dataclass(frozen=True)
class ConicSvResult:
    """Certified output of the conic singular value solver.

    `sigma_min` is reported from the attained primal objective
    sqrt(||A x_star||^2), so it is always an upper bound on the true
    value; `gap` measures how tightly the dual certificate u_star
    matches it (in squared-value units).
    """

    sigma_min: float
    x_star: np.ndarray
    u_star: np.ndarray
    gap: float
    iters: int
    converged: bool
    wall_time: float


@dataclass(frozen=True)
class SolverOptions:
    eps: float = 1e-4
    max_iter: int = 5000
    curvature_tol: float = 1e-10
    step_scale: float = 1.0
    max_halvings: int = 30
    qp_kkt_tol: float = 1e-8
    gap_tol: float = 1e-6
    comp_tol: float = 1e-6
    feas_tol: float = 1e-6
    literal_subproblem: bool = False


def supergradient(spec: SpectralDecomposition, u: np.ndarray, hint: np.ndarray) -> np.ndarray:
    """A supergradient of the dual function at `u`, in original coordinates.

    Any sphere minimizer works; in the degenerate regime the free block is
    resolved toward `hint` (typically the previous step direction) so the
    chosen minimizer keeps the quasi-Newton direction productive.
    """
    sol = solve_sphere_qp(spec, u)
    c = solution_representative(sol, spec.phi.T @ np.asarray(hint, dtype=float))
    return spec.phi @ c


def bfgs_update_inverse(
    h_inv: np.ndarray, s: np.ndarray, y: np.ndarray, curvature_tol: float = 1e-10
) -> np.ndarray:
    """Inverse BFGS update (I - s y^T / y^T s) H (I - y s^T / y^T s) + s s^T / y^T s.

    Updates violating the curvature threshold are skipped, which preserves
    positive definiteness; the result satisfies the secant equation
    H' y = s exactly.
    """
    ys = float(y @ s)
    if ys <= curvature_tol * float(np.linalg.norm(y)) * float(np.linalg.norm(s)):
        return h_inv
    rho = 1.0 / ys
    hy = h_inv @ y
    out = h_inv - rho * (np.outer(s, hy) + np.outer(hy, s))
    out += (rho * rho * float(y @ hy) + rho) * np.outer(s, s)
    return 0.5 * (out + out.T)


def _bfgs_update_direct(b: np.ndarray, s: np.ndarray, y: np.ndarray) -> np.ndarray:
    # direct update B + y y^T / y^T s - B s s^T B / s^T B s; caller guards curvature
    ys = float(y @ s)
    bs = b @ s
    sbs = float(s @ bs)
    out = b + np.outer(y, y) / ys - np.outer(bs, bs) / sbs
    return 0.5 * (out + out.T)


def qn_step(
    state: DualState,
    polar: ConeG,
    step_scale: float,
    b_matrix: np.ndarray | None = None,
    lam0: np.ndarray | None = None,
    kkt_tol: float = 1e-8,
) -> np.ndarray:
    """Maximizer of the centered ascent model over the polar cone.

    Substituting u = V lam with lam >= 0 turns the model into a convex
    nonnegative QP solved by projected gradient with Barzilai-Borwein
    steps; the step is the projection of u + step_scale * H g onto the
    cone in the metric of the inverse model.  `b_matrix` may supply the
    inverse of `state.h_inv` when the caller maintains it.
    """
    v = polar.gens
    if v.shape[1] == 0:
        return state.u.copy()
    if b_matrix is None:
        b_matrix = np.linalg.inv(state.h_inv)
        b_matrix = 0.5 * (b_matrix + b_matrix.T)
    w = b_matrix @ v
    hess = (v.T @ w) / step_scale
    hess = 0.5 * (hess + hess.T)
    lin = -(w.T @ state.u / step_scale + v.T @ state.g)
    lam, ok = nnqp_bb(hess, lin, lam0=lam0, kkt_tol=kkt_tol, max_iter=50 * v.shape[1])
    if not ok:
        warnings.warn("dual step subproblem hit its iteration cap", stacklevel=2)
    return v @ lam


def _literal_step(
    u_g: np.ndarray, h_inv: np.ndarray, polar: ConeG, lam0, kkt_tol: float
) -> tuple[np.ndarray, np.ndarray]:
    # uncentered comparison subproblem: argmin <g, u> + 0.5 <u, H^{-1} u> over the cone
    v = polar.gens
    hess = v.T @ h_inv @ v
    hess = 0.5 * (hess + hess.T)
    lam, _ = nnqp_bb(hess, v.T @ u_g, lam0=lam0, kkt_tol=kkt_tol, max_iter=50 * v.shape[1])
    return v @ lam, lam


def _violation(cone: ConeH, x: np.ndarray) -> float:
    worst = -np.inf
    if cone.n_ineq:
        worst = max(worst, float((cone.ineq.T @ x).max()))
    if cone.n_eq:
        worst = max(worst, float(np.abs(cone.eq.T @ x).max()))
    return worst


def _project_onto_cone(cone: ConeH, x: np.ndarray) -> np.ndarray:
    # Moreau: subtract the projection onto the polar generator cone
    gens = polar_g(cone)
    if gens.n_gens == 0:
        return x
    v = gens.gens
    lam, _ = nnqp_bb(v.T @ v, -(v.T @ x), kkt_tol=1e-10, max_iter=200 * v.shape[1])
    return x - v @ lam


def _free_fill_feasible(spec: SpectralDecomposition, sol, cone: ConeH) -> np.ndarray:
    """Fill the free block of a degenerate minimizer to maximize cone feasibility.

    Runs projected subgradient descent on the worst constraint value over
    the free sphere, from a few deterministic starts.
    """
    phi = spec.phi
    free = sol.free_indices
    r = sol.free_radius
    fixed = sol.coeffs
    if free.size == 0 or r == 0.0:
        return phi @ fixed
    normals = [cone.ineq, cone.eq, -cone.eq]
    nmat = np.hstack([m for m in normals if m.shape[1]]) if (cone.n_ineq or cone.n_eq) else None
    if nmat is None:
        c = fixed.copy()
        c[free] = 0.0
        c[free[0]] = r
        return phi @ c
    scale = np.linalg.norm(nmat, axis=0)
    nmat = nmat / np.where(scale > 0, scale, 1.0)
    coords = phi.T @ nmat
    base = coords.T @ fixed
    a_free = coords[free, :]

    def run(z0: np.ndarray) -> tuple[float, np.ndarray]:
        z = z0.copy()
        best = z.copy()
        best_val = float((base + a_free.T @ z).max())
        for t in range(200):
            vals = base + a_free.T @ z
            j = int(np.argmax(vals))
            step = r * 0.5 / (1.0 + t / 20.0)
            z = z - step * a_free[:, j]
            zn = float(np.linalg.norm(z))
            if zn < 1e-14:
                z = best.copy()
                continue
            z *= r / zn
            val = float((base + a_free.T @ z).max())
            if val < best_val:
                best_val, best = val, z.copy()
        return best_val, best

    starts = []
    for hint in (np.ones(free.size), -np.ones(free.size)):
        starts.append(r * hint / np.linalg.norm(hint))
    e0 = np.zeros(free.size)
    e0[0] = r
    starts.append(e0)
    best_val, best_z = np.inf, starts[0]
    for z0 in starts:
        val, z = run(z0)
        if val < best_val:
            best_val, best_z = val, z
    c = fixed.copy()
    c[free] = best_z
    return phi @ c


def recover_primal(
    spec: SpectralDecomposition, u_star: np.ndarray, cone: ConeH, feas_tol: float = 1e-6
) -> np.ndarray:
    """Select a sphere minimizer at `u_star` maximizing cone feasibility.

    The nondegenerate minimizer is unique up to an overall sign flip that
    only preserves optimality when <u, x> vanishes; the degenerate free
    block is optimized by projected subgradient descent on the worst
    constraint value.  Small residual violations are removed by projecting
    onto the cone and renormalizing, which cannot change ||A x|| by more
    than the moved distance allows.
    """
    u_star = np.asarray(u_star, dtype=float)
    sol = solve_sphere_qp(spec, u_star)
    if sol.degenerate:
        x = _free_fill_feasible(spec, sol, cone)
    else:
        x = spec.phi @ sol.coeffs
    tie = abs(float(u_star @ x)) <= 1e-8 * (1.0 + float(np.linalg.norm(u_star)))
    if tie and not member_h(cone, x, feas_tol) and member_h(cone, -x, feas_tol):
        x = -x
    if _violation(cone, x) > 1e-10:
        p = _project_onto_cone(cone, x)
        pn = float(np.linalg.norm(p))
        if pn > 0.1:
            x = p / pn
    xn = float(np.linalg.norm(x))
    if xn > 0:
        x = x / xn
    return x


def duality_gap(spec: SpectralDecomposition, x_star: np.ndarray, u_star: np.ndarray) -> float:
    """Primal minus dual objective, 0.5 ||A x||^2 - theta(u); nonnegative by weak duality."""
    c = spec.phi.T @ np.asarray(x_star, dtype=float)
    primal = 0.5 * float(spec.lambdas @ (c * c))
    return primal - dual_value(spec, u_star)


def solve(
    a: np.ndarray,
    cone: ConeH,
    opts: SolverOptions | None = None,
    callback=None,
) -> ConicSvResult:
    """Smallest conic singular value of `a` over the half-space cone `cone`.

    Runs the dual ascent described in the module docstring, recovers a
    primal minimizer, and certifies it through the duality gap and
    complementarity.  `converged` is set only when the dual step criterion
    fired and all certificates hold; otherwise the best iterate is
    returned flagged.

    Args:
        a: d x n data matrix.
        cone: primal constraint cone in R^n.
        opts: solver tolerances and limits.
        callback: optional callable receiving a dict per iteration with
            keys iter/u/theta/step_norm/s/y/h_inv/curvature_ok/accepted.
    """
    t_start = time.perf_counter()
    opts = opts or SolverOptions()
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[1] != cone.dim:
        raise ValueError(f"matrix has {a.shape[1] if a.ndim == 2 else '?'} columns, cone lives in R^{cone.dim}")
    spec = decompose_gram(a)
    n = cone.dim
    polar = polar_g(cone)

    if polar.n_gens == 0:
        # unconstrained primal: the polar is the origin and theta(0) is optimal
        sol = solve_sphere_qp(spec, np.zeros(n))
        c = solution_representative(sol, np.ones(n))
        x = spec.phi @ c
        primal = 0.5 * float(spec.lambdas @ (c * c))
        return ConicSvResult(
            sigma_min=float(np.sqrt(max(2.0 * primal, 0.0))),
            x_star=x,
            u_star=np.zeros(n),
            gap=primal - sol.value,
            iters=0,
            converged=True,
            wall_time=time.perf_counter() - t_start,
        )

    v = polar.gens
    k = v.shape[1]
    u = np.zeros(n)
    h_inv = np.eye(n)
    b_mat = np.eye(n)
    w_mat = v.copy()          # B V, maintained incrementally
    q_mat = v.T @ v           # V^T B V
    gram_e = q_mat.copy()     # V^T V for plain projected steps
    sol = solve_sphere_qp(spec, u)
    theta = sol.value
    hint = np.ones(n)
    g = spec.phi @ solution_representative(sol, spec.phi.T @ hint)
    lam_warm = np.zeros(k)
    theta_best, u_best = theta, u.copy()
    stopped_by_eps = False
    iters = 0

    for it in range(1, opts.max_iter + 1):
        iters = it
        accepted = False
        lam = lam_warm
        if opts.literal_subproblem:
            u_trial, lam = _literal_step(g, h_inv, polar, lam_warm, opts.qp_kkt_tol)
            sol_t = solve_sphere_qp(spec, u_trial)
            accepted = True
        else:
            c2 = v.T @ g
            c1 = w_mat.T @ u
            t_scale = opts.step_scale
            u_trial = u
            sol_t = sol
            for _ in range(opts.max_halvings + 1):
                hess = q_mat / t_scale
                lin = -(c1 / t_scale + c2)
                lam, qp_ok = nnqp_bb(
                    hess, lin, lam0=lam_warm, kkt_tol=opts.qp_kkt_tol, max_iter=50 * k
                )
                if not qp_ok:
                    # model subproblem stalled: plain projected supergradient step
                    lam, _ = nnqp_bb(
                        gram_e,
                        -(v.T @ (u + t_scale * g)),
                        lam0=lam_warm,
                        kkt_tol=opts.qp_kkt_tol,
                        max_iter=200 * k,
                    )
                u_trial = v @ lam
                sol_t = solve_sphere_qp(spec, u_trial)
                if sol_t.value >= theta - 1e-12:
                    accepted = True
                    break
                t_scale *= 0.5
            if not accepted:
                if float(np.linalg.norm(u_trial - u)) < opts.eps:
                    # even vanishing model steps cannot ascend: constrained stationary point
                    stopped_by_eps = True
                    break
                lam, _ = nnqp_bb(
                    gram_e,
                    -(v.T @ (u + g / it)),
                    lam0=lam_warm,
                    kkt_tol=opts.qp_kkt_tol,
                    max_iter=200 * k,
                )
                u_trial = v @ lam
                sol_t = solve_sphere_qp(spec, u_trial)

        s_vec = u_trial - u
        step_norm = float(np.linalg.norm(s_vec))
        if step_norm > 0.0:
            hint = s_vec
        g_new = spec.phi @ solution_representative(sol_t, spec.phi.T @ hint)
        y_vec = g - g_new
        ys = float(y_vec @ s_vec)
        curv_ok = (
            step_norm > 0.0
            and ys > opts.curvature_tol * float(np.linalg.norm(y_vec)) * step_norm
        )
        if curv_ok:
            h_inv = bfgs_update_inverse(h_inv, s_vec, y_vec, opts.curvature_tol)
            bs = b_mat @ s_vec
            sbs = float(s_vec @ bs)
            vy = v.T @ y_vec
            vbs = v.T @ bs
            b_mat += np.outer(y_vec, y_vec) / ys - np.outer(bs, bs) / sbs
            w_mat += np.outer(y_vec, vy) / ys - np.outer(bs, vbs) / sbs
            q_mat += np.outer(vy, vy) / ys - np.outer(vbs, vbs) / sbs
            q_mat = 0.5 * (q_mat + q_mat.T)
        if it % 64 == 0:
            # refresh incremental products to contain roundoff drift
            b_mat = 0.5 * (b_mat + b_mat.T)
            w_mat = b_mat @ v
            q_mat = v.T @ w_mat
            q_mat = 0.5 * (q_mat + q_mat.T)

        u, sol, theta, g, lam_warm = u_trial, sol_t, sol_t.value, g_new, lam
        if theta > theta_best:
            theta_best, u_best = theta, u.copy()
        if callback is not None:
            callback(
                {
                    "iter": it,
                    "u": u.copy(),
                    "theta": theta,
                    "step_norm": step_norm,
                    "s": s_vec,
                    "y": y_vec,
                    "h_inv": h_inv,
                    "curvature_ok": curv_ok,
                    "accepted": accepted,
                }
            )
        if step_norm < opts.eps:
            stopped_by_eps = True
            break

    if not stopped_by_eps and theta_best > theta:
        u, theta = u_best, theta_best

    x = recover_primal(spec, u, cone, feas_tol=10 * opts.feas_tol)
    cx = spec.phi.T @ x
    primal = 0.5 * float(spec.lambdas @ (cx * cx))
    gap = primal - theta
    compl = abs(float(u @ x))
    converged = (
        stopped_by_eps
        and member_h(cone, x, opts.feas_tol)
        and gap <= opts.gap_tol * (1.0 + abs(primal))
        and compl <= opts.comp_tol * (1.0 + float(np.linalg.norm(u)))
    )
    return ConicSvResult(
        sigma_min=float(np.sqrt(max(2.0 * primal, 0.0))),
        x_star=x,
        u_star=u,
        gap=gap,
        iters=iters,
        converged=converged,
        wall_time=time.perf_counter() - t_start,
    )
