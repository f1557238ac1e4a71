"""Independent brute-force references for the conic singular value problem.

These solvers never touch the dual machinery: the grid oracle enumerates
the unit sphere by spherical angles (with a strict feasibility filter and
a local fine pass so the reported error bound stays honest), and the
projected-gradient oracle performs project-then-normalize descent on the
cone from random restarts.  Both produce attainable objective values, so
they upper-bound the true minimum; the grid value at resolution h is also
within lambda_max * h of it in dimensions 2 and 3.
"""

from dataclasses import dataclass

import numpy as np

from .cones import ConeH, nnqp_bb, polar_g
from .rng import SplitMix64

__all__ = ["OracleResult", "grid_oracle", "pg_oracle", "sphere_qp_scan"]


@dataclass(frozen=True)
class OracleResult:
    value: float
    x_best: np.ndarray
    method: str
    params: dict
    error_bound: float | None = None


def _normalized_constraints(cone: ConeH) -> tuple[np.ndarray | None, np.ndarray | None]:
    def norm_cols(m):
        if m.shape[1] == 0:
            return None
        s = np.linalg.norm(m, axis=0)
        return m / np.where(s > 0, s, 1.0)

    return norm_cols(cone.ineq), norm_cols(cone.eq)


def _sphere3(theta: np.ndarray, phi: np.ndarray) -> np.ndarray:
    st, ct = np.sin(theta), np.cos(theta)
    return np.stack([st * np.cos(phi), st * np.sin(phi), ct])


def _eval_chunk3(gram, cn, bn, theta, phi, slack):
    """Constraint slack test and objective on a (theta x phi) product grid.

    Returns flattened (feasible mask, worst constraint value, objective).
    """
    st, ct = np.sin(theta)[:, None], np.cos(theta)[:, None]
    cp, sp = np.cos(phi)[None, :], np.sin(phi)[None, :]
    worst = np.full((theta.size, phi.size), -np.inf)
    if cn is not None:
        for j in range(cn.shape[1]):
            val = st * (cn[0, j] * cp + cn[1, j] * sp) + ct * cn[2, j]
            np.maximum(worst, val, out=worst)
    if bn is not None:
        for j in range(bn.shape[1]):
            val = np.abs(st * (bn[0, j] * cp + bn[1, j] * sp) + ct * bn[2, j])
            np.maximum(worst, val, out=worst)
    feas = worst <= slack
    g = gram
    p_phi = g[0, 0] * cp[0] ** 2 + g[1, 1] * sp[0] ** 2 + 2 * g[0, 1] * cp[0] * sp[0]
    q_phi = g[0, 2] * cp[0] + g[1, 2] * sp[0]
    f = 0.5 * (st**2 * p_phi[None, :] + ct**2 * g[2, 2]) + (st * ct) * q_phi[None, :]
    return feas.ravel(), worst.ravel(), f.ravel()


def _grid3(gram, cn, bn, resolution, eq_slack):
    n_t = int(np.ceil(np.pi / resolution)) + 1
    n_p = int(np.ceil(2 * np.pi / resolution))
    thetas = np.linspace(0.0, np.pi, n_t)
    phis = np.arange(n_p) * (2 * np.pi / n_p)
    strict_slack = eq_slack if bn is not None else 0.0
    relax_slack = max(2 * resolution, 2 * eq_slack if bn is not None else 0.0)

    best_val, best_ang = np.inf, None
    cand: list[tuple[float, float, float]] = []
    chunk = max(1, int(2e6) // n_p)
    for i0 in range(0, n_t, chunk):
        tt = thetas[i0 : i0 + chunk]
        feas, worst, f = _eval_chunk3(gram, cn, bn, tt, phis, strict_slack)
        relaxed = worst <= relax_slack
        tgrid = np.repeat(tt, n_p)
        pgrid = np.tile(phis, tt.size)
        if feas.any():
            j = int(np.argmin(np.where(feas, f, np.inf)))
            if f[j] < best_val:
                best_val, best_ang = float(f[j]), (float(tgrid[j]), float(pgrid[j]))
        if relaxed.any():
            idx = np.flatnonzero(relaxed)
            fr = f[idx]
            keep = np.argsort(fr)[:48]
            cand.extend(zip(fr[keep], tgrid[idx[keep]], pgrid[idx[keep]]))
    return best_val, best_ang, cand, strict_slack


def _refine3(gram, cn, bn, cand, best_val, best_ang, resolution, strict_slack, lam_max):
    if not cand:
        return best_val, best_ang
    cand.sort(key=lambda t: t[0])
    # keep low-objective candidates, deduplicated on a coarse lattice
    seen, picked = set(), []
    cutoff = min(best_val, cand[0][0]) + 2.0 * lam_max * resolution
    for fval, th, ph in cand:
        if fval > cutoff or len(picked) >= 64:
            break
        key = (round(th / (2 * resolution)), round(ph / (2 * resolution)))
        if key in seen:
            continue
        seen.add(key)
        picked.append((th, ph))
    if not picked:
        return best_val, best_ang
    d = np.linspace(-2 * resolution, 2 * resolution, 161)
    for th, ph in picked:
        feas, _, f = _eval_chunk3(gram, cn, bn, th + d, ph + d, strict_slack)
        if feas.any():
            j = int(np.argmin(np.where(feas, f, np.inf)))
            if f[j] < best_val:
                ti, pi = divmod(j, d.size)
                best_val = float(f[j])
                best_ang = (float(th + d[ti]), float(ph + d[pi]))
    return best_val, best_ang


def grid_oracle(a: np.ndarray, cone: ConeH, resolution: float) -> OracleResult:
    """Dense angular enumeration of min 0.5 ||A x||^2 over the cone and sphere.

    Only dimensions 2 and 3 are supported.  The reported `error_bound` is
    lambda_max(A^T A) * resolution; a strict feasibility filter keeps the
    value an upper bound on the truth and a fine second pass around the
    best coarse cells keeps the bound valid near constraint boundaries.
    Cones with equality constraints are enumerated with a one-resolution
    slack on the equalities.
    """
    n = cone.dim
    if n not in (2, 3):
        raise ValueError("grid oracle supports only dimensions 2 and 3")
    a = np.asarray(a, dtype=float)
    gram = a.T @ a
    lam_max = float(np.linalg.eigvalsh(gram)[-1])
    cn, bn = _normalized_constraints(cone)
    eq_slack = resolution

    if n == 2:
        n_a = int(np.ceil(2 * np.pi / resolution))
        ang = np.arange(n_a) * (2 * np.pi / n_a)
        x = np.stack([np.cos(ang), np.sin(ang)])
        worst = np.full(n_a, -np.inf)
        if cn is not None:
            np.maximum(worst, (cn.T @ x).max(axis=0), out=worst)
        if bn is not None:
            np.maximum(worst, np.abs(bn.T @ x).max(axis=0), out=worst)
        strict_slack = eq_slack if bn is not None else 0.0
        f = 0.5 * np.einsum("ij,ij->j", x, gram @ x)
        feas = worst <= strict_slack
        best_val, best_x = np.inf, None
        if feas.any():
            j = int(np.argmin(np.where(feas, f, np.inf)))
            best_val, best_x = float(f[j]), x[:, j]
        relaxed = np.flatnonzero(worst <= 2 * resolution + strict_slack)
        order = relaxed[np.argsort(f[relaxed])][:64]
        d = np.linspace(-2 * resolution, 2 * resolution, 321)
        for j in order:
            aa = ang[j] + d
            xx = np.stack([np.cos(aa), np.sin(aa)])
            w = np.full(aa.size, -np.inf)
            if cn is not None:
                np.maximum(w, (cn.T @ xx).max(axis=0), out=w)
            if bn is not None:
                np.maximum(w, np.abs(bn.T @ xx).max(axis=0), out=w)
            ok = w <= strict_slack
            if ok.any():
                ff = 0.5 * np.einsum("ij,ij->j", xx, gram @ xx)
                i = int(np.argmin(np.where(ok, ff, np.inf)))
                if ff[i] < best_val:
                    best_val, best_x = float(ff[i]), xx[:, i]
        if best_x is None:
            raise ValueError("grid found no feasible point; resolution too coarse for this cone")
        return OracleResult(
            value=best_val,
            x_best=best_x,
            method="grid",
            params={"resolution": resolution},
            error_bound=lam_max * resolution,
        )

    best_val, best_ang, cand, strict_slack = _grid3(gram, cn, bn, resolution, eq_slack)
    best_val, best_ang = _refine3(
        gram, cn, bn, cand, best_val, best_ang, resolution, strict_slack, lam_max
    )
    if best_ang is None:
        raise ValueError("grid found no feasible point; resolution too coarse for this cone")
    x_best = _sphere3(np.array([best_ang[0]]), np.array([best_ang[1]]))[:, 0]
    return OracleResult(
        value=best_val,
        x_best=x_best,
        method="grid",
        params={"resolution": resolution},
        error_bound=lam_max * resolution,
    )


def pg_oracle(
    a: np.ndarray,
    cone: ConeH,
    restarts: int = 20,
    max_iter: int = 500,
    seed: int = 0,
) -> OracleResult:
    """Projected gradient descent on the cone-sphere intersection.

    Project-then-normalize iterations x <- normalize(P_K(x - eta A^T A x))
    with diminishing step eta_t = eta0 / (1 + t / 100), eta0 = 1 /
    lambda_max, run in lockstep from `restarts` seeded Gaussian starts.
    The cone projection uses the Moreau identity P_K(y) = y - P_{K polar}(y)
    with the polar in generator form.  Nonconvexity means the result is an
    upper bound, not certified ground truth.
    """
    n = cone.dim
    if n > 1000:
        raise ValueError("projected-gradient oracle is limited to n <= 1000")
    a = np.asarray(a, dtype=float)
    gram = a.T @ a
    lam_max = float(np.linalg.eigvalsh(gram)[-1])
    eta0 = 1.0 / lam_max if lam_max > 0 else 1.0
    gens = polar_g(cone)
    v = gens.gens
    k = v.shape[1]
    g_mat = v.T @ v if k else None
    rng = SplitMix64(seed)
    x = rng.gaussian_matrix((n, restarts))
    lam_warm = np.zeros((k, restarts)) if k else None

    def project_cols(y):
        nonlocal lam_warm
        if not k:
            return y
        lam_warm, _ = nnqp_bb(g_mat, -(v.T @ y), lam0=lam_warm, kkt_tol=1e-9, max_iter=10 * k * n)
        return y - v @ lam_warm

    def normalize_cols(y):
        norms = np.linalg.norm(y, axis=0)
        dead = norms < 1e-12
        norms[dead] = 1.0
        return y / norms[None, :], dead

    x = project_cols(x)
    x, dead = normalize_cols(x)
    best_vals = np.full(restarts, np.inf)
    best_x = x.copy()
    for t in range(max_iter):
        f = 0.5 * np.einsum("ij,ij->j", x, gram @ x)
        f[dead] = np.inf
        improve = f < best_vals
        if improve.any():
            best_vals[improve] = f[improve]
            best_x[:, improve] = x[:, improve]
        eta = eta0 / (1.0 + t / 100.0)
        x = project_cols(x - eta * (gram @ x))
        x, dead = normalize_cols(x)
    f = 0.5 * np.einsum("ij,ij->j", x, gram @ x)
    f[dead] = np.inf
    improve = f < best_vals
    best_vals[improve] = f[improve]
    best_x[:, improve] = x[:, improve]
    j = int(np.argmin(best_vals))
    return OracleResult(
        value=float(best_vals[j]),
        x_best=best_x[:, j],
        method="projected_gradient",
        params={"restarts": restarts, "max_iter": max_iter, "seed": seed},
        error_bound=None,
    )


def sphere_qp_scan(lambdas: np.ndarray, gammas: np.ndarray, resolution: float = 1e-3) -> float:
    """Dense enumeration of min 0.5 sum lam_i c_i^2 + sum gam_i c_i on the unit sphere.

    Dimensions 1 to 3; the scan value exceeds the truth by at most
    (max |lam| + ||gam||) * resolution.
    """
    lam = np.asarray(lambdas, dtype=float)
    gam = np.asarray(gammas, dtype=float)
    n = lam.size
    if n == 1:
        return float(min(0.5 * lam[0] + gam[0], 0.5 * lam[0] - gam[0]))
    if n == 2:
        n_a = int(np.ceil(2 * np.pi / resolution))
        ang = np.arange(n_a) * (2 * np.pi / n_a)
        c, s = np.cos(ang), np.sin(ang)
        f = 0.5 * (lam[0] * c**2 + lam[1] * s**2) + gam[0] * c + gam[1] * s
        return float(f.min())
    if n == 3:
        n_t = int(np.ceil(np.pi / resolution)) + 1
        n_p = int(np.ceil(2 * np.pi / resolution))
        thetas = np.linspace(0.0, np.pi, n_t)
        phis = np.arange(n_p) * (2 * np.pi / n_p)
        cp, sp = np.cos(phis), np.sin(phis)
        p_phi = lam[0] * cp**2 + lam[1] * sp**2
        l_phi = gam[0] * cp + gam[1] * sp
        best = np.inf
        chunk = max(1, int(2e6) // n_p)
        for i0 in range(0, n_t, chunk):
            tt = thetas[i0 : i0 + chunk]
            st, ct = np.sin(tt)[:, None], np.cos(tt)[:, None]
            f = 0.5 * (st**2 * p_phi[None, :] + ct**2 * lam[2])
            f += st * l_phi[None, :] + ct * gam[2]
            best = min(best, float(f.min()))
        return best
    raise ValueError("scan supports only dimensions 1 to 3")
