"""Polyhedral cones in half-space and generator form.

A half-space cone is K = {x : C^T x <= 0, B^T x = 0} with all constraint
normals stored as matrix columns; a generator cone is {V lam : lam >= 0}.
The polar of K is available two ways:

* half-space form, through left inverses G_C, G_B of the constraint
  matrices satisfying G_C C = I, G_B B = I and G_C B = 0, which yield
  K polar = {y : -G_C y <= 0, (I - C G_C - B G_B) y = 0};
* generator form, as the cone spanned by [C, B, -B].

Projections onto generator cones solve a nonnegative least-squares
problem by projected gradient with Barzilai-Borwein steps; the same
engine serves the quadratic subproblems of the dual solver.
"""

import warnings
from dataclasses import dataclass

import numpy as np

__all__ = [
    "ConeH",
    "ConeG",
    "LeftInverses",
    "cone_h",
    "left_inverses",
    "polar_h",
    "polar_g",
    "member_h",
    "member_g",
    "project_g",
    "project_h",
    "nnqp_bb",
    "load_cone_file",
    "format_cone_h",
    "format_cone_g",
]


@dataclass(frozen=True)
class ConeH:
    """Cone {x : ineq^T x <= 0, eq^T x = 0}; either block may be empty."""

    ineq: np.ndarray
    eq: np.ndarray

    @property
    def dim(self) -> int:
        return self.ineq.shape[0]

    @property
    def n_ineq(self) -> int:
        return self.ineq.shape[1]

    @property
    def n_eq(self) -> int:
        return self.eq.shape[1]


@dataclass(frozen=True)
class ConeG:
    """Cone {gens @ lam : lam >= 0}; zero columns mean the origin."""

    gens: np.ndarray

    @property
    def dim(self) -> int:
        return self.gens.shape[0]

    @property
    def n_gens(self) -> int:
        return self.gens.shape[1]


@dataclass(frozen=True)
class LeftInverses:
    """Matrices with g_c @ C = I, g_b @ B = I and g_c @ B = 0."""

    g_c: np.ndarray
    g_b: np.ndarray


def cone_h(n: int, ineq: np.ndarray | None = None, eq: np.ndarray | None = None) -> ConeH:
    """Build a half-space cone in R^n, normalizing absent blocks to n x 0."""
    def _block(m):
        if m is None:
            return np.zeros((n, 0))
        m = np.atleast_2d(np.asarray(m, dtype=float))
        if m.shape[0] != n:
            raise ValueError(f"constraint block has {m.shape[0]} rows, expected {n}")
        if not np.all(np.isfinite(m)):
            raise ValueError("constraint block contains non-finite entries")
        return m

    return ConeH(ineq=_block(ineq), eq=_block(eq))


def left_inverses(cone: ConeH) -> LeftInverses:
    """Canonical left inverses of the constraint blocks.

    With B present, G_C = (C^T D C)^{-1} C^T D for D the orthogonal
    projector onto range(B)-perp, which forces G_C B = 0; without B the
    pseudo-inverse of C suffices.  G_B is the pseudo-inverse of B.

    Raises:
        ValueError: if either block is column-rank deficient, or the
            inequality normals are dependent modulo the equalities.
    """
    c, b = cone.ineq, cone.eq
    n, m = c.shape
    r = b.shape[1]
    if m and np.linalg.matrix_rank(c) < m:
        raise ValueError("cone representation not reducible; remove redundant constraints")
    if r and np.linalg.matrix_rank(b) < r:
        raise ValueError("cone representation not reducible; remove redundant constraints")
    if r:
        g_b = np.linalg.pinv(b)
        d = np.eye(n) - b @ g_b
    else:
        g_b = np.zeros((0, n))
        d = np.eye(n)
    if m:
        ctd = c.T @ d
        try:
            g_c = np.linalg.solve(ctd @ c, ctd)
        except np.linalg.LinAlgError:
            raise ValueError("inequality normals not independent modulo equalities") from None
    else:
        g_c = np.zeros((0, n))
    li = LeftInverses(g_c=g_c, g_b=g_b)
    ok = True
    if m:
        ok &= np.abs(g_c @ c - np.eye(m)).max() <= 1e-8
        if r:
            ok &= np.abs(g_c @ b).max() <= 1e-8
    if r:
        ok &= np.abs(g_b @ b - np.eye(r)).max() <= 1e-8
    if not ok:
        raise ValueError("inequality normals not independent modulo equalities")
    return li


def polar_h(cone: ConeH) -> ConeH:
    """Polar cone in half-space form via the left-inverse construction.

    The inequality normals of the polar are the rows of -G_C and the
    equality normals the rows of I - C G_C - B G_B; equality rows that
    vanish are dropped so degenerate cones stay representable.
    """
    li = left_inverses(cone)
    n = cone.dim
    ineq = -li.g_c.T if cone.n_ineq else None
    resid = np.eye(n)
    if cone.n_ineq:
        resid = resid - cone.ineq @ li.g_c
    if cone.n_eq:
        resid = resid - cone.eq @ li.g_b
    eq = resid.T
    norms = np.linalg.norm(eq, axis=0)
    keep = norms > 1e-12 * (1.0 + norms.max(initial=0.0))
    eq = eq[:, keep] if keep.any() else None
    return cone_h(n, ineq=ineq, eq=eq)


def polar_g(cone: ConeH) -> ConeG:
    """Polar cone in generator form: the span of [C, B, -B] with nonnegative weights."""
    return ConeG(gens=np.hstack([cone.ineq, cone.eq, -cone.eq]))


def _default_tol(x: np.ndarray) -> float:
    return 1e-9 * (1.0 + float(np.linalg.norm(x)))


def member_h(cone: ConeH, x: np.ndarray, tol: float | None = None) -> bool:
    """Half-space membership check with tolerance `tol` on every constraint."""
    x = np.asarray(x, dtype=float)
    if tol is None:
        tol = _default_tol(x)
    if cone.n_ineq and float((cone.ineq.T @ x).max()) > tol:
        return False
    if cone.n_eq and float(np.abs(cone.eq.T @ x).max()) > tol:
        return False
    return True


def member_g(cone: ConeG, y: np.ndarray, tol: float | None = None) -> bool:
    """Generator membership: the best conic fit leaves residual <= tol * (1 + ||y||)."""
    y = np.asarray(y, dtype=float)
    if tol is None:
        tol = _default_tol(y)
    if cone.n_gens == 0:
        return float(np.linalg.norm(y)) <= tol * (1.0 + float(np.linalg.norm(y)))
    p = project_g(cone, y)
    return float(np.linalg.norm(p - y)) <= tol * (1.0 + float(np.linalg.norm(y)))


def nnqp_bb(
    hess: np.ndarray,
    lin: np.ndarray,
    lam0: np.ndarray | None = None,
    kkt_tol: float = 1e-8,
    max_iter: int | None = None,
) -> tuple[np.ndarray, bool]:
    """Minimize 0.5 lam^T H lam + lin^T lam over lam >= 0, columnwise.

    `lin` may be a vector or a k x R matrix; each column is an independent
    problem sharing the Hessian.  Projected gradient with Barzilai-Borwein
    steps, tracking the iterate with the smallest KKT residual.

    Returns:
        (lam, converged) where convergence means every column reached a
        projected-gradient residual of kkt_tol * (1 + ||lin||_inf).
    """
    single = lin.ndim == 1
    b = lin[:, None] if single else lin
    k, ncol = b.shape
    if max_iter is None:
        max_iter = max(200, 50 * k)
    scale = kkt_tol * (1.0 + np.abs(b).max(initial=0.0))
    lam = np.zeros((k, ncol)) if lam0 is None else np.array(lam0, dtype=float).reshape(k, ncol).copy()
    np.maximum(lam, 0.0, out=lam)
    grad = hess @ lam + b
    diag_mean = float(np.trace(hess)) / max(k, 1)
    alpha0 = 1.0 / diag_mean if diag_mean > 0 else 1.0
    alpha = np.full(ncol, alpha0)
    best = lam.copy()
    best_res = np.abs(lam - np.maximum(lam - grad, 0.0)).max(axis=0)
    for _ in range(max_iter):
        if best_res.max(initial=0.0) <= scale:
            return (best[:, 0], True) if single else (best, True)
        lam_new = np.maximum(lam - grad * alpha[None, :], 0.0)
        s = lam_new - lam
        q = hess @ s
        grad = grad + q
        lam = lam_new
        res = np.abs(lam - np.maximum(lam - grad, 0.0)).max(axis=0)
        improve = res < best_res
        if improve.any():
            best[:, improve] = lam[:, improve]
            best_res = np.minimum(best_res, res)
        sq = np.einsum("ij,ij->j", s, q)
        ss = np.einsum("ij,ij->j", s, s)
        with np.errstate(divide="ignore", invalid="ignore"):
            alpha = np.where(sq > 1e-300, ss / sq, alpha0)
    done = best_res.max(initial=0.0) <= scale
    return (best[:, 0], done) if single else (best, done)


def _project_g_lam(
    cone: ConeG, y: np.ndarray, kkt_tol: float = 1e-8, lam0: np.ndarray | None = None
) -> tuple[np.ndarray, bool]:
    v = cone.gens
    n, k = v.shape
    cols = y[:, None] if y.ndim == 1 else y
    lam, ok = nnqp_bb(v.T @ v, -(v.T @ cols), lam0=lam0, kkt_tol=kkt_tol, max_iter=10 * k * n)
    return lam, ok


def project_g(cone: ConeG, y: np.ndarray, kkt_tol: float = 1e-8) -> np.ndarray:
    """Euclidean projection of `y` onto a generator cone.

    Solves the nonnegative least-squares fit min_{lam>=0} ||V lam - y||
    and returns V lam.  Hitting the iteration cap returns the best iterate
    found and emits a warning.
    """
    y = np.asarray(y, dtype=float)
    if cone.n_gens == 0:
        return np.zeros(cone.dim)
    lam, ok = _project_g_lam(cone, y, kkt_tol=kkt_tol)
    if not ok:
        warnings.warn("cone projection hit its iteration cap; returning best iterate", stacklevel=2)
    return cone.gens @ lam[:, 0]


def project_h(cone: ConeH, y: np.ndarray, kkt_tol: float = 1e-8) -> np.ndarray:
    """Projection onto a half-space cone via the Moreau decomposition.

    The projections of y onto K and onto its polar sum to y, so the
    half-space projection is y minus the generator-cone projection onto
    the polar [C, B, -B].
    """
    y = np.asarray(y, dtype=float)
    return y - project_g(polar_g(cone), y, kkt_tol=kkt_tol)


# --- plain-text representation -------------------------------------------------

def _tokens_by_line(text: str, path: str):
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield lineno, line.split()


def _parse_floats(tokens: list[str], count: int, path: str, lineno: int) -> np.ndarray:
    if len(tokens) != count:
        raise ValueError(f"{path}:{lineno}: expected {count} values, got {len(tokens)}")
    try:
        return np.array([float(t) for t in tokens])
    except ValueError as exc:
        raise ValueError(f"{path}:{lineno}: {exc}") from None


def load_cone_file(path: str) -> ConeH:
    """Parse a cone file: header `n m r`, then m columns of C and r columns of B."""
    with open(path) as fh:
        text = fh.read()
    lines = list(_tokens_by_line(text, path))
    if not lines:
        raise ValueError(f"{path}:1: empty cone file")
    lineno, header = lines[0]
    if len(header) != 3:
        raise ValueError(f"{path}:{lineno}: expected header 'n m r'")
    try:
        n, m, r = (int(t) for t in header)
    except ValueError:
        raise ValueError(f"{path}:{lineno}: header entries must be integers") from None
    if n < 1 or m < 0 or r < 0:
        raise ValueError(f"{path}:{lineno}: invalid dimensions n={n} m={m} r={r}")
    body = lines[1:]
    if len(body) != m + r:
        raise ValueError(f"{path}: expected {m + r} constraint lines, got {len(body)}")
    cols = [_parse_floats(tokens, n, path, ln) for ln, tokens in body]
    ineq = np.column_stack(cols[:m]) if m else None
    eq = np.column_stack(cols[m:]) if r else None
    return cone_h(n, ineq=ineq, eq=eq)


def format_cone_h(cone: ConeH) -> str:
    """Cone file text for a half-space cone (inverse of load_cone_file)."""
    out = [f"{cone.dim} {cone.n_ineq} {cone.n_eq}"]
    for j in range(cone.n_ineq):
        out.append(" ".join(f"{v:.17g}" for v in cone.ineq[:, j]))
    for j in range(cone.n_eq):
        out.append(" ".join(f"{v:.17g}" for v in cone.eq[:, j]))
    return "\n".join(out)


def format_cone_g(cone: ConeG) -> str:
    """Generator listing: header `n k`, then k generator columns one per line."""
    out = [f"{cone.dim} {cone.n_gens}"]
    for j in range(cone.n_gens):
        out.append(" ".join(f"{v:.17g}" for v in cone.gens[:, j]))
    return "\n".join(out)
