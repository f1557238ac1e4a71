"""Sensor selection for quadratic measurement models at desk scale.

A state vector V in C^N is observed through noisy quadratic power
measurements z_l = V* H_l V with Hermitian operators H_l.  Lifting to
W = V V* and splitting real and imaginary parts turns the estimation
problem into a real one over the structured block space

    M = { [[S, T], [-T, S]] : S symmetric, T antisymmetric },

whose independent entries are packed by a linear map into R^(N^2) with
off-diagonal entries scaled by sqrt(2), so that <t(X), t(Y)> equals half
the Frobenius pairing on M.  With h_l the packed operators, the Fisher
information of a selection delta is I_delta = 2 sum delta_l h_l h_l^T,
and the design quality at a reference point w0 is the minimum of the
quadratic form tau^T I_delta tau over unit directions tau in the tangent
cone of the semidefinite constraint at w0.  That minimum is the squared
conic singular value of a square root of I_delta over the tangent cone,
so the core dual solver evaluates it; a forward-greedy heuristic then
picks measurements.
"""

from dataclasses import dataclass, field

import numpy as np

from .cones import ConeH, cone_h
from .dual_solver import SolverOptions, solve

__all__ = [
    "MeasurementModel",
    "RealifiedModel",
    "DesignProblem",
    "realify",
    "information_matrix",
    "tangent_cone",
    "design_objective",
    "greedy_design",
    "load_model_file",
    "load_vector_file",
]


@dataclass(frozen=True)
class MeasurementModel:
    """Hermitian measurement operators with observations and noise level."""

    h_list: np.ndarray  # L x N x N complex
    z: np.ndarray
    noise_sigma: float = 1.0

    @property
    def n_state(self) -> int:
        return self.h_list.shape[1]

    @property
    def n_meas(self) -> int:
        return self.h_list.shape[0]


@dataclass(frozen=True)
class RealifiedModel:
    """Real block form of a measurement model plus the entry-packing map."""

    hh_list: np.ndarray  # L x 2N x 2N real
    h_mat: np.ndarray    # L x vec_dim packed operators
    n_state: int
    # packing index arrays: symmetric diagonal, symmetric upper, antisymmetric upper
    idx_s: tuple = field(repr=False, default=())
    idx_t: tuple = field(repr=False, default=())

    @property
    def vec_dim(self) -> int:
        return self.n_state**2

    def t_forward(self, x: np.ndarray) -> np.ndarray:
        """Pack a structured 2N x 2N matrix into independent coordinates."""
        n = self.n_state
        s = x[:n, :n]
        t = x[:n, n:]
        iu, ju = self.idx_s
        it, jt = self.idx_t
        parts = [np.diagonal(s)]
        if iu.size:
            parts.append(np.sqrt(2.0) * s[iu, ju])
        if it.size:
            parts.append(np.sqrt(2.0) * t[it, jt])
        return np.concatenate(parts)

    def t_inverse(self, w: np.ndarray) -> np.ndarray:
        """Rebuild the structured matrix from packed coordinates."""
        n = self.n_state
        w = np.asarray(w, dtype=float)
        if w.size != self.vec_dim:
            raise ValueError(f"expected {self.vec_dim} coordinates, got {w.size}")
        iu, ju = self.idx_s
        it, jt = self.idx_t
        s = np.zeros((n, n))
        np.fill_diagonal(s, w[:n])
        off = n * (n - 1) // 2
        if iu.size:
            vals = w[n : n + off] / np.sqrt(2.0)
            s[iu, ju] = vals
            s[ju, iu] = vals
        t = np.zeros((n, n))
        if it.size:
            vals = w[n + off :] / np.sqrt(2.0)
            t[it, jt] = vals
            t[jt, it] = -vals
        return np.block([[s, t], [-t, s]])


@dataclass(frozen=True)
class DesignProblem:
    """A selection vector with its information matrix and tangent cone."""

    delta: np.ndarray
    w0: np.ndarray
    info: np.ndarray
    tangent: ConeH


def _project_structured(m: np.ndarray, n: int) -> np.ndarray:
    """Orthogonal projection of a 2N x 2N matrix onto the structured block space."""
    m11, m12 = m[:n, :n], m[:n, n:]
    m21, m22 = m[n:, :n], m[n:, n:]
    s = 0.25 * (m11 + m11.T + m22 + m22.T)
    t = 0.25 * (m12 - m12.T - m21 + m21.T)
    return np.block([[s, t], [-t, s]])


def realify(model: MeasurementModel) -> RealifiedModel:
    """Real block form of the measurement operators with the packing map.

    Each Hermitian H maps to [[H_R, H_I], [-H_I, H_R]]; the packed vectors
    h_l reproduce the measurement pairing, <h_l, t(W_real)> = trace(H_l W).

    Raises:
        ValueError: when an operator is not Hermitian.
    """
    h_list = np.asarray(model.h_list, dtype=complex)
    L, n, n2 = h_list.shape
    if n != n2:
        raise ValueError("measurement operators must be square")
    scale = 1.0 + float(np.abs(h_list).max(initial=0.0))
    for idx in range(L):
        if np.abs(h_list[idx] - h_list[idx].conj().T).max() > 1e-10 * scale:
            raise ValueError(f"measurement operator {idx} is not Hermitian")
    iu, ju = np.triu_indices(n, k=1)
    hh = np.empty((L, 2 * n, 2 * n))
    for idx in range(L):
        hr = h_list[idx].real
        hi = h_list[idx].imag
        hr = 0.5 * (hr + hr.T)
        hi = 0.5 * (hi - hi.T)
        hh[idx] = np.block([[hr, hi], [-hi, hr]])
    out = RealifiedModel(
        hh_list=hh,
        h_mat=np.empty((L, n * n)),
        n_state=n,
        idx_s=(iu, ju),
        idx_t=(iu, ju),
    )
    for idx in range(L):
        out.h_mat[idx] = out.t_forward(hh[idx])
    return out


def information_matrix(realified: RealifiedModel, delta: np.ndarray) -> np.ndarray:
    """Fisher information 2 sum_l delta_l h_l h_l^T of a selection in [0, 1]^L."""
    delta = np.asarray(delta, dtype=float)
    if delta.size != realified.h_mat.shape[0]:
        raise ValueError("selection length does not match the number of measurements")
    if delta.min(initial=0.0) < -1e-12 or delta.max(initial=0.0) > 1.0 + 1e-12:
        raise ValueError("selection entries must lie in [0, 1]")
    h = realified.h_mat
    return 2.0 * (h.T * delta) @ h


def tangent_cone(
    realified: RealifiedModel, w0: np.ndarray, kernel_tol: float | None = None
) -> ConeH:
    """Tangent cone of the semidefinite constraint at the packed point w0.

    One inequality per kernel basis vector u_j of the structured matrix at
    w0: directions tau must satisfy <t(P_M(u_j u_j^T)), tau> >= 0.  A
    positive definite w0 has an empty kernel and yields the whole space.

    Raises:
        ValueError: when the matrix at w0 is not positive semidefinite
            within the kernel tolerance.
    """
    m0 = realified.t_inverse(w0)
    evals, evecs = np.linalg.eigh(m0)
    if kernel_tol is None:
        kernel_tol = 1e-8 * (1.0 + float(np.abs(evals).max(initial=0.0)))
    if evals[0] < -kernel_tol:
        raise ValueError("reference point is not positive semidefinite within tolerance")
    kernel = evecs[:, evals < kernel_tol]
    dim = realified.vec_dim
    if kernel.shape[1] == 0:
        return cone_h(dim)
    cols = []
    for j in range(kernel.shape[1]):
        uj = kernel[:, j]
        vec = realified.t_forward(_project_structured(np.outer(uj, uj), realified.n_state))
        cols.append(-vec)
    mat = np.column_stack(cols)
    _, unique_idx = np.unique(mat.round(decimals=15), axis=1, return_index=True)
    mat = mat[:, np.sort(unique_idx)]
    return cone_h(dim, ineq=mat)


def design_objective(
    realified: RealifiedModel,
    delta: np.ndarray,
    w0: np.ndarray,
    solver_opts: SolverOptions | None = None,
) -> float:
    """Minimum of tau^T I_delta tau over unit tangent directions at w0.

    Factors the information matrix as R^T R with eigenvalue clamping at
    zero and reports the squared conic singular value of R over the
    tangent cone.  Monotone in the selection under the Loewner order.
    """
    info = information_matrix(realified, delta)
    evals, evecs = np.linalg.eigh(0.5 * (info + info.T))
    root = np.sqrt(np.clip(evals, 0.0, None))
    r = root[:, None] * evecs.T
    cone = tangent_cone(realified, w0)
    result = solve(r, cone, opts=solver_opts or SolverOptions())
    return float(result.sigma_min**2)


def greedy_design(
    realified: RealifiedModel,
    w0: np.ndarray,
    budget: int,
    solver_opts: SolverOptions | None = None,
) -> np.ndarray:
    """Forward-greedy selection of `budget` measurements.

    Starting from the empty selection, repeatedly adds the measurement
    with the largest resulting objective; ties break to the lowest index.
    """
    L = realified.h_mat.shape[0]
    if not 1 <= budget <= L:
        raise ValueError(f"budget must be between 1 and {L}")
    delta = np.zeros(L)
    for _ in range(budget):
        best_j, best_val = -1, -np.inf
        for j in range(L):
            if delta[j]:
                continue
            trial = delta.copy()
            trial[j] = 1.0
            val = design_objective(realified, trial, w0, solver_opts=solver_opts)
            if val > best_val:
                best_j, best_val = j, val
        delta[best_j] = 1.0
    return delta


# --- plain-text model files ----------------------------------------------------

def load_model_file(path: str) -> MeasurementModel:
    """Parse a model file: header `N L`, then L blocks of N rows of re/im pairs."""
    with open(path) as fh:
        raw = fh.read()
    lines = []
    for lineno, line in enumerate(raw.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if body:
            lines.append((lineno, body.split()))
    if not lines:
        raise ValueError(f"{path}:1: empty model file")
    lineno, header = lines[0]
    if len(header) != 2:
        raise ValueError(f"{path}:{lineno}: expected header 'N L'")
    try:
        n, L = int(header[0]), int(header[1])
    except ValueError:
        raise ValueError(f"{path}:{lineno}: header entries must be integers") from None
    if n < 1 or L < 1:
        raise ValueError(f"{path}:{lineno}: invalid dimensions N={n} L={L}")
    body = lines[1:]
    if len(body) != L * n:
        raise ValueError(f"{path}: expected {L * n} matrix rows, got {len(body)}")
    h_list = np.empty((L, n, n), dtype=complex)
    for block in range(L):
        for row in range(n):
            lineno, tokens = body[block * n + row]
            if len(tokens) != 2 * n:
                raise ValueError(
                    f"{path}:{lineno}: expected {2 * n} values (re/im pairs), got {len(tokens)}"
                )
            try:
                vals = np.array([float(t) for t in tokens])
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
            h_list[block, row] = vals[0::2] + 1j * vals[1::2]
    return MeasurementModel(h_list=h_list, z=np.zeros(L), noise_sigma=1.0)


def load_vector_file(path: str, expected: int | None = None) -> np.ndarray:
    """Read a whitespace-separated real vector, optionally checking length."""
    with open(path) as fh:
        raw = fh.read()
    tokens = []
    for lineno, line in enumerate(raw.splitlines(), start=1):
        body = line.split("#", 1)[0]
        for tok in body.split():
            try:
                tokens.append(float(tok))
            except ValueError:
                raise ValueError(f"{path}:{lineno}: could not parse '{tok}'") from None
    vec = np.array(tokens)
    if expected is not None and vec.size != expected:
        raise ValueError(f"{path}: expected {expected} values, got {vec.size}")
    return vec
