"""Closed-form minimization of quadratics over the unit sphere.

Everything here works on the problem

    min_{||x||_2 = 1}  0.5 * ||A x||^2 + <u, x>

through the eigendecomposition A^T A = phi diag(lambda) phi^T with
lambda_1 <= ... <= lambda_n.  Writing x = phi c and gamma = phi^T u, the
minimizer satisfies the stationarity condition (lambda_i - nu) c_i =
-gamma_i with multiplier nu <= lambda_1.  Two regimes occur:

* degenerate: gamma vanishes on the bottom eigenspace and the fixed
  coefficients -gamma_i / (lambda_i - lambda_1) fit inside the unit
  sphere; the remaining mass sits anywhere on a free sphere inside the
  bottom eigenspace.
* nondegenerate: nu is the unique root mu < lambda_1 of the secular
  equation sum_i gamma_i^2 / (lambda_i - mu)^2 = 1, found by bisection,
  and c_i = -gamma_i / (lambda_i - mu).

The minimum value as a function of u is the concave dual function used by
the cone-constrained solver; any minimizer is a supergradient of it.
"""

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "SpectralDecomposition",
    "EigsplitIndex",
    "SphereQpSolution",
    "decompose_gram",
    "eigsplit",
    "classify",
    "secular_root",
    "solve_sphere_qp",
    "dual_value",
    "solution_representative",
]


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigendecomposition of a Gram matrix A^T A.

    Attributes:
        lambdas: eigenvalues in ascending order.
        phi: orthonormal eigenvectors as columns, signs fixed so the first
            non-negligible entry of each column is positive.
        multiplicity_tol: threshold used to group equal eigenvalues.
    """

    lambdas: np.ndarray
    phi: np.ndarray
    multiplicity_tol: float

    @property
    def n(self) -> int:
        return self.lambdas.size


@dataclass(frozen=True)
class EigsplitIndex:
    """Index split between the bottom eigenspace and the rest."""

    e1: np.ndarray
    e_plus: np.ndarray


@dataclass(frozen=True)
class SphereQpSolution:
    """Description of the minimizer set of a sphere-constrained quadratic.

    `coeffs` holds the coordinates of the minimizer in the eigenbasis; in
    the degenerate case the entries on `free_indices` are zero and any
    point of norm `free_radius` on that block completes a minimizer.
    """

    coeffs: np.ndarray
    multiplier: float
    degenerate: bool
    free_radius: float
    free_indices: np.ndarray = field(repr=False)
    value: float = 0.0


def _fix_signs(phi: np.ndarray) -> np.ndarray:
    # deterministic orientation: first entry above a relative threshold positive
    absphi = np.abs(phi)
    thresh = 1e-12 * absphi.max(axis=0)
    first = (absphi > thresh[None, :]).argmax(axis=0)
    signs = np.sign(phi[first, np.arange(phi.shape[1])])
    return phi * signs[None, :]


def decompose_gram(a: np.ndarray, multiplicity_tol: float | None = None) -> SpectralDecomposition:
    """Eigendecompose A^T A with a reproducible eigenvector orientation.

    Args:
        a: d x n matrix.
        multiplicity_tol: eigenvalue grouping threshold; defaults to
            1e-8 * (1 + lambda_max).

    Raises:
        ValueError: on empty or non-finite input.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.size == 0:
        raise ValueError("expected a nonempty 2-d matrix")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix contains non-finite entries")
    gram = a.T @ a
    lambdas, phi = np.linalg.eigh(gram)
    phi = _fix_signs(phi)
    if multiplicity_tol is None:
        multiplicity_tol = 1e-8 * (1.0 + float(lambdas[-1]))
    return SpectralDecomposition(lambdas=lambdas, phi=phi, multiplicity_tol=float(multiplicity_tol))


def eigsplit(spec: SpectralDecomposition) -> EigsplitIndex:
    """Indices of the bottom eigenvalue group and of its complement."""
    lam = spec.lambdas
    in_bottom = lam <= lam[0] + spec.multiplicity_tol
    idx = np.arange(lam.size)
    return EigsplitIndex(e1=idx[in_bottom], e_plus=idx[~in_bottom])


def classify(spec: SpectralDecomposition, u: np.ndarray) -> tuple[bool, np.ndarray]:
    """Decide the solution regime at `u`.

    Returns `(degenerate, gammas)` where `gammas = phi^T u`.  Entries of
    gamma on the bottom eigenspace below multiplicity_tol * ||u|| count as
    zero; the boundary case of the sphere-fit inequality is degenerate.
    """
    u = np.asarray(u, dtype=float)
    gammas = spec.phi.T @ u
    split = eigsplit(spec)
    unorm = float(np.linalg.norm(u))
    if np.all(np.abs(gammas[split.e1]) <= spec.multiplicity_tol * unorm):
        lam = spec.lambdas
        gaps = lam[split.e_plus] - lam[0]
        fit = float(np.sum((gammas[split.e_plus] / gaps) ** 2)) if split.e_plus.size else 0.0
        if fit <= 1.0:
            return True, gammas
    return False, gammas


def secular_root(
    lambdas: np.ndarray,
    gammas: np.ndarray,
    multiplicity_tol: float = 0.0,
    root_tol: float = 1e-12,
) -> float:
    """Bisection root of sum_i gamma_i^2 / (lambda_i - mu)^2 = 1 below lambda_1.

    The left-hand side is strictly increasing for mu < lambda_1, is at most
    one at lambda_1 - ||gamma|| and exceeds one approaching lambda_1 in the
    nondegenerate regime, so [lambda_1 - ||gamma||, lambda_1) brackets the
    unique root.

    Raises:
        ValueError: when the bracket fails, which signals a numerically
            degenerate instance that should be re-classified with a larger
            tolerance.
    """
    lam = np.asarray(lambdas, dtype=float)
    gam = np.asarray(gammas, dtype=float)
    gnorm = float(np.linalg.norm(gam))
    if gnorm == 0.0:
        raise ValueError("secular equation needs a nonzero linear term")
    lam1 = float(lam[0])

    def f(mu: float) -> float:
        return float(np.sum((gam / (lam - mu)) ** 2))

    eps_b = 1e-14 * (1.0 + abs(lam1) + gnorm)
    lo = lam1 - gnorm - eps_b
    hi = lam1 - eps_b
    if f(hi) < 1.0:
        raise ValueError(
            "secular bracket failed: instance is numerically degenerate, "
            "re-run classification with a larger tolerance"
        )
    best_mu, best_res = lo, abs(f(lo) - 1.0)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        val = f(mid)
        res = abs(val - 1.0)
        if res < best_res:
            best_mu, best_res = mid, res
        if res <= root_tol:
            return mid
        if val < 1.0:
            lo = mid
        else:
            hi = mid
    return best_mu


def solve_sphere_qp(spec: SpectralDecomposition, u: np.ndarray) -> SphereQpSolution:
    """Global minimizer description of 0.5 sum lambda_i c_i^2 + sum gamma_i c_i on ||c|| = 1."""
    degenerate, gammas = classify(spec, u)
    lam = spec.lambdas
    n = lam.size
    split = eigsplit(spec)
    coeffs = np.zeros(n)
    if degenerate:
        ep = split.e_plus
        if ep.size:
            coeffs[ep] = -gammas[ep] / (lam[ep] - lam[0])
        used = float(np.sum(coeffs[ep] ** 2)) if ep.size else 0.0
        free_radius = float(np.sqrt(max(1.0 - used, 0.0)))
        value = 0.5 * float(np.sum(lam[ep] * coeffs[ep] ** 2))
        value += float(gammas[ep] @ coeffs[ep]) if ep.size else 0.0
        value += 0.5 * float(lam[0]) * free_radius**2
        return SphereQpSolution(
            coeffs=coeffs,
            multiplier=float(lam[0]),
            degenerate=True,
            free_radius=free_radius,
            free_indices=split.e1,
            value=value,
        )
    mu = secular_root(lam, gammas, spec.multiplicity_tol)
    coeffs = -gammas / (lam - mu)
    value = 0.5 * float(np.sum(lam * coeffs**2)) + float(gammas @ coeffs)
    return SphereQpSolution(
        coeffs=coeffs,
        multiplier=float(mu),
        degenerate=False,
        free_radius=0.0,
        free_indices=np.empty(0, dtype=int),
        value=value,
    )


def dual_value(spec: SpectralDecomposition, u: np.ndarray) -> float:
    """Value of the dual function: the sphere-constrained minimum at `u`."""
    return solve_sphere_qp(spec, u).value


def solution_representative(sol: SphereQpSolution, direction_hint: np.ndarray) -> np.ndarray:
    """Pick one minimizer from the solution set, in eigenbasis coordinates.

    Nondegenerate solutions are unique.  Degenerate ones fill the free
    block with the point of the free sphere best aligned with
    `direction_hint`; a hint that vanishes on the free block falls back to
    the first free coordinate.
    """
    c = sol.coeffs.copy()
    if sol.degenerate and sol.free_indices.size and sol.free_radius > 0.0:
        hint = np.asarray(direction_hint, dtype=float)[sol.free_indices]
        norm = float(np.linalg.norm(hint))
        if norm <= 1e-12 * max(1.0, float(np.linalg.norm(direction_hint))):
            fill = np.zeros(sol.free_indices.size)
            fill[0] = 1.0
        else:
            fill = hint / norm
        c[sol.free_indices] = sol.free_radius * fill
    return c
