"""Node-level variational inequality: find u in K with <w + S(u), v - u> >= 0.

S is affine monotone, S(u) = M u + b.  For a strongly monotone S the
solution is unique and the projected fixed-point iteration
u <- P_K(u - gamma (w + S(u))) with gamma = mu / L^2 is a contraction.
For merely monotone S the solver commits to the least-norm element of the
solution set via Tikhonov regularization extrapolated to zero.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import DimensionMismatch, DomainError, NonMonotoneError, NotConvergedError

_MONOTONE_TOL = 1e-10
_STRONG_MU = 1e-12


def _power_iteration_norm(m: np.ndarray, steps: int = 100) -> float:
    """Spectral norm of m via power iteration on m^T m."""
    dim = m.shape[0]
    if dim == 0:
        return 0.0
    b = m.T @ m
    v = np.ones(dim) / np.sqrt(dim)
    for _ in range(steps):
        w = b @ v
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        v = w / nw
    return float(np.sqrt(v @ (b @ v)))


@dataclass(frozen=True)
class AffineOperator:
    """S(u) = M u + b with monotonicity read off the symmetric part of M."""

    M: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        M = np.asarray(self.M, dtype=float)
        b = np.asarray(self.b, dtype=float)
        if M.ndim != 2 or M.shape[0] != M.shape[1]:
            raise DimensionMismatch("operator matrix must be square")
        if b.shape != (M.shape[0],):
            raise DimensionMismatch("operator shift has wrong length")
        object.__setattr__(self, "M", M)
        object.__setattr__(self, "b", b)

    @property
    def dim(self) -> int:
        return self.M.shape[0]

    def __call__(self, u: np.ndarray) -> np.ndarray:
        return self.M @ u + self.b

    @cached_property
    def mu(self) -> float:
        """Smallest eigenvalue of the symmetric part (strong monotonicity modulus)."""
        sym = 0.5 * (self.M + self.M.T)
        return float(np.linalg.eigvalsh(sym)[0])

    @cached_property
    def lipschitz(self) -> float:
        return _power_iteration_norm(self.M)

    def shifted(self, eps: float) -> "AffineOperator":
        return AffineOperator(self.M + eps * np.eye(self.dim), self.b)


class BoxSet:
    """A box feasible set; endpoints may be +-inf (covers the orthant)."""

    __slots__ = ("lo", "hi")

    def __init__(self, lo, hi):
        lo = np.atleast_1d(np.asarray(lo, dtype=float))
        hi = np.atleast_1d(np.asarray(hi, dtype=float))
        if lo.shape != hi.shape or lo.ndim != 1:
            raise DimensionMismatch("box bounds must be 1-d arrays of equal length")
        if np.any(lo > hi):
            raise DomainError("feasible box has lo > hi")
        self.lo = lo
        self.hi = hi

    @classmethod
    def orthant(cls, dim: int) -> "BoxSet":
        return cls(np.zeros(dim), np.full(dim, np.inf))

    @property
    def dim(self) -> int:
        return self.lo.shape[0]

    @property
    def bounded(self) -> bool:
        return bool(np.all(np.isfinite(self.lo)) and np.all(np.isfinite(self.hi)))

    def project(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.dim:
            raise DimensionMismatch(f"point has dimension {x.shape[-1]}, set {self.dim}")
        return np.clip(x, self.lo, self.hi)

    def contains(self, x, tol: float = 0.0) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= self.lo - tol) and np.all(x <= self.hi + tol))


@dataclass(frozen=True)
class ProjectionSet:
    """Feasible set given only through a user projection callable."""

    fn: object
    dim: int

    def project(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.dim:
            raise DimensionMismatch(f"point has dimension {x.shape[-1]}, set {self.dim}")
        if x.ndim == 2:  # user callables are only required to handle single points
            return np.vstack([np.asarray(self.fn(row), dtype=float) for row in x])
        return np.asarray(self.fn(x), dtype=float)

    def contains(self, x, tol: float = 1e-9) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.linalg.norm(x - self.project(x)) <= tol)


FeasibleSet = BoxSet | ProjectionSet


def project(k: FeasibleSet, x) -> np.ndarray:
    """Nearest point of K (coordinate clamp for boxes)."""
    return k.project(np.asarray(x, dtype=float))


@dataclass(frozen=True)
class VIInstance:
    k: FeasibleSet
    w: np.ndarray
    s: AffineOperator

    def __post_init__(self):
        w = np.atleast_1d(np.asarray(self.w, dtype=float))
        object.__setattr__(self, "w", w)
        if not (self.k.dim == w.shape[0] == self.s.dim):
            raise DimensionMismatch(
                f"inconsistent dimensions: K {self.k.dim}, w {w.shape[0]}, S {self.s.dim}"
            )

    def operator(self, u: np.ndarray) -> np.ndarray:
        return self.w + self.s(u)


def vi_residual(inst: VIInstance, u) -> float:
    """Natural-map residual ||u - P_K(u - (w + S(u)))||; zero iff u solves the VI."""
    u = np.atleast_1d(np.asarray(u, dtype=float))
    if u.shape[0] != inst.k.dim:
        raise DimensionMismatch(f"point has dimension {u.shape[0]}, instance {inst.k.dim}")
    return float(np.linalg.norm(u - inst.k.project(u - inst.operator(u))))


def _solve_strong(inst: VIInstance, mu: float, tol: float, max_iter: int, u0: np.ndarray) -> tuple[np.ndarray, int]:
    lip = inst.s.lipschitz
    gamma = mu / (lip * lip)
    u = u0
    for it in range(1, max_iter + 1):
        u_next = inst.k.project(u - gamma * inst.operator(u))
        r_gamma = float(np.linalg.norm(u_next - u))
        u = u_next
        if r_gamma <= tol and vi_residual(inst, u) <= tol:
            return u, it
    raise NotConvergedError(
        f"projected fixed point did not reach tol {tol} in {max_iter} iterations",
        residual=vi_residual(inst, u),
        iterations=max_iter,
    )


def _solve_newton_box(inst: VIInstance, tol: float, max_iter: int, u0: np.ndarray) -> np.ndarray:
    """Semismooth Newton on the normal map for box sets (used on the mu ~ 0 path)."""
    k: BoxSet = inst.k  # type: ignore[assignment]
    m = inst.s.M
    eye = np.eye(inst.s.dim)
    z = u0 - inst.operator(u0)
    for _ in range(max_iter):
        u = k.project(z)
        g = inst.operator(u) + (z - u)
        if np.linalg.norm(g) <= 0.1 * tol:
            break
        interior = (z > k.lo) & (z < k.hi)
        d = np.diag(interior.astype(float))
        jac = m @ d + (eye - d)
        try:
            step = np.linalg.solve(jac, g)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(jac + 1e-12 * eye, g, rcond=None)[0]
        z = z - step
    return k.project(z)


def _solve_extragradient(inst: VIInstance, tol: float, max_iter: int, u0: np.ndarray) -> np.ndarray:
    lip = max(inst.s.lipschitz, 1e-30)
    gamma = 1.0 / (2.0 * lip)
    u = u0
    for _ in range(max_iter):
        half = inst.k.project(u - gamma * inst.operator(u))
        u = inst.k.project(u - gamma * inst.operator(half))
        if vi_residual(inst, u) <= tol:
            break
    return u


_TIKHONOV_EPS = (1e-2, 1e-4, 1e-6)


def _solve_monotone(inst: VIInstance, tol: float, max_iter: int, u0: np.ndarray) -> tuple[np.ndarray, int]:
    """mu ~ 0: Tikhonov solves at eps in {1e-2,1e-4,1e-6}, extrapolated to eps = 0.

    Quadratic extrapolation of the regularization path approximates the
    least-norm solution.  Box sets use a semismooth Newton solve per eps;
    projection-oracle sets fall back to extragradient steps.
    """
    sols = []
    u = u0
    for eps in _TIKHONOV_EPS:
        sub = VIInstance(inst.k, inst.w, inst.s.shifted(eps))
        if isinstance(inst.k, BoxSet):
            u = _solve_newton_box(sub, tol, 100, u)
            if vi_residual(sub, u) > max(10.0 * tol, 1e-9):
                u, _ = _solve_strong(sub, eps, tol, max_iter, u)
        else:
            u = _solve_extragradient(sub, max(tol, eps * 1e-4), max_iter, u)
        sols.append(u)
    e = np.asarray(_TIKHONOV_EPS)
    weights = []
    for i in range(3):
        others = [j for j in range(3) if j != i]
        weights.append(np.prod([-e[j] for j in others]) / np.prod([e[i] - e[j] for j in others]))
    u_star = inst.k.project(sum(w * s for w, s in zip(weights, sols)))
    res = vi_residual(inst, u_star)
    if res > max(tol, 1e-7) * (1.0 + float(np.linalg.norm(inst.w))):
        raise NotConvergedError(
            "Tikhonov extrapolation did not certify a solution "
            "(the monotone problem may have an empty solution set)",
            residual=res,
            iterations=max_iter,
        )
    return u_star, 3


def solve_vi(inst: VIInstance, tol: float = 1e-10, max_iter: int = 100_000, start=None) -> np.ndarray:
    """Solve the VI; unique solution for strongly monotone S, least-norm otherwise.

    Raises NonMonotoneError when the symmetric part of M has an eigenvalue
    below -1e-10, NotConvergedError when the residual target is not met.
    """
    if tol <= 0.0:
        raise DomainError("tolerance must be positive")
    mu = inst.s.mu
    if mu < -_MONOTONE_TOL:
        raise NonMonotoneError(f"operator is not monotone: mu = {mu:.3e}")
    u0 = inst.k.project(np.zeros(inst.s.dim)) if start is None else inst.k.project(np.asarray(start, dtype=float))
    if mu > _STRONG_MU:
        u, _ = _solve_strong(inst, mu, tol, max_iter, u0)
    else:
        u, _ = _solve_monotone(inst, tol, max_iter, u0)
    return u
