"""Per-node objective descriptions and their penalized minimizers.

Every solver in this package reduces its node subproblems to the form

    argmin_x  f(x) + (sigma/2) * || sqrt(a) * x + e ||^2

for a scalar penalty weight ``a`` and an offset vector ``e``.  This module
holds the objective kinds, closed-form solvers for that template, and the
factorization caches that make repeated quadratic solves cheap.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
import scipy.linalg


# --- objective kinds -------------------------------------------------------

@dataclass(frozen=True)
class QuadraticFit:
    """f(x) = (scale/2) * ||M x - b||^2"""
    matrix: np.ndarray
    offset: np.ndarray
    scale: float = 1.0


@dataclass(frozen=True)
class L1:
    """f(x) = weight * ||x||_1"""
    weight: float = 1.0


@dataclass(frozen=True)
class Smooth:
    """Smooth convex f given by a gradient oracle with Lipschitz constant."""
    gradient: Callable[[np.ndarray], np.ndarray]
    lipschitz: float
    value: Optional[Callable[[np.ndarray], float]] = None


@dataclass(frozen=True)
class L1Residual:
    """f(x) = scale * ||M x - b||_1, handled through an auxiliary residual
    variable with its own multiplier (one inner step per outer iteration)."""
    matrix: np.ndarray
    offset: np.ndarray
    scale: float = 1.0


@dataclass(frozen=True)
class Zero:
    pass


@dataclass(frozen=True)
class NodeProblem:
    """The (f, g) objective pair held by one node."""
    f: object
    g: object = Zero()


# --- linear-solve cache ----------------------------------------------------

class ScaledGramSolver:
    """Applies (c*I + s*M^T M)^{-1}, factoring once.

    When M is wide (fewer rows than columns) the inverse is rewritten via
    the Woodbury identity so only an m x m system is ever factored:

        (c I + s M^T M)^{-1} v = (v - M^T K^{-1} M v) / c,   K = (c/s) I + M M^T
    """

    def __init__(self, matrix: np.ndarray, s: float, c: float):
        if c <= 0 or s < 0:
            raise ValueError("need c > 0 and s >= 0")
        m, n = matrix.shape
        self.matrix = matrix
        self.s = s
        self.c = c
        self.woodbury = s > 0 and m < n
        if s == 0:
            self._factor = None
        elif self.woodbury:
            small = (c / s) * np.eye(m) + matrix @ matrix.T
            self._factor = scipy.linalg.cho_factor(small)
        else:
            full = c * np.eye(n) + s * (matrix.T @ matrix)
            self._factor = scipy.linalg.cho_factor(full)

    def solve(self, v: np.ndarray) -> np.ndarray:
        if self._factor is None:
            return v / self.c
        if self.woodbury:
            correction = self.matrix.T @ scipy.linalg.cho_solve(
                self._factor, self.matrix @ v
            )
            return (v - correction) / self.c
        return scipy.linalg.cho_solve(self._factor, v)


@dataclass
class ResidualState:
    """Inner state of the split l1-residual subproblem.

    ``u`` approximates M x - b and ``rho`` is its multiplier; both live on
    the node and never enter the information exchange.
    """
    u: np.ndarray
    rho: np.ndarray

    @classmethod
    def zeros(cls, m: int) -> "ResidualState":
        return cls(u=np.zeros(m), rho=np.zeros(m))


# --- evaluators ------------------------------------------------------------

def prox_l1(v: np.ndarray, t: float) -> np.ndarray:
    """Soft threshold: argmin_x ||x||_1 + (1/2t) ||x - v||^2."""
    if t <= 0:
        raise ValueError("threshold must be positive")
    return np.sign(v) * np.maximum(np.abs(v) - t, 0.0)


def prox_quadratic_scaled(spec: QuadraticFit, a: float, e: np.ndarray,
                          sigma: float, cache: ScaledGramSolver | None = None
                          ) -> np.ndarray:
    """argmin_x (scale/2)||Mx-b||^2 + (sigma/2)||sqrt(a) x + e||^2."""
    if sigma <= 0 or a <= 0:
        raise ValueError("sigma and a must be positive")
    if cache is None:
        cache = ScaledGramSolver(spec.matrix, spec.scale, sigma * a)
    elif cache.s != spec.scale or cache.c != sigma * a:
        raise ValueError("stale factorization cache for (scale, sigma, a)")
    rhs = spec.scale * (spec.matrix.T @ spec.offset) - sigma * np.sqrt(a) * e
    return cache.solve(rhs)


def prox_smooth_linearized(spec: Smooth, x_prev: np.ndarray, a: float,
                           e: np.ndarray, sigma: float) -> np.ndarray:
    """Minimizer of the Lipschitz quadratic surrogate of f plus the penalty."""
    if spec.lipschitz <= 0:
        raise ValueError("Lipschitz constant must be positive")
    lf = spec.lipschitz
    return (lf * x_prev - spec.gradient(x_prev) - sigma * np.sqrt(a) * e) / (
        lf + sigma * a
    )


def prox_l1_residual(spec: L1Residual, a: float, e: np.ndarray, sigma: float,
                     state: ResidualState | None, x_prev: np.ndarray,
                     cache: ScaledGramSolver | None = None
                     ) -> tuple[np.ndarray, ResidualState]:
    """One augmented-Lagrangian pass on the split form of scale*||Mx-b||_1.

    Splits u = M x - b, soft-thresholds u, solves the remaining quadratic
    in x, then updates the multiplier.  The multiplier and u persist across
    outer iterations of the enclosing solver.
    """
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    M, b = spec.matrix, spec.offset
    if state is None:
        state = ResidualState.zeros(M.shape[0])
    if cache is None:
        cache = ScaledGramSolver(M, 1.0, a)
    elif cache.s != 1.0 or cache.c != a:
        raise ValueError("stale factorization cache for penalty weight a")
    u = prox_l1(M @ x_prev - b + state.rho / sigma, spec.scale / sigma)
    rhs = M.T @ (b + u - state.rho / sigma) - np.sqrt(a) * e
    x = cache.solve(rhs)
    rho = state.rho + sigma * (M @ x - b - u)
    return x, ResidualState(u=u, rho=rho)


def make_cache(kind, a: float, sigma: float) -> ScaledGramSolver | None:
    """One-time factorization for the kinds that need a linear solve."""
    if isinstance(kind, QuadraticFit):
        return ScaledGramSolver(kind.matrix, kind.scale, sigma * a)
    if isinstance(kind, L1Residual):
        return ScaledGramSolver(kind.matrix, 1.0, a)
    return None


def penalized_argmin(kind, a: float, e: np.ndarray, sigma: float, *,
                     x_prev: np.ndarray | None = None,
                     cache: ScaledGramSolver | None = None,
                     state: ResidualState | None = None):
    """Solve argmin_x kind(x) + (sigma/2)||sqrt(a) x + e||^2.

    Returns (x, state); ``state`` is None except for L1Residual, whose
    inner variables are threaded through.
    """
    if isinstance(kind, Zero):
        return -e / np.sqrt(a), None
    if isinstance(kind, L1):
        return prox_l1(-e / np.sqrt(a), kind.weight / (sigma * a)), None
    if isinstance(kind, QuadraticFit):
        return prox_quadratic_scaled(kind, a, e, sigma, cache=cache), None
    if isinstance(kind, Smooth):
        if x_prev is None:
            raise ValueError("Smooth objectives need the previous iterate")
        return prox_smooth_linearized(kind, x_prev, a, e, sigma), None
    if isinstance(kind, L1Residual):
        if x_prev is None:
            raise ValueError("L1Residual needs the previous iterate")
        return prox_l1_residual(kind, a, e, sigma, state, x_prev, cache=cache)
    raise TypeError(f"unknown objective kind {type(kind).__name__}")


# --- evaluation helpers ----------------------------------------------------

def objective_value(kind, x: np.ndarray):
    if isinstance(kind, Zero):
        return 0.0
    if isinstance(kind, L1):
        return kind.weight * float(np.sum(np.abs(x)))
    if isinstance(kind, QuadraticFit):
        r = kind.matrix @ x - kind.offset
        return 0.5 * kind.scale * float(r @ r)
    if isinstance(kind, L1Residual):
        return kind.scale * float(np.sum(np.abs(kind.matrix @ x - kind.offset)))
    if isinstance(kind, Smooth):
        return None if kind.value is None else float(kind.value(x))
    raise TypeError(f"unknown objective kind {type(kind).__name__}")


def subgradient(kind, x: np.ndarray) -> np.ndarray:
    """A subgradient of the kind at x (sign convention: 0 at kinks)."""
    if isinstance(kind, Zero):
        return np.zeros_like(x)
    if isinstance(kind, L1):
        return kind.weight * np.sign(x)
    if isinstance(kind, QuadraticFit):
        return kind.scale * (kind.matrix.T @ (kind.matrix @ x - kind.offset))
    if isinstance(kind, L1Residual):
        return kind.scale * (kind.matrix.T @ np.sign(kind.matrix @ x - kind.offset))
    if isinstance(kind, Smooth):
        return np.asarray(kind.gradient(x))
    raise TypeError(f"unknown objective kind {type(kind).__name__}")


def stationarity_residual(problems, x: np.ndarray, zero_tol: float = 1e-9) -> float:
    """Norm of the minimum-norm subgradient of sum_i f_i + g_i at x.

    Exact for smooth + (plain) l1 objectives; l1-of-residual terms enter
    through their sign subgradient, which makes the check conservative at
    residual kinks.
    """
    grad = np.zeros_like(x)
    l1_weight = 0.0
    for prob in problems:
        for kind in (prob.f, prob.g):
            if isinstance(kind, L1):
                l1_weight += kind.weight
            elif not isinstance(kind, Zero):
                grad = grad + subgradient(kind, x)
    at_zero = np.abs(x) <= zero_tol
    res = np.where(
        at_zero,
        np.maximum(np.abs(grad) - l1_weight, 0.0),
        np.abs(grad + l1_weight * np.sign(x)),
    )
    return float(np.linalg.norm(res))
