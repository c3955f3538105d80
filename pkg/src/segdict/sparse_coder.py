"""Feature-sign search for L1-regularized least squares.

Solves min_x 0.5*||y - D x||^2 + lam*||x||_1 with an active-set strategy:
activate the most violating zero coordinate with its sign guessed against
the gradient, solve the sign-constrained quadratic on the active set in
closed form, and run a discrete line search across the sign changes on the
way to that solution.  The returned vector satisfies the subgradient
optimality conditions

    x_k != 0:  |grad_k + lam * sign(x_k)| <= opt_tol
    x_k == 0:  |grad_k| <= lam + opt_tol

where grad = D^T (D x - y).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .errors import ConvergenceWarning, SegdictError, SingularActiveSetError

_PIVOT_RTOL = 1e-12
_RIDGE_SCALE = 1e-10


@dataclass(frozen=True)
class SolverOptions:
    """Regularizer and stopping controls for feature_sign_solve."""

    lam: float = 0.1
    max_iter: int = 1000
    opt_tol: float = 1e-7

    def __post_init__(self):
        if self.lam <= 0:
            raise ValueError("lam must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if self.opt_tol <= 0:
            raise ValueError("opt_tol must be positive")


@dataclass(frozen=True)
class FeatureSignState:
    """Snapshot of solver state: iterate, signs, active set, smooth gradient."""

    x: np.ndarray
    theta: np.ndarray
    active_set: tuple[int, ...]
    grad: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        theta = np.asarray(self.theta, dtype=float)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "grad", np.asarray(self.grad, dtype=float))
        object.__setattr__(self, "active_set",
                           tuple(int(i) for i in self.active_set))
        if not np.all(np.isin(theta, (-1.0, 0.0, 1.0))):
            raise ValueError("theta entries must be in {-1, 0, +1}")
        support = tuple(int(i) for i in np.flatnonzero(x))
        if support != self.active_set:
            raise ValueError("active_set must equal the support of x")
        for i in support:
            if theta[i] != np.sign(x[i]):
                raise ValueError("theta must match sign(x) on the active set")

    @classmethod
    def from_solution(cls, D, y, x) -> "FeatureSignState":
        D = np.asarray(D, dtype=float)
        y = np.asarray(y, dtype=float).ravel()
        x = np.asarray(x, dtype=float).ravel()
        grad = D.T @ (D @ x - y)
        return cls(x, np.sign(x), tuple(int(i) for i in np.flatnonzero(x)), grad)


def _solve_spd(A: np.ndarray, b: np.ndarray) -> np.ndarray:
    c, low = cho_factor(A, lower=True, check_finite=False)
    piv = np.diag(c) ** 2
    if piv.min() < _PIVOT_RTOL * piv.max():
        raise LinAlgError("pivot below threshold")
    return cho_solve((c, low), b, check_finite=False)


def _solve_active(A: np.ndarray, b: np.ndarray) -> np.ndarray:
    """SPD solve with one ridge retry before declaring the set singular."""
    try:
        return _solve_spd(A, b)
    except LinAlgError:
        ridge = _RIDGE_SCALE * np.trace(A) / A.shape[0]
        try:
            return _solve_spd(A + ridge * np.eye(A.shape[0]), b)
        except LinAlgError as exc:
            raise SingularActiveSetError(
                f"rank-deficient active set of size {A.shape[0]}") from exc


def feature_sign_solve(D, y, opts: SolverOptions | None = None) -> np.ndarray:
    """Solve one lasso instance; columns of D are the dictionary atoms."""
    D = np.asarray(D, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    if opts is None:
        opts = SolverOptions()
    if D.ndim != 2:
        raise ValueError(f"D must be 2-D, got shape {D.shape}")
    d, k = D.shape
    if y.shape[0] != d:
        raise ValueError(f"y has length {y.shape[0]}, expected {d}")
    if not (np.isfinite(D).all() and np.isfinite(y).all()):
        raise ValueError("D and y must be finite")
    if np.any(np.linalg.norm(D, axis=0) == 0.0):
        raise ValueError("every dictionary column must have nonzero norm")

    lam, tol = opts.lam, opts.opt_tol
    DtD = D.T @ D
    Dty = D.T @ y
    yty = float(y @ y)

    def objective(xv: np.ndarray) -> float:
        return (0.5 * float(xv @ (DtD @ xv)) - float(Dty @ xv)
                + 0.5 * yty + lam * float(np.abs(xv).sum()))

    x = np.zeros(k)
    theta = np.zeros(k)
    active = np.zeros(k, dtype=bool)
    cur_obj = 0.5 * yty
    converged = False

    for _ in range(opts.max_iter):
        grad = DtD @ x - Dty
        act = np.flatnonzero(active)
        if act.size == 0 or np.all(np.abs(grad[act] + lam * theta[act]) <= tol):
            inact = np.flatnonzero(~active)
            if inact.size == 0 or np.abs(grad[inact]).max() <= lam + tol:
                converged = True
                break
            # activate the worst violator, sign set against the gradient;
            # ties go to the lowest index (argmax returns the first maximum)
            mu = int(inact[int(np.argmax(np.abs(grad[inact])))])
            active[mu] = True
            theta[mu] = -np.sign(grad[mu])

        sigma = np.flatnonzero(active)
        x_new = _solve_active(DtD[np.ix_(sigma, sigma)],
                              Dty[sigma] - lam * theta[sigma])
        x_old = x[sigma]
        delta = x_new - x_old

        # candidate steps: the full step plus every sign crossing in (0, 1)
        candidates: list[tuple[float, np.ndarray]] = [
            (1.0, np.flatnonzero(x_new == 0.0))]
        crossing = (x_old != 0.0) & (np.sign(x_new) != np.sign(x_old))
        for i in np.flatnonzero(crossing):
            t = x_old[i] / (x_old[i] - x_new[i])
            if 0.0 < t < 1.0:
                candidates.append((float(t), np.array([i])))

        best_obj = None
        best_x = x
        for t, zeroed in candidates:
            cand = x.copy()
            cand[sigma] = x_old + t * delta
            cand[sigma[zeroed]] = 0.0
            obj = objective(cand)
            if best_obj is None or obj < best_obj:
                best_obj, best_x = obj, cand
        if best_obj > cur_obj + 1e-12 * max(1.0, abs(cur_obj)):
            break  # numerically stalled at the current tolerance
        assert best_obj <= cur_obj + 1e-9, "line search increased the objective"
        x = best_x
        cur_obj = best_obj
        active = x != 0.0
        theta = np.sign(x)

    if not converged:
        warnings.warn("feature-sign search hit max_iter before optimality",
                      ConvergenceWarning, stacklevel=2)
    return x


def batch_encode(D, Y, opts: SolverOptions | None = None) -> np.ndarray:
    """Encode every column of Y independently; column i of the result is
    feature_sign_solve(D, Y[:, i])."""
    D = np.asarray(D, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if Y.ndim != 2:
        raise ValueError(f"Y must be 2-D, got shape {Y.shape}")
    if opts is None:
        opts = SolverOptions()
    k, n = D.shape[1], Y.shape[1]
    X = np.empty((k, n))
    for i in range(n):
        try:
            X[:, i] = feature_sign_solve(D, Y[:, i], opts)
        except (SegdictError, ValueError) as exc:
            raise type(exc)(f"column {i}: {exc}") from exc
    return X


def coding_objective(D, Y, X, lam: float) -> float:
    """Sum over columns of 0.5*||y_i - D x_i||^2 + lam*||x_i||_1."""
    D = np.asarray(D, dtype=float)
    Y = np.asarray(Y, dtype=float)
    X = np.asarray(X, dtype=float)
    R = Y - D @ X
    return 0.5 * float(np.sum(R * R)) + lam * float(np.abs(X).sum())


def kkt_violation(D, y, x, lam: float) -> float:
    """Largest subgradient-condition violation of x for the given instance.

    Zero (up to solver tolerance) certifies optimality without any oracle.
    """
    D = np.asarray(D, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    x = np.asarray(x, dtype=float).ravel()
    grad = D.T @ (D @ x - y)
    nz = x != 0.0
    worst = 0.0
    if nz.any():
        worst = float(np.abs(grad[nz] + lam * np.sign(x[nz])).max())
    if (~nz).any():
        worst = max(worst, float(np.maximum(np.abs(grad[~nz]) - lam, 0.0).max()))
    return worst
