"""Closed-form scalar machinery underpinning the settling-time guarantees.

The network proofs reduce everything to a scalar comparison inequality: a
nonnegative ``V(t)`` with ``dV/dt <= -beta*V**q`` while ``V >= 1`` and
``dV/dt <= -alpha*V**p`` once ``V < 1`` reaches zero no later than
``1/(alpha*(1-p)) + 1/(beta*(q-1))`` — a bound independent of ``V(0)``.
This module provides those bounds, the exact piecewise solution of the
comparison equation, and standalone checks of the inequalities the proofs
lean on (p-norm ordering, the quadratic form identity for symmetric
zero-row-sum matrices, and Young's product inequality).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .matrices import is_class_a2


def _check_exponents(p: float, q: float) -> None:
    if not (0.0 < p < 1.0):
        raise DomainError(f"p must lie in (0, 1), got {p}")
    if not (q > 1.0):
        raise DomainError(f"q must exceed 1, got {q}")


def finite_time_bound(alpha: float, p: float, v0: float) -> float:
    """Settling bound ``v0**(1-p) / (alpha*(1-p))`` for ``dV/dt <= -alpha*V**p``.

    Grows without bound as ``v0`` does: finite-time but not fixed-time.
    """
    if alpha <= 0:
        raise DomainError("alpha must be positive")
    if not (0.0 < p < 1.0):
        raise DomainError(f"p must lie in (0, 1), got {p}")
    if v0 < 0:
        raise DomainError("v0 must be nonnegative")
    return v0 ** (1.0 - p) / (alpha * (1.0 - p))


def fixed_time_bound(alpha: float, p: float, beta: float, q: float) -> float:
    """Settling bound ``1/(alpha*(1-p)) + 1/(beta*(q-1))`` for the two-branch
    inequality.  Independent of the initial value by construction — the
    signature has no ``v0``.
    """
    if alpha <= 0 or beta <= 0:
        raise DomainError("alpha and beta must be positive")
    _check_exponents(p, q)
    return 1.0 / (alpha * (1.0 - p)) + 1.0 / (beta * (q - 1.0))


@dataclass(frozen=True)
class ComparisonSolution:
    """Exact solution of ``dV/dt = -beta*V**q`` (while ``V >= 1``) stitched to
    ``dV/dt = -alpha*V**p`` (once ``V < 1``), hitting zero in finite time.

    ``t_reach_one`` is 0 when ``v0 <= 1``; ``zero_time`` is the exact
    settling instant of this worst-case comparison system.
    """

    alpha: float
    beta: float
    p: float
    q: float
    v0: float
    t_reach_one: float
    zero_time: float
    settling_bound: float

    def value(self, t: float) -> float:
        """Evaluate ``V(t)``."""
        if t < 0:
            raise DomainError("time must be nonnegative")
        if t >= self.zero_time:
            return 0.0
        if t < self.t_reach_one:
            base = self.beta * (self.q - 1.0) * t + self.v0 ** (1.0 - self.q)
            return base ** (-1.0 / (self.q - 1.0))
        v_at_branch = min(self.v0, 1.0)
        dt = t - self.t_reach_one
        base = v_at_branch ** (1.0 - self.p) - self.alpha * (1.0 - self.p) * dt
        return max(0.0, base) ** (1.0 / (1.0 - self.p))

    def sample(self, grid) -> np.ndarray:
        return np.array([self.value(float(t)) for t in np.asarray(grid)])


def comparison_ode_solve(
    alpha: float, beta: float, p: float, q: float, v0: float
) -> ComparisonSolution:
    """Closed-form solver for the two-branch comparison equation.

    On the q-branch ``V(t) = [beta*(q-1)*t + v0**(1-q)]**(-1/(q-1))`` decays
    from ``v0 > 1`` to 1 in time ``(1 - v0**(1-q)) / (beta*(q-1))``, which is
    bounded by ``1/(beta*(q-1))`` however large ``v0`` is; the p-branch
    ``V(t) = [v**(1-p) - alpha*(1-p)*t]**(1/(1-p))`` then reaches zero in
    time ``v**(1-p) / (alpha*(1-p))``.
    """
    if alpha <= 0 or beta <= 0:
        raise DomainError("alpha and beta must be positive")
    _check_exponents(p, q)
    if v0 < 0:
        raise DomainError("v0 must be nonnegative")
    if v0 > 1.0:
        t_one = (1.0 - v0 ** (1.0 - q)) / (beta * (q - 1.0))
        zero = t_one + 1.0 / (alpha * (1.0 - p))
    else:
        t_one = 0.0
        zero = v0 ** (1.0 - p) / (alpha * (1.0 - p))
    return ComparisonSolution(
        alpha=alpha, beta=beta, p=p, q=q, v0=v0,
        t_reach_one=t_one, zero_time=zero,
        settling_bound=fixed_time_bound(alpha, p, beta, q),
    )


def norm_equivalence_check(z, r: float, l: float, slack: float = 1e-12) -> bool:
    """Check ``||z||_l <= ||z||_r <= n**(1/r - 1/l) * ||z||_l`` for ``0 < r < l``.

    ``||z||_r = (sum |z_i|**r)**(1/r)`` — a quasi-norm for ``r < 1``, which
    the ordering covers as well.
    """
    if not (0.0 < r < l):
        raise DomainError("exponents must satisfy 0 < r < l")
    z = np.asarray(z, dtype=np.float64).ravel()
    if z.size == 0:
        raise DomainError("vector must be non-empty")
    mags = np.abs(z)
    peak = mags.max()
    if peak == 0.0:
        return True
    # Normalize by the peak so large exponents cannot overflow.
    norm_r = peak * (((mags / peak) ** r).sum()) ** (1.0 / r)
    norm_l = peak * (((mags / peak) ** l).sum()) ** (1.0 / l)
    factor = z.size ** (1.0 / r - 1.0 / l)
    tol = slack * max(1.0, norm_r, norm_l)
    return (norm_l <= norm_r + tol) and (norm_r <= factor * norm_l + tol)


def quadratic_identity_check(a, x, y) -> float:
    """Residual of ``x' A y == -sum_{j>i} a_ij (x_j - x_i)(y_j - y_i)``
    for a symmetric zero-row-sum matrix ``A``.
    """
    a = np.asarray(a, dtype=np.float64)
    if not is_class_a2(a):
        raise DomainError("identity requires a class A2 matrix")
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    n = a.shape[0]
    if x.shape != (n,) or y.shape != (n,):
        raise DomainError("vector lengths must match the matrix dimension")
    left = float(x @ a @ y)
    right = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            right -= a[i, j] * (x[j] - x[i]) * (y[j] - y[i])
    return abs(left - right)


@dataclass(frozen=True)
class YoungResult:
    """Outcome of the product-inequality check ``a*b <= a**u/u + b**v/v``."""

    holds: bool
    equality: bool
    product: float
    bound: float


def young_check(
    a: float, b: float, u: float, v: float, equality_tol: float = 1e-10
) -> YoungResult:
    """Check Young's inequality for conjugate exponents.

    Requires ``a, b > 0``, ``u, v > 1`` and ``1/u + 1/v == 1`` within 1e-12.
    Equality holds iff ``a**u == b**v``.
    """
    if a <= 0 or b <= 0:
        raise DomainError("a and b must be positive")
    if u <= 1 or v <= 1:
        raise DomainError("exponents must exceed 1")
    if abs(1.0 / u + 1.0 / v - 1.0) > 1e-12:
        raise DomainError("exponents must be conjugate: 1/u + 1/v == 1")
    product = a * b
    bound = a**u / u + b**v / v
    slack = 1e-12 * max(1.0, bound)
    return YoungResult(
        holds=product <= bound + slack,
        equality=abs(a**u - b**v) <= equality_tol,
        product=product,
        bound=bound,
    )
