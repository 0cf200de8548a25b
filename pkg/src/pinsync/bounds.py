"""Settling-time guarantees for the pinning-controlled protocols.

Every theoretical quantity is derived from the coupling matrices and gains:

* power-transformed intra-cluster blocks ``Abar_kk`` (off-diagonal entries
  raised to ``2/(1+p)``, diagonal reset to minus the transformed row sum) and
  the q-exponent analogue ``Bbar_kk``;
* pinned blocks ``Ahat_kk = -2*Abar_kk + diag((2*eps1/alpha)^(2/(1+p)), 0, ...)``
  and ``Bhat_kk`` with ``(eps2, beta, q)``, which are symmetric positive
  definite whenever the blocks are valid and the pin gains positive;
* the scalar constants ``rho1``, ``rho2`` (worst-cluster minimal eigenvalues),
  ``Nbar``, ``alpha_bar``, ``beta_bar``, the inter-cluster magnitudes
  ``a_bar``, ``b_bar``, ``r_bar`` and the leakage terms ``gamma1``, ``gamma2``;
* the guaranteed settling time

  ``T_max = 2/((alpha_bar - gamma1 - 2*delta)(1-p))
          + 2/((beta_bar - gamma2 - 2*delta)(q-1))``

  which exists iff both margins are positive.  Infeasibility is a report
  state, not an error: the numbers are what a user needs to retune gains.

Eigenvalues are computed by a cyclic Jacobi sweep; the matrices here are
small and dense, so robustness and zero dependencies beat speed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dynamics import NetworkSpec
from .errors import DimensionError, DomainError, RegimeError, StructureError
from .matrices import as_matrix, as_square_matrix, is_class_a4

#: Off-diagonal Frobenius norm (relative to matrix scale) at which the
#: Jacobi sweep is considered converged.
JACOBI_TOL = 1e-12
_JACOBI_MAX_SWEEPS = 100


def jacobi_eigenvalues(m) -> np.ndarray:
    """All eigenvalues of a symmetric matrix, ascending, by cyclic Jacobi.

    Rotations are applied in row-cyclic order until the off-diagonal
    Frobenius norm drops below ``JACOBI_TOL`` times the matrix scale.
    """
    a = as_square_matrix(m, "eigenvalue input").copy()
    n = a.shape[0]
    if n == 1:
        return a[0].copy()
    scale = max(1.0, float(np.linalg.norm(a)))
    threshold = JACOBI_TOL * scale
    for _ in range(_JACOBI_MAX_SWEEPS):
        off = math.sqrt(max(0.0, (a * a).sum() - (np.diag(a) ** 2).sum()))
        if off <= threshold:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= threshold / (n * n):
                    continue
                tau = (a[q, q] - a[p, p]) / (2.0 * apq)
                if tau >= 0.0:
                    t = 1.0 / (tau + math.sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + math.sqrt(1.0 + tau * tau))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                rot_p = c * a[:, p] - s * a[:, q]
                rot_q = s * a[:, p] + c * a[:, q]
                a[:, p] = rot_p
                a[:, q] = rot_q
                rot_p = c * a[p, :] - s * a[q, :]
                rot_q = s * a[p, :] + c * a[q, :]
                a[p, :] = rot_p
                a[q, :] = rot_q
                a[p, q] = 0.0
                a[q, p] = 0.0
    return np.sort(np.diag(a).copy())


def min_eigenvalue_symmetric(m, sym_tol: float = 1e-9) -> float:
    """Smallest eigenvalue of a symmetric matrix.

    Raises DomainError if the input is asymmetric beyond ``sym_tol``.
    """
    a = as_square_matrix(m, "eigenvalue input")
    if np.abs(a - a.T).max() > sym_tol:
        raise DomainError("matrix is not symmetric within tolerance")
    return float(jacobi_eigenvalues(0.5 * (a + a.T))[0])


def power_transform(block, exponent: float) -> np.ndarray:
    """Raise off-diagonal entries to ``exponent`` and rebalance the diagonal.

    Input must have nonnegative off-diagonal entries (an A2 block); the
    result has off-diagonal ``a_ij**exponent`` and diagonal equal to minus
    the transformed off-diagonal row sum, so it is again an A2-structured
    matrix.
    """
    a = as_square_matrix(block, "block")
    if exponent <= 0:
        raise DomainError("exponent must be positive")
    off = a.copy()
    np.fill_diagonal(off, 0.0)
    if (off < 0).any():
        raise DomainError(
            "power transform requires nonnegative off-diagonal entries"
        )
    out = off**exponent
    np.fill_diagonal(out, 0.0)
    np.fill_diagonal(out, -out.sum(axis=1))
    return out


def pinned_matrix(
    bar_block, gain: float, pin_gain: float, exponent_param: float
) -> np.ndarray:
    """``-2*bar_block`` with ``(2*pin_gain/gain)**(2/(1+exponent_param))``
    added to the leading diagonal entry (the pinned node).
    """
    a = as_square_matrix(bar_block, "transformed block")
    if gain <= 0:
        raise DomainError("coupling gain must be positive")
    if pin_gain <= 0:
        raise DomainError("pin gain must be positive")
    out = -2.0 * a
    out[0, 0] += (2.0 * pin_gain / gain) ** (2.0 / (1.0 + exponent_param))
    return out


@dataclass(frozen=True)
class PinnedBlockSet:
    """Per-cluster transformed and pinned blocks with their minimal eigenvalues."""

    a_bar: tuple[np.ndarray, ...] = field(repr=False)
    b_bar: tuple[np.ndarray, ...] = field(repr=False)
    a_hat: tuple[np.ndarray, ...] = field(repr=False)
    b_hat: tuple[np.ndarray, ...] = field(repr=False)
    lambda_min_a: tuple[float, ...]
    lambda_min_b: tuple[float, ...]


def pinned_block_set(spec: NetworkSpec) -> PinnedBlockSet:
    """Transformed and pinned diagonal blocks of both coupling matrices."""
    part = spec.partition
    ea, eb = 2.0 / (1.0 + spec.p), 2.0 / (1.0 + spec.q)
    a_bar, b_bar, a_hat, b_hat, lam_a, lam_b = [], [], [], [], [], []
    for k in range(part.m):
        sl = part.cluster_slice(k)
        abar = power_transform(spec.a[sl, sl], ea)
        bbar = power_transform(spec.b[sl, sl], eb)
        ahat = pinned_matrix(abar, spec.alpha, spec.eps1, spec.p)
        bhat = pinned_matrix(bbar, spec.beta, spec.eps2, spec.q)
        a_bar.append(abar)
        b_bar.append(bbar)
        a_hat.append(ahat)
        b_hat.append(bhat)
        lam_a.append(min_eigenvalue_symmetric(ahat))
        lam_b.append(min_eigenvalue_symmetric(bhat))
    return PinnedBlockSet(
        a_bar=tuple(a_bar),
        b_bar=tuple(b_bar),
        a_hat=tuple(a_hat),
        b_hat=tuple(b_hat),
        lambda_min_a=tuple(lam_a),
        lambda_min_b=tuple(lam_b),
    )


@dataclass(frozen=True)
class BoundsReport:
    """All derived theoretical quantities for one protocol regime.

    ``t_max`` is present iff both feasibility flags are true and always
    equals ``settling_time(alpha_bar - gamma1 - 2*delta,
    beta_bar - gamma2 - 2*delta, p, q)`` recomputed from the stored fields.
    Fields that a regime does not define (e.g. ``rho1`` for master-slave)
    are ``None``.
    """

    regime: str
    p: float
    q: float
    delta: float
    alpha_bar: float
    beta_bar: float
    gamma1: float
    gamma2: float
    feasible_alpha: bool
    feasible_beta: bool
    t_max: float | None
    rho1: float | None = None
    rho2: float | None = None
    nbar: int | None = None
    a_bar: float | None = None
    b_bar: float | None = None
    r_bar: int | None = None

    @property
    def feasible(self) -> bool:
        return self.feasible_alpha and self.feasible_beta

    def to_dict(self) -> dict:
        """Serialization with the key names fixed by the CLI contract."""
        return {
            "regime": self.regime,
            "p": self.p,
            "q": self.q,
            "delta": self.delta,
            "rho1": self.rho1,
            "rho2": self.rho2,
            "nbar": self.nbar,
            "alpha_bar": self.alpha_bar,
            "beta_bar": self.beta_bar,
            "a_bar": self.a_bar,
            "b_bar": self.b_bar,
            "r_bar": self.r_bar,
            "gamma1": self.gamma1,
            "gamma2": self.gamma2,
            "feasible_alpha": self.feasible_alpha,
            "feasible_beta": self.feasible_beta,
            "t_max": self.t_max,
        }


def settling_time(margin_p: float, margin_q: float, p: float, q: float) -> float:
    """``2/(margin_p*(1-p)) + 2/(margin_q*(q-1))`` for positive margins."""
    if margin_p <= 0 or margin_q <= 0:
        raise DomainError("settling time requires positive margins")
    return 2.0 / (margin_p * (1.0 - p)) + 2.0 / (margin_q * (q - 1.0))


def _finish_report(regime, spec_p, spec_q, delta, alpha_bar, beta_bar,
                   gamma1, gamma2, **extra) -> BoundsReport:
    margin_p = alpha_bar - gamma1 - 2.0 * delta
    margin_q = beta_bar - gamma2 - 2.0 * delta
    feas_a, feas_b = margin_p > 0.0, margin_q > 0.0
    t_max = settling_time(margin_p, margin_q, spec_p, spec_q) if feas_a and feas_b else None
    return BoundsReport(
        regime=regime, p=spec_p, q=spec_q, delta=delta,
        alpha_bar=alpha_bar, beta_bar=beta_bar,
        gamma1=gamma1, gamma2=gamma2,
        feasible_alpha=feas_a, feasible_beta=feas_b, t_max=t_max,
        **extra,
    )


def _check_delta(delta: float) -> float:
    delta = float(delta)
    if delta < 0:
        raise DomainError("delta must be >= 0 (0 selects the consensus bound)")
    return delta


def compute_bounds(spec: NetworkSpec, delta: float) -> BoundsReport:
    """Full cluster-regime report; ``delta == 0`` gives the consensus bound.

    Raises StructureError if either coupling matrix fails class A4 under the
    partition.
    """
    delta = _check_delta(delta)
    spec.validate()
    if not is_class_a4(spec.a, spec.partition):
        raise StructureError("coupling matrix A is not class A4 under the partition")
    if not is_class_a4(spec.b, spec.partition):
        raise StructureError("coupling matrix B is not class A4 under the partition")

    part, n = spec.partition, spec.dynamics.n
    big_n, m = part.n_nodes, part.m
    blocks = pinned_block_set(spec)
    rho1 = min(blocks.lambda_min_a)
    rho2 = min(blocks.lambda_min_b)
    sizes = part.sizes
    nbar = n * (sum(s * (s - 1) // 2 for s in sizes) + m)

    alpha_bar = spec.alpha * 2.0 ** ((spec.p - 1.0) / 2.0) * rho1 ** ((1.0 + spec.p) / 2.0)
    beta_bar = (
        spec.beta
        * nbar ** ((1.0 - spec.q) / 2.0)
        * 2.0 ** ((spec.q - 1.0) / 2.0)
        * rho2 ** ((1.0 + spec.q) / 2.0)
    )

    cluster_of = part.cluster_of_nodes()
    inter = cluster_of[:, None] != cluster_of[None, :]
    a_bar = float(np.abs(spec.a[inter]).max()) if inter.any() else 0.0
    b_bar = float(np.abs(spec.b[inter]).max()) if inter.any() else 0.0
    r_bar = max(big_n - s for s in sizes) if m > 1 else 0

    gamma1 = a_bar**spec.p * r_bar * (big_n * n) ** ((1.0 - spec.p) / 2.0) * 2.0 ** ((1.0 + spec.p) / 2.0)
    gamma2 = b_bar**spec.q * r_bar * 2.0 ** ((1.0 + spec.q) / 2.0)

    regime = "cluster-consensus" if delta == 0.0 else "cluster"
    return _finish_report(
        regime, spec.p, spec.q, delta, alpha_bar, beta_bar, gamma1, gamma2,
        rho1=rho1, rho2=rho2, nbar=nbar, a_bar=a_bar, b_bar=b_bar, r_bar=r_bar,
    )


def compute_bounds_complete(spec: NetworkSpec, delta: float) -> BoundsReport:
    """Single-cluster (complete synchronization) report.

    Computed directly from the full matrices rather than through the cluster
    path, so the two routes cross-check each other at ``m == 1``.
    """
    delta = _check_delta(delta)
    if spec.partition.m != 1:
        raise RegimeError("complete-synchronization bounds require m == 1")
    spec.validate()
    big_n, n = spec.partition.n_nodes, spec.dynamics.n

    abar = power_transform(spec.a, 2.0 / (1.0 + spec.p))
    bbar = power_transform(spec.b, 2.0 / (1.0 + spec.q))
    lam_a = min_eigenvalue_symmetric(pinned_matrix(abar, spec.alpha, spec.eps1, spec.p))
    lam_b = min_eigenvalue_symmetric(pinned_matrix(bbar, spec.beta, spec.eps2, spec.q))
    nbar = n * (big_n * (big_n - 1) // 2 + 1)

    alpha_bar = spec.alpha * 2.0 ** ((spec.p - 1.0) / 2.0) * lam_a ** ((1.0 + spec.p) / 2.0)
    beta_bar = (
        spec.beta
        * nbar ** ((1.0 - spec.q) / 2.0)
        * 2.0 ** ((spec.q - 1.0) / 2.0)
        * lam_b ** ((1.0 + spec.q) / 2.0)
    )
    return _finish_report(
        "complete", spec.p, spec.q, delta, alpha_bar, beta_bar, 0.0, 0.0,
        rho1=lam_a, rho2=lam_b, nbar=nbar, a_bar=0.0, b_bar=0.0, r_bar=0,
    )


def compute_bounds_master_slave(
    eps1: float, eps2: float, p: float, q: float, n: int, delta: float
) -> BoundsReport:
    """Single-node (master-slave) report from the pin gains alone:
    ``alpha_bar = eps1*2**((1+p)/2)``, ``beta_bar = eps2*n**((1-q)/2)*2**((1+q)/2)``.
    """
    delta = _check_delta(delta)
    if eps1 <= 0 or eps2 <= 0:
        raise DomainError("pin gains must be positive")
    if not (0.0 < p < 1.0 < q):
        raise DomainError("exponents must satisfy 0 < p < 1 < q")
    if n < 1:
        raise DomainError("state dimension must be >= 1")
    alpha_bar = eps1 * 2.0 ** ((1.0 + p) / 2.0)
    beta_bar = eps2 * n ** ((1.0 - q) / 2.0) * 2.0 ** ((1.0 + q) / 2.0)
    return _finish_report("master-slave", p, q, delta, alpha_bar, beta_bar, 0.0, 0.0)


def gain_thresholds(spec: NetworkSpec, delta: float) -> tuple[float, float]:
    """Minimal coupling gains making both feasibility margins positive.

    Holds the pin-to-coupling ratios ``eps1/alpha`` and ``eps2/beta`` fixed,
    under which ``alpha_bar`` is linear in ``alpha`` and ``beta_bar`` linear
    in ``beta``, so the thresholds solve in closed form.
    """
    delta = _check_delta(delta)
    report = compute_bounds(spec, delta) if spec.partition.m > 1 else compute_bounds_complete(spec, delta)
    alpha_coeff = report.alpha_bar / spec.alpha
    beta_coeff = report.beta_bar / spec.beta
    alpha_min = (report.gamma1 + 2.0 * delta) / alpha_coeff
    beta_min = (report.gamma2 + 2.0 * delta) / beta_coeff
    return alpha_min, beta_min


@dataclass(frozen=True)
class DeltaEstimate:
    """One-sided quadratic-growth constant for the intrinsic dynamics.

    ``grid_min`` is the sharpest value found on the epsilon grid of the
    split-form bound
    ``lambda_max(0.5*(W1 + W1' + eps*W2*W2' + W3'*W3/eps))``; ``coarse`` is
    the norm bound ``lambda_max((W1+W1')/2) + ||W2||*||W3||``.  Both are
    valid; take the smaller.
    """

    grid_min: float
    best_eps: float
    coarse: float

    @property
    def delta(self) -> float:
        return min(self.grid_min, self.coarse)


def spectral_norm(m) -> float:
    """Largest singular value, via the symmetric eigensolver on ``M'M``."""
    a = as_matrix(m, "norm input")
    gram = a.T @ a
    return math.sqrt(max(0.0, float(jacobi_eigenvalues(gram)[-1])))


def quad_delta_estimate(w1, w2, w3, eps_grid) -> DeltaEstimate:
    """Estimate the quadratic-growth constant of ``x -> W1 x + W2 Phi(x)``
    with ``||Phi(x)-Phi(y)|| <= ||W3 (x-y)||``.
    """
    w1 = as_square_matrix(w1, "w1")
    w2 = as_matrix(w2, "w2")
    w3 = as_matrix(w3, "w3")
    n = w1.shape[0]
    if w2.shape[0] != n:
        raise DimensionError(f"w2 must have {n} rows, got {w2.shape}")
    if w3.shape[1] != n:
        raise DimensionError(f"w3 must have {n} columns, got {w3.shape}")
    eps_grid = [float(e) for e in eps_grid]
    if not eps_grid:
        raise DomainError("eps grid must be non-empty")
    if any(e <= 0 for e in eps_grid):
        raise DomainError("eps grid values must be positive")

    sym_w1 = 0.5 * (w1 + w1.T)
    w2w2 = w2 @ w2.T
    w3w3 = w3.T @ w3
    best_eps, best = eps_grid[0], math.inf
    for eps in eps_grid:
        lam = float(jacobi_eigenvalues(sym_w1 + 0.5 * (eps * w2w2 + w3w3 / eps))[-1])
        if lam < best:
            best, best_eps = lam, eps
    coarse = float(jacobi_eigenvalues(sym_w1)[-1]) + spectral_norm(w2) * spectral_norm(w3)
    return DeltaEstimate(grid_min=best, best_eps=best_eps, coarse=coarse)
