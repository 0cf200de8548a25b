"""Node dynamics, the signed-power coupling map, and protocol right-hand sides.

The protocols combine three ingredients:

* intrinsic node dynamics ``f`` (zero for consensus, or a recurrent form
  ``f(x) = W1 x + W2 Phi(x) + J`` with a globally Lipschitz activation);
* diffusive coupling through the componentwise signed power
  ``sig_pow(v, r) = sign(v)*|v|**r``, applied with exponent ``p`` in (0,1)
  (the finite-time term) and ``q > 1`` (the term that makes the settling
  time independent of initial conditions);
* pinning feedback ``-eps1*sig_pow(x_i - s_k, p) - eps2*sig_pow(x_i - s_k, q)``
  on the first node of each cluster, steering it to the cluster target
  ``s_k``, which itself evolves freely by ``ds_k/dt = f(s_k)``.

Within a cluster the coupling acts pairwise; across clusters the signed
power is applied to the aggregated sum over each foreign cluster, exactly as
the protocol is stated.  Intra-cluster sums skip ``j == i`` — the diagonal
term is zero anyway because ``sig_pow(0, r) = 0``.

These functions are pure and array-vectorized; they are the readable
reference implementations that the fast integration kernels are tested
against.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import DimensionError, DomainError, RegimeError, StructureError
from .matrices import ClusterPartition, as_square_matrix

#: Below this magnitude the signed power with exponent < 1 returns 0.  The
#: exact map is non-Lipschitz at the origin and fixed-step integrators
#: chatter there; clamping at machine-noise scale leaves desk-scale behavior
#: untouched.
DEFAULT_DEAD_ZONE = 1e-12


def sig_pow(x, r: float, dead_zone: float = DEFAULT_DEAD_ZONE):
    """Componentwise signed power ``sign(v)*|v|**r``.

    Odd by construction; the identity map when ``r == 1``.  For ``r < 1``
    components with ``|v| < dead_zone`` map to zero (chattering guard).
    """
    if r <= 0:
        raise DomainError("sig exponent must be positive")
    arr = np.asarray(x, dtype=np.float64)
    mag = np.abs(arr)
    out = np.sign(arr) * mag**r
    if r < 1.0:
        out = np.where(mag < dead_zone, 0.0, out)
    if np.isscalar(x):
        return float(out)
    return out


def _pwl_saturation(v):
    return 0.5 * (np.abs(v + 1.0) - np.abs(v - 1.0))


ACTIVATIONS: dict[str, Callable] = {
    "pwl_saturation": _pwl_saturation,
    "tanh": np.tanh,
    "identity": lambda v: v,
}

#: Global Lipschitz constants of the built-in activations.
ACTIVATION_LIPSCHITZ = {"pwl_saturation": 1.0, "tanh": 1.0, "identity": 1.0}


@dataclass(frozen=True)
class IntrinsicDynamics:
    """Intrinsic behavior of an isolated node.

    Kinds:
      * ``"zero"`` — ``f == 0`` (consensus regime);
      * ``"linear_activation"`` — ``f(x) = W1 x + W2 Phi(x) + J`` with a
        built-in activation applied componentwise;
      * ``"custom"`` — arbitrary callable accepting and returning arrays of
        shape ``(..., n)``.
    """

    kind: str
    n: int
    w1: Optional[np.ndarray] = field(default=None, repr=False)
    w2: Optional[np.ndarray] = field(default=None, repr=False)
    activation: str = "identity"
    bias: Optional[np.ndarray] = field(default=None, repr=False)
    func: Optional[Callable] = field(default=None, repr=False)

    @classmethod
    def zero(cls, n: int) -> "IntrinsicDynamics":
        return cls(kind="zero", n=int(n))

    @classmethod
    def linear_activation(
        cls, w1, w2, activation: str = "identity", bias=None
    ) -> "IntrinsicDynamics":
        w1 = as_square_matrix(w1, "w1")
        w2 = as_square_matrix(w2, "w2")
        n = w1.shape[0]
        if w2.shape[0] != n:
            raise DimensionError("w1 and w2 must have the same dimension")
        if activation not in ACTIVATIONS:
            raise DomainError(f"unknown activation {activation!r}")
        b = np.zeros(n) if bias is None else np.asarray(bias, dtype=np.float64)
        if b.shape != (n,):
            raise DimensionError(f"bias must have shape ({n},)")
        return cls(kind="linear_activation", n=n, w1=w1, w2=w2,
                   activation=activation, bias=b)

    @classmethod
    def custom(cls, func: Callable, n: int) -> "IntrinsicDynamics":
        return cls(kind="custom", n=int(n), func=func)

    @property
    def lipschitz_w3(self) -> np.ndarray:
        """Matrix ``W3`` with ``||Phi(x)-Phi(y)|| <= ||W3 (x-y)||``."""
        if self.kind != "linear_activation":
            raise RegimeError("W3 is defined for linear_activation dynamics only")
        return ACTIVATION_LIPSCHITZ[self.activation] * np.eye(self.n)

    def f(self, x) -> np.ndarray:
        """Evaluate the vector field on arrays of shape ``(..., n)``."""
        arr = np.asarray(x, dtype=np.float64)
        if arr.shape[-1] != self.n:
            raise DimensionError(
                f"state dimension {arr.shape[-1]} != dynamics dimension {self.n}"
            )
        if self.kind == "zero":
            return np.zeros_like(arr)
        if self.kind == "linear_activation":
            phi = ACTIVATIONS[self.activation](arr)
            return arr @ self.w1.T + phi @ self.w2.T + self.bias
        return np.asarray(self.func(arr), dtype=np.float64)


def intrinsic_f(dyn: IntrinsicDynamics, x) -> np.ndarray:
    """Functional form of :meth:`IntrinsicDynamics.f`."""
    return dyn.f(x)


def equilibrium_residual(dyn: IntrinsicDynamics, x_star) -> float:
    """``||f(x*)||`` — zero iff ``x*`` is an equilibrium of the dynamics."""
    return float(np.linalg.norm(dyn.f(np.asarray(x_star, dtype=np.float64))))


@dataclass(frozen=True)
class NetworkSpec:
    """Complete problem instance for the coupled protocols.

    The first node of each cluster is pinned.  Gains ``alpha`` and ``beta``
    scale the intra-cluster p- and q-coupling; ``eps1`` and ``eps2`` are the
    pin gains (zero disables that pinning term; the settling-time bounds
    require them strictly positive).
    """

    partition: ClusterPartition
    a: np.ndarray = field(repr=False)
    b: np.ndarray = field(repr=False)
    alpha: float
    beta: float
    eps1: float
    eps2: float
    p: float
    q: float
    dynamics: IntrinsicDynamics
    target_initials: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "a", as_square_matrix(self.a, "A"))
        object.__setattr__(self, "b", as_square_matrix(self.b, "B"))
        object.__setattr__(
            self,
            "target_initials",
            np.asarray(self.target_initials, dtype=np.float64),
        )

    @classmethod
    def master_slave(
        cls, dynamics: IntrinsicDynamics, eps1: float, eps2: float,
        p: float, q: float, target_initial,
    ) -> "NetworkSpec":
        """Single pinned node tracking a single target."""
        return cls(
            partition=ClusterPartition.trivial(1),
            a=np.zeros((1, 1)), b=np.zeros((1, 1)),
            alpha=1.0, beta=1.0, eps1=eps1, eps2=eps2, p=p, q=q,
            dynamics=dynamics,
            target_initials=np.asarray(target_initial, dtype=np.float64).reshape(1, -1),
        )

    @property
    def n_nodes(self) -> int:
        return self.partition.n_nodes

    @property
    def n(self) -> int:
        return self.dynamics.n

    @property
    def m(self) -> int:
        return self.partition.m

    def pinned_nodes(self) -> tuple[int, ...]:
        return self.partition.pinned_nodes()

    def validate(self) -> None:
        """Check dimensions, parameter domains, and target distinctness.

        Class A4 membership of the coupling matrices is checked by the
        bounds computations (it costs eigen-solver work); this method covers
        everything cheaper.
        """
        big_n = self.partition.n_nodes
        if self.a.shape != (big_n, big_n):
            raise DimensionError(
                f"A has shape {self.a.shape}, partition needs ({big_n}, {big_n})"
            )
        if self.b.shape != (big_n, big_n):
            raise DimensionError(
                f"B has shape {self.b.shape}, partition needs ({big_n}, {big_n})"
            )
        if not (0.0 < self.p < 1.0):
            raise DomainError(f"p must lie in (0, 1), got {self.p}")
        if not (self.q > 1.0):
            raise DomainError(f"q must exceed 1, got {self.q}")
        if self.alpha <= 0 or self.beta <= 0:
            raise DomainError("coupling gains alpha, beta must be positive")
        if self.eps1 < 0 or self.eps2 < 0:
            raise DomainError("pin gains eps1, eps2 must be nonnegative")
        if self.target_initials.shape != (self.partition.m, self.dynamics.n):
            raise DimensionError(
                f"target_initials must have shape ({self.partition.m}, "
                f"{self.dynamics.n}), got {self.target_initials.shape}"
            )
        for k in range(self.partition.m):
            for kp in range(k + 1, self.partition.m):
                if np.array_equal(self.target_initials[k], self.target_initials[kp]):
                    raise StructureError(
                        f"target initial states of clusters {k} and {kp} coincide"
                    )


@dataclass(frozen=True)
class SystemState:
    """Node and target states at one instant."""

    nodes: np.ndarray = field(repr=False)
    targets: np.ndarray = field(repr=False)
    time: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "nodes", np.asarray(self.nodes, dtype=np.float64))
        object.__setattr__(self, "targets", np.asarray(self.targets, dtype=np.float64))


def _check_state(spec: NetworkSpec, state: SystemState) -> None:
    if state.nodes.shape != (spec.n_nodes, spec.n):
        raise DimensionError(
            f"node states have shape {state.nodes.shape}, spec needs "
            f"({spec.n_nodes}, {spec.n})"
        )
    if state.targets.shape != (spec.m, spec.n):
        raise DimensionError(
            f"target states have shape {state.targets.shape}, spec needs "
            f"({spec.m}, {spec.n})"
        )


def cluster_rhs(
    spec: NetworkSpec, state: SystemState, dead_zone: float = DEFAULT_DEAD_ZONE
) -> tuple[np.ndarray, np.ndarray]:
    """Time derivative ``(dx, ds)`` of the cluster-synchronization protocol.

    Pinned nodes (first of each cluster) carry the extra feedback terms;
    every node receives pairwise signed-power coupling within its cluster
    and aggregated signed-power coupling from each other cluster.
    """
    _check_state(spec, state)
    x, s = state.nodes, state.targets
    part = spec.partition
    cluster_of = part.cluster_of_nodes()

    diffs = x[None, :, :] - x[:, None, :]  # diffs[i, j] = x_j - x_i
    intra = (cluster_of[:, None] == cluster_of[None, :]) & ~np.eye(
        spec.n_nodes, dtype=bool
    )
    ma = np.where(intra, spec.a, 0.0)
    mb = np.where(intra, spec.b, 0.0)
    dx = spec.dynamics.f(x)
    dx += spec.alpha * np.einsum("ij,ijl->il", ma, sig_pow(diffs, spec.p, dead_zone))
    dx += spec.beta * np.einsum("ij,ijl->il", mb, sig_pow(diffs, spec.q, dead_zone))

    for kp in range(part.m):
        cols = part.cluster_slice(kp)
        rows = cluster_of != kp
        for mat, expo in ((spec.a, spec.p), (spec.b, spec.q)):
            sub = mat[rows][:, cols]
            agg = sub @ x[cols] - sub.sum(axis=1)[:, None] * x[rows]
            dx[rows] += sig_pow(agg, expo, dead_zone)

    pins = np.array(part.pinned_nodes())
    err = x[pins] - s[cluster_of[pins]]
    dx[pins] -= spec.eps1 * sig_pow(err, spec.p, dead_zone)
    dx[pins] -= spec.eps2 * sig_pow(err, spec.q, dead_zone)

    ds = spec.dynamics.f(s)
    return dx, ds


def complete_rhs(
    spec: NetworkSpec, state: SystemState, dead_zone: float = DEFAULT_DEAD_ZONE
) -> tuple[np.ndarray, np.ndarray]:
    """Single-cluster protocol: all coupling pairwise, only node 0 pinned.

    Independent of :func:`cluster_rhs`; the two agree componentwise when
    ``m == 1``, which the tests assert.
    """
    if spec.partition.m != 1:
        raise RegimeError("complete_rhs requires a single-cluster spec")
    _check_state(spec, state)
    x, s = state.nodes, state.targets
    diffs = x[None, :, :] - x[:, None, :]
    a_off = spec.a.copy()
    b_off = spec.b.copy()
    np.fill_diagonal(a_off, 0.0)
    np.fill_diagonal(b_off, 0.0)
    dx = spec.dynamics.f(x)
    dx += spec.alpha * np.einsum("ij,ijl->il", a_off, sig_pow(diffs, spec.p, dead_zone))
    dx += spec.beta * np.einsum("ij,ijl->il", b_off, sig_pow(diffs, spec.q, dead_zone))
    err = x[0] - s[0]
    dx[0] -= spec.eps1 * sig_pow(err, spec.p, dead_zone)
    dx[0] -= spec.eps2 * sig_pow(err, spec.q, dead_zone)
    return dx, spec.dynamics.f(s)


def master_slave_rhs(
    eps1: float, eps2: float, p: float, q: float, dyn: IntrinsicDynamics,
    x, s, dead_zone: float = DEFAULT_DEAD_ZONE,
) -> tuple[np.ndarray, np.ndarray]:
    """Derivatives of the single driven node and its free target."""
    x = np.asarray(x, dtype=np.float64)
    s = np.asarray(s, dtype=np.float64)
    if x.shape != s.shape:
        raise DimensionError("x and s must have the same shape")
    err = x - s
    dx = dyn.f(x) - eps1 * sig_pow(err, p, dead_zone) - eps2 * sig_pow(err, q, dead_zone)
    return dx, dyn.f(s)


def nn_stabilization_rhs(
    dyn: IntrinsicDynamics, eps1: float, eps2: float, p: float, q: float,
    x_star, x, dead_zone: float = DEFAULT_DEAD_ZONE,
) -> np.ndarray:
    """Drive the dynamics toward a caller-supplied equilibrium ``x*``.

    The caller is responsible for ``x*`` actually being an equilibrium;
    :func:`equilibrium_residual` measures the defect.
    """
    x = np.asarray(x, dtype=np.float64)
    x_star = np.asarray(x_star, dtype=np.float64)
    err = x - x_star
    return dyn.f(x) - eps1 * sig_pow(err, p, dead_zone) - eps2 * sig_pow(err, q, dead_zone)
