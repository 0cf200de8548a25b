"""Cluster partitions and structural classes of coupling matrices.

Coupling matrices are plain dense ``numpy`` arrays.  Four structural classes
are recognised:

* class A1 — zero row sums, nonnegative off-diagonal entries, and a strongly
  connected interaction graph (Laplacian-like matrix of a strongly connected
  digraph);
* class A2 — class A1 and symmetric (undirected graph);
* class A3 — rectangular block whose every row sums to zero; entries may have
  either sign (cooperative and competitive links);
* class A4 — symmetric block matrix over a cluster partition whose diagonal
  blocks are A2 and whose off-diagonal blocks are A3.  This is the admissible
  coupling structure for cluster synchronization.

All membership checks take an explicit numeric tolerance because inputs come
from text files and arithmetic, not exact rationals.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, DomainError

#: Default tolerance for row sums, symmetry and edge thresholding.
DEFAULT_TOL = 1e-9


@dataclass(frozen=True)
class ClusterPartition:
    """Contiguous partition of node indices ``1..N`` into ``m`` clusters.

    ``boundaries`` is the strictly increasing tuple ``(0, r_1, ..., r_m)``
    with ``r_m = N``; cluster ``k`` (zero-based) covers node indices
    ``boundaries[k] .. boundaries[k+1]-1``.
    """

    boundaries: tuple[int, ...]

    def __post_init__(self) -> None:
        b = tuple(int(v) for v in self.boundaries)
        object.__setattr__(self, "boundaries", b)
        if len(b) < 2:
            raise DimensionError("partition needs at least one cluster")
        if b[0] != 0:
            raise DimensionError("partition boundaries must start at 0")
        if any(b[i] >= b[i + 1] for i in range(len(b) - 1)):
            raise DimensionError(
                "partition boundaries must be strictly increasing "
                f"(every cluster non-empty): {b}"
            )

    @classmethod
    def from_sizes(cls, sizes) -> "ClusterPartition":
        """Build a partition from per-cluster node counts, e.g. ``(2, 3)``."""
        sizes = [int(s) for s in sizes]
        return cls(tuple(np.cumsum([0] + sizes).tolist()))

    @classmethod
    def trivial(cls, n_nodes: int) -> "ClusterPartition":
        """Single cluster containing all nodes."""
        return cls((0, int(n_nodes)))

    @property
    def m(self) -> int:
        """Number of clusters."""
        return len(self.boundaries) - 1

    @property
    def n_nodes(self) -> int:
        """Total node count N."""
        return self.boundaries[-1]

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(
            self.boundaries[k + 1] - self.boundaries[k] for k in range(self.m)
        )

    def cluster_slice(self, k: int) -> slice:
        """Index slice of cluster ``k`` (zero-based)."""
        if not 0 <= k < self.m:
            raise DimensionError(f"cluster index {k} out of range [0, {self.m})")
        return slice(self.boundaries[k], self.boundaries[k + 1])

    def cluster_of_nodes(self) -> np.ndarray:
        """Array of length N mapping each node to its cluster index."""
        out = np.empty(self.n_nodes, dtype=np.int64)
        for k in range(self.m):
            out[self.cluster_slice(k)] = k
        return out

    def pinned_nodes(self) -> tuple[int, ...]:
        """First node of each cluster (the controlled nodes)."""
        return tuple(self.boundaries[:-1])


@dataclass(frozen=True)
class BlockView:
    """One cluster-pair block of a partitioned matrix."""

    rows: range
    cols: range
    values: np.ndarray = field(repr=False)


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Coerce to a 2-D float64 array."""
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {arr.shape}")
    return arr


def as_square_matrix(a, name: str = "matrix") -> np.ndarray:
    arr = as_matrix(a, name)
    if arr.shape[0] != arr.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {arr.shape}")
    return arr


def _strongly_connected(edge: np.ndarray) -> bool:
    """Strong connectivity of the digraph given by a boolean adjacency matrix.

    Breadth-first reachability from node 0 along edges and along reversed
    edges; both must cover every node.
    """
    n = edge.shape[0]
    if n == 1:
        return True
    for adj in (edge, edge.T):
        seen = np.zeros(n, dtype=bool)
        seen[0] = True
        frontier = [0]
        while frontier:
            nxt = []
            for i in frontier:
                for j in np.flatnonzero(adj[i]):
                    if not seen[j]:
                        seen[j] = True
                        nxt.append(int(j))
            frontier = nxt
        if not seen.all():
            return False
    return True


def is_class_a1(a, tol: float = DEFAULT_TOL) -> bool:
    """Class A1: nonnegative off-diagonal entries, zero row sums, strongly
    connected interaction graph (edge where ``|a_ij| > tol``, ``i != j``).

    A 1x1 zero matrix passes: connectivity of a single node is vacuous, which
    lets the single-node master-slave case degenerate cleanly.
    """
    arr = as_square_matrix(a)
    if tol < 0:
        raise DomainError("tol must be >= 0")
    off = arr.copy()
    np.fill_diagonal(off, 0.0)
    if (off < -tol).any():
        return False
    if np.abs(arr.sum(axis=1)).max() > tol:
        return False
    edge = np.abs(off) > tol
    return _strongly_connected(edge)


def is_class_a2(a, tol: float = DEFAULT_TOL) -> bool:
    """Class A2: class A1 and symmetric within ``tol``."""
    arr = as_square_matrix(a)
    if np.abs(arr - arr.T).max() > tol:
        return False
    return is_class_a1(arr, tol)


def is_class_a3(a, tol: float = DEFAULT_TOL) -> bool:
    """Class A3: every row of a (possibly rectangular) block sums to zero."""
    arr = as_matrix(a)
    if arr.size == 0:
        return True
    return np.abs(arr.sum(axis=1)).max() <= tol


def is_class_a4(a, partition: ClusterPartition, tol: float = DEFAULT_TOL) -> bool:
    """Class A4: symmetric, diagonal blocks A2, off-diagonal blocks A3.

    The off-diagonal A3 requirement applies to every block pair ``(k, k')``,
    ``k != k'``; with symmetry this forces zero column sums of each block as
    well.  Diagonal blocks need no separate A3 check because A2 already has
    zero row sums.
    """
    arr = as_square_matrix(a)
    if arr.shape[0] != partition.n_nodes:
        raise DimensionError(
            f"matrix dimension {arr.shape[0]} does not match partition "
            f"N={partition.n_nodes}"
        )
    if np.abs(arr - arr.T).max() > tol:
        return False
    for k in range(partition.m):
        for kp in range(partition.m):
            blk = arr[partition.cluster_slice(k), partition.cluster_slice(kp)]
            if k == kp:
                if not is_class_a2(blk, tol):
                    return False
            elif not is_class_a3(blk, tol):
                return False
    return True


def block(a, partition: ClusterPartition, k: int, kp: int) -> BlockView:
    """Extract the ``(k, k')`` cluster block (zero-based cluster indices)."""
    arr = as_square_matrix(a)
    if arr.shape[0] != partition.n_nodes:
        raise DimensionError(
            f"matrix dimension {arr.shape[0]} does not match partition "
            f"N={partition.n_nodes}"
        )
    rows = partition.cluster_slice(k)
    cols = partition.cluster_slice(kp)
    return BlockView(
        rows=range(rows.start, rows.stop),
        cols=range(cols.start, cols.stop),
        values=arr[rows, cols].copy(),
    )
