"""Undirected graphs and the synthetic precision-matrix families.

Node ids are 0-based in memory and 1-based in edge-list files.
"""

from __future__ import annotations

from collections.abc import Iterable
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "Graph",
    "NotPositiveDefiniteError",
    "from_edge_list",
    "from_adjacency",
    "empty_graph",
    "complete_graph",
    "band_graph",
    "band_graph_precision",
    "hub_graph_precision",
    "erdos_renyi_precision",
    "delete_edges_randomly",
    "er_null_graph",
    "max_degree",
    "permute_nodes",
    "read_edge_list",
    "write_edge_list",
]


class NotPositiveDefiniteError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Graph:
    """Simple undirected graph on nodes ``0..p-1`` stored as neighbor lists."""

    p: int
    neighbors: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        if len(self.neighbors) != self.p:
            raise ValueError("need one neighbor list per node")
        for i, nb in enumerate(self.neighbors):
            if i in nb:
                raise ValueError(f"self-loop at node {i}")
            for j in nb:
                if not 0 <= j < self.p:
                    raise ValueError(f"node id {j} out of range")
                if i not in self.neighbors[j]:
                    raise ValueError(f"asymmetric neighbor lists at ({i}, {j})")

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Graph) and self.p == other.p and self.neighbors == other.neighbors

    def __hash__(self) -> int:
        return hash((self.p, self.neighbors))

    def __repr__(self) -> str:
        return f"Graph(p={self.p}, edges={self.n_edges})"

    @property
    def n_edges(self) -> int:
        return sum(len(nb) for nb in self.neighbors) // 2

    def degree(self, i: int) -> int:
        return len(self.neighbors[i])

    def degrees(self) -> np.ndarray:
        return np.array([len(nb) for nb in self.neighbors], dtype=int)

    def has_edge(self, i: int, j: int) -> bool:
        return j in self.neighbors[i]

    def edges(self) -> list[tuple[int, int]]:
        """Edges as ``(i, j)`` with ``i < j``, lexicographically sorted."""
        return [(i, j) for i, nb in enumerate(self.neighbors) for j in nb if i < j]

    def non_edges(self) -> list[tuple[int, int]]:
        """Unconnected distinct pairs ``(i, j)``, ``i < j``."""
        return [
            (i, j)
            for i in range(self.p)
            for j in range(i + 1, self.p)
            if j not in self.neighbors[i]
        ]

    def adjacency(self) -> np.ndarray:
        a = np.zeros((self.p, self.p), dtype=bool)
        for i, j in self.edges():
            a[i, j] = a[j, i] = True
        return a


def from_edge_list(p: int, edges: Iterable[tuple[int, int]]) -> Graph:
    """Build a graph from 0-based pairs; duplicates and orientation are ignored."""
    p = int(p)
    if p < 0:
        raise ValueError("p must be nonnegative")
    nbrs: list[set[int]] = [set() for _ in range(p)]
    for i, j in edges:
        i, j = int(i), int(j)
        if not (0 <= i < p and 0 <= j < p):
            raise ValueError(f"edge ({i}, {j}) has a node id outside [0, {p})")
        if i == j:
            raise ValueError(f"self-loop at node {i}")
        nbrs[i].add(j)
        nbrs[j].add(i)
    return Graph(p, tuple(tuple(sorted(nb)) for nb in nbrs))


def from_adjacency(adj: np.ndarray) -> Graph:
    adj = np.asarray(adj)
    a = adj != 0
    np.fill_diagonal(a, False)
    if not np.array_equal(a, a.T):
        raise ValueError("adjacency pattern must be symmetric")
    return Graph(a.shape[0], tuple(tuple(np.flatnonzero(row).tolist()) for row in a))


def empty_graph(p: int) -> Graph:
    return Graph(p, tuple(() for _ in range(p)))


def complete_graph(p: int) -> Graph:
    return Graph(p, tuple(tuple(j for j in range(p) if j != i) for i in range(p)))


def band_graph(p: int, bandwidth: int) -> Graph:
    return from_edge_list(
        p, [(i, j) for i in range(p) for j in range(i + 1, min(p, i + bandwidth + 1))]
    )


def _require_pd(omega: np.ndarray, what: str) -> None:
    try:
        np.linalg.cholesky(omega)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError(f"{what} precision matrix is not positive definite") from exc


def band_graph_precision(p: int, bandwidth: int, s: float) -> tuple[Graph, np.ndarray]:
    """Unit diagonal, ``s`` on every entry with ``1 <= |i-j| <= bandwidth``."""
    if p < 2:
        raise ValueError("p must be at least 2")
    if not 1 <= bandwidth < p:
        raise ValueError("bandwidth must satisfy 1 <= K < p")
    if not s > 0:
        raise ValueError("signal s must be positive")
    idx = np.arange(p)
    dist = np.abs(idx[:, None] - idx[None, :])
    omega = np.where(dist == 0, 1.0, np.where(dist <= bandwidth, s, 0.0))
    _require_pd(omega, "band")
    return band_graph(p, bandwidth), omega


def hub_graph_precision(p: int, group_size: int, xi: float) -> tuple[Graph, np.ndarray]:
    """Disjoint stars of ``group_size`` nodes; the first node of each group is the hub.

    Off-diagonal hub entries are 1 and each diagonal entry is its row's
    absolute off-diagonal sum plus ``xi`` (strict diagonal dominance).
    """
    if group_size < 2 or p % group_size:
        raise ValueError("group size must be >= 2 and divide p")
    if not xi > 0:
        raise ValueError("xi must be positive")
    omega = np.zeros((p, p))
    for start in range(0, p, group_size):
        leaves = np.arange(start + 1, start + group_size)
        omega[start, leaves] = omega[leaves, start] = 1.0
    omega[np.diag_indices(p)] = np.abs(omega).sum(axis=1) + xi
    _require_pd(omega, "hub")
    return from_adjacency(omega), omega


def erdos_renyi_precision(
    p: int, q: float, s: float, rng: np.random.Generator, unit_diagonal: bool = True
) -> tuple[Graph, np.ndarray]:
    """Random ER pattern with weights on ``(s/2, 3s/2)``, shifted to be PD.

    The shift ``|lambda_min(A)| + 0.05`` is applied unconditionally.  With
    ``unit_diagonal=False`` the diagonal of ``A`` is zero before the shift,
    so the diagonal of the result is ``|lambda_min(A)| + 0.05``; this is the
    construction under which the published ER power figures are reproduced.
    """
    if not 0 < q < 1:
        raise ValueError("edge probability must lie in (0, 1)")
    if not s > 0:
        raise ValueError("signal s must be positive")
    iu = np.triu_indices(p, k=1)
    delta = rng.random(iu[0].size) < q
    u = rng.uniform(s / 2, 3 * s / 2, size=iu[0].size)
    a = np.eye(p) if unit_diagonal else np.zeros((p, p))
    a[iu] = u * delta
    a[(iu[1], iu[0])] = a[iu]
    lam = np.linalg.eigvalsh(a)[0]
    omega = a + (abs(lam) + 0.05) * np.eye(p)
    return from_adjacency(omega), omega


def delete_edges_randomly(g: Graph, prob: float, rng: np.random.Generator) -> Graph:
    """Drop each edge independently with probability ``prob``."""
    if not 0 <= prob <= 1:
        raise ValueError("deletion probability must lie in [0, 1]")
    edges = g.edges()
    keep = rng.random(len(edges)) >= prob
    return from_edge_list(g.p, [e for e, k in zip(edges, keep) if k])


def er_null_graph(g: Graph, q: float, q0: float, rng: np.random.Generator) -> Graph:
    """Subgraph with marginal edge density ``q0``: keep each edge w.p. ``q0/q``."""
    if not 0 < q0 <= q:
        raise ValueError("need 0 < q0 <= q")
    return delete_edges_randomly(g, 1.0 - q0 / q, rng)


def max_degree(g: Graph) -> int:
    return max((len(nb) for nb in g.neighbors), default=0)


def permute_nodes(
    g: Graph, perm: np.ndarray, precision: np.ndarray | None = None
) -> tuple[Graph, np.ndarray | None]:
    """Relabel so that new node ``k`` is old node ``perm[k]``."""
    perm = np.asarray(perm, dtype=int)
    inv = np.empty_like(perm)
    inv[perm] = np.arange(perm.size)
    new = from_edge_list(g.p, [(inv[i], inv[j]) for i, j in g.edges()])
    if precision is not None:
        precision = precision[np.ix_(perm, perm)]
    return new, precision


def read_edge_list(path: str | Path, p: int | None = None) -> Graph:
    """Read a whitespace-separated, 1-based ``i j`` edge list (``#`` comments).

    ``p`` defaults to a ``# p=N`` header line if present, else the largest
    node id seen.
    """
    pairs = []
    header_p = None
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if line.startswith("# p="):
            header_p = int(line[4:])
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ValueError(f"{path}:{lineno}: expected two node ids, got {line!r}")
        i, j = int(parts[0]), int(parts[1])
        if i < 1 or j < 1:
            raise ValueError(f"{path}:{lineno}: node ids are 1-based")
        pairs.append((i - 1, j - 1))
    if p is not None and header_p is not None and p != header_p:
        raise ValueError(f"{path}: header declares p={header_p}, expected p={p}")
    if p is None:
        p = header_p if header_p is not None else 1 + max((max(e) for e in pairs), default=-1)
    return from_edge_list(p, pairs)


def write_edge_list(g: Graph, path: str | Path) -> None:
    lines = [f"# p={g.p}"] + [f"{i + 1} {j + 1}" for i, j in g.edges()]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
