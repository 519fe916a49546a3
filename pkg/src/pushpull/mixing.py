"""Row/column-stochastic mixing matrices, Perron vectors and assumption checks."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DimensionMismatch, EigenvectorNotUnique, NonConvergence
from .graph import DirectedGraph, reverse, root_set

STOCHASTIC_TOL = 1e-12
FILE_STOCHASTIC_TOL = 1e-9
CLAMP_TOL = 1e-12
EIGVEC_TOL = 1e-10
DENSE_LIMIT = 64
POWER_ITERS = 100_000


def row_stochastic_from_graph(g: DirectedGraph) -> np.ndarray:
    """Uniform pull weights: ``R[i, j] = 1 / (1 + indeg(i))`` on in-neighbours and itself."""
    R = np.zeros((g.n, g.n))
    for i, nbrs in enumerate(g.in_neighbors()):
        w = 1.0 / (1 + len(nbrs))
        R[i, i] = w
        R[i, nbrs] = w
    return R


def column_stochastic_from_graph(g: DirectedGraph) -> np.ndarray:
    """Uniform push weights: ``C[i, j] = 1 / (1 + outdeg(j))`` on out-neighbours and itself."""
    C = np.zeros((g.n, g.n))
    for j, nbrs in enumerate(g.out_neighbors()):
        w = 1.0 / (1 + len(nbrs))
        C[j, j] = w
        C[nbrs, j] = w
    return C


def graph_of(M: np.ndarray) -> DirectedGraph:
    """Graph induced by a nonnegative matrix: edge ``(j, i)`` iff ``M[i, j] > 0``, ``i != j``."""
    M = np.asarray(M)
    rows, cols = np.nonzero(M > 0)
    return DirectedGraph(M.shape[0], frozenset((int(j), int(i)) for i, j in zip(rows, cols) if i != j))


def _fixed_vector_dense(T: np.ndarray) -> np.ndarray:
    """Unit null vector of ``T - I`` for a column-stochastic-like ``T``."""
    n = T.shape[0]
    _, s, vt = np.linalg.svd(T - np.eye(n))
    nullity = int(np.sum(s <= 1e-10 * max(1.0, s[0])))
    if nullity != 1:
        raise EigenvectorNotUnique(f"eigenvalue 1 has multiplicity {nullity}")
    return vt[-1]


def _fixed_vector_power(T: np.ndarray) -> np.ndarray:
    n = T.shape[0]
    x = np.full(n, 1.0 / n)
    for _ in range(POWER_ITERS):
        nxt = T @ x
        nxt /= nxt.sum()
        if np.max(np.abs(nxt - x)) <= 1e-12 / n:
            return nxt
        x = nxt
    raise NonConvergence(f"power iteration did not settle in {POWER_ITERS} steps")


def _perron(T: np.ndarray, graph_for_roots: DirectedGraph) -> np.ndarray:
    """Nonnegative fixed vector of ``T`` scaled to sum ``n``, tiny entries clamped."""
    n = T.shape[0]
    if n == 1:
        return np.ones(1)
    if n <= DENSE_LIMIT:
        w = _fixed_vector_dense(T)
    else:
        # power iteration cannot detect a repeated eigenvalue 1; the graph can
        if not root_set(graph_for_roots):
            raise EigenvectorNotUnique("induced graph has no spanning tree")
        w = _fixed_vector_power(T)
    w = w * (n / w.sum())
    if np.any(w < -CLAMP_TOL):
        raise EigenvectorNotUnique("fixed vector has entries of both signs")
    w[w < CLAMP_TOL] = 0.0
    w *= n / w.sum()
    if np.max(np.abs(T @ w - w)) > EIGVEC_TOL * n:
        raise NonConvergence("fixed vector residual above tolerance")
    return w


def left_perron_u(R: np.ndarray) -> np.ndarray:
    """Left eigenvector of ``R`` for eigenvalue 1, ``u >= 0``, ``sum(u) = n``."""
    R = np.asarray(R, dtype=float)
    return _perron(R.T, graph_of(R))


def right_perron_v(C: np.ndarray) -> np.ndarray:
    """Right eigenvector of ``C`` for eigenvalue 1, ``v >= 0``, ``sum(v) = n``."""
    C = np.asarray(C, dtype=float)
    return _perron(C, reverse(graph_of(C)))


def residual_spectral_radius(M: np.ndarray, outer: np.ndarray) -> float:
    """Spectral radius of ``M - outer`` by dense eigensolve."""
    M = np.asarray(M, dtype=float)
    outer = np.asarray(outer, dtype=float)
    if M.shape != outer.shape:
        raise DimensionMismatch(f"{M.shape} vs {outer.shape}")
    try:
        eig = np.linalg.eigvals(M - outer)
    except np.linalg.LinAlgError as exc:
        raise NonConvergence(str(exc)) from exc
    return float(np.max(np.abs(eig)))


@dataclass(frozen=True)
class AssumptionReport:
    row_stochastic: bool
    column_stochastic: bool
    nonnegative: bool
    positive_diagonals: bool
    spanning_tree_R: bool
    spanning_tree_CT: bool
    roots_intersect: bool
    uv: float
    roots_R: frozenset[int]
    roots_CT: frozenset[int]

    @property
    def cross_check(self) -> bool:
        """Graph-side intersection agrees with the eigenvector-side ``u^T v > 0``."""
        if not (self.spanning_tree_R and self.spanning_tree_CT):
            return True
        return self.roots_intersect == (self.uv > 1e-8)

    @property
    def passed(self) -> bool:
        return (
            self.row_stochastic
            and self.column_stochastic
            and self.nonnegative
            and self.positive_diagonals
            and self.spanning_tree_R
            and self.spanning_tree_CT
            and self.roots_intersect
            and self.cross_check
        )

    def failures(self) -> list[str]:
        names = [
            "row_stochastic", "column_stochastic", "nonnegative", "positive_diagonals",
            "spanning_tree_R", "spanning_tree_CT", "roots_intersect", "cross_check",
        ]
        return [name for name in names if not getattr(self, name)]


def check_assumptions(R: np.ndarray, C: np.ndarray, tol: float = STOCHASTIC_TOL) -> AssumptionReport:
    """Check stochasticity, positive diagonals and the root-set conditions.

    The root-set intersection is computed from graph reachability and
    ``u^T v`` from eigenvectors, independently of each other.
    """
    R = np.asarray(R, dtype=float)
    C = np.asarray(C, dtype=float)
    if R.ndim != 2 or R.shape[0] != R.shape[1] or R.shape != C.shape:
        raise DimensionMismatch(f"R {R.shape} and C {C.shape} must be equal square shapes")
    n = R.shape[0]
    ones = np.ones(n)
    roots_R = root_set(graph_of(R))
    roots_CT = root_set(graph_of(C.T))
    uv = float("nan")
    if roots_R and roots_CT:
        try:
            uv = float(left_perron_u(R) @ right_perron_v(C))
        except (EigenvectorNotUnique, NonConvergence):
            pass
    return AssumptionReport(
        row_stochastic=bool(np.max(np.abs(R @ ones - ones)) <= tol),
        column_stochastic=bool(np.max(np.abs(ones @ C - ones)) <= tol),
        nonnegative=bool(np.all(R >= 0) and np.all(C >= 0)),
        positive_diagonals=bool(np.all(np.diag(R) > 0) and np.all(np.diag(C) > 0)),
        spanning_tree_R=bool(roots_R),
        spanning_tree_CT=bool(roots_CT),
        roots_intersect=bool(roots_R & roots_CT),
        uv=uv,
        roots_R=roots_R,
        roots_CT=roots_CT,
    )


@dataclass(frozen=True)
class MixingPair:
    """Mixing matrices with their Perron vectors and residual spectral radii."""

    R: np.ndarray
    C: np.ndarray
    u: np.ndarray
    v: np.ndarray
    rho_R: float
    rho_C: float

    @property
    def n(self) -> int:
        return self.R.shape[0]

    @property
    def uv(self) -> float:
        return float(self.u @ self.v)

    @property
    def B_R(self) -> np.ndarray:
        return self.R - np.outer(np.ones(self.n), self.u) / self.n

    @property
    def B_C(self) -> np.ndarray:
        return self.C - np.outer(self.v, np.ones(self.n)) / self.n

    @classmethod
    def from_matrices(cls, R: np.ndarray, C: np.ndarray) -> "MixingPair":
        R = np.array(R, dtype=float)
        C = np.array(C, dtype=float)
        u = left_perron_u(R)
        v = right_perron_v(C)
        n = R.shape[0]
        ones = np.ones(n)
        rho_R = residual_spectral_radius(R, np.outer(ones, u) / n)
        rho_C = residual_spectral_radius(C, np.outer(v, ones) / n)
        for arr in (R, C, u, v):
            arr.setflags(write=False)
        return cls(R, C, u, v, rho_R, rho_C)

    @classmethod
    def from_graphs(cls, g_R: DirectedGraph, g_C: DirectedGraph) -> "MixingPair":
        return cls.from_matrices(row_stochastic_from_graph(g_R), column_stochastic_from_graph(g_C))

    def summary(self) -> dict:
        return {
            "n": self.n,
            "u": self.u.tolist(),
            "v": self.v.tolist(),
            "uv": self.uv,
            "rho_R": self.rho_R,
            "rho_C": self.rho_C,
        }


def write_matrix_csv(M: np.ndarray, path: str | Path) -> None:
    np.savetxt(path, np.asarray(M, dtype=float), delimiter=",", fmt="%.17g")


def read_matrix_csv(path: str | Path, kind: str | None = None) -> np.ndarray:
    """Load a dense square matrix; ``kind`` of ``"row"``/``"column"`` validates stochasticity."""
    rows = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        if not line.strip():
            continue
        try:
            rows.append([float(tok) for tok in line.split(",")])
        except ValueError as exc:
            raise ValueError(f"{path}:{lineno}: {exc}") from exc
    if not rows or any(len(r) != len(rows) for r in rows):
        raise ValueError(f"{path}: expected a square matrix")
    M = np.array(rows)
    if np.any(M < 0) or not np.all(np.isfinite(M)):
        raise ValueError(f"{path}: entries must be finite and nonnegative")
    if kind == "row" and np.max(np.abs(M.sum(axis=1) - 1)) > FILE_STOCHASTIC_TOL:
        raise ValueError(f"{path}: rows do not sum to 1")
    if kind == "column" and np.max(np.abs(M.sum(axis=0) - 1)) > FILE_STOCHASTIC_TOL:
        raise ValueError(f"{path}: columns do not sum to 1")
    return M
