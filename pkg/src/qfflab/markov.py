"""Lazy symmetric walk, its discriminant, and exact classical oracles.

Convention: matrices are column-stochastic, entry ``(u, v)`` is the probability of
moving from ``v`` to ``u``. A distribution is a column vector and evolves as ``P @ p``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .graph import Graph

DENSE_EIG_MAX = 512


@dataclass(frozen=True, eq=False)
class TransitionMatrix:
    matrix: sp.csr_matrix

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def check(self, tol: float = 1e-12) -> bool:
        m = self.matrix
        cols = np.asarray(m.sum(axis=0)).ravel()
        return bool(np.all(np.abs(cols - 1) <= tol) and m.data.min(initial=0) >= 0
                    and m.data.max(initial=0) <= 1)


@dataclass(frozen=True, eq=False)
class Discriminant:
    matrix: sp.csr_matrix

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def apply(self, v: np.ndarray) -> np.ndarray:
        return self.matrix @ v


@dataclass(frozen=True, eq=False)
class SpectralData:
    """Eigenvalues in descending order with matching orthonormal eigenvector columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def angles(self) -> np.ndarray:
        return np.arccos(np.clip(self.eigenvalues, -1.0, 1.0))

    def power(self, t: int, v: np.ndarray) -> np.ndarray:
        c = self.eigenvectors.T @ v
        return self.eigenvectors @ (self.eigenvalues ** t * c)

    def chebyshev(self, l: int, v: np.ndarray) -> np.ndarray:
        c = self.eigenvectors.T @ v
        return self.eigenvectors @ (np.cos(l * self.angles) * c)


def lazy_walk(g: Graph) -> TransitionMatrix:
    """P(u,v) = 1/(2d) on edges, 1 - deg(v)/(2d) on the diagonal."""
    rows, cols, vals = [], [], []
    w = 1.0 / (2 * g.d)
    for v, nb in enumerate(g.adjacency):
        rows.append(v)
        cols.append(v)
        vals.append(1.0 - len(nb) * w)
        for u in nb:
            rows.append(u)
            cols.append(v)
            vals.append(w)
    m = sp.csr_matrix((vals, (rows, cols)), shape=(g.n, g.n))
    m.sum_duplicates()
    return TransitionMatrix(m)


def discriminant(P: TransitionMatrix) -> Discriminant:
    m = P.matrix
    return Discriminant(sp.csr_matrix(m.multiply(m.T).sqrt()))


def is_reversible(P: TransitionMatrix, tol: float = 1e-12, max_iter: int = 100_000,
                  balance_tol: float = 1e-10):
    """Power-iterate to a stationary distribution and test detailed balance.

    Returns ``(reversible, pi, converged)``. Iteration runs on the lazy version
    (P + I)/2, which has the same fixed points and does not oscillate on periodic chains.
    """
    n = P.n
    m = P.matrix
    pi = np.full(n, 1.0 / n)
    converged = False
    for _ in range(max_iter):
        nxt = 0.5 * (m @ pi + pi)
        nxt /= nxt.sum()
        if np.abs(nxt - pi).sum() <= tol:
            pi = nxt
            converged = True
            break
        pi = nxt
    flow = m.multiply(pi[None, :])  # flow[u, v] = pi(v) P(u, v)
    gap = abs(flow - flow.T)
    ok = gap.max() <= balance_tol if gap.nnz else True
    return bool(ok), pi, converged


def exact_power_apply(D: Discriminant | TransitionMatrix, t: int, v: np.ndarray) -> np.ndarray:
    """D^t v by t sequential sparse products."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    out = np.array(v, dtype=float if not np.iscomplexobj(v) else complex)
    if out.shape[0] != D.n:
        raise ValueError(f"vector length {out.shape[0]} != dimension {D.n}")
    for _ in range(t):
        out = D.matrix @ out
    return out


def chebyshev_apply(D: Discriminant, l: int, v: np.ndarray) -> np.ndarray:
    """T_l(D) v via T_l = 2x T_{l-1} - T_{l-2}."""
    if l < 0:
        raise ValueError("l must be nonnegative")
    v = np.asarray(v)
    if v.shape[0] != D.n:
        raise ValueError(f"vector length {v.shape[0]} != dimension {D.n}")
    prev, cur = v.astype(np.result_type(v, float)), D.matrix @ v
    if l == 0:
        return prev
    for _ in range(l - 1):
        prev, cur = cur, 2 * (D.matrix @ cur) - prev
    return cur


def spectral_decomp(D: Discriminant) -> SpectralData:
    if D.n > DENSE_EIG_MAX:
        raise ValueError(f"dense eigensolve capped at n <= {DENSE_EIG_MAX}, got {D.n}")
    w, vecs = np.linalg.eigh(D.dense())
    order = np.argsort(w)[::-1]
    return SpectralData(w[order], vecs[:, order])


def to_coo_json(m: TransitionMatrix | Discriminant) -> str:
    coo = m.matrix.tocoo()
    triples = sorted(zip(coo.row.tolist(), coo.col.tolist(), coo.data.tolist()))
    return json.dumps({"n": m.n, "entries": [list(x) for x in triples]})


def from_coo_json(doc: str, kind=TransitionMatrix):
    data = json.loads(doc)
    n = data["n"]
    if data["entries"]:
        r, c, v = zip(*data["entries"])
    else:
        r, c, v = (), (), ()
    return kind(sp.csr_matrix((v, (r, c)), shape=(n, n)))
