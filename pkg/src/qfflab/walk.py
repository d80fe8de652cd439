"""State-vector simulation of the coined walk, the Szegedy walk and the LCU operator.

Coined space: basis |i, c> with node i in [0, N) and coin slot c in [0, N]; slot N is
the flat marker. Full-space states are arrays of shape (N*(N+1), L) indexed row-major
by (node, coin); the trailing axis is the LCU register (or a batch of columns).

Two backends share one interface:

* ``WalkOperators`` acts on the whole coined space.
* ``ReducedWalk`` acts on span(flat, U flat), a subspace of dimension <= 2N that is
  invariant under U, the flat reflection, and every reflection about a flat state.
  All states reachable from a flat input stay inside it, so results are exact.
"""

from __future__ import annotations

import math
import weakref
from dataclasses import asdict, dataclass

import numpy as np

from .chebyshev import FFCoefficients
from .graph import Graph
from .markov import TransitionMatrix, discriminant, lazy_walk

COMPLETIONS = ("gram_schmidt", "householder")
GS_SKIP = 1e-8


@dataclass
class CostLedger:
    qw_steps: int = 0
    initial_reflections: int = 0
    rw_steps: int = 0
    d: int = 1

    @property
    def graph_queries_charged(self) -> int:
        return math.ceil(math.sqrt(self.d)) * self.qw_steps

    def add(self, other: "CostLedger") -> None:
        self.qw_steps += other.qw_steps
        self.initial_reflections += other.initial_reflections
        self.rw_steps += other.rw_steps

    def snapshot(self) -> dict:
        out = asdict(self)
        out["graph_queries_charged"] = self.graph_queries_charged
        return out


def _charge(ledger: CostLedger | None, qw: int = 0, refl: int = 0) -> None:
    if ledger is not None:
        ledger.qw_steps += qw
        ledger.initial_reflections += refl


# ------------------------------------------------------------------------ coin


def coin_columns(P: TransitionMatrix) -> np.ndarray:
    """psi[i] over coin slots: psi[i][j] = sqrt(P(j, i)), flat slot zero."""
    n = P.n
    psi = np.zeros((n, n + 1))
    psi[:, :n] = np.sqrt(P.dense().T)
    return psi


def _gram_schmidt_block(psi: np.ndarray) -> np.ndarray:
    k = len(psi)
    cols = [psi]
    for c in range(k):
        e = np.zeros(k)
        e[c] = 1.0
        for b in cols:
            e -= (b @ e) * b
        nrm = np.linalg.norm(e)
        if nrm < GS_SKIP:
            continue
        e /= nrm
        # second pass for numerical orthogonality
        for b in cols:
            e -= (b @ e) * b
        cols.append(e / np.linalg.norm(e))
        if len(cols) == k:
            break
    block = np.empty((k, k))
    block[:, k - 1] = cols[0]
    block[:, : k - 1] = np.array(cols[1:]).T
    return block


def _householder_block(psi: np.ndarray) -> np.ndarray:
    k = len(psi)
    w = -psi.copy()
    w[k - 1] += 1.0
    return np.eye(k) - 2.0 * np.outer(w, w) / (w @ w)


def build_coin(P: TransitionMatrix, completion: str = "gram_schmidt") -> np.ndarray:
    """Per-node coin unitaries, shape (N, N+1, N+1), with V_i |flat> = psi_i."""
    if completion not in COMPLETIONS:
        raise ValueError(f"unknown completion {completion!r}; choose from {COMPLETIONS}")
    make = _gram_schmidt_block if completion == "gram_schmidt" else _householder_block
    return np.stack([make(p) for p in coin_columns(P)])


def build_shift(P: TransitionMatrix | Graph) -> np.ndarray:
    """Involutive permutation of coined indices swapping |i,j> and |j,i> on edges."""
    if isinstance(P, Graph):
        n = P.n
        pairs = P.edges()
    else:
        n = P.n
        m = P.dense()
        support = (m > 0) | (m.T > 0)
        np.fill_diagonal(support, False)
        pairs = [(int(i), int(j)) for i, j in zip(*np.nonzero(np.triu(support)))]
    perm = np.arange(n * (n + 1))
    for i, j in pairs:
        a, b = i * (n + 1) + j, j * (n + 1) + i
        perm[a], perm[b] = b, a
    return perm


# -------------------------------------------------------------------- backends


def _as_2d(state: np.ndarray):
    return (state[:, None], True) if state.ndim == 1 else (state, False)


class WalkOperators:
    """Full coined-space operators. U = V^dag S V, W = R_flat U."""

    backend = "full"

    def __init__(self, P: TransitionMatrix, completion: str = "gram_schmidt", d: int = 1):
        self.P = P
        self.D = discriminant(P)
        self.n = P.n
        self.dim = self.n * (self.n + 1)
        self.d = d
        self.completion = completion
        self.coin = build_coin(P, completion)
        self.coin_dag = np.ascontiguousarray(np.transpose(self.coin, (0, 2, 1)))
        self.shift = build_shift(P)
        flat = np.zeros((self.n, self.n + 1), dtype=bool)
        flat[:, self.n] = True
        self.flat_mask = flat.ravel()
        self.flat_rows = np.flatnonzero(self.flat_mask)

    def _check(self, state):
        if state.shape[0] != self.dim:
            raise ValueError(f"state dimension {state.shape[0]} != {self.dim}")

    def _coin(self, blocks, state):
        n, L = self.n, state.shape[1]
        return np.matmul(blocks, state.reshape(n, n + 1, L)).reshape(self.dim, L)

    def apply_S(self, state):
        s, vec = _as_2d(state)
        self._check(s)
        out = s[self.shift]
        return out[:, 0] if vec else out

    def apply_U(self, state, ledger=None):
        s, vec = _as_2d(state)
        self._check(s)
        out = self._coin(self.coin_dag, self._coin(self.coin, s)[self.shift])
        _charge(ledger, qw=1)
        return out[:, 0] if vec else out

    def apply_R_flat(self, state):
        out = -state
        out[self.flat_rows] = state[self.flat_rows]
        return out

    def apply_W(self, state, ledger=None):
        return self.apply_R_flat(self.apply_U(state, ledger))

    def apply_W_dag(self, state, ledger=None):
        return self.apply_U(self.apply_R_flat(state), ledger)

    def embed_flat(self, x, L: int | None = None) -> np.ndarray:
        """|x, flat> (with the LCU register in |0> when ``L`` is given)."""
        x = np.asarray(x)
        out = np.zeros((self.dim,) if L is None else (self.dim, L), dtype=complex)
        if L is None:
            out[self.flat_rows] = x
        else:
            out[self.flat_rows, 0] = x
        return out

    def flat_part(self, state) -> np.ndarray:
        return state[self.flat_rows]

    def lift(self, state):
        return state


class ReducedWalk:
    """The same operators restricted to span(flat, U flat), with an orthonormal basis Q.

    The first N basis vectors are the flat states |i, flat>; the rest orthonormalize
    the non-flat part of U|i, flat>.
    """

    backend = "reduced"

    def __init__(self, full: WalkOperators, rank_tol: float = 1e-10):
        self.full = full
        self.P, self.D, self.n, self.d = full.P, full.D, full.n, full.d
        n = self.n
        eye = np.zeros((full.dim, n))
        eye[full.flat_rows, np.arange(n)] = 1.0
        u_flat = full.apply_U(eye).real
        rest = u_flat.copy()
        rest[full.flat_rows] = 0.0
        if n:
            uu, sv, _ = np.linalg.svd(rest, full_matrices=False)
            extra = uu[:, sv > rank_tol * max(1.0, sv.max(initial=0.0))]
        else:
            extra = np.zeros((full.dim, 0))
        self.Q = np.hstack([eye, extra])
        self.dim = self.Q.shape[1]
        uq = full.apply_U(self.Q).real
        self.U = self.Q.T @ uq
        if np.linalg.norm(uq - self.Q @ self.U) > 1e-9:
            raise AssertionError("reduced subspace is not invariant under U")
        self.U = 0.5 * (self.U + self.U.T)
        sign = np.ones(self.dim)
        sign[n:] = -1.0
        self.sign = sign
        self.W = sign[:, None] * self.U
        self.W_dag = self.U * sign[None, :]
        self.flat_rows = np.arange(n)

    def apply_U(self, state, ledger=None):
        _charge(ledger, qw=1)
        return self.U @ state

    def apply_R_flat(self, state):
        return self.sign[:, None] * state if state.ndim == 2 else self.sign * state

    def apply_W(self, state, ledger=None):
        _charge(ledger, qw=1)
        return self.W @ state

    def apply_W_dag(self, state, ledger=None):
        _charge(ledger, qw=1)
        return self.W_dag @ state

    def embed_flat(self, x, L: int | None = None) -> np.ndarray:
        x = np.asarray(x)
        out = np.zeros((self.dim,) if L is None else (self.dim, L), dtype=complex)
        if L is None:
            out[: self.n] = x
        else:
            out[: self.n, 0] = x
        return out

    def flat_part(self, state) -> np.ndarray:
        return state[: self.n]

    def lift(self, state):
        """Coordinates in the full coined space."""
        return self.Q @ state


_ENGINES: "weakref.WeakKeyDictionary[Graph, dict]" = weakref.WeakKeyDictionary()


def walk_engine(g: Graph, backend: str = "reduced", completion: str = "gram_schmidt"):
    """Cached walk operators for the lazy walk on ``g``."""
    cache = _ENGINES.setdefault(g, {})
    key = (backend, completion)
    if key not in cache:
        full = cache.get(("full", completion))
        if full is None:
            full = WalkOperators(lazy_walk(g), completion, d=g.d)
            cache[("full", completion)] = full
        if backend == "full":
            return full
        if backend != "reduced":
            raise ValueError(f"unknown backend {backend!r}")
        cache[key] = ReducedWalk(full)
    return cache[key]


# ------------------------------------------------------------------------- LCU


def _lcu_householder(q: np.ndarray) -> np.ndarray | None:
    """Vector w of the reflection mapping |0> to sum_l sqrt(q_l)|l>, None if trivial."""
    a = np.sqrt(np.clip(q, 0.0, None))
    w = -a
    w[0] += 1.0
    return None if np.linalg.norm(w) < 1e-15 else w


def apply_V_q(state: np.ndarray, q: np.ndarray) -> np.ndarray:
    """The LCU coin on the trailing register. It is a reflection, so it is its own inverse."""
    if state.ndim != 2 or state.shape[1] != len(q):
        raise ValueError(f"state needs an LCU register of size {len(q)}")
    w = _lcu_householder(q)
    if w is None:
        return state.copy()
    return state - (2.0 / (w @ w)) * np.outer(state @ w, w)


def _controlled_powers(engine, state, step):
    out = state.copy()
    for j in range(1, out.shape[1]):
        out[:, j:] = step(out[:, j:])
    return out


def apply_W_tau(engine, state: np.ndarray, coeffs: FFCoefficients, ledger=None) -> np.ndarray:
    """V_q^dag (sum_l |l><l| x W^l) V_q, realized as tau controlled layers."""
    if state.ndim != 2 or state.shape[1] != coeffs.tau + 1:
        raise ValueError(f"state needs an LCU register of size {coeffs.tau + 1}")
    out = apply_V_q(state, coeffs.q)
    out = _controlled_powers(engine, out, engine.apply_W)
    _charge(ledger, qw=coeffs.tau)
    return apply_V_q(out, coeffs.q)


def apply_W_tau_dag(engine, state: np.ndarray, coeffs: FFCoefficients, ledger=None) -> np.ndarray:
    if state.ndim != 2 or state.shape[1] != coeffs.tau + 1:
        raise ValueError(f"state needs an LCU register of size {coeffs.tau + 1}")
    out = apply_V_q(state, coeffs.q)
    out = _controlled_powers(engine, out, engine.apply_W_dag)
    _charge(ledger, qw=coeffs.tau)
    return apply_V_q(out, coeffs.q)


# ---------------------------------------------------------------- measurement


def flat_component(engine, state: np.ndarray) -> np.ndarray:
    """Amplitudes on |i, flat> (and LCU |0> for register states)."""
    part = engine.flat_part(state)
    return part[:, 0] if part.ndim == 2 else part


def project_flat(engine, state: np.ndarray):
    """(norm of the flat component, renormalized flat vector or None)."""
    f = flat_component(engine, state)
    nrm = float(np.linalg.norm(f))
    return nrm, (f / nrm if nrm > 0 else None)


def measure_flat(engine, state: np.ndarray, rng: np.random.Generator):
    """Born-rule flat measurement. Returns (success, collapsed flat vector or None, prob)."""
    nrm, collapsed = project_flat(engine, state)
    prob = min(nrm * nrm, 1.0)
    if prob > 0 and rng.random() < prob:
        return True, collapsed, prob
    return False, None, prob


@dataclass
class WatrousOutcome:
    success: bool
    state: np.ndarray | None
    failed_step: int | None
    steps: int


def watrous_simulate(engine, v, t: int, rng: np.random.Generator, ledger=None) -> WatrousOutcome:
    """t rounds of (apply U, measure flat). Success across all rounds has probability ||D^t v||^2."""
    v = np.asarray(v, dtype=complex)
    cur = v / np.linalg.norm(v)
    for k in range(1, t + 1):
        out = engine.apply_U(engine.embed_flat(cur), ledger)
        ok, cur, _ = measure_flat(engine, out, rng)
        if not ok:
            return WatrousOutcome(False, None, k, k)
    return WatrousOutcome(True, cur, None, t)


def state_to_json(state: np.ndarray, tol: float = 1e-14) -> dict:
    """Sparse dump {basis index: [re, im]} of a state, row-major over trailing axes."""
    flat = np.asarray(state).ravel()
    idx = np.flatnonzero(np.abs(flat) > tol)
    return {"shape": list(np.shape(state)),
            "amplitudes": {int(i): [float(flat[i].real), float(flat[i].imag)] for i in idx}}
