"""Norm and distance estimators, expansion and clusterability testers, classical baselines."""

from __future__ import annotations

import math
import weakref
from dataclasses import dataclass, field

import networkx as nx
import numpy as np

from . import amplitude as amp
from .chebyshev import ff_coefficients, truncation_order
from .graph import Graph, random_node
from .markov import exact_power_apply
from .qff import FastForwarder, as_vector
from .walk import CostLedger, flat_component


_FORWARDERS: "weakref.WeakKeyDictionary[Graph, FastForwarder]" = weakref.WeakKeyDictionary()


def _forwarder(g) -> FastForwarder:
    if isinstance(g, FastForwarder):
        return g
    if g not in _FORWARDERS:
        _FORWARDERS[g] = FastForwarder(g)
    return _FORWARDERS[g]


def exact_norm(g: Graph, s: int, t: int) -> float:
    ff = _forwarder(g)
    return float(np.linalg.norm(ff.oracle_state(as_vector(g.n, s), t)))


def exact_distance_sq(g: Graph, u: int, v: int, t: int) -> float:
    ff = _forwarder(g)
    return float(np.sum((ff.oracle_state(as_vector(g.n, u), t)
                         - ff.oracle_state(as_vector(g.n, v), t)) ** 2))


# ------------------------------------------------------------------ norms


@dataclass
class NormEstimate:
    a: float
    eps: float
    delta: float
    mode: str
    ledger: dict
    tau: int = 0
    iterations: int = 1
    warning: bool = False

    def to_json(self) -> dict:
        return dict(self.__dict__)


def norm_tau(n: int, t: int, eps: float) -> int:
    """ceil(sqrt(2 t ln(8 sqrt(N) / eps)))."""
    return truncation_order(t, eps / (4 * math.sqrt(n)), cap=False)


def estimate_norm(g, s: int, t: int, eps: float, delta: float, rng: np.random.Generator,
                  ledger: CostLedger | None = None) -> NormEstimate:
    """Additive estimate of ||P^t e_s|| by estimating the flat amplitude of W_tau|s, flat 0>."""
    if not (0 < eps < 1 and 0 < delta < 1):
        raise ValueError("eps and delta must lie in (0, 1)")
    ff = _forwarder(g)
    led = CostLedger(d=ff.graph.d)
    coeffs = ff_coefficients(t, norm_tau(ff.n, t, eps))
    state = ff.prepared(as_vector(ff.n, s), coeffs)
    res = amp.amplitude_estimate(state, lambda x: flat_component(ff.engine, x), eps / 2, delta,
                                 rng, led, prep_cost=coeffs.tau)
    if ledger is not None:
        ledger.add(led)
    return NormEstimate(res.estimate, eps, delta, "additive", led.snapshot(), coeffs.tau)


def multiplicative_rounds(n: int) -> int:
    return math.ceil(0.5 * math.log2(n)) + 1 if n > 1 else 1


def estimate_norm_multiplicative(g, s: int, t: int, eps: float, delta: float,
                                 rng: np.random.Generator,
                                 ledger: CostLedger | None = None) -> NormEstimate:
    """Halve a guess 2^-k until the additive estimate at error eps 2^(-k-2) clears (1+eps) 2^-k."""
    ff = _forwarder(g)
    T = multiplicative_rounds(ff.n)
    d_round = delta / T
    led = CostLedger(d=ff.graph.d)
    est = None
    for k in range(1, T + 1):
        est = estimate_norm(ff, s, t, eps * 2.0 ** (-k - 2), d_round, rng, led)
        if est.a >= (1 + eps) * 2.0 ** (-k):
            break
    if ledger is not None:
        ledger.add(led)
    warn = k == T and est.a < (1 + eps) * 2.0 ** (-k)
    return NormEstimate(est.a, eps, delta, "multiplicative", led.snapshot(), est.tau, k, warn)


# -------------------------------------------------------------- expansion


DESK_T_SCALE = 2.0 ** -9
DESK_KAPPA = 0.1
DESK_OFFSET = 0.05
DESK_TRIALS = 3.0
DESK_DELTA = 1.0 / 30


@dataclass
class ExpansionParams:
    upsilon: float
    eps: float
    mu: float
    mode: str
    t: int
    threshold: float  # M
    eps_prime: float
    trials: int
    delta: float
    gr_walks: int
    gr_threshold: float

    @classmethod
    def build(cls, g: Graph, upsilon: float, eps: float, mu: float, mode: str = "desk",
              **overrides) -> "ExpansionParams":
        if not mu < 0.25:
            raise ValueError("mu must be below 1/4")
        if mode not in ("desk", "paper"):
            raise ValueError("mode must be 'desk' or 'paper'")
        n, d = g.n, g.d
        base_t = 16 * d * d * math.log(n) / upsilon**2
        m = math.ceil(n ** (0.5 + mu))
        if mode == "paper":
            vals = dict(t=max(1, math.ceil(base_t)), threshold=math.sqrt((1 + 1 / n) / n),
                        eps_prime=n ** (-0.5 - mu) / (16 * math.sqrt(2)),
                        trials=math.ceil(90 / eps), delta=eps / 300,
                        gr_walks=m, gr_threshold=3 * m * (m - 1) / (2 * n))
        else:
            m = math.ceil(8 * n ** (0.5 + mu))
            vals = dict(t=max(1, math.ceil(DESK_T_SCALE * base_t)),
                        threshold=math.sqrt((1 + DESK_KAPPA) / n),
                        eps_prime=DESK_OFFSET / math.sqrt(n),
                        trials=math.ceil(DESK_TRIALS / eps), delta=DESK_DELTA * eps,
                        gr_walks=m, gr_threshold=1.5 * m * (m - 1) / (2 * n))
        vals.update(overrides)
        return cls(upsilon, eps, mu, mode, **vals)

    def to_json(self) -> dict:
        return dict(self.__dict__)


@dataclass
class TesterReport:
    verdict: str
    trials: list
    params: dict
    mode: str
    ledger: dict
    warnings: list = field(default_factory=list)

    def to_json(self) -> dict:
        return dict(self.__dict__)


def test_expansion(g: Graph, upsilon: float, eps: float, mu: float, rng: np.random.Generator,
                   mode: str = "desk", params: ExpansionParams | None = None) -> TesterReport:
    """Reject as soon as a sampled start node keeps ||P^t e_s|| above M + eps'."""
    p = params or ExpansionParams.build(g, upsilon, eps, mu, mode)
    warn = []
    if g.d < 3:
        warn.append("degree bound below 3: no soundness guarantee")
    ledger = CostLedger(d=g.d)
    trials = []
    verdict = "accept"
    for _ in range(p.trials):
        s = random_node(g, rng)
        est = estimate_norm(g, s, p.t, p.eps_prime, p.delta, rng, ledger)
        bar = p.threshold + p.eps_prime
        trials.append({"node": s, "estimate": est.a, "threshold": bar, "ledger": est.ledger})
        if est.a > bar:
            verdict = "reject"
            break
    return TesterReport(verdict, trials, p.to_json(), p.mode, ledger.snapshot(), warn)


test_expansion.__test__ = False


# ---------------------------------------------------------------- distance


@dataclass
class DistanceEstimate:
    a: float
    alpha: float
    beta: float
    gamma: float
    mu: float
    nu: float
    lam: float
    L: int
    tau: int
    ledger: dict
    warning: bool = False
    norm_max: float | None = None
    norm_min: float | None = None

    @staticmethod
    def combine(alpha: float, beta: float, gamma: float) -> float:
        g2 = min(gamma * gamma, 2.0)
        return alpha * alpha + beta * beta - 2 * alpha * beta * math.sqrt(1 - g2 / 2)

    def to_json(self) -> dict:
        return dict(self.__dict__)


def _amplified_walk_state(ff: FastForwarder, s: int, coeffs, L: int, delta: float, mode, ledger):
    v = as_vector(ff.n, s)
    problem = ff.problem(v, coeffs, ledger)
    return amp.fixed_point_amplify(problem, L, delta, mode, warn=False,
                                   psi=ff.prepared(v, coeffs))


def estimate_distance(g, u: int, v: int, t: int, eps: float, delta: float,
                      rng: np.random.Generator, fp_mode: str = "phased",
                      ledger: CostLedger | None = None) -> DistanceEstimate:
    """Estimate ||P^t e_u - P^t e_v||^2 from two norms and one SWAP-test amplitude."""
    if u == v:
        raise ValueError("u and v must differ")
    if not (0 < eps < 1 and 0 < delta < 1):
        raise ValueError("eps and delta must lie in (0, 1)")
    ff = _forwarder(g)
    led = CostLedger(d=ff.graph.d)
    a0 = estimate_norm_multiplicative(ff, u, t, 0.25, delta / 8, rng, led)
    b0 = estimate_norm_multiplicative(ff, v, t, 0.25, delta / 8, rng, led)
    top = max(a0.a, b0.a)
    mu = min(1.0, 9 * eps / (16 * top * top) if top > 0 else 1.0) / 26
    a1 = estimate_norm_multiplicative(ff, u, t, mu, delta / 8, rng, led)
    b1 = estimate_norm_multiplicative(ff, v, t, mu, delta / 8, rng, led)
    alpha, beta = a1.a, b1.a
    warn = any(e.warning for e in (a0, b0, a1, b1))
    nu = mu * mu / 11
    lam = min(alpha, beta) / (1 + nu)
    if lam <= 0:
        raise ValueError("norm estimate collapsed to zero")
    lam = min(lam, 1.0)
    L = amp.fixed_point_length(lam, nu)
    tau = math.ceil(math.sqrt(2 * t) * math.sqrt(math.log(4 / (lam * nu))))
    coeffs = ff_coefficients(t, tau)
    fu = _amplified_walk_state(ff, u, coeffs, L, nu, fp_mode, led)
    fv = _amplified_walk_state(ff, v, coeffs, L, nu, fp_mode, led)
    swap = amp.swap_test_state(fu.state, fv.state)
    half = amp.estimate_amplitude(swap.one_norm(), nu / 2, delta / 2, rng, led,
                                  prep_cost=2 * L * tau)
    gamma = 2 * half.estimate
    a = DistanceEstimate.combine(alpha, beta, gamma)
    if ledger is not None:
        ledger.add(led)
    truths = (exact_norm(ff.graph, u, t), exact_norm(ff.graph, v, t))
    return DistanceEstimate(a, alpha, beta, gamma, mu, nu, lam, L, tau, led.snapshot(), warn,
                            max(truths), min(truths))


# ------------------------------------------------------------ clustering


@dataclass
class ClusterParams:
    k: int
    phi_in: float
    phi_out: float | None = None
    c_prime: float = 1.0
    t_override: int | None = None
    fp_mode: str = "phased"  # fixed-point amplification route inside the distance estimate

    def t(self, n: int) -> int:
        if self.t_override is not None:
            return self.t_override
        return max(1, math.ceil(self.c_prime * self.k**4 * math.log(n) / self.phi_in**2))

    @staticmethod
    def thresholds(n: int):
        return 1 / (4 * n), 1 / n

    def to_json(self) -> dict:
        return dict(self.__dict__)


@dataclass
class Classification:
    label: str  # same-cluster | different-cluster | abstain
    estimate: float | None
    band: str  # oracle band: same | middle | different
    t: int
    distance: DistanceEstimate | None = None


def distance_band(true_sq: float, n: int) -> str:
    lo, hi = ClusterParams.thresholds(n)
    return "same" if true_sq <= lo else "different" if true_sq >= hi else "middle"


def classify_nodes(g: Graph, u: int, v: int, params: ClusterParams, rng: np.random.Generator,
                   ledger: CostLedger | None = None) -> Classification:
    """Estimate the squared walk distance to 3/(8N) and cut at the midpoint 5/(8N)."""
    n = g.n
    t = params.t(n)
    if u == v:
        return Classification("same-cluster", 0.0, "same", t)
    est = estimate_distance(g, u, v, t, 3 / (8 * n), 1 / 3, rng, params.fp_mode, ledger)
    band = distance_band(exact_distance_sq(g, u, v, t), n)
    if est.warning:
        return Classification("abstain", est.a, band, t, est)
    label = "same-cluster" if est.a < 5 / (8 * n) else "different-cluster"
    return Classification(label, est.a, band, t, est)


def clusterability_sample_size(k: int) -> int:
    return math.ceil(4 * k * math.log(k + 1))


def test_clusterability(g: Graph, k: int, phi_in: float, eps: float, rng: np.random.Generator,
                        params: ClusterParams | None = None, nodes=None) -> TesterReport:
    """Similarity graph on sampled nodes; accept iff it has at most k components.

    ``eps`` is recorded only, the informal construction has no farness parameter.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    p = params or ClusterParams(k, phi_in)
    ledger = CostLedger(d=g.d)
    if nodes is None:
        nodes = [random_node(g, rng) for _ in range(clusterability_sample_size(k))]
    sim = nx.Graph()
    sim.add_nodes_from(range(len(nodes)))
    trials = []
    for i in range(len(nodes)):
        for j in range(i + 1, len(nodes)):
            c = classify_nodes(g, nodes[i], nodes[j], p, rng, ledger)
            trials.append({"nodes": [nodes[i], nodes[j]], "estimate": c.estimate,
                           "label": c.label, "band": c.band})
            if c.label == "same-cluster":
                sim.add_edge(i, j)
    comps = nx.number_connected_components(sim)
    verdict = "accept" if comps <= k else "reject"
    info = p.to_json() | {"eps": eps, "components": comps, "samples": list(map(int, nodes))}
    return TesterReport(verdict, trials, info, "informal", ledger.snapshot())


test_clusterability.__test__ = False


# ---------------------------------------------------------- classical side


def _step_table(g: Graph) -> np.ndarray:
    """Row v lists the 2d equally likely lazy-walk moves from v."""
    table = np.repeat(np.arange(g.n)[:, None], 2 * g.d, axis=1)
    for v, nb in enumerate(g.adjacency):
        table[v, : len(nb)] = nb
    return table


def run_walks(g: Graph, s: int, t: int, m: int, rng: np.random.Generator,
              ledger: CostLedger | None = None) -> np.ndarray:
    """Endpoints of m independent lazy walks of length t from s."""
    table = _step_table(g)
    pos = np.full(m, s, dtype=np.int64)
    for _ in range(t):
        pos = table[pos, rng.integers(0, 2 * g.d, size=m)]
    if ledger is not None:
        ledger.rw_steps += m * t
    return pos


def collision_count(endpoints: np.ndarray) -> int:
    c = np.bincount(endpoints)
    return int((c * (c - 1) // 2).sum())


def classical_norm_collisions(g: Graph, s: int, t: int, m: int, rng: np.random.Generator,
                              ledger: CostLedger | None = None) -> float:
    """Unbiased estimate of ||P^t e_s||^2: pairwise endpoint collisions / C(m, 2)."""
    if m < 2:
        raise ValueError("need at least two walks")
    return collision_count(run_walks(g, s, t, m, rng, ledger)) / (m * (m - 1) / 2)


def classical_gr_expansion(g: Graph, upsilon: float, eps: float, mu: float,
                           rng: np.random.Generator, mode: str = "desk",
                           params: ExpansionParams | None = None) -> TesterReport:
    """Reject when some sampled start node yields too many pairwise endpoint collisions."""
    p = params or ExpansionParams.build(g, upsilon, eps, mu, mode)
    ledger = CostLedger(d=g.d)
    trials = []
    verdict = "accept"
    full = p.gr_walks * (p.gr_walks - 1) // 2
    for _ in range(p.trials):
        s = random_node(g, rng)
        coll = collision_count(run_walks(g, s, p.t, p.gr_walks, rng, ledger))
        trials.append({"node": s, "collisions": coll, "threshold": p.gr_threshold})
        # all endpoints equal: the threshold exceeds C(m, 2) when N = 1, and under a
        # uniform endpoint law this has probability N^(1-m)
        if coll > p.gr_threshold or coll == full:
            verdict = "reject"
            break
    return TesterReport(verdict, trials, p.to_json(), p.mode, ledger.snapshot())


def oracle_power(g: Graph, s: int, t: int) -> np.ndarray:
    return exact_power_apply(_forwarder(g).engine.D, t, as_vector(g.n, s))
