"""Amplitude amplification, fixed-point amplification, amplitude estimation, SWAP test.

Everything acts on an ``AmplitudeProblem``: a preparation unitary A with inverse, an
initial state |init>, and a target projector. The amplitude of interest is
||Pi A|init>||.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .walk import CostLedger

DENSE_SWAP_MAX_DIM = 1024
FEJER_WINDOW = 1 << 16


@dataclass
class AmplitudeProblem:
    prepare: Callable[[np.ndarray], np.ndarray]
    unprepare: Callable[[np.ndarray], np.ndarray]
    project: Callable[[np.ndarray], np.ndarray]
    initial: np.ndarray
    cost: int = 0  # QW steps per application of prepare or unprepare
    ledger: CostLedger | None = None

    def charge(self, preps: int = 0, reflections: int = 0) -> None:
        if self.ledger is not None:
            self.ledger.qw_steps += preps * self.cost
            self.ledger.initial_reflections += reflections

    def reflect_initial(self, x: np.ndarray) -> np.ndarray:
        """2|init><init| - I."""
        return 2.0 * self.initial * np.vdot(self.initial, x) - x

    def reflect_target(self, x: np.ndarray) -> np.ndarray:
        return 2.0 * self.project(x) - x


def matrix_problem(A: np.ndarray, target: np.ndarray,
                   initial: np.ndarray | None = None, ledger=None, cost: int = 1) -> AmplitudeProblem:
    """Problem from a dense unitary and a boolean mask of target basis states."""
    A = np.asarray(A, dtype=complex)
    mask = np.asarray(target, dtype=bool)
    if initial is None:
        initial = np.zeros(A.shape[0], dtype=complex)
        initial[0] = 1.0

    def project(x):
        out = np.zeros_like(x)
        out[mask] = x[mask]
        return out

    Ad = A.conj().T
    return AmplitudeProblem(lambda x: A @ x, lambda x: Ad @ x, project,
                            np.asarray(initial, dtype=complex), cost, ledger)


def rotation_problem(amplitude: float, ledger=None, cost: int = 1) -> AmplitudeProblem:
    """Two-level problem with A|0> = sqrt(1 - a^2)|0> + a|1> and target |1>."""
    a = float(amplitude)
    if not 0 <= a <= 1:
        raise ValueError("amplitude must lie in [0, 1]")
    b = math.sqrt(max(0.0, 1 - a * a))
    A = np.array([[b, -a], [a, b]])
    return matrix_problem(A, [False, True], ledger=ledger, cost=cost)


# -------------------------------------------------------------- amplification


@dataclass(frozen=True)
class AmplificationPlan:
    theta: float
    m: int


def grover_angle(state: np.ndarray, project: Callable[[np.ndarray], np.ndarray]) -> float:
    """theta with sin(theta) = ||Pi state||."""
    a = float(np.linalg.norm(project(state)))
    if a <= 0.0:
        raise ValueError("state has zero overlap with the target subspace")
    return math.asin(min(a, 1.0))


def plan_amplification(theta: float) -> AmplificationPlan:
    return AmplificationPlan(theta, int(math.floor(math.pi / (4 * theta) + 1e-12)))


def grover_iterate(problem: AmplitudeProblem, x: np.ndarray) -> np.ndarray:
    """-R_psi R_target with R_psi = A R_init A^dag. Charges 2 preparations, 1 reflection."""
    y = problem.reflect_target(x)
    y = problem.prepare(problem.reflect_initial(problem.unprepare(y)))
    problem.charge(preps=2, reflections=1)
    return -y


@dataclass
class AmplifyOutcome:
    success: bool
    output: np.ndarray | None  # renormalized target component on success
    probability: float
    state: np.ndarray  # pre-measurement state
    m: int


def amplify_state(problem: AmplitudeProblem, m: int) -> np.ndarray:
    """(-R_psi R_target)^m A|init>, charging the initial preparation as well."""
    x = problem.prepare(problem.initial)
    problem.charge(preps=1)
    for _ in range(m):
        x = grover_iterate(problem, x)
    return x


def measure_target(problem: AmplitudeProblem, x: np.ndarray, rng: np.random.Generator):
    part = problem.project(x)
    prob = min(float(np.vdot(part, part).real), 1.0)
    if prob > 0 and rng.random() < prob:
        return True, part / math.sqrt(prob), prob
    return False, None, prob


def amplitude_amplify(problem: AmplitudeProblem, m: int, rng: np.random.Generator) -> AmplifyOutcome:
    x = amplify_state(problem, m)
    ok, out, prob = measure_target(problem, x, rng)
    return AmplifyOutcome(ok, out, prob, x, m)


def amplify_exponential_guess(problem: AmplitudeProblem, rng: np.random.Generator,
                              max_rounds: int = 32) -> AmplifyOutcome:
    """Unknown-angle amplification: round k draws j uniformly from [0, 2^k) and runs j iterations."""
    last = None
    for k in range(max_rounds):
        j = int(rng.integers(1 << k))
        last = amplitude_amplify(problem, j, rng)
        if last.success:
            return last
    return last


# ------------------------------------------------------ fixed-point amplification


def chebyshev_T(n: float, z):
    """T_n(z) for real order n, continued outside [-1, 1] through cosh."""
    z = np.asarray(z, dtype=float)
    inside = np.abs(z) <= 1
    out = np.empty_like(z)
    out[inside] = np.cos(n * np.arccos(z[inside]))
    za = np.abs(z[~inside])
    out[~inside] = np.cosh(n * np.arccosh(za)) * np.sign(z[~inside]) ** n
    return out if out.ndim else float(out)


def fixed_point_length(amplitude: float, delta: float) -> int:
    """Smallest odd L with L >= ln(2/delta)/amplitude."""
    if not 0 < amplitude <= 1:
        raise ValueError("amplitude must lie in (0, 1]")
    L = math.ceil(math.log(2 / delta) / amplitude - 1e-12)
    return max(1, L + 1 - L % 2)


def fixed_point_phases(L: int, delta: float):
    """Phase pairs (alpha_j, beta_j), j = 1..(L-1)/2, with beta_{l-j+1} = -alpha_j."""
    if L < 1 or L % 2 != 1:
        raise ValueError("L must be a positive odd integer")
    l = (L - 1) // 2
    gamma = 1.0 / chebyshev_T(1.0 / L, 1.0 / delta)
    s = math.sqrt(max(0.0, 1.0 - gamma * gamma))
    j = np.arange(1, l + 1)
    alphas = 2.0 * np.arctan2(1.0, np.tan(2.0 * np.pi * j / L) * s)
    return alphas, -alphas[::-1]


def fixed_point_final_probability(amplitude: float, L: int, delta: float) -> float:
    """Closed form 1 - delta^2 T_L(T_{1/L}(1/delta) sqrt(1 - a^2))^2."""
    x = chebyshev_T(1.0 / L, 1.0 / delta) * math.sqrt(max(0.0, 1 - amplitude**2))
    return 1.0 - delta**2 * float(chebyshev_T(L, x)) ** 2


@dataclass(frozen=True)
class FixedPointPlan:
    L: int
    delta: float
    alphas: np.ndarray
    betas: np.ndarray


@dataclass
class FixedPointResult:
    state: np.ndarray
    overlap: float  # |<psi_target|U_L|psi>|^2
    amplitude: float
    plan: FixedPointPlan
    below_threshold: bool


def _apply_phased(problem, psi, plan):
    x = psi.copy()
    for a, b in zip(plan.alphas, plan.betas):
        x = x + (np.exp(1j * b) - 1.0) * problem.project(x)
        y = problem.unprepare(x)
        y = y - (1.0 - np.exp(-1j * a)) * problem.initial * np.vdot(problem.initial, y)
        x = -problem.prepare(y)
    return x


def _apply_ideal(psi, target_unit, amplitude, plan):
    # exact evolution inside span{psi, psi_target}
    if amplitude >= 1.0 - 1e-15:
        return psi.copy()
    perp = psi - amplitude * target_unit
    perp = perp / np.linalg.norm(perp)
    v = np.array([math.sqrt(max(0.0, 1 - amplitude**2)), amplitude], dtype=complex)
    s = v.copy()
    for a, b in zip(plan.alphas, plan.betas):
        St = np.diag([1.0, np.exp(1j * b)])
        Ss = np.eye(2) - (1.0 - np.exp(-1j * a)) * np.outer(s, s.conj())
        v = -(Ss @ (St @ v))
    return v[0] * perp + v[1] * target_unit


def fixed_point_amplify(problem: AmplitudeProblem, L: int, delta: float,
                        mode: str = "phased", warn: bool = True,
                        psi: np.ndarray | None = None) -> FixedPointResult:
    """U_L A|init> with the Chebyshev phase schedule.

    Uses L applications of A or A^dag (one initial, two per phase pair) and
    (L-1)/2 phased reflections about |init>, in either mode. ``psi`` may carry a
    precomputed A|init>; the initial preparation is charged either way.
    """
    if mode not in ("phased", "ideal"):
        raise ValueError("mode must be 'phased' or 'ideal'")
    psi = problem.prepare(problem.initial) if psi is None else psi
    problem.charge(preps=1)
    target = problem.project(psi)
    amp = float(np.linalg.norm(target))
    if amp <= 0:
        raise ValueError("state has zero overlap with the target subspace")
    alphas, betas = fixed_point_phases(L, delta)
    plan = FixedPointPlan(L, delta, alphas, betas)
    below = L < math.log(2 / delta) / amp - 1e-9
    if below and warn:
        warnings.warn(f"L={L} below the guarantee threshold for amplitude {amp:.4g}", stacklevel=2)
    target_unit = target / amp
    if mode == "phased":
        out = _apply_phased(problem, psi, plan)
    else:
        out = _apply_ideal(psi, target_unit, amp, plan)
    l = len(alphas)
    problem.charge(preps=2 * l, reflections=l)
    overlap = float(abs(np.vdot(target_unit, out)) ** 2)
    return FixedPointResult(out, overlap, amp, plan, below)


# ------------------------------------------------------- amplitude estimation


@dataclass
class EstimationResult:
    estimate: float
    M: int
    shots: int
    raw: list = field(default_factory=list)
    eps: float = 0.0
    delta: float = 0.0


def ae_grid_size(eps: float) -> int:
    """Even M >= pi/(eps/3). Even M puts amplitude 1 exactly on the grid."""
    e = eps / 3.0
    return 2 * math.ceil(math.pi / (2 * e) - 1e-12)


def ae_shot_count(delta: float) -> int:
    return math.ceil(18 * math.log(1 / delta) - 1e-12)


def _fejer(x: np.ndarray, M: int) -> np.ndarray:
    # sin^2(M pi x) / (M^2 sin^2(pi x)), with value 1 at integer x
    den = np.sin(np.pi * x)
    num = np.sin(M * np.pi * x)
    out = np.ones_like(x)
    nz = np.abs(den) > 1e-300
    close = np.abs(x - np.round(x)) < 1e-14
    ok = nz & ~close
    out[ok] = (num[ok] / (M * den[ok])) ** 2
    return out


def ae_kernel_pmf(amplitude: float, M: int) -> np.ndarray:
    """Outcome law of canonical estimation with M grid points.

    With omega = arcsin(a)/pi the phase register reads y with probability
    F(y/M - omega)/2 + F(y/M + omega)/2, F the Fejer kernel above.
    """
    omega = math.asin(min(max(amplitude, 0.0), 1.0)) / math.pi
    y = np.arange(M) / M
    return 0.5 * _fejer(y - omega, M) + 0.5 * _fejer(y + omega, M)


def _branch_sampler(center: float, M: int, window: int):
    """Sampler for y = round-toward-center offsets of one Fejer branch centred at ``center``."""
    c0 = math.floor(center)
    f = center - c0
    if f < 1e-15:
        return lambda size, rng: np.full(size, c0 % M, dtype=np.int64)
    kmin = math.floor(f - M / 2) + 1
    kmax = kmin + M - 1
    s2 = math.sin(math.pi * f) ** 2
    lo, hi = max(kmin, -window), min(kmax, window)
    ks = np.arange(lo, hi + 1)
    pk = s2 / (M * M * np.sin(np.pi * (ks - f) / M) ** 2)
    wmass = float(pk.sum())
    tail = max(0.0, 1.0 - wmass)
    if lo == kmin and hi == kmax:
        tail = 0.0
    pk = pk / pk.sum()

    def draw_tail(rng):
        while True:
            j = math.floor(window / (1.0 - rng.random()))
            k = (j + 1) if rng.random() < 0.5 else -(j + 1)
            if k < kmin or k > kmax:
                continue
            p = s2 / (M * M * math.sin(math.pi * (k - f) / M) ** 2)
            if rng.random() < 2.0 * p * j * (j + 1) / s2:
                return k

    def sample(size, rng):
        k = rng.choice(ks, size=size, p=pk)
        if tail > 0:
            in_tail = rng.random(size) < tail
            for i in np.flatnonzero(in_tail):
                k[i] = draw_tail(rng)
        return (c0 + k) % M

    return sample


def sample_ae_outcomes(amplitude: float, M: int, size: int, rng: np.random.Generator,
                       window: int = FEJER_WINDOW) -> np.ndarray:
    """Draw ``size`` phase-register readings y in [0, M)."""
    omega = math.asin(min(max(amplitude, 0.0), 1.0)) / math.pi
    if M <= 2 * window + 1:
        return rng.choice(M, size=size, p=_normalized(ae_kernel_pmf(amplitude, M)))
    plus = _branch_sampler(omega * M, M, window)
    minus = _branch_sampler(-omega * M, M, window)
    branch = rng.random(size) < 0.5
    out = np.empty(size, dtype=np.int64)
    nb = int(branch.sum())
    out[branch] = plus(nb, rng)
    out[~branch] = minus(size - nb, rng)
    return out


def _normalized(p):
    return p / p.sum()


def estimate_amplitude(amplitude: float, eps: float, delta: float, rng: np.random.Generator,
                       ledger: CostLedger | None = None, prep_cost: int = 0) -> EstimationResult:
    """Median of T shots, each reading sin(pi y / M)."""
    if not (0 < eps < 1 and 0 < delta < 1):
        raise ValueError("eps and delta must lie in (0, 1)")
    M = ae_grid_size(eps)
    T = ae_shot_count(delta)
    ys = sample_ae_outcomes(amplitude, M, T, rng)
    shots = np.sin(np.pi * ys / M)
    est = float(np.clip(np.median(shots), 0.0, 1.0))
    if ledger is not None:
        ledger.qw_steps += T * (2 * M + 1) * prep_cost
        ledger.initial_reflections += T * M
    return EstimationResult(est, M, T, shots.tolist(), eps, delta)


def amplitude_estimate(state: np.ndarray, project: Callable[[np.ndarray], np.ndarray], eps: float,
                       delta: float, rng: np.random.Generator, ledger=None,
                       prep_cost: int = 0) -> EstimationResult:
    """Estimate ||Pi state|| from the simulated state."""
    a = float(np.linalg.norm(project(state)))
    return estimate_amplitude(min(a, 1.0), eps, delta, rng, ledger, prep_cost)


# ------------------------------------------------------------------ SWAP test


@dataclass
class SwapTestState:
    """Joint state after the conditional-swap circuit, dense with shape (2, dim, dim)."""

    amplitudes: np.ndarray

    def one_component(self) -> np.ndarray:
        return self.amplitudes[1]

    def one_norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes[1]))


@dataclass
class ImplicitSwapState:
    """Same joint state, kept as its two factors; only the ancilla-one norm is exposed."""

    psi_u: np.ndarray
    psi_v: np.ndarray

    def one_norm(self) -> float:
        ov = abs(np.vdot(self.psi_u.ravel(), self.psi_v.ravel())) ** 2
        return math.sqrt(max(0.0, (1.0 - ov) / 2.0))


def swap_test_state(psi_u: np.ndarray, psi_v: np.ndarray, dense: bool | None = None):
    """H, controlled swap, H on |0>|psi_u>|psi_v>. Ancilla |1> has squared norm (1-|<u|v>|^2)/2."""
    u = np.asarray(psi_u).ravel()
    v = np.asarray(psi_v).ravel()
    if u.shape != v.shape:
        raise ValueError(f"dimension mismatch {u.shape} vs {v.shape}")
    if dense is None:
        dense = u.size <= DENSE_SWAP_MAX_DIM
    if not dense:
        return ImplicitSwapState(u, v)
    joint = np.zeros((2, u.size, u.size), dtype=complex)
    joint[0] = np.outer(u, v)
    h = 1 / math.sqrt(2)
    joint = np.stack([h * (joint[0] + joint[1]), h * (joint[0] - joint[1])])
    joint[1] = joint[1].T
    joint = np.stack([h * (joint[0] + joint[1]), h * (joint[0] - joint[1])])
    return SwapTestState(joint)
