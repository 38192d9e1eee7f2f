"""Two-family Markov switching models and their common filter form.

Family A: two hidden states, per-state AR(1) observation law

    Y_t = mu_j + psi_j * Y_{t-1} + sigma_j * eps_t   when X_t = j,

parameterized by (p00, p11, mu, psi, sigma) with p00 = P(X_t=0 | X_{t-1}=0).

Family B: two hidden states, shared AR coefficient, the mean loads on both
the current and the previous hidden state

    Y_t = psi1 * mu_{X_t} + psi2 * mu_{X_{t-1}} + phi * Y_{t-1} + sigma * eps_t,

parameterized by (p01, p10, mu, phi, psi1, psi2, sigma). Because the emission
mean depends on the state pair (X_{t-1}, X_t), family B is handled everywhere
through its first-order lift onto the four pair states
(0,0), (0,1), (1,0), (1,1).

Both families (and the four-state lift) reduce to one shape: a finite hidden
chain whose state j emits Y | Y_prev ~ N(c_j + b_j * Y_prev, s_j^2). That
shape is `LinearGaussianChain`; the filter, samplers, and likelihood engines
only ever see it, so they work for general d.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtri

_SQRT_2PI = math.sqrt(2.0 * math.pi)
_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class ModelAParams:
    """Per-state AR model: state j emits N(mu[j] + psi[j]*y_prev, sigma[j]^2)."""

    p00: float
    p11: float
    mu: tuple[float, float]
    psi: tuple[float, float]
    sigma: tuple[float, float]


@dataclass(frozen=True)
class ModelBParams:
    """Shared-coefficient two-lag-mean model.

    Parameter order follows the benchmark case tables: (p01, p10, mu, phi,
    psi1, psi2, sigma), with p01 = P(X_t=1 | X_{t-1}=0). The first two
    entries are the off-diagonal transition probabilities, not the diagonal
    ones; the reproduced reference tables confirm this reading.
    """

    p01: float
    p10: float
    mu: tuple[float, float]
    phi: float
    psi1: float
    psi2: float
    sigma: float


@dataclass(frozen=True)
class TransitionMatrix:
    """Row-stochastic transition matrix over d hidden states."""

    entries: np.ndarray

    def __post_init__(self):
        entries = np.asarray(self.entries, dtype=float)
        object.__setattr__(self, "entries", entries)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise ValueError(f"transition matrix must be square, got {entries.shape}")
        if np.any(entries < 0.0) or np.any(entries > 1.0):
            raise ValueError("transition probabilities must lie in [0, 1]")
        rowsum = entries.sum(axis=1)
        if np.any(np.abs(rowsum - 1.0) > 1e-12):
            raise ValueError(f"rows must sum to 1 within 1e-12, got sums {rowsum}")

    @property
    def d(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True)
class FourStateChain:
    """Family B lifted to the pair states (X_{t-1}, X_t), ordered
    (0,0), (0,1), (1,0), (1,1).

    A pair state (i, j) can only move to (j, k), so rows 1 and 3 (from-states
    ending in 0) are zero in the last two columns and rows 2 and 4 are zero in
    the first two.
    """

    transition: TransitionMatrix
    pi: np.ndarray
    parent: ModelBParams

    def __post_init__(self):
        pi = np.asarray(self.pi, dtype=float)
        object.__setattr__(self, "pi", pi)
        t = self.transition.entries
        if t.shape != (4, 4):
            raise ValueError("four-state chain needs a 4x4 transition matrix")
        zero_pattern = np.array(
            [[0, 0, 1, 1], [1, 1, 0, 0], [0, 0, 1, 1], [1, 1, 0, 0]], dtype=bool
        )
        if np.any(t[zero_pattern] != 0.0):
            raise ValueError("pair-state transition matrix violates its zero pattern")
        if np.any(pi < 0.0) or abs(pi.sum() - 1.0) > 1e-12:
            raise ValueError("pi must be a probability vector (sum 1 within 1e-12)")
        if np.max(np.abs(pi @ t - pi)) > 1e-10:
            raise ValueError("pi is not stationary for the transition matrix")


@dataclass(frozen=True)
class LinearGaussianChain:
    """Common filter form: hidden chain with linear-Gaussian emissions.

    State j emits Y | Y_prev ~ N(c[j] + b[j] * Y_prev, s[j]^2). `pi` is the
    chain's initial (stationary, for the model families) distribution.
    """

    pi: np.ndarray
    transition: np.ndarray
    c: np.ndarray
    b: np.ndarray
    s: np.ndarray

    def __post_init__(self):
        for name in ("pi", "transition", "c", "b", "s"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        d = self.pi.shape[0]
        if self.transition.shape != (d, d):
            raise ValueError("transition shape must match pi length")
        if not (self.c.shape == self.b.shape == self.s.shape == (d,)):
            raise ValueError("emission parameter vectors must have length d")
        if np.any(self.s <= 0.0):
            raise ValueError("emission standard deviations must be positive")

    @property
    def d(self) -> int:
        return self.pi.shape[0]

    def emission_log_pdf(self, y, y_prev):
        """Log emission densities, one per state; broadcasts over y/y_prev."""
        y = np.asarray(y, dtype=float)[..., None]
        y_prev = np.asarray(y_prev, dtype=float)[..., None]
        z = (y - self.c - self.b * y_prev) / self.s
        return -0.5 * z * z - np.log(self.s * _SQRT_2PI)

    def emission_pdf(self, y, y_prev):
        return np.exp(self.emission_log_pdf(y, y_prev))


@dataclass(frozen=True)
class PathSample:
    """A sampled observation path with the hidden states that produced it.

    `y_prev` is the observation immediately preceding y[0] (the last burn-in
    draw, or the 0.0 initializer when burn_in = 0); likelihoods of the path
    condition on it.
    """

    y: np.ndarray
    x: np.ndarray
    seed: int
    burn_in: int
    y_prev: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "y", np.asarray(self.y, dtype=float))
        object.__setattr__(self, "x", np.asarray(self.x, dtype=np.int64))
        if self.y.shape != self.x.shape:
            raise ValueError("y and x must have equal length")


Model = ModelAParams | ModelBParams | LinearGaussianChain


def validate_model(m: Model) -> list[str]:
    """Check parameter constraints; returns a list of violations (empty = ok).

    Report-style on purpose: the CLI wants every violated constraint named,
    not just the first.
    """
    problems: list[str] = []
    if isinstance(m, ModelAParams):
        for name in ("p00", "p11"):
            v = getattr(m, name)
            if not (0.0 < v < 1.0):
                problems.append(f"0 < {name} < 1 required, got {v}")
        for k in (0, 1):
            if not abs(m.psi[k]) < 1.0:
                problems.append(f"|psi[{k}]| < 1 required, got {m.psi[k]}")
            if not m.sigma[k] > 0.0:
                problems.append(f"sigma[{k}] must be positive, got {m.sigma[k]}")
    elif isinstance(m, ModelBParams):
        for name in ("p01", "p10"):
            v = getattr(m, name)
            if not (0.0 < v < 1.0):
                problems.append(f"0 < {name} < 1 required, got {v}")
        if not abs(m.phi) < 1.0:
            problems.append(f"|phi| < 1 required, got {m.phi}")
        if not m.sigma > 0.0:
            problems.append(f"sigma must be positive, got {m.sigma}")
    elif isinstance(m, LinearGaussianChain):
        if np.any(np.abs(m.pi.sum() - 1.0) > 1e-12) or np.any(m.pi < 0):
            problems.append("pi must be a probability vector")
        rowsum = m.transition.sum(axis=1)
        if np.any(np.abs(rowsum - 1.0) > 1e-12):
            problems.append("transition rows must sum to 1")
    else:
        raise TypeError(f"not a model: {type(m).__name__}")
    return problems


def require_valid(m: Model) -> None:
    problems = validate_model(m)
    if problems:
        raise ValueError("invalid model: " + "; ".join(problems))


def transition_matrix(m: ModelAParams | ModelBParams) -> TransitionMatrix:
    """The 2-state transition matrix of either family."""
    if isinstance(m, ModelAParams):
        rows = [[m.p00, 1.0 - m.p00], [1.0 - m.p11, m.p11]]
    else:
        rows = [[1.0 - m.p01, m.p01], [m.p10, 1.0 - m.p10]]
    return TransitionMatrix(np.array(rows))


def stationary_distribution(t: TransitionMatrix, tol: float = 1e-13,
                            max_iters: int = 100000) -> np.ndarray:
    """Stationary probability vector of a row-stochastic matrix.

    Power iteration on the left eigenproblem pi = pi P from the uniform
    vector; all benchmark chains are irreducible and aperiodic so this
    converges geometrically.
    """
    p = t.entries
    pi = np.full(t.d, 1.0 / t.d)
    for _ in range(max_iters):
        nxt = pi @ p
        nxt /= nxt.sum()
        if np.max(np.abs(nxt - pi)) <= tol:
            return nxt
        pi = nxt
    raise RuntimeError(
        f"stationary distribution did not converge in {max_iters} iterations "
        f"(residual {np.max(np.abs(pi @ p - pi)):.3e}); chain may be reducible or periodic"
    )


def lift_four_state(m: ModelBParams) -> FourStateChain:
    """Lift family B onto the pair states (X_{t-1}, X_t).

    The stationary vector is (p00*p10, p01*p10, p10*p01, p11*p01)/(p01+p10):
    the 2-state stationary mass of the from-state times the transition
    probability into the to-state.
    """
    require_valid(m)
    p01, p10 = m.p01, m.p10
    p00, p11 = 1.0 - p01, 1.0 - p10
    t = np.array(
        [
            [p00, p01, 0.0, 0.0],
            [0.0, 0.0, p10, p11],
            [p00, p01, 0.0, 0.0],
            [0.0, 0.0, p10, p11],
        ]
    )
    pi = np.array([p00 * p10, p01 * p10, p10 * p01, p11 * p01]) / (p01 + p10)
    return FourStateChain(TransitionMatrix(t), pi, m)


def emission_density(m: ModelAParams | ModelBParams, i: int, j: int,
                     y: float, y_prev: float) -> float:
    """Emission density f(y | X_{t-1}=i, X_t=j, y_prev).

    Family A ignores the previous state: mean mu[j] + psi[j]*y_prev, sd
    sigma[j]. Family B: mean psi2*mu[i] + psi1*mu[j] + phi*y_prev, shared sd.
    """
    if isinstance(m, ModelAParams):
        mean = m.mu[j] + m.psi[j] * y_prev
        sd = m.sigma[j]
    else:
        mean = m.psi2 * m.mu[i] + m.psi1 * m.mu[j] + m.phi * y_prev
        sd = m.sigma
    z = (y - mean) / sd
    return math.exp(-0.5 * z * z) / (sd * _SQRT_2PI)


def as_chain(m: Model) -> LinearGaussianChain:
    """Reduce any supported model to the common filter form."""
    if isinstance(m, LinearGaussianChain):
        return m
    require_valid(m)
    if isinstance(m, ModelAParams):
        t = transition_matrix(m)
        return LinearGaussianChain(
            pi=stationary_distribution(t),
            transition=t.entries,
            c=np.array(m.mu, dtype=float),
            b=np.array(m.psi, dtype=float),
            s=np.array(m.sigma, dtype=float),
        )
    lift = lift_four_state(m)
    mu = np.asarray(m.mu, dtype=float)
    # pair state order (0,0),(0,1),(1,0),(1,1): intercept psi2*mu_i + psi1*mu_j
    c = np.array([m.psi2 * mu[i] + m.psi1 * mu[j] for i in (0, 1) for j in (0, 1)])
    return LinearGaussianChain(
        pi=lift.pi,
        transition=lift.transition.entries,
        c=c,
        b=np.full(4, m.phi),
        s=np.full(4, m.sigma),
    )


def mix_seed(seed: int, r: int) -> int:
    """Derive the seed for replicate r (splitmix64 finalizer over seed + r)."""
    z = (int(seed) + (r + 1) * 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def _standard_normals(rng: np.random.Generator, size: int) -> np.ndarray:
    # inverse-CDF transform of the uniform stream: documented and stable
    # across numpy versions, unlike the ziggurat sampler
    u = rng.random(size)
    eps = 2.0 ** -53
    return ndtri(np.clip(u, eps, 1.0 - eps))


def sample_path(m: Model, n: int, burn_in: int = 100, seed: int = 0) -> PathSample:
    """Sample n observations after burn_in discarded steps.

    The chain starts from its stationary distribution, Y is initialized at 0,
    and the recorded hidden states are the model's primitive states (for
    family B the current X_t, not the pair state). Deterministic in
    (m, n, burn_in, seed).
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    chain = as_chain(m)
    rng = np.random.Generator(np.random.PCG64(seed))
    total = burn_in + n
    u_state = rng.random(total + 1)
    eps = _standard_normals(rng, total)
    cum = np.cumsum(chain.transition, axis=1)
    cum_pi = np.cumsum(chain.pi)

    z = int(np.searchsorted(cum_pi, u_state[0], side="right"))
    z = min(z, chain.d - 1)
    states = np.empty(total, dtype=np.int64)
    ys = np.empty(total, dtype=float)
    y = 0.0
    c, b, s = chain.c, chain.b, chain.s
    for t in range(total):
        z = int(np.searchsorted(cum[z], u_state[t + 1], side="right"))
        z = min(z, chain.d - 1)
        states[t] = z
        y = c[z] + b[z] * y + s[z] * eps[t]
        ys[t] = y

    y_prev = float(ys[burn_in - 1]) if burn_in > 0 else 0.0
    x = states[burn_in:]
    if isinstance(m, ModelBParams):
        x = x % 2  # pair state (i, j) -> current state j
    return PathSample(y=ys[burn_in:], x=x, seed=seed, burn_in=burn_in, y_prev=y_prev)
