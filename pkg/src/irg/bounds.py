"""Analytic bounds for G(n, K) and exact connectivity oracles.

Every bound on a probability is clamped to [0, 1]; the raw expressions exceed 1
whenever they are vacuous.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

import mpmath
import numpy as np

from .errors import IRGInputError
from .kernel import Kernel, _resolve_space, evaluation_grid, lambda_
from .sampler import density_scale
from .space import FiniteWeighted, Space

GILBERT_MAX_N = 400
_GILBERT_DPS = 60


def _clamp01(v: float) -> float:
    if math.isnan(v):
        raise IRGInputError("bound evaluated to NaN")
    return min(1.0, max(0.0, v))


def _pow(base: float, exponent: int) -> float:
    # base**exponent without overflow, for base >= 0
    if base <= 0.0:
        return 0.0
    log = exponent * math.log(base)
    return math.inf if log > 700 else math.exp(log)


@dataclass(frozen=True)
class BoundInputs:
    n: int
    k: int
    lambda_star: float
    lambda2_sup: float

    def __post_init__(self):
        if not 1 <= self.k < self.n:
            raise IRGInputError(f"need 1 <= k < n, got k={self.k}, n={self.n}")
        if not (self.lambda_star >= 0 and self.lambda2_sup >= 0):
            raise IRGInputError("lambda* and ||lambda_2|| must be nonnegative")

    @property
    def p_n(self) -> float:
        return density_scale(self.n)


@dataclass(frozen=True)
class IsolatedBound:
    value: float
    region_measure: float
    diagnostic: str = ""


def isolated_expectation_lower_bound(
    kernel: Kernel, n: int, region_threshold: float, space: Space | None = None, grid_size: int = 4096
) -> IsolatedBound:
    """n * int_B (1 - lambda(x) p_n)_+^(n-1) dmu(x) with B = {lambda < threshold}; E[N_B] is at least this.

    Exact on finite spaces. On continuous spaces the integral is a midpoint rule over
    ``grid_size`` points plus the kernel's x-breakpoints.
    """
    space = _resolve_space(kernel, space)
    p_n = density_scale(n)

    def term(lam: float) -> float:
        base = 1.0 - lam * p_n
        return 0.0 if base <= 0.0 else math.exp((n - 1) * math.log1p(-lam * p_n))

    if isinstance(space, FiniteWeighted):
        pairs = [(w, lambda_(kernel, i, space)) for i, w in enumerate(space.weights) if w > 0]
    else:
        xs = evaluation_grid(kernel, grid_size)
        cuts = np.concatenate([[0.0], (xs[1:] + xs[:-1]) / 2.0, [1.0]])
        pairs = [(float(w), lambda_(kernel, float(x), space)) for x, w in zip(xs, np.diff(cuts))]
    inside = [(w, lam) for w, lam in pairs if lam < region_threshold]
    measure = math.fsum(w for w, _ in inside)
    if not inside:
        return IsolatedBound(0.0, 0.0, f"region {{lambda < {region_threshold}}} is empty")
    return IsolatedBound(n * math.fsum(w * term(lam) for w, lam in inside), measure)


def cut_bound_small_k(inputs: BoundInputs) -> float:
    """(1 - lambda* k p_n + ||lambda_2||^2 k^2 p_n^2 / 2)^(n-k), clamped to [0, 1]."""
    n, k, p = inputs.n, inputs.k, inputs.p_n
    base = 1.0 - inputs.lambda_star * k * p + inputs.lambda2_sup**2 * k * k * p * p / 2.0
    return _clamp01(_pow(base, n - k))


def cut_bound_large_k(inputs: BoundInputs) -> float:
    """exp(-p_n lambda* k (n-k) / 2) + k exp(-n lambda*^2 / (16 ||lambda_2||^2)), for k <= n/2."""
    n, k, p = inputs.n, inputs.k, inputs.p_n
    lam, lam2 = inputs.lambda_star, inputs.lambda2_sup
    if 2 * k > n:
        raise IRGInputError(f"large-k bound needs k <= n/2, got k={k}, n={n}")
    if lam2 == 0 and lam > 0:
        raise IRGInputError("||lambda_2|| = 0 with lambda* > 0 is inconsistent")
    first = math.exp(-p * lam * k * (n - k) / 2.0)
    second = k * (1.0 if lam == 0 else math.exp(-n * lam**2 / (16.0 * lam2**2)))
    return _clamp01(first + second)


def _rho_log(rho: float) -> float:
    return rho - rho * math.log(rho)


def solve_delta(threshold: float, tol: float = 1e-13) -> float:
    """max{rho in (0, 1/2] : rho - rho ln rho <= threshold}, by bisection; 1/2 once threshold >= f(1/2)."""
    if not threshold > 0:
        raise IRGInputError("threshold must be positive")
    if threshold >= _rho_log(0.5):
        return 0.5
    lo, hi = 0.0, 0.5
    while hi - lo > tol:
        mid = (lo + hi) / 2.0
        if _rho_log(mid) <= threshold:
            lo = mid
        else:
            hi = mid
    return lo


def min_component_fraction(lambda_star: float, lambda2_sup: float, tol: float = 1e-13) -> float:
    """delta for threshold lambda*^2 / (32 ||lambda_2||^2)."""
    if not lambda_star > 0:
        raise IRGInputError("delta needs lambda* > 0")
    if not math.isfinite(lambda2_sup) or lambda2_sup < lambda_star:
        raise IRGInputError("delta needs lambda* <= ||lambda_2|| < inf")
    return solve_delta(lambda_star**2 / (32.0 * lambda2_sup**2), tol)


def chernoff_rate(t: float) -> float:
    """f(t) = t ln t - t + 1, the binomial Chernoff exponent."""
    if not t > 0:
        raise IRGInputError("chernoff_rate needs t > 0")
    return t * math.log(t) - t + 1.0


# ---------------------------------------------------------------- exact oracles


@lru_cache(maxsize=64)
def _gilbert_table(p: float, n_max: int) -> tuple[float, ...]:
    with mpmath.workdps(_GILBERT_DPS):
        q = 1 - mpmath.mpf(p)
        table = [mpmath.mpf(0), mpmath.mpf(1)]
        for m in range(2, n_max + 1):
            s = mpmath.fsum(math.comb(m - 1, k - 1) * table[k] * q ** (k * (m - k)) for k in range(1, m))
            table.append(1 - s)
        return tuple(float(v) for v in table)


def gilbert_connectivity_exact(n: int, p: float) -> float:
    """Pr[G(n, p) connected] by P(n) = 1 - sum_k C(n-1, k-1) P(k) (1-p)^(k(n-k)), at 60 digits."""
    if not 1 <= n <= GILBERT_MAX_N:
        raise IRGInputError(f"gilbert oracle supports 1 <= n <= {GILBERT_MAX_N}, got {n}")
    if not 0.0 <= p <= 1.0:
        raise IRGInputError(f"p must lie in [0, 1], got {p}")
    return _gilbert_table(float(p), n)[n]


@lru_cache(maxsize=8)
def _connected_subsets(n: int) -> tuple[np.ndarray, np.ndarray]:
    """(bit matrix of all edge subsets of K_n, mask of the connected ones)."""
    pairs = list(itertools.combinations(range(n), 2))
    e = len(pairs)
    codes = np.arange(1 << e, dtype=np.int64)
    bits = ((codes[:, None] >> np.arange(e)) & 1).astype(bool)
    connected = np.zeros(1 << e, dtype=bool)
    for code in range(1 << e):
        adj = [0] * n
        for t, (a, b) in enumerate(pairs):
            if code >> t & 1:
                adj[a] |= 1 << b
                adj[b] |= 1 << a
        seen, frontier = 1, 1
        while frontier:
            nxt = 0
            for v in range(n):
                if frontier >> v & 1:
                    nxt |= adj[v]
            frontier = nxt & ~seen
            seen |= nxt
        connected[code] = seen == (1 << n) - 1
    return bits, connected


def exact_connectivity_finite(space: FiniteWeighted, kernel: Kernel, n: int) -> float:
    """Pr[G(n, K) connected] by brute force over all type assignments and edge subsets."""
    if not isinstance(space, FiniteWeighted):
        raise IRGInputError("exact oracle needs a finite space")
    kernel.check_space(space)
    if not 1 <= n <= 6 or space.size > 3:
        raise IRGInputError(f"exact oracle supports n <= 6 and at most 3 atoms, got n={n}, M={space.size}")
    if n == 1:
        return 1.0
    from .kernel import evaluate

    p_n = density_scale(n)
    bits, connected = _connected_subsets(n)
    pairs = list(itertools.combinations(range(n), 2))
    total = []
    for types in itertools.product(range(space.size), repeat=n):
        weight = math.prod(space.weights[t] for t in types)
        if weight == 0:
            continue
        p = np.array([min(1.0, evaluate(kernel, types[a], types[b], space) * p_n) for a, b in pairs])
        probs = np.where(bits[connected], p, 1.0 - p).prod(axis=1)
        total.append(weight * math.fsum(probs))
    return math.fsum(total)

