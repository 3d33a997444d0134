"""Deterministic envelopes for the expansion coefficients and their probability bounds.

``gamma_1 = |w1| + |w2|`` and, for ``n >= 2``,
``gamma_n(t) = int_0^t |K(t, s)| sum_j gamma_j(s) gamma_{n-j}(s) ds``.
With ``D = sqrt(2/pi) (||w1||_2 + ||w2||_2)`` on ``[0, T]``:

* ``P(|x_n| <= gamma_n / sigma**n on [0, T]) >= 1 - sigma 2**max(n-2, 0) D``
* ``P(|X_n - x0| <= Gamma_n on [0, T]) >= 1 - sigma 2**max(n-1, 0) D``

where ``Gamma_n`` is the partial sum of the gammas.  The bounds are returned
as computed, even when negative, together with a vacuity flag.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple

import numpy as np

from .lame import FundamentalPair
from .norms import l2_norm
from .stochastic import TimeGrid, truncated_sum

__all__ = [
    "EnsembleTooSmallError",
    "BoundTables",
    "ProbabilityBound",
    "EmpiricalResult",
    "gamma_recursion",
    "doob_constant",
    "doob_probability_bound",
    "truncation_probability_bound",
    "EventCounter",
    "empirical_probability",
    "MIN_ENSEMBLE",
]

MIN_ENSEMBLE = 1000
_SQRT_2_PI = math.sqrt(2.0 / math.pi)


class EnsembleTooSmallError(ValueError):
    pass


def _trapz_weights(k: int, dt: float) -> np.ndarray:
    w = np.full(k + 1, dt)
    w[0] = w[-1] = 0.5 * dt
    return w


@dataclass
class BoundTables:
    """Envelope tables on a grid.

    ``gamma[n - 1]`` holds ``gamma_n`` and ``Gamma[n - 1]`` holds ``Gamma_n``.
    """

    grid: TimeGrid
    gamma: np.ndarray
    Gamma: np.ndarray
    doob_constant: float
    l2_w1: float
    l2_w2: float

    @property
    def order(self) -> int:
        return self.gamma.shape[0]


def doob_constant(pair: FundamentalPair, T: float) -> tuple[float, float, float]:
    """``(D, ||w1||_2, ||w2||_2)`` on ``[0, T]``."""
    s = pair.root_step
    n1, n2 = l2_norm(pair.w1, T, s), l2_norm(pair.w2, T, s)
    return _SQRT_2_PI * (n1 + n2), n1, n2


def gamma_recursion(pair: FundamentalPair, grid: TimeGrid, N: int) -> BoundTables:
    """Envelope tables ``gamma_1 .. gamma_N`` by the trapezoid rule.

    The kernel ``|K(t, s)|`` is evaluated directly, not through the cruder
    product bound ``gamma_1(t) gamma_1(s)``; the cost is O(n_steps**2) per order.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    basis = pair.sample(grid.times)
    w1, w2 = basis.w1, basis.w2
    n = grid.n_steps
    gamma = np.zeros((N, n + 1))
    gamma[0] = np.abs(w1) + np.abs(w2)
    dt = grid.dt
    for order in range(2, N + 1):
        src = sum(gamma[j - 1] * gamma[order - j - 1] for j in range(1, order))
        row = gamma[order - 1]
        for k in range(1, n + 1):
            kern = np.abs(w2[k] * w1[: k + 1] - w1[k] * w2[: k + 1])
            row[k] = np.dot(_trapz_weights(k, dt), kern * src[: k + 1])
    D, n1, n2 = doob_constant(pair, grid.t_end)
    return BoundTables(grid, gamma, np.cumsum(gamma, axis=0), D, n1, n2)


class ProbabilityBound(NamedTuple):
    value: float
    vacuous: bool


def _bound(pair: FundamentalPair, T: float, sigma: float, exponent: int) -> ProbabilityBound:
    if T <= 0.0:
        raise ValueError("T must be positive")
    if sigma < 0.0:
        raise ValueError("sigma must be nonnegative")
    D = doob_constant(pair, T)[0]
    value = 1.0 - sigma * 2.0**exponent * D
    return ProbabilityBound(value, value <= 0.0)


def doob_probability_bound(pair: FundamentalPair, T: float, sigma: float, n: int) -> ProbabilityBound:
    """Lower bound on ``P(|x_n| <= gamma_n / sigma**n on [0, T])``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return _bound(pair, T, sigma, max(n - 2, 0))


def truncation_probability_bound(pair: FundamentalPair, T: float, sigma: float, n: int) -> ProbabilityBound:
    """Lower bound on ``P(|X_n - x0| <= Gamma_n on [0, T])``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return _bound(pair, T, sigma, max(n - 1, 0))


@dataclass
class EmpiricalResult:
    n_paths: int
    coefficient_fraction: float
    truncation_fraction: float
    coefficient_se: float
    truncation_se: float
    implication_violations: int
    tightness_quantiles: dict = field(default_factory=dict)


@dataclass
class EventCounter:
    """Accumulates event counts over batches of coefficient ensembles.

    Counts are additive, so batches may be processed in any order or in
    parallel and merged with :meth:`merge`.
    """

    tables: BoundTables
    sigma: float
    n: int
    n_paths: int = 0
    coefficient_hits: int = 0
    truncation_hits: int = 0
    implication_violations: int = 0
    tightness: list = field(default_factory=list)

    def update(self, coeffs: np.ndarray) -> None:
        """``coeffs`` has shape ``(n_paths, order + 1, n_steps + 1)`` with order >= n."""
        n, s = self.n, self.sigma
        g = self.tables.gamma
        # Per-order events A_i on the whole grid.  The envelopes vanish
        # structurally where the trapezoid sums are empty (t = 0, and t = dt
        # for n >= 3); the exact coefficients vanish there too, so the
        # comparison carries a roundoff floor relative to each path's sup norm.
        rtol = 1e-12
        events = []
        for i in range(1, n + 1):
            thr = g[i - 1] / s**i
            xi = np.abs(coeffs[:, i, :])
            floor = rtol * xi.max(axis=-1, keepdims=True)
            events.append(np.all(xi <= thr * (1 + rtol) + floor, axis=-1))
        a_n = events[-1]
        dev = np.abs(truncated_sum(coeffs[:, : n + 1, :], s, n) - coeffs[:, 0, :])
        trunc = np.all(dev <= self.tables.Gamma[n - 1] * (1 + rtol) + 1e-12 * np.abs(coeffs[:, 0, :]), axis=-1)
        if n >= 2:
            prior = np.logical_and.reduce(events[:-1])
            self.implication_violations += int(np.sum(prior & ~a_n))
        live = g[n - 1] > 0.0
        ratio = np.abs(coeffs[:, n, live]) * s**n / g[n - 1, live]
        self.tightness.extend(ratio.max(axis=-1).tolist())
        self.n_paths += coeffs.shape[0]
        self.coefficient_hits += int(np.sum(a_n))
        self.truncation_hits += int(np.sum(trunc))

    def merge(self, other: "EventCounter") -> "EventCounter":
        return EventCounter(
            self.tables,
            self.sigma,
            self.n,
            self.n_paths + other.n_paths,
            self.coefficient_hits + other.coefficient_hits,
            self.truncation_hits + other.truncation_hits,
            self.implication_violations + other.implication_violations,
            self.tightness + other.tightness,
        )

    def result(self) -> EmpiricalResult:
        if self.n_paths < MIN_ENSEMBLE:
            raise EnsembleTooSmallError(f"need at least {MIN_ENSEMBLE} paths, got {self.n_paths}")
        N = self.n_paths
        pc, pt = self.coefficient_hits / N, self.truncation_hits / N
        q = np.quantile(self.tightness, [0.5, 0.9, 0.99, 1.0]) if self.tightness else []
        return EmpiricalResult(
            n_paths=N,
            coefficient_fraction=pc,
            truncation_fraction=pt,
            coefficient_se=math.sqrt(pc * (1 - pc) / N),
            truncation_se=math.sqrt(pt * (1 - pt) / N),
            implication_violations=self.implication_violations,
            tightness_quantiles=dict(zip(["q50", "q90", "q99", "max"], map(float, q), strict=True)),
        )


def empirical_probability(
    coeff_ensemble: np.ndarray | Iterable[np.ndarray], bound_tables: BoundTables, sigma: float, n: int
) -> EmpiricalResult:
    """Fractions of paths inside the coefficient and truncation envelopes.

    Args:
        coeff_ensemble: Array ``(n_paths, order + 1, n_steps + 1)`` or an
            iterable of such batches.
        bound_tables: Envelopes from :func:`gamma_recursion` on the same grid.
        sigma: Noise level.
        n: Order checked, ``1 <= n <= bound_tables.order``.

    Raises:
        EnsembleTooSmallError: Fewer than ``MIN_ENSEMBLE`` realisations.
    """
    if not 1 <= n <= bound_tables.order:
        raise ValueError(f"n must be in 1..{bound_tables.order}")
    counter = EventCounter(bound_tables, sigma, n)
    batches = [coeff_ensemble] if isinstance(coeff_ensemble, np.ndarray) else coeff_ensemble
    for batch in batches:
        counter.update(batch)
    return counter.result()
