"""Brownian paths and the coefficients of the small-noise expansion.

The expansion ``x = x0 + sigma x1 + sigma**2 x2 + ...`` is built on a single
uniform grid shared by every coefficient.  With the kernel
``K(t, s) = w2(t) w1(s) - w1(t) w2(s)``:

* ``x1(t) = int_0^t K(t, s) dB(s)`` is evaluated with left-point (Ito) sums,
  and alternatively as ``-int_0^t d_s K(t, s) B(s) ds`` by the trapezoid rule;
* ``xn(t) = int_0^t K(t, s) S_n(s) ds`` with ``S_n = sum_j x_j x_{n-j}`` uses
  the trapezoid rule.

Both representations factor as ``w2(t) I1(t) - w1(t) I2(t)`` with cumulative
sums ``I1, I2``, so each order costs O(n_steps) per path.  Every function here
accepts noise arrays with arbitrary leading batch dimensions.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Literal, Sequence

import numpy as np

from .lame import FundamentalPair, SampledPair, x0

__all__ = [
    "GridMismatchError",
    "TimeGrid",
    "BrownianPath",
    "CoefficientPaths",
    "sample_brownian",
    "sample_increments",
    "x1_path",
    "x1_path_ibp",
    "x1_velocity",
    "xn_path",
    "multiplicative_x1_path",
    "multiplicative_xn_path",
    "expand",
    "expand_batch",
    "truncated_sum",
    "write_paths_csv",
    "write_metadata",
]

NoiseMode = Literal["additive", "multiplicative"]


class GridMismatchError(ValueError):
    """Raised when arrays sampled on different grids are combined."""


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid ``0, dt, ..., t_end`` with ``n_steps`` intervals."""

    t_end: float
    n_steps: int

    def __post_init__(self) -> None:
        if self.n_steps < 1:
            raise ValueError("n_steps must be >= 1")
        if not (self.t_end > 0.0 and math.isfinite(self.t_end)):
            raise ValueError("t_end must be positive and finite")

    @classmethod
    def from_dt(cls, t_end: float, dt: float) -> "TimeGrid":
        return cls(t_end=float(t_end), n_steps=max(1, int(round(t_end / dt))))

    @property
    def dt(self) -> float:
        return self.t_end / self.n_steps

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.t_end, self.n_steps + 1)

    def refine(self, factor: int = 2) -> "TimeGrid":
        return TimeGrid(self.t_end, self.n_steps * factor)


@dataclass(frozen=True)
class BrownianPath:
    """One noise realisation: ``increments[k] = B(t_{k+1}) - B(t_k)``."""

    grid: TimeGrid
    increments: np.ndarray

    def __post_init__(self) -> None:
        if self.increments.shape[-1] != self.grid.n_steps:
            raise GridMismatchError("increments do not match the grid")

    @property
    def values(self) -> np.ndarray:
        out = np.zeros(self.increments.shape[:-1] + (self.grid.n_steps + 1,))
        np.cumsum(self.increments, axis=-1, out=out[..., 1:])
        return out

    def coarsen(self, factor: int) -> "BrownianPath":
        """Same realisation on a grid ``factor`` times coarser."""
        if self.grid.n_steps % factor:
            raise GridMismatchError("n_steps not divisible by factor")
        inc = self.increments.reshape(self.increments.shape[:-1] + (-1, factor)).sum(axis=-1)
        return BrownianPath(TimeGrid(self.grid.t_end, self.grid.n_steps // factor), inc)

    def scaled(self, alpha: float) -> "BrownianPath":
        return BrownianPath(self.grid, alpha * self.increments)


def sample_increments(grid: TimeGrid, rng: np.random.Generator, n_paths: int | None = None) -> np.ndarray:
    shape = (grid.n_steps,) if n_paths is None else (n_paths, grid.n_steps)
    return rng.standard_normal(shape) * math.sqrt(grid.dt)


def sample_brownian(grid: TimeGrid, seed: int, n_paths: int | None = None) -> BrownianPath:
    """Reproducible Brownian path(s) from numpy's PCG64 generator seeded with ``seed``."""
    rng = np.random.default_rng(seed)
    return BrownianPath(grid, sample_increments(grid, rng, n_paths))


def _check_grid(basis: SampledPair, grid: TimeGrid) -> None:
    if basis.t.size != grid.n_steps + 1 or abs(basis.t[-1] - grid.t_end) > 1e-12 * grid.t_end:
        raise GridMismatchError("fundamental pair sampled on a different grid")


def _ito_combination(basis: SampledPair, weighted_dB: np.ndarray) -> np.ndarray:
    """``w2(t_k) sum_{j<k} w1_j dB_j - w1(t_k) sum_{j<k} w2_j dB_j``."""
    lead = weighted_dB.shape[:-1]
    i1 = np.zeros(lead + (weighted_dB.shape[-1] + 1,))
    i2 = np.zeros_like(i1)
    np.cumsum(basis.w1[:-1] * weighted_dB, axis=-1, out=i1[..., 1:])
    np.cumsum(basis.w2[:-1] * weighted_dB, axis=-1, out=i2[..., 1:])
    return basis.w2 * i1 - basis.w1 * i2


def _cumtrapz(f: np.ndarray, dt: float) -> np.ndarray:
    out = np.zeros_like(f)
    np.cumsum(0.5 * dt * (f[..., 1:] + f[..., :-1]), axis=-1, out=out[..., 1:])
    return out


def kernel_quadrature(basis: SampledPair, source: np.ndarray, dt: float) -> np.ndarray:
    """Trapezoid rule for ``int_0^t K(t, s) source(s) ds`` at every grid point."""
    return basis.w2 * _cumtrapz(basis.w1 * source, dt) - basis.w1 * _cumtrapz(basis.w2 * source, dt)


def x1_path(pair: FundamentalPair, path: BrownianPath) -> np.ndarray:
    """First-order coefficient as an Ito sum of the kernel against ``dB``."""
    basis = pair.sample(path.grid.times)
    return _ito_combination(basis, path.increments)


def x1_velocity(pair: FundamentalPair, path: BrownianPath) -> np.ndarray:
    """Time derivative of :func:`x1_path` (the kernel vanishes on the diagonal)."""
    basis = pair.sample(path.grid.times)
    inc = path.increments
    i1 = np.zeros(inc.shape[:-1] + (inc.shape[-1] + 1,))
    i2 = np.zeros_like(i1)
    np.cumsum(basis.w1[:-1] * inc, axis=-1, out=i1[..., 1:])
    np.cumsum(basis.w2[:-1] * inc, axis=-1, out=i2[..., 1:])
    return basis.dw2 * i1 - basis.dw1 * i2


def x1_path_ibp(pair: FundamentalPair, grid: TimeGrid, driver_values: np.ndarray) -> np.ndarray:
    """``-int_0^t d_s K(t, s) Z(s) ds`` for a continuous driver path with ``Z(0) = 0``.

    With ``Z = B`` this is a second estimator of :func:`x1_path`; with a bounded
    martingale it defines the pathwise first-order coefficient.
    """
    basis = pair.sample(grid.times)
    if driver_values.shape[-1] != grid.n_steps + 1:
        raise GridMismatchError("driver values do not match the grid")
    dt = grid.dt
    return -basis.w2 * _cumtrapz(basis.dw1 * driver_values, dt) + basis.w1 * _cumtrapz(
        basis.dw2 * driver_values, dt
    )


def _quadratic_source(lower: Sequence[np.ndarray] | np.ndarray, n: int) -> np.ndarray:
    return sum(lower[j] * lower[n - j] for j in range(1, n))


def xn_path(pair: FundamentalPair, coeffs, n: int, grid: TimeGrid | None = None) -> np.ndarray:
    """Order-``n`` coefficient from orders ``1..n-1``.

    Args:
        pair: Unit-Wronskian fundamental pair.
        coeffs: A :class:`CoefficientPaths` or a sequence/array indexed by order
            whose entries ``1..n-1`` are filled.
        n: Order, at least 2.
        grid: Required when ``coeffs`` is a bare array.
    """
    if n < 2:
        raise ValueError("xn_path needs n >= 2")
    if isinstance(coeffs, CoefficientPaths):
        grid, lower = coeffs.grid, coeffs.paths
    else:
        lower = coeffs
    if grid is None:
        raise ValueError("grid is required with raw coefficient arrays")
    if len(lower) < n:
        raise ValueError(f"orders 1..{n - 1} must be available")
    basis = pair.sample(grid.times)
    _check_grid(basis, grid)
    return kernel_quadrature(basis, _quadratic_source(lower, n), grid.dt)


def multiplicative_x1_path(pair: FundamentalPair, path: BrownianPath, x0_samples: np.ndarray) -> np.ndarray:
    """First-order coefficient when the noise multiplies the solution: ``int K x0 dB``."""
    basis = pair.sample(path.grid.times)
    if x0_samples.shape[-1] != path.grid.n_steps + 1:
        raise GridMismatchError("x0 samples do not match the grid")
    return _ito_combination(basis, x0_samples[..., :-1] * path.increments)


def multiplicative_xn_path(pair: FundamentalPair, coeffs, path: BrownianPath, n: int) -> np.ndarray:
    """Order-``n`` coefficient with multiplicative noise.

    Adds ``int K(t, s) x_{n-1}(s) dB(s)`` (Ito sum) to the quadratic-source term.
    """
    lower = coeffs.paths if isinstance(coeffs, CoefficientPaths) else coeffs
    quad = xn_path(pair, lower, n, grid=path.grid)
    basis = pair.sample(path.grid.times)
    return quad + _ito_combination(basis, lower[n - 1][..., :-1] * path.increments)


@dataclass
class CoefficientPaths:
    """Coefficients ``x_0 .. x_N`` of one realisation on a common grid.

    ``paths`` has shape ``(N + 1, n_steps + 1)`` (or a leading batch axis
    before the order axis when produced by :func:`expand_batch`).
    """

    grid: TimeGrid
    paths: np.ndarray
    noise_mode: str = "additive"

    @property
    def order(self) -> int:
        return self.paths.shape[-2] - 1


def expand_batch(
    pair: FundamentalPair,
    grid: TimeGrid,
    increments: np.ndarray,
    order: int,
    noise_mode: NoiseMode = "additive",
) -> np.ndarray:
    """Coefficients for a batch of paths; returns shape ``(n_paths, order + 1, n_steps + 1)``.

    ``increments`` has shape ``(n_paths, n_steps)``.
    """
    path = BrownianPath(grid, np.atleast_2d(increments))
    base = x0(grid.times, pair.params)
    out = np.empty((path.increments.shape[0], order + 1, grid.n_steps + 1))
    out[:, 0, :] = base
    if order >= 1:
        if noise_mode == "additive":
            out[:, 1, :] = x1_path(pair, path)
        elif noise_mode == "multiplicative":
            out[:, 1, :] = multiplicative_x1_path(pair, path, base)
        else:
            raise ValueError(f"unknown noise mode {noise_mode!r}")
    lower = out.transpose(1, 0, 2)  # order axis first, view
    for n in range(2, order + 1):
        if noise_mode == "additive":
            out[:, n, :] = xn_path(pair, lower, n, grid=grid)
        else:
            out[:, n, :] = multiplicative_xn_path(pair, lower, path, n)
    return out


def expand(
    pair: FundamentalPair, path: BrownianPath, order: int, noise_mode: NoiseMode = "additive"
) -> CoefficientPaths:
    """Coefficients ``x_0 .. x_order`` for a single path."""
    arr = expand_batch(pair, path.grid, path.increments[None, :], order, noise_mode)[0]
    return CoefficientPaths(path.grid, arr, noise_mode)


def truncated_sum(coeffs, sigma: float, n: int | None = None) -> np.ndarray:
    """``X_n = x0 + sigma x1 + ... + sigma**n xn`` by Horner's rule."""
    paths = coeffs.paths if isinstance(coeffs, CoefficientPaths) else np.asarray(coeffs)
    top = paths.shape[-2] - 1
    n = top if n is None else n
    if n > top:
        raise ValueError(f"requested order {n} exceeds available order {top}")
    acc = paths[..., n, :].copy()
    for k in range(n - 1, -1, -1):
        acc = acc * sigma + paths[..., k, :]
    return acc


def _fmt(v: float) -> str:
    return repr(float(v))


def write_paths_csv(
    path: str | Path,
    grid: TimeGrid,
    coeffs: np.ndarray,
    sigma: float,
    extra: dict[str, np.ndarray] | None = None,
) -> Path:
    """CSV with columns ``t, x0 .. xN, Xn_sigma`` plus any ``extra`` columns.

    Floats are written with ``repr`` (shortest round-trip form), so identical
    inputs give byte-identical files.
    """
    path = Path(path)
    order = coeffs.shape[0] - 1
    cols = {"t": grid.times}
    for k in range(order + 1):
        cols[f"x{k}"] = coeffs[k]
    cols["Xn_sigma"] = truncated_sum(coeffs, sigma)
    for name, values in (extra or {}).items():
        cols[name] = values
    names = list(cols)
    n_rows = grid.n_steps + 1
    with path.open("w", newline="\n") as fh:
        fh.write(",".join(names) + "\n")
        for i in range(n_rows):
            fh.write(",".join(_fmt(cols[c][i]) if i < len(cols[c]) else "" for c in names) + "\n")
    return path


def write_metadata(path: str | Path, **meta) -> Path:
    path = Path(path)

    def default(obj):
        if hasattr(obj, "__dataclass_fields__"):
            return asdict(obj)
        if isinstance(obj, np.generic):
            return obj.item()
        raise TypeError(f"not serialisable: {type(obj)}")

    path.write_text(json.dumps(meta, indent=2, sort_keys=True, default=default) + "\n")
    return path
