"""Scalar topological observables over a parameter sweep.

H(mu) is the largest finite H1 persistence of the embedded cloud at mu, the
Betti L1 norm integrates the H1 Betti curve over a uniform scale grid, and
the critical-parameter estimate is the grid point receiving the largest
absolute jump of H.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from .dynsys import TimeSeries
from .embedding import EmbeddingParams, delay_embed, select_delay, select_dimension
from .persistence import (
    DEFAULT_N_MAX,
    PersistenceDiagram,
    maxmin_subsample,
    pairwise_distances,
    rips_persistence,
)

# resolution of the Betti-curve sampling grid from 0 to the filtration cap
DEFAULT_EPS_GRID_SIZE = 64


@dataclass(frozen=True)
class BettiGrid:
    """Betti numbers sampled on an ascending scale grid."""

    eps_values: np.ndarray
    counts: np.ndarray

    def __post_init__(self):
        eps = np.asarray(self.eps_values, dtype=float)
        counts = np.asarray(self.counts, dtype=np.int64)
        if eps.ndim != 1 or eps.shape[0] == 0 or eps.shape != counts.shape:
            raise ValueError("eps_values and counts must be aligned 1-d arrays")
        if np.any(np.diff(eps) < 0) or not np.all(np.isfinite(eps)):
            raise ValueError("eps grid must be ascending and finite")
        if np.any(counts < 0):
            raise ValueError("counts must be nonnegative")
        object.__setattr__(self, "eps_values", eps)
        object.__setattr__(self, "counts", counts)


@dataclass(frozen=True)
class PersistenceConfig:
    """Knobs for the per-parameter persistence stage of a sweep.

    seed is a base value; grid point j subsamples with seed + j so that a
    single point can be reproduced in isolation.
    """

    n_max: int = DEFAULT_N_MAX
    seed: int = 0
    eps_grid_size: int = DEFAULT_EPS_GRID_SIZE
    eps_max: Optional[float] = None

    def __post_init__(self):
        if self.n_max < 1:
            raise ValueError(f"n_max must be >= 1, got {self.n_max}")
        if self.eps_grid_size < 2:
            raise ValueError(f"eps_grid_size must be >= 2, got {self.eps_grid_size}")
        if self.eps_max is not None and self.eps_max <= 0:
            raise ValueError(f"eps_max must be > 0, got {self.eps_max}")


@dataclass(frozen=True)
class SweepResult:
    """Per-parameter observables of a sweep, failures excluded.

    params holds the values that succeeded (ascending); failures pairs each
    excluded value with the reason. delta_h[i] = |h_values[i+1] - h_values[i]|
    and mu_hat is always one of params.
    """

    params: np.ndarray
    h_values: np.ndarray
    betti_l1: np.ndarray
    delta_h: np.ndarray
    mu_hat: float
    diagrams: Tuple[PersistenceDiagram, ...] = ()
    failures: Tuple[Tuple[float, str], ...] = ()


def max_persistence(diagram: PersistenceDiagram, dim: int = 1) -> float:
    """Largest finite death - birth among pairs of the dimension; 0 if none.

    A diagram with an infinite pair in dimension 1 is rejected: it means the
    filtration was capped below the scale where the loop fills in, and the
    functional is not defined there.
    """
    pairs = diagram.pairs(dim)
    if pairs.shape[0] == 0:
        return 0.0
    infinite = np.isinf(pairs[:, 1])
    if dim == 1 and np.any(infinite):
        raise ValueError("dimension-1 diagram has an unresolved infinite pair")
    finite = pairs[~infinite]
    if finite.shape[0] == 0:
        return 0.0
    return float(np.max(finite[:, 1] - finite[:, 0]))


def betti_curve(diagram: PersistenceDiagram, dim: int, eps_grid: np.ndarray) -> BettiGrid:
    """Number of classes alive at each scale: birth <= eps < death."""
    eps = np.asarray(eps_grid, dtype=float)
    if eps.ndim != 1 or eps.shape[0] == 0:
        raise ValueError("eps_grid must be a nonempty 1-d array")
    if np.any(np.diff(eps) < 0):
        raise ValueError("eps_grid must be ascending")
    pairs = diagram.pairs(dim)
    if pairs.shape[0] == 0:
        counts = np.zeros(eps.shape[0], dtype=np.int64)
    else:
        alive = (pairs[:, 0:1] <= eps[None, :]) & (eps[None, :] < pairs[:, 1:2])
        counts = alive.sum(axis=0)
    return BettiGrid(eps_values=eps, counts=counts)


def betti_l1(grid: BettiGrid) -> float:
    """Riemann-sum L1 norm of the Betti curve on a uniform grid."""
    eps = grid.eps_values
    if eps.shape[0] < 2:
        raise ValueError("betti_l1 needs a grid of at least 2 points")
    steps = np.diff(eps)
    width = (eps[-1] - eps[0]) / (eps.shape[0] - 1)
    if not np.allclose(steps, width, rtol=1e-9, atol=1e-12 * max(abs(width), 1.0)):
        raise ValueError("betti_l1 requires a uniformly spaced grid")
    return float(np.sum(grid.counts) * width)


def delta_series(h_values: Sequence[float]) -> np.ndarray:
    """Absolute first differences |H(mu_j) - H(mu_{j-1})|, length M-1."""
    h = np.asarray(h_values, dtype=float)
    if h.ndim != 1 or h.shape[0] < 2:
        raise ValueError("delta_series needs at least 2 values")
    return np.abs(np.diff(h))


def estimate_critical(params: Sequence[float], h_values: Sequence[float]) -> float:
    """Grid point receiving the largest jump of H, ties to the smallest index.

    The jump between mu_{j-1} and mu_j is attributed to the right endpoint
    mu_j, so the estimate is always the second point or later.
    """
    p = np.asarray(params, dtype=float)
    h = np.asarray(h_values, dtype=float)
    if p.shape != h.shape or p.ndim != 1:
        raise ValueError("params and h_values must be aligned 1-d arrays")
    if p.shape[0] < 2:
        raise ValueError("need at least 2 parameter values")
    if np.any(np.diff(p) <= 0):
        raise ValueError("params must be strictly ascending")
    deltas = delta_series(h)
    return float(p[1 + int(np.argmax(deltas))])


def _auto_embedding(series: TimeSeries) -> EmbeddingParams:
    tau = select_delay(series).tau
    m = select_dimension(series, tau).m
    return EmbeddingParams(tau=tau, m=m)


def sweep_point(
    mu: float,
    series_factory: Callable[[float], TimeSeries],
    embedding: Optional[EmbeddingParams],
    config: PersistenceConfig,
    index: int,
) -> Tuple[float, float, PersistenceDiagram]:
    """One grid point of run_sweep: (H, betti L1, diagram).

    index offsets the subsampling seed so grid points draw distinct starts.
    Raises whatever the series factory or the pipeline raises.
    """
    series = series_factory(float(mu))
    emb = embedding if embedding is not None else _auto_embedding(series)
    cloud = delay_embed(series, emb)
    cloud = maxmin_subsample(cloud, n_max=config.n_max, seed=config.seed + index)
    dist = pairwise_distances(cloud)
    diagram = rips_persistence(dist, eps_max=config.eps_max)
    h = max_persistence(diagram, dim=1)
    cap = config.eps_max
    if cap is None:
        cap = float(dist.entries.max()) if dist.n > 1 else 0.0
    grid = np.linspace(0.0, cap, config.eps_grid_size)
    l1 = betti_l1(betti_curve(diagram, 1, grid)) if cap > 0 else 0.0
    return h, l1, diagram


def run_sweep(
    params: Sequence[float],
    series_factory: Callable[[float], TimeSeries],
    embedding: Optional[EmbeddingParams] = None,
    config: PersistenceConfig = PersistenceConfig(),
) -> SweepResult:
    """Embed, subsample, and compute persistence at each parameter value.

    embedding=None selects (tau, m) per series automatically. A value whose
    series construction or pipeline raises is excluded and recorded in
    failures; the sweep itself fails when fewer than 2 values survive.
    """
    p = np.asarray(params, dtype=float)
    if p.ndim != 1 or p.shape[0] < 2:
        raise ValueError("need at least 2 parameter values")
    if np.any(np.diff(p) <= 0):
        raise ValueError("params must be strictly ascending")

    kept: List[float] = []
    h_values: List[float] = []
    l1_values: List[float] = []
    diagrams: List[PersistenceDiagram] = []
    failures: List[Tuple[float, str]] = []
    for j, mu in enumerate(p):
        try:
            h, l1, diagram = sweep_point(mu, series_factory, embedding, config, j)
        except (ValueError, RuntimeError) as exc:
            failures.append((float(mu), f"{type(exc).__name__}: {exc}"))
            continue
        kept.append(float(mu))
        h_values.append(h)
        l1_values.append(l1)
        diagrams.append(diagram)

    if len(kept) < 2:
        raise RuntimeError(
            f"sweep failed: only {len(kept)} of {p.shape[0]} parameter values succeeded"
        )
    kept_arr = np.array(kept)
    h_arr = np.array(h_values)
    return SweepResult(
        params=kept_arr,
        h_values=h_arr,
        betti_l1=np.array(l1_values),
        delta_h=delta_series(h_arr),
        mu_hat=estimate_critical(kept_arr, h_arr),
        diagrams=tuple(diagrams),
        failures=tuple(failures),
    )
