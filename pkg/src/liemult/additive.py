"""Additive (independent-increment) driver processes on a Lie algebra.

A driver is drift + scaled Brownian increments + compound Poisson jumps over
a time grid.  Jumps are sampled exactly (Poisson count and placement time per
cell) and recorded as ground truth, so downstream jump detectors can be
scored against them.  Sampling is a pure function of (model, grid, seed) and
per-trial streams are derived with counter-based keys, so results do not
depend on execution order or worker count.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError, ParameterError
from .groups import sample_norm_ball
from .rng import substream

__all__ = [
    "TimeGrid",
    "PiecewiseConstantRate",
    "UniformBallJumps",
    "SubspaceBallJumps",
    "FixedAtomJumps",
    "DiscreteJumps",
    "LevyModel",
    "AdditivePath",
    "sample_additive",
]


@dataclass(frozen=True)
class TimeGrid:
    """Strictly increasing grid t_0 = 0 < ... < t_n = T."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 1 or pts.size < 2:
            raise ParameterError("grid needs at least two points")
        if pts[0] != 0.0:
            raise ParameterError(f"grid must start at 0, got {pts[0]}")
        if np.any(np.diff(pts) <= 0):
            raise ParameterError("grid points must be strictly increasing")
        object.__setattr__(self, "points", pts)

    @classmethod
    def uniform(cls, T: float, cells: int) -> "TimeGrid":
        if T <= 0 or cells < 1:
            raise ParameterError(f"need T > 0 and cells >= 1, got T={T}, cells={cells}")
        return cls(np.linspace(0.0, T, cells + 1))

    @property
    def n_cells(self) -> int:
        return self.points.size - 1

    @property
    def T(self) -> float:
        return float(self.points[-1])

    @property
    def mesh(self) -> float:
        return float(np.max(np.diff(self.points)))

    def refined(self) -> "TimeGrid":
        """Grid with every cell halved."""
        mids = 0.5 * (self.points[:-1] + self.points[1:])
        out = np.empty(2 * self.n_cells + 1)
        out[0::2] = self.points
        out[1::2] = mids
        return TimeGrid(out)

    def cell_of(self, t: float | np.ndarray) -> np.ndarray:
        """Index k of the cell (t_{k-1}, t_k] containing t (t=0 maps to cell 0)."""
        return np.maximum(np.searchsorted(self.points, t, side="left") - 1, 0)

    def __eq__(self, other):
        return isinstance(other, TimeGrid) and np.array_equal(self.points, other.points)


@dataclass(frozen=True)
class PiecewiseConstantRate:
    """Nonnegative piecewise-constant time rescaling s(t).

    ``breaks`` are the left endpoints starting at 0; ``rates`` the values on
    each piece (the last piece extends to infinity).  The driver is the
    stationary one run at speed s(t): drift mass, Brownian variance, and jump
    intensity over a cell all scale with the integrated rate.
    """

    breaks: np.ndarray
    rates: np.ndarray

    def __post_init__(self):
        breaks = np.asarray(self.breaks, dtype=float)
        rates = np.asarray(self.rates, dtype=float)
        if breaks.ndim != 1 or breaks.size == 0 or breaks[0] != 0.0:
            raise ParameterError("breaks must be a 1-d array starting at 0")
        if np.any(np.diff(breaks) <= 0):
            raise ParameterError("breaks must be strictly increasing")
        if rates.shape != breaks.shape or np.any(rates < 0):
            raise ParameterError("rates must be nonnegative, one per piece")
        object.__setattr__(self, "breaks", breaks)
        object.__setattr__(self, "rates", rates)

    def integral(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Integrated rate over [a, b], vectorized over endpoints."""
        return self._antiderivative(np.asarray(b, float)) - self._antiderivative(np.asarray(a, float))

    def _antiderivative(self, t: np.ndarray) -> np.ndarray:
        cum = np.concatenate([[0.0], np.cumsum(self.rates[:-1] * np.diff(self.breaks))])
        idx = np.maximum(np.searchsorted(self.breaks, t, side="right") - 1, 0)
        return cum[idx] + self.rates[idx] * (t - self.breaks[idx])

    def sample_times(self, rng: np.random.Generator, a: float, b: float, count: int) -> np.ndarray:
        """Draw jump times in (a, b) with density proportional to the rate."""
        total = self.integral(a, b)
        if total <= 0:
            return np.full(count, a)
        targets = self._antiderivative(np.asarray(a)) + rng.uniform(0.0, total, size=count)
        # invert the antiderivative piece by piece
        cum_at_breaks = self._antiderivative(self.breaks)
        idx = np.maximum(np.searchsorted(cum_at_breaks, targets, side="right") - 1, 0)
        rate = self.rates[idx]
        out = self.breaks[idx] + np.where(rate > 0, (targets - cum_at_breaks[idx]) / np.where(rate > 0, rate, 1.0), 0.0)
        return np.clip(out, a, b)


class UniformBallJumps:
    """Jump law: uniform on the open norm ball of the model's space."""

    def __init__(self, radius: float):
        if radius <= 0:
            raise ParameterError(f"radius must be positive, got {radius}")
        self.radius = float(radius)

    def sample(self, rng, space, count):
        return sample_norm_ball(rng, space, self.radius, count)

    def max_norm(self, space):
        return self.radius

    def extreme_points(self, space, rng, count=32):
        """Support points of maximal norm: scaled coordinate axes plus random directions."""
        axes = np.concatenate([np.eye(space.dim), -np.eye(space.dim)])
        raw = rng.standard_normal((count, space.dim))
        raw = raw / space.norm(raw)[:, None]
        return np.concatenate([axes, raw]) * self.radius


class SubspaceBallJumps:
    """Jump law: uniform on the norm ball intersected with a coordinate subspace."""

    def __init__(self, radius: float, indices):
        if radius <= 0:
            raise ParameterError(f"radius must be positive, got {radius}")
        self.radius = float(radius)
        self.indices = np.asarray(indices, dtype=int)
        if self.indices.ndim != 1 or self.indices.size == 0:
            raise ParameterError("indices must be a nonempty 1-d index list")

    def _lift(self, space, sub: np.ndarray) -> np.ndarray:
        out = np.zeros((sub.shape[0], space.dim))
        out[:, self.indices] = sub
        return out

    def sample(self, rng, space, count):
        if np.any(self.indices >= space.dim):
            raise InvalidInputError(f"subspace indices exceed dimension {space.dim}")
        out = np.empty((count, space.dim))
        have = 0
        while have < count:
            batch = max(64, 4 * (count - have))
            cand = self._lift(space, rng.uniform(-self.radius, self.radius,
                                                 size=(batch, self.indices.size)))
            good = cand[space.norm(cand) < self.radius]
            take = min(count - have, good.shape[0])
            out[have:have + take] = good[:take]
            have += take
        return out

    def max_norm(self, space):
        return self.radius

    def extreme_points(self, space, rng, count=32):
        axes = np.concatenate([np.eye(self.indices.size), -np.eye(self.indices.size)])
        raw = rng.standard_normal((count, self.indices.size))
        pts = self._lift(space, np.concatenate([axes, raw]))
        return pts * (self.radius / space.norm(pts))[:, None]


class FixedAtomJumps:
    """Jump law: a single deterministic jump vector."""

    def __init__(self, vector):
        self.vector = np.asarray(vector, dtype=float)
        if self.vector.ndim != 1:
            raise ParameterError("atom must be a 1-d vector")

    def sample(self, rng, space, count):
        if self.vector.shape != (space.dim,):
            raise InvalidInputError(
                f"atom has dimension {self.vector.shape[0]}, space has {space.dim}"
            )
        return np.tile(self.vector, (count, 1))

    def max_norm(self, space):
        return float(space.norm(self.vector))

    def extreme_points(self, space, rng, count=32):
        return self.vector[None, :]


class DiscreteJumps:
    """Jump law: finitely many atoms with given probabilities."""

    def __init__(self, vectors, probs):
        self.vectors = np.asarray(vectors, dtype=float)
        self.probs = np.asarray(probs, dtype=float)
        if self.vectors.ndim != 2 or self.vectors.shape[0] != self.probs.size:
            raise ParameterError("need one probability per atom")
        if np.any(self.probs < 0) or abs(self.probs.sum() - 1.0) > 1e-12:
            raise ParameterError(f"probabilities must sum to 1, got {self.probs.sum()}")

    def sample(self, rng, space, count):
        if self.vectors.shape[1] != space.dim:
            raise InvalidInputError(
                f"atoms have dimension {self.vectors.shape[1]}, space has {space.dim}"
            )
        idx = rng.choice(self.probs.size, size=count, p=self.probs)
        return self.vectors[idx]

    def max_norm(self, space):
        return float(np.max(space.norm(self.vectors)))

    def extreme_points(self, space, rng, count=32):
        return self.vectors


@dataclass(frozen=True)
class LevyModel:
    """Driver model: drift, per-direction diffusion, and compound Poisson jumps.

    Parameters
    ----------
    space : object with ``dim`` and ``norm``; a group instance or an LpSpace.
    drift : drift vector per unit time (scalar broadcasts to all directions).
    diffusion : Brownian coefficient per direction (scalar or per-direction).
    jump_intensity : Poisson rate per unit time.
    jump_law : distribution of jump vectors; required when the intensity is
        positive.
    scale : optional piecewise-constant time rescaling; None means stationary.
    bound_delta : when set, the jump law support must lie in the closed norm
        ball of this radius (checked here, used by the bounded-jump batteries).
    """

    space: object
    drift: np.ndarray = 0.0
    diffusion: np.ndarray = 0.0
    jump_intensity: float = 0.0
    jump_law: object | None = None
    scale: PiecewiseConstantRate | None = None
    bound_delta: float | None = None

    def __post_init__(self):
        d = self.space.dim
        drift = np.broadcast_to(np.asarray(self.drift, dtype=float), (d,)).copy()
        diffusion = np.broadcast_to(np.asarray(self.diffusion, dtype=float), (d,)).copy()
        if np.any(diffusion < 0):
            raise ParameterError("diffusion coefficients must be nonnegative")
        if self.jump_intensity < 0:
            raise ParameterError(f"jump_intensity must be nonnegative, got {self.jump_intensity}")
        if self.jump_intensity > 0 and self.jump_law is None:
            raise ParameterError("a jump law is required when jump_intensity > 0")
        object.__setattr__(self, "drift", drift)
        object.__setattr__(self, "diffusion", diffusion)
        object.__setattr__(self, "jump_intensity", float(self.jump_intensity))
        if self.bound_delta is not None and self.jump_law is not None:
            mn = self.jump_law.max_norm(self.space)
            if mn > self.bound_delta:
                raise ParameterError(
                    f"jump law support (norm {mn}) exceeds bound_delta={self.bound_delta}"
                )

    @property
    def stationary(self) -> bool:
        return self.scale is None

    def rate_integral(self, a, b) -> np.ndarray:
        if self.scale is None:
            return np.asarray(b, float) - np.asarray(a, float)
        return self.scale.integral(a, b)


@dataclass(frozen=True)
class AdditivePath:
    """Sampled driver path: per-cell increments plus ground-truth jumps.

    ``increment(j, k)`` is evaluated as a difference of cached prefix sums,
    which makes increments over adjacent index ranges add exactly.
    """

    grid: TimeGrid
    model: LevyModel
    drift_part: np.ndarray      # (n, d) deterministic mass per cell
    gauss_part: np.ndarray      # (n, d) Brownian mass per cell
    gauss_var: np.ndarray       # (n, d) variance of the Brownian mass
    jump_times: np.ndarray      # (m,) sorted
    jump_vectors: np.ndarray    # (m, d)
    increments: np.ndarray = field(init=False)
    _prefix: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        inc = self.drift_part + self.gauss_part
        if self.jump_times.size:
            cells = self.grid.cell_of(self.jump_times)
            np.add.at(inc, cells, self.jump_vectors)
        prefix = np.concatenate([np.zeros((1, inc.shape[1])), np.cumsum(inc, axis=0)])
        object.__setattr__(self, "increments", inc)
        object.__setattr__(self, "_prefix", prefix)

    @property
    def dim(self) -> int:
        return self.drift_part.shape[1]

    @property
    def true_jumps(self) -> list[tuple[float, np.ndarray]]:
        return [(float(t), v) for t, v in zip(self.jump_times, self.jump_vectors)]

    def increment(self, j: int, k: int) -> np.ndarray:
        """Sum of cell increments over (t_j, t_k]."""
        n = self.grid.n_cells
        if not (0 <= j <= k <= n):
            raise InvalidInputError(f"need 0 <= j <= k <= {n}, got ({j}, {k})")
        return self._prefix[k] - self._prefix[j]

    def total(self) -> np.ndarray:
        return self.increment(0, self.grid.n_cells)

    def refine(self, seed: int, stream: tuple = ()) -> "AdditivePath":
        """Halve every cell, splitting the Brownian mass by bridge bisection.

        The refined path is coupled to this one: coarse increments are the
        exact sums of the corresponding fine increments, and each recorded
        jump keeps its timestamp.
        """
        fine_grid = self.grid.refined()
        lefts, rights = fine_grid.points[:-1], fine_grid.points[1:]
        mass = self.model.rate_integral(lefts, rights)
        drift_fine = mass[:, None] * self.model.drift[None, :]
        var_fine = mass[:, None] * (self.model.diffusion[None, :] ** 2)

        v1, v2 = var_fine[0::2], var_fine[1::2]
        vsum = v1 + v2
        noise = substream(seed, *stream, "bridge").standard_normal(self.gauss_part.shape)
        safe = np.where(vsum > 0, vsum, 1.0)
        frac = np.where(vsum > 0, v1 / safe, 0.5)
        spread = np.sqrt(np.where(vsum > 0, v1 * v2 / safe, 0.0))
        first = frac * self.gauss_part + spread * noise
        gauss_fine = np.empty_like(drift_fine)
        gauss_fine[0::2] = first
        gauss_fine[1::2] = self.gauss_part - first

        return AdditivePath(
            grid=fine_grid,
            model=self.model,
            drift_part=drift_fine,
            gauss_part=gauss_fine,
            gauss_var=var_fine,
            jump_times=self.jump_times,
            jump_vectors=self.jump_vectors,
        )

    def csv_rows(self):
        """Rows (t_left, t_right, *increment coordinates, jump_flag)."""
        flags = np.zeros(self.grid.n_cells, dtype=int)
        if self.jump_times.size:
            flags[self.grid.cell_of(self.jump_times)] = 1
        for k in range(self.grid.n_cells):
            yield (
                self.grid.points[k],
                self.grid.points[k + 1],
                *self.increments[k],
                flags[k],
            )


def sample_additive(model: LevyModel, grid: TimeGrid, seed: int,
                    stream: tuple = ()) -> AdditivePath:
    """Sample one driver path; bit-identical for identical (model, grid, seed, stream).

    ``stream`` extends the derivation key, letting callers run independent
    trials as ``sample_additive(model, grid, seed, stream=(trial,))``.
    """
    lefts, rights = grid.points[:-1], grid.points[1:]
    mass = model.rate_integral(lefts, rights)
    drift_part = mass[:, None] * model.drift[None, :]
    gauss_var = mass[:, None] * (model.diffusion[None, :] ** 2)
    gauss_part = np.sqrt(gauss_var) * substream(seed, *stream, "gauss").standard_normal(
        (grid.n_cells, model.space.dim)
    )

    if model.jump_intensity > 0:
        counts = substream(seed, *stream, "jump-counts").poisson(model.jump_intensity * mass)
        total = int(counts.sum())
    else:
        counts, total = np.zeros(grid.n_cells, dtype=int), 0

    if total:
        rng_times = substream(seed, *stream, "jump-times")
        cells = np.repeat(np.arange(grid.n_cells), counts)
        if model.scale is None:
            u = rng_times.uniform(size=total)
            times = lefts[cells] + u * (rights[cells] - lefts[cells])
        else:
            times = np.concatenate([
                model.scale.sample_times(rng_times, lefts[k], rights[k], int(c))
                for k, c in enumerate(counts) if c
            ])
        vectors = model.jump_law.sample(
            substream(seed, *stream, "jump-vectors"), model.space, total
        )
        order = np.argsort(times, kind="stable")
        times, vectors = times[order], vectors[order]
    else:
        times = np.empty(0)
        vectors = np.empty((0, model.space.dim))

    return AdditivePath(
        grid=grid,
        model=model,
        drift_part=drift_part,
        gauss_part=gauss_part,
        gauss_var=gauss_var,
        jump_times=times,
        jump_vectors=vectors,
    )
