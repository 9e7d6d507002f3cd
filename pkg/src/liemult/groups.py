"""Concrete nilpotent Banach-Lie group and Lie algebra kernels.

Two instances are provided:

* ``HeisenbergGroup(N, p)`` — truncation of the infinite-dimensional
  Heisenberg group built on ``l^p x l^q x R`` (q the conjugate exponent) to
  the first ``N`` coordinate pairs.  Elements and algebra vectors share the
  flat coordinate layout ``[a_1..a_N, b_1..b_N, c]``; exp and log are the
  coordinate identity because the exponential is a global diffeomorphism.
* ``UnipotentGroup(n)`` — upper unitriangular ``n x n`` real matrices,
  ``n in {3, 4}``.  Flat coordinates are the strictly upper-triangular
  entries in row-major order; a group element with coordinates ``v`` is
  ``I + M(v)`` and an algebra vector is ``M(v)``, where ``M`` scatters the
  coordinates into the strict upper triangle.

All operations broadcast over leading axes, so a single element is a shape
``(d,)`` array and a batch of paths is ``(..., d)``.  Values are never
mutated in place; everything here is pure and safe to share across workers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError, ParameterError
from .rng import substream

__all__ = [
    "ChartSpec",
    "LpSpace",
    "HeisenbergGroup",
    "UnipotentGroup",
    "group_from_config",
    "sample_norm_ball",
]


def lp_norm(arr: np.ndarray, p: float, axis: int = -1) -> np.ndarray:
    if p == 2.0:
        return np.sqrt(np.sum(arr * arr, axis=axis))
    return np.sum(np.abs(arr) ** p, axis=axis) ** (1.0 / p)


def sample_norm_ball(rng: np.random.Generator, space, radius: float, size: int) -> np.ndarray:
    """Draw vectors uniformly from the open norm ball of ``space``.

    Rejection sampling from the bounding box; exact for any norm whose unit
    ball is contained in the unit sup-norm box (true for all norms used here).
    """
    if radius <= 0:
        raise ParameterError(f"radius must be positive, got {radius}")
    out = np.empty((size, space.dim))
    have = 0
    while have < size:
        batch = max(64, 4 * (size - have))
        cand = rng.uniform(-radius, radius, size=(batch, space.dim))
        good = cand[space.norm(cand) < radius]
        take = min(size - have, good.shape[0])
        out[have:have + take] = good[:take]
        have += take
    return out


@dataclass(frozen=True)
class LpSpace:
    """Finite-dimensional real vector space carrying an l^p norm."""

    dim: int
    p: float = 2.0

    def __post_init__(self):
        if self.dim < 1:
            raise ParameterError(f"dim must be positive, got {self.dim}")
        if not (1.0 <= self.p < math.inf):
            raise ParameterError(f"p must lie in [1, inf), got {self.p}")

    def norm(self, arr: np.ndarray) -> np.ndarray:
        arr = np.asarray(arr, dtype=float)
        return lp_norm(arr, self.p)

    def zero(self) -> np.ndarray:
        return np.zeros(self.dim)


@dataclass(frozen=True)
class ChartSpec:
    """Radii and bracket bound of the logarithm chart.

    ``rho_prime`` is the injectivity radius of the chart, ``rho_double_prime``
    the radius on which products of two chart balls stay inside the chart,
    and ``bracket_bound`` a constant C with ``|[U,V]| <= C |U| |V|``.
    The radii of the built-in instances are engineering defaults certified by
    sampling, not sharp constants.
    """

    rho_prime: float
    rho_double_prime: float
    bracket_bound: float

    def __post_init__(self):
        if self.rho_prime <= 0:
            raise ParameterError(f"rho_prime must be positive, got {self.rho_prime}")
        if not (0 < self.rho_double_prime < self.rho_prime):
            raise ParameterError(
                f"rho_double_prime must lie in (0, rho_prime), got {self.rho_double_prime}"
            )
        if self.bracket_bound < 0:
            raise ParameterError(f"bracket_bound must be nonnegative, got {self.bracket_bound}")

    def certify_bracket_bound(self, group, samples: int = 10**4, seed: int = 0,
                              scale: float = 1.0) -> float:
        """Check ``|[U,V]| <= C |U| |V|`` on random pairs; return the worst ratio.

        Raises ParameterError if any sampled pair violates the bound.
        """
        rng = substream(seed, "chart-certify")
        u = rng.standard_normal((samples, group.dim)) * scale
        v = rng.standard_normal((samples, group.dim)) * scale
        lhs = group.norm(group.bracket(u, v))
        rhs = self.bracket_bound * group.norm(u) * group.norm(v)
        ratio = np.max(np.divide(lhs, rhs, out=np.zeros_like(lhs), where=rhs > 0))
        if np.any(lhs > rhs * (1 + 1e-12)):
            raise ParameterError(
                f"bracket_bound {self.bracket_bound} violated: worst ratio {ratio:.6f}"
            )
        return float(ratio)


class _NilpotentGroup:
    """Shared machinery for the two built-in instances."""

    dim: int
    nilpotency_step: int
    chart: ChartSpec

    # -- element algebra ---------------------------------------------------

    def identity(self) -> np.ndarray:
        return np.zeros(self.dim)

    def zero(self) -> np.ndarray:
        return np.zeros(self.dim)

    def _check(self, *arrs: np.ndarray) -> list[np.ndarray]:
        out = []
        for arr in arrs:
            arr = np.asarray(arr, dtype=float)
            if arr.shape[-1:] != (self.dim,):
                raise InvalidInputError(
                    f"expected trailing dimension {self.dim}, got shape {arr.shape}"
                )
            out.append(arr)
        return out

    def mul(self, g: np.ndarray, h: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def inv(self, g: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def exp(self, vec: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def log(self, g: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def bracket(self, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def norm(self, vec: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def bch(self, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        """Truncated Baker-Campbell-Hausdorff product, exact on nilpotent steps 2 and 3."""
        u, v = self._check(u, v)
        uv = self.bracket(u, v)
        out = u + v + 0.5 * uv
        if self.nilpotency_step == 2:
            return out
        if self.nilpotency_step == 3:
            return out + (self.bracket(u, uv) - self.bracket(v, uv)) / 12.0
        raise ParameterError(
            f"bch only implemented for nilpotency steps 2 and 3, got {self.nilpotency_step}"
        )

    def chart_norm(self, g: np.ndarray) -> np.ndarray:
        """Norm of log(g); the local size of a group element."""
        return self.norm(self.log(g))

    def in_ball(self, g: np.ndarray, delta: float) -> np.ndarray:
        """Strict membership ``|log g| < delta``.

        Instances with a partial chart must make ``chart_norm`` return +inf
        outside the log domain, so log-undefined counts as outside.
        """
        if not (0 < delta < self.chart.rho_prime):
            raise ParameterError(
                f"delta must lie in (0, rho_prime={self.chart.rho_prime}), got {delta}"
            )
        return self.chart_norm(g) < delta

    def ball_power_radius(self, delta: float, n: int) -> float | None:
        """Certified radius r with (U_delta)^n contained in U_r.

        Computed by iterating the BCH norm bound; returns None when the
        recursion escapes the chart (callers must then avoid chart logic).
        """
        if not (0 < delta < self.chart.rho_double_prime):
            raise ParameterError(
                f"delta must lie in (0, rho_double_prime={self.chart.rho_double_prime}),"
                f" got {delta}"
            )
        if n < 1:
            raise ParameterError(f"n must be a positive integer, got {n}")
        c = self.chart.bracket_bound
        r = delta
        for _ in range(n - 1):
            r_next = r + delta + 0.5 * c * r * delta
            if self.nilpotency_step >= 3:
                r_next += (c * c / 12.0) * (r * r * delta + r * delta * delta)
            if r_next >= self.chart.rho_prime:
                return None
            r = r_next
        return float(r)

    # -- path kernels --------------------------------------------------------

    def prefix_products(self, increments: np.ndarray) -> np.ndarray:
        """Left-to-right products of per-cell group increments.

        ``increments`` has shape (..., n, d); the result (..., n+1, d) starts
        at the identity.
        """
        (increments,) = self._check(increments)
        n = increments.shape[-2]
        out = np.zeros(increments.shape[:-2] + (n + 1, self.dim))
        acc = np.broadcast_to(self.identity(), increments.shape[:-2] + (self.dim,)).copy()
        for k in range(n):
            acc = self.mul(acc, increments[..., k, :])
            out[..., k + 1, :] = acc
        return out

    def pair_increment(self, prefix: np.ndarray, j, k) -> np.ndarray:
        """Two-parameter value inv(g_j) g_k from cached prefix products."""
        (prefix,) = self._check(prefix)
        return self.mul(self.inv(prefix[..., j, :]), prefix[..., k, :])

    def pairwise_increments(self, prefix: np.ndarray) -> np.ndarray:
        """All two-parameter values as a (..., n+1, n+1, d) array."""
        (prefix,) = self._check(prefix)
        return self.mul(self.inv(prefix)[..., :, None, :], prefix[..., None, :, :])

    def pairwise_chart_norms(self, prefix: np.ndarray) -> np.ndarray:
        """Chart norms of all two-parameter values, shape (..., n+1, n+1)."""
        return self.chart_norm(self.pairwise_increments(prefix))

    def sample_ball(self, rng: np.random.Generator, radius: float, size: int) -> np.ndarray:
        """Draw ``size`` algebra vectors uniformly from the open norm ball."""
        return sample_norm_ball(rng, self, radius, size)


class HeisenbergGroup(_NilpotentGroup):
    """Coordinate truncation of the l^p Heisenberg group.

    Parameters
    ----------
    N : number of retained coordinate pairs (the truncation order).
    p : exponent of the first block, in (1, inf); the second block carries
        the conjugate exponent q = p / (p - 1).
    chart : optional ChartSpec override.

    The algebra norm is the sum norm ``|a|_p + |b|_q + |c|``.
    """

    nilpotency_step = 2

    def __init__(self, N: int, p: float = 2.0, chart: ChartSpec | None = None):
        if N < 1:
            raise ParameterError(f"N must be a positive integer, got {N}")
        if not (1.0 < p < math.inf):
            raise ParameterError(f"p must lie in (1, inf), got {p}")
        self.N = int(N)
        self.p = float(p)
        self.q = self.p / (self.p - 1.0)
        self.dim = 2 * self.N + 1
        # exp is a global diffeomorphism; the radius is an arithmetic-safety cap
        self.chart = chart or ChartSpec(
            rho_prime=1e6, rho_double_prime=2.5e5, bracket_bound=2.0
        )

    def __repr__(self):
        return f"HeisenbergGroup(N={self.N}, p={self.p})"

    @property
    def x_space(self) -> LpSpace:
        return LpSpace(self.N, self.p)

    @property
    def y_space(self) -> LpSpace:
        return LpSpace(self.N, self.q)

    @property
    def z_space(self) -> LpSpace:
        return LpSpace(1, 1.0)

    def split(self, v: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Split flat coordinates into the (a, b, c) blocks."""
        (v,) = self._check(v)
        return v[..., : self.N], v[..., self.N : 2 * self.N], v[..., 2 * self.N]

    def embed(self, a=None, b=None, c=0.0) -> np.ndarray:
        """Assemble flat coordinates from blocks; missing blocks are zero."""
        a = np.zeros(self.N) if a is None else np.asarray(a, dtype=float)
        b = np.zeros(self.N) if b is None else np.asarray(b, dtype=float)
        if a.shape[-1] != self.N or b.shape[-1] != self.N:
            raise InvalidInputError(f"blocks must have length N={self.N}")
        c = np.asarray(c, dtype=float)
        shape = np.broadcast_shapes(a.shape[:-1], b.shape[:-1], c.shape)
        out = np.zeros(shape + (self.dim,))
        out[..., : self.N] = a
        out[..., self.N : 2 * self.N] = b
        out[..., 2 * self.N] = c
        return out

    def pairing(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Dual pairing of the first and second blocks."""
        return np.sum(np.asarray(a, dtype=float) * np.asarray(b, dtype=float), axis=-1)

    def mul(self, g, h):
        g, h = self._check(g, h)
        x1, y1, z1 = self.split(g)
        x2, y2, z2 = self.split(h)
        return self.embed(
            x1 + x2, y1 + y2, z1 + z2 + 0.5 * (self.pairing(x1, y2) - self.pairing(x2, y1))
        )

    def inv(self, g):
        (g,) = self._check(g)
        return -g

    def exp(self, vec):
        (vec,) = self._check(vec)
        return vec.copy()

    def log(self, g):
        # exp is a global diffeomorphism here; rho_prime is only an
        # arithmetic-safety cap, so log never leaves the chart
        (g,) = self._check(g)
        return g.copy()

    def bracket(self, u, v):
        u, v = self._check(u, v)
        x1, y1, _ = self.split(u)
        x2, y2, _ = self.split(v)
        return self.embed(c=self.pairing(x1, y2) - self.pairing(x2, y1))

    def norm(self, vec):
        (vec,) = self._check(vec)
        a, b, c = self.split(vec)
        return lp_norm(a, self.p) + lp_norm(b, self.q) + np.abs(c)

    def prefix_products(self, increments):
        # same left-to-right recursion as the generic loop, vectorized:
        # g_k = g_{k-1} * inc_k picks up 0.5*(<x_{k-1}|dy_k> - <dx_k|y_{k-1}>)
        (increments,) = self._check(increments)
        dx, dy, dz = self.split(increments)
        x_after = np.cumsum(dx, axis=-2)
        y_after = np.cumsum(dy, axis=-2)
        x_before = np.concatenate([np.zeros_like(dx[..., :1, :]), x_after[..., :-1, :]], axis=-2)
        y_before = np.concatenate([np.zeros_like(dy[..., :1, :]), y_after[..., :-1, :]], axis=-2)
        z_step = dz + 0.5 * (self.pairing(x_before, dy) - self.pairing(dx, y_before))
        n = increments.shape[-2]
        out = np.zeros(increments.shape[:-2] + (n + 1, self.dim))
        out[..., 1:, : self.N] = x_after
        out[..., 1:, self.N : 2 * self.N] = y_after
        out[..., 1:, 2 * self.N] = np.cumsum(z_step, axis=-1)
        return out


# strict upper-triangular index pairs, row-major
def _upper_indices(n: int) -> tuple[np.ndarray, np.ndarray]:
    rows, cols = np.triu_indices(n, k=1)
    return rows, cols


class UnipotentGroup(_NilpotentGroup):
    """Upper unitriangular n x n matrices, n in {3, 4}.

    The algebra norm is the spectral (operator 2-) norm of the strictly
    upper-triangular matrix.
    """

    def __init__(self, n: int, chart: ChartSpec | None = None):
        if n not in (3, 4):
            raise ParameterError(f"n must be 3 or 4, got {n}")
        self.n = int(n)
        self.dim = n * (n - 1) // 2
        self.nilpotency_step = n - 1
        self._rows, self._cols = _upper_indices(n)
        self.chart = chart or ChartSpec(
            rho_prime=0.5, rho_double_prime=0.125, bracket_bound=2.0
        )

    def __repr__(self):
        return f"UnipotentGroup(n={self.n})"

    def to_matrix(self, vec: np.ndarray) -> np.ndarray:
        """Scatter flat coordinates into a strictly upper-triangular matrix."""
        (vec,) = self._check(vec)
        out = np.zeros(vec.shape[:-1] + (self.n, self.n))
        out[..., self._rows, self._cols] = vec
        return out

    def from_matrix(self, mat: np.ndarray) -> np.ndarray:
        mat = np.asarray(mat, dtype=float)
        return mat[..., self._rows, self._cols]

    def _matpow_terms(self, m: np.ndarray) -> list[np.ndarray]:
        """[m, m^2, (m^3)] up to the nilpotency degree."""
        terms = [m, m @ m]
        if self.n == 4:
            terms.append(terms[1] @ m)
        return terms

    def mul(self, g, h):
        g, h = self._check(g, h)
        a = self.to_matrix(g)
        b = self.to_matrix(h)
        return self.from_matrix(a + b + a @ b)

    def inv(self, g):
        (g,) = self._check(g)
        a = self.to_matrix(g)
        terms = self._matpow_terms(a)
        out = -terms[0] + terms[1]
        if self.n == 4:
            out -= terms[2]
        return self.from_matrix(out)

    def exp(self, vec):
        (vec,) = self._check(vec)
        m = self.to_matrix(vec)
        terms = self._matpow_terms(m)
        out = terms[0] + terms[1] / 2.0
        if self.n == 4:
            out += terms[2] / 6.0
        return self.from_matrix(out)

    def log(self, g):
        (g,) = self._check(g)
        e = self.to_matrix(g)
        terms = self._matpow_terms(e)
        out = terms[0] - terms[1] / 2.0
        if self.n == 4:
            out += terms[2] / 3.0
        return self.from_matrix(out)

    def bracket(self, u, v):
        u, v = self._check(u, v)
        a = self.to_matrix(u)
        b = self.to_matrix(v)
        return self.from_matrix(a @ b - b @ a)

    def norm(self, vec):
        (vec,) = self._check(vec)
        return np.linalg.norm(self.to_matrix(vec), ord=2, axis=(-2, -1))


def group_from_config(cfg: dict):
    """Build a group instance from its config block."""
    if not isinstance(cfg, dict) or "kind" not in cfg:
        raise InvalidInputError(f"group config must be a dict with a 'kind' key, got {cfg!r}")
    kind = cfg["kind"]
    chart = None
    if "chart" in cfg and cfg["chart"] is not None:
        chart = ChartSpec(**cfg["chart"])
    if kind == "heisenberg":
        return HeisenbergGroup(N=cfg["N"], p=cfg.get("p", 2.0), chart=chart)
    if kind == "unipotent":
        return UnipotentGroup(n=cfg["n"], chart=chart)
    raise InvalidInputError(f"unknown group kind {kind!r}")
