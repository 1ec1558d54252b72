"""Grid fields over Omega x band: the change of variables u -> p -> v,
finite-difference calculus, and recovery of the coefficient a(x).

Array layout: spatial axes first (x_1, ..., x_d, 'ij' indexing), the k axis
last. Stencil outputs cover only the interior box, one node in from the
boundary on every side.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BranchTrackingError, ConfigError, VanishingFieldError

MIN_MODULUS = 1e-12
DEFAULT_STEP_LIMIT = 0.9 * np.pi


@dataclass(frozen=True)
class SpaceGrid:
    """Uniform node grid on Omega = (-R, R)^d; Gamma is the face x_d = R."""

    R: float
    n_per_axis: int
    dim: int = 2

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise ConfigError(f"dimension must be 2 or 3, got {self.dim}")
        if self.R <= 0:
            raise ConfigError("grid half-width R must be positive")
        if self.n_per_axis < 3:
            raise ConfigError("grid needs at least 3 points per axis")

    @property
    def h(self) -> float:
        return 2.0 * self.R / (self.n_per_axis - 1)

    @property
    def axis(self) -> np.ndarray:
        return np.linspace(-self.R, self.R, self.n_per_axis)

    @property
    def shape(self) -> tuple:
        return (self.n_per_axis,) * self.dim

    def mesh(self):
        return np.meshgrid(*([self.axis] * self.dim), indexing="ij")

    def interior_mesh(self):
        return [X[(slice(1, -1),) * self.dim] for X in self.mesh()]

    @property
    def interior_volume(self) -> float:
        return (2.0 * self.R - 2 * self.h) ** self.dim

    def gamma_index(self) -> tuple:
        """Index of the Gamma nodes: x_d = R with the other coordinates strictly inside."""
        return (slice(1, -1),) * (self.dim - 1) + (self.n_per_axis - 1,)

    def refined(self) -> "SpaceGrid":
        return SpaceGrid(self.R, 2 * self.n_per_axis - 1, self.dim)


@dataclass(frozen=True)
class SampledField:
    grid: SpaceGrid
    k: np.ndarray
    values: np.ndarray  # grid.shape + (len(k),), complex

    def __post_init__(self):
        expected = self.grid.shape + (len(self.k),)
        if self.values.shape != expected:
            raise ValueError(f"field has shape {self.values.shape}, expected {expected}")

    def with_values(self, values) -> "SampledField":
        return SampledField(self.grid, self.k, values)


@dataclass(frozen=True)
class CauchyData:
    """g0 = u and g1 = d u / d x_d on the Gamma nodes, one column per k node."""

    grid: SpaceGrid
    k: np.ndarray
    g0: np.ndarray
    g1: np.ndarray

    def __post_init__(self):
        m = (self.grid.n_per_axis - 2,) * (self.grid.dim - 1) + (len(self.k),)
        if self.g0.shape != m or self.g1.shape != m:
            raise ValueError(f"Cauchy data shapes {self.g0.shape}, {self.g1.shape}; expected {m}")


# -- finite differences --------------------------------------------------------

def _check_grid(f, dim):
    if any(s < 3 for s in f.shape[:dim]):
        raise ValueError("finite differences need at least 3 points per axis")


def _shift(f, axis, offset, dim):
    idx = [slice(1, -1)] * dim
    idx[axis] = slice(1 + offset, f.shape[axis] - 1 + offset)
    return f[tuple(idx)]


def interior(f, dim=2):
    return f[(slice(1, -1),) * dim]


def gradient(f, h, dim=2):
    """Central differences on the interior; shape (dim,) + interior shape."""
    f = np.asarray(f)
    _check_grid(f, dim)
    return np.stack([(_shift(f, a, 1, dim) - _shift(f, a, -1, dim)) / (2 * h) for a in range(dim)])


def laplacian(f, h, dim=2):
    """(2 dim + 1)-point Laplacian on the interior."""
    f = np.asarray(f)
    _check_grid(f, dim)
    out = -2.0 * dim * interior(f, dim)
    for a in range(dim):
        out = out + _shift(f, a, 1, dim) + _shift(f, a, -1, dim)
    return out / h**2


# -- change of variables -------------------------------------------------------

def incident_field(grid: SpaceGrid, k) -> SampledField:
    """Downward plane wave exp(-i k x_d)."""
    k = np.asarray(k, dtype=float)
    xd = grid.mesh()[-1]
    return SampledField(grid, k, np.exp(-1j * xd[..., None] * k))


def total_to_p(u: SampledField) -> SampledField:
    """p = u / u_in."""
    mod = np.abs(u.values)
    if np.any(mod < MIN_MODULUS):
        flat = int(np.argmin(mod))
        where = np.unravel_index(flat, mod.shape)
        raise VanishingFieldError(tuple(int(i) for i in where[:-1]), int(where[-1]), float(mod.flat[flat]))
    return u.with_values(u.values / incident_field(u.grid, u.k).values)


def unwrap_log(p, step_limit=DEFAULT_STEP_LIMIT):
    """log p along the last axis with a branch continuous in k.

    The principal branch is taken at the first node; the phase then follows
    the wrapped increments angle(p_q / p_{q-1}). An increment whose size is
    at least ``step_limit`` cannot be told apart from its 2 pi alias, so it
    raises BranchTrackingError naming the first offending point.
    """
    p = np.asarray(p, dtype=complex)
    steps = np.angle(p[..., 1:] / p[..., :-1])
    bad = np.abs(steps) >= step_limit
    if np.any(bad):
        where = np.argwhere(bad)[0]
        point = tuple(int(i) for i in where[:-1])
        q = int(where[-1]) + 1
        raise BranchTrackingError(point, q, float(steps[tuple(where)]))
    phase = np.concatenate([np.angle(p[..., :1]), steps], axis=-1).cumsum(axis=-1)
    return np.log(np.abs(p)) + 1j * phase


def p_to_v(p: SampledField, step_limit=DEFAULT_STEP_LIMIT) -> SampledField:
    """v = log(p) / k^2 with the k-continuous branch of ``unwrap_log``."""
    return p.with_values(unwrap_log(p.values, step_limit) / p.k**2)


def k_derivative(v: SampledField) -> SampledField:
    """d v / d k by second-order differences on the (possibly non-uniform) k nodes."""
    if len(v.k) < 3:
        raise ValueError("k derivative needs at least 3 nodes")
    return v.with_values(np.gradient(v.values, v.k, axis=-1, edge_order=2))


# -- coefficient recovery ------------------------------------------------------

def hev_operator(v, k, h, dim=2):
    """lap v + k^2 grad v . grad v - 2ik d_{x_d} v on the interior, per k node.

    The dot product is unconjugated. With the true v this equals -a(x).
    """
    g = gradient(v, h, dim)
    return laplacian(v, h, dim) + k**2 * np.sum(g * g, axis=0) - 2j * k * g[-1]


@dataclass(frozen=True)
class RecoveredCoefficient:
    a: np.ndarray  # interior, real part of the k-average
    per_node: np.ndarray  # interior x k, complex
    max_imag: float
    spread: float  # largest std over k of Re a(x)


def recover_a(v: SampledField) -> RecoveredCoefficient:
    """a(x) = -(lap v + k^2 |grad v|^2 - 2ik d_{x_d} v), averaged over the k nodes."""
    per_node = -hev_operator(v.values, v.k, v.grid.h, v.grid.dim)
    mean = per_node.mean(axis=-1)
    return RecoveredCoefficient(
        a=mean.real,
        per_node=per_node,
        max_imag=float(np.abs(mean.imag).max()),
        spread=float(per_node.real.std(axis=-1).max()),
    )
