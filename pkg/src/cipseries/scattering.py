"""Two-dimensional direct scattering for lap u + k^2 (1 + a) u = 0 with the
incident wave exp(-i k x_2) and an outgoing scattered field.

The Lippmann-Schwinger equation u = u_in + k^2 int G_k(x, y) a(y) u(y) dy
is collocated on the grid nodes where a > 0 (midpoint rule, cell area h^2)
and solved densely. The self cell uses the kernel integrated exactly over
the disk of equal area. Because the unknowns sit on the nodes of the same
grid, the field everywhere in Omega is one discrete convolution away.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import signal, special

from .errors import ConfigError, SingularSystemError, SupportTooLargeError
from .fields import CauchyData, SampledField, SpaceGrid, incident_field
from .profiles import RadialBump

log = logging.getLogger(__name__)

MAX_DENSE_UNKNOWNS = 64 * 64


def greens_kernel(k, x, y):
    """(i/4) H_0^(1)(k |x - y|), the outgoing fundamental solution of lap + k^2."""
    r = np.sqrt(sum((np.asarray(xi) - np.asarray(yi)) ** 2 for xi, yi in zip(x, y)))
    if np.any(r == 0):
        raise ValueError("Green's kernel is singular at coincident points")
    return 0.25j * special.hankel1(0, k * r)


def self_cell_integral(k, h):
    """int over the disk of area h^2 of (i/4) H_0^(1)(k r) dA."""
    rho = h / np.sqrt(np.pi)
    return 0.5j * np.pi * rho / k * special.hankel1(1, k * rho) - 1.0 / k**2


@dataclass(frozen=True)
class Medium:
    """Nonnegative radial bump a(x) with a constant plateau."""

    center: tuple = (0.0, 0.0)
    radius: float = 0.5
    contrast: float = 0.5
    plateau: float = 0.2

    def __post_init__(self):
        if self.contrast < 0:
            raise ConfigError("contrast must be nonnegative")
        if self.radius <= 0:
            raise ConfigError("bump radius must be positive")
        if not 0 <= self.plateau < self.radius:
            raise ConfigError("plateau must lie in [0, radius)")

    def check_inside(self, R):
        reach = max(abs(c) for c in self.center) + self.radius
        if reach >= R:
            raise ConfigError(f"support touches boundary: bump reaches {reach} >= R={R}")

    @property
    def profile(self) -> RadialBump:
        return RadialBump(tuple(self.center), self.radius, self.contrast, self.plateau)

    def __call__(self, *x):
        return np.real(self.profile(*x))


@dataclass
class ScatteringSolution:
    grid: SpaceGrid
    medium: Medium
    u: SampledField
    support: tuple  # index arrays of the collocation nodes
    density: np.ndarray  # (n_support, n_k): k^2 a u h^2 at the collocation nodes
    diagnostics: dict = field(default_factory=dict)

    @property
    def k(self):
        return self.u.k

    def source_points(self):
        ax = self.grid.axis
        return tuple(ax[i] for i in self.support)

    def evaluate(self, points, derivative_axis=None):
        """u (or d u / d x_axis) at arbitrary points off the collocation nodes.

        ``points`` is a tuple of coordinate arrays; returns shape
        points_shape + (n_k,).
        """
        pts = [np.asarray(p, dtype=float)[..., None] for p in points]
        src = self.source_points()
        diff = [p - s for p, s in zip(pts, src)]
        r = np.sqrt(sum(d**2 for d in diff))
        if np.any(r == 0):
            raise ValueError("evaluation point coincides with a collocation node")
        out = []
        for q, k in enumerate(self.k):
            if derivative_axis is None:
                kern = 0.25j * special.hankel1(0, k * r)
                inc = np.exp(-1j * k * pts[-1][..., 0])
            else:
                kern = -0.25j * k * special.hankel1(1, k * r) * diff[derivative_axis] / r
                inc = (-1j * k * np.exp(-1j * k * pts[-1][..., 0])
                       if derivative_axis == len(pts) - 1 else np.zeros(pts[0].shape[:-1]))
            out.append(inc + kern @ self.density[:, q])
        return np.stack(out, axis=-1)


def _kernel_table(k, grid):
    # discrete kernel on all node offsets, (2n-1)^d entries, centre = self cell
    n, h = grid.n_per_axis, grid.h
    off = np.arange(-(n - 1), n) * h
    X, Y = np.meshgrid(off, off, indexing="ij")
    r = np.hypot(X, Y)
    r[n - 1, n - 1] = 1.0
    K = 0.25j * special.hankel1(0, k * r) * h**2
    K[n - 1, n - 1] = self_cell_integral(k, h)
    return K


def _convolve(K, q_grid, n):
    full = signal.fftconvolve(q_grid, K, mode="full")
    return full[n - 1: 2 * n - 1, n - 1: 2 * n - 1]


def solve_lippmann_schwinger(medium: Medium, grid: SpaceGrid, k,
                             max_unknowns: int = MAX_DENSE_UNKNOWNS) -> ScatteringSolution:
    """Total field on the grid for every wavenumber in ``k``."""
    if grid.dim != 2:
        raise ConfigError("the forward solver is implemented for d = 2 only")
    medium.check_inside(grid.R)
    k = np.atleast_1d(np.asarray(k, dtype=float))
    n = grid.n_per_axis
    a = medium(*grid.mesh())
    support = np.nonzero(a > 0)
    m = support[0].size
    if m > max_unknowns:
        raise SupportTooLargeError(
            f"{m} collocation nodes exceed the dense limit {max_unknowns}; coarsen the grid"
        )
    u_in = incident_field(grid, k).values
    u = u_in.copy()
    density = np.zeros((m, len(k)), dtype=complex)
    diag = {"unknowns": m, "linear_residual": [], "k": k.tolist()}
    if m == 0:
        return ScatteringSolution(grid, medium, SampledField(grid, k, u), support, density, diag)

    a_s = a[support]
    di = support[0][:, None] - support[0][None, :] + n - 1
    dj = support[1][:, None] - support[1][None, :] + n - 1
    for q, kq in enumerate(k):
        K = _kernel_table(kq, grid)
        A = -kq**2 * K[di, dj] * a_s[None, :]
        A[np.diag_indices(m)] += 1.0
        rhs = u_in[support + (q,)]
        try:
            u_s = np.linalg.solve(A, rhs)
        except np.linalg.LinAlgError:
            raise SingularSystemError(kq, np.linalg.cond(A)) from None
        res = np.linalg.norm(A @ u_s - rhs) / np.linalg.norm(rhs)
        diag["linear_residual"].append(float(res))
        density[:, q] = kq**2 * a_s * u_s
        q_grid = np.zeros((n, n), dtype=complex)
        q_grid[support] = density[:, q]
        u[..., q] = u_in[..., q] + _convolve(K, q_grid, n)
        u[support + (q,)] = u_s
        log.debug("k=%.4f: %d unknowns, relative residual %.2e", kq, m, res)
    # density is stored with the cell area folded in, matching the point kernel
    density *= grid.h**2
    return ScatteringSolution(grid, medium, SampledField(grid, k, u), support, density, diag)


def born_approximation(medium: Medium, grid: SpaceGrid, k) -> SampledField:
    """u_in + k^2 int G a u_in with the same discrete kernel as the solver."""
    k = np.atleast_1d(np.asarray(k, dtype=float))
    n = grid.n_per_axis
    a = medium(*grid.mesh())
    u_in = incident_field(grid, k).values
    out = u_in.copy()
    for q, kq in enumerate(k):
        out[..., q] += _convolve(_kernel_table(kq, grid), kq**2 * a * u_in[..., q], n)
    return SampledField(grid, k, out)


def extract_cauchy_data(solution: ScatteringSolution) -> CauchyData:
    """g0 = u and g1 = d u / d x_2 on Gamma, the latter from the kernel derivative."""
    grid = solution.grid
    x1 = grid.axis[1:-1]
    x2 = np.full_like(x1, grid.R)
    g0 = solution.evaluate((x1, x2))
    g1 = solution.evaluate((x1, x2), derivative_axis=grid.dim - 1)
    return CauchyData(grid, solution.k, g0, g1)
