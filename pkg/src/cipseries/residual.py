"""Residual of the k-differentiated log-field equation and its truncated-series
counterpart.

For v(x, k) the residual is

    h = lap(d_k v) + 2k grad v . grad(v + k d_k v) - 2i (d_{x_d} v + k d_{x_d} d_k v)

and h_N is the same expression with v replaced by P_N v (projection in k at
every x, with d_k P_N v taken from exact basis derivatives). ``decay_study``
tabulates ||h_N - h|| over Omega_int x band for a list of N. A small residual
says the truncated equation is close to the exact one; it does not say that
a coefficient reconstructed from the truncated system is close to the true a.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .basis import Band, OrthonormalBasis, QuadratureRule, build_basis
from .fields import (SpaceGrid, gradient, k_derivative, laplacian, p_to_v, total_to_p)
from .galerkin import GalerkinSystem, apply_system, assemble_system
from .profiles import Gaussian, RadialBump
from .projection import coefficient_decay_fit, fourier_coeffs, synthesize
from .scattering import Medium, solve_lippmann_schwinger

MONOTONE_SLACK = 0.05
REL_THRESHOLD = 1e-2
TAIL_TOL = 1e-6


# -- h and h_N -----------------------------------------------------------------

def compute_h(v, dkv, k, h, dim=2):
    """Residual field on the interior from v and d_k v sampled on the grid."""
    if dkv is None:
        raise ValueError("compute_h needs d_k v")
    v = np.asarray(v)
    dkv = np.asarray(dkv)
    k = np.asarray(k)
    gv = gradient(v, h, dim)
    gw = gradient(v + k * dkv, h, dim)
    gdk = gradient(dkv, h, dim)
    return (laplacian(dkv, h, dim) + 2 * k * np.sum(gv * gw, axis=0)
            - 2j * (gv[-1] + k * gdk[-1]))


def _h_from_projected(grad_v, lap_dv, grad_dv, k):
    # same expression as compute_h but from already differentiated pieces
    gw = grad_v + k * grad_dv
    return lap_dv + 2 * k * np.sum(grad_v * gw, axis=0) - 2j * (grad_v[-1] + k * grad_dv[-1])


def coefficient_fields(v, basis: OrthonormalBasis, N: int, rule: QuadratureRule):
    """V(x) = (v_1(x), ..., v_N(x)) with v_n = int v Phi_n dk; shape (N,) + grid."""
    return fourier_coeffs(v, basis, N, rule).values


def compute_hN(v, basis: OrthonormalBasis, N: int, h: float, rule: QuadratureRule,
               k_eval=None, form: str = "direct", dim: int = 2):
    """h_N on the interior at the wavenumbers ``k_eval`` (default: rule nodes).

    ``form="direct"`` differentiates P_N v in x; ``form="commuted"`` projects
    the x-derivatives of v instead. Both use d_k P_N v = sum v_n Phi_n'.
    """
    if N > basis.N:
        raise ValueError(f"N={N} exceeds the basis size {basis.N}")
    k_eval = rule.nodes if k_eval is None else np.asarray(k_eval)
    if form == "direct":
        V = coefficient_fields(v, basis, N, rule)
        pv = synthesize(V, basis, k_eval)
        dpv = synthesize(V, basis, k_eval, derivative=True)
        return compute_h(pv, dpv, k_eval, h, dim)
    if form == "commuted":
        lap_c = coefficient_fields(laplacian(v, h, dim), basis, N, rule)
        grad_c = np.stack([coefficient_fields(g, basis, N, rule) for g in gradient(v, h, dim)])
        lap_dv = synthesize(lap_c, basis, k_eval, derivative=True)
        grad_v = np.stack([synthesize(g, basis, k_eval) for g in grad_c])
        grad_dv = np.stack([synthesize(g, basis, k_eval, derivative=True) for g in grad_c])
        return _h_from_projected(grad_v, lap_dv, grad_dv, k_eval)
    raise ValueError(f"unknown form {form!r}")


def interior_weights(grid: SpaceGrid) -> np.ndarray:
    """Trapezoidal weights over the interior box, shape of the interior."""
    m = grid.n_per_axis - 2
    w1 = np.full(m, grid.h)
    w1[[0, -1]] *= 0.5
    w = w1
    for _ in range(grid.dim - 1):
        w = np.multiply.outer(w, w1)
    return w


def residual_norm(hN, h, grid: SpaceGrid, rule: QuadratureRule) -> float:
    """L^2(Omega_int x band) norm of hN - h."""
    hN = np.asarray(hN)
    h = np.asarray(h)
    if hN.shape != h.shape:
        raise ValueError(f"shape mismatch {hN.shape} vs {h.shape}")
    d2 = np.abs(hN - h) ** 2
    return float(np.sqrt(np.sum(rule.integrate(d2) * interior_weights(grid))))


def field_norm(f, grid, rule) -> float:
    return residual_norm(f, np.zeros_like(f), grid, rule)


# -- Galerkin system -----------------------------------------------------------

def system_residual(V, system: GalerkinSystem, h: float, dim: int = 2):
    """D lap V + B sum_j d_jV . d_jV + S d_{x_d}V on the interior, shape (N,) + interior."""
    V = np.asarray(V)
    if V.shape[0] != system.N:
        raise ValueError(f"{V.shape[0]} coefficient fields for a system with N={system.N}")
    lap = np.stack([laplacian(vn, h, dim) for vn in V])
    grad = np.stack([gradient(vn, h, dim) for vn in V], axis=1)  # (d, N, ...)
    return apply_system(system, lap, grad)


def hN_moments(V, basis: OrthonormalBasis, h: float, dim: int = 2, order: int | None = None):
    """int Phi_m h_N dk for m = 1..N, with h_N built from the coefficient fields V.

    h_N is a polynomial-times-exponential in k once V is fixed, so a Gauss
    rule of order 3N + 8 integrates it to rounding.
    """
    N = V.shape[0]
    fine = basis.band.rule(order or 3 * N + 8)
    pv = synthesize(V, basis, fine.nodes)
    dpv = synthesize(V, basis, fine.nodes, derivative=True)
    hN = compute_h(pv, dpv, fine.nodes, h, dim)
    return np.einsum("mq,...q->m...", basis.values(fine.nodes, N) * fine.weights, hN)


def galerkin_gap(V, basis: OrthonormalBasis, system: GalerkinSystem, h: float, dim: int = 2) -> float:
    """Largest |system_residual - int Phi_m h_N dk| over components and interior points."""
    return float(np.abs(system_residual(V, system, h, dim) - hN_moments(V, basis, h, dim)).max())


# -- pieces of the convergence argument ----------------------------------------

@dataclass(frozen=True)
class QuadraticPieces:
    """P_N grad v, grad v and their k-derivatives on the interior (d, ..., q)."""

    k: np.ndarray
    A: np.ndarray
    E: np.ndarray
    Ak: np.ndarray
    Ek: np.ndarray

    def gap(self):
        k = self.k
        return (2 * k * np.sum(self.A * (self.A + k * self.Ak), axis=0)
                - 2 * k * np.sum(self.E * (self.E + k * self.Ek), axis=0))

    def four_terms(self):
        k, A, E, Ak, Ek = self.k, self.A, self.E, self.Ak, self.Ek
        return (2 * k * np.sum((A - E) * A, axis=0) + 2 * k * np.sum(E * (A - E), axis=0)
                + 2 * k**2 * np.sum((A - E) * Ak, axis=0) + 2 * k**2 * np.sum(E * (Ak - Ek), axis=0))


def quadratic_pieces(v, dkv, basis, N, h, rule, dim=2) -> QuadraticPieces:
    E = gradient(v, h, dim)
    Ek = gradient(dkv, h, dim)
    coeffs = [coefficient_fields(e, basis, N, rule) for e in E]
    A = np.stack([synthesize(c, basis, rule.nodes) for c in coeffs])
    Ak = np.stack([synthesize(c, basis, rule.nodes, derivative=True) for c in coeffs])
    return QuadraticPieces(rule.nodes, A, E, Ak, Ek)


def quadratic_bound(pieces: QuadraticPieces, rule: QuadratureRule, k_hi: float):
    """Per-point (int |g_N|^2 dk, bound) with the bound

    8 k_hi^2 |A-E|^2 |E|^2 + 4 k_hi^4 |A-E|^2 |A_k|^2 + 4 k_hi^4 |E|^2 |A_k-E_k|^2,

    each |.| an L^2 norm in k summed over gradient components.
    """
    def sq(f):
        return np.sum(rule.integrate(np.abs(f) ** 2), axis=0)

    A, E, Ak, Ek = pieces.A, pieces.E, pieces.Ak, pieces.Ek
    lhs = rule.integrate(np.abs(pieces.gap()) ** 2)
    rhs = (8 * k_hi**2 * sq(A - E) * sq(E) + 4 * k_hi**4 * sq(A - E) * sq(Ak)
           + 4 * k_hi**4 * sq(E) * sq(Ak - Ek))
    return lhs, rhs


# -- test vehicles -------------------------------------------------------------

@dataclass(frozen=True)
class SpanProfile:
    """sum_n c_n Phi_n(k): a k-profile lying in T_M."""

    basis: OrthonormalBasis
    coeffs: tuple

    def __call__(self, k):
        return np.asarray(self.coeffs) @ self.basis.values(k, len(self.coeffs))

    def derivative(self, k):
        return np.asarray(self.coeffs) @ self.basis.derivatives(k, len(self.coeffs))


@dataclass(frozen=True)
class ManufacturedField:
    """v(x, k) = phi(x) chi(k) with closed-form derivatives."""

    phi: RadialBump
    chi: object  # callable with .derivative

    def sample(self, grid: SpaceGrid, k):
        X = grid.mesh()
        phi = self.phi(*X)[..., None]
        return phi * self.chi(k), phi * self.chi.derivative(k)

    def exact_h(self, grid: SpaceGrid, k, chi=None, dchi=None):
        """Closed-form h on the interior nodes; pass chi/dchi to get h_N instead."""
        k = np.asarray(k)
        chi = self.chi(k) if chi is None else chi
        dchi = self.chi.derivative(k) if dchi is None else dchi
        X = grid.interior_mesh()
        g = self.phi.gradient(*X)
        gg = np.sum(g * g, axis=0)[..., None]
        lap = self.phi.laplacian(*X)[..., None]
        return dchi * lap + 2 * k * chi * (chi + k * dchi) * gg - 2j * (chi + k * dchi) * g[-1][..., None]


def default_manufactured(band: Band, center=(0.0, 0.0), radius=0.5, plateau=0.2,
                         amplitude=0.5 + 0.25j, alpha=1.0) -> ManufacturedField:
    return ManufacturedField(RadialBump(tuple(center), radius, amplitude, plateau),
                             Gaussian(band.k0, alpha))


@dataclass
class ResidualProblem:
    """v and d_k v on grid x rule nodes together with the reference h."""

    grid: SpaceGrid
    rule: QuadratureRule
    basis: OrthonormalBasis
    v: np.ndarray
    dkv: np.ndarray
    h: np.ndarray
    source: str
    meta: dict = field(default_factory=dict)


def manufactured_problem(band: Band, grid: SpaceGrid, rule_order: int = 24,
                         field_: ManufacturedField | None = None, basis_size: int = 12,
                         exact_h: bool = False) -> ResidualProblem:
    rule = band.rule(rule_order)
    field_ = field_ or default_manufactured(band)
    v, dkv = field_.sample(grid, rule.nodes)
    h = field_.exact_h(grid, rule.nodes) if exact_h else compute_h(v, dkv, rule.nodes, grid.h, grid.dim)
    return ResidualProblem(grid, rule, build_basis(band, basis_size), v, dkv, h, "manufactured",
                           {"rule_order": rule_order})


def solver_problem(band: Band, grid: SpaceGrid, medium: Medium, n_k: int = 8,
                   basis_size: int | None = None) -> ResidualProblem:
    """v from the forward solver at the Gauss nodes of the band, d_k v by differences."""
    rule = band.rule(n_k)
    sol = solve_lippmann_schwinger(medium, grid, rule.nodes)
    v = p_to_v(total_to_p(sol.u))
    dkv = k_derivative(v)
    h = compute_h(v.values, dkv.values, rule.nodes, grid.h, grid.dim)
    basis = build_basis(band, basis_size or min(n_k, 12))
    return ResidualProblem(grid, rule, basis, v.values, dkv.values, h, "solver",
                           {"n_k": n_k, "solver": sol.diagnostics})


# -- decay study ---------------------------------------------------------------

@dataclass(frozen=True)
class ReportRow:
    N: int
    abs_residual: float
    rel_residual: float
    galerkin_gap: float


@dataclass
class ResidualReport:
    rows: list
    h_norm: float
    tail_index: int
    source: str

    HEADER = ("N", "abs_residual", "rel_residual", "galerkin_gap")

    @property
    def rel(self):
        return np.array([r.rel_residual for r in self.rows])

    def near_monotone(self, slack: float = MONOTONE_SLACK) -> bool:
        """||h_N - h|| <= ||h_N' - h|| + slack ||h|| for every later row N > N'."""
        rel = self.rel
        return bool(all(np.all(rel[i + 1:] <= rel[i] + slack) for i in range(len(rel))))

    def strictly_decreasing(self) -> bool:
        return bool(np.all(np.diff(self.rel) < 0))

    def threshold_row(self):
        """First row with N >= the tail index (all later coefficients < TAIL_TOL)."""
        for r in self.rows:
            if r.N >= self.tail_index:
                return r
        return None

    def meets_threshold(self, threshold: float = REL_THRESHOLD):
        row = self.threshold_row()
        return None if row is None else row.rel_residual < threshold

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.HEADER)
        for r in self.rows:
            w.writerow([r.N, repr(r.abs_residual), repr(r.rel_residual), repr(r.galerkin_gap)])
        return buf.getvalue()


def decay_study(problem: ResidualProblem, n_list) -> ResidualReport:
    n_list = list(n_list)
    if any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise ValueError("N list must be strictly increasing")
    if n_list and n_list[-1] > problem.basis.N:
        raise ValueError(f"N={n_list[-1]} exceeds the basis size {problem.basis.N}")
    g, rule, basis = problem.grid, problem.rule, problem.basis
    href = field_norm(problem.h, g, rule)
    rows = []
    for N in n_list:
        hN = compute_hN(problem.v, basis, N, g.h, rule, dim=g.dim)
        err = residual_norm(hN, problem.h, g, rule)
        V = coefficient_fields(problem.v, basis, N, rule)
        gap = galerkin_gap(V, basis, assemble_system(basis.truncated(N)), g.h, g.dim)
        rows.append(ReportRow(N, err, err / href if href > 0 else 0.0, gap))
    n_big = min(basis.N, len(rule))
    coeffs = coefficient_fields(problem.v, basis, n_big, rule)
    tail = coefficient_decay_fit(coeffs, basis, tail_tol=TAIL_TOL).tail_index if n_big >= 6 else n_big
    return ResidualReport(rows, href, tail, problem.source)
