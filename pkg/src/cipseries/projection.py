"""Fourier coefficients in the exponential-polynomial basis, the projection
P_N onto T_N = span{Phi_1..Phi_N}, and numerical checks of its H^1 behaviour."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .basis import OrthonormalBasis, QuadratureRule, inner_product


@dataclass(frozen=True)
class CoeffVector:
    values: np.ndarray  # (N, ...) complex; trailing axes index spatial points
    basis: OrthonormalBasis

    @property
    def N(self) -> int:
        return self.values.shape[0]

    def __iter__(self):
        return iter(self.values)


def default_rule(basis: OrthonormalBasis) -> QuadratureRule:
    return basis.band.rule(2 * basis.N + 8)


def _sample(f, rule: QuadratureRule):
    if callable(f):
        return np.asarray(f(rule.nodes))
    f = np.asarray(f)
    if f.shape[-1] != len(rule.nodes):
        raise ValueError(
            f"function sampled at {f.shape[-1]} points but the rule has {len(rule.nodes)} nodes"
        )
    return f


def fourier_coeffs(f, basis: OrthonormalBasis, N: int | None = None,
                   rule: QuadratureRule | None = None) -> CoeffVector:
    """u_n = int u(k) Phi_n(k) dk for n = 1..N.

    ``f`` is a callable of k or an array whose last axis holds samples at the
    nodes of ``rule``. Leading axes of an array are kept, so the coefficient
    fields v_n(x) of a sampled v(x, k) come out of one call.
    """
    N = basis.N if N is None else N
    rule = default_rule(basis) if rule is None else rule
    samples = _sample(f, rule)
    phi = basis.values(rule.nodes, N)  # (N, q)
    vals = np.einsum("nq,...q->n...", phi * rule.weights, samples)
    return CoeffVector(vals, basis)


def synthesize(coeffs, basis: OrthonormalBasis, k, derivative: bool = False):
    """sum_n c_n Phi_n(k) (or Phi_n'(k)); output has k on the last axis."""
    c = coeffs.values if isinstance(coeffs, CoeffVector) else np.asarray(coeffs)
    N = c.shape[0]
    phi = basis.derivatives(k, N) if derivative else basis.values(k, N)
    return np.einsum("n...,nq->...q", c, phi)


def project(f, basis: OrthonormalBasis, N: int | None = None,
            rule: QuadratureRule | None = None, k=None):
    """P_N f sampled at ``k`` (default: the rule nodes)."""
    rule = default_rule(basis) if rule is None else rule
    c = fourier_coeffs(f, basis, N, rule)
    return synthesize(c, basis, rule.nodes if k is None else k)


def l2_norm(values, rule: QuadratureRule) -> float:
    return float(np.sqrt(np.sum(rule.integrate(np.abs(values) ** 2))))


def l2_projection_error(f, basis, N, rule=None) -> float:
    rule = default_rule(basis) if rule is None else rule
    samples = _sample(f, rule)
    return l2_norm(project(samples, basis, N, rule) - samples, rule)


def h1_projection_error(f, df, basis: OrthonormalBasis, N: int,
                        rule: QuadratureRule | None = None) -> float:
    """||(P_N f)' - f'|| in L^2 of the band, with (P_N f)' from exact basis derivatives."""
    rule = default_rule(basis) if rule is None else rule
    c = fourier_coeffs(f, basis, N, rule)
    dproj = synthesize(c, basis, rule.nodes, derivative=True)
    return l2_norm(dproj - _sample(df, rule), rule)


def h_norm(coeffs, basis: OrthonormalBasis) -> float:
    """Weighted norm sqrt(sum |u_n|^2 ||Phi_n'||^2) over the supplied coefficients."""
    c = coeffs.values if isinstance(coeffs, CoeffVector) else np.asarray(coeffs)
    w = basis.deriv_norms[: c.shape[0]] ** 2
    return float(np.sqrt(np.sum(w * np.abs(c) ** 2)))


def h_tail_norm(coeffs, basis: OrthonormalBasis, N: int) -> float:
    """||u - P_N u|| in the weighted norm: the part of the sum with n > N."""
    c = coeffs.values if isinstance(coeffs, CoeffVector) else np.asarray(coeffs)
    w = basis.deriv_norms[N: c.shape[0]] ** 2
    return float(np.sqrt(np.sum(w * np.abs(c[N:]) ** 2)))


def derivative_inner_products(basis: OrthonormalBasis, N: int | None = None) -> np.ndarray:
    """Gram matrix (Phi_m', Phi_n') from exact moments."""
    N = basis.N if N is None else N
    d = [e.derivative() for e in basis.elements[:N]]
    return np.array([[inner_product(d[m], d[n], basis.band) for n in range(N)] for m in range(N)])


def inverse_inequality_check(w_coeffs, basis: OrthonormalBasis | None = None):
    """Return (||w'||^2, N^2 sum |w_n|^2 ||Phi_n'||^2) for w = sum w_n Phi_n in T_N."""
    if isinstance(w_coeffs, CoeffVector):
        basis = w_coeffs.basis if basis is None else basis
        w = w_coeffs.values
    else:
        w = np.asarray(w_coeffs)
    N = len(w)
    G = derivative_inner_products(basis, N)
    lhs = float(np.real(np.conj(w) @ G @ w))
    rhs = float(N**2 * np.sum(np.abs(w) ** 2 * basis.deriv_norms[:N] ** 2))
    return lhs, rhs


@dataclass(frozen=True)
class DecayFit:
    C: float
    beta: float
    beta_exceeds_one: bool
    super_algebraic: bool
    tail_index: int  # smallest N with |u_n| < tail_tol for every n > N
    series_partial_sums: np.ndarray
    series_appears_convergent: bool
    defined: bool = True

    def summary(self) -> str:
        if not self.defined:
            return "undefined (all coefficients vanish)"
        kind = "super-algebraic" if self.super_algebraic else f"algebraic, beta={self.beta:.3f}"
        return f"{kind}; C={self.C:.3e}; tail index {self.tail_index}"


def coefficient_decay_fit(coeffs, basis: OrthonormalBasis | None = None,
                          tail_tol: float = 1e-6, zero_tol: float = 1e-12) -> DecayFit:
    """Fit |u_n| ~ C n^(-beta) by least squares in log-log coordinates.

    Coefficients below ``zero_tol`` times the largest are treated as exact
    zeros. If such zeros make up the whole tail the decay is reported as
    super-algebraic. The partial sums of ||Phi_n'||^2 / n^(2(beta-1)) are
    returned with a ratio diagnostic (last terms shrinking).
    """
    if isinstance(coeffs, CoeffVector):
        basis = coeffs.basis if basis is None else basis
        coeffs = coeffs.values
    mag = np.abs(np.asarray(coeffs))
    if mag.ndim > 1:
        mag = mag.reshape(mag.shape[0], -1).max(axis=1)
    n_big = len(mag)
    if n_big < 6:
        raise ValueError("decay fit needs at least 6 coefficients")
    n = np.arange(1, n_big + 1)
    big = np.flatnonzero(mag >= tail_tol)
    tail_index = int(big[-1]) + 1 if big.size else 0
    top = mag.max()
    if top == 0.0:
        return DecayFit(np.nan, np.nan, False, False, 0, np.array([]), False, defined=False)
    nz = mag > zero_tol * top
    last_nz = int(np.flatnonzero(nz)[-1]) + 1
    super_alg = last_nz < n_big - 1
    if nz.sum() >= 2:
        slope, icpt = np.polyfit(np.log(n[nz]), np.log(mag[nz]), 1)
        beta, C = -slope, float(np.exp(icpt))
    else:
        beta, C = np.inf, float(top)
    if super_alg:
        beta = np.inf
    sums = np.array([])
    convergent = False
    if basis is not None and np.isfinite(beta):
        m = min(basis.N, n_big)
        terms = basis.deriv_norms[:m] ** 2 / n[:m] ** (2 * (beta - 1))
        sums = np.cumsum(terms)
        convergent = bool(m >= 3 and terms[-1] < terms[-2] < terms[-3])
    elif np.isinf(beta):
        convergent = True
    return DecayFit(C, float(beta), bool(beta > 1), bool(super_alg), tail_index, sums, convergent)


def h1_error_chain(f, df, basis: OrthonormalBasis, N: int, rule: QuadratureRule | None = None):
    """Terms of the H^1 triangle inequality with w = P_N f.

    Returns (lhs, weighted_term, approx_term, proj_term) where
    lhs = ||(P_N f)' - f'||, weighted_term = N ||f - P_N f||_H (tail over the
    available basis), approx_term = ||w' - f'||, proj_term = ||P_N f' - f'||.
    """
    rule = default_rule(basis) if rule is None else rule
    full = fourier_coeffs(f, basis, None, rule)
    lhs = h1_projection_error(f, df, basis, N, rule)
    weighted = N * h_tail_norm(full, basis, N)
    w_prime = synthesize(CoeffVector(full.values[:N], basis), basis, rule.nodes, derivative=True)
    approx = l2_norm(w_prime - _sample(df, rule), rule)
    proj = l2_projection_error(df, basis, N, rule)
    return lhs, weighted, approx, proj


def named_function(name: str, band, basis: OrthonormalBasis | None = None
                   ) -> tuple[Callable, Callable]:
    """Test functions for the projection study: gaussian, sin, in-span:M."""
    k0 = band.k0
    if name == "gaussian":
        return (lambda k: np.exp(-4 * (k - k0) ** 2),
                lambda k: -8 * (k - k0) * np.exp(-4 * (k - k0) ** 2))
    if name == "sin":
        return lambda k: np.sin(3 * k), lambda k: 3 * np.cos(3 * k)
    if name.startswith("in-span:"):
        M = int(name.split(":", 1)[1])
        if basis is None or M > basis.N:
            raise ValueError(f"in-span:{M} needs a basis with at least {M} elements")
        c = 1.0 / np.arange(1, M + 1)
        return (lambda k: c @ basis.values(k, M), lambda k: c @ basis.derivatives(k, M))
    raise ValueError(f"unknown test function {name!r}")
