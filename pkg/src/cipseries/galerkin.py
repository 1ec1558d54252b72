"""Matrices D, S and the block matrix B of the truncated quasilinear system

    D lap(V) + B sum_j d_j V . d_j V + S d_{x_d} V = 0,

obtained by testing the truncated k-differentiated equation against Phi_m.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .basis import OrthonormalBasis, exp_moment_integral, inner_product


@dataclass(frozen=True)
class GalerkinSystem:
    D: np.ndarray  # (N, N) real
    S: np.ndarray  # (N, N) complex
    B: np.ndarray  # (N, N, N) real, B[m, n, l] = b_mn^(l)

    @property
    def N(self) -> int:
        return self.D.shape[0]


def assemble_D(basis: OrthonormalBasis) -> np.ndarray:
    """d_mn = int Phi_m Phi_n' dk; upper triangular with unit diagonal."""
    N, band = basis.N, basis.band
    dphi = [e.derivative() for e in basis.elements]
    return np.array([[inner_product(basis.elements[m], dphi[n], band) for n in range(N)]
                     for m in range(N)])


def assemble_S(basis: OrthonormalBasis) -> np.ndarray:
    """s_mn = -2i int Phi_m (Phi_n + k Phi_n') dk."""
    N, band = basis.N, basis.band
    g = [e + e.derivative().times_k() for e in basis.elements]
    real = np.array([[inner_product(basis.elements[m], g[n], band) for n in range(N)]
                     for m in range(N)])
    return -2j * real


def assemble_B(basis: OrthonormalBasis) -> np.ndarray:
    """b_mn^(l) = int 2k Phi_m Phi_n (Phi_l + k Phi_l') dk, returned as B[m, n, l].

    The factor 2k sits inside the integral; only that placement makes the
    block system equal to the Phi_m-tested truncated equation.
    """
    N, band = basis.N, basis.band
    # 2k (Phi_l + k Phi_l') as one exponential polynomial per l
    g = [2.0 * (e + e.derivative().times_k()).times_k() for e in basis.elements]
    B = np.empty((N, N, N))
    for m in range(N):
        for n in range(m, N):
            for l in range(N):
                B[m, n, l] = exp_moment_integral(
                    [basis.elements[m].coeffs, basis.elements[n].coeffs, g[l].coeffs], band)
                B[n, m, l] = B[m, n, l]
    return B


def assemble_system(basis: OrthonormalBasis) -> GalerkinSystem:
    return GalerkinSystem(assemble_D(basis), assemble_S(basis), assemble_B(basis))


def derivative_matrix(basis: OrthonormalBasis) -> np.ndarray:
    """Matrix M with (Phi_1', ..., Phi_N')^T = M (Phi_1, ..., Phi_N)^T.

    Phi_m' = sum_n <Phi_m', Phi_n> Phi_n, so M is the transpose of D and is
    lower triangular with unit diagonal.
    """
    return assemble_D(basis).T


def bullet(P, V):
    """Stacked unconjugated dot products: (P . V)_m = sum_l P[m, l] V[l].

    ``P`` has shape (N, N, ...) and ``V`` shape (N, ...); trailing axes are
    broadcast, so a whole grid of points can be handled at once.
    """
    P = np.asarray(P)
    V = np.asarray(V)
    if P.ndim < 2 or P.shape[1] != V.shape[0]:
        raise ValueError(f"block vector of shape {P.shape} does not match vector of shape {V.shape}")
    return np.einsum("ml...,l...->m...", P, V)


def apply_system(system: GalerkinSystem, lap_V, grad_V, dxd_V=None):
    """D lap(V) + B sum_j d_jV . d_jV + S d_{x_d}V at every point.

    ``lap_V`` is (N, ...), ``grad_V`` is (d, N, ...); the last gradient
    component is taken as d_{x_d} unless ``dxd_V`` is given.
    """
    lap_V = np.asarray(lap_V)
    grad_V = np.asarray(grad_V)
    N = system.N
    if lap_V.shape[0] != N or grad_V.shape[1] != N:
        raise ValueError(f"coefficient fields carry {lap_V.shape[0]} components, system has N={N}")
    if dxd_V is None:
        dxd_V = grad_V[-1]
    quad = 0
    for dj in grad_V:
        # block product B dV gives an (N, N, ...) block vector, then . dV
        quad = quad + bullet(np.einsum("mnl,n...->ml...", system.B, dj), dj)
    return (np.einsum("mn,n...->m...", system.D, lap_V) + quad
            + np.einsum("mn,n...->m...", system.S, dxd_V))
