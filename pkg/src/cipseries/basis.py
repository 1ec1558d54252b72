"""Orthonormal exponential-polynomial basis of L^2(k_lo, k_hi).

The raw family is psi_n(k) = (k - k0)^(n-1) exp(k - k0), n = 1, 2, ...
Orthonormalization is done algebraically: every Phi_n is kept as
exp(k - k0) times a polynomial in t = k - k0, and all inner products are
reduced to the exact moments int_{-L}^{L} t^m exp(a t) dt.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import legendre
from numpy.polynomial import polynomial as P

from .errors import ConditioningError, ConfigError

N_MAX = 15
PIVOT_FLOOR = 1e-12


@dataclass(frozen=True)
class QuadratureRule:
    nodes: np.ndarray
    weights: np.ndarray

    def __len__(self):
        return len(self.nodes)

    def integrate(self, values, axis=-1):
        """Apply the rule along ``axis`` of an array sampled at the nodes."""
        values = np.asarray(values)
        if values.shape[axis] != len(self.nodes):
            raise ValueError(
                f"sampled axis has {values.shape[axis]} entries, rule has {len(self.nodes)} nodes"
            )
        return np.tensordot(values, self.weights, axes=([axis], [0]))


@dataclass(frozen=True)
class Band:
    """Wavenumber interval [k_lo, k_hi]."""

    k_lo: float
    k_hi: float

    def __post_init__(self):
        if not (np.isfinite(self.k_lo) and np.isfinite(self.k_hi)):
            raise ConfigError("band limits must be finite")
        if self.k_lo <= 0:
            raise ConfigError(f"band must lie in k > 0, got k_lo={self.k_lo}")
        if self.k_hi <= self.k_lo:
            raise ConfigError(f"band degenerate: k_lo={self.k_lo} >= k_hi={self.k_hi}")

    @property
    def k0(self) -> float:
        return 0.5 * (self.k_lo + self.k_hi)

    @property
    def half_width(self) -> float:
        return 0.5 * (self.k_hi - self.k_lo)

    @property
    def length(self) -> float:
        return self.k_hi - self.k_lo

    def rule(self, order: int) -> QuadratureRule:
        """Gauss-Legendre rule with ``order`` nodes mapped onto the band."""
        if order < 1:
            raise ValueError("quadrature order must be >= 1")
        x, w = legendre.leggauss(order)
        return QuadratureRule(self.k0 + self.half_width * x, self.half_width * w)


def _series_moment(m: int, L: float, rate: float) -> float:
    # int_{-L}^{L} t^m e^{rate t} dt expanded in the exponential: only terms with
    # m + j even survive and all of them are positive, so there is no cancellation.
    total = 0.0
    coef = 1.0  # rate^j / j!
    j = 0
    while True:
        if (m + j) % 2 == 0:
            term = coef * 2.0 * L ** (m + j + 1) / (m + j + 1)
            total += term
            if j > rate * L and term <= 1e-18 * total:
                break
        j += 1
        coef *= rate / j
        if j > 2000:
            break
    return total


def moment_integrals(band: Band, max_power: int, rate: float = 2.0) -> np.ndarray:
    """Moments I_m = int_{-L}^{L} t^m exp(rate * t) dt for m = 0..max_power.

    Uses the integration-by-parts recurrence
    ``I_m = [t^m e^{rate t} / rate]_{-L}^{L} - (m / rate) I_{m-1}``.
    Run upward it loses all accuracy after a handful of steps once m > rate * L,
    so it is run downward from a seed well above ``max_power`` computed by a
    positive-term series; the downward direction contracts the seed error.
    """
    if max_power < 0:
        raise ValueError("max_power must be >= 0")
    L = band.half_width
    top = max_power + 40
    ep, em = math.exp(rate * L), math.exp(-rate * L)
    out = np.empty(top + 1)
    out[top] = _series_moment(top, L, rate)
    for m in range(top, 0, -1):
        boundary = (L**m * ep - (-L) ** m * em) / rate
        out[m - 1] = (boundary - out[m]) * rate / m
    return out[: max_power + 1].copy()


@dataclass(frozen=True)
class ExpPolynomial:
    """f(k) = exp(k - k0) * sum_j coeffs[j] * (k - k0)^j."""

    coeffs: np.ndarray
    k0: float

    def __post_init__(self):
        object.__setattr__(self, "coeffs", np.atleast_1d(np.asarray(self.coeffs, dtype=float)))

    @property
    def degree(self) -> int:
        nz = np.flatnonzero(self.coeffs)
        return int(nz[-1]) if nz.size else 0

    def __call__(self, k):
        t = np.asarray(k, dtype=float) - self.k0
        return np.exp(t) * P.polyval(t, self.coeffs)

    def derivative(self) -> "ExpPolynomial":
        # (e^t p)' = e^t (p + p'): c_j + (j+1) c_{j+1}
        c = self.coeffs
        return ExpPolynomial(c + np.append(P.polyder(c), 0.0)[: len(c)], self.k0)

    def times_k(self) -> "ExpPolynomial":
        # k = k0 + t
        return ExpPolynomial(P.polyadd(self.k0 * self.coeffs, P.polymulx(self.coeffs)), self.k0)

    def __add__(self, other: "ExpPolynomial") -> "ExpPolynomial":
        return ExpPolynomial(P.polyadd(self.coeffs, other.coeffs), self.k0)

    def __mul__(self, scalar: float) -> "ExpPolynomial":
        return ExpPolynomial(self.coeffs * scalar, self.k0)

    __rmul__ = __mul__


def exp_moment_integral(factors, band: Band) -> float:
    """int_band prod_i exp(k - k0) p_i(k - k0) dk for polynomial coefficient rows p_i.

    Summed term by term over the outer product of the coefficient rows with
    compensated summation: the monomial coefficients of high-index basis
    elements are large and alternate, so naive summation loses ~5 digits.
    """
    factors = [np.asarray(f, dtype=float) for f in factors]
    rate = len(factors)
    I = moment_integrals(band, sum(len(f) - 1 for f in factors), rate=rate)
    prod = factors[0]
    power = np.arange(len(factors[0]))
    for f in factors[1:]:
        prod = np.multiply.outer(prod, f).ravel()
        power = np.add.outer(power, np.arange(len(f))).ravel()
    return math.fsum(prod * I[power])


def inner_product(f: ExpPolynomial, g: ExpPolynomial, band: Band) -> float:
    """L^2(band) inner product, exact up to rounding."""
    if not (math.isclose(f.k0, band.k0) and math.isclose(g.k0, band.k0)):
        raise ValueError("representations are centred on a different band")
    return exp_moment_integral([f.coeffs, g.coeffs], band)


@dataclass(frozen=True)
class OrthonormalBasis:
    band: Band
    elements: tuple
    deriv_norms: np.ndarray = field(repr=False)

    @property
    def N(self) -> int:
        return len(self.elements)

    @property
    def coefficients(self) -> np.ndarray:
        """(N, N) lower-triangular matrix; row n-1 holds the polynomial of Phi_n."""
        C = np.zeros((self.N, self.N))
        for i, e in enumerate(self.elements):
            C[i, : len(e.coeffs)] = e.coeffs
        return C

    def truncated(self, N: int) -> "OrthonormalBasis":
        """The first N elements; Gram-Schmidt is nested, so this is the size-N basis."""
        if not 1 <= N <= self.N:
            raise IndexError(f"cannot truncate a basis of size {self.N} to {N}")
        return OrthonormalBasis(self.band, self.elements[:N], self.deriv_norms[:N])

    def _check_index(self, n):
        if not 1 <= n <= self.N:
            raise IndexError(f"basis index {n} outside 1..{self.N}")

    def values(self, k, N=None) -> np.ndarray:
        """Phi_1..Phi_N at k, shape (N, len(k))."""
        N = self.N if N is None else N
        if N > self.N:
            raise IndexError(f"requested {N} elements from a basis of size {self.N}")
        t = np.asarray(k, dtype=float) - self.band.k0
        return np.exp(t) * P.polyval(t, self.coefficients[:N].T)

    def derivatives(self, k, N=None) -> np.ndarray:
        N = self.N if N is None else N
        if N > self.N:
            raise IndexError(f"requested {N} elements from a basis of size {self.N}")
        t = np.asarray(k, dtype=float) - self.band.k0
        C = self.coefficients[:N]
        dC = C.copy()
        dC[:, :-1] += C[:, 1:] * np.arange(1, self.N)
        return np.exp(t) * P.polyval(t, dC.T)


def build_basis(band: Band, N: int, n_max: int = N_MAX) -> OrthonormalBasis:
    """Gram-Schmidt of psi_1..psi_N carried out on the exact Gram matrix.

    The Gram matrix is factored as G = R R^T and the rows of R^{-1} are the
    basis coefficients; a second pass on the computed overlap matrix removes
    most of the rounding error of the first. Raises ConditioningError when a
    Cholesky pivot drops below ``PIVOT_FLOOR`` times the first one.
    """
    if not 1 <= N <= n_max:
        raise ConfigError(f"basis size N={N} outside 1..{n_max}")
    L = band.half_width
    I = moment_integrals(band, 2 * N - 2)
    idx = np.add.outer(np.arange(N), np.arange(N))
    # Column scaling by L^j is exact in exact arithmetic and keeps entries O(1).
    scale = L ** np.arange(N)
    G = I[idx] / np.outer(scale, scale)
    try:
        R = np.linalg.cholesky(G)
    except np.linalg.LinAlgError:
        R = None
    if R is not None:
        pivots = np.diag(R) * scale
        bad = np.flatnonzero(pivots < PIVOT_FLOOR * pivots[0])
    if R is None or bad.size:
        index = int(bad[0]) + 1 if R is not None else _first_failing_index(G)
        ratio = float(pivots[index - 1] / pivots[0]) if R is not None else None
        raise ConditioningError(index, ratio)
    C = np.linalg.inv(R)
    R2 = np.linalg.cholesky(C @ G @ C.T)
    C = np.linalg.solve(R2, C)
    C = np.tril(C) / scale[None, :]
    elements = tuple(ExpPolynomial(C[n, : n + 1], band.k0) for n in range(N))
    norms = np.array([math.sqrt(max(inner_product(e.derivative(), e.derivative(), band), 0.0))
                      for e in elements])
    return OrthonormalBasis(band, elements, norms)


def _first_failing_index(G):
    for n in range(1, G.shape[0] + 1):
        try:
            np.linalg.cholesky(G[:n, :n])
        except np.linalg.LinAlgError:
            return n
    return G.shape[0]


def eval_basis(basis: OrthonormalBasis, n: int, k):
    basis._check_index(n)
    return basis.elements[n - 1](k)


def eval_basis_deriv(basis: OrthonormalBasis, n: int, k):
    basis._check_index(n)
    return basis.elements[n - 1].derivative()(k)


def gram_residual(basis: OrthonormalBasis) -> np.ndarray:
    """Matrix <Phi_m, Phi_n> - delta_mn evaluated through exact moments."""
    N = basis.N
    out = np.empty((N, N))
    for m in range(N):
        for n in range(N):
            out[m, n] = inner_product(basis.elements[m], basis.elements[n], basis.band)
    return out - np.eye(N)
