"""Closed-form test profiles: a radial plateau bump in x and a Gaussian in k."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def _smoothstep(tau):
    # degree-9 smoothstep: S' = 630 tau^4 (1 - tau)^4, so S is C^4 at both ends
    return tau**5 * (126 - 420 * tau + 540 * tau**2 - 315 * tau**3 + 70 * tau**4)


def _smoothstep_d1(tau):
    return 630 * tau**4 * (1 - tau) ** 4


def _smoothstep_d2(tau):
    return 2520 * tau**3 * (1 - tau) ** 3 * (1 - 2 * tau)


@dataclass(frozen=True)
class RadialBump:
    """amplitude * (1 - S((|x - c| - plateau) / (radius - plateau))), zero outside ``radius``.

    Constant on |x - c| <= plateau, C^4 everywhere, support the closed disk
    of the given radius. Works in any dimension through the length of ``center``.
    """

    center: tuple
    radius: float
    amplitude: complex = 1.0
    plateau: float = 0.0

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("bump radius must be positive")
        if not 0 <= self.plateau < self.radius:
            raise ValueError("plateau radius must lie in [0, radius)")

    @property
    def dim(self) -> int:
        return len(self.center)

    def _rho(self, x):
        diff = [xi - ci for xi, ci in zip(x, self.center)]
        return diff, np.sqrt(sum(d**2 for d in diff))

    def _tau(self, rho):
        return np.clip((rho - self.plateau) / (self.radius - self.plateau), 0.0, 1.0)

    def __call__(self, *x):
        _, rho = self._rho(x)
        return self.amplitude * (1.0 - _smoothstep(self._tau(rho)))

    def _radial_derivs(self, rho):
        w = self.radius - self.plateau
        tau = self._tau(rho)
        d1 = -self.amplitude * _smoothstep_d1(tau) / w
        d2 = -self.amplitude * _smoothstep_d2(tau) / w**2
        return d1, d2

    def gradient(self, *x):
        diff, rho = self._rho(x)
        d1, _ = self._radial_derivs(rho)
        # d1 vanishes to fourth order at rho = plateau, including plateau = 0
        safe = np.where(rho > 0, rho, 1.0)
        return np.array([np.where(rho > 0, d1 * d / safe, 0.0) for d in diff])

    def laplacian(self, *x):
        _, rho = self._rho(x)
        d1, d2 = self._radial_derivs(rho)
        safe = np.where(rho > 0, rho, 1.0)
        return d2 + np.where(rho > 0, (self.dim - 1) * d1 / safe, 0.0)


@dataclass(frozen=True)
class Gaussian:
    """exp(-alpha (k - center)^2)."""

    center: float
    alpha: float = 1.0

    def __call__(self, k):
        return np.exp(-self.alpha * (np.asarray(k) - self.center) ** 2)

    def derivative(self, k):
        k = np.asarray(k)
        return -2 * self.alpha * (k - self.center) * self(k)
