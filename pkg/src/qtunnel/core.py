"""Physical parameter records, potential abstractions, and shared validation.

All records are frozen dataclasses: immutable after construction and safe to
share between threads.  Defaults follow the hbar = M = 1 unit convention used
throughout; every operation still takes the parameters explicitly so
dimensional checks can vary them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

from .errors import AboveBarrierError, DomainError


@dataclass(frozen=True)
class PhysicalParams:
    """System-particle parameters: the unit anchor of every formula."""

    energy_E: float
    hbar: float = 1.0
    mass_M: float = 1.0

    def __post_init__(self):
        if self.hbar <= 0:
            raise DomainError(f"hbar must be positive, got {self.hbar}")
        if self.mass_M <= 0:
            raise DomainError(f"mass_M must be positive, got {self.mass_M}")
        if self.energy_E <= 0:
            raise DomainError(f"energy_E must be positive, got {self.energy_E}")


@dataclass(frozen=True)
class RectBarrier:
    """Rectangular barrier of height V0 on 0 < x < a, zero elsewhere."""

    height_V0: float
    width_a: float

    def __post_init__(self):
        if self.height_V0 <= 0:
            raise DomainError(f"height_V0 must be positive, got {self.height_V0}")
        if self.width_a <= 0:
            raise DomainError(f"width_a must be positive, got {self.width_a}")


class SmoothPotential:
    """A smooth barrier V(x) with a consistent derivative.

    If no analytic derivative is supplied, a centered finite difference with
    step h = max(1e-6, 1e-6*|x|) is used; the step balances truncation and
    rounding at double precision.
    """

    _FD_SCALE = 1e-6

    def __init__(
        self,
        value: Callable[[float], float],
        derivative: Callable[[float], float] | None = None,
    ):
        self._value = value
        self._derivative = derivative

    def __call__(self, x: float) -> float:
        return self._value(x)

    def derivative(self, x: float) -> float:
        if self._derivative is not None:
            return self._derivative(x)
        h = max(self._FD_SCALE, self._FD_SCALE * abs(x))
        return (self._value(x + h) - self._value(x - h)) / (2.0 * h)

    def check_derivative(self, xs, rel_tol: float = 1e-6) -> float:
        """Largest relative mismatch between the supplied derivative and a
        centered finite difference over the sample points ``xs``.

        Raises DomainError when the mismatch exceeds ``rel_tol``.  Scale for
        the relative comparison is the largest |V'| over the samples, so flat
        spots do not produce spurious failures.
        """
        if self._derivative is None:
            return 0.0
        scale = max(abs(self._derivative(float(x))) for x in xs)
        if scale == 0.0:
            scale = 1.0
        worst = 0.0
        for x in xs:
            x = float(x)
            h = max(self._FD_SCALE, self._FD_SCALE * abs(x))
            fd = (self._value(x + h) - self._value(x - h)) / (2.0 * h)
            worst = max(worst, abs(fd - self._derivative(x)) / scale)
        if worst > rel_tol:
            raise DomainError(
                f"supplied derivative inconsistent with value: relative "
                f"mismatch {worst:.3e} > {rel_tol:.3e}"
            )
        return worst


@dataclass(frozen=True)
class EnvMode:
    """One environment oscillator coupled to the system as c*x*y^2.

    omega_n(t)^2 = omega0^2 + 2*c*x(t)/m must stay positive over the
    trajectory; that is checked at evolution time, not here.
    """

    mass_m: float
    omega0: float
    coupling_c: float

    def __post_init__(self):
        if self.mass_m <= 0:
            raise DomainError(f"mass_m must be positive, got {self.mass_m}")
        if self.omega0 <= 0:
            raise DomainError(f"omega0 must be positive, got {self.omega0}")


def wave_numbers(params: PhysicalParams, barrier: RectBarrier) -> tuple[float, float]:
    """Propagating and evanescent wave numbers (k, beta) for E below V0.

    k = sqrt(2 M E)/hbar, beta = sqrt(2 M (V0 - E))/hbar.
    """
    E, V0 = params.energy_E, barrier.height_V0
    if E >= V0:
        raise AboveBarrierError(
            f"E = {E} >= V0 = {V0}: tunneling formulas require E < V0"
        )
    k = math.sqrt(2.0 * params.mass_M * E) / params.hbar
    beta = math.sqrt(2.0 * params.mass_M * (V0 - E)) / params.hbar
    return k, beta
