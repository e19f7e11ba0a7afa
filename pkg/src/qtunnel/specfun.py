"""Self-contained special-function kernel.

Provides exactly what the rest of the library needs and nothing more:

* Gauss hypergeometric 2F1 with complex parameters on real z in [0, 1),
  via the direct Gauss series for z <= 1/2 and the two-term z -> 1-z linear
  transformation (with log-Gamma prefactors) for z > 1/2, so convergence
  stays geometric with ratio <= 1/2.
* its z-derivative,
* the Airy function Ai on |x| <= 30,
* principal-branch log-Gamma (Lanczos) and Gamma.

Pure functions, no state; thread-safe.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

from .errors import ConvergenceError, DomainError

_MAX_TERMS = 10_000
_REL_EPS = 1e-16
# |c-a-b| distance from an integer below which the z->1-z transformation is
# ill-conditioned and the perturb-and-average fallback is used instead.
_DEGENERATE_TOL = 1e-6
_PERTURB = 1e-6

# Lanczos g=7, n=9 coefficients (double precision, ~15 significant digits).
_LANCZOS_G = 7.0
_LANCZOS_C = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)

_LN_SQRT_TWO_PI = 0.9189385332046727417803297364  # ln(sqrt(2 pi))


def _is_nonpositive_int(z: complex, tol: float = 1e-14) -> bool:
    if abs(z.imag) > tol:
        return False
    r = round(z.real)
    return r <= 0 and abs(z.real - r) <= tol * max(1.0, abs(z.real))


def log_gamma(z: complex) -> complex:
    """Principal-branch log-Gamma for complex z off the pole set.

    Left of Re(z) = 0.5 the recurrence Gamma(z+1) = z Gamma(z) is unwound
    with principal logs, which keeps exp(log_gamma) exact everywhere the
    library needs it.
    """
    z = complex(z)
    if _is_nonpositive_int(z):
        raise DomainError(f"log_gamma pole at z = {z}")
    if z.real < 0.5:
        shift = complex(0.0)
        n = math.ceil(0.5 - z.real)
        for i in range(n):
            shift += cmath.log(z + i)
        return log_gamma(z + n) - shift
    zm = z - 1.0
    x = complex(_LANCZOS_C[0])
    for i in range(1, len(_LANCZOS_C)):
        x += _LANCZOS_C[i] / (zm + i)
    t = zm + _LANCZOS_G + 0.5
    return _LN_SQRT_TWO_PI + (zm + 0.5) * cmath.log(t) - t + cmath.log(x)


def gamma(z: complex) -> complex:
    """Gamma function via exp(log_gamma); real output for real positive z."""
    val = cmath.exp(log_gamma(z))
    if isinstance(z, (int, float)) or (abs(complex(z).imag) == 0.0):
        if complex(z).real > 0:
            return complex(val.real, 0.0)
    return val


@dataclass(frozen=True)
class Hyp2F1Result:
    """Value plus diagnostics of a 2F1 evaluation."""

    value: complex
    degraded: bool
    terms: int


def _gauss_series(a: complex, b: complex, c: complex, z: float) -> tuple[complex, int]:
    """Direct Gauss series; caller guarantees |z| <= 1/2 and c off poles."""
    total = complex(1.0)
    term = complex(1.0)
    small_streak = 0
    for n in range(_MAX_TERMS):
        term *= (a + n) * (b + n) * z / ((c + n) * (n + 1))
        total += term
        if abs(term) <= _REL_EPS * abs(total):
            small_streak += 1
            if small_streak >= 3:
                return total, n + 1
        else:
            small_streak = 0
    raise ConvergenceError(
        f"2F1 series did not converge in {_MAX_TERMS} terms "
        f"(a={a}, b={b}, c={c}, z={z})"
    )


def _hyp2f1_transformed(a: complex, b: complex, c: complex, z: float,
                        w: float) -> tuple[complex, int]:
    """z -> 1-z linear transformation; caller guarantees c-a-b off integers."""
    s = c - a - b
    # coefficient of the analytic term; vanishes when c-a or c-b is a
    # non-positive integer (1/Gamma pole)
    if _is_nonpositive_int(c - a) or _is_nonpositive_int(c - b):
        term1 = complex(0.0)
        n1 = 0
    else:
        coeff1 = cmath.exp(
            log_gamma(c) + log_gamma(s) - log_gamma(c - a) - log_gamma(c - b)
        )
        f1, n1 = _gauss_series(a, b, a + b - c + 1.0, w)
        term1 = coeff1 * f1
    if _is_nonpositive_int(a) or _is_nonpositive_int(b):
        term2 = complex(0.0)
        n2 = 0
    else:
        coeff2 = cmath.exp(
            log_gamma(c) + log_gamma(-s) - log_gamma(a) - log_gamma(b)
        )
        f2, n2 = _gauss_series(c - a, c - b, s + 1.0, w)
        term2 = coeff2 * cmath.exp(s * math.log(w)) * f2
    return term1 + term2, n1 + n2


def hyp2f1_ex(a: complex, b: complex, c: complex, z: float,
              one_minus_z: float | None = None) -> Hyp2F1Result:
    """2F1 with diagnostics: value, degraded-accuracy flag, term count.

    ``one_minus_z`` lets callers who know 1-z to full precision (e.g. from a
    stable sigmoid) avoid the cancellation in computing it from z when z is
    close to 1.
    """
    a, b, c = complex(a), complex(b), complex(c)
    z = float(z)
    if one_minus_z is None:
        w = 1.0 - z
    else:
        w = float(one_minus_z)
        if abs((1.0 - z) - w) > 1e-9:
            raise DomainError(f"one_minus_z = {w} inconsistent with z = {z}")
    if z < 0.0 or w <= 0.0:
        raise DomainError(f"2F1 kernel supports real z in [0, 1), got z = {z}")
    if _is_nonpositive_int(c):
        raise DomainError(f"2F1 pole: c = {c} is a non-positive integer")
    if a == 0 or b == 0 or z == 0.0:
        return Hyp2F1Result(complex(1.0), False, 0)
    if z <= 0.5:
        val, n = _gauss_series(a, b, c, z)
        return Hyp2F1Result(val, False, n)
    s = c - a - b
    dist = abs(s - round(s.real)) if abs(s.imag) < _DEGENERATE_TOL else _DEGENERATE_TOL * 2
    if dist < _DEGENERATE_TOL:
        # logarithmic case: evaluate at c shifted so c-a-b sits exactly
        # +/- _PERTURB away from the integer, and average the two
        c_int = a + b + round(s.real)
        up, n1 = _hyp2f1_transformed(a, b, c_int + _PERTURB, z, w)
        dn, n2 = _hyp2f1_transformed(a, b, c_int - _PERTURB, z, w)
        return Hyp2F1Result(0.5 * (up + dn), True, n1 + n2)
    val, n = _hyp2f1_transformed(a, b, c, z, w)
    return Hyp2F1Result(val, False, n)


def hyp2f1(a: complex, b: complex, c: complex, z: float,
           one_minus_z: float | None = None) -> complex:
    """Gauss hypergeometric 2F1(a, b; c; z) for complex parameters, z in [0,1)."""
    return hyp2f1_ex(a, b, c, z, one_minus_z).value


def hyp2f1_dz(a: complex, b: complex, c: complex, z: float,
              one_minus_z: float | None = None) -> complex:
    """d/dz of 2F1 via the contiguous identity (a b / c) 2F1(a+1, b+1; c+1; z)."""
    a, b, c = complex(a), complex(b), complex(c)
    if _is_nonpositive_int(c):
        raise DomainError(f"2F1 pole: c = {c} is a non-positive integer")
    if a == 0 or b == 0:
        return complex(0.0)
    return (a * b / c) * hyp2f1(a + 1.0, b + 1.0, c + 1.0, z, one_minus_z)


# Ai(0) = 3^(-2/3)/Gamma(2/3) and Ai'(0) = -3^(-1/3)/Gamma(1/3)
_AI0 = 0.35502805388781723926
_AIP0 = -0.25881940379280679840
# Maclaurin pair below this |x|, asymptotic expansion beyond.  The pair loses
# ~e^(2 sqrt(|x|^3/9)) digits to cancellation on the oscillatory side while
# the asymptotic error floor falls like e^(-4/3 |x|^(3/2)); both meet the
# 1e-10 absolute contract only for a crossover near |x| = 7.
_AIRY_SWITCH = 7.0
_AIRY_RANGE = 30.0


def _airy_u_coeffs(n: int) -> list[float]:
    us = [1.0]
    for k in range(1, n):
        us.append(us[-1] * (6 * k - 5) * (6 * k - 3) * (6 * k - 1) / (216.0 * k * (2 * k - 1)))
    return us


_AIRY_US = _airy_u_coeffs(40)


def _airy_series(x: float) -> float:
    f_term, g_term = 1.0, x
    f_sum, g_sum = f_term, g_term
    x3 = x * x * x
    for k in range(1, 200):
        f_term *= x3 / ((3 * k) * (3 * k - 1))
        g_term *= x3 / ((3 * k + 1) * (3 * k))
        f_sum += f_term
        g_sum += g_term
        if abs(f_term) < _REL_EPS * abs(f_sum) and abs(g_term) < _REL_EPS * abs(g_sum):
            break
    return _AI0 * f_sum + _AIP0 * g_sum


def _airy_asymptotic_decay(x: float) -> float:
    zeta = (2.0 / 3.0) * x * math.sqrt(x)
    total, prev = 1.0, 1.0
    for k in range(1, len(_AIRY_US)):
        term = (-1) ** k * _AIRY_US[k] / zeta**k
        if abs(term) > abs(prev):
            break
        total += term
        prev = term
    return math.exp(-zeta) * total / (2.0 * math.sqrt(math.pi) * x**0.25)


def _airy_asymptotic_oscillatory(x: float) -> float:
    y = -x
    zeta = (2.0 / 3.0) * y * math.sqrt(y)
    c_sum, s_sum = 0.0, 0.0
    prev = math.inf
    for k in range(len(_AIRY_US) // 2 - 1):
        tc = (-1) ** k * _AIRY_US[2 * k] / zeta ** (2 * k)
        ts = (-1) ** k * _AIRY_US[2 * k + 1] / zeta ** (2 * k + 1)
        mag = max(abs(tc), abs(ts))
        if mag > prev:
            break
        c_sum += tc
        s_sum += ts
        prev = mag
    arg = zeta + math.pi / 4.0
    return (math.sin(arg) * c_sum - math.cos(arg) * s_sum) / (math.sqrt(math.pi) * y**0.25)


def airy_ai(x: float) -> float:
    """Airy function Ai(x) on |x| <= 30, absolute accuracy 1e-10."""
    x = float(x)
    if abs(x) > _AIRY_RANGE:
        raise DomainError(f"airy_ai supports |x| <= {_AIRY_RANGE}, got {x}")
    if abs(x) <= _AIRY_SWITCH:
        return _airy_series(x)
    return _airy_asymptotic_decay(x) if x > 0 else _airy_asymptotic_oscillatory(x)
