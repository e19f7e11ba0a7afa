"""Semiclassical total-potential profiles for smooth barriers.

The tunneling boundary condition (purely outgoing wave past the barrier)
fixes the under-barrier amplitude to carry BOTH the growing exponential and
an i/2-weighted decaying exponential.  The cross term of the two cancels in
|phi|^2, and the small imaginary part is what keeps the kinetic density
E - V_tot of the effective classical system positive through the barrier.
Near each turning point the semiclassical forms are replaced, inside a
window sized by a linearization budget and a validity floor on the scaled
Airy argument, with the exact solution of the locally linearized problem
(an Airy-type basis integrated numerically), least-squares matched to the
semiclassical wavefunction at both window edges.

Also provides the tanh-trajectory steepness parameter for general barriers,
built from the slope at the exit turning point and the Gamma constants of
the special-function kernel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_simpson, quad, solve_ivp

from . import specfun
from .core import PhysicalParams, SmoothPotential
from .errors import (
    DegenerateTurningPointError,
    DomainError,
    OrientationError,
    ThinBarrierError,
    TurningPointTopologyError,
)
from .rect import quantum_potential

_ROOT_TOL = 1e-12
_LINEARIZATION_BUDGET = 0.05  # |V - V_lin| <= budget * |V'| * w at window edge


@dataclass(frozen=True)
class TurningPoints:
    """Roots of V(x) = E bracketing one barrier, with the slopes there."""

    left_x0: float
    right_a: float
    slope_left: float
    slope_right: float


@dataclass(frozen=True)
class WkbProfile:
    """Patched semiclassical amplitude, phase gradient, and total potential."""

    xs: np.ndarray
    r: np.ndarray
    w_prime: np.ndarray
    v_tot: np.ndarray
    e_minus_vtot: np.ndarray
    turning_points: TurningPoints
    barrier_action: float
    windows: tuple[tuple[float, float], tuple[float, float]]
    boundary_mismatch: float
    flux_drift: float


def find_turning_points(
    potential: SmoothPotential,
    E: float,
    bracket: tuple[float, float],
    scan_points: int = 512,
) -> TurningPoints:
    """Locate the two roots of V(x) = E inside the bracket.

    Bisection refined by Newton iterations to 1e-12 of the bracket width.
    Exactly two sign changes of V - E must occur in the bracket.
    """
    lo, hi = float(bracket[0]), float(bracket[1])
    if hi <= lo:
        raise DomainError("bracket must satisfy lo < hi")
    xs = np.linspace(lo, hi, scan_points)
    fs = np.array([potential(float(x)) - E for x in xs])
    signs = np.sign(fs)
    crossings = [
        (xs[i], xs[i + 1])
        for i in range(scan_points - 1)
        if signs[i] != signs[i + 1] and signs[i] != 0
    ]
    if len(crossings) != 2:
        raise TurningPointTopologyError(
            f"expected exactly 2 roots of V=E in {bracket}, found {len(crossings)}"
        )
    roots = [_refine_root(potential, E, a, b, hi - lo) for a, b in crossings]
    x0, a = sorted(roots)
    s0, sa = potential.derivative(x0), potential.derivative(a)
    scale = max(abs(s0), abs(sa), 1e-300)
    for x, s in ((x0, s0), (a, sa)):
        if abs(s) < 1e-8 * scale:
            raise DegenerateTurningPointError(
                f"V'({x}) = {s} vanishes: barrier top touches E"
            )
    if s0 < 0 or sa > 0:
        raise TurningPointTopologyError(
            "bracket contains a well, not a barrier (V < E between the roots)"
        )
    return TurningPoints(left_x0=x0, right_a=a, slope_left=s0, slope_right=sa)


def _refine_root(potential, E, a, b, scale) -> float:
    fa = potential(a) - E
    for _ in range(200):
        m = 0.5 * (a + b)
        fm = potential(m) - E
        if fa * fm <= 0:
            b = m
        else:
            a, fa = m, fm
        if b - a < 1e-6 * scale:
            break
    x = 0.5 * (a + b)
    for _ in range(60):
        f = potential(x) - E
        d = potential.derivative(x)
        if d == 0:
            break
        step = f / d
        x -= step
        if abs(step) <= _ROOT_TOL * scale:
            break
    return x


def _window_width(potential: SmoothPotential, x_t: float, slope: float,
                  w_max: float, params: PhysicalParams,
                  edge_argument: float) -> float:
    """Patch half-width at one turning point.

    Two competing requirements: the linearized potential must stay within a
    5% budget of the slope term at the window edge (else the Airy model is
    unfaithful), and the semiclassical forms being matched at the edge must
    be evaluated far enough from the turning point to be meaningful, i.e.
    the scaled Airy argument gamma*w at the edge must not be small.  When
    the two conflict (a deeply quantum barrier), the edge-validity floor
    wins: matching against the semiclassical form at gamma*w << 1 produces
    a spurious fluxless standing wave in the window.
    """
    v_t = potential(x_t)

    def excess(w: float) -> float:
        err = max(
            abs(potential(x_t + w) - v_t - slope * w),
            abs(potential(x_t - w) - v_t + slope * w),
        )
        return err - _LINEARIZATION_BUDGET * abs(slope) * w

    if excess(w_max) <= 0:
        w_lin = w_max
    else:
        lo, hi = 0.0, w_max
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            if excess(mid) <= 0:
                lo = mid
            else:
                hi = mid
        w_lin = lo
    gamma = (2.0 * params.mass_M * abs(slope) / params.hbar**2) ** (1.0 / 3.0)
    w_floor = edge_argument / gamma
    return min(max(w_lin, w_floor), w_max)


def rho_general(
    potential: SmoothPotential,
    E: float,
    params: PhysicalParams,
    turning_points: TurningPoints | None = None,
    bracket: tuple[float, float] | None = None,
) -> float:
    """Tanh-trajectory steepness for a general barrier from the exit slope.

    rho = [3^(5/6) Gamma(2/3) / (2 Gamma(1/3))] * hbar * beta^(1/3) / (M a),
    with beta = -V'(a) at the right turning point a.
    """
    if turning_points is None:
        if bracket is None:
            raise DomainError("provide turning_points or a bracket")
        turning_points = find_turning_points(potential, E, bracket)
    a = turning_points.right_a
    slope = turning_points.slope_right
    if slope >= 0:
        raise OrientationError(
            f"right turning point must have V'(a) < 0, got {slope}"
        )
    beta = -slope
    g13 = specfun.gamma(1.0 / 3.0).real
    g23 = specfun.gamma(2.0 / 3.0).real
    prefactor = 3.0 ** (5.0 / 6.0) * g23 / (2.0 * g13)
    return prefactor * params.hbar * beta ** (1.0 / 3.0) / (params.mass_M * a)


class _WkbForms:
    """Analytic semiclassical wavefunction pieces outside the patch windows."""

    def __init__(self, potential, E, params, x_ii_end, theta_parts,
                 include_decaying_term):
        self.potential = potential
        self.E = E
        self.params = params
        self.x_ii_end = x_ii_end  # right seam of the mid-barrier segment
        self.tail_L, self.cum_II, self.tail_R = theta_parts
        self.theta = self.tail_L + self.cum_II(x_ii_end) + self.tail_R
        self.include_decaying = include_decaying_term

    def _p(self, x):
        v = self.potential(x)
        arg = 2.0 * self.params.mass_M * (self.E - v)
        if arg <= 0:
            raise DomainError(f"p(x) evaluated under the barrier at x = {x}")
        return math.sqrt(arg) / self.params.hbar

    def _q(self, x):
        v = self.potential(x)
        arg = 2.0 * self.params.mass_M * (v - self.E)
        if arg <= 0:
            raise DomainError(f"q(x) evaluated outside the barrier at x = {x}")
        return math.sqrt(arg) / self.params.hbar

    def _dp(self, x, p):
        return -self.params.mass_M * self.potential.derivative(x) / (
            self.params.hbar**2 * p
        )

    def _dq(self, x, q):
        return self.params.mass_M * self.potential.derivative(x) / (
            self.params.hbar**2 * q
        )

    def s_r(self, x):
        """Action integral from x to the right turning point."""
        return self.cum_II(self.x_ii_end) - self.cum_II(x) + self.tail_R

    def value_II(self, x):
        q = self._q(x)
        s = self.s_r(x)
        grow = math.exp(s)
        decay = 0.5j * math.exp(-s) if self.include_decaying else 0.0
        phi = (grow + decay) / math.sqrt(q)
        dphi = -self._dq(x, q) / (2.0 * q) * phi + math.sqrt(q) * (-grow + decay)
        return phi, dphi

    def value_III(self, x, theta_r):
        p = self._p(x)
        if self.include_decaying:
            phase = np.exp(1j * (theta_r + math.pi / 4.0))
            phi = phase / math.sqrt(p)
            dphi = (1j * p - self._dp(x, p) / (2.0 * p)) * phi
        else:
            phi = math.cos(theta_r + math.pi / 4.0) / math.sqrt(p)
            dphi = -self._dp(x, p) / (2.0 * p) * phi - math.sqrt(p) * math.sin(
                theta_r + math.pi / 4.0
            )
        return phi, dphi

    def value_I(self, x, theta_l):
        p = self._p(x)
        arg = theta_l + math.pi / 4.0
        big = 2.0 * math.exp(self.theta) * math.sin(arg)
        small = 0.5j * math.exp(-self.theta) * math.cos(arg) if self.include_decaying else 0.0
        phi = (big + small) / math.sqrt(p)
        # d theta_l/dx = -p
        dbig = -2.0 * math.exp(self.theta) * math.cos(arg) * p
        dsmall = (0.5j * math.exp(-self.theta) * math.sin(arg) * p
                  if self.include_decaying else 0.0)
        dphi = -self._dp(x, p) / (2.0 * p) * phi + (dbig + dsmall) / math.sqrt(p)
        return phi, dphi


def _airy_window_basis(potential, E, params, x_t, slope, x_lo, x_hi):
    """Two numeric solutions of the linearized problem across the window."""
    scale = (2.0 * params.mass_M * abs(slope) / params.hbar**2) ** (1.0 / 3.0)
    coeff = 2.0 * params.mass_M * slope / params.hbar**2

    def rhs(x, y):
        return [y[1], coeff * (x - x_t) * y[0]]

    sols = []
    for ic in ([1.0, 0.0], [0.0, scale]):
        res = solve_ivp(rhs, (x_lo, x_hi), ic, method="DOP853",
                        rtol=1e-12, atol=1e-14, dense_output=True)
        if not res.success:
            raise DomainError(f"Airy window integration failed: {res.message}")
        sols.append(res.sol)
    return sols, scale


def wkb_total_potential(
    potential: SmoothPotential,
    E: float,
    params: PhysicalParams,
    turning_points: TurningPoints | None = None,
    bracket: tuple[float, float] | None = None,
    num_points: int = 2000,
    window_shrink: float = 1.0,
    margin_fraction: float = 0.15,
    include_decaying_term: bool = True,
    edge_argument: float = 0.8,
    domain: tuple[float, float] | None = None,
) -> WkbProfile:
    """Patched total-potential profile across one smooth barrier.

    ``window_shrink`` rescales the automatically chosen patch half-widths
    (for patch-independence studies); ``include_decaying_term=False`` drops
    the i/2-weighted decaying exponential under the barrier, which makes the
    amplitude real and lets E - V_tot go non-positive: the construction the
    connection formula forbids.  ``edge_argument`` is the minimum scaled
    Airy argument gamma*w at the window edges.
    """
    if turning_points is None:
        if bracket is None:
            raise DomainError("provide turning_points or a bracket")
        turning_points = find_turning_points(potential, E, bracket)
    tps = turning_points
    x0, a = tps.left_x0, tps.right_a
    gap = a - x0

    gamma_l = (2.0 * params.mass_M * abs(tps.slope_left) / params.hbar**2) ** (1.0 / 3.0)
    gamma_r = (2.0 * params.mass_M * abs(tps.slope_right) / params.hbar**2) ** (1.0 / 3.0)
    if edge_argument * window_shrink * (1.0 / gamma_l + 1.0 / gamma_r) >= gap:
        raise ThinBarrierError(
            "patch windows overlap: barrier too thin for WKB; "
            "use the rectangular or exact treatment"
        )
    w_l = _window_width(potential, x0, tps.slope_left, 0.45 * gap,
                        params, edge_argument) * window_shrink
    w_r = _window_width(potential, a, tps.slope_right, 0.45 * gap,
                        params, edge_argument) * window_shrink

    if domain is None:
        margin = margin_fraction * gap + max(w_l, w_r)
        lo, hi = x0 - margin, a + margin
    else:
        lo, hi = float(domain[0]), float(domain[1])
        if lo >= x0 - w_l or hi <= a + w_r:
            raise DomainError("domain must contain both patch windows")
    xs = np.linspace(lo, hi, num_points)
    h = xs[1] - xs[0]

    def snap(x):
        return int(round((x - lo) / h))

    i_l0, i_l1 = snap(x0 - w_l), snap(x0 + w_l)
    i_r0, i_r1 = snap(a - w_r), snap(a + w_r)
    for name, (i, j) in {
        "region I": (0, i_l0), "left window": (i_l0, i_l1),
        "region II": (i_l1, i_r0), "right window": (i_r0, i_r1),
        "region III": (i_r1, num_points - 1),
    }.items():
        if j - i < 6:
            raise DomainError(
                f"{name} holds fewer than 6 grid points; increase num_points"
            )

    # action pieces: singular sqrt tails by quadrature, the regular middle
    # by cumulative Simpson on the grid
    M, hbar = params.mass_M, params.hbar

    def q_of(x):
        return math.sqrt(max(2.0 * M * (potential(float(x)) - E), 0.0)) / hbar

    def p_of(x):
        return math.sqrt(max(2.0 * M * (E - potential(float(x))), 0.0)) / hbar

    tail_l = quad(q_of, x0, xs[i_l1], epsabs=1e-13, epsrel=1e-12, limit=200)[0]
    tail_r = quad(q_of, xs[i_r0], a, epsabs=1e-13, epsrel=1e-12, limit=200)[0]
    xs_ii = xs[i_l1:i_r0 + 1]
    q_ii = np.array([q_of(x) for x in xs_ii])
    cum_ii = cumulative_simpson(q_ii, x=xs_ii, initial=0.0)

    def cum_II(x):
        return float(np.interp(x, xs_ii, cum_ii))

    forms = _WkbForms(
        potential, E, params, xs[i_r0],
        (tail_l, cum_II, tail_r),
        include_decaying_term,
    )

    # oscillatory phases outside the barrier
    xs_i = xs[: i_l0 + 1]
    p_i = np.array([p_of(x) for x in xs_i])
    cum_i = cumulative_simpson(p_i, x=xs_i, initial=0.0)
    tail_i = quad(p_of, xs[i_l0], x0, epsabs=1e-13, epsrel=1e-12, limit=200)[0]
    theta_l_grid = tail_i + (cum_i[i_l0] - cum_i)

    xs_iii = xs[i_r1:]
    p_iii = np.array([p_of(x) for x in xs_iii])
    cum_iii = cumulative_simpson(p_iii, x=xs_iii, initial=0.0)
    tail_iii = quad(p_of, a, xs[i_r1], epsabs=1e-13, epsrel=1e-12, limit=200)[0]
    theta_r_grid = tail_iii + cum_iii

    phi = np.empty(num_points, dtype=complex)
    dphi = np.empty(num_points, dtype=complex)
    for j, x in enumerate(xs_i):
        phi[j], dphi[j] = forms.value_I(float(x), float(theta_l_grid[j]))
    for j in range(i_l1, i_r0 + 1):
        phi[j], dphi[j] = forms.value_II(float(xs[j]))
    for j, x in enumerate(xs_iii):
        phi[i_r1 + j], dphi[i_r1 + j] = forms.value_III(float(x), float(theta_r_grid[j]))

    mismatch = 0.0
    window_phi = {}
    for (x_t, slope, i0, i1) in (
        (x0, tps.slope_left, i_l0, i_l1),
        (a, tps.slope_right, i_r0, i_r1),
    ):
        basis, scale = _airy_window_basis(
            potential, E, params, x_t, slope, xs[i0], xs[i1]
        )
        rows, rhs_vec = [], []
        for edge in (i0, i1):
            y = [b(xs[edge]) for b in basis]
            rows.append([y[0][0], y[1][0]])
            rows.append([y[0][1] / scale, y[1][1] / scale])
            rhs_vec.append(phi[edge])
            rhs_vec.append(dphi[edge] / scale)
        A_mat = np.array(rows, dtype=complex)
        b_vec = np.array(rhs_vec, dtype=complex)
        coeffs, *_ = np.linalg.lstsq(A_mat, b_vec, rcond=None)
        resid = A_mat @ coeffs - b_vec
        norm = max(abs(v) for v in rhs_vec)
        mismatch = max(mismatch, float(np.max(np.abs(resid)) / norm))
        # patch solution over the whole window including the seam points; the
        # assembled profile keeps the seam values from the WKB side, but the
        # window's own finite differences must not see that jump
        vals = np.empty(i1 - i0 + 1, dtype=complex)
        dvals = np.empty(i1 - i0 + 1, dtype=complex)
        for j in range(i0, i1 + 1):
            y0 = basis[0](xs[j])
            y1 = basis[1](xs[j])
            vals[j - i0] = coeffs[0] * y0[0] + coeffs[1] * y1[0]
            dvals[j - i0] = coeffs[0] * y0[1] + coeffs[1] * y1[1]
        window_phi[(i0, i1)] = (vals, dvals)
        phi[i0 + 1:i1] = vals[1:-1]
        dphi[i0 + 1:i1] = dvals[1:-1]

    r = np.abs(phi)
    with np.errstate(divide="ignore", invalid="ignore"):
        w_prime = hbar * np.imag(dphi / phi)

    # quantum potential per segment: no finite-difference stencil crosses a
    # seam, and window segments difference their own (patch) amplitude
    v_bare = np.array([potential(float(x)) for x in xs])
    v_tot = np.empty(num_points)
    bounds = [0, i_l0, i_l1, i_r0, i_r1, num_points - 1]
    for seg in range(5):
        s, e = bounds[seg], bounds[seg + 1]
        if seg in (1, 3):
            r_seg = np.abs(window_phi[(s, e)][0])
        else:
            r_seg = r[s:e + 1]
        vq = quantum_potential(r_seg, h, params, x0=xs[s])
        sl = slice(s if seg == 0 else s + 1, e + 1)
        off = 0 if seg == 0 else 1
        v_tot[sl] = v_bare[sl] + vq[off:]

    flux = hbar * np.imag(np.conj(phi) * dphi) / M
    flux_ref = float(np.median(flux))
    flux_drift = (
        float(np.max(np.abs(flux - flux_ref)) / abs(flux_ref))
        if flux_ref != 0.0 else math.inf
    )

    return WkbProfile(
        xs=xs,
        r=r,
        w_prime=w_prime,
        v_tot=v_tot,
        e_minus_vtot=E - v_tot,
        turning_points=tps,
        barrier_action=forms.theta,
        windows=((xs[i_l0], xs[i_l1]), (xs[i_r0], xs[i_r1])),
        boundary_mismatch=mismatch,
        flux_drift=flux_drift,
    )
