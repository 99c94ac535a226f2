"""Analytic two-level model with a decaying excited state.

The Hamiltonian (hbar = 1, rates in 1/tau)

    H0(t) = 0.5 * [[-Delta,  Omega_R], [Omega_R, Delta - i*gamma]]

has complex eigenvalues E_pm = (-i*gamma ± sqrt(Z))/4 with radicand
Z = -(gamma + 2i*Delta)^2 + 4*Omega_R^2, and eigenvectors parameterized by a
complex mixing angle theta,

    |+> = [cos(theta/2), sin(theta/2)],   |-> = [sin(theta/2), -cos(theta/2)],

where tan(theta) = -Omega_R / (Delta - i*gamma/2).  With this sign the vectors
above are exact eigenvectors of H0 and theta sweeps 0 -> pi across a chirped
level crossing, carrying |+> from the bare ground state to the bare excited
state.  Left (biorthogonal) partners are the same expressions evaluated at
conj(theta).
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional

import numpy as np

from .errors import BranchJump, DegenerateRegime, NonFinite, TanPole
from .grids import TimeGrid

#: default spectral-gap threshold (units 1/tau) below which we refuse to track
DEGENERACY_THRESHOLD = 1e-8

ControlFn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class PulseSpec:
    """Time-dependent controls; callables must accept scalar or ndarray t.

    ``d_*`` are analytic time derivatives.  When they are absent the angle
    path falls back to central differences and ``derivative_provenance`` must
    say ``"numeric"``.
    """

    omega_r: ControlFn
    delta: ControlFn
    gamma: ControlFn
    d_omega_r: Optional[ControlFn] = None
    d_delta: Optional[ControlFn] = None
    d_gamma: Optional[ControlFn] = None
    derivative_provenance: str = "analytic"

    @property
    def has_analytic_derivatives(self) -> bool:
        return (
            self.d_omega_r is not None
            and self.d_delta is not None
            and self.d_gamma is not None
        )

    def __post_init__(self):
        if not self.has_analytic_derivatives and self.derivative_provenance != "numeric":
            raise ValueError(
                "pulse without analytic derivatives must be flagged "
                "derivative_provenance='numeric'"
            )


@dataclass(frozen=True)
class AllenEberlyParams:
    """Sech-amplitude / tanh-chirp pulse with constant decay rate.

    omega0: pulse amplitude (1/tau), delta0: chirp range (1/tau),
    tau: characteristic duration, gamma: decay rate (1/tau),
    [t0, t_f]: integration window in units of tau.
    """

    omega0: float
    delta0: float
    tau: float = 1.0
    gamma: float = 0.0
    t0: float = -1.0
    t_f: float = 1.0

    def __post_init__(self):
        if self.omega0 <= 0:
            raise ValueError("omega0 must be positive")
        if self.tau <= 0:
            raise ValueError("tau must be positive")
        if self.gamma < 0:
            raise ValueError("gamma must be non-negative")
        if not self.t0 < self.t_f:
            raise ValueError("need t0 < t_f")
        if abs(self.gamma - 2.0 * self.omega0) <= 1e-12:
            raise DegenerateRegime(
                f"gamma = 2*omega0 = {self.gamma}: spectrum degenerates at t = 0"
            )


class BranchRegime(Enum):
    """Square-root branch placement for the radicand trajectory.

    Sub-critical decay keeps Re[Z] > 0, so the cut sits just below the
    negative real axis (argument in (-pi, pi]).  Super-critical trajectories
    cross the negative real axis, so the cut moves just below the positive
    real axis (argument in [0, 2*pi)).
    """

    SUB_CRITICAL = "sub-critical"
    SUPER_CRITICAL = "super-critical"

    @property
    def cut_convention(self) -> str:
        if self is BranchRegime.SUB_CRITICAL:
            return "(-pi, pi]"
        return "[0, 2pi)"


@dataclass(frozen=True)
class MixingAnglePath:
    """Branch-continuous complex mixing angle and its rate on a grid."""

    grid: TimeGrid
    theta: np.ndarray
    dtheta: np.ndarray
    regime: BranchRegime
    dtheta_provenance: str = "analytic"

    def __post_init__(self):
        n = self.grid.n_points
        if len(self.theta) != n or len(self.dtheta) != n:
            raise ValueError("theta/dtheta length must match grid")


def classify_regime(omega0: float, gamma: float) -> BranchRegime:
    """Pick the branch regime from the peak Rabi frequency and decay rate."""
    if omega0 <= 0:
        raise ValueError("omega0 must be positive")
    if gamma < 0:
        raise ValueError("gamma must be non-negative")
    if abs(gamma - 2.0 * omega0) <= 1e-12:
        raise DegenerateRegime(
            f"gamma = {gamma} sits on the critical line 2*omega0 = {2 * omega0}"
        )
    if gamma < 2.0 * omega0:
        return BranchRegime.SUB_CRITICAL
    return BranchRegime.SUPER_CRITICAL


def hamiltonian(pulse: PulseSpec, t: float) -> np.ndarray:
    """Bare-basis Hamiltonian 0.5*[[-Delta, Om],[Om, Delta - i*gamma]] at t."""
    om = float(pulse.omega_r(t))
    dl = float(pulse.delta(t))
    gm = float(pulse.gamma(t))
    if not (np.isfinite(om) and np.isfinite(dl) and np.isfinite(gm)):
        raise NonFinite(f"control value not finite at t={t}")
    return 0.5 * np.array([[-dl, om], [om, dl - 1j * gm]], dtype=complex)


def radicand(pulse: PulseSpec, t):
    """Z(t) = -(gamma + 2i*Delta)^2 + 4*Omega_R^2."""
    om = np.asarray(pulse.omega_r(t))
    dl = np.asarray(pulse.delta(t))
    gm = np.asarray(pulse.gamma(t))
    z = -(gm + 2j * dl) ** 2 + 4.0 * om**2
    return z[()] if z.ndim == 0 else z


def branch_sqrt(z, regime: BranchRegime):
    """sqrt(Z) = |Z|^(1/2) exp(i*eta/2) with eta taken in the regime's cut."""
    z = np.asarray(z, dtype=complex)
    if regime is BranchRegime.SUB_CRITICAL:
        out = np.sqrt(z)
    else:
        eta = np.mod(np.angle(z), 2.0 * np.pi)
        out = np.sqrt(np.abs(z)) * np.exp(0.5j * eta)
    return out[()] if out.ndim == 0 else out


def branch_argument(z, regime: BranchRegime):
    """Argument eta of Z in the regime's range ((-pi, pi] or [0, 2pi))."""
    z = np.asarray(z, dtype=complex)
    eta = np.angle(z)
    if regime is BranchRegime.SUPER_CRITICAL:
        eta = np.mod(eta, 2.0 * np.pi)
    return eta[()] if eta.ndim == 0 else eta


def eigenvalues(pulse: PulseSpec, t, regime: BranchRegime,
                degeneracy_threshold: float = DEGENERACY_THRESHOLD):
    """(E_+, E_-) = ((-i*gamma ± sqrt(Z))/4) on the regime's branch."""
    gm = np.asarray(pulse.gamma(t))
    z = radicand(pulse, t)
    sq = branch_sqrt(z, regime)
    if np.any(np.abs(sq) <= 2.0 * degeneracy_threshold):
        raise DegenerateRegime("eigenvalue gap below degeneracy threshold")
    e_plus = 0.25 * (-1j * gm + sq)
    e_minus = 0.25 * (-1j * gm - sq)
    return e_plus, e_minus


def eigenvalue_path(pulse: PulseSpec, grid: TimeGrid, regime: BranchRegime,
                    degeneracy_threshold: float = DEGENERACY_THRESHOLD):
    """Eigenvalue samples on a grid with a step-to-step continuity audit.

    The cut fixes the root; if consecutive roots are closer to each other's
    negatives than to each other, the declared cut conflicts with continuity
    and a BranchJump is raised.
    """
    ts = grid.samples
    gm = np.asarray(pulse.gamma(ts), dtype=float)
    z = radicand(pulse, ts)
    sq = branch_sqrt(z, regime)
    if np.any(np.abs(sq) <= 2.0 * degeneracy_threshold):
        raise DegenerateRegime("eigenvalue gap below degeneracy threshold on grid")
    jump = np.abs(np.diff(sq)) > np.abs(sq[1:] + sq[:-1])
    if np.any(jump):
        k = int(np.argmax(jump)) + 1
        raise BranchJump(
            f"sqrt(Z) root flipped against the {regime.value} cut near t={ts[k]:g}"
        )
    e_plus = 0.25 * (-1j * gm + sq)
    e_minus = 0.25 * (-1j * gm - sq)
    return e_plus, e_minus


def _principal_theta(omega, a):
    """One representative of tan(theta) = -omega/a, safe at either pole.

    Uses arctan(-omega/a) for |a| >= |omega| and the cotangent form
    pi/2 - arctan(-a/omega) otherwise, keeping the arctangent argument inside
    the unit disc (away from its branch points at +/- i).
    """
    omega = np.asarray(omega, dtype=complex)
    a = np.asarray(a, dtype=complex)
    use_cot = np.abs(a) < np.abs(omega)
    # guard the inactive denominator of each lane
    safe_a = np.where(use_cot, 1.0, a)
    safe_om = np.where(use_cot, omega, 1.0)
    direct = np.arctan(-omega / safe_a)
    cot = 0.5 * np.pi - np.arctan(-a / safe_om)
    return np.where(use_cot, cot, direct)


def mixing_angle_path(pulse: PulseSpec, grid: TimeGrid,
                      regime: Optional[BranchRegime] = None) -> MixingAnglePath:
    """Branch-continuous theta(t) with tan(theta) = -Omega_R/(Delta - i*gamma/2).

    Anchored at the principal representative at t0 (Re theta in (-pi/2, pi/2],
    the near-zero branch for Delta(t0) < 0); each later sample takes the
    representative theta + m*pi closest to its predecessor.  The rate dtheta
    is analytic, (Omega*da/dt - dOmega/dt*a)/(a^2 + Omega^2) with
    a = Delta - i*gamma/2, when the pulse carries derivatives; otherwise
    central differences of the tracked samples.
    """
    ts = grid.samples
    om = np.asarray(pulse.omega_r(ts), dtype=float)
    dl = np.asarray(pulse.delta(ts), dtype=float)
    gm = np.asarray(pulse.gamma(ts), dtype=float)
    if not (np.all(np.isfinite(om)) and np.all(np.isfinite(dl)) and np.all(np.isfinite(gm))):
        raise NonFinite("control values not finite on grid")
    if np.any(gm < 0):
        raise ValueError("gamma(t) must be non-negative on the grid")

    a = dl - 0.5j * gm
    denom = a * a + om**2
    if np.any(np.abs(denom) < 1e-14):
        k = int(np.argmin(np.abs(denom)))
        raise TanPole(f"(Delta - i*gamma/2)^2 + Omega_R^2 ~ 0 at t={ts[k]:g}")

    principal = _principal_theta(om, a)
    theta = np.empty_like(principal)
    theta[0] = principal[0]
    for k in range(1, len(ts)):
        cand = principal[k] + np.pi * np.round((theta[k - 1] - principal[k]).real / np.pi)
        if abs(cand - theta[k - 1]) >= 0.5 * np.pi:
            raise BranchJump(
                f"no representative of theta within pi/2 of the previous sample "
                f"near t={ts[k]:g}; refine the grid"
            )
        theta[k] = cand

    if pulse.has_analytic_derivatives:
        d_om = np.asarray(pulse.d_omega_r(ts), dtype=float)
        d_dl = np.asarray(pulse.d_delta(ts), dtype=float)
        d_gm = np.asarray(pulse.d_gamma(ts), dtype=float)
        da = d_dl - 0.5j * d_gm
        dtheta = (om * da - d_om * a) / denom
        provenance = "analytic"
    else:
        dtheta = np.gradient(theta, grid.step)
        provenance = "numeric"

    if regime is None:
        regime = classify_regime(float(np.max(om)), float(np.max(gm)))
    return MixingAnglePath(grid=grid, theta=theta, dtheta=dtheta, regime=regime,
                           dtheta_provenance=provenance)


def mixing_angle_rate(pulse: PulseSpec, t):
    """Analytic dtheta/dt at arbitrary t (requires analytic derivatives)."""
    om = np.asarray(pulse.omega_r(t), dtype=float)
    dl = np.asarray(pulse.delta(t), dtype=float)
    gm = np.asarray(pulse.gamma(t), dtype=float)
    d_om = np.asarray(pulse.d_omega_r(t), dtype=float)
    d_dl = np.asarray(pulse.d_delta(t), dtype=float)
    d_gm = np.asarray(pulse.d_gamma(t), dtype=float)
    a = dl - 0.5j * gm
    da = d_dl - 0.5j * d_gm
    out = (om * da - d_om * a) / (a * a + om**2)
    return out[()] if out.ndim == 0 else out


def theta_at(pulse: PulseSpec, t: float, reference: complex) -> complex:
    """theta at arbitrary t: principal representative branch-matched to a
    nearby reference value from a tracked path."""
    om = float(pulse.omega_r(t))
    dl = float(pulse.delta(t))
    gm = float(pulse.gamma(t))
    principal = complex(_principal_theta(np.array(om), np.array(dl - 0.5j * gm)))
    return principal + np.pi * round((reference - principal).real / np.pi)


def eigenvectors(theta: complex):
    """Right pair (|+>, |->) and left pair (|+~>, |-~>) for a mixing angle.

    <n~|m> = delta_nm holds exactly for any complex theta.
    """
    c, s = np.cos(theta / 2.0), np.sin(theta / 2.0)
    plus = np.array([c, s], dtype=complex)
    minus = np.array([s, -c], dtype=complex)
    cs, ss = np.cos(np.conj(theta) / 2.0), np.sin(np.conj(theta) / 2.0)
    plus_tilde = np.array([cs, ss], dtype=complex)
    minus_tilde = np.array([ss, -cs], dtype=complex)
    return (plus, minus), (plus_tilde, minus_tilde)


def allen_eberly(params: AllenEberlyParams) -> PulseSpec:
    """Pulse Omega_R = omega0*sech(t/tau), Delta = delta0*tanh(t/tau), constant
    gamma, with analytic derivatives."""
    om0, dl0, tau, gm = params.omega0, params.delta0, params.tau, params.gamma

    def omega_r(t):
        return om0 / np.cosh(np.asarray(t) / tau)

    def delta(t):
        return dl0 * np.tanh(np.asarray(t) / tau)

    def gamma(t):
        return np.full_like(np.asarray(t, dtype=float), gm)

    def d_omega_r(t):
        x = np.asarray(t) / tau
        return -(om0 / tau) * np.tanh(x) / np.cosh(x)

    def d_delta(t):
        x = np.asarray(t) / tau
        return (dl0 / tau) / np.cosh(x) ** 2

    def d_gamma(t):
        return np.zeros_like(np.asarray(t, dtype=float))

    return PulseSpec(omega_r=omega_r, delta=delta, gamma=gamma,
                     d_omega_r=d_omega_r, d_delta=d_delta, d_gamma=d_gamma)
