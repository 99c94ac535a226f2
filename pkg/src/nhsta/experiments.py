"""End-to-end shortcut pipelines used by the CLI and the test suite.

A run builds the branch-continuous mixing-angle path on a half-step-refined
grid (so RK4 stage midpoints are tabulated, not interpolated), synthesizes
the requested supplement policy, propagates the bare-basis state, and
extracts raw/modified amplitudes and populations.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import ConfigError
from .gauges import GaugeFunctions, gauge_simple
from .grids import TimeGrid
from .propagation import (INITIAL_BARE_GROUND, INITIAL_EIGEN_PLUS,
                          AmplitudeTrajectory, StateTrajectory, amplitudes,
                          convergence_check, integrate)
from .synthesis import (POLICY_HERMITIAN, POLICY_NAIVE,
                        NullificationReport, SupplementCoefficients,
                        assemble_h1_series, closed_form_gplus,
                        general_family_omega_zero, hermitian_realizable,
                        matched_gauge, nullification_residual)
from .two_level import (AllenEberlyParams, BranchRegime, MixingAnglePath,
                        PulseSpec, allen_eberly, branch_argument,
                        classify_regime, eigenvalue_path, mixing_angle_path,
                        mixing_angle_rate, radicand, theta_at)

#: general-family preset with zero coupling drive
POLICY_OMEGA_ZERO = "general-omega-zero"

POLICIES = (POLICY_HERMITIAN, POLICY_NAIVE, POLICY_OMEGA_ZERO)
INITIAL_STATES = (INITIAL_EIGEN_PLUS, INITIAL_BARE_GROUND)


@dataclass(frozen=True)
class ShortcutRun:
    """Everything produced by one shortcut experiment."""

    pulse: PulseSpec
    grid: TimeGrid
    regime: BranchRegime
    policy: str
    initial_state: str
    theta: MixingAnglePath
    e_plus: np.ndarray
    e_minus: np.ndarray
    gauges: GaugeFunctions
    coeffs: Optional[SupplementCoefficients]
    trajectory: StateTrajectory
    amps: AmplitudeTrajectory
    g_plus_closed: Optional[np.ndarray]
    residual: Optional[NullificationReport]
    convergence: Optional[float]

    @property
    def metrics(self) -> dict:
        """End-of-run scalars for sweep tables and manifests."""
        g_plus_sq = float(np.abs(self.amps.g_plus[-1]) ** 2)
        return {
            "regime": self.regime.value,
            "g_plus_sq_final": g_plus_sq,
            "p0_renorm_final": float(self.amps.pop_bare_0_renorm[-1]),
            "p1_final": float(self.amps.pop_bare_1[-1]),
            "max_abs_g_minus": float(np.max(np.abs(self.amps.g_minus))),
            "max_residual": (float(self.residual.max_abs_residual)
                             if self.residual is not None else float("nan")),
            "convergence": (float(self.convergence)
                            if self.convergence is not None else float("nan")),
        }


def _h0_entries(pulse: PulseSpec, ts: np.ndarray) -> np.ndarray:
    om = np.asarray(pulse.omega_r(ts), dtype=float)
    dl = np.asarray(pulse.delta(ts), dtype=float)
    gm = np.asarray(pulse.gamma(ts), dtype=float)
    out = np.empty((len(ts), 2, 2), dtype=complex)
    out[:, 0, 0] = -0.5 * dl
    out[:, 0, 1] = 0.5 * om
    out[:, 1, 0] = 0.5 * om
    out[:, 1, 1] = 0.5 * (dl - 1j * gm)
    return out


def _coefficients_fine(policy: str, theta_fine: MixingAnglePath
                       ) -> Optional[SupplementCoefficients]:
    if policy == POLICY_HERMITIAN:
        return hermitian_realizable(theta_fine)
    if policy == POLICY_OMEGA_ZERO:
        return general_family_omega_zero(theta_fine)
    if policy == POLICY_NAIVE:
        return None
    raise ConfigError(f"unknown policy {policy!r}; expected one of {POLICIES}")


def _naive_series(theta_path: MixingAnglePath) -> np.ndarray:
    dth = theta_path.dtheta
    n = theta_path.grid.n_points
    out = np.zeros((n, 2, 2), dtype=complex)
    out[:, 0, 1] = -0.5j * dth
    out[:, 1, 0] = 0.5j * dth
    return out


def _slice_coeffs(coeffs: SupplementCoefficients, grid: TimeGrid
                  ) -> SupplementCoefficients:
    return SupplementCoefficients(
        grid=grid,
        delta_plus=np.asarray(coeffs.delta_plus)[::2].copy(),
        delta_minus=np.asarray(coeffs.delta_minus)[::2].copy(),
        omega=np.asarray(coeffs.omega)[::2].copy(),
        policy=coeffs.policy,
    )


def _make_h_total(pulse: PulseSpec, fine: TimeGrid, h_stack: np.ndarray,
                  theta_fine: MixingAnglePath, policy: str) -> Callable:
    """Index lookup on the tabulated fine grid with an analytic fallback.

    Stage times of the run grid hit fine-grid samples exactly; other times
    (e.g. the half-step certification rerun) rebuild the Hamiltonian from
    the pulse, branch-matching theta against the tabulated path.
    """
    fine_ts = fine.samples
    th_tab = theta_fine.theta
    analytic = pulse.has_analytic_derivatives
    dth_tab = theta_fine.dtheta

    def h_total(t: float) -> np.ndarray:
        j = fine.index_of(t)
        if j is not None:
            return h_stack[j]
        om = float(pulse.omega_r(t))
        dl = float(pulse.delta(t))
        gm = float(pulse.gamma(t))
        h = 0.5 * np.array([[-dl, om], [om, dl - 1j * gm]], dtype=complex)
        ref = complex(np.interp(t, fine_ts, th_tab.real),
                      np.interp(t, fine_ts, th_tab.imag))
        th = theta_at(pulse, t, ref)
        if analytic:
            dth = complex(mixing_angle_rate(pulse, t))
        else:
            dth = complex(np.interp(t, fine_ts, dth_tab.real),
                          np.interp(t, fine_ts, dth_tab.imag))
        if policy == POLICY_NAIVE:
            h1 = np.array([[0.0, -0.5j * dth], [0.5j * dth, 0.0]], dtype=complex)
        else:
            sin_th, cos_th = np.sin(th), np.cos(th)
            re_s = sin_th.real
            num = dth.imag
            if abs(re_s) < 1e-9:
                delta = 0.0 if abs(num) < 1e-9 else num / re_s
            else:
                delta = num / re_s
            if policy == POLICY_HERMITIAN:
                omega_a = -dth.real - delta * sin_th.imag
                h1 = 0.5 * np.array([[delta, 1j * omega_a],
                                     [-1j * omega_a, -delta]], dtype=complex)
            else:  # zero-drive family: complex diagonal split, no coupling
                half = -1j * dth / sin_th if abs(sin_th) > 1e-12 else 0.0
                h1 = 0.5 * np.array([[half, 0.0], [0.0, -half]], dtype=complex)
        return h + h1

    return h_total


def run_shortcut(pulse: PulseSpec, grid: TimeGrid,
                 policy: str = POLICY_HERMITIAN,
                 initial_state: str = INITIAL_EIGEN_PLUS,
                 regime: Optional[BranchRegime] = None,
                 with_convergence: bool = False,
                 with_frame_check: bool = False) -> ShortcutRun:
    """Full pipeline: angle path, supplement, propagation, amplitudes."""
    if initial_state not in INITIAL_STATES:
        raise ConfigError(
            f"unknown initial state {initial_state!r}; expected one of "
            f"{INITIAL_STATES}")
    fine = grid.refine(2)
    theta_fine = mixing_angle_path(pulse, fine, regime)
    regime = theta_fine.regime
    theta = MixingAnglePath(grid=grid, theta=theta_fine.theta[::2].copy(),
                            dtheta=theta_fine.dtheta[::2].copy(), regime=regime,
                            dtheta_provenance=theta_fine.dtheta_provenance)
    e_plus, e_minus = eigenvalue_path(pulse, grid, regime)

    coeffs_fine = _coefficients_fine(policy, theta_fine)
    if coeffs_fine is None:
        h1_fine = _naive_series(theta_fine)
        coeffs = None
    else:
        h1_fine = assemble_h1_series(coeffs_fine)
        coeffs = _slice_coeffs(coeffs_fine, grid)

    h_stack = _h0_entries(pulse, fine.samples) + h1_fine
    h_total = _make_h_total(pulse, fine, h_stack, theta_fine, policy)

    if initial_state == INITIAL_EIGEN_PLUS:
        th0 = theta.theta[0]
        psi0 = np.array([np.cos(th0 / 2.0), np.sin(th0 / 2.0)], dtype=complex)
    else:
        psi0 = np.array([1.0, 0.0], dtype=complex)

    traj = integrate(h_total, psi0, grid, initial_condition=initial_state)

    if coeffs is not None:
        gauges = matched_gauge(e_plus, e_minus, coeffs, theta)
    else:
        gauges = gauge_simple(e_plus, e_minus, grid)
    amps = amplitudes(traj, theta, gauges)

    g_plus_closed = None
    residual = None
    if coeffs is not None:
        if policy == POLICY_HERMITIAN:
            g_plus_closed = closed_form_gplus(e_plus, gauges, coeffs, theta)
        residual = nullification_residual(
            theta, coeffs,
            pulse=pulse if with_frame_check else None,
            gauges=gauges if with_frame_check else None)

    convergence = None
    if with_convergence:
        convergence = convergence_check(h_total, psi0, grid)

    return ShortcutRun(pulse=pulse, grid=grid, regime=regime, policy=policy,
                       initial_state=initial_state, theta=theta,
                       e_plus=e_plus, e_minus=e_minus, gauges=gauges,
                       coeffs=coeffs, trajectory=traj, amps=amps,
                       g_plus_closed=g_plus_closed, residual=residual,
                       convergence=convergence)


def ae_pulse_and_grid(params: AllenEberlyParams, steps: int
                      ) -> tuple[PulseSpec, TimeGrid, BranchRegime]:
    """Convenience: pulse, grid, and regime for sech/tanh parameters."""
    pulse = allen_eberly(params)
    grid = TimeGrid(params.t0, params.t_f, steps)
    regime = classify_regime(params.omega0, params.gamma)
    return pulse, grid, regime


def run_allen_eberly(params: AllenEberlyParams, steps: int = 4000,
                     **kwargs) -> ShortcutRun:
    pulse, grid, regime = ae_pulse_and_grid(params, steps)
    return run_shortcut(pulse, grid, regime=regime, **kwargs)


def zplane_series(pulse: PulseSpec, grid: TimeGrid, regime: BranchRegime) -> dict:
    """Radicand trajectory columns for the branch-cut figure."""
    ts = grid.samples
    z = radicand(pulse, ts)
    return {
        "t": ts,
        "re_z": z.real,
        "im_z": z.imag,
        "eta": branch_argument(z, regime),
    }


def theta_series(pulse: PulseSpec, grid: TimeGrid,
                 regime: Optional[BranchRegime] = None) -> dict:
    """Mixing-angle trajectory columns for the complex-angle figure."""
    path = mixing_angle_path(pulse, grid, regime)
    return {
        "t": grid.samples,
        "re_theta": path.theta.real,
        "im_theta": path.theta.imag,
    }


__all__ = [
    "POLICY_OMEGA_ZERO", "POLICIES", "INITIAL_STATES", "ShortcutRun",
    "run_shortcut", "run_allen_eberly", "ae_pulse_and_grid",
    "zplane_series", "theta_series",
]
