"""Fixed-step RK4 propagation of i*dpsi/dt = H(t)*psi with complex H.

The integrator is deterministic for fixed inputs: no adaptivity, stage
values evaluated analytically by the supplied callable (including interval
midpoints).  Step-size adequacy is certified by rerunning on a half-step
grid and comparing at shared samples.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import NonFinite, ZeroGauge
from .gauges import GaugeFunctions
from .grids import TimeGrid
from .two_level import MixingAnglePath

HamiltonianFn = Callable[[float], np.ndarray]

INITIAL_BARE_GROUND = "bare-ground"
INITIAL_EIGEN_PLUS = "eigen-plus"


@dataclass(frozen=True)
class StateTrajectory:
    """Bare-basis state samples psi(t_k) on a grid."""

    grid: TimeGrid
    psi: np.ndarray  # (n_points, dim)
    initial_condition: str = "custom"

    def __post_init__(self):
        if self.psi.shape[0] != self.grid.n_points:
            raise ValueError("one state per grid point required")


@dataclass(frozen=True)
class AmplitudeTrajectory:
    """Eigenstate amplitudes and populations derived from a trajectory.

    c_n = <n~|psi> are the raw biorthogonal amplitudes (|c_n|^2 is not
    bounded by one under decay); g_n = c_n/f_n are the gauge-modified
    amplitudes whose squared moduli act as populations.  Bare populations
    P_m = |<m|psi>|^2 are emitted raw and renormalized by their sum.
    """

    grid: TimeGrid
    c_plus: np.ndarray
    c_minus: np.ndarray
    g_plus: np.ndarray
    g_minus: np.ndarray
    pop_phi_plus: np.ndarray
    pop_phi_minus: np.ndarray
    pop_bare_0: np.ndarray
    pop_bare_1: np.ndarray
    pop_bare_0_renorm: np.ndarray
    pop_bare_1_renorm: np.ndarray


def integrate(h_total: HamiltonianFn, psi0: np.ndarray, grid: TimeGrid,
              initial_condition: str = "custom") -> StateTrajectory:
    """Classical RK4 for i*dpsi/dt = H(t)*psi from psi(t0) = psi0.

    ``h_total`` must be evaluable at every stage time t_k, t_k + h/2 and
    t_k + h.  Raises NonFinite as soon as a stage produces NaN/Inf (e.g.
    runaway gain).
    """
    psi = np.asarray(psi0, dtype=complex).copy()
    if psi.ndim != 1:
        raise ValueError("psi0 must be a vector")
    ts = grid.samples
    h = grid.step
    out = np.empty((grid.n_points, len(psi)), dtype=complex)
    out[0] = psi

    def rhs(t, p):
        return -1j * (h_total(t) @ p)

    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(grid.steps):
            t = ts[k]
            k1 = rhs(t, psi)
            k2 = rhs(t + 0.5 * h, psi + 0.5 * h * k1)
            k3 = rhs(t + 0.5 * h, psi + 0.5 * h * k2)
            k4 = rhs(t + h, psi + h * k3)
            psi = psi + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            if not np.all(np.isfinite(psi.view(float))):
                raise NonFinite(f"state blew up near t={ts[k + 1]:g}")
            out[k + 1] = psi
    return StateTrajectory(grid=grid, psi=out, initial_condition=initial_condition)


def amplitudes(traj: StateTrajectory, theta_path: MixingAnglePath,
               gauges: GaugeFunctions) -> AmplitudeTrajectory:
    """Project a trajectory onto the instantaneous eigenbasis.

    Uses the left eigenvectors, so c_+ = cos(theta/2)psi_0 + sin(theta/2)psi_1
    and c_- = sin(theta/2)psi_0 - cos(theta/2)psi_1 pointwise, then divides by
    the gauge factors.
    """
    if traj.grid != theta_path.grid or traj.grid != gauges.grid:
        raise ValueError("trajectory, theta path, and gauges must share the grid")
    if traj.psi.shape[1] != 2:
        raise ValueError("two-level trajectories only")
    c = np.cos(theta_path.theta / 2.0)
    s = np.sin(theta_path.theta / 2.0)
    psi0, psi1 = traj.psi[:, 0], traj.psi[:, 1]
    c_plus = c * psi0 + s * psi1
    c_minus = s * psi0 - c * psi1
    if np.any(gauges.f_plus == 0) or np.any(gauges.f_minus == 0):
        raise ZeroGauge("gauge factor vanished")
    g_plus = c_plus / gauges.f_plus
    g_minus = c_minus / gauges.f_minus
    p0 = np.abs(psi0) ** 2
    p1 = np.abs(psi1) ** 2
    total = p0 + p1
    return AmplitudeTrajectory(
        grid=traj.grid,
        c_plus=c_plus, c_minus=c_minus,
        g_plus=g_plus, g_minus=g_minus,
        pop_phi_plus=np.abs(g_plus) ** 2,
        pop_phi_minus=np.abs(g_minus) ** 2,
        pop_bare_0=p0, pop_bare_1=p1,
        pop_bare_0_renorm=p0 / total,
        pop_bare_1_renorm=p1 / total,
    )


def convergence_check(h_total: HamiltonianFn, psi0: np.ndarray,
                      grid: TimeGrid) -> float:
    """Max-norm gap between the solution on ``grid`` and on its half-step
    refinement, sampled at the shared points.  Certifies step adequacy."""
    if grid.steps % 2 != 0:
        raise ValueError("convergence check expects an even number of steps")
    coarse = integrate(h_total, psi0, grid)
    fine = integrate(h_total, psi0, grid.refine(2))
    return float(np.max(np.abs(coarse.psi - fine.psi[::2])))
