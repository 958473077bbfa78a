"""Effective mechanical susceptibility, self-energy, and force transfer.

All quantities keep their full frequency dependence.  omega may be a
scalar or an array; fields of the returned record follow suit.  The
response functions are defined on any converged branch; they are only
physically meaningful as noise filters on dynamically stable ones.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .params import DriveDerived, OperatingPoint, SystemParams, derive_drive
from .steady_state import SteadyBranch


class DivergentDenominator(FloatingPointError):
    """|chi_c^-1(w) chi_c^-1(-w)* - 4 Ut^2| underflowed: parametric-oscillation threshold."""

    def __init__(self, omega):
        self.omega = omega
        super().__init__(f"response denominator vanished at omega={omega!r} rad/s")


@dataclass(frozen=True)
class ResponseEval:
    omega: object
    chi_m_inv: object
    chi_c_inv: object
    chi_c_tilde_inv: object
    xi_self_energy: object
    lambda_force: object
    chi_eff: object
    omega_eff: object
    gamma_eff: object
    lam: object
    mu: object
    nu: object


def _chi_c_inv(omega, kt, dt):
    return kt - 1j * (omega + dt)


def evaluate(
    params: SystemParams,
    point: OperatingPoint,
    branch: SteadyBranch,
    omega,
    drive: DriveDerived | None = None,
) -> ResponseEval:
    """Evaluate the linear response at angular frequency omega (rad/s)."""
    if drive is None:
        drive = derive_drive(params, point)
    scalar = np.isscalar(omega) or (isinstance(omega, np.ndarray) and omega.ndim == 0)
    w = np.atleast_1d(np.asarray(omega, dtype=float))

    g, omega_m, gamma_m, kappa = params.g, params.omega_m, params.gamma_m, params.kappa
    kt, ut, dt, phi = branch.kappa_tilde, branch.u_tilde, branch.delta_tilde, branch.phi
    zeta = branch.zeta
    sqrt_pl = math.sqrt(drive.p_l)

    chi_m_inv = (omega_m**2 - 1j * w * gamma_m - w**2) / omega_m
    chi_c = _chi_c_inv(w, kt, dt)
    twist = 2j * ut * np.exp(-1j * phi)
    chi_ct = chi_c + twist
    chi_ct_minus = _chi_c_inv(-w, kt, dt) + twist
    denom = chi_c * np.conj(_chi_c_inv(-w, kt, dt)) - 4.0 * ut * ut
    bad = np.abs(denom) < 1e-30
    if bad.any():
        raise DivergentDenominator(w[bad][0])

    xi = -1j * sqrt_pl * g * g * (chi_ct * zeta - np.conj(chi_ct_minus) * np.conj(zeta)) / denom
    lam_force = 1j * (g / math.sqrt(2.0 * kappa)) * (
        sqrt_pl * (kappa + kt) * chi_ct / denom - np.conj(branch.c_bar)
    )
    chi_eff = 1.0 / (chi_m_inv + xi)

    lam = kt * kt + dt * dt - w * w - 4.0 * ut * ut
    i0 = (complex(_chi_c_inv(0.0, kt, dt) + twist) * zeta).imag
    ci = branch.c_i
    mu = -2.0 * i0 * lam + 4.0 * w * w * kt * ci
    nu = -2.0 * lam * ci - 4.0 * kt * i0
    scale = g * g * sqrt_pl * omega_m / (lam * lam + 4.0 * w * w * kt * kt)
    omega_eff_sq = omega_m**2 - scale * mu
    gamma_eff = gamma_m + scale * nu
    with np.errstate(invalid="ignore"):
        omega_eff = np.sqrt(omega_eff_sq)

    def out(x):
        return x[0] if scalar else x

    def outc(x):
        return complex(x[0]) if scalar else x

    return ResponseEval(
        omega=out(w),
        chi_m_inv=outc(chi_m_inv),
        chi_c_inv=outc(chi_c),
        chi_c_tilde_inv=outc(chi_ct),
        xi_self_energy=outc(xi),
        lambda_force=outc(lam_force),
        chi_eff=outc(chi_eff),
        omega_eff=out(omega_eff),
        gamma_eff=out(gamma_eff),
        lam=out(lam),
        mu=out(mu),
        nu=out(nu),
    )


def force_coefficient(
    params: SystemParams,
    point: OperatingPoint,
    branch: SteadyBranch,
    omega,
    drive: DriveDerived | None = None,
):
    """Lambda(omega) alone, vectorized; the c_in force-transfer amplitude."""
    if drive is None:
        drive = derive_drive(params, point)
    w = np.asarray(omega, dtype=float)
    kt, ut, dt, phi = branch.kappa_tilde, branch.u_tilde, branch.delta_tilde, branch.phi
    kappa, g = params.kappa, params.g
    chi_c = _chi_c_inv(w, kt, dt)
    chi_ct = chi_c + 2j * ut * np.exp(-1j * phi)
    denom = chi_c * np.conj(_chi_c_inv(-w, kt, dt)) - 4.0 * ut * ut
    sqrt_pl = math.sqrt(drive.p_l)
    return 1j * (g / math.sqrt(2.0 * kappa)) * (sqrt_pl * (kappa + kt) * chi_ct / denom - np.conj(branch.c_bar))


def response_curve(
    params: SystemParams,
    point: OperatingPoint,
    branch: SteadyBranch,
    omega_grid,
    drive: DriveDerived | None = None,
) -> ResponseEval:
    """Vectorized evaluate over a sorted frequency grid."""
    grid = np.asarray(omega_grid, dtype=float)
    if grid.ndim != 1 or (grid.size > 1 and not np.all(np.diff(grid) > 0)):
        raise ValueError("omega_grid must be a 1d strictly increasing array")
    return evaluate(params, point, branch, grid, drive)
