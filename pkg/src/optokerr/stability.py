"""Drift matrix of the linearized quadrature dynamics and stability tests.

Two criteria are always computed: the closed-form Routh-Hurwitz
quantities s1, s2, s3 (the quoted physics) and the eigenvalues of the
drift matrix (the ground truth).  They must agree outside a marginal
band |max_re| <= 1e-6*kappa; s3 in particular mixes terms spanning
~15 orders of magnitude, so sign noise very close to a boundary is
expected and reported rather than fatal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .params import DriveDerived, OperatingPoint, SystemParams, derive_drive
from .steady_state import SteadyBranch

MARGINAL_BAND = 1e-6  # in units of kappa

REGION_STABLE = "stable"
REGION_S12 = "s12_unstable"
REGION_S3 = "s3_unstable"
REGION_ALL = "all_unstable"
REGION_LABELS = (REGION_STABLE, REGION_S12, REGION_S3, REGION_ALL)


@dataclass(frozen=True)
class StabilityReport:
    s1: float
    s2: float
    s3: float
    eigenvalues: tuple
    max_re: float
    rh_stable: bool
    eig_stable: bool
    agreement: bool
    marginal: bool
    region: str


def drift_matrix(
    params: SystemParams,
    point: OperatingPoint,
    branch: SteadyBranch,
    drive: DriveDerived | None = None,
) -> np.ndarray:
    """The 4x4 evolution matrix of (dQ, dP, dx, dy)."""
    if drive is None:
        drive = derive_drive(params, point)
    g, omega_m, gamma_m = params.g, params.omega_m, params.gamma_m
    kt, ut, dt, phi = branch.kappa_tilde, branch.u_tilde, branch.delta_tilde, branch.phi
    sqrt_pl = math.sqrt(drive.p_l)
    s, c = math.sin(phi), math.cos(phi)
    rt2 = math.sqrt(2.0)
    return np.array(
        [
            [0.0, omega_m, 0.0, 0.0],
            [-omega_m, -gamma_m, 0.0, -g * math.sqrt(2.0 * drive.p_l)],
            [rt2 * g * (sqrt_pl - branch.c_r), 0.0, -kt - 2.0 * ut * s, dt + 2.0 * ut * c],
            [-rt2 * g * branch.c_i, 0.0, -dt + 2.0 * ut * c, -kt + 2.0 * ut * s],
        ]
    )


def routh_hurwitz(
    params: SystemParams,
    point: OperatingPoint,
    branch: SteadyBranch,
    drive: DriveDerived | None = None,
) -> tuple[float, float, float]:
    """Closed-form stability quantities; stability means s1, s2, s3 all > 0."""
    if drive is None:
        drive = derive_drive(params, point)
    g, omega_m, gamma_m = params.g, params.omega_m, params.gamma_m
    kt, ut, dt, phi = branch.kappa_tilde, branch.u_tilde, branch.delta_tilde, branch.phi
    sqrt_pl = math.sqrt(drive.p_l)
    cr, ci = branch.c_r, branch.c_i
    s, c = math.sin(phi), math.cos(phi)
    d_c = kt * kt + dt * dt - 4.0 * ut * ut

    s1 = (
        2.0 * kt * ((kt + gamma_m) ** 2 + dt * dt - 4.0 * ut * ut)
        + 2.0 * sqrt_pl * g * g * ci * omega_m
        + gamma_m * omega_m * omega_m
    )
    s2 = (
        2.0 * sqrt_pl * g * g * ((cr - sqrt_pl) * (dt - 2.0 * ut * c) - ci * (kt + 2.0 * ut * s))
        + d_c * omega_m
    )
    s3 = (
        s1 * (d_c * gamma_m + 2.0 * omega_m * (kt * omega_m - sqrt_pl * g * g * ci))
        - (2.0 * kt + gamma_m) ** 2 * s2 * omega_m
    )
    return s1, s2, s3


def eigen_stability(matrix: np.ndarray) -> tuple[np.ndarray, float]:
    eigs = np.linalg.eigvals(matrix)
    return eigs, float(eigs.real.max())


def region_label(s1: float, s2: float, s3: float) -> str:
    """Partition by the signs of (s1, s2, s3); exactly one label per point."""
    if s1 > 0 and s2 > 0 and s3 > 0:
        return REGION_STABLE
    if s1 < 0 and s2 < 0 and s3 < 0:
        return REGION_ALL
    if s1 < 0 or s2 < 0:
        return REGION_S12
    return REGION_S3


def assess(
    params: SystemParams,
    point: OperatingPoint,
    branch: SteadyBranch,
    drive: DriveDerived | None = None,
) -> StabilityReport:
    if drive is None:
        drive = derive_drive(params, point)
    s1, s2, s3 = routh_hurwitz(params, point, branch, drive)
    eigs, max_re = eigen_stability(drift_matrix(params, point, branch, drive))
    rh_ok = s1 > 0 and s2 > 0 and s3 > 0
    eig_ok = max_re < 0
    marginal = abs(max_re) <= MARGINAL_BAND * params.kappa
    return StabilityReport(
        s1=s1,
        s2=s2,
        s3=s3,
        eigenvalues=tuple(eigs),
        max_re=max_re,
        rh_stable=rh_ok,
        eig_stable=eig_ok,
        agreement=(rh_ok == eig_ok) or marginal,
        marginal=marginal,
        region=region_label(s1, s2, s3),
    )
