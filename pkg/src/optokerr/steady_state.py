"""Self-consistent mean-field solutions of the driven Kerr cavity.

The photon number obeys the cubic

    4 U^2 n^3 - 4 Delta U n^2 + (kt^2 + Delta^2) n = P_l (kappa + kt)^2

at fixed shifted linewidth kt = kappa + g*Qbar, and kt itself depends on
the solution through the mean displacement Qbar.  The pair collapses to
one scalar equation: Qbar = -2 g sqrt(P_l) Im(cbar) / omega_m together
with n = |cbar|^2 gives, exactly,

    kt^2 = kappa^2 + a n (Delta - 2 U n),    a = 2 g^2 / omega_m,

so ``solve_selfconsistent`` finds all joint solutions as bracketed roots
of a single function of n.  Root tracking in kt is deliberately avoided:
the fold points of the cubic move with kt, which blinds any fixed-seed
iteration to branch pairs near a fold, and the middle branch is a
repulsive fixed point of the natural kt iteration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy.optimize import brentq

from .constants import TWO_PI
from .params import DriveDerived, OperatingPoint, SystemParams, derive_drive


class NoConvergence(RuntimeError):
    """Fixed-point loop for kappa_tilde exceeded its iteration cap."""

    def __init__(self, n_c, kappa_tilde, step):
        self.n_c = n_c
        self.kappa_tilde = kappa_tilde
        self.step = step
        super().__init__(
            f"kappa_tilde iteration did not converge: last n_c={n_c:.6e}, "
            f"kappa_tilde={kappa_tilde:.6e}, last step {step:.3e}"
        )


@dataclass(frozen=True)
class SteadyBranch:
    """One converged mean-field solution with its derived quantities."""

    n_c: float
    c_bar: complex
    q_bar: float
    kappa_tilde: float
    u_tilde: float
    delta_tilde: float
    phi: float
    zeta: complex
    branch_label: str = ""
    degenerate: bool = False
    residual: float = 0.0
    p_bar: float = 0.0  # always zero in steady state

    @property
    def c_r(self) -> float:
        return self.c_bar.real

    @property
    def c_i(self) -> float:
        return self.c_bar.imag


def cubic_roots(kerr: float, detuning: float, p_l: float, kappa: float, kappa_tilde: float) -> list[float]:
    """Positive real roots of the occupation cubic, ascending.

    Closed-form depressed-cubic solution (trigonometric for three real
    roots, hyperbolic otherwise) with a short Newton polish per root.
    Coefficients span tens of orders of magnitude here, which makes
    companion-matrix root finders drop real roots; the closed form does
    not.  kerr == 0 degenerates to the linear cavity solution.
    """
    if kappa_tilde <= 0:
        raise ValueError(f"kappa_tilde must be positive, got {kappa_tilde}")
    rhs = p_l * (kappa + kappa_tilde) ** 2
    lorentz = kappa_tilde**2 + detuning**2
    if kerr == 0.0:
        return [rhs / lorentz]
    if rhs == 0.0:
        return []

    a = 4.0 * kerr * kerr
    b = -4.0 * detuning * kerr
    c = lorentz
    d = -rhs
    shift = -b / (3.0 * a)
    p = (3.0 * a * c - b * b) / (3.0 * a * a)
    q = (2.0 * b**3 - 9.0 * a * b * c + 27.0 * a * a * d) / (27.0 * a**3)
    disc = -4.0 * p**3 - 27.0 * q * q

    if disc > 0.0:
        # three distinct real roots
        m = 2.0 * math.sqrt(-p / 3.0)
        arg = min(1.0, max(-1.0, 3.0 * q / (p * m)))
        theta = math.acos(arg) / 3.0
        ts = [m * math.cos(theta - TWO_PI * k / 3.0) for k in range(3)]
    elif p < 0.0:
        m = 2.0 * math.sqrt(-p / 3.0)
        arg = 3.0 * abs(q) / (p * m)  # <= -1 when disc <= 0
        ts = [-math.copysign(1.0, q) * m * math.cosh(math.acosh(max(-arg, 1.0)) / 3.0)]
    elif p > 0.0:
        m = 2.0 * math.sqrt(p / 3.0)
        ts = [-m * math.sinh(math.asinh(3.0 * q / (p * m)) / 3.0)]
    else:
        ts = [-math.copysign(abs(q) ** (1.0 / 3.0), q)]

    roots = []
    for t in ts:
        n = t + shift
        for _ in range(2):
            f = ((a * n + b) * n + c) * n + d
            fp = (3.0 * a * n + 2.0 * b) * n + c
            if fp != 0.0:
                n -= f / fp
        if n > 0.0:
            roots.append(n)
    return sorted(roots)


def _cavity_amplitude(n, kt, kerr, detuning, sqrt_pl, kappa):
    return (kappa + kt) * sqrt_pl / (kt + 1j * (detuning - 2.0 * kerr * n))


def _cubic_residual(n, kerr, detuning, p_l, kappa, kt) -> float:
    rhs = p_l * (kappa + kt) ** 2
    lhs = 4.0 * kerr**2 * n**3 - 4.0 * detuning * kerr * n**2 + (kt**2 + detuning**2) * n
    return abs(lhs - rhs) / rhs if rhs > 0 else abs(lhs)


def _real_roots_quad(a, b, c):
    """Real roots of a x^2 + b x + c, tolerating a == 0."""
    if a == 0.0:
        return [] if b == 0.0 else [-c / b]
    disc = b * b - 4.0 * a * c
    if disc < 0.0:
        return []
    s = math.sqrt(disc)
    q = -0.5 * (b + math.copysign(s, b))
    roots = [q / a]
    if q != 0.0:
        roots.append(c / q)
    return roots


def _domain_end(kerr, detuning, kappa, a):
    """Largest n with kt^2 > 0, or None when kt^2 never vanishes."""
    if a == 0.0 or kerr < 0.0:
        return None
    if kerr > 0.0:
        q = 2.0 * a * kerr
        return (a * detuning + math.sqrt((a * detuning) ** 2 + 4.0 * q * kappa * kappa)) / (2.0 * q)
    if detuning < 0.0:
        return -kappa * kappa / (a * detuning)
    return None


def _state_from_n(n, kt, kerr, detuning, p_l, kappa, g, omega_m):
    sqrt_pl = math.sqrt(p_l)
    cbar = _cavity_amplitude(n, kt, kerr, detuning, sqrt_pl, kappa)
    n = abs(cbar) ** 2
    qbar = -2.0 * g * sqrt_pl * cbar.imag / omega_m
    return dict(
        n_c=n, c_bar=cbar, q_bar=qbar, kappa_tilde=kt,
        u_tilde=kerr * n, delta_tilde=detuning - 4.0 * kerr * n,
        phi=math.atan2((cbar * cbar).imag, (cbar * cbar).real),
        zeta=sqrt_pl - cbar,
        residual=_cubic_residual(n, kerr, detuning, p_l, kappa, kt),
    )


def solve_selfconsistent(
    params: SystemParams,
    point: OperatingPoint,
    drive: DriveDerived | None = None,
    max_iter: int = 200,
    tol: float = 1e-12,
) -> list[SteadyBranch]:
    """All self-consistent branches, sorted by n_c and labeled.

    With kt eliminated (see module docstring), every joint solution is a
    root of F(n) = n (kt(n)^2 + (Delta - 2 U n)^2) - P_l (kappa + kt(n))^2
    on (0, n_ub].  F minus its sqrt term is the polynomial
    c3 n^3 + c2 n^2 + c1 n + c0, so the extrema of F are isolated through
    the frozen-kt quadratic F' at the edges of the narrow kt band, and F
    is monotone between consecutive extrema: every sign change yields one
    brentq root and none can hide.  An extremum that touches zero without
    crossing is a fold tangency and is kept as a degenerate branch.
    """
    if drive is None:
        drive = derive_drive(params, point)
    kappa, g, omega_m = params.kappa, params.g, params.omega_m
    kerr, detuning = point.kerr, point.detuning
    p_l = drive.p_l

    if p_l == 0.0:
        branch = SteadyBranch(
            n_c=0.0, c_bar=0j, q_bar=0.0, kappa_tilde=kappa, u_tilde=0.0,
            delta_tilde=detuning, phi=0.0, zeta=0j, branch_label="only",
        )
        return [branch]

    a = 2.0 * g * g / omega_m
    if a == 0.0:
        states = [
            _state_from_n(n, kappa, kerr, detuning, p_l, kappa, g, omega_m)
            for n in cubic_roots(kerr, detuning, p_l, kappa, kappa)
        ]
        return classify_branches(
            [SteadyBranch(branch_label="", degenerate=False, **s) for s in states]
        )

    def kt_of(n):
        return math.sqrt(kappa * kappa + a * n * (detuning - 2.0 * kerr * n))

    def f_val(n):
        d2 = detuning - 2.0 * kerr * n
        kt2 = kappa * kappa + a * n * d2
        return n * (kt2 + d2 * d2) - p_l * (kappa + math.sqrt(kt2)) ** 2

    c3 = 4.0 * kerr * kerr - 2.0 * a * kerr
    c2 = detuning * (a - 4.0 * kerr) + 2.0 * a * kerr * p_l
    c1 = kappa * kappa + detuning * detuning - a * detuning * p_l

    def f_prime(n):
        return 3.0 * c3 * n * n + 2.0 * c2 * n + c1 - kappa * p_l * a * (detuning - 4.0 * kerr * n) / kt_of(n)

    # kt stays inside a narrow band: |kt^2 - kappa^2| <= a n_ub |d2|_max
    n_ub = max(cubic_roots(kerr, detuning, p_l, kappa, kappa), default=p_l)
    kt_lo = kt_hi = kappa
    for _ in range(2):
        s = a * n_ub * (abs(detuning) + 2.0 * kerr * n_ub)
        kt_lo = math.sqrt(max(kappa * kappa - s, (1e-3 * kappa) ** 2))
        kt_hi = math.sqrt(kappa * kappa + s)
        n_ub = p_l * (kappa + kt_hi) ** 2 / kt_lo**2
    n_ub *= 1.5  # keep the largest root strictly interior
    n_dom = _domain_end(kerr, detuning, kappa, a)
    if n_dom is not None:
        n_ub = min(n_ub, n_dom * (1.0 - 1e-12))

    # candidate extremum locations from the frozen-kt quadratic
    cands = []
    for kt in (kt_lo, kappa, kt_hi):
        cands.extend(
            _real_roots_quad(3.0 * c3, 2.0 * c2 + 4.0 * kappa * p_l * a * kerr / kt, c1 - kappa * p_l * a * detuning / kt)
        )
    cands = sorted({x for x in cands if 0.0 < x < n_ub})
    mesh = [0.0]
    for x in cands:
        mesh.extend((0.5 * (mesh[-1] + x), x))
    mesh.append(0.5 * (mesh[-1] + n_ub))
    mesh.append(n_ub)

    try:
        extrema = []
        fp_vals = [f_prime(x) if x > 0.0 else c1 - kappa * p_l * a * detuning / kappa for x in mesh]
        for x1, x2, f1, f2 in zip(mesh, mesh[1:], fp_vals, fp_vals[1:]):
            if f1 == 0.0:
                extrema.append(x1)
            elif f1 * f2 < 0.0:
                extrema.append(brentq(f_prime, x1, x2, maxiter=max_iter))

        nodes = {0.0, n_ub} | set(extrema)
        for kt in (kt_lo, kappa, kt_hi):
            nodes |= {r for r in cubic_roots(kerr, detuning, p_l, kappa, kt) if r < n_ub}
        nodes = sorted(nodes)
        vals = [f_val(x) for x in nodes]
        roots: list[float] = []
        flags: list[bool] = []
        for x1, x2, f1, f2 in zip(nodes, nodes[1:], vals, vals[1:]):
            if f1 == 0.0 and x1 > 0.0:
                roots.append(x1)
                flags.append(False)
            elif f1 * f2 < 0.0:
                roots.append(brentq(f_val, x1, x2, maxiter=max_iter))
                flags.append(False)
        if vals[-1] == 0.0:
            roots.append(nodes[-1])
            flags.append(False)
        f_scale = 4.0 * kappa * kappa * p_l  # |F(0)|
        for i in range(1, len(nodes) - 1):
            if nodes[i] not in extrema:
                continue
            crossed = vals[i - 1] * vals[i] < 0.0 or vals[i] * vals[i + 1] < 0.0 or vals[i] == 0.0
            if not crossed and abs(vals[i]) <= 1e-9 * f_scale:
                roots.append(nodes[i])  # fold tangency, grazing root pair
                flags.append(True)
    except (RuntimeError, ValueError) as exc:
        raise NoConvergence(float("nan"), float("nan"), float("nan")) from exc

    merged: list[dict] = []
    mflags: list[bool] = []
    for n, deg in sorted(zip(roots, flags)):
        if merged and abs(n - merged[-1]["n_c"]) <= 1e-6 * max(n, merged[-1]["n_c"]):
            mflags[-1] = True
            continue
        merged.append(_state_from_n(n, kt_of(n), kerr, detuning, p_l, kappa, g, omega_m))
        mflags.append(deg)

    branches = [SteadyBranch(branch_label="", degenerate=f, **e) for e, f in zip(merged, mflags)]
    return classify_branches(branches)


def classify_branches(branches: list[SteadyBranch]) -> list[SteadyBranch]:
    """Attach branch labels: only / lower, middle, upper (ascending n_c)."""
    from dataclasses import replace

    branches = sorted(branches, key=lambda b: b.n_c)
    if len(branches) == 1:
        names = ["only"]
    elif len(branches) == 2:
        names = ["lower", "upper"]
        branches = [replace(b, degenerate=True) for b in branches]
    elif len(branches) == 3:
        names = ["lower", "middle", "upper"]
    else:
        raise ValueError(f"expected 1-3 branches, got {len(branches)}")
    return [replace(b, branch_label=nm) for b, nm in zip(branches, names)]
