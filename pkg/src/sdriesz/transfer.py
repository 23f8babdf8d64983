"""Transfer functions, their uniform lower bounds, and the sampling-period search.

With finite-support ``b`` both transfer functions are finite rational sums over
``S = supp(b * f)``:

    G(lam)        = sum_S b_n f_n / (lam - lam_n)
    F R(z,T) S(t) = sum_S f_n s_n / (z - mu_n),     mu_n = exp(t lam_n)

``1 - G`` vanishes exactly at eigenvalues of the closed-loop block
``diag(lam_S) + b_S f_S^T`` and ``1 - F R S`` exactly at eigenvalues of
``diag(mu_S) + s_S f_S^T``.  The scans therefore pair a grid minimum on the
boundary of the region (where the maximum principle applies to the reciprocal)
with a dense eigenvalue guard that rules out interior zeros.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .assumptions import TailCertificate
from .exceptions import NegativeMargin, NoAdmissibleTau, SpectrumTooClose
from .spectral import SEPARATION_TOL, RieszSystem, apply_hold

__all__ = [
    "ScanGrid",
    "LowerBoundResult",
    "transfer_continuous",
    "transfer_discrete",
    "scan_epsilon_c",
    "scan_epsilon_d",
    "find_tau_star",
    "RADIAL_SAMPLES",
]

RADIAL_SAMPLES = (1.0, 1.01, 1.1, 2.0)
_POLE_SKIP = 1e-8


@dataclass(frozen=True)
class ScanGrid:
    """Grid densities for the lower-bound scans.

    ``eta=None`` picks half the smallest head eigenvalue modulus at scan time.
    """

    omega_max: float = 1e3
    n_omega: int = 4096
    eta: float | None = None
    n_theta: int = 2048
    exclusion_arc: float = 0.05

    def __post_init__(self):
        if not self.omega_max >= 1:
            raise ValueError("omega_max must be at least 1")
        if self.n_omega < 16 or self.n_theta < 16:
            raise ValueError("grids need at least 16 points")
        if not 0 < self.exclusion_arc <= math.pi / 8:
            raise ValueError("exclusion_arc must lie in (0, pi/8]")
        if self.eta is not None and not self.eta > 0:
            raise ValueError("eta must be positive")

    def resolve_eta(self, sys: RieszSystem) -> float:
        head = np.abs(np.asarray(sys.spectrum.head, dtype=complex))
        bound = float(head.min()) if head.size else 1.0
        if self.eta is None:
            return 0.5 * bound
        if head.size and self.eta >= bound:
            raise ValueError(f"eta={self.eta} must be below the smallest head modulus {bound}")
        return float(self.eta)

    def omega_points(self) -> np.ndarray:
        q = self.n_omega // 4
        w = np.geomspace(1e-3, self.omega_max, q)
        lin = np.linspace(-self.omega_max, self.omega_max, self.n_omega - 2 * q)
        return np.unique(np.concatenate([-w, [0.0], w, lin]))

    def theta_points(self) -> np.ndarray:
        """Angles on the unit circle outside ``|theta| < exclusion_arc``."""
        a = self.exclusion_arc
        return np.linspace(a, 2 * math.pi - a, self.n_theta)

    def arc_points(self, n: int = 64) -> np.ndarray:
        """Geometric angle refinement inside the exclusion arc, both sides of 1."""
        t = np.geomspace(1e-9, self.exclusion_arc, n)
        return np.concatenate([-t[::-1], t])

    def as_dict(self) -> dict:
        return {
            "omega_max": self.omega_max, "n_omega": self.n_omega, "eta": self.eta,
            "n_theta": self.n_theta, "exclusion_arc": self.exclusion_arc,
        }


@dataclass
class LowerBoundResult:
    """Certified margin ``epsilon`` net of ``truncation_slack``.

    ``raw_min`` is the smallest scanned value (including the analytic floor or
    the ``z = 1`` value); ``guard`` is the largest real part (continuous) or
    modulus (discrete) of the coupled closed-loop block.
    """

    epsilon: float
    argmin_point: complex
    truncation_slack: float
    raw_min: float = 0.0
    guard: float = 0.0
    floor: float | None = None
    near_one_margin: float | None = None
    tau: float | None = None
    eta: float | None = None
    axis: np.ndarray = field(default=None, repr=False)
    values: np.ndarray = field(default=None, repr=False)
    notes: list = field(default_factory=list)


# ---- transfer functions ------------------------------------------------------

def _support(sys, cut=None):
    S = sys.coupled
    return S if cut is None else S[S < cut]


def _G(lam_pts, lam_S, bf_S):
    return (1.0 / (lam_pts[:, None] - lam_S[None, :])) @ bf_S


def transfer_continuous(sys: RieszSystem, lam, tol: float = SEPARATION_TOL):
    """``G(lam) = F (lam - A)^{-1} B`` on the truncation; scalar or array input."""
    pts = np.atleast_1d(np.asarray(lam, dtype=complex))
    S = sys.coupled
    if S.size == 0:
        out = np.zeros(pts.shape, complex)
    else:
        d = np.abs(pts[:, None] - sys.lam[S][None, :])
        k, j = np.unravel_index(np.argmin(d), d.shape)
        if d[k, j] <= tol:
            raise SpectrumTooClose(int(S[j]), d[k, j], complex(pts[k]))
        out = _G(pts, sys.lam[S], (sys.b * sys.f)[S])
    return out[0] if np.ndim(lam) == 0 else out


def transfer_discrete(sys: RieszSystem, tau: float, z, tol: float = SEPARATION_TOL):
    """``F (z - T(tau))^{-1} S(tau)`` on the truncation; scalar or array input.

    Separation is required from every ``exp(tau lam_n)`` and, for systems with
    a tail, from the cluster point 1.
    """
    if not tau > 0:
        raise ValueError("tau must be positive")
    pts = np.atleast_1d(np.asarray(z, dtype=complex))
    mu = np.exp(tau * sys.lam)
    d = np.abs(pts[:, None] - mu[None, :])
    k, j = np.unravel_index(np.argmin(d), d.shape)
    if d[k, j] <= tol:
        raise SpectrumTooClose(int(j), d[k, j], complex(pts[k]))
    if sys.spectrum.has_tail:
        d1 = np.abs(pts - 1)
        if d1.min() <= tol:
            i = int(np.argmin(d1))
            raise SpectrumTooClose(None, d1[i], complex(pts[i]))
    S = sys.coupled
    fs = (sys.f * apply_hold(sys, tau))[S]
    out = (1.0 / (pts[:, None] - mu[S][None, :])) @ fs
    return out[0] if np.ndim(z) == 0 else out


# ---- continuous margin -----------------------------------------------------------

def _refine(fun, pts, vals):
    """Brent search between the neighbours of the grid argmin of ``fun``."""
    k = int(np.argmin(vals))
    lo, hi = pts[max(k - 1, 0)], pts[min(k + 1, pts.size - 1)]
    if hi <= lo:
        return pts[k], vals[k]
    r = minimize_scalar(fun, bounds=(lo, hi), method="bounded", options={"xatol": 1e-12 * max(1, abs(pts[k]))})
    if r.fun < vals[k]:
        return float(r.x), float(r.fun)
    return pts[k], vals[k]


def _fnorm(sys):
    return math.sqrt(float(np.sum(np.abs(sys.f) ** 2)) / sys.riesz_Ma)


def scan_epsilon_c(sys: RieszSystem, grid: ScanGrid | None = None,
                   cert: TailCertificate | None = None) -> LowerBoundResult:
    """Lower bound on ``|1 - G(lam)|`` over the closed right half-plane.

    Scans the imaginary axis up to ``omega_max`` (including 0), the semicircle
    of radius ``eta``, and adds the certified floor
    ``1 - sum|b_n f_n| / (omega_max - max|lam_n|)`` for ``|lam| >= omega_max``.
    The dropped-tail bound times ``||f||`` is subtracted.

    Raises
    ------
    NegativeMargin
        Net margin ``<= 0``, or the coupled closed-loop block has an eigenvalue
        with ``Re >= 0`` (an interior zero of ``1 - G``).
    """
    grid = grid or ScanGrid()
    cut = None if cert is None else cert.cut
    S = _support(sys, cut)
    lam_S, bf_S = sys.lam[S], (sys.b * sys.f)[S]
    eta = grid.resolve_eta(sys)
    slack = 0.0 if cert is None else cert.cont_tail_bound * _fnorm(sys)

    omega = grid.omega_points()
    theta = np.linspace(-math.pi / 2, math.pi / 2, grid.n_theta)
    semi = eta * np.exp(1j * theta)

    def absval(pts):
        return np.abs(1.0 - _G(np.atleast_1d(pts), lam_S, bf_S))

    notes = []
    if S.size == 0:
        ax_vals = np.ones(omega.size)
        return LowerBoundResult(1.0 - slack, 0j, slack, 1.0, -math.inf, 1.0, tau=None, eta=eta,
                                axis=omega, values=ax_vals, notes=["G vanishes identically"])
    if np.any(np.abs(lam_S.real) <= SEPARATION_TOL):
        i = int(np.argmin(np.abs(lam_S.real)))
        raise SpectrumTooClose(int(S[i]), abs(lam_S[i].real), complex(1j * lam_S[i].imag))

    # local refinement around coupled poles close to the axis
    extra = [lam_S.imag[k] + max(abs(lam_S.real[k]), 1e-6) * np.linspace(-5, 5, 41)
             for k in range(S.size) if abs(lam_S.imag[k]) <= grid.omega_max]
    if extra:
        omega = np.unique(np.concatenate([omega, *extra]))
        omega = omega[np.abs(omega) <= grid.omega_max]
    ax_vals = absval(1j * omega)
    w_best, v_axis = _refine(lambda w: absval(1j * w)[0], omega, ax_vals)
    semi_vals = absval(semi)
    t_best, v_semi = _refine(lambda t: absval(eta * np.exp(1j * t))[0], theta, semi_vals)

    big = float(np.max(np.abs(lam_S)))
    if grid.omega_max > big:
        floor = 1.0 - float(np.sum(np.abs(bf_S))) / (grid.omega_max - big)
    else:
        floor = -math.inf
        notes.append("omega_max does not exceed the coupled spectral radius; no floor")

    cands = [(v_axis, 1j * w_best), (v_semi, eta * np.exp(1j * t_best)), (floor, complex(grid.omega_max))]
    raw, arg = min(cands, key=lambda c: c[0])
    guard = float(np.max(np.linalg.eigvals(np.diag(lam_S) + np.outer(sys.b[S], sys.f[S])).real))
    res = LowerBoundResult(max(raw - slack, 0.0), arg, slack, raw, guard, floor, eta=eta,
                           axis=omega, values=ax_vals, notes=notes)
    if guard >= 0:
        res.epsilon = 0.0
        raise NegativeMargin(
            f"1 - G has a zero in the closed right half-plane (closed-loop Re = {guard:.6g})", res)
    if raw - slack <= 0:
        raise NegativeMargin(f"continuous margin {raw:.6g} - slack {slack:.6g} <= 0 near {arg:.6g}", res)
    return res


# ---- discrete margin -------------------------------------------------------------

def scan_epsilon_d(sys: RieszSystem, tau: float, grid: ScanGrid | None = None,
                   cert: TailCertificate | None = None) -> LowerBoundResult:
    """Lower bound on ``|1 - F R(z, T(tau)) S(tau)|`` over ``|z| >= 1``.

    Scans the unit circle outside the exclusion arc, a geometric refinement of
    the arc itself, and the radial circles in ``RADIAL_SAMPLES``; points within
    ``1e-8`` of an ``exp(tau lam_n)`` are skipped.  At ``z = 1`` the truncated
    value is exactly ``1 + F A^{-1} B`` (``near_one_margin``).

    Raises
    ------
    NegativeMargin
        Net margin ``<= 0`` or ``diag(mu_S) + s_S f_S^T`` has an eigenvalue of
        modulus ``>= 1``.
    """
    if not 0 < tau < 1:
        raise ValueError("tau must lie in (0, 1)")
    grid = grid or ScanGrid()
    cut = None if cert is None else cert.cut
    S = _support(sys, cut)
    slack = 0.0 if cert is None else cert.disc_tail_bound * _fnorm(sys)
    theta = grid.theta_points()
    if S.size == 0:
        return LowerBoundResult(1.0 - slack, -1 + 0j, slack, 1.0, -math.inf, tau=tau,
                                near_one_margin=1.0, axis=theta, values=np.ones(theta.size),
                                notes=["transfer vanishes identically"])

    mu_S = np.exp(tau * sys.lam[S])
    fs_S = (sys.f * apply_hold(sys, tau))[S]

    def absval(z):
        z = np.atleast_1d(z)
        return np.abs(1.0 - (1.0 / (z[:, None] - mu_S[None, :])) @ fs_S)

    def keep(z):
        return np.min(np.abs(z[:, None] - mu_S[None, :]), axis=1) > _POLE_SKIP

    circ = np.exp(1j * theta)
    circ_vals = absval(circ)
    t_best, v_circ = _refine(lambda t: absval(np.exp(1j * t))[0], theta, circ_vals)
    cands = [(v_circ, np.exp(1j * t_best))]

    arc = grid.arc_points()
    za = np.exp(1j * arc)
    za = za[keep(za)]
    if za.size:
        va = absval(za)
        cands.append((float(va.min()), za[np.argmin(va)]))

    full = np.linspace(0, 2 * math.pi, grid.n_theta, endpoint=False)
    for r in RADIAL_SAMPLES[1:]:
        zr = r * np.exp(1j * full)
        zr = zr[keep(zr)]
        if zr.size:
            vr = absval(zr)
            cands.append((float(vr.min()), zr[np.argmin(vr)]))

    lam_S = sys.lam[S]
    near_one = float(abs(1.0 + np.sum((sys.b * sys.f)[S] / lam_S)))
    cands.append((near_one, 1 + 0j))
    raw, arg = min(cands, key=lambda c: c[0])
    block = np.diag(mu_S) + np.outer(apply_hold(sys, tau)[S], sys.f[S])
    guard = float(np.max(np.abs(np.linalg.eigvals(block))))
    res = LowerBoundResult(max(raw - slack, 0.0), complex(arg), slack, raw, guard, tau=tau,
                           near_one_margin=near_one, axis=theta, values=circ_vals)
    if guard >= 1:
        res.epsilon = 0.0
        raise NegativeMargin(f"1 - F R S has a zero in |z| >= 1 (spectral radius {guard:.6g})", res)
    if raw - slack <= 0:
        raise NegativeMargin(f"discrete margin {raw:.6g} - slack {slack:.6g} <= 0 near {arg:.6g}", res)
    return res


# ---- sampling period search --------------------------------------------------------

def find_tau_star(sys: RieszSystem, target_ratio: float, tau_grid, grid: ScanGrid | None = None,
                  cert: TailCertificate | None = None, epsilon_c: float | None = None):
    """Largest grid period whose whole prefix passes the discrete margin test.

    A period passes when ``eps_d(tau) >= target_ratio * eps_c`` and the
    sampling is non-pathological for the unstable modes.  Only the contiguous
    passing prefix counts, so lowering ``target_ratio`` never lowers ``tau*``.

    Returns
    -------
    tau_star : float
    table : list of dict
        One row per scanned period with ``tau``, ``epsilon_d``,
        ``nonpathological`` and ``passed``.

    Raises
    ------
    NoAdmissibleTau
        The smallest grid period fails.
    """
    from .stability import check_sampling_nonpathological

    if not 0 < target_ratio < 1:
        raise ValueError("target_ratio must lie in (0, 1)")
    taus = np.asarray(tau_grid, dtype=float)
    if taus.size == 0 or np.any(np.diff(taus) <= 0) or taus[0] <= 0 or taus[-1] >= 1:
        raise ValueError("tau_grid must be strictly ascending inside (0, 1)")
    if epsilon_c is None:
        epsilon_c = scan_epsilon_c(sys, grid, cert).epsilon
    need = target_ratio * epsilon_c
    table, tau_star, prefix = [], None, True
    for tau in taus:
        try:
            eps = scan_epsilon_d(sys, float(tau), grid, cert).epsilon
        except NegativeMargin as exc:
            eps = exc.result.epsilon if exc.result is not None else 0.0
        ok_samp = check_sampling_nonpathological(sys, float(tau))
        passed = bool(eps >= need and ok_samp)
        table.append({"tau": float(tau), "epsilon_d": float(eps),
                      "nonpathological": ok_samp, "passed": passed})
        if prefix and passed:
            tau_star = float(tau)
        else:
            prefix = False
    if tau_star is None:
        raise NoAdmissibleTau(
            f"smallest period {taus[0]:.6g} fails: eps_d={table[0]['epsilon_d']:.6g} "
            f"< {need:.6g}", table)
    return tau_star, table
