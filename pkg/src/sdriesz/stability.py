"""Strong-stability diagnostics for the sampled closed loop ``Delta(tau)``.

The discrete certificate has two parts: no spectrum of ``Delta(tau)`` on the
unit circle except the tail cluster point 1 (which must not be an eigenvalue),
and power boundedness.  The latter is probed through the resolvent integral

    (r - 1) * int_0^{2 pi} ||R(r e^{i theta}, Delta) x||^2 d theta

on a descending sequence of radii; boundedness as ``r -> 1`` for all ``x`` (and
the adjoint counterpart) is equivalent to power boundedness.  Norms are taken
in the orthonormal realization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .assumptions import A6_MARGIN, TailCertificate, check_A6
from .exceptions import NegativeMargin, SmwSingular, SpectrumTooClose
from .spectral import (
    SEPARATION_TOL,
    SMW_TOL,
    DeltaOperator,
    RieszSystem,
    _separation,
    _smw_many,
    apply_delta,
    apply_hold,
)
from .transfer import ScanGrid, scan_epsilon_d

__all__ = [
    "UNIT_TOL",
    "PowerBoundProbe",
    "DecayRecord",
    "Trajectory",
    "UnitCircleVerdict",
    "unit_circle_test",
    "power_bound_integral",
    "quadrature_points",
    "decay_test",
    "sampled_trajectory",
    "check_sampling_nonpathological",
]

UNIT_TOL = 1e-9
_CHUNK = 4096


@dataclass
class UnitCircleVerdict:
    """Outcome of the unit-circle spectrum test with the margins behind it."""

    ok: bool
    epsilon_d: float
    near_one_margin: float
    min_separation: float
    unit_modulus_modes: list = field(default_factory=list)
    reason: str = ""


def unit_circle_test(sys: RieszSystem, tau: float, grid: ScanGrid | None = None,
                     cert: TailCertificate | None = None,
                     margin: float = A6_MARGIN) -> UnitCircleVerdict:
    """Certify ``sigma(Delta(tau)) & T = {1}`` with 1 not an eigenvalue, on the grid.

    Fails when some ``exp(tau lam_n)`` lies on the unit circle, when a grid
    point comes within ``SEPARATION_TOL`` of ``sigma(T(tau))``, when the
    discrete margin scan is not positive, or when ``|1 + F A^{-1} B| <= margin``.
    """
    grid = grid or ScanGrid()
    mu = np.exp(tau * sys.lam)
    unit = np.flatnonzero(np.abs(np.abs(mu) - 1.0) <= UNIT_TOL).tolist()
    z = np.exp(1j * grid.theta_points())
    sep = float(np.min(np.abs(z[:, None] - mu[None, :])))
    a6, a6_ok = check_A6(sys, margin)
    near_one = abs(a6 + 1.0)
    if unit:
        return UnitCircleVerdict(False, 0.0, near_one, sep, unit,
                                 f"exp(tau*lam) on the unit circle for modes {unit}")
    if sep <= SEPARATION_TOL:
        return UnitCircleVerdict(False, 0.0, near_one, sep, unit,
                                 "grid point within tolerance of sigma(T(tau))")
    try:
        eps = scan_epsilon_d(sys, tau, grid, cert).epsilon
    except NegativeMargin as exc:
        eps = exc.result.epsilon if exc.result is not None else 0.0
        return UnitCircleVerdict(False, eps, near_one, sep, unit, f"discrete scan: {exc}")
    if not a6_ok:
        return UnitCircleVerdict(False, eps, near_one, sep, unit,
                                 f"|1 + F A^-1 B| = {near_one:.3e} <= {margin:g}: 1 may be an eigenvalue")
    return UnitCircleVerdict(True, eps, near_one, sep, unit, "")


# ---- power boundedness ---------------------------------------------------------------

@dataclass
class PowerBoundProbe:
    """Radii (descending, all above 1), base quadrature size, and test vectors."""

    r_values: tuple = (1.1, 1.01, 1.001)
    n_theta: int = 2048
    test_vectors: list = field(default_factory=list)

    def __post_init__(self):
        r = np.asarray(self.r_values, dtype=float)
        if r.size == 0 or np.any(r <= 1) or np.any(np.diff(r) >= 0):
            raise ValueError("r_values must be strictly descending and above 1")
        if self.n_theta < 256:
            raise ValueError("n_theta must be at least 256")


def quadrature_points(r: float, n_theta: int) -> int:
    """Trapezoid size for radius ``r``: at least ``32/(r-1)``, rounded up to a power of 2.

    Poles of the integrand sit at distance about ``r - 1`` from the circle; the
    periodic trapezoid error decays like ``exp(-n (r - 1))``.
    """
    need = max(n_theta, 32.0 / (r - 1.0))
    return 1 << math.ceil(math.log2(need))


def _ring_integral(mu, s, f, has_tail, r, n, x):
    theta = 2 * math.pi * np.arange(n) / n
    total = 0.0
    for lo in range(0, n, _CHUNK):
        z = r * np.exp(1j * theta[lo:lo + _CHUNK])
        _separation(mu, has_tail, z, SEPARATION_TOL)
        rows = _smw_many(mu, s, f, z, x, SMW_TOL)
        total += float(np.sum(np.abs(rows) ** 2))
    return total * 2 * math.pi / n


def power_bound_integral(op: DeltaOperator, probe: PowerBoundProbe, x, adjoint: bool = False):
    """``(r-1) * int ||R(r e^{i theta}, Delta) x||^2`` for each probe radius.

    With ``adjoint=True`` the adjoint resolvent ``R(z, Delta)^*`` is used.  A
    radius where a sample point violates the resolvent preconditions yields
    ``inf`` (test failure at that radius).
    """
    sys = op.system
    x = np.asarray(x, dtype=complex)
    if adjoint:
        # R(z,Delta)^* = R(conj z, Delta^*); conj z sweeps the same circle
        mu, s, f = np.conj(op.mu), np.conj(sys.f), np.conj(op.s)
    else:
        mu, s, f = op.mu, op.s, sys.f
    out = np.empty(len(probe.r_values))
    for k, r in enumerate(probe.r_values):
        n = quadrature_points(r, probe.n_theta)
        try:
            out[k] = (r - 1.0) * _ring_integral(mu, s, f, sys.spectrum.has_tail, r, n, x)
        except (SpectrumTooClose, SmwSingular):
            out[k] = math.inf
    return out


# ---- decay and trajectories ----------------------------------------------------------

@dataclass
class DecayRecord:
    norms: np.ndarray
    sup_ratio: float
    k_hit: int | None
    threshold: float

    @property
    def eventual_decay(self) -> bool:
        """``norms[k_max] < norms[k_max // 2]``."""
        k = self.norms.size - 1
        return bool(self.norms[k] < self.norms[k // 2])


def _record(norms, threshold):
    n0 = norms[0]
    if n0 == 0:
        return DecayRecord(norms, 1.0, 0, threshold)
    hit = np.flatnonzero(norms < threshold * n0)
    return DecayRecord(norms, float(norms.max() / n0), int(hit[0]) if hit.size else None, threshold)


def decay_test(op: DeltaOperator, x0, k_max: int, threshold: float = 1e-3):
    """Iterate ``Delta(tau)`` and record ``||Delta^k x0||`` for ``k = 0..k_max``.

    ``x0`` of shape ``(N, m)`` runs ``m`` states at once and returns a list of
    records.
    """
    if k_max < 1:
        raise ValueError("k_max must be at least 1")
    if not 0 < threshold < 1:
        raise ValueError("threshold must lie in (0, 1)")
    x = np.array(x0, dtype=complex)
    batch = x.ndim == 2
    norms = np.empty((k_max + 1,) + x.shape[1:])
    norms[0] = np.linalg.norm(x, axis=0)
    for k in range(1, k_max + 1):
        x = apply_delta(op, x)
        norms[k] = np.linalg.norm(x, axis=0)
    if batch:
        return [_record(norms[:, j], threshold) for j in range(x.shape[1])]
    return _record(norms, threshold)


@dataclass
class Trajectory:
    """Norms on the intra-sample grid and the states at sampling instants."""

    t: np.ndarray
    norm: np.ndarray
    samples: np.ndarray


def sampled_trajectory(op: DeltaOperator, x0, t_samples_per_period: int, k_max: int) -> Trajectory:
    """Zero-order-hold trajectory ``x(k tau + t) = T(t) x_k + S(t) F x_k``.

    Each period contributes ``m = t_samples_per_period`` points ``t = j tau / m``,
    ``j = 0..m-1``; the final instant ``k_max tau`` closes the series.  States at
    sampling instants are produced by ``apply_delta`` so they coincide with
    ``apply_delta_power`` bit for bit.
    """
    m = int(t_samples_per_period)
    if m < 1:
        raise ValueError("t_samples_per_period must be at least 1")
    if k_max < 0:
        raise ValueError("k_max must be nonnegative")
    sys, tau = op.system, op.tau
    frac = tau * np.arange(1, m) / m
    expo = np.exp(np.outer(sys.lam, frac))
    holds = np.stack([apply_hold(sys, t) for t in frac], axis=1) if m > 1 else None
    x = np.array(x0, dtype=complex)
    samples = [x]
    t, norms = [], []
    for k in range(k_max):
        t.append(k * tau)
        norms.append(np.linalg.norm(x))
        if m > 1:
            inner = expo * x[:, None] + holds * (sys.f @ x)
            t.extend(k * tau + frac)
            norms.extend(np.linalg.norm(inner, axis=0))
        x = apply_delta(op, x)
        samples.append(x)
    t.append(k_max * tau)
    norms.append(np.linalg.norm(x))
    return Trajectory(np.asarray(t), np.asarray(norms), np.asarray(samples))


def check_sampling_nonpathological(sys: RieszSystem, tau: float, tol: float = 1e-9) -> bool:
    """False iff two unstable modes satisfy ``tau (lam_n - lam_m) in 2 pi i Z``."""
    plus = sys.lam[sys.lam.real > 0]
    for i in range(plus.size):
        for j in range(i + 1, plus.size):
            d = plus[i] - plus[j]
            if abs(d.real) > tol:
                continue
            phase = math.remainder(tau * d.imag, 2 * math.pi)
            if abs(phase) <= tol:
                return False
    return True
