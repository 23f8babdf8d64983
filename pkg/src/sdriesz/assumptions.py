"""Verdicts for the standing assumptions and explicit tail-bound constants.

The assumptions are numbered as in the robustness theory for sampling:

A1  finitely many eigenvalues in ``{Re > -alpha} & {|arg| < pi/2 + delta}``
A2  no eigenvalue on the imaginary axis
A3  the origin is a cluster point of the spectrum
A4  ``A + BF`` is bounded-stable with ``sup_{|w|>1} ||R(iw, A+BF)|| < inf``
A5  ``sum |b_n / lam_n|^2 < inf``
A6  ``sum b_n f_n / lam_n != -1``

With a finite-support ``b`` the sums in A5/A6 are exact.  A4 is evaluated on a
frequency grid for diagonal-plus-rank-one systems only.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import NotStabilized
from .spectral import RieszSystem

__all__ = [
    "A2_TOL",
    "A6_MARGIN",
    "M1_SAFETY",
    "in_sector",
    "sector_mask",
    "SpectralChecks",
    "AssumptionReport",
    "TailCertificate",
    "A4Check",
    "check_A1_A2_A3",
    "check_A4_example",
    "check_A5",
    "check_A6",
    "check_assumptions",
    "tail_constants",
    "tail_start",
    "certify_tail",
    "tail_bound_continuous",
    "tail_bound_discrete",
    "closed_loop_eigenvalues",
    "closed_loop_resolvent_norm",
    "default_a4_grid",
]

A2_TOL = 1e-12
A6_MARGIN = 1e-6
M1_SAFETY = 1.05


def in_sector(lam: complex, alpha: float, delta: float) -> bool:
    """True iff ``Re lam > -alpha`` and ``|arg lam| < pi/2 + delta``."""
    lam = complex(lam)
    if lam == 0:
        raise ValueError("the argument of 0 is undefined")
    return lam.real > -alpha and abs(cmath.phase(lam)) < math.pi / 2 + delta


def sector_mask(lam, alpha, delta) -> np.ndarray:
    lam = np.asarray(lam, dtype=complex)
    if np.any(lam == 0):
        raise ValueError("the argument of 0 is undefined")
    return (lam.real > -alpha) & (np.abs(np.angle(lam)) < np.pi / 2 + delta)


def tail_start(sys: RieszSystem) -> int:
    """First mode position from which no eigenvalue lies in the sector.

    The reciprocal tail sits on the negative real axis (``arg = pi``), which is
    never inside ``|arg| < pi/2 + delta`` for ``delta <= pi/2``.
    """
    hits = np.flatnonzero(sector_mask(sys.lam, sys.alpha, sys.delta))
    return int(hits[-1]) + 1 if hits.size else 0


@dataclass
class SpectralChecks:
    a1_count: int
    a1_certified: bool
    a2_ok: bool
    a3_ok: bool
    a3_note: str = ""


def check_A1_A2_A3(sys: RieszSystem) -> SpectralChecks:
    spec = sys.spectrum
    head = np.asarray(spec.head, dtype=complex)
    a1_count = int(np.count_nonzero(sector_mask(head, sys.alpha, sys.delta))) if head.size else 0
    # materialized tail entries must agree with the analytic exclusion
    tail_in = sector_mask(sys.lam[spec.head_size:], sys.alpha, sys.delta)
    a1_certified = not np.any(tail_in)
    a2_ok = bool(np.all(np.abs(sys.lam.real) > A2_TOL))
    if spec.has_tail:
        a3_ok, note = True, "reciprocal tail lam_n = -c/n clusters at 0"
    else:
        a3_ok, note = False, "uncertifiable: a finite spectrum has no cluster point at 0"
    return SpectralChecks(a1_count, a1_certified, a2_ok, a3_ok, note)


def check_A5(sys: RieszSystem):
    """Return ``(sum |b_n/lam_n|^2, ok)``; exact under finite support."""
    m = sys.support_b
    value = float(np.sum(np.abs(sys.b[:m] / sys.lam[:m]) ** 2))
    return value, bool(np.isfinite(value))


def check_A6(sys: RieszSystem, margin: float = A6_MARGIN):
    """Return ``(F A^{-1} B, ok)`` with ``ok = |F A^{-1} B + 1| > margin``."""
    m = sys.support_b
    value = complex(np.sum(sys.b[:m] * sys.f[:m] / sys.lam[:m]))
    return value, abs(value + 1.0) > margin


@dataclass
class TailCertificate:
    """Constants bounding dropped series tails, plus the bounds for one cut.

    ``m1`` bounds ``|(1 - e^lam)/lam|`` on ``-1 <= Re lam <= 0``; it is the
    boundary-grid maximum times ``M1_SAFETY``.
    """

    alpha: float
    delta: float
    gamma1: float
    gamma2: float
    m1: float
    upsilon1: float
    upsilon2: float
    tail_start: int | None = None
    cut: int | None = None
    cont_tail_bound: float = 0.0
    disc_tail_bound: float = 0.0
    sums: dict = field(default_factory=dict)


def _g(lam):
    lam = np.asarray(lam, dtype=complex)
    out = np.full(lam.shape, -1.0 + 0j)
    nz = lam != 0
    out[nz] = -np.expm1(lam[nz]) / lam[nz]
    return out


def tail_constants(alpha: float, delta: float, m1_grid: int = 256) -> TailCertificate:
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    if not (0 < delta <= math.pi / 2):
        raise ValueError("delta must lie in (0, pi/2]")
    if m1_grid < 64:
        raise ValueError("m1_grid must be at least 64")
    # |g| is holomorphic: its max over the rectangle is attained on the boundary
    re = np.linspace(-1.0, 0.0, m1_grid)
    im = np.linspace(-math.pi, math.pi, m1_grid)
    edges = np.concatenate([
        -1.0 + 1j * im, 0.0 + 1j * im, re + 1j * math.pi, re - 1j * math.pi,
    ])
    m1 = M1_SAFETY * float(np.max(np.abs(_g(edges))))
    e = math.e
    c = 1.0 - math.exp(-1.0)
    gamma1 = 2.0 / alpha
    gamma2 = 1.0 / math.sin(delta)
    upsilon1 = max(e * m1 / alpha, 2.0 / (c * alpha))
    upsilon2 = max(e * m1 * (1.0 + 1.0 / math.tan(delta)), 2.0 / c)
    return TailCertificate(alpha, delta, gamma1, gamma2, m1, upsilon1, upsilon2)


def _tail_sums(sys, N):
    if not 0 <= N <= sys.N:
        raise ValueError(f"cut index must lie in [0, {sys.N}]")
    start = tail_start(sys)
    b = sys.b[N:]
    if N < start and np.any(sys.b[N:start] != 0):
        raise ValueError(
            f"cut {N} drops in-sector modes with nonzero input (tail starts at {start})"
        )
    lam = sys.lam[N:]
    return float(np.sum(np.abs(b) ** 2)), float(np.sum(np.abs(b / lam) ** 2))


def tail_bound_continuous(sys: RieszSystem, cert: TailCertificate, N: int) -> float:
    """Uniform bound on ``|| sum_{n>=N} b_n/(lam - lam_n) phi_n ||`` over ``Re lam >= 0``.

    ``N`` is the position of the first dropped mode (modes ``0..N-1`` are kept).
    """
    sb, sbl = _tail_sums(sys, N)
    return math.sqrt(sys.riesz_Mb * (cert.gamma1**2 * sb + cert.gamma2**2 * sbl))


def tail_bound_discrete(sys: RieszSystem, cert: TailCertificate, N: int, tau: float) -> float:
    """Bound on the dropped tail of ``(z - T(tau))^{-1} S(tau)`` for ``|z| >= 1, z != 1``.

    Uniform in ``tau`` over ``(0, 1)``; ``tau`` is only validated.
    """
    if not 0 < tau < 1:
        raise ValueError("the discrete tail bound holds for tau in (0, 1)")
    sb, sbl = _tail_sums(sys, N)
    return math.sqrt(sys.riesz_Mb * (cert.upsilon1**2 * sb + cert.upsilon2**2 * sbl))


def certify_tail(sys: RieszSystem, N: int | None = None, m1_grid: int = 256) -> TailCertificate:
    """Constants for ``sys`` plus bounds for dropping modes ``N..``.

    The default cut is the truncation itself; with finite-support ``b`` both
    bounds are then exactly zero.
    """
    cert = tail_constants(sys.alpha, sys.delta, m1_grid)
    cert.tail_start = tail_start(sys)
    cut = sys.N if N is None else N
    cert.cut = cut
    sb, sbl = _tail_sums(sys, cut)
    cert.sums = {"b_sq": sb, "b_over_lam_sq": sbl}
    cert.cont_tail_bound = tail_bound_continuous(sys, cert, cut)
    cert.disc_tail_bound = tail_bound_discrete(sys, cert, cut, 0.5)
    return cert


# ---- A4 ---------------------------------------------------------------------

def _closed_loop_blocks(sys):
    C = np.union1d(np.flatnonzero(sys.b), np.flatnonzero(sys.f))
    rest = np.setdiff1d(np.arange(sys.N), C)
    return C, rest


def closed_loop_eigenvalues(sys: RieszSystem) -> np.ndarray:
    """Eigenvalues of the truncated ``A + BF``.

    Modes outside ``supp(b) | supp(f)`` decouple and keep ``lam_n``; only the
    coupled block is handed to a dense eigensolver.
    """
    C, rest = _closed_loop_blocks(sys)
    M = np.diag(sys.lam[C]) + np.outer(sys.b[C], sys.f[C])
    return np.concatenate([np.linalg.eigvals(M), sys.lam[rest]])


def closed_loop_resolvent_norm(sys: RieszSystem, omega) -> np.ndarray:
    """``||R(i w, A + BF)||`` on the truncated system plus the dropped tail.

    The resolvent is block diagonal under ``coupled (+) decoupled`` modes: a
    dense block on ``supp(b) | supp(f)`` and a diagonal remainder whose norm is
    ``max 1/|iw - lam_n|``.  Modes beyond the truncation (reciprocal tail,
    ``b = f = 0`` there) contribute ``1/sqrt(w^2 + (c/(N+1))^2)``.
    """
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    C, rest = _closed_loop_blocks(sys)
    M = np.diag(sys.lam[C]) + np.outer(sys.b[C], sys.f[C])
    eye = np.eye(C.size)
    out = np.empty(omega.size)
    for k, w in enumerate(omega):
        lam = 1j * w
        dense = 0.0
        if C.size:
            dense = np.linalg.norm(np.linalg.inv(lam * eye - M), 2)
        diag = np.max(1.0 / np.abs(lam - sys.lam[rest])) if rest.size else 0.0
        out[k] = max(dense, diag)
    if sys.spectrum.has_tail:
        c_next = sys.spectrum.tail_coefficient / (sys.N + 1)
        out = np.maximum(out, 1.0 / np.sqrt(omega**2 + c_next**2))
    return out


def default_a4_grid(omega_max: float = 1e3, n: int = 512) -> np.ndarray:
    w = np.geomspace(1.0 + 1e-9, omega_max, n // 2)
    return np.concatenate([-w[::-1], w])


@dataclass
class A4Check:
    sup_estimate: float
    ok: bool
    omega: np.ndarray
    norms: np.ndarray
    max_closed_loop_real: float


def check_A4_example(sys: RieszSystem, omega_grid=None) -> A4Check:
    """Grid estimate of ``sup_{|w|>1} ||R(iw, A+BF)||`` for diagonal-plus-rank-one systems.

    Raises
    ------
    NotStabilized
        If the truncated closed loop has an eigenvalue with ``Re >= 0``.
    """
    eig = closed_loop_eigenvalues(sys)
    worst = float(np.max(eig.real))
    if worst >= 0:
        raise NotStabilized(f"closed-loop eigenvalue with real part {worst:.3e} >= 0")
    omega = default_a4_grid() if omega_grid is None else np.asarray(omega_grid, dtype=float)
    norms = closed_loop_resolvent_norm(sys, omega)
    sup = float(np.max(norms)) if norms.size else 0.0
    # beyond the truncation the diagonal tail block has norm <= 1/|w| <= 1 for |w| > 1
    ok = bool(np.all(np.isfinite(norms)))
    return A4Check(sup, ok, omega, norms, worst)


@dataclass
class AssumptionReport:
    a1_count: int
    a1_certified: bool
    a2_ok: bool
    a3_ok: bool
    a3_note: str
    a4_ok: bool
    a4_sup_estimate: float | None
    a4_note: str
    a5_value: float
    a5_ok: bool
    a6_value: complex
    a6_ok: bool
    a6_margin: float

    @property
    def all_ok(self) -> bool:
        return (self.a1_certified and self.a2_ok and self.a3_ok and self.a4_ok
                and self.a5_ok and self.a6_ok)


def check_assumptions(sys: RieszSystem, omega_grid=None, margin: float = A6_MARGIN) -> AssumptionReport:
    spectral = check_A1_A2_A3(sys)
    a5, a5_ok = check_A5(sys)
    a6, a6_ok = check_A6(sys, margin)
    try:
        a4 = check_A4_example(sys, omega_grid)
        a4_ok, a4_sup = a4.ok, a4.sup_estimate
        a4_note = f"max closed-loop Re = {a4.max_closed_loop_real:.6g}"
    except NotStabilized as exc:
        a4_ok, a4_sup, a4_note = False, None, str(exc)
    return AssumptionReport(
        spectral.a1_count, spectral.a1_certified, spectral.a2_ok, spectral.a3_ok,
        spectral.a3_note, a4_ok, a4_sup, a4_note, a5, a5_ok, a6, a6_ok, margin,
    )
