"""Unstable/stable splitting, rank-one pole placement, and example construction.

For a diagonal generator the spectral projection onto the unstable part is a
coordinate selection.  Placement uses the partial-fraction identity

    det(s - diag(lam) - b f^T) = prod(s - lam_n) * (1 - sum_n b_n f_n / (s - lam_n))

so matching residues against ``prod(s - mu_j)`` gives ``f`` in closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .assumptions import A4Check, A6_MARGIN, check_A4_example, check_A6
from .exceptions import AmbiguousSplit, NotStabilized, PlacementError
from .spectral import RieszSystem, SpectrumSpec

__all__ = [
    "SPLIT_TOL",
    "PLACEMENT_TOL",
    "Decomposition",
    "PlacementResult",
    "ExampleBuild",
    "DomainCheck",
    "decompose",
    "place_poles",
    "mirror_targets",
    "example_input",
    "stabilize",
    "build_example_system",
    "verify_b_in_domain",
]

SPLIT_TOL = 1e-12
PLACEMENT_TOL = 1e-9


@dataclass(frozen=True)
class Decomposition:
    plus_indices: np.ndarray
    minus_indices: np.ndarray


def decompose(sys: RieszSystem, tol: float = SPLIT_TOL) -> Decomposition:
    """Split mode positions by the sign of ``Re lam_n``."""
    re = sys.lam.real
    close = np.flatnonzero(np.abs(re) <= tol)
    if close.size:
        raise AmbiguousSplit(f"mode {int(close[0])} has |Re lam| = {abs(re[close[0]]):.3e}")
    return Decomposition(np.flatnonzero(re > 0), np.flatnonzero(re < 0))


@dataclass
class PlacementResult:
    f_plus: np.ndarray
    achieved_eigs: np.ndarray
    targets: np.ndarray
    max_error: float


def _distinct(v):
    d = np.abs(v[:, None] - v[None, :])
    np.fill_diagonal(d, np.inf)
    return v.size < 2 or d.min() > 0


def _secular_refine(s, lam, bf, steps=4):
    """Newton steps on ``1 - sum bf_n / (s - lam_n)``.

    Forming ``b f^T`` densely rounds every off-diagonal product, and the
    eigensolver amplifies that by the (often large) placement condition
    number.  The secular function depends only on ``b_n f_n`` and so tracks
    the eigenvalues of the exact rank-one operator.
    """
    s = s.copy()
    for _ in range(steps):
        d = 1.0 / (s[:, None] - lam[None, :])
        g = 1.0 - d @ bf
        dg = (d**2) @ bf
        ok = np.isfinite(g) & (dg != 0)
        s[ok] -= g[ok] / dg[ok]
    return s


def place_poles(lambdas_plus, b_plus, targets, tol: float = PLACEMENT_TOL) -> PlacementResult:
    """Feedback ``f`` with ``sigma(diag(lambdas_plus) + b_plus f^T) = targets``.

    ``achieved_eigs`` are dense eigenvalues refined on the secular equation.

    Raises
    ------
    PlacementError
        Unequal lengths, a zero input coefficient (uncontrollable mode),
        coincident eigenvalues or targets, a target shared with an open-loop
        eigenvalue or outside the open left half-plane, or a dense eigenvalue
        check that misses the targets by more than ``tol``.
    """
    lam = np.asarray(lambdas_plus, dtype=complex).ravel()
    b = np.asarray(b_plus, dtype=complex).ravel()
    mu = np.asarray(targets, dtype=complex).ravel()
    if not (lam.size == b.size == mu.size) or lam.size == 0:
        raise PlacementError("eigenvalues, inputs and targets need equal nonzero lengths")
    zero = np.flatnonzero(b == 0)
    if zero.size:
        raise PlacementError(f"mode {int(zero[0])} is uncontrollable (b = 0)")
    if not _distinct(lam):
        raise PlacementError("open-loop eigenvalues must be distinct")
    if not _distinct(mu):
        raise PlacementError("targets must be pairwise distinct")
    if np.any(mu.real >= 0):
        raise PlacementError("targets must lie in the open left half-plane")
    if np.min(np.abs(mu[:, None] - lam[None, :])) == 0:
        raise PlacementError("targets must differ from the open-loop eigenvalues")
    H = lam.size
    f = np.empty(H, complex)
    for n in range(H):
        others = np.delete(lam, n)
        f[n] = -np.prod(lam[n] - mu) / (b[n] * np.prod(lam[n] - others))
    eig = _secular_refine(np.linalg.eigvals(np.diag(lam) + np.outer(b, f)), lam, b * f)
    rows, cols = linear_sum_assignment(np.abs(eig[:, None] - mu[None, :]))
    achieved = np.empty(H, complex)
    achieved[cols] = eig[rows]
    err = float(np.max(np.abs(achieved - mu) / np.maximum(1.0, np.abs(mu))))
    if err > tol:
        raise PlacementError(f"placed eigenvalues miss targets by {err:.3e} > {tol:g}")
    return PlacementResult(f, achieved, mu, err)


def mirror_targets(lambdas_plus) -> np.ndarray:
    """Default targets ``-conj(lam)``: the unstable head reflected across the axis."""
    return -np.conj(np.asarray(lambdas_plus, dtype=complex))


def example_input(N: int, head_b, support: int, seed: int | None = None) -> np.ndarray:
    """Input coefficients: ``head_b`` on the head, then ``c_n / n^2`` up to ``support``.

    ``c_n = 1`` without a seed; with a seed ``|c_n|`` is uniform in ``[0.5, 1.5]``
    with a uniform random phase.
    """
    head_b = np.atleast_1d(np.asarray(head_b, dtype=complex))
    H = head_b.size
    if not H <= support <= N:
        raise ValueError("support must lie between the head size and N")
    b = np.zeros(N, complex)
    b[:H] = head_b
    n = np.arange(H + 1, support + 1)
    c = np.ones(n.size, complex)
    if seed is not None:
        rng = np.random.default_rng(seed)
        c = rng.uniform(0.5, 1.5, n.size) * np.exp(2j * np.pi * rng.uniform(size=n.size))
    b[H:support] = c / n**2
    return b


@dataclass
class ExampleBuild:
    """A stabilized system and the record of how it was assembled.

    ``placement`` is ``None`` when ``f1`` was given explicitly.
    """

    system: RieszSystem
    placement: PlacementResult | None
    f1: np.ndarray
    f2: np.ndarray
    f2_norm: float
    kappa: float | None
    kappa_ok: bool | None
    a6_value: complex
    nudge: dict | None
    a4: A4Check | None
    a4_note: str = ""
    notes: list = field(default_factory=list)


def stabilize(spec: SpectrumSpec, b, f2=None, targets=None, f1=None,
              kappa: float | None = None, alpha: float = 0.5, delta: float = math.pi / 4,
              margin: float = A6_MARGIN, riesz_Ma: float = 1.0,
              riesz_Mb: float = 1.0) -> ExampleBuild:
    """Assemble ``f = f1 + f2`` for ``spec`` and ``b`` and record the outcome.

    Without an explicit ``f1`` the unstable modes are placed at ``targets``
    (default :func:`mirror_targets`) and ``f1`` vanishes elsewhere.  ``f2`` is a
    user perturbation whose norm is recorded against ``kappa``.  If
    ``|F A^{-1} B + 1| <= margin`` the first mode past the head carrying input
    gets the smallest feedback shift that moves the value to ``2 * margin``; the
    closed-loop resolvent check runs afterwards.
    """
    N, H = spec.truncation, spec.head_size
    b = np.asarray(b, dtype=complex)
    if b.shape != (N,):
        raise ValueError(f"b must have length {N}")
    probe = RieszSystem(spec, b, np.zeros(N), riesz_Ma, riesz_Mb, alpha, delta)
    notes = []
    if f1 is None:
        try:
            plus = decompose(probe).plus_indices
        except AmbiguousSplit as exc:
            # leave axis modes to the assumption checks, which reject them
            plus = np.flatnonzero(probe.lam.real > SPLIT_TOL)
            notes.append(f"modes on the imaginary axis were not placed ({exc})")
        f1 = np.zeros(N, complex)
        if plus.size:
            mu = mirror_targets(probe.lam[plus]) if targets is None else targets
            placement = place_poles(probe.lam[plus], b[plus], mu)
            f1[plus] = placement.f_plus
        else:
            placement = PlacementResult(np.zeros(0, complex), np.zeros(0, complex),
                                        np.zeros(0, complex), 0.0)
    else:
        f1 = np.array(f1, dtype=complex)
        if f1.shape != (N,):
            raise ValueError(f"f1 must have length {N}")
        placement = None
    f2 = np.zeros(N, complex) if f2 is None else np.array(f2, dtype=complex)
    if f2.shape != (N,):
        raise ValueError(f"f2 must have length {N}")

    def make(f):
        return RieszSystem(spec, b, f, riesz_Ma, riesz_Mb, alpha, delta)

    sys = make(f1 + f2)
    value, ok = check_A6(sys, margin)
    nudge = None
    if not ok:
        tail = np.flatnonzero(b[H:]) + H
        if tail.size == 0:
            raise PlacementError("A6 nudge needs a mode past the head with nonzero input")
        j = int(tail[0])
        gap = value + 1.0
        unit = gap / abs(gap) if gap != 0 else 1.0
        shift = (2 * margin * unit - gap) * sys.lam[j] / b[j]
        f2 = f2.copy()
        f2[j] += shift
        sys = make(f1 + f2)
        new_value, ok = check_A6(sys, margin)
        nudge = {"mode": j, "shift": complex(shift), "before": complex(value),
                 "after": complex(new_value), "restored": bool(ok)}
        value = new_value
    try:
        a4, a4_note = check_A4_example(sys), ""
    except NotStabilized as exc:
        a4, a4_note = None, str(exc)
    f2_norm = float(np.linalg.norm(f2))
    kappa_ok = None if kappa is None else f2_norm < kappa
    return ExampleBuild(sys, placement, f1, f2, f2_norm, kappa, kappa_ok, value, nudge, a4, a4_note,
                        notes)


def build_example_system(unstable_eigs, N: int, b, f2=None, targets=None,
                         tail_start: int | None = None, tail_coefficient: float = 1.0,
                         kappa: float | None = None, alpha: float = 0.5,
                         delta: float = math.pi / 4, margin: float = A6_MARGIN,
                         riesz_Ma: float = 1.0, riesz_Mb: float = 1.0) -> ExampleBuild:
    """Unstable head plus reciprocal tail ``-c/n``, stabilized by :func:`stabilize`.

    ``f1`` places the head and vanishes on the tail.
    """
    head = np.atleast_1d(np.asarray(unstable_eigs, dtype=complex))
    H = head.size
    if np.any(head.real <= 0):
        raise PlacementError("head eigenvalues must have positive real part")
    if tail_start is not None and tail_start != H + 1:
        raise ValueError(f"the reciprocal tail starts at mode {H + 1} (got {tail_start})")
    spec = SpectrumSpec(tuple(head), N, tail_coefficient)
    return stabilize(spec, b, f2, targets, None, kappa, alpha, delta, margin, riesz_Ma, riesz_Mb)


@dataclass
class DomainCheck:
    """Finite-support domain sums for ``b``.

    ``stabilized`` is a heuristic: the second half of the tail support must
    carry under a quarter of the weighted sum; otherwise the weighted series
    is probably divergent in the infinite-support limit.
    """

    ok: bool
    a5_sum: float
    weighted_tail_sum: float
    second_half_share: float
    stabilized: bool


def verify_b_in_domain(sys: RieszSystem, share_limit: float = 0.25) -> DomainCheck:
    m = sys.support_b
    b, lam = sys.b[:m], sys.lam[:m]
    a5 = float(np.sum(np.abs(b / lam) ** 2))
    H = sys.spectrum.head_size
    n = np.arange(H + 1, m + 1)
    terms = n**2 * np.abs(b[H:]) ** 2
    total = float(terms.sum())
    half = terms[terms.size // 2:].sum() if terms.size else 0.0
    share = float(half / total) if total > 0 else 0.0
    ok = bool(np.isfinite(a5) and np.isfinite(total))
    return DomainCheck(ok, a5, total, share, share < share_limit)
