"""Truncated modal representation of a Riesz-spectral system.

A state is stored as its coefficient vector ``a`` with ``a[i] = <x, psi_{i+1}>``
(position ``i`` holds mode ``n = i + 1``).  Every operator in the sampled-data
loop is diagonal or diagonal-plus-rank-one in these coordinates, so all maps
below act coefficient-wise:

* semigroup      ``T(t) a = exp(t*lam) * a``
* hold           ``S(t) = (exp(t*lam) - 1) / lam * b``
* feedback       ``F a = sum(a * f)``
* sampled loop   ``Delta(tau) a = T(tau) a + S(tau) (F a)``

Operator actions use the orthonormal realization; the Riesz constants only
enter through :func:`norm_sq_bounds`.  Functions accept a single coefficient
vector of shape ``(N,)`` or a batch stacked as columns, shape ``(N, m)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .exceptions import SmwSingular, SpectrumTooClose

__all__ = [
    "SpectrumSpec",
    "RieszSystem",
    "DeltaOperator",
    "SEPARATION_TOL",
    "SMW_TOL",
    "exprel",
    "norm_sq_bounds",
    "apply_semigroup",
    "apply_hold",
    "apply_F",
    "apply_delta",
    "apply_delta_power",
    "resolvent_T",
    "resolvent_delta",
    "resolvent_delta_adjoint",
    "dense_delta",
]

SEPARATION_TOL = 1e-12
SMW_TOL = 1e-12
TAYLOR_RADIUS = 1e-4

# 1, 1/2!, ..., 1/6! : (e^z - 1)/z = sum_k z^k/(k+1)!
_TAYLOR = np.array([1.0, 1 / 2, 1 / 6, 1 / 24, 1 / 120, 1 / 720])


def exprel(z):
    """Evaluate ``(exp(z) - 1) / z`` with value 1 at ``z = 0``.

    A six-term Taylor polynomial is used for ``|z| < 1e-4``.  Elsewhere the
    numerator is assembled from ``expm1`` and ``sin`` of the real and
    imaginary parts so that no catastrophic cancellation occurs.
    """
    z = np.asarray(z, dtype=complex)
    out = np.empty_like(z)
    small = np.abs(z) < TAYLOR_RADIUS
    zs = z[small]
    acc = np.full_like(zs, _TAYLOR[-1])
    for c in _TAYLOR[-2::-1]:
        acc = acc * zs + c
    out[small] = acc
    zl = z[~small]
    x, y = zl.real, zl.imag
    num = (np.expm1(x) * np.cos(y) - 2.0 * np.sin(0.5 * y) ** 2) + 1j * np.exp(x) * np.sin(y)
    out[~small] = num / zl
    return out if out.ndim else out[()]


@dataclass(frozen=True, eq=False)
class SpectrumSpec:
    """Eigenvalue sequence: an explicit head plus an optional reciprocal tail.

    Parameters
    ----------
    head : sequence of complex
        Eigenvalues of modes ``1..H`` in user order.
    truncation : int
        Number of materialized modes ``N >= H``.
    tail_coefficient : float, optional
        If given, modes ``n > H`` have ``lam_n = -c/n`` (``c > 0``), a sequence
        clustering at the origin from the left.
    """

    head: tuple
    truncation: int
    tail_coefficient: float | None = None

    def __post_init__(self):
        head = tuple(complex(v) for v in self.head)
        object.__setattr__(self, "head", head)
        if int(self.truncation) != self.truncation or self.truncation < max(len(head), 1):
            raise ValueError(
                f"truncation must be an integer >= number of head eigenvalues ({len(head)})"
            )
        object.__setattr__(self, "truncation", int(self.truncation))
        if self.tail_coefficient is None:
            if self.truncation != len(head):
                raise ValueError("without a tail law the truncation must equal the head length")
        elif not self.tail_coefficient > 0:
            raise ValueError("reciprocal tail coefficient must be positive")
        lam = self.eigenvalues
        if not np.all(np.isfinite(lam)):
            raise ValueError("eigenvalues must be finite")
        if np.unique(lam).size != lam.size:
            raise ValueError("eigenvalues must be pairwise distinct (simple spectrum)")

    @property
    def has_tail(self) -> bool:
        return self.tail_coefficient is not None

    @property
    def head_size(self) -> int:
        return len(self.head)

    @cached_property
    def eigenvalues(self) -> np.ndarray:
        lam = np.empty(self.truncation, dtype=complex)
        H = len(self.head)
        lam[:H] = self.head
        if self.has_tail:
            n = np.arange(H + 1, self.truncation + 1)
            lam[H:] = -self.tail_coefficient / n
        lam.setflags(write=False)
        return lam


def _frozen(v, n, name):
    a = np.array(v, dtype=complex).reshape(-1)
    if a.shape != (n,):
        raise ValueError(f"{name} must have length {n}, got {a.shape[0]}")
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class RieszSystem:
    """Diagonal generator with rank-one input ``b`` and feedback ``f``.

    ``b[i] = <b, psi_{i+1}>`` and ``f[i] = <phi_{i+1}, f>``.  ``b`` must vanish
    beyond ``support_b``; this makes every series involving ``b`` a finite sum.
    ``alpha`` and ``delta`` are the sector parameters: all but finitely many
    eigenvalues lie outside ``{Re lam > -alpha, |arg lam| < pi/2 + delta}``.
    """

    spectrum: SpectrumSpec
    b: np.ndarray
    f: np.ndarray
    riesz_Ma: float = 1.0
    riesz_Mb: float = 1.0
    alpha: float = 0.5
    delta: float = np.pi / 4
    support_b: int | None = None

    def __post_init__(self):
        N = self.spectrum.truncation
        b = _frozen(self.b, N, "b")
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "f", _frozen(self.f, N, "f"))
        if not (0 < self.riesz_Ma <= self.riesz_Mb):
            raise ValueError("Riesz constants must satisfy 0 < Ma <= Mb")
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        if not (0 < self.delta <= np.pi / 2):
            raise ValueError("delta must lie in (0, pi/2]")
        nz = np.flatnonzero(b)
        last = int(nz[-1]) + 1 if nz.size else 0
        if self.support_b is None:
            object.__setattr__(self, "support_b", last)
        elif not (last <= self.support_b <= N):
            raise ValueError(f"b has nonzero entries beyond support_b={self.support_b}")

    @property
    def N(self) -> int:
        return self.spectrum.truncation

    @property
    def lam(self) -> np.ndarray:
        return self.spectrum.eigenvalues

    @property
    def coupled(self) -> np.ndarray:
        """Indices with ``b_n f_n != 0``; only these modes enter transfer functions."""
        return np.flatnonzero(self.b * self.f)

    def with_feedback(self, f) -> RieszSystem:
        return RieszSystem(
            self.spectrum, self.b, f, self.riesz_Ma, self.riesz_Mb,
            self.alpha, self.delta, self.support_b,
        )


def _check_len(x, sys):
    x = np.asarray(x)
    if x.shape[0] != sys.N:
        raise ValueError(f"coefficient vector has length {x.shape[0]}, system has N={sys.N}")
    return x


def _along(v, x):
    # broadcast a per-mode vector against (N,) or (N, m) inputs
    return v if x.ndim == 1 else v[:, None]


def norm_sq_bounds(x, sys: RieszSystem):
    """Bracket ``||x||^2`` by ``(Ma * sum|a|^2, Mb * sum|a|^2)``."""
    x = _check_len(x, sys)
    s = float(np.sum(np.abs(x) ** 2))
    return sys.riesz_Ma * s, sys.riesz_Mb * s


def apply_semigroup(sys: RieszSystem, t: float, x):
    if t < 0:
        raise ValueError("semigroup time must be nonnegative")
    x = _check_len(x, sys)
    return _along(np.exp(t * sys.lam), x) * x


def apply_hold(sys: RieszSystem, t: float) -> np.ndarray:
    """Coefficients of ``S(t) 1 = int_0^t T(s) b ds``."""
    if t < 0:
        raise ValueError("hold time must be nonnegative")
    return t * exprel(t * sys.lam) * sys.b


def apply_F(sys: RieszSystem, x):
    x = _check_len(x, sys)
    return sys.f @ x


@dataclass(frozen=True, eq=False)
class DeltaOperator:
    """One sampling step ``Delta(tau) = T(tau) + S(tau) F``."""

    system: RieszSystem
    tau: float

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError("sampling period must be positive")

    @cached_property
    def mu(self) -> np.ndarray:
        """Eigenvalues ``exp(tau * lam_n)`` of ``T(tau)``."""
        return np.exp(self.tau * self.system.lam)

    @cached_property
    def s(self) -> np.ndarray:
        return apply_hold(self.system, self.tau)


def apply_delta(op: DeltaOperator, x):
    sys = op.system
    x = _check_len(x, sys)
    u = sys.f @ x
    if x.ndim == 1:
        return op.mu * x + op.s * u
    return op.mu[:, None] * x + op.s[:, None] * u[None, :]


def apply_delta_power(op: DeltaOperator, k: int, x):
    if k < 0:
        raise ValueError("power must be nonnegative")
    x = _check_len(x, op.system)
    y = np.array(x, dtype=complex)
    for _ in range(k):
        y = apply_delta(op, y)
    return y


def dense_delta(op: DeltaOperator, idx=None) -> np.ndarray:
    """Dense matrix of ``Delta(tau)``, optionally restricted to modes ``idx``."""
    mu, s, f = op.mu, op.s, op.system.f
    if idx is not None:
        mu, s, f = mu[idx], s[idx], f[idx]
    return np.diag(mu) + np.outer(s, f)


def _separation(op_mu, has_tail, zs, tol):
    """Raise SpectrumTooClose if any z is within ``tol`` of sigma(T(tau))."""
    zs = np.atleast_1d(np.asarray(zs, dtype=complex))
    d = np.abs(zs[:, None] - op_mu[None, :])
    j = np.argmin(d, axis=1)
    dmin = d[np.arange(zs.size), j]
    bad = np.flatnonzero(dmin <= tol)
    if bad.size:
        k = bad[0]
        raise SpectrumTooClose(int(j[k]), dmin[k], complex(zs[k]))
    if has_tail:
        d1 = np.abs(zs - 1.0)
        bad = np.flatnonzero(d1 <= tol)
        if bad.size:
            raise SpectrumTooClose(None, d1[bad[0]], complex(zs[bad[0]]))


def resolvent_T(sys: RieszSystem, tau: float, z: complex, x, tol: float = SEPARATION_TOL):
    """Apply ``(z - T(tau))^{-1}`` coefficient-wise."""
    x = _check_len(x, sys)
    mu = np.exp(tau * sys.lam)
    _separation(mu, sys.spectrum.has_tail, z, tol)
    return x / _along(z - mu, x)


def _smw_many(mu, s, f, zs, x, tol):
    """Rows of ``R(z_j, Delta) x`` for a batch of points ``zs``.

    Shapes: ``zs`` (m,), ``x`` (N,) -> result (m, N).
    """
    inv = 1.0 / (zs[:, None] - mu[None, :])
    y = inv * x[None, :]
    w = inv * s[None, :]
    den = 1.0 - w @ f
    small = np.abs(den) <= tol
    if np.any(small):
        k = np.flatnonzero(small)[0]
        raise SmwSingular(den[k], complex(zs[k]))
    return y + w * ((y @ f) / den)[:, None]


def resolvent_delta(op: DeltaOperator, z: complex, x, tol: float = SEPARATION_TOL,
                    smw_tol: float = SMW_TOL):
    """Apply ``(z - Delta(tau))^{-1}`` via the Sherman-Morrison formula.

    ``R(z,Delta) = R(z,T) + R(z,T) S (1 - F R(z,T) S)^{-1} F R(z,T)``.

    Raises
    ------
    SpectrumTooClose
        ``z`` is within ``tol`` of ``exp(tau*lam_n)`` (or of 1 for tail systems).
    SmwSingular
        ``|1 - F R(z,T) S| <= smw_tol``.
    """
    sys = op.system
    x = _check_len(x, sys)
    _separation(op.mu, sys.spectrum.has_tail, z, tol)
    zs = np.array([z], dtype=complex)
    if x.ndim == 1:
        return _smw_many(op.mu, op.s, sys.f, zs, x.astype(complex), smw_tol)[0]
    return np.stack(
        [_smw_many(op.mu, op.s, sys.f, zs, col.astype(complex), smw_tol)[0] for col in x.T],
        axis=1,
    )


def resolvent_delta_adjoint(op: DeltaOperator, z: complex, y, tol: float = SEPARATION_TOL,
                            smw_tol: float = SMW_TOL):
    """Apply ``R(z, Delta)^* = R(conj z, Delta^*)``.

    In coefficients ``Delta^* = diag(conj mu) + conj(f) conj(s)^T``, which is
    again diagonal-plus-rank-one with the roles of ``s`` and ``f`` swapped.
    """
    sys = op.system
    y = _check_len(y, sys)
    zc = np.conj(z)
    mu_c = np.conj(op.mu)
    _separation(mu_c, sys.spectrum.has_tail, zc, tol)
    zs = np.array([zc], dtype=complex)
    cols = [y] if y.ndim == 1 else list(y.T)
    out = [_smw_many(mu_c, np.conj(sys.f), np.conj(op.s), zs, c.astype(complex), smw_tol)[0]
           for c in cols]
    return out[0] if y.ndim == 1 else np.stack(out, axis=1)
