"""Discretized Zakharov-Shabat scattering producing a(lambda), b(lambda) jets.

The transfer kernel is the exact exponential of the constant-q cell system
(trapezoidal scheme): each grid cell [t_n, t_{n+1}] carries the average of
its endpoint samples, applied at the cell midpoint.  lambda-derivatives of
the kernel are available in closed form, so jets of any order propagate
through the same recursion.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np

from .envelope import NORMALIZED, SampledEnvelope
from .series import quotient_derivative

MAX_JET_ORDER = 7
OVERFLOW_LIMIT = 1e150
_CHECK_EVERY = 32


class ScatteringOverflowError(FloatingPointError):
    """The scattering recursion left the representable range."""


@dataclass(frozen=True)
class KernelConfig:
    """Discretization scheme; only the trapezoidal kernel is implemented."""

    scheme: str = "trapezoidal"
    epsilon: float = 1.0

    def __post_init__(self):
        if self.scheme != "trapezoidal":
            raise ValueError(f"unsupported kernel scheme {self.scheme!r}")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")


@dataclass(frozen=True)
class ScatteringJet:
    """a(lambda), b(lambda) and their lambda-derivatives at one lambda."""

    lam: complex
    a_derivs: np.ndarray
    b_derivs: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.a_derivs, dtype=complex)
        b = np.asarray(self.b_derivs, dtype=complex)
        if a.shape != b.shape or a.ndim != 1 or a.size < 1:
            raise ValueError("a_derivs and b_derivs must be 1-D arrays of equal length")
        object.__setattr__(self, "a_derivs", a)
        object.__setattr__(self, "b_derivs", b)

    @property
    def order(self) -> int:
        return self.a_derivs.size - 1


def kernel(q_n: complex, t_n: float, lam: complex, epsilon: float, r: int = 0) -> np.ndarray:
    """r-th lambda-derivative of the one-cell transfer matrix.

    r = 0 is the unit-determinant trapezoidal kernel; for r >= 1 the diagonal
    vanishes and the off-diagonal entries pick up factors (+-2j t_n)^r.
    """
    if r < 0:
        raise ValueError("derivative order must be nonnegative")
    c = np.cos(abs(q_n) * epsilon)
    s = np.sin(abs(q_n) * epsilon)
    phase = np.exp(1j * (np.angle(q_n) + 2.0 * lam * t_n))
    a12 = s * phase * (2j * t_n) ** r
    a21 = -s / phase * (-2j * t_n) ** r
    diag = c if r == 0 else 0.0
    return np.array([[diag, a12], [a21, diag]], dtype=complex)


def _as_batch(q: np.ndarray, lams: np.ndarray) -> tuple[np.ndarray, np.ndarray, bool]:
    q = np.asarray(q, dtype=complex)
    lams = np.asarray(lams, dtype=complex)
    squeeze = q.ndim == 1
    if q.ndim == 1:
        q = q[None, :]
    if lams.ndim == 0:
        lams = lams[None]
    if lams.ndim == 1:
        lams = np.broadcast_to(lams[None, :], (q.shape[0], lams.size))
    if lams.shape[0] != q.shape[0]:
        raise ValueError("signal batch and lambda batch sizes differ")
    return q, lams, squeeze


def _run_cells(u1, u2, qa, tc, eps, lams, order, cell_ids):
    """Apply the jet recursion over the given cells in order (in place)."""
    powers = np.arange(order + 1)
    binom = [[comb(m, r) for r in range(m + 1)] for m in range(order + 1)]
    for count, n in enumerate(cell_ids):
        qn = qa[:, n : n + 1]                       # (B, 1)
        c = np.cos(np.abs(qn) * abs(eps))
        s = np.sin(np.abs(qn) * eps)
        e = np.exp(1j * (np.angle(qn) + 2.0 * lams * tc[n]))
        s12 = s * e
        s21 = -s / e
        tp = (2j * tc[n]) ** powers                 # (order+1,)
        old1 = u1.copy()
        old2 = u2.copy()
        for m in range(order + 1):
            acc1 = c * old1[m]
            acc2 = c * old2[m]
            for r in range(m + 1):
                w = binom[m][r] * tp[r]
                acc1 += w * (s12 * old2[m - r])
                acc2 += (-1) ** r * w * (s21 * old1[m - r])
            u1[m] = acc1
            u2[m] = acc2
        if count % _CHECK_EVERY == 0 or count == len(cell_ids) - 1:
            peak = max(np.abs(u1[0]).max(), np.abs(u2[0]).max())
            if not np.isfinite(peak) or peak > OVERFLOW_LIMIT:
                raise ScatteringOverflowError(
                    f"scattering recursion overflow near sample {n} (|u| ~ {peak:.3g})"
                )


def transfer_jets(
    qs: np.ndarray,
    t_start: float,
    dt: float,
    lams: np.ndarray,
    order: int = 0,
) -> tuple[np.ndarray, np.ndarray]:
    """Plain forward recursion; returns (a_derivs, b_derivs) of shape (order+1, B, K).

    A leading batch axis of qs/lams is optional and squeezed when absent.
    """
    qs, lams, squeeze = _as_batch(qs, lams)
    b_sz, n = qs.shape
    k = lams.shape[1]
    qa = 0.5 * (qs[:, :-1] + qs[:, 1:])
    tc = t_start + dt * (np.arange(n - 1) + 0.5)
    u1 = np.zeros((order + 1, b_sz, k), dtype=complex)
    u2 = np.zeros((order + 1, b_sz, k), dtype=complex)
    u1[0] = 1.0
    _run_cells(u1, u2, qa, tc, dt, lams, order, range(n - 1))
    if squeeze:
        return u1[:, 0, :], u2[:, 0, :]
    return u1, u2


def _default_split(qs: np.ndarray) -> int:
    """First cell index where the aggregate cumulative energy reaches 50%."""
    power = np.abs(0.5 * (qs[:, :-1] + qs[:, 1:])) ** 2
    cum = np.cumsum(power.sum(axis=0))
    total = cum[-1]
    if total <= 0:
        return qs.shape[1] // 2
    return int(np.searchsorted(cum, 0.5 * total))


def transfer_jets_fb(
    qs: np.ndarray,
    t_start: float,
    dt: float,
    lams: np.ndarray,
    order: int = 0,
    split_index: int | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Forward-backward recursion (unit-determinant kernel required).

    Runs forward up to the split cell and backward from the end with the
    inverse kernel (epsilon -> -epsilon), then assembles a-derivatives by the
    Leibniz rule and b-derivatives by the higher-order quotient rule on
    l2/r2.  The b entries are meaningful up to order L-1 at an eigenvalue of
    multiplicity L.
    """
    qs, lams, squeeze = _as_batch(qs, lams)
    b_sz, n = qs.shape
    k = lams.shape[1]
    cells = n - 1
    n0 = _default_split(qs) if split_index is None else int(split_index)
    n0 = min(max(n0, 0), cells)
    qa = 0.5 * (qs[:, :-1] + qs[:, 1:])
    tc = t_start + dt * (np.arange(cells) + 0.5)

    fwd1 = np.zeros((order + 1, b_sz, k), dtype=complex)
    fwd2 = np.zeros((order + 1, b_sz, k), dtype=complex)
    fwd1[0] = 1.0
    _run_cells(fwd1, fwd2, qa, tc, dt, lams, order, range(n0))

    bwd1 = np.zeros((order + 1, b_sz, k), dtype=complex)
    bwd2 = np.zeros((order + 1, b_sz, k), dtype=complex)
    bwd2[0] = 1.0
    _run_cells(bwd1, bwd2, qa, tc, -dt, lams, order, range(cells - 1, n0 - 1, -1))

    if np.any(bwd2[0] == 0):
        raise ZeroDivisionError("forward-backward assembly: r2(lambda) = 0 at the split")

    a = np.zeros_like(fwd1)
    for ell in range(order + 1):
        acc = np.zeros((b_sz, k), dtype=complex)
        for m in range(ell + 1):
            acc += comb(ell, m) * (bwd2[m] * fwd1[ell - m] - bwd1[m] * fwd2[ell - m])
        a[ell] = acc
    b = np.zeros_like(fwd2)
    for ell in range(order + 1):
        b[ell] = quotient_derivative(fwd2, bwd2, ell)
    if squeeze:
        return a[:, 0, :], b[:, 0, :]
    return a, b


def _check_env(env: SampledEnvelope, order: int, max_order: int):
    if env.units != NORMALIZED:
        raise ValueError("scattering expects a normalized envelope")
    if not 0 <= order <= max_order:
        raise ValueError(f"jet order must lie in [0, {max_order}]")


def scatter(env: SampledEnvelope, lam: complex, order: int = 0, max_order: int = MAX_JET_ORDER) -> ScatteringJet:
    """Scattering jet of env at one lambda via the plain forward recursion."""
    _check_env(env, order, max_order)
    a, b = transfer_jets(env.samples, env.t_start, env.dt, np.array([lam]), order)
    return ScatteringJet(complex(lam), a[:, 0], b[:, 0])


def scatter_many(env: SampledEnvelope, lams: np.ndarray, order: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Jets at many lambdas; returns (a, b) of shape (order+1, len(lams))."""
    _check_env(env, order, MAX_JET_ORDER)
    return transfer_jets(env.samples, env.t_start, env.dt, np.asarray(lams, dtype=complex), order)


def scatter_fb(
    env: SampledEnvelope,
    lam: complex,
    order: int = 0,
    split_index: int | None = None,
    max_order: int = MAX_JET_ORDER,
) -> ScatteringJet:
    """Scattering jet via the forward-backward method (numerically stabler)."""
    _check_env(env, order, max_order)
    a, b = transfer_jets_fb(env.samples, env.t_start, env.dt, np.array([lam]), order, split_index)
    return ScatteringJet(complex(lam), a[:, 0], b[:, 0])
