"""Integer partitions, the higher-order quotient rule, and truncated Taylor series.

Partitions are stored in multiplicity form: p = (p_1, ..., p_m) with
sum(i * p_i) = m, so a term like prod_i (a^(i))^{p_i} reads off directly.
"""

from __future__ import annotations

from functools import lru_cache
from math import comb, factorial

import numpy as np


@lru_cache(maxsize=None)
def partitions(m: int) -> tuple[tuple[int, ...], ...]:
    """All integer partitions of m in multiplicity form; m = 0 gives the empty one."""
    if m < 0:
        raise ValueError("m must be nonnegative")
    if m == 0:
        return ((),)
    out = []

    def descend(remaining, largest, counts):
        if remaining == 0:
            p = [0] * m
            for part in counts:
                p[part - 1] += 1
            out.append(tuple(p))
            return
        for part in range(min(largest, remaining), 0, -1):
            descend(remaining - part, part, counts + [part])

    descend(m, m, [])
    return tuple(out)


def partition_weight(p: tuple[int, ...]) -> float:
    """m! / prod_i (p_i! * (i!)^{p_i}) for a partition of m in multiplicity form."""
    m = sum(i * pi for i, pi in enumerate(p, start=1))
    denom = 1
    for i, pi in enumerate(p, start=1):
        denom *= factorial(pi) * factorial(i) ** pi
    return factorial(m) / denom


def quotient_derivative(c_derivs: np.ndarray, a_derivs: np.ndarray, n: int):
    """n-th derivative of c(x)/a(x) at a point where a != 0.

    c_derivs, a_derivs hold the value and derivatives c^(0..n), a^(0..n)
    along the leading axis (trailing axes broadcast elementwise).  Faa di
    Bruno applied to 1/a plus the product rule gives a sum over integer
    partitions of the inner differentiation order.
    """
    c_derivs = np.asarray(c_derivs, dtype=complex)
    a_derivs = np.asarray(a_derivs, dtype=complex)
    if c_derivs.shape[0] < n + 1 or a_derivs.shape[0] < n + 1:
        raise ValueError("need derivatives up to order n")
    a0 = a_derivs[0]
    if np.any(a0 == 0):
        raise ZeroDivisionError("quotient rule requires a(x) != 0")
    total = np.zeros(np.broadcast_shapes(c_derivs.shape[1:], a_derivs.shape[1:]), dtype=complex)
    for m in range(n + 1):
        inner = np.zeros_like(total)
        for p in partitions(m):
            card = sum(p)
            prod = np.ones_like(total)
            for i, pi in enumerate(p, start=1):
                if pi:
                    prod = prod * a_derivs[i] ** pi
            inner += (-1) ** card * partition_weight(p) * factorial(card) * prod / a0 ** (card + 1)
        total += comb(n, m) * c_derivs[n - m] * inner
    if total.ndim == 0:
        return complex(total)
    return total


# -- truncated Taylor series around a fixed point --------------------------
# A series is a 1-D complex array s with f(x0 + x) ~ sum_k s[k] x^k.

def series_from_derivs(derivs: np.ndarray, order: int) -> np.ndarray:
    """Taylor coefficients from derivative values; missing orders are zero."""
    derivs = np.asarray(derivs, dtype=complex)
    out = np.zeros(order + 1, dtype=complex)
    top = min(order, derivs.size - 1)
    fact = 1.0
    for k in range(top + 1):
        if k > 0:
            fact *= k
        out[k] = derivs[k] / fact
    return out


def series_mul(x: np.ndarray, y: np.ndarray, order: int) -> np.ndarray:
    return np.convolve(x[: order + 1], y[: order + 1])[: order + 1]


def series_pow(x: np.ndarray, k: int, order: int) -> np.ndarray:
    out = np.zeros(order + 1, dtype=complex)
    out[0] = 1.0
    for _ in range(k):
        out = series_mul(out, x, order)
    return out


def series_shift(x: np.ndarray, k: int, order: int) -> np.ndarray:
    """Multiply a series by x^k."""
    out = np.zeros(order + 1, dtype=complex)
    out[k : k + x.size] = x[: max(0, order + 1 - k)]
    return out


def series_derivative(x: np.ndarray, i: int, order: int) -> np.ndarray:
    """Series of the i-th derivative of the function represented by x."""
    out = np.zeros(order + 1, dtype=complex)
    for k in range(order + 1):
        src = i + k
        if src >= x.size:
            break
        c = 1.0
        for j in range(src, src - i, -1):  # src! / k! = src (src-1) ... (k+1)
            c *= j
        out[k] = x[src] * c
    return out
