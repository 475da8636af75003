"""Exact Polya-Gamma PG(b, c) sampling for integer b.

PG(1, c) uses Devroye's alternating-series rejection sampler as laid out by
Polson, Scott & Windle (2013); PG(b, c) is the sum of b independent PG(1, c)
draws. The kernels are numba-compiled and consume a caller-owned
``numpy.random.Generator``, so no global random state is touched.
"""

from __future__ import annotations

import math

import numba
import numpy as np

_TRUNC = 0.64
_PI2 = math.pi * math.pi
_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)

GAUSSIAN_THRESHOLD = 1000


@numba.njit(cache=True)
def _log_norm_cdf(x):
    if x > -30.0:
        return math.log(0.5 * math.erfc(-x / math.sqrt(2.0)))
    x2 = x * x
    return -0.5 * x2 - math.log(-x) - _LOG_SQRT_2PI + math.log1p(-1.0 / x2 + 3.0 / (x2 * x2))


@numba.njit(cache=True)
def _exp_mass(z):
    """Probability of the right (exponential) proposal piece for J*(1, z)."""
    t = _TRUNC
    fz = 0.125 * _PI2 + 0.5 * z * z
    b = math.sqrt(1.0 / t) * (t * z - 1.0)
    a = -math.sqrt(1.0 / t) * (t * z + 1.0)
    x0 = math.log(fz) + fz * t
    xb = x0 - z + _log_norm_cdf(b)
    xa = x0 + z + _log_norm_cdf(a)
    q_over_p = 4.0 / math.pi * (math.exp(xb) + math.exp(xa))
    return 1.0 / (1.0 + q_over_p)


@numba.njit(cache=True, inline="always")
def _truncated_inv_gauss(z, rng):
    """Inverse-Gaussian(mean 1/z, shape 1) restricted to (0, TRUNC)."""
    t = _TRUNC
    if z < 1.0 / t:
        # proposal 1/chi^2_1 truncated, accepted with prob exp(-z^2 x / 2)
        while True:
            while True:
                e1 = rng.standard_exponential()
                e2 = rng.standard_exponential()
                if e1 * e1 <= 2.0 * e2 / t:
                    break
            x = 1.0 + e1 * t
            x = t / (x * x)
            if z == 0.0 or rng.random() <= math.exp(-0.5 * z * z * x):
                return x
    mu = 1.0 / z
    while True:
        y = rng.standard_normal()
        y = y * y
        x = mu + 0.5 * mu * mu * y - 0.5 * mu * math.sqrt(4.0 * mu * y + (mu * y) ** 2)
        if rng.random() > mu / (mu + x):
            x = mu * mu / x
        if x < t:
            return x


@numba.njit(cache=True)
def _jstar_one(z, k, mass, rng):
    """One draw of J*(1, z); ``k`` and ``mass`` are per-z constants.

    The alternating series is normalised by its leading coefficient, so
    the n-th term is (2n+1) exp(-rate n(n+1)) with ``rate`` fixed by the
    side of the truncation point the proposal landed on.
    """
    while True:
        if rng.random() < mass:
            x = _TRUNC + rng.standard_exponential() / k
            rate = 0.5 * _PI2 * x
        else:
            x = _truncated_inv_gauss(z, rng)
            rate = 2.0 / x
        u = rng.random()
        s = 1.0
        n = 0
        while True:
            n += 1
            term = (2 * n + 1) * math.exp(-rate * n * (n + 1))
            if n % 2 == 1:
                s -= term
                if u <= s:
                    return x
            else:
                s += term
                if u > s:
                    break


@numba.njit(cache=True)
def _pg_sum(b, c, rng):
    if b == 0:
        return 0.0
    z = 0.5 * abs(c)
    k = 0.125 * _PI2 + 0.5 * z * z
    mass = _exp_mass(z)
    total = 0.0
    for _ in range(b):
        total += _jstar_one(z, k, mass, rng)
    return 0.25 * total


@numba.njit(cache=True)
def _pg_fill(b, c, rng, out):
    for e in range(out.shape[0]):
        out[e] = _pg_sum(b[e], c[e], rng)


@numba.njit(cache=True)
def _pg_repeat(b, c, rng, out):
    if b == 0:
        out[:] = 0.0
        return
    z = 0.5 * abs(c)
    k = 0.125 * _PI2 + 0.5 * z * z
    mass = _exp_mass(z)
    for r in range(out.shape[0]):
        total = 0.0
        for _ in range(b):
            total += _jstar_one(z, k, mass, rng)
        out[r] = 0.25 * total


def pg_mean(b, c):
    """Closed-form mean of PG(b, c)."""
    b = np.asarray(b, dtype=float)
    c = np.abs(np.asarray(c, dtype=float))
    small = c < 1e-6
    safe = np.where(small, 1.0, c)
    out = np.where(small, b / 4.0 * (1.0 - c**2 / 12.0), b / (2.0 * safe) * np.tanh(safe / 2.0))
    return out[()] if out.ndim == 0 else out


def pg_var(b, c):
    """Closed-form variance of PG(b, c)."""
    b = np.asarray(b, dtype=float)
    c = np.abs(np.asarray(c, dtype=float))
    small = c < 1e-3
    safe = np.where(small, 1.0, c)
    big = b * (np.sinh(safe) - safe) / (4.0 * safe**3 * np.cosh(safe / 2.0) ** 2)
    out = np.where(small, b / 24.0, big)
    return out[()] if out.ndim == 0 else out


def _check_b(b):
    b = np.asarray(b)
    if np.any(b < 0) or np.any(b != np.floor(b)):
        raise ValueError("PG shape b must be a nonnegative integer")
    return b.astype(np.int64)


def _gaussian_approx(b, c, rng):
    # moment-matched normal, truncated at 0 by clipping
    draws = rng.normal(pg_mean(b, c), np.sqrt(pg_var(b, c)))
    return np.maximum(draws, 0.0)


def pg_draw(b: int, c: float, rng: np.random.Generator, size: int | None = None,
            approx_large_b: bool = False):
    """Draw from PG(b, c); ``size`` draws if given, else a single float."""
    b = int(_check_b(b))
    c = float(c)
    if not math.isfinite(c):
        raise ValueError("PG tilt c must be finite")
    if approx_large_b and b > GAUSSIAN_THRESHOLD:
        if size is None:
            return float(_gaussian_approx(b, c, rng))
        return _gaussian_approx(np.full(size, b), np.full(size, c), rng)
    out = np.empty(1 if size is None else size)
    _pg_repeat(b, c, rng, out)
    return float(out[0]) if size is None else out


def pg_draw_many(b, c, rng: np.random.Generator, approx_large_b: bool = False) -> np.ndarray:
    """Independent draws PG(b[e], c[e]) for every entry of the arrays."""
    b = _check_b(b)
    c = np.ascontiguousarray(c, dtype=float)
    if b.shape != c.shape:
        raise ValueError("b and c must have matching shapes")
    if not np.all(np.isfinite(c)):
        raise ValueError("PG tilt c must be finite")
    out = np.empty(c.shape)
    flat_b, flat_c, flat_out = b.ravel(), c.ravel(), out.reshape(-1)
    if approx_large_b and np.any(flat_b > GAUSSIAN_THRESHOLD):
        big = flat_b > GAUSSIAN_THRESHOLD
        flat_out[big] = _gaussian_approx(flat_b[big], flat_c[big], rng)
        rest = np.flatnonzero(~big)
        tmp = np.empty(rest.size)
        _pg_fill(np.ascontiguousarray(flat_b[rest]), np.ascontiguousarray(flat_c[rest]), rng, tmp)
        flat_out[rest] = tmp
        return out
    _pg_fill(np.ascontiguousarray(flat_b), np.ascontiguousarray(flat_c), rng, flat_out)
    return out
