"""Bessel functions, aperture Hankel integrals, associated Legendre functions
and the inverse Hankel transform used for radial mask design."""

from __future__ import annotations

import math

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq

MAX_ORDER = 64
_GL16 = np.polynomial.legendre.leggauss(16)
_GL32 = np.polynomial.legendre.leggauss(32)

_BIG = 1e200


def _miller_start(nmax, xmax):
    m = max(nmax, int(math.ceil(xmax)))
    start = m + 20 + int(math.sqrt(40.0 * (m + 1)))
    return start + (start % 2)


def bessel_j_orders(nmax, x):
    """J_0(x) .. J_nmax(x) for an array of non-negative ``x``.

    Uses normalized backward (Miller) recurrence; the result has shape
    ``(nmax + 1,) + x.shape``.
    """
    x = np.asarray(x, dtype=float)
    if np.any(x < 0) or not np.all(np.isfinite(x)):
        raise ValueError("bessel arguments must be finite and non-negative")
    flat = x.ravel()
    out = np.zeros((nmax + 1, flat.size))
    zero = flat == 0
    out[0, zero] = 1.0
    pos = ~zero
    if np.any(pos):
        xp = flat[pos]
        start = _miller_start(nmax, xp.max())
        inv = 2.0 / xp
        j_next = np.zeros_like(xp)
        j_cur = np.full_like(xp, 1e-280)
        norm = np.zeros_like(xp)
        store = np.zeros((nmax + 1, xp.size))
        for k in range(start, 0, -1):
            if k <= nmax:
                store[k] = j_cur
            if k % 2 == 0:
                norm += 2.0 * j_cur
            j_prev = k * inv * j_cur - j_next
            j_next, j_cur = j_cur, j_prev
            big = np.abs(j_cur) > _BIG
            if np.any(big):
                scale = np.where(big, 1.0 / _BIG, 1.0)
                j_cur *= scale
                j_next *= scale
                norm *= scale
                store *= scale
        store[0] = j_cur
        norm += j_cur
        out[:, pos] = store / norm
    return out.reshape((nmax + 1,) + x.shape)


def _hankel_asymptotic(n, x):
    mu = 4.0 * n * n
    p = np.ones_like(x)
    q = np.zeros_like(x)
    term = np.ones_like(x)
    active = np.ones(x.shape, dtype=bool)
    prev = np.full_like(x, np.inf)
    for k in range(1, 60):
        term = term * (mu - (2 * k - 1) ** 2) / (k * 8.0 * x)
        grow = np.abs(term) >= prev
        active &= ~grow
        if not np.any(active):
            break
        contrib = np.where(active, term, 0.0)
        if k % 2 == 1:
            q += (-1) ** ((k - 1) // 2) * contrib
        else:
            p += (-1) ** (k // 2) * contrib
        prev = np.abs(term)
        active &= np.abs(term) > 1e-17
    chi = x - (0.5 * n + 0.25) * math.pi
    return np.sqrt(2.0 / (math.pi * x)) * (p * np.cos(chi) - q * np.sin(chi))


def jn_array(n, x):
    """Vectorized J_n(x) for integer ``n >= 0`` and ``x >= 0``.

    Large arguments (``x > max(60, n**2)``) use the Hankel asymptotic
    expansion; everything else goes through :func:`bessel_j_orders`.
    """
    n = int(n)
    if n < 0:
        raise ValueError("order must be non-negative")
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError("bessel_j requires x >= 0; use J_-n = (-1)^n J_n at call sites")
    out = np.empty_like(x)
    asym = x > max(60.0, float(n * n))
    if np.any(asym):
        out[asym] = _hankel_asymptotic(n, x[asym])
    if np.any(~asym):
        out[~asym] = bessel_j_orders(n, x[~asym])[n]
    return out


def bessel_j(n, x):
    """Bessel function of the first kind J_n(x), ``n >= 0``, ``x >= 0``."""
    if not np.isfinite(x):
        raise ValueError("x must be finite")
    if x < 0:
        raise ValueError("bessel_j requires x >= 0; use J_-n = (-1)^n J_n at call sites")
    return float(jn_array(n, np.array([x], dtype=float))[0])


def _approx_zeros(n, upto):
    # McMahon estimates; only used to place quadrature panel boundaries
    mu = 4.0 * n * n
    zeros = []
    s = 1
    while True:
        b = (s + 0.5 * n - 0.25) * math.pi
        z = b - (mu - 1) / (8 * b) - 4 * (mu - 1) * (7 * mu - 31) / (3 * (8 * b) ** 3)
        if z >= upto:
            break
        if z > max(n, 1.0) and (not zeros or z > zeros[-1] + 1.0):
            zeros.append(z)
        s += 1
        if s > 10000:
            break
    return zeros


def _panel(f, a, b, tol, depth=0):
    xs16 = 0.5 * (b - a) * _GL16[0] + 0.5 * (a + b)
    xs32 = 0.5 * (b - a) * _GL32[0] + 0.5 * (a + b)
    coarse = 0.5 * (b - a) * np.dot(_GL16[1], f(xs16))
    fine = 0.5 * (b - a) * np.dot(_GL32[1], f(xs32))
    if abs(fine - coarse) <= tol or depth > 40:
        return fine
    mid = 0.5 * (a + b)
    return (_panel(f, a, mid, 0.5 * tol, depth + 1)
            + _panel(f, mid, b, 0.5 * tol, depth + 1))


def aperture_hankel_integral(n, k, R, abs_tol=1e-12):
    """Integral of J_n(k r) r dr over the aperture ``0 <= r <= R``.

    For ``n = 0`` the closed form ``(R/k) J_1(kR)`` is returned. Higher
    orders use adaptive Gauss-Legendre panels split at (approximate) zeros of
    J_n; the absolute tolerance is ``abs_tol * R**2``.
    """
    n = int(n)
    if n < 0:
        raise ValueError("order must be non-negative")
    if n > MAX_ORDER:
        raise ValueError(f"order above documented range ({MAX_ORDER})")
    if not R > 0:
        raise ValueError("aperture radius must be positive")
    if k < 0:
        raise ValueError("k must be non-negative")
    if k == 0:
        return 0.5 * R * R if n == 0 else 0.0
    if n == 0:
        return R / k * bessel_j(1, k * R)
    X = k * R
    edges = [0.0] + _approx_zeros(n, X) + [X]
    tol = abs_tol * X * X / max(len(edges) - 1, 1)

    def integrand(u):
        return jn_array(n, u) * u

    total = sum(_panel(integrand, a, b, tol) for a, b in zip(edges[:-1], edges[1:]))
    return total / (k * k)


def _ut_integral(nmax, x):
    """A_n(x) = int_0^x t J_n(t) dt for n = 0..nmax, via Bessel sums.

    Uses A_0 = x J_1, A_1 = -x J_0 + 2 T_1 and
    A_n = 4 (n - 1) T_n - A_{n-2} with T_j = sum_k J_{j+2k}(x). The tail sums
    are accumulated inside one normalized backward recurrence so only
    ``nmax + 2`` orders are ever stored.
    """
    x = np.asarray(x, dtype=float)
    flat = x.ravel()
    if np.any(flat <= 0):
        raise ValueError("_ut_integral needs positive arguments")
    keep = max(nmax, 1) + 1
    start = _miller_start(keep, float(flat.max(initial=1.0)))
    inv = 2.0 / flat
    j_next = np.zeros_like(flat)
    j_cur = np.full_like(flat, 1e-280)
    sums = [np.zeros_like(flat), np.zeros_like(flat)]
    norm = np.zeros_like(flat)
    tail = np.zeros((keep + 1, flat.size))
    for k in range(start, 0, -1):
        sums[k % 2] += j_cur
        if k <= keep:
            tail[k] = sums[k % 2]
        if k % 2 == 0:
            norm += 2.0 * j_cur
        j_prev = k * inv * j_cur - j_next
        j_next, j_cur = j_cur, j_prev
        big = np.abs(j_cur) > _BIG
        if np.any(big):
            scale = np.where(big, 1.0 / _BIG, 1.0)
            j_cur *= scale
            j_next *= scale
            norm *= scale
            sums[0] *= scale
            sums[1] *= scale
            tail *= scale
    norm += j_cur
    j0 = j_cur / norm
    j1 = j_next / norm
    tail = tail / norm
    A = np.zeros((nmax + 1, flat.size))
    A[0] = flat * j1
    if nmax >= 1:
        A[1] = -flat * j0 + 2.0 * tail[1]
    for n in range(2, nmax + 1):
        A[n] = 4.0 * (n - 1) * tail[n] - A[n - 2]
    return A.reshape((nmax + 1,) + x.shape)


def _ut_series(n, x):
    """Power series of int_0^x t J_n(t) dt (used where it does not cancel)."""
    x = np.asarray(x, dtype=float)
    h2 = (0.5 * x) ** 2
    # k = 0 term: x^(n+2) / (2^n n! (n+2))
    term = np.exp((n + 2) * np.log(np.where(x > 0, x, 1.0)) - n * math.log(2.0)
                  - math.lgamma(n + 1)) / (n + 2)
    term = np.where(x > 0, term, 0.0)
    total = term.copy()
    for k in range(1, 80):
        term = -term * h2 * (n + 2 * k) / (k * (n + k) * (n + 2 * k + 2))
        total += term
        if np.all(np.abs(term) <= 1e-17 * np.abs(total)):
            break
    return total


def aperture_hankel_exact(n, k, R):
    """Vectorized aperture Hankel integral from Bessel-sum identities.

    Independent of the quadrature route in :func:`aperture_hankel_integral`.
    """
    v = aperture_hankel_orders(n, k, R)[n]
    return float(v) if np.ndim(k) == 0 else v


def aperture_hankel_orders(nmax, k, R):
    """I_0 .. I_nmax on an array of ``k``; shape ``(nmax + 1,) + k.shape``."""
    shape = np.shape(k)
    k = np.atleast_1d(np.asarray(k, dtype=float))
    if np.any(k < 0):
        raise ValueError("k must be non-negative")
    out = np.zeros((nmax + 1,) + k.shape)
    out[0][k == 0] = 0.5 * R * R
    pos = k > 0
    if np.any(pos):
        kp = k[pos]
        x = kp * R
        A = _ut_integral(nmax, x)
        for n in range(nmax + 1):
            small = x <= max(2.0 * math.sqrt(n + 1.0), 0.5 * n)
            if np.any(small):
                A[n, small] = _ut_series(n, x[small])
            out[n][pos] = A[n] / kp ** 2
    return out.reshape((nmax + 1,) + shape)


_TABLES = {}


def _hankel_spline(nmax, kmax, R, step):
    key = (nmax, kmax, R, step)
    spline = _TABLES.get(key)
    if spline is None:
        npts = max(int(math.ceil(kmax * R / step)) + 2, 16)
        table_k = np.linspace(0.0, kmax, npts)
        values = np.concatenate([aperture_hankel_orders(nmax, table_k[lo:lo + 8192], R)
                                 for lo in range(0, npts, 8192)], axis=1)
        spline = CubicSpline(table_k, values, axis=1)
        if len(_TABLES) > 16:
            _TABLES.clear()
        _TABLES[key] = spline
    return spline


def aperture_hankel_table(n, k, R, step=0.05):
    """Aperture Hankel integral on arbitrary arrays of ``k``.

    Small inputs are evaluated exactly; large ones through a cached cubic
    spline on a table of spacing ``step / R`` holding orders ``0..max(n)``.
    ``n`` may be a single order or a sequence (then a list is returned).
    """
    orders = [int(n)] if np.isscalar(n) else [int(o) for o in n]
    k = np.asarray(k, dtype=float)
    nmax = max(orders)
    if k.size <= 4096:
        table = aperture_hankel_orders(nmax, k, R)
        out = [table[o] for o in orders]
    else:
        # round the table end up so nearby grids share one cache entry
        kmax = math.ceil(float(k.max()) * R) / R + step / R
        spline = _hankel_spline(nmax, kmax, float(R), float(step))
        vals = spline(k.ravel())
        out = [vals[o].reshape(k.shape) for o in orders]
    return out[0] if np.isscalar(n) else out


def find_k_eq(n, m, R, bracket, rtol=1e-8):
    """Wavenumber where the aperture integrals of orders n and m coincide.

    ``bracket`` must contain a sign change of ``I_n - I_m``.
    """
    if n == m:
        raise ValueError("orders must differ")
    lo, hi = bracket

    def diff(k):
        return aperture_hankel_integral(n, k, R) - aperture_hankel_integral(m, k, R)

    f_lo, f_hi = diff(lo), diff(hi)
    if f_lo * f_hi > 0:
        raise ValueError(f"no sign change of I_{n} - I_{m} in [{lo}, {hi}]")
    return brentq(diff, lo, hi, rtol=rtol, xtol=1e-14)


def first_k_eq(n, m, R, k_max=None, samples=400):
    """First positive crossing of I_n and I_m, found by scanning then bracketing."""
    k_max = k_max or 40.0 / R
    ks = np.linspace(k_max / samples, k_max, samples)
    d = aperture_hankel_exact(n, ks, R) - aperture_hankel_exact(m, ks, R)
    idx = np.nonzero(np.sign(d[:-1]) * np.sign(d[1:]) < 0)[0]
    if idx.size == 0:
        raise ValueError("no crossing found below k_max")
    i = idx[0]
    return find_k_eq(n, m, R, (ks[i], ks[i + 1]))


def assoc_legendre(l, m, x):
    """Associated Legendre function P_l^m(x) with the Condon-Shortley phase.

    Negative orders use P_l^{-m} = (-1)^m (l-m)!/(l+m)! P_l^m.
    """
    l, m = int(l), int(m)
    if l < 0 or abs(m) > l:
        raise ValueError(f"need l >= 0 and |m| <= l, got l={l}, m={m}")
    x_arr = np.asarray(x, dtype=float)
    if np.any(np.abs(x_arr) > 1):
        raise ValueError("x must lie in [-1, 1]")
    am = abs(m)
    somx2 = np.sqrt(np.clip(1.0 - x_arr * x_arr, 0.0, None))
    pmm = np.ones_like(x_arr)
    fact = 1.0
    for _ in range(am):
        pmm = -pmm * fact * somx2
        fact += 2.0
    if l == am:
        p = pmm
    else:
        pm1 = x_arr * (2 * am + 1) * pmm
        if l == am + 1:
            p = pm1
        else:
            p_prev, p_cur = pmm, pm1
            for ll in range(am + 2, l + 1):
                p_next = (x_arr * (2 * ll - 1) * p_cur - (ll + am - 1) * p_prev) / (ll - am)
                p_prev, p_cur = p_cur, p_next
            p = p_cur
    if m < 0:
        p = (-1) ** am * math.factorial(l - am) / math.factorial(l + am) * p
    return float(p) if np.ndim(x) == 0 else p


def inverse_hankel_transform(q, k, g, r, normalize=True, decay_tol=1e-6):
    """Tabulated order-q Hankel transform h(r) = int g(k) J_q(k r) k dk.

    ``g`` may be complex; real and imaginary parts are transformed
    separately. With ``normalize`` the result is scaled to ``max|h| = 1``.
    Integration uses composite Gauss-Legendre on a cubic spline of the table.
    """
    k = np.asarray(k, dtype=float)
    g = np.asarray(g)
    r = np.asarray(r, dtype=float)
    if k.ndim != 1 or k.shape != g.shape or np.any(np.diff(k) <= 0):
        raise ValueError("k must be strictly increasing and match g")
    peak = np.max(np.abs(g))
    if peak == 0:
        raise ValueError("g is identically zero")
    if abs(g[-1]) > decay_tol * peak:
        raise ValueError("g does not decay within the tabulated support")
    if np.any(r < 0):
        raise ValueError("radii must be non-negative")
    spline_re = CubicSpline(k, g.real)
    spline_im = CubicSpline(k, g.imag) if np.iscomplexobj(g) else None
    # panels narrow enough to resolve J_q(k r) at the largest radius
    r_max = float(r.max(initial=0.0))
    width = min(math.pi / max(r_max, 1e-12), (k[-1] - k[0]) / 8)
    npanel = int(math.ceil((k[-1] - k[0]) / width))
    edges = np.linspace(k[0], k[-1], npanel + 1)
    nodes, weights = _GL16
    half = 0.5 * np.diff(edges)
    kk = (half[:, None] * nodes[None, :] + (0.5 * (edges[:-1] + edges[1:]))[:, None]).ravel()
    ww = (half[:, None] * weights[None, :]).ravel() * kk
    h = np.zeros(r.shape, dtype=complex if spline_im is not None else float)
    flat_r = r.ravel()
    out = np.zeros(flat_r.shape, dtype=h.dtype)
    chunk = max(1, 2_000_000 // kk.size)
    g_re = spline_re(kk) * ww
    g_im = spline_im(kk) * ww if spline_im is not None else None
    for lo in range(0, flat_r.size, chunk):
        rr = flat_r[lo:lo + chunk]
        J = jn_array(q, np.abs(np.outer(rr, kk)))
        val = J @ g_re
        if g_im is not None:
            val = val + 1j * (J @ g_im)
        out[lo:lo + chunk] = val
    h = out.reshape(r.shape)
    if normalize:
        hmax = np.max(np.abs(h))
        if hmax > 0:
            h = h / hmax
    return h
