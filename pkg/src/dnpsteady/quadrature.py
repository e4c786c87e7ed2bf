"""Quadrature helpers shared by flux potentials and source primitives."""

import numpy as np


def adaptive_simpson(fn, a, b, tol=1e-10, max_depth=48):
    """Integrate a scalar function over [a, b] by recursive adaptive Simpson.

    The tolerance is absolute.  ``b < a`` flips the sign.
    """
    if b == a:
        return 0.0
    if b < a:
        return -adaptive_simpson(fn, b, a, tol=tol, max_depth=max_depth)
    fa, fm, fb = fn(a), fn(0.5 * (a + b)), fn(b)
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    return _simpson_rec(fn, a, b, fa, fm, fb, whole, tol, max_depth)


def _simpson_rec(fn, a, b, fa, fm, fb, whole, tol, depth):
    m = 0.5 * (a + b)
    lm, rm = 0.5 * (a + m), 0.5 * (m + b)
    flm, frm = fn(lm), fn(rm)
    left = (m - a) / 6.0 * (fa + 4.0 * flm + fm)
    right = (b - m) / 6.0 * (fm + 4.0 * frm + fb)
    err = left + right - whole
    if depth <= 0 or abs(err) <= 15.0 * tol:
        return left + right + err / 15.0
    half = 0.5 * tol
    return (_simpson_rec(fn, a, m, fa, flm, fm, left, half, depth - 1)
            + _simpson_rec(fn, m, b, fm, frm, fb, right, half, depth - 1))


def adaptive_simpson_split(fn, a, b, breakpoints=(), tol=1e-10):
    """Adaptive Simpson over [a, b], split at interior breakpoints.

    Splitting at known kinks keeps the per-piece integrand smooth so the
    recursion converges quickly and well below the requested tolerance.
    """
    if b == a:
        return 0.0
    if b < a:
        return -adaptive_simpson_split(fn, b, a, breakpoints, tol)
    cuts = [a] + [t for t in sorted(set(breakpoints)) if a < t < b] + [b]
    piece_tol = tol / max(1, len(cuts) - 1)
    return sum(adaptive_simpson(fn, lo, hi, tol=piece_tol)
               for lo, hi in zip(cuts[:-1], cuts[1:]))


def simpson_columns(fn, lo, hi, tol=1e-10, max_refinements=12):
    """Entrywise integrals ``int_{lo_i}^{hi_i} fn(tau)_i dtau``.

    ``fn`` receives abscissae of shape (k, n) and must broadcast per column
    (column i carries its own integrand).  All columns are refined together,
    doubling the composite-Simpson panel count until the result is stable to
    ``tol`` (absolute, per entry).  Entries with ``hi == lo`` integrate to 0.
    """
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    width = hi - lo
    if np.any(width < 0):
        raise ValueError("upper integration limits must not be below lower ones")
    if not np.any(width > 0):
        return np.zeros_like(width)
    k = 8
    prev = None
    for _ in range(max_refinements + 1):
        t = np.linspace(0.0, 1.0, k + 1)[:, None]
        taus = lo[None, :] + t * width[None, :]
        vals = fn(taus)
        w = np.ones(k + 1)
        w[1:-1:2] = 4.0
        w[2:-1:2] = 2.0
        cur = (width / (3.0 * k)) * np.tensordot(w, vals, axes=(0, 0))
        # the relative floor concedes what double precision cannot deliver
        # on large integrals; for O(1) values the absolute tol governs
        if prev is not None and np.all(
                np.abs(cur - prev) <= tol + 1e-14 * np.abs(cur)):
            return cur
        prev = cur
        k *= 2
    return prev


def graded_simpson_columns(fn, lo, hi, tol=1e-10, levels=40):
    """Entrywise integral with panels graded geometrically toward ``lo``.

    Algebraic endpoint behavior (fractional powers with unbounded derivative
    at the lower limit) defeats uniform composite Simpson; geometric grading
    restores fast convergence while staying exact for smooth integrands.
    """
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    width = hi - lo
    total = np.zeros_like(width)
    fracs = [0.0] + [2.0 ** (-k) for k in range(levels, 0, -1)] + [1.0]
    piece_tol = tol / (levels + 1)
    for f0, f1 in zip(fracs[:-1], fracs[1:]):
        total += simpson_columns(fn, lo + f0 * width, lo + f1 * width,
                                 tol=piece_tol)
    return total


def piecewise_primitive_columns(fn, upper, breakpoints=(), tol=1e-10):
    """Entrywise ``int_0^{upper_i} fn(tau)_i dtau`` split at fixed kinks.

    Each breakpoint interval is integrated with :func:`simpson_columns`; an
    entry only accumulates the part of each interval below its own upper
    limit, so per-entry limits may straddle the kinks freely.
    """
    upper = np.asarray(upper, dtype=float)
    if np.any(upper < 0):
        raise ValueError("primitive evaluation expects nonnegative upper limits")
    top = float(np.max(upper)) if upper.size else 0.0
    cuts = [0.0] + [t for t in sorted(set(breakpoints)) if 0.0 < t < top] + [top]
    total = np.zeros_like(upper)
    for a, b in zip(cuts[:-1], cuts[1:]):
        seg_hi = np.clip(upper, a, b)
        seg_lo = np.full_like(upper, a)
        seg_lo = np.minimum(seg_lo, seg_hi)
        total += simpson_columns(fn, seg_lo, seg_hi, tol=tol)
    return total
