"""Monotone iteration to extremal steady states and solution diagnostics.

Iterating the fixed-point map from the constant band endpoints produces
monotone sequences: nonincreasing from the upper endpoint, nondecreasing from
the lower one.  Their limits are the maximal and minimal steady states on the
band, and every other steady state is squeezed between them.  Monotonicity of
the iterates is enforced at run time: a violation beyond tolerance signals a
discretization or solver defect and aborts with diagnostics.

Verification is independent of the iteration path: the weak-form residual is
assembled directly against the nodal hat functions, the integral of the
reaction term over the domain must vanish for any steady state (test function
identically one), and bound/band violations are measured, never repaired.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .discretization import check_field, constant_field, flux_gradient, integrate
from .solver import SolverOptions, apply_K

__all__ = [
    "IterationTrace",
    "MonotonicityError",
    "monotone_iterate",
    "fixed_point_iterate",
    "compute_extremal_solutions",
    "verify_solution",
    "ResidualReport",
    "constant_solution_analysis",
    "uniqueness_diagnostics",
    "symmetry_double",
]


class MonotonicityError(RuntimeError):
    """An iterate broke the guaranteed nodewise ordering."""


@dataclass
class IterationTrace:
    direction: str
    sup_diffs: list
    converged: bool
    n_iters: int
    iterates: Optional[list] = field(default=None, repr=False)

    def summary(self):
        return {
            "direction": self.direction,
            "n_iters": self.n_iters,
            "converged": self.converged,
            "sup_diffs": [float(d) for d in self.sup_diffs],
        }


def _validate_band(mesh, src, band):
    eps, delta = float(band[0]), float(band[1])
    if not (0.0 <= eps <= delta <= src.delta0):
        raise ValueError(
            f"band [{eps}, {delta}] does not sit inside [0, {src.delta0}]")
    n = mesh.n_nodes
    fe = np.asarray(src.f(mesh.coords, np.full(n, eps)), dtype=float)
    fd = np.asarray(src.f(mesh.coords, np.full(n, delta)), dtype=float)
    if np.any(fe < -1e-12):
        raise ValueError(
            f"band lower endpoint rejected: min f(x, {eps}) = "
            f"{float(np.min(fe)):.3g} < 0")
    if np.any(fd > 1e-12):
        raise ValueError(
            f"band upper endpoint rejected: max f(x, {delta}) = "
            f"{float(np.max(fd)):.3g} > 0")
    return eps, delta


def monotone_iterate(mesh, op, p, src, band, start, tol=1e-8,
                     max_iters=10000, opts=None, keep_iterates=True,
                     monotone_tol=1e-8):
    """Iterate the fixed-point map from a constant band endpoint.

    ``start`` selects the endpoint: 'lower' begins at the band minimum and
    must produce a nondecreasing sequence, 'upper' begins at the maximum and
    must produce a nonincreasing one.  Stops when consecutive iterates agree
    within ``tol`` in the sup norm; ordering violations beyond
    ``monotone_tol`` raise :class:`MonotonicityError`.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    eps, delta = _validate_band(mesh, src, band)
    if start not in ("lower", "upper"):
        raise ValueError("start must be 'lower' or 'upper'")
    opts = opts or SolverOptions(tol_factor=1e-11)
    U = constant_field(mesh, eps if start == "lower" else delta)
    direction = ("increasing_from_lower" if start == "lower"
                 else "decreasing_from_upper")
    iterates = [U.copy()] if keep_iterates else None
    sup_diffs = []
    converged = False
    lam = src.lambda0
    for it in range(max_iters):
        U_next = apply_K(mesh, op, p, src, lam, U, opts=opts)
        diff = U_next - U
        if start == "upper" and float(np.max(diff)) > monotone_tol:
            raise MonotonicityError(
                f"upper iterate increased by {float(np.max(diff)):.3e} at "
                f"step {it}; the capacity solve or assembly is defective")
        if start == "lower" and float(np.min(diff)) < -monotone_tol:
            raise MonotonicityError(
                f"lower iterate decreased by {float(-np.min(diff)):.3e} at "
                f"step {it}; the capacity solve or assembly is defective")
        sup = float(np.max(np.abs(diff)))
        sup_diffs.append(sup)
        U = U_next
        if keep_iterates:
            iterates.append(U.copy())
        if sup < tol:
            converged = True
            break
    trace = IterationTrace(direction=direction, sup_diffs=sup_diffs,
                           converged=converged, n_iters=len(sup_diffs),
                           iterates=iterates)
    return U, trace


def fixed_point_iterate(mesh, op, p, src, U0, tol=1e-8, max_iters=10000,
                        opts=None):
    """Plain fixed-point iteration from an arbitrary state in the box.

    No ordering is asserted (arbitrary starts need not iterate monotonically);
    used to cross-check the extremal limits from independent starts.
    """
    opts = opts or SolverOptions(tol_factor=1e-11)
    U = check_field(mesh, U0).copy()
    lam = src.lambda0
    sup_diffs = []
    converged = False
    for _ in range(max_iters):
        U_next = apply_K(mesh, op, p, src, lam, U, opts=opts)
        sup = float(np.max(np.abs(U_next - U)))
        sup_diffs.append(sup)
        U = U_next
        if sup < tol:
            converged = True
            break
    trace = IterationTrace(direction="free", sup_diffs=sup_diffs,
                           converged=converged, n_iters=len(sup_diffs),
                           iterates=None)
    return U, trace


def compute_extremal_solutions(mesh, op, p, src, band=None, tol=1e-8,
                               opts=None):
    """Minimal and maximal steady states on the band, plus a uniqueness flag.

    Runs both monotone iterations; ``unique`` holds when the two limits agree
    within 10*tol in the sup norm.
    """
    band = band if band is not None else src.band
    U_min, trace_lo = monotone_iterate(mesh, op, p, src, band, "lower",
                                       tol=tol, opts=opts,
                                       keep_iterates=False)
    U_max, trace_hi = monotone_iterate(mesh, op, p, src, band, "upper",
                                       tol=tol, opts=opts,
                                       keep_iterates=False)
    unique = bool(np.max(np.abs(U_max - U_min)) < 10.0 * tol)
    return U_min, U_max, unique, (trace_lo, trace_hi)


@dataclass
class ResidualReport:
    weak_residual_sup: float
    mean_zero_defect: float
    band_violation: float
    max_abs_f: float

    def mean_zero_ok(self, volume, rel=1e-6):
        return self.mean_zero_defect <= rel * volume * max(self.max_abs_f,
                                                           1e-30)


def verify_solution(mesh, op, p, src, U, band=None):
    """Path-independent residuals of a candidate steady state.

    Reports the sup over nodal hat functions of |flux term - reaction term|,
    the defect |integral of f(x, U)| (zero for exact steady states by the
    constant test function), and the distance of U to the band.
    """
    U = check_field(mesh, U)
    band = band if band is not None else src.band
    fvals = np.asarray(src.f(mesh.coords, np.clip(U, 0.0, src.delta0)),
                       dtype=float)
    residual = flux_gradient(mesh, op, U) - mesh.lumped * fvals
    mean_zero = abs(integrate(mesh, fvals))
    lo, hi = band
    band_violation = float(max(0.0, np.max(lo - U, initial=0.0),
                               np.max(U - hi, initial=0.0)))
    grid = np.linspace(0.0, src.delta0, 513)
    fgrid = np.asarray(src.f(mesh.coords, grid[:, None]), dtype=float)
    return ResidualReport(
        weak_residual_sup=float(np.max(np.abs(residual))),
        mean_zero_defect=mean_zero,
        band_violation=band_violation,
        max_abs_f=float(np.max(np.abs(fgrid))))


@dataclass
class ConstantAnalysis:
    zeros: list
    sign_table: list
    hypothesis_holds: bool
    pivot: Optional[float]
    predicted_min: Optional[float]
    predicted_max: Optional[float]
    admissible_band_constants: list
    caveat: str


def constant_solution_analysis(src, zero_tol=1e-9, grid_size=4096):
    """Zeros and sign pattern of an x-independent reaction term.

    Zeros are located by sign-change bisection on a uniform grid (refined to
    1e-12); every zero is a constant steady state.  When the signs split as
    nonnegative left of some zero and nonpositive right of it, the extremal
    steady states are the smallest and largest zeros and no nonconstant
    states exist on either side of the pivot.
    """
    if not src.x_independent:
        raise ValueError("analysis requires an x-independent reaction term")
    pt = np.zeros((1, 1))

    def f(s):
        return float(np.asarray(src.f(pt, np.asarray([s])), dtype=float)[0])

    grid = np.linspace(0.0, src.delta0, grid_size)
    vals = np.array([f(s) for s in grid])

    zeros = []
    for i, s in enumerate(grid):
        if abs(vals[i]) <= zero_tol:
            zeros.append(s)
        elif i + 1 < len(grid) and vals[i] * vals[i + 1] < 0.0:
            a, b = grid[i], grid[i + 1]
            fa = vals[i]
            for _ in range(200):
                m = 0.5 * (a + b)
                fm = f(m)
                if fa * fm <= 0.0:
                    b = m
                else:
                    a, fa = m, fm
                if b - a < 1e-12:
                    break
            zeros.append(0.5 * (a + b))
    merged = []
    for z in zeros:
        if not merged or z - merged[-1] > 10.0 * src.delta0 / grid_size:
            merged.append(z)
    zeros = merged

    signs = []
    knots = [0.0] + zeros + [src.delta0]
    for a, b in zip(knots[:-1], knots[1:]):
        if b - a <= zero_tol:
            continue
        mids = np.linspace(a, b, 9)[1:-1]
        mv = np.array([f(s) for s in mids])
        if np.all(mv > zero_tol):
            sign = "+"
        elif np.all(mv < -zero_tol):
            sign = "-"
        elif np.all(np.abs(mv) <= zero_tol):
            sign = "0"
        else:
            sign = "mixed"
        signs.append({"interval": (a, b), "sign": sign})

    pivot = None
    for z in zeros:
        left_ok = all(seg["sign"] in ("+", "0") for seg in signs
                      if seg["interval"][1] <= z + zero_tol)
        right_ok = all(seg["sign"] in ("-", "0") for seg in signs
                       if seg["interval"][0] >= z - zero_tol)
        if left_ok and right_ok:
            pivot = z
            break
    holds = pivot is not None and bool(zeros)
    return ConstantAnalysis(
        zeros=zeros,
        sign_table=signs,
        hypothesis_holds=holds,
        pivot=pivot,
        predicted_min=zeros[0] if holds else None,
        predicted_max=zeros[-1] if holds else None,
        admissible_band_constants=[z for z in zeros
                                   if abs(f(z)) <= max(zero_tol, 1e-10)],
        caveat=("zero finding samples a finite grid; zeros closer than "
                f"{src.delta0 / grid_size:.2e} may be missed"))


def uniqueness_diagnostics(op, src, trials, seed, alphas=None, points=None,
                           p_min=None, ratio_grid=(1e-4, 1e4, 65),
                           slack=1e-12):
    """Ratio-monotonicity diagnostics for uniqueness of positive states.

    For each candidate alpha the report states whether Phi(x,s)/s^(alpha-1)
    is (strictly) increasing on a geometric grid and whether
    f(x, s^(1/alpha)) / s^((alpha-1)/alpha) is (strictly) decreasing on
    (0, delta0^alpha].  Strict flux increase or strict source decrease each
    certify (empirically) that at most one strongly positive steady state
    exists; the non-strict pair only yields the proportionality alternative.
    """
    rng = np.random.default_rng(seed)
    if points is None:
        points = rng.uniform(0.0, 1.0, size=(min(trials, 32), 1))
    points = np.asarray(points, dtype=float)
    if points.ndim == 1:
        points = points[:, None]
    if alphas is None:
        cands = []
        if op.alpha is not None:
            cands.append(float(op.alpha))
        if src.alpha is not None:
            cands.append(float(src.alpha))
        if p_min is not None:
            top = min(float(p_min), 2.0)
            cands.extend(float(a) for a in np.linspace(1.05, top, 5)
                         if a > 1.0)
        if not cands:
            raise ValueError("no alpha candidates; pass alphas or p_min")
        alphas = sorted(set(cands))

    lo, hi, n = ratio_grid
    sgrid = np.geomspace(lo, hi, int(n))
    results = []
    for a in alphas:
        flux_inc = flux_strict = True
        for x in points:
            vals = np.asarray(op.phi(x[None, :], sgrid[:, None]),
                              dtype=float).ravel()
            ratio = vals / sgrid ** (a - 1.0)
            d = np.diff(ratio)
            mag = max(1.0, float(np.max(np.abs(ratio))))
            if np.any(d < -slack * mag):
                flux_inc = False
            if np.any(d <= slack * mag):
                flux_strict = False
        tgrid = np.geomspace(1e-8, src.delta0 ** a, 96)
        roots = tgrid ** (1.0 / a)
        src_dec = src_strict = True
        for x in points:
            fv = np.asarray(src.f(x[None, :], roots[:, None]),
                            dtype=float).ravel()
            ratio = fv / tgrid ** ((a - 1.0) / a)
            d = np.diff(ratio)
            mag = max(1.0, float(np.max(np.abs(ratio))))
            if np.any(d > slack * mag):
                src_dec = False
            if np.any(d >= -slack * mag):
                src_strict = False
        concl = []
        if flux_inc and src_dec:
            concl.append("proportionality_alternative")
        if flux_strict and src_dec:
            concl.append("unique_by_strict_flux_ratio")
        if src_strict and flux_inc:
            concl.append("unique_by_strict_source_ratio")
        results.append({
            "alpha": a,
            "flux_ratio_increasing": flux_inc,
            "flux_ratio_strictly_increasing": flux_strict,
            "source_ratio_decreasing": src_dec,
            "source_ratio_strictly_decreasing": src_strict,
            "conclusions": concl,
        })
    return results


def symmetry_double(src, U, points=None, tol=1e-10):
    """Reflect a state through delta0/2 when the source is odd-symmetric.

    Requires f(x, delta0 - s) = -f(x, s) on a sampled grid; the reflected
    field of a steady state is then again a steady state (the caller should
    re-verify it).
    """
    pts = points if points is not None else np.zeros((1, 1))
    pts = np.asarray(pts, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    grid = np.linspace(0.0, src.delta0, 257)
    left = np.asarray(src.f(pts, grid[:, None]), dtype=float)
    right = np.asarray(src.f(pts, (src.delta0 - grid)[:, None]), dtype=float)
    defect = float(np.max(np.abs(left + right)))
    scale = max(1.0, float(np.max(np.abs(left))))
    if defect > tol * scale:
        raise ValueError(
            f"source is not odd about delta0/2: max defect {defect:.3e}")
    return src.delta0 - np.asarray(U, dtype=float)
