"""Diffusion laws a(x, xi) = Psi(x, |xi|) xi with their scalar potentials.

A :class:`FluxOperator` bundles the radial flux profile Phi(x, s) (the
magnitude of the flux at gradient magnitude s), the potential
A(x, s) = int_0^s Phi(x, t) dt, and optional extras: the radial derivative
of Phi for Hessian assembly and an exponent ``alpha`` for the ratio
monotonicity diagnostics.  Evaluators are vectorized over points of shape
(m, dim) with aligned state arrays and must be safe for concurrent calls;
operators are immutable after construction.

Two constructors cover the stock laws: a weighted sum of power phases (the
multiple-phase operator, with closed-form potential) and the max-form law
``max(h(x,s), a(x,s) s^{p(x)-1} - atilde(x))`` whose potential is computed
by adaptive Simpson quadrature split at the branch-crossing kinks.
"""

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .quadrature import graded_simpson_columns, simpson_columns
from .varexp_core import ExponentField

__all__ = [
    "FluxOperator",
    "OperatorConstructionError",
    "multiphase_operator",
    "maxform_operator",
    "eval_flux_and_potential",
    "check_structure",
    "structure_gap_sampler",
    "StructureReport",
    "max_exponent_callable",
]

_MAXFORM_QUAD_TOL = 1e-12


class OperatorConstructionError(ValueError):
    """A structural requirement of a diffusion law failed at construction."""


def _as_coeff(c):
    if callable(c):
        return c
    value = float(c)
    return lambda pts: np.full(np.shape(pts)[0], value)


def _coeff_min(c):
    """Known lower bound of a coefficient, or None when only callable."""
    if isinstance(c, ExponentField):
        return c.p_min
    if callable(c):
        return None
    return float(c)


def _exp_eval(e):
    if isinstance(e, ExponentField):
        if e.fn is None:
            def missing(pts):
                raise ValueError(
                    "exponent field lacks a generating callable; build it "
                    "with ExponentField.from_callable for flux evaluation")
            return missing
        return e.fn
    return _as_coeff(e)


@dataclass(frozen=True)
class FluxOperator:
    """Immutable bundle of flux evaluators for one diffusion law.

    ``potential_noise`` bounds the per-value evaluation error of the
    potential (zero for closed forms); energy-based line searches must not
    demand decreases below that noise floor, the gradient being exact.
    """

    phi: Callable
    potential: Callable
    dphi_ds: Optional[Callable] = None
    alpha: Optional[float] = None
    closed_form_potential: bool = False
    potential_diff: Optional[Callable] = None
    label: str = "flux"
    potential_noise: float = 0.0

    def potential_difference(self, pts, s1, s2):
        """A(x, s2) - A(x, s1), via the dedicated evaluator when present."""
        if self.potential_diff is not None:
            return self.potential_diff(pts, s1, s2)
        return self.potential(pts, s2) - self.potential(pts, s1)


def multiphase_operator(weights, exponents, sample_points=None):
    """Sum of weighted power phases: Phi(x,s) = sum_k w_k(x) s^{p_k(x)-1}.

    Each weight must be bounded away from zero and each exponent must exceed
    one.  The potential has the closed form sum_k w_k s^{p_k}/p_k; ``alpha``
    is placed inside (1, min_x min_k p_k(x)) capped below 2, which is the
    range where the ratio Phi(x,s)/s^{alpha-1} is strictly increasing.
    """
    if len(weights) == 0 or len(weights) != len(exponents):
        raise OperatorConstructionError(
            "weights and exponents must be nonempty lists of equal length")
    for k, wk in enumerate(weights):
        known = _coeff_min(wk)
        if known is not None and known <= 0.0:
            raise OperatorConstructionError(
                f"phase weight {k + 1} must be strictly positive")
    for k, pk in enumerate(exponents):
        known = _coeff_min(pk)
        if known is not None and known <= 1.0:
            raise OperatorConstructionError(
                f"phase exponent {k + 1} must exceed 1")

    w_fns = [_as_coeff(w) for w in weights]
    p_fns = [_exp_eval(e) for e in exponents]

    def phi(pts, s):
        s = np.asarray(s, dtype=float)
        total = 0.0
        for w_fn, p_fn in zip(w_fns, p_fns):
            total = total + w_fn(pts) * np.power(s, p_fn(pts) - 1.0)
        return total

    def potential(pts, s):
        s = np.asarray(s, dtype=float)
        total = 0.0
        for w_fn, p_fn in zip(w_fns, p_fns):
            pk = p_fn(pts)
            total = total + w_fn(pts) * np.power(s, pk) / pk
        return total

    def dphi_ds(pts, s):
        s = np.maximum(np.asarray(s, dtype=float), 1e-300)
        total = 0.0
        for w_fn, p_fn in zip(w_fns, p_fns):
            pk = p_fn(pts)
            total = total + w_fn(pts) * (pk - 1.0) * np.power(s, pk - 2.0)
        return total

    p_lows = [_coeff_min(e) for e in exponents]
    if sample_points is not None:
        pts = np.asarray(sample_points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        for k, (w_fn, p_fn) in enumerate(zip(w_fns, p_fns)):
            wv = np.asarray(w_fn(pts), dtype=float)
            if np.any(wv <= 0.0):
                raise OperatorConstructionError(
                    f"phase weight {k + 1} is not positive on sample points")
            pv = np.asarray(p_fn(pts), dtype=float)
            if np.any(pv <= 1.0):
                raise OperatorConstructionError(
                    f"phase exponent {k + 1} does not exceed 1 on samples")
            p_lows[k] = float(np.min(pv)) if p_lows[k] is None \
                else min(p_lows[k], float(np.min(pv)))
        _check_strict_radial_increase(phi, pts, "multiphase")
    alpha = None
    if all(lo is not None for lo in p_lows):
        p_min_all = min(p_lows)
        alpha = 1.0 + 0.5 * (min(p_min_all, 2.0) - 1.0)

    return FluxOperator(phi=phi, potential=potential, dphi_ds=dphi_ds,
                        alpha=alpha, closed_form_potential=True,
                        label=f"multiphase[{len(weights)}]")


def _check_strict_radial_increase(phi, pts, label, n_grid=33):
    """Sampled check that s -> Phi(x, s) strictly increases and starts at 0."""
    probe = pts[:min(16, pts.shape[0])]
    grid = np.geomspace(1e-3, 1e3, n_grid)
    zero = np.asarray(phi(probe, np.zeros(probe.shape[0])), dtype=float)
    if np.any(np.abs(zero) > 1e-12):
        raise OperatorConstructionError(
            f"{label} flux profile does not vanish at zero gradient")
    for x in probe:
        vals = np.asarray(phi(x[None, :], grid[:, None]), dtype=float).ravel()
        if np.any(np.diff(vals) <= 0.0):
            raise OperatorConstructionError(
                f"{label} flux profile is not strictly increasing at "
                f"x={x.tolist()}")


def max_exponent_callable(exponents):
    """Pointwise max of the phase exponents, for the solver's exponent field."""
    fns = [_exp_eval(e) for e in exponents]

    def fn(pts):
        vals = [np.broadcast_to(np.asarray(f(pts), dtype=float),
                                (np.shape(pts)[0],)) for f in fns]
        return np.max(np.stack(vals), axis=0)

    return fn


def maxform_operator(h, a_coef, a_tilde, p, quad_tol=_MAXFORM_QUAD_TOL,
                     sample_points=None):
    """Law Phi(x,s) = max(h(x,s), a(x,s) s^{p(x)-1} - atilde(x)).

    ``h`` and ``a_coef`` are (pts, s) evaluators, ``atilde`` a nonnegative
    coefficient; requires h(x, 0) = 0 so the flux vanishes at zero gradient.
    The potential has no closed form: it is integrated per point by adaptive
    Simpson split at the branch-crossing kink, which keeps each piece smooth
    (quadrature errors stay far below ``quad_tol``).
    """
    h_fn = h if callable(h) else (lambda pts, s, _v=float(h): np.full_like(
        np.asarray(s, dtype=float), _v))
    a_fn = a_coef if callable(a_coef) else (
        lambda pts, s, _v=float(a_coef): np.full_like(
            np.asarray(s, dtype=float), _v))
    at_fn = _as_coeff(a_tilde)
    p_fn = _exp_eval(p)

    def _branch_diff(pts, s):
        return (a_fn(pts, s) * np.power(s, p_fn(pts) - 1.0) - at_fn(pts)
                - h_fn(pts, s))

    def phi(pts, s):
        s = np.asarray(s, dtype=float)
        power = a_fn(pts, s) * np.power(s, p_fn(pts) - 1.0) - at_fn(pts)
        return np.maximum(h_fn(pts, s), power)

    if sample_points is not None:
        pts = np.asarray(sample_points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        zero = np.zeros(pts.shape[0])
        h0 = np.asarray(h_fn(pts, zero), dtype=float)
        if np.any(np.abs(h0) > 1e-12):
            raise OperatorConstructionError(
                "h(x, 0) must vanish for the flux to vanish at zero gradient")
        if np.any(np.asarray(at_fn(pts), dtype=float) < 0.0):
            raise OperatorConstructionError(
                "the offset coefficient must be nonnegative")
        _check_strict_radial_increase(phi, pts, "max-form")

    def _crossing_bounds(pts, lo, hi, samples=65, iters=80):
        """Sorted per-column branch-crossing locations inside [lo_i, hi_i].

        Returns a list of (m,) arrays padded with hi_i; consecutive entries
        bound the smooth pieces of the max.  Crossings are bracketed on a
        uniform sample grid and polished by a batched bisection.
        """
        m = pts.shape[0]
        frac = np.linspace(0.0, 1.0, samples)[:, None]
        grid = lo[None, :] + frac * (hi - lo)[None, :]
        diff = np.asarray(_branch_diff(pts, grid), dtype=float)
        sign_flip = diff[:-1, :] * diff[1:, :] < 0.0
        cols, rows = np.nonzero(sign_flip.T)
        if cols.size:
            a_ = grid[rows, cols]
            b_ = grid[rows + 1, cols]
            fa = diff[rows, cols]
            sub = pts[cols]
            for _ in range(iters):
                mid = 0.5 * (a_ + b_)
                fm = np.asarray(_branch_diff(sub, mid), dtype=float)
                take_hi = fa * fm <= 0.0
                b_ = np.where(take_hi, mid, b_)
                a_ = np.where(take_hi, a_, mid)
                fa = np.where(take_hi, fa, fm)
                if np.max(b_ - a_) < 1e-15 * max(1.0, float(np.max(np.abs(mid)))):
                    break
            crossings = 0.5 * (a_ + b_)
        else:
            crossings = np.empty(0)
        max_per_col = int(np.max(np.bincount(cols, minlength=m),
                                 initial=0)) if cols.size else 0
        bounds = []
        for k in range(max_per_col):
            level = np.array(hi, dtype=float)
            for c in range(m):
                mine = crossings[cols == c]
                if k < mine.size:
                    level[c] = np.sort(mine)[k]
            bounds.append(np.minimum(level, hi))
        bounds.append(np.array(hi, dtype=float))
        return bounds

    def _integrate_pieces(pts, lo, hi):
        """Entrywise integral of phi over [lo_i, hi_i], split at crossings.

        The first piece is graded toward its lower endpoint: the flux profile
        may carry a fractional power there (it only has to vanish at zero).
        """
        total = np.zeros(pts.shape[0])
        cursor = np.array(lo, dtype=float)
        first = True
        for upper in _crossing_bounds(pts, lo, hi):
            seg_hi = np.maximum(np.minimum(upper, hi), cursor)
            if first:
                total += graded_simpson_columns(
                    lambda taus: phi(pts, taus), cursor, seg_hi, tol=quad_tol)
                first = False
            else:
                total += simpson_columns(lambda taus: phi(pts, taus),
                                         cursor, seg_hi, tol=quad_tol)
            cursor = seg_hi
        return total

    def potential(pts, s):
        pts = np.asarray(pts, dtype=float)
        s = np.broadcast_to(np.asarray(s, dtype=float),
                            (pts.shape[0],)).astype(float)
        return _integrate_pieces(pts, np.zeros_like(s), s)

    def potential_diff(pts, s1, s2):
        pts = np.asarray(pts, dtype=float)
        s1 = np.broadcast_to(np.asarray(s1, dtype=float),
                             (pts.shape[0],)).astype(float)
        s2 = np.broadcast_to(np.asarray(s2, dtype=float),
                             (pts.shape[0],)).astype(float)
        lo, hi = np.minimum(s1, s2), np.maximum(s1, s2)
        vals = _integrate_pieces(pts, lo, hi)
        return np.where(s2 >= s1, vals, -vals)

    return FluxOperator(phi=phi, potential=potential, dphi_ds=None,
                        alpha=None, closed_form_potential=False,
                        potential_diff=potential_diff, label="maxform",
                        potential_noise=100.0 * quad_tol)


def eval_flux_and_potential(op, x, xi):
    """Flux vector and potential value at one point or a batch of points.

    Returns (Phi(x,|xi|) xi/|xi|, A(x,|xi|)) with the zero-gradient
    convention a(x, 0) = 0.
    """
    x = np.asarray(x, dtype=float)
    xi = np.asarray(xi, dtype=float)
    single = xi.ndim == 1
    if single:
        x = x[None, :] if x.ndim == 1 else x
        xi = xi[None, :]
    if not np.all(np.isfinite(xi)):
        raise ValueError("gradient argument must be finite")
    s = np.linalg.norm(xi, axis=1)
    phi = np.asarray(op.phi(x, s), dtype=float)
    with np.errstate(invalid="ignore", divide="ignore"):
        unit = np.where(s[:, None] > 0.0, xi / s[:, None], 0.0)
    flux = phi[:, None] * unit
    pot = np.asarray(op.potential(x, s), dtype=float)
    if single:
        return flux[0], float(pot[0])
    return flux, pot


@dataclass
class StructureReport:
    trials: int
    checks: dict
    violations: list

    @property
    def ok(self):
        return not self.violations


def check_structure(op, p, trials, seed, points=None, slack=1e-12,
                    ratio_grid=(1e-4, 1e4, 65)):
    """Sampled structural diagnostics of a diffusion law.

    Draws random (x, xi1, xi2) and asserts flux monotonicity, the two-sided
    potential inequality, convexity of the potential along segments, the
    bound A(x,s) <= Phi(x,s) s, and (when ``alpha`` is set) that
    Phi(x,s)/s^{alpha-1} is nondecreasing on a geometric grid.  Violations
    carry witnesses; an empty list means the law passed.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    if points is None:
        points = rng.uniform(0.0, 1.0, size=(64, 1))
    points = np.asarray(points, dtype=float)
    if points.ndim == 1:
        points = points[:, None]
    dim = points.shape[1]
    violations = []
    checks = {"monotone": 0, "potential_inequality": 0, "convexity": 0,
              "potential_cap": 0, "ratio_increasing": 0}

    x = points[rng.integers(points.shape[0], size=trials)]
    scale = 10.0 ** rng.uniform(-2.0, 1.0, size=(trials, 1))
    xi1 = scale * rng.standard_normal((trials, dim))
    xi2 = scale * rng.standard_normal((trials, dim))
    lam = rng.uniform(0.0, 1.0, size=trials)

    a1, A1 = eval_flux_and_potential(op, x, xi1)
    a2, A2 = eval_flux_and_potential(op, x, xi2)
    s1 = np.linalg.norm(xi1, axis=1)
    s2 = np.linalg.norm(xi2, axis=1)
    mag = np.maximum.reduce([np.ones(trials), np.abs(A1), np.abs(A2),
                             np.linalg.norm(a1, axis=1),
                             np.linalg.norm(a2, axis=1)])

    def record(name, mask, **extra):
        for t in np.nonzero(mask)[0][:16]:
            violations.append({"check": name, "witness": dict(
                {"trial": int(t), "x": x[t].tolist(),
                 "xi1": xi1[t].tolist(), "xi2": xi2[t].tolist()},
                **{k: v[t] for k, v in extra.items()})})

    checks["monotone"] = trials
    mono = np.einsum("td,td->t", a1 - a2, xi1 - xi2)
    record("monotone", mono < -slack * mag)

    checks["potential_inequality"] = trials
    if op.closed_form_potential:
        dA = A2 - A1
    else:
        dA = op.potential_difference(x, s1, s2)
    lo = np.einsum("td,td->t", a1, xi2 - xi1)
    hi = np.einsum("td,td->t", a2, xi2 - xi1)
    record("potential_inequality",
           (dA < lo - slack * mag) | (dA > hi + slack * mag))

    checks["convexity"] = trials
    mid = lam[:, None] * xi1 + (1.0 - lam[:, None]) * xi2
    _, Am = eval_flux_and_potential(op, x, mid)
    record("convexity", Am > lam * A1 + (1.0 - lam) * A2 + slack * mag,
           lam=lam)

    checks["potential_cap"] = trials
    phi1 = np.asarray(op.phi(x, s1), dtype=float)
    record("potential_cap",
           (A1 < -slack * mag) | (A1 > phi1 * s1 + slack * mag))

    if op.alpha is not None:
        lo, hi, n = ratio_grid
        grid = np.geomspace(lo, hi, int(n))
        checks["ratio_increasing"] += 1
        for x in points[:min(16, points.shape[0])]:
            vals = np.asarray(op.phi(x[None, :], grid[:, None]),
                              dtype=float).ravel()
            ratio = vals / grid ** (op.alpha - 1.0)
            if np.any(np.diff(ratio) < -slack * max(1.0, np.max(np.abs(ratio)))):
                record("ratio_increasing", {"x": x.tolist()})
                break

    return StructureReport(trials=trials, checks=checks, violations=violations)


def structure_gap_sampler(op, p, trials, seed, points=None,
                          s_span=(1e-4, 1e4)):
    """Search for small potential-to-power ratios A(x,s) / s^{p(x)}.

    Demonstration helper: a law whose ratio can be driven toward zero admits
    no lower bound of the form A(x, xi) >= delta |xi|^{p(x)} - delta_tilde
    with delta > 0.  Returns the smallest sampled ratio and its witness.
    """
    rng = np.random.default_rng(seed)
    if points is None:
        points = rng.uniform(0.0, 1.0, size=(64, 1))
    points = np.asarray(points, dtype=float)
    if points.ndim == 1:
        points = points[:, None]
    pv = p.fn(points) if getattr(p, "fn", None) is not None else \
        np.full(points.shape[0], p.p_min)
    sgrid = np.geomspace(s_span[0], s_span[1], 65)
    best = {"ratio": np.inf, "x": None, "s": None}
    idx = rng.permutation(points.shape[0])[:max(1, min(trials,
                                                       points.shape[0]))]
    for i in idx:
        x_rep = np.repeat(points[i][None, :], sgrid.size, axis=0)
        A = np.asarray(op.potential(x_rep, sgrid), dtype=float)
        ratios = A / sgrid ** float(pv[i])
        j = int(np.argmin(ratios))
        if ratios[j] < best["ratio"]:
            best = {"ratio": float(ratios[j]), "x": points[i].tolist(),
                    "s": float(sgrid[j])}
    return best
