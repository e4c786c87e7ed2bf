"""Reaction/capacity source systems, their extensions and validators.

A :class:`SourceSystem` bundles a reaction term ``f(x, s)`` and a strictly
increasing capacity term ``b(x, s)`` on the state interval [0, delta0],
together with the constants that make the pair usable by the solvers: a
monotonicity constant ``lambda0`` (``f + lambda0*b`` increasing in s) and a
slope ``lambda0_tilde`` in [0, lambda0) for the upper linear extension.

Outside [0, delta0] the evaluators ``bar_f``/``bar_b`` continue f and b by
affine branches chosen so that ``bar_f + lam*bar_b`` stays strictly
increasing for every lam >= lambda0; ``bar_F``/``bar_B`` are their exact
primitives.  Minimizing energies built from these extensions is what keeps
computed states inside [0, delta0] without any clamping.

Spatial evaluators are vectorized: they take points of shape (n, dim) and a
state array broadcastable against the point axis.
"""

from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

from .quadrature import piecewise_primitive_columns

__all__ = [
    "SourceSystem",
    "SourceConstructionError",
    "make_source",
    "signomial_source",
    "truncate_source",
    "eval_extended",
    "check_hypotheses",
    "membership_bounds",
    "in_admissible_band",
    "logistic_source",
    "allee_source",
    "decay_source",
    "symmetric_sine_source",
]

_LAMBDA0_FLOOR = 1.0
_S_GRID = 256


class SourceConstructionError(ValueError):
    """A sampled structural requirement of the source pair failed."""


def _as_profile(fn):
    """Normalize a scalar or callable to a vectorized (pts, s) evaluator."""
    if callable(fn):
        return fn
    value = float(fn)
    return lambda pts, s: np.broadcast_to(
        np.asarray(value, dtype=float), np.broadcast_shapes(
            np.shape(s), (np.shape(pts)[0],))).copy()


def _default_points(dim=1):
    return np.zeros((1, dim))


@dataclass(frozen=True)
class SourceSystem:
    """Reaction term f, capacity term b and their extension machinery."""

    f: Callable
    b: Callable
    delta0: float
    lambda0: float
    lambda0_tilde: float
    x_independent: bool = False
    F_closed: Optional[Callable] = None
    B_closed: Optional[Callable] = None
    db_ds: Optional[Callable] = None
    f_breakpoints: tuple = ()
    band: Optional[tuple] = None
    alpha: Optional[float] = None
    quad_tol: float = 1e-10

    def __post_init__(self):
        if not self.delta0 > 0:
            raise SourceConstructionError("delta0 must be positive")
        if not self.lambda0 > 0:
            raise SourceConstructionError("lambda0 must be positive")
        if not 0 <= self.lambda0_tilde < self.lambda0:
            raise SourceConstructionError(
                "lambda0_tilde must lie in [0, lambda0)")
        if self.band is None:
            object.__setattr__(self, "band", (0.0, self.delta0))

    # -- primitives on [0, delta0] -------------------------------------
    def prim_F(self, pts, s):
        """F(x, s) = int_0^s f(x, tau) dtau for s in [0, delta0]."""
        s = np.asarray(s, dtype=float)
        if self.F_closed is not None:
            return np.asarray(self.F_closed(pts, s), dtype=float)
        return piecewise_primitive_columns(
            lambda taus: self.f(pts, taus), s,
            breakpoints=self.f_breakpoints, tol=self.quad_tol)

    def prim_B(self, pts, s):
        """B(x, s) = int_0^s b(x, tau) dtau for s in [0, delta0]."""
        s = np.asarray(s, dtype=float)
        if self.B_closed is not None:
            return np.asarray(self.B_closed(pts, s), dtype=float)
        return piecewise_primitive_columns(
            lambda taus: self.b(pts, taus), s, tol=self.quad_tol)

    # -- extended evaluators --------------------------------------------
    def bar_f(self, pts, s):
        s = np.asarray(s, dtype=float)
        d0 = self.delta0
        sc = np.clip(s, 0.0, d0)
        mid = np.asarray(self.f(pts, sc), dtype=float)
        f0 = np.asarray(self.f(pts, np.zeros_like(s)), dtype=float)
        fd = np.asarray(self.f(pts, np.full_like(s, d0)), dtype=float)
        lo = f0 - 0.5 * self.lambda0 * s
        hi = fd - self.lambda0_tilde * (s - d0)
        return np.where(s < 0.0, lo, np.where(s > d0, hi, mid))

    def bar_b(self, pts, s):
        s = np.asarray(s, dtype=float)
        d0 = self.delta0
        sc = np.clip(s, 0.0, d0)
        mid = np.asarray(self.b(pts, sc), dtype=float)
        b0 = np.asarray(self.b(pts, np.zeros_like(s)), dtype=float)
        bd = np.asarray(self.b(pts, np.full_like(s, d0)), dtype=float)
        return np.where(s < 0.0, b0 + s, np.where(s > d0, bd + s - d0, mid))

    def bar_F(self, pts, s):
        s = np.asarray(s, dtype=float)
        d0 = self.delta0
        sc = np.clip(s, 0.0, d0)
        mid = self.prim_F(pts, sc)
        f0 = np.asarray(self.f(pts, np.zeros_like(s)), dtype=float)
        fd = np.asarray(self.f(pts, np.full_like(s, d0)), dtype=float)
        Fd = self.prim_F(pts, np.full_like(s, d0))
        lo = f0 * s - 0.25 * self.lambda0 * s ** 2
        hi = Fd + fd * (s - d0) - 0.5 * self.lambda0_tilde * (s - d0) ** 2
        return np.where(s < 0.0, lo, np.where(s > d0, hi, mid))

    def bar_B(self, pts, s):
        s = np.asarray(s, dtype=float)
        d0 = self.delta0
        sc = np.clip(s, 0.0, d0)
        mid = self.prim_B(pts, sc)
        b0 = np.asarray(self.b(pts, np.zeros_like(s)), dtype=float)
        bd = np.asarray(self.b(pts, np.full_like(s, d0)), dtype=float)
        Bd = self.prim_B(pts, np.full_like(s, d0))
        lo = b0 * s + 0.5 * s ** 2
        hi = Bd + bd * (s - d0) + 0.5 * (s - d0) ** 2
        return np.where(s < 0.0, lo, np.where(s > d0, hi, mid))

    def bar_db(self, pts, s, h=1e-7):
        """Slope of bar_b in s (closed form if registered, else centered FD)."""
        s = np.asarray(s, dtype=float)
        d0 = self.delta0
        if self.db_ds is not None:
            inner = np.asarray(self.db_ds(pts, np.clip(s, 0.0, d0)), dtype=float)
        else:
            step = h * max(1.0, d0)
            up = np.clip(s + step, 0.0, d0)
            dn = np.clip(s - step, 0.0, d0)
            with np.errstate(invalid="ignore", divide="ignore"):
                inner = np.where(up > dn,
                                 (self.b(pts, up) - self.b(pts, dn)) / (up - dn),
                                 1.0)
        return np.where((s < 0.0) | (s > d0), 1.0, inner)

    def g_lam(self, pts, s, lam):
        """Right side f + lam*b, continued outside [0, delta0] via the bars."""
        if lam < self.lambda0 - 1e-12 * max(1.0, self.lambda0):
            raise ValueError(
                f"lam={lam} is below the monotonicity constant "
                f"lambda0={self.lambda0}")
        return self.bar_f(pts, s) + lam * self.bar_b(pts, s)


def eval_extended(src, kind, pts, s, lam=None):
    """Evaluate one of the extension evaluators by name.

    kind is one of 'f_bar', 'b_bar', 'F_bar', 'B_bar', 'g_lambda'; the last
    needs ``lam >= lambda0``.
    """
    pts = np.asarray(pts, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    table = {
        "f_bar": src.bar_f,
        "b_bar": src.bar_b,
        "F_bar": src.bar_F,
        "B_bar": src.bar_B,
    }
    if kind == "g_lambda":
        if lam is None:
            raise ValueError("kind 'g_lambda' requires lam")
        return src.g_lam(pts, s, lam)
    if kind not in table:
        raise ValueError(f"unknown evaluator kind {kind!r}")
    return table[kind](pts, s)


def membership_bounds(src, pts, lam):
    """Nodal admissibility interval [lam*b(x,0), lam*b(x,delta0)] for g."""
    n = np.shape(pts)[0]
    zeros = np.zeros(n)
    tops = np.full(n, src.delta0)
    return lam * np.asarray(src.b(pts, zeros), dtype=float), \
        lam * np.asarray(src.b(pts, tops), dtype=float)


def in_admissible_band(src, pts, g, lam, tol=1e-7):
    lo, hi = membership_bounds(src, pts, lam)
    scale = np.maximum(1.0, np.abs(hi))
    return bool(np.all(g >= lo - tol * scale)
                and np.all(g <= hi + tol * scale))


def _sample_grid(src_delta0, n=_S_GRID):
    return np.linspace(0.0, src_delta0, n)


def _estimate_lambda0(f, b, delta0, pts, n_grid=_S_GRID):
    """Largest sampled slope ratio -df/db over the s-grid, with 5% headroom."""
    grid = _sample_grid(delta0, n_grid)
    fs = np.asarray(f(pts, grid[:, None]), dtype=float)
    bs = np.asarray(b(pts, grid[:, None]), dtype=float)
    fs = np.broadcast_to(fs, (n_grid, np.shape(pts)[0]))
    bs = np.broadcast_to(bs, (n_grid, np.shape(pts)[0]))
    df = np.diff(fs, axis=0)
    db = np.diff(bs, axis=0)
    if np.any(db <= 0.0):
        raise SourceConstructionError(
            "capacity term is not strictly increasing on the sample grid; "
            "no finite monotonicity constant exists")
    ratio = float(np.max(-df / db))
    if ratio <= 0.0:
        # f is nondecreasing on the grid; any positive constant works.
        return _LAMBDA0_FLOOR
    return 1.05 * ratio


def make_source(f, b, delta0, lambda0=None, *, x_independent=False,
                F=None, B=None, db_ds=None, sample_points=None,
                lambda0_tilde=None, f_breakpoints=(), alpha=None):
    """Build and validate a :class:`SourceSystem`.

    ``f`` and ``b`` are vectorized (pts, s) evaluators (scalars allowed).
    When ``lambda0`` is omitted it is estimated from slope ratios on a
    256-point s-grid over the sampled x so the combined term f + lambda0*b
    is increasing at grid level.  Closed-form primitives F, B (with value 0
    at s=0) and the capacity slope db_ds may be registered; without them the
    primitives fall back to adaptive Simpson quadrature.
    """
    f = _as_profile(f)
    b = _as_profile(b)
    delta0 = float(delta0)
    if not delta0 > 0:
        raise SourceConstructionError("delta0 must be positive")
    pts = sample_points if sample_points is not None else _default_points()
    pts = np.asarray(pts, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]

    n = pts.shape[0]
    f0 = np.broadcast_to(np.asarray(f(pts, np.zeros(n)), dtype=float), (n,))
    fd = np.broadcast_to(np.asarray(f(pts, np.full(n, delta0)), dtype=float), (n,))
    if np.any(f0 < -1e-12):
        i = int(np.argmin(f0))
        raise SourceConstructionError(
            f"confinement sign check failed: f(x, 0) = {f0[i]:.3g} < 0 "
            f"at sample point {pts[i]}")
    if np.any(fd > 1e-12):
        i = int(np.argmax(fd))
        raise SourceConstructionError(
            f"confinement sign check failed: f(x, delta0) = {fd[i]:.3g} > 0 "
            f"at sample point {pts[i]}")

    est = _estimate_lambda0(f, b, delta0, pts)
    if lambda0 is None:
        lambda0 = est
    else:
        lambda0 = float(lambda0)
        grid = _sample_grid(delta0)
        comb = (np.asarray(f(pts, grid[:, None]), dtype=float)
                + lambda0 * np.asarray(b(pts, grid[:, None]), dtype=float))
        comb = np.broadcast_to(comb, (len(grid), n))
        if np.any(np.diff(comb, axis=0) <= 0.0):
            raise SourceConstructionError(
                f"f + lambda0*b is not increasing on the sample grid for "
                f"lambda0={lambda0}; the estimate {est:.6g} would work")
    if lambda0_tilde is None:
        lambda0_tilde = 0.5 * lambda0
        if alpha is not None:
            # the upper-extension slope must reach -(alpha-1) f(x,delta0)
            # / delta0 for the alpha-power convexity statements to apply;
            # it still has to stay below lambda0
            required = float(np.max(-(alpha - 1.0) * fd / delta0))
            lambda0_tilde = max(lambda0_tilde,
                                min(required, 0.99 * lambda0))

    return SourceSystem(
        f=f, b=b, delta0=delta0, lambda0=lambda0,
        lambda0_tilde=lambda0_tilde, x_independent=x_independent,
        F_closed=F, B_closed=B, db_ds=db_ds,
        f_breakpoints=tuple(f_breakpoints), alpha=alpha)


def truncate_source(src, eps, delta, sample_points=None):
    """Restrict a source to the band [eps, delta] inside [0, delta0].

    The reaction term is frozen at its band-edge values outside the band
    (which keeps it continuous and preserves the confinement signs), the
    capacity term is unchanged, and the admissible band is recorded so the
    steady-state machinery can confine iterates to it.  Requires
    f(x, eps) >= 0 and f(x, delta) <= 0 on the sample points.
    """
    eps = float(eps)
    delta = float(delta)
    if not (0.0 <= eps <= delta <= src.delta0):
        raise ValueError(
            f"band [{eps}, {delta}] does not sit inside [0, {src.delta0}]")
    pts = sample_points if sample_points is not None else _default_points()
    pts = np.asarray(pts, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    n = pts.shape[0]
    fe = np.broadcast_to(np.asarray(src.f(pts, np.full(n, eps)), dtype=float), (n,))
    fdl = np.broadcast_to(np.asarray(src.f(pts, np.full(n, delta)), dtype=float), (n,))
    if np.any(fe < -1e-12):
        i = int(np.argmin(fe))
        raise ValueError(
            f"band lower endpoint rejected: f(x, {eps}) = {fe[i]:.3g} < 0 "
            f"at sample point {pts[i]}")
    if np.any(fdl > 1e-12):
        i = int(np.argmax(fdl))
        raise ValueError(
            f"band upper endpoint rejected: f(x, {delta}) = {fdl[i]:.3g} > 0 "
            f"at sample point {pts[i]}")
    if eps == 0.0 and delta == src.delta0:
        return src

    orig_f = src.f

    def f_trunc(pts_, s):
        return orig_f(pts_, np.clip(s, eps, delta))

    F_trunc = None
    if src.F_closed is not None:
        orig_F = src.F_closed

        def F_trunc(pts_, s):  # noqa: F811 - deliberate rebinding
            s = np.asarray(s, dtype=float)
            sc = np.clip(s, eps, delta)
            low = orig_f(pts_, np.full_like(s, eps)) * np.minimum(s, eps)
            mid = orig_F(pts_, sc) - orig_F(pts_, np.full_like(s, eps))
            hi = orig_f(pts_, np.full_like(s, delta)) * np.maximum(s - delta, 0.0)
            return low + np.where(s > eps, mid, 0.0) + hi

    breaks = set(src.f_breakpoints)
    if eps > 0.0:
        breaks.add(eps)
    if delta < src.delta0:
        breaks.add(delta)
    lam_est = _estimate_lambda0(f_trunc, src.b, src.delta0, pts)
    lambda0 = max(src.lambda0, lam_est)
    return replace(src, f=f_trunc, F_closed=F_trunc,
                   f_breakpoints=tuple(sorted(breaks)),
                   lambda0=lambda0, lambda0_tilde=0.5 * lambda0,
                   band=(eps, delta))


def signomial_source(a_coefs, b_coefs, c, q_exps, r_exps, alpha, b,
                     delta0_hint=None, sample_points=None):
    """Source built from signed power terms with spatially varying data.

        f(x, s) = sum_i a_i(x) s^{q_i(x)} - sum_j b_j(x) s^{r_j(x)} + c(x)

    Requirements (checked on sample points): all coefficients nonnegative
    with the leading ones bounded away from zero, every q below alpha-1 and
    every r above it for some alpha in (1, 2), and positive exponent gaps.
    Returns ``(source, delta0, eps0)`` where delta0 makes f(x, delta) < 0
    for all sampled x (found by scanning up from the coefficient-based
    bound) and f(x, eps) > 0 for all eps in (0, eps0].
    """
    alpha = float(alpha)
    if not 1.0 < alpha < 2.0:
        raise SourceConstructionError("alpha must lie in (1, 2)")
    if not a_coefs or not b_coefs:
        raise SourceConstructionError(
            "need at least one positive and one negative power term")
    a_fns = [_as_profile(a) for a in a_coefs]
    b_fns = [_as_profile(bj) for bj in b_coefs]
    c_fn = _as_profile(c)
    q_fns = [_as_profile(q) for q in q_exps]
    r_fns = [_as_profile(r) for r in r_exps]
    if len(a_fns) != len(q_fns) or len(b_fns) != len(r_fns):
        raise SourceConstructionError(
            "coefficient and exponent lists must pair up")

    pts = sample_points if sample_points is not None else _default_points()
    pts = np.asarray(pts, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    n = pts.shape[0]
    dummy = np.zeros(n)

    def sampled(fn):
        return np.broadcast_to(np.asarray(fn(pts, dummy), dtype=float), (n,))

    a_vals = [sampled(fn) for fn in a_fns]
    b_vals = [sampled(fn) for fn in b_fns]
    c_vals = sampled(c_fn)
    q_vals = [sampled(fn) for fn in q_fns]
    r_vals = [sampled(fn) for fn in r_fns]

    for name, vals in (("a", a_vals), ("b", b_vals)):
        for k, v in enumerate(vals):
            if np.any(v < 0):
                raise SourceConstructionError(
                    f"coefficient {name}_{k + 1} takes negative values")
    if np.any(c_vals < 0):
        raise SourceConstructionError("constant term c takes negative values")
    a0 = float(np.min(a_vals[0]))
    b0 = float(np.min(b_vals[0]))
    if a0 <= 0 or b0 <= 0:
        raise SourceConstructionError(
            "leading coefficients must be bounded away from zero")
    for k, q in enumerate(q_vals):
        if np.any(q <= 0) or np.any(q >= alpha - 1.0):
            raise SourceConstructionError(
                f"exponent q_{k + 1} must lie in (0, alpha-1)")
    for k, r in enumerate(r_vals):
        if np.any(r <= alpha - 1.0):
            raise SourceConstructionError(
                f"exponent r_{k + 1} must exceed alpha-1")
    gaps = [np.min(r_vals[0] - q) for q in q_vals]
    gaps += [np.min(r - q_vals[0]) for r in r_vals]
    p0 = float(min(gaps))
    if p0 <= 0:
        raise SourceConstructionError("exponent gaps must be positive")

    def f(pts_, s):
        s = np.asarray(s, dtype=float)
        total = np.asarray(c_fn(pts_, s), dtype=float).astype(float)
        for a_fn, q_fn in zip(a_fns, q_fns):
            total = total + a_fn(pts_, s) * np.power(s, q_fn(pts_, s))
        for b_fn, r_fn in zip(b_fns, r_fns):
            total = total - b_fn(pts_, s) * np.power(s, r_fn(pts_, s))
        return total

    def F(pts_, s):
        s = np.asarray(s, dtype=float)
        total = np.asarray(c_fn(pts_, s), dtype=float) * s
        for a_fn, q_fn in zip(a_fns, q_fns):
            q1 = q_fn(pts_, s) + 1.0
            total = total + a_fn(pts_, s) * np.power(s, q1) / q1
        for b_fn, r_fn in zip(b_fns, r_fns):
            r1 = r_fn(pts_, s) + 1.0
            total = total - b_fn(pts_, s) * np.power(s, r1) / r1
        return total

    n_terms, m_terms = len(a_fns), len(b_fns)
    M_a = float(max(np.max(v) for v in a_vals))
    M_b = float(max(np.max(v) for v in b_vals))
    delta = max((n_terms * M_a / b0) ** (1.0 / p0), 1.0)
    if delta0_hint is not None:
        delta = max(delta, float(delta0_hint))
    for _ in range(400):
        if np.max(f(pts, np.full(n, delta))) < 0.0:
            break
        delta *= 1.05
    else:
        raise SourceConstructionError(
            "could not locate a capacity level with negative reaction")
    delta0 = delta

    eps0 = 0.999 * min((a0 / (m_terms * M_b)) ** (1.0 / p0), 1.0)
    eps0 = min(eps0, 0.999 * delta0)
    for _ in range(200):
        if np.min(f(pts, np.full(n, eps0))) > 0.0:
            break
        eps0 *= 0.5
    else:
        raise SourceConstructionError(
            "could not locate a positive-reaction level near zero")

    x_indep = all(not callable(v) for v in
                  list(a_coefs) + list(b_coefs) + [c] + list(q_exps) + list(r_exps))
    src = make_source(f, b, delta0, x_independent=x_indep, F=F,
                      sample_points=pts, alpha=alpha)
    return src, delta0, eps0


@dataclass
class HypothesisReport:
    trials: int
    checks: dict
    violations: list

    @property
    def ok(self):
        return not self.violations


def check_hypotheses(src, trials, seed, sample_points=None, slack=1e-10):
    """Sampled structural checks of a source system.

    Verifies on random states: the two-sided bound
    lambda0*(b(x,0)-b(x,s)) <= f(x,s) <= lambda0*(b(x,delta0)-b(x,s)), the
    derived bound |f| <= lambda0*(b(x,delta0)-b(x,0)), strict monotonicity
    of bar_f + lam*bar_b across the branch joints for lam in {lambda0,
    2*lambda0}, the primitive upper bound for bar_F, and (when the source
    declares an alpha) the decrease of f(x, s^(1/alpha)) / s^((alpha-1)/alpha).
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    pts = sample_points if sample_points is not None else _default_points()
    pts = np.asarray(pts, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    n = pts.shape[0]
    d0, lam0, lam0t = src.delta0, src.lambda0, src.lambda0_tilde
    violations = []
    checks = {
        "two_sided_bound": 0,
        "abs_bound": 0,
        "combined_monotone": 0,
        "primitive_upper_bound": 0,
        "source_ratio_decreasing": 0,
    }

    b_lo = np.asarray(src.b(pts, np.zeros(n)), dtype=float)
    b_hi = np.asarray(src.b(pts, np.full(n, d0)), dtype=float)
    f0 = np.asarray(src.f(pts, np.zeros(n)), dtype=float)
    fd = np.asarray(src.f(pts, np.full(n, d0)), dtype=float)
    fbound = lam0 * (b_hi - b_lo)
    scale = max(1.0, float(np.max(np.abs(fbound))))

    for _ in range(trials):
        s = rng.uniform(0.0, d0, size=n)
        fs = np.asarray(src.f(pts, s), dtype=float)
        bs = np.asarray(src.b(pts, s), dtype=float)
        checks["two_sided_bound"] += 1
        if np.any(fs < lam0 * (b_lo - bs) - slack * scale) or \
                np.any(fs > lam0 * (b_hi - bs) + slack * scale):
            violations.append(("two_sided_bound", float(s[0])))
        checks["abs_bound"] += 1
        if np.any(np.abs(fs) > fbound + slack * scale):
            violations.append(("abs_bound", float(s[0])))

        s1 = rng.uniform(-d0, 2.0 * d0, size=n)
        s2 = s1 + rng.uniform(1e-3 * d0, 0.5 * d0, size=n)
        checks["combined_monotone"] += 1
        for lam in (lam0, 2.0 * lam0):
            g1 = src.bar_f(pts, s1) + lam * src.bar_b(pts, s1)
            g2 = src.bar_f(pts, s2) + lam * src.bar_b(pts, s2)
            # gaps are material (>= 1e-3 delta0), so strictness is checkable
            if np.any(g2 <= g1):
                violations.append(("combined_monotone", lam))

        checks["primitive_upper_bound"] += 1
        sF = rng.uniform(-2.0 * d0, 3.0 * d0, size=n)
        cap = f0 ** 2 / lam0 + lam0 * d0 * (b_hi - b_lo)
        cap = cap + (fd ** 2 / (2.0 * lam0t) if lam0t > 0 else 0.0)
        if np.any(src.bar_F(pts, sF) > cap + slack * scale * max(1.0, d0)):
            violations.append(("primitive_upper_bound", float(sF[0])))

    if src.alpha is not None:
        a = src.alpha
        grid = np.geomspace(1e-6, d0 ** a, 64)
        roots = grid ** (1.0 / a)
        ratios = np.asarray(src.f(pts, roots[:, None]), dtype=float) \
            / (grid[:, None] ** ((a - 1.0) / a))
        checks["source_ratio_decreasing"] += 1
        if np.any(np.diff(ratios, axis=0) > slack * scale):
            violations.append(("source_ratio_decreasing", a))

    return HypothesisReport(trials=trials, checks=checks, violations=violations)


# -- stock sources ------------------------------------------------------

def logistic_source(sample_points=None):
    """f(s) = s(1-s) with linear capacity on [0, 1]."""
    return make_source(
        f=lambda pts, s: s * (1.0 - s),
        b=lambda pts, s: s,
        delta0=1.0,
        x_independent=True,
        F=lambda pts, s: s ** 2 / 2.0 - s ** 3 / 3.0,
        B=lambda pts, s: s ** 2 / 2.0,
        db_ds=lambda pts, s: np.ones_like(np.asarray(s, dtype=float)),
        sample_points=sample_points)


def allee_source(threshold=0.25, sample_points=None):
    """f(s) = s(s-threshold)(1-s): negative below the viability threshold."""
    t = float(threshold)
    if not 0.0 < t < 1.0:
        raise ValueError("threshold must lie in (0, 1)")

    def f(pts, s):
        return s * (s - t) * (1.0 - s)

    def F(pts, s):
        return -s ** 4 / 4.0 + (1.0 + t) * s ** 3 / 3.0 - t * s ** 2 / 2.0

    return make_source(
        f=f, b=lambda pts, s: s, delta0=1.0, x_independent=True,
        F=F, B=lambda pts, s: s ** 2 / 2.0,
        db_ds=lambda pts, s: np.ones_like(np.asarray(s, dtype=float)),
        sample_points=sample_points)


def decay_source(level=0.25, sample_points=None):
    """Strictly decreasing f(s) = level - s; unique steady state at level."""
    lv = float(level)
    if not 0.0 < lv < 1.0:
        raise ValueError("level must lie in (0, 1)")
    return make_source(
        f=lambda pts, s: lv - s,
        b=lambda pts, s: s,
        delta0=1.0,
        x_independent=True,
        F=lambda pts, s: lv * s - s ** 2 / 2.0,
        B=lambda pts, s: s ** 2 / 2.0,
        db_ds=lambda pts, s: np.ones_like(np.asarray(s, dtype=float)),
        sample_points=sample_points)


def symmetric_sine_source(sample_points=None):
    """f(s) = sin(2 pi s) on [0, 1]; odd about the midpoint s = 1/2."""
    two_pi = 2.0 * np.pi
    return make_source(
        f=lambda pts, s: np.sin(two_pi * s),
        b=lambda pts, s: s,
        delta0=1.0,
        x_independent=True,
        F=lambda pts, s: (1.0 - np.cos(two_pi * s)) / two_pi,
        B=lambda pts, s: s ** 2 / 2.0,
        db_ds=lambda pts, s: np.ones_like(np.asarray(s, dtype=float)),
        sample_points=sample_points)
