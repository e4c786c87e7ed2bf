"""Variable-exponent modulars and Luxemburg norms on discrete fields.

The modular of a nodal field u is the mass-lumped quadrature of
|u(x)|^{p(x)}; the Luxemburg norm is the unique a > 0 with
modular(u / a) = 1, found by bisection (the map a -> modular(u/a) is
continuous and strictly decreasing for u != 0).  For constant exponents the
Luxemburg norm reduces to the classical p-norm under the same quadrature.

``check_modular_relations`` replays the standard norm/modular inequalities on
random fields and reports every violation together with a witness.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from .discretization import check_field

__all__ = [
    "ExponentField",
    "modular",
    "luxemburg_norm",
    "sobolev_modular",
    "check_modular_relations",
    "ModularRelationReport",
]


class ExponentField:
    """A variable exponent p sampled at mesh nodes, with cached extremes.

    Keeps the generating callable when known so flux laws can evaluate p at
    arbitrary points (element midpoints, random probes); otherwise midpoint
    values fall back to the element average of the nodal samples.
    """

    def __init__(self, values, fn=None, dim=None):
        values = np.asarray(values, dtype=float)
        if values.ndim != 1 or values.size == 0:
            raise ValueError("exponent samples must form a nonempty vector")
        if not np.all(np.isfinite(values)):
            raise ValueError("exponent samples must be finite")
        if np.any(values <= 1.0):
            raise ValueError("every exponent sample must exceed 1")
        self.values = values
        self.fn = fn
        self.p_min = float(values.min())
        self.p_max = float(values.max())
        if dim is not None:
            low = 2.0 * dim / (dim + 2.0)
            if self.p_min < low:
                warnings.warn(
                    f"p_min={self.p_min:.4g} is below 2N/(N+2)={low:.4g}; "
                    "the compact embedding into L^2 is not guaranteed",
                    stacklevel=2)

    @classmethod
    def from_callable(cls, fn, mesh):
        vals = np.asarray(fn(mesh.coords), dtype=float)
        vals = np.broadcast_to(vals, (mesh.n_nodes,)).copy()
        return cls(vals, fn=fn, dim=mesh.dim)

    @classmethod
    def constant(cls, value, mesh):
        value = float(value)
        return cls(np.full(mesh.n_nodes, value),
                   fn=lambda pts: np.full(np.shape(pts)[0], value),
                   dim=mesh.dim)

    def element_values(self, mesh):
        if self.fn is not None:
            vals = np.asarray(self.fn(mesh.midpoints), dtype=float)
            return np.broadcast_to(vals, (mesh.n_elems,)).copy()
        return mesh.element_means(self.values)

    def conjugate_values(self):
        return self.values / (self.values - 1.0)


def _match(mesh, u, p):
    u = check_field(mesh, u)
    if p.values.shape != (mesh.n_nodes,):
        raise ValueError("exponent field is not sampled on this mesh")
    return u


def modular(u, p, mesh):
    """Mass-lumped quadrature of |u(x)|^{p(x)}; zero iff u is identically 0."""
    u = _match(mesh, u, p)
    return float(np.dot(mesh.lumped, np.abs(u) ** p.values))


def luxemburg_norm(u, p, mesh, max_bisect=80, rel_gap=1e-12):
    """The unique a > 0 with modular(u/a) = 1; 0 for the zero field.

    The bracket is grown geometrically from 1 and then bisected for at most
    ``max_bisect`` steps or until the bracket is relatively tighter than
    ``rel_gap``.
    """
    u = _match(mesh, u, p)
    if not np.any(u):
        return 0.0

    def rho(a):
        return float(np.dot(mesh.lumped, (np.abs(u) / a) ** p.values))

    lo = hi = 1.0
    if rho(1.0) >= 1.0:
        while rho(hi) > 1.0:
            hi *= 2.0
            if hi > 1e300:
                raise ValueError("Luxemburg bracket overflow")
    else:
        while rho(lo) < 1.0:
            lo *= 0.5
            if lo < 1e-300:
                raise ValueError("Luxemburg bracket underflow")
    for _ in range(max_bisect):
        mid = 0.5 * (lo + hi)
        if hi - lo < rel_gap * mid:
            break
        if rho(mid) >= 1.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def sobolev_modular(u, p, mesh):
    """Modular of u plus the modular of its per-element gradient magnitude."""
    u = _match(mesh, u, p)
    grads = mesh.element_gradients(u)
    s = np.linalg.norm(grads, axis=1)
    pe = p.element_values(mesh)
    return modular(u, p, mesh) + float(np.dot(mesh.measures, s ** pe))


@dataclass
class ModularRelationReport:
    trials: int
    items: tuple
    checked: int
    violations: list

    @property
    def ok(self):
        return not self.violations


_DEFAULT_ITEMS = (1, 2, 3, 4, 5, 6, 11, 12, 13, 14, 20, 21, 22, 23, 24, 25)


def check_modular_relations(p, mesh, trials, seed, items=_DEFAULT_ITEMS,
                            slack=1e-10):
    """Replay the norm/modular relation suite on random nodal fields.

    Each numbered item is a classical identity or inequality tying the
    modular rho and the Luxemburg norm (unit-ball normalization, the p-/p+
    power bounds on either side of norm 1, quasi-additivity, scaling bounds
    and pointwise monotonicity).  Violations are collected with the item
    number and a witness summary; an empty list means the suite passed.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    items = tuple(items)
    violations = []
    checked = 0
    pm, pM = p.p_min, p.p_max

    def tol(*vals):
        return slack * max(1.0, *map(abs, vals))

    def record(item, lhs, rhs, witness):
        violations.append({"item": item, "lhs": lhs, "rhs": rhs,
                           "witness": witness})

    for t in range(trials):
        amp = 10.0 ** rng.uniform(-2.0, 2.0)
        u = amp * rng.standard_normal(mesh.n_nodes)
        if not np.any(u):
            u[0] = amp
        v = amp * rng.standard_normal(mesh.n_nodes)
        ru = modular(u, p, mesh)
        L = luxemburg_norm(u, p, mesh)
        witness = {"trial": t, "amp": amp, "field": u.tolist()}

        if 1 in items:
            checked += 1
            r1 = modular(u / L, p, mesh)
            if abs(r1 - 1.0) > tol(r1):
                record(1, r1, 1.0, witness)
        if 2 in items:
            checked += 1
            u1 = u / L
            L1 = luxemburg_norm(u1, p, mesh)
            r1 = modular(u1, p, mesh)
            if abs(r1 - 1.0) > tol(r1) or abs(L1 - 1.0) > tol(L1):
                record(2, r1, L1, witness)
        if 3 in items and L > 1.0 + 1e-12:
            checked += 1
            if not ru > 1.0 - tol(ru):
                record(3, ru, L, witness)
        if 4 in items and L < 1.0 - 1e-12:
            checked += 1
            if not ru < 1.0 + tol(ru):
                record(4, ru, L, witness)
        if 5 in items and L > 1.0 + 1e-12:
            checked += 1
            lo, hi = L ** pm, L ** pM
            if ru < lo - tol(lo, ru) or ru > hi + tol(hi, ru):
                record(5, ru, (lo, hi), witness)
        if 6 in items and L < 1.0 - 1e-12:
            checked += 1
            lo, hi = L ** pM, L ** pm
            if ru < lo - tol(lo, ru) or ru > hi + tol(hi, ru):
                record(6, ru, (lo, hi), witness)
        if 11 in items:
            checked += 1
            rv = modular(v, p, mesh)
            lhs = modular(u + v, p, mesh)
            rhs = 2.0 ** (pM - 1.0) * (ru + rv)
            if lhs > rhs + tol(lhs, rhs):
                record(11, lhs, rhs, witness)
        if 12 in items:
            checked += 1
            lam = rng.uniform(0.0, 1.0)
            lhs = modular(lam * u, p, mesh)
            if lhs > lam * ru + tol(lhs, ru):
                record(12, lhs, lam * ru, dict(witness, lam=lam))
        if 13 in items:
            checked += 1
            lam = rng.uniform(1.0, 10.0)
            lhs = modular(lam * u, p, mesh)
            if lhs < lam * ru - tol(lhs, ru):
                record(13, lhs, lam * ru, dict(witness, lam=lam))
        if 14 in items:
            checked += 1
            shrink = rng.uniform(0.0, 1.0, size=mesh.n_nodes)
            rv = modular(shrink * u, p, mesh)
            if rv > ru + tol(ru, rv):
                record(14, rv, ru, witness)
        if 20 in items:
            checked += 1
            lam = rng.uniform(1.0, 10.0)
            lhs = modular(lam * u, p, mesh)
            lo, hi = lam ** pm * ru, lam ** pM * ru
            if lhs < lo - tol(lo, lhs) or lhs > hi + tol(hi, lhs):
                record(20, lhs, (lo, hi), dict(witness, lam=lam))
        if 21 in items:
            checked += 1
            lam = rng.uniform(1e-3, 1.0)
            lhs = modular(lam * u, p, mesh)
            hi, lo = lam ** pm * ru, lam ** pM * ru
            if lhs < lo - tol(lo, lhs) or lhs > hi + tol(hi, lhs):
                record(21, lhs, (lo, hi), dict(witness, lam=lam))
        if 22 in items and L > 1.0 + 1e-12:
            checked += 1
            lo, hi = ru ** (1.0 / pM), ru ** (1.0 / pm)
            if L < lo - tol(lo, L) or L > hi + tol(hi, L):
                record(22, L, (lo, hi), witness)
        if 23 in items and 1e-12 < L < 1.0 - 1e-12:
            checked += 1
            hi, lo = ru ** (1.0 / pM), ru ** (1.0 / pm)
            if L < lo - tol(lo, L) or L > hi + tol(hi, L):
                record(23, L, (lo, hi), witness)
        if 24 in items:
            # |u|^q lands in the q-quotient space: its modular there is
            # exactly the original modular, since (|u|^q)^{p/q} = |u|^p
            checked += 1
            q = p.values * rng.uniform(0.3, 0.95, size=mesh.n_nodes)
            lhs = float(np.dot(mesh.lumped,
                               (np.abs(u) ** q) ** (p.values / q)))
            if not np.isfinite(lhs) or abs(lhs - ru) > tol(lhs, ru):
                record(24, lhs, ru, witness)
        if 25 in items:
            checked += 1
            if L <= 1.0 and ru > L + tol(ru, L):
                record(25, ru, L, witness)
            if L >= 1.0 and ru < L - tol(ru, L):
                record(25, ru, L, witness)

    return ModularRelationReport(trials=trials, items=items, checked=checked,
                                 violations=violations)
