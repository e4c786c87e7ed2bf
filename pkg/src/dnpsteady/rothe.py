"""Implicit time discretization of the doubly nonlinear parabolic problem.

Each step of size tau freezes the reaction and capacity terms at the previous
state on the right side and solves the stationary capacity equation with
lam = 1/tau implicitly on the left:

    -div a(x, grad u_{k+1}) + (1/tau) b(x, u_{k+1})
        = f(x, u_k) + (1/tau) b(x, u_k).

That is exactly one application of the fixed-point map with lam = 1/tau, so
every step inherits its guarantees: a unique solution that stays inside
[0, delta0] without clamping, and preservation of nodewise ordering between
trajectories.  The step is admissible only when 1/tau reaches the source's
monotonicity constant; larger steps are rejected up front.

Time steps compound, so the inner solves default to a tighter tolerance than
stand-alone solves (drift over n steps is roughly n times the per-step
solver error).
"""

from dataclasses import dataclass, field

import numpy as np

from .discretization import check_field
from .solver import SolverOptions, apply_K

__all__ = ["Trajectory", "rothe_step", "rothe_evolve"]

_STEP_OPTS = SolverOptions(tol_factor=1e-12)


@dataclass
class Trajectory:
    times: list
    states: list = field(repr=False)
    step_reports: list = field(repr=False)
    diagnostics: dict = field(default_factory=dict)

    @property
    def final(self):
        return self.states[-1]


def _check_step(src, tau):
    if not tau > 0:
        raise ValueError("tau must be positive")
    lam = 1.0 / tau
    if lam < src.lambda0 - 1e-12 * max(1.0, src.lambda0):
        raise ValueError(
            f"time step too large: 1/tau = {lam:.6g} is below the source's "
            f"monotonicity constant {src.lambda0:.6g}; reduce tau to at "
            f"most {1.0 / src.lambda0:.6g}")
    return lam


def rothe_step(mesh, op, p, src, tau, u_k, opts=None):
    """Advance one implicit step of size tau from the state u_k."""
    lam = _check_step(src, tau)
    u_k = check_field(mesh, u_k)
    opts = opts or _STEP_OPTS
    return apply_K(mesh, op, p, src, lam, u_k, opts=opts)


def rothe_evolve(mesh, op, p, src, u0, tau, n_steps, opts=None,
                 companion=None, steady_ref=None, keep_states=True):
    """March n_steps implicit steps from u0; returns a :class:`Trajectory`.

    Diagnostics collect per-step bound violations, the nodewise ordering gap
    against a second trajectory started from ``companion`` (ordering must be
    preserved step by step), and the sup distance to ``steady_ref`` when a
    reference steady state is supplied.
    """
    lam = _check_step(src, tau)
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    u = check_field(mesh, u0).copy()
    opts = opts or _STEP_OPTS
    v = check_field(mesh, companion).copy() if companion is not None else None
    ref = check_field(mesh, steady_ref) if steady_ref is not None else None

    times = [0.0]
    states = [u.copy()] if keep_states else [u.copy()]
    reports = []
    bound_violations = []
    order_gaps = [] if v is not None else None
    ref_dists = [] if ref is not None else None
    if v is not None:
        sign = 1.0 if float(np.max(u - v)) <= 0.0 else -1.0

    for k in range(n_steps):
        u, rep = apply_K(mesh, op, p, src, lam, u, opts=opts,
                         return_report=True)
        reports.append(rep.summary())
        bound_violations.append(rep.bound_violation)
        times.append((k + 1) * tau)
        if keep_states:
            states.append(u.copy())
        if v is not None:
            v = apply_K(mesh, op, p, src, lam, v, opts=opts)
            order_gaps.append(float(np.max(sign * (u - v), initial=0.0)))
        if ref is not None:
            ref_dists.append(float(np.max(np.abs(u - ref))))
    if not keep_states:
        states = [states[0], u.copy()]

    diagnostics = {"bound_violations": bound_violations}
    if order_gaps is not None:
        diagnostics["order_gaps"] = order_gaps
        diagnostics["order_preserved"] = bool(
            max(order_gaps, default=0.0) <= 1e-8)
    if ref_dists is not None:
        diagnostics["steady_distances"] = ref_dists
    return Trajectory(times=times, states=states, step_reports=reports,
                      diagnostics=diagnostics)
