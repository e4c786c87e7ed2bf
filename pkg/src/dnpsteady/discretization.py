"""Meshes, nodal fields and energy assembly with natural zero-flux boundaries.

Fields are plain numpy arrays of nodal values on piecewise-linear elements
(segments in 1D, triangles on a structured rectangle), so every field has a
constant gradient per element.  Zero-order terms use the mass-lumped nodal
rule and gradient terms use per-element midpoint values; the assembled energy
is then a smooth function of the nodal values and ``assemble_energy_gradient``
returns its exact derivative.  The zero-flux boundary condition is natural in
this formulation: no boundary term is ever assembled, and testing with the
constant hat sum annihilates the flux block exactly.

All reductions run in a fixed order (plain numpy sums / ``np.add.at``), so
repeated runs are bit-identical.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .sources import SourceSystem

__all__ = [
    "Mesh",
    "build_mesh",
    "interval_mesh",
    "rectangle_mesh",
    "constant_field",
    "check_field",
    "integrate",
    "assemble_energy_gradient",
    "assemble_hessian",
    "flux_gradient",
]


@dataclass(frozen=True)
class Mesh:
    """Simplicial mesh of an interval or a rectangle.

    coords       (n_nodes, dim) node coordinates
    elems        (n_elems, dim+1) node indices per element
    measures     element lengths / areas
    shape_grads  (n_elems, dim+1, dim) constant gradients of the local hats
    lumped       (n_nodes,) mass-lumped node weights, summing to the volume
    midpoints    (n_elems, dim) element centroids
    """

    dim: int
    coords: np.ndarray
    elems: np.ndarray
    measures: np.ndarray = field(repr=False)
    shape_grads: np.ndarray = field(repr=False)
    lumped: np.ndarray = field(repr=False)
    midpoints: np.ndarray = field(repr=False)
    volume: float = 0.0

    @property
    def n_nodes(self):
        return self.coords.shape[0]

    @property
    def n_elems(self):
        return self.elems.shape[0]

    def element_gradients(self, u):
        """Constant gradient of the P1 interpolant of u on each element."""
        u = check_field(self, u)
        return np.einsum("ead,ea->ed", self.shape_grads, u[self.elems])

    def element_means(self, nodal):
        """Average of a nodal array over each element (P1 value at centroid)."""
        nodal = np.asarray(nodal, dtype=float)
        return nodal[self.elems].mean(axis=1)


def interval_mesh(n, length):
    """Uniform mesh of [0, length] with n segments."""
    n = int(n)
    if n < 2:
        raise ValueError("interval mesh needs at least 2 segments")
    if not length > 0:
        raise ValueError("interval length must be positive")
    coords = np.linspace(0.0, float(length), n + 1)[:, None]
    elems = np.column_stack([np.arange(n), np.arange(1, n + 1)])
    h = float(length) / n
    measures = np.full(n, h)
    shape_grads = np.empty((n, 2, 1))
    shape_grads[:, 0, 0] = -1.0 / h
    shape_grads[:, 1, 0] = 1.0 / h
    return _finish_mesh(1, coords, elems, measures, shape_grads)


def rectangle_mesh(nx, ny, lx, ly):
    """Structured triangulation of [0,lx]x[0,ly]; each cell split in two."""
    nx, ny = int(nx), int(ny)
    if nx < 2 or ny < 2:
        raise ValueError("rectangle mesh needs at least 2 cells per side")
    if not (lx > 0 and ly > 0):
        raise ValueError("rectangle side lengths must be positive")
    xs = np.linspace(0.0, float(lx), nx + 1)
    ys = np.linspace(0.0, float(ly), ny + 1)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    coords = np.column_stack([X.ravel(), Y.ravel()])

    def nid(i, j):
        return i * (ny + 1) + j

    elems = []
    for i in range(nx):
        for j in range(ny):
            v00, v10 = nid(i, j), nid(i + 1, j)
            v01, v11 = nid(i, j + 1), nid(i + 1, j + 1)
            elems.append((v00, v10, v11))
            elems.append((v00, v11, v01))
    elems = np.asarray(elems, dtype=int)

    p0, p1, p2 = (coords[elems[:, k]] for k in range(3))
    det = ((p1[:, 0] - p0[:, 0]) * (p2[:, 1] - p0[:, 1])
           - (p2[:, 0] - p0[:, 0]) * (p1[:, 1] - p0[:, 1]))
    measures = 0.5 * np.abs(det)
    # gradient of the hat at vertex a: rotated opposite edge over 2*area
    shape_grads = np.empty((len(elems), 3, 2))
    for a, (bb, cc) in enumerate([(1, 2), (2, 0), (0, 1)]):
        pb, pc = coords[elems[:, bb]], coords[elems[:, cc]]
        shape_grads[:, a, 0] = (pb[:, 1] - pc[:, 1]) / det
        shape_grads[:, a, 1] = (pc[:, 0] - pb[:, 0]) / det
    return _finish_mesh(2, coords, elems, measures, shape_grads)


def _finish_mesh(dim, coords, elems, measures, shape_grads):
    if np.any(measures <= 0):
        raise ValueError("degenerate element with nonpositive measure")
    lumped = np.zeros(coords.shape[0])
    np.add.at(lumped, elems.ravel(),
              np.repeat(measures / elems.shape[1], elems.shape[1]))
    midpoints = coords[elems].mean(axis=1)
    volume = float(measures.sum())
    _check_connected(coords.shape[0], elems)
    return Mesh(dim=dim, coords=coords, elems=elems, measures=measures,
                shape_grads=shape_grads, lumped=lumped, midpoints=midpoints,
                volume=volume)


def _check_connected(n_nodes, elems):
    neighbor = [[] for _ in range(n_nodes)]
    for row in elems:
        for a in row:
            for b in row:
                if a != b:
                    neighbor[int(a)].append(int(b))
    seen = np.zeros(n_nodes, dtype=bool)
    stack = [0]
    seen[0] = True
    while stack:
        for b in neighbor[stack.pop()]:
            if not seen[b]:
                seen[b] = True
                stack.append(b)
    if not seen.all():
        raise ValueError("mesh is not connected")


def build_mesh(spec):
    """Build a mesh from a plain dict, e.g. {'kind': 'interval', 'n': 64, ...}."""
    kind = spec.get("kind")
    if kind == "interval":
        return interval_mesh(spec["n"], spec["length"])
    if kind == "rectangle":
        return rectangle_mesh(spec["nx"], spec["ny"], spec["lx"], spec["ly"])
    raise ValueError(f"unknown mesh kind {kind!r}")


def constant_field(mesh, value):
    return np.full(mesh.n_nodes, float(value))


def check_field(mesh, u):
    u = np.asarray(u, dtype=float)
    if u.shape != (mesh.n_nodes,):
        raise ValueError(
            f"field has shape {u.shape}, expected ({mesh.n_nodes},)")
    if not np.all(np.isfinite(u)):
        raise ValueError("field contains non-finite values")
    return u


def integrate(mesh, nodal):
    """Mass-lumped integral of a nodal field; exact for constants."""
    nodal = check_field(mesh, nodal)
    return float(np.dot(mesh.lumped, nodal))


def _signed_power(V, pvals):
    """sign(V) * |V|^(p-1), with value 0 at V = 0 for every p > 1."""
    return np.sign(V) * np.abs(V) ** (pvals - 1.0)


def _nodal_exponents(mesh, p):
    pvals = np.asarray(p.values, dtype=float)
    if pvals.shape != (mesh.n_nodes,):
        raise ValueError("exponent field is not sampled on this mesh")
    return pvals


def flux_gradient(mesh, op, V):
    """Assembled flux block: row i holds the diffusion term tested with hat i."""
    V = check_field(mesh, V)
    grads = mesh.element_gradients(V)
    s = np.linalg.norm(grads, axis=1)
    coef = mesh.measures * op.phi(mesh.midpoints, s)
    with np.errstate(invalid="ignore", divide="ignore"):
        unit = np.where(s[:, None] > 0.0, grads / s[:, None], 0.0)
    contrib = coef[:, None] * np.einsum("ed,ead->ea", unit, mesh.shape_grads)
    out = np.zeros(mesh.n_nodes)
    np.add.at(out, mesh.elems.ravel(), contrib.ravel())
    return out


def assemble_energy_gradient(mesh, op, src, lam, eps, V, p, g=None):
    """Discrete energy and its exact nodal gradient.

    With nodal right-side data ``g`` this is the auxiliary-problem energy

        sum_e m_e A(x_e, |grad V|_e) + lam sum_i w_i Bbar(x_i, V_i)
        + eps sum_i w_i |V_i|^{p_i}/p_i - sum_i w_i g_i V_i,

    whose critical points are the discrete weak solutions of the capacity
    equation with zero Neumann flux.  Without ``g`` the capacity/right-side
    pair is replaced by ``- sum_i w_i Fbar(x_i, V_i)`` (the reaction energy
    whose critical points are steady states); ``lam`` is ignored then.
    """
    V = check_field(mesh, V)
    if lam < 0:
        raise ValueError("lam must be nonnegative")
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    if not isinstance(src, SourceSystem):
        raise TypeError("src must be a SourceSystem")
    pvals = _nodal_exponents(mesh, p)
    w = mesh.lumped

    grads = mesh.element_gradients(V)
    s = np.linalg.norm(grads, axis=1)
    energy = float(np.dot(mesh.measures, op.potential(mesh.midpoints, s)))
    grad = flux_gradient(mesh, op, V)

    if eps > 0.0:
        energy += eps * float(np.dot(w, np.abs(V) ** pvals / pvals))
        grad = grad + eps * w * _signed_power(V, pvals)

    if g is not None:
        g = check_field(mesh, g)
        energy += lam * float(np.dot(w, src.bar_B(mesh.coords, V)))
        energy -= float(np.dot(w, g * V))
        grad = grad + lam * w * src.bar_b(mesh.coords, V) - w * g
    else:
        if lam != 0.0:
            raise ValueError(
                "reaction mode has no capacity term; pass lam=0")
        energy -= float(np.dot(w, src.bar_F(mesh.coords, V)))
        grad = grad - w * src.bar_f(mesh.coords, V)
    return energy, grad


def assemble_hessian(mesh, op, src, lam, eps, V, p, s_floor=1e-12):
    """Sparse Hessian of the auxiliary-problem energy at V.

    The flux block uses the radial derivative of the flux law (closed form
    when the operator provides one, centered differences otherwise); zero
    gradients are floored at ``s_floor`` so the block stays finite.  The
    capacity and perturbation terms are diagonal thanks to mass lumping.
    The result backs damped Newton steps; the line search works on the exact
    energy, so flooring and differencing here cannot corrupt the solve.
    """
    V = check_field(mesh, V)
    pvals = _nodal_exponents(mesh, p)
    w = mesh.lumped
    mids = mesh.midpoints

    grads = mesh.element_gradients(V)
    s = np.linalg.norm(grads, axis=1)
    s_safe = np.maximum(s, s_floor)
    psi = op.phi(mids, s_safe) / s_safe
    if op.dphi_ds is not None:
        dphi = op.dphi_ds(mids, s_safe)
    else:
        h = 1e-7 * (1.0 + s_safe)
        lo = np.maximum(s_safe - h, 0.0)
        dphi = (op.phi(mids, s_safe + h) - op.phi(mids, lo)) / (s_safe + h - lo)
    with np.errstate(invalid="ignore", divide="ignore"):
        unit = np.where(s[:, None] > 0.0, grads / s_safe[:, None], 0.0)

    n_loc = mesh.elems.shape[1]
    gg = np.einsum("ead,ebd->eab", mesh.shape_grads, mesh.shape_grads)
    ug = np.einsum("ed,ead->ea", unit, mesh.shape_grads)
    aniso = np.einsum("ea,eb->eab", ug, ug)
    loc = mesh.measures[:, None, None] * (
        psi[:, None, None] * gg + (dphi - psi)[:, None, None] * aniso)

    rows = np.repeat(mesh.elems, n_loc, axis=1).ravel()
    cols = np.tile(mesh.elems, (1, n_loc)).ravel()
    H = sp.coo_matrix((loc.ravel(), (rows, cols)),
                      shape=(mesh.n_nodes, mesh.n_nodes)).tocsr()

    diag = lam * w * src.bar_db(mesh.coords, V)
    if eps > 0.0:
        vsafe = np.maximum(np.abs(V), 1e-8)
        diag = diag + eps * w * (pvals - 1.0) * vsafe ** (pvals - 2.0)
    return H + sp.diags(diag)
