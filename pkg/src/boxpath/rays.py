"""Analytic distributions for paths entering through a face interior.

Entry points are uniform on the entry face and directions are drawn from
the component-uniform law (each direction component uniform on [-1, 1],
the entry-axis component forced inward), the model whose exit laws admit
the closed quadrature kernels below.  All results are expressed in the
canonical frame of a face-pair class (entry on x_j = 0; opposing exit on
x_j = X_j with coordinates (x_i, x_k); adjacent exit on x_k = 0 with
coordinates (x_i, x_j), the second being the elevation above the shared
edge).

Derivation sketch.  With inward slope s = direction_j in (0, 1], the
plane-hit coordinate along a transverse axis c is x_c + (X_j / s) * t_c
with x_c uniform on (0, X_c) and t_c uniform on (-1, 1), whose density is
the uniform-uniform overlap kernel `_overlap`.  By box convexity, hitting
the opposing plane inside the face rectangle is exactly the exit event,
so face-restricted plane-hit densities are exit densities.  Joint
(length, location) densities follow from a 5-variable change of variables
onto (n, exit coordinates, auxiliaries) with the radial integral closed;
the remaining angular integrals below are bounded and regular.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .density import GridDensity1D, GridDensity2D, GridDensity3D, convolve_sum, ratio_density, uniform_density
from .geometry import BoxDims, IndexTriple, PairKind

__all__ = [
    "FaceJointPdf",
    "FacePdf",
    "exit_coordinate_marginal_opposing",
    "exit_pdf_adjacent",
    "exit_pdf_opposing",
    "forward_adjacent",
    "forward_opposing",
    "jacobian_adjacent",
    "jacobian_opposing",
    "joint_pdf_adjacent",
    "joint_pdf_opposing",
    "length_marginal_adjacent",
    "length_marginal_opposing",
]


@dataclass(frozen=True)
class FacePdf:
    """Exit-location density on one exit face, conditional on that exit.

    `density` integrates to one over the face; `mass` is the probability
    of exiting through the face given entry through the class entry face.
    """

    kind: PairKind
    indices: IndexTriple
    density: GridDensity2D
    mass: float


@dataclass(frozen=True)
class FaceJointPdf:
    """Joint (length, exit-location) density for one face-pair class.

    `density` integrates to one; `mass` is the face-exit probability, so
    the physical sub-density is mass * density.
    """

    kind: PairKind
    indices: IndexTriple
    density: GridDensity3D
    mass: float


def _dims(box: BoxDims, indices: IndexTriple) -> tuple[float, float, float]:
    return box.dim(indices.i), box.dim(indices.j), box.dim(indices.k)


def _overlap(u: np.ndarray, alpha: np.ndarray, width: float) -> np.ndarray:
    """Density of x + alpha*t at u, for x ~ U(0, width), t ~ U(-1, 1)."""
    hi = np.minimum(1.0, u / alpha)
    lo = np.maximum(-1.0, (u - width) / alpha)
    return 0.5 * np.clip(hi - lo, 0.0, None) / width


def _midpoints(n: int) -> np.ndarray:
    return (np.arange(n) + 0.5) / n


# ---------------------------------------------------------------------------
# Exit-location densities (length integrated out).


def exit_pdf_opposing(
    box: BoxDims,
    indices: IndexTriple,
    a_nodes: int = 129,
    b_nodes: int = 129,
    slope_nodes: int = 2048,
) -> FacePdf:
    """Exit-location density on the opposing face x_j = X_j.

    f(a, b) = int_0^1 ds k_i(a; X_j / s) k_k(b; X_j / s), with k the
    uniform-uniform overlap kernel; the face-restricted integral is the
    face-exit probability.
    """
    box = BoxDims.from_any(box)
    xi, xj, xk = _dims(box, indices)
    s = _midpoints(slope_nodes)
    alpha = xj / s
    a = np.linspace(0.0, xi, a_nodes)
    b = np.linspace(0.0, xk, b_nodes)
    ga = _overlap(a[:, None], alpha[None, :], xi)
    gb = _overlap(b[:, None], alpha[None, :], xk)
    vals = np.einsum("as,bs->ab", ga, gb, optimize=True) / slope_nodes
    dens = GridDensity2D(((0.0, xi), (0.0, xk)), vals, (f"x{indices.i}", f"x{indices.k}"))
    mass = dens.integral()
    return FacePdf(PairKind.OPPOSING, indices, dens.normalized(force=True), mass)


def exit_pdf_adjacent(
    box: BoxDims,
    indices: IndexTriple,
    a_nodes: int = 129,
    e_nodes: int = 129,
    slope_nodes: int = 2048,
    edge_subnodes: int = 33,
) -> FacePdf:
    """Exit-location density on the adjacent face x_k = 0.

    f(a, e) = int_0^1 ds min(1, (X_k s / e)^2) / (4 X_k s) k_i(a; e / s),
    where e is the elevation above the shared edge.  The density has an
    integrable logarithmic spike at e = 0; the e = 0 node is set by exact
    first-cell mass matching so grid integration conserves mass.
    """
    box = BoxDims.from_any(box)
    xi, xj, xk = _dims(box, indices)
    s = _midpoints(slope_nodes)
    a = np.linspace(0.0, xi, a_nodes)
    e = np.linspace(0.0, xj, e_nodes)

    def rows(evals: np.ndarray) -> np.ndarray:
        out = np.empty((a_nodes, evals.size))
        for col, ev in enumerate(evals):
            c = np.minimum(1.0, (xk * s / ev) ** 2) / (4.0 * xk * s) / slope_nodes
            ga = _overlap(a[:, None], (ev / s)[None, :], xi)
            out[:, col] = ga @ c
        return out

    vals = np.empty((a_nodes, e_nodes))
    vals[:, 1:] = rows(e[1:])
    h = e[1]
    # First-cell mass per a-column from a fine sub-grid, then solve for the
    # e = 0 node value that makes the trapezoid first-cell mass exact.
    esub = h * _midpoints(edge_subnodes)
    cell_mass = rows(esub).mean(axis=1) * h
    vals[:, 0] = np.maximum(0.0, 2.0 * (cell_mass - vals[:, 1] * h / 2.0) / h)
    dens = GridDensity2D(((0.0, xi), (0.0, xj)), vals, (f"x{indices.i}", f"x{indices.j}"))
    mass = dens.integral()
    return FacePdf(PairKind.ADJACENT, indices, dens.normalized(force=True), mass)


def exit_coordinate_marginal_opposing(
    box: BoxDims,
    indices: IndexTriple,
    nodes: int = 513,
    method: str = "chain",
    slope_nodes: int = 2048,
) -> GridDensity1D:
    """Marginal plane-hit density of the opposing-face coordinate x_i.

    `method="chain"` composes toolkit transforms: the slope ratio t_i/t_j
    of two direction components, scaled by X_j, summed with the uniform
    entry coordinate.  `method="direct"` integrates the overlap kernel
    over the slope.  Both are exact up to quadrature and agree; the chain
    form exercises the ratio/convolution toolkit on the production path.
    """
    box = BoxDims.from_any(box)
    xi, xj, _ = _dims(box, indices)
    if method == "direct":
        s = _midpoints(slope_nodes)
        a = np.linspace(0.0, xi, nodes)
        vals = _overlap(a[:, None], (xj / s)[None, :], xi).mean(axis=1)
        return GridDensity1D(0.0, xi, vals)
    if method != "chain":
        raise ValueError(f"unknown method {method!r}; use 'chain' or 'direct'")
    t_max = xi / xj
    f_t = ratio_density(
        uniform_density(-1.0, 1.0),
        uniform_density(0.0, 1.0),
        -t_max,
        t_max,
        s_nodes=4097,
        w_nodes=slope_nodes,
    )
    f_delta = f_t.scaled(xj)
    f_hit = convolve_sum(uniform_density(0.0, xi, n=f_delta.size // 2 + 1), f_delta)
    return f_hit.resampled(0.0, xi, nodes)


# ---------------------------------------------------------------------------
# Joint (length, exit-location) densities.


def _opposing_slice(
    n: float, a: np.ndarray, b: np.ndarray, xi: float, xj: float, xk: float, angle_nodes: int
) -> np.ndarray:
    m = n * n - xj * xj
    if m < 0.0:
        return np.zeros((a.size, b.size))
    theta = (np.arange(angle_nodes) + 0.5) / angle_nodes * np.pi - np.pi / 2.0
    dtheta = np.pi / angle_nodes
    root = np.sqrt(m)
    delta = root * np.sin(theta)
    dplane = root * np.cos(theta)
    # Indicator/width densities of the retained uniforms.
    fa = ((a[:, None] - delta[None, :] >= 0.0) & (a[:, None] - delta[None, :] <= xi)).astype(float) / xi
    fb = (
        ((b[:, None] - dplane[None, :] >= 0.0) & (b[:, None] - dplane[None, :] <= xk)).astype(float)
        + ((b[:, None] + dplane[None, :] >= 0.0) & (b[:, None] + dplane[None, :] <= xk)).astype(float)
    ) / xk
    reach = n / np.maximum(xj, np.maximum(np.abs(delta), dplane))
    w = (xj / (12.0 * n * n)) * reach**3 * dtheta
    return np.einsum("at,bt,t->ab", fa, fb, w, optimize=True)


def joint_pdf_opposing(
    box: BoxDims,
    indices: IndexTriple,
    n_nodes: int = 64,
    a_nodes: int = 64,
    b_nodes: int = 64,
    angle_nodes: int = 2048,
    workers: int = 1,
) -> FaceJointPdf:
    """Joint density of (path length n, exit location) on the opposing face.

    Support starts at n = X_j (the straight crossing).  The radial part of
    the direction integral is closed analytically; the angular integral
    runs over the polar angle of the transverse displacement, with both
    signs of the third component folded in.
    """
    box = BoxDims.from_any(box)
    xi, xj, xk = _dims(box, indices)
    n_grid = np.linspace(xj, box.diagonal, n_nodes)
    a = np.linspace(0.0, xi, a_nodes)
    b = np.linspace(0.0, xk, b_nodes)
    vals = np.empty((n_nodes, a_nodes, b_nodes))

    def fill(idx: int) -> None:
        vals[idx] = _opposing_slice(n_grid[idx], a, b, xi, xj, xk, angle_nodes)

    _run_slices(fill, n_nodes, workers)
    dens = GridDensity3D(
        ((xj, box.diagonal), (0.0, xi), (0.0, xk)),
        vals,
        ("n", f"x{indices.i}", f"x{indices.k}"),
    )
    mass = dens.integral()
    return FaceJointPdf(PairKind.OPPOSING, indices, dens.normalized(force=True), mass)


def _adjacent_slice(
    n: float, a: np.ndarray, e: np.ndarray, xi: float, xj: float, xk: float, angle_nodes: int
) -> np.ndarray:
    out = np.zeros((a.size, e.size))
    if n <= 0.0:
        return out
    phi = (np.arange(angle_nodes) + 0.5) / angle_nodes * np.pi - np.pi / 2.0
    dphi = np.pi / angle_nodes
    live = e < n
    ev = e[live]
    root = np.sqrt(np.maximum(n * n - ev * ev, 0.0))  # (E,)
    delta = root[:, None] * np.sin(phi)[None, :]  # (E, T)
    depth = root[:, None] * np.cos(phi)[None, :]
    reach = np.maximum(ev[:, None], np.maximum(np.abs(delta), depth))
    wq = np.where(depth <= xk, depth / reach**3, 0.0) * (n / (12.0 * xi * xk) * dphi)
    fa = (a[:, None, None] >= delta[None, :, :]) & (a[:, None, None] - delta[None, :, :] <= xi)
    out[:, live] = np.einsum("aet,et->ae", fa.astype(float), wq, optimize=True)
    return out


def joint_pdf_adjacent(
    box: BoxDims,
    indices: IndexTriple,
    n_nodes: int = 64,
    a_nodes: int = 64,
    e_nodes: int = 64,
    angle_nodes: int = 1024,
    workers: int = 1,
) -> FaceJointPdf:
    """Joint density of (length, exit location) on the adjacent face x_k = 0.

    The entry-depth integral is closed (the exit pins the depth
    coordinate); the in-plane displacement integral is parametrized by its
    polar angle, which regularizes the square-root edge of the integrand.
    """
    box = BoxDims.from_any(box)
    xi, xj, xk = _dims(box, indices)
    n_grid = np.linspace(0.0, box.diagonal, n_nodes)
    a = np.linspace(0.0, xi, a_nodes)
    e = np.linspace(0.0, xj, e_nodes)
    vals = np.empty((n_nodes, a_nodes, e_nodes))

    def fill(idx: int) -> None:
        vals[idx] = _adjacent_slice(n_grid[idx], a, e, xi, xj, xk, angle_nodes)

    _run_slices(fill, n_nodes, workers)
    dens = GridDensity3D(
        ((0.0, box.diagonal), (0.0, xi), (0.0, xj)),
        vals,
        ("n", f"x{indices.i}", f"x{indices.j}"),
    )
    mass = dens.integral()
    return FaceJointPdf(PairKind.ADJACENT, indices, dens.normalized(force=True), mass)


def _run_slices(fill, count: int, workers: int) -> None:
    if workers <= 1:
        for idx in range(count):
            fill(idx)
        return
    with ThreadPoolExecutor(max_workers=workers) as pool:
        list(pool.map(fill, range(count)))


# ---------------------------------------------------------------------------
# Length marginals (location integrated over the exit face).


def length_marginal_opposing(
    box: BoxDims,
    indices: IndexTriple,
    n_nodes: int = 1025,
    angle_nodes: int = 4096,
) -> GridDensity1D:
    """Sub-density of the path length for opposing exits (mass = face-exit
    probability given entry, not renormalized)."""
    box = BoxDims.from_any(box)
    xi, xj, xk = _dims(box, indices)
    n_grid = np.linspace(xj, box.diagonal, n_nodes)
    theta = (np.arange(angle_nodes) + 0.5) / angle_nodes * np.pi - np.pi / 2.0
    dtheta = np.pi / angle_nodes
    root = np.sqrt(np.maximum(n_grid[:, None] ** 2 - xj * xj, 0.0))
    delta = root * np.sin(theta)[None, :]
    dplane = root * np.cos(theta)[None, :]
    ki = np.clip(xi - np.abs(delta), 0.0, None) / xi
    kk = 2.0 * np.clip(xk - dplane, 0.0, None) / xk
    reach = n_grid[:, None] / np.maximum(xj, np.maximum(np.abs(delta), dplane))
    w = xj / (12.0 * n_grid**2)
    vals = w * (ki * kk * reach**3).sum(axis=1) * dtheta
    return GridDensity1D(xj, box.diagonal, vals)


def length_marginal_adjacent(
    box: BoxDims,
    indices: IndexTriple,
    n_nodes: int = 1025,
    angle_nodes: int = 1024,
    elevation_nodes: int = 512,
) -> GridDensity1D:
    """Sub-density of the path length for exits through the adjacent face
    x_k = 0 (mass = face-exit probability given entry).

    The elevation quadrature window [0, min(X_j, n)] shrinks with n, so
    short-path slices stay resolved.
    """
    box = BoxDims.from_any(box)
    xi, xj, xk = _dims(box, indices)
    n_grid = np.linspace(0.0, box.diagonal, n_nodes)
    phi = (np.arange(angle_nodes) + 0.5) / angle_nodes * np.pi - np.pi / 2.0
    dphi = np.pi / angle_nodes
    sin_p, cos_p = np.sin(phi), np.cos(phi)
    vals = np.zeros(n_nodes)
    for idx, n in enumerate(n_grid):
        if n <= 0.0:
            continue
        e_hi = min(xj, n)
        ev = e_hi * _midpoints(elevation_nodes)
        de = e_hi / elevation_nodes
        root = np.sqrt(np.maximum(n * n - ev * ev, 0.0))
        delta = root[:, None] * sin_p[None, :]
        depth = root[:, None] * cos_p[None, :]
        ki = np.clip(xi - np.abs(delta), 0.0, None) / xi
        reach = np.maximum(ev[:, None], np.maximum(np.abs(delta), depth))
        integ = np.where(depth <= xk, ki * depth / reach**3, 0.0).sum() * de * dphi
        # the a-marginal of the location indicator contributes X_i * ki,
        # cancelling the 1/X_i of the entry-area density
        vals[idx] = n / (12.0 * xk) * integ
    return GridDensity1D(0.0, box.diagonal, vals)


# ---------------------------------------------------------------------------
# Change-of-variable forward maps and Jacobians.


def forward_opposing(
    box: BoxDims, indices: IndexTriple, entry: np.ndarray, direction: np.ndarray
) -> np.ndarray:
    """Map (x_i, x_k, t_i, t_j, t_k) to (n, r, x'_i, x'_k, x_i).

    `entry` holds the transverse entry coordinates (x_i, x_k); `direction`
    the un-normalized direction components (t_i, t_j, t_k) with t_j > 0.
    """
    box = BoxDims.from_any(box)
    _, xj, _ = _dims(box, indices)
    x_i, x_k = float(entry[0]), float(entry[1])
    t_i, t_j, t_k = (float(v) for v in direction)
    if t_j <= 0:
        raise ValueError("the entry-axis direction component must point inward (t_j > 0)")
    r = float(np.sqrt(t_i * t_i + t_j * t_j + t_k * t_k))
    scale = xj / t_j
    return np.array([r * scale, r, x_i + scale * t_i, x_k + scale * t_k, x_i])


def jacobian_opposing(
    box: BoxDims, indices: IndexTriple, entry: np.ndarray, direction: np.ndarray
) -> float:
    """|det| of the forward_opposing differential: n^2 D / (X_j r^2) with
    D the transverse displacement along axis k."""
    box = BoxDims.from_any(box)
    _, xj, _ = _dims(box, indices)
    n, r, _, xk_exit, _ = forward_opposing(box, indices, entry, direction)
    d = abs(xk_exit - float(entry[1]))
    return float(n * n * d / (xj * r * r))


def forward_adjacent(
    box: BoxDims, indices: IndexTriple, entry: np.ndarray, direction: np.ndarray
) -> np.ndarray:
    """Map (x_i, x_k, t_i, t_j, t_k) to (n, x'_i, x'_j, zeta, x_i).

    Exit through x_k = 0 requires t_k < 0; zeta = x_k / |t_k| is the ray
    parameter at the exit plane and x'_j = zeta * t_j the exit elevation.
    """
    x_i, x_k = float(entry[0]), float(entry[1])
    t_i, t_j, t_k = (float(v) for v in direction)
    if t_k >= 0:
        raise ValueError("exit through x_k = 0 requires t_k < 0")
    if t_j <= 0:
        raise ValueError("the entry-axis direction component must point inward (t_j > 0)")
    zeta = x_k / abs(t_k)
    r = float(np.sqrt(t_i * t_i + t_j * t_j + t_k * t_k))
    return np.array([zeta * r, x_i + zeta * t_i, zeta * t_j, zeta, x_i])


def jacobian_adjacent(
    box: BoxDims,
    indices: IndexTriple,
    entry: np.ndarray,
    direction: np.ndarray,
    form: str = "quartic",
) -> float:
    """|det| of the forward_adjacent differential.

    Two algebraically identical closed forms are exposed: "quartic"
    (zeta^4 / n) and "cubic" (zeta^3 / r); on the constraint n = zeta * r
    they coincide, which the test suite checks against finite differences.
    """
    n, _, _, zeta, _ = forward_adjacent(box, indices, entry, direction)
    r = n / zeta
    if form == "quartic":
        return float(zeta**4 / n)
    if form == "cubic":
        return float(zeta**3 / r)
    raise ValueError(f"unknown Jacobian form {form!r}; use 'quartic' or 'cubic'")
