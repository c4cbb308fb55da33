"""Acceptance gates.

Eight numbered gates cover the package end to end; each prints one
PASS/FAIL line (run with ``pytest tests/test_acceptance.py -v -s`` to
see the lines for passing gates too).

Gate 7c asserts a strictly decreasing mean chord length in exit
elevation.  That direction is geometrically impossible (see the test
docstring), so the gate is expected to fail; it is kept as stated
rather than silently inverted.  Everything else passes.
"""

import sys
import time

import numpy as np
from scipy import ndimage

from boxpath import (
    ALL_FACES,
    BoxDims,
    FaceId,
    IndexTriple,
    PairKind,
    Side,
    canonical_classes,
    canonical_histograms,
    chords,
    combined_length_pdf_chords,
    combined_length_pdf_rays,
    compare,
    entry_probability,
    length_histogram,
    rays,
    sample_chords,
    sample_rays,
    single_face_length_pdf,
)
from boxpath.density import (
    bin_masses_1d,
    convolve_sum,
    product_density,
    ratio_density,
    reciprocal_density,
    sqrt_density,
    square_density,
    uniform_density,
)
from boxpath.montecarlo import TrajectoryBatch

from conftest import binned_l1

IDX = IndexTriple(1, 2, 3)
BOXES = {
    "cube": BoxDims(1.0, 1.0, 1.0),
    "slab": BoxDims(1.0, 0.1, 1.0),
    "rod": BoxDims(0.2, 1.0, 0.2),
}


def report(gate: str, name: str, ok: bool, detail: str = "") -> None:
    line = f"ACCEPTANCE {gate} {name}: {'PASS' if ok else 'FAIL'}"
    if detail:
        line += f" ({detail})"
    print(line, file=sys.stderr)
    assert ok, line


# ---------------------------------------------------------------------------
# 1. entry probabilities


def test_gate_1_entry_probabilities():
    expected = {
        "cube": {1: 1 / 6, 2: 1 / 6, 3: 1 / 6},
        "slab": {1: 0.1 / 2.4, 2: 1 / 2.4, 3: 0.1 / 2.4},
        "rod": {1: 5 / 22, 2: 1 / 22, 3: 5 / 22},
    }
    worst = 0.0
    for name, box in BOXES.items():
        total = 0.0
        for face in ALL_FACES:
            p = entry_probability(box, face)
            total += p
            worst = max(worst, abs(p - expected[name][face.axis]))
        worst = max(worst, abs(total - 1.0))
    report("1", "entry-probabilities", worst <= 1e-12, f"max error {worst:.2e}")


# ---------------------------------------------------------------------------
# 2. density-transform toolkit


def test_gate_2_transform_toolkit():
    rng = np.random.default_rng(101)
    n = 1_000_000
    x = rng.uniform(0.0, 1.0, n)
    y = rng.uniform(1.0, 2.0, n)
    fx = uniform_density(0.0, 1.0, 512)
    fy = uniform_density(1.0, 2.0, 512)

    def l1(dens, samples):
        edges = np.linspace(dens.lo, dens.hi, 65)
        counts, _ = np.histogram(samples, bins=edges)
        masses = bin_masses_1d(dens, edges)
        return 0.5 * float(np.abs(masses / masses.sum() - counts / counts.sum()).sum())

    checks = {
        "sum": (convolve_sum(fx, fx), x + rng.uniform(0.0, 1.0, n)),
        "ratio": (ratio_density(fx, fy, 0.0, 1.0, 512), x / y),
        "product": (product_density(fx, fx, 0.0, 1.0, 512), x * rng.uniform(0.0, 1.0, n)),
        "square": (square_density(fx, s_nodes=512), x**2),
        "reciprocal": (reciprocal_density(fy, 0.5, 1.0, 512), 1.0 / y),
    }
    worst_l1, worst_mass = 0.0, 0.0
    for dens, samples in checks.values():
        worst_l1 = max(worst_l1, l1(dens, samples))
        worst_mass = max(worst_mass, abs(dens.integral() - 1.0))
    back = sqrt_density(square_density(fx, s_nodes=512), 512)
    grid = np.linspace(0.0, 1.0, 400)
    round_trip = 0.5 * np.trapezoid(np.abs(back.interp(grid) - fx.interp(grid)), grid)
    worst_mass = max(worst_mass, abs(back.integral() - 1.0))
    ok = worst_l1 <= 0.03 and round_trip <= 3e-2 and worst_mass <= 2e-2
    report(
        "2",
        "transform-toolkit",
        ok,
        f"worst L1 {worst_l1:.4f}, round-trip {round_trip:.4f}, mass drift {worst_mass:.4f}",
    )


# ---------------------------------------------------------------------------
# 3. Jacobians


def test_gate_3_jacobians():
    box = BoxDims(1.3, 0.8, 1.1)
    rng = np.random.default_rng(102)
    eps = 1e-6

    def fd(fwd, entry, direction):
        x0 = np.concatenate([entry, direction])
        J = np.empty((5, 5))
        for c in range(5):
            xp, xm = x0.copy(), x0.copy()
            xp[c] += eps
            xm[c] -= eps
            J[:, c] = (fwd(box, IDX, xp[:2], xp[2:]) - fwd(box, IDX, xm[:2], xm[2:])) / (2 * eps)
        return abs(np.linalg.det(J))

    worst = form_gap = 0.0
    for _ in range(100):
        entry = rng.uniform(0.1, 0.9, 2) * [box.dim(1), box.dim(3)]
        d = rng.uniform(0.1, 1.0, 3)
        d[0] *= np.sign(rng.standard_normal())
        ana = rays.jacobian_opposing(box, IDX, entry, d)
        worst = max(worst, abs(fd(rays.forward_opposing, entry, d) - ana) / ana)
        d[2] = -abs(d[2])
        ana = rays.jacobian_adjacent(box, IDX, entry, d, form="quartic")
        alt = rays.jacobian_adjacent(box, IDX, entry, d, form="cubic")
        worst = max(worst, abs(fd(rays.forward_adjacent, entry, d) - ana) / ana)
        form_gap = max(form_gap, abs(ana - alt) / ana)
    ok = worst <= 1e-5 and form_gap <= 1e-12
    report("3", "jacobians-vs-finite-differences", ok, f"worst FD gap {worst:.2e}, form gap {form_gap:.2e}")


# ---------------------------------------------------------------------------
# 4. chord conditionals vs direct quadrature


def test_gate_4_chord_conditionals():
    rng = np.random.default_rng(103)
    worst = 0.0
    for kind in (PairKind.OPPOSING, PairKind.ADJACENT):
        for _ in range(10):
            box = BoxDims(*rng.uniform(0.3, 1.5, 3))
            xi = box.dim(IDX.i)
            other = box.dim(IDX.k) if kind is PairKind.OPPOSING else box.dim(IDX.j)
            uv = (rng.uniform(0.05, 0.95) * xi, rng.uniform(0.05, 0.95) * other)
            dens = chords.conditional_length_pdf(box, kind, IDX, uv)
            edges = np.linspace(dens.lo, dens.hi, 65)
            m = 1200
            a = (np.arange(m) + 0.5) * (xi / m)
            if kind is PairKind.OPPOSING:
                b = (np.arange(m) + 0.5) * (box.dim(IDX.k) / m)
                dist = np.sqrt((uv[0] - a[:, None]) ** 2 + box.dim(IDX.j) ** 2 + (uv[1] - b[None, :]) ** 2)
            else:
                dpt = (np.arange(m) + 0.5) * (box.dim(IDX.k) / m)
                dist = np.sqrt((uv[0] - a[:, None]) ** 2 + uv[1] ** 2 + dpt[None, :] ** 2)
            oracle, _ = np.histogram(dist.ravel(), bins=edges)
            oracle = oracle / dist.size
            centers = 0.5 * (edges[:-1] + edges[1:])
            worst = max(worst, 0.5 * np.sum(np.abs(dens.interp(centers) * np.diff(edges) - oracle)))
    report("4", "chord-conditionals-vs-quadrature", worst <= 0.02, f"worst L1 {worst:.4f}")


# ---------------------------------------------------------------------------
# 5. ray-model cross-consistency


def grid_l1_2d(a, b) -> float:
    diff = np.abs(a.values - b.values)
    inner = np.trapezoid(diff, a.nodes(1), axis=1)
    return float(0.5 * np.trapezoid(inner, a.nodes(0)))


def pair_batch(batch: TrajectoryBatch, entry: FaceId, exit: FaceId) -> TrajectoryBatch:
    m = (batch.entry_code == entry.code) & (batch.exit_code == exit.code)
    return TrajectoryBatch(
        batch.box, batch.entry_code[m], batch.entry_ab[m], batch.exit_code[m], batch.exit_ab[m], batch.length[m], {}
    )


def test_gate_5_ray_cross_consistency():
    cube = BOXES["cube"]
    jo = rays.joint_pdf_opposing(cube, IDX, 64, 64, 64, 2048)
    ja = rays.joint_pdf_adjacent(cube, IDX, 64, 64, 64, 1024)
    eo = rays.exit_pdf_opposing(cube, IDX, 64, 64, 2048)
    ea = rays.exit_pdf_adjacent(cube, IDX, 64, 64, 2048)
    l1_opp = grid_l1_2d(jo.density.integrate_out(0), eo.density)
    l1_adj = grid_l1_2d(ja.density.integrate_out(0), ea.density)
    mass_gap = max(abs(jo.mass / eo.mass - 1.0), abs(ja.mass / ea.mass - 1.0))
    sym = float(np.max(np.abs(eo.density.values - eo.density.values[::-1, ::-1])))

    # every placement pooled into a class matches the class's analytic law
    batch = sample_rays(cube, 8_000_000, 515, "cube-components", 1)
    entry2 = (FaceId(2, Side.LOW), FaceId(2, Side.HIGH))
    pool_worst = 0.0
    for entry in entry2:
        exit = FaceId(2, Side.HIGH if entry.side is Side.LOW else Side.LOW)
        sub = canonical_histograms(pair_batch(batch, entry, exit), 5, 5, 5)
        pool_worst = max(pool_worst, compare.compare_joint(sub["opposing-entry2"], jo.density).l1)
        for exit in (FaceId(3, Side.LOW), FaceId(3, Side.HIGH)):
            sub = canonical_histograms(pair_batch(batch, entry, exit), 5, 5, 5)
            pool_worst = max(pool_worst, compare.compare_joint(sub["adjacent-entry2-exit3"], ja.density).l1)

    ok = l1_opp <= 0.05 and l1_adj <= 0.05 and mass_gap <= 2e-2 and sym <= 1e-9 and pool_worst <= 0.05
    report(
        "5",
        "ray-cross-consistency",
        ok,
        f"marginal L1 {l1_opp:.4f}/{l1_adj:.4f}, mass gap {mass_gap:.4f}, symmetry {sym:.1e}, pooling L1 {pool_worst:.4f}",
    )


# ---------------------------------------------------------------------------
# 6. Monte Carlo vs analytic, end to end


def test_gate_6_end_to_end():
    cube = BOXES["cube"]
    n = 10_000_000
    worst_joint = 0.0
    worst_len = 0.0

    batch = sample_rays(cube, n, 606, "cube-components", 1)
    hists = canonical_histograms(batch, 8, 8, 8)
    edges, counts = length_histogram(batch, 128)
    del batch
    for cls in canonical_classes():
        if cls.kind is PairKind.OPPOSING:
            joint = rays.joint_pdf_opposing(cube, cls.indices, 64, 64, 64, 2048)
        else:
            joint = rays.joint_pdf_adjacent(cube, cls.indices, 64, 64, 64, 1024)
        rep = compare.compare_joint(hists[cls.label], joint.density)
        worst_joint = max(worst_joint, rep.l1)
    comb = combined_length_pdf_rays(cube, 1025, 2048, 256)
    worst_len = max(worst_len, binned_l1(comb.normalized(), edges, counts))

    batch = sample_chords(cube, n, 607, 1)
    hists = canonical_histograms(batch, 8, 8, 8)
    edges, counts = length_histogram(batch, 128)
    del batch
    for cls in canonical_classes():
        if cls.kind is PairKind.OPPOSING:
            joint = chords.joint_pdf_opposing(cube, cls.indices, 64, 64, 64, 512)
        else:
            joint = chords.joint_pdf_adjacent(cube, cls.indices, 64, 64, 64, 512)
        rep = compare.compare_joint(hists[cls.label], joint.density)
        worst_joint = max(worst_joint, rep.l1)
    comb = combined_length_pdf_chords(cube, 1025, 2048)
    worst_len = max(worst_len, binned_l1(comb.normalized(), edges, counts))

    ok = worst_joint <= 0.05 and worst_len <= 0.03
    report("6", "monte-carlo-vs-analytic", ok, f"worst joint L1 {worst_joint:.4f}, worst length L1 {worst_len:.4f}")


# ---------------------------------------------------------------------------
# 7. figure structure


def test_gate_7a_band_map_annulus():
    """The banded exit density forms a ring around the face centre."""
    cube = BOXES["cube"]
    joint = chords.joint_pdf_opposing(cube, IDX, 64, 64, 64, 512)
    sheet = joint.density.band_integral(0, 1.17, 1.22)
    vals = sheet.values
    half = vals.max() / 2.0
    above = vals > half
    _, n_above = ndimage.label(above)
    c = vals.shape[0] // 2
    center_below = vals[c, c] < half
    below_labels, _ = ndimage.label(vals < half)
    hole = below_labels == below_labels[c, c]
    enclosed = not (hole[0, :].any() or hole[-1, :].any() or hole[:, 0].any() or hole[:, -1].any())
    uu, vv = np.meshgrid(sheet.nodes(0) - 0.5, sheet.nodes(1) - 0.5, indexing="ij")
    ang = np.arctan2(vv, uu)[above]
    occupied = int((np.histogram(ang, bins=24, range=(-np.pi, np.pi))[0] > 0).sum())
    ok = n_above == 1 and center_below and enclosed and occupied == 24
    report(
        "7a",
        "band-map-annulus",
        ok,
        f"components {n_above}, centre excluded {center_below}, enclosed {enclosed}, angular bins {occupied}/24",
    )


def test_gate_7b_mode_elevation_contrast():
    """Ray exits hug the shared edge; chord exits peak much higher."""
    cube = BOXES["cube"]
    e_rays = rays.joint_pdf_adjacent(cube, IDX, 64, 64, 64, 1024).density.marginal_1d(2)
    e_chords = chords.joint_pdf_adjacent(cube, IDX, 64, 64, 64, 512).density.marginal_1d(2)
    mode_rays = float(e_rays.nodes[np.argmax(e_rays.values)])
    mode_chords = float(e_chords.nodes[np.argmax(e_chords.values)])
    ok = mode_rays < mode_chords
    report("7b", "adjacent-mode-elevation-contrast", ok, f"rays {mode_rays:.3f} < chords {mode_chords:.3f}")


def test_gate_7c_mean_length_decreasing_in_elevation():
    """Asserts the chord-model mean length decreases with exit elevation.

    This direction cannot hold: with the exit fixed at elevation e on an
    adjacent face, the chord to an entry point at transverse offset da
    and depth d has length sqrt(da^2 + d^2 + e^2), where the (da, d) law
    does not depend on e.  Raising e increases every chord pointwise, so
    the conditional law is stochastically increasing and its mean rises
    with elevation (about 0.67 to 1.14 across quintiles on the cube).
    The gate is kept as stated instead of being inverted, and is
    expected to fail; see README for the discussion.
    """
    cube = BOXES["cube"]
    joint = chords.joint_pdf_adjacent(cube, IDX, 64, 64, 64, 512)
    means = []
    for q in range(5):
        band = joint.density.band_integral(2, 0.2 * q, 0.2 * (q + 1)).integrate_out(1)
        means.append(band.normalized(force=True).mean())
    decreasing = all(b < a for a, b in zip(means, means[1:]))
    report(
        "7c",
        "mean-length-decreasing-in-elevation",
        decreasing,
        "quintile means " + ", ".join(f"{m:.3f}" for m in means),
    )


def test_gate_7d_single_face_overlays():
    worst = 0.0
    for name, box in BOXES.items():
        axes = {"cube": (2,), "slab": (1, 2), "rod": (1, 2)}[name]
        for axis in axes:
            face = FaceId(axis, Side.LOW)
            for model in ("rays", "chords"):
                law = single_face_length_pdf(box, face, model, 513)
                if model == "rays":
                    batch = sample_rays(box, 1_000_000, 700 + axis, "cube-components", 1, entry_face=face)
                else:
                    batch = sample_chords(box, 1_000_000, 700 + axis, 1, entry_face=face)
                edges, counts = length_histogram(batch, 96)
                worst = max(worst, binned_l1(law.normalized(), edges, counts))
    report("7d", "single-face-overlays", worst <= 0.05, f"worst L1 {worst:.4f}")


# ---------------------------------------------------------------------------
# 8. determinism and throughput


def test_gate_8_determinism_and_throughput():
    cube = BOXES["cube"]
    a = sample_rays(cube, 1_000_000, 808, "cube-components", 1)
    b = sample_rays(cube, 1_000_000, 808, "cube-components", 3)
    identical = (
        np.array_equal(a.length, b.length)
        and np.array_equal(a.entry_ab, b.entry_ab)
        and np.array_equal(a.exit_ab, b.exit_ab)
        and np.array_equal(a.exit_code, b.exit_code)
    )
    c = sample_chords(cube, 1_000_000, 809, 1)
    d = sample_chords(cube, 1_000_000, 809, 4)
    identical = identical and np.array_equal(c.length, d.length)

    n = 2_000_000
    t0 = time.perf_counter()
    sample_rays(cube, n, 810, "cube-components", 1)
    rate_rays = n / (time.perf_counter() - t0)
    t0 = time.perf_counter()
    sample_chords(cube, n, 811, 1)
    rate_chords = n / (time.perf_counter() - t0)
    ok = identical and rate_rays >= 1e6 and rate_chords >= 1e6
    report(
        "8",
        "determinism-and-throughput",
        ok,
        f"worker-invariant {identical}, {rate_rays:.2e}/s rays, {rate_chords:.2e}/s chords",
    )
