"""Face-entry ray model: exit pdfs, joints, marginals, Jacobians."""

import numpy as np
import pytest

from boxpath import BoxDims, IndexTriple, compare, rays
from boxpath.geometry import FaceId, IndexTriple, Side

IDX = IndexTriple(1, 2, 3)


def grid_l1_2d(a, b) -> float:
    assert a.values.shape == b.values.shape
    diff = np.abs(a.values - b.values)
    inner = np.trapezoid(diff, a.nodes(1), axis=1)
    return float(0.5 * np.trapezoid(inner, a.nodes(0)))


def line_l1(a, b, lo, hi, n=500) -> float:
    x = np.linspace(lo, hi, n)
    return float(0.5 * np.trapezoid(np.abs(a.interp(x) - b.interp(x)), x))


# ---------------------------------------------------------------------------
# exit pdfs


def test_opposing_exit_mass_cube(cube):
    pdf = rays.exit_pdf_opposing(cube, IDX)
    assert pdf.mass == pytest.approx(1.0 / 12.0, abs=1e-6)
    assert pdf.density.integral() == pytest.approx(1.0, abs=1e-9)


def test_adjacent_exit_mass_cube(cube):
    pdf = rays.exit_pdf_adjacent(cube, IDX)
    assert pdf.mass == pytest.approx(11.0 / 48.0, abs=5e-4)


def test_exit_masses_sum_to_one_cube(cube):
    total = rays.exit_pdf_opposing(cube, IDX).mass + 4 * rays.exit_pdf_adjacent(cube, IDX).mass
    assert total == pytest.approx(1.0, abs=2e-3)


def test_exit_masses_sum_to_one_slab(slab):
    total = rays.exit_pdf_opposing(slab, IndexTriple(1, 2, 3)).mass
    for i, j, k in ((3, 2, 1), (1, 2, 3)):
        total += 2 * rays.exit_pdf_adjacent(slab, IndexTriple(i, j, k)).mass
    assert total == pytest.approx(1.0, abs=2e-3)


def test_opposing_exit_pdf_centrally_symmetric(skew_box):
    pdf = rays.exit_pdf_opposing(skew_box, IDX, 65, 65, 1024)
    vals = pdf.density.values
    assert np.allclose(vals, vals[::-1, ::-1], atol=1e-12)


# ---------------------------------------------------------------------------
# joints and marginals


@pytest.fixture(scope="module")
def cube_joints(cube):
    jo = rays.joint_pdf_opposing(cube, IDX, 64, 64, 64, 2048)
    ja = rays.joint_pdf_adjacent(cube, IDX, 64, 64, 64, 1024)
    return jo, ja


def test_joint_masses_match_exit_masses(cube, cube_joints):
    jo, ja = cube_joints
    assert jo.mass == pytest.approx(1.0 / 12.0, rel=1e-2)
    assert ja.mass == pytest.approx(11.0 / 48.0, rel=2e-2)


def test_joint_location_marginal_matches_exit_pdf(cube, cube_joints):
    jo, ja = cube_joints
    eo = rays.exit_pdf_opposing(cube, IDX, 64, 64, 2048)
    sheet = jo.density.integrate_out(0)
    assert grid_l1_2d(sheet, eo.density) <= 0.01
    ea = rays.exit_pdf_adjacent(cube, IDX, 64, 64, 2048)
    sheet = ja.density.integrate_out(0)
    assert grid_l1_2d(sheet, ea.density) <= 0.03


def test_joint_length_marginal_matches_dedicated(cube, cube_joints):
    jo, ja = cube_joints
    lm = rays.length_marginal_opposing(cube, IDX, 513, 1024).normalized(force=True)
    assert line_l1(lm, jo.density.marginal_1d(0), 1.0, np.sqrt(3.0)) <= 0.01
    lma = rays.length_marginal_adjacent(cube, IDX, 513, 512, 256).normalized(force=True)
    assert line_l1(lma, ja.density.marginal_1d(0), 0.0, np.sqrt(3.0)) <= 0.03


def test_opposing_support_starts_at_gap(cube, cube_joints):
    jo, _ = cube_joints
    assert jo.density.domain[0][0] == pytest.approx(1.0)
    assert jo.density.domain[0][1] == pytest.approx(np.sqrt(3.0))


def test_chain_and_direct_coordinate_marginals_agree(skew_box):
    chain = rays.exit_coordinate_marginal_opposing(skew_box, IDX, method="chain")
    direct = rays.exit_coordinate_marginal_opposing(skew_box, IDX, method="direct")
    assert chain.integral() == pytest.approx(direct.integral(), abs=1e-4)
    a = chain.normalized(force=True)
    b = direct.normalized(force=True)
    assert line_l1(a, b, 0.0, skew_box.dim(1)) <= 1e-4


def test_joints_match_sampling(cube, cube_joints, rays_batch_cube):
    from boxpath import canonical_histograms

    jo, ja = cube_joints
    hists = canonical_histograms(rays_batch_cube, 8, 8, 8)
    rep = compare.compare_joint(hists["opposing-entry2"], jo.density)
    assert rep.l1 <= 0.08
    assert rep.in_range_fraction == pytest.approx(1.0, abs=1e-3)
    rep = compare.compare_joint(hists["adjacent-entry2-exit1"], ja.density)
    assert rep.l1 <= 0.05


# ---------------------------------------------------------------------------
# forward maps and Jacobians


def fd_jacobian(fwd, box, entry, direction) -> float:
    x0 = np.concatenate([entry, direction])

    def f(x):
        return fwd(box, IDX, x[:2], x[2:])

    eps = 1e-6
    J = np.empty((5, 5))
    for c in range(5):
        xp = x0.copy()
        xm = x0.copy()
        xp[c] += eps
        xm[c] -= eps
        J[:, c] = (f(xp) - f(xm)) / (2 * eps)
    return float(abs(np.linalg.det(J)))


def test_jacobians_match_finite_differences(skew_box):
    rng = np.random.default_rng(9)
    for _ in range(100):
        entry = rng.uniform(0.1, 0.9, 2) * [skew_box.dim(1), skew_box.dim(3)]
        d = rng.uniform(0.1, 1.0, 3)
        d[0] *= np.sign(rng.standard_normal())
        num = fd_jacobian(rays.forward_opposing, skew_box, entry, d)
        ana = rays.jacobian_opposing(skew_box, IDX, entry, d)
        assert abs(num - ana) / max(num, ana) <= 1e-5
        d[2] = -abs(d[2])
        num = fd_jacobian(rays.forward_adjacent, skew_box, entry, d)
        ana = rays.jacobian_adjacent(skew_box, IDX, entry, d)
        assert abs(num - ana) / max(num, ana) <= 1e-5


def test_adjacent_jacobian_forms_coincide(skew_box):
    rng = np.random.default_rng(10)
    for _ in range(50):
        entry = rng.uniform(0.1, 0.9, 2) * [skew_box.dim(1), skew_box.dim(3)]
        d = np.array([rng.uniform(-1, 1), rng.uniform(0.1, 1.0), -rng.uniform(0.1, 1.0)])
        a = rays.jacobian_adjacent(skew_box, IDX, entry, d, form="quartic")
        b = rays.jacobian_adjacent(skew_box, IDX, entry, d, form="cubic")
        assert a == pytest.approx(b, rel=1e-12)


def test_forward_maps_reject_outward_directions(cube):
    with pytest.raises(ValueError):
        rays.forward_opposing(cube, IDX, np.array([0.5, 0.5]), np.array([0.1, -0.2, 0.1]))
    with pytest.raises(ValueError):
        rays.forward_adjacent(cube, IDX, np.array([0.5, 0.5]), np.array([0.1, 0.2, 0.1]))
