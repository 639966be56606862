import numpy as np
import pytest

from multiwell import connect, fields, groups, potentials

SIGMA_DW = 2.0 * np.sqrt(2.0) / 3.0


def slab_fn(pts):
    return np.tanh(pts[:, 0] / np.sqrt(2.0))[:, None]


def test_grid_validation():
    with pytest.raises(ValueError):
        fields.Grid(dim=2, half_width=1.0, points=40)  # even: origin not a node
    with pytest.raises(ValueError):
        fields.Grid(dim=2, half_width=-1.0, points=41)
    g = fields.Grid(dim=2, half_width=2.0, points=41)
    assert g.spacing == pytest.approx(0.1)
    assert np.allclose(g.nodes[len(g.nodes) // 2], [0.0, 0.0])


def test_energy_constant_at_well(double_well):
    g = fields.Grid(dim=2, half_width=3.0, points=61)
    assert fields.energy(fields.constant_field(g, [1.0]), double_well) == 0.0


def test_energy_slab_area_scaling(double_well):
    # product structure: J = sigma x cross-sectional length, within 1%
    g = fields.Grid(dim=2, half_width=10.0, points=161)
    f = fields.field_from_function(g, slab_fn, 1)
    expected = SIGMA_DW * 20.0
    assert fields.energy(f, double_well) == pytest.approx(expected, rel=0.01)


def test_energy_nonnegative_random(double_well):
    g = fields.Grid(dim=2, half_width=2.0, points=21)
    rng = np.random.default_rng(0)
    f = fields.VectorField(g, rng.normal(size=g.shape + (1,)))
    assert fields.energy(f, double_well) >= 0.0


def test_energy_dimension_mismatch(double_well):
    g = fields.Grid(dim=2, half_width=2.0, points=21)
    f = fields.constant_field(g, [1.0, 0.0])
    with pytest.raises(ValueError):
        fields.energy(f, double_well)


def test_pde_residual_exact_well(double_well):
    g = fields.Grid(dim=2, half_width=3.0, points=61)
    assert fields.pde_residual(fields.constant_field(g, [1.0]), double_well) == 0.0


def test_pde_residual_second_order(double_well):
    vals = []
    for P in (81, 161):
        g = fields.Grid(dim=2, half_width=4.0, points=P)
        f = fields.field_from_function(g, slab_fn, 1)
        vals.append(fields.pde_residual(f, double_well))
    assert vals[0] / vals[1] >= 3.5


def test_pde_residual_witness(double_well):
    g = fields.Grid(dim=2, half_width=2.0, points=21)
    rng = np.random.default_rng(1)
    f = fields.VectorField(g, rng.normal(size=g.shape + (1,)))
    assert fields.pde_residual(f, double_well) > 1.0


# ---------------------------------------------------------------------------
# initial data


def test_initial_guess_structure(junction, triple_well, triangle_profile):
    u0 = junction["initial"]
    rm = junction["region_map"]
    # deep in the base region: the base well, within exponential accuracy
    deep = u0.interp(np.array([[6.0, 0.0]]))[0]
    assert np.linalg.norm(deep - triple_well.wells[0]) < 1e-8
    # on a region wall away from the junction: the transported midpoint value
    wall_pt = 5.0 * np.array([np.cos(np.pi / 3), np.sin(np.pi / 3)])
    mid = triangle_profile.sample(np.array([0.0]))[0]
    val = u0.interp(wall_pt[None, :])[0]
    assert np.linalg.norm(val) == pytest.approx(np.linalg.norm(mid), abs=1e-3)
    assert fields.equivariance_residual_pairs(u0, fields.as_pairs(junction["region_map"].group)) < 0.05
    _ = rm


def test_initial_guess_symmetrize_fixed_point(junction, dihedral3):
    u0 = junction["initial"]
    s = groups.symmetrize(u0, dihedral3)
    # projection moves the smooth equivariant guess only at interpolation level
    inner = (np.linalg.norm(u0.grid.nodes, axis=1) <= 0.9 * u0.grid.half_width).reshape(
        u0.grid.shape
    )
    h = u0.grid.spacing
    assert np.max(np.abs((s.values - u0.values)[inner])) <= 2 * h**2 * 18.0


def test_initial_guess_rejects_foreign_profile(double_well, triangle_region, dihedral3):
    prof = connect.solve_connection(double_well, [-1.0], [1.0], 6.0, 600)
    grid = fields.Grid(dim=2, half_width=4.0, points=41)
    with pytest.raises(ValueError):
        fields.initial_guess(dihedral3, triangle_region, prof, grid)


# ---------------------------------------------------------------------------
# minimize


def test_minimize_slab_converges_to_tanh(double_well):
    g = fields.Grid(dim=2, half_width=8.0, points=161)
    f0 = fields.field_from_function(g, slab_fn, 1)
    pairs = fields.reflection_pairs(2, 1)
    opts = fields.SolveOptions(residual_target=1e-5, max_iter=30_000, k_sym=10, check_every=50)
    res = fields.minimize(f0, double_well, symmetry=pairs, opts=opts)
    assert res.converged
    exact = np.tanh(g.nodes[:, 0] / np.sqrt(2.0)).reshape(g.shape)
    assert np.max(np.abs(res.field.values[..., 0] - exact)) <= 5e-3


def test_minimize_energy_monotone(junction):
    hist = junction["result"].energy_history
    assert all(b <= a + 1e-12 for a, b in zip(hist, hist[1:]))


def test_minimize_junction_contract(junction):
    res = junction["result"]
    assert res.converged
    assert res.residual <= 1e-3
    # preservation: both the strict form and the 2x output contract
    assert res.equivariance_after <= res.equivariance_before + 5e-9
    assert res.equivariance_after <= 2.0 * res.equivariance_before + 5e-9


def test_minimize_positivity_monitor(junction, dihedral3):
    # monitored, not enforced: the discrete minimizer may leave the chamber
    # by a small discretization-level excursion
    v = fields.positivity_violation(junction["result"].field, dihedral3.wall_normals)
    assert 0.0 <= v <= 0.01


def test_minimize_immediate_return(double_well):
    g = fields.Grid(dim=2, half_width=3.0, points=41)
    f = fields.constant_field(g, [1.0])
    res = fields.minimize(f, double_well, opts=fields.SolveOptions(residual_target=1e-8))
    assert res.iterations == 0 and res.converged


def test_minimize_liouville_growth(junction, triple_well):
    # nonconstant junction: energy over B_R grows at least linearly in R
    from multiwell import diagnostics

    radii = np.linspace(2.0, 7.5, 8)
    mono = diagnostics.monotonicity_profile(junction["result"].field, triple_well, [0, 0], radii)
    E = mono["energies"]
    slopes = np.diff(E) / np.diff(radii)
    assert np.all(slopes > 0.5)  # well above zero: no finite-energy profile


def test_fixed_step_stability_guard(double_well):
    g = fields.Grid(dim=2, half_width=2.0, points=21)
    f = fields.constant_field(g, [0.5])
    with pytest.raises(ValueError):
        fields.minimize(
            f, double_well, opts=fields.SolveOptions(dt=1.0, step_rule="fixed")
        )


def test_nan_abort(double_well):
    g = fields.Grid(dim=2, half_width=2.0, points=21)
    vals = np.full(g.shape + (1,), 1e8)
    f = fields.VectorField(g, vals)
    with pytest.raises(fields.SolveError):
        fields.minimize(f, double_well, opts=fields.SolveOptions(step_rule="fixed", max_iter=50))


# ---------------------------------------------------------------------------
# solve_dirichlet


def test_dirichlet_interior_tracks_profile(slab_solution):
    res = slab_solution["result"]
    g = slab_solution["grid"]
    assert res.converged
    exact = np.tanh(g.nodes[:, 0] / np.sqrt(2.0)).reshape(g.shape)
    err = np.abs(res.field.values[..., 0] - exact)
    assert err[1:-1, 1:-1].max() <= 1e-3


def test_dirichlet_constant_well_data(double_well):
    # constant data is not odd in u1, so the default reflection action must
    # be dropped explicitly
    g = fields.Grid(dim=2, half_width=2.0, points=41)
    f0 = fields.constant_field(g, [1.0])
    res = fields.solve_dirichlet(
        f0, double_well, np.ones(g.shape + (1,)), opts=fields.SolveOptions(), symmetry=[]
    )
    assert res.iterations == 0
    assert np.all(res.field.values == 1.0)


def test_dirichlet_rejects_asymmetric_data(double_well):
    g = fields.Grid(dim=2, half_width=2.0, points=41)
    f0 = fields.constant_field(g, [0.0])

    def bad(pts):
        return (pts[:, 0] + 0.3)[:, None]  # not odd in x1

    with pytest.raises(ValueError):
        fields.solve_dirichlet(f0, double_well, bad)


# ---------------------------------------------------------------------------
# 3D smoke test and persistence


def test_tetra_3d_descent_smoke(tetra_well, tetrahedral):
    rm = groups.build_region_map(tetrahedral, potentials.TETRA_A1)
    prof = connect.solve_connection(tetra_well, rm.wells[rm.well_index(tetra_well.wells[1])], rm.wells[0], 5.0, 500, tol=1e-8)
    grid = fields.Grid(dim=3, half_width=4.0, points=25)
    u0 = fields.initial_guess(tetrahedral, rm, prof, grid)
    r0 = fields.pde_residual(u0, tetra_well)
    opts = fields.SolveOptions(residual_target=1e-6, max_iter=300, k_sym=10, check_every=100)
    res = fields.minimize(u0, tetra_well, symmetry=tetrahedral, opts=opts)
    hist = res.energy_history
    assert all(b <= a + 1e-12 for a, b in zip(hist, hist[1:]))
    assert res.residual < r0
    assert res.equivariance_after <= 2.0 * res.equivariance_before + 5e-9


def test_field_csv_roundtrip_bitwise(tmp_path, junction):
    f = junction["result"].field
    csv = tmp_path / "f.csv"
    meta = tmp_path / "f.json"
    fields.save_field(f, csv, meta, extra_meta={"note": "junction"})
    back = fields.load_field(csv, meta)
    assert np.array_equal(back.values, f.values)  # 17 significant digits round-trip
    assert back.grid == f.grid
