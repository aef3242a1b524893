import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from trivlab.wilson_space import (
    FixedPointKind,
    FlowField,
    NonMonotoneObservableError,
    PreconditionError,
    blocking_semigroup_check,
    find_fixed_points,
    linearize_at,
    parametric_representation,
    trace_trajectory,
    trace_unstable_manifold,
)

# velocity dp1/dt = p1, dp2/dt = -p2
LINEAR_SADDLE = FlowField.from_velocity(2, (((1.0, (1, 0)),), ((-1.0, (0, 1)),)))
# velocity dp1/dt = p1, dp2/dt = -p2 + p1^2; unstable manifold p2 = p1^2 / 3
QUADRATIC = FlowField.from_velocity(2, (((1.0, (1, 0)),), ((-1.0, (0, 1)), (1.0, (2, 0)))))
BOX = [(-1.0, 1.0), (-1.0, 1.0)]


def p1(p):
    return float(p[0])


def p2(p):
    return float(p[1])


# -- fixed points --------------------------------------------------------------


def test_linear_field_single_root():
    fps = find_fixed_points(FlowField(2, (((1.0, (1, 0)),), ((-1.0, (0, 1)),))), BOX)
    assert len(fps) == 1
    assert np.allclose(fps[0].location, 0.0)


def test_factorized_field_two_roots():
    field = FlowField(2, (((1.0, (2, 0)), (-1.0, (1, 0))), ((-1.0, (0, 1)),)))
    fps = find_fixed_points(field, [(-2.0, 2.0), (-2.0, 2.0)])
    locs = [fp.location for fp in fps]
    assert len(locs) == 2
    assert np.allclose(locs[0], [0.0, 0.0], atol=1e-12)
    assert np.allclose(locs[1], [1.0, 0.0], atol=1e-12)
    assert all(fp.residual <= 1e-10 for fp in fps)


def test_substitution_field_single_root():
    field = FlowField(2, (((1.0, (1, 0)),), ((-1.0, (0, 1)), (1.0, (2, 0)))))
    fps = find_fixed_points(field, BOX)
    assert len(fps) == 1 and np.allclose(fps[0].location, 0.0)


def test_no_root_in_box_is_empty():
    field = FlowField(2, (((1.0, (0, 0)),), ((1.0, (0, 1)),)))  # F1 = 1 never vanishes
    assert find_fixed_points(field, BOX) == []


def test_box_and_seed_preconditions():
    with pytest.raises(ValueError):
        find_fixed_points(LINEAR_SADDLE, [(1.0, 1.0), (-1.0, 1.0)])
    with pytest.raises(ValueError):
        find_fixed_points(LINEAR_SADDLE, BOX, 1)


@pytest.mark.parametrize("seeds", [2, 3, 5])
def test_doubling_seeds_keeps_roots(seeds):
    field = FlowField(2, (((1.0, (3, 0)), (-1.0, (1, 0))), ((1.0, (0, 2)), (-0.25, (0, 0)))))
    box = [(-2.0, 2.0), (-2.0, 2.0)]
    coarse = [fp.location for fp in find_fixed_points(field, box, seeds)]
    fine = [fp.location for fp in find_fixed_points(field, box, 2 * seeds)]
    for x in coarse:
        assert any(np.linalg.norm(x - y) < 1e-8 for y in fine)


# -- linearization ------------------------------------------------------------


def test_saddle_classification():
    fp = linearize_at(FlowField(2, (((-1.0, (1, 0)),), ((1.0, (0, 1)),))), [0.0, 0.0])
    assert sorted(fp.eigenvalues) == [-1.0, 1.0]
    assert (fp.n_relevant, fp.n_irrelevant, fp.kind) == (1, 1, FixedPointKind.SADDLE)


def test_quadratic_term_drops_from_jacobian():
    a = linearize_at(FlowField(2, (((-1.0, (1, 0)),), ((1.0, (0, 1)),))), [0.0, 0.0])
    b = linearize_at(FlowField(2, (((-1.0, (1, 0)),), ((1.0, (0, 1)), (-1.0, (2, 0))))), [0.0, 0.0])
    assert np.allclose(a.eigenvalues, b.eigenvalues)


def test_sink():
    fp = linearize_at(FlowField(2, (((1.0, (1, 0)),), ((1.0, (0, 1)),))), [0.0, 0.0])
    assert np.allclose(fp.eigenvalues, [-1.0, -1.0])
    assert fp.kind is FixedPointKind.SINK


def test_marginal_is_degenerate():
    fp = linearize_at(FlowField(2, (((1.0, (2, 0)),), ((1.0, (0, 1)),))), [0.0, 0.0])
    assert fp.kind is FixedPointKind.DEGENERATE and fp.n_marginal == 1


def test_off_root_rejected():
    with pytest.raises(PreconditionError):
        linearize_at(LINEAR_SADDLE, [0.5, 0.0])


@given(st.floats(1e-3, 1e3))
def test_direction_counts_scale_invariant(c):
    for field in (LINEAR_SADDLE, QUADRATIC):
        a = linearize_at(field, [0.0, 0.0])
        b = linearize_at(field.scaled(c), [0.0, 0.0])
        assert (a.n_relevant, a.n_irrelevant, a.n_marginal, a.kind) == (b.n_relevant, b.n_irrelevant, b.n_marginal, b.kind)


# -- manifolds and trajectories ------------------------------------------------


def test_linear_saddle_manifold_is_eigenvector_ray():
    fp = linearize_at(LINEAR_SADDLE, [0.0, 0.0])
    tr = trace_unstable_manifold(LINEAR_SADDLE, fp, 2.0)
    assert np.max(np.abs(tr.p[:, 1])) <= 1e-6
    assert tr.kappa[-1] == pytest.approx(2.0, rel=1e-6)


def test_quadratic_manifold():
    fp = linearize_at(QUADRATIC, [0.0, 0.0])
    for branch in (1, -1):
        tr = trace_unstable_manifold(QUADRATIC, fp, 1.5, branch=branch)
        sel = np.abs(tr.p[:, 0]) <= 1.0
        assert sel.sum() > 10
        assert np.max(np.abs(tr.p[sel, 1] - tr.p[sel, 0] ** 2 / 3.0)) <= 1e-5


def test_mirror_branch_same_kappa():
    fp = linearize_at(QUADRATIC, [0.0, 0.0])
    up = trace_unstable_manifold(QUADRATIC, fp, 1.5, branch=1)
    down = trace_unstable_manifold(QUADRATIC, fp, 1.5, branch=-1)
    t = np.linspace(0.0, min(up.t[-1], down.t[-1]), 50)
    assert np.allclose(np.interp(t, up.t, up.kappa), np.interp(t, down.t, down.kappa), rtol=1e-8, atol=1e-12)
    assert np.allclose(np.interp(t, up.t, up.p[:, 0]), -np.interp(t, down.t, down.p[:, 0]), atol=1e-10)


def test_two_relevant_directions_rejected():
    source = FlowField(2, (((-1.0, (1, 0)),), ((-1.0, (0, 1)),)))
    with pytest.raises(PreconditionError, match="n_relevant=2"):
        trace_unstable_manifold(source, linearize_at(source, [0.0, 0.0]), 1.0)


def test_saddle_invariant_and_approach():
    ref = np.array([[-10.0, 0.0], [10.0, 0.0]])
    tr = trace_trajectory(LINEAR_SADDLE, [1e-3, 1.0], 5.0, reference=ref, n_samples=200)
    prod = tr.p[:, 0] * tr.p[:, 1]
    assert np.max(np.abs(prod - 1e-3)) <= 1e-8
    assert np.all(np.diff(tr.ref_distance) < 0)


def test_critical_surface_converges():
    tr = trace_trajectory(LINEAR_SADDLE, [0.0, 1.0], 30.0)
    assert np.linalg.norm(tr.p[-1]) < 1e-10


def test_blow_up_truncated():
    field = FlowField.from_velocity(1, (((1.0, (2,)),),))  # dp/dt = p^2 blows up at t = 1
    tr = trace_trajectory(field, [1.0], 5.0, p_max=1e6)
    assert "truncated" in tr.diagnostic
    assert tr.t[-1] < 1.0


# -- two-step limit ------------------------------------------------------------


def test_parametric_linear_bijection():
    fp = linearize_at(LINEAR_SADDLE, [0.0, 0.0])
    tab = parametric_representation(LINEAR_SADDLE, {"m": p1}, fp, [0.1, 0.2, 0.4, 0.8])
    assert np.all(np.diff(tab.kappa) > 0)
    assert np.allclose(tab.ideal["m"], [0.1, 0.2, 0.4, 0.8], atol=1e-9)


def test_parametric_quadratic_launch_independent():
    fp = linearize_at(QUADRATIC, [0.0, 0.0])
    tab = parametric_representation(QUADRATIC, {"p1": p1, "p2": p2}, fp, np.linspace(0.1, 0.9, 9), mass_key="p1")
    assert tab.spread("p2") <= 1e-4
    assert np.max(np.abs(tab.launched["p2"] - tab.ratios**2 / 3.0)) <= 1e-4


def test_parametric_different_launch_directions():
    fp = linearize_at(QUADRATIC, [0.0, 0.0])
    obs = {"p1": p1, "p2": p2}
    ratios = np.linspace(0.1, 0.9, 9)
    a = parametric_representation(QUADRATIC, obs, fp, ratios, mass_key="p1", base_point=[0.0, 1.0])
    b = parametric_representation(QUADRATIC, obs, fp, ratios, mass_key="p1", base_point=[0.0, -0.5])
    assert np.max(np.abs(a.launched["p2"] - b.launched["p2"])) <= 1e-4


def test_parametric_non_monotone_rejected():
    fp = linearize_at(QUADRATIC, [0.0, 0.0])
    with pytest.raises(NonMonotoneObservableError):
        parametric_representation(QUADRATIC, {"bump": lambda p: p[0] * (1.0 - p[0])}, fp, [0.1, 0.2, 0.3])


# -- blocking semigroup --------------------------------------------------------


def test_power_semigroup_and_generator():
    # flow dp/dln(l) = 2p, i.e. F = -2p
    field = FlowField(1, (((-2.0, (1,)),),))
    rep = blocking_semigroup_check(lambda n, p: n**2 * p, 2.0, dim=1, field=field)
    assert rep.valid and rep.semigroup_error <= 1e-12
    assert rep.generator_error <= 1e-6
    assert np.allclose(rep.generator, 2.0 * rep.points, atol=1e-6)


def test_additive_shift_rejected():
    rep = blocking_semigroup_check(lambda n, p: p + n, 2.0, dim=2)
    assert not rep.valid
    assert "composition" in rep.diagnostic


def test_semigroup_needs_n_above_one():
    with pytest.raises(ValueError):
        blocking_semigroup_check(lambda n, p: p, 1.0, dim=1)
