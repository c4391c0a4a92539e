import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from pgl_lab import (
    CurvatureProfile,
    GLParams,
    RadialField,
    UnsupportedAnsatz,
    discrete_energy,
    el_residual,
    energy_gradient,
    energy_profile,
    solve_warping,
)
from pgl_lab.functional import energy_increment, energy_hessian, gradient_norm_sq, raw_gradient

from conftest import smooth_profile
from oracles import gaussian_el_operator


def flat(m=3, R=10.0, n=1000):
    return solve_warping(CurvatureProfile.euclidean(), R, n, m=m)


# --- gradient_norm_sq ----------------------------------------------------------

def test_gradient_norm_of_constant_is_zero(flat3):
    assert np.all(gradient_norm_sq(RadialField.scalar(flat3, 0.3)) == 0.0)


def test_gradient_norm_of_linear_profile(flat3):
    w = gradient_norm_sq(RadialField.scalar(flat3, flat3.r))
    assert np.max(np.abs(w - 1.0)) < 1e-12


def test_equivariant_linear_profile_gives_two():
    w2 = flat(m=2, R=5.0, n=500)
    w = gradient_norm_sq(RadialField.equivariant(w2, w2.r, 1))
    assert np.max(np.abs(w - 2.0)) < 1e-9


# --- energy_profile ------------------------------------------------------------

def test_unit_constant_has_zero_energy(flat3, gl2):
    prof = energy_profile(RadialField.scalar(flat3, 1.0), gl2)
    assert np.all(prof.total == 0.0)


@pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
def test_zero_map_ball_energy(flat3, p):
    params = GLParams(p=p, eps=1.0, pot_exponent=3)
    prof = energy_profile(RadialField.scalar(flat3, 0.0), params)
    assert prof.at(1.0) == pytest.approx(math.pi / 3, abs=1e-6)
    assert prof.total[0] == 0.0
    inner = prof.radii >= 0.1
    q = prof.total[inner] / prof.radii[inner]
    assert np.allclose(q, math.pi / 3 * prof.radii[inner] ** 2, rtol=1e-6)
    assert np.all(np.diff(q) > 0)


def test_energy_profile_total_matches_discrete_energy(flat3, gl2):
    phi = smooth_profile(flat3.r, [0.2, 0.5, -0.3], flat3.r_max)
    field = RadialField.scalar(flat3, phi)
    assert energy_profile(field, gl2).total[-1] == pytest.approx(discrete_energy(field, gl2), rel=1e-12)


def test_energy_profile_csv_round_trip(tmp_path, flat3, gl2):
    from pgl_lab.io import read_csv
    prof = energy_profile(RadialField.scalar(flat3, np.cos(flat3.r)), gl2)
    cols = read_csv(prof.to_csv(tmp_path / "energy.csv"))
    assert list(cols) == ["rho", "kinetic", "potential", "total"]
    assert np.array_equal(cols["total"], prof.total)


def test_field_csv_round_trip(tmp_path, flat3):
    field = RadialField.scalar(flat3, np.sin(flat3.r) / 3)
    back = RadialField.from_csv(field.to_csv(tmp_path / "field.csv"), flat3)
    assert np.array_equal(back.phi, field.phi)


def test_field_csv_rejects_other_grid(tmp_path, flat3):
    field = RadialField.scalar(flat3, 0.0)
    path = field.to_csv(tmp_path / "field.csv")
    with pytest.raises(ValueError):
        RadialField.from_csv(path, flat(R=5.0, n=1000))


# --- el_residual ---------------------------------------------------------------

@pytest.mark.parametrize("value", [0.0, 1.0, -1.0])
def test_residual_vanishes_on_trivial_constants(hyp3, value):
    for p in (1.5, 2.0, 3.0):
        res = el_residual(RadialField.scalar(hyp3, value), GLParams(p=p))
        assert np.all(res == 0.0)


def gaussian_error(n, R=3.0):
    w = flat(R=R, n=n)
    res = el_residual(RadialField.scalar(w, np.exp(-w.r**2)), GLParams(p=2.0, eps=1.0))
    exact = np.empty_like(w.r)
    exact[1:] = gaussian_el_operator(w.r[1:])
    exact[0] = -6.0  # limit of (4r^2 - 6) e^{-r^2}
    # the last node holds the natural boundary defect, not L(phi)
    return np.max(np.abs(res - exact)[:-1])


def test_manufactured_residual_is_second_order():
    ratio = gaussian_error(500) / gaussian_error(1000)
    assert 3.5 <= ratio <= 4.5


def test_free_boundary_defect_is_outgoing_flux(flat3, gl2):
    # phi = r: interior residual is (m-1)/r + potential; the outer node loses the
    # outgoing flux so the defect is of size 1/h
    field = RadialField.scalar(flat3, flat3.r / 10)
    res = el_residual(field, gl2)
    assert abs(res[-1]) > 1.0 / flat3.h * 0.01
    pinned = RadialField.scalar(flat3, field.phi, outer_bc="dirichlet")
    assert el_residual(pinned, gl2)[-1] == 0.0


def test_equivariant_requires_p2():
    w2 = flat(m=2, R=5.0, n=200)
    field = RadialField.equivariant(w2, np.tanh(w2.r), 1)
    with pytest.raises(UnsupportedAnsatz):
        el_residual(field, GLParams(p=3.0))
    with pytest.raises(UnsupportedAnsatz):
        energy_profile(field, GLParams(p=2.0, n_target=3))


def test_equivariant_needs_two_dimensions(flat3):
    with pytest.raises(ValueError):
        RadialField.equivariant(flat3, 1.0, 1)


# --- energy_gradient -----------------------------------------------------------

def directional_fd(field, params, v, step):
    plus = discrete_energy(field.with_phi(field.phi + step * v), params)
    minus = discrete_energy(field.with_phi(field.phi - step * v), params)
    return (plus - minus) / (2 * step)


@pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
def test_gradient_matches_finite_differences(hyp3, p):
    params = GLParams(p=p, eps=1.0, delta=1e-3)
    rng = np.random.default_rng(7)
    R = hyp3.r_max
    phi = smooth_profile(hyp3.r, rng.normal(0, 0.5, 5), R)
    v = smooth_profile(hyp3.r, rng.normal(0, 1.0, 5), R)
    field = RadialField.scalar(hyp3, phi)
    analytic = float(np.dot(energy_gradient(field, params) * hyp3.node_volume, v))
    fd = directional_fd(field, params, v, 1e-6)
    assert fd == pytest.approx(analytic, rel=1e-6)


def test_dirichlet_unit_has_zero_gradient(hyp3, gl2):
    field = RadialField.scalar(hyp3, 1.0, outer_bc="dirichlet")
    assert np.all(energy_gradient(field, gl2) == 0.0)


def test_zero_map_gradient_vanishes_and_fd_agrees(flat3, gl2):
    field = RadialField.scalar(flat3, 0.0)
    assert np.all(energy_gradient(field, gl2) == 0.0)
    v = smooth_profile(flat3.r, [1.0, 0.3, 0.2], flat3.r_max)
    assert abs(directional_fd(field, gl2, v, 1e-4)) < 1e-8 * discrete_energy(field, gl2)


def test_gradient_is_minus_residual(hyp3):
    params = GLParams(p=3.0)
    field = RadialField.scalar(hyp3, np.cos(hyp3.r) * 0.4)
    assert np.array_equal(energy_gradient(field, params), -el_residual(field, params))


def test_dirichlet_node_has_zero_gradient(hyp3, gl2):
    field = RadialField.scalar(hyp3, np.cos(hyp3.r) * 0.4, outer_bc="dirichlet")
    g = energy_gradient(field, gl2)
    assert g[-1] == 0.0 and g[-2] != 0.0


def test_energy_increment_matches_difference(hyp3):
    params = GLParams(p=3.0, delta=1e-3)
    field = RadialField.scalar(hyp3, smooth_profile(hyp3.r, [0.3, 0.2, 0.1], hyp3.r_max))
    dphi = 0.05 * np.sin(hyp3.r)
    direct = discrete_energy(field.with_phi(field.phi + dphi), params) - discrete_energy(field, params)
    assert energy_increment(field, params, dphi) == pytest.approx(direct, rel=1e-10)


def test_hessian_matches_gradient_differences(hyp3):
    params = GLParams(p=3.0, delta=1e-3)
    field = RadialField.scalar(hyp3, smooth_profile(hyp3.r, [0.3, 0.2, 0.1], hyp3.r_max))
    v = smooth_profile(hyp3.r, [0.0, 1.0, 0.5], hyp3.r_max)
    diag, off = energy_hessian(field, params)
    hv = diag * v
    hv[:-1] += off * v[1:]
    hv[1:] += off * v[:-1]
    t = 1e-6
    fd = (raw_gradient(field.with_phi(field.phi + t * v), params)
          - raw_gradient(field.with_phi(field.phi - t * v), params)) / (2 * t)
    assert np.max(np.abs(hv - fd)) < 1e-6 * np.max(np.abs(hv))


# --- properties ----------------------------------------------------------------

coeffs = st.lists(st.floats(-1.0, 1.0), min_size=1, max_size=6)


@given(coeffs, st.sampled_from([1.5, 2.0, 3.0]))
def test_energy_profile_nondecreasing(c, p):
    w = solve_warping(CurvatureProfile.constant(-1.0), 4.0, 200, m=3)
    prof = energy_profile(RadialField.scalar(w, smooth_profile(w.r, c, 4.0)), GLParams(p=p))
    assert np.all(np.diff(prof.total) >= 0.0)


@given(st.lists(st.floats(-1.0, 1.0), min_size=201, max_size=201),
       st.floats(0.2, 2.0), st.sampled_from([2, 3]))
def test_potential_bounded_on_unit_ball(vals, eps, pot):
    params = GLParams(eps=eps, pot_exponent=pot)
    assert np.all(params.potential(np.array(vals)) <= 1.0 / (4 * eps**pot) * (1 + 1e-15))


@given(coeffs, st.integers(1, 3))
def test_degree_sign_invariance(c, d):
    w2 = solve_warping(CurvatureProfile.euclidean(), 6.0, 300, m=2)
    phi = np.tanh(w2.r) * (1 + 0.3 * smooth_profile(w2.r, c, 6.0))
    plus = RadialField.equivariant(w2, phi, d)
    minus = RadialField.equivariant(w2, phi, -d)
    params = GLParams()
    assert discrete_energy(plus, params) == discrete_energy(minus, params)
    assert np.array_equal(el_residual(plus, params), el_residual(minus, params))


@given(coeffs)
def test_residual_and_gradient_consistent_on_interior(c):
    # the scaled discrete gradient is a consistent discretization of -L
    errs = []
    for n in (200, 400):
        w = solve_warping(CurvatureProfile.euclidean(), 4.0, n, m=3)
        field = RadialField.scalar(w, smooth_profile(w.r, c, 4.0))
        g = energy_gradient(field, GLParams())
        res = el_residual(field, GLParams())
        errs.append(np.max(np.abs(g + res)))
    assert errs == [0.0, 0.0]


@pytest.mark.parametrize("kwargs", [
    {"p": 0.5}, {"eps": 0.0}, {"n_target": 0}, {"delta": -1.0}, {"p": 3.0, "delta": 0.0},
])
def test_params_validation(kwargs):
    with pytest.raises(ValueError):
        GLParams(**kwargs)


def test_pot_exponent_defaults_to_target_dimension():
    assert GLParams(n_target=3).pot_exponent == 3
    assert GLParams(eps=0.5, n_target=3).pot_scale == pytest.approx(0.125)


def test_regularized_kinetic_is_accurate_for_small_gradients():
    params = GLParams(p=3.0, delta=1e-6)
    assert params.kinetic(0.0) == 0.0
    # (delta^2 + w)^(3/2) - delta^3 = delta^3 * 3/2 * w/delta^2 to leading order
    assert params.kinetic(1e-20) == pytest.approx(0.5 * 1e-6 * 1e-20, rel=1e-6)
    w = np.array([1e-4, 1.0])
    assert np.allclose(params.kinetic(w), ((w + 1e-12) ** 1.5 - 1e-18) / 3, rtol=1e-9, atol=0)


@pytest.mark.parametrize("eps", [1.0, 0.2])
def test_small_eps_changes_only_the_penalty(flat3, eps):
    field = RadialField.scalar(flat3, 0.5)
    prof = energy_profile(field, GLParams(eps=eps))
    assert prof.kinetic[-1] == 0.0
    assert prof.potential[-1] == pytest.approx(energy_profile(field, GLParams()).potential[-1] / eps**2)
