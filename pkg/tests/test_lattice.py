import warnings
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from carleman_lbm.lattice import (DistributionField, collide, equilibrium, kolmogorov_init, lbm_step, make_model,
                                  reynolds_report, stream, uniform_field, write_field_csv)

MODELS = ["D1Q3", "D2Q9", "D3Q27"]


def _exact_equilibrium(u, model):
    """Rational evaluation of the second-order equilibrium."""
    cs2 = Fraction(1, 3)
    u = [Fraction(x) for x in u]
    usq = sum(x * x for x in u) / cs2
    out = []
    for c, w in zip(model.velocities, model.weights):
        up = sum(ci * ui for ci, ui in zip(c, u)) / cs2
        out.append(w * (1 + up + Fraction(1, 2) * (up * up - usq)))
    return out


@pytest.mark.parametrize("name", MODELS)
def test_model_moment_identities(name):
    model = make_model(name)
    w, c = model.w, model.c
    assert model.velocity_count == 3 ** model.dimension
    assert sum(model.weights) == 1
    assert all(x > 0 for x in model.weights)
    np.testing.assert_allclose(w @ c, 0, atol=1e-15)
    np.testing.assert_allclose((w[:, None, None] * c[:, :, None] * c[:, None, :]).sum(0),
                               np.eye(model.dimension) / 3, atol=1e-15)


@pytest.mark.parametrize("name", MODELS)
def test_velocity_ordering(name):
    model = make_model(name)
    nonzero = [sum(1 for a in v if a) for v in model.velocities]
    assert model.velocities[0] == (0,) * model.dimension
    assert nonzero == sorted(nonzero)
    assert len(set(model.velocities)) == model.velocity_count


def test_named_velocity_sets():
    assert make_model("D1Q3").velocities == ((0,), (1,), (-1,))
    assert make_model("d2q9").velocity_count == 9
    d3 = make_model("D3Q27")
    assert d3.weights[0] == Fraction(8, 27)
    assert set(d3.weights) == {Fraction(8, 27), Fraction(2, 27), Fraction(1, 54), Fraction(1, 216)}


def test_unknown_model_rejected():
    with pytest.raises(ValueError):
        make_model("D2Q7")


def test_equilibrium_at_rest_is_weights():
    model = make_model("D2Q9")
    np.testing.assert_array_equal(equilibrium([0.0, 0.0], model), model.w)


def test_equilibrium_d1q3_value():
    model = make_model("D1Q3")
    exact = _exact_equilibrium([Fraction(1, 10)], model)
    assert exact == [Fraction(197, 300), Fraction(133, 600), Fraction(73, 600)]
    np.testing.assert_allclose(equilibrium([0.1], model), [0.6566666666666666, 0.22166666666666668,
                                                           0.12166666666666667], rtol=0, atol=1e-15)


def test_equilibrium_rejects_non_finite():
    with pytest.raises(ValueError):
        equilibrium([np.nan, 0.0], make_model("D2Q9"))


def test_equilibrium_warns_above_low_mach_limit():
    with pytest.warns(UserWarning):
        equilibrium([0.19, 0.0], make_model("D2Q9"))


def test_equilibrium_moments_random():
    model = make_model("D2Q9")
    rng = np.random.default_rng(3)
    angle = rng.uniform(0, 2 * np.pi, 1000)
    speed = rng.uniform(0, 0.2, 1000)
    u = np.stack([speed * np.cos(angle), speed * np.sin(angle)], axis=1)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")  # speeds above the low-Mach limit are intended here
        feq = equilibrium(u, model)
    np.testing.assert_allclose(feq.sum(axis=1), 1.0, atol=1e-14)
    np.testing.assert_allclose(feq @ model.c, u, atol=1e-14)


def _random_field(model, dims, rng):
    n = int(np.prod(dims))
    return DistributionField(model, dims, model.w * (1 + 0.3 * rng.standard_normal((n, model.velocity_count))))


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2 ** 31), omega=st.floats(0.01, 1.99))
def test_lbm_step_conserves_mass(seed, omega):
    model = make_model("D2Q9")
    field = _random_field(model, (5, 4), np.random.default_rng(seed))
    after = lbm_step(field, omega)
    assert abs(after.mass - field.mass) <= 1e-12 * abs(field.mass)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2 ** 31), omega=st.floats(0.0, 1.99))
def test_collision_conserves_momentum(seed, omega):
    model = make_model("D2Q9")
    values = _random_field(model, (3, 3), np.random.default_rng(seed)).values
    post = collide(values, model, omega)
    np.testing.assert_allclose(post @ model.c, values @ model.c, atol=1e-12)
    np.testing.assert_allclose(post.sum(1), values.sum(1), atol=1e-12)


@pytest.mark.parametrize("omega", [0.3, 1.0, 1.9])
def test_global_equilibrium_fixed_point(omega):
    model = make_model("D2Q9")
    field = uniform_field(model, (6, 5))
    np.testing.assert_allclose(lbm_step(field, omega).values, field.values, atol=1e-16)


def test_pure_streaming_translates_populations():
    model = make_model("D1Q3")
    values = np.zeros((6, 3))
    values[2] = [0.5, 0.3, 0.2]
    field = DistributionField(model, (6,), values)
    after = lbm_step(lbm_step(field, 0.0), 0.0)
    assert after.values[2, 0] == 0.5
    assert after.values[4, 1] == 0.3
    assert after.values[0, 2] == 0.2
    assert np.count_nonzero(after.values) == 3


def test_streaming_is_a_permutation():
    model = make_model("D2Q9")
    values = np.random.default_rng(0).random((12, 9))
    out = stream(values, model, (4, 3))
    np.testing.assert_array_equal(np.sort(out.ravel()), np.sort(values.ravel()))


def test_lbm_step_rejects_bad_omega():
    field = uniform_field(make_model("D1Q3"), (4,))
    with pytest.raises(ValueError):
        lbm_step(field, 2.0)
    with pytest.raises(ValueError):
        lbm_step(field, -0.1)


def test_field_validation():
    model = make_model("D2Q9")
    with pytest.raises(ValueError):
        DistributionField(model, (2, 2), np.zeros((3, 9)))
    with pytest.raises(ValueError):
        DistributionField(model, (4,), np.zeros((4, 9)))
    with pytest.raises(ValueError):
        DistributionField(model, (2, 2), np.full((4, 9), np.inf))


def test_kolmogorov_profile():
    model = make_model("D2Q9")
    field = kolmogorov_init((48, 48), 0.1, 1, model)
    macro = field.macroscopic()
    np.testing.assert_allclose(macro.density, 1.0, atol=1e-14)
    assert abs(np.abs(macro.velocity).max() - 0.1) < 1e-12
    np.testing.assert_allclose(macro.velocity[:, 1], 0.0, atol=1e-15)


def test_kolmogorov_crossed_profile_peak_speed():
    field = kolmogorov_init((16, 16), 0.1, 1, make_model("D2Q9"), profile="crossed")
    speed = np.linalg.norm(field.macroscopic().velocity, axis=1)
    assert abs(speed.max() - 0.1) < 1e-12


def test_kolmogorov_zero_speed_is_uniform():
    model = make_model("D2Q9")
    field = kolmogorov_init((8, 8), 0.0, 1, model)
    np.testing.assert_allclose(field.values, np.tile(model.w, (64, 1)), atol=1e-16)


def test_kolmogorov_rejects_bad_input():
    with pytest.raises(ValueError):
        kolmogorov_init((8,), 0.1, 1, make_model("D1Q3"))
    with pytest.raises(ValueError):
        kolmogorov_init((8, 8), 0.3, 1, make_model("D2Q9"))


@pytest.mark.parametrize("omega, nu, re", [(1.0, 1 / 6, 28.8), (1.5, 1 / 18, 86.4), (1.9, 1 / 114, 547.2)])
def test_reynolds_report(omega, nu, re):
    rep = reynolds_report(omega, 0.1, 48)
    assert rep.viscosity == pytest.approx(nu, rel=1e-13)
    assert rep.reynolds == pytest.approx(re, rel=1e-12)
    assert rep.kolmogorov_scale == pytest.approx(48 / re ** 0.75, rel=1e-12)


def test_reynolds_rejects_nonpositive_viscosity():
    with pytest.raises(ValueError):
        reynolds_report(2.0, 0.1, 48)


def test_field_csv(tmp_path):
    model = make_model("D2Q9")
    field = kolmogorov_init((4, 4), 0.05, 1, model)
    path = tmp_path / "f.csv"
    write_field_csv(field, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "x,y,p,f"
    assert len(lines) == 1 + 16 * 9
    x, y, p, f = lines[1 + 9 * 5 + 3].split(",")
    assert (int(x), int(y), int(p)) == (1, 1, 3)
    assert float(f) == field.values[5, 3]
