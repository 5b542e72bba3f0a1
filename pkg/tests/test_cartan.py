import numpy as np
import pytest

from engelcr import cartan, cohomology, models
from engelcr.engel import EngelStructure
from engelcr.errors import InsufficientOrder
from engelcr.fields import pushforward
from engelcr.jets import exp, log

import oracles

P0 = (0.0, 0.0, 0.0, 0.0)
RNG = np.random.default_rng(5)
POINTS = [tuple(RNG.uniform(-1, 1, 4)) for _ in range(5)]
GENERIC = {"A1": 0.1, "A2": -0.05, "B1": 0.03, "B2": 0.02, "B3": 0.05,
           "B4": -0.04, "B5": 0.02, "B6": 0.03, "B7": -0.01, "B8": 0.02}
PG = (0.15, -0.1, 0.05, 0.2)


def ode_B(x, y, p, q):
    return q ** 3 * 0.5 + x * p * q - 0.3 * y * y + p * p * q * 0.2


def ode_B_sym():
    x, y, p, q = oracles.CHART
    return q ** 3 / 2 + x * p * q - oracles.sp.Rational(3, 10) * y ** 2 \
        + oracles.sp.Rational(1, 5) * p ** 2 * q


# -- connection coefficients -------------------------------------------------


def test_coefficients_cubic():
    for p in POINTS:
        c = cartan.connection_coefficients(models.cubic(), p, 1.0)
        for k in ("x0", "2y", "32", "3x", "3y", "20", "30", "2x", "y0"):
            assert c[k] == 0.0


@pytest.mark.parametrize("t", [1.0, 0.5, 2.0, -1.5])
def test_fixed_coefficients_and_dual(t):
    E = models.normal_form_model(GENERIC)
    c = cartan.connection_coefficients(E, PG, t)
    assert c["22"] == t ** 2 and c["33"] == t ** 3
    assert c["2x"] == 0 and c["y0"] == 0
    b = c.dual()
    assert abs(b["33"] - 1 / c["33"]) < 1e-12 and abs(b["22"] - 1 / c["22"]) < 1e-12


def test_coefficients_and_invariants_against_symbolic_oracle():
    E = models.ode_normal_coordinates(ode_B)
    p = (0.2, -0.3, 0.4, 0.5)
    alphas, inv = oracles.ode_invariants(ode_B_sym(), p)
    c = cartan.connection_coefficients(E, p, 1.0)
    for k, v in alphas.items():
        assert abs(c[k] - v) <= 1e-6 * max(1.0, abs(v)), k
    got = cartan.essential_curvatures(E, p, 1.0)
    for k, v in inv.items():
        assert abs(got[k].value - v) <= 1e-6 * max(1.0, abs(v)), k


# -- essential curvatures ---------------------------------------------------


def test_essential_cubic():
    for p in POINTS:
        for t in (1.0, 3.0):
            inv = cartan.essential_curvatures(models.cubic(), p, t)
            assert all(v.value == 0 for v in inv.values())


def test_weights_and_scaling_law():
    E = models.normal_form_model(GENERIC)
    one = cartan.essential_curvatures(E, PG, 1.0)
    assert {k: v.weight for k, v in one.items()} == {"Rx_y2": 2, "Ry_y2": 2, "R2_x3": 2,
                                                      "Ry_x3": 3}
    for t in (2.0, -0.7):
        two = cartan.essential_curvatures(E, PG, t)
        for k in one:
            assert abs(two[k].value - t ** one[k].weight * one[k].value) <= 1e-12


def test_scaling_law_against_bracket_pipeline():
    # R^x_{y2} is k^x_{y2}, computed from Vhat brackets at fibre value t
    E = models.normal_form_model(GENERIC)
    lc = cartan.local_connection(E, PG, 6)
    ess = lc.essential()
    for t in (1.0, 2.0):
        tab = cartan.bracket_curvature_table(lc, 3)
        pairs = {"Rx_y2": ("x", "y", "2"), "Ry_y2": ("y", "y", "2"),
                 "R2_x3": ("2", "x", "3"), "Ry_x3": ("y", "x", "3")}
        for name, key in pairs.items():
            direct = tab[key].at(t)
            via = t ** cartan.ESSENTIAL_WEIGHTS[name] * ess[name].at(1.0)
            assert abs(direct - via) <= 1e-8 * max(1.0, abs(via))


def test_single_B3_values():
    inv = cartan.essential_curvatures(models.normal_form_model({"B3": 0.05}), P0)
    assert abs(inv["Rx_y2"].value) < 1e-12 and abs(inv["R2_x3"].value) < 1e-12
    assert abs(inv["Ry_y2"].value + 0.15) < 1e-12


# -- curvature table ---------------------------------------------------------


def test_table_cubic_zero():
    for method in ("formula", "bracket"):
        tab = cartan.curvature_table(models.cubic(), POINTS[0], 1.0, 5, 7, method=method)
        assert max(abs(w.at(1.0)) for w in tab.values()) == 0


def test_table_order_requirements():
    E = models.normal_form_model(GENERIC)
    with pytest.raises(InsufficientOrder):
        cartan.curvature_table(E, PG, 1.0, 4, order=5)
    with pytest.raises(InsufficientOrder):
        cartan.curvature_table(E, PG, 1.0, 5, order=6)


def test_homogeneity2_block_and_low_homogeneities():
    E = models.normal_form_model(GENERIC)
    tab = cartan.curvature_table(E, PG, 1.0, 4, method="bracket")
    inv = cartan.essential_curvatures(E, PG)
    ry = inv["Ry_y2"].value
    assert abs(tab[("2", "y", "3")].at(1) - ry) < 1e-8
    assert abs(tab[("3", "2", "3")].at(1) - ry) < 1e-8
    for key, w in tab.items():
        if cartan.homogeneity(*key) <= 1:
            assert abs(w.at(1)) < 1e-9


def test_homogeneity2_exact_parts_vanish():
    lc = cartan.local_connection(models.normal_form_model(GENERIC), PG, 6)
    ess = lc.essential()
    expected = {("x", "y", "2"): ess["Rx_y2"], ("y", "y", "2"): ess["Ry_y2"],
                ("2", "x", "3"): ess["R2_x3"], ("2", "y", "3"): ess["Ry_y2"],
                ("3", "2", "3"): ess["Ry_y2"]}
    for key, (exact, rest) in cartan.homogeneity2_expressions(lc).items():
        if exact is not None:
            assert abs(exact.value) < 1e-8
        if rest is not None:
            assert abs(rest.value - expected[key].at(1.0)) < 1e-8
    assert abs(cartan.exact_part_b3(lc).value) < 1e-8


def test_two_pipelines_agree_through_homogeneity_5():
    E = models.normal_form_model(GENERIC)
    f = cartan.curvature_table(E, PG, 1.0, 5, 7, method="formula")
    b = cartan.curvature_table(E, PG, 1.0, 5, 7, method="bracket")
    assert f.keys() == b.keys() and len(f) == 30
    for k in f:
        ref = b[k].at(1.0)
        assert abs(f[k].at(1.0) - ref) <= 1e-5 * max(1.0, abs(ref)), k


def test_homogeneity3_exact_part_via_cohomology():
    E = models.normal_form_model(GENERIC)
    tab = cartan.curvature_table(E, PG, 1.0, 4, method="bracket")
    c = cartan.curvature_cochain(tab)
    split = cohomology.classify_curvature_cochain(c, 3)
    assert split.exact.max_abs() < 1e-8
    ry_x3 = cartan.essential_curvatures(E, PG)["Ry_x3"].value
    assert abs(split.closed[("y", "x", "3")] - ry_x3) < 1e-8
    two = cohomology.classify_curvature_cochain(c, 2)
    assert two.exact.max_abs() < 1e-8 and two.non_closed.max_abs() < 1e-8


# -- connection form and global scale ---------------------------------------


def test_connection_form_cubic():
    form = cartan.connection_form(models.cubic(), POINTS[0])
    assert all(j.max_abs() == 0 for j in form.frame_components.values())
    assert form.closed and form.residual == 0


def _lam(x, y, u1, u2):
    return exp(x * 0.5 - x * x * 0.3)


def test_rescaled_cubic_closed_and_f_recovered():
    E = models.rescaled(models.cubic(), _lam)
    p = (0.1, 0.2, 0.3, -0.1)
    form = cartan.connection_form(E, p)
    assert form.closed
    res = cartan.global_scale_test(E, p)
    assert res.closed and res.Ty_residual < 1e-6 and res.Tx_residual < 1e-6
    # f = const * lambda^2; f^(-1/2) (T_x, T_y) is the flat frame
    from engelcr.jets import coordinate_jets
    loglam = log(_lam(*coordinate_jets(p, res.log_f.order)))
    diff = res.log_f - loglam * 2.0
    assert np.max(np.abs(diff.coeffs[1:])) < 1e-8
    assert abs(res.flattening_multiplier.value - 1.0) < 1e-14


def test_global_scale_cubic_and_generic():
    res = cartan.global_scale_test(models.cubic(), POINTS[1])
    assert res.closed and res.f.max_abs() == 1.0 and np.all(res.f.coeffs[1:] == 0)
    gen = cartan.global_scale_test(models.normal_form_model(GENERIC), PG)
    assert not gen.closed and gen.f is None and gen.residual > 1e-3


# -- verdicts -----------------------------------------------------------------


def test_flatness():
    assert cartan.flatness_test(models.cubic(), POINTS).flat
    assert not cartan.flatness_test(models.normal_form_model({"B3": 0.1}), [P0]).flat


def test_flatness_under_chart_shear():
    a, b = 0.7, -0.4
    inverse = lambda x, y, u1, u2: (x, y, u1, u2 - a * x * x - b * y * u1)
    jac = lambda x, y, u1, u2: [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 1, 0],
                                [2 * a * x, b * u1, b * y, 1]]
    V = models.model_fields()
    E = EngelStructure(pushforward(V["x"], inverse, jac), pushforward(V["y"], inverse, jac))
    res = cartan.flatness_test(E, POINTS)
    assert res.flat and res.max_residual < 1e-6


def test_chart_invariance_of_perturbed_invariants():
    # the normal-coordinate model in a sheared chart: invariants at matched points agree
    V = models.ode_normal_coordinates(ode_B)
    a = 0.3
    forward = lambda x, y, p, q: (x, y, p, q + a * x * p)
    inverse = lambda x, y, p, q: (x, y, p, q - a * x * p)
    jac = lambda x, y, p, q: [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 1, 0], [a * p, 0, a * x, 1]]
    E2 = EngelStructure(pushforward(V.X, inverse, jac), pushforward(V.Y, inverse, jac))
    for p in POINTS[:3]:
        p = tuple(0.4 * c for c in p)
        i1 = cartan.essential_curvatures(V, p)
        i2 = cartan.essential_curvatures(E2, forward(*p))
        for k in i1:
            assert abs(i1[k].value - i2[k].value) < 1e-6


def test_umbilicity():
    assert cartan.umbilicity_test(models.cubic(), POINTS[3])
    umb = {"A1": 1.0, "B4": -2.0, "B6": -3.0}
    assert cartan.umbilicity_test(models.normal_form_model(umb), P0)
    assert not cartan.umbilicity_test(models.normal_form_model({**umb, "B8": 0.1}), P0)


# -- distinguished frame and integrability ------------------------------------


def test_distinguished_frame():
    V = models.model_fields()
    fr = cartan.distinguished_frame_at(models.cubic(), P0, 1.0)
    for j in "xy23":
        assert np.allclose(fr[j], V[j].at(P0), atol=0)
    E = models.normal_form_model(GENERIC)
    f1 = cartan.distinguished_frame_at(E, PG, 1.0)
    f2 = cartan.distinguished_frame_at(E, PG, 2.0)
    for j, s in zip("xy23", (2, 2, 4, 8)):
        assert np.allclose(f2[j], s * f1[j], rtol=1e-14, atol=0)


@pytest.mark.parametrize("b1,b2", [(0.03, 0.01), (0.0, 0.02), (0.05, 0.05), (-0.02, 0.04)])
def test_distinguished_V3_y_correction(b1, b2):
    fr = cartan.distinguished_frame_at(models.normal_form_model({"B1": b1, "B2": b2}), P0, 1.0)
    assert abs(fr["3"][1] + (b1 - b2)) < 1e-12
    assert abs(fr["3"][3] - 1.0) < 1e-12


def test_integrability():
    for which in ("y2", "x3", "y3"):
        assert cartan.integrability_check(models.cubic(), POINTS[0], which)[0]
    ok, res = cartan.integrability_check(models.normal_form_model({"B3": 0.05}), P0, "y2")
    assert ok and res < 1e-7
    ok, res = cartan.integrability_check(models.normal_form_model({"B1": 0.05, "B2": 0.0}),
                                         P0, "x3")
    assert not ok and res > 1e-3


def test_integrability_residuals_match_curvatures():
    E = models.normal_form_model(GENERIC)
    inv = cartan.essential_curvatures(E, PG)
    _, r_y2 = cartan.integrability_check(E, PG, "y2")
    assert abs(r_y2 - abs(inv["Rx_y2"].value)) < 1e-9
    _, r_x3 = cartan.integrability_check(E, PG, "x3")
    assert abs(r_x3 - max(abs(inv["Ry_x3"].value), abs(inv["R2_x3"].value))) < 1e-9


def test_curvature_report():
    rep = cartan.curvature_report(models.normal_form_model({"B3": 0.05}), P0)
    assert rep.essential["Ry_y2"][1] == 2
    assert all(abs(v) < 1e-9 for (a, b, c, h), v in rep.full_table.items() if h <= 1)
