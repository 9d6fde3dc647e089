"""Family specs, parameter binding, and hypothesis validation."""

import math

import numpy as np
import pytest

from ifslab.errors import BindError, ValidationError
from ifslab.sweep import preset
from ifslab.system import FamilySpec, StepWeight, bind, validate


def _affine_pair():
    return FamilySpec(
        maps=("p*x", "p*x + 1 - p"),
        weights=("0.5", "0.5"),
        lambda_interval=(0.05, 0.95),
        theta_interval=(0.0, 1.0),
        default_lambda=0.5,
        default_theta=0.5,
        name="affine_pair",
    )


# ---------------------------------------------------------------------------
# binding
# ---------------------------------------------------------------------------


def test_bind_halving_maps():
    inst = bind(preset("simple_4_1").family, theta=0.5)
    xs = np.linspace(0, 1, 11)
    assert np.allclose(inst.branches[0].map(xs), xs / 2, atol=0)
    assert np.allclose(inst.branches[1].map(xs), xs / 2 + 0.5, atol=1e-15)
    assert inst.branches[0].weight(0.3) == 0.5
    assert inst.branches[1].weight(0.3) == 0.5


def test_bind_middle_third_maps_at_default():
    inst = bind(preset("cantor").family)  # default lambda = 0
    xs = np.linspace(0, 1, 7)
    assert np.allclose(inst.branches[0].map(xs), xs / 3, atol=1e-16)
    assert np.allclose(inst.branches[1].map(xs), xs / 3 + 2 / 3, atol=1e-15)


def test_bind_oscillation_family_at_critical_parameter():
    # the perturbation term vanishes at the critical parameter value
    inst = bind(preset("ex_4_3").family, lam=0.25)
    xs = np.linspace(0, 1, 7)
    assert np.allclose(inst.branches[0].map(xs), 0.25 * xs + 0.01, atol=1e-16)
    assert np.allclose(inst.branches[1].map(xs), 0.25 * xs + 2 / 3, atol=1e-15)


def test_bind_rejects_out_of_interval_parameters():
    fam = _affine_pair()
    with pytest.raises(BindError):
        bind(fam, lam=0.999)
    with pytest.raises(BindError):
        bind(fam, theta=1.5)


def test_bind_uses_declared_defaults():
    inst = bind(_affine_pair())
    assert inst.lam == 0.5 and inst.theta == 0.5


def test_bind_rejects_expression_that_fails_at_probe():
    fam = FamilySpec(
        maps=("x/2", "x/2 + 1/(p - 0.5)"),
        weights=("0.5", "0.5"),
        lambda_interval=(0.4, 0.6),
        theta_interval=(0.0, 1.0),
        default_lambda=0.5,
        default_theta=0.5,
    )
    with pytest.raises(BindError):
        bind(fam, lam=0.5)


# ---------------------------------------------------------------------------
# step weights
# ---------------------------------------------------------------------------


def test_step_weight_is_right_continuous_at_breakpoint():
    inst = bind(preset("ex_4_3").family)  # theta default 0.25
    g1 = inst.branches[0].weight
    assert g1(0.4999) == 0.25
    assert g1(0.5) == 0.75  # the breakpoint takes the right piece
    assert g1(0.7) == 0.75
    g2 = inst.branches[1].weight
    assert g2(0.4999) == 0.75
    assert g2(0.5) == 0.25


def test_step_weight_array_evaluation_matches_scalar():
    inst = bind(preset("ex_4_4").family, theta=0.3)
    xs = np.array([0.0, 0.25, 0.4999, 0.5, 0.75, 1.0])
    g = inst.branches[0].weight
    assert np.array_equal(g(xs), np.array([g(float(x)) for x in xs]))


def test_step_weight_requires_increasing_interior_breakpoints():
    with pytest.raises(ValidationError):
        StepWeight((0.6, 0.4), ("p", "1 - p", "p"))
    with pytest.raises(ValidationError):
        StepWeight((0.0,), ("p", "1 - p"))


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------


def test_validate_middle_third_hand_numbers():
    rep = validate(bind(preset("cantor").family))
    assert rep.lip == pytest.approx((1 / 3, 1 / 3), abs=1e-15)
    assert rep.L == pytest.approx(1 / 3, abs=1e-15)
    assert rep.normalization_residual == 0.0
    assert rep.disjoint_images
    assert rep.holder_alpha == 1.0  # -log(1/3)/log 2 > 1 is clamped
    assert rep.valid and rep.dimension_ready


def test_validate_halving_images_touch():
    rep = validate(bind(preset("simple_4_1").family))
    assert rep.L == pytest.approx(0.5)
    assert not rep.disjoint_images  # closed images share the midpoint
    assert rep.valid and not rep.dimension_ready


def test_validate_flags_unnormalized_weights():
    fam = FamilySpec(
        maps=("x/3", "x/3 + 2/3"),
        weights=("0.6", "0.6"),
        lambda_interval=(0.0, 1.0),
        theta_interval=(0.0, 1.0),
        default_lambda=0.5,
        default_theta=0.5,
    )
    rep = validate(bind(fam))
    assert rep.normalization_residual == pytest.approx(0.2, abs=1e-12)
    assert not rep.normalization_ok
    assert not rep.valid


def test_validate_flags_expanding_maps():
    fam = FamilySpec(
        maps=("1.2*x", "x/3 + 2/3"),
        weights=("0.5", "0.5"),
        lambda_interval=(0.0, 1.0),
        theta_interval=(0.0, 1.0),
        default_lambda=0.5,
        default_theta=0.5,
    )
    rep = validate(bind(fam))
    assert not rep.contraction_ok or not rep.maps_into_domain
    assert not rep.valid


def test_contraction_factor_formula_is_exact():
    # L must equal sum_i sup(g_i) * sup|dT_i| exactly as computed
    inst = bind(preset("ex_4_3").family)  # theta 0.25: sup g_i = 0.75, lip = 0.25
    rep = validate(inst)
    assert rep.L == pytest.approx(sum(s * l for s, l in zip(rep.weight_sup, rep.lip)), abs=0)
    assert rep.L == pytest.approx(0.375, abs=1e-15)
    assert rep.weight_sup == pytest.approx((0.75, 0.75))
    assert rep.holder_a == pytest.approx(0.25, abs=1e-15)


def test_affine_lipschitz_exact_at_any_grid():
    for grid_n in (16, 257, 4096):
        rep = validate(bind(_affine_pair(), lam=0.37), grid_n=grid_n)
        assert rep.lip == pytest.approx((0.37, 0.37), abs=1e-15)


def test_validate_warns_on_discontinuous_weights():
    rep = validate(bind(preset("ex_4_3").family))
    assert any("discontinuous" in w for w in rep.warnings)


def test_holder_exponent_definition():
    rep = validate(bind(_affine_pair(), lam=0.6))
    assert rep.holder_a == pytest.approx(0.6)
    assert rep.holder_alpha == pytest.approx(min(1.0, -math.log(0.6) / math.log(2.0)))


def test_derivative_lower_bound():
    rep = validate(bind(preset("cantor").family))
    assert rep.rho_est == pytest.approx(1 / 3, abs=1e-15)
    assert rep.rho_positive


def test_validation_report_summary_lines_name_verdicts():
    rep = validate(bind(preset("cantor").family))
    text = "\n".join(rep.summary_lines())
    for key in ("L=", "normalization=", "contraction=", "maps_into_domain=", "weights_positive="):
        assert key in text


def test_grid_size_guard():
    with pytest.raises(ValidationError):
        validate(bind(preset("cantor").family), grid_n=1)


def test_family_requires_matching_branch_counts():
    with pytest.raises(ValidationError):
        FamilySpec(
            maps=("x/2",),
            weights=("0.5", "0.5"),
            lambda_interval=(0.0, 1.0),
            theta_interval=(0.0, 1.0),
            default_lambda=0.5,
            default_theta=0.5,
        )


def test_family_requires_at_least_two_branches():
    with pytest.raises(ValidationError):
        FamilySpec(
            maps=("x/2",),
            weights=("1.0",),
            lambda_interval=(0.0, 1.0),
            theta_interval=(0.0, 1.0),
            default_lambda=0.5,
            default_theta=0.5,
        )


def test_unbounded_interval_defaults_warn_and_validate():
    with pytest.warns(UserWarning):
        fam = FamilySpec(maps=("x/2", "(x + 1)/2"), weights=("0.5", "0.5"))
    rep = validate(bind(fam, lam=0.0, theta=0.0))
    assert any("unbounded" in w for w in rep.warnings)
