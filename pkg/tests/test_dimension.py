"""Tests for the dimension formulas, oracles, and the pipeline."""

import json

import numpy as np
import pytest
from conftest import bm_carpet_ifs, cantor_ifs
from hypothesis import given, settings
from hypothesis import strategies as st

from affinedim.cocycle import BernoulliWeights, LyapunovSpectrum
from affinedim.dimension import (
    DimensionInputs,
    PipelineConfig,
    bedford_mcmullen_closed_form,
    bedford_mcmullen_ifs,
    full_pipeline,
    kaplan_yorke_equivalence_check,
    ly_dimension,
    lyapunov_dimension,
    telescoping_identity_check,
)
from affinedim.measure import IfsSystem

LOG2, LOG3 = np.log(2.0), np.log(3.0)
BM_DIGITS = ((0, 0), (1, 0), (2, 1))
BM_PROJ = 0.9182958340544898
BM_LY = 1.3389156697687947
BM_KY = 1.3690702464285427
CANTOR_DIM = LOG2 / LOG3


def spectrum_of(chi, mult=None):
    chi = np.asarray(chi, dtype=float)
    mult = tuple(mult) if mult is not None else (1,) * chi.size
    return LyapunovSpectrum(chi, None, mult, 0.0)


def bm_inputs():
    return DimensionInputs(LOG3, 0.0, spectrum_of([LOG2, LOG3]), {1: BM_PROJ}, (1,))


# ---------------------------------------------------------------------------
# formula


def test_ly_dimension_self_similar_degenerate():
    inputs = DimensionInputs(LOG2, 0.0, spectrum_of([LOG3]), {}, ())
    assert ly_dimension(inputs) == pytest.approx(CANTOR_DIM, rel=1e-14)


def test_ly_dimension_bm_components():
    assert ly_dimension(bm_inputs()) == pytest.approx(BM_LY, abs=1e-14)


def test_ly_dimension_total_fiber_collapse():
    inputs = DimensionInputs(LOG3, LOG3, spectrum_of([LOG2, LOG3]), {1: 0.0}, (1,))
    assert ly_dimension(inputs) == 0.0


def test_ly_dimension_missing_projection_rejected():
    with pytest.raises(ValueError):
        DimensionInputs(LOG3, 0.0, spectrum_of([LOG2, LOG3]), {}, (1,))


def test_inputs_validation():
    with pytest.raises(ValueError):
        DimensionInputs(1.0, 1.5, spectrum_of([LOG2, LOG3]), {1: 0.5}, (1,))
    with pytest.raises(ValueError):
        DimensionInputs(1.0, 0.0, spectrum_of([LOG2, LOG3]), {1: 1.7}, (1,))
    with pytest.raises(ValueError):
        DimensionInputs(1.0, 0.0, spectrum_of([LOG2, LOG3]), {2: 0.5}, (2,))


def test_ly_dimension_monotonicity_by_perturbation():
    base = bm_inputs()
    eps = 1e-6
    up_h = DimensionInputs(LOG3 + eps, 0.0, base.spectrum, dict(base.projection_dims), (1,))
    up_fiber = DimensionInputs(LOG3, eps, base.spectrum, dict(base.projection_dims), (1,))
    up_proj = DimensionInputs(LOG3, 0.0, base.spectrum, {1: BM_PROJ + eps}, (1,))
    v = ly_dimension(base)
    assert ly_dimension(up_h) > v
    assert ly_dimension(up_fiber) < v
    assert ly_dimension(up_proj) > v


# ---------------------------------------------------------------------------
# Kaplan-Yorke candidate


def brute_force_ky(h, chi):
    best = np.inf
    best_k = None
    for k in range(1, len(chi) + 1):
        val = (k - 1) + (h - sum(chi[: k - 1])) / chi[k - 1]
        if val < best:
            best, best_k = val, k
    return best, best_k


def test_lyapunov_dimension_bm_value():
    res = lyapunov_dimension(LOG3, [LOG2, LOG3])
    assert res.value == pytest.approx(BM_KY, abs=1e-12)
    assert res.k_argmin == 2 and not res.clamped


def test_lyapunov_dimension_small_entropy():
    chi = [0.5, 0.9, 1.4]
    for h in (0.0, 0.2, 0.5):
        res = lyapunov_dimension(h, chi)
        assert res.value == pytest.approx(h / chi[0], abs=1e-15)
        assert res.k_argmin == 1


def test_lyapunov_dimension_saturates_at_d():
    chi = [0.5, 0.9]
    res = lyapunov_dimension(10.0, chi)
    assert res.value == 2.0 and res.clamped
    assert res.raw > 2.0


def test_lyapunov_dimension_matches_brute_force_exactly():
    rng = np.random.default_rng(7)
    for _ in range(1000):
        d = rng.integers(1, 6)
        chi = np.sort(rng.uniform(0.05, 3.0, size=d))
        h = rng.uniform(0.0, 4.0)
        res = lyapunov_dimension(h, chi)
        expected, k = brute_force_ky(h, list(chi))
        assert res.raw == expected
        assert res.k_argmin == k


# ---------------------------------------------------------------------------
# carpet oracle


def test_bm_closed_form_reference_value():
    oracle = bedford_mcmullen_closed_form(BM_DIGITS, [1 / 3] * 3, 3, 2)
    assert oracle.value == pytest.approx(BM_LY, abs=1e-12)
    assert oracle.projection_dim == pytest.approx(BM_PROJ, abs=1e-12)
    assert oracle.exponents == pytest.approx((LOG2, LOG3))


def test_bm_closed_form_full_grid_is_area():
    digits = [(c, r) for c in range(3) for r in range(2)]
    oracle = bedford_mcmullen_closed_form(digits, [1 / 6] * 6, 3, 2)
    assert oracle.value == pytest.approx(2.0, abs=1e-12)


def test_bm_closed_form_single_digit_zero():
    oracle = bedford_mcmullen_closed_form([(1, 1)], [1.0], 3, 2)
    assert oracle.value == 0.0


def test_bm_closed_form_validation():
    with pytest.raises(ValueError):
        bedford_mcmullen_closed_form(BM_DIGITS, [1 / 3] * 3, 2, 3)  # m must exceed n
    with pytest.raises(ValueError):
        bedford_mcmullen_closed_form([(0, 0), (0, 0)], [0.5, 0.5], 3, 2)
    with pytest.raises(ValueError):
        bedford_mcmullen_closed_form([(5, 0)], [1.0], 3, 2)


def test_bm_oracle_agrees_with_generic_formula_exactly():
    rng = np.random.default_rng(11)
    for _ in range(25):
        m, n = int(rng.integers(3, 7)), 2
        n = int(rng.integers(2, m))
        cells = [(c, r) for c in range(m) for r in range(n)]
        k = int(rng.integers(1, len(cells) + 1))
        chosen = [cells[j] for j in rng.choice(len(cells), size=k, replace=False)]
        p = rng.uniform(0.1, 1.0, size=k)
        p /= p.sum()
        oracle = bedford_mcmullen_closed_form(chosen, p, m, n)
        assert ly_dimension(oracle.as_inputs()) == pytest.approx(oracle.value, abs=1e-12)


def test_bm_ifs_matches_oracle_geometry():
    ifs = bedford_mcmullen_ifs(BM_DIGITS, [1 / 3] * 3, 3, 2)
    assert ifs.n_maps == 3 and ifs.d == 2
    assert np.allclose(ifs.matrices[0], np.diag([1 / 3, 1 / 2]))
    assert np.allclose(ifs.translations[2], [2 / 3, 1 / 2])


# ---------------------------------------------------------------------------
# Kaplan-Yorke equivalence


def test_ky_equivalence_fails_for_carpet():
    res = kaplan_yorke_equivalence_check(bm_inputs(), tol=1e-6)
    assert res.status == "fails"
    assert res.dim_gap == pytest.approx(BM_KY - BM_LY, abs=1e-12)
    assert res.projection_residuals[1] == pytest.approx(1.0 - BM_PROJ, abs=1e-12)


def test_ky_equivalence_holds_self_similar():
    inputs = DimensionInputs(LOG2, 0.0, spectrum_of([LOG3]), {}, ())
    res = kaplan_yorke_equivalence_check(inputs, tol=1e-9)
    assert res.status == "holds"
    assert res.dim_gap <= 1e-12


def test_ky_equivalence_fiber_entropy_violation_flagged():
    inputs = DimensionInputs(LOG2, 0.3, spectrum_of([LOG3]), {}, ())
    res = kaplan_yorke_equivalence_check(inputs, tol=1e-6)
    assert res.status == "fails"
    assert res.fiber_residual == pytest.approx(0.3)


def test_ky_equivalence_tolerance_disagreement_is_inconclusive():
    # dim gap 0.133 exceeds tol but the projection residual 0.067 does not:
    # the two sides of the criterion disagree at this tolerance
    inputs = DimensionInputs(1.0, 0.0, spectrum_of([1.0, 3.0]), {1: 0.8}, (1,))
    res = kaplan_yorke_equivalence_check(inputs, tol=0.08)
    assert res.status == "inconclusive"


# ---------------------------------------------------------------------------
# telescoping identity


def test_telescoping_constant_sequence():
    assert telescoping_identity_check([0.7, 0.7, 0.7], [1.0, 2.0])


def test_telescoping_hand_example():
    # d = 2, H = (1, 0.5, 0), chi = (1, 2): both sides equal 0.75
    assert telescoping_identity_check([1.0, 0.5, 0.0], [1.0, 2.0])


def test_telescoping_validation():
    with pytest.raises(ValueError):
        telescoping_identity_check([1.0, 2.0, 0.0], [1.0, 2.0])
    with pytest.raises(ValueError):
        telescoping_identity_check([1.0, 0.5, 0.0], [2.0, 1.0])
    with pytest.raises(ValueError):
        telescoping_identity_check([1.0, 0.5], [1.0, 2.0])


def test_telescoping_random_fuzz():
    rng = np.random.default_rng(13)
    for _ in range(1000):
        d = rng.integers(1, 7)
        chi = np.sort(rng.uniform(0.01, 5.0, size=d))
        hseq = np.sort(rng.uniform(0.0, 3.0, size=d + 1))[::-1]
        assert telescoping_identity_check(hseq, chi)


@given(st.data())
@settings(max_examples=100, deadline=None)
def test_telescoping_property(data):
    d = data.draw(st.integers(1, 6))
    chi = sorted(
        data.draw(st.lists(st.floats(0.01, 50.0, allow_nan=False), min_size=d, max_size=d))
    )
    hseq = sorted(
        data.draw(st.lists(st.floats(0.0, 20.0, allow_nan=False), min_size=d + 1, max_size=d + 1)),
        reverse=True,
    )
    assert telescoping_identity_check(hseq, chi)


# ---------------------------------------------------------------------------
# pipeline (desk-scale; the acceptance suite runs the full budgets)


def small_config(**kw):
    base = dict(
        seed=5,
        spectrum_steps=1500,
        spectrum_trials=6,
        flag_iterations=80,
        flag_count=6,
        sample_count=20_000,
        centers=32,
        separation_level=6,
    )
    base.update(kw)
    return PipelineConfig(**base)


def test_pipeline_cantor_line():
    report = full_pipeline(cantor_ifs(), small_config())
    assert report.route == "simple-spectrum"
    assert report.separation.status == "ssc-verified"
    assert report.fiber_entropy == 0.0
    assert report.fiber_entropy_provenance == "closed-form"
    assert report.ly_dim == pytest.approx(CANTOR_DIM, abs=0.01)
    assert report.lyapunov_dim.value == pytest.approx(CANTOR_DIM, abs=0.01)
    assert report.empirical.median == pytest.approx(CANTOR_DIM, abs=0.05)
    assert report.equivalence.status == "holds"


def test_pipeline_bm_carpet():
    # the carpet touches itself at cell corners, so strict separation cannot
    # be certified; the open-set condition still gives a zero fiber
    # correction, supplied explicitly here as the CLI's --H flag would
    report = full_pipeline(bm_carpet_ifs(), small_config(sample_count=40_000,
                                                         fiber_entropy=0.0))
    assert report.route == "simple-spectrum"
    assert report.separation.status == "inconclusive"
    assert report.fiber_entropy_provenance == "user-supplied"
    assert report.ly_dim == pytest.approx(BM_LY, abs=0.05)
    assert report.lyapunov_dim.value == pytest.approx(BM_KY, abs=0.01)
    assert report.equivalence.status == "fails"
    assert report.projection_dims[1] == pytest.approx(BM_PROJ, abs=0.05)


def test_pipeline_bm_carpet_without_fiber_entropy_is_conditional():
    report = full_pipeline(bm_carpet_ifs(), small_config(sample_count=30_000))
    assert report.ly_dim is None
    assert report.fiber_entropy_provenance == "unresolved"
    assert report.ly_dim_conditional["at_zero_fiber_entropy"] == pytest.approx(
        BM_LY, abs=0.05
    )


def test_pipeline_overlap_reports_conditional_value():
    mats = np.array([[[1 / 3]], [[1 / 3]]])
    ts = np.array([[0.1], [0.1]])
    ifs = IfsSystem(mats, ts, BernoulliWeights.uniform(2))
    report = full_pipeline(ifs, small_config())
    assert report.separation.status == "overlap-detected"
    assert report.ly_dim is None
    assert report.fiber_entropy_provenance == "unresolved"
    assert report.ly_dim_conditional is not None
    assert report.ly_dim_conditional["at_zero_fiber_entropy"] == pytest.approx(
        CANTOR_DIM, abs=0.01
    )
    assert any("conditional" in c for c in report.caveats)


def test_pipeline_user_supplied_fiber_entropy():
    mats = np.array([[[1 / 3]], [[1 / 3]]])
    ts = np.array([[0.1], [0.1]])
    ifs = IfsSystem(mats, ts, BernoulliWeights.uniform(2))
    report = full_pipeline(ifs, small_config(fiber_entropy=np.log(2.0)))
    # both maps coincide: the fiber correction swallows all entropy
    assert report.fiber_entropy_provenance == "user-supplied"
    assert report.ly_dim == pytest.approx(0.0, abs=0.01)


def test_pipeline_conformal_equal_exponents_routes_tds():
    # planar conformal pair: equal exponents, honestly non-dominated,
    # dimension formula degenerates to entropy over the common exponent
    theta = 0.6
    rot = np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]])
    mats = np.stack([rot / 3.0, rot / 3.0])
    ts = np.array([[0.0, 0.0], [2.0 / 3.0, 0.0]])
    ifs = IfsSystem(mats, ts, BernoulliWeights.uniform(2))
    report = full_pipeline(ifs, small_config())
    assert report.route == "dominated-splitting"
    assert report.domination is not None
    assert report.domination.dominated_indices == ()
    assert report.ly_dim == pytest.approx(CANTOR_DIM, abs=0.02)


def test_pipeline_report_serialises_to_json():
    report = full_pipeline(cantor_ifs(), small_config(sample_count=5000))
    doc = report.to_dict()
    text = json.dumps(doc, sort_keys=True)
    back = json.loads(text)
    assert back["schema_version"] == 1
    assert back["entropy"]["provenance"] == "closed-form"
    assert back["ly_dim"]["provenance"] == "estimated"


def test_pipeline_deterministic():
    a = full_pipeline(cantor_ifs(), small_config(sample_count=5000))
    b = full_pipeline(cantor_ifs(), small_config(sample_count=5000))
    assert json.dumps(a.to_dict(), sort_keys=True) == json.dumps(b.to_dict(), sort_keys=True)


def test_pipeline_diagonal_ssc_empirical_matches_formula():
    # 2-d Cantor dust: conformal, genuinely strongly separated; routed
    # through the domination branch with an empty index set
    from conftest import cantor_dust_ifs

    report = full_pipeline(
        cantor_dust_ifs(),
        PipelineConfig(seed=77, sample_count=200_000, spectrum_steps=2000,
                       spectrum_trials=6, separation_level=6),
    )
    assert report.route == "dominated-splitting"
    assert report.domination.dominated_indices == ()
    assert report.separation.status == "ssc-verified"
    expected = np.log(4) / np.log(3)
    assert report.ly_dim == pytest.approx(expected, abs=0.01)
    assert abs(report.empirical_boxcount.dimension - report.ly_dim) <= 0.05
    assert abs(report.empirical.median - report.ly_dim) <= 0.05
