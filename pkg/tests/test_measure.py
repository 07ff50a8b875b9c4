"""Tests for IFS sampling, separation checks, lifting, and dimension slopes."""

import numpy as np
import pytest
from conftest import bm_carpet_ifs, cantor_dust_ifs, cantor_ifs, segment_ifs
from scipy import stats

from affinedim.cocycle import BernoulliWeights
from affinedim.linalg import SubspaceFrame, singular_values
from affinedim.measure import (
    IfsSystem,
    PointCloud,
    check_separation,
    cloud_from_csv,
    cloud_to_csv,
    lift_ifs,
    local_dimension_estimate,
    natural_projection,
    project_cloud,
    sample_measure,
    self_affinity_check,
)

CANTOR_DIM = np.log(2) / np.log(3)


# ---------------------------------------------------------------------------
# natural projection


def test_natural_projection_fixed_point():
    point, err = natural_projection(cantor_ifs(), [0] * 12)
    assert point == pytest.approx([0.0], abs=1e-15)
    assert err == pytest.approx(3.0**-12)


def test_natural_projection_geometric_series():
    for n in (1, 2, 8):
        point, err = natural_projection(cantor_ifs(), [1] * n)
        assert point[0] == pytest.approx(1.0 - 3.0**-n, rel=1e-14)
        assert err == pytest.approx(3.0**-n)


def test_natural_projection_single_symbol():
    ifs = cantor_ifs()
    point, err = natural_projection(ifs, [1])
    assert np.allclose(point, ifs.translations[1])
    assert err == pytest.approx(ifs.bounding_radius / 3.0)


def test_natural_projection_refinement_within_bound():
    ifs = bm_carpet_ifs()
    rng = np.random.default_rng(3)
    for _ in range(20):
        word = rng.integers(0, 3, size=25)
        for n in (5, 10, 20):
            coarse, bound = natural_projection(ifs, word[:n])
            fine, _ = natural_projection(ifs, word[: n + 5])
            assert np.linalg.norm(fine - coarse) <= bound + 1e-15


def test_natural_projection_rejects_empty_word():
    with pytest.raises(ValueError):
        natural_projection(cantor_ifs(), [])


# ---------------------------------------------------------------------------
# sampling


def test_sample_degenerate_weights_hits_fixed_point():
    ifs = cantor_ifs(weights=[1.0, 0.0])
    cloud = sample_measure(ifs, count=50, depth=30, rng=1)
    assert np.all(np.abs(cloud.points) <= 3.0**-29)


def test_sample_cantor_mean_and_bounding_ball():
    ifs = cantor_ifs()
    m = 40_000
    cloud = sample_measure(ifs, count=m, depth=40, rng=2)
    # the measure is symmetric about 1/2 with variance 1/8
    sigma = np.sqrt(1.0 / 8.0)
    assert abs(cloud.points.mean() - 0.5) <= 3 * sigma / np.sqrt(m)
    assert np.all(np.linalg.norm(cloud.points, axis=1) <= ifs.bounding_radius + 1e-12)
    assert np.all(cloud.errors <= ifs.bounding_radius * 3.0**-40 + 1e-30)


def test_sample_first_level_cylinder_masses_match_weights():
    ifs = cantor_ifs(weights=[0.3, 0.7])
    m = 50_000
    cloud = sample_measure(ifs, count=m, depth=30, rng=5)
    in_left = np.mean(cloud.points[:, 0] <= 1.0 / 3.0)
    se = np.sqrt(0.3 * 0.7 / m)
    assert abs(in_left - 0.3) <= 3 * se
    # sampled cylinder membership must agree with the stored words
    assert np.array_equal(cloud.points[:, 0] <= 1.0 / 3.0, cloud.words[:, 0] == 0)


def test_sample_deterministic_given_seed():
    ifs = bm_carpet_ifs()
    a = sample_measure(ifs, 100, 20, rng=9)
    b = sample_measure(ifs, 100, 20, rng=9)
    assert np.array_equal(a.points, b.points)
    assert np.array_equal(a.words, b.words)
    assert a.seed == 9


# ---------------------------------------------------------------------------
# self-affinity identity


def test_self_affinity_whole_ball_exact():
    ifs = cantor_ifs()
    cloud = sample_measure(ifs, 5000, 30, rng=11)
    r = ifs.bounding_radius
    report = self_affinity_check(cloud, ifs, [(np.array([-r]), np.array([r]))])
    box = report.boxes[0]
    assert box.status == "pass"
    assert box.mass == 1.0 and box.pushed_mass == pytest.approx(1.0)


def test_self_affinity_first_cylinder():
    ifs = cantor_ifs(weights=[0.4, 0.6])
    cloud = sample_measure(ifs, 30_000, 30, rng=13)
    report = self_affinity_check(cloud, ifs, [(np.array([0.0]), np.array([1.0 / 3.0]))])
    box = report.boxes[0]
    assert box.status == "pass"
    assert box.pushed_mass == pytest.approx(0.4, abs=1e-12)


def test_self_affinity_disjoint_box_trivial():
    ifs = cantor_ifs()
    cloud = sample_measure(ifs, 2000, 25, rng=17)
    report = self_affinity_check(cloud, ifs, [(np.array([-0.9]), np.array([-0.5]))])
    assert report.boxes[0].status == "pass"
    assert report.boxes[0].mass == 0.0 and report.boxes[0].pushed_mass == 0.0


def test_self_affinity_small_box_skipped():
    ifs = cantor_ifs()
    cloud = sample_measure(ifs, 2000, 25, rng=19)
    report = self_affinity_check(cloud, ifs, [(np.array([0.0]), np.array([1e-4]))])
    assert report.boxes[0].status in ("skipped", "pass")


def test_self_affinity_rejects_box_outside_ball():
    ifs = cantor_ifs()
    cloud = sample_measure(ifs, 1000, 20, rng=21)
    with pytest.raises(ValueError):
        self_affinity_check(cloud, ifs, [(np.array([5.0]), np.array([6.0]))])


def test_self_affinity_bm_boxes_pass():
    ifs = bm_carpet_ifs()
    cloud = sample_measure(ifs, 40_000, 30, rng=23)
    rng = np.random.default_rng(29)
    boxes = []
    for _ in range(6):
        lo = rng.uniform(0.0, 0.6, size=2)
        hi = lo + rng.uniform(0.2, 0.4, size=2)
        boxes.append((lo, hi))
    report = self_affinity_check(cloud, ifs, boxes)
    assert report.all_pass


# ---------------------------------------------------------------------------
# separation


def test_separation_cantor_verified_with_gap():
    verdict = check_separation(cantor_ifs(), level=8)
    assert verdict.status == "ssc-verified"
    assert verdict.witness_gap == pytest.approx(1.0 / 3.0, abs=0.01)


def test_separation_identical_maps_overlap():
    mats = np.array([[[1.0 / 3.0]], [[1.0 / 3.0]]])
    ts = np.array([[0.1], [0.1]])
    ifs = IfsSystem(mats, ts, BernoulliWeights.uniform(2))
    verdict = check_separation(ifs, level=6)
    assert verdict.status == "overlap-detected"
    assert verdict.witness_gap == pytest.approx(0.0, abs=1e-12)


def test_separation_abutting_inconclusive():
    verdict = check_separation(segment_ifs(), level=8)
    assert verdict.status == "inconclusive"


def test_separation_budget_precondition():
    with pytest.raises(ValueError):
        check_separation(cantor_dust_ifs(), level=12, budget=10_000)


# ---------------------------------------------------------------------------
# lift


def test_lift_arithmetic_example():
    mats = np.array([[[0.4]], [[0.5]]])
    ts = np.array([[0.0], [0.3]])
    ifs = IfsSystem(mats, ts, BernoulliWeights.uniform(2))
    lifted = lift_ifs(ifs)
    assert lifted.rho == pytest.approx(0.36)
    assert np.allclose(lifted.taus, [0.0, 0.5])
    # last-coordinate images [tau, tau + rho] are disjoint
    assert 0.0 + lifted.rho < 0.5


def test_lift_smallest_singular_value_is_rho():
    ifs = bm_carpet_ifs()
    lifted = lift_ifs(ifs)
    for i in range(ifs.n_maps):
        base_sv = singular_values(ifs.matrices[i])
        # block structure: the lifted singular values are the base ones plus rho,
        # and rho < min alpha_d makes it exactly the smallest
        assert min(float(base_sv[0]), lifted.rho) == lifted.rho
        sv = singular_values(lifted.ifs.matrices[i])
        assert sv[0] == pytest.approx(lifted.rho, rel=1e-12)


def test_lift_passes_separation_even_with_overlap_below():
    mats = np.array([[[0.45]], [[0.45]]])
    ts = np.array([[0.0], [0.1]])  # heavily overlapping on the line
    ifs = IfsSystem(mats, ts, BernoulliWeights.uniform(2))
    lifted = lift_ifs(ifs)
    gap_z = 1.0 / ifs.n_maps - lifted.rho
    r = lifted.ifs.bounding_radius
    level = int(np.ceil(np.log(gap_z / (4.0 * r)) / np.log(0.45))) + 1
    verdict = check_separation(lifted.ifs, level=level)
    assert verdict.status == "ssc-verified"


def test_lift_projection_reproduces_base_cloud():
    ifs = bm_carpet_ifs()
    lifted = lift_ifs(ifs)
    base = sample_measure(ifs, 500, 25, rng=31)
    lifted_cloud = sample_measure(lifted.ifs, 500, 25, rng=31)
    assert np.array_equal(base.words, lifted_cloud.words)
    assert np.array_equal(lifted_cloud.points[:, :2], base.points)


def test_lift_rejects_bad_rho():
    with pytest.raises(ValueError):
        lift_ifs(cantor_ifs(), rho=0.4)


# ---------------------------------------------------------------------------
# projections of clouds


def test_project_full_space_isometric():
    cloud = sample_measure(bm_carpet_ifs(), 200, 20, rng=37)
    v = SubspaceFrame.full(2)
    proj = project_cloud(cloud, v)
    assert np.allclose(np.linalg.norm(proj.points, axis=1),
                       np.linalg.norm(cloud.points, axis=1))


def test_project_composition_matches_composed_frame():
    cloud = sample_measure(cantor_dust_ifs(), 300, 20, rng=41)
    v = SubspaceFrame.from_span(np.array([[1.0, 0.0], [1.0, 1.0]]))  # 2-frame in R^2
    w = SubspaceFrame.from_span(np.array([1.0, 1.0]))  # line inside V coords
    two_step = project_cloud(project_cloud(cloud, v), w)
    composed = project_cloud(cloud, SubspaceFrame(v.frame @ w.frame))
    assert np.allclose(two_step.points, composed.points, atol=1e-12)


def test_project_dust_to_axis_is_cantor():
    dust = sample_measure(cantor_dust_ifs(), 20_000, 30, rng=43)
    axis = project_cloud(dust, SubspaceFrame.coordinate(2, [0]))
    line = sample_measure(cantor_ifs(), 20_000, 30, rng=47)
    ks = stats.ks_2samp(axis.points[:, 0], line.points[:, 0]).statistic
    assert ks < 0.03


def test_project_bm_carpet_row_marginal():
    ifs = bm_carpet_ifs()  # rows 0,0,1 -> marginal (2/3, 1/3)
    cloud = sample_measure(ifs, 30_000, 30, rng=53)
    rows = project_cloud(cloud, SubspaceFrame.coordinate(2, [1]))
    frac_low = np.mean(rows.points[:, 0] < 0.5)
    assert frac_low == pytest.approx(2.0 / 3.0, abs=0.01)


# ---------------------------------------------------------------------------
# local dimension


def test_local_dimension_segment_is_one():
    cloud = sample_measure(segment_ifs(), 40_000, 45, rng=59)
    report = local_dimension_estimate(cloud, n_centers=48, rng=61)
    assert report.median == pytest.approx(1.0, abs=0.05)


def test_local_dimension_cantor():
    cloud = sample_measure(cantor_ifs(), 60_000, 40, rng=67)
    report = local_dimension_estimate(cloud, n_centers=64, rng=71)
    assert report.median == pytest.approx(CANTOR_DIM, abs=0.03)


def test_local_dimension_dirac_zero():
    ifs = cantor_ifs(weights=[1.0, 0.0])
    cloud = sample_measure(ifs, 500, 40, rng=73)
    report = local_dimension_estimate(cloud, rng=79)
    assert report.median == 0.0


def test_local_dimension_uniform_box_is_two():
    rng = np.random.default_rng(83)
    cloud = PointCloud.from_points(rng.uniform(0.0, 1.0, size=(200_000, 2)))
    radii = 0.07 * 0.85 ** np.arange(20)
    report = local_dimension_estimate(cloud, radii=radii, n_centers=64, rng=89,
                                      min_usable_radii=18)
    assert report.median == pytest.approx(2.0, abs=0.05)


def test_local_dimension_workers_match_serial():
    cloud = sample_measure(cantor_ifs(), 5000, 35, rng=97)
    serial = local_dimension_estimate(cloud, n_centers=16, rng=101, workers=1)
    threaded = local_dimension_estimate(cloud, n_centers=16, rng=101, workers=4)
    assert np.array_equal(serial.slopes, threaded.slopes)


# ---------------------------------------------------------------------------
# CSV round trip


def test_cloud_csv_roundtrip_bit_exact(tmp_path):
    ifs = bm_carpet_ifs()
    cloud = sample_measure(ifs, 200, 18, rng=103)
    path = tmp_path / "cloud.csv"
    cloud_to_csv(cloud, path)
    back = cloud_from_csv(path, ifs=ifs)
    assert np.array_equal(back.points, cloud.points)
    assert np.array_equal(back.words, cloud.words)
    assert back.depth == cloud.depth
    assert np.allclose(back.errors, cloud.errors, rtol=1e-15)
    header = path.read_text().splitlines()[0]
    assert header == "x1,x2,word,depth"


def test_cloud_csv_requires_words(tmp_path):
    cloud = PointCloud.from_points(np.zeros((3, 2)))
    with pytest.raises(ValueError):
        cloud_to_csv(cloud, tmp_path / "nope.csv")


# ---------------------------------------------------------------------------
# box counting


def test_box_counting_cantor():
    from affinedim.measure import box_counting_dimension

    cloud = sample_measure(cantor_ifs(), 80_000, 35, rng=107)
    rep = box_counting_dimension(cloud)
    assert rep.dimension == pytest.approx(CANTOR_DIM, abs=0.05)


def test_box_counting_uniform_square():
    from affinedim.measure import box_counting_dimension

    rng = np.random.default_rng(109)
    cloud = PointCloud.from_points(rng.uniform(0.0, 1.0, size=(100_000, 2)))
    rep = box_counting_dimension(cloud)
    assert rep.dimension == pytest.approx(2.0, abs=0.05)


def test_box_counting_dirac_zero():
    from affinedim.measure import box_counting_dimension

    ifs = cantor_ifs(weights=[1.0, 0.0])
    cloud = sample_measure(ifs, 500, 40, rng=113)
    assert box_counting_dimension(cloud).dimension == 0.0


def test_box_counting_occupancy_guard():
    from affinedim.measure import box_counting_dimension

    rng = np.random.default_rng(127)
    cloud = PointCloud.from_points(rng.uniform(0.0, 1.0, size=(400, 2)))
    with pytest.raises(ValueError):
        box_counting_dimension(cloud, eps_list=1e-4 * 0.9 ** np.arange(6))
