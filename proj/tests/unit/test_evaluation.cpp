#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "phovo/evaluation.hpp"
#include "phovo/rng.hpp"
#include "phovo/synthetic.hpp"

using namespace phovo;

namespace {

Sim3 random_sim3(Rng& rng) {
    const Eigen::Vector3d axis =
        Eigen::Vector3d(rng.normal(), rng.normal(), rng.normal()).normalized();
    return {std::exp(rng.uniform(-1.0, 1.0)),
            Eigen::AngleAxisd(rng.uniform(0.0, 3.0), axis).toRotationMatrix(),
            Eigen::Vector3d(rng.normal(), rng.normal(), rng.normal()) * 4.0};
}

} // namespace

TEST_CASE("drift of identical alignments is the identity") {
    Rng rng(41);
    const Sim3 t = random_sim3(rng);
    const auto [drift, e_s, e_r, e_t] = drift_decompose(t, t);
    CHECK(e_s == Catch::Approx(1.0).margin(1e-12));
    CHECK(e_r < 1e-7);
    CHECK(e_t < 1e-9);
}

TEST_CASE("a scale offset between the alignments is reported directly") {
    Rng rng(42);
    const Sim3 t_start = random_sim3(rng);
    const Sim3 scale_jump(0.8, Eigen::Matrix3d::Identity(), Eigen::Vector3d::Zero());
    const Sim3 t_end = scale_jump * t_start;
    const auto [drift, e_s, e_r, e_t] = drift_decompose(t_start, t_end);
    CHECK(e_s == Catch::Approx(0.8).margin(1e-12));
    CHECK(e_r < 1e-7);
}

TEST_CASE("a rotation offset between the alignments is reported in degrees") {
    Rng rng(43);
    const Sim3 t_start = random_sim3(rng);
    const Sim3 rotation_jump(
        1.0,
        Eigen::AngleAxisd(10.0 * std::numbers::pi / 180.0, Eigen::Vector3d::UnitZ())
            .toRotationMatrix(),
        Eigen::Vector3d::Zero());
    const Sim3 t_end = rotation_jump * t_start;
    const auto [drift, e_s, e_r, e_t] = drift_decompose(t_start, t_end);
    CHECK(e_r == Catch::Approx(10.0).margin(1e-6));
    CHECK(e_s == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("alignment error vanishes iff both alignments agree") {
    const auto truth = gen_loop_trajectory(200, 0);
    CHECK(alignment_error(truth.trajectory, Sim3::identity(), Sim3::identity()) == 0.0);

    Rng rng(44);
    const Sim3 t = random_sim3(rng);
    CHECK(alignment_error(truth.trajectory, t, t) < 1e-12);
    const Sim3 other = random_sim3(rng);
    CHECK(alignment_error(truth.trajectory, t, other) > 0.0);
}

TEST_CASE("alignment error matches a naive double-loop recomputation") {
    Rng rng(45);
    std::vector<TrajectoryPoint> points;
    for (int i = 0; i < 100; ++i)
        points.push_back({i * 0.1, {rng.normal(), rng.normal(), rng.normal()}});
    const Trajectory trajectory(points);
    const Sim3 a = random_sim3(rng);
    const Sim3 b = random_sim3(rng);

    double sum = 0.0;
    for (const auto& p : trajectory.points()) {
        const Eigen::Vector3d pa = a.scale() * (a.rotation() * p.position) + a.translation();
        const Eigen::Vector3d pb = b.scale() * (b.rotation() * p.position) + b.translation();
        sum += (pa - pb).squaredNorm();
    }
    const double expected = std::sqrt(sum / trajectory.size());
    CHECK(alignment_error(trajectory, a, b) == Catch::Approx(expected).epsilon(1e-12));
}

TEST_CASE("drift-free synthetic loop evaluates to the identity report") {
    const auto truth = gen_loop_trajectory(400, 1);
    const DriftReport report = evaluate_sequence(truth.trajectory, truth.ground_truth);
    CHECK_FALSE(report.no_estimate);
    CHECK(report.e_align < 1e-9);
    CHECK(report.e_s == Catch::Approx(1.0).margin(1e-9));
    CHECK(report.e_r_deg < 1e-6);
    CHECK(report.e_t < 1e-9);
    CHECK(report.e_rmse < 1e-9);
    CHECK(report.rmse_start < 1e-9);
    CHECK(report.rmse_end < 1e-9);
}

TEST_CASE("an injected scale jump is recovered as the scale drift") {
    const auto truth = gen_loop_trajectory(400, 2);
    const auto injected = inject_scale_jump(truth.trajectory, 200, 0.8);
    const DriftReport report = evaluate_sequence(injected, truth.ground_truth);
    CHECK(report.e_s == Catch::Approx(0.8).margin(1e-6));
    CHECK(report.e_r_deg < 1e-6);
    CHECK(report.scale_drift_symmetric() == Catch::Approx(1.25).margin(2e-6));
    CHECK(report.rmse_start < 1e-9);
    CHECK(report.rmse_end < 1e-9);
    CHECK(report.e_align > 0.0);
}

TEST_CASE("an injected rotation jump is recovered as the rotation drift") {
    const auto truth = gen_loop_trajectory(400, 3);
    const auto injected = inject_rotation_jump(truth.trajectory, 180, 10.0);
    const DriftReport report = evaluate_sequence(injected, truth.ground_truth);
    CHECK(report.e_r_deg == Catch::Approx(10.0).margin(1e-6));
    CHECK(report.e_s == Catch::Approx(1.0).margin(1e-9));
}

TEST_CASE("missing end-segment coverage reports no estimate") {
    const auto truth = gen_loop_trajectory(400, 4);
    // Truncate the tracked trajectory before the end segment begins.
    std::vector<TrajectoryPoint> points(truth.trajectory.points().begin(),
                                        truth.trajectory.points().begin() + 300);
    const Trajectory truncated(std::move(points));
    const DriftReport report = evaluate_sequence(truncated, truth.ground_truth);
    CHECK(report.no_estimate);
    CHECK(std::isinf(report.e_align));
    CHECK(std::isinf(report.e_s));
    CHECK(std::isinf(report.e_rmse));
}

TEST_CASE("joint rmse is consistent with align_sim3 and degenerates under large drift") {
    const auto truth = gen_loop_trajectory(400, 5);

    SECTION("drift-free joint alignment is exact") {
        CHECK(evaluate_sequence(truth.trajectory, truth.ground_truth).e_rmse < 1e-9);
    }

    SECTION("matches align_sim3 on the concatenated segments") {
        const auto injected = inject_scale_jump(truth.trajectory, 200, 0.9);
        std::vector<Eigen::Vector3d> tracked, gt;
        for (const auto& g : truth.ground_truth.points) {
            for (const auto& p : injected.points())
                if (p.timestamp_s == g.timestamp_s) {
                    tracked.push_back(p.position);
                    gt.push_back(g.position);
                }
        }
        const double direct = align_sim3(tracked, gt).rmse;
        const DriftReport report = evaluate_sequence(injected, truth.ground_truth);
        CHECK(report.e_rmse == Catch::Approx(direct).epsilon(1e-12));
    }

    SECTION("large translation drift collapses the joint alignment scale") {
        // Ground-truth spread over both segments.
        Eigen::Vector3d mu = Eigen::Vector3d::Zero();
        for (const auto& g : truth.ground_truth.points)
            mu += g.position;
        mu /= static_cast<double>(truth.ground_truth.points.size());
        double variance = 0.0;
        for (const auto& g : truth.ground_truth.points)
            variance += (g.position - mu).squaredNorm();
        const double sigma = std::sqrt(variance / truth.ground_truth.points.size());

        const auto injected = inject_translation_jump(
            truth.trajectory, 200, 10.0 * sigma * Eigen::Vector3d(1, 0.3, 0.1).normalized());
        CHECK(joint_alignment_scale(injected, truth.ground_truth) < 0.1);
    }
}

TEST_CASE("drift injections behave geometrically") {
    const auto truth = gen_loop_trajectory(100, 6);

    SECTION("neutral parameters leave the trajectory unchanged") {
        const auto same_scale = inject_scale_jump(truth.trajectory, 50, 1.0);
        const auto same_rot = inject_rotation_jump(truth.trajectory, 50, 0.0);
        for (std::size_t i = 0; i < truth.trajectory.size(); ++i) {
            CHECK((same_scale[i].position - truth.trajectory[i].position).norm() == 0.0);
            CHECK((same_rot[i].position - truth.trajectory[i].position).norm() < 1e-15);
        }
    }

    SECTION("scale jump at index 0 scales the whole trajectory about p0") {
        const auto scaled = inject_scale_jump(truth.trajectory, 0, 0.8);
        const Eigen::Vector3d p0 = truth.trajectory[0].position;
        for (std::size_t i = 0; i < truth.trajectory.size(); ++i) {
            const Eigen::Vector3d expected = p0 + 0.8 * (truth.trajectory[i].position - p0);
            REQUIRE((scaled[i].position - expected).norm() < 1e-12);
        }
    }

    SECTION("segment lengths after the jump scale exactly") {
        const double lambda = 0.8;
        const std::size_t at = 40;
        const auto injected = inject_scale_jump(truth.trajectory, at, lambda);
        for (std::size_t i = at + 1; i < truth.trajectory.size(); ++i) {
            const double before =
                (truth.trajectory[i].position - truth.trajectory[i - 1].position).norm();
            const double after = (injected[i].position - injected[i - 1].position).norm();
            REQUIRE(after == Catch::Approx(lambda * before).epsilon(1e-9));
        }
    }

    SECTION("out-of-range index is rejected") {
        CHECK_THROWS_AS(inject_scale_jump(truth.trajectory, 100, 0.8), std::out_of_range);
        CHECK_THROWS_AS(inject_rotation_jump(truth.trajectory, 100, 5.0), std::out_of_range);
        CHECK_THROWS_AS(
            inject_translation_jump(truth.trajectory, 100, Eigen::Vector3d::UnitX()),
            std::out_of_range);
    }
}

TEST_CASE("metrics are invariant under a joint rigid transform") {
    const auto truth = gen_loop_trajectory(300, 7);
    const auto injected = inject_scale_jump(truth.trajectory, 150, 0.85);
    const DriftReport base = evaluate_sequence(injected, truth.ground_truth);

    Rng rng(46);
    const Eigen::Matrix3d q_rot =
        Eigen::AngleAxisd(rng.uniform(0.0, 3.0),
                          Eigen::Vector3d(rng.normal(), rng.normal(), rng.normal()).normalized())
            .toRotationMatrix();
    const Eigen::Vector3d q_t(7.0, -3.0, 11.0);

    std::vector<TrajectoryPoint> moved_points;
    for (const auto& p : injected.points())
        moved_points.push_back({p.timestamp_s, q_rot * p.position + q_t});
    SegmentGroundTruth moved_gt = truth.ground_truth;
    for (auto& g : moved_gt.points)
        g.position = q_rot * g.position + q_t;

    const DriftReport moved = evaluate_sequence(Trajectory(moved_points), moved_gt);
    CHECK(moved.e_s == Catch::Approx(base.e_s).epsilon(1e-9));
    CHECK(moved.e_r_deg == Catch::Approx(base.e_r_deg).margin(1e-9));
    CHECK(moved.e_align == Catch::Approx(base.e_align).epsilon(1e-9));
    CHECK(moved.e_rmse == Catch::Approx(base.e_rmse).margin(1e-9));

    // e_t is origin-dependent (the translation of a similarity is not
    // conjugation-invariant), so it is only preserved by pure rotations.
    std::vector<TrajectoryPoint> rotated_points;
    for (const auto& p : injected.points())
        rotated_points.push_back({p.timestamp_s, q_rot * p.position});
    SegmentGroundTruth rotated_gt = truth.ground_truth;
    for (auto& g : rotated_gt.points)
        g.position = q_rot * g.position;
    const DriftReport rotated = evaluate_sequence(Trajectory(rotated_points), rotated_gt);
    CHECK(rotated.e_t == Catch::Approx(base.e_t).margin(1e-9));
}

TEST_CASE("alignment-error stability under moving injection points") {
    // The translation drift swings much more with the injection time than the
    // alignment error does.
    const auto truth = gen_loop_trajectory(500, 8);
    const std::size_t n = truth.trajectory.size();
    std::vector<double> e_t_values, e_align_values;
    for (int j = 0; j < 10; ++j) {
        const double fraction = 0.15 + 0.7 * j / 9.0;
        const auto injected =
            inject_scale_jump(truth.trajectory, static_cast<std::size_t>(fraction * n), 0.8);
        const DriftReport report = evaluate_sequence(injected, truth.ground_truth);
        REQUIRE_FALSE(report.no_estimate);
        e_t_values.push_back(report.e_t);
        e_align_values.push_back(report.e_align);
    }
    const auto spread = [](const std::vector<double>& v) {
        return *std::max_element(v.begin(), v.end()) / *std::min_element(v.begin(), v.end());
    };
    CHECK(spread(e_t_values) > spread(e_align_values));
}

TEST_CASE("cumulative distribution counting") {
    SECTION("simple ascending values") {
        const auto dist = cumulative_distribution({1.0, 2.0, 3.0});
        REQUIRE(dist.points.size() == 3);
        CHECK(dist.points[0].threshold == 1.0);
        CHECK(dist.points[0].count == 1);
        CHECK(dist.points[1].count == 2);
        CHECK(dist.points[2].count == 3);
        CHECK(dist.total == 3);
        CHECK(dist.infinite == 0);
    }

    SECTION("scale errors symmetrize multiplicatively") {
        CHECK(symmetrize_scale(0.5) == Catch::Approx(2.0));
        CHECK(symmetrize_scale(2.0) == Catch::Approx(2.0));
        CHECK(symmetrize_scale(1.0) == 1.0);
    }

    SECTION("matches brute-force counting on random values") {
        Rng rng(47);
        std::vector<double> values;
        for (int i = 0; i < 1000; ++i)
            values.push_back(rng.uniform(0.0, 10.0));
        const auto dist = cumulative_distribution(values);
        for (std::size_t i = 0; i < dist.points.size(); i += 37) {
            std::size_t count = 0;
            for (const double v : values)
                if (v <= dist.points[i].threshold)
                    ++count;
            REQUIRE(dist.points[i].count == count);
        }
    }

    SECTION("infinite errors never fall below a finite threshold") {
        const double inf = std::numeric_limits<double>::infinity();
        const auto dist = cumulative_distribution({1.0, inf, 2.0, inf});
        CHECK(dist.total == 4);
        CHECK(dist.infinite == 2);
        CHECK(dist.points.back().count == 2);
    }
}

TEST_CASE("ground-truth scale normalization") {
    SegmentGroundTruth gt;
    gt.points.push_back({0.0, {1.0, 0.0, 0.0}, SegmentTag::start});
    gt.points.push_back({1.0, {0.0, 2.0, 0.0}, SegmentTag::end});

    SECTION("reference 100 is a no-op") {
        auto copy = gt;
        normalize_gt_scale(copy, 100.0);
        CHECK((copy.points[0].position - gt.points[0].position).norm() == 0.0);
    }

    SECTION("reference 50 doubles the positions") {
        auto copy = gt;
        normalize_gt_scale(copy, 50.0);
        CHECK(copy.points[0].position.x() == 2.0);
        CHECK(copy.points[1].position.y() == 4.0);
    }

    SECTION("a polyline rescaled by its own length has length 100") {
        const auto truth = gen_loop_trajectory(300, 9);
        const double length = path_length(truth.trajectory);
        std::vector<TrajectoryPoint> scaled;
        for (const auto& p : truth.trajectory.points())
            scaled.push_back({p.timestamp_s, p.position * (100.0 / length)});
        CHECK(path_length(Trajectory(scaled)) == Catch::Approx(100.0).margin(1e-9));
    }

    SECTION("non-positive reference is rejected") {
        CHECK_THROWS_AS(normalize_gt_scale(gt, 0.0), std::invalid_argument);
    }
}

TEST_CASE("trajectory invariants") {
    CHECK_THROWS_AS(Trajectory({{0.0, Eigen::Vector3d::Zero()}}), std::invalid_argument);
    CHECK_THROWS_AS(Trajectory({{0.0, Eigen::Vector3d::Zero()}, {0.0, Eigen::Vector3d::Ones()}}),
                    std::invalid_argument);
}

TEST_CASE("report serialization carries the reference values") {
    DriftReport report;
    report.e_align = 2.27;
    report.e_s = 1.12;
    report.e_r_deg = 3.9;
    report.e_t = 1.5;
    report.e_rmse = 0.9;
    report.rmse_start = 0.02;
    report.rmse_end = 0.03;

    const std::string text = report_to_text(report);
    CHECK(text.find("e_align") != std::string::npos);
    CHECK(text.find("2.27") != std::string::npos);
    CHECK(text.find("1.12") != std::string::npos);
    CHECK(text.find("3.9") != std::string::npos);

    const auto dir = std::filesystem::temp_directory_path() / "phovo_eval_test";
    std::filesystem::create_directories(dir);
    {
        std::ofstream out(dir / "report.csv");
        out << report_to_csv(report);
    }
    const auto metrics = load_report_csv(dir / "report.csv");
    CHECK(metrics.at("e_align") == 2.27);
    CHECK(metrics.at("e_s") == 1.12);
    CHECK(metrics.at("e_r_deg") == 3.9);
    CHECK(metrics.at("e_s_sym") == Catch::Approx(1.12));

    DriftReport failed = detail::failed_report(0, 0, 4);
    const std::string csv = report_to_csv(failed);
    CHECK(csv.find("e_align,inf") != std::string::npos);
    {
        std::ofstream out(dir / "failed.csv");
        out << csv;
    }
    CHECK(std::isinf(load_report_csv(dir / "failed.csv").at("e_align")));
}

TEST_CASE("trajectory files round-trip and ignore quaternions") {
    const auto dir = std::filesystem::temp_directory_path() / "phovo_eval_test";
    std::filesystem::create_directories(dir);

    const auto truth = gen_loop_trajectory(50, 10);
    save_trajectory_file(truth.trajectory, dir / "traj.txt");
    const Trajectory loaded = load_trajectory_file(dir / "traj.txt");
    REQUIRE(loaded.size() == truth.trajectory.size());
    for (std::size_t i = 0; i < loaded.size(); ++i) {
        CHECK(loaded[i].timestamp_s == truth.trajectory[i].timestamp_s);
        CHECK((loaded[i].position - truth.trajectory[i].position).norm() == 0.0);
    }

    {
        std::ofstream out(dir / "quat.txt");
        out << "0.0 1 2 3 0 0 0 1\n0.1 4 5 6 0 0 0 1\n";
    }
    const Trajectory quat = load_trajectory_file(dir / "quat.txt");
    REQUIRE(quat.size() == 2);
    CHECK(quat[1].position.x() == 4.0);

    save_ground_truth_file(truth.ground_truth, dir / "gt.txt");
    const SegmentGroundTruth gt = load_ground_truth_file(dir / "gt.txt");
    REQUIRE(gt.points.size() == truth.ground_truth.points.size());
    CHECK(gt.count(SegmentTag::start) == truth.ground_truth.count(SegmentTag::start));
    for (std::size_t i = 0; i < gt.points.size(); ++i)
        CHECK((gt.points[i].position - truth.ground_truth.points[i].position).norm() == 0.0);

    {
        std::ofstream out(dir / "bad_gt.txt");
        out << "0.0 1 2 3 X\n";
    }
    CHECK_THROWS_AS(load_ground_truth_file(dir / "bad_gt.txt"), std::runtime_error);
}
