#include <catch2/catch_amalgamated.hpp>

#include <vector>

#include "phovo/homography.hpp"
#include "phovo/rng.hpp"

using namespace phovo;

namespace {

Eigen::Matrix3d random_homography(Rng& rng) {
    // Rotation + translation + mild perspective, normalized at (2,2).
    const double angle = rng.uniform(-0.5, 0.5);
    Eigen::Matrix3d h;
    h << 120.0 * std::cos(angle), -110.0 * std::sin(angle), rng.uniform(10.0, 60.0),
        120.0 * std::sin(angle), 110.0 * std::cos(angle), rng.uniform(5.0, 40.0),
        rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1), 1.0;
    return h;
}

} // namespace

TEST_CASE("identity correspondences yield the identity homography") {
    const std::vector<Eigen::Vector2d> pts = {{0, 0}, {1, 0}, {1, 1}, {0, 1}, {0.3, 0.7}};
    const auto estimate = pose_from_correspondences(pts, pts);
    CHECK(estimate.rms_residual < 1e-10);
    const Eigen::Matrix3d expected = Eigen::Matrix3d::Identity();
    CHECK((estimate.homography.m - expected).norm() < 1e-9);
}

TEST_CASE("a known homography is recovered from four corners") {
    Rng rng(21);
    for (int trial = 0; trial < 50; ++trial) {
        const Eigen::Matrix3d truth = random_homography(rng);
        const Homography h{truth};
        const std::vector<Eigen::Vector2d> plane = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
        std::vector<Eigen::Vector2d> pixels;
        for (const auto& p : plane)
            pixels.push_back(h.map(p));
        const auto estimate = pose_from_correspondences(plane, pixels);
        REQUIRE(estimate.rms_residual < 1e-9);
        const Eigen::Matrix3d recovered = estimate.homography.m / estimate.homography.m(2, 2);
        const Eigen::Matrix3d expected = truth / truth(2, 2);
        REQUIRE((recovered - expected).norm() < 1e-9 * expected.norm());
    }
}

TEST_CASE("overdetermined fit reports the reprojection residual") {
    Rng rng(22);
    const Eigen::Matrix3d truth = random_homography(rng);
    const Homography h{truth};
    std::vector<Eigen::Vector2d> plane, pixels;
    for (int i = 0; i < 12; ++i) {
        plane.emplace_back(rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0));
        Eigen::Vector2d q = h.map(plane.back());
        q += Eigen::Vector2d(0.2 * rng.normal(), 0.2 * rng.normal());
        pixels.push_back(q);
    }
    const auto estimate = pose_from_correspondences(plane, pixels);
    CHECK(estimate.rms_residual > 0.0);
    CHECK(estimate.rms_residual < 2.0);
}

TEST_CASE("degenerate configurations are rejected") {
    // Three collinear plane points among four.
    const std::vector<Eigen::Vector2d> plane = {{0, 0}, {0.5, 0}, {1, 0}, {0, 1}};
    const std::vector<Eigen::Vector2d> pixels = {{10, 10}, {60, 10}, {110, 10}, {10, 120}};
    CHECK_THROWS_AS(pose_from_correspondences(plane, pixels), std::invalid_argument);

    const std::vector<Eigen::Vector2d> three = {{0, 0}, {1, 0}, {0, 1}};
    CHECK_THROWS_AS(pose_from_correspondences(three, three), std::invalid_argument);
}

TEST_CASE("homography inversion and invertibility") {
    Rng rng(23);
    const Homography h{random_homography(rng)};
    const Homography inv = h.inverse();
    const Eigen::Vector2d p(0.4, 0.6);
    CHECK((inv.map(h.map(p)) - p).norm() < 1e-10);

    Homography singular;
    singular.m.row(2).setZero();
    CHECK_FALSE(singular.invertible());
    CHECK_THROWS_AS(singular.inverse(), std::invalid_argument);
}
