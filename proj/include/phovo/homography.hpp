#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace phovo {

/// 3x3 plane-to-image homography in homogeneous coordinates.
struct Homography {
    Eigen::Matrix3d m = Eigen::Matrix3d::Identity();

    Eigen::Vector3d map_homogeneous(const Eigen::Vector2d& p) const {
        return m * Eigen::Vector3d(p.x(), p.y(), 1.0);
    }

    Eigen::Vector2d map(const Eigen::Vector2d& p) const {
        const Eigen::Vector3d h = map_homogeneous(p);
        return {h.x() / h.z(), h.y() / h.z()};
    }

    bool invertible(double eps = 1e-12) const { return std::abs(m.determinant()) > eps; }

    Homography inverse() const {
        if (!invertible())
            throw std::invalid_argument("Homography: not invertible");
        return {m.inverse().eval()};
    }
};

struct HomographyEstimate {
    Homography homography;
    double rms_residual = 0.0;
};

namespace detail {

/// Similarity normalization used by the DLT: centroid to origin, mean
/// distance sqrt(2).
inline Eigen::Matrix3d dlt_normalization(std::span<const Eigen::Vector2d> points) {
    Eigen::Vector2d centroid = Eigen::Vector2d::Zero();
    for (const auto& p : points)
        centroid += p;
    centroid /= static_cast<double>(points.size());
    double mean_dist = 0.0;
    for (const auto& p : points)
        mean_dist += (p - centroid).norm();
    mean_dist /= static_cast<double>(points.size());
    const double scale = (mean_dist > 0.0) ? std::sqrt(2.0) / mean_dist : 1.0;
    Eigen::Matrix3d t = Eigen::Matrix3d::Identity();
    t(0, 0) = scale;
    t(1, 1) = scale;
    t(0, 2) = -scale * centroid.x();
    t(1, 2) = -scale * centroid.y();
    return t;
}

} // namespace detail

/// Least-squares homography from >= 4 point correspondences (normalized
/// direct linear transform). Degenerate configurations (e.g. three collinear
/// plane points among four) are rejected.
inline HomographyEstimate pose_from_correspondences(std::span<const Eigen::Vector2d> plane_points,
                                                    std::span<const Eigen::Vector2d> pixels) {
    if (plane_points.size() != pixels.size())
        throw std::invalid_argument("pose_from_correspondences: size mismatch");
    const std::size_t n = plane_points.size();
    if (n < 4)
        throw std::invalid_argument("pose_from_correspondences: need at least 4 correspondences");

    const Eigen::Matrix3d tp = detail::dlt_normalization(plane_points);
    const Eigen::Matrix3d tq = detail::dlt_normalization(pixels);

    Eigen::MatrixXd a(2 * n, 9);
    for (std::size_t i = 0; i < n; ++i) {
        const Eigen::Vector3d p = tp * Eigen::Vector3d(plane_points[i].x(), plane_points[i].y(), 1.0);
        const Eigen::Vector3d q = tq * Eigen::Vector3d(pixels[i].x(), pixels[i].y(), 1.0);
        a.row(2 * i) << -p.x(), -p.y(), -1.0, 0.0, 0.0, 0.0, q.x() * p.x(), q.x() * p.y(), q.x();
        a.row(2 * i + 1) << 0.0, 0.0, 0.0, -p.x(), -p.y(), -1.0, q.y() * p.x(), q.y() * p.y(), q.y();
    }

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    // A unique (up to scale) solution needs rank 8: the gap between the two
    // smallest singular values detects degenerate point configurations.
    if (sv(7) <= 1e-10 * sv(0))
        throw std::invalid_argument("pose_from_correspondences: degenerate configuration");

    Eigen::Matrix3d hn;
    const Eigen::VectorXd h = svd.matrixV().col(8);
    hn << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), h(8);
    Eigen::Matrix3d m = tq.inverse() * hn * tp;
    if (std::abs(m(2, 2)) > 1e-12)
        m /= m(2, 2);
    else
        m /= m.norm();

    HomographyEstimate estimate;
    estimate.homography = {m};
    double sum_sq = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        sum_sq += (estimate.homography.map(plane_points[i]) - pixels[i]).squaredNorm();
    estimate.rms_residual = std::sqrt(sum_sq / static_cast<double>(n));
    return estimate;
}

} // namespace phovo
