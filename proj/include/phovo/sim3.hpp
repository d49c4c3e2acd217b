#pragma once

#include <cmath>
#include <numbers>
#include <span>
#include <stdexcept>

#include <Eigen/Dense>

namespace phovo {

/// Similarity transform of 3D space: x -> s R x + t with s > 0 and R a proper
/// rotation.
class Sim3 {
public:
    Sim3() : scale_(1.0), rotation_(Eigen::Matrix3d::Identity()), translation_(Eigen::Vector3d::Zero()) {}

    Sim3(double scale, const Eigen::Matrix3d& rotation, const Eigen::Vector3d& translation)
        : scale_(scale), rotation_(rotation), translation_(translation) {
        if (!(scale > 0.0))
            throw std::invalid_argument("Sim3: scale must be positive");
        if ((rotation.transpose() * rotation - Eigen::Matrix3d::Identity()).norm() > 1e-9)
            throw std::invalid_argument("Sim3: rotation must be orthonormal");
        if (rotation.determinant() < 0.0)
            throw std::invalid_argument("Sim3: rotation must be proper (det +1)");
    }

    static Sim3 identity() { return {}; }

    double scale() const { return scale_; }
    const Eigen::Matrix3d& rotation() const { return rotation_; }
    const Eigen::Vector3d& translation() const { return translation_; }

    Eigen::Vector3d apply(const Eigen::Vector3d& p) const {
        return scale_ * (rotation_ * p) + translation_;
    }

    Sim3 operator*(const Sim3& other) const {
        // (this o other)(x) = this(other(x))
        return Sim3(scale_ * other.scale_, (rotation_ * other.rotation_).eval(),
                    scale_ * (rotation_ * other.translation_) + translation_);
    }

    Sim3 inverse() const {
        const Eigen::Matrix3d rt = rotation_.transpose();
        return Sim3(1.0 / scale_, rt, -(rt * translation_) / scale_);
    }

    /// Rotation angle in degrees, arccos((trace - 1)/2) with a clamped
    /// argument for numeric safety near 0 and 180 degrees.
    double rotation_angle_deg() const {
        const double arg = std::clamp((rotation_.trace() - 1.0) / 2.0, -1.0, 1.0);
        return std::acos(arg) * 180.0 / std::numbers::pi;
    }

private:
    double scale_;
    Eigen::Matrix3d rotation_;
    Eigen::Vector3d translation_;
};

struct Sim3Alignment {
    Sim3 transform;
    double rmse = 0.0;
};

/// Global minimizer of sum ||T p_i - q_i||^2 over T in Sim(3): centroids,
/// cross-covariance, orthogonal factor via SVD with a reflection guard, scale
/// from the variance ratio. Requires >= 3 non-collinear source points.
inline Sim3Alignment align_sim3(std::span<const Eigen::Vector3d> source,
                                std::span<const Eigen::Vector3d> target) {
    if (source.size() != target.size())
        throw std::invalid_argument("align_sim3: size mismatch");
    const std::size_t n = source.size();
    if (n < 3)
        throw std::invalid_argument("align_sim3: need at least 3 correspondences");

    Eigen::Vector3d mu_src = Eigen::Vector3d::Zero();
    Eigen::Vector3d mu_tgt = Eigen::Vector3d::Zero();
    for (std::size_t i = 0; i < n; ++i) {
        mu_src += source[i];
        mu_tgt += target[i];
    }
    mu_src /= static_cast<double>(n);
    mu_tgt /= static_cast<double>(n);

    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero(); // target-source cross-covariance
    double src_variance = 0.0;
    Eigen::Matrix3d src_scatter = Eigen::Matrix3d::Zero();
    for (std::size_t i = 0; i < n; ++i) {
        const Eigen::Vector3d ds = source[i] - mu_src;
        const Eigen::Vector3d dt = target[i] - mu_tgt;
        cov += dt * ds.transpose();
        src_scatter += ds * ds.transpose();
        src_variance += ds.squaredNorm();
    }
    cov /= static_cast<double>(n);
    src_variance /= static_cast<double>(n);

    // Collinear (or coincident) source points leave the rotation about the
    // line unconstrained.
    {
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(src_scatter);
        const auto& ev = eig.eigenvalues(); // ascending
        if (!(ev(1) > 1e-12 * std::max(ev(2), 1e-300)))
            throw std::invalid_argument("align_sim3: degenerate (collinear) source points");
    }

    Eigen::JacobiSVD<Eigen::Matrix3d> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Eigen::Vector3d guard = Eigen::Vector3d::Ones();
    if (svd.matrixU().determinant() * svd.matrixV().determinant() < 0.0)
        guard(2) = -1.0;
    const Eigen::Matrix3d rotation =
        svd.matrixU() * guard.asDiagonal() * svd.matrixV().transpose();
    const double scale = svd.singularValues().dot(guard) / src_variance;
    if (!(scale > 0.0))
        throw std::invalid_argument("align_sim3: degenerate configuration (non-positive scale)");
    const Eigen::Vector3d translation = mu_tgt - scale * (rotation * mu_src);

    Sim3Alignment alignment;
    alignment.transform = Sim3(scale, rotation, translation);
    double sum_sq = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        sum_sq += (alignment.transform.apply(source[i]) - target[i]).squaredNorm();
    alignment.rmse = std::sqrt(sum_sq / static_cast<double>(n));
    return alignment;
}

} // namespace phovo
