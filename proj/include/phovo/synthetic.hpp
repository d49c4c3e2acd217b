#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "phovo/camera.hpp"
#include "phovo/evaluation.hpp"
#include "phovo/homography.hpp"
#include "phovo/image.hpp"
#include "phovo/photometry.hpp"
#include "phovo/response_calibration.hpp"
#include "phovo/rng.hpp"
#include "phovo/vignette_calibration.hpp"

namespace phovo {

enum class ScenePattern { gradient, texture, constant };
enum class VignettePattern { uniform, cosine_fourth };

/// Ground-truth-known scene description behind all synthetic generators.
/// Deterministic given the seed.
struct SyntheticScene {
    int width = 160;
    int height = 120;
    ScenePattern pattern = ScenePattern::gradient;
    double min_irradiance = 0.005;
    double max_irradiance = 15.5;
    ResponseLUT response = ResponseLUT::identity();
    VignettePattern vignette = VignettePattern::uniform;
    double vignette_focal = 100.0;
    double noise_sigma = 0.0; // additive Gaussian noise in gray levels
    std::uint64_t seed = 0;
};

/// Inverse response of a gamma camera: U(k) = 255 (k/255)^gamma, i.e. the
/// response G(e) = 255 (e/255)^(1/gamma).
inline ResponseLUT gamma_response(double gamma) {
    if (!(gamma > 0.0))
        throw std::invalid_argument("gamma_response: gamma must be positive");
    std::array<double, 256> u;
    for (int k = 0; k < 256; ++k)
        u[k] = 255.0 * std::pow(k / 255.0, gamma);
    return ResponseLUT(u);
}

/// Radial cos^4 falloff about the image center, max-normalized to 1.
inline VignetteMap cosine_fourth_vignette(int width, int height, double focal) {
    Image<double> v(width, height);
    const double cx = (width - 1) / 2.0;
    const double cy = (height - 1) / 2.0;
    double peak = 0.0;
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            const double r = std::hypot(x - cx, y - cy);
            const double c = std::cos(std::atan(r / focal));
            v(x, y) = c * c * c * c;
            peak = std::max(peak, v(x, y));
        }
    }
    for (auto& value : v)
        value /= peak;
    return VignetteMap(std::move(v));
}

namespace detail {

inline Image<double> scene_irradiance(const SyntheticScene& scene) {
    Image<double> b(scene.width, scene.height);
    const std::size_t n = b.pixel_count();
    switch (scene.pattern) {
    case ScenePattern::gradient: {
        // Log-spaced raster ramp: covers the full intensity range densely.
        const double log_min = std::log(scene.min_irradiance);
        const double log_max = std::log(scene.max_irradiance);
        for (std::size_t i = 0; i < n; ++i)
            b[i] = std::exp(log_min + (log_max - log_min) * static_cast<double>(i) /
                                          static_cast<double>(n - 1));
        break;
    }
    case ScenePattern::texture: {
        // Smooth random field from a few seeded sinusoids, mapped into
        // [min, max] in log space.
        Rng rng = Rng(scene.seed).derive(0x7e87);
        struct Wave {
            double fx, fy, phase, amp;
        };
        std::vector<Wave> waves;
        for (int k = 0; k < 6; ++k)
            waves.push_back({rng.uniform(0.5, 4.0), rng.uniform(0.5, 4.0),
                             rng.uniform(0.0, 2.0 * std::numbers::pi), rng.uniform(0.3, 1.0)});
        const double log_min = std::log(scene.min_irradiance);
        const double log_max = std::log(scene.max_irradiance);
        for (int y = 0; y < scene.height; ++y) {
            for (int x = 0; x < scene.width; ++x) {
                double s = 0.0, norm = 0.0;
                for (const auto& w : waves) {
                    s += w.amp * std::sin(2.0 * std::numbers::pi *
                                              (w.fx * x / scene.width + w.fy * y / scene.height) +
                                          w.phase);
                    norm += w.amp;
                }
                const double unit = 0.5 + 0.5 * s / norm;
                b(x, y) = std::exp(log_min + (log_max - log_min) * unit);
            }
        }
        break;
    }
    case ScenePattern::constant:
        for (std::size_t i = 0; i < n; ++i)
            b[i] = 0.5 * (scene.min_irradiance + scene.max_irradiance);
        break;
    }
    return b;
}

inline VignetteMap scene_vignette(const SyntheticScene& scene) {
    if (scene.vignette == VignettePattern::cosine_fourth)
        return cosine_fourth_vignette(scene.width, scene.height, scene.vignette_focal);
    return VignetteMap::uniform(scene.width, scene.height);
}

inline Image<std::uint8_t> quantize_with_noise(const Image<double>& continuous, double sigma,
                                               Rng rng) {
    Image<std::uint8_t> out(continuous.width(), continuous.height());
    for (std::size_t i = 0; i < out.pixel_count(); ++i) {
        double value = continuous[i];
        if (sigma > 0.0)
            value += sigma * rng.normal();
        value = std::clamp(value, 0.0, 255.0);
        out[i] = static_cast<std::uint8_t>(std::lround(value));
    }
    return out;
}

} // namespace detail

struct ExposureSweepTruth {
    ExposureSweep sweep;
    ExposureLog log;            // frame ids, timestamps and exposures
    IrradianceImage b_prime;    // true absorbed irradiance V*B
    ResponseLUT response;       // true inverse response
};

/// Static-scene sweep with geometric exposures t_i = t_min * ratio^i, rendered
/// through the scene's true response and vignette with 8-bit quantization.
inline ExposureSweepTruth gen_exposure_sweep(const SyntheticScene& scene, int n_exposures,
                                             double t_min_ms, double ratio) {
    if (n_exposures < 2)
        throw std::invalid_argument("gen_exposure_sweep: need at least 2 exposures");
    if (!(t_min_ms > 0.0))
        throw std::invalid_argument("gen_exposure_sweep: t_min must be positive");
    if (!(ratio > 1.0))
        throw std::invalid_argument("gen_exposure_sweep: ratio must exceed 1");

    const Image<double> b = detail::scene_irradiance(scene);
    const VignetteMap v = detail::scene_vignette(scene);
    const Rng base(scene.seed);

    ExposureSweepTruth truth{.sweep = {}, .log = {}, .b_prime = {}, .response = scene.response};
    std::vector<ExposureRecord> records;
    double t = t_min_ms;
    for (int i = 0; i < n_exposures; ++i, t *= ratio) {
        const Image<double> continuous = forward_model_continuous(b, scene.response, v, t);
        truth.sweep.images.push_back(detail::quantize_with_noise(
            continuous, scene.noise_sigma, base.derive(static_cast<std::uint64_t>(i))));
        truth.sweep.exposures_ms.push_back(t);
        records.push_back({i, i / 30.0, t});
    }
    truth.log = ExposureLog(std::move(records));

    Image<double> b_prime(scene.width, scene.height);
    for (std::size_t i = 0; i < b_prime.pixel_count(); ++i)
        b_prime[i] = v.value[i] * b[i];
    truth.b_prime = IrradianceImage(std::move(b_prime));
    return truth;
}

struct PlaneObservationTruth {
    std::vector<PlaneObservation> observations;
    ExposureLog log;
    VignetteMap vignette;  // true attenuation map
    PlaneGrid plane;       // true plane irradiance sampled at grid centers
    ResponseLUT response;
    double camera_focal = 0.0; // pinhole focal length used for rendering
};

namespace detail {

/// Smooth, strictly positive plane irradiance over [0,1]^2.
inline double plane_irradiance(const Eigen::Vector2d& p, std::uint64_t seed) {
    const double phase = static_cast<double>(Rng::mix(seed) % 1024) / 1024.0;
    return 185.0 + 35.0 * std::sin(2.0 * std::numbers::pi * (p.x() + phase)) *
                       std::cos(std::numbers::pi * p.y()) +
           12.0 * std::sin(std::numbers::pi * (p.x() + 2.0 * p.y()));
}

/// Camera pose above the plane looking roughly at its center; tilt bounded so
/// perspective distortion stays moderate and the plane keeps covering the
/// whole image.
inline Homography sample_plane_homography(Rng& rng, int width, int height, double focal) {
    const Eigen::Vector2d target_xy(0.5 + rng.uniform(-0.06, 0.06),
                                    0.5 + rng.uniform(-0.06, 0.06));
    const double tilt = rng.uniform(0.0, 22.0) * std::numbers::pi / 180.0;
    const double azimuth = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double roll = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double distance = rng.uniform(0.5, 0.72);

    const Eigen::Vector3d target(target_xy.x(), target_xy.y(), 0.0);
    const Eigen::Vector3d offset(std::sin(tilt) * std::cos(azimuth),
                                 std::sin(tilt) * std::sin(azimuth), std::cos(tilt));
    const Eigen::Vector3d position = target + distance * offset;

    const Eigen::Vector3d forward = (target - position).normalized();
    Eigen::Vector3d hint = Eigen::Vector3d::UnitZ();
    if (std::abs(forward.dot(hint)) > 0.9)
        hint = Eigen::Vector3d::UnitX();
    const Eigen::Vector3d a = hint.cross(forward).normalized();
    const Eigen::Vector3d b = forward.cross(a);
    const Eigen::Vector3d right = std::cos(roll) * a + std::sin(roll) * b;
    const Eigen::Vector3d down = forward.cross(right);

    Eigen::Matrix3d world_to_camera;
    world_to_camera.row(0) = right;
    world_to_camera.row(1) = down;
    world_to_camera.row(2) = forward;
    const Eigen::Vector3d translation = -world_to_camera * position;

    Eigen::Matrix3d intrinsics = Eigen::Matrix3d::Identity();
    intrinsics(0, 0) = focal;
    intrinsics(1, 1) = focal;
    intrinsics(0, 2) = (width - 1) / 2.0;
    intrinsics(1, 2) = (height - 1) / 2.0;

    Eigen::Matrix3d h;
    h.col(0) = world_to_camera.col(0);
    h.col(1) = world_to_camera.col(1);
    h.col(2) = translation;
    return {(intrinsics * h).eval()};
}

} // namespace detail

/// Posed images of a bright Lambertian plane, rendered from a smooth plane
/// irradiance through the scene's true vignette and response. The truth grid
/// samples the plane irradiance at the returned grid's cell centers.
inline PlaneObservationTruth gen_plane_observations(const SyntheticScene& scene, int n_poses,
                                                    std::uint64_t seed,
                                                    int truth_grid_resolution = 200) {
    if (n_poses < 1)
        throw std::invalid_argument("gen_plane_observations: need at least one pose");

    PlaneObservationTruth truth{.observations = {},
                                .log = {},
                                .vignette = detail::scene_vignette(scene),
                                .plane = PlaneGrid(truth_grid_resolution, 1.0),
                                .response = scene.response};
    for (int row = 0; row < truth_grid_resolution; ++row)
        for (int col = 0; col < truth_grid_resolution; ++col) {
            truth.plane.at(row, col) =
                detail::plane_irradiance(truth.plane.cell_center(row, col), scene.seed);
            truth.plane.valid[static_cast<std::size_t>(row) * truth_grid_resolution + col] = 255;
        }

    const double focal = 0.85 * std::min(scene.width, scene.height);
    truth.camera_focal = focal;
    const Rng base(seed);
    std::vector<ExposureRecord> records;
    for (int i = 0; i < n_poses; ++i) {
        Rng rng = base.derive(static_cast<std::uint64_t>(i));
        PlaneObservation obs;
        obs.exposure_ms = rng.uniform(0.75, 1.3);
        obs.plane_to_image = detail::sample_plane_homography(rng, scene.width, scene.height, focal);
        const Homography image_to_plane = obs.plane_to_image.inverse();

        // The wall extends beyond the unit marker patch, so the irradiance
        // function is evaluated wherever the viewing ray meets the plane.
        Image<double> irradiance(scene.width, scene.height, 0.0);
        for (int y = 0; y < scene.height; ++y) {
            for (int x = 0; x < scene.width; ++x) {
                const Eigen::Vector3d h =
                    image_to_plane.map_homogeneous(Eigen::Vector2d(x, y));
                if (std::abs(h.z()) < 1e-12)
                    continue;
                const Eigen::Vector2d plane_point(h.x() / h.z(), h.y() / h.z());
                irradiance(x, y) = (scene.pattern == ScenePattern::constant)
                                       ? 200.0
                                       : detail::plane_irradiance(plane_point, scene.seed);
            }
        }
        const Image<double> continuous =
            forward_model_continuous(irradiance, scene.response, truth.vignette, obs.exposure_ms);
        obs.image = detail::quantize_with_noise(continuous, scene.noise_sigma,
                                                rng.derive(0xf00d));
        records.push_back({i, i / 30.0, obs.exposure_ms});
        truth.observations.push_back(std::move(obs));
    }
    truth.log = ExposureLog(std::move(records));
    if (scene.pattern == ScenePattern::constant)
        for (auto& value : truth.plane.values)
            value = 200.0;
    return truth;
}

struct LoopTrajectoryTruth {
    Trajectory trajectory;
    SegmentGroundTruth ground_truth;
};

/// Smooth closed loop whose first and last 10% serve as the start/end
/// segments, decorated with small loops so both segments are well-conditioned
/// for alignment. Ground-truth positions are exact copies.
inline LoopTrajectoryTruth gen_loop_trajectory(int n_points, std::uint64_t seed) {
    if (n_points < 20)
        throw std::invalid_argument("gen_loop_trajectory: need at least 20 points");

    Rng rng(seed);
    const double radius = 40.0 * (1.0 + 0.1 * rng.uniform(-1.0, 1.0));
    const double z_amp = 4.0;
    const double z_secondary = rng.uniform(0.5, 2.0);
    const double wobble_phase = rng.uniform(0.0, 2.0 * std::numbers::pi);

    const int segment = n_points / 10;
    std::vector<TrajectoryPoint> points;
    points.reserve(n_points);
    for (int i = 0; i < n_points; ++i) {
        const double s = static_cast<double>(i) / (n_points - 1);
        Eigen::Vector3d p(radius * std::sin(2.0 * std::numbers::pi * s),
                          radius * (1.0 - std::cos(2.0 * std::numbers::pi * s)),
                          z_amp * std::sin(4.0 * std::numbers::pi * s) +
                              z_secondary * std::sin(2.0 * std::numbers::pi * s + wobble_phase) *
                                  std::sin(std::numbers::pi * s));
        // Slow loopy decoration inside the start and end segments.
        double local = -1.0;
        if (i < segment)
            local = static_cast<double>(i) / segment;
        else if (i >= n_points - segment)
            local = static_cast<double>(n_points - 1 - i) / segment;
        if (local >= 0.0) {
            const double taper = std::sin(std::numbers::pi * local);
            const double angle = 3.0 * 2.0 * std::numbers::pi * local;
            p += taper * Eigen::Vector3d(1.5 * std::cos(angle), 1.0 * std::sin(angle),
                                         1.2 * std::sin(angle + 0.7));
        }
        points.push_back({i / 30.0, p});
    }

    LoopTrajectoryTruth truth{Trajectory(points), {}};
    for (int i = 0; i < segment; ++i)
        truth.ground_truth.points.push_back(
            {points[i].timestamp_s, points[i].position, SegmentTag::start});
    for (int i = n_points - segment; i < n_points; ++i)
        truth.ground_truth.points.push_back(
            {points[i].timestamp_s, points[i].position, SegmentTag::end});
    return truth;
}

} // namespace phovo
