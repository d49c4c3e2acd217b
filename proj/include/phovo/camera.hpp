#pragma once

#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

#include "phovo/image.hpp"

namespace phovo {

/// Pinhole + single-coefficient field-of-view distortion. omega is the
/// distortion coefficient in radians; omega = 0 degenerates to a plain pinhole.
struct FovIntrinsics {
    double fx, fy, cx, cy;
    double omega;
    int width, height;

    FovIntrinsics(double fx_, double fy_, double cx_, double cy_, double omega_,
                  int width_, int height_)
        : fx(fx_), fy(fy_), cx(cx_), cy(cy_), omega(omega_), width(width_), height(height_) {
        if (fx <= 0.0 || fy <= 0.0)
            throw std::invalid_argument("FovIntrinsics: focal lengths must be positive");
        if (width <= 0 || height <= 0)
            throw std::invalid_argument("FovIntrinsics: image size must be positive");
        if (omega < 0.0 || omega >= std::numbers::pi)
            throw std::invalid_argument("FovIntrinsics: omega must lie in [0, pi)");
    }

    /// Converts intrinsics given as fractions of the image size.
    static FovIntrinsics from_normalized(double fxn, double fyn, double cxn, double cyn,
                                         double omega, int width, int height) {
        return FovIntrinsics(fxn * width, fyn * height, cxn * width, cyn * height,
                             omega, width, height);
    }
};

struct PinholeIntrinsics {
    double f, cx, cy;
    int width, height;

    PinholeIntrinsics(double f_, double cx_, double cy_, int width_, int height_)
        : f(f_), cx(cx_), cy(cy_), width(width_), height(height_) {
        if (f <= 0.0)
            throw std::invalid_argument("PinholeIntrinsics: focal length must be positive");
        if (width <= 0 || height <= 0)
            throw std::invalid_argument("PinholeIntrinsics: image size must be positive");
    }
};

namespace detail {
// Below this radius (or omega) the distortion factor is evaluated at its
// limit 1 to avoid 0/0 at the image center.
inline constexpr double kFovEpsilon = 1e-8;
} // namespace detail

/// Projects a camera-frame point (z > 0) to distorted pixel coordinates.
inline Eigen::Vector2d project(const Eigen::Vector3d& point, const FovIntrinsics& k) {
    if (point.z() <= 0.0)
        throw std::domain_error("project: point depth must be positive");
    const double x = point.x() / point.z();
    const double y = point.y() / point.z();
    const double ru = std::hypot(x, y);
    double factor = 1.0;
    if (k.omega >= detail::kFovEpsilon && ru >= detail::kFovEpsilon)
        factor = std::atan(2.0 * ru * std::tan(0.5 * k.omega)) / (ru * k.omega);
    return {k.fx * factor * x + k.cx, k.fy * factor * y + k.cy};
}

/// Closed-form inverse of project: pixel + depth back to a camera-frame point.
inline Eigen::Vector3d unproject(const Eigen::Vector2d& pixel, double depth,
                                 const FovIntrinsics& k) {
    if (depth <= 0.0)
        throw std::domain_error("unproject: depth must be positive");
    const double ud = (pixel.x() - k.cx) / k.fx;
    const double vd = (pixel.y() - k.cy) / k.fy;
    const double rd = std::hypot(ud, vd);
    double factor = 1.0;
    if (k.omega >= detail::kFovEpsilon && rd >= detail::kFovEpsilon) {
        if (rd * k.omega >= 0.5 * std::numbers::pi)
            throw std::domain_error("unproject: pixel outside the model's valid field");
        factor = std::tan(rd * k.omega) / (2.0 * rd * std::tan(0.5 * k.omega));
    }
    return {depth * factor * ud, depth * factor * vd, depth};
}

/// Per-destination-pixel source coordinates; entries with u < 0 are
/// out-of-frame sentinels.
struct RectificationMap {
    struct Entry {
        float u = -1.0f;
        float v = -1.0f;
        bool valid() const { return u >= 0.0f; }
    };

    int width = 0, height = 0;
    int src_width = 0, src_height = 0;
    std::vector<Entry> entries;

    const Entry& at(int x, int y) const {
        return entries[static_cast<std::size_t>(y) * width + x];
    }

    double valid_fraction() const {
        std::size_t n = 0;
        for (const auto& e : entries)
            if (e.valid())
                ++n;
        return entries.empty() ? 0.0 : static_cast<double>(n) / entries.size();
    }

    Image<std::uint8_t> valid_mask() const {
        Image<std::uint8_t> mask(width, height, 0);
        for (std::size_t i = 0; i < entries.size(); ++i)
            mask[i] = entries[i].valid() ? 255 : 0;
        return mask;
    }
};

/// For each pixel of the ideal pinhole image, the source coordinate in the
/// distorted image (pinhole back-projection followed by forward projection).
inline RectificationMap build_rectification_map(const FovIntrinsics& src,
                                                const PinholeIntrinsics& dst) {
    RectificationMap map;
    map.width = dst.width;
    map.height = dst.height;
    map.src_width = src.width;
    map.src_height = src.height;
    map.entries.resize(static_cast<std::size_t>(dst.width) * dst.height);
    for (int y = 0; y < dst.height; ++y) {
        for (int x = 0; x < dst.width; ++x) {
            const Eigen::Vector3d ray((x - dst.cx) / dst.f, (y - dst.cy) / dst.f, 1.0);
            const Eigen::Vector2d px = project(ray, src);
            auto& entry = map.entries[static_cast<std::size_t>(y) * dst.width + x];
            if (px.x() >= 0.0 && px.x() <= src.width - 1.0 &&
                px.y() >= 0.0 && px.y() <= src.height - 1.0) {
                entry.u = static_cast<float>(px.x());
                entry.v = static_cast<float>(px.y());
            }
        }
    }
    return map;
}

inline double sample_bilinear(const Image<std::uint8_t>& image, double u, double v) {
    const int x0 = static_cast<int>(std::floor(u));
    const int y0 = static_cast<int>(std::floor(v));
    const int x1 = std::min(x0 + 1, image.width() - 1);
    const int y1 = std::min(y0 + 1, image.height() - 1);
    const double ax = u - x0;
    const double ay = v - y0;
    const double top = (1.0 - ax) * image(x0, y0) + ax * image(x1, y0);
    const double bottom = (1.0 - ax) * image(x0, y1) + ax * image(x1, y1);
    return (1.0 - ay) * top + ay * bottom;
}

/// Applies a rectification map with bilinear sampling; sentinel pixels are 0.
inline Image<std::uint8_t> rectify(const Image<std::uint8_t>& source,
                                   const RectificationMap& map) {
    if (source.width() != map.src_width || source.height() != map.src_height)
        throw std::invalid_argument("rectify: image size does not match map source size");
    Image<std::uint8_t> out(map.width, map.height, 0);
    for (int y = 0; y < map.height; ++y) {
        for (int x = 0; x < map.width; ++x) {
            const auto& e = map.at(x, y);
            if (!e.valid())
                continue;
            const double value = sample_bilinear(source, e.u, e.v);
            out(x, y) = static_cast<std::uint8_t>(std::lround(value));
        }
    }
    return out;
}

/// Calibration text file: "fx fy cx cy omega" then "width height"; an optional
/// third line "normalized" declares fractions-of-image-size units.
inline void save_camera_file(const FovIntrinsics& k, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot open for writing: " + path.string());
    char line[256];
    std::snprintf(line, sizeof(line), "%.17g %.17g %.17g %.17g %.17g\n",
                  k.fx, k.fy, k.cx, k.cy, k.omega);
    out << line << k.width << " " << k.height << "\n";
}

/// `normalized` overrides the in-file flag when set; when unset the file's own
/// flag decides (absent flag means absolute pixel units).
inline FovIntrinsics load_camera_file(const std::filesystem::path& path,
                                      std::optional<bool> normalized = std::nullopt) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open: " + path.string());
    double fx, fy, cx, cy, omega;
    int width, height;
    if (!(in >> fx >> fy >> cx >> cy >> omega))
        throw std::runtime_error("camera file " + path.string() +
                                 ": expected 'fx fy cx cy omega' on the first line");
    if (!(in >> width >> height))
        throw std::runtime_error("camera file " + path.string() +
                                 ": expected 'width height' on the second line");
    std::string flag;
    bool file_says_normalized = false;
    if (in >> flag) {
        if (flag == "normalized")
            file_says_normalized = true;
        else
            throw std::runtime_error("camera file " + path.string() +
                                     ": unknown trailing token '" + flag + "'");
    }
    const bool use_normalized = normalized.value_or(file_says_normalized);
    if (use_normalized)
        return FovIntrinsics::from_normalized(fx, fy, cx, cy, omega, width, height);
    return FovIntrinsics(fx, fy, cx, cy, omega, width, height);
}

} // namespace phovo
