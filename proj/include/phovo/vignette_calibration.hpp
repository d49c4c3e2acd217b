#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

#include "phovo/homography.hpp"
#include "phovo/image.hpp"
#include "phovo/observability.hpp"
#include "phovo/photometry.hpp"

namespace phovo {

/// Square plane discretized into resolution x resolution cells; values are the
/// (scale-free) plane irradiance C at cell centers.
struct PlaneGrid {
    int resolution = 0;
    double extent = 1.0; // physical side length of the plane square
    std::vector<double> values;
    std::vector<std::uint8_t> valid;

    PlaneGrid() = default;
    PlaneGrid(int resolution_, double extent_ = 1.0)
        : resolution(resolution_), extent(extent_),
          values(check(resolution_) * static_cast<std::size_t>(resolution_), 0.0),
          valid(values.size(), 0) {}

    double& at(int row, int col) { return values[static_cast<std::size_t>(row) * resolution + col]; }
    double at(int row, int col) const { return values[static_cast<std::size_t>(row) * resolution + col]; }
    bool is_valid(int row, int col) const {
        return valid[static_cast<std::size_t>(row) * resolution + col] != 0;
    }

    /// Plane coordinates of a cell center.
    Eigen::Vector2d cell_center(int row, int col) const {
        return {extent * (col + 0.5) / resolution, extent * (row + 0.5) / resolution};
    }

    std::size_t cell_count() const { return values.size(); }

private:
    static std::size_t check(int resolution) {
        if (resolution < 2)
            throw std::invalid_argument("PlaneGrid: resolution must be >= 2");
        return static_cast<std::size_t>(resolution);
    }
};

/// A posed image of the planar calibration scene. The homography maps plane
/// coordinates to pixel coordinates; visibility is a bounds test on the
/// rounded target pixel.
struct PlaneObservation {
    Image<std::uint8_t> image;
    double exposure_ms = 0.0;
    Homography plane_to_image;

    void validate() const {
        if (!(exposure_ms > 0.0))
            throw std::invalid_argument("PlaneObservation: exposure must be positive");
        if (!plane_to_image.invertible())
            throw std::invalid_argument("PlaneObservation: homography must be invertible");
        if (image.empty())
            throw std::invalid_argument("PlaneObservation: empty image");
    }
};

struct VignetteCalibrationOptions {
    int grid_resolution = 1000;
    double extent = 1.0;
    double tol = 1e-6;
    int max_iters = 50;
    int overexposure_threshold = 255;
};

struct VignetteCalibrationResult {
    VignetteMap vignette = VignetteMap::uniform(1, 1);
    PlaneGrid plane;
    std::vector<double> energy_trace;
    int iterations = 0;
    Image<std::uint32_t> pixel_samples; // residual count per vignette pixel
    bool graph_connected = true;
    std::size_t component_count = 0;
    double largest_component_fraction = 0.0;
};

namespace detail {

struct VignetteSample {
    std::uint32_t cell;
    std::uint32_t pixel;
    double energy;   // U(I_i(pi_i(x)))
    double exposure; // t_i
};

/// Rounding to the closest discretized position, ties away from zero.
inline long round_half_away(double v) { return std::lround(v); }

/// One sample per (image, visible cell) pair, cell-major deterministic order.
inline std::vector<VignetteSample> collect_vignette_samples(
    const std::vector<PlaneObservation>& observations, const ResponseLUT& response,
    const PlaneGrid& grid, int width, int height, int threshold,
    std::vector<std::uint32_t>* cell_offsets) {
    std::vector<VignetteSample> samples;
    if (cell_offsets)
        cell_offsets->assign(grid.cell_count() + 1, 0);
    const int resolution = grid.resolution;
    for (int row = 0; row < resolution; ++row) {
        for (int col = 0; col < resolution; ++col) {
            const std::uint32_t cell = static_cast<std::uint32_t>(row) * resolution + col;
            const Eigen::Vector2d plane_point = grid.cell_center(row, col);
            for (std::size_t i = 0; i < observations.size(); ++i) {
                const auto& obs = observations[i];
                const Eigen::Vector3d h = obs.plane_to_image.map_homogeneous(plane_point);
                if (h.z() <= 1e-12)
                    continue; // behind the camera
                const long px = round_half_away(h.x() / h.z());
                const long py = round_half_away(h.y() / h.z());
                if (px < 0 || px >= width || py < 0 || py >= height)
                    continue;
                const std::uint8_t intensity =
                    obs.image(static_cast<int>(px), static_cast<int>(py));
                if (intensity >= threshold)
                    continue;
                samples.push_back({cell,
                                   static_cast<std::uint32_t>(py) * width +
                                       static_cast<std::uint32_t>(px),
                                   response[intensity], obs.exposure_ms});
            }
            if (cell_offsets)
                (*cell_offsets)[cell + 1] = static_cast<std::uint32_t>(samples.size());
        }
    }
    return samples;
}

} // namespace detail

/// Exact residual sum of E(C, V) = sum (t_i V([pi_i(x)]) C(x) - U(I_i(pi_i(x))))^2
/// over visible, non-overexposed samples.
inline double energy_vignette(const PlaneGrid& grid, const Image<double>& vignette,
                              const std::vector<PlaneObservation>& observations,
                              const ResponseLUT& response, int overexposure_threshold = 255) {
    for (const auto& obs : observations) {
        obs.validate();
        if (!obs.image.same_size(vignette))
            throw std::invalid_argument("energy_vignette: image/vignette size mismatch");
    }
    const auto samples = detail::collect_vignette_samples(
        observations, response, grid, vignette.width(), vignette.height(),
        overexposure_threshold, nullptr);
    double energy = 0.0;
    for (const auto& s : samples) {
        const double r = s.exposure * vignette[s.pixel] * grid.values[s.cell] - s.energy;
        energy += r * r;
    }
    return energy;
}

/// Alternating closed-form minimization of the plane-irradiance/vignette
/// energy. Fixing one variable block decouples the other: C(x) updates to
/// sum t V u / sum (t V)^2 over the cell's samples, V(y) to
/// sum t C u / sum (t C)^2 over all samples landing in pixel y. V is
/// max-normalized to 1 at the end (per connected component when the residual
/// graph is disconnected, since inter-component scale is unobservable).
inline VignetteCalibrationResult calibrate_vignette(
    const std::vector<PlaneObservation>& observations, const ResponseLUT& response,
    const VignetteCalibrationOptions& opts = {}) {
    if (observations.empty())
        throw std::invalid_argument("calibrate_vignette: need at least one observation");
    for (const auto& obs : observations) {
        obs.validate();
        if (!obs.image.same_size(observations[0].image))
            throw std::invalid_argument("calibrate_vignette: images must share dimensions");
    }

    const int width = observations[0].image.width();
    const int height = observations[0].image.height();
    const std::size_t pixel_count = static_cast<std::size_t>(width) * height;

    PlaneGrid grid(opts.grid_resolution, opts.extent);
    std::vector<std::uint32_t> cell_offsets;
    const auto samples = detail::collect_vignette_samples(observations, response, grid, width,
                                                          height, opts.overexposure_threshold,
                                                          &cell_offsets);
    if (samples.empty())
        throw std::runtime_error("calibrate_vignette: no valid observations "
                                 "(plane not visible or everything overexposed)");

    // Residual-graph connectivity: cells and pixels are only comparable in
    // scale within one connected component.
    UnionFind uf(grid.cell_count() + pixel_count);
    for (const auto& s : samples)
        uf.unite(s.cell, grid.cell_count() + s.pixel);

    VignetteCalibrationResult result;
    result.plane = std::move(grid);

    std::vector<double> v(pixel_count, 1.0);
    std::vector<std::uint8_t> v_valid(pixel_count, 0);
    Image<std::uint32_t> pixel_samples(width, height, 0);
    for (const auto& s : samples) {
        v_valid[s.pixel] = 255;
        pixel_samples[s.pixel] += 1;
    }

    const auto update_plane = [&]() {
        for (std::size_t cell = 0; cell < result.plane.cell_count(); ++cell) {
            double num = 0.0, den = 0.0;
            for (std::uint32_t s = cell_offsets[cell]; s < cell_offsets[cell + 1]; ++s) {
                const double tv = samples[s].exposure * v[samples[s].pixel];
                num += tv * samples[s].energy;
                den += tv * tv;
            }
            if (den > 0.0) {
                result.plane.values[cell] = num / den;
                result.plane.valid[cell] = 255;
            }
        }
    };

    const auto update_vignette = [&]() {
        std::vector<double> num(pixel_count, 0.0), den(pixel_count, 0.0);
        for (const auto& s : samples) {
            const double tc = s.exposure * result.plane.values[s.cell];
            num[s.pixel] += tc * s.energy;
            den[s.pixel] += tc * tc;
        }
        for (std::size_t p = 0; p < pixel_count; ++p)
            if (den[p] > 0.0)
                v[p] = num[p] / den[p];
    };

    const auto current_energy = [&]() {
        double energy = 0.0;
        for (const auto& s : samples) {
            const double r = s.exposure * v[s.pixel] * result.plane.values[s.cell] - s.energy;
            energy += r * r;
        }
        return energy;
    };

    update_plane();
    result.energy_trace.push_back(current_energy());
    for (int iter = 0; iter < opts.max_iters; ++iter) {
        update_vignette();
        update_plane();
        const double energy = current_energy();
        const double previous = result.energy_trace.back();
        result.energy_trace.push_back(energy);
        result.iterations = iter + 1;
        if (previous <= 0.0 || (previous - energy) / previous < opts.tol)
            break;
    }

    // Per-component max-normalization of V, with C rescaled to keep the
    // residuals unchanged.
    auto labels = uf.smallest_member_labels();
    std::vector<double> component_max;
    std::vector<std::size_t> component_of_label(labels.size(), SIZE_MAX);
    std::size_t observed_components = 0;
    for (std::size_t p = 0; p < pixel_count; ++p) {
        if (!v_valid[p])
            continue;
        const std::size_t label = labels[result.plane.cell_count() + p];
        if (component_of_label[label] == SIZE_MAX) {
            component_of_label[label] = observed_components++;
            component_max.push_back(0.0);
        }
        component_max[component_of_label[label]] = std::max(
            component_max[component_of_label[label]], v[p]);
    }
    for (std::size_t p = 0; p < pixel_count; ++p) {
        if (!v_valid[p])
            continue;
        const double peak = component_max[component_of_label[labels[result.plane.cell_count() + p]]];
        if (peak > 0.0)
            v[p] = std::min(v[p] / peak, 1.0);
    }
    for (std::size_t cell = 0; cell < result.plane.cell_count(); ++cell) {
        if (!result.plane.valid[cell])
            continue;
        const std::size_t comp = component_of_label[labels[cell]];
        if (comp != SIZE_MAX && component_max[comp] > 0.0)
            result.plane.values[cell] *= component_max[comp];
    }

    result.component_count = observed_components;
    result.graph_connected = observed_components <= 1;
    std::size_t largest = 0;
    std::size_t observed_nodes = 0;
    {
        // Component sizes over observed nodes only (unobserved variables are
        // isolated by construction and carry no information).
        std::vector<std::size_t> sizes(component_max.size(), 0);
        for (std::size_t cell = 0; cell < result.plane.cell_count(); ++cell)
            if (result.plane.valid[cell]) {
                ++observed_nodes;
                ++sizes[component_of_label[labels[cell]]];
            }
        for (std::size_t p = 0; p < pixel_count; ++p)
            if (v_valid[p]) {
                ++observed_nodes;
                ++sizes[component_of_label[labels[result.plane.cell_count() + p]]];
            }
        for (const auto s : sizes)
            largest = std::max(largest, s);
    }
    result.largest_component_fraction =
        observed_nodes ? static_cast<double>(largest) / observed_nodes : 0.0;

    Image<double> v_image(width, height, 0.0);
    Image<std::uint8_t> v_mask(width, height, 0);
    for (std::size_t p = 0; p < pixel_count; ++p) {
        v_image[p] = v_valid[p] ? v[p] : 0.0;
        v_mask[p] = v_valid[p];
    }
    result.vignette = VignetteMap(std::move(v_image), std::move(v_mask));
    result.pixel_samples = std::move(pixel_samples);
    return result;
}

} // namespace phovo
