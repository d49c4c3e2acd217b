#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "phovo/image.hpp"
#include "phovo/photometry.hpp"

namespace phovo {

/// Images of one static scene at different known exposure times.
struct ExposureSweep {
    std::vector<Image<std::uint8_t>> images;
    std::vector<double> exposures_ms;

    void validate() const {
        if (images.size() != exposures_ms.size())
            throw std::invalid_argument("ExposureSweep: image/exposure count mismatch");
        if (images.size() < 2)
            throw std::invalid_argument("ExposureSweep: need at least two images");
        for (std::size_t i = 0; i < images.size(); ++i) {
            if (!images[i].same_size(images[0]))
                throw std::invalid_argument("ExposureSweep: images must share dimensions");
            if (!(exposures_ms[i] > 0.0))
                throw std::invalid_argument("ExposureSweep: exposures must be positive");
        }
        std::vector<double> distinct = exposures_ms;
        std::sort(distinct.begin(), distinct.end());
        if (std::unique(distinct.begin(), distinct.end()) - distinct.begin() < 2)
            throw std::invalid_argument("ExposureSweep: need at least two distinct exposure times");
    }
};

struct ResponseCalibrationOptions {
    double tol = 1e-6;              // relative energy decrease ending the alternation
    int max_iters = 50;
    int overexposure_threshold = 255; // pixel values >= threshold are discarded
    int stride = 1;                   // process every stride-th pixel in x and y
};

struct ResponseCalibrationResult {
    ResponseLUT response = ResponseLUT::identity();
    IrradianceImage irradiance; // B' = V*B, scaled consistently with the response
    std::vector<double> energy_trace;
    int iterations = 0;
    /// Inclusive intensity ranges below the overexposure threshold that never
    /// occurred in the data; filled by interpolation/extrapolation.
    std::vector<std::pair<int, int>> unobserved_ranges;
    bool monotonicity_repaired = false;
};

/// Sum of squared residuals (U(I_i(x)) - t_i B'(x))^2 over non-overexposed
/// pixels with a valid irradiance estimate.
inline double energy_response(const std::array<double, 256>& inverse_response,
                              const IrradianceImage& b_prime, const ExposureSweep& sweep,
                              int overexposure_threshold = 255) {
    double energy = 0.0;
    for (std::size_t i = 0; i < sweep.images.size(); ++i) {
        const auto& image = sweep.images[i];
        if (!image.same_size(b_prime.value))
            throw std::invalid_argument("energy_response: dimension mismatch");
        const double t = sweep.exposures_ms[i];
        for (std::size_t p = 0; p < image.pixel_count(); ++p) {
            if (image[p] >= overexposure_threshold || !b_prime.valid[p])
                continue;
            const double r = inverse_response[image[p]] - t * b_prime.value[p];
            energy += r * r;
        }
    }
    return energy;
}

/// Pool-adjacent-violators projection onto non-decreasing sequences
/// (least-squares, equal weights).
inline std::vector<double> isotonic_regression(std::span<const double> values) {
    struct Block {
        double sum;
        std::size_t count;
        double mean() const { return sum / count; }
    };
    std::vector<Block> blocks;
    blocks.reserve(values.size());
    for (const double v : values) {
        blocks.push_back({v, 1});
        while (blocks.size() > 1 &&
               blocks[blocks.size() - 2].mean() >= blocks.back().mean()) {
            blocks[blocks.size() - 2].sum += blocks.back().sum;
            blocks[blocks.size() - 2].count += blocks.back().count;
            blocks.pop_back();
        }
    }
    std::vector<double> out;
    out.reserve(values.size());
    for (const auto& b : blocks)
        out.insert(out.end(), b.count, b.mean());
    return out;
}

namespace detail {

struct ResponseSample {
    std::uint8_t intensity;
    std::uint32_t pixel;  // index into the strided pixel list
    double exposure;
};

} // namespace detail

/// Alternating closed-form minimization of
///   E(U, B') = sum_i sum_x (U(I_i(x)) - t_i B'(x))^2
/// over the inverse response U and the absorbed irradiance B'. U(k) updates to
/// the mean of t_i B'(x) over the bin {(i, x) | I_i(x) = k}; B'(x) updates to
/// sum t_i U(I_i(x)) / sum t_i^2. Overexposed pixels are excluded throughout,
/// U(255) is extrapolated from the adjacent entries, and the result is scaled
/// so that U(255) = 255.
inline ResponseCalibrationResult calibrate_response(const ExposureSweep& sweep,
                                                    const ResponseCalibrationOptions& opts = {}) {
    sweep.validate();
    if (opts.stride < 1)
        throw std::invalid_argument("calibrate_response: stride must be >= 1");
    if (opts.overexposure_threshold < 254 || opts.overexposure_threshold > 255)
        throw std::invalid_argument("calibrate_response: overexposure threshold must be 254 or 255");

    const int width = sweep.images[0].width();
    const int height = sweep.images[0].height();
    const int threshold = opts.overexposure_threshold;

    // Strided pixel list; per-pixel sample runs are contiguous.
    std::vector<std::uint32_t> pixel_index;
    for (int y = 0; y < height; y += opts.stride)
        for (int x = 0; x < width; x += opts.stride)
            pixel_index.push_back(static_cast<std::uint32_t>(y) * width + x);

    const std::size_t n_images = sweep.images.size();
    std::vector<detail::ResponseSample> samples;
    samples.reserve(pixel_index.size() * n_images);
    std::vector<std::uint32_t> pixel_offsets(pixel_index.size() + 1, 0);
    for (std::size_t p = 0; p < pixel_index.size(); ++p) {
        for (std::size_t i = 0; i < n_images; ++i) {
            const std::uint8_t intensity = sweep.images[i][pixel_index[p]];
            if (intensity >= threshold)
                continue;
            samples.push_back({intensity, static_cast<std::uint32_t>(p), sweep.exposures_ms[i]});
        }
        pixel_offsets[p + 1] = static_cast<std::uint32_t>(samples.size());
    }
    if (samples.empty())
        throw std::runtime_error("calibrate_response: no valid observations "
                                 "(all pixels overexposed)");

    std::array<double, 256> u;
    for (int k = 0; k < 256; ++k)
        u[k] = static_cast<double>(k);
    std::vector<double> b(pixel_index.size(), 0.0);
    std::vector<std::uint8_t> b_valid(pixel_index.size(), 0);

    const auto update_irradiance = [&]() {
        for (std::size_t p = 0; p < pixel_index.size(); ++p) {
            double num = 0.0, den = 0.0;
            for (std::uint32_t s = pixel_offsets[p]; s < pixel_offsets[p + 1]; ++s) {
                num += samples[s].exposure * u[samples[s].intensity];
                den += samples[s].exposure * samples[s].exposure;
            }
            if (den > 0.0) {
                b[p] = num / den;
                b_valid[p] = 255;
            }
        }
    };

    const auto update_response = [&]() {
        std::array<double, 256> num{};
        std::array<std::size_t, 256> count{};
        for (const auto& s : samples) {
            num[s.intensity] += s.exposure * b[s.pixel];
            count[s.intensity] += 1;
        }
        for (int k = 0; k < threshold; ++k)
            if (count[k] > 0)
                u[k] = num[k] / count[k];
    };

    const auto current_energy = [&]() {
        double energy = 0.0;
        for (const auto& s : samples) {
            const double r = u[s.intensity] - s.exposure * b[s.pixel];
            energy += r * r;
        }
        return energy;
    };

    ResponseCalibrationResult result;
    update_irradiance();
    result.energy_trace.push_back(current_energy());
    for (int iter = 0; iter < opts.max_iters; ++iter) {
        update_response();
        update_irradiance();
        const double energy = current_energy();
        const double previous = result.energy_trace.back();
        result.energy_trace.push_back(energy);
        result.iterations = iter + 1;
        if (previous <= 0.0 || (previous - energy) / previous < opts.tol)
            break;
    }

    // Bin occupancy for the estimated range [0, threshold).
    std::array<std::size_t, 256> count{};
    for (const auto& s : samples)
        count[s.intensity] += 1;

    // Fill never-observed interior entries by linear interpolation between the
    // nearest observed neighbours (extrapolation at the low end).
    std::vector<int> observed;
    for (int k = 0; k < threshold; ++k)
        if (count[k] > 0)
            observed.push_back(k);
    for (int k = 0; k < threshold;) {
        if (count[k] > 0) {
            ++k;
            continue;
        }
        int gap_end = k;
        while (gap_end < threshold && count[gap_end] == 0)
            ++gap_end;
        result.unobserved_ranges.emplace_back(k, gap_end - 1);
        const auto lo = std::ranges::upper_bound(observed, k) - observed.begin();
        const int right = (lo < static_cast<std::ptrdiff_t>(observed.size())) ? observed[lo]
                                                                              : -1;
        const int left = (lo > 0) ? observed[lo - 1] : -1;
        for (int j = k; j < gap_end; ++j) {
            if (left >= 0 && right >= 0)
                u[j] = u[left] + (u[right] - u[left]) * (j - left) / (right - left);
            else if (right >= 0 && observed.size() >= 2) {
                const int r2 = observed[1];
                u[j] = u[right] + (u[r2] - u[right]) * (j - right) / (r2 - right);
            } else if (left >= 0 && observed.size() >= 2) {
                const int l2 = observed[observed.size() - 2];
                u[j] = u[left] + (u[left] - u[l2]) * (j - left) / (left - l2);
            }
        }
        k = gap_end;
    }

    // U(255) (and U(254) when the threshold is 254) is never observed;
    // extrapolate linearly from the two adjacent entries.
    for (int k = threshold; k < 256; ++k)
        u[k] = 2.0 * u[k - 1] - u[k - 2];

    // The alternation may in principle produce a non-monotone result; project
    // back and flag it (never triggered by well-covered sweeps).
    bool monotone = true;
    for (int k = 1; k < 256; ++k)
        if (u[k] <= u[k - 1])
            monotone = false;
    if (!monotone) {
        const auto repaired = isotonic_regression(std::span<const double>(u.data(), u.size()));
        std::copy(repaired.begin(), repaired.end(), u.begin());
        const double eps = std::max(1e-9, 1e-9 * std::abs(u[255]));
        for (int k = 1; k < 256; ++k)
            if (u[k] <= u[k - 1])
                u[k] = u[k - 1] + eps;
        result.monotonicity_repaired = true;
    }

    // Fix the gauge: U(255) = 255, with B' rescaled consistently.
    if (!(u[255] > 0.0))
        throw std::runtime_error("calibrate_response: degenerate response (U(255) <= 0)");
    const double scale = 255.0 / u[255];
    for (double& v : u)
        v *= scale;
    for (double& v : b)
        v *= scale;

    result.response = ResponseLUT(u);
    Image<double> b_image(width, height, 0.0);
    Image<std::uint8_t> b_mask(width, height, 0);
    for (std::size_t p = 0; p < pixel_index.size(); ++p) {
        b_image[pixel_index[p]] = b[p];
        b_mask[pixel_index[p]] = b_valid[p];
    }
    result.irradiance = IrradianceImage(std::move(b_image), std::move(b_mask));
    return result;
}

} // namespace phovo
