#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "phovo/image.hpp"

namespace phovo {

/// 256-entry inverse response U (pixel value -> accumulated energy).
/// Strictly increasing; the calibrated convention U(255) = 255 is checked via
/// is_canonical() rather than enforced, so analysis code may work with
/// arbitrarily scaled curves.
class ResponseLUT {
public:
    explicit ResponseLUT(const std::array<double, 256>& values) : values_(values) {
        for (int k = 1; k < 256; ++k) {
            if (!(values_[k] > values_[k - 1]))
                throw std::invalid_argument(
                    "ResponseLUT: values must be strictly increasing (violated at entry " +
                    std::to_string(k) + ")");
        }
    }

    static ResponseLUT identity() {
        std::array<double, 256> v;
        for (int k = 0; k < 256; ++k)
            v[k] = static_cast<double>(k);
        return ResponseLUT(v);
    }

    double operator[](int k) const { return values_[static_cast<std::size_t>(k)]; }
    const std::array<double, 256>& values() const { return values_; }

    bool is_canonical(double eps = 1e-9) const { return std::abs(values_[255] - 255.0) <= eps; }

    ResponseLUT normalized() const { return scaled(255.0 / values_[255]); }

    ResponseLUT scaled(double factor) const {
        std::array<double, 256> v = values_;
        for (double& x : v)
            x *= factor;
        return ResponseLUT(v);
    }

    /// Continuous response G = U^{-1}: energy -> pixel value in [0, 255],
    /// linear interpolation between entries, clamped outside [U(0), U(255)].
    double inverse(double energy) const {
        if (energy <= values_[0])
            return 0.0;
        if (energy >= values_[255])
            return 255.0;
        const auto it = std::upper_bound(values_.begin(), values_.end(), energy);
        const int k = static_cast<int>(it - values_.begin()) - 1;
        return k + (energy - values_[k]) / (values_[k + 1] - values_[k]);
    }

private:
    std::array<double, 256> values_;
};

/// Dense per-pixel attenuation in [0, 1], max-normalized to 1. Pixels outside
/// the valid mask carry no meaningful value.
struct VignetteMap {
    Image<double> value;
    Image<std::uint8_t> valid;

    VignetteMap(Image<double> v, Image<std::uint8_t> mask)
        : value(std::move(v)), valid(std::move(mask)) {
        if (valid.empty())
            valid = Image<std::uint8_t>(value.width(), value.height(), 255);
        else if (!value.same_size(valid))
            throw std::invalid_argument("VignetteMap: value/mask size mismatch");
        validate();
    }

    explicit VignetteMap(Image<double> v) : VignetteMap(std::move(v), Image<std::uint8_t>{}) {}

    static VignetteMap uniform(int width, int height) {
        return VignetteMap(Image<double>(width, height, 1.0));
    }

    int width() const { return value.width(); }
    int height() const { return value.height(); }
    bool is_valid(int x, int y) const { return valid(x, y) != 0; }

private:
    void validate() {
        double max_value = 0.0;
        bool any = false;
        for (std::size_t i = 0; i < value.pixel_count(); ++i) {
            if (!valid[i])
                continue;
            any = true;
            if (value[i] < 0.0 || value[i] > 1.0 + 1e-12)
                throw std::invalid_argument("VignetteMap: attenuation outside [0, 1]");
            max_value = std::max(max_value, value[i]);
        }
        if (!any)
            throw std::invalid_argument("VignetteMap: no valid pixels");
        if (std::abs(max_value - 1.0) > 1e-9)
            throw std::invalid_argument("VignetteMap: maximum must be 1 (max-normalized)");
    }
};

/// Irradiance values with a per-pixel validity flag (overexposed or otherwise
/// unrecoverable source pixels are invalid).
struct IrradianceImage {
    Image<double> value;
    Image<std::uint8_t> valid;

    IrradianceImage() = default;
    IrradianceImage(Image<double> v, Image<std::uint8_t> mask)
        : value(std::move(v)), valid(std::move(mask)) {
        if (!value.same_size(valid))
            throw std::invalid_argument("IrradianceImage: value/mask size mismatch");
    }
    explicit IrradianceImage(Image<double> v)
        : value(std::move(v)), valid(value.width(), value.height(), 255) {}

    int width() const { return value.width(); }
    int height() const { return value.height(); }
    bool is_valid(int x, int y) const { return valid(x, y) != 0; }
};

struct ExposureRecord {
    std::int64_t frame_id;
    double timestamp_s;
    double exposure_ms;
};

/// Per-frame exposure times; all strictly positive.
class ExposureLog {
public:
    ExposureLog() = default;
    explicit ExposureLog(std::vector<ExposureRecord> records) : records_(std::move(records)) {
        for (const auto& r : records_)
            if (!(r.exposure_ms > 0.0))
                throw std::invalid_argument("ExposureLog: exposure must be positive (frame " +
                                            std::to_string(r.frame_id) + ")");
    }

    const std::vector<ExposureRecord>& records() const { return records_; }
    std::size_t size() const { return records_.size(); }
    const ExposureRecord& operator[](std::size_t i) const { return records_[i]; }

    /// Reassigns exposures by `shift` frames (frame i gets the exposure logged
    /// for frame i+shift); frames whose shifted exposure does not exist are
    /// dropped. Counters the known one-frame logging shift of some sensors.
    ExposureLog shifted(int shift) const {
        std::vector<ExposureRecord> out;
        const auto n = static_cast<std::ptrdiff_t>(records_.size());
        for (std::ptrdiff_t i = 0; i < n; ++i) {
            const std::ptrdiff_t j = i + shift;
            if (j < 0 || j >= n)
                continue;
            ExposureRecord r = records_[i];
            r.exposure_ms = records_[j].exposure_ms;
            out.push_back(r);
        }
        return ExposureLog(std::move(out));
    }

private:
    std::vector<ExposureRecord> records_;
};

/// Image formation applied to irradiance without the final 8-bit rounding.
inline Image<double> forward_model_continuous(const Image<double>& irradiance,
                                              const ResponseLUT& response,
                                              const VignetteMap& vignette,
                                              double exposure_ms) {
    if (!(exposure_ms > 0.0))
        throw std::invalid_argument("forward_model: exposure must be positive");
    if (!irradiance.same_size(vignette.value))
        throw std::invalid_argument("forward_model: irradiance/vignette size mismatch");
    Image<double> out(irradiance.width(), irradiance.height());
    for (std::size_t i = 0; i < out.pixel_count(); ++i)
        out[i] = response.inverse(exposure_ms * vignette.value[i] * irradiance[i]);
    return out;
}

/// I(x) = G(t V(x) B(x)) quantized to 8 bits (round half away from zero);
/// energies above U(255) clamp to 255.
inline Image<std::uint8_t> forward_model(const Image<double>& irradiance,
                                         const ResponseLUT& response,
                                         const VignetteMap& vignette, double exposure_ms) {
    const Image<double> continuous =
        forward_model_continuous(irradiance, response, vignette, exposure_ms);
    Image<std::uint8_t> out(continuous.width(), continuous.height());
    for (std::size_t i = 0; i < out.pixel_count(); ++i)
        out[i] = static_cast<std::uint8_t>(std::lround(continuous[i]));
    return out;
}

/// B(x) = U(I(x)) / (t V(x)); pixels at or above the overexposure threshold or
/// with zero/invalid attenuation are flagged invalid.
inline IrradianceImage photometric_correct(const Image<std::uint8_t>& image,
                                           const ResponseLUT& response,
                                           const VignetteMap& vignette, double exposure_ms,
                                           int overexposure_threshold = 255) {
    if (!(exposure_ms > 0.0))
        throw std::invalid_argument("photometric_correct: exposure must be positive");
    if (!image.same_size(vignette.value))
        throw std::invalid_argument("photometric_correct: image/vignette size mismatch");
    Image<double> value(image.width(), image.height(), 0.0);
    Image<std::uint8_t> valid(image.width(), image.height(), 0);
    for (std::size_t i = 0; i < image.pixel_count(); ++i) {
        if (image[i] >= overexposure_threshold)
            continue;
        const double v = vignette.value[i];
        if (!vignette.valid[i] || v <= 0.0)
            continue;
        value[i] = response[image[i]] / (exposure_ms * v);
        valid[i] = 255;
    }
    return IrradianceImage(std::move(value), std::move(valid));
}

// ---------------------------------------------------------------------------
// File formats

/// Response file: 256 whitespace-separated decimals (values of U).
inline void save_response_file(const ResponseLUT& response, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot open for writing: " + path.string());
    char line[64];
    for (int k = 0; k < 256; ++k) {
        std::snprintf(line, sizeof(line), "%.17g\n", response[k]);
        out << line;
    }
}

inline ResponseLUT load_response_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open: " + path.string());
    std::array<double, 256> values;
    for (int k = 0; k < 256; ++k) {
        if (!(in >> values[k]))
            throw std::runtime_error("response file " + path.string() + ": expected 256 values, got " +
                                     std::to_string(k));
    }
    double extra;
    if (in >> extra)
        throw std::runtime_error("response file " + path.string() + ": more than 256 values");
    return ResponseLUT(values);
}

/// Vignette file: 16-bit grayscale, 65535 <-> V = 1. The optional mask file
/// marks estimated pixels with 255.
inline void save_vignette_file(const VignetteMap& vignette, const std::filesystem::path& path,
                               const std::filesystem::path& mask_path = {}) {
    Image<std::uint16_t> raw(vignette.width(), vignette.height(), 0);
    for (std::size_t i = 0; i < raw.pixel_count(); ++i)
        if (vignette.valid[i])
            raw[i] = static_cast<std::uint16_t>(std::lround(vignette.value[i] * 65535.0));
    write_pgm16(raw, path);
    if (!mask_path.empty())
        write_pgm(vignette.valid, mask_path);
}

inline VignetteMap load_vignette_file(const std::filesystem::path& path,
                                      const std::filesystem::path& mask_path = {}) {
    const Image<std::uint16_t> raw = read_pgm16(path);
    Image<double> value(raw.width(), raw.height());
    for (std::size_t i = 0; i < raw.pixel_count(); ++i)
        value[i] = raw[i] / 65535.0;
    if (mask_path.empty())
        return VignetteMap(std::move(value));
    Image<std::uint8_t> mask = read_pgm(mask_path);
    if (!mask.same_size(value))
        throw std::runtime_error("vignette mask size mismatch: " + mask_path.string());
    return VignetteMap(std::move(value), std::move(mask));
}

/// Exposure file: one line per frame "frame_id timestamp_s exposure_ms",
/// '#' comments allowed.
inline void save_exposure_file(const ExposureLog& log, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot open for writing: " + path.string());
    out << "# frame_id timestamp_s exposure_ms\n";
    char line[128];
    for (const auto& r : log.records()) {
        std::snprintf(line, sizeof(line), "%lld %.17g %.17g\n",
                      static_cast<long long>(r.frame_id), r.timestamp_s, r.exposure_ms);
        out << line;
    }
}

inline ExposureLog load_exposure_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open: " + path.string());
    std::vector<ExposureRecord> records;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos)
            line = line.substr(0, hash);
        std::istringstream ss(line);
        ExposureRecord r;
        if (!(ss >> r.frame_id))
            continue; // blank or comment-only line
        if (!(ss >> r.timestamp_s >> r.exposure_ms))
            throw std::runtime_error("exposure file " + path.string() + ":" +
                                     std::to_string(line_no) +
                                     ": expected 'frame_id timestamp exposure_ms'");
        if (!(r.exposure_ms > 0.0))
            throw std::runtime_error("exposure file " + path.string() + ":" +
                                     std::to_string(line_no) + ": exposure must be positive");
        records.push_back(r);
    }
    return ExposureLog(std::move(records));
}

} // namespace phovo
