#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "phovo/camera.hpp"
#include "phovo/image.hpp"
#include "phovo/photometry.hpp"
#include "phovo/response_calibration.hpp"
#include "phovo/vignette_calibration.hpp"

namespace phovo {

namespace detail {

inline std::string frame_file_name(std::int64_t frame_id) {
    char name[32];
    std::snprintf(name, sizeof(name), "%06lld.pgm", static_cast<long long>(frame_id));
    return name;
}

} // namespace detail

/// On-disk sequence layout:
///   <root>/images/NNNNNN.pgm   8-bit frames, named by frame id
///   <root>/times.txt           exposure log (frame_id timestamp_s exposure_ms)
///   <root>/camera.txt          optional geometric calibration
///   <root>/response.txt        optional inverse response (256 values)
///   <root>/vignette.pgm        optional 16-bit attenuation map (+ vignette_mask.pgm)
struct SequenceDataset {
    std::filesystem::path root;
    ExposureLog exposures;
    std::optional<FovIntrinsics> camera;
    std::optional<ResponseLUT> response;
    std::optional<VignetteMap> vignette;
    int width = 0;
    int height = 0;

    std::size_t frame_count() const { return exposures.size(); }

    std::filesystem::path frame_path(std::size_t index) const {
        return root / "images" / detail::frame_file_name(exposures[index].frame_id);
    }

    /// Frames load lazily, one image per call.
    Image<std::uint8_t> frame(std::size_t index) const {
        if (index >= exposures.size())
            throw std::out_of_range("SequenceDataset: frame index out of range");
        Image<std::uint8_t> image = read_pgm(frame_path(index));
        if (image.width() != width || image.height() != height)
            throw std::runtime_error("frame size mismatch in " + frame_path(index).string());
        return image;
    }

    /// Loads every frame; `exposure_shift` reassigns exposures by that many
    /// frames before pairing (see ExposureLog::shifted).
    ExposureSweep to_sweep(int exposure_shift = 0) const {
        const ExposureLog log = exposure_shift ? exposures.shifted(exposure_shift) : exposures;
        ExposureSweep sweep;
        for (const auto& record : log.records()) {
            sweep.images.push_back(
                read_pgm(root / "images" / detail::frame_file_name(record.frame_id)));
            sweep.exposures_ms.push_back(record.exposure_ms);
        }
        return sweep;
    }
};

/// Validates the dataset layout and cross-file consistency; frames themselves
/// stay on disk until requested.
inline SequenceDataset load_sequence(const std::filesystem::path& root) {
    if (!std::filesystem::exists(root))
        throw std::runtime_error("dataset path does not exist: " + root.string());
    const auto times = root / "times.txt";
    if (!std::filesystem::exists(times))
        throw std::runtime_error("missing exposure file: " + times.string());

    SequenceDataset dataset;
    dataset.root = root;
    dataset.exposures = load_exposure_file(times);
    if (dataset.exposures.size() == 0)
        throw std::runtime_error("exposure file " + times.string() + ": no frames");

    for (std::size_t i = 0; i < dataset.exposures.size(); ++i) {
        const auto path = root / "images" / detail::frame_file_name(dataset.exposures[i].frame_id);
        if (!std::filesystem::exists(path))
            throw std::runtime_error("frame listed in " + times.string() + " is missing: " +
                                     path.string());
    }

    {
        const Image<std::uint8_t> first =
            read_pgm(root / "images" / detail::frame_file_name(dataset.exposures[0].frame_id));
        dataset.width = first.width();
        dataset.height = first.height();
    }

    if (std::filesystem::exists(root / "camera.txt")) {
        dataset.camera = load_camera_file(root / "camera.txt");
        if (dataset.camera->width != dataset.width || dataset.camera->height != dataset.height)
            throw std::runtime_error("camera.txt image size does not match frames in " +
                                     root.string());
    }
    if (std::filesystem::exists(root / "response.txt"))
        dataset.response = load_response_file(root / "response.txt");
    if (std::filesystem::exists(root / "vignette.pgm")) {
        const auto mask = root / "vignette_mask.pgm";
        dataset.vignette = load_vignette_file(
            root / "vignette.pgm", std::filesystem::exists(mask) ? mask : std::filesystem::path{});
        if (dataset.vignette->width() != dataset.width ||
            dataset.vignette->height() != dataset.height)
            throw std::runtime_error("vignette.pgm size does not match frames in " + root.string());
    }
    return dataset;
}

/// Observation manifest: one line per posed image,
/// "image_path exposure_ms h00 h01 h02 h10 h11 h12 h20 h21 h22"
/// (image paths relative to the manifest's directory).
inline void save_observation_manifest(const std::vector<PlaneObservation>& observations,
                                      const std::vector<std::string>& image_paths,
                                      const std::filesystem::path& path) {
    if (observations.size() != image_paths.size())
        throw std::invalid_argument("save_observation_manifest: path count mismatch");
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot open for writing: " + path.string());
    out << "# image exposure_ms h00 h01 h02 h10 h11 h12 h20 h21 h22\n";
    char buf[64];
    for (std::size_t i = 0; i < observations.size(); ++i) {
        out << image_paths[i];
        std::snprintf(buf, sizeof(buf), " %.17g", observations[i].exposure_ms);
        out << buf;
        const auto& m = observations[i].plane_to_image.m;
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) {
                std::snprintf(buf, sizeof(buf), " %.17g", m(r, c));
                out << buf;
            }
        out << "\n";
    }
}

inline std::vector<PlaneObservation> load_observation_manifest(
    const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open: " + path.string());
    const auto base = path.parent_path();
    std::vector<PlaneObservation> observations;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos)
            line = line.substr(0, hash);
        std::istringstream ss(line);
        std::string image_path;
        if (!(ss >> image_path))
            continue;
        PlaneObservation obs;
        Eigen::Matrix3d m;
        if (!(ss >> obs.exposure_ms >> m(0, 0) >> m(0, 1) >> m(0, 2) >> m(1, 0) >> m(1, 1) >>
              m(1, 2) >> m(2, 0) >> m(2, 1) >> m(2, 2)))
            throw std::runtime_error("observation manifest " + path.string() + ":" +
                                     std::to_string(line_no) +
                                     ": expected 'image exposure_ms h00..h22'");
        obs.plane_to_image = {m};
        obs.image = read_pgm(base / image_path);
        obs.validate();
        observations.push_back(std::move(obs));
    }
    if (observations.empty())
        throw std::runtime_error("observation manifest " + path.string() + ": no observations");
    for (const auto& obs : observations)
        if (!obs.image.same_size(observations[0].image))
            throw std::runtime_error("observation manifest " + path.string() +
                                     ": images must share dimensions");
    return observations;
}

// ---------------------------------------------------------------------------
// Dataset writers (used by the synthetic generators and the CLI)

inline void write_frames(const std::filesystem::path& root,
                         const std::vector<Image<std::uint8_t>>& images, const ExposureLog& log) {
    if (images.size() != log.size())
        throw std::invalid_argument("write_frames: image/log count mismatch");
    std::filesystem::create_directories(root / "images");
    for (std::size_t i = 0; i < images.size(); ++i)
        write_pgm(images[i], root / "images" / detail::frame_file_name(log[i].frame_id));
    save_exposure_file(log, root / "times.txt");
}

/// Plain text float matrix: "width height" then row-major values.
inline void save_matrix_file(const Image<double>& m, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot open for writing: " + path.string());
    out << m.width() << " " << m.height() << "\n";
    char buf[40];
    for (int y = 0; y < m.height(); ++y) {
        for (int x = 0; x < m.width(); ++x) {
            std::snprintf(buf, sizeof(buf), "%.17g", m(x, y));
            out << buf << (x + 1 == m.width() ? "\n" : " ");
        }
    }
}

inline Image<double> load_matrix_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open: " + path.string());
    int width = 0, height = 0;
    if (!(in >> width >> height) || width <= 0 || height <= 0)
        throw std::runtime_error("matrix file " + path.string() + ": malformed header");
    Image<double> m(width, height);
    for (std::size_t i = 0; i < m.pixel_count(); ++i)
        if (!(in >> m[i]))
            throw std::runtime_error("matrix file " + path.string() + ": truncated data");
    return m;
}

} // namespace phovo
