#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "phovo/phovo.hpp"

namespace fs = std::filesystem;
using namespace phovo;

namespace {

void write_energy_trace(const std::vector<double>& trace, const fs::path& path) {
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot open for writing: " + path.string());
    out << "iteration,energy\n";
    char buf[48];
    for (std::size_t i = 0; i < trace.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%zu,%.17g\n", i, trace[i]);
        out << buf;
    }
}

ResponseLUT parse_response_spec(const std::string& spec) {
    if (spec == "identity")
        return ResponseLUT::identity();
    if (spec.rfind("gamma", 0) == 0) {
        const double gamma = std::stod(spec.substr(5));
        return gamma_response(gamma);
    }
    throw std::runtime_error("unknown response spec '" + spec + "' (identity | gamma<g>)");
}

Eigen::Vector3d parse_axis(const std::string& axis) {
    if (axis == "x")
        return Eigen::Vector3d::UnitX();
    if (axis == "y")
        return Eigen::Vector3d::UnitY();
    if (axis == "z")
        return Eigen::Vector3d::UnitZ();
    throw std::runtime_error("axis must be x, y or z");
}

struct SynthArgs {
    std::string kind;
    std::string out;
    std::uint64_t seed = 0;
    int width = 160, height = 120;
    int n_exposures = 120;
    double t_min = 0.05, ratio = 1.05;
    std::string response = "identity";
    std::string vignette = "uniform";
    double noise = 0.0;
    int n_poses = 50;
    int n_points = 600;
};

int run_synth(const SynthArgs& args) {
    SyntheticScene scene;
    scene.width = args.width;
    scene.height = args.height;
    scene.seed = args.seed;
    scene.response = parse_response_spec(args.response);
    scene.noise_sigma = args.noise;
    if (args.vignette == "cos4")
        scene.vignette = VignettePattern::cosine_fourth;
    else if (args.vignette != "uniform")
        throw std::runtime_error("vignette must be uniform or cos4");

    const fs::path root(args.out);
    fs::create_directories(root / "truth");

    if (args.kind == "sweep") {
        const auto truth = gen_exposure_sweep(scene, args.n_exposures, args.t_min, args.ratio);
        write_frames(root, truth.sweep.images, truth.log);
        save_response_file(truth.response, root / "truth" / "response.txt");
        save_matrix_file(truth.b_prime.value, root / "truth" / "irradiance.txt");
        std::cout << "frames " << truth.sweep.images.size() << "\n";
        std::cout << "max_exposure_ms " << truth.sweep.exposures_ms.back() << "\n";
    } else if (args.kind == "plane") {
        scene.vignette = (args.vignette == "uniform") ? VignettePattern::uniform
                                                      : VignettePattern::cosine_fourth;
        const auto truth = gen_plane_observations(scene, args.n_poses, args.seed);
        std::vector<Image<std::uint8_t>> images;
        std::vector<std::string> names;
        for (std::size_t i = 0; i < truth.observations.size(); ++i) {
            images.push_back(truth.observations[i].image);
            names.push_back("images/" + detail::frame_file_name(truth.log[i].frame_id));
        }
        write_frames(root, images, truth.log);
        save_observation_manifest(truth.observations, names, root / "observations.txt");
        save_vignette_file(truth.vignette, root / "truth" / "vignette.pgm",
                           root / "truth" / "vignette_mask.pgm");
        save_response_file(truth.response, root / "truth" / "response.txt");
        const FovIntrinsics camera(truth.camera_focal, truth.camera_focal,
                                   (scene.width - 1) / 2.0, (scene.height - 1) / 2.0, 0.0,
                                   scene.width, scene.height);
        save_camera_file(camera, root / "camera.txt");
        std::cout << "poses " << truth.observations.size() << "\n";
    } else if (args.kind == "loop") {
        const auto truth = gen_loop_trajectory(args.n_points, args.seed);
        fs::create_directories(root);
        save_trajectory_file(truth.trajectory, root / "trajectory.txt");
        save_ground_truth_file(truth.ground_truth, root / "groundtruth.txt");
        std::cout << "points " << truth.trajectory.size() << "\n";
        std::cout << "path_length " << path_length(truth.trajectory) << "\n";
    } else {
        throw std::runtime_error("synth kind must be sweep, plane or loop");
    }
    std::cout << "out " << root.string() << "\n";
    return 0;
}

int run_calibrate_response(const std::string& input, const std::string& output,
                           const std::string& trace, const std::string& truth,
                           double truth_tol, ResponseCalibrationOptions opts,
                           int exposure_shift) {
    const SequenceDataset dataset = load_sequence(input);
    const ExposureSweep sweep = dataset.to_sweep(exposure_shift);
    const auto result = calibrate_response(sweep, opts);
    save_response_file(result.response, output);
    if (!trace.empty())
        write_energy_trace(result.energy_trace, trace);

    std::cout << "iterations " << result.iterations << "\n";
    std::cout << "final_energy " << result.energy_trace.back() << "\n";
    std::cout << "monotonicity_repaired " << (result.monotonicity_repaired ? 1 : 0) << "\n";
    for (const auto& [lo, hi] : result.unobserved_ranges)
        std::cout << "unobserved_range " << lo << " " << hi << "\n";

    if (!truth.empty()) {
        const ResponseLUT expected = load_response_file(truth);
        double max_err = 0.0;
        for (int k = 0; k < 256; ++k)
            max_err = std::max(max_err, std::abs(result.response[k] - expected[k]));
        const double frac = max_err / 255.0;
        std::cout << "truth_max_error_frac " << frac << "\n";
        if (frac > truth_tol) {
            std::cerr << "error: response deviates from truth by " << frac
                      << " of full range (tolerance " << truth_tol << ")\n";
            return 1;
        }
    }
    return 0;
}

int run_calibrate_vignette(const std::string& manifest, const std::string& response_path,
                           const std::string& output, const std::string& mask,
                           const std::string& trace, const std::string& truth, double truth_tol,
                           VignetteCalibrationOptions opts) {
    const auto observations = load_observation_manifest(manifest);
    const ResponseLUT response =
        response_path.empty() ? ResponseLUT::identity() : load_response_file(response_path);
    const auto result = calibrate_vignette(observations, response, opts);
    save_vignette_file(result.vignette, output, mask.empty() ? fs::path{} : fs::path(mask));
    if (!trace.empty())
        write_energy_trace(result.energy_trace, trace);

    std::cout << "iterations " << result.iterations << "\n";
    std::cout << "final_energy " << result.energy_trace.back() << "\n";
    std::cout << "components " << result.component_count << "\n";
    if (!result.graph_connected)
        std::cout << "warning_disconnected_graph 1\n";

    if (!truth.empty()) {
        const VignetteMap expected = load_vignette_file(truth);
        if (expected.width() != result.vignette.width() ||
            expected.height() != result.vignette.height())
            throw std::runtime_error("truth vignette size mismatch");
        double max_err = 0.0;
        for (std::size_t i = 0; i < expected.value.pixel_count(); ++i)
            if (result.vignette.valid[i])
                max_err = std::max(max_err,
                                   std::abs(result.vignette.value[i] - expected.value[i]));
        std::cout << "truth_max_abs_error " << max_err << "\n";
        if (max_err > truth_tol) {
            std::cerr << "error: vignette deviates from truth by " << max_err << " (tolerance "
                      << truth_tol << ")\n";
            return 1;
        }
    }
    return 0;
}

int run_check_observability(double probability_c, bool have_probability, std::size_t mc_n,
                            double mc_c, int mc_trials, std::uint64_t seed, bool have_mc,
                            const std::string& manifest, int grid, double extent,
                            const std::string& response_path, const std::string& dump_edges) {
    if (have_probability)
        std::cout << "connectivity_probability " << connectivity_probability(probability_c)
                  << "\n";
    if (have_mc) {
        const double fraction = monte_carlo_connectivity(mc_n, mc_c, mc_trials, seed);
        std::cout << "monte_carlo_fraction " << fraction << "\n";
        std::cout << "formula_probability " << connectivity_probability(mc_c) << "\n";
    }
    if (!manifest.empty()) {
        const auto observations = load_observation_manifest(manifest);
        const ResponseLUT response =
            response_path.empty() ? ResponseLUT::identity() : load_response_file(response_path);
        const int width = observations[0].image.width();
        const int height = observations[0].image.height();
        PlaneGrid plane(grid, extent);
        std::vector<std::uint32_t> offsets;
        const auto samples = phovo::detail::collect_vignette_samples(
            observations, response, plane, width, height, 255, &offsets);

        BipartiteResidualGraph graph;
        graph.left_count = plane.cell_count();
        graph.right_count = static_cast<std::size_t>(width) * height;
        graph.edges.reserve(samples.size());
        for (const auto& s : samples)
            graph.edges.emplace_back(s.cell, s.pixel);

        const auto report = connectivity(graph);
        std::cout << "nodes " << graph.node_count() << "\n";
        std::cout << "residuals " << graph.edges.size() << "\n";
        std::cout << "components " << report.component_count << "\n";
        std::cout << "largest_component_size " << report.largest_component_size << "\n";
        std::cout << "largest_component_fraction " << report.largest_component_fraction << "\n";
        std::cout << "connected " << (report.connected() ? 1 : 0) << "\n";

        if (!dump_edges.empty()) {
            auto edges = graph.edges;
            std::sort(edges.begin(), edges.end());
            edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
            std::ofstream out(dump_edges);
            if (!out)
                throw std::runtime_error("cannot open for writing: " + dump_edges);
            out << "# cell_node pixel_node (pixel nodes offset by " << graph.left_count << ")\n";
            for (const auto& [cell, pixel] : edges)
                out << cell << " " << graph.left_count + pixel << "\n";
        }
    }
    return 0;
}

int run_rectify(const std::string& camera_path, bool normalized, const std::string& input,
                const std::string& output, double focal, int width, int height, double cx,
                double cy) {
    const FovIntrinsics src = load_camera_file(
        camera_path, normalized ? std::optional<bool>(true) : std::nullopt);
    if (width <= 0)
        width = src.width;
    if (height <= 0)
        height = src.height;
    if (cx < 0.0)
        cx = (width - 1) / 2.0;
    if (cy < 0.0)
        cy = (height - 1) / 2.0;
    const PinholeIntrinsics dst(focal, cx, cy, width, height);
    const RectificationMap map = build_rectification_map(src, dst);
    std::cout << "valid_fraction " << map.valid_fraction() << "\n";

    if (fs::is_directory(input)) {
        fs::create_directories(output);
        std::size_t count = 0;
        std::vector<fs::path> files;
        for (const auto& entry : fs::directory_iterator(input))
            if (entry.path().extension() == ".pgm")
                files.push_back(entry.path());
        std::sort(files.begin(), files.end());
        for (const auto& file : files) {
            write_pgm(rectify(read_pgm(file), map), fs::path(output) / file.filename());
            ++count;
        }
        std::cout << "rectified " << count << "\n";
    } else {
        write_pgm(rectify(read_pgm(input), map), output);
        std::cout << "rectified 1\n";
    }
    return 0;
}

int run_correct(const std::string& input, const std::string& response_path,
                const std::string& vignette_path, const std::string& vignette_mask,
                const std::string& output, int threshold, int exposure_shift) {
    const SequenceDataset dataset = load_sequence(input);
    const ResponseLUT response =
        response_path.empty()
            ? (dataset.response ? *dataset.response : ResponseLUT::identity())
            : load_response_file(response_path);
    VignetteMap vignette = VignetteMap::uniform(dataset.width, dataset.height);
    if (!vignette_path.empty())
        vignette = load_vignette_file(vignette_path, vignette_mask.empty() ? fs::path{}
                                                                           : fs::path(vignette_mask));
    else if (dataset.vignette)
        vignette = *dataset.vignette;

    const ExposureLog log =
        exposure_shift ? dataset.exposures.shifted(exposure_shift) : dataset.exposures;

    std::vector<IrradianceImage> corrected;
    double peak = 0.0;
    for (const auto& record : log.records()) {
        const Image<std::uint8_t> frame =
            read_pgm(fs::path(input) / "images" / detail::frame_file_name(record.frame_id));
        corrected.push_back(
            photometric_correct(frame, response, vignette, record.exposure_ms, threshold));
        for (std::size_t i = 0; i < corrected.back().value.pixel_count(); ++i)
            if (corrected.back().valid[i])
                peak = std::max(peak, corrected.back().value[i]);
    }
    if (peak <= 0.0)
        throw std::runtime_error("correct: no valid pixels in any frame");

    const double scale = 65535.0 / peak;
    const fs::path root(output);
    fs::create_directories(root / "images");
    fs::create_directories(root / "masks");
    for (std::size_t f = 0; f < corrected.size(); ++f) {
        Image<std::uint16_t> raw(dataset.width, dataset.height, 0);
        for (std::size_t i = 0; i < raw.pixel_count(); ++i)
            if (corrected[f].valid[i])
                raw[i] = static_cast<std::uint16_t>(std::lround(corrected[f].value[i] * scale));
        const auto name = detail::frame_file_name(log[f].frame_id);
        write_pgm16(raw, root / "images" / name);
        write_pgm(corrected[f].valid, root / "masks" / name);
    }
    save_exposure_file(log, root / "times.txt");
    std::ofstream scale_file(root / "scale.txt");
    scale_file << "# irradiance_units_per_lsb\n" << 1.0 / scale << "\n";
    std::cout << "frames " << corrected.size() << "\n";
    std::cout << "scale " << scale << "\n";
    return 0;
}

int run_evaluate(const std::string& trajectory_path, const std::string& gt_path, double window_ms,
                 double ref_length, const std::string& report_path, const std::string& csv_path) {
    const Trajectory trajectory = load_trajectory_file(trajectory_path);
    SegmentGroundTruth gt = load_ground_truth_file(gt_path);
    if (ref_length > 0.0)
        normalize_gt_scale(gt, ref_length);
    EvaluationOptions opts;
    opts.match_window_s = window_ms / 1000.0;
    const DriftReport report = evaluate_sequence(trajectory, gt, opts);
    const std::string text = report_to_text(report);
    std::cout << text;
    if (!report_path.empty()) {
        std::ofstream out(report_path);
        if (!out)
            throw std::runtime_error("cannot open for writing: " + report_path);
        out << text;
    }
    if (!csv_path.empty()) {
        std::ofstream out(csv_path);
        if (!out)
            throw std::runtime_error("cannot open for writing: " + csv_path);
        out << report_to_csv(report);
    }
    return 0;
}

int run_inject_drift(const std::string& input, const std::string& output, const std::string& kind,
                     double value, const std::string& axis, std::int64_t index, double fraction) {
    const Trajectory trajectory = load_trajectory_file(input);
    std::size_t at;
    if (index >= 0)
        at = static_cast<std::size_t>(index);
    else
        at = static_cast<std::size_t>(fraction * (trajectory.size() - 1));
    Trajectory out = [&]() {
        if (kind == "scale")
            return inject_scale_jump(trajectory, at, value);
        if (kind == "rotation")
            return inject_rotation_jump(trajectory, at, value, parse_axis(axis));
        if (kind == "translation")
            return inject_translation_jump(trajectory, at, value * parse_axis(axis));
        throw std::runtime_error("kind must be scale, rotation or translation");
    }();
    save_trajectory_file(out, output);
    std::cout << "injected " << kind << " " << value << " at_index " << at << "\n";
    return 0;
}

int run_cumdist(const std::string& input, const std::string& metric, const std::string& output) {
    std::vector<fs::path> files;
    if (fs::is_directory(input)) {
        for (const auto& entry : fs::directory_iterator(input))
            if (entry.path().extension() == ".csv")
                files.push_back(entry.path());
        std::sort(files.begin(), files.end());
    } else {
        files.emplace_back(input);
    }
    if (files.empty())
        throw std::runtime_error("cumdist: no report csv files under " + input);

    std::vector<double> values;
    for (const auto& file : files) {
        const auto metrics = load_report_csv(file);
        const auto it = metrics.find(metric);
        if (it == metrics.end())
            throw std::runtime_error("cumdist: metric '" + metric + "' missing in " +
                                     file.string());
        // e_s is a multiplicative factor; summarize e'_s = max(e_s, 1/e_s).
        values.push_back(metric == "e_s" ? symmetrize_scale(it->second) : it->second);
    }

    const CumulativeDistribution dist = cumulative_distribution(values);
    std::ofstream out(output);
    if (!out)
        throw std::runtime_error("cannot open for writing: " + output);
    out << "threshold,count\n";
    char buf[64];
    for (const auto& p : dist.points) {
        std::snprintf(buf, sizeof(buf), "%.17g,%zu\n", p.threshold, p.count);
        out << buf;
    }
    std::cout << "runs " << dist.total << "\n";
    std::cout << "failed " << dist.infinite << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"photometric calibration and loop-closure drift evaluation toolkit"};
    app.require_subcommand(1);

    // synth ------------------------------------------------------------
    SynthArgs synth_args;
    auto* synth = app.add_subcommand("synth", "generate a synthetic dataset with ground truth");
    synth->add_option("--kind", synth_args.kind, "sweep | plane | loop")->required();
    synth->add_option("--out", synth_args.out, "output directory")->required();
    synth->add_option("--seed", synth_args.seed, "random seed");
    synth->add_option("--width", synth_args.width);
    synth->add_option("--height", synth_args.height);
    synth->add_option("--n-exposures", synth_args.n_exposures);
    synth->add_option("--t-min", synth_args.t_min, "shortest exposure in ms");
    synth->add_option("--ratio", synth_args.ratio, "multiplicative exposure increment");
    synth->add_option("--response", synth_args.response, "identity | gamma<g>");
    synth->add_option("--vignette", synth_args.vignette, "uniform | cos4");
    synth->add_option("--noise", synth_args.noise, "additive noise sigma in gray levels");
    synth->add_option("--n-poses", synth_args.n_poses);
    synth->add_option("--n-points", synth_args.n_points);

    // calibrate-response -------------------------------------------------
    std::string cr_input, cr_output, cr_trace, cr_truth;
    double cr_truth_tol = 0.02;
    ResponseCalibrationOptions cr_opts;
    int cr_shift = 0;
    auto* cal_resp = app.add_subcommand("calibrate-response",
                                        "estimate the inverse response from an exposure sweep");
    cal_resp->add_option("--input", cr_input, "sequence directory (images/ + times.txt)")
        ->required();
    cal_resp->add_option("--output", cr_output, "output response file")->required();
    cal_resp->add_option("--trace", cr_trace, "energy trace csv");
    cal_resp->add_option("--truth", cr_truth, "reference response for a tolerance report");
    cal_resp->add_option("--truth-tol", cr_truth_tol, "max |U-truth|/255 (default 0.02)");
    cal_resp->add_option("--tol", cr_opts.tol, "relative energy decrease stopping threshold");
    cal_resp->add_option("--max-iters", cr_opts.max_iters);
    cal_resp->add_option("--overexposure-threshold", cr_opts.overexposure_threshold);
    cal_resp->add_option("--stride", cr_opts.stride, "pixel subsampling stride");
    cal_resp->add_option("--exposure-shift", cr_shift, "shift exposures by +-1 frame");

    // calibrate-vignette ------------------------------------------------
    std::string cv_manifest, cv_response, cv_output, cv_mask, cv_trace, cv_truth;
    double cv_truth_tol = 0.02;
    VignetteCalibrationOptions cv_opts;
    auto* cal_vig = app.add_subcommand("calibrate-vignette",
                                       "estimate the dense attenuation map from posed plane images");
    cal_vig->add_option("--manifest", cv_manifest, "observation manifest")->required();
    cal_vig->add_option("--response", cv_response, "inverse response file (default identity)");
    cal_vig->add_option("--output", cv_output, "output 16-bit vignette image")->required();
    cal_vig->add_option("--mask", cv_mask, "output validity mask");
    cal_vig->add_option("--trace", cv_trace, "energy trace csv");
    cal_vig->add_option("--truth", cv_truth, "reference vignette for a tolerance report");
    cal_vig->add_option("--truth-tol", cv_truth_tol, "max abs error (default 0.02)");
    cal_vig->add_option("--grid", cv_opts.grid_resolution, "plane grid resolution");
    cal_vig->add_option("--extent", cv_opts.extent, "plane physical side length");
    cal_vig->add_option("--tol", cv_opts.tol);
    cal_vig->add_option("--max-iters", cv_opts.max_iters);
    cal_vig->add_option("--overexposure-threshold", cv_opts.overexposure_threshold);

    // check-observability -------------------------------------------------
    double ob_probability_c = 0.0;
    std::size_t ob_n = 1000;
    double ob_c = 0.0;
    int ob_trials = 500;
    std::uint64_t ob_seed = 0;
    std::string ob_manifest, ob_response, ob_dump;
    int ob_grid = 1000;
    double ob_extent = 1.0;
    auto* check_obs = app.add_subcommand("check-observability",
                                         "residual-graph connectivity analysis and bounds");
    auto* opt_prob = check_obs->add_option("--probability", ob_probability_c,
                                           "evaluate exp(-2 exp(-c)) at this c");
    auto* opt_mc = check_obs->add_flag("--monte-carlo", "run random-graph trials");
    check_obs->add_option("--n", ob_n, "bipartite side size");
    check_obs->add_option("--c", ob_c, "edge-count offset");
    check_obs->add_option("--trials", ob_trials);
    check_obs->add_option("--seed", ob_seed);
    check_obs->add_option("--manifest", ob_manifest, "observation manifest to analyze");
    check_obs->add_option("--response", ob_response);
    check_obs->add_option("--grid", ob_grid);
    check_obs->add_option("--extent", ob_extent);
    check_obs->add_option("--dump-edges", ob_dump, "write deduplicated edge list");

    // rectify -------------------------------------------------------------
    std::string re_camera, re_input, re_output;
    bool re_normalized = false;
    double re_focal = 0.0, re_cx = -1.0, re_cy = -1.0;
    int re_width = 0, re_height = 0;
    auto* rect = app.add_subcommand("rectify", "resample distorted images to an ideal pinhole");
    rect->add_option("--camera", re_camera, "calibration file of the source camera")->required();
    rect->add_flag("--normalized", re_normalized, "calibration stores normalized intrinsics");
    rect->add_option("--input", re_input, "image or directory of .pgm frames")->required();
    rect->add_option("--out", re_output, "output image or directory")->required();
    rect->add_option("--focal", re_focal, "pinhole focal length of the output")->required();
    rect->add_option("--width", re_width, "output width (default: source width)");
    rect->add_option("--height", re_height, "output height (default: source height)");
    rect->add_option("--cx", re_cx, "output principal point x (default: centered)");
    rect->add_option("--cy", re_cy, "output principal point y (default: centered)");

    // correct --------------------------------------------------------------
    std::string co_input, co_response, co_vignette, co_vignette_mask, co_output;
    int co_threshold = 255, co_shift = 0;
    auto* correct = app.add_subcommand("correct",
                                       "photometric correction: 8-bit frames to irradiance");
    correct->add_option("--input", co_input, "sequence directory")->required();
    correct->add_option("--response", co_response, "inverse response file");
    correct->add_option("--vignette", co_vignette, "vignette file");
    correct->add_option("--vignette-mask", co_vignette_mask);
    correct->add_option("--out", co_output, "output directory")->required();
    correct->add_option("--overexposure-threshold", co_threshold);
    correct->add_option("--exposure-shift", co_shift);

    // evaluate ---------------------------------------------------------------
    std::string ev_trajectory, ev_gt, ev_report, ev_csv;
    double ev_window_ms = 10.0, ev_ref_length = 0.0;
    auto* evaluate = app.add_subcommand("evaluate", "loop-closure drift evaluation");
    evaluate->add_option("--trajectory", ev_trajectory, "tracked trajectory file")->required();
    evaluate->add_option("--ground-truth", ev_gt, "segment ground-truth file")->required();
    evaluate->add_option("--window-ms", ev_window_ms, "timestamp association window");
    evaluate->add_option("--ref-length", ev_ref_length,
                         "normalize gt so this trajectory length maps to 100");
    evaluate->add_option("--report", ev_report, "write the text report here");
    evaluate->add_option("--csv", ev_csv, "write the machine-readable report here");

    // inject-drift --------------------------------------------------------
    std::string in_trajectory, in_output, in_kind = "scale", in_axis = "z";
    double in_value = 1.0, in_fraction = 0.5;
    std::int64_t in_index = -1;
    auto* inject = app.add_subcommand("inject-drift", "add an artificial drift jump");
    inject->add_option("--trajectory", in_trajectory)->required();
    inject->add_option("--out", in_output)->required();
    inject->add_option("--kind", in_kind, "scale | rotation | translation");
    inject->add_option("--value", in_value, "factor, degrees, or distance")->required();
    inject->add_option("--axis", in_axis, "x | y | z (rotation axis / translation direction)");
    inject->add_option("--index", in_index, "injection index (overrides --fraction)");
    inject->add_option("--fraction", in_fraction, "injection time as a fraction of the sequence");

    // cumdist ----------------------------------------------------------------
    std::string cd_input, cd_metric = "e_align", cd_output;
    auto* cumdist = app.add_subcommand("cumdist",
                                       "cumulative error distribution over drift reports");
    cumdist->add_option("--input", cd_input, "directory of report csv files")->required();
    cumdist->add_option("--metric", cd_metric, "e_align | e_s | e_r_deg | e_t | e_rmse | ...");
    cumdist->add_option("--out", cd_output, "two-column csv output")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth->parsed())
            return run_synth(synth_args);
        if (cal_resp->parsed())
            return run_calibrate_response(cr_input, cr_output, cr_trace, cr_truth, cr_truth_tol,
                                          cr_opts, cr_shift);
        if (cal_vig->parsed())
            return run_calibrate_vignette(cv_manifest, cv_response, cv_output, cv_mask, cv_trace,
                                          cv_truth, cv_truth_tol, cv_opts);
        if (check_obs->parsed())
            return run_check_observability(ob_probability_c, opt_prob->count() > 0, ob_n, ob_c,
                                           ob_trials, ob_seed, opt_mc->count() > 0, ob_manifest,
                                           ob_grid, ob_extent, ob_response, ob_dump);
        if (rect->parsed())
            return run_rectify(re_camera, re_normalized, re_input, re_output, re_focal, re_width,
                               re_height, re_cx, re_cy);
        if (correct->parsed())
            return run_correct(co_input, co_response, co_vignette, co_vignette_mask, co_output,
                               co_threshold, co_shift);
        if (evaluate->parsed())
            return run_evaluate(ev_trajectory, ev_gt, ev_window_ms, ev_ref_length, ev_report,
                                ev_csv);
        if (inject->parsed())
            return run_inject_drift(in_trajectory, in_output, in_kind, in_value, in_axis, in_index,
                                    in_fraction);
        if (cumdist->parsed())
            return run_cumdist(cd_input, cd_metric, cd_output);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
