#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include <Eigen/Dense>

#include "phovo/sim3.hpp"

namespace phovo {

struct TrajectoryPoint {
    double timestamp_s;
    Eigen::Vector3d position;
};

/// Tracked positions ordered by strictly increasing timestamp; may be sparse
/// (keyframes only).
class Trajectory {
public:
    explicit Trajectory(std::vector<TrajectoryPoint> points) : points_(std::move(points)) {
        if (points_.size() < 2)
            throw std::invalid_argument("Trajectory: need at least 2 points");
        for (std::size_t i = 1; i < points_.size(); ++i)
            if (!(points_[i].timestamp_s > points_[i - 1].timestamp_s))
                throw std::invalid_argument("Trajectory: timestamps must be strictly increasing");
    }

    const std::vector<TrajectoryPoint>& points() const { return points_; }
    std::size_t size() const { return points_.size(); }
    const TrajectoryPoint& operator[](std::size_t i) const { return points_[i]; }

private:
    std::vector<TrajectoryPoint> points_;
};

enum class SegmentTag { start, end };

struct GroundTruthPoint {
    double timestamp_s;
    Eigen::Vector3d position;
    SegmentTag tag;
};

/// Ground-truth positions for the start and end segments of a sequence.
struct SegmentGroundTruth {
    std::vector<GroundTruthPoint> points;

    std::size_t count(SegmentTag tag) const {
        std::size_t n = 0;
        for (const auto& p : points)
            if (p.tag == tag)
                ++n;
        return n;
    }

    void validate() const {
        if (count(SegmentTag::start) == 0 || count(SegmentTag::end) == 0)
            throw std::invalid_argument(
                "SegmentGroundTruth: both start and end segments must be non-empty");
    }
};

/// Loop-closure drift metrics. Failed runs carry infinity in every error field
/// and have no_estimate set.
struct DriftReport {
    double e_s = 1.0;      // scale drift (multiplier)
    double e_r_deg = 0.0;  // rotation drift, degrees
    double e_t = 0.0;      // translation drift magnitude
    double e_align = 0.0;  // RMSE between start- and end-aligned trajectories
    double e_rmse = 0.0;   // joint Sim(3) RMSE over both segments
    double rmse_start = 0.0;
    double rmse_end = 0.0;
    bool no_estimate = false;
    std::size_t matched_start = 0;
    std::size_t matched_end = 0;
    std::size_t dropped_gt = 0;

    /// e'_s = max(e_s, 1/e_s), the multiplicative symmetrization.
    double scale_drift_symmetric() const { return std::max(e_s, 1.0 / e_s); }
};

struct EvaluationOptions {
    double match_window_s = 0.010; // nearest-neighbour association window
};

/// Accumulated drift between the two segment alignments, composed as
/// T_drift = T_end o T_start^{-1}; returns (T_drift, scale, rotation angle in
/// degrees, translation norm).
inline std::tuple<Sim3, double, double, double> drift_decompose(const Sim3& t_start,
                                                                const Sim3& t_end) {
    const Sim3 t_drift = t_end * t_start.inverse();
    return {t_drift, t_drift.scale(), t_drift.rotation_angle_deg(),
            t_drift.translation().norm()};
}

/// Translational RMSE between the trajectory under the two alignments:
/// sqrt(1/n sum ||T_s p_i - T_e p_i||^2) over all tracked positions.
inline double alignment_error(const Trajectory& trajectory, const Sim3& t_start,
                              const Sim3& t_end) {
    double sum_sq = 0.0;
    for (const auto& p : trajectory.points())
        sum_sq += (t_start.apply(p.position) - t_end.apply(p.position)).squaredNorm();
    return std::sqrt(sum_sq / static_cast<double>(trajectory.size()));
}

/// Residual RMSE of the single joint Sim(3) alignment over both segments.
inline double joint_rmse(std::span<const Eigen::Vector3d> tracked,
                         std::span<const Eigen::Vector3d> ground_truth) {
    return align_sim3(tracked, ground_truth).rmse;
}

namespace detail {

/// Nearest trajectory index within the window, or nullopt.
inline std::optional<std::size_t> match_timestamp(const Trajectory& trajectory, double timestamp,
                                                  double window_s) {
    const auto& pts = trajectory.points();
    const auto it = std::lower_bound(pts.begin(), pts.end(), timestamp,
                                     [](const TrajectoryPoint& p, double t) {
                                         return p.timestamp_s < t;
                                     });
    std::optional<std::size_t> best;
    double best_dt = window_s;
    if (it != pts.end()) {
        const double dt = std::abs(it->timestamp_s - timestamp);
        if (dt <= best_dt) {
            best = static_cast<std::size_t>(it - pts.begin());
            best_dt = dt;
        }
    }
    if (it != pts.begin()) {
        const auto prev = it - 1;
        const double dt = std::abs(prev->timestamp_s - timestamp);
        if (dt < best_dt || (dt <= best_dt && !best)) {
            best = static_cast<std::size_t>(prev - pts.begin());
        }
    }
    return best;
}

inline DriftReport failed_report(std::size_t matched_start, std::size_t matched_end,
                                 std::size_t dropped) {
    DriftReport r;
    const double inf = std::numeric_limits<double>::infinity();
    r.e_s = inf;
    r.e_r_deg = inf;
    r.e_t = inf;
    r.e_align = inf;
    r.e_rmse = inf;
    r.rmse_start = inf;
    r.rmse_end = inf;
    r.no_estimate = true;
    r.matched_start = matched_start;
    r.matched_end = matched_end;
    r.dropped_gt = dropped;
    return r;
}

} // namespace detail

/// Full loop-closure evaluation: associates ground truth to tracked positions
/// by timestamp, aligns the trajectory independently to the start and end
/// segments, and decomposes the accumulated drift. The drift transform is
/// reported in the ground-truth frame with the convention that a tracked map
/// shrunk by a factor lambda yields e_s = lambda. Missing coverage of either
/// segment yields the infinite-error report.
inline DriftReport evaluate_sequence(const Trajectory& trajectory, const SegmentGroundTruth& gt,
                                     const EvaluationOptions& opts = {}) {
    gt.validate();
    std::vector<Eigen::Vector3d> tracked_start, gt_start, tracked_end, gt_end;
    std::size_t dropped = 0;
    for (const auto& g : gt.points) {
        const auto match = detail::match_timestamp(trajectory, g.timestamp_s, opts.match_window_s);
        if (!match) {
            ++dropped;
            continue;
        }
        if (g.tag == SegmentTag::start) {
            tracked_start.push_back(trajectory[*match].position);
            gt_start.push_back(g.position);
        } else {
            tracked_end.push_back(trajectory[*match].position);
            gt_end.push_back(g.position);
        }
    }

    if (tracked_start.size() < 3 || tracked_end.size() < 3)
        return detail::failed_report(tracked_start.size(), tracked_end.size(), dropped);

    Sim3Alignment start_alignment, end_alignment;
    try {
        start_alignment = align_sim3(tracked_start, gt_start);
        end_alignment = align_sim3(tracked_end, gt_end);
    } catch (const std::invalid_argument&) {
        return detail::failed_report(tracked_start.size(), tracked_end.size(), dropped);
    }

    DriftReport report;
    report.matched_start = tracked_start.size();
    report.matched_end = tracked_end.size();
    report.dropped_gt = dropped;
    report.rmse_start = start_alignment.rmse;
    report.rmse_end = end_alignment.rmse;

    // Both alignments map tracked coordinates into the ground-truth frame, so
    // composing start o end^{-1} expresses the accumulated drift in that
    // frame; its scale is the factor the tracked map gained over the loop.
    const auto [t_drift, e_s, e_r, e_t] =
        drift_decompose(end_alignment.transform, start_alignment.transform);
    report.e_s = e_s;
    report.e_r_deg = e_r;
    report.e_t = e_t;
    report.e_align =
        alignment_error(trajectory, start_alignment.transform, end_alignment.transform);

    std::vector<Eigen::Vector3d> tracked_joint = tracked_start;
    tracked_joint.insert(tracked_joint.end(), tracked_end.begin(), tracked_end.end());
    std::vector<Eigen::Vector3d> gt_joint = gt_start;
    gt_joint.insert(gt_joint.end(), gt_end.begin(), gt_end.end());
    try {
        report.e_rmse = joint_rmse(tracked_joint, gt_joint);
    } catch (const std::invalid_argument&) {
        report.e_rmse = std::numeric_limits<double>::infinity();
    }
    return report;
}

/// Scale of the joint Sim(3) alignment over both segments; exposes the
/// degeneracy of e_rmse under large translational drift.
inline double joint_alignment_scale(const Trajectory& trajectory, const SegmentGroundTruth& gt,
                                    const EvaluationOptions& opts = {}) {
    std::vector<Eigen::Vector3d> tracked, truth;
    for (const auto& g : gt.points) {
        const auto match = detail::match_timestamp(trajectory, g.timestamp_s, opts.match_window_s);
        if (!match)
            continue;
        tracked.push_back(trajectory[*match].position);
        truth.push_back(g.position);
    }
    return align_sim3(tracked, truth).transform.scale();
}

// ---------------------------------------------------------------------------
// Drift injection

/// Scales all positions after `index` about the position at `index`.
inline Trajectory inject_scale_jump(const Trajectory& trajectory, std::size_t index,
                                    double factor) {
    if (index >= trajectory.size())
        throw std::out_of_range("inject_scale_jump: index out of range");
    if (!(factor > 0.0))
        throw std::invalid_argument("inject_scale_jump: factor must be positive");
    std::vector<TrajectoryPoint> points = trajectory.points();
    const Eigen::Vector3d pivot = points[index].position;
    for (std::size_t i = index + 1; i < points.size(); ++i)
        points[i].position = pivot + factor * (points[i].position - pivot);
    return Trajectory(std::move(points));
}

/// Rotates all positions after `index` about an axis through the position at
/// `index`.
inline Trajectory inject_rotation_jump(const Trajectory& trajectory, std::size_t index,
                                       double angle_deg,
                                       const Eigen::Vector3d& axis = Eigen::Vector3d::UnitZ()) {
    if (index >= trajectory.size())
        throw std::out_of_range("inject_rotation_jump: index out of range");
    if (axis.norm() <= 0.0)
        throw std::invalid_argument("inject_rotation_jump: zero axis");
    std::vector<TrajectoryPoint> points = trajectory.points();
    const Eigen::Vector3d pivot = points[index].position;
    const Eigen::Matrix3d rot =
        Eigen::AngleAxisd(angle_deg * std::numbers::pi / 180.0, axis.normalized())
            .toRotationMatrix();
    for (std::size_t i = index + 1; i < points.size(); ++i)
        points[i].position = pivot + rot * (points[i].position - pivot);
    return Trajectory(std::move(points));
}

/// Translates all positions after `index` by `delta`.
inline Trajectory inject_translation_jump(const Trajectory& trajectory, std::size_t index,
                                          const Eigen::Vector3d& delta) {
    if (index >= trajectory.size())
        throw std::out_of_range("inject_translation_jump: index out of range");
    std::vector<TrajectoryPoint> points = trajectory.points();
    for (std::size_t i = index + 1; i < points.size(); ++i)
        points[i].position += delta;
    return Trajectory(std::move(points));
}

// ---------------------------------------------------------------------------
// Summaries

struct CumulativePoint {
    double threshold;
    std::size_t count; // runs with error <= threshold
};

struct CumulativeDistribution {
    std::vector<CumulativePoint> points; // sorted by threshold, distinct values
    std::size_t total = 0;
    std::size_t infinite = 0; // counted in total, never below a finite threshold
};

inline CumulativeDistribution cumulative_distribution(std::vector<double> errors) {
    CumulativeDistribution dist;
    dist.total = errors.size();
    std::vector<double> finite;
    finite.reserve(errors.size());
    for (const double e : errors) {
        if (std::isinf(e) || std::isnan(e))
            ++dist.infinite;
        else
            finite.push_back(e);
    }
    std::sort(finite.begin(), finite.end());
    for (std::size_t i = 0; i < finite.size(); ++i) {
        if (i + 1 < finite.size() && finite[i + 1] == finite[i])
            continue; // emit one point per distinct value, with the total count
        dist.points.push_back({finite[i], i + 1});
    }
    return dist;
}

inline double symmetrize_scale(double e_s) { return std::max(e_s, 1.0 / e_s); }

/// Rescales ground-truth positions so a trajectory of the given reference
/// length ends up with length 100. The reference is supplied, never inferred.
inline void normalize_gt_scale(SegmentGroundTruth& gt, double reference_length) {
    if (!(reference_length > 0.0))
        throw std::invalid_argument("normalize_gt_scale: reference length must be positive");
    const double factor = 100.0 / reference_length;
    for (auto& p : gt.points)
        p.position *= factor;
}

inline void normalize_gt_scale(std::vector<Eigen::Vector3d>& positions, double reference_length) {
    if (!(reference_length > 0.0))
        throw std::invalid_argument("normalize_gt_scale: reference length must be positive");
    const double factor = 100.0 / reference_length;
    for (auto& p : positions)
        p *= factor;
}

inline double path_length(const Trajectory& trajectory) {
    double length = 0.0;
    for (std::size_t i = 1; i < trajectory.size(); ++i)
        length += (trajectory[i].position - trajectory[i - 1].position).norm();
    return length;
}

// ---------------------------------------------------------------------------
// File formats

namespace detail {

inline std::string format_value(double v) {
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline bool strip_comment_and_empty(std::string& line) {
    const auto hash = line.find('#');
    if (hash != std::string::npos)
        line = line.substr(0, hash);
    return line.find_first_not_of(" \t\r\n") != std::string::npos;
}

} // namespace detail

/// Trajectory file: "timestamp tx ty tz [qx qy qz qw]" per line; the optional
/// quaternion is ignored (alignment solves positions only).
inline Trajectory load_trajectory_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open: " + path.string());
    std::vector<TrajectoryPoint> points;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!detail::strip_comment_and_empty(line))
            continue;
        std::istringstream ss(line);
        TrajectoryPoint p;
        if (!(ss >> p.timestamp_s >> p.position.x() >> p.position.y() >> p.position.z()))
            throw std::runtime_error("trajectory file " + path.string() + ":" +
                                     std::to_string(line_no) +
                                     ": expected 'timestamp tx ty tz [qx qy qz qw]'");
        points.push_back(p);
    }
    return Trajectory(std::move(points));
}

inline void save_trajectory_file(const Trajectory& trajectory,
                                 const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot open for writing: " + path.string());
    out << "# timestamp tx ty tz\n";
    for (const auto& p : trajectory.points())
        out << detail::format_value(p.timestamp_s) << " " << detail::format_value(p.position.x())
            << " " << detail::format_value(p.position.y()) << " "
            << detail::format_value(p.position.z()) << "\n";
}

/// Ground-truth file: trajectory format plus a trailing S|E segment tag.
inline SegmentGroundTruth load_ground_truth_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open: " + path.string());
    SegmentGroundTruth gt;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!detail::strip_comment_and_empty(line))
            continue;
        std::istringstream ss(line);
        std::vector<std::string> tokens;
        std::string token;
        while (ss >> token)
            tokens.push_back(token);
        if (tokens.size() != 5 && tokens.size() != 9)
            throw std::runtime_error("ground-truth file " + path.string() + ":" +
                                     std::to_string(line_no) +
                                     ": expected 'timestamp tx ty tz [qx qy qz qw] S|E'");
        GroundTruthPoint p;
        try {
            p.timestamp_s = std::stod(tokens[0]);
            p.position = {std::stod(tokens[1]), std::stod(tokens[2]), std::stod(tokens[3])};
        } catch (const std::exception&) {
            throw std::runtime_error("ground-truth file " + path.string() + ":" +
                                     std::to_string(line_no) + ": malformed number");
        }
        const std::string& tag = tokens.back();
        if (tag == "S")
            p.tag = SegmentTag::start;
        else if (tag == "E")
            p.tag = SegmentTag::end;
        else
            throw std::runtime_error("ground-truth file " + path.string() + ":" +
                                     std::to_string(line_no) + ": segment tag must be S or E");
        gt.points.push_back(p);
    }
    gt.validate();
    return gt;
}

inline void save_ground_truth_file(const SegmentGroundTruth& gt,
                                   const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot open for writing: " + path.string());
    out << "# timestamp tx ty tz S|E\n";
    for (const auto& p : gt.points)
        out << detail::format_value(p.timestamp_s) << " " << detail::format_value(p.position.x())
            << " " << detail::format_value(p.position.y()) << " "
            << detail::format_value(p.position.z()) << " "
            << (p.tag == SegmentTag::start ? "S" : "E") << "\n";
}

inline std::string report_to_text(const DriftReport& r) {
    std::ostringstream out;
    out << "loop-closure drift report\n";
    out << "  e_align     " << detail::format_value(r.e_align) << "\n";
    out << "  e_s         " << detail::format_value(r.e_s) << "\n";
    out << "  e_s_sym     " << detail::format_value(r.scale_drift_symmetric()) << "\n";
    out << "  e_r_deg     " << detail::format_value(r.e_r_deg) << "\n";
    out << "  e_t         " << detail::format_value(r.e_t) << "\n";
    out << "  e_rmse      " << detail::format_value(r.e_rmse) << "\n";
    out << "  rmse_start  " << detail::format_value(r.rmse_start) << "\n";
    out << "  rmse_end    " << detail::format_value(r.rmse_end) << "\n";
    out << "  matched     " << r.matched_start << " start / " << r.matched_end << " end ("
        << r.dropped_gt << " gt dropped)\n";
    out << "  estimate    " << (r.no_estimate ? "none" : "ok") << "\n";
    return out.str();
}

inline std::string report_to_csv(const DriftReport& r) {
    std::ostringstream out;
    out << "metric,value\n";
    out << "e_align," << detail::format_value(r.e_align) << "\n";
    out << "e_s," << detail::format_value(r.e_s) << "\n";
    out << "e_s_sym," << detail::format_value(r.scale_drift_symmetric()) << "\n";
    out << "e_r_deg," << detail::format_value(r.e_r_deg) << "\n";
    out << "e_t," << detail::format_value(r.e_t) << "\n";
    out << "e_rmse," << detail::format_value(r.e_rmse) << "\n";
    out << "rmse_start," << detail::format_value(r.rmse_start) << "\n";
    out << "rmse_end," << detail::format_value(r.rmse_end) << "\n";
    out << "no_estimate," << (r.no_estimate ? 1 : 0) << "\n";
    return out.str();
}

/// Reads one metric column back from a report CSV ("inf" parses to infinity).
inline std::map<std::string, double> load_report_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open: " + path.string());
    std::map<std::string, double> metrics;
    std::string line;
    while (std::getline(in, line)) {
        const auto comma = line.find(',');
        if (comma == std::string::npos)
            continue;
        const std::string key = line.substr(0, comma);
        const std::string value = line.substr(comma + 1);
        if (key == "metric")
            continue;
        if (value == "inf")
            metrics[key] = std::numeric_limits<double>::infinity();
        else if (value == "-inf")
            metrics[key] = -std::numeric_limits<double>::infinity();
        else {
            try {
                metrics[key] = std::stod(value);
            } catch (const std::exception&) {
                throw std::runtime_error("report csv " + path.string() + ": malformed value for " +
                                         key);
            }
        }
    }
    return metrics;
}

} // namespace phovo
