#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace edaflow {

inline constexpr double kDefaultFs = 4.0;

// Uniformly sampled EDA signal in microsiemens.
struct RawTrace {
    std::vector<double> samples;
    double fs = kDefaultFs;
    double t0 = 0.0;

    std::size_t size() const noexcept { return samples.size(); }
    double duration_s() const noexcept { return static_cast<double>(samples.size()) / fs; }
    double time_at(std::size_t i) const noexcept { return t0 + static_cast<double>(i) / fs; }
};

// High is the positive class everywhere.
enum class RiskLabel { Low, High };

std::string_view to_string(RiskLabel label) noexcept;
std::optional<RiskLabel> parse_risk_label(std::string_view text) noexcept;

// Half-open [start_s, end_s).
struct LabelInterval {
    double start_s = 0.0;
    double end_s = 0.0;
    RiskLabel label = RiskLabel::Low;

    double duration() const noexcept { return end_s - start_s; }
    friend bool operator==(const LabelInterval&, const LabelInterval&) = default;
};

// Sorted, pairwise non-overlapping intervals. Gaps are unlabeled time.
struct LabelTrack {
    std::vector<LabelInterval> intervals;

    double labeled_duration() const noexcept;
    friend bool operator==(const LabelTrack&, const LabelTrack&) = default;
};

// Throws DataError if the track is unsorted, overlapping, or has empty intervals.
void validate_track(const LabelTrack& track);

RawTrace read_trace(std::istream& in, std::optional<double> fs_override = std::nullopt);
RawTrace parse_trace(const std::string& path, std::optional<double> fs_override = std::nullopt);
void write_trace(std::ostream& out, const RawTrace& trace);

// Single annotator file, validated but not merged.
LabelTrack read_label_file(std::istream& in);
LabelTrack read_label_file(const std::string& path);
void write_label_track(std::ostream& out, const LabelTrack& track);

// Time where both annotators give the same label; adjacent same-label
// intervals merged. Disagreement and single-annotator time is dropped.
LabelTrack consensus_track(const LabelTrack& a, const LabelTrack& b);
LabelTrack parse_label_track(const std::string& path_a, const std::string& path_b);

// Label iff [start_s, end_s) lies inside a single interval of the track.
std::optional<RiskLabel> label_window(const LabelTrack& track, double start_s, double end_s);

}  // namespace edaflow
