#pragma once

#include <array>
#include <iosfwd>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "edaflow/decompose.hpp"
#include "edaflow/signal_io.hpp"

namespace edaflow {

struct WindowSpec {
    double window_s = 10.0;
    double stride_s = 1.0;
};

inline constexpr std::size_t kFeatureCount = 11;

inline constexpr std::array<std::string_view, kFeatureCount> kFeatureNames = {
    "edr_std", "edr_median", "edr_integral", "edr_nap", "edr_nrms", "edl_mean",
    "edl_std", "edl_median", "bp1",          "bp2",     "bp3"};

// EDR spectral bands, half-open [lo, hi) in Hz.
inline constexpr std::array<std::pair<double, double>, 3> kBands = {
    std::pair{0.1, 0.2}, std::pair{0.2, 0.3}, std::pair{0.3, 0.4}};

using Features = std::array<double, kFeatureCount>;

struct FeatureVector {
    Features values{};
    double window_start_s = 0.0;
    std::optional<RiskLabel> label;

    double edr_std() const noexcept { return values[0]; }
    double edr_median() const noexcept { return values[1]; }
    double edr_integral() const noexcept { return values[2]; }
    double edr_nap() const noexcept { return values[3]; }
    double edr_nrms() const noexcept { return values[4]; }
    double edl_mean() const noexcept { return values[5]; }
    double edl_std() const noexcept { return values[6]; }
    double edl_median() const noexcept { return values[7]; }
};

// Labeled feature rows in window order.
struct FeatureMatrix {
    std::vector<FeatureVector> rows;

    std::size_t size() const noexcept { return rows.size(); }
    std::size_t count(RiskLabel label) const noexcept;
};

struct TimeDomainFeatures {
    double edr_std;
    double edr_median;
    double edr_integral;
    double edr_nap;
    double edr_nrms;
    double edl_mean;
    double edl_std;
    double edl_median;
};

struct SampleRange {
    std::size_t begin;
    std::size_t end;
    friend bool operator==(const SampleRange&, const SampleRange&) = default;
};

// Half-open windows stepped by the stride; empty when the trace is shorter
// than one window. Throws ParamError unless window and stride are whole
// numbers of samples with window > stride > 0.
std::vector<SampleRange> segment_windows(std::size_t n_samples, double fs, const WindowSpec& spec);

double population_std(std::span<const double> x);
double median(std::span<const double> x);

TimeDomainFeatures time_domain_features(std::span<const double> edr_win,
                                        std::span<const double> edl_win, double fs);

// Sum of the mean-removed one-sided periodogram (2/N^2)|X[k]|^2 over interior
// bins (0 < k < N/2) whose frequency k*fs/N lies in [lo_hz, hi_hz).
double band_power(std::span<const double> edr_win, double fs, double lo_hz, double hi_hz);

Features window_features(std::span<const double> edr_win, std::span<const double> edl_win,
                         double fs);

FeatureMatrix build_feature_matrix(const DecomposedTrace& dec, const LabelTrack& track,
                                   const WindowSpec& spec);

// CSV: window_start_s,label,<11 features>
void write_feature_matrix(std::ostream& out, const FeatureMatrix& data);
FeatureMatrix read_feature_matrix(std::istream& in);

}  // namespace edaflow
