#include "edaflow/features.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>
#include <string>

#include "csv_util.hpp"
#include "edaflow/errors.hpp"

namespace edaflow {

namespace {

std::size_t whole_samples(double seconds, double fs, const char* what) {
    const double v = seconds * fs;
    const double r = std::round(v);
    if (!(r >= 1.0) || std::abs(v - r) > 1e-9 * std::max(1.0, r))
        throw ParamError(std::string(what) + " must be a positive whole number of samples");
    return static_cast<std::size_t>(r);
}

double mean(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v;
    return s / static_cast<double>(x.size());
}

}  // namespace

std::size_t FeatureMatrix::count(RiskLabel label) const noexcept {
    return static_cast<std::size_t>(std::count_if(
        rows.begin(), rows.end(), [label](const FeatureVector& r) { return r.label == label; }));
}

std::vector<SampleRange> segment_windows(std::size_t n_samples, double fs,
                                         const WindowSpec& spec) {
    if (!(fs > 0.0)) throw ParamError("sampling rate must be positive");
    if (!(spec.stride_s > 0.0) || !(spec.window_s > spec.stride_s))
        throw ParamError("window spec must satisfy window > stride > 0");
    const std::size_t w = whole_samples(spec.window_s, fs, "window");
    const std::size_t s = whole_samples(spec.stride_s, fs, "stride");
    std::vector<SampleRange> out;
    if (n_samples < w) return out;
    const std::size_t count = (n_samples - w) / s + 1;
    out.reserve(count);
    for (std::size_t k = 0; k < count; ++k) out.push_back({k * s, k * s + w});
    return out;
}

double population_std(std::span<const double> x) {
    if (x.empty()) return 0.0;
    const double m = mean(x);
    double ss = 0.0;
    for (double v : x) ss += (v - m) * (v - m);
    return std::sqrt(ss / static_cast<double>(x.size()));
}

double median(std::span<const double> x) {
    if (x.empty()) return 0.0;
    std::vector<double> s(x.begin(), x.end());
    std::sort(s.begin(), s.end());
    const std::size_t n = s.size();
    return n % 2 == 1 ? s[n / 2] : 0.5 * (s[n / 2 - 1] + s[n / 2]);
}

TimeDomainFeatures time_domain_features(std::span<const double> edr_win,
                                        std::span<const double> edl_win, double fs) {
    if (edr_win.size() != edl_win.size() || edr_win.size() < 2)
        throw ParamError("feature windows must have equal length >= 2");
    if (!(fs > 0.0)) throw ParamError("sampling rate must be positive");

    double integral = 0.0;
    for (std::size_t i = 1; i < edr_win.size(); ++i) integral += 0.5 * (edr_win[i - 1] + edr_win[i]);
    integral /= fs;

    const auto [lo, hi] = std::minmax_element(edr_win.begin(), edr_win.end());
    double nap = 0.0;
    if (*hi > *lo) {
        const double range = *hi - *lo;
        for (double v : edr_win) {
            const double u = (v - *lo) / range;
            nap += u * u;
        }
        nap /= static_cast<double>(edr_win.size());
    }

    return {population_std(edr_win), median(edr_win), integral,      nap,
            std::sqrt(nap),          mean(edl_win),   population_std(edl_win), median(edl_win)};
}

double band_power(std::span<const double> edr_win, double fs, double lo_hz, double hi_hz) {
    const std::size_t n = edr_win.size();
    if (n < 2) throw ParamError("band power needs at least 2 samples");
    if (!(lo_hz > 0.0) || !(hi_hz > lo_hz) || hi_hz > fs / 2.0)
        throw ParamError("band must lie inside (0, fs/2]");

    const double m = mean(edr_win);
    const double nd = static_cast<double>(n);
    const double eps = 1e-9 * fs / nd;
    double total = 0.0;
    for (std::size_t k = 1; 2 * k < n; ++k) {
        const double freq = static_cast<double>(k) * fs / nd;
        if (freq < lo_hz - eps || freq >= hi_hz - eps) continue;
        double re = 0.0;
        double im = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double phase = 2.0 * std::numbers::pi * static_cast<double>(k * i % n) / nd;
            re += (edr_win[i] - m) * std::cos(phase);
            im -= (edr_win[i] - m) * std::sin(phase);
        }
        total += 2.0 * (re * re + im * im) / (nd * nd);
    }
    return total;
}

Features window_features(std::span<const double> edr_win, std::span<const double> edl_win,
                         double fs) {
    const auto td = time_domain_features(edr_win, edl_win, fs);
    return {td.edr_std,
            td.edr_median,
            td.edr_integral,
            td.edr_nap,
            td.edr_nrms,
            td.edl_mean,
            td.edl_std,
            td.edl_median,
            band_power(edr_win, fs, kBands[0].first, kBands[0].second),
            band_power(edr_win, fs, kBands[1].first, kBands[1].second),
            band_power(edr_win, fs, kBands[2].first, kBands[2].second)};
}

FeatureMatrix build_feature_matrix(const DecomposedTrace& dec, const LabelTrack& track,
                                   const WindowSpec& spec) {
    if (dec.edr.size() != dec.edl.size()) throw DataError("EDR and EDL lengths differ");
    validate_track(track);
    FeatureMatrix out;
    for (const auto& w : segment_windows(dec.size(), dec.fs, spec)) {
        const double start = dec.t0 + static_cast<double>(w.begin) / dec.fs;
        const double end = dec.t0 + static_cast<double>(w.end) / dec.fs;
        auto label = label_window(track, start, end);
        if (!label) continue;
        const std::size_t len = w.end - w.begin;
        FeatureVector row;
        row.values = window_features(std::span(dec.edr).subspan(w.begin, len),
                                     std::span(dec.edl).subspan(w.begin, len), dec.fs);
        row.window_start_s = start;
        row.label = label;
        out.rows.push_back(row);
    }
    return out;
}

void write_feature_matrix(std::ostream& out, const FeatureMatrix& data) {
    out << "window_start_s,label";
    for (auto name : kFeatureNames) out << ',' << name;
    out << '\n';
    for (const auto& row : data.rows) {
        out << csv::format_double(row.window_start_s) << ','
            << (row.label ? to_string(*row.label) : std::string_view{});
        for (double v : row.values) out << ',' << csv::format_double(v);
        out << '\n';
    }
}

FeatureMatrix read_feature_matrix(std::istream& in) {
    std::string line;
    while (std::getline(in, line) && csv::trim(line).empty()) {}
    auto header = csv::split(line);
    bool ok = header.size() == kFeatureCount + 2 && header[0] == "window_start_s" &&
              header[1] == "label";
    for (std::size_t i = 0; ok && i < kFeatureCount; ++i) ok = header[i + 2] == kFeatureNames[i];
    if (!ok) throw ParseError("bad feature CSV header", 0);

    FeatureMatrix data;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (csv::trim(line).empty()) continue;
        ++row;
        auto cols = csv::split(line);
        if (cols.size() != kFeatureCount + 2)
            throw ParseError("wrong column count at row " + std::to_string(row), row);
        FeatureVector fv;
        auto start = csv::to_double(cols[0]);
        if (!start) throw ParseError("bad window_start_s at row " + std::to_string(row), row);
        fv.window_start_s = *start;
        if (!cols[1].empty()) {
            fv.label = parse_risk_label(cols[1]);
            if (!fv.label) throw ParseError("malformed label at row " + std::to_string(row), row);
        }
        for (std::size_t i = 0; i < kFeatureCount; ++i) {
            auto v = csv::to_double(cols[i + 2]);
            if (!v || !std::isfinite(*v))
                throw ParseError("bad feature value at row " + std::to_string(row), row);
            fv.values[i] = *v;
        }
        data.rows.push_back(fv);
    }
    return data;
}

}  // namespace edaflow
