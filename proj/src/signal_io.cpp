#include "edaflow/signal_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include "csv_util.hpp"
#include "edaflow/errors.hpp"

namespace edaflow {

namespace {

constexpr double kSpacingTolerance = 1e-4;

std::ifstream open_or_throw(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");
    return in;
}

// Reads the header line, skipping blank lines. Returns false at EOF.
bool read_header(std::istream& in, std::string& line) {
    while (std::getline(in, line)) {
        if (!csv::trim(line).empty()) return true;
    }
    return false;
}

}  // namespace

std::string_view to_string(RiskLabel label) noexcept {
    return label == RiskLabel::High ? "high" : "low";
}

std::optional<RiskLabel> parse_risk_label(std::string_view text) noexcept {
    if (text == "high") return RiskLabel::High;
    if (text == "low") return RiskLabel::Low;
    return std::nullopt;
}

double LabelTrack::labeled_duration() const noexcept {
    double total = 0.0;
    for (const auto& iv : intervals) total += iv.duration();
    return total;
}

void validate_track(const LabelTrack& track) {
    for (std::size_t i = 0; i < track.intervals.size(); ++i) {
        const auto& iv = track.intervals[i];
        if (!(iv.start_s < iv.end_s))
            throw DataError("label interval " + std::to_string(i + 1) + " has start >= end");
        if (i > 0 && track.intervals[i - 1].end_s > iv.start_s)
            throw DataError("label intervals " + std::to_string(i) + " and " +
                            std::to_string(i + 1) + " overlap or are unsorted");
    }
}

RawTrace read_trace(std::istream& in, std::optional<double> fs_override) {
    std::string line;
    if (!read_header(in, line)) throw ParseError("empty file: missing header", 0);
    auto header = csv::split(line);
    if (header.size() != 2 || header[0] != "t_s" || header[1] != "eda_uS")
        throw ParseError("bad header: expected 't_s,eda_uS'", 0);

    std::vector<double> times;
    RawTrace trace;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (csv::trim(line).empty()) continue;
        ++row;
        auto cols = csv::split(line);
        if (cols.size() != 2)
            throw ParseError("expected 2 columns at row " + std::to_string(row), row);
        auto t = csv::to_double(cols[0]);
        auto v = csv::to_double(cols[1]);
        if (!t || !v) throw ParseError("unparsable number at row " + std::to_string(row), row);
        if (!std::isfinite(*t))
            throw ParseError("non-finite timestamp at row " + std::to_string(row), row);
        if (!std::isfinite(*v))
            throw ParseError("non-finite sample at row " + std::to_string(row), row);
        if (!times.empty() && !(*t > times.back()))
            throw ParseError("non-monotonic timestamp at row " + std::to_string(row), row);
        times.push_back(*t);
        trace.samples.push_back(*v);
    }
    if (trace.samples.empty()) throw ParseError("empty file: no data rows", 0);

    trace.t0 = times.front();
    if (times.size() >= 2) {
        std::vector<double> dt(times.size() - 1);
        for (std::size_t i = 1; i < times.size(); ++i) dt[i - 1] = times[i] - times[i - 1];
        std::vector<double> sorted = dt;
        auto mid = sorted.begin() + static_cast<std::ptrdiff_t>((sorted.size() - 1) / 2);
        std::nth_element(sorted.begin(), mid, sorted.end());
        const double step = *mid;
        for (std::size_t i = 0; i < dt.size(); ++i) {
            if (std::abs(dt[i] - step) > kSpacingTolerance * step)
                throw ParseError("non-uniform spacing at row " + std::to_string(i + 2), i + 2);
        }
        trace.fs = 1.0 / step;
    }
    if (fs_override) {
        if (!(*fs_override > 0.0)) throw ParamError("fs override must be positive");
        trace.fs = *fs_override;
    }
    return trace;
}

RawTrace parse_trace(const std::string& path, std::optional<double> fs_override) {
    auto in = open_or_throw(path);
    return read_trace(in, fs_override);
}

void write_trace(std::ostream& out, const RawTrace& trace) {
    out << "t_s,eda_uS\n";
    for (std::size_t i = 0; i < trace.samples.size(); ++i)
        out << csv::format_double(trace.time_at(i)) << ',' << csv::format_double(trace.samples[i])
            << '\n';
}

LabelTrack read_label_file(std::istream& in) {
    std::string line;
    if (!read_header(in, line)) throw ParseError("empty file: missing header", 0);
    auto header = csv::split(line);
    if (header.size() != 3 || header[0] != "start_s" || header[1] != "end_s" ||
        header[2] != "label")
        throw ParseError("bad header: expected 'start_s,end_s,label'", 0);

    struct Row {
        LabelInterval iv;
        std::size_t row;
    };
    std::vector<Row> rows;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (csv::trim(line).empty()) continue;
        ++row;
        auto cols = csv::split(line);
        if (cols.size() != 3)
            throw ParseError("expected 3 columns at row " + std::to_string(row), row);
        auto s = csv::to_double(cols[0]);
        auto e = csv::to_double(cols[1]);
        if (!s || !e || !std::isfinite(*s) || !std::isfinite(*e))
            throw ParseError("unparsable time at row " + std::to_string(row), row);
        auto label = parse_risk_label(cols[2]);
        if (!label)
            throw ParseError("malformed label '" + std::string(cols[2]) + "' at row " +
                                 std::to_string(row),
                             row);
        if (!(*s < *e)) throw ParseError("start >= end at row " + std::to_string(row), row);
        rows.push_back({{*s, *e, *label}, row});
    }
    std::stable_sort(rows.begin(), rows.end(),
                     [](const Row& x, const Row& y) { return x.iv.start_s < y.iv.start_s; });
    LabelTrack track;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (i > 0 && rows[i - 1].iv.end_s > rows[i].iv.start_s)
            throw ParseError("overlapping intervals at rows " + std::to_string(rows[i - 1].row) +
                                 " and " + std::to_string(rows[i].row),
                             rows[i].row);
        track.intervals.push_back(rows[i].iv);
    }
    return track;
}

LabelTrack read_label_file(const std::string& path) {
    auto in = open_or_throw(path);
    return read_label_file(in);
}

void write_label_track(std::ostream& out, const LabelTrack& track) {
    out << "start_s,end_s,label\n";
    for (const auto& iv : track.intervals)
        out << csv::format_double(iv.start_s) << ',' << csv::format_double(iv.end_s) << ','
            << to_string(iv.label) << '\n';
}

LabelTrack consensus_track(const LabelTrack& a, const LabelTrack& b) {
    validate_track(a);
    validate_track(b);
    LabelTrack out;
    std::size_t i = 0;
    std::size_t j = 0;
    while (i < a.intervals.size() && j < b.intervals.size()) {
        const auto& x = a.intervals[i];
        const auto& y = b.intervals[j];
        const double lo = std::max(x.start_s, y.start_s);
        const double hi = std::min(x.end_s, y.end_s);
        if (lo < hi && x.label == y.label) {
            if (!out.intervals.empty() && out.intervals.back().label == x.label &&
                out.intervals.back().end_s == lo)
                out.intervals.back().end_s = hi;
            else
                out.intervals.push_back({lo, hi, x.label});
        }
        if (x.end_s < y.end_s)
            ++i;
        else if (y.end_s < x.end_s)
            ++j;
        else {
            ++i;
            ++j;
        }
    }
    return out;
}

LabelTrack parse_label_track(const std::string& path_a, const std::string& path_b) {
    return consensus_track(read_label_file(path_a), read_label_file(path_b));
}

std::optional<RiskLabel> label_window(const LabelTrack& track, double start_s, double end_s) {
    // First interval whose end exceeds the window start.
    auto it = std::upper_bound(track.intervals.begin(), track.intervals.end(), start_s,
                               [](double t, const LabelInterval& iv) { return t < iv.end_s; });
    if (it == track.intervals.end()) return std::nullopt;
    if (it->start_s <= start_s && end_s <= it->end_s) return it->label;
    return std::nullopt;
}

}  // namespace edaflow
