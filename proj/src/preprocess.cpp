#include "edaflow/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>

#include "edaflow/errors.hpp"

namespace edaflow {

namespace {

void require_nonempty(const RawTrace& trace) {
    if (trace.samples.empty()) throw DataError("trace is empty");
    if (!(trace.fs > 0.0)) throw ParamError("sampling rate must be positive");
}

// Transposed direct form II, state primed so that a constant input equal to
// the first sample is already at steady state (zero output for a high-pass).
void run_biquad(const Biquad& f, std::span<double> x) {
    if (x.empty()) return;
    const double x0 = x[0];
    const double dc_gain = (f.b[0] + f.b[1] + f.b[2]) / (1.0 + f.a[0] + f.a[1]);
    const double y0 = dc_gain * x0;
    double z1 = y0 - f.b[0] * x0;
    double z2 = f.b[2] * x0 - f.a[1] * y0;
    for (double& v : x) {
        const double in = v;
        const double out = f.b[0] * in + z1;
        z1 = f.b[1] * in - f.a[0] * out + z2;
        z2 = f.b[2] * in - f.a[1] * out;
        v = out;
    }
}

}  // namespace

void FilterParams::validate(double fs) const {
    if (!(fs > 0.0)) throw ParamError("sampling rate must be positive");
    if (!(fc_hz > 0.0) || !(fc_hz < fs / 2.0))
        throw ParamError("high-pass cutoff must lie in (0, fs/2)");
    if (!(ma_width_s > 0.0)) throw ParamError("moving-average width must be positive");
}

Biquad design_butterworth_highpass(double fc_hz, double fs) {
    if (!(fs > 0.0)) throw ParamError("sampling rate must be positive");
    if (!(fc_hz > 0.0) || !(fc_hz < fs / 2.0))
        throw ParamError("high-pass cutoff must lie in (0, fs/2)");
    const double k = std::tan(std::numbers::pi * fc_hz / fs);
    const double k2 = k * k;
    const double q = std::numbers::sqrt2;
    const double norm = 1.0 / (1.0 + q * k + k2);
    Biquad f;
    f.b = {norm, -2.0 * norm, norm};
    f.a = {2.0 * (k2 - 1.0) * norm, (1.0 - q * k + k2) * norm};
    return f;
}

std::size_t moving_average_width(const FilterParams& params, double fs) {
    if (!(params.ma_width_s > 0.0)) throw ParamError("moving-average width must be positive");
    auto w = static_cast<std::size_t>(std::llround(params.ma_width_s * fs));
    if (w == 0) w = 1;
    if (w % 2 == 0) ++w;
    return w;
}

RawTrace highpass_filter(const RawTrace& trace, const FilterParams& params) {
    require_nonempty(trace);
    const Biquad f = design_butterworth_highpass(params.fc_hz, trace.fs);
    RawTrace out = trace;
    run_biquad(f, out.samples);
    if (params.zero_phase) {
        std::vector<double> rev(out.samples.rbegin(), out.samples.rend());
        run_biquad(f, rev);
        out.samples.assign(rev.rbegin(), rev.rend());
    }
    return out;
}

RawTrace moving_average(const RawTrace& trace, const FilterParams& params) {
    require_nonempty(trace);
    const std::size_t half = moving_average_width(params, trace.fs) / 2;
    const auto& x = trace.samples;
    const std::size_t n = x.size();

    // At the edges the window is clipped to the available samples.
    RawTrace out = trace;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t lo = i >= half ? i - half : 0;
        const std::size_t hi = std::min(n, i + half + 1);
        double sum = 0.0;
        double mn = x[lo];
        double mx = x[lo];
        for (std::size_t j = lo; j < hi; ++j) {
            sum += x[j];
            mn = std::min(mn, x[j]);
            mx = std::max(mx, x[j]);
        }
        out.samples[i] = std::clamp(sum / static_cast<double>(hi - lo), mn, mx);
    }
    return out;
}

RawTrace preprocess(const RawTrace& trace, const FilterParams& params) {
    if (params.skip_highpass) return moving_average(trace, params);
    return moving_average(highpass_filter(trace, params), params);
}

}  // namespace edaflow
