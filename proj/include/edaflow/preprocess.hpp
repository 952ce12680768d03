#pragma once

#include <array>

#include "edaflow/signal_io.hpp"

namespace edaflow {

struct FilterParams {
    double fc_hz = 0.05;       // high-pass cutoff
    double ma_width_s = 1.0;   // moving-average width
    bool zero_phase = false;   // forward-backward high-pass
    bool skip_highpass = false;

    void validate(double fs) const;
};

// Normalized biquad: y = b0 x + b1 x[-1] + b2 x[-2] - a1 y[-1] - a2 y[-2].
struct Biquad {
    std::array<double, 3> b{};
    std::array<double, 2> a{};
};

// Second-order Butterworth high-pass via bilinear transform with the
// cutoff prewarped so the digital -3 dB point sits exactly at fc_hz.
Biquad design_butterworth_highpass(double fc_hz, double fs);

// Odd moving-average width in samples for the given parameters.
std::size_t moving_average_width(const FilterParams& params, double fs);

RawTrace highpass_filter(const RawTrace& trace, const FilterParams& params);
RawTrace moving_average(const RawTrace& trace, const FilterParams& params);

// highpass_filter followed by moving_average.
RawTrace preprocess(const RawTrace& trace, const FilterParams& params);

}  // namespace edaflow
