#pragma once

#include <cstdint>
#include <vector>

#include "edaflow/decompose.hpp"
#include "edaflow/features.hpp"
#include "edaflow/preprocess.hpp"
#include "edaflow/signal_io.hpp"

namespace edaflow {

struct SynthParams {
    double duration_s = 1200.0;
    double fs = kDefaultFs;
    double tonic_base_uS = 2.0;
    std::size_t drift_components = 2;   // sinusoids in the tonic drift
    double drift_amplitude_uS = 0.2;    // summed amplitude, at most 0.3
    double drift_min_period_s = 200.0;
    double drift_max_period_s = 600.0;
    double scr_rate_low_hz = 0.02;
    double scr_rate_high_hz = 0.15;
    double scr_amp_median_uS = 0.3;     // log-normal amplitude median
    double scr_amp_sigma_log = 0.5;
    double noise_sigma_uS = 0.01;
    double segment_s = 120.0;           // alternating Low/High segments, Low first
    double tau0_s = 2.0;                // kernel shared with the decomposition
    double tau1_s = 0.7;
    double kernel_s = 20.0;
    std::uint64_t seed = 0;

    void validate() const;
};

struct SynthTruth {
    RawTrace trace;
    std::vector<double> driver_truth;  // SCR amplitude at each event sample
    std::vector<double> tonic_truth;
    std::vector<double> phasic_truth;  // bateman kernel convolved with driver_truth
    std::vector<double> noise;
    LabelTrack track;
};

// trace = tonic_truth + phasic_truth + noise, sample by sample.
SynthTruth synth_trace(const SynthParams& params);

struct PipelineConfig {
    FilterParams filter;
    DecompParams decomp;
    WindowSpec window;
    unsigned threads = 1;
};

// synth_trace, then preprocess, decompose and window with the truth track.
FeatureMatrix synth_dataset(const SynthParams& params, const PipelineConfig& config);

// Same stages on an arbitrary trace.
FeatureMatrix run_pipeline(const RawTrace& trace, const LabelTrack& track,
                           const PipelineConfig& config);

}  // namespace edaflow
