#include "edaflow/synth.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "edaflow/errors.hpp"

namespace edaflow {

void SynthParams::validate() const {
    if (!(fs > 0.0)) throw ParamError("sampling rate must be positive");
    if (!(segment_s > 0.0)) throw ParamError("segment length must be positive");
    if (!(duration_s >= 2.0 * segment_s))
        throw ParamError("duration must cover at least two label segments");
    if (!(scr_rate_low_hz >= 0.0) || !(scr_rate_high_hz >= scr_rate_low_hz))
        throw ParamError("SCR rates must satisfy high >= low >= 0");
    if (!(scr_rate_high_hz < fs)) throw ParamError("SCR rates must stay below fs");
    if (!(drift_amplitude_uS >= 0.0) || drift_amplitude_uS > 0.3)
        throw ParamError("drift amplitude must lie in [0, 0.3] uS");
    if (!(drift_min_period_s >= 200.0) || !(drift_max_period_s >= drift_min_period_s))
        throw ParamError("drift periods must be >= 200 s");
    if (!(scr_amp_median_uS > 0.0) || !(scr_amp_sigma_log >= 0.0))
        throw ParamError("SCR amplitude distribution is invalid");
    if (!(noise_sigma_uS >= 0.0)) throw ParamError("noise sigma must be >= 0");
}

SynthTruth synth_trace(const SynthParams& p) {
    p.validate();
    DecompParams kp;
    kp.tau0_s = p.tau0_s;
    kp.tau1_s = p.tau1_s;
    const auto kernel = bateman_kernel(kp, p.fs, p.kernel_s);

    const auto n = static_cast<std::size_t>(std::llround(p.duration_s * p.fs));
    std::mt19937_64 rng(p.seed);

    SynthTruth out;
    out.trace.fs = p.fs;
    out.trace.t0 = 0.0;

    // Slow tonic drift.
    out.tonic_truth.assign(n, p.tonic_base_uS);
    if (p.drift_components > 0 && p.drift_amplitude_uS > 0.0) {
        std::uniform_real_distribution<double> period(p.drift_min_period_s, p.drift_max_period_s);
        std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
        const double amp = p.drift_amplitude_uS / static_cast<double>(p.drift_components);
        for (std::size_t c = 0; c < p.drift_components; ++c) {
            const double T = period(rng);
            const double ph = phase(rng);
            for (std::size_t i = 0; i < n; ++i)
                out.tonic_truth[i] +=
                    amp * std::sin(2.0 * std::numbers::pi * static_cast<double>(i) / (p.fs * T) + ph);
        }
    }

    // Alternating segments, Low first; SCR onsets from a Poisson process.
    out.driver_truth.assign(n, 0.0);
    std::lognormal_distribution<double> amplitude(std::log(p.scr_amp_median_uS), p.scr_amp_sigma_log);
    for (std::size_t s = 0;; ++s) {
        const double start = static_cast<double>(s) * p.segment_s;
        if (start >= p.duration_s) break;
        const double end = std::min(p.duration_s, start + p.segment_s);
        const RiskLabel label = s % 2 == 0 ? RiskLabel::Low : RiskLabel::High;
        out.track.intervals.push_back({start, end, label});
        const double rate = label == RiskLabel::High ? p.scr_rate_high_hz : p.scr_rate_low_hz;
        if (rate <= 0.0) continue;
        std::exponential_distribution<double> gap(rate);
        for (double t = start + gap(rng); t < end; t += gap(rng)) {
            const auto idx = static_cast<std::size_t>(std::floor(t * p.fs));
            if (idx < n) out.driver_truth[idx] += amplitude(rng);
        }
    }
    out.phasic_truth = convolve_causal(out.driver_truth, kernel);

    out.noise.assign(n, 0.0);
    if (p.noise_sigma_uS > 0.0) {
        std::normal_distribution<double> gauss(0.0, p.noise_sigma_uS);
        for (auto& v : out.noise) v = gauss(rng);
    }

    out.trace.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        out.trace.samples[i] = out.tonic_truth[i] + out.phasic_truth[i] + out.noise[i];
    return out;
}

FeatureMatrix run_pipeline(const RawTrace& trace, const LabelTrack& track,
                           const PipelineConfig& config) {
    const auto clean = preprocess(trace, config.filter);
    const auto dec = decompose(clean, config.decomp, config.threads);
    return build_feature_matrix(dec, track, config.window);
}

FeatureMatrix synth_dataset(const SynthParams& params, const PipelineConfig& config) {
    const auto truth = synth_trace(params);
    return run_pipeline(truth.trace, truth.track, config);
}

}  // namespace edaflow
