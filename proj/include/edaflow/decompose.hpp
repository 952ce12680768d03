#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include "edaflow/qp.hpp"
#include "edaflow/signal_io.hpp"

namespace edaflow {

struct DecompParams {
    double tau0_s = 2.0;          // slow Bateman time constant
    double tau1_s = 0.7;          // fast Bateman time constant
    double alpha = 8e-4;          // l1 weight on the driver
    double gamma = 1e-2;          // ridge weight on tonic spline coefficients
    double knot_spacing_s = 10.0; // tonic spline knot spacing
    double qp_tol = 1e-8;
    std::size_t qp_max_iter = 50000;
    double kernel_s = 20.0;       // Bateman kernel support
    double tile_s = 120.0;        // long traces are solved in overlapping tiles
    double tile_overlap_s = 20.0;
    bool standardize = true;      // solve on the z-scored trace, report in uS

    void validate() const;
};

struct DecomposedTrace {
    std::vector<double> edl;      // tonic
    std::vector<double> edr;      // phasic
    std::vector<double> driver;   // non-negative impulse amplitudes per sample
    std::vector<double> residual; // input - edl - edr
    double fs = kDefaultFs;
    double t0 = 0.0;

    std::size_t size() const noexcept { return edl.size(); }
};

// h[n] = exp(-n/(fs*tau0)) - exp(-n/(fs*tau1)) for n < ceil(duration_s*fs),
// scaled to unit sum.
std::vector<double> bateman_kernel(const DecompParams& params, double fs, double duration_s);

// Causal convolution truncated to the input length.
std::vector<double> convolve_causal(std::span<const double> driver, std::span<const double> kernel);

// Tonic design matrix for n samples: cubic B-splines on a uniform knot grid,
// then an offset column and a linear drift column.
DenseMatrix tonic_basis(std::size_t n, double fs, double knot_spacing_s);

// Solution of the decomposition QP on a single segment (no tiling).
struct SegmentSolution {
    std::vector<double> driver;
    std::vector<double> tonic_coef;
    std::vector<double> edr;
    std::vector<double> edl;
    double objective = 0.0;
    std::size_t qp_iterations = 0;
};

SegmentSolution decompose_segment(std::span<const double> y, double fs, const DecompParams& params);

// 1/2 |K q + T c - y|^2 + alpha * sum(q) + 1/2 gamma |c_spline|^2
// (the offset and drift coefficients are not penalized)
double decomposition_objective(std::span<const double> y, double fs, const DecompParams& params,
                               std::span<const double> driver, std::span<const double> tonic_coef);

// Tonic/phasic split of a trace. Traces longer than one tile are solved in
// overlapping tiles; `threads` > 1 solves tiles concurrently with identical
// results.
DecomposedTrace decompose(const RawTrace& trace, const DecompParams& params,
                          unsigned threads = 1);

void write_decomposition(std::ostream& out, const DecomposedTrace& dec);

}  // namespace edaflow
