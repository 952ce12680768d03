#include "edaflow/decompose.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <ostream>

#include "csv_util.hpp"
#include "edaflow/errors.hpp"

namespace edaflow {

namespace {

double cubic_bspline(double u) {
    u = std::abs(u);
    if (u < 1.0) return 2.0 / 3.0 - u * u + 0.5 * u * u * u;
    if (u < 2.0) {
        const double v = 2.0 - u;
        return v * v * v / 6.0;
    }
    return 0.0;
}

struct Tile {
    std::size_t begin;  // solved range
    std::size_t end;
    std::size_t keep_begin;  // range written to the output
    std::size_t keep_end;
};

std::vector<Tile> plan_tiles(std::size_t n, double fs, const DecompParams& params) {
    const auto len = static_cast<std::size_t>(std::llround(params.tile_s * fs));
    const auto overlap = static_cast<std::size_t>(std::llround(params.tile_overlap_s * fs));
    if (n <= len || len <= overlap) return {{0, n, 0, n}};

    const std::size_t step = len - overlap;
    std::vector<Tile> tiles;
    for (std::size_t start = 0;; start += step) {
        if (start + len >= n) {
            tiles.push_back({n - len, n, 0, n});
            break;
        }
        tiles.push_back({start, start + len, 0, 0});
    }
    // Split each overlap at its midpoint so both neighbours drop equal margins.
    tiles.front().keep_begin = 0;
    for (std::size_t i = 0; i + 1 < tiles.size(); ++i) {
        const std::size_t boundary = (tiles[i].end + tiles[i + 1].begin) / 2;
        tiles[i].keep_end = boundary;
        tiles[i + 1].keep_begin = boundary;
    }
    tiles.back().keep_end = n;
    return tiles;
}

}  // namespace

void DecompParams::validate() const {
    if (!(tau1_s > 0.0) || !(tau0_s > tau1_s))
        throw ParamError("kernel time constants must satisfy tau0 > tau1 > 0");
    if (!(alpha >= 0.0)) throw ParamError("alpha must be non-negative");
    if (!(gamma >= 0.0)) throw ParamError("gamma must be non-negative");
    if (!(knot_spacing_s > 0.0)) throw ParamError("knot spacing must be positive");
    if (!(qp_tol > 0.0)) throw ParamError("QP tolerance must be positive");
    if (qp_max_iter == 0) throw ParamError("QP iteration cap must be positive");
    if (!(kernel_s > 0.0)) throw ParamError("kernel duration must be positive");
    if (!(tile_s > 0.0) || !(tile_overlap_s >= 0.0) || !(tile_overlap_s < tile_s))
        throw ParamError("tile length must exceed the tile overlap");
}

std::vector<double> bateman_kernel(const DecompParams& params, double fs, double duration_s) {
    if (!(params.tau1_s > 0.0) || !(params.tau0_s > params.tau1_s))
        throw ParamError("kernel time constants must satisfy tau0 > tau1 > 0");
    if (!(fs > 0.0)) throw ParamError("sampling rate must be positive");
    if (!(duration_s > 0.0)) throw ParamError("kernel duration must be positive");
    const auto len = static_cast<std::size_t>(std::ceil(duration_s * fs));
    std::vector<double> h(len);
    double sum = 0.0;
    for (std::size_t i = 0; i < len; ++i) {
        const double n = static_cast<double>(i);
        h[i] = std::exp(-n / (fs * params.tau0_s)) - std::exp(-n / (fs * params.tau1_s));
        sum += h[i];
    }
    if (sum > 0.0)
        for (double& v : h) v /= sum;
    return h;
}

std::vector<double> convolve_causal(std::span<const double> driver,
                                    std::span<const double> kernel) {
    const std::size_t n = driver.size();
    std::vector<double> out(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        if (driver[j] == 0.0) continue;
        const std::size_t stop = std::min(n, j + kernel.size());
        for (std::size_t i = j; i < stop; ++i) out[i] += driver[j] * kernel[i - j];
    }
    return out;
}

namespace {

// Squared norm of the spline part; offset and drift are not penalized.
double spline_norm2(std::span<const double> tonic_coef) {
    double s = 0.0;
    for (std::size_t c = 0; c + 2 < tonic_coef.size(); ++c) s += tonic_coef[c] * tonic_coef[c];
    return s;
}

}  // namespace

DenseMatrix tonic_basis(std::size_t n, double fs, double knot_spacing_s) {
    const double m = knot_spacing_s * fs;  // samples between knots
    const auto last = static_cast<long>(std::floor(static_cast<double>(n - 1) / m)) + 2;
    const std::size_t n_spline = static_cast<std::size_t>(last + 2);  // knots -1..last
    DenseMatrix T(n, n_spline + 2);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i);
        for (long j = -1; j <= last; ++j)
            T(i, static_cast<std::size_t>(j + 1)) = cubic_bspline((t - static_cast<double>(j) * m) / m);
        T(i, n_spline) = 1.0;
        T(i, n_spline + 1) = n > 1 ? t / static_cast<double>(n - 1) : 0.0;
    }
    return T;
}

double decomposition_objective(std::span<const double> y, double fs, const DecompParams& params,
                               std::span<const double> driver,
                               std::span<const double> tonic_coef) {
    const auto h = bateman_kernel(params, fs, params.kernel_s);
    const auto edr = convolve_causal(driver, h);
    const auto T = tonic_basis(y.size(), fs, params.knot_spacing_s);
    double fit = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        double tonic = 0.0;
        for (std::size_t c = 0; c < T.cols(); ++c) tonic += T(i, c) * tonic_coef[c];
        const double r = edr[i] + tonic - y[i];
        fit += r * r;
    }
    double l1 = 0.0;
    for (double q : driver) l1 += q;
    return 0.5 * fit + params.alpha * l1 + 0.5 * params.gamma * spline_norm2(tonic_coef);
}

SegmentSolution decompose_segment(std::span<const double> y, double fs,
                                  const DecompParams& params) {
    params.validate();
    const std::size_t n = y.size();
    if (n < 2) throw DataError("segment too short to decompose");
    const auto h = bateman_kernel(params, fs, params.kernel_s);
    const std::size_t L = h.size();
    const auto T = tonic_basis(n, fs, params.knot_spacing_s);
    const std::size_t m = T.cols();
    const std::size_t dim = n + m;

    DenseMatrix H(dim, dim);
    // K'K: column a of K is h shifted down by a samples.
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = a; b < n && b < a + L; ++b) {
            double s = 0.0;
            const std::size_t stop = std::min(n, a + L);
            for (std::size_t i = b; i < stop; ++i) s += h[i - a] * h[i - b];
            H(a, b) = s;
            H(b, a) = s;
        }
    }
    // K'T
    for (std::size_t a = 0; a < n; ++a) {
        const std::size_t stop = std::min(n, a + L);
        for (std::size_t c = 0; c < m; ++c) {
            double s = 0.0;
            for (std::size_t i = a; i < stop; ++i) s += h[i - a] * T(i, c);
            H(a, n + c) = s;
            H(n + c, a) = s;
        }
    }
    // T'T + gamma on the spline coefficients
    for (std::size_t c = 0; c < m; ++c) {
        for (std::size_t d = c; d < m; ++d) {
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i) s += T(i, c) * T(i, d);
            if (c == d && c + 2 < m) s += params.gamma;
            H(n + c, n + d) = s;
            H(n + d, n + c) = s;
        }
    }

    std::vector<double> f(dim, 0.0);
    for (std::size_t a = 0; a < n; ++a) {
        double s = 0.0;
        const std::size_t stop = std::min(n, a + L);
        for (std::size_t i = a; i < stop; ++i) s += h[i - a] * y[i];
        f[a] = params.alpha - s;
    }
    for (std::size_t c = 0; c < m; ++c) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += T(i, c) * y[i];
        f[n + c] = -s;
    }

    std::vector<bool> nonneg(dim, false);
    std::fill(nonneg.begin(), nonneg.begin() + static_cast<std::ptrdiff_t>(n), true);

    const auto qp = solve_nonneg_qp(H, f, nonneg, {params.qp_tol, params.qp_max_iter});

    SegmentSolution out;
    out.qp_iterations = qp.iterations;
    out.driver.assign(qp.x.begin(), qp.x.begin() + static_cast<std::ptrdiff_t>(n));
    out.tonic_coef.assign(qp.x.begin() + static_cast<std::ptrdiff_t>(n), qp.x.end());
    out.edr = convolve_causal(out.driver, h);
    out.edl.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t c = 0; c < m; ++c) out.edl[i] += T(i, c) * out.tonic_coef[c];

    double fit = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = out.edr[i] + out.edl[i] - y[i];
        fit += r * r;
    }
    double l1 = 0.0;
    for (double q : out.driver) l1 += q;
    out.objective = 0.5 * fit + params.alpha * l1 + 0.5 * params.gamma * spline_norm2(out.tonic_coef);
    return out;
}

DecomposedTrace decompose(const RawTrace& trace, const DecompParams& params, unsigned threads) {
    params.validate();
    if (!(trace.fs > 0.0)) throw ParamError("sampling rate must be positive");
    const std::size_t n = trace.size();
    const double min_len = 2.0 * params.knot_spacing_s * trace.fs;
    if (n == 0 || static_cast<double>(n) < min_len)
        throw DataError("trace too short to decompose: " + std::to_string(n) +
                        " samples, need at least " + std::to_string(static_cast<long>(std::ceil(min_len))));

    // Model weights (alpha, gamma) are calibrated for unit-variance input.
    double offset = 0.0;
    double scale = 1.0;
    std::vector<double> normalized;
    if (params.standardize) {
        for (double v : trace.samples) offset += v;
        offset /= static_cast<double>(n);
        double ss = 0.0;
        for (double v : trace.samples) ss += (v - offset) * (v - offset);
        const double sd = std::sqrt(ss / static_cast<double>(n));
        if (sd > 0.0) scale = sd;
        normalized.resize(n);
        for (std::size_t i = 0; i < n; ++i) normalized[i] = (trace.samples[i] - offset) / scale;
    }
    const std::vector<double>& input = params.standardize ? normalized : trace.samples;

    const auto tiles = plan_tiles(n, trace.fs, params);
    auto solve_tile = [&](const Tile& t) {
        std::span<const double> y(input.data() + t.begin, t.end - t.begin);
        return decompose_segment(y, trace.fs, params);
    };

    std::vector<SegmentSolution> solved(tiles.size());
    if (threads <= 1 || tiles.size() == 1) {
        for (std::size_t i = 0; i < tiles.size(); ++i) solved[i] = solve_tile(tiles[i]);
    } else {
        for (std::size_t first = 0; first < tiles.size(); first += threads) {
            const std::size_t last = std::min(tiles.size(), first + threads);
            std::vector<std::future<SegmentSolution>> jobs;
            for (std::size_t i = first; i < last; ++i)
                jobs.push_back(std::async(std::launch::async, solve_tile, std::cref(tiles[i])));
            for (std::size_t i = first; i < last; ++i) solved[i] = jobs[i - first].get();
        }
    }

    DecomposedTrace out;
    out.fs = trace.fs;
    out.t0 = trace.t0;
    out.edl.resize(n);
    out.edr.resize(n);
    out.driver.resize(n);
    out.residual.resize(n);
    for (std::size_t k = 0; k < tiles.size(); ++k) {
        const auto& t = tiles[k];
        for (std::size_t i = t.keep_begin; i < t.keep_end; ++i) {
            out.edl[i] = offset + scale * solved[k].edl[i - t.begin];
            out.edr[i] = scale * solved[k].edr[i - t.begin];
            out.driver[i] = scale * solved[k].driver[i - t.begin];
        }
    }
    for (std::size_t i = 0; i < n; ++i)
        out.residual[i] = trace.samples[i] - out.edr[i] - out.edl[i];
    return out;
}

void write_decomposition(std::ostream& out, const DecomposedTrace& dec) {
    out << "t_s,edl,edr,driver,residual\n";
    for (std::size_t i = 0; i < dec.size(); ++i) {
        out << csv::format_double(dec.t0 + static_cast<double>(i) / dec.fs) << ','
            << csv::format_double(dec.edl[i]) << ',' << csv::format_double(dec.edr[i]) << ','
            << csv::format_double(dec.driver[i]) << ',' << csv::format_double(dec.residual[i])
            << '\n';
    }
}

}  // namespace edaflow
