#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "doctest.h"
#include "edaflow/errors.hpp"
#include "edaflow/features.hpp"

using namespace edaflow;

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<double> random_window(std::mt19937_64& rng, std::size_t n) {
    std::normal_distribution<double> g;
    std::vector<double> x(n);
    for (auto& v : x) v = g(rng);
    return x;
}

double centered_mean_square(const std::vector<double>& x) {
    double m = 0;
    for (double v : x) m += v;
    m /= static_cast<double>(x.size());
    double s = 0;
    for (double v : x) s += (v - m) * (v - m);
    return s / static_cast<double>(x.size());
}

DecomposedTrace flat_decomposition(double seconds, double fs = 4.0) {
    DecomposedTrace d;
    auto n = static_cast<std::size_t>(seconds * fs);
    d.fs = fs;
    for (std::size_t i = 0; i < n; ++i) {
        d.edr.push_back(0.1 * std::sin(0.3 * static_cast<double>(i)) + 0.2);
        d.edl.push_back(2.0 + 0.001 * static_cast<double>(i));
    }
    d.driver.assign(n, 0.0);
    d.residual.assign(n, 0.0);
    return d;
}

}  // namespace

TEST_CASE("window counts") {
    CHECK(segment_windows(2400, 4.0, {}).size() == 591);
    auto one = segment_windows(40, 4.0, {});
    REQUIRE(one.size() == 1);
    CHECK(one[0] == SampleRange{0, 40});
    CHECK(segment_windows(39, 4.0, {}).empty());
    auto w = segment_windows(2400, 4.0, {});
    CHECK(w[1] == SampleRange{4, 44});
    CHECK(w.back() == SampleRange{2360, 2400});
}

TEST_CASE("window spec validation") {
    CHECK_THROWS_AS(segment_windows(100, 4.0, {1.0, 1.0}), ParamError);
    CHECK_THROWS_AS(segment_windows(100, 4.0, {10.0, 0.0}), ParamError);
    CHECK_THROWS_AS(segment_windows(100, 4.0, {10.1, 1.0}), ParamError);
}

TEST_CASE("constant windows") {
    std::vector<double> edr(40, 0.0), edl(40, 2.5);
    auto f = time_domain_features(edr, edl, 4.0);
    CHECK(f.edr_std == 0.0);
    CHECK(f.edr_median == 0.0);
    CHECK(f.edr_integral == 0.0);
    CHECK(f.edr_nap == 0.0);
    CHECK(f.edr_nrms == 0.0);
    CHECK(f.edl_mean == 2.5);
    CHECK(f.edl_std == 0.0);
    CHECK(f.edl_median == 2.5);
}

TEST_CASE("ramp integral") {
    std::vector<double> edr(40), edl(40, 1.0);
    for (int i = 0; i < 40; ++i) edr[i] = i / 39.0;
    auto f = time_domain_features(edr, edl, 4.0);
    CHECK(f.edr_integral == doctest::Approx(4.875).epsilon(1e-12));
    CHECK(f.edr_median == doctest::Approx(0.5));
}

TEST_CASE("alternating window") {
    std::vector<double> edr(40), edl(40, 1.0);
    for (int i = 0; i < 40; ++i) edr[i] = i % 2;
    auto f = time_domain_features(edr, edl, 4.0);
    CHECK(f.edr_nap == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(f.edr_nrms == doctest::Approx(std::sqrt(0.5)).epsilon(1e-12));
    CHECK(f.edr_std == doctest::Approx(0.5));
}

TEST_CASE("median and std conventions") {
    std::vector<double> even{4, 1, 3, 2};
    CHECK(median(even) == 2.5);
    std::vector<double> odd{5, 1, 3};
    CHECK(median(odd) == 3.0);
    std::vector<double> x{1, 3};
    CHECK(population_std(x) == 1.0);
}

TEST_CASE("exact-bin sine band power") {
    std::vector<double> x(40);
    for (int i = 0; i < 40; ++i) x[i] = std::sin(2 * kPi * 0.2 * i / 4.0);
    CHECK(std::abs(band_power(x, 4.0, 0.2, 0.3) - 0.5) <= 1e-9);
    CHECK(std::abs(band_power(x, 4.0, 0.1, 0.2)) <= 1e-12);
    CHECK(std::abs(band_power(x, 4.0, 0.3, 0.4)) <= 1e-12);
    std::vector<double> z(40, 0.0);
    for (auto [lo, hi] : kBands) CHECK(band_power(z, 4.0, lo, hi) == 0.0);
}

TEST_CASE("band outside the spectrum is rejected") {
    std::vector<double> x(40, 1.0);
    CHECK_THROWS_AS(band_power(x, 4.0, 0.0, 0.1), ParamError);
    CHECK_THROWS_AS(band_power(x, 4.0, 1.5, 2.5), ParamError);
}

TEST_CASE("band power partial sums respect Parseval") {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 1000; ++trial) {
        auto x = random_window(rng, 40);
        double sum = 0;
        for (auto [lo, hi] : kBands) {
            double p = band_power(x, 4.0, lo, hi);
            CHECK(p >= 0.0);
            sum += p;
        }
        CHECK(sum <= centered_mean_square(x) + 1e-12);
    }
}

TEST_CASE("full-band power equals the centered mean square for odd lengths") {
    std::mt19937_64 rng(19);
    auto x = random_window(rng, 41);
    CHECK(band_power(x, 4.0, 1e-9, 2.0) == doctest::Approx(centered_mean_square(x)).epsilon(1e-10));
}

TEST_CASE("normalised features are affine invariant and powers scale quadratically") {
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 100; ++trial) {
        auto x = random_window(rng, 40);
        std::vector<double> y(40), edl(40, 1.0);
        double a = 0.1 + trial * 0.37, b = trial - 50.0;
        for (int i = 0; i < 40; ++i) y[i] = a * x[i] + b;
        auto fx = time_domain_features(x, edl, 4.0);
        auto fy = time_domain_features(y, edl, 4.0);
        CHECK(fy.edr_nap == doctest::Approx(fx.edr_nap).epsilon(1e-9));
        CHECK(fy.edr_nrms == doctest::Approx(fx.edr_nrms).epsilon(1e-9));
        CHECK(fx.edr_nap >= 0.0);
        CHECK(fx.edr_nap <= 1.0);
        CHECK(fx.edr_std >= 0.0);
        auto [lo, hi] = std::minmax_element(x.begin(), x.end());
        CHECK(fx.edr_median >= *lo);
        CHECK(fx.edr_median <= *hi);
        for (auto [blo, bhi] : kBands)
            CHECK(band_power(y, 4.0, blo, bhi) ==
                  doctest::Approx(a * a * band_power(x, 4.0, blo, bhi)).epsilon(1e-9));
    }
}

TEST_CASE("window features combine both parts") {
    std::mt19937_64 rng(29);
    auto edr = random_window(rng, 40);
    auto edl = random_window(rng, 40);
    auto f = window_features(edr, edl, 4.0);
    auto t = time_domain_features(edr, edl, 4.0);
    CHECK(f[0] == t.edr_std);
    CHECK(f[2] == t.edr_integral);
    CHECK(f[5] == t.edl_mean);
    CHECK(f[7] == t.edl_median);
    CHECK(f[8] == band_power(edr, 4.0, 0.1, 0.2));
    CHECK(f[10] == band_power(edr, 4.0, 0.3, 0.4));
}

TEST_CASE("feature matrix row counts") {
    auto d = flat_decomposition(60);
    LabelTrack high{{{0, 60, RiskLabel::High}}};
    auto m = build_feature_matrix(d, high, {});
    CHECK(m.size() == 51);
    CHECK(m.count(RiskLabel::High) == 51);
    CHECK(build_feature_matrix(d, LabelTrack{}, {}).size() == 0);
    LabelTrack low{{{0, 30, RiskLabel::Low}}};
    auto l = build_feature_matrix(d, low, {});
    CHECK(l.size() == 21);
    CHECK(l.rows.back().window_start_s == 20.0);
}

TEST_CASE("rows match their windows regardless of position") {
    auto d = flat_decomposition(60);
    LabelTrack high{{{0, 60, RiskLabel::High}}};
    auto m = build_feature_matrix(d, high, {});
    for (std::size_t k = 0; k < m.size(); k += 7) {
        std::size_t b = k * 4;
        std::span<const double> edr(d.edr.data() + b, 40), edl(d.edl.data() + b, 40);
        CHECK(m.rows[k].values == window_features(edr, edl, 4.0));
        CHECK(m.rows[k].window_start_s == static_cast<double>(k));
    }
}

TEST_CASE("feature csv round trip") {
    auto d = flat_decomposition(30);
    LabelTrack t{{{0, 15, RiskLabel::Low}, {15, 30, RiskLabel::High}}};
    auto m = build_feature_matrix(d, t, {});
    std::ostringstream out;
    write_feature_matrix(out, m);
    CHECK(out.str().rfind("window_start_s,label,edr_std,edr_median", 0) == 0);
    std::istringstream in(out.str());
    auto back = read_feature_matrix(in);
    REQUIRE(back.size() == m.size());
    for (std::size_t i = 0; i < m.size(); ++i) {
        CHECK(back.rows[i].values == m.rows[i].values);
        CHECK(back.rows[i].label == m.rows[i].label);
        CHECK(back.rows[i].window_start_s == m.rows[i].window_start_s);
    }
    std::istringstream bad("window_start_s,label\n0,high\n");
    CHECK_THROWS_AS(read_feature_matrix(bad), DataError);
}
