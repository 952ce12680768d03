#pragma once
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "edaflow/qp.hpp"

namespace oracle {

using edaflow::DenseMatrix;

// Gram matrix of a random rank x n Gaussian matrix.
inline DenseMatrix random_psd(std::mt19937_64& rng, std::size_t n, std::size_t rank) {
    std::normal_distribution<double> g;
    DenseMatrix A(rank, n);
    for (std::size_t r = 0; r < rank; ++r)
        for (std::size_t c = 0; c < n; ++c) A(r, c) = g(rng);
    DenseMatrix H(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0;
            for (std::size_t r = 0; r < rank; ++r) s += A(r, i) * A(r, j);
            H(i, j) = s;
        }
    return H;
}

inline double objective(const DenseMatrix& H, const std::vector<double>& f, const std::vector<double>& x) {
    double v = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        v += f[i] * x[i];
        for (std::size_t j = 0; j < x.size(); ++j) v += 0.5 * x[i] * H(i, j) * x[j];
    }
    return v;
}

// Gaussian elimination with partial pivoting; false when singular.
inline bool solve_dense(std::vector<std::vector<double>> A, std::vector<double> b, std::vector<double>& x) {
    std::size_t n = b.size();
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t p = c;
        for (std::size_t r = c + 1; r < n; ++r)
            if (std::abs(A[r][c]) > std::abs(A[p][c])) p = r;
        if (std::abs(A[p][c]) < 1e-12) return false;
        std::swap(A[p], A[c]);
        std::swap(b[p], b[c]);
        for (std::size_t r = c + 1; r < n; ++r) {
            double m = A[r][c] / A[c][c];
            for (std::size_t k = c; k < n; ++k) A[r][k] -= m * A[c][k];
            b[r] -= m * b[c];
        }
    }
    x.assign(n, 0.0);
    for (std::size_t c = n; c-- > 0;) {
        double s = b[c];
        for (std::size_t k = c + 1; k < n; ++k) s -= A[c][k] * x[k];
        x[c] = s / A[c][c];
    }
    return true;
}

// Every zero pattern of the constrained coordinates: solve the stationarity
// system on the rest, keep feasible points, return the best.
inline std::vector<double> brute_force(const DenseMatrix& H, const std::vector<double>& f,
                                const std::vector<bool>& nonneg) {
    std::size_t n = f.size();
    std::vector<double> best;
    double best_val = std::numeric_limits<double>::infinity();
    for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
        std::vector<std::size_t> free;
        bool skip = false;
        for (std::size_t i = 0; i < n; ++i) {
            bool zero = mask >> i & 1;
            if (zero && !nonneg[i]) skip = true;
            if (!zero) free.push_back(i);
        }
        if (skip) continue;
        std::vector<std::vector<double>> A(free.size(), std::vector<double>(free.size()));
        std::vector<double> b(free.size()), xs;
        for (std::size_t r = 0; r < free.size(); ++r) {
            b[r] = -f[free[r]];
            for (std::size_t c = 0; c < free.size(); ++c) A[r][c] = H(free[r], free[c]);
        }
        if (!solve_dense(A, b, xs)) continue;
        std::vector<double> x(n, 0.0);
        bool feasible = true;
        for (std::size_t r = 0; r < free.size(); ++r) {
            x[free[r]] = xs[r];
            if (nonneg[free[r]] && xs[r] < -1e-12) feasible = false;
        }
        if (!feasible) continue;
        double v = objective(H, f, x);
        if (v < best_val) {
            best_val = v;
            best = x;
        }
    }
    return best;
}

}  // namespace oracle
