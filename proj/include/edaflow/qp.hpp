#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace edaflow {

// Row-major dense matrix.
class DenseMatrix {
public:
    DenseMatrix() = default;
    DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }

    double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

    std::span<const double> row(std::size_t r) const noexcept {
        return {data_.data() + r * cols_, cols_};
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

struct QpOptions {
    double tol = 1e-8;
    std::size_t max_iter = 50000;
};

struct QpSolution {
    std::vector<double> x;
    std::size_t iterations = 0;
    double kkt_residual = 0.0;
};

// Largest violation of the optimality conditions for
//   min 1/2 x'Hx + f'x  s.t.  x_i >= 0 where nonneg[i].
// Stationarity is measured relative to (1 + |f_i|); a result <= tol
// means x is optimal to tolerance tol.
double kkt_residual(const DenseMatrix& H, std::span<const double> f,
                    const std::vector<bool>& nonneg, std::span<const double> x, double tol);

// Primal active-set solver for a convex QP with non-negativity on the masked
// coordinates. Each subproblem is solved with an incrementally updated
// Cholesky factor of the passive block.
//
// Throws ParamError on dimension mismatch or an asymmetric H, and SolverError
// when negative curvature is found (H not PSD) or the iteration cap is hit
// before the KKT conditions hold.
QpSolution solve_nonneg_qp(const DenseMatrix& H, std::span<const double> f,
                           const std::vector<bool>& nonneg, const QpOptions& options = {});

}  // namespace edaflow
