#include "edaflow/qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "edaflow/errors.hpp"

namespace edaflow {

namespace {

// Cholesky factor of H restricted to an ordered passive index set.
class PassiveFactor {
public:
    PassiveFactor(const DenseMatrix& H, double scale) : H_(H), scale_(scale) {}

    const std::vector<std::size_t>& indices() const noexcept { return idx_; }
    std::size_t size() const noexcept { return idx_.size(); }

    void add(std::size_t j) {
        const std::size_t p = idx_.size();
        std::vector<double> row(p + 1, 0.0);
        for (std::size_t r = 0; r < p; ++r) {
            double s = H_(idx_[r], j);
            for (std::size_t c = 0; c < r; ++c) s -= L_[r][c] * row[c];
            row[r] = s / L_[r][r];
        }
        double d2 = H_(j, j);
        for (std::size_t c = 0; c < p; ++c) d2 -= row[c] * row[c];
        if (d2 < -1e-10 * scale_)
            throw SolverError("QP matrix is not positive semidefinite (negative curvature " +
                                  std::to_string(d2) + ")",
                              std::abs(d2));
        row[p] = std::sqrt(std::max(d2, 1e-14 * scale_));
        L_.push_back(std::move(row));
        idx_.push_back(j);
    }

    // Drops position k and restores the factor with a rank-one update of the
    // trailing block.
    void remove(std::size_t k) {
        const std::size_t p = idx_.size();
        std::vector<double> v;
        v.reserve(p - k - 1);
        for (std::size_t r = k + 1; r < p; ++r) {
            v.push_back(L_[r][k]);
            L_[r].erase(L_[r].begin() + static_cast<std::ptrdiff_t>(k));
        }
        L_.erase(L_.begin() + static_cast<std::ptrdiff_t>(k));
        idx_.erase(idx_.begin() + static_cast<std::ptrdiff_t>(k));
        const std::size_t m = v.size();
        for (std::size_t a = 0; a < m; ++a) {
            auto& La = L_[k + a];
            const double lkk = La[k + a];
            const double r = std::hypot(lkk, v[a]);
            const double c = r / lkk;
            const double s = v[a] / lkk;
            La[k + a] = r;
            for (std::size_t b = a + 1; b < m; ++b) {
                auto& Lb = L_[k + b];
                Lb[k + a] = (Lb[k + a] + s * v[b]) / c;
                v[b] = c * v[b] - s * Lb[k + a];
            }
        }
    }

    // Solves H_PP z = rhs.
    std::vector<double> solve(std::vector<double> rhs) const {
        const std::size_t p = idx_.size();
        for (std::size_t r = 0; r < p; ++r) {
            double s = rhs[r];
            for (std::size_t c = 0; c < r; ++c) s -= L_[r][c] * rhs[c];
            rhs[r] = s / L_[r][r];
        }
        for (std::size_t r = p; r-- > 0;) {
            double s = rhs[r];
            for (std::size_t c = r + 1; c < p; ++c) s -= L_[c][r] * rhs[c];
            rhs[r] = s / L_[r][r];
        }
        return rhs;
    }

private:
    const DenseMatrix& H_;
    double scale_;
    std::vector<std::size_t> idx_;
    std::vector<std::vector<double>> L_;
};

std::vector<double> gradient(const DenseMatrix& H, std::span<const double> f,
                             std::span<const double> x) {
    const std::size_t n = f.size();
    std::vector<double> g(f.begin(), f.end());
    for (std::size_t k = 0; k < n; ++k) {
        if (x[k] == 0.0) continue;
        const auto row = H.row(k);  // symmetric: row k == column k
        for (std::size_t i = 0; i < n; ++i) g[i] += row[i] * x[k];
    }
    return g;
}

}  // namespace

double kkt_residual(const DenseMatrix& H, std::span<const double> f,
                    const std::vector<bool>& nonneg, std::span<const double> x, double tol) {
    const auto g = gradient(H, f, x);
    double worst = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double stationarity = std::abs(g[i]) / (1.0 + std::abs(f[i]));
        if (!nonneg[i]) {
            worst = std::max(worst, stationarity);
            continue;
        }
        worst = std::max(worst, -x[i]);
        if (x[i] == 0.0)
            worst = std::max(worst, -g[i]);
        else if (x[i] > tol)
            worst = std::max(worst, stationarity);
    }
    return worst;
}

QpSolution solve_nonneg_qp(const DenseMatrix& H, std::span<const double> f,
                           const std::vector<bool>& nonneg, const QpOptions& options) {
    const std::size_t n = f.size();
    if (H.rows() != n || H.cols() != n || nonneg.size() != n)
        throw ParamError("QP dimensions disagree");
    double scale = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (H(i, i) < 0.0)
            throw SolverError("QP matrix is not positive semidefinite (negative diagonal)",
                              -H(i, i));
        scale = std::max(scale, H(i, i));
        for (std::size_t j = 0; j < i; ++j)
            if (std::abs(H(i, j) - H(j, i)) > 1e-12 * (1.0 + std::abs(H(i, j))))
                throw ParamError("QP matrix is not symmetric");
    }

    QpSolution sol;
    sol.x.assign(n, 0.0);
    auto& x = sol.x;
    std::vector<bool> passive(n, false);
    std::vector<bool> blocked(n, false);
    PassiveFactor factor(H, scale);

    auto passive_rhs = [&] {
        std::vector<double> rhs;
        rhs.reserve(factor.size());
        for (auto i : factor.indices()) rhs.push_back(-f[i]);
        return rhs;
    };

    for (std::size_t i = 0; i < n; ++i) {
        if (!nonneg[i]) {
            factor.add(i);
            passive[i] = true;
        }
    }
    if (factor.size() > 0) {
        const auto z = factor.solve(passive_rhs());
        for (std::size_t k = 0; k < z.size(); ++k) x[factor.indices()[k]] = z[k];
    }

    auto bump = [&] {
        if (++sol.iterations > options.max_iter)
            throw SolverError("QP iteration cap reached (residual " +
                                  std::to_string(kkt_residual(H, f, nonneg, x, options.tol)) +
                                  ")",
                              kkt_residual(H, f, nonneg, x, options.tol));
    };

    while (true) {
        bump();
        const auto g = gradient(H, f, x);
        std::size_t enter = n;
        double most_negative = -options.tol;
        for (std::size_t i = 0; i < n; ++i) {
            if (passive[i] || blocked[i]) continue;
            if (g[i] < most_negative) {
                most_negative = g[i];
                enter = i;
            }
        }
        if (enter == n) break;

        factor.add(enter);
        passive[enter] = true;

        while (true) {
            const auto z = factor.solve(passive_rhs());
            const auto& idx = factor.indices();
            double step = std::numeric_limits<double>::infinity();
            std::size_t limiting = idx.size();
            for (std::size_t k = 0; k < idx.size(); ++k) {
                const std::size_t i = idx[k];
                if (!nonneg[i] || z[k] > 0.0) continue;
                const double gap = x[i] - z[k];
                const double t = gap > 0.0 ? x[i] / gap : 0.0;
                if (t < step) {
                    step = t;
                    limiting = k;
                }
            }
            if (limiting == idx.size()) {
                for (std::size_t k = 0; k < idx.size(); ++k) x[idx[k]] = z[k];
                std::fill(blocked.begin(), blocked.end(), false);
                break;
            }

            for (std::size_t k = 0; k < idx.size(); ++k) x[idx[k]] += step * (z[k] - x[idx[k]]);
            const std::size_t leaving = idx[limiting];
            x[leaving] = 0.0;
            // A zero-length step means the entering variable cannot move:
            // keep it out until the iterate changes.
            if (step == 0.0) blocked[leaving] = true;
            else std::fill(blocked.begin(), blocked.end(), false);

            std::vector<std::size_t> drop{limiting};
            for (std::size_t k = 0; k < idx.size(); ++k) {
                if (k != limiting && nonneg[idx[k]] && x[idx[k]] <= 0.0) {
                    x[idx[k]] = 0.0;
                    drop.push_back(k);
                }
            }
            std::sort(drop.rbegin(), drop.rend());
            for (auto k : drop) {
                passive[factor.indices()[k]] = false;
                factor.remove(k);
            }
            bump();
        }
    }

    sol.kkt_residual = kkt_residual(H, f, nonneg, x, options.tol);
    // Iterative refinement on the passive block for ill-conditioned subproblems.
    for (int round = 0; round < 3 && sol.kkt_residual > options.tol && factor.size() > 0; ++round) {
        const auto g = gradient(H, f, x);
        std::vector<double> rhs;
        for (auto i : factor.indices()) rhs.push_back(g[i]);
        const auto delta = factor.solve(std::move(rhs));
        std::vector<double> trial = x;
        bool feasible = true;
        for (std::size_t k = 0; k < delta.size(); ++k) {
            const std::size_t i = factor.indices()[k];
            trial[i] -= delta[k];
            if (nonneg[i] && trial[i] < 0.0) feasible = false;
        }
        if (!feasible) break;
        const double r = kkt_residual(H, f, nonneg, trial, options.tol);
        if (r >= sol.kkt_residual) break;
        x = std::move(trial);
        sol.kkt_residual = r;
    }
    if (sol.kkt_residual > options.tol)
        throw SolverError("QP finished without meeting KKT tolerance (residual " +
                              std::to_string(sol.kkt_residual) + ")",
                          sol.kkt_residual);
    return sol;
}

}  // namespace edaflow
