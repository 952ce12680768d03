#include "edaflow/classify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "edaflow/errors.hpp"

namespace edaflow {

namespace {

double sign_of(RiskLabel label) { return label == RiskLabel::High ? 1.0 : -1.0; }

double squared_distance(const Features& a, const Features& b,
                        const std::vector<std::size_t>& features) {
    double d = 0.0;
    for (auto f : features) {
        const double t = a[f] - b[f];
        d += t * t;
    }
    return d;
}

std::vector<std::size_t> all_features() {
    std::vector<std::size_t> idx(kFeatureCount);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    return idx;
}

KnnModel fit_knn(const std::vector<Features>& X, const std::vector<RiskLabel>& y,
                 const KnnParams& params, std::vector<std::size_t> features) {
    return {params.k, std::move(features), X, y};
}

// ---------------------------------------------------------------- CART

struct TreeBuilder {
    const std::vector<Features>& X;
    const std::vector<RiskLabel>& y;
    const TreeParams& params;
    std::vector<TreeNode> nodes;

    static double gini_score(double n_high, double n_low) {
        const double n = n_high + n_low;
        return n - (n_high * n_high + n_low * n_low) / n;  // n * gini
    }

    std::uint32_t build(std::vector<std::size_t>& idx, std::size_t depth) {
        const auto id = static_cast<std::uint32_t>(nodes.size());
        nodes.emplace_back();

        double n_high = 0.0;
        for (auto i : idx) n_high += y[i] == RiskLabel::High ? 1.0 : 0.0;
        const double n = static_cast<double>(idx.size());
        const double n_low = n - n_high;
        nodes[id].label = n_high >= n_low ? RiskLabel::High : RiskLabel::Low;

        if (depth >= params.max_depth || n_high == 0.0 || n_low == 0.0 ||
            idx.size() < 2 * params.min_leaf)
            return id;

        const double parent = gini_score(n_high, n_low);
        double best = parent;
        int best_feature = -1;
        double best_threshold = 0.0;
        std::vector<std::size_t> order = idx;
        for (std::size_t f = 0; f < kFeatureCount; ++f) {
            std::stable_sort(order.begin(), order.end(),
                             [&](std::size_t a, std::size_t b) { return X[a][f] < X[b][f]; });
            double left_high = 0.0;
            for (std::size_t pos = 0; pos + 1 < order.size(); ++pos) {
                left_high += y[order[pos]] == RiskLabel::High ? 1.0 : 0.0;
                const double lo = X[order[pos]][f];
                const double hi = X[order[pos + 1]][f];
                if (!(lo < hi)) continue;
                const std::size_t n_left = pos + 1;
                const std::size_t n_right = order.size() - n_left;
                if (n_left < params.min_leaf || n_right < params.min_leaf) continue;
                const double nl = static_cast<double>(n_left);
                const double score = gini_score(left_high, nl - left_high) +
                                     gini_score(n_high - left_high,
                                                static_cast<double>(n_right) - (n_high - left_high));
                if (score < best) {
                    best = score;
                    best_feature = static_cast<int>(f);
                    double mid = lo + 0.5 * (hi - lo);
                    if (!(mid < hi)) mid = lo;
                    best_threshold = mid;
                }
            }
        }
        if (best_feature < 0 || !(best < parent - 1e-12)) return id;

        std::vector<std::size_t> left;
        std::vector<std::size_t> right;
        for (auto i : idx)
            (X[i][static_cast<std::size_t>(best_feature)] <= best_threshold ? left : right).push_back(i);
        idx.clear();
        idx.shrink_to_fit();

        const auto l = build(left, depth + 1);
        const auto r = build(right, depth + 1);
        nodes[id].feature = best_feature;
        nodes[id].threshold = best_threshold;
        nodes[id].left = l;
        nodes[id].right = r;
        return id;
    }
};

// ---------------------------------------------------------------- logistic

double log1p_exp(double t) {
    return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
}

struct LogisticObjective {
    const std::vector<Features>& X;
    const std::vector<double>& s;  // +1 High, -1 Low
    double lambda;

    // Returns loss; writes gradient (weights then bias) when grad is non-null.
    double eval(const std::vector<double>& theta, std::vector<double>* grad) const {
        const std::size_t d = kFeatureCount;
        const double n = static_cast<double>(X.size());
        double loss = 0.0;
        if (grad) grad->assign(d + 1, 0.0);
        for (std::size_t i = 0; i < X.size(); ++i) {
            double z = theta[d];
            for (std::size_t j = 0; j < d; ++j) z += theta[j] * X[i][j];
            const double m = s[i] * z;
            loss += log1p_exp(-m);
            if (grad) {
                // d/dz log(1+exp(-s z)) = -s * sigmoid(-s z)
                const double g = -s[i] / (1.0 + std::exp(m));
                for (std::size_t j = 0; j < d; ++j) (*grad)[j] += g * X[i][j];
                (*grad)[d] += g;
            }
        }
        loss /= n;
        double reg = 0.0;
        for (std::size_t j = 0; j < d; ++j) reg += theta[j] * theta[j];
        loss += 0.5 * lambda * reg;
        if (grad) {
            for (std::size_t j = 0; j <= d; ++j) (*grad)[j] /= n;
            for (std::size_t j = 0; j < d; ++j) (*grad)[j] += lambda * theta[j];
        }
        return loss;
    }
};

// ---------------------------------------------------------------- SVM

double rbf(const Features& a, const Features& b, double gamma) {
    double d = 0.0;
    for (std::size_t j = 0; j < kFeatureCount; ++j) {
        const double t = a[j] - b[j];
        d += t * t;
    }
    return std::exp(-gamma * d);
}

void require_labels(const FeatureMatrix& data, std::vector<Features>& X,
                    std::vector<RiskLabel>& y) {
    X.reserve(data.size());
    y.reserve(data.size());
    for (std::size_t i = 0; i < data.rows.size(); ++i) {
        const auto& row = data.rows[i];
        if (!row.label) throw DataError("training row " + std::to_string(i + 1) + " is unlabeled");
        for (double v : row.values)
            if (!std::isfinite(v))
                throw DataError("training row " + std::to_string(i + 1) + " has a non-finite value");
        X.push_back(row.values);
        y.push_back(*row.label);
    }
}

}  // namespace

std::string_view to_string(Algo algo) noexcept {
    switch (algo) {
        case Algo::DT: return "dt";
        case Algo::LR: return "lr";
        case Algo::GSVM: return "gsvm";
        case Algo::KNN: return "knn";
        case Algo::BT: return "bt";
        case Algo::SKNN: return "sknn";
    }
    return "?";
}

std::optional<Algo> parse_algo(std::string_view text) noexcept {
    for (auto a : kAllAlgos)
        if (to_string(a) == text) return a;
    return std::nullopt;
}

void AlgoSpec::validate() const {
    if (knn.k < 1) throw ParamError("knn k must be >= 1");
    if (tree.max_depth < 1) throw ParamError("tree max depth must be >= 1");
    if (tree.min_leaf < 1) throw ParamError("tree min leaf must be >= 1");
    if (!(lr.lambda >= 0.0)) throw ParamError("logistic lambda must be >= 0");
    if (!(lr.grad_tol > 0.0) || lr.max_iter < 1) throw ParamError("bad logistic stopping rule");
    if (!(svm.C > 0.0)) throw ParamError("svm C must be > 0");
    if (!(svm.gamma >= 0.0)) throw ParamError("svm gamma must be >= 0");
    if (!(svm.tol > 0.0)) throw ParamError("svm tolerance must be > 0");
    if (ensemble_size < 1) throw ParamError("ensemble size must be >= 1");
    if (subspace_dim < 1 || subspace_dim > kFeatureCount)
        throw ParamError("subspace dimension must be in [1, 11]");
}

// ---------------------------------------------------------------- standardizer

Standardizer Standardizer::fit(const std::vector<Features>& rows) {
    Standardizer s;
    s.mean.assign(kFeatureCount, 0.0);
    s.scale.assign(kFeatureCount, 0.0);
    if (rows.empty()) return s;
    const double n = static_cast<double>(rows.size());
    for (const auto& r : rows)
        for (std::size_t j = 0; j < kFeatureCount; ++j) s.mean[j] += r[j];
    for (auto& m : s.mean) m /= n;
    for (const auto& r : rows)
        for (std::size_t j = 0; j < kFeatureCount; ++j)
            s.scale[j] += (r[j] - s.mean[j]) * (r[j] - s.mean[j]);
    for (std::size_t j = 0; j < kFeatureCount; ++j) {
        const double sd = std::sqrt(s.scale[j] / n);
        // Spread below rounding noise of the mean counts as constant.
        s.scale[j] = sd > 1e-12 * std::max(1.0, std::abs(s.mean[j])) ? sd : 0.0;
    }
    return s;
}

Features Standardizer::transform(std::span<const double> x) const {
    Features z{};
    for (std::size_t j = 0; j < kFeatureCount; ++j)
        z[j] = scale[j] > 0.0 ? (x[j] - mean[j]) / scale[j] : 0.0;
    return z;
}

bool Standardizer::has_constant_feature() const noexcept {
    return std::any_of(scale.begin(), scale.end(), [](double s) { return s == 0.0; });
}

// ---------------------------------------------------------------- predictors

RiskLabel majority_vote(std::span<const RiskLabel> votes) {
    std::size_t high = 0;
    for (auto v : votes) high += v == RiskLabel::High ? 1 : 0;
    return 2 * high >= votes.size() ? RiskLabel::High : RiskLabel::Low;
}

RiskLabel predict_knn(const KnnModel& model, const Features& z) {
    const std::size_t n = model.points.size();
    if (n == 0) throw DataError("KNN model has no training points");
    std::vector<std::pair<double, std::size_t>> dist(n);
    for (std::size_t i = 0; i < n; ++i)
        dist[i] = {squared_distance(model.points[i], z, model.features), i};
    const std::size_t k = std::min(model.k, n);
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
    std::size_t high = 0;
    for (std::size_t i = 0; i < k; ++i)
        high += model.labels[dist[i].second] == RiskLabel::High ? 1 : 0;
    return 2 * high >= k ? RiskLabel::High : RiskLabel::Low;
}

RiskLabel predict_tree(const TreeModel& model, const Features& z) {
    std::uint32_t at = 0;
    while (model.nodes[at].feature >= 0) {
        const auto& node = model.nodes[at];
        at = z[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left : node.right;
    }
    return model.nodes[at].label;
}

double logistic_probability(const LogisticModel& model, const Features& z) {
    double t = model.bias;
    for (std::size_t j = 0; j < kFeatureCount; ++j) t += model.weights[j] * z[j];
    return 1.0 / (1.0 + std::exp(-t));
}

double svm_decision(const SvmModel& model, const Features& z) {
    double f = -model.rho;
    for (std::size_t i = 0; i < model.support.size(); ++i)
        f += model.coef[i] * rbf(model.support[i], z, model.gamma);
    return f;
}

// ---------------------------------------------------------------- fitting

TreeModel fit_tree(const std::vector<Features>& X, const std::vector<RiskLabel>& y,
                   const TreeParams& params) {
    if (X.empty()) throw DataError("cannot fit a tree on zero rows");
    TreeBuilder b{X, y, params, {}};
    std::vector<std::size_t> idx(X.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    b.build(idx, 0);
    return {std::move(b.nodes)};
}

LogisticFit fit_logistic(const std::vector<Features>& X, const std::vector<RiskLabel>& y,
                         const LogisticParams& params) {
    std::vector<double> s(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) s[i] = sign_of(y[i]);
    LogisticObjective obj{X, s, params.lambda};

    const std::size_t d = kFeatureCount;
    std::vector<double> theta(d + 1, 0.0);
    std::vector<double> grad;
    std::vector<double> trial(d + 1);
    double loss = obj.eval(theta, &grad);
    LogisticFit fit;
    double step = 1.0;
    auto norm = [](const std::vector<double>& g) {
        double t = 0.0;
        for (double v : g) t += v * v;
        return std::sqrt(t);
    };
    for (std::size_t it = 0; it < params.max_iter; ++it) {
        const double gn = norm(grad);
        if (gn < params.grad_tol) break;
        fit.loss_history.push_back(loss);
        // Armijo backtracking from twice the last accepted step.
        step = std::min(step * 2.0, 1e6);
        double next = loss;
        bool accepted = false;
        while (step > 1e-16) {
            for (std::size_t j = 0; j <= d; ++j) trial[j] = theta[j] - step * grad[j];
            next = obj.eval(trial, nullptr);
            if (next <= loss - 1e-4 * step * gn * gn) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break;
        theta = trial;
        loss = obj.eval(theta, &grad);
    }
    fit.loss_history.push_back(loss);
    fit.grad_norm = norm(grad);
    fit.model.weights.assign(theta.begin(), theta.begin() + static_cast<std::ptrdiff_t>(d));
    fit.model.bias = theta[d];
    return fit;
}

SvmFit fit_svm(const std::vector<Features>& X, const std::vector<RiskLabel>& labels,
               const SvmParams& params) {
    const std::size_t n = X.size();
    if (n < 2) throw DataError("SVM needs at least 2 rows");

    double gamma = params.gamma;
    if (gamma == 0.0) {
        double sum = 0.0;
        double sq = 0.0;
        for (const auto& r : X)
            for (double v : r) {
                sum += v;
                sq += v * v;
            }
        const double cnt = static_cast<double>(n * kFeatureCount);
        const double var = sq / cnt - (sum / cnt) * (sum / cnt);
        gamma = var > 1e-12 ? 1.0 / (static_cast<double>(kFeatureCount) * var)
                            : 1.0 / static_cast<double>(kFeatureCount);
    }

    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = sign_of(labels[i]);
    std::vector<double> K(n * n);
    for (std::size_t i = 0; i < n; ++i) {
        K[i * n + i] = 1.0;
        for (std::size_t j = 0; j < i; ++j) K[i * n + j] = K[j * n + i] = rbf(X[i], X[j], gamma);
    }
    auto Q = [&](std::size_t i, std::size_t j) { return y[i] * y[j] * K[i * n + j]; };

    const double C = params.C;
    constexpr double kTau = 1e-12;
    std::vector<double> alpha(n, 0.0);
    std::vector<double> G(n, -1.0);
    auto upper = [&](std::size_t t) { return alpha[t] >= C; };
    auto lower = [&](std::size_t t) { return alpha[t] <= 0.0; };

    SvmFit fit;
    // Sequential minimal optimization with second-order working-set selection.
    while (true) {
        if (fit.iterations >= params.max_iter)
            throw SolverError("SVM iteration cap reached", 0.0);
        double gmax = -std::numeric_limits<double>::infinity();
        double gmax2 = -std::numeric_limits<double>::infinity();
        std::size_t i = n;
        for (std::size_t t = 0; t < n; ++t) {
            if (y[t] > 0) {
                if (!upper(t) && -G[t] >= gmax) {
                    gmax = -G[t];
                    i = t;
                }
            } else if (!lower(t) && G[t] >= gmax) {
                gmax = G[t];
                i = t;
            }
        }
        if (i == n) break;
        std::size_t j = n;
        double obj_min = std::numeric_limits<double>::infinity();
        for (std::size_t t = 0; t < n; ++t) {
            if (y[t] > 0) {
                if (lower(t)) continue;
                const double diff = gmax + G[t];
                gmax2 = std::max(gmax2, G[t]);
                if (diff > 0) {
                    double quad = 2.0 - 2.0 * y[i] * Q(i, t);
                    if (quad <= 0) quad = kTau;
                    const double obj = -diff * diff / quad;
                    if (obj <= obj_min) {
                        j = t;
                        obj_min = obj;
                    }
                }
            } else {
                if (upper(t)) continue;
                const double diff = gmax - G[t];
                gmax2 = std::max(gmax2, -G[t]);
                if (diff > 0) {
                    double quad = 2.0 + 2.0 * y[i] * Q(i, t);
                    if (quad <= 0) quad = kTau;
                    const double obj = -diff * diff / quad;
                    if (obj <= obj_min) {
                        j = t;
                        obj_min = obj;
                    }
                }
            }
        }
        if (gmax + gmax2 < params.tol || j == n) break;
        ++fit.iterations;

        const double old_i = alpha[i];
        const double old_j = alpha[j];
        double ai = old_i;
        double aj = old_j;
        if (y[i] != y[j]) {
            double quad = 2.0 + 2.0 * Q(i, j);
            if (quad <= 0) quad = kTau;
            const double delta = (-G[i] - G[j]) / quad;
            const double diff = ai - aj;
            ai += delta;
            aj += delta;
            if (diff > 0) {
                if (aj < 0) {
                    aj = 0;
                    ai = diff;
                }
            } else if (ai < 0) {
                ai = 0;
                aj = -diff;
            }
            if (diff > 0) {
                if (ai > C) {
                    ai = C;
                    aj = C - diff;
                }
            } else if (aj > C) {
                aj = C;
                ai = C + diff;
            }
        } else {
            double quad = 2.0 - 2.0 * Q(i, j);
            if (quad <= 0) quad = kTau;
            const double delta = (G[i] - G[j]) / quad;
            const double sum = ai + aj;
            ai -= delta;
            aj += delta;
            if (sum > C) {
                if (ai > C) {
                    ai = C;
                    aj = sum - C;
                }
            } else if (aj < 0) {
                aj = 0;
                ai = sum;
            }
            if (sum > C) {
                if (aj > C) {
                    aj = C;
                    ai = sum - C;
                }
            } else if (ai < 0) {
                ai = 0;
                aj = sum;
            }
        }
        alpha[i] = ai;
        alpha[j] = aj;
        const double dai = ai - old_i;
        const double daj = aj - old_j;
        for (std::size_t t = 0; t < n; ++t) G[t] += Q(i, t) * dai + Q(j, t) * daj;
    }

    // Offset: average over free vectors, else midpoint of the feasible range.
    double ub = std::numeric_limits<double>::infinity();
    double lb = -std::numeric_limits<double>::infinity();
    double sum_free = 0.0;
    std::size_t n_free = 0;
    for (std::size_t t = 0; t < n; ++t) {
        const double yg = y[t] * G[t];
        if (upper(t)) {
            if (y[t] < 0) ub = std::min(ub, yg);
            else lb = std::max(lb, yg);
        } else if (lower(t)) {
            if (y[t] > 0) ub = std::min(ub, yg);
            else lb = std::max(lb, yg);
        } else {
            ++n_free;
            sum_free += yg;
        }
    }
    fit.model.rho = n_free > 0 ? sum_free / static_cast<double>(n_free) : 0.5 * (ub + lb);
    fit.model.gamma = gamma;
    for (std::size_t t = 0; t < n; ++t) {
        if (alpha[t] > 0.0) {
            fit.model.support.push_back(X[t]);
            fit.model.coef.push_back(alpha[t] * y[t]);
        }
    }
    fit.alpha = std::move(alpha);
    return fit;
}

double svm_kkt_violation(const SvmFit& fit, const std::vector<Features>& X,
                         const std::vector<RiskLabel>& y, double C) {
    double worst = 0.0;
    for (std::size_t i = 0; i < X.size(); ++i) {
        const double margin = sign_of(y[i]) * svm_decision(fit.model, X[i]);
        const double a = fit.alpha[i];
        if (a <= 0.0) worst = std::max(worst, 1.0 - margin);
        else if (a >= C) worst = std::max(worst, margin - 1.0);
        else worst = std::max(worst, std::abs(margin - 1.0));
    }
    return worst;
}

// ---------------------------------------------------------------- train / predict

TrainedModel train(const FeatureMatrix& data, const AlgoSpec& spec) {
    spec.validate();
    std::vector<Features> raw;
    std::vector<RiskLabel> y;
    require_labels(data, raw, y);
    if (raw.empty() || (raw.size() < 2 && spec.kind != Algo::KNN))
        throw DataError("training needs at least 2 rows");
    const bool both = std::count(y.begin(), y.end(), RiskLabel::High) > 0 &&
                      std::count(y.begin(), y.end(), RiskLabel::Low) > 0;
    if (!both && spec.kind != Algo::KNN)
        throw DataError("training data holds a single class; " + std::string(to_string(spec.kind)) +
                        " needs both");

    TrainedModel model;
    model.kind = spec.kind;
    model.standardizer = Standardizer::fit(raw);
    std::vector<Features> X;
    X.reserve(raw.size());
    for (const auto& r : raw) X.push_back(model.standardizer.transform(r));

    switch (spec.kind) {
        case Algo::KNN:
            model.params = fit_knn(X, y, spec.knn, all_features());
            break;
        case Algo::DT:
            model.params = fit_tree(X, y, spec.tree);
            break;
        case Algo::LR:
            model.params = fit_logistic(X, y, spec.lr).model;
            break;
        case Algo::GSVM:
            model.params = fit_svm(X, y, spec.svm).model;
            break;
        case Algo::BT: {
            BaggedTrees bt;
            const std::size_t n = X.size();
            for (std::size_t m = 0; m < spec.ensemble_size; ++m) {
                std::mt19937_64 rng(spec.seed + m);
                std::uniform_int_distribution<std::size_t> pick(0, n - 1);
                std::vector<Features> bx(n);
                std::vector<RiskLabel> by(n);
                for (std::size_t i = 0; i < n; ++i) {
                    const auto k = pick(rng);
                    bx[i] = X[k];
                    by[i] = y[k];
                }
                bt.trees.push_back(fit_tree(bx, by, spec.tree));
            }
            model.params = std::move(bt);
            break;
        }
        case Algo::SKNN: {
            SubspaceKnn sk;
            for (std::size_t m = 0; m < spec.ensemble_size; ++m) {
                std::mt19937_64 rng(spec.seed + m);
                auto features = all_features();
                std::shuffle(features.begin(), features.end(), rng);
                features.resize(spec.subspace_dim);
                std::sort(features.begin(), features.end());
                sk.members.push_back(fit_knn(X, y, spec.knn, std::move(features)));
            }
            model.params = std::move(sk);
            break;
        }
    }
    return model;
}

RiskLabel predict(const TrainedModel& model, std::span<const double> x) {
    if (x.size() != kFeatureCount)
        throw ParamError("feature vector has " + std::to_string(x.size()) + " values, expected " +
                         std::to_string(kFeatureCount));
    for (double v : x)
        if (!std::isfinite(v)) throw DataError("feature vector has a non-finite value");
    const Features z = model.standardizer.transform(x);
    return std::visit(
        [&](const auto& p) -> RiskLabel {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, KnnModel>) {
                return predict_knn(p, z);
            } else if constexpr (std::is_same_v<T, TreeModel>) {
                return predict_tree(p, z);
            } else if constexpr (std::is_same_v<T, LogisticModel>) {
                return logistic_probability(p, z) >= 0.5 ? RiskLabel::High : RiskLabel::Low;
            } else if constexpr (std::is_same_v<T, SvmModel>) {
                return svm_decision(p, z) >= 0.0 ? RiskLabel::High : RiskLabel::Low;
            } else if constexpr (std::is_same_v<T, BaggedTrees>) {
                std::vector<RiskLabel> votes;
                for (const auto& t : p.trees) votes.push_back(predict_tree(t, z));
                return majority_vote(votes);
            } else {
                std::vector<RiskLabel> votes;
                for (const auto& m : p.members) votes.push_back(predict_knn(m, z));
                return majority_vote(votes);
            }
        },
        model.params);
}

}  // namespace edaflow
