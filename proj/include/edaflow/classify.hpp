#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "edaflow/features.hpp"

namespace edaflow {

enum class Algo { DT, LR, GSVM, KNN, BT, SKNN };

inline constexpr std::array<Algo, 6> kAllAlgos = {Algo::DT,  Algo::LR, Algo::GSVM,
                                                  Algo::KNN, Algo::BT, Algo::SKNN};

std::string_view to_string(Algo algo) noexcept;
std::optional<Algo> parse_algo(std::string_view text) noexcept;  // lower-case names

struct KnnParams {
    std::size_t k = 5;
};

struct TreeParams {
    std::size_t max_depth = 20;
    std::size_t min_leaf = 5;
};

struct LogisticParams {
    double lambda = 1e-4;
    double grad_tol = 1e-6;
    std::size_t max_iter = 5000;
};

struct SvmParams {
    double C = 1.0;
    double gamma = 0.0;  // 0: 1 / (dim * variance of standardized training features)
    double tol = 1e-3;
    std::size_t max_iter = 10'000'000;
};

struct AlgoSpec {
    Algo kind = Algo::KNN;
    KnnParams knn;
    TreeParams tree;
    LogisticParams lr;
    SvmParams svm;
    std::size_t ensemble_size = 30;
    std::size_t subspace_dim = 6;
    std::uint64_t seed = 0;

    void validate() const;
};

// Per-feature z-scoring fitted on training rows. A zero scale marks a
// constant feature, which transforms to 0.
struct Standardizer {
    std::vector<double> mean;
    std::vector<double> scale;

    static Standardizer fit(const std::vector<Features>& rows);
    Features transform(std::span<const double> x) const;
    bool has_constant_feature() const noexcept;
};

struct KnnModel {
    std::size_t k = 5;
    std::vector<std::size_t> features;  // subspace; all features for plain KNN
    std::vector<Features> points;       // standardized training rows
    std::vector<RiskLabel> labels;
};

struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    std::uint32_t left = 0;
    std::uint32_t right = 0;
    RiskLabel label = RiskLabel::High;
};

struct TreeModel {
    std::vector<TreeNode> nodes;  // nodes[0] is the root
};

struct LogisticModel {
    std::vector<double> weights;
    double bias = 0.0;
};

struct SvmModel {
    double gamma = 0.0;
    double rho = 0.0;
    std::vector<Features> support;
    std::vector<double> coef;  // alpha_i * y_i
};

struct BaggedTrees {
    std::vector<TreeModel> trees;
};

struct SubspaceKnn {
    std::vector<KnnModel> members;
};

using ModelParams =
    std::variant<TreeModel, LogisticModel, SvmModel, KnnModel, BaggedTrees, SubspaceKnn>;

struct TrainedModel {
    Algo kind = Algo::KNN;
    Standardizer standardizer;
    ModelParams params;
};

TrainedModel train(const FeatureMatrix& data, const AlgoSpec& spec);

// Ties resolve to High.
RiskLabel predict(const TrainedModel& model, std::span<const double> x);
inline RiskLabel predict(const TrainedModel& model, const Features& x) {
    return predict(model, std::span<const double>(x));
}

// Building blocks on already standardized data, exposed for testing.
RiskLabel predict_knn(const KnnModel& model, const Features& z);
RiskLabel predict_tree(const TreeModel& model, const Features& z);
RiskLabel majority_vote(std::span<const RiskLabel> votes);

TreeModel fit_tree(const std::vector<Features>& X, const std::vector<RiskLabel>& y,
                   const TreeParams& params);

struct LogisticFit {
    LogisticModel model;
    std::vector<double> loss_history;  // objective before each accepted step, then final
    double grad_norm = 0.0;
};
LogisticFit fit_logistic(const std::vector<Features>& X, const std::vector<RiskLabel>& y,
                         const LogisticParams& params);
double logistic_probability(const LogisticModel& model, const Features& z);

struct SvmFit {
    SvmModel model;
    std::vector<double> alpha;  // dual variables for every training row
    std::size_t iterations = 0;
};
SvmFit fit_svm(const std::vector<Features>& X, const std::vector<RiskLabel>& y,
               const SvmParams& params);
double svm_decision(const SvmModel& model, const Features& z);

// Largest violation of soft-margin complementarity on the training rows:
// alpha=0 needs y f >= 1, 0<alpha<C needs y f = 1, alpha=C needs y f <= 1.
double svm_kkt_violation(const SvmFit& fit, const std::vector<Features>& X,
                         const std::vector<RiskLabel>& y, double C);

// Self-describing text container headed by `EDAFLOW-MODEL-1`. Numbers are
// written in shortest round-trip form so reloading is bit-exact.
inline constexpr std::string_view kModelHeader = "EDAFLOW-MODEL-1";
void save_model(std::ostream& out, const TrainedModel& model);
TrainedModel load_model(std::istream& in);
std::string serialize_model(const TrainedModel& model);

}  // namespace edaflow
