#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "edaflow/classify.hpp"
#include "edaflow/features.hpp"

namespace edaflow {

enum class SplitMode { Window, Block };

std::string_view to_string(SplitMode mode) noexcept;
std::optional<SplitMode> parse_split_mode(std::string_view text) noexcept;

struct ProtocolParams {
    double train_fraction = 0.8;
    std::size_t repeats = 20;
    std::uint64_t seed = 0;
    SplitMode split_mode = SplitMode::Window;
    double block_s = 30.0;  // block length for SplitMode::Block
    unsigned threads = 1;   // repeats run concurrently when > 1

    void validate() const;
};

// High is the positive class. Rows = predicted, columns = true.
struct ConfusionMatrix {
    std::uint64_t tp = 0;
    std::uint64_t fp = 0;
    std::uint64_t fn = 0;
    std::uint64_t tn = 0;

    std::uint64_t total() const noexcept { return tp + fp + fn + tn; }
    ConfusionMatrix& operator+=(const ConfusionMatrix& o) noexcept;
    friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

// nullopt marks an undefined metric (zero denominator), distinct from 0.
struct Metrics {
    std::optional<double> accuracy;
    std::optional<double> precision;
    std::optional<double> recall;
};

struct Summary {
    std::optional<double> mean;
    std::optional<double> std;  // sample standard deviation across repeats
    std::size_t defined = 0;    // repeats where the metric was defined
};

struct EvalReport {
    std::string algo;
    std::vector<ConfusionMatrix> repeats;
    ConfusionMatrix pooled;
    Summary accuracy;
    Summary precision;
    Summary recall;
};

struct TrainTestSplit {
    FeatureMatrix train;
    FeatureMatrix test;
    std::vector<std::size_t> train_rows;  // indices into the split input
    std::vector<std::size_t> test_rows;
};

// Keeps the minority class whole and a seeded sample of the majority class,
// preserving row order. Returns kept row indices through `kept` when given.
FeatureMatrix undersample(const FeatureMatrix& data, std::uint64_t seed,
                          std::vector<std::size_t>* kept = nullptr);

TrainTestSplit split_train_test(const FeatureMatrix& data, const ProtocolParams& params,
                                std::uint64_t seed);

ConfusionMatrix confusion_matrix(std::span<const RiskLabel> predicted,
                                 std::span<const RiskLabel> truth);

Metrics metrics_from_confusion(const ConfusionMatrix& m);

// A trained predictor. It receives the whole test row (including its label),
// so oracle and constant stubs can be expressed as learners.
using Predictor = std::function<RiskLabel(const FeatureVector&)>;
using Learner = std::function<Predictor(const FeatureMatrix& train, std::uint64_t seed)>;

Learner make_learner(const AlgoSpec& spec);

EvalReport run_protocol(const FeatureMatrix& data, const Learner& learner,
                        const ProtocolParams& params, std::string algo_name = "custom");
EvalReport run_protocol(const FeatureMatrix& data, const AlgoSpec& spec,
                        const ProtocolParams& params);

// Key-value header plus a per-repeat table.
void write_report(std::ostream& out, const EvalReport& report);
// repeat,tp,fp,fn,tn,accuracy,precision,recall
void write_report_csv(std::ostream& out, const EvalReport& report);

std::string format_metric(const std::optional<double>& v, int decimals = 4);

}  // namespace edaflow
