#include "edaflow/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <future>
#include <map>
#include <memory>
#include <ostream>
#include <random>

#include "edaflow/errors.hpp"

namespace edaflow {

namespace {

// Independent generator per (seed, purpose) pair.
std::mt19937_64 stream_rng(std::uint64_t seed, std::uint32_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      stream};
    return std::mt19937_64(seq);
}

constexpr std::uint32_t kUndersampleStream = 1;
constexpr std::uint32_t kSplitStream = 2;

FeatureMatrix take(const FeatureMatrix& data, const std::vector<std::size_t>& idx) {
    FeatureMatrix out;
    out.rows.reserve(idx.size());
    for (auto i : idx) out.rows.push_back(data.rows[i]);
    return out;
}

Summary summarize(const std::vector<std::optional<double>>& values) {
    Summary s;
    double sum = 0.0;
    for (const auto& v : values)
        if (v) {
            sum += *v;
            ++s.defined;
        }
    if (s.defined == 0) return s;
    const double mean = sum / static_cast<double>(s.defined);
    double ss = 0.0;
    for (const auto& v : values)
        if (v) ss += (*v - mean) * (*v - mean);
    s.mean = mean;
    s.std = s.defined > 1 ? std::sqrt(ss / static_cast<double>(s.defined - 1)) : 0.0;
    return s;
}

ConfusionMatrix run_repeat(const FeatureMatrix& data, const Learner& learner,
                           const ProtocolParams& params, std::size_t index) {
    const std::uint64_t seed = params.seed + index;
    try {
        const auto balanced = undersample(data, seed);
        const auto split = split_train_test(balanced, params, seed);
        const auto predictor = learner(split.train, seed);
        std::vector<RiskLabel> predicted;
        std::vector<RiskLabel> truth;
        for (const auto& row : split.test.rows) {
            predicted.push_back(predictor(row));
            truth.push_back(*row.label);
        }
        return confusion_matrix(predicted, truth);
    } catch (const SolverError& e) {
        throw SolverError("repeat " + std::to_string(index) + ": " + e.what(), e.residual());
    } catch (const DataError& e) {
        throw DataError("repeat " + std::to_string(index) + ": " + e.what());
    } catch (const std::invalid_argument& e) {
        throw ParamError("repeat " + std::to_string(index) + ": " + e.what());
    }
}

}  // namespace

std::string_view to_string(SplitMode mode) noexcept {
    return mode == SplitMode::Block ? "block" : "window";
}

std::optional<SplitMode> parse_split_mode(std::string_view text) noexcept {
    if (text == "window") return SplitMode::Window;
    if (text == "block") return SplitMode::Block;
    return std::nullopt;
}

void ProtocolParams::validate() const {
    if (!(train_fraction > 0.0) || !(train_fraction < 1.0))
        throw ParamError("train fraction must lie in (0, 1)");
    if (repeats < 1) throw ParamError("repeats must be >= 1");
    if (!(block_s > 0.0)) throw ParamError("block length must be positive");
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& o) noexcept {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    tn += o.tn;
    return *this;
}

FeatureMatrix undersample(const FeatureMatrix& data, std::uint64_t seed,
                          std::vector<std::size_t>* kept) {
    std::vector<std::size_t> high;
    std::vector<std::size_t> low;
    for (std::size_t i = 0; i < data.rows.size(); ++i) {
        const auto& label = data.rows[i].label;
        if (!label) throw DataError("row " + std::to_string(i + 1) + " is unlabeled");
        (*label == RiskLabel::High ? high : low).push_back(i);
    }
    if (high.empty() || low.empty()) throw DataError("undersampling needs both classes present");

    auto& majority = high.size() > low.size() ? high : low;
    const auto& minority = high.size() > low.size() ? low : high;
    auto rng = stream_rng(seed, kUndersampleStream);
    std::shuffle(majority.begin(), majority.end(), rng);
    majority.resize(minority.size());

    std::vector<std::size_t> idx = minority;
    idx.insert(idx.end(), majority.begin(), majority.end());
    std::sort(idx.begin(), idx.end());
    auto out = take(data, idx);
    if (kept) *kept = std::move(idx);
    return out;
}

TrainTestSplit split_train_test(const FeatureMatrix& data, const ProtocolParams& params,
                                std::uint64_t seed) {
    params.validate();
    std::vector<std::size_t> by_class[2];
    for (std::size_t i = 0; i < data.rows.size(); ++i) {
        const auto& label = data.rows[i].label;
        if (!label) throw DataError("row " + std::to_string(i + 1) + " is unlabeled");
        by_class[*label == RiskLabel::High ? 1 : 0].push_back(i);
    }
    for (const auto& c : by_class)
        if (c.size() < 2) throw DataError("each class needs at least 2 rows to split");

    auto rng = stream_rng(seed, kSplitStream);
    TrainTestSplit out;
    if (params.split_mode == SplitMode::Window) {
        for (auto& c : by_class) {
            std::shuffle(c.begin(), c.end(), rng);
            const auto n_train = static_cast<std::size_t>(
                std::floor(params.train_fraction * static_cast<double>(c.size())));
            out.train_rows.insert(out.train_rows.end(), c.begin(),
                                  c.begin() + static_cast<std::ptrdiff_t>(n_train));
            out.test_rows.insert(out.test_rows.end(),
                                 c.begin() + static_cast<std::ptrdiff_t>(n_train), c.end());
        }
    } else {
        // Blocks are grouped by their majority label and each group is split
        // separately, so both sides keep roughly the class balance.
        std::map<long long, std::vector<std::size_t>> blocks;
        for (std::size_t i = 0; i < data.rows.size(); ++i)
            blocks[static_cast<long long>(std::floor(data.rows[i].window_start_s / params.block_s))]
                .push_back(i);
        std::vector<long long> groups[2];
        for (const auto& [id, rows] : blocks) {
            std::size_t high = 0;
            for (auto i : rows) high += *data.rows[i].label == RiskLabel::High ? 1 : 0;
            groups[2 * high >= rows.size() ? 1 : 0].push_back(id);
        }
        for (auto& ids : groups) {
            if (ids.size() < 2)
                throw DataError("block split needs at least 2 blocks per class");
            std::shuffle(ids.begin(), ids.end(), rng);
            std::size_t total = 0;
            for (auto id : ids) total += blocks[id].size();
            const auto target = static_cast<std::size_t>(
                std::floor(params.train_fraction * static_cast<double>(total)));
            std::size_t taken = 0;
            std::size_t k = 0;
            // The last block always goes to test so neither side is empty.
            for (; k + 1 < ids.size() && (k == 0 || taken < target); ++k) {
                const auto& rows = blocks[ids[k]];
                out.train_rows.insert(out.train_rows.end(), rows.begin(), rows.end());
                taken += rows.size();
            }
            for (; k < ids.size(); ++k) {
                const auto& rows = blocks[ids[k]];
                out.test_rows.insert(out.test_rows.end(), rows.begin(), rows.end());
            }
        }
    }
    std::sort(out.train_rows.begin(), out.train_rows.end());
    std::sort(out.test_rows.begin(), out.test_rows.end());
    out.train = take(data, out.train_rows);
    out.test = take(data, out.test_rows);
    return out;
}

ConfusionMatrix confusion_matrix(std::span<const RiskLabel> predicted,
                                 std::span<const RiskLabel> truth) {
    if (predicted.size() != truth.size())
        throw DataError("prediction and truth lengths differ (" + std::to_string(predicted.size()) +
                        " vs " + std::to_string(truth.size()) + ")");
    if (predicted.empty()) throw DataError("confusion matrix of empty sequences");
    ConfusionMatrix m;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const bool p = predicted[i] == RiskLabel::High;
        const bool t = truth[i] == RiskLabel::High;
        if (p && t) ++m.tp;
        else if (p) ++m.fp;
        else if (t) ++m.fn;
        else ++m.tn;
    }
    return m;
}

Metrics metrics_from_confusion(const ConfusionMatrix& m) {
    Metrics out;
    auto ratio = [](std::uint64_t a, std::uint64_t b) -> std::optional<double> {
        if (b == 0) return std::nullopt;
        return static_cast<double>(a) / static_cast<double>(b);
    };
    out.accuracy = ratio(m.tp + m.tn, m.total());
    out.precision = ratio(m.tp, m.tp + m.fp);
    out.recall = ratio(m.tp, m.tp + m.fn);
    return out;
}

Learner make_learner(const AlgoSpec& spec) {
    spec.validate();
    return [spec](const FeatureMatrix& train_set, std::uint64_t seed) -> Predictor {
        AlgoSpec s = spec;
        s.seed = seed;
        auto model = std::make_shared<const TrainedModel>(train(train_set, s));
        return [model](const FeatureVector& row) { return predict(*model, row.values); };
    };
}

EvalReport run_protocol(const FeatureMatrix& data, const Learner& learner,
                        const ProtocolParams& params, std::string algo_name) {
    params.validate();
    const auto high = data.count(RiskLabel::High);
    const auto low = data.count(RiskLabel::Low);
    if (high < 10 || low < 10)
        throw DataError("protocol needs at least 10 rows per class (have " + std::to_string(high) +
                        " high, " + std::to_string(low) + " low)");

    EvalReport report;
    report.algo = std::move(algo_name);
    report.repeats.resize(params.repeats);
    if (params.threads <= 1) {
        for (std::size_t i = 0; i < params.repeats; ++i)
            report.repeats[i] = run_repeat(data, learner, params, i);
    } else {
        for (std::size_t first = 0; first < params.repeats; first += params.threads) {
            const std::size_t last = std::min<std::size_t>(params.repeats, first + params.threads);
            std::vector<std::future<ConfusionMatrix>> jobs;
            for (std::size_t i = first; i < last; ++i)
                jobs.push_back(std::async(std::launch::async, run_repeat, std::cref(data),
                                          std::cref(learner), std::cref(params), i));
            for (std::size_t i = first; i < last; ++i) report.repeats[i] = jobs[i - first].get();
        }
    }

    std::vector<std::optional<double>> acc, prec, rec;
    for (const auto& m : report.repeats) {
        report.pooled += m;
        const auto mt = metrics_from_confusion(m);
        acc.push_back(mt.accuracy);
        prec.push_back(mt.precision);
        rec.push_back(mt.recall);
    }
    report.accuracy = summarize(acc);
    report.precision = summarize(prec);
    report.recall = summarize(rec);
    return report;
}

EvalReport run_protocol(const FeatureMatrix& data, const AlgoSpec& spec,
                        const ProtocolParams& params) {
    return run_protocol(data, make_learner(spec), params, std::string(to_string(spec.kind)));
}

std::string format_metric(const std::optional<double>& v, int decimals) {
    if (!v) return "NA";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, *v);
    return buf;
}

void write_report(std::ostream& out, const EvalReport& r) {
    const auto pooled = metrics_from_confusion(r.pooled);
    out << "algo = " << r.algo << '\n';
    out << "repeats = " << r.repeats.size() << '\n';
    out << "pooled.tp = " << r.pooled.tp << '\n';
    out << "pooled.fp = " << r.pooled.fp << '\n';
    out << "pooled.fn = " << r.pooled.fn << '\n';
    out << "pooled.tn = " << r.pooled.tn << '\n';
    out << "pooled.accuracy = " << format_metric(pooled.accuracy, 6) << '\n';
    out << "pooled.precision = " << format_metric(pooled.precision, 6) << '\n';
    out << "pooled.recall = " << format_metric(pooled.recall, 6) << '\n';
    auto summary = [&](const char* name, const Summary& s) {
        out << name << ".mean = " << format_metric(s.mean, 6) << '\n';
        out << name << ".std = " << format_metric(s.std, 6) << '\n';
    };
    summary("accuracy", r.accuracy);
    summary("precision", r.precision);
    summary("recall", r.recall);
    out << '\n';
    write_report_csv(out, r);
}

void write_report_csv(std::ostream& out, const EvalReport& r) {
    out << "repeat,tp,fp,fn,tn,accuracy,precision,recall\n";
    for (std::size_t i = 0; i < r.repeats.size(); ++i) {
        const auto& m = r.repeats[i];
        const auto mt = metrics_from_confusion(m);
        out << i << ',' << m.tp << ',' << m.fp << ',' << m.fn << ',' << m.tn << ','
            << format_metric(mt.accuracy, 6) << ',' << format_metric(mt.precision, 6) << ','
            << format_metric(mt.recall, 6) << '\n';
    }
}

}  // namespace edaflow
