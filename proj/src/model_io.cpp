#include <istream>
#include <ostream>
#include <sstream>

#include "csv_util.hpp"
#include "edaflow/classify.hpp"
#include "edaflow/errors.hpp"

namespace edaflow {

namespace {

// ---------------------------------------------------------------- writing

std::string num(double v) { return csv::format_double(v); }

void write_row(std::ostream& out, std::string_view key, std::span<const double> values) {
    out << key;
    for (double v : values) out << ' ' << num(v);
    out << '\n';
}

void write_knn(std::ostream& out, const KnnModel& m) {
    out << "k " << m.k << '\n';
    out << "features " << m.features.size();
    for (auto f : m.features) out << ' ' << f;
    out << '\n';
    out << "points " << m.points.size() << '\n';
    for (std::size_t i = 0; i < m.points.size(); ++i)
        write_row(out, to_string(m.labels[i]), m.points[i]);
}

void write_tree(std::ostream& out, const TreeModel& t) {
    out << "nodes " << t.nodes.size() << '\n';
    for (const auto& n : t.nodes)
        out << n.feature << ' ' << num(n.threshold) << ' ' << n.left << ' ' << n.right << ' '
            << to_string(n.label) << '\n';
}

// ---------------------------------------------------------------- reading

class Reader {
public:
    explicit Reader(std::istream& in) : in_(in) {}

    std::istringstream line() {
        std::string s;
        while (std::getline(in_, s)) {
            ++line_no_;
            if (!csv::trim(s).empty()) return std::istringstream(s);
        }
        fail("unexpected end of model file");
    }

    // Reads a line that must begin with `key`.
    std::istringstream keyed(std::string_view key) {
        auto ls = line();
        std::string k;
        ls >> k;
        if (k != key) fail("expected '" + std::string(key) + "', found '" + k + "'");
        return ls;
    }

    std::size_t count(std::string_view key) {
        auto ls = keyed(key);
        std::size_t n = 0;
        if (!(ls >> n)) fail("bad count for '" + std::string(key) + "'");
        return n;
    }

    double number(std::istream& ls) {
        std::string tok;
        if (!(ls >> tok)) fail("missing number");
        auto v = csv::to_double(tok);
        if (!v) fail("bad number '" + tok + "'");
        return *v;
    }

    RiskLabel label(std::istream& ls) {
        std::string tok;
        ls >> tok;
        auto l = parse_risk_label(tok);
        if (!l) fail("bad label '" + tok + "'");
        return *l;
    }

    std::vector<double> numbers(std::string_view key, std::size_t n) {
        auto ls = keyed(key);
        std::vector<double> v(n);
        for (auto& x : v) x = number(ls);
        return v;
    }

    Features features(std::istream& ls) {
        Features f{};
        for (auto& x : f) x = number(ls);
        return f;
    }

    [[noreturn]] void fail(const std::string& what) const {
        throw ParseError("model file line " + std::to_string(line_no_) + ": " + what, line_no_);
    }

private:
    std::istream& in_;
    std::size_t line_no_ = 0;
};

KnnModel read_knn(Reader& r) {
    KnnModel m;
    m.k = r.count("k");
    {
        auto ls = r.keyed("features");
        std::size_t n = 0;
        ls >> n;
        m.features.resize(n);
        for (auto& f : m.features) {
            if (!(ls >> f) || f >= kFeatureCount) r.fail("bad feature index");
        }
    }
    const std::size_t n = r.count("points");
    m.points.reserve(n);
    m.labels.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto ls = r.line();
        m.labels.push_back(r.label(ls));
        m.points.push_back(r.features(ls));
    }
    return m;
}

TreeModel read_tree(Reader& r) {
    TreeModel t;
    const std::size_t n = r.count("nodes");
    t.nodes.resize(n);
    for (auto& node : t.nodes) {
        auto ls = r.line();
        if (!(ls >> node.feature)) r.fail("bad node");
        node.threshold = r.number(ls);
        if (!(ls >> node.left >> node.right)) r.fail("bad node children");
        node.label = r.label(ls);
        if (node.feature >= static_cast<int>(kFeatureCount) ||
            (node.feature >= 0 && (node.left >= n || node.right >= n)))
            r.fail("node index out of range");
    }
    if (n == 0) r.fail("empty tree");
    return t;
}

}  // namespace

void save_model(std::ostream& out, const TrainedModel& model) {
    out << kModelHeader << '\n';
    out << "kind " << to_string(model.kind) << '\n';
    write_row(out, "mean", model.standardizer.mean);
    write_row(out, "scale", model.standardizer.scale);
    std::visit(
        [&](const auto& p) {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, KnnModel>) {
                write_knn(out, p);
            } else if constexpr (std::is_same_v<T, TreeModel>) {
                write_tree(out, p);
            } else if constexpr (std::is_same_v<T, LogisticModel>) {
                write_row(out, "weights", p.weights);
                out << "bias " << num(p.bias) << '\n';
            } else if constexpr (std::is_same_v<T, SvmModel>) {
                out << "gamma " << num(p.gamma) << '\n';
                out << "rho " << num(p.rho) << '\n';
                out << "support " << p.support.size() << '\n';
                for (std::size_t i = 0; i < p.support.size(); ++i) {
                    out << num(p.coef[i]);
                    for (double v : p.support[i]) out << ' ' << num(v);
                    out << '\n';
                }
            } else if constexpr (std::is_same_v<T, BaggedTrees>) {
                out << "trees " << p.trees.size() << '\n';
                for (const auto& t : p.trees) write_tree(out, t);
            } else {
                out << "members " << p.members.size() << '\n';
                for (const auto& m : p.members) write_knn(out, m);
            }
        },
        model.params);
    out << "end\n";
}

std::string serialize_model(const TrainedModel& model) {
    std::ostringstream os;
    save_model(os, model);
    return os.str();
}

TrainedModel load_model(std::istream& in) {
    Reader r(in);
    {
        auto ls = r.line();
        std::string h;
        ls >> h;
        if (h != kModelHeader) r.fail("missing header " + std::string(kModelHeader));
    }
    TrainedModel model;
    {
        auto ls = r.keyed("kind");
        std::string k;
        ls >> k;
        auto kind = parse_algo(k);
        if (!kind) r.fail("unknown model kind '" + k + "'");
        model.kind = *kind;
    }
    model.standardizer.mean = r.numbers("mean", kFeatureCount);
    model.standardizer.scale = r.numbers("scale", kFeatureCount);
    switch (model.kind) {
        case Algo::KNN:
            model.params = read_knn(r);
            break;
        case Algo::DT:
            model.params = read_tree(r);
            break;
        case Algo::LR: {
            LogisticModel m;
            m.weights = r.numbers("weights", kFeatureCount);
            m.bias = r.numbers("bias", 1)[0];
            model.params = std::move(m);
            break;
        }
        case Algo::GSVM: {
            SvmModel m;
            m.gamma = r.numbers("gamma", 1)[0];
            m.rho = r.numbers("rho", 1)[0];
            const std::size_t n = r.count("support");
            for (std::size_t i = 0; i < n; ++i) {
                auto ls = r.line();
                m.coef.push_back(r.number(ls));
                m.support.push_back(r.features(ls));
            }
            model.params = std::move(m);
            break;
        }
        case Algo::BT: {
            BaggedTrees bt;
            const std::size_t n = r.count("trees");
            for (std::size_t i = 0; i < n; ++i) bt.trees.push_back(read_tree(r));
            model.params = std::move(bt);
            break;
        }
        case Algo::SKNN: {
            SubspaceKnn sk;
            const std::size_t n = r.count("members");
            for (std::size_t i = 0; i < n; ++i) sk.members.push_back(read_knn(r));
            model.params = std::move(sk);
            break;
        }
    }
    r.keyed("end");
    return model;
}

}  // namespace edaflow
