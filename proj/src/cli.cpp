#include "edaflow/cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

#include "csv_util.hpp"
#include "edaflow/config.hpp"
#include "edaflow/errors.hpp"

namespace edaflow {

namespace {

constexpr std::string_view kLabelMarker = "#labels";

std::string slurp(std::istream& in) {
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string read_input(const RunConfig& cfg, std::istream& in) {
    if (cfg.input.empty() || cfg.input == "-") return slurp(in);
    std::ifstream f(cfg.input);
    if (!f) throw DataError("cannot open '" + cfg.input + "'");
    return slurp(f);
}

// Runs `body` against the configured output stream.
template <typename F>
void with_output(const RunConfig& cfg, std::ostream& out, F&& body) {
    if (cfg.output.empty() || cfg.output == "-") {
        body(out);
        return;
    }
    std::ofstream f(cfg.output);
    if (!f) throw DataError("cannot write '" + cfg.output + "'");
    body(f);
}

// A trace CSV optionally followed by a `#labels` line and a label CSV; this
// is what `synth` prints when no output directory is given.
struct TraceBundle {
    RawTrace trace;
    std::optional<LabelTrack> labels;
};

TraceBundle parse_bundle(const std::string& text, std::optional<double> fs) {
    TraceBundle b;
    std::string trace_part = text;
    std::string label_part;
    const std::string marker = "\n" + std::string(kLabelMarker);
    if (auto pos = text.find(marker); pos != std::string::npos) {
        trace_part = text.substr(0, pos + 1);
        auto nl = text.find('\n', pos + 1);
        label_part = nl == std::string::npos ? std::string{} : text.substr(nl + 1);
        std::istringstream ls(label_part);
        b.labels = read_label_file(ls);
    }
    std::istringstream ts(trace_part);
    b.trace = read_trace(ts, fs);
    return b;
}

LabelTrack resolve_labels(const RunConfig& cfg, const std::optional<LabelTrack>& bundled) {
    if (!cfg.labels_a.empty()) {
        const std::string& b = cfg.labels_b.empty() ? cfg.labels_a : cfg.labels_b;
        return parse_label_track(cfg.labels_a, b);
    }
    if (bundled) return consensus_track(*bundled, *bundled);
    throw UsageError("features needs --labels-a/--labels-b or a labelled trace bundle on stdin");
}

void write_truth(std::ostream& out, const SynthTruth& t) {
    out << "t_s,tonic,phasic,driver,noise,label\n";
    for (std::size_t i = 0; i < t.trace.size(); ++i) {
        const double time = t.trace.time_at(i);
        const auto label = label_window(t.track, time, time + 0.5 / t.trace.fs);
        out << csv::format_double(time) << ',' << csv::format_double(t.tonic_truth[i]) << ','
            << csv::format_double(t.phasic_truth[i]) << ','
            << csv::format_double(t.driver_truth[i]) << ',' << csv::format_double(t.noise[i])
            << ',' << (label ? to_string(*label) : std::string_view{}) << '\n';
    }
}

void write_file(const std::filesystem::path& p, const std::function<void(std::ostream&)>& body) {
    std::ofstream f(p);
    if (!f) throw DataError("cannot write '" + p.string() + "'");
    body(f);
}

// ---------------------------------------------------------------- subcommands

void run_synth(const RunConfig& cfg, std::ostream& out) {
    const auto truth = synth_trace(cfg.synth_params());
    if (!cfg.out_dir.empty()) {
        const std::filesystem::path dir(cfg.out_dir);
        std::filesystem::create_directories(dir);
        write_file(dir / "trace.csv", [&](std::ostream& o) { write_trace(o, truth.trace); });
        write_file(dir / "labels.csv", [&](std::ostream& o) { write_label_track(o, truth.track); });
        write_file(dir / "truth.csv", [&](std::ostream& o) { write_truth(o, truth); });
        return;
    }
    with_output(cfg, out, [&](std::ostream& o) {
        write_trace(o, truth.trace);
        o << kLabelMarker << '\n';
        write_label_track(o, truth.track);
    });
}

void run_preprocess(const RunConfig& cfg, std::istream& in, std::ostream& out) {
    const auto bundle = parse_bundle(read_input(cfg, in), cfg.fs_override);
    const auto clean = preprocess(bundle.trace, cfg.filter);
    with_output(cfg, out, [&](std::ostream& o) { write_trace(o, clean); });
}

void run_decompose(const RunConfig& cfg, std::istream& in, std::ostream& out) {
    const auto bundle = parse_bundle(read_input(cfg, in), cfg.fs_override);
    const auto dec = decompose(bundle.trace, cfg.decomp, cfg.protocol.threads);
    with_output(cfg, out, [&](std::ostream& o) { write_decomposition(o, dec); });
}

void run_features(const RunConfig& cfg, std::istream& in, std::ostream& out) {
    const auto bundle = parse_bundle(read_input(cfg, in), cfg.fs_override);
    const auto track = resolve_labels(cfg, bundle.labels);
    const auto data = run_pipeline(bundle.trace, track, cfg.pipeline());
    with_output(cfg, out, [&](std::ostream& o) { write_feature_matrix(o, data); });
}

std::string csv_path_for(const std::string& base, std::string_view algo, bool suffix) {
    if (!suffix) return base;
    std::filesystem::path p(base);
    const auto ext = p.extension().string();
    p.replace_extension();
    return p.string() + "_" + std::string(algo) + ext;
}

void run_evaluate(const RunConfig& cfg, std::istream& in, std::ostream& out) {
    std::istringstream text(read_input(cfg, in));
    const auto data = read_feature_matrix(text);
    std::vector<Algo> algos;
    if (cfg.all_algos) algos.assign(kAllAlgos.begin(), kAllAlgos.end());
    else algos.push_back(cfg.algo.kind);

    std::vector<EvalReport> reports;
    for (auto a : algos) {
        AlgoSpec spec = cfg.algo;
        spec.kind = a;
        spec.seed = cfg.seed;
        reports.push_back(run_protocol(data, spec, cfg.protocol_params()));
        if (!cfg.report_csv.empty())
            write_file(csv_path_for(cfg.report_csv, to_string(a), cfg.all_algos),
                       [&](std::ostream& o) { write_report_csv(o, reports.back()); });
    }

    with_output(cfg, out, [&](std::ostream& o) {
        o << "# edaflow evaluation report\n";
        echo_config(o, cfg);
        o << "# rows = " << data.size() << " (high " << data.count(RiskLabel::High) << ", low "
          << data.count(RiskLabel::Low) << ")\n";
        for (const auto& r : reports) {
            o << '\n' << "[" << r.algo << "]\n";
            write_report(o, r);
        }
        if (reports.size() > 1) {
            o << "\n[summary]\n";
            o << "algo,accuracy_mean,accuracy_std,precision_mean,recall_mean\n";
            for (const auto& r : reports)
                o << r.algo << ',' << format_metric(r.accuracy.mean) << ','
                  << format_metric(r.accuracy.std) << ',' << format_metric(r.precision.mean)
                  << ',' << format_metric(r.recall.mean) << '\n';
        }
    });
}

// Confusion CSV: columns tp, fp, fn, tn (any order, extra columns allowed);
// an `algo` or `repeat` column names the row.
void run_metrics(const RunConfig& cfg, std::istream& in, std::ostream& out) {
    std::istringstream text(read_input(cfg, in));
    std::string line;
    while (std::getline(text, line) && csv::trim(line).empty()) {}
    const auto header = csv::split(line);
    std::map<std::string, std::size_t, std::less<>> col;
    for (std::size_t i = 0; i < header.size(); ++i) col[std::string(header[i])] = i;
    for (const char* need : {"tp", "fp", "fn", "tn"})
        if (!col.count(need))
            throw ParseError(std::string("confusion CSV lacks a '") + need + "' column", 0);
    std::optional<std::size_t> name_col;
    if (col.count("algo")) name_col = col["algo"];
    else if (col.count("repeat")) name_col = col["repeat"];

    auto pct = [](const std::optional<double>& v) {
        return v ? format_metric(*v * 100.0, 1) : std::string("NA");
    };
    with_output(cfg, out, [&](std::ostream& o) {
        o << "name,accuracy_pct,precision_pct,recall_pct\n";
        std::size_t row = 0;
        while (std::getline(text, line)) {
            if (csv::trim(line).empty()) continue;
            ++row;
            const auto cells = csv::split(line);
            if (cells.size() != header.size())
                throw ParseError("wrong column count at row " + std::to_string(row), row);
            auto count = [&](const char* name) {
                const auto v = cells[col.find(name)->second];
                std::uint64_t n = 0;
                auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), n);
                if (v.empty() || ec != std::errc{} || p != v.data() + v.size())
                    throw ParseError("bad count '" + std::string(v) + "' at row " +
                                         std::to_string(row),
                                     row);
                return n;
            };
            ConfusionMatrix m{count("tp"), count("fp"), count("fn"), count("tn")};
            const auto mt = metrics_from_confusion(m);
            o << (name_col ? std::string(cells[*name_col]) : std::to_string(row)) << ','
              << pct(mt.accuracy) << ',' << pct(mt.precision) << ',' << pct(mt.recall) << '\n';
        }
    });
}

}  // namespace

int dispatch(int argc, const char* const* argv, std::istream& in, std::ostream& out,
             std::ostream& err) {
    CLI::App app{"EDA perceived-risk pipeline", "edaflow"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    app.add_option("--config", config_path, "key = value configuration file");
    std::map<std::string, std::optional<std::string>> given;
    for (const auto& k : config_keys()) {
        std::string names = flag_name(k.name);
        if (k.name == "duration_s") names += ",--duration";
        if (k.name == "labels_a") names += ",--labels";
        app.add_option(names, given[k.name], k.help);
    }

    struct Command {
        const char* name;
        const char* help;
    };
    const Command commands[] = {
        {"synth", "generate a synthetic trace with labels and ground truth"},
        {"preprocess", "high-pass and moving-average filter a trace"},
        {"decompose", "split a trace into tonic and phasic components"},
        {"features", "preprocess, decompose and window a labelled trace into features"},
        {"evaluate", "run the undersample-train-test protocol on a feature CSV"},
        {"metrics", "accuracy, precision and recall from confusion counts"},
    };
    for (const auto& c : commands) app.add_subcommand(c.name, c.help);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            out << app.help();
            return kExitOk;
        }
        err << "edaflow: " << e.what() << '\n';
        return kExitUsage;
    }

    try {
        RunConfig cfg;
        if (!config_path.empty()) load_config_file(cfg, config_path);
        for (const auto& k : config_keys())
            if (given[k.name]) apply_setting(cfg, k.name, *given[k.name]);

        const auto* sub = app.get_subcommands().front();
        const std::string name = sub->get_name();
        if (name == "synth") run_synth(cfg, out);
        else if (name == "preprocess") run_preprocess(cfg, in, out);
        else if (name == "decompose") run_decompose(cfg, in, out);
        else if (name == "features") run_features(cfg, in, out);
        else if (name == "evaluate") run_evaluate(cfg, in, out);
        else run_metrics(cfg, in, out);
        return kExitOk;
    } catch (const std::invalid_argument& e) {
        err << "edaflow: " << e.what() << '\n';
        return kExitUsage;
    } catch (const SolverError& e) {
        err << "edaflow: solver failure: " << e.what() << '\n';
        return kExitSolver;
    } catch (const std::exception& e) {
        err << "edaflow: " << e.what() << '\n';
        return kExitData;
    }
}

}  // namespace edaflow
