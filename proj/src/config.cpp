#include "edaflow/config.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>

#include "csv_util.hpp"

namespace edaflow {

namespace {

double parse_real(std::string_view key, std::string_view v) {
    auto d = csv::to_double(csv::trim(v));
    if (!d) throw UsageError("'" + std::string(key) + "' expects a number, got '" + std::string(v) + "'");
    return *d;
}

std::uint64_t parse_u64(std::string_view key, std::string_view v) {
    v = csv::trim(v);
    std::uint64_t out = 0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (v.empty() || ec != std::errc{} || ptr != v.data() + v.size())
        throw UsageError("'" + std::string(key) + "' expects a non-negative integer, got '" +
                         std::string(v) + "'");
    return out;
}

bool parse_bool(std::string_view key, std::string_view v) {
    v = csv::trim(v);
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw UsageError("'" + std::string(key) + "' expects true/false, got '" + std::string(v) + "'");
}

std::string show(double v) { return csv::format_double(v); }
std::string show(std::uint64_t v) { return std::to_string(v); }
std::string show(bool v) { return v ? "true" : "false"; }

template <typename T>
ConfigKey key_for(std::string name, std::string help, T RunConfig::*group, double T::*field) {
    return {name, std::move(help),
            [=](RunConfig& c, std::string_view v) { (c.*group).*field = parse_real(name, v); },
            [=](const RunConfig& c) { return show((c.*group).*field); }};
}

template <typename T>
ConfigKey key_for(std::string name, std::string help, T RunConfig::*group, std::size_t T::*field) {
    return {name, std::move(help),
            [=](RunConfig& c, std::string_view v) {
                (c.*group).*field = static_cast<std::size_t>(parse_u64(name, v));
            },
            [=](const RunConfig& c) { return show(static_cast<std::uint64_t>((c.*group).*field)); }};
}

template <typename T>
ConfigKey key_for(std::string name, std::string help, T RunConfig::*group, bool T::*field) {
    return {name, std::move(help),
            [=](RunConfig& c, std::string_view v) { (c.*group).*field = parse_bool(name, v); },
            [=](const RunConfig& c) { return show((c.*group).*field); }};
}

ConfigKey path_key(std::string name, std::string help, std::string RunConfig::*field,
                   bool echoed = true) {
    return {std::move(name), std::move(help),
            [=](RunConfig& c, std::string_view v) { c.*field = std::string(csv::trim(v)); },
            [=](const RunConfig& c) { return c.*field; }, echoed};
}

std::vector<ConfigKey> build_keys() {
    using R = RunConfig;
    std::vector<ConfigKey> k;
    // signal_io
    k.push_back({"fs", "sampling rate override in Hz (synth: output rate)",
                 [](R& c, std::string_view v) {
                     c.fs_override = parse_real("fs", v);
                     c.synth.fs = *c.fs_override;
                 },
                 [](const R& c) { return c.fs_override ? show(*c.fs_override) : std::string("auto"); }});
    // preprocess
    k.push_back(key_for("fc_hz", "high-pass cutoff (Hz)", &R::filter, &FilterParams::fc_hz));
    k.push_back(key_for("ma_width_s", "moving-average width (s)", &R::filter, &FilterParams::ma_width_s));
    k.push_back(key_for("zero_phase", "forward-backward high-pass", &R::filter, &FilterParams::zero_phase));
    k.push_back(key_for("skip_highpass", "skip the high-pass stage", &R::filter, &FilterParams::skip_highpass));
    // decompose
    k.push_back(key_for("tau0_s", "slow kernel time constant (s)", &R::decomp, &DecompParams::tau0_s));
    k.push_back(key_for("tau1_s", "fast kernel time constant (s)", &R::decomp, &DecompParams::tau1_s));
    k.push_back(key_for("alpha", "driver sparsity weight", &R::decomp, &DecompParams::alpha));
    k.push_back(key_for("gamma", "tonic coefficient penalty", &R::decomp, &DecompParams::gamma));
    k.push_back(key_for("knot_spacing_s", "tonic spline knot spacing (s)", &R::decomp, &DecompParams::knot_spacing_s));
    k.push_back(key_for("qp_tol", "QP KKT tolerance", &R::decomp, &DecompParams::qp_tol));
    k.push_back(key_for("qp_max_iter", "QP iteration cap", &R::decomp, &DecompParams::qp_max_iter));
    k.push_back(key_for("kernel_s", "Bateman kernel support (s)", &R::decomp, &DecompParams::kernel_s));
    k.push_back(key_for("tile_s", "decomposition tile length (s)", &R::decomp, &DecompParams::tile_s));
    k.push_back(key_for("tile_overlap_s", "decomposition tile overlap (s)", &R::decomp, &DecompParams::tile_overlap_s));
    k.push_back(key_for("standardize", "decompose the z-scored trace", &R::decomp, &DecompParams::standardize));
    // features
    k.push_back(key_for("window_s", "feature window length (s)", &R::window, &WindowSpec::window_s));
    k.push_back(key_for("stride_s", "feature window stride (s)", &R::window, &WindowSpec::stride_s));
    // classify
    k.push_back({"algo", "dt, lr, gsvm, knn, bt, sknn or all",
                 [](R& c, std::string_view v) {
                     v = csv::trim(v);
                     if (v == "all") {
                         c.all_algos = true;
                         return;
                     }
                     auto a = parse_algo(v);
                     if (!a) throw UsageError("unknown algorithm '" + std::string(v) + "'");
                     c.algo.kind = *a;
                     c.all_algos = false;
                 },
                 [](const R& c) {
                     return c.all_algos ? std::string("all") : std::string(to_string(c.algo.kind));
                 }});
    k.push_back({"knn_k", "neighbours for KNN and SKNN members",
                 [](R& c, std::string_view v) { c.algo.knn.k = parse_u64("knn_k", v); },
                 [](const R& c) { return show(static_cast<std::uint64_t>(c.algo.knn.k)); }});
    k.push_back({"tree_max_depth", "CART maximum depth",
                 [](R& c, std::string_view v) { c.algo.tree.max_depth = parse_u64("tree_max_depth", v); },
                 [](const R& c) { return show(static_cast<std::uint64_t>(c.algo.tree.max_depth)); }});
    k.push_back({"tree_min_leaf", "CART minimum leaf size",
                 [](R& c, std::string_view v) { c.algo.tree.min_leaf = parse_u64("tree_min_leaf", v); },
                 [](const R& c) { return show(static_cast<std::uint64_t>(c.algo.tree.min_leaf)); }});
    k.push_back({"lr_lambda", "logistic L2 weight",
                 [](R& c, std::string_view v) { c.algo.lr.lambda = parse_real("lr_lambda", v); },
                 [](const R& c) { return show(c.algo.lr.lambda); }});
    k.push_back({"lr_max_iter", "logistic iteration cap",
                 [](R& c, std::string_view v) { c.algo.lr.max_iter = parse_u64("lr_max_iter", v); },
                 [](const R& c) { return show(static_cast<std::uint64_t>(c.algo.lr.max_iter)); }});
    k.push_back({"svm_c", "SVM box constraint",
                 [](R& c, std::string_view v) { c.algo.svm.C = parse_real("svm_c", v); },
                 [](const R& c) { return show(c.algo.svm.C); }});
    k.push_back({"svm_gamma", "RBF width (0: automatic)",
                 [](R& c, std::string_view v) { c.algo.svm.gamma = parse_real("svm_gamma", v); },
                 [](const R& c) { return show(c.algo.svm.gamma); }});
    k.push_back({"ensemble_size", "members in BT and SKNN",
                 [](R& c, std::string_view v) { c.algo.ensemble_size = parse_u64("ensemble_size", v); },
                 [](const R& c) { return show(static_cast<std::uint64_t>(c.algo.ensemble_size)); }});
    k.push_back({"subspace_dim", "features per SKNN member",
                 [](R& c, std::string_view v) { c.algo.subspace_dim = parse_u64("subspace_dim", v); },
                 [](const R& c) { return show(static_cast<std::uint64_t>(c.algo.subspace_dim)); }});
    // eval
    k.push_back(key_for("train_fraction", "training share of each split", &R::protocol, &ProtocolParams::train_fraction));
    k.push_back(key_for("repeats", "undersample-train-test repeats", &R::protocol, &ProtocolParams::repeats));
    k.push_back({"split_mode", "window or block",
                 [](R& c, std::string_view v) {
                     auto m = parse_split_mode(csv::trim(v));
                     if (!m) throw UsageError("unknown split mode '" + std::string(v) + "'");
                     c.protocol.split_mode = *m;
                 },
                 [](const R& c) { return std::string(to_string(c.protocol.split_mode)); }});
    k.push_back(key_for("block_s", "block length for block split (s)", &R::protocol, &ProtocolParams::block_s));
    k.push_back({"threads", "worker threads for tiles and repeats",
                 [](R& c, std::string_view v) {
                     c.protocol.threads = static_cast<unsigned>(parse_u64("threads", v));
                 },
                 [](const R& c) { return show(static_cast<std::uint64_t>(c.protocol.threads)); },
                 false});
    k.push_back({"seed", "master random seed",
                 [](R& c, std::string_view v) { c.seed = parse_u64("seed", v); },
                 [](const R& c) { return show(c.seed); }});
    // synth
    k.push_back(key_for("duration_s", "synthetic trace length (s)", &R::synth, &SynthParams::duration_s));
    k.push_back(key_for("tonic_base_uS", "synthetic tonic level (uS)", &R::synth, &SynthParams::tonic_base_uS));
    k.push_back(key_for("drift_components", "synthetic drift sinusoids", &R::synth, &SynthParams::drift_components));
    k.push_back(key_for("drift_amplitude_uS", "summed drift amplitude (uS)", &R::synth, &SynthParams::drift_amplitude_uS));
    k.push_back(key_for("scr_rate_low_hz", "SCR rate in Low segments (Hz)", &R::synth, &SynthParams::scr_rate_low_hz));
    k.push_back(key_for("scr_rate_high_hz", "SCR rate in High segments (Hz)", &R::synth, &SynthParams::scr_rate_high_hz));
    k.push_back(key_for("scr_amp_median_uS", "median SCR amplitude (uS)", &R::synth, &SynthParams::scr_amp_median_uS));
    k.push_back(key_for("scr_amp_sigma_log", "log-sd of SCR amplitude", &R::synth, &SynthParams::scr_amp_sigma_log));
    k.push_back(key_for("noise_sigma_uS", "white noise sd (uS)", &R::synth, &SynthParams::noise_sigma_uS));
    k.push_back(key_for("segment_s", "label segment length (s)", &R::synth, &SynthParams::segment_s));
    // paths
    k.push_back(path_key("input", "input file ('-' for stdin)", &R::input));
    k.push_back(path_key("labels_a", "first annotator label CSV", &R::labels_a));
    k.push_back(path_key("labels_b", "second annotator label CSV", &R::labels_b));
    k.push_back(path_key("output", "output file (default stdout)", &R::output, false));
    k.push_back(path_key("out_dir", "synth output directory", &R::out_dir, false));
    k.push_back(path_key("report_csv", "per-repeat CSV path", &R::report_csv, false));
    return k;
}

}  // namespace

PipelineConfig RunConfig::pipeline() const {
    PipelineConfig p;
    p.filter = filter;
    p.decomp = decomp;
    p.window = window;
    p.threads = protocol.threads;
    return p;
}

SynthParams RunConfig::synth_params() const {
    SynthParams s = synth;
    s.seed = seed;
    s.tau0_s = decomp.tau0_s;
    s.tau1_s = decomp.tau1_s;
    s.kernel_s = decomp.kernel_s;
    return s;
}

ProtocolParams RunConfig::protocol_params() const {
    ProtocolParams p = protocol;
    p.seed = seed;
    return p;
}

const std::vector<ConfigKey>& config_keys() {
    static const std::vector<ConfigKey> keys = build_keys();
    return keys;
}

std::string flag_name(std::string_view key) {
    std::string f = "--";
    for (char ch : key) f.push_back(ch == '_' ? '-' : ch);
    return f;
}

void apply_setting(RunConfig& cfg, std::string_view key, std::string_view value) {
    for (const auto& k : config_keys()) {
        if (k.name == key) {
            k.set(cfg, value);
            return;
        }
    }
    throw UsageError("unknown configuration key '" + std::string(key) + "'");
}

void load_config_file(RunConfig& cfg, std::istream& in) {
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto hash = line.find('#');
        std::string_view body = csv::trim(std::string_view(line).substr(0, hash));
        if (body.empty()) continue;
        auto eq = body.find('=');
        if (eq == std::string_view::npos)
            throw UsageError("config line " + std::to_string(line_no) + ": expected 'key = value'");
        apply_setting(cfg, csv::trim(body.substr(0, eq)), csv::trim(body.substr(eq + 1)));
    }
}

void load_config_file(RunConfig& cfg, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open config file '" + path + "'");
    load_config_file(cfg, in);
}

void echo_config(std::ostream& out, const RunConfig& cfg) {
    for (const auto& k : config_keys())
        if (k.echoed) out << "# " << k.name << " = " << k.get(cfg) << '\n';
}

}  // namespace edaflow
