#pragma once

#include <functional>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "edaflow/classify.hpp"
#include "edaflow/eval.hpp"
#include "edaflow/synth.hpp"

namespace edaflow {

// Malformed command line or configuration; maps to exit code 1.
class UsageError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct RunConfig {
    FilterParams filter;
    DecompParams decomp;
    WindowSpec window;
    AlgoSpec algo;
    bool all_algos = false;
    ProtocolParams protocol;
    SynthParams synth;
    std::uint64_t seed = 0;  // drives the protocol, the classifiers and synth
    std::optional<double> fs_override;

    std::string input;     // "-" or empty: standard input
    std::string labels_a;
    std::string labels_b;
    std::string output;    // empty: standard output
    std::string out_dir;
    std::string report_csv;

    PipelineConfig pipeline() const;
    SynthParams synth_params() const;
    ProtocolParams protocol_params() const;
};

// One documented configuration key. Flags are `--` + the key with '_'
// replaced by '-'.
struct ConfigKey {
    std::string name;
    std::string help;
    std::function<void(RunConfig&, std::string_view)> set;
    std::function<std::string(const RunConfig&)> get;
    bool echoed = true;  // output locations are not part of the echoed config
};

const std::vector<ConfigKey>& config_keys();
std::string flag_name(std::string_view key);

// Throws UsageError on unknown keys or unparsable values.
void apply_setting(RunConfig& cfg, std::string_view key, std::string_view value);

// `key = value` lines; '#' starts a comment.
void load_config_file(RunConfig& cfg, std::istream& in);
void load_config_file(RunConfig& cfg, const std::string& path);

// Every key with its effective value, one `# key = value` line each.
void echo_config(std::ostream& out, const RunConfig& cfg);

}  // namespace edaflow
