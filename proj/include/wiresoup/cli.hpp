#ifndef WIRESOUP_CLI_HPP
#define WIRESOUP_CLI_HPP

#include <filesystem>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "wiresoup/gibbs.hpp"
#include "wiresoup/graph.hpp"
#include "wiresoup/mcmc.hpp"

namespace wiresoup::cli {

inline constexpr const char* kVersion = "wiresoup 0.1.0";

/// Config rejected by the schema or by task checks; every problem found is listed.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(std::vector<std::string> errors);
    const std::vector<std::string>& errors() const { return errors_; }

private:
    std::vector<std::string> errors_;
};

/// JSON schema (draft-04) of the run configuration.
std::string schema_dump();
/// Problems found by the schema validator (empty when the text is valid).
std::vector<std::string> schema_errors(const std::string& json_text);

struct RunConfig {
    std::string task;
    nlohmann::json graph;
    nlohmann::json model;
    nlohmann::json chain;
    nlohmann::json params;  // the task's own section
    std::vector<std::string> observables;
    std::string output;
    nlohmann::json raw;

    /// Schema validation plus task checks (required sections, mandatory seeds).
    static RunConfig parse(const std::string& text);
};

/// SHA-256 of the canonical (sorted-key) dump.
std::string config_hash(const nlohmann::json& config);

Graph make_graph(const nlohmann::json& spec);
ModelParams make_model(const Graph& g, const nlohmann::json& spec);
ChainSettings make_chain(const nlohmann::json& spec);

struct RunOptions {
    std::filesystem::path out = ".";
    unsigned replicas = 1;
    unsigned threads = 1;
};

struct RunResult {
    bool pass = true;
    std::vector<std::string> verdicts;
    nlohmann::json summary;
    nlohmann::json report;
};

/// Runs the task, writes summary.json, report.json and (for sampling) samples.jsonl under options.out.
RunResult run(const RunConfig& config, const RunOptions& options, std::ostream& log);

/// Command line front end: --config, --out, --replicas, --threads, --schema.
int main_entry(int argc, char** argv);

}  // namespace wiresoup::cli

#endif
