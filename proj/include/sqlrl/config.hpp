#pragma once

#include <memory>
#include <string>

#include "json.hpp"

#include "sqlrl/grpo.hpp"
#include "sqlrl/judge.hpp"

namespace sqlrl {

/// Fully resolved run configuration: compiled defaults, overlaid by an
/// optional JSON config file, overlaid by explicit CLI flags. The resolved
/// value is serialized verbatim into every run manifest.
struct RunConfig {
    GrpoConfig grpo;
    std::string preset = "best-one";
    std::string gateway_mode = "local";  // local | mock | http
    std::string judge_base_url = "http://127.0.0.1:8080";
    std::string judge_model = "o3-mini";
    std::string judge_api_key_env = "SQLRL_JUDGE_API_KEY";
    std::string judge_cache_path;        // empty: in-memory response cache only
    int judge_max_retries = 3;
    int judge_backoff_ms = 250;
    int judge_max_in_flight = 4;
    std::string mock_script_path;        // mock mode: scripted response file
    std::string grammar_path = "data/default_grammar.json";
    std::string out_dir = "out";
};

/// Overlay `doc` onto `cfg`; unknown keys raise Errc::bad_config so typos
/// fail fast.
void apply_config_json(RunConfig& cfg, const nlohmann::json& doc);

/// Defaults overlaid with the JSON config file at `path` ("" = defaults only).
RunConfig load_run_config(const std::string& path);

nlohmann::ordered_json to_json(const RunConfig& cfg);

/// Checks preset name, gateway mode, and GRPO ranges. Errc::bad_config.
void validate(const RunConfig& cfg);

/// Builds the transport selected by cfg.gateway_mode. Mock mode loads the
/// scripted responses from cfg.mock_script_path (a mock-script file: versioned
/// header, then one {"status":..., "body":...} object per line).
std::shared_ptr<Transport> make_transport(const RunConfig& cfg);

std::unique_ptr<JudgeGateway> make_gateway(const RunConfig& cfg);

}  // namespace sqlrl
