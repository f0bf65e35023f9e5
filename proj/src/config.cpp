#include "sqlrl/config.hpp"

#include <fstream>

#include "sqlrl/error.hpp"
#include "sqlrl/rewards.hpp"

namespace sqlrl {

using nlohmann::json;
using nlohmann::ordered_json;

void apply_config_json(RunConfig& cfg, const json& doc) {
    if (!doc.is_object()) raise(Errc::bad_config, "config root must be a JSON object");
    try {
        for (const auto& [key, value] : doc.items()) {
            if (key == "group_size") cfg.grpo.group_size = value.get<int>();
            else if (key == "clip_epsilon") cfg.grpo.clip_epsilon = value.get<double>();
            else if (key == "kl_coeff") cfg.grpo.kl_coeff = value.get<double>();
            else if (key == "learning_rate") cfg.grpo.learning_rate = value.get<double>();
            else if (key == "std_floor") cfg.grpo.std_floor = value.get<double>();
            else if (key == "steps") cfg.grpo.steps = value.get<int>();
            else if (key == "seed") cfg.grpo.seed = value.get<std::uint64_t>();
            else if (key == "old_refresh_interval")
                cfg.grpo.old_refresh_interval = value.get<int>();
            else if (key == "preset") cfg.preset = value.get<std::string>();
            else if (key == "gateway_mode") cfg.gateway_mode = value.get<std::string>();
            else if (key == "judge_base_url") cfg.judge_base_url = value.get<std::string>();
            else if (key == "judge_model") cfg.judge_model = value.get<std::string>();
            else if (key == "judge_api_key_env")
                cfg.judge_api_key_env = value.get<std::string>();
            else if (key == "judge_cache_path") cfg.judge_cache_path = value.get<std::string>();
            else if (key == "judge_max_retries") cfg.judge_max_retries = value.get<int>();
            else if (key == "judge_backoff_ms") cfg.judge_backoff_ms = value.get<int>();
            else if (key == "judge_max_in_flight")
                cfg.judge_max_in_flight = value.get<int>();
            else if (key == "mock_script_path") cfg.mock_script_path = value.get<std::string>();
            else if (key == "grammar_path") cfg.grammar_path = value.get<std::string>();
            else if (key == "out_dir") cfg.out_dir = value.get<std::string>();
            else raise(Errc::bad_config, "unknown config key '" + key + "'");
        }
    } catch (const json::exception& e) {
        raise(Errc::bad_config, std::string("config value has wrong type: ") + e.what());
    }
}

RunConfig load_run_config(const std::string& path) {
    RunConfig cfg;
    if (path.empty()) return cfg;
    std::ifstream in(path);
    if (!in) raise(Errc::io_error, "cannot open config file " + path);
    json doc = json::parse(in, nullptr, false);
    if (doc.is_discarded()) {
        raise(Errc::bad_config, "config file " + path + " is not valid JSON");
    }
    apply_config_json(cfg, doc);
    return cfg;
}

ordered_json to_json(const RunConfig& cfg) {
    ordered_json doc;
    doc["group_size"] = cfg.grpo.group_size;
    doc["clip_epsilon"] = cfg.grpo.clip_epsilon;
    doc["kl_coeff"] = cfg.grpo.kl_coeff;
    doc["learning_rate"] = cfg.grpo.learning_rate;
    doc["std_floor"] = cfg.grpo.std_floor;
    doc["steps"] = cfg.grpo.steps;
    doc["seed"] = cfg.grpo.seed;
    doc["old_refresh_interval"] = cfg.grpo.old_refresh_interval;
    doc["preset"] = cfg.preset;
    doc["gateway_mode"] = cfg.gateway_mode;
    doc["judge_base_url"] = cfg.judge_base_url;
    doc["judge_model"] = cfg.judge_model;
    doc["judge_api_key_env"] = cfg.judge_api_key_env;
    doc["judge_cache_path"] = cfg.judge_cache_path;
    doc["judge_max_retries"] = cfg.judge_max_retries;
    doc["judge_backoff_ms"] = cfg.judge_backoff_ms;
    doc["judge_max_in_flight"] = cfg.judge_max_in_flight;
    doc["mock_script_path"] = cfg.mock_script_path;
    doc["grammar_path"] = cfg.grammar_path;
    doc["out_dir"] = cfg.out_dir;
    return doc;
}

void validate(const RunConfig& cfg) {
    validate(cfg.grpo);
    preset_weights(cfg.preset);  // throws on unknown names
    if (cfg.gateway_mode != "local" && cfg.gateway_mode != "mock" &&
        cfg.gateway_mode != "http") {
        raise(Errc::bad_config, "gateway_mode must be local, mock, or http; got '" +
                                    cfg.gateway_mode + "'");
    }
    if (cfg.gateway_mode == "mock" && cfg.mock_script_path.empty()) {
        raise(Errc::bad_config, "mock gateway mode needs mock_script_path");
    }
    if (cfg.judge_max_retries < 0) raise(Errc::bad_config, "judge_max_retries must be >= 0");
    if (cfg.judge_backoff_ms < 0) raise(Errc::bad_config, "judge_backoff_ms must be >= 0");
    if (cfg.judge_max_in_flight < 1) {
        raise(Errc::bad_config, "judge_max_in_flight must be >= 1");
    }
}

std::shared_ptr<Transport> make_transport(const RunConfig& cfg) {
    if (cfg.gateway_mode == "local") {
        return std::make_shared<LocalTransport>();
    }
    if (cfg.gateway_mode == "http") {
        return std::make_shared<HttpTransport>(cfg.judge_base_url, cfg.judge_model,
                                               cfg.judge_api_key_env);
    }
    if (cfg.gateway_mode == "mock") {
        auto mock = std::make_shared<MockTransport>();
        std::ifstream in(cfg.mock_script_path);
        if (!in) raise(Errc::io_error, "cannot open mock script " + cfg.mock_script_path);
        std::string line;
        std::size_t line_no = 0;
        bool saw_header = false;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
            json doc = json::parse(line, nullptr, false);
            if (doc.is_discarded()) {
                raise(Errc::schema_violation, cfg.mock_script_path + ": line " +
                                                  std::to_string(line_no) +
                                                  " is not valid JSON");
            }
            if (!saw_header) {
                if (doc.value("format", "") != "mock-script" || doc.value("version", -1) != 1) {
                    raise(Errc::schema_violation,
                          cfg.mock_script_path + ": line 1 must be a mock-script v1 header");
                }
                saw_header = true;
                continue;
            }
            mock->script(doc.value("body", ""), doc.value("status", 200));
        }
        if (!saw_header) {
            raise(Errc::schema_violation, cfg.mock_script_path + ": empty mock script");
        }
        return mock;
    }
    raise(Errc::bad_config, "unknown gateway_mode '" + cfg.gateway_mode + "'");
}

std::unique_ptr<JudgeGateway> make_gateway(const RunConfig& cfg) {
    GatewayConfig gw;
    gw.max_retries = cfg.judge_max_retries;
    gw.backoff_base_ms = cfg.judge_backoff_ms;
    gw.max_in_flight = cfg.judge_max_in_flight;
    gw.cache_path = cfg.judge_cache_path;
    return std::make_unique<JudgeGateway>(make_transport(cfg), gw);
}

}  // namespace sqlrl
