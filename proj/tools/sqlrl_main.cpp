#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "sqlrl/config.hpp"
#include "sqlrl/datapipe.hpp"
#include "sqlrl/error.hpp"
#include "sqlrl/grpo.hpp"
#include "sqlrl/judge.hpp"
#include "sqlrl/rewards.hpp"
#include "sqlrl/sql_ir.hpp"
#include "sqlrl/toy_policy.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;
using namespace sqlrl;

namespace {

// ---------------------------------------------------------------------------
// Shared helpers
// ---------------------------------------------------------------------------

std::string canonical_or_trimmed(const std::string& sql) {
    try {
        return canonical_sql(sql);
    } catch (const Error&) {
        return sql;  // unlexable model output still gets a string-level score
    }
}

SqlIr ir_or_empty(const std::string& sql) {
    try {
        return parse_sql(sql);
    } catch (const Error&) {
        return SqlIr{};
    }
}

/// Scores one (predicted, gold) pair under a weight map. string_match and
/// component_f1 are always computed directly; execution_edit and judge_class
/// go through the gateway when one is supplied, and fall back to the offline
/// stand-ins (token edit distance, edit-count rubric) otherwise.
class RewardScorer {
public:
    RewardScorer(std::map<RewardKind, double> weights, JudgeGateway* gateway)
        : weights_(std::move(weights)), gateway_(gateway) {}

    RewardReport score(const std::string& predicted, const std::string& gold,
                       const std::string& schema) const {
        if (gateway_ == nullptr) return offline_reward_report(predicted, gold, weights_);
        std::map<RewardKind, double> scores;
        for (const auto& [kind, w] : weights_) {
            if (w <= 0.0) continue;
            scores[kind] = score_kind(kind, predicted, gold, schema);
        }
        return composite_reward(scores, weights_);
    }

private:
    double score_kind(RewardKind kind, const std::string& predicted, const std::string& gold,
                      const std::string& schema) const {
        switch (kind) {
            case RewardKind::string_match:
                return string_match_reward(canonical_or_trimmed(predicted),
                                           canonical_or_trimmed(gold));
            case RewardKind::component_f1:
                return component_f1_reward(ir_or_empty(predicted), ir_or_empty(gold));
            case RewardKind::execution_edit:
                return execution_edit_reward(edit_count(predicted, gold, schema));
            case RewardKind::judge_class:
                return judge_class_reward(judge_class(predicted, gold));
        }
        raise(Errc::bad_config, "unknown reward kind");
    }

    std::uint64_t edit_count(const std::string& predicted, const std::string& gold,
                             const std::string& schema) const {
        const JudgeVerdict verdict = gateway_->submit(
            make_edit_count_request({predicted}, schema.empty() ? "(no schema)" : schema, gold));
        return static_cast<std::uint64_t>(verdict.edit_counts.at(0));
    }

    JudgeClass judge_class(const std::string& predicted, const std::string& gold) const {
        const JudgeVerdict verdict = gateway_->submit(make_class_grade_request({predicted}, gold));
        return verdict.classes.at(0);
    }

    std::map<RewardKind, double> weights_;
    JudgeGateway* gateway_;  // nullptr: fully offline scoring
};

std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream in(path);
    if (!in) raise(Errc::io_error, "cannot open " + path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    return lines;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) raise(Errc::io_error, "cannot write " + path);
    out << text;
    if (!out) raise(Errc::io_error, "short write to " + path);
}

void write_manifest(const RunConfig& cfg, const std::string& command,
                    const ordered_json& extra) {
    ordered_json doc;
    doc["format"] = "run-manifest";
    doc["version"] = 1;
    doc["command"] = command;
    doc["config"] = to_json(cfg);
    for (const auto& [key, value] : extra.items()) doc[key] = value;
    write_text((fs::path(cfg.out_dir) / "manifest.json").string(), doc.dump(2) + "\n");
}

std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

JudgeGateway* gateway_for_rewards(const RunConfig& cfg, std::unique_ptr<JudgeGateway>& holder) {
    if (cfg.gateway_mode == "local") return nullptr;  // offline fast path, no prompts
    holder = make_gateway(cfg);
    return holder.get();
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

int cmd_score(const RunConfig& cfg, const std::string& pred_path, const std::string& gold_path) {
    validate(cfg);
    const std::vector<std::string> preds = read_lines(pred_path);
    const std::vector<std::string> golds = read_lines(gold_path);
    if (preds.size() != golds.size()) {
        raise(Errc::length_mismatch, "prediction file has " + std::to_string(preds.size()) +
                                         " lines, gold file has " +
                                         std::to_string(golds.size()));
    }
    if (preds.empty()) raise(Errc::length_mismatch, "score files are empty");

    std::unique_ptr<JudgeGateway> gateway_holder;
    const RewardScorer scorer(preset_weights(cfg.preset),
                              gateway_for_rewards(cfg, gateway_holder));

    fs::create_directories(cfg.out_dir);
    std::string out_lines;
    {
        ordered_json header;
        header["format"] = "reward-reports";
        header["version"] = 1;
        out_lines += header.dump() + "\n";
    }
    std::map<RewardKind, double> kind_sums;
    double composite_sum = 0.0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        const RewardReport report = scorer.score(preds[i], golds[i], "");
        ordered_json row;
        row["index"] = i;
        for (const auto& [kind, value] : report.scores) {
            row[reward_kind_name(kind)] = value;
            kind_sums[kind] += value;
        }
        row["composite"] = report.composite;
        composite_sum += report.composite;
        out_lines += row.dump() + "\n";
    }
    const std::string scores_path = (fs::path(cfg.out_dir) / "scores.jsonl").string();
    write_text(scores_path, out_lines);

    ordered_json summary;
    for (const auto& [kind, sum] : kind_sums) {
        const double mean = sum / static_cast<double>(preds.size());
        summary[std::string("mean_") + reward_kind_name(kind)] = mean;
        std::printf("mean %s %.6f\n", reward_kind_name(kind),
                    sum / static_cast<double>(preds.size()));
    }
    const double mean_composite = composite_sum / static_cast<double>(preds.size());
    summary["mean_composite"] = mean_composite;
    summary["pairs"] = preds.size();
    std::printf("mean composite %.6f\n", mean_composite);
    write_manifest(cfg, "score", ordered_json{{"summary", summary}});
    return 0;
}

int cmd_train(const RunConfig& cfg) {
    validate(cfg);
    ToyPolicy policy(load_grammar(cfg.grammar_path));

    std::vector<std::string> prompts;
    for (const GrammarContext& ctx : policy.contexts()) prompts.push_back(ctx.id);

    std::unique_ptr<JudgeGateway> gateway_holder;
    const RewardScorer scorer(preset_weights(cfg.preset),
                              gateway_for_rewards(cfg, gateway_holder));
    RewardFn reward_fn = [&](const std::string& context, const std::string& completion) {
        return scorer.score(completion, policy.gold_of(context), "").composite;
    };

    GrpoTrainer trainer(policy, prompts, reward_fn, cfg.grpo);

    ordered_json metrics = ordered_json::array();
    double baseline = 0.0, final_reward = 0.0;
    for (int s = 0; s < cfg.grpo.steps; ++s) {
        const GrpoStepResult result = trainer.step();
        if (s == 0) baseline = result.mean_reward;
        final_reward = result.mean_reward;
        ordered_json row;
        row["step"] = s;
        row["objective"] = result.objective;
        row["kl"] = result.kl;
        row["clip_fraction"] = result.clip_fraction;
        row["mean_reward"] = result.mean_reward;
        metrics.push_back(std::move(row));
    }

    fs::create_directories(cfg.out_dir);
    ordered_json extra;
    extra["metrics"] = std::move(metrics);
    if (cfg.grpo.steps > 0) {
        ordered_json final_summary;
        final_summary["steps"] = cfg.grpo.steps;
        final_summary["baseline_mean_reward"] = baseline;
        final_summary["final_mean_reward"] = final_reward;
        final_summary["gain"] = final_reward - baseline;
        extra["final"] = std::move(final_summary);
    }
    write_manifest(cfg, "train", extra);
    write_text((fs::path(cfg.out_dir) / "policy.json").string(),
               policy.params_to_json().dump(2) + "\n");

    if (cfg.grpo.steps > 0) {
        std::printf("train: steps=%d baseline=%.4f final=%.4f gain=%+.4f\n", cfg.grpo.steps,
                    baseline, final_reward, final_reward - baseline);
    } else {
        std::printf("train: steps=0 (config-only manifest written)\n");
    }
    return 0;
}

struct SqlPair {
    std::string schema;
    std::string instruction;
    std::string gold_sql;
};

std::vector<SqlPair> read_pairs(const std::string& path) {
    std::ifstream in(path);
    if (!in) raise(Errc::io_error, "cannot open " + path);
    std::vector<SqlPair> pairs;
    std::string line;
    std::size_t line_no = 0;
    bool saw_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
        json doc = json::parse(line, nullptr, false);
        if (doc.is_discarded()) {
            raise(Errc::schema_violation,
                  path + ": line " + std::to_string(line_no) + " is not valid JSON");
        }
        if (!saw_header) {
            if (doc.value("format", "") != "sql-pairs" || doc.value("version", -1) != 1) {
                raise(Errc::schema_violation, path + ": line 1 must be a sql-pairs v1 header");
            }
            saw_header = true;
            continue;
        }
        try {
            pairs.push_back({doc.at("schema").get<std::string>(),
                             doc.at("instruction").get<std::string>(),
                             doc.value("gold_sql", "")});
        } catch (const json::exception& e) {
            raise(Errc::schema_violation,
                  path + ": line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    if (!saw_header) raise(Errc::schema_violation, path + ": empty file (missing header line)");
    return pairs;
}

int cmd_synth(const RunConfig& cfg, const std::string& pairs_path) {
    validate(cfg);
    const std::vector<SqlPair> pairs = read_pairs(pairs_path);
    std::unique_ptr<JudgeGateway> gateway = make_gateway(cfg);
    const std::string generator =
        cfg.gateway_mode == "http" ? cfg.judge_model : cfg.gateway_mode;
    const std::string timestamp = utc_timestamp();

    std::vector<CotRecord> records;
    for (const SqlPair& pair : pairs) {
        CotRecord record;
        record.schema = pair.schema;
        record.instruction = pair.instruction;
        record.gold_sql = pair.gold_sql;
        record.provenance = {generator, timestamp};
        try {
            JudgeRequest request = build_generation_request(pair.schema, pair.instruction);
            request.gold = pair.gold_sql;  // lets the offline transport answer deterministically
            const JudgeVerdict verdict = gateway->submit(request);
            record.trace = verdict.text.substr(0, verdict.text.find("<sql>"));
            record.sql = extract_sql(verdict.text);
        } catch (const Error& e) {
            if (e.code() != Errc::transport_error && e.code() != Errc::malformed_response &&
                e.code() != Errc::no_sql_region && e.code() != Errc::missing_slot) {
                throw;
            }
            // generation failed: record kept with empty sql, quarantined downstream
        }
        records.push_back(std::move(record));
    }

    FilterResult filtered = verify_and_filter(std::move(records), *gateway);

    fs::create_directories(cfg.out_dir);
    write_cot_records((fs::path(cfg.out_dir) / "cot_all.jsonl").string(), filtered.all);
    write_cot_records((fs::path(cfg.out_dir) / "cot_kept.jsonl").string(), filtered.kept);

    ordered_json stats;
    stats["total"] = filtered.stats.total;
    stats["passed"] = filtered.stats.passed;
    stats["failed"] = filtered.stats.failed;
    stats["quarantined"] = filtered.stats.quarantined;
    stats["pass_rate"] = filtered.stats.pass_rate();
    write_manifest(cfg, "synth", ordered_json{{"stats", stats}});

    std::printf("synth: total=%zu passed=%zu failed=%zu quarantined=%zu pass_rate=%.4f\n",
                filtered.stats.total, filtered.stats.passed, filtered.stats.failed,
                filtered.stats.quarantined, filtered.stats.pass_rate());
    return 0;
}

int cmd_eval(const RunConfig& cfg, const std::string& eval_path, const std::string& task_name) {
    validate(cfg);
    const EvalTask task = eval_task_from_string(task_name);
    std::unique_ptr<JudgeGateway> gateway = make_gateway(cfg);
    const EvalResult result = score_predictions(eval_path, task, *gateway);

    fs::create_directories(cfg.out_dir);
    const std::string verdicts_path = (fs::path(cfg.out_dir) / "eval_verdicts.jsonl").string();
    write_eval_records(verdicts_path, result.records);

    ordered_json summary;
    summary["task"] = eval_task_name(task);
    summary["records"] = result.records.size();
    summary["accuracy"] = result.accuracy;
    write_manifest(cfg, "eval", ordered_json{{"summary", summary}});

    std::printf("accuracy: %.1f%%\n", result.accuracy * 100.0);
    return 0;
}

// ---------------------------------------------------------------------------
// Flag plumbing: defaults <- config file <- explicit flags
// ---------------------------------------------------------------------------

struct CliFlags {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    std::optional<std::string> preset;
    std::optional<std::string> gateway_mode;
    std::optional<std::string> mock_script;
    std::optional<std::string> judge_url;
    std::optional<std::string> judge_model;
    std::optional<std::string> cache_path;
    std::optional<std::string> grammar;
    std::optional<int> steps;
    std::optional<int> group_size;
    std::optional<double> learning_rate;
    std::optional<double> clip_epsilon;
    std::optional<double> kl_coeff;
    std::optional<double> std_floor;
    std::optional<int> refresh_interval;
};

void add_common_flags(CLI::App* cmd, CliFlags& flags) {
    cmd->add_option("--config", flags.config_path, "JSON config file");
    cmd->add_option("--seed", flags.seed, "root RNG seed");
    cmd->add_option("--out", flags.out_dir, "output directory");
    cmd->add_option("--preset", flags.preset, "reward preset: best-one | best-two | best-four");
    cmd->add_option("--gateway", flags.gateway_mode, "judge gateway: local | mock | http");
    cmd->add_option("--mock-script", flags.mock_script, "scripted responses for mock gateway");
    cmd->add_option("--judge-url", flags.judge_url, "judge endpoint base URL (http mode)");
    cmd->add_option("--judge-model", flags.judge_model, "judge model name (http mode)");
    cmd->add_option("--cache", flags.cache_path, "judge response cache file");
}

RunConfig resolve_config(const CliFlags& flags) {
    RunConfig cfg = load_run_config(flags.config_path);
    if (flags.seed) cfg.grpo.seed = *flags.seed;
    if (flags.out_dir) cfg.out_dir = *flags.out_dir;
    if (flags.preset) cfg.preset = *flags.preset;
    if (flags.gateway_mode) cfg.gateway_mode = *flags.gateway_mode;
    if (flags.mock_script) cfg.mock_script_path = *flags.mock_script;
    if (flags.judge_url) cfg.judge_base_url = *flags.judge_url;
    if (flags.judge_model) cfg.judge_model = *flags.judge_model;
    if (flags.cache_path) cfg.judge_cache_path = *flags.cache_path;
    if (flags.grammar) cfg.grammar_path = *flags.grammar;
    if (flags.steps) cfg.grpo.steps = *flags.steps;
    if (flags.group_size) cfg.grpo.group_size = *flags.group_size;
    if (flags.learning_rate) cfg.grpo.learning_rate = *flags.learning_rate;
    if (flags.clip_epsilon) cfg.grpo.clip_epsilon = *flags.clip_epsilon;
    if (flags.kl_coeff) cfg.grpo.kl_coeff = *flags.kl_coeff;
    if (flags.std_floor) cfg.grpo.std_floor = *flags.std_floor;
    if (flags.refresh_interval) cfg.grpo.old_refresh_interval = *flags.refresh_interval;
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"sqlrl: GRPO training, Text-to-SQL rewards, judge evaluation, CoT data pipeline"};
    app.require_subcommand(1);

    CliFlags flags;

    CLI::App* score = app.add_subcommand("score", "score a prediction file against a gold file");
    std::string pred_path, gold_path;
    score->add_option("--pred", pred_path, "predictions, one SQL query per line")->required();
    score->add_option("--gold", gold_path, "references, one SQL query per line")->required();
    add_common_flags(score, flags);

    CLI::App* train = app.add_subcommand("train", "GRPO training on a toy grammar task");
    train->add_option("--grammar", flags.grammar, "grammar task file");
    train->add_option("--steps", flags.steps, "training steps");
    train->add_option("--group-size", flags.group_size, "candidates per prompt (G)");
    train->add_option("--lr", flags.learning_rate, "learning rate");
    train->add_option("--epsilon", flags.clip_epsilon, "clip threshold");
    train->add_option("--beta", flags.kl_coeff, "KL penalty coefficient");
    train->add_option("--std-floor", flags.std_floor, "advantage std floor");
    train->add_option("--refresh-interval", flags.refresh_interval,
                      "steps between old-policy refreshes");
    add_common_flags(train, flags);

    CLI::App* synth = app.add_subcommand("synth", "generate, verify, and filter CoT records");
    std::string pairs_path;
    synth->add_option("--pairs", pairs_path, "sql-pairs input file")->required();
    add_common_flags(synth, flags);

    CLI::App* eval = app.add_subcommand("eval", "judge-scored accuracy of a prediction file");
    std::string eval_path, task_name = "text2sql";
    eval->add_option("--file", eval_path, "eval-records input file")->required();
    eval->add_option("--task", task_name, "text2sql | tabular_qa");
    add_common_flags(eval, flags);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        const RunConfig cfg = resolve_config(flags);
        if (score->parsed()) return cmd_score(cfg, pred_path, gold_path);
        if (train->parsed()) return cmd_train(cfg);
        if (synth->parsed()) return cmd_synth(cfg, pairs_path);
        if (eval->parsed()) return cmd_eval(cfg, eval_path, task_name);
        std::cerr << "error: no subcommand selected\n";
        return 1;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.code() == Errc::transport_error ? 3 : 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
