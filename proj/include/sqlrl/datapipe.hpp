#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "sqlrl/judge.hpp"

namespace sqlrl {

enum class CotVerdict { unverified, correct, wrong };
const char* cot_verdict_name(CotVerdict v);
CotVerdict cot_verdict_from_string(std::string_view name);

struct CotProvenance {
    std::string generator;  // model id or "local"
    std::string timestamp;  // ISO-8601 UTC
};

/// One synthetic chain-of-thought example: the generation inputs, the
/// reasoning trace, the extracted SQL, and the verifier's verdict.
struct CotRecord {
    std::string schema;
    std::string instruction;
    std::string trace;     // reasoning text preceding the <sql> region
    std::string sql;       // content of the first <sql>...</sql> region
    std::string gold_sql;  // reference the verifier compares against
    CotVerdict verdict = CotVerdict::unverified;
    CotProvenance provenance;
};

/// Prompt asking the generator for a reasoning trace plus a delimited query.
JudgeRequest build_generation_request(const std::string& schema, const std::string& instruction);

/// Content of the first <sql>...</sql> region, trimmed. A second region is
/// ignored with a warning on stderr. Throws Errc::no_sql_region.
std::string extract_sql(const std::string& raw_generation);

struct FilterStats {
    std::size_t total = 0;
    std::size_t passed = 0;
    std::size_t failed = 0;
    std::size_t quarantined = 0;  // gateway errors: verdict left unverified
    double pass_rate() const {
        return total == 0 ? 0.0 : static_cast<double>(passed) / static_cast<double>(total);
    }
};

struct FilterResult {
    std::vector<CotRecord> kept;  // verdict == correct, input order preserved
    std::vector<CotRecord> all;   // every input record with its updated verdict
    FilterStats stats;            // passed + failed + quarantined == total
};

/// Judge every record via a cot_verify prompt. Records the gateway fails on
/// (transport, malformed response, unbuildable prompt) are quarantined, not
/// dropped.
FilterResult verify_and_filter(std::vector<CotRecord> records, JudgeGateway& gateway);

enum class EvalTask { text2sql, tabular_qa };
const char* eval_task_name(EvalTask task);
EvalTask eval_task_from_string(std::string_view name);

struct EvalRecord {
    EvalTask task = EvalTask::text2sql;
    std::string input;   // text2sql: schema text; tabular_qa: the question
    std::string prediction;
    std::string gold;
    std::optional<bool> judged;  // set only once a gateway verdict arrived
    std::string judge_raw;
};

struct EvalResult {
    double accuracy = 0.0;  // judged-true / total
    std::vector<EvalRecord> records;
};

/// Read an eval-record file and judge every record (exec_proxy for text2sql,
/// qa_accuracy for tabular_qa). Throws Errc::schema_violation on malformed or
/// empty input; gateway errors propagate.
EvalResult score_predictions(const std::string& path, EvalTask task, JudgeGateway& gateway);

// --- line-oriented record files (versioned header + one JSON object per line)

nlohmann::ordered_json to_json(const CotRecord& record);
CotRecord cot_record_from_json(const nlohmann::json& doc);
nlohmann::ordered_json to_json(const EvalRecord& record);
EvalRecord eval_record_from_json(const nlohmann::json& doc);

void write_cot_records(const std::string& path, const std::vector<CotRecord>& records);
std::vector<CotRecord> read_cot_records(const std::string& path);
void write_eval_records(const std::string& path, const std::vector<EvalRecord>& records);
std::vector<EvalRecord> read_eval_records(const std::string& path);

}  // namespace sqlrl
