#include "sqlrl/datapipe.hpp"

#include <cctype>
#include <fstream>
#include <iostream>

#include "sqlrl/error.hpp"

namespace sqlrl {

using nlohmann::json;
using nlohmann::ordered_json;

const char* cot_verdict_name(CotVerdict v) {
    switch (v) {
        case CotVerdict::unverified: return "unverified";
        case CotVerdict::correct: return "correct";
        case CotVerdict::wrong: return "wrong";
    }
    return "?";
}

CotVerdict cot_verdict_from_string(std::string_view name) {
    if (name == "unverified") return CotVerdict::unverified;
    if (name == "correct") return CotVerdict::correct;
    if (name == "wrong") return CotVerdict::wrong;
    raise(Errc::schema_violation, "unknown verdict '" + std::string(name) + "'");
}

const char* eval_task_name(EvalTask task) {
    switch (task) {
        case EvalTask::text2sql: return "text2sql";
        case EvalTask::tabular_qa: return "tabular_qa";
    }
    return "?";
}

EvalTask eval_task_from_string(std::string_view name) {
    if (name == "text2sql") return EvalTask::text2sql;
    if (name == "tabular_qa") return EvalTask::tabular_qa;
    raise(Errc::bad_config, "unknown eval task '" + std::string(name) + "'");
}

JudgeRequest build_generation_request(const std::string& schema,
                                      const std::string& instruction) {
    return make_cot_generate_request(schema, instruction);
}

namespace {

std::string trim_copy(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

}  // namespace

std::string extract_sql(const std::string& raw_generation) {
    constexpr std::string_view kOpen = "<sql>";
    constexpr std::string_view kClose = "</sql>";
    const std::size_t open = raw_generation.find(kOpen);
    if (open == std::string::npos) {
        raise(Errc::no_sql_region, "generation has no <sql> region");
    }
    const std::size_t begin = open + kOpen.size();
    const std::size_t close = raw_generation.find(kClose, begin);
    if (close == std::string::npos) {
        raise(Errc::no_sql_region, "generation's <sql> region is never closed");
    }
    if (raw_generation.find(kOpen, close + kClose.size()) != std::string::npos) {
        std::cerr << "warning: generation contains more than one <sql> region; "
                     "keeping the first\n";
    }
    return trim_copy(std::string_view(raw_generation).substr(begin, close - begin));
}

FilterResult verify_and_filter(std::vector<CotRecord> records, JudgeGateway& gateway) {
    FilterResult result;
    result.stats.total = records.size();
    for (CotRecord& record : records) {
        record.verdict = CotVerdict::unverified;
        try {
            const JudgeRequest request =
                make_cot_verify_request(record.sql, record.schema, record.gold_sql);
            const JudgeVerdict verdict = gateway.submit(request);
            record.verdict = (verdict.verify == VerifyVerdict::correct) ? CotVerdict::correct
                                                                        : CotVerdict::wrong;
        } catch (const Error& e) {
            if (e.code() != Errc::transport_error && e.code() != Errc::malformed_response &&
                e.code() != Errc::missing_slot) {
                throw;
            }
            // quarantined: verdict stays unverified
        }
        switch (record.verdict) {
            case CotVerdict::correct:
                ++result.stats.passed;
                result.kept.push_back(record);
                break;
            case CotVerdict::wrong:
                ++result.stats.failed;
                break;
            case CotVerdict::unverified:
                ++result.stats.quarantined;
                break;
        }
        result.all.push_back(std::move(record));
    }
    return result;
}

EvalResult score_predictions(const std::string& path, EvalTask task, JudgeGateway& gateway) {
    EvalResult result;
    result.records = read_eval_records(path);
    if (result.records.empty()) {
        raise(Errc::schema_violation, "eval file " + path + " contains no records");
    }
    std::size_t correct = 0;
    for (EvalRecord& record : result.records) {
        record.task = task;
        const JudgeRequest request =
            task == EvalTask::text2sql
                ? make_exec_proxy_request(record.prediction, record.input, record.gold)
                : make_qa_accuracy_request(record.input, record.prediction, record.gold);
        const JudgeVerdict verdict = gateway.submit(request);
        record.judged = verdict.pass;
        record.judge_raw = verdict.raw;
        if (verdict.pass) ++correct;
    }
    result.accuracy = static_cast<double>(correct) / static_cast<double>(result.records.size());
    return result;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

namespace {

constexpr int kFormatVersion = 1;
constexpr std::string_view kCotFormat = "cot-records";
constexpr std::string_view kEvalFormat = "eval-records";

void check_header(const json& doc, std::string_view format, const std::string& path) {
    if (!doc.is_object() || doc.value("format", "") != format ||
        doc.value("version", -1) != kFormatVersion) {
        raise(Errc::schema_violation,
              path + ": line 1 is not a '" + std::string(format) + "' version " +
                  std::to_string(kFormatVersion) + " header");
    }
}

json parse_line(const std::string& line, std::size_t line_no, const std::string& path) {
    json doc = json::parse(line, nullptr, false);
    if (doc.is_discarded()) {
        raise(Errc::schema_violation,
              path + ": line " + std::to_string(line_no) + " is not valid JSON");
    }
    return doc;
}

template <typename Record, typename FromJson>
std::vector<Record> read_records(const std::string& path, std::string_view format,
                                 FromJson from_json_fn) {
    std::ifstream in(path);
    if (!in) raise(Errc::io_error, "cannot open " + path);
    std::vector<Record> records;
    std::string line;
    std::size_t line_no = 0;
    bool saw_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim_copy(line).empty()) continue;
        if (!saw_header) {
            check_header(parse_line(line, line_no, path), format, path);
            saw_header = true;
            continue;
        }
        try {
            records.push_back(from_json_fn(parse_line(line, line_no, path)));
        } catch (const json::exception& e) {
            raise(Errc::schema_violation,
                  path + ": line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    if (!saw_header) {
        raise(Errc::schema_violation, path + ": empty file (missing header line)");
    }
    return records;
}

template <typename Record, typename ToJson>
void write_records(const std::string& path, std::string_view format,
                   const std::vector<Record>& records, ToJson to_json_fn) {
    std::ofstream out(path, std::ios::binary);
    if (!out) raise(Errc::io_error, "cannot write " + path);
    ordered_json header;
    header["format"] = format;
    header["version"] = kFormatVersion;
    out << header.dump() << "\n";
    for (const Record& record : records) {
        out << to_json_fn(record).dump() << "\n";
    }
    if (!out) raise(Errc::io_error, "short write to " + path);
}

}  // namespace

ordered_json to_json(const CotRecord& record) {
    ordered_json doc;
    doc["schema"] = record.schema;
    doc["instruction"] = record.instruction;
    doc["trace"] = record.trace;
    doc["sql"] = record.sql;
    doc["gold_sql"] = record.gold_sql;
    doc["verdict"] = cot_verdict_name(record.verdict);
    doc["generator"] = record.provenance.generator;
    doc["timestamp"] = record.provenance.timestamp;
    return doc;
}

CotRecord cot_record_from_json(const nlohmann::json& doc) {
    CotRecord record;
    record.schema = doc.at("schema").get<std::string>();
    record.instruction = doc.at("instruction").get<std::string>();
    record.trace = doc.value("trace", "");
    record.sql = doc.value("sql", "");
    record.gold_sql = doc.value("gold_sql", "");
    record.verdict = cot_verdict_from_string(doc.value("verdict", "unverified"));
    record.provenance.generator = doc.value("generator", "");
    record.provenance.timestamp = doc.value("timestamp", "");
    return record;
}

ordered_json to_json(const EvalRecord& record) {
    ordered_json doc;
    doc["task"] = eval_task_name(record.task);
    doc["input"] = record.input;
    doc["prediction"] = record.prediction;
    doc["gold"] = record.gold;
    if (record.judged.has_value()) {
        doc["judged"] = *record.judged;
        doc["judge_raw"] = record.judge_raw;
    }
    return doc;
}

EvalRecord eval_record_from_json(const nlohmann::json& doc) {
    EvalRecord record;
    record.task = eval_task_from_string(doc.value("task", "text2sql"));
    record.input = doc.at("input").get<std::string>();
    record.prediction = doc.at("prediction").get<std::string>();
    record.gold = doc.at("gold").get<std::string>();
    if (doc.contains("judged")) {
        record.judged = doc.at("judged").get<bool>();
        record.judge_raw = doc.value("judge_raw", "");
    }
    return record;
}

void write_cot_records(const std::string& path, const std::vector<CotRecord>& records) {
    write_records(path, kCotFormat, records,
                  [](const CotRecord& r) { return to_json(r); });
}

std::vector<CotRecord> read_cot_records(const std::string& path) {
    return read_records<CotRecord>(path, kCotFormat,
                                   [](const json& doc) { return cot_record_from_json(doc); });
}

void write_eval_records(const std::string& path, const std::vector<EvalRecord>& records) {
    write_records(path, kEvalFormat, records,
                  [](const EvalRecord& r) { return to_json(r); });
}

std::vector<EvalRecord> read_eval_records(const std::string& path) {
    return read_records<EvalRecord>(path, kEvalFormat,
                                    [](const json& doc) { return eval_record_from_json(doc); });
}

}  // namespace sqlrl
