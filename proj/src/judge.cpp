#include "sqlrl/judge.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>
#include <thread>

#include "httplib.h"
#include "json.hpp"

#include "sqlrl/error.hpp"

namespace sqlrl {

using nlohmann::json;

const char* prompt_kind_name(PromptKind kind) {
    switch (kind) {
        case PromptKind::cot_generate: return "cot_generate";
        case PromptKind::cot_verify: return "cot_verify";
        case PromptKind::edit_count: return "edit_count";
        case PromptKind::class_grade: return "class_grade";
        case PromptKind::exec_proxy: return "exec_proxy";
        case PromptKind::qa_accuracy: return "qa_accuracy";
    }
    return "?";
}

// ---------------------------------------------------------------------------
// Prompt templates
// ---------------------------------------------------------------------------

namespace {

constexpr std::string_view kCotGenerateTemplate =
    R"(You are a SQL expert. Below are SQL table schemas paired with instructions that describe a specific task. Using valid SQLite syntax, write a response that appropriately completes the request for the provided tables.

SCHEMA: {schema}

INSTRUCTIONS: {instruction}

When answering, provide reasoning for the SQL query you create using the following template:

<sql> Write the SQL query here, ensuring it adheres to SQLite syntax and effectively accomplishes the task described in the instructions. </sql>)";

constexpr std::string_view kCotVerifyTemplate =
    R"(You are an SQL expert, and your task is to evaluate whether the SQL query below is correct based on the provided schema and the correct SQL reference.

SQL Query: {candidate_sql}

Schema: {schema}

Correct SQL: {correct_sql}

Return ONLY "Correct" or "Wrong".)";

constexpr std::string_view kEditCountTemplate =
    R"(You are an SQL expert. Count how many changes you need to make to get the following predicted queries correct.

Predicted Queries (one per line):
{queries}

For reference, use this Schema: {schema}.

Here is the correct query:
{true_query}

You should count the number of Orthographic elements you need to change from the predicted queries to the correct query.

ONLY RETURN a JSON object with a single 'scores' field containing a list of {num_queries} numbers reflecting the number of changes needed for each predicted query.)";

constexpr std::string_view kClassGradeTemplate =
    R"(Compare these SQL queries to the correct query and grade each one as: 'Very bad', 'Bad', 'Above average', 'Good', or 'Excellent'.
Use the following grading system, and the correct query as reference :

Correct Query: {true_query}

1. Excellent: this is only given when the SQL query is perfect and matches {true_query}

2. Good: This is when there is a grammar mistake in the query

3. Above average: This is when the query is mostly correct but gets a logical step wrong in the query

4. Bad: Makes more than one mistake in the query

5. Very bad: does not produce a query or varies significantly from the correct query

Queries to grade:
{queries}

{format_instructions})";

constexpr std::string_view kExecProxyTemplate =
    R"(You are an SQL expert acting as an execution engine. Decide whether the predicted SQL query would return the same result as the reference query when run against the schema below.

Schema: {schema}

Predicted SQL: {candidate_sql}

Reference SQL: {correct_sql}

Return ONLY "true" or "false".)";

constexpr std::string_view kQaAccuracyTemplate =
    R"(You are a careful grader for tabular question answering. Decide whether the predicted answer matches the reference answer for the question below.

Question: {question}

Predicted Answer: {prediction}

Reference Answer: {gold_answer}

Return ONLY "true" or "false".)";

bool is_slot_char(char c) {
    return (c >= 'a' && c <= 'z') || c == '_';
}

std::string trimmed(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

std::string lowered(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

}  // namespace

std::string_view prompt_template(PromptKind kind) {
    switch (kind) {
        case PromptKind::cot_generate: return kCotGenerateTemplate;
        case PromptKind::cot_verify: return kCotVerifyTemplate;
        case PromptKind::edit_count: return kEditCountTemplate;
        case PromptKind::class_grade: return kClassGradeTemplate;
        case PromptKind::exec_proxy: return kExecProxyTemplate;
        case PromptKind::qa_accuracy: return kQaAccuracyTemplate;
    }
    return {};
}

std::string render_prompt(PromptKind kind, const SlotMap& slots) {
    const std::string_view tmpl = prompt_template(kind);
    std::string out;
    out.reserve(tmpl.size());
    std::size_t i = 0;
    while (i < tmpl.size()) {
        if (tmpl[i] != '{') {
            out.push_back(tmpl[i]);
            ++i;
            continue;
        }
        std::size_t j = i + 1;
        while (j < tmpl.size() && is_slot_char(tmpl[j])) ++j;
        if (j >= tmpl.size() || tmpl[j] != '}' || j == i + 1) {
            out.push_back(tmpl[i]);  // a brace that is not a placeholder
            ++i;
            continue;
        }
        const std::string name(tmpl.substr(i + 1, j - i - 1));
        const auto it = slots.find(name);
        if (it == slots.end() || it->second.empty()) {
            raise(Errc::missing_slot, "prompt kind " + std::string(prompt_kind_name(kind)) +
                                          " needs non-empty slot '" + name + "'");
        }
        out += it->second;
        i = j + 1;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Request builders
// ---------------------------------------------------------------------------

namespace {

std::string joined_lines(const std::vector<std::string>& items) {
    std::string out;
    for (const std::string& item : items) {
        if (!out.empty()) out.push_back('\n');
        out += item;
    }
    return out;
}

}  // namespace

JudgeRequest make_cot_generate_request(const std::string& schema, const std::string& instruction) {
    JudgeRequest req;
    req.kind = PromptKind::cot_generate;
    req.schema = schema;
    req.prompt = render_prompt(req.kind, {{"schema", schema}, {"instruction", instruction}});
    return req;
}

JudgeRequest make_cot_verify_request(const std::string& candidate_sql, const std::string& schema,
                                     const std::string& correct_sql) {
    JudgeRequest req;
    req.kind = PromptKind::cot_verify;
    req.candidates = {candidate_sql};
    req.schema = schema;
    req.gold = correct_sql;
    req.prompt = render_prompt(req.kind, {{"candidate_sql", candidate_sql},
                                          {"schema", schema},
                                          {"correct_sql", correct_sql}});
    return req;
}

JudgeRequest make_edit_count_request(const std::vector<std::string>& candidates,
                                     const std::string& schema, const std::string& true_query) {
    JudgeRequest req;
    req.kind = PromptKind::edit_count;
    req.candidates = candidates;
    req.schema = schema;
    req.gold = true_query;
    req.prompt = render_prompt(req.kind, {{"queries", joined_lines(candidates)},
                                          {"schema", schema},
                                          {"true_query", true_query},
                                          {"num_queries", std::to_string(candidates.size())}});
    return req;
}

JudgeRequest make_class_grade_request(const std::vector<std::string>& candidates,
                                      const std::string& true_query) {
    JudgeRequest req;
    req.kind = PromptKind::class_grade;
    req.candidates = candidates;
    req.gold = true_query;
    const std::string format_instructions =
        "Return ONLY a JSON object with a single 'grades' field containing a list of " +
        std::to_string(candidates.size()) +
        " strings, each one of 'Very bad', 'Bad', 'Above average', 'Good', or 'Excellent'.";
    req.prompt = render_prompt(req.kind, {{"true_query", true_query},
                                          {"queries", joined_lines(candidates)},
                                          {"format_instructions", format_instructions}});
    return req;
}

JudgeRequest make_exec_proxy_request(const std::string& candidate_sql, const std::string& schema,
                                     const std::string& correct_sql) {
    JudgeRequest req;
    req.kind = PromptKind::exec_proxy;
    req.candidates = {candidate_sql};
    req.schema = schema;
    req.gold = correct_sql;
    req.prompt = render_prompt(req.kind, {{"candidate_sql", candidate_sql},
                                          {"schema", schema},
                                          {"correct_sql", correct_sql}});
    return req;
}

JudgeRequest make_qa_accuracy_request(const std::string& question, const std::string& prediction,
                                      const std::string& gold_answer) {
    JudgeRequest req;
    req.kind = PromptKind::qa_accuracy;
    req.candidates = {prediction};
    req.gold = gold_answer;
    req.prompt = render_prompt(req.kind, {{"question", question},
                                          {"prediction", prediction},
                                          {"gold_answer", gold_answer}});
    return req;
}

// ---------------------------------------------------------------------------
// Response parsing: strict first, salvage second
// ---------------------------------------------------------------------------

namespace {

std::optional<json> try_parse_json(const std::string& text) {
    json doc = json::parse(text, nullptr, false);
    if (doc.is_discarded()) return std::nullopt;
    return doc;
}

// Fenced ```...``` block, else the outermost {...} span.
std::optional<json> salvage_json(const std::string& body) {
    const std::size_t fence = body.find("```");
    if (fence != std::string::npos) {
        std::size_t start = fence + 3;
        while (start < body.size() && !std::isspace(static_cast<unsigned char>(body[start])) &&
               body[start] != '{') {
            ++start;  // skip a language tag such as json
        }
        const std::size_t end = body.find("```", start);
        if (end != std::string::npos) {
            if (auto doc = try_parse_json(trimmed(body.substr(start, end - start)))) return doc;
        }
    }
    const std::size_t open = body.find('{');
    const std::size_t close = body.rfind('}');
    if (open != std::string::npos && close != std::string::npos && close > open) {
        if (auto doc = try_parse_json(body.substr(open, close - open + 1))) return doc;
    }
    return std::nullopt;
}

json parse_json_or_raise(const std::string& body) {
    if (auto doc = try_parse_json(trimmed(body))) return *doc;
    if (auto doc = salvage_json(body)) return *doc;
    raise(Errc::malformed_response, "response is not JSON", body);
}

std::vector<std::string> alpha_words(const std::string& body) {
    std::vector<std::string> words;
    std::string cur;
    for (char c : body) {
        if (std::isalpha(static_cast<unsigned char>(c))) {
            cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        } else if (!cur.empty()) {
            words.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) words.push_back(std::move(cur));
    return words;
}

// Match a one-word answer: exact trimmed token first, then a scan for exactly
// one of the two target words appearing in the body.
int pick_binary_word(const std::string& body, const std::string& a, const std::string& b) {
    std::string strict = lowered(trimmed(body));
    while (!strict.empty() && (strict.back() == '.' || strict.back() == '"' ||
                               strict.back() == '\'')) {
        strict.pop_back();
    }
    while (!strict.empty() && (strict.front() == '"' || strict.front() == '\'')) {
        strict.erase(strict.begin());
    }
    if (strict == a) return 0;
    if (strict == b) return 1;

    bool has_a = false, has_b = false;
    for (const std::string& w : alpha_words(body)) {
        if (w == a) has_a = true;
        if (w == b) has_b = true;
    }
    if (has_a && !has_b) return 0;
    if (has_b && !has_a) return 1;
    return -1;
}

std::vector<std::int64_t> parse_scores(const json& doc, std::size_t expected,
                                       const std::string& body) {
    if (!doc.is_object() || !doc.contains("scores") || !doc["scores"].is_array()) {
        raise(Errc::malformed_response, "expected an object with a 'scores' array", body);
    }
    std::vector<std::int64_t> counts;
    for (const auto& v : doc["scores"]) {
        if (!v.is_number()) {
            raise(Errc::malformed_response, "non-numeric entry in 'scores'", body);
        }
        const double x = v.get<double>();
        if (x < 0 || x != std::floor(x)) {
            raise(Errc::malformed_response, "edit counts must be non-negative integers", body);
        }
        counts.push_back(static_cast<std::int64_t>(x));
    }
    if (counts.size() != expected) {
        raise(Errc::malformed_response,
              "expected " + std::to_string(expected) + " scores, got " +
                  std::to_string(counts.size()),
              body);
    }
    return counts;
}

std::vector<JudgeClass> parse_grades(const json& doc, std::size_t expected,
                                     const std::string& body) {
    if (!doc.is_object() || !doc.contains("grades") || !doc["grades"].is_array()) {
        raise(Errc::malformed_response, "expected an object with a 'grades' array", body);
    }
    std::vector<JudgeClass> classes;
    for (const auto& v : doc["grades"]) {
        if (!v.is_string()) {
            raise(Errc::malformed_response, "non-string entry in 'grades'", body);
        }
        try {
            classes.push_back(judge_class_from_string(v.get<std::string>()));
        } catch (const Error&) {
            raise(Errc::malformed_response, "unknown grade '" + v.get<std::string>() + "'", body);
        }
    }
    if (classes.size() != expected) {
        raise(Errc::malformed_response,
              "expected " + std::to_string(expected) + " grades, got " +
                  std::to_string(classes.size()),
              body);
    }
    return classes;
}

}  // namespace

JudgeVerdict parse_verdict(const JudgeRequest& request, const std::string& body) {
    JudgeVerdict verdict;
    verdict.kind = request.kind;
    verdict.raw = body;
    switch (request.kind) {
        case PromptKind::cot_generate: {
            if (trimmed(body).empty()) {
                raise(Errc::malformed_response, "empty generation", body);
            }
            verdict.text = body;
            return verdict;
        }
        case PromptKind::cot_verify: {
            const int pick = pick_binary_word(body, "correct", "wrong");
            if (pick < 0) {
                raise(Errc::malformed_response, "expected Correct or Wrong", body);
            }
            verdict.verify = (pick == 0) ? VerifyVerdict::correct : VerifyVerdict::wrong;
            return verdict;
        }
        case PromptKind::edit_count: {
            verdict.edit_counts =
                parse_scores(parse_json_or_raise(body), request.candidates.size(), body);
            return verdict;
        }
        case PromptKind::class_grade: {
            verdict.classes =
                parse_grades(parse_json_or_raise(body), request.candidates.size(), body);
            return verdict;
        }
        case PromptKind::exec_proxy:
        case PromptKind::qa_accuracy: {
            const int pick = pick_binary_word(body, "true", "false");
            if (pick < 0) {
                raise(Errc::malformed_response, "expected true or false", body);
            }
            verdict.pass = (pick == 0);
            return verdict;
        }
    }
    raise(Errc::malformed_response, "unknown prompt kind", body);
}

// ---------------------------------------------------------------------------
// Transports
// ---------------------------------------------------------------------------

void MockTransport::script(std::string body, int status) {
    std::lock_guard<std::mutex> lock(mu_);
    scripted_.push_back({status, std::move(body)});
}

void MockTransport::set_handler(std::function<TransportResult(const JudgeRequest&)> handler) {
    std::lock_guard<std::mutex> lock(mu_);
    handler_ = std::move(handler);
}

TransportResult MockTransport::send(const JudgeRequest& request) {
    std::lock_guard<std::mutex> lock(mu_);
    ++calls_;
    if (handler_) return handler_(request);
    if (scripted_.empty()) return {0, "mock transport has no scripted response"};
    TransportResult res = std::move(scripted_.front());
    scripted_.pop_front();
    return res;
}

std::size_t MockTransport::calls() const {
    std::lock_guard<std::mutex> lock(mu_);
    return calls_;
}

namespace {

std::vector<std::string> tokens_or_empty(const std::string& sql) {
    try {
        return parse_sql(sql).token_texts();
    } catch (const Error&) {
        return {};  // unlexable candidate: every gold token counts as an edit
    }
}

std::string canonical_or_raw(const std::string& sql) {
    try {
        return canonical_sql(sql);
    } catch (const Error&) {
        return sql;
    }
}

}  // namespace

TransportResult LocalTransport::send(const JudgeRequest& request) {
    {
        std::lock_guard<std::mutex> lock(mu_);
        ++calls_;
    }
    switch (request.kind) {
        case PromptKind::cot_generate: {
            const std::string sql = request.gold.empty() ? "select 1" : request.gold;
            return {200,
                    "The schema and the instructions determine the query directly.\n<sql> " +
                        sql + " </sql>"};
        }
        case PromptKind::cot_verify: {
            const bool ok = !request.candidates.empty() &&
                            canonical_or_raw(request.candidates[0]) ==
                                canonical_or_raw(request.gold);
            return {200, ok ? "Correct" : "Wrong"};
        }
        case PromptKind::edit_count: {
            const std::vector<std::string> gold_tokens = tokens_or_empty(request.gold);
            json scores = json::array();
            for (const std::string& cand : request.candidates) {
                scores.push_back(token_levenshtein(tokens_or_empty(cand), gold_tokens));
            }
            return {200, json{{"scores", scores}}.dump()};
        }
        case PromptKind::class_grade: {
            const std::vector<std::string> gold_tokens = tokens_or_empty(request.gold);
            json grades = json::array();
            for (const std::string& cand : request.candidates) {
                const std::size_t edits = token_levenshtein(tokens_or_empty(cand), gold_tokens);
                grades.push_back(judge_class_name(local_judge_class(edits)));
            }
            return {200, json{{"grades", grades}}.dump()};
        }
        case PromptKind::exec_proxy: {
            const bool ok = !request.candidates.empty() &&
                            canonical_or_raw(request.candidates[0]) ==
                                canonical_or_raw(request.gold);
            return {200, ok ? "true" : "false"};
        }
        case PromptKind::qa_accuracy: {
            const bool ok = !request.candidates.empty() &&
                            lowered(trimmed(request.candidates[0])) ==
                                lowered(trimmed(request.gold));
            return {200, ok ? "true" : "false"};
        }
    }
    return {0, "unknown prompt kind"};
}

std::size_t LocalTransport::calls() const {
    std::lock_guard<std::mutex> lock(mu_);
    return calls_;
}

HttpTransport::HttpTransport(std::string base_url, std::string model, std::string api_key_env)
    : base_url_(std::move(base_url)), model_(std::move(model)) {
    if (!api_key_env.empty()) {
        if (const char* key = std::getenv(api_key_env.c_str())) api_key_ = key;
    }
}

TransportResult HttpTransport::send(const JudgeRequest& request) {
    httplib::Client client(base_url_);
    client.set_connection_timeout(10, 0);
    client.set_read_timeout(120, 0);
    httplib::Headers headers;
    if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

    const json payload = {
        {"model", model_},
        {"messages", json::array({{{"role", "user"}, {"content", request.prompt}}})},
        {"temperature", 0},
    };
    auto res = client.Post("/v1/chat/completions", headers, payload.dump(), "application/json");
    if (!res) {
        return {0, "connection failure: " + httplib::to_string(res.error())};
    }
    if (res->status < 200 || res->status >= 300) {
        return {res->status, res->body};
    }
    // Unwrap the assistant message; leave the raw body for the parser to
    // reject if the envelope is unexpected.
    if (auto doc = try_parse_json(res->body)) {
        try {
            return {res->status,
                    doc->at("choices").at(0).at("message").at("content").get<std::string>()};
        } catch (const json::exception&) {
        }
    }
    return {res->status, res->body};
}

// ---------------------------------------------------------------------------
// Gateway
// ---------------------------------------------------------------------------

std::uint64_t request_hash(const JudgeRequest& request) {
    std::uint64_t h = 0xCBF29CE484222325ULL;  // FNV-1a 64
    auto feed = [&h](std::string_view text) {
        for (unsigned char c : text) {
            h ^= c;
            h *= 0x100000001B3ULL;
        }
        h ^= 0xFF;  // field separator
        h *= 0x100000001B3ULL;
    };
    feed(prompt_kind_name(request.kind));
    feed(request.prompt);
    for (const std::string& c : request.candidates) feed(c);
    feed(request.schema);
    feed(request.gold);
    return h;
}

namespace {

std::string hash_hex(std::uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace

JudgeGateway::JudgeGateway(std::shared_ptr<Transport> transport, GatewayConfig cfg)
    : transport_(std::move(transport)),
      cfg_(cfg),
      in_flight_(std::max(1, cfg.max_in_flight)) {
    if (!transport_) raise(Errc::bad_config, "gateway needs a transport");
    if (cfg_.max_retries < 0) raise(Errc::bad_config, "max_retries must be >= 0");
    if (cfg_.cache_enabled && !cfg_.cache_path.empty()) {
        std::ifstream in(cfg_.cache_path);
        std::string line;
        while (std::getline(in, line)) {
            if (auto doc = try_parse_json(line)) {
                try {
                    cache_[std::stoull(doc->at("key").get<std::string>(), nullptr, 16)] =
                        doc->at("body").get<std::string>();
                } catch (...) {  // skip corrupt cache lines
                }
            }
        }
    }
}

JudgeVerdict JudgeGateway::submit(const JudgeRequest& request) {
    const std::uint64_t key = request_hash(request);
    if (cfg_.cache_enabled) {
        std::lock_guard<std::mutex> lock(cache_mu_);
        const auto it = cache_.find(key);
        if (it != cache_.end()) {
            ++cache_hits_;
            return parse_verdict(request, it->second);
        }
    }

    std::optional<Error> last_error;
    for (int attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
        if (attempt > 0 && cfg_.backoff_base_ms > 0) {
            std::this_thread::sleep_for(
                std::chrono::milliseconds(cfg_.backoff_base_ms << (attempt - 1)));
        }
        TransportResult res;
        {
            in_flight_.acquire();
            res = transport_->send(request);
            in_flight_.release();
        }
        {
            std::lock_guard<std::mutex> lock(cache_mu_);
            ++transport_calls_;
        }
        if (res.status < 200 || res.status >= 300) {
            last_error = Error(Errc::transport_error,
                               "transport failure (status " + std::to_string(res.status) + ")",
                               res.body);
            continue;
        }
        try {
            JudgeVerdict verdict = parse_verdict(request, res.body);
            if (cfg_.cache_enabled) {
                std::lock_guard<std::mutex> lock(cache_mu_);
                cache_[key] = res.body;
                if (!cfg_.cache_path.empty()) {
                    std::ofstream out(cfg_.cache_path, std::ios::app);
                    out << json{{"key", hash_hex(key)}, {"body", res.body}}.dump() << "\n";
                }
            }
            return verdict;
        } catch (const Error& e) {
            if (e.code() != Errc::malformed_response) throw;
            last_error = e;
        }
    }
    throw *last_error;
}

std::size_t JudgeGateway::transport_calls() const {
    std::lock_guard<std::mutex> lock(cache_mu_);
    return transport_calls_;
}

std::size_t JudgeGateway::cache_hits() const {
    std::lock_guard<std::mutex> lock(cache_mu_);
    return cache_hits_;
}

// ---------------------------------------------------------------------------
// Offline stand-ins
// ---------------------------------------------------------------------------

std::size_t token_levenshtein(const std::vector<std::string>& a,
                              const std::vector<std::string>& b) {
    const std::size_t n = a.size(), m = b.size();
    std::vector<std::size_t> prev(m + 1), cur(m + 1);
    for (std::size_t j = 0; j <= m; ++j) prev[j] = j;
    for (std::size_t i = 1; i <= n; ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= m; ++j) {
            const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    return prev[m];
}

std::size_t local_edit_count(const SqlIr& predicted, const SqlIr& gold) {
    return token_levenshtein(predicted.token_texts(), gold.token_texts());
}

JudgeClass local_judge_class(std::size_t edit_count) {
    if (edit_count == 0) return JudgeClass::excellent;
    if (edit_count == 1) return JudgeClass::good;
    if (edit_count == 2) return JudgeClass::above_average;
    if (edit_count <= 5) return JudgeClass::bad;
    return JudgeClass::very_bad;
}

RewardReport offline_reward_report(const std::string& predicted, const std::string& gold,
                                   const std::map<RewardKind, double>& weights) {
    const auto canonical_or_trimmed = [](const std::string& sql) {
        try {
            return canonical_sql(sql);
        } catch (const Error&) {
            return sql;
        }
    };
    const auto ir_or_empty = [](const std::string& sql) {
        try {
            return parse_sql(sql);
        } catch (const Error&) {
            return SqlIr{};
        }
    };

    std::optional<std::size_t> edits;
    const auto edit_distance = [&]() {
        if (!edits) {
            edits = token_levenshtein(ir_or_empty(predicted).token_texts(),
                                      ir_or_empty(gold).token_texts());
        }
        return *edits;
    };

    std::map<RewardKind, double> scores;
    for (const auto& [kind, weight] : weights) {
        if (weight <= 0.0) continue;
        switch (kind) {
            case RewardKind::string_match:
                scores[kind] = string_match_reward(canonical_or_trimmed(predicted),
                                                   canonical_or_trimmed(gold));
                break;
            case RewardKind::component_f1:
                scores[kind] = component_f1_reward(ir_or_empty(predicted), ir_or_empty(gold));
                break;
            case RewardKind::execution_edit:
                scores[kind] = execution_edit_reward(edit_distance());
                break;
            case RewardKind::judge_class:
                scores[kind] = judge_class_reward(local_judge_class(edit_distance()));
                break;
        }
    }
    return composite_reward(scores, weights);
}

}  // namespace sqlrl
