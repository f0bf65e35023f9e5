#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <semaphore>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "sqlrl/rewards.hpp"
#include "sqlrl/sql_ir.hpp"

namespace sqlrl {

enum class PromptKind {
    cot_generate,  // synthetic reasoning-trace generation
    cot_verify,    // Correct/Wrong verification of a generated query
    edit_count,    // judge counts orthographic changes per candidate
    class_grade,   // judge grades candidates on the five-class scale
    exec_proxy,    // would the predicted query return the same result?
    qa_accuracy,   // does the predicted answer match the reference answer?
};

const char* prompt_kind_name(PromptKind kind);

/// Raw template text with {slot} placeholders, one per kind.
std::string_view prompt_template(PromptKind kind);

using SlotMap = std::map<std::string, std::string>;

/// Substitute every {slot} in the kind's template. All placeholders must be
/// present and non-empty in `slots`; otherwise Errc::missing_slot.
std::string render_prompt(PromptKind kind, const SlotMap& slots);

struct JudgeRequest {
    PromptKind kind = PromptKind::cot_verify;
    std::string prompt;                   // fully rendered text sent to the judge
    std::vector<std::string> candidates;  // payload(s) under judgment
    std::string schema;
    std::string gold;                     // reference query / answer, when the kind has one
};

JudgeRequest make_cot_generate_request(const std::string& schema, const std::string& instruction);
JudgeRequest make_cot_verify_request(const std::string& candidate_sql, const std::string& schema,
                                     const std::string& correct_sql);
JudgeRequest make_edit_count_request(const std::vector<std::string>& candidates,
                                     const std::string& schema, const std::string& true_query);
JudgeRequest make_class_grade_request(const std::vector<std::string>& candidates,
                                      const std::string& true_query);
JudgeRequest make_exec_proxy_request(const std::string& candidate_sql, const std::string& schema,
                                     const std::string& correct_sql);
JudgeRequest make_qa_accuracy_request(const std::string& question, const std::string& prediction,
                                      const std::string& gold_answer);

enum class VerifyVerdict { correct, wrong };

struct JudgeVerdict {
    PromptKind kind = PromptKind::cot_verify;
    std::vector<std::int64_t> edit_counts;            // edit_count
    std::vector<JudgeClass> classes;                  // class_grade
    VerifyVerdict verify = VerifyVerdict::wrong;      // cot_verify
    bool pass = false;                                // exec_proxy / qa_accuracy
    std::string text;                                 // cot_generate: raw generation
    std::string raw;                                  // verbatim response body, kept for audit
};

/// Parse a response body against the request's kind: strict parse first, then
/// a fenced/embedded-JSON salvage pass. Throws Errc::malformed_response with
/// the body attached.
JudgeVerdict parse_verdict(const JudgeRequest& request, const std::string& body);

struct TransportResult {
    int status = 0;  // HTTP-style; anything outside [200,300) is a transport failure
    std::string body;
};

class Transport {
public:
    virtual ~Transport() = default;
    virtual TransportResult send(const JudgeRequest& request) = 0;
};

/// Test transport: FIFO-scripted responses, or a handler function for
/// generated streams. Counts every call.
class MockTransport final : public Transport {
public:
    void script(std::string body, int status = 200);
    void set_handler(std::function<TransportResult(const JudgeRequest&)> handler);
    TransportResult send(const JudgeRequest& request) override;
    std::size_t calls() const;

private:
    mutable std::mutex mu_;
    std::deque<TransportResult> scripted_;
    std::function<TransportResult(const JudgeRequest&)> handler_;
    std::size_t calls_ = 0;
};

/// Deterministic offline judge: answers every request from local computation
/// (token edit distance, the edit-count class rubric, canonical SQL equality),
/// producing bodies shaped exactly like live responses. Keeps CI and the CLI
/// `local` gateway mode free of network access.
class LocalTransport final : public Transport {
public:
    TransportResult send(const JudgeRequest& request) override;
    std::size_t calls() const;

private:
    mutable std::mutex mu_;
    std::size_t calls_ = 0;
};

/// Chat-completion endpoint client. Sends the rendered prompt as a single
/// user message; the returned body is the assistant message content.
class HttpTransport final : public Transport {
public:
    HttpTransport(std::string base_url, std::string model, std::string api_key_env);
    TransportResult send(const JudgeRequest& request) override;

private:
    std::string base_url_;
    std::string model_;
    std::string api_key_;
};

struct GatewayConfig {
    int max_retries = 3;       // extra attempts after the first, transport or parse failures
    int backoff_base_ms = 250; // exponential backoff base; 0 disables sleeping
    int max_in_flight = 4;     // bound on concurrent transport calls
    bool cache_enabled = true;
    std::string cache_path;    // optional JSONL spill; empty keeps cache in memory
};

/// Submission front door: content-hash response cache, bounded retries with
/// exponential backoff, bounded parallel in-flight requests, typed parsing.
class JudgeGateway {
public:
    explicit JudgeGateway(std::shared_ptr<Transport> transport, GatewayConfig cfg = {});

    /// Cached verdict or transport round-trip. Throws Errc::transport_error /
    /// Errc::malformed_response after retries, raw body attached.
    JudgeVerdict submit(const JudgeRequest& request);

    std::size_t transport_calls() const;
    std::size_t cache_hits() const;

private:
    std::shared_ptr<Transport> transport_;
    GatewayConfig cfg_;
    mutable std::mutex cache_mu_;
    std::unordered_map<std::uint64_t, std::string> cache_;  // request hash -> body
    std::counting_semaphore<> in_flight_;
    std::size_t transport_calls_ = 0;
    std::size_t cache_hits_ = 0;
};

/// FNV-1a content hash over kind, prompt, candidates, schema, and gold.
std::uint64_t request_hash(const JudgeRequest& request);

/// Token-level Levenshtein distance between the two canonical token streams;
/// 0 iff the canonical forms are equal. Offline stand-in for the judge count.
std::size_t local_edit_count(const SqlIr& predicted, const SqlIr& gold);
std::size_t token_levenshtein(const std::vector<std::string>& a,
                              const std::vector<std::string>& b);

/// Edit-count rubric mirroring the grading prompt's wording: 0 -> excellent
/// (perfect match), 1 -> good (one mistake), 2 -> above_average, 3..5 -> bad
/// (more than one mistake), >5 -> very_bad (varies significantly).
JudgeClass local_judge_class(std::size_t edit_count);

/// Fully offline composite reward for one (predicted, gold) pair: string match
/// and component F1 are computed directly on the clause IR; execution-edit and
/// class rewards use the token edit distance and the edit-count rubric in
/// place of a judge call. Queries that fail to lex are scored on their raw
/// text (string match) or as an empty token stream (the other kinds).
RewardReport offline_reward_report(const std::string& predicted, const std::string& gold,
                                   const std::map<RewardKind, double>& weights);

}  // namespace sqlrl
