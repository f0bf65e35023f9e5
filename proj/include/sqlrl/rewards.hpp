#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "sqlrl/sql_ir.hpp"

namespace sqlrl {

enum class RewardKind {
    execution_edit,
    string_match,
    component_f1,
    judge_class,
};

const char* reward_kind_name(RewardKind kind);
RewardKind reward_kind_from_string(std::string_view name);

/// Ordinal quality classes, rank 0..4. The five-class scale is normative;
/// ordinal_class_reward() below handles alternative class counts.
enum class JudgeClass {
    very_bad = 0,
    bad = 1,
    above_average = 2,
    good = 3,
    excellent = 4,
};

inline constexpr int kJudgeClassCount = 5;

int judge_class_rank(JudgeClass c);
/// Display name as the grading prompt spells it ("Very bad", "Above average", ...).
const char* judge_class_name(JudgeClass c);
/// Accepts display names and snake_case, case-insensitively. Throws
/// Errc::malformed_response on anything else.
JudgeClass judge_class_from_string(std::string_view name);

struct RewardReport {
    std::map<RewardKind, double> scores;   // each in [0,1]
    std::map<RewardKind, double> weights;  // normalized: non-negative, sums to 1
    double composite = 0.0;                // = sum weights[k] * scores[k]
};

/// 1 / (edit_count + 1): strictly decreasing, range (0, 1].
double execution_edit_reward(std::uint64_t edit_count);

/// Ratcliff/Obershelp similarity: recursively match the longest contiguous
/// common block (ties broken towards the earliest block in `predicted`, then
/// in `gold`), sum matched characters M, return 2M / (|predicted| + |gold|).
/// 1.0 iff equal (two empty strings count as equal — degenerate case
/// deliberately defined rather than raised, so training never stalls on empty
/// completions). Inputs are expected in canonical_sql form.
double string_match_reward(std::string_view predicted, std::string_view gold);

struct ComponentScore {
    ClauseKind kind = ClauseKind::other;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

struct ComponentF1Detail {
    std::vector<ComponentScore> components;  // one per clause kind present in either query
    bool string_match_fallback = false;      // both queries segmented entirely to `other`
    double value = 0.0;
};

/// Per-clause token-multiset F1, averaged (unweighted) over every clause kind
/// present in either query, `other` excluded. A clause present in exactly one
/// query scores 0. When neither query has any recognized clause the score
/// falls back to string_match_reward on the canonical forms, flagged in the
/// detail struct.
ComponentF1Detail component_f1_detail(const SqlIr& predicted, const SqlIr& gold);
double component_f1_reward(const SqlIr& predicted, const SqlIr& gold);

/// Equal-spaced monotone embedding of the class rank into [0,1]:
/// very_bad 0.0, bad 0.25, above_average 0.5, good 0.75, excellent 1.0.
double judge_class_reward(JudgeClass c);
/// Same embedding for a configurable class count: rank / (class_count - 1).
double ordinal_class_reward(int rank, int class_count);

/// Normalizes `weights` (non-negative, at least one positive) and mixes the
/// per-kind scores. Throws Errc::all_zero_weights / Errc::bad_config.
RewardReport composite_reward(const std::map<RewardKind, double>& scores,
                              const std::map<RewardKind, double>& weights);

/// Named weight presets: "best-one" (string_match), "best-two" (string_match +
/// judge_class), "best-four" (all four, equal). Throws Errc::bad_config on
/// unknown names.
std::map<RewardKind, double> preset_weights(std::string_view preset);
const std::vector<std::string>& known_presets();

}  // namespace sqlrl
