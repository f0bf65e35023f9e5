#include "sqlrl/rewards.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>

#include "sqlrl/error.hpp"

namespace sqlrl {

const char* reward_kind_name(RewardKind kind) {
    switch (kind) {
        case RewardKind::execution_edit: return "execution_edit";
        case RewardKind::string_match: return "string_match";
        case RewardKind::component_f1: return "component_f1";
        case RewardKind::judge_class: return "judge_class";
    }
    return "?";
}

RewardKind reward_kind_from_string(std::string_view name) {
    if (name == "execution_edit") return RewardKind::execution_edit;
    if (name == "string_match") return RewardKind::string_match;
    if (name == "component_f1") return RewardKind::component_f1;
    if (name == "judge_class") return RewardKind::judge_class;
    raise(Errc::bad_config, "unknown reward kind '" + std::string(name) + "'");
}

int judge_class_rank(JudgeClass c) { return static_cast<int>(c); }

const char* judge_class_name(JudgeClass c) {
    switch (c) {
        case JudgeClass::very_bad: return "Very bad";
        case JudgeClass::bad: return "Bad";
        case JudgeClass::above_average: return "Above average";
        case JudgeClass::good: return "Good";
        case JudgeClass::excellent: return "Excellent";
    }
    return "?";
}

JudgeClass judge_class_from_string(std::string_view name) {
    std::string key;
    key.reserve(name.size());
    for (char c : name) {
        if (c == ' ' || c == '-' || c == '_') {
            if (!key.empty() && key.back() != '_') key.push_back('_');
        } else {
            key.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        }
    }
    if (key == "very_bad") return JudgeClass::very_bad;
    if (key == "bad") return JudgeClass::bad;
    if (key == "above_average") return JudgeClass::above_average;
    if (key == "good") return JudgeClass::good;
    if (key == "excellent") return JudgeClass::excellent;
    raise(Errc::malformed_response, "unrecognized judge class '" + std::string(name) + "'",
          std::string(name));
}

double execution_edit_reward(std::uint64_t edit_count) {
    return 1.0 / (static_cast<double>(edit_count) + 1.0);
}

// ---------------------------------------------------------------------------
// Ratcliff/Obershelp matching
// ---------------------------------------------------------------------------

namespace {

struct MatchBlock {
    std::size_t a = 0;
    std::size_t b = 0;
    std::size_t size = 0;
};

// Longest contiguous common block of a[alo,ahi) vs b[blo,bhi). Row-by-row
// run-length table; updates only on strictly longer runs, which breaks ties
// towards the earliest start in `a`, then in `b`.
MatchBlock find_longest_match(std::string_view a, std::string_view b, std::size_t alo,
                              std::size_t ahi, std::size_t blo, std::size_t bhi) {
    MatchBlock best{alo, blo, 0};
    std::vector<std::size_t> prev(b.size() + 1, 0);
    std::vector<std::size_t> cur(b.size() + 1, 0);
    for (std::size_t i = alo; i < ahi; ++i) {
        std::fill(cur.begin(), cur.end(), 0);
        for (std::size_t j = blo; j < bhi; ++j) {
            if (a[i] != b[j]) continue;
            const std::size_t run = (j > blo ? prev[j - 1] : 0) + 1;
            cur[j] = run;
            if (run > best.size) {
                best = {i - run + 1, j - run + 1, run};
            }
        }
        std::swap(prev, cur);
    }
    return best;
}

std::size_t matched_chars(std::string_view a, std::string_view b) {
    std::size_t total = 0;
    std::vector<std::array<std::size_t, 4>> stack{{0, a.size(), 0, b.size()}};
    while (!stack.empty()) {
        const auto [alo, ahi, blo, bhi] = stack.back();
        stack.pop_back();
        const MatchBlock m = find_longest_match(a, b, alo, ahi, blo, bhi);
        if (m.size == 0) continue;
        total += m.size;
        stack.push_back({alo, m.a, blo, m.b});
        stack.push_back({m.a + m.size, ahi, m.b + m.size, bhi});
    }
    return total;
}

}  // namespace

double string_match_reward(std::string_view predicted, std::string_view gold) {
    const std::size_t denom = predicted.size() + gold.size();
    if (denom == 0) return 1.0;  // two empty strings: vacuous equality
    return 2.0 * static_cast<double>(matched_chars(predicted, gold)) /
           static_cast<double>(denom);
}

// ---------------------------------------------------------------------------
// Component-level token F1
// ---------------------------------------------------------------------------

namespace {

std::size_t multiset_overlap(std::vector<std::string> a, std::vector<std::string> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    std::size_t overlap = 0;
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] == b[j]) {
            ++overlap;
            ++i;
            ++j;
        } else if (a[i] < b[j]) {
            ++i;
        } else {
            ++j;
        }
    }
    return overlap;
}

constexpr std::array<ClauseKind, 8> kScoredClauses = {
    ClauseKind::select, ClauseKind::from,     ClauseKind::join,     ClauseKind::where,
    ClauseKind::group_by, ClauseKind::having, ClauseKind::order_by, ClauseKind::limit,
};

}  // namespace

ComponentF1Detail component_f1_detail(const SqlIr& predicted, const SqlIr& gold) {
    ComponentF1Detail detail;
    for (ClauseKind kind : kScoredClauses) {
        const bool in_pred = predicted.has_clause(kind);
        const bool in_gold = gold.has_clause(kind);
        if (!in_pred && !in_gold) continue;

        ComponentScore score;
        score.kind = kind;
        if (in_pred && in_gold) {
            const std::vector<std::string> p = predicted.clause_tokens(kind);
            const std::vector<std::string> g = gold.clause_tokens(kind);
            if (p.empty() && g.empty()) {
                // clause keyword present on both sides with no operands
                score.precision = score.recall = score.f1 = 1.0;
            } else {
                const std::size_t overlap = multiset_overlap(p, g);
                score.precision = p.empty() ? 0.0 : static_cast<double>(overlap) / p.size();
                score.recall = g.empty() ? 0.0 : static_cast<double>(overlap) / g.size();
                score.f1 = (score.precision + score.recall) > 0.0
                               ? 2.0 * score.precision * score.recall /
                                     (score.precision + score.recall)
                               : 0.0;
            }
        }
        detail.components.push_back(score);
    }

    if (detail.components.empty()) {
        detail.string_match_fallback = true;
        detail.value = string_match_reward(canonicalize(predicted), canonicalize(gold));
        return detail;
    }
    double sum = 0.0;
    for (const ComponentScore& s : detail.components) sum += s.f1;
    detail.value = sum / static_cast<double>(detail.components.size());
    return detail;
}

double component_f1_reward(const SqlIr& predicted, const SqlIr& gold) {
    return component_f1_detail(predicted, gold).value;
}

double judge_class_reward(JudgeClass c) {
    return ordinal_class_reward(judge_class_rank(c), kJudgeClassCount);
}

double ordinal_class_reward(int rank, int class_count) {
    if (class_count < 2 || rank < 0 || rank >= class_count) {
        raise(Errc::bad_config, "ordinal class rank " + std::to_string(rank) +
                                    " outside scale of " + std::to_string(class_count));
    }
    return static_cast<double>(rank) / static_cast<double>(class_count - 1);
}

RewardReport composite_reward(const std::map<RewardKind, double>& scores,
                              const std::map<RewardKind, double>& weights) {
    double total = 0.0;
    for (const auto& [kind, w] : weights) {
        if (w < 0.0 || !std::isfinite(w)) {
            raise(Errc::bad_config, std::string("negative or non-finite weight for ") +
                                        reward_kind_name(kind));
        }
        total += w;
    }
    if (total <= 0.0) {
        raise(Errc::all_zero_weights, "reward weights sum to zero");
    }

    RewardReport report;
    report.scores = scores;
    for (const auto& [kind, w] : weights) {
        const double wn = w / total;
        report.weights[kind] = wn;
        if (wn == 0.0) continue;
        const auto it = scores.find(kind);
        if (it == scores.end()) {
            raise(Errc::bad_config,
                  std::string("weighted reward kind ") + reward_kind_name(kind) +
                      " has no score");
        }
        if (!(it->second >= 0.0 && it->second <= 1.0)) {
            raise(Errc::bad_config, std::string("score for ") + reward_kind_name(kind) +
                                        " outside [0,1]: " + std::to_string(it->second));
        }
        report.composite += wn * it->second;
    }
    return report;
}

std::map<RewardKind, double> preset_weights(std::string_view preset) {
    if (preset == "best-one") {
        return {{RewardKind::string_match, 1.0}};
    }
    if (preset == "best-two") {
        return {{RewardKind::string_match, 0.5}, {RewardKind::judge_class, 0.5}};
    }
    if (preset == "best-four") {
        return {{RewardKind::execution_edit, 0.25},
                {RewardKind::string_match, 0.25},
                {RewardKind::component_f1, 0.25},
                {RewardKind::judge_class, 0.25}};
    }
    raise(Errc::bad_config, "unknown reward preset '" + std::string(preset) + "'");
}

const std::vector<std::string>& known_presets() {
    static const std::vector<std::string> kPresets = {"best-one", "best-two", "best-four"};
    return kPresets;
}

}  // namespace sqlrl
