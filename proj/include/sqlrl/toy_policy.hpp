#pragma once

#include <map>
#include <memory>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "json.hpp"

#include "sqlrl/policy.hpp"

namespace sqlrl {

struct GrammarContext {
    std::string id;
    std::string gold;  // gold completion, must lie in the grammar's support
};

/// Templated SQL grammar: each template is a token pattern where "{name}"
/// marks a slot drawing from the named filler list. The full completion
/// support (all template instantiations) is finite and enumerable.
struct SqlGrammar {
    std::vector<std::vector<std::string>> templates;
    std::map<std::string, std::vector<std::string>> slots;
    std::vector<GrammarContext> contexts;
    double temperature = 1.0;
    std::size_t max_completions = 10000;
};

/// Parse + validate. Rejects (Errc::bad_grammar): empty/whitespace tokens,
/// unknown slot names, instantiations that do not round-trip through the SQL
/// canonicalizer, ambiguous completions (two derivations hitting the same
/// string), support larger than max_completions, duplicate context ids, and
/// golds outside the support.
SqlGrammar grammar_from_json(const nlohmann::json& doc);
SqlGrammar load_grammar(const std::string& path);

/// Fully enumerable softmax policy over a SqlGrammar. Each prompt context
/// carries its own logit block: template logits first, then one filler block
/// per slot occurrence of every template. Sampling draws the template, then
/// each slot left to right; probabilities are softmax(theta / temperature),
/// so log-probabilities and score-function gradients are exact.
class ToyPolicy final : public Policy {
public:
    explicit ToyPolicy(SqlGrammar grammar);

    std::pair<std::string, double> sample(const std::string& context, Rng& rng) const override;
    double logp(const std::string& context, const std::string& completion) const override;
    void add_grad_logp(const std::string& context, const std::string& completion, double scale,
                       std::vector<double>& grad) const override;
    std::size_t param_count() const override { return theta_.size(); }
    std::vector<double>& params() override { return theta_; }
    const std::vector<double>& params() const override { return theta_; }
    std::unique_ptr<Policy> snapshot() const override;

    /// Every completion with its current log-probability under `context`.
    std::vector<std::pair<std::string, double>> enumerate_support(
        const std::string& context) const;
    std::size_t support_size() const { return support_order_.size(); }

    const std::vector<GrammarContext>& contexts() const { return grammar_->spec.contexts; }
    const std::string& gold_of(const std::string& context) const;
    double temperature() const { return grammar_->spec.temperature; }

    nlohmann::ordered_json params_to_json() const;
    void params_from_json(const nlohmann::json& doc);

private:
    struct Derivation {
        std::size_t template_id = 0;
        std::vector<int> fills;  // filler index per slot occurrence
    };

    // Immutable, shared across snapshots.
    struct GrammarData {
        SqlGrammar spec;
        std::vector<std::string> slot_names;                  // slot type id -> name
        std::vector<std::vector<std::string>> slot_fillers;   // slot type id -> fillers
        std::vector<std::vector<int>> template_slots;         // template -> slot type ids
        std::vector<std::vector<std::size_t>> slot_offsets;   // template -> occurrence -> block offset
        std::size_t block_size = 0;                           // per-context logit count
        std::unordered_map<std::string, std::size_t> context_index;
        std::unordered_map<std::string, Derivation> support;  // completion -> unique derivation
    };

    std::size_t context_of(const std::string& context) const;
    const Derivation& derivation_of(const std::string& completion) const;
    // softmax(theta/tau) over theta_[base, base+n); returns probabilities.
    std::vector<double> block_probs(std::size_t base, std::size_t n) const;

    std::shared_ptr<const GrammarData> grammar_;
    std::vector<std::string> support_order_;  // deterministic enumeration order
    std::vector<double> theta_;
};

}  // namespace sqlrl
