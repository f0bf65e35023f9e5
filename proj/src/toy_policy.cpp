#include "sqlrl/toy_policy.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>

#include "sqlrl/error.hpp"
#include "sqlrl/sql_ir.hpp"

namespace sqlrl {

namespace {

bool is_slot_token(const std::string& tok) {
    return tok.size() >= 3 && tok.front() == '{' && tok.back() == '}';
}

std::string slot_name_of(const std::string& tok) { return tok.substr(1, tok.size() - 2); }

void check_token(const std::string& tok, const std::string& where) {
    if (tok.empty()) raise(Errc::bad_grammar, "empty token in " + where);
    for (char c : tok) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            raise(Errc::bad_grammar, "token '" + tok + "' in " + where + " contains whitespace");
        }
    }
}

}  // namespace

SqlGrammar grammar_from_json(const nlohmann::json& doc) {
    SqlGrammar g;
    try {
        if (doc.contains("temperature")) g.temperature = doc.at("temperature").get<double>();
        if (doc.contains("max_completions")) {
            g.max_completions = doc.at("max_completions").get<std::size_t>();
        }
        for (const auto& [name, fillers] : doc.at("slots").items()) {
            g.slots[name] = fillers.get<std::vector<std::string>>();
        }
        g.templates = doc.at("templates").get<std::vector<std::vector<std::string>>>();
        for (const auto& ctx : doc.at("contexts")) {
            g.contexts.push_back(
                {ctx.at("id").get<std::string>(), ctx.at("gold").get<std::string>()});
        }
    } catch (const nlohmann::json::exception& e) {
        raise(Errc::bad_grammar, std::string("grammar json malformed: ") + e.what());
    }
    if (!(g.temperature > 0.0)) raise(Errc::bad_grammar, "temperature must be > 0");
    if (g.max_completions == 0) raise(Errc::bad_grammar, "max_completions must be >= 1");
    if (g.templates.empty()) raise(Errc::bad_grammar, "grammar needs at least one template");
    for (const auto& [name, fillers] : g.slots) {
        if (fillers.empty()) raise(Errc::bad_grammar, "slot '" + name + "' has no fillers");
        for (const auto& f : fillers) check_token(f, "slot '" + name + "'");
    }
    return g;
}

SqlGrammar load_grammar(const std::string& path) {
    std::ifstream in(path);
    if (!in) raise(Errc::io_error, "cannot open grammar file " + path);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        raise(Errc::bad_grammar, "grammar file " + path + " is not valid json: " + e.what());
    }
    return grammar_from_json(doc);
}

ToyPolicy::ToyPolicy(SqlGrammar grammar) {
    auto data = std::make_shared<GrammarData>();
    data->spec = std::move(grammar);
    const SqlGrammar& g = data->spec;

    for (const auto& [name, fillers] : g.slots) {
        data->slot_names.push_back(name);
        data->slot_fillers.push_back(fillers);
    }
    auto slot_type_of = [&](const std::string& name) -> int {
        for (std::size_t s = 0; s < data->slot_names.size(); ++s) {
            if (data->slot_names[s] == name) return static_cast<int>(s);
        }
        raise(Errc::bad_grammar, "template references unknown slot '" + name + "'");
    };

    // Logit block layout per context: template logits, then filler logits for
    // every (template, slot occurrence) in order.
    data->block_size = g.templates.size();
    for (std::size_t t = 0; t < g.templates.size(); ++t) {
        if (g.templates[t].empty()) raise(Errc::bad_grammar, "template has no tokens");
        std::vector<int> slot_types;
        std::vector<std::size_t> offsets;
        for (const std::string& tok : g.templates[t]) {
            check_token(tok, "template " + std::to_string(t));
            if (!is_slot_token(tok)) continue;
            const int s = slot_type_of(slot_name_of(tok));
            slot_types.push_back(s);
            offsets.push_back(data->block_size);
            data->block_size += data->slot_fillers[static_cast<std::size_t>(s)].size();
        }
        data->template_slots.push_back(std::move(slot_types));
        data->slot_offsets.push_back(std::move(offsets));
    }

    // Enumerate the full support, checking the completion bound, derivation
    // uniqueness, and round-trip stability under SQL canonicalization.
    for (std::size_t t = 0; t < g.templates.size(); ++t) {
        const std::vector<int>& slot_types = data->template_slots[t];
        std::vector<int> fills(slot_types.size(), 0);
        while (true) {
            std::string text;
            std::size_t occ = 0;
            for (const std::string& tok : g.templates[t]) {
                if (!text.empty()) text.push_back(' ');
                if (is_slot_token(tok)) {
                    const auto& fillers =
                        data->slot_fillers[static_cast<std::size_t>(slot_types[occ])];
                    text += fillers[static_cast<std::size_t>(fills[occ])];
                    ++occ;
                } else {
                    text += tok;
                }
            }
            if (canonical_sql(text) != text) {
                raise(Errc::bad_grammar,
                      "instantiation '" + text + "' is not canonicalization-stable");
            }
            if (data->support.size() >= g.max_completions) {
                raise(Errc::bad_grammar, "support exceeds max_completions = " +
                                             std::to_string(g.max_completions));
            }
            Derivation deriv{t, fills};
            if (!data->support.emplace(text, std::move(deriv)).second) {
                raise(Errc::bad_grammar, "ambiguous grammar: '" + text +
                                             "' has more than one derivation");
            }
            support_order_.push_back(text);

            // advance mixed-radix counter over the fills
            bool rolled_over = fills.empty();
            std::size_t k = fills.size();
            while (k > 0) {
                --k;
                const auto radix = static_cast<int>(
                    data->slot_fillers[static_cast<std::size_t>(slot_types[k])].size());
                if (++fills[k] < radix) break;
                fills[k] = 0;
                if (k == 0) rolled_over = true;
            }
            if (rolled_over) break;
        }
    }

    if (g.contexts.empty()) raise(Errc::bad_grammar, "grammar defines no contexts");
    for (std::size_t c = 0; c < g.contexts.size(); ++c) {
        const GrammarContext& ctx = g.contexts[c];
        if (ctx.id.empty()) raise(Errc::bad_grammar, "context with empty id");
        if (!data->context_index.emplace(ctx.id, c).second) {
            raise(Errc::bad_grammar, "duplicate context id '" + ctx.id + "'");
        }
        if (data->support.find(ctx.gold) == data->support.end()) {
            raise(Errc::bad_grammar,
                  "gold for context '" + ctx.id + "' is outside the grammar support: '" +
                      ctx.gold + "'");
        }
    }

    theta_.assign(g.contexts.size() * data->block_size, 0.0);
    grammar_ = std::move(data);
}

std::size_t ToyPolicy::context_of(const std::string& context) const {
    const auto it = grammar_->context_index.find(context);
    if (it == grammar_->context_index.end()) {
        raise(Errc::unknown_context, "context '" + context + "' not in grammar");
    }
    return it->second;
}

const ToyPolicy::Derivation& ToyPolicy::derivation_of(const std::string& completion) const {
    const auto it = grammar_->support.find(completion);
    if (it == grammar_->support.end()) {
        raise(Errc::completion_outside_support,
              "completion not derivable from the grammar: '" + completion + "'");
    }
    return it->second;
}

std::vector<double> ToyPolicy::block_probs(std::size_t base, std::size_t n) const {
    const double tau = grammar_->spec.temperature;
    double max_logit = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) max_logit = std::max(max_logit, theta_[base + j] / tau);
    std::vector<double> probs(n);
    double z = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        probs[j] = std::exp(theta_[base + j] / tau - max_logit);
        z += probs[j];
    }
    for (double& p : probs) p /= z;
    return probs;
}

std::pair<std::string, double> ToyPolicy::sample(const std::string& context, Rng& rng) const {
    const std::size_t c = context_of(context);
    const GrammarData& g = *grammar_;
    const std::size_t base = c * g.block_size;

    auto draw = [&](std::size_t block_base, std::size_t n, double& logp_acc) {
        const std::vector<double> probs = block_probs(block_base, n);
        const double u = rng.next_double();
        double cdf = 0.0;
        std::size_t pick = n - 1;  // guard against round-off at the top end
        for (std::size_t j = 0; j < n; ++j) {
            cdf += probs[j];
            if (u < cdf) {
                pick = j;
                break;
            }
        }
        logp_acc += std::log(probs[pick]);
        return pick;
    };

    double logp = 0.0;
    const std::size_t t = draw(base, g.spec.templates.size(), logp);
    std::string text;
    std::size_t occ = 0;
    for (const std::string& tok : g.spec.templates[t]) {
        if (!text.empty()) text.push_back(' ');
        if (is_slot_token(tok)) {
            const auto& fillers =
                g.slot_fillers[static_cast<std::size_t>(g.template_slots[t][occ])];
            const std::size_t f = draw(base + g.slot_offsets[t][occ], fillers.size(), logp);
            text += fillers[f];
            ++occ;
        } else {
            text += tok;
        }
    }
    return {std::move(text), logp};
}

double ToyPolicy::logp(const std::string& context, const std::string& completion) const {
    const std::size_t c = context_of(context);
    const Derivation& deriv = derivation_of(completion);
    const GrammarData& g = *grammar_;
    const std::size_t base = c * g.block_size;

    double lp = std::log(block_probs(base, g.spec.templates.size())[deriv.template_id]);
    for (std::size_t k = 0; k < deriv.fills.size(); ++k) {
        const auto& fillers = g.slot_fillers[static_cast<std::size_t>(
            g.template_slots[deriv.template_id][k])];
        const std::vector<double> probs =
            block_probs(base + g.slot_offsets[deriv.template_id][k], fillers.size());
        lp += std::log(probs[static_cast<std::size_t>(deriv.fills[k])]);
    }
    return lp;
}

void ToyPolicy::add_grad_logp(const std::string& context, const std::string& completion,
                              double scale, std::vector<double>& grad) const {
    if (grad.size() != theta_.size()) {
        raise(Errc::length_mismatch, "gradient buffer size != parameter count");
    }
    const std::size_t c = context_of(context);
    const Derivation& deriv = derivation_of(completion);
    const GrammarData& g = *grammar_;
    const std::size_t base = c * g.block_size;
    const double inv_tau = 1.0 / g.spec.temperature;

    auto accumulate = [&](std::size_t block_base, std::size_t n, std::size_t chosen) {
        const std::vector<double> probs = block_probs(block_base, n);
        for (std::size_t j = 0; j < n; ++j) {
            const double indicator = (j == chosen) ? 1.0 : 0.0;
            grad[block_base + j] += scale * inv_tau * (indicator - probs[j]);
        }
    };

    accumulate(base, g.spec.templates.size(), deriv.template_id);
    for (std::size_t k = 0; k < deriv.fills.size(); ++k) {
        const auto& fillers = g.slot_fillers[static_cast<std::size_t>(
            g.template_slots[deriv.template_id][k])];
        accumulate(base + g.slot_offsets[deriv.template_id][k], fillers.size(),
                   static_cast<std::size_t>(deriv.fills[k]));
    }
}

std::unique_ptr<Policy> ToyPolicy::snapshot() const {
    return std::make_unique<ToyPolicy>(*this);
}

std::vector<std::pair<std::string, double>> ToyPolicy::enumerate_support(
    const std::string& context) const {
    std::vector<std::pair<std::string, double>> out;
    out.reserve(support_order_.size());
    for (const std::string& completion : support_order_) {
        out.emplace_back(completion, logp(context, completion));
    }
    return out;
}

const std::string& ToyPolicy::gold_of(const std::string& context) const {
    return grammar_->spec.contexts[context_of(context)].gold;
}

nlohmann::ordered_json ToyPolicy::params_to_json() const {
    nlohmann::ordered_json doc;
    doc["format"] = "toy-policy-params";
    doc["version"] = 1;
    doc["block_size"] = grammar_->block_size;
    nlohmann::ordered_json contexts = nlohmann::ordered_json::object();
    for (std::size_t c = 0; c < grammar_->spec.contexts.size(); ++c) {
        const std::size_t base = c * grammar_->block_size;
        contexts[grammar_->spec.contexts[c].id] = std::vector<double>(
            theta_.begin() + static_cast<std::ptrdiff_t>(base),
            theta_.begin() + static_cast<std::ptrdiff_t>(base + grammar_->block_size));
    }
    doc["theta"] = std::move(contexts);
    return doc;
}

void ToyPolicy::params_from_json(const nlohmann::json& doc) {
    try {
        if (doc.at("format").get<std::string>() != "toy-policy-params" ||
            doc.at("version").get<int>() != 1) {
            raise(Errc::schema_violation, "unrecognized policy parameter file header");
        }
        if (doc.at("block_size").get<std::size_t>() != grammar_->block_size) {
            raise(Errc::schema_violation, "policy file block_size does not match grammar");
        }
        const auto& contexts = doc.at("theta");
        for (std::size_t c = 0; c < grammar_->spec.contexts.size(); ++c) {
            const auto values = contexts.at(grammar_->spec.contexts[c].id)
                                    .get<std::vector<double>>();
            if (values.size() != grammar_->block_size) {
                raise(Errc::schema_violation, "policy file logit block has wrong length");
            }
            std::copy(values.begin(), values.end(),
                      theta_.begin() + static_cast<std::ptrdiff_t>(c * grammar_->block_size));
        }
    } catch (const nlohmann::json::exception& e) {
        raise(Errc::schema_violation, std::string("policy parameter file malformed: ") + e.what());
    }
}

}  // namespace sqlrl
