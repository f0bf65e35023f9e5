#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"

#include "oracles.hpp"
#include "sqlrl/error.hpp"
#include "sqlrl/rng.hpp"
#include "sqlrl/toy_policy.hpp"
#include "test_util.hpp"

using namespace sqlrl;
using testutil::code_of;

namespace {

SqlGrammar slotted_grammar() {
    SqlGrammar g;
    g.slots = {{"col", {"a", "b", "c", "d"}}, {"tab", {"t", "u", "v", "w"}}};
    g.templates = {{"select", "{col}", "from", "{tab}"}};
    g.contexts = {{"q", "select a from t"}};
    return g;
}

SqlGrammar four_template_grammar() {
    SqlGrammar g;
    g.templates = {{"select", "a", "from", "t"},
                   {"select", "b", "from", "t"},
                   {"select", "c", "from", "t"},
                   {"select", "d", "from", "t"}};
    g.contexts = {{"q", "select c from t"}};
    return g;
}

ToyPolicy default_policy() {
    return ToyPolicy(load_grammar(testutil::source_path("data/default_grammar.json")));
}

void randomize(std::vector<double>& params, Rng& rng, double scale) {
    for (double& p : params) p = scale * (2.0 * rng.next_double() - 1.0);
}

}  // namespace

TEST_CASE("support probabilities sum to one for every context") {
    ToyPolicy policy = default_policy();
    Rng rng(7);
    for (int round = 0; round < 3; ++round) {
        if (round > 0) randomize(policy.params(), rng, 1.5);
        for (const GrammarContext& ctx : policy.contexts()) {
            double total = 0.0;
            for (const auto& [completion, lp] : policy.enumerate_support(ctx.id)) {
                total += std::exp(lp);
            }
            CHECK(total == doctest::Approx(1.0).epsilon(1e-10));
        }
    }
}

TEST_CASE("sampled completions report their exact log-probability") {
    ToyPolicy policy = default_policy();
    Rng noise(11);
    randomize(policy.params(), noise, 1.0);
    Rng rng(12);
    for (int i = 0; i < 500; ++i) {
        const auto& ctx = policy.contexts()[i % policy.contexts().size()];
        const auto [completion, lp] = policy.sample(ctx.id, rng);
        CHECK(policy.logp(ctx.id, completion) == lp);  // bitwise
    }
}

TEST_CASE("zero parameters give a uniform distribution over templates") {
    ToyPolicy policy{four_template_grammar()};
    const auto support = policy.enumerate_support("q");
    REQUIRE(support.size() == 4);
    for (const auto& [completion, lp] : support) {
        CHECK(lp == doctest::Approx(std::log(0.25)).epsilon(1e-14));
    }
}

TEST_CASE("a single-completion grammar is deterministic with zero gradient") {
    SqlGrammar g;
    g.templates = {{"select", "1"}};
    g.contexts = {{"only", "select 1"}};
    ToyPolicy policy{g};
    CHECK(policy.support_size() == 1);
    CHECK(policy.logp("only", "select 1") == 0.0);
    Rng rng(1);
    CHECK(policy.sample("only", rng).first == "select 1");
    std::vector<double> grad(policy.param_count(), 0.0);
    policy.add_grad_logp("only", "select 1", 2.0, grad);
    for (double v : grad) CHECK(v == 0.0);
}

TEST_CASE("score gradient at uniform start is (1 - p) on the chosen logit") {
    SqlGrammar g;
    g.templates = {{"select", "a"}, {"select", "b"}};
    g.contexts = {{"q", "select a"}};
    ToyPolicy policy{g};
    std::vector<double> grad(policy.param_count(), 0.0);
    policy.add_grad_logp("q", "select a", 1.0, grad);
    CHECK(grad[0] == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(grad[1] == doctest::Approx(-0.5).epsilon(1e-14));

    // scale accumulates
    policy.add_grad_logp("q", "select b", 2.0, grad);
    CHECK(grad[0] == doctest::Approx(0.5 - 2.0 * 0.5).epsilon(1e-14));
    CHECK(grad[1] == doctest::Approx(-0.5 + 2.0 * 0.5).epsilon(1e-14));
}

TEST_CASE("temperature scales probabilities and gradients") {
    SqlGrammar g;
    g.templates = {{"select", "a"}, {"select", "b"}};
    g.contexts = {{"q", "select a"}};
    g.temperature = 0.25;
    ToyPolicy policy{g};
    policy.params() = {0.5, 0.0};
    // softmax(theta/tau): logits {2, 0}
    const double p0 = std::exp(2.0) / (std::exp(2.0) + 1.0);
    CHECK(policy.logp("q", "select a") == doctest::Approx(std::log(p0)).epsilon(1e-12));
    std::vector<double> grad(policy.param_count(), 0.0);
    policy.add_grad_logp("q", "select a", 1.0, grad);
    CHECK(grad[0] == doctest::Approx((1.0 - p0) / 0.25).epsilon(1e-12));
    CHECK(grad[1] == doctest::Approx(-(1.0 - p0) / 0.25).epsilon(1e-12));  // -p1 / tau
}

TEST_CASE("analytic score gradients match finite differences") {
    ToyPolicy policy = default_policy();
    Rng rng(21);
    randomize(policy.params(), rng, 0.8);
    const auto& ctx = policy.contexts()[2];
    Rng sampler(22);
    for (int trial = 0; trial < 5; ++trial) {
        const auto [completion, lp] = policy.sample(ctx.id, sampler);
        (void)lp;
        std::vector<double> analytic(policy.param_count(), 0.0);
        policy.add_grad_logp(ctx.id, completion, 1.0, analytic);
        const auto fd = oracles::fd_grad_logp(policy, ctx.id, completion, 1e-6);
        CHECK(oracles::rel_error(analytic, fd) < 1e-5);
    }
}

TEST_CASE("score-function identity: expected gradient over the support is zero") {
    ToyPolicy policy{slotted_grammar()};
    Rng rng(31);
    randomize(policy.params(), rng, 1.2);
    std::vector<double> expected(policy.param_count(), 0.0);
    for (const auto& [completion, lp] : policy.enumerate_support("q")) {
        policy.add_grad_logp("q", completion, std::exp(lp), expected);
    }
    for (double v : expected) CHECK(std::fabs(v) <= 1e-10);
}

TEST_CASE("sampling frequencies pass a chi-square uniformity test") {
    ToyPolicy policy{slotted_grammar()};  // 16 equiprobable completions at theta = 0
    const auto support = policy.enumerate_support("q");
    REQUIRE(support.size() == 16);
    std::map<std::string, int> counts;
    Rng rng(20260814);
    const int draws = 100000;
    for (int i = 0; i < draws; ++i) counts[policy.sample("q", rng).first]++;
    const double expected = static_cast<double>(draws) / 16.0;
    double chi2 = 0.0;
    for (const auto& [completion, lp] : support) {
        (void)lp;
        const double diff = counts[completion] - expected;
        chi2 += diff * diff / expected;
    }
    // chi-square critical value, 15 degrees of freedom, p = 0.001
    CHECK(chi2 < 37.697);
}

TEST_CASE("sampling frequencies track skewed probabilities") {
    ToyPolicy policy{slotted_grammar()};
    Rng noise(41);
    randomize(policy.params(), noise, 1.0);
    const int draws = 100000;
    std::map<std::string, int> counts;
    Rng rng(42);
    for (int i = 0; i < draws; ++i) counts[policy.sample("q", rng).first]++;
    for (const auto& [completion, lp] : policy.enumerate_support("q")) {
        const double p = std::exp(lp);
        const double sigma = std::sqrt(p * (1.0 - p) * draws);
        CAPTURE(completion);
        CHECK(std::fabs(counts[completion] - p * draws) <= 4.0 * sigma + 1.0);
    }
}

TEST_CASE("snapshots are deep copies") {
    ToyPolicy policy{slotted_grammar()};
    auto snap = policy.snapshot();
    const double before = snap->logp("q", "select a from t");
    policy.params()[1] += 5.0;  // first column-filler logit
    CHECK(snap->logp("q", "select a from t") == before);
    CHECK(policy.logp("q", "select a from t") != before);
    CHECK(snap->param_count() == policy.param_count());
}

TEST_CASE("unknown contexts and foreign completions are rejected") {
    ToyPolicy policy{slotted_grammar()};
    Rng rng(5);
    CHECK(code_of([&] { policy.logp("nope", "select a from t"); }) == Errc::unknown_context);
    CHECK(code_of([&] { policy.sample("nope", rng); }) == Errc::unknown_context);
    CHECK(code_of([&] { policy.gold_of("nope"); }) == Errc::unknown_context);
    CHECK(code_of([&] { policy.logp("q", "select z from t"); }) ==
          Errc::completion_outside_support);
    std::vector<double> grad(policy.param_count(), 0.0);
    CHECK(code_of([&] { policy.add_grad_logp("q", "drop table t", 1.0, grad); }) ==
          Errc::completion_outside_support);
}

TEST_CASE("grammar validation rejects malformed specs") {
    // unknown slot
    CHECK(code_of([] {
              SqlGrammar g;
              g.templates = {{"select", "{ghost}"}};
              g.contexts = {{"q", "select x"}};
              ToyPolicy p{g};
          }) == Errc::bad_grammar);
    // ambiguous: two derivations produce the same completion
    CHECK(code_of([] {
              SqlGrammar g;
              g.slots = {{"col", {"a", "b"}}, {"dup", {"a", "b"}}};
              g.templates = {{"select", "{col}"}, {"select", "{dup}"}};
              g.contexts = {{"q", "select a"}};
              ToyPolicy p{g};
          }) == Errc::bad_grammar);
    // gold outside support
    CHECK(code_of([] {
              SqlGrammar g;
              g.templates = {{"select", "a"}};
              g.contexts = {{"q", "select b"}};
              ToyPolicy p{g};
          }) == Errc::bad_grammar);
    // non-canonical instantiation (keyword case is normalized by the lexer)
    CHECK(code_of([] {
              SqlGrammar g;
              g.templates = {{"SELECT", "a"}};
              g.contexts = {{"q", "SELECT a"}};
              ToyPolicy p{g};
          }) == Errc::bad_grammar);
    // support blows past max_completions
    CHECK(code_of([] {
              SqlGrammar g = slotted_grammar();
              g.max_completions = 15;  // 16 completions
              ToyPolicy p{g};
          }) == Errc::bad_grammar);
    // duplicate context ids
    CHECK(code_of([] {
              SqlGrammar g;
              g.templates = {{"select", "a"}};
              g.contexts = {{"q", "select a"}, {"q", "select a"}};
              ToyPolicy p{g};
          }) == Errc::bad_grammar);
    // no contexts at all
    CHECK(code_of([] {
              SqlGrammar g;
              g.templates = {{"select", "a"}};
              ToyPolicy p{g};
          }) == Errc::bad_grammar);
}

TEST_CASE("grammar json loader validates structure and values") {
    using nlohmann::json;
    const json good = json::parse(R"({
        "format": "sql-grammar",
        "version": 1,
        "temperature": 0.5,
        "slots": {"col": ["a", "b"]},
        "templates": [["select", "{col}"]],
        "contexts": [{"id": "q", "gold": "select a"}]
    })");
    const SqlGrammar g = grammar_from_json(good);
    CHECK(g.temperature == 0.5);
    CHECK(g.slots.at("col").size() == 2);
    CHECK(g.templates.size() == 1);

    json bad = good;
    bad["temperature"] = 0.0;
    CHECK(code_of([&] { grammar_from_json(bad); }) == Errc::bad_grammar);
    bad = good;
    bad.erase("templates");
    CHECK(code_of([&] { grammar_from_json(bad); }) == Errc::bad_grammar);
    bad = good;
    bad["slots"]["col"] = json::array();
    CHECK(code_of([&] { grammar_from_json(bad); }) == Errc::bad_grammar);
    bad = good;
    bad["slots"]["col"] = {"a", "two words"};
    CHECK(code_of([&] { grammar_from_json(bad); }) == Errc::bad_grammar);

    CHECK(code_of([] { load_grammar("/nonexistent/grammar.json"); }) == Errc::io_error);
}

TEST_CASE("the shipped grammar fuels every published context") {
    ToyPolicy policy = default_policy();
    CHECK(policy.contexts().size() == 20);
    CHECK(policy.support_size() == 256);
    CHECK(policy.temperature() == 0.125);
    for (const GrammarContext& ctx : policy.contexts()) {
        CHECK(policy.logp(ctx.id, policy.gold_of(ctx.id)) < 0.0);
    }
}

TEST_CASE("parameters round-trip through json") {
    ToyPolicy policy = default_policy();
    Rng rng(55);
    randomize(policy.params(), rng, 0.9);
    const auto doc = policy.params_to_json();
    CHECK(doc.at("format") == "toy-policy-params");
    CHECK(doc.at("version") == 1);

    ToyPolicy fresh = default_policy();
    fresh.params_from_json(doc);
    CHECK(fresh.params() == policy.params());

    nlohmann::json broken = doc;
    broken["theta"].erase("q00");
    CHECK(code_of([&] { fresh.params_from_json(broken); }) == Errc::schema_violation);
    nlohmann::json wrong_format = doc;
    wrong_format["format"] = "other";
    CHECK(code_of([&] { fresh.params_from_json(wrong_format); }) == Errc::schema_violation);
}
