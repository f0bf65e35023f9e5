// Acceptance gate: nine checks, one PASS/FAIL line each, nonzero exit if any
// fail. Every numeric claim is verified against an independent oracle or a
// hand-computed value, never against the library's own output.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"

#include "oracles.hpp"
#include "sqlrl/datapipe.hpp"
#include "sqlrl/error.hpp"
#include "sqlrl/grpo.hpp"
#include "sqlrl/judge.hpp"
#include "sqlrl/rewards.hpp"
#include "sqlrl/rng.hpp"
#include "sqlrl/sql_ir.hpp"
#include "sqlrl/toy_policy.hpp"
#include "test_util.hpp"

using namespace sqlrl;
using nlohmann::ordered_json;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* pattern, double a, double b = 0.0) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), pattern, a, b);
    return buf;
}

ToyPolicy default_policy() {
    return ToyPolicy(load_grammar(testutil::source_path("data/default_grammar.json")));
}

// ---------------------------------------------------------------------------
// 1. Analytic gradient vs central finite differences through the full
//    objective (sampling is frozen on the behavior policy, so the objective
//    is a deterministic, differentiable function of the current parameters).
// ---------------------------------------------------------------------------

bool criterion_gradient(std::string& detail) {
    const auto start = Clock::now();
    const ToyPolicy base = default_policy();
    const auto weights = preset_weights("best-one");
    const std::size_t n_ctx = base.contexts().size();
    const std::size_t block = base.param_count() / n_ctx;
    const double h = 1e-5;

    double worst = 0.0;
    for (int s = 0; s < 50; ++s) {
        const bool off_policy = s >= 25;
        bool usable_draw = false;
        for (std::uint64_t attempt = 0; attempt < 64 && !usable_draw; ++attempt) {
            Rng rng(derive_seed(0xACCE5500u + static_cast<unsigned>(s), attempt));
            ToyPolicy policy = base;
            for (double& p : policy.params()) p += (rng.next_double() * 2 - 1) * 0.7;
            std::unique_ptr<Policy> ref = policy.snapshot();
            for (double& p : ref->params()) p += (rng.next_double() * 2 - 1) * 0.3;
            std::unique_ptr<Policy> old = policy.snapshot();
            if (off_policy) {
                for (double& p : old->params()) p += (rng.next_double() * 2 - 1) * 0.15;
            }

            GrpoConfig cfg;
            cfg.group_size = 8;
            cfg.seed = derive_seed(0xF00Du, static_cast<std::uint64_t>(s), attempt);
            const std::string ctx = base.contexts()[s % n_ctx].id;
            const std::string gold = base.gold_of(ctx);

            // The surrogate is non-differentiable where a ratio sits exactly on
            // a clip boundary; replicate the step's sampling and skip draws
            // that land within 1e-2 of one.
            {
                Rng sampler(derive_seed(cfg.seed, 0, 0));
                bool near_kink = false;
                for (int i = 0; i < cfg.group_size; ++i) {
                    const auto [completion, lp_old] = old->sample(ctx, sampler);
                    const double rho = std::exp(policy.logp(ctx, completion) - lp_old);
                    if (std::fabs(rho - (1.0 - cfg.clip_epsilon)) < 1e-2 ||
                        std::fabs(rho - (1.0 + cfg.clip_epsilon)) < 1e-2) {
                        near_kink = true;
                        break;
                    }
                }
                if (near_kink) continue;
            }
            usable_draw = true;

            std::unordered_map<std::string, double> reward_cache;
            const RewardFn reward = [&](const std::string&, const std::string& completion) {
                auto it = reward_cache.find(completion);
                if (it != reward_cache.end()) return it->second;
                const double r = offline_reward_report(completion, gold, weights).composite;
                reward_cache.emplace(completion, r);
                return r;
            };

            const GrpoStepResult analytic =
                grpo_evaluate(policy, *old, *ref, {ctx}, reward, cfg, 0);

            const std::size_t offset = (s % n_ctx) * block;
            for (std::size_t k = 0; k < analytic.gradient.size(); ++k) {
                const bool inside = k >= offset && k < offset + block;
                if (!inside && analytic.gradient[k] != 0.0) {
                    detail = "gradient leaked outside the active context block";
                    return false;
                }
            }

            std::vector<double> fd(policy.param_count(), 0.0);
            for (std::size_t k = offset; k < offset + block; ++k) {
                double& theta_k = policy.params()[k];
                const double saved = theta_k;
                theta_k = saved + h;
                const double up = grpo_evaluate(policy, *old, *ref, {ctx}, reward, cfg, 0).objective;
                theta_k = saved - h;
                const double down =
                    grpo_evaluate(policy, *old, *ref, {ctx}, reward, cfg, 0).objective;
                theta_k = saved;
                fd[k] = (up - down) / (2.0 * h);
            }
            worst = std::max(worst, oracles::rel_error(analytic.gradient, fd));
        }
        if (!usable_draw) {
            detail = "could not find a kink-free sample draw";
            return false;
        }
    }
    const double elapsed = seconds_since(start);
    detail = fmt("max relative error %.3g over 50 seeds, %.1fs", worst, elapsed);
    return worst < 1e-4 && elapsed < 60.0;
}

// ---------------------------------------------------------------------------
// 2. Objective vs an independent term-by-term re-implementation
// ---------------------------------------------------------------------------

bool criterion_objective_oracle(std::string& detail) {
    Rng rng(20260814);
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t g = 2 + rng.next_u64() % 15;
        CandidateGroup group;
        group.prompt = "q";
        std::vector<double> rewards(g);
        for (std::size_t i = 0; i < g; ++i) {
            group.candidates.push_back("c" + std::to_string(i));
            group.logp_current.push_back(-5.0 * rng.next_double());
            group.logp_old.push_back(-5.0 * rng.next_double());
            group.logp_ref.push_back(-5.0 * rng.next_double());
            rewards[i] = rng.next_double();
        }
        GrpoConfig cfg;
        cfg.clip_epsilon = 0.05 + 0.4 * rng.next_double();
        cfg.kl_coeff = rng.next_double();
        const std::vector<double> advantages = compute_advantages(rewards, cfg.std_floor);
        const double lib = grpo_objective(group, advantages, cfg);
        const double oracle = oracles::naive_group_objective(group, advantages, cfg);
        worst = std::max(worst, std::fabs(lib - oracle));
    }
    detail = fmt("max absolute difference %.3g over 1000 groups", worst);
    return worst <= 1e-10;
}

// ---------------------------------------------------------------------------
// 3. Reward formula exactness
// ---------------------------------------------------------------------------

std::string random_canonical_query(Rng& rng) {
    static const std::vector<std::string> cols = {"a", "b", "c", "d", "price", "name"};
    static const std::vector<std::string> tabs = {"t", "u", "users", "orders"};
    auto pick = [&rng](const std::vector<std::string>& v) {
        return v[rng.next_u64() % v.size()];
    };
    std::string q = "select ";
    const std::size_t n = 1 + rng.next_u64() % 3;
    for (std::size_t i = 0; i < n; ++i) {
        if (i > 0) q += " , ";
        q += pick(cols);
    }
    q += " from " + pick(tabs);
    if (rng.next_u64() % 2 == 0) {
        q += " where " + pick(cols) + " > " + std::to_string(rng.next_u64() % 100);
    }
    if (rng.next_u64() % 3 == 0) q += " order by " + pick(cols);
    if (rng.next_u64() % 4 == 0) q += " limit " + std::to_string(1 + rng.next_u64() % 10);
    return canonical_sql(q);
}

// Hand-specified clause operand lists for the F1 fixtures; counts via hash map
// rather than the library's sort-merge.
using HandClauses = std::map<ClauseKind, std::vector<std::string>>;

double hand_multiset_f1(const HandClauses& pred, const HandClauses& gold) {
    std::vector<ClauseKind> kinds;
    for (const auto& [k, v] : pred) kinds.push_back(k);
    for (const auto& [k, v] : gold) {
        if (pred.find(k) == pred.end()) kinds.push_back(k);
    }
    double sum = 0.0;
    for (ClauseKind kind : kinds) {
        const auto pit = pred.find(kind);
        const auto git = gold.find(kind);
        if (pit == pred.end() || git == gold.end()) continue;  // one-sided: f1 stays 0
        if (pit->second.empty() && git->second.empty()) {
            sum += 1.0;
            continue;
        }
        std::unordered_map<std::string, int> counts;
        for (const std::string& t : git->second) ++counts[t];
        std::size_t overlap = 0;
        for (const std::string& t : pit->second) {
            auto it = counts.find(t);
            if (it != counts.end() && it->second > 0) {
                --it->second;
                ++overlap;
            }
        }
        const double precision =
            pit->second.empty() ? 0.0 : static_cast<double>(overlap) / pit->second.size();
        const double recall =
            git->second.empty() ? 0.0 : static_cast<double>(overlap) / git->second.size();
        sum += (precision + recall) > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
    }
    return sum / static_cast<double>(kinds.size());
}

bool criterion_reward_formulas(std::string& detail) {
    for (std::uint64_t x = 0; x <= 1000000; ++x) {
        if (execution_edit_reward(x) != 1.0 / (static_cast<double>(x) + 1.0)) {
            detail = "execution-edit reward differs at x = " + std::to_string(x);
            return false;
        }
    }

    Rng rng(0x57A7E);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::string a = random_canonical_query(rng);
        const std::string b = random_canonical_query(rng);
        if (string_match_reward(a, b) != oracles::brute_ratcliff(a, b)) {
            detail = "string match diverged from the brute-force oracle on '" + a + "' vs '" +
                     b + "'";
            return false;
        }
    }

    struct F1Fixture {
        const char* pred;
        const char* gold;
        HandClauses pred_clauses;
        HandClauses gold_clauses;
    };
    const std::vector<F1Fixture> fixtures = {
        {"select a , b from t", "select a , c from t",
         {{ClauseKind::select, {"a", ",", "b"}}, {ClauseKind::from, {"t"}}},
         {{ClauseKind::select, {"a", ",", "c"}}, {ClauseKind::from, {"t"}}}},
        {"select a from t", "select a from t where a > 1",
         {{ClauseKind::select, {"a"}}, {ClauseKind::from, {"t"}}},
         {{ClauseKind::select, {"a"}},
          {ClauseKind::from, {"t"}},
          {ClauseKind::where, {"a", ">", "1"}}}},
        {"select a from t order by a", "select a from t order by a desc",
         {{ClauseKind::select, {"a"}},
          {ClauseKind::from, {"t"}},
          {ClauseKind::order_by, {"a"}}},
         {{ClauseKind::select, {"a"}},
          {ClauseKind::from, {"t"}},
          {ClauseKind::order_by, {"a", "desc"}}}},
        {"select a , a from t", "select a from t",
         {{ClauseKind::select, {"a", ",", "a"}}, {ClauseKind::from, {"t"}}},
         {{ClauseKind::select, {"a"}}, {ClauseKind::from, {"t"}}}},
        {"select count ( a ) from t group by b having count ( a ) > 2",
         "select count ( a ) from t group by b having count ( a ) > 2",
         {{ClauseKind::select, {"count", "(", "a", ")"}},
          {ClauseKind::from, {"t"}},
          {ClauseKind::group_by, {"b"}},
          {ClauseKind::having, {"count", "(", "a", ")", ">", "2"}}},
         {{ClauseKind::select, {"count", "(", "a", ")"}},
          {ClauseKind::from, {"t"}},
          {ClauseKind::group_by, {"b"}},
          {ClauseKind::having, {"count", "(", "a", ")", ">", "2"}}}},
        {"select a from t left outer join u on x = y",
         "select a from t join u on x = y",
         {{ClauseKind::select, {"a"}},
          {ClauseKind::from, {"t"}},
          {ClauseKind::join, {"u", "on", "x", "=", "y"}}},
         {{ClauseKind::select, {"a"}},
          {ClauseKind::from, {"t"}},
          {ClauseKind::join, {"u", "on", "x", "=", "y"}}}},
        {"select from t", "select from t",
         {{ClauseKind::select, {}}, {ClauseKind::from, {"t"}}},
         {{ClauseKind::select, {}}, {ClauseKind::from, {"t"}}}},
    };
    double worst = 0.0;
    for (const F1Fixture& fx : fixtures) {
        const double lib = component_f1_reward(parse_sql(fx.pred), parse_sql(fx.gold));
        const double oracle = hand_multiset_f1(fx.pred_clauses, fx.gold_clauses);
        worst = std::max(worst, std::fabs(lib - oracle));
        if (std::fabs(lib - oracle) > 1e-12) {
            detail = std::string("component F1 diverged on '") + fx.pred + "' vs '" + fx.gold +
                     "': " + fmt("%.15f vs %.15f", lib, oracle);
            return false;
        }
    }
    // keyword-free inputs fall back to gestalt string matching
    const double fallback = component_f1_reward(parse_sql("foo bar"), parse_sql("foo baz"));
    if (std::fabs(fallback - 6.0 / 7.0) > 1e-12) {
        detail = "string-match fallback returned " + fmt("%.15f", fallback);
        return false;
    }
    detail = fmt("edit reward exact to 1e6; 1000 match pairs exact; F1 fixtures within %.3g",
                 worst);
    return true;
}

// ---------------------------------------------------------------------------
// 4. GRPO invariants
// ---------------------------------------------------------------------------

bool criterion_grpo_invariants(std::string& detail) {
    Rng rng(0x1BADB002);

    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t g = 2 + rng.next_u64() % 63;
        std::vector<double> rewards(g);
        for (double& r : rewards) r = rng.next_double();
        const std::vector<double> adv = compute_advantages(rewards, 1e-8);
        double sum = 0.0;
        for (double a : adv) sum += a;
        if (std::fabs(sum) > 1e-12 * static_cast<double>(g)) {
            detail = fmt("advantage mean drifted to %.3g at G = %.0f", sum,
                         static_cast<double>(g));
            return false;
        }
    }

    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t g = 2 + rng.next_u64() % 15;
        std::vector<double> cur(g), ref(g);
        for (std::size_t i = 0; i < g; ++i) {
            cur[i] = -8.0 * rng.next_double();
            ref[i] = -8.0 * rng.next_double();
        }
        if (kl_penalty(cur, ref) < 0.0) {
            detail = "KL estimator went negative";
            return false;
        }
    }

    // reward-shift invariance, end to end through the evaluation
    {
        const ToyPolicy base = default_policy();
        const auto weights = preset_weights("best-one");
        double worst = 0.0;
        for (int trial = 0; trial < 5; ++trial) {
            ToyPolicy policy = base;
            Rng noise(derive_seed(0x5517, trial));
            for (double& p : policy.params()) p += (noise.next_double() * 2 - 1) * 0.5;
            std::unique_ptr<Policy> old = policy.snapshot();
            std::unique_ptr<Policy> ref = base.snapshot();
            GrpoConfig cfg;
            cfg.seed = derive_seed(0x5E5E, trial);
            const std::string ctx = base.contexts()[trial % base.contexts().size()].id;
            const std::string gold = base.gold_of(ctx);
            const double shift = 0.37;
            const RewardFn plain = [&](const std::string&, const std::string& completion) {
                return offline_reward_report(completion, gold, weights).composite;
            };
            const RewardFn shifted = [&](const std::string& c, const std::string& completion) {
                return plain(c, completion) + shift;
            };
            const GrpoStepResult a = grpo_evaluate(policy, *old, *ref, {ctx}, plain, cfg, 0);
            const GrpoStepResult b = grpo_evaluate(policy, *old, *ref, {ctx}, shifted, cfg, 0);
            worst = std::max(worst, std::fabs(a.objective - b.objective));
            for (std::size_t k = 0; k < a.gradient.size(); ++k) {
                worst = std::max(worst, std::fabs(a.gradient[k] - b.gradient[k]));
            }
        }
        if (worst > 1e-10) {
            detail = fmt("reward shift moved the objective/gradient by %.3g", worst);
            return false;
        }
    }

    // clip-branch behavior on adversarial ratios, hand-computed values
    {
        const double eps = 0.2;
        const std::vector<double> rhos = {0.0, 1.0 - 2 * eps, 1.0, 1.0 + 2 * eps, 10.0};
        const std::vector<double> expected = {-0.4, -0.1, 0.0, -0.1, -4.4};
        for (std::size_t i = 0; i < rhos.size(); ++i) {
            CandidateGroup group;
            group.prompt = "q";
            group.candidates = {"x", "y"};
            const double lp_cur =
                rhos[i] == 0.0 ? -800.0 : -1.0 + std::log(rhos[i]);
            group.logp_current = {lp_cur, lp_cur};
            group.logp_old = {-1.0, -1.0};
            group.logp_ref = group.logp_current;  // zero KL term
            GrpoConfig cfg;
            cfg.clip_epsilon = eps;
            cfg.kl_coeff = 0.0;
            const double value = grpo_objective(group, {1.0, -1.0}, cfg);
            if (std::fabs(value - expected[i]) > 1e-12) {
                detail = fmt("clip fixture rho=%.1f gave %.12f", rhos[i], value);
                return false;
            }
        }
    }

    detail = "advantage centering, KL sign, shift invariance, clip branches all hold";
    return true;
}

// ---------------------------------------------------------------------------
// 5 & 6. Training regression and preset ordering
// ---------------------------------------------------------------------------

struct TrainingOutcome {
    double baseline = 0.0;
    double final_reward = 0.0;
    std::string metric_stream;
};

TrainingOutcome run_training(const std::string& preset, std::uint64_t seed) {
    ToyPolicy policy = default_policy();
    std::vector<std::string> prompts;
    for (const GrammarContext& ctx : policy.contexts()) prompts.push_back(ctx.id);
    const auto weights = preset_weights(preset);
    const RewardFn reward = [&](const std::string& context, const std::string& completion) {
        return offline_reward_report(completion, policy.gold_of(context), weights).composite;
    };
    GrpoConfig cfg;
    cfg.steps = 500;
    cfg.group_size = 8;
    cfg.learning_rate = 1e-3;
    cfg.seed = seed;
    GrpoTrainer trainer(policy, prompts, reward, cfg);

    TrainingOutcome outcome;
    for (int s = 0; s < cfg.steps; ++s) {
        const GrpoStepResult result = trainer.step();
        if (s == 0) outcome.baseline = result.mean_reward;
        outcome.final_reward = result.mean_reward;
        ordered_json row;
        row["step"] = s;
        row["objective"] = result.objective;
        row["kl"] = result.kl;
        row["clip_fraction"] = result.clip_fraction;
        row["mean_reward"] = result.mean_reward;
        outcome.metric_stream += row.dump() + "\n";
    }
    return outcome;
}

bool criterion_training_regression(std::string& detail) {
    const auto start = Clock::now();
    const TrainingOutcome first = run_training("best-one", 42);
    const double elapsed = seconds_since(start);
    const TrainingOutcome second = run_training("best-one", 42);

    const double gain = first.final_reward - first.baseline;
    detail = fmt("gain %+.4f over 500 steps, %.1fs, ", gain, elapsed) +
             (first.metric_stream == second.metric_stream ? "reruns byte-identical"
                                                          : "RERUNS DIVERGED");
    return gain >= 0.3 && elapsed < 300.0 && first.metric_stream == second.metric_stream;
}

bool criterion_preset_ordering(std::string& detail) {
    double worst_margin = 1e9;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const double one = run_training("best-one", seed).final_reward;
        const double four = run_training("best-four", seed).final_reward;
        worst_margin = std::min(worst_margin, four - one);
    }
    detail = fmt("min(best-four final - best-one final) = %+.4f across seeds 1-5", worst_margin);
    return worst_margin >= -0.05;
}

// ---------------------------------------------------------------------------
// 7. Prompt fidelity against the committed golden transcriptions
// ---------------------------------------------------------------------------

bool criterion_prompt_fidelity(std::string& detail) {
    const std::string schema = "CREATE TABLE users (id INTEGER PRIMARY KEY, name TEXT);";
    const std::string instruction = "List the names of all users.";
    const std::string candidate = "SELECT name FROM users";
    const std::string correct = "SELECT name FROM users ORDER BY name";
    const std::vector<std::string> queries = {"SELECT name FROM users", "SELECT id FROM users"};

    const std::vector<std::pair<std::string, std::string>> renders = {
        {"cot_generate.txt", make_cot_generate_request(schema, instruction).prompt},
        {"cot_verify.txt", make_cot_verify_request(candidate, schema, correct).prompt},
        {"edit_count.txt", make_edit_count_request(queries, schema, correct).prompt},
        {"class_grade.txt", make_class_grade_request(queries, correct).prompt},
    };
    for (const auto& [name, prompt] : renders) {
        const std::string golden = testutil::read_file(testutil::source_path("tests/golden/" + name));
        if (prompt != golden) {
            detail = name + " differs from the rendered prompt";
            return false;
        }
    }
    detail = "4 rendered prompts match their golden files byte-for-byte";
    return true;
}

// ---------------------------------------------------------------------------
// 8. Pipeline conservation on a randomized judge
// ---------------------------------------------------------------------------

bool criterion_pipeline_conservation(std::string& detail) {
    auto mock = std::make_shared<MockTransport>();
    std::size_t sent_correct = 0, sent_wrong = 0, sent_garbage = 0, sent_failure = 0;
    Rng verdict_rng(0xC0DE5EED);
    mock->set_handler([&](const JudgeRequest&) -> TransportResult {
        switch (verdict_rng.next_u64() % 4) {
            case 0: ++sent_correct; return {200, "Correct"};
            case 1: ++sent_wrong; return {200, "Wrong"};
            case 2: ++sent_garbage; return {200, "neither one thing nor the other"};
            default: ++sent_failure; return {500, "upstream unavailable"};
        }
    });
    GatewayConfig cfg;
    cfg.max_retries = 0;
    cfg.backoff_base_ms = 0;
    cfg.cache_enabled = false;
    JudgeGateway gateway(mock, cfg);

    std::vector<CotRecord> records;
    records.reserve(10000);
    for (int i = 0; i < 10000; ++i) {
        CotRecord record;
        record.schema = "CREATE TABLE t (a INTEGER);";
        record.instruction = "Row " + std::to_string(i) + ".";
        record.sql = "SELECT a FROM t WHERE a = " + std::to_string(i);
        record.gold_sql = record.sql;
        records.push_back(std::move(record));
    }
    const FilterResult result = verify_and_filter(std::move(records), gateway);

    const bool conserved =
        result.stats.passed + result.stats.failed + result.stats.quarantined ==
            result.stats.total &&
        result.stats.total == 10000 && result.all.size() == 10000 &&
        result.kept.size() == result.stats.passed &&
        result.stats.passed == sent_correct && result.stats.failed == sent_wrong &&
        result.stats.quarantined == sent_garbage + sent_failure;
    detail = "passed " + std::to_string(result.stats.passed) + " + failed " +
             std::to_string(result.stats.failed) + " + quarantined " +
             std::to_string(result.stats.quarantined) + " = " +
             std::to_string(result.stats.total);
    return conserved;
}

// ---------------------------------------------------------------------------
// 9. Edit-distance oracle and metric axioms
// ---------------------------------------------------------------------------

bool criterion_edit_distance(std::string& detail) {
    static const std::vector<std::string> vocab = {"select", "from", "where", "a", "b",
                                                   "t",      "u",    "1",     "=", ">"};
    Rng rng(0xED17);
    auto random_tokens = [&rng](std::size_t max_len) {
        std::vector<std::string> tokens(rng.next_u64() % (max_len + 1));
        for (std::string& t : tokens) t = vocab[rng.next_u64() % vocab.size()];
        return tokens;
    };
    auto join = [](const std::vector<std::string>& tokens) {
        std::string out;
        for (const std::string& t : tokens) {
            if (!out.empty()) out.push_back(' ');
            out += t;
        }
        return out;
    };

    for (int trial = 0; trial < 1000; ++trial) {
        const std::vector<std::string> a = random_tokens(12);
        const std::vector<std::string> b = random_tokens(12);
        const std::size_t lib = local_edit_count(parse_sql(join(a)), parse_sql(join(b)));
        if (lib != oracles::dp_levenshtein(a, b)) {
            detail = "edit count diverged on '" + join(a) + "' vs '" + join(b) + "'";
            return false;
        }
    }

    for (int trial = 0; trial < 300; ++trial) {
        const auto a = random_tokens(8);
        const auto b = random_tokens(8);
        const auto c = random_tokens(8);
        const std::size_t dab = token_levenshtein(a, b);
        if (dab != token_levenshtein(b, a)) {
            detail = "symmetry violated";
            return false;
        }
        if ((dab == 0) != (a == b)) {
            detail = "identity of indiscernibles violated";
            return false;
        }
        if (dab > token_levenshtein(a, c) + token_levenshtein(c, b)) {
            detail = "triangle inequality violated";
            return false;
        }
    }
    detail = "1000 pairs match the DP oracle; metric axioms hold on 300 triples";
    return true;
}

}  // namespace

int main() {
    struct Criterion {
        int id;
        const char* description;
        std::function<bool(std::string&)> check;
    };
    const std::vector<Criterion> criteria = {
        {1, "analytic gradient matches central finite differences", criterion_gradient},
        {2, "group objective matches the term-by-term oracle", criterion_objective_oracle},
        {3, "reward formulas are exact against independent oracles", criterion_reward_formulas},
        {4, "advantage, KL, shift, and clip invariants hold", criterion_grpo_invariants},
        {5, "toy training improves mean reward by >= 0.3, reproducibly",
         criterion_training_regression},
        {6, "four-part reward preset does not degrade final reward", criterion_preset_ordering},
        {7, "judge prompts match golden transcriptions byte-for-byte",
         criterion_prompt_fidelity},
        {8, "verification stats conserve records under a flaky judge",
         criterion_pipeline_conservation},
        {9, "edit distance matches the DP oracle and metric axioms", criterion_edit_distance},
    };

    bool all_ok = true;
    for (const Criterion& criterion : criteria) {
        std::string detail;
        bool ok = false;
        try {
            ok = criterion.check(detail);
        } catch (const std::exception& e) {
            detail = std::string("unexpected exception: ") + e.what();
            ok = false;
        }
        std::printf("%s criterion %d: %s%s%s\n", ok ? "PASS" : "FAIL", criterion.id,
                    criterion.description, detail.empty() ? "" : " — ", detail.c_str());
        std::fflush(stdout);
        all_ok = all_ok && ok;
    }
    return all_ok ? 0 : 1;
}
