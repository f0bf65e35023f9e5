#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "sqlrl/policy.hpp"

namespace sqlrl {

struct GrpoConfig {
    int group_size = 8;
    double clip_epsilon = 0.2;
    double kl_coeff = 0.04;
    double learning_rate = 1e-6;
    double std_floor = 1e-8;       // advantage denominator floor
    int steps = 100;
    std::uint64_t seed = 42;
    int old_refresh_interval = 1;  // steps between old-policy snapshots (1 = fully on-policy)
};

/// Throws Errc::bad_config on out-of-range fields.
void validate(const GrpoConfig& cfg);

/// One prompt with G sampled completions and their log-probabilities under the
/// current / behavior (old) / reference policies.
struct CandidateGroup {
    std::string prompt;
    std::vector<std::string> candidates;
    std::vector<double> logp_current;
    std::vector<double> logp_old;
    std::vector<double> logp_ref;
    std::vector<double> rewards;  // scalar (already-composited) rewards
};

struct GrpoStepResult {
    double objective = 0.0;      // mean per-group objective
    double kl = 0.0;             // mean per-group KL estimate
    double clip_fraction = 0.0;  // candidates whose surrogate sat on the clipped branch
    double mean_reward = 0.0;
    std::size_t group_count = 0;
    std::vector<double> advantages;  // concatenated group-by-group
    std::vector<double> gradient;    // ascent direction actually applied (summed over groups)
};

/// Group-relative advantages: (r_i - mean) / (population std + floor).
/// Output mean is 0 within 1e-12. Requires at least 2 rewards.
std::vector<double> compute_advantages(const std::vector<double>& rewards, double std_floor);

/// Non-negative per-candidate KL estimator, averaged over the group:
/// k_i = exp(d_i) - d_i - 1 with d_i = logp_ref_i - logp_current_i.
/// Zero iff logp_current == logp_ref; its expectation under the current policy
/// is the exact KL(current || ref).
double kl_penalty(const std::vector<double>& logp_current, const std::vector<double>& logp_ref);

/// Clipped-surrogate objective for one group:
///   (1/G) sum_i min(rho_i A_i, clip(rho_i, 1-eps, 1+eps) A_i) - beta * KL,
/// with rho_i = exp(logp_current_i - logp_old_i).
double grpo_objective(const CandidateGroup& group, const std::vector<double>& advantages,
                      const GrpoConfig& cfg);

using RewardFn =
    std::function<double(const std::string& context, const std::string& completion)>;

/// One training step: samples G candidates per prompt from the old policy,
/// scores them, computes advantages and the analytic gradient of the
/// objective, and applies one gradient-ascent step to `policy`. The reported
/// objective/kl are means over prompt groups; the applied gradient is the sum
/// of per-group gradients. Deterministic given (cfg.seed, step_index).
GrpoStepResult grpo_step(Policy& policy, const Policy& old_policy, const Policy& ref_policy,
                         const std::vector<std::string>& prompts, const RewardFn& reward_fn,
                         const GrpoConfig& cfg, std::uint64_t step_index);

/// Objective + gradient evaluation without touching parameters; grpo_step is
/// this plus the ascent update.
GrpoStepResult grpo_evaluate(const Policy& policy, const Policy& old_policy,
                             const Policy& ref_policy, const std::vector<std::string>& prompts,
                             const RewardFn& reward_fn, const GrpoConfig& cfg,
                             std::uint64_t step_index);

/// Drives grpo_step over a fixed prompt set, refreshing the old-policy
/// snapshot on the configured interval. The reference snapshot is frozen at
/// construction.
class GrpoTrainer {
public:
    GrpoTrainer(Policy& policy, std::vector<std::string> prompts, RewardFn reward_fn,
                GrpoConfig cfg);

    GrpoStepResult step();
    std::uint64_t step_index() const { return step_index_; }
    const Policy& reference() const { return *ref_; }

private:
    Policy& policy_;
    std::vector<std::string> prompts_;
    RewardFn reward_fn_;
    GrpoConfig cfg_;
    std::unique_ptr<Policy> ref_;
    std::unique_ptr<Policy> old_;
    std::uint64_t step_index_ = 0;
};

}  // namespace sqlrl
