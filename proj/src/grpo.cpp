#include "sqlrl/grpo.hpp"

#include <algorithm>
#include <cmath>

#include "sqlrl/error.hpp"

namespace sqlrl {

void validate(const GrpoConfig& cfg) {
    if (cfg.group_size < 2) {
        raise(Errc::bad_config, "group_size must be >= 2, got " + std::to_string(cfg.group_size));
    }
    if (!(cfg.clip_epsilon > 0.0 && cfg.clip_epsilon < 1.0)) {
        raise(Errc::bad_config, "clip_epsilon must lie in (0,1)");
    }
    if (!(cfg.kl_coeff >= 0.0) || !std::isfinite(cfg.kl_coeff)) {
        raise(Errc::bad_config, "kl_coeff must be >= 0");
    }
    if (!std::isfinite(cfg.learning_rate)) {
        raise(Errc::bad_config, "learning_rate must be finite");
    }
    if (!(cfg.std_floor > 0.0)) {
        raise(Errc::bad_config, "std_floor must be > 0");
    }
    if (cfg.steps < 0) {
        raise(Errc::bad_config, "steps must be >= 0");
    }
    if (cfg.old_refresh_interval < 1) {
        raise(Errc::bad_config, "old_refresh_interval must be >= 1");
    }
}

std::vector<double> compute_advantages(const std::vector<double>& rewards, double std_floor) {
    if (rewards.size() < 2) {
        raise(Errc::empty_batch,
              "group-relative advantages need at least 2 rewards, got " +
                  std::to_string(rewards.size()));
    }
    double mean = 0.0;
    for (double r : rewards) {
        if (!std::isfinite(r)) raise(Errc::bad_config, "non-finite reward in group");
        mean += r;
    }
    mean /= static_cast<double>(rewards.size());

    double var = 0.0;
    for (double r : rewards) var += (r - mean) * (r - mean);
    var /= static_cast<double>(rewards.size());  // population variance
    const double denom = std::sqrt(var) + std_floor;

    std::vector<double> advantages(rewards.size());
    for (std::size_t i = 0; i < rewards.size(); ++i) {
        advantages[i] = (rewards[i] - mean) / denom;
    }
    return advantages;
}

double kl_penalty(const std::vector<double>& logp_current, const std::vector<double>& logp_ref) {
    if (logp_current.size() != logp_ref.size()) {
        raise(Errc::length_mismatch, "kl_penalty: " + std::to_string(logp_current.size()) +
                                         " current vs " + std::to_string(logp_ref.size()) +
                                         " ref log-probs");
    }
    if (logp_current.empty()) {
        raise(Errc::empty_batch, "kl_penalty on empty group");
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < logp_current.size(); ++i) {
        const double d = logp_ref[i] - logp_current[i];
        acc += std::expm1(d) - d;  // exp(d) - d - 1, >= 0
    }
    return acc / static_cast<double>(logp_current.size());
}

namespace {

double importance_ratio(double logp_current, double logp_old) {
    const double rho = std::exp(logp_current - logp_old);
    if (!std::isfinite(rho)) {
        raise(Errc::non_finite_ratio,
              "importance ratio overflow: logp_current=" + std::to_string(logp_current) +
                  " logp_old=" + std::to_string(logp_old));
    }
    return rho;
}

void check_group(const CandidateGroup& group) {
    const std::size_t g = group.candidates.size();
    if (g < 2) {
        raise(Errc::empty_batch, "candidate group needs G >= 2, got " + std::to_string(g));
    }
    if (group.logp_current.size() != g || group.logp_old.size() != g ||
        group.logp_ref.size() != g) {
        raise(Errc::length_mismatch, "log-prob vectors do not all have length G");
    }
}

}  // namespace

double grpo_objective(const CandidateGroup& group, const std::vector<double>& advantages,
                      const GrpoConfig& cfg) {
    check_group(group);
    const std::size_t g = group.candidates.size();
    if (advantages.size() != g) {
        raise(Errc::length_mismatch, "advantage vector length != G");
    }
    const double lo = 1.0 - cfg.clip_epsilon;
    const double hi = 1.0 + cfg.clip_epsilon;

    double surrogate = 0.0;
    for (std::size_t i = 0; i < g; ++i) {
        const double rho = importance_ratio(group.logp_current[i], group.logp_old[i]);
        const double unclipped = rho * advantages[i];
        const double clipped = std::clamp(rho, lo, hi) * advantages[i];
        surrogate += std::min(unclipped, clipped);
    }
    surrogate /= static_cast<double>(g);
    return surrogate - cfg.kl_coeff * kl_penalty(group.logp_current, group.logp_ref);
}

GrpoStepResult grpo_evaluate(const Policy& policy, const Policy& old_policy,
                             const Policy& ref_policy, const std::vector<std::string>& prompts,
                             const RewardFn& reward_fn, const GrpoConfig& cfg,
                             std::uint64_t step_index) {
    validate(cfg);
    if (prompts.empty()) {
        raise(Errc::empty_batch, "grpo step over an empty prompt batch");
    }

    GrpoStepResult result;
    result.group_count = prompts.size();
    result.gradient.assign(policy.param_count(), 0.0);

    const std::size_t g = static_cast<std::size_t>(cfg.group_size);
    const double lo = 1.0 - cfg.clip_epsilon;
    const double hi = 1.0 + cfg.clip_epsilon;

    double objective_acc = 0.0;
    double kl_acc = 0.0;
    double reward_acc = 0.0;
    std::size_t clipped_count = 0;

    for (std::size_t gi = 0; gi < prompts.size(); ++gi) {
        const std::string& prompt = prompts[gi];
        Rng rng(derive_seed(cfg.seed, step_index, gi));

        std::vector<double> rewards(g);
        std::vector<std::string> candidates(g);
        std::vector<double> logp_old(g), logp_cur(g), logp_ref(g);
        for (std::size_t i = 0; i < g; ++i) {
            auto [completion, lp_old] = old_policy.sample(prompt, rng);
            candidates[i] = std::move(completion);
            logp_old[i] = lp_old;
            logp_cur[i] = policy.logp(prompt, candidates[i]);
            logp_ref[i] = ref_policy.logp(prompt, candidates[i]);
            rewards[i] = reward_fn(prompt, candidates[i]);
            reward_acc += rewards[i];
        }

        const std::vector<double> advantages = compute_advantages(rewards, cfg.std_floor);
        result.advantages.insert(result.advantages.end(), advantages.begin(), advantages.end());

        double surrogate = 0.0;
        for (std::size_t i = 0; i < g; ++i) {
            const double rho = importance_ratio(logp_cur[i], logp_old[i]);
            const double unclipped = rho * advantages[i];
            const double clipped = std::clamp(rho, lo, hi) * advantages[i];
            surrogate += std::min(unclipped, clipped);
            if (clipped < unclipped) {
                ++clipped_count;  // clipped branch active: d(surrogate)/d(theta) = 0
            } else {
                policy.add_grad_logp(prompt, candidates[i],
                                     advantages[i] * rho / static_cast<double>(g),
                                     result.gradient);
            }
            // KL term: d/d(theta) of (1/G) sum expm1(d)-d with d = ref - cur is
            // (1/G)(1 - exp(d)) grad_logp, entering the objective with -beta.
            const double d = logp_ref[i] - logp_cur[i];
            policy.add_grad_logp(prompt, candidates[i],
                                 cfg.kl_coeff * std::expm1(d) / static_cast<double>(g),
                                 result.gradient);
        }
        surrogate /= static_cast<double>(g);
        const double kl = kl_penalty(logp_cur, logp_ref);
        objective_acc += surrogate - cfg.kl_coeff * kl;
        kl_acc += kl;
    }

    const double groups = static_cast<double>(prompts.size());
    result.objective = objective_acc / groups;
    result.kl = kl_acc / groups;
    result.clip_fraction =
        static_cast<double>(clipped_count) / (groups * static_cast<double>(g));
    result.mean_reward = reward_acc / (groups * static_cast<double>(g));
    return result;
}

GrpoStepResult grpo_step(Policy& policy, const Policy& old_policy, const Policy& ref_policy,
                         const std::vector<std::string>& prompts, const RewardFn& reward_fn,
                         const GrpoConfig& cfg, std::uint64_t step_index) {
    GrpoStepResult result =
        grpo_evaluate(policy, old_policy, ref_policy, prompts, reward_fn, cfg, step_index);
    std::vector<double>& params = policy.params();
    for (std::size_t k = 0; k < params.size(); ++k) {
        params[k] += cfg.learning_rate * result.gradient[k];
    }
    return result;
}

GrpoTrainer::GrpoTrainer(Policy& policy, std::vector<std::string> prompts, RewardFn reward_fn,
                         GrpoConfig cfg)
    : policy_(policy),
      prompts_(std::move(prompts)),
      reward_fn_(std::move(reward_fn)),
      cfg_(cfg),
      ref_(policy.snapshot()),
      old_(policy.snapshot()) {
    validate(cfg_);
    if (prompts_.empty()) {
        raise(Errc::empty_batch, "trainer constructed with no prompts");
    }
}

GrpoStepResult GrpoTrainer::step() {
    if (step_index_ % static_cast<std::uint64_t>(cfg_.old_refresh_interval) == 0) {
        old_ = policy_.snapshot();
    }
    GrpoStepResult result =
        grpo_step(policy_, *old_, *ref_, prompts_, reward_fn_, cfg_, step_index_);
    ++step_index_;
    return result;
}

}  // namespace sqlrl
