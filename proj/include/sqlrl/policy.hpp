#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "sqlrl/rng.hpp"

namespace sqlrl {

/// Behavioral contract the GRPO core optimizes against: a distribution over
/// completions per prompt context with exact log-probabilities and the
/// analytic gradient of log-probability with respect to the parameter vector.
class Policy {
public:
    virtual ~Policy() = default;

    /// Draw one completion for `context`; returns (completion, log-prob).
    virtual std::pair<std::string, double> sample(const std::string& context, Rng& rng) const = 0;

    /// Exact log pi(completion | context).
    virtual double logp(const std::string& context, const std::string& completion) const = 0;

    /// Accumulate scale * d(log pi)/d(theta) into `grad` (length param_count()).
    virtual void add_grad_logp(const std::string& context, const std::string& completion,
                               double scale, std::vector<double>& grad) const = 0;

    virtual std::size_t param_count() const = 0;
    virtual std::vector<double>& params() = 0;
    virtual const std::vector<double>& params() const = 0;

    /// Deep, immutable-by-convention copy used for the old/reference policies.
    virtual std::unique_ptr<Policy> snapshot() const = 0;

    /// Convenience wrapper over add_grad_logp.
    std::vector<double> grad_logp(const std::string& context,
                                  const std::string& completion) const {
        std::vector<double> grad(param_count(), 0.0);
        add_grad_logp(context, completion, 1.0, grad);
        return grad;
    }
};

}  // namespace sqlrl
