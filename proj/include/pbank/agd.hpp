#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "pbank/error.hpp"
#include "pbank/rng.hpp"

namespace pbank {

/// Pair-batch sampling knobs forwarded to sample_pairs each iteration.
/// Counts are clamped to what the label set actually holds.
struct PairBatchConfig {
    std::size_t n_pos = 256;
    std::size_t n_neg = 256;
    bool include_diagonal = true;
};

/// Shared trainer settings for the linear and kernel paths.
struct TrainerConfig {
    double lambda = 1.0;           // hinge weight vs. the margin regularizer
    std::size_t max_iters = 70;
    double initial_step = 1.0;     // gamma_0
    double grow_factor = 1.2;      // gamma multiplier after an accepted step
    double shrink_factor = 0.5;    // gamma multiplier after a rejected step
    double stop_tolerance = 1e-6;  // relative change of accepted objectives
    double perturbation_scale = 1e-4;
    PairBatchConfig pair_batch;
    std::uint64_t seed = 0;
    bool resample_pairs = true;    // false: one batch drawn up front
    bool augment_bias = false;     // append a -1 coordinate per subspace
    bool kernel_mu_full_n = false; // normalize mu by N instead of the basis count

    void validate() const {
        require(lambda >= 0.0, errc::invalid_argument, "lambda must be >= 0");
        require(max_iters >= 1, errc::invalid_argument, "max_iters must be >= 1");
        require(initial_step > 0.0, errc::invalid_argument, "initial step must be > 0");
        require(grow_factor > 1.0, errc::invalid_argument, "grow_factor must be > 1");
        require(shrink_factor > 0.0 && shrink_factor < 1.0, errc::invalid_argument,
                "shrink_factor must be in (0,1)");
        require(stop_tolerance > 0.0, errc::invalid_argument, "stop_tolerance must be > 0");
        require(perturbation_scale > 0.0, errc::invalid_argument,
                "perturbation_scale must be > 0");
    }
};

struct AgdStep {
    double gamma_before = 0.0;
    double gamma_after = 0.0;
    double objective_before = 0.0;
    double objective_after = 0.0;
    bool accepted = false;
    bool perturbed = false;  // an exactly-zero margin forced a random nudge
};

struct AgdTrace {
    std::vector<AgdStep> steps;
    bool degenerate = false;
    bool converged = false;  // stopped on the objective-difference test
};

/// Adaptive gradient descent shared by the linear and kernel trainers.
///
/// Problem interface:
///   std::size_t dim() const
///   void sample_batch(std::mt19937_64& rng)       -- refreshes the active batch
///   bool has_zero_margin(const std::vector<double>& w) const
///   double batch_objective(const std::vector<double>& w) const
///   std::vector<double> batch_gradient(const std::vector<double>& w) const
///
/// Per iteration: one gradient step from the current point; the step is kept
/// only if the same-batch objective did not increase, in which case gamma
/// grows by grow_factor; otherwise the step is rolled back and gamma
/// shrinks. Stops at max_iters or when successive accepted objectives agree
/// within stop_tolerance (relative). Rejected steps leave the objective
/// unchanged, so the stop test only looks at accepted values.
template <typename Problem>
std::vector<double> agd_minimize(Problem& problem, const TrainerConfig& cfg,
                                 std::mt19937_64& rng, AgdTrace* trace = nullptr) {
    cfg.validate();
    std::vector<double> w = random_direction(problem.dim(), 1.0, rng);
    double gamma = cfg.initial_step;
    std::optional<double> last_accepted;

    problem.sample_batch(rng);
    for (std::size_t iter = 0; iter < cfg.max_iters; ++iter) {
        if (cfg.resample_pairs && iter > 0) problem.sample_batch(rng);

        bool perturbed = false;
        for (int attempt = 0; attempt < 16 && problem.has_zero_margin(w); ++attempt) {
            const auto delta = random_direction(w.size(), cfg.perturbation_scale, rng);
            for (std::size_t t = 0; t < w.size(); ++t) w[t] += delta[t];
            perturbed = true;
        }

        const double obj_before = problem.batch_objective(w);
        const auto grad = problem.batch_gradient(w);
        std::vector<double> w_next(w.size());
        for (std::size_t t = 0; t < w.size(); ++t) w_next[t] = w[t] - gamma * grad[t];
        const double obj_after = problem.batch_objective(w_next);

        const bool accepted = obj_after <= obj_before;  // NaN/inf objectives reject
        AgdStep step{gamma, 0.0, obj_before, obj_after, accepted, perturbed};
        if (accepted) {
            w = std::move(w_next);
            gamma *= cfg.grow_factor;
        } else {
            gamma *= cfg.shrink_factor;
        }
        step.gamma_after = gamma;
        if (trace) trace->steps.push_back(step);

        if (accepted) {
            if (last_accepted) {
                const double scale = std::max(1.0, std::abs(*last_accepted));
                if (std::abs(obj_after - *last_accepted) < cfg.stop_tolerance * scale) {
                    if (trace) trace->converged = true;
                    last_accepted = obj_after;
                    break;
                }
            }
            last_accepted = obj_after;
        }
    }

    for (double v : w)
        require(std::isfinite(v), errc::non_finite_value, "trainer produced non-finite weights");
    return w;
}

}  // namespace pbank
