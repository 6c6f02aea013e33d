#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "etdlab/common.hpp"
#include "etdlab/divergence_data.hpp"
#include "etdlab/instance.hpp"
#include "etdlab/operators.hpp"
#include "etdlab/spec_io.hpp"

namespace etdlab {

// Two-state Left/Right chain: two actions move deterministically to Left or
// Right; the behavior policy picks Right with probability epsilon while the
// target picks Left with probability epsilon. Reward 1 for choosing Right,
// 0 otherwise; tabular features.
inline Instance fixture_two_state(double epsilon, double gamma) {
    require(epsilon > 0.0 && epsilon < 1.0, "parameter_range", "epsilon must lie in (0, 1)");
    require(gamma >= 0.0 && gamma < 1.0, "parameter_range", "gamma must lie in [0, 1)");

    Eigen::MatrixXd go_left(2, 2), go_right(2, 2);
    go_left << 1, 0, 1, 0;
    go_right << 0, 1, 0, 1;

    Eigen::MatrixXd reward(2, 2);
    reward << 0, 1, 0, 1;

    Eigen::MatrixXd target(2, 2), behavior(2, 2);
    target << epsilon, 1.0 - epsilon, epsilon, 1.0 - epsilon;
    behavior << 1.0 - epsilon, epsilon, 1.0 - epsilon, epsilon;

    return Instance{TabularMdp({go_left, go_right}, reward, gamma, Eigen::VectorXd::Constant(2, 0.5)),
                    Policy(target),
                    Policy(behavior),
                    FeatureMap::tabular(2),
                    InterestVector::ones(2),
                    0.0,
                    "two_state"};
}

struct RandomFixtureParams {
    std::uint64_t seed = 1;
    int n_states = 5;
    int n_actions = 3;
    double min_prob = 0.05;
    double gamma = 0.9;
    int n_features = 0;  // 0 -> tabular identity
};

namespace detail {

inline Eigen::VectorXd random_prob_row(std::mt19937_64& rng, int n, double min_prob) {
    Eigen::VectorXd w(n);
    for (int i = 0; i < n; ++i) w[i] = -std::log(1.0 - uniform01(rng));
    w /= w.sum();
    return Eigen::VectorXd::Constant(n, min_prob) + (1.0 - n * min_prob) * w;
}

}  // namespace detail

// Seeded random MDP with every transition and action probability at least
// min_prob, which makes the induced chains ergodic and the policy pair fully
// covering by construction.
inline Instance fixture_random(const RandomFixtureParams& params) {
    require(params.n_states >= 1 && params.n_actions >= 1, "parameter_range",
            "need at least one state and one action");
    require(params.min_prob > 0.0, "parameter_range", "min_prob must be positive");
    require(params.n_states * params.min_prob <= 1.0 &&
                params.n_actions * params.min_prob <= 1.0,
            "parameter_range", "infeasible min_prob for the requested sizes");
    require(params.gamma >= 0.0 && params.gamma < 1.0, "parameter_range",
            "gamma must lie in [0, 1)");
    require(params.n_features >= 0 && params.n_features <= params.n_states, "parameter_range",
            "feature count must lie in [0, |S|]");

    std::mt19937_64 rng(params.seed);
    const int n = params.n_states;
    const int n_actions = params.n_actions;

    std::vector<Eigen::MatrixXd> transition(static_cast<std::size_t>(n_actions),
                                            Eigen::MatrixXd(n, n));
    for (auto& page : transition)
        for (int s = 0; s < n; ++s)
            page.row(s) = detail::random_prob_row(rng, n, params.min_prob).transpose();

    Eigen::MatrixXd reward(n, n_actions);
    for (int s = 0; s < n; ++s)
        for (int a = 0; a < n_actions; ++a) reward(s, a) = uniform_pm1(rng);

    Eigen::MatrixXd target(n, n_actions), behavior(n, n_actions);
    for (int s = 0; s < n; ++s)
        target.row(s) = detail::random_prob_row(rng, n_actions, params.min_prob).transpose();
    for (int s = 0; s < n; ++s)
        behavior.row(s) = detail::random_prob_row(rng, n_actions, params.min_prob).transpose();

    Eigen::MatrixXd phi;
    if (params.n_features == 0) {
        phi = Eigen::MatrixXd::Identity(n, n);
    } else {
        for (int attempt = 0; attempt < 100; ++attempt) {
            phi.resize(n, params.n_features);
            for (int s = 0; s < n; ++s)
                for (int j = 0; j < params.n_features; ++j) phi(s, j) = uniform_pm1(rng);
            Eigen::JacobiSVD<Eigen::MatrixXd> svd(phi);
            if (svd.singularValues().tail<1>()(0) > 1e-6) break;
            phi.resize(0, 0);
        }
        if (phi.size() == 0)
            throw InternalError("numerical", "could not draw a full-rank feature matrix");
    }

    return Instance{TabularMdp(std::move(transition), std::move(reward), params.gamma,
                               Eigen::VectorXd::Constant(n, 1.0 / n)),
                    Policy(target),
                    Policy(behavior),
                    FeatureMap(std::move(phi)),
                    InterestVector::ones(n),
                    0.0,
                    "random"};
}

// ---------------------------------------------------------------------------
// Divergence witness. A drift-chain instance, found by seeded search and
// frozen here as data: the d_mu-weighted projection of the one-step Bellman
// map expands (modulus > 1), so off-policy TD(0) diverges on it while the
// emphatic operator still contracts. The JSON below is the canonical
// serialization; both the hash and the expansion property are re-verified at
// load time.

inline constexpr const char* kDivergenceSpecJson = kDivergenceSpecJsonData;
inline constexpr std::uint64_t kDivergenceFixtureHash = kDivergenceFixtureHashData;
inline constexpr std::uint64_t kDivergenceSeed = kDivergenceSeedData;

// d_mu-weighted modulus of Pi_{d_mu} gamma P_pi; > 1 certifies that plain
// off-policy TD(0) has no contraction guarantee on this instance.
inline double td_baseline_modulus(const Instance& instance) {
    const InducedChain chain_mu = induced_chain(instance.mdp, instance.behavior);
    const InducedChain chain_pi = induced_chain(instance.mdp, instance.target);
    const StateDistribution d_mu = stationary_distribution(chain_mu);
    const WeightedProjector projector(instance.features, d_mu.vector());
    const Eigen::MatrixXd linear =
        projector.matrix() * (instance.mdp.discount() * chain_pi.transition_matrix());
    return contraction_modulus(linear, d_mu.vector());
}

inline void verify_divergence_instance(const Instance& instance) {
    const double modulus = td_baseline_modulus(instance);
    if (!(modulus > 1.0))
        throw InvariantError("corrupted_fixture",
                             "divergence fixture lost its witness property (modulus " +
                                 std::to_string(modulus) + " is not > 1)");
}

inline Instance fixture_divergence() {
    const std::string text(kDivergenceSpecJson);
    if (fnv1a64(text) != kDivergenceFixtureHash)
        throw InvariantError("corrupted_fixture",
                             "divergence fixture text does not match its recorded hash");
    Instance instance = parse_spec_text(text, "divergence");
    instance.name = "divergence";
    verify_divergence_instance(instance);
    return instance;
}

}  // namespace etdlab
