#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "etdlab/common.hpp"
#include "etdlab/emphasis.hpp"
#include "etdlab/instance.hpp"
#include "etdlab/mdp.hpp"
#include "etdlab/operators.hpp"

namespace etdlab {

// One sampled step of the behavior policy.
struct Transition {
    int state = 0;
    int action = 0;
    double reward = 0.0;
    int next_state = 0;
    double rho = 1.0;  // target(a|s) / behavior(a|s)
};

struct Trajectory {
    std::vector<Transition> steps;
    std::uint64_t seed = 0;
};

// Samples a_t ~ behavior(.|s_t), s_{t+1} ~ P(.|s_t, a_t), starting from the
// MDP's initial distribution. Bit-reproducible for a given seed.
inline Trajectory simulate(const TabularMdp& mdp, const Policy& behavior, const Policy& target,
                           std::uint64_t seed, long n_steps) {
    require(n_steps >= 0, "parameter_range", "step count must be nonnegative");
    const Eigen::MatrixXd ratios = importance_ratios(target, behavior);

    Trajectory trajectory;
    trajectory.seed = seed;
    trajectory.steps.reserve(static_cast<std::size_t>(n_steps));

    std::mt19937_64 rng(seed);
    int state = sample_index(mdp.initial_dist(), rng);
    for (long t = 0; t < n_steps; ++t) {
        const int action = sample_index(behavior.table().row(state).transpose(), rng);
        const int next = sample_index(mdp.transition(action).row(state).transpose(), rng);
        trajectory.steps.push_back(
            {state, action, mdp.reward()(state, action), next, ratios(state, action)});
        state = next;
    }
    return trajectory;
}

// ---------------------------------------------------------------------------
// Learner states. `followon` always holds the F value to be used by the next
// arriving transition; advancing it at the end of a step implements
// F_{t+1} = gamma rho_t F_t + i(s_{t+1}) without carrying rho_{t-1} around.

struct Etd0State {
    Eigen::VectorXd theta;
    double followon = 1.0;  // F_0 = 1
    long step_count = 0;

    static Etd0State zero(int n_features) {
        return Etd0State{Eigen::VectorXd::Zero(n_features), 1.0, 0};
    }
};

struct EtdLambdaState {
    Eigen::VectorXd theta;
    Eigen::VectorXd eligibility;  // e_{-1} = 0
    double followon = 0.0;        // F_0 = i(S_0)
    double emphasis = 0.0;        // M of the most recent step
    long step_count = 0;

    static EtdLambdaState zero(int n_features, double initial_interest) {
        return EtdLambdaState{Eigen::VectorXd::Zero(n_features),
                              Eigen::VectorXd::Zero(n_features), initial_interest, 0.0, 0};
    }
};

// theta_{t+1} = theta_t + alpha F_t rho_t delta_t phi_t, F advancing as
// F_{t+1} = gamma rho_t F_t + 1.
inline Etd0State etd0_step(const Etd0State& state, const Transition& t, double alpha, double gamma,
                           const FeatureMap& features) {
    require(state.theta.size() == features.n_features(), "dimension_mismatch",
            "weight vector does not match the features");
    const Eigen::VectorXd phi = features.row(t.state);
    const Eigen::VectorXd phi_next = features.row(t.next_state);
    const double f = state.followon;
    const double delta = t.reward + gamma * state.theta.dot(phi_next) - state.theta.dot(phi);

    Etd0State next = state;
    // Trace written as rho * (F * phi) so the lambda = 0 reduction of the
    // ETD(lambda) step reproduces these updates bit for bit.
    Eigen::VectorXd trace = f * phi;
    trace *= t.rho;
    next.theta += (alpha * delta) * trace;
    next.followon = gamma * t.rho * f + 1.0;
    next.step_count = state.step_count + 1;
    return next;
}

// Full emphatic update: M_t = lambda i(s_t) + (1-lambda) F_t,
// e_t = rho_t (gamma lambda e_{t-1} + M_t phi_t),
// theta_{t+1} = theta_t + alpha delta_t e_t,
// F_{t+1} = rho_t gamma F_t + i(s_{t+1}).
inline EtdLambdaState etd_lambda_step(const EtdLambdaState& state, const Transition& t,
                                      double alpha, double gamma, double lambda,
                                      const InterestVector& interest,
                                      const FeatureMap& features) {
    require(state.theta.size() == features.n_features(), "dimension_mismatch",
            "weight vector does not match the features");
    const Eigen::VectorXd phi = features.row(t.state);
    const Eigen::VectorXd phi_next = features.row(t.next_state);
    const double f = state.followon;
    const double emphasis = lambda * interest.vector()[t.state] + (1.0 - lambda) * f;
    const double delta = t.reward + gamma * state.theta.dot(phi_next) - state.theta.dot(phi);

    EtdLambdaState next = state;
    Eigen::VectorXd trace = gamma * lambda * state.eligibility + emphasis * phi;
    trace *= t.rho;
    next.theta += (alpha * delta) * trace;
    next.eligibility = std::move(trace);
    next.followon = t.rho * gamma * f + interest.vector()[t.next_state];
    next.emphasis = emphasis;
    next.step_count = state.step_count + 1;
    return next;
}

// Plain off-policy TD(0), theta += alpha rho_t delta_t phi_t. Reference
// baseline only; equals ETD(0) with the follow-on pinned at 1.
inline Etd0State td0_step(const Etd0State& state, const Transition& t, double alpha, double gamma,
                          const FeatureMap& features) {
    require(state.theta.size() == features.n_features(), "dimension_mismatch",
            "weight vector does not match the features");
    const Eigen::VectorXd phi = features.row(t.state);
    const Eigen::VectorXd phi_next = features.row(t.next_state);
    const double delta = t.reward + gamma * state.theta.dot(phi_next) - state.theta.dot(phi);

    Etd0State next = state;
    next.theta += (alpha * delta * t.rho) * phi;
    next.followon = 1.0;
    next.step_count = state.step_count + 1;
    return next;
}

// ---------------------------------------------------------------------------
// Batch runs against the exact fixed point.

struct StepSchedule {
    enum class Kind { constant, harmonic };

    Kind kind = Kind::harmonic;
    double alpha0 = 0.1;
    double offset = 1000.0;  // harmonic: alpha_t = alpha0 * offset / (offset + t)

    double at(long t) const {
        return kind == Kind::constant ? alpha0
                                      : alpha0 * offset / (offset + static_cast<double>(t));
    }

    std::string kind_name() const { return kind == Kind::constant ? "constant" : "harmonic"; }
};

enum class Algorithm { etd0, etd_lambda, td0 };

inline std::string algorithm_name(Algorithm alg) {
    switch (alg) {
        case Algorithm::etd0: return "etd0";
        case Algorithm::etd_lambda: return "etdlambda";
        case Algorithm::td0: return "td0";
    }
    return "unknown";
}

struct LearnConfig {
    Algorithm algorithm = Algorithm::etd0;
    StepSchedule schedule;
    long steps = 100000;
    std::uint64_t seed = 1;
    long report_stride = 0;          // 0 -> max(1, steps / 100)
    Eigen::VectorXd theta0;          // empty -> zeros
};

struct CurvePoint {
    long step = 0;
    double distance_m = 0.0;  // || Phi theta_t - Phi theta* ||_m
    double theta_norm = 0.0;
    double followon = 0.0;
};

struct LearningCurve {
    std::vector<CurvePoint> points;
    Eigen::VectorXd theta_star;
    Eigen::VectorXd theta_final;
    double max_followon = 0.0;
    double max_theta_norm = 0.0;
    double min_distance_m = 0.0;  // best distance reached anywhere along the run
    double value_norm_m = 0.0;    // || V^pi ||_m, handy for relative thresholds
    std::string config_hash;      // covers instance + config, but not the seed
};

namespace detail {

inline void append_numbers(std::string& digest, const Eigen::MatrixXd& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) digest += format_g17(m(i, j)) + ",";
}

}  // namespace detail

// Digest of everything that determines the expected learning dynamics. The
// seed is deliberately excluded: runs that differ only in the seed share one
// config hash.
inline std::string learn_config_hash(const Instance& instance, const LearnConfig& config) {
    std::string digest;
    for (int a = 0; a < instance.mdp.n_actions(); ++a)
        detail::append_numbers(digest, instance.mdp.transition(a));
    detail::append_numbers(digest, instance.mdp.reward());
    detail::append_numbers(digest, instance.mdp.initial_dist());
    detail::append_numbers(digest, instance.target.table());
    detail::append_numbers(digest, instance.behavior.table());
    detail::append_numbers(digest, instance.features.matrix());
    detail::append_numbers(digest, instance.interest.vector());
    digest += format_g17(instance.mdp.discount()) + "|" + format_g17(instance.lambda) + "|";
    digest += algorithm_name(config.algorithm) + "|" + config.schedule.kind_name() + "|";
    digest += format_g17(config.schedule.alpha0) + "|" + format_g17(config.schedule.offset) + "|";
    digest += std::to_string(config.steps) + "|" + std::to_string(config.report_stride) + "|";
    if (config.theta0.size() > 0) detail::append_numbers(digest, config.theta0);
    return hex64(fnv1a64(digest));
}

// Runs the configured learner along one simulated trajectory, recording the
// m-weighted distance to the exact projected fixed point at every stride.
inline LearningCurve run_learning(const Instance& instance, const LearnConfig& config) {
    validate_instance(instance);
    require(config.steps >= 0, "parameter_range", "step count must be nonnegative");
    require(config.schedule.alpha0 > 0.0 && config.schedule.offset > 0.0, "parameter_range",
            "step sizes must be positive");

    const double gamma = instance.mdp.discount();
    const EmphasisBundle bundle = make_emphasis_bundle(instance.mdp, instance.target,
                                                       instance.behavior, instance.lambda,
                                                       instance.interest);
    const InducedChain chain_pi = induced_chain(instance.mdp, instance.target);
    const Eigen::VectorXd theta_star = solve_projected_fixed_point(
        instance.features, bundle.m, chain_pi, gamma, instance.lambda);
    const Eigen::VectorXd v_star = instance.features.matrix() * theta_star;

    const long stride =
        config.report_stride > 0 ? config.report_stride : std::max<long>(1, config.steps / 100);
    const Trajectory trajectory =
        simulate(instance.mdp, instance.behavior, instance.target, config.seed, config.steps);

    const int n_features = instance.features.n_features();
    Eigen::VectorXd theta0 = config.theta0.size() > 0 ? config.theta0
                                                      : Eigen::VectorXd::Zero(n_features);
    require(theta0.size() == n_features, "dimension_mismatch",
            "theta0 does not match the feature dimension");

    const double initial_interest =
        config.steps > 0 ? instance.interest.vector()[trajectory.steps.front().state]
                         : instance.interest.vector()[0];
    Etd0State scalar_state{theta0, 1.0, 0};
    EtdLambdaState trace_state = EtdLambdaState::zero(n_features, initial_interest);
    trace_state.theta = theta0;

    LearningCurve curve;
    curve.theta_star = theta_star;
    curve.value_norm_m = weighted_norm(true_value(chain_pi, gamma), bundle.m);
    curve.config_hash = learn_config_hash(instance, config);

    const auto current_theta = [&]() -> const Eigen::VectorXd& {
        return config.algorithm == Algorithm::etd_lambda ? trace_state.theta : scalar_state.theta;
    };
    const auto current_followon = [&]() -> double {
        switch (config.algorithm) {
            case Algorithm::etd0: return scalar_state.followon;
            case Algorithm::etd_lambda: return trace_state.followon;
            case Algorithm::td0: return 1.0;
        }
        return 1.0;
    };
    const auto distance = [&]() {
        return weighted_norm(instance.features.matrix() * current_theta() - v_star, bundle.m);
    };
    const auto record = [&](long t) {
        curve.points.push_back({t, distance(), current_theta().norm(), current_followon()});
    };

    record(0);
    curve.max_followon = current_followon();
    curve.max_theta_norm = current_theta().norm();
    curve.min_distance_m = curve.points.front().distance_m;

    for (long t = 0; t < config.steps; ++t) {
        const Transition& tr = trajectory.steps[static_cast<std::size_t>(t)];
        const double alpha = config.schedule.at(t);
        curve.max_followon = std::max(curve.max_followon, current_followon());
        switch (config.algorithm) {
            case Algorithm::etd0:
                scalar_state = etd0_step(scalar_state, tr, alpha, gamma, instance.features);
                break;
            case Algorithm::etd_lambda:
                trace_state = etd_lambda_step(trace_state, tr, alpha, gamma, instance.lambda,
                                              instance.interest, instance.features);
                break;
            case Algorithm::td0:
                scalar_state = td0_step(scalar_state, tr, alpha, gamma, instance.features);
                break;
        }
        curve.max_theta_norm = std::max(curve.max_theta_norm, current_theta().norm());
        curve.min_distance_m = std::min(curve.min_distance_m, distance());
        if ((t + 1) % stride == 0 || t + 1 == config.steps) record(t + 1);
    }

    curve.theta_final = current_theta();
    return curve;
}

}  // namespace etdlab
