#pragma once

#include <string>

#include "etdlab/common.hpp"
#include "etdlab/emphasis.hpp"
#include "etdlab/mdp.hpp"

namespace etdlab {

// One complete evaluation problem: an MDP, the target/behavior policy pair,
// features, per-state interest and the bootstrapping parameter.
struct Instance {
    TabularMdp mdp;
    Policy target;
    Policy behavior;
    FeatureMap features;
    InterestVector interest;
    double lambda = 0.0;
    std::string name;
};

inline void validate_instance(const Instance& instance) {
    const int n = instance.mdp.n_states();
    const int a = instance.mdp.n_actions();
    require(instance.target.n_states() == n && instance.target.n_actions() == a,
            "dimension_mismatch", "target policy does not match the MDP");
    require(instance.behavior.n_states() == n && instance.behavior.n_actions() == a,
            "dimension_mismatch", "behavior policy does not match the MDP");
    require(instance.features.n_states() == n, "dimension_mismatch",
            "feature matrix does not match the MDP");
    require(instance.interest.n_states() == n, "dimension_mismatch",
            "interest vector does not match the MDP");
    require(instance.lambda >= 0.0 && instance.lambda < 1.0, "parameter_range",
            "lambda must lie in [0, 1)");
    importance_ratios(instance.target, instance.behavior);
}

}  // namespace etdlab
