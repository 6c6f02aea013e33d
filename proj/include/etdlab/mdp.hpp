#pragma once

#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "etdlab/common.hpp"

namespace etdlab {

// Finite MDP with a transition tensor P(s'|s,a), deterministic rewards
// R(s,a), a discount in [0,1) and an initial state distribution. All
// probability data is validated (and idempotently normalized) on
// construction; instances are immutable afterwards.
class TabularMdp {
public:
    TabularMdp(std::vector<Eigen::MatrixXd> transition, Eigen::MatrixXd reward, double discount,
               Eigen::VectorXd initial_dist)
        : transition_(std::move(transition)),
          reward_(std::move(reward)),
          discount_(discount),
          initial_dist_(std::move(initial_dist)) {
        require(!transition_.empty(), "dimension_mismatch", "transition tensor has no actions");
        const Eigen::Index n = transition_.front().rows();
        require(n >= 1, "dimension_mismatch", "MDP needs at least one state");
        const auto n_actions = static_cast<Eigen::Index>(transition_.size());
        for (std::size_t a = 0; a < transition_.size(); ++a) {
            auto& page = transition_[a];
            require(page.rows() == n && page.cols() == n, "dimension_mismatch",
                    "transition page " + std::to_string(a) + " is not |S| x |S|");
            for (Eigen::Index s = 0; s < n; ++s) {
                auto row = page.row(s).transpose();
                normalize_probabilities(row, 1e-12,
                                        "transition row (action " + std::to_string(a) +
                                            ", state " + std::to_string(s) + ")");
                page.row(s) = row.transpose();
            }
        }
        require(reward_.rows() == n && reward_.cols() == n_actions, "dimension_mismatch",
                "reward table must be |S| x |A|");
        require(reward_.allFinite(), "non_finite", "reward table has non-finite entries");
        require(discount_ >= 0.0 && discount_ < 1.0, "parameter_range",
                "discount must lie in [0, 1)");
        require(initial_dist_.size() == n, "dimension_mismatch",
                "initial distribution must have |S| entries");
        normalize_probabilities(initial_dist_, 1e-12, "initial distribution");
    }

    int n_states() const { return static_cast<int>(transition_.front().rows()); }
    int n_actions() const { return static_cast<int>(transition_.size()); }

    // P(.|., a) as a row-stochastic |S| x |S| matrix.
    const Eigen::MatrixXd& transition(int action) const {
        return transition_.at(static_cast<std::size_t>(action));
    }
    const Eigen::MatrixXd& reward() const { return reward_; }
    double discount() const { return discount_; }
    const Eigen::VectorXd& initial_dist() const { return initial_dist_; }

private:
    std::vector<Eigen::MatrixXd> transition_;
    Eigen::MatrixXd reward_;
    double discount_;
    Eigen::VectorXd initial_dist_;
};

// Row-stochastic action-selection table pol(a|s); serves as both the target
// and the behavior policy.
class Policy {
public:
    explicit Policy(Eigen::MatrixXd table) : table_(std::move(table)) {
        require(table_.rows() >= 1 && table_.cols() >= 1, "dimension_mismatch",
                "policy table is empty");
        for (Eigen::Index s = 0; s < table_.rows(); ++s) {
            auto row = table_.row(s).transpose();
            normalize_probabilities(row, 1e-12, "policy row (state " + std::to_string(s) + ")");
            table_.row(s) = row.transpose();
        }
    }

    int n_states() const { return static_cast<int>(table_.rows()); }
    int n_actions() const { return static_cast<int>(table_.cols()); }
    double prob(int state, int action) const { return table_(state, action); }
    const Eigen::MatrixXd& table() const { return table_; }

private:
    Eigen::MatrixXd table_;
};

// Markov chain over states induced by running one policy in an MDP.
class InducedChain {
public:
    InducedChain(Eigen::MatrixXd transition_matrix, Eigen::VectorXd reward_vector)
        : transition_matrix_(std::move(transition_matrix)),
          reward_vector_(std::move(reward_vector)) {
        require(transition_matrix_.rows() == transition_matrix_.cols(), "dimension_mismatch",
                "chain transition matrix must be square");
        require(reward_vector_.size() == transition_matrix_.rows(), "dimension_mismatch",
                "chain reward vector size mismatch");
        for (Eigen::Index s = 0; s < transition_matrix_.rows(); ++s) {
            auto row = transition_matrix_.row(s).transpose();
            normalize_probabilities(row, 1e-12, "chain row (state " + std::to_string(s) + ")");
            transition_matrix_.row(s) = row.transpose();
        }
    }

    int n_states() const { return static_cast<int>(transition_matrix_.rows()); }
    const Eigen::MatrixXd& transition_matrix() const { return transition_matrix_; }
    const Eigen::VectorXd& reward_vector() const { return reward_vector_; }

private:
    Eigen::MatrixXd transition_matrix_;
    Eigen::VectorXd reward_vector_;
};

// State features, one row per state. Full column rank is required so that
// weighted projections onto the feature span are well defined.
class FeatureMap {
public:
    explicit FeatureMap(Eigen::MatrixXd phi) : phi_(std::move(phi)) {
        require(phi_.rows() >= 1 && phi_.cols() >= 1, "dimension_mismatch",
                "feature matrix is empty");
        require(phi_.cols() <= phi_.rows(), "dimension_mismatch",
                "more features than states");
        require(phi_.allFinite(), "non_finite", "feature matrix has non-finite entries");
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(phi_);
        const double sigma_min = svd.singularValues().tail<1>()(0);
        if (sigma_min <= 1e-10)
            throw InputError("rank_deficient",
                             "feature matrix is rank deficient (smallest singular value " +
                                 std::to_string(sigma_min) + ")");
    }

    static FeatureMap tabular(int n_states) {
        return FeatureMap(Eigen::MatrixXd::Identity(n_states, n_states));
    }

    int n_states() const { return static_cast<int>(phi_.rows()); }
    int n_features() const { return static_cast<int>(phi_.cols()); }
    const Eigen::MatrixXd& matrix() const { return phi_; }
    Eigen::VectorXd row(int state) const { return phi_.row(state).transpose(); }

private:
    Eigen::MatrixXd phi_;
};

// Probability vector over states (stationary distributions and the like).
class StateDistribution {
public:
    explicit StateDistribution(Eigen::VectorXd d, double tol = 1e-10) : d_(std::move(d)) {
        normalize_probabilities(d_, tol, "state distribution");
    }

    int n_states() const { return static_cast<int>(d_.size()); }
    const Eigen::VectorXd& vector() const { return d_; }
    double operator[](int s) const { return d_[s]; }

private:
    Eigen::VectorXd d_;
};

namespace detail {

// LU solve with two rounds of iterative refinement. Keeps fixed-point and
// defining-equation residuals at the 1e-12 level even for discounts near 1.
inline Eigen::MatrixXd solve_refined(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(A);
    Eigen::MatrixXd X = lu.solve(B);
    for (int pass = 0; pass < 2; ++pass) {
        Eigen::MatrixXd r = B - A * X;
        X += lu.solve(r);
    }
    return X;
}

}  // namespace detail

// P_pol(s'|s) = sum_a pol(a|s) P(s'|s,a),  R_pol(s) = sum_a pol(a|s) R(s,a).
inline InducedChain induced_chain(const TabularMdp& mdp, const Policy& pol) {
    require(pol.n_states() == mdp.n_states() && pol.n_actions() == mdp.n_actions(),
            "dimension_mismatch", "policy dimensions do not match the MDP");
    const int n = mdp.n_states();
    Eigen::MatrixXd P = Eigen::MatrixXd::Zero(n, n);
    Eigen::VectorXd R = Eigen::VectorXd::Zero(n);
    for (int a = 0; a < mdp.n_actions(); ++a) {
        P += pol.table().col(a).asDiagonal() * mdp.transition(a);
        R += pol.table().col(a).cwiseProduct(mdp.reward().col(a));
    }
    return InducedChain(std::move(P), std::move(R));
}

// Unique stationary distribution of an ergodic chain, by power iteration.
// Uniqueness of the eigenvalue-1 eigenvector is checked up front with a dense
// eigensolver; a chain that fails either check is reported as non-ergodic
// rather than silently returning a wrong vector.
inline StateDistribution stationary_distribution(const InducedChain& chain, double tol = 1e-12) {
    const Eigen::MatrixXd& P = chain.transition_matrix();
    const int n = chain.n_states();

    Eigen::EigenSolver<Eigen::MatrixXd> eig(P, /*computeEigenvectors=*/false);
    int ones = 0;
    for (Eigen::Index i = 0; i < eig.eigenvalues().size(); ++i)
        if (std::abs(eig.eigenvalues()[i] - std::complex<double>(1.0, 0.0)) < 1e-8) ++ones;
    if (ones != 1)
        throw InputError("non_ergodic",
                         "chain has " + std::to_string(ones) +
                             " eigenvalues at 1; stationary distribution is not unique");

    constexpr long kMaxIterations = 1000000;
    Eigen::VectorXd d = Eigen::VectorXd::Constant(n, 1.0 / n);
    for (long it = 0; it < kMaxIterations; ++it) {
        Eigen::VectorXd next = P.transpose() * d;
        if ((next - d).lpNorm<Eigen::Infinity>() <= tol) {
            return StateDistribution(std::move(d));
        }
        d = next / next.sum();
    }
    throw InputError("non_ergodic",
                     "power iteration did not reach tolerance " + std::to_string(tol) +
                         "; chain is periodic or nearly decoupled");
}

// V_pol = (I - gamma P_pol)^{-1} R_pol, by dense solve.
inline Eigen::VectorXd true_value(const InducedChain& chain, double gamma) {
    require(gamma >= 0.0 && gamma < 1.0, "parameter_range", "discount must lie in [0, 1)");
    const int n = chain.n_states();
    const Eigen::MatrixXd A =
        Eigen::MatrixXd::Identity(n, n) - gamma * chain.transition_matrix();
    Eigen::VectorXd v = detail::solve_refined(A, chain.reward_vector());
    const double residual = (A * v - chain.reward_vector()).lpNorm<Eigen::Infinity>();
    if (residual > 1e-10)
        throw InternalError("numerical",
                            "value solve residual " + std::to_string(residual) + " exceeds 1e-10");
    return v;
}

// rho(s,a) = target(a|s) / behavior(a|s); 0 where both policies put mass 0.
inline Eigen::MatrixXd importance_ratios(const Policy& target, const Policy& behavior) {
    require(target.n_states() == behavior.n_states() &&
                target.n_actions() == behavior.n_actions(),
            "dimension_mismatch", "target and behavior policies differ in shape");
    Eigen::MatrixXd rho(target.n_states(), target.n_actions());
    for (int s = 0; s < target.n_states(); ++s) {
        for (int a = 0; a < target.n_actions(); ++a) {
            const double p = target.prob(s, a);
            const double q = behavior.prob(s, a);
            if (q == 0.0) {
                if (p > 0.0)
                    throw InputError("coverage",
                                     "coverage violation at (state " + std::to_string(s) +
                                         ", action " + std::to_string(a) +
                                         "): target takes an action the behavior never samples");
                rho(s, a) = 0.0;
            } else {
                rho(s, a) = p / q;
            }
        }
    }
    return rho;
}

}  // namespace etdlab
