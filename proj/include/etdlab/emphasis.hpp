#pragma once

#include <optional>
#include <utility>

#include <Eigen/Dense>

#include "etdlab/common.hpp"
#include "etdlab/mdp.hpp"

namespace etdlab {

// Per-state interest weighting i : S -> R+, strictly positive.
class InterestVector {
public:
    explicit InterestVector(Eigen::VectorXd values) : values_(std::move(values)) {
        require(values_.size() >= 1, "dimension_mismatch", "interest vector is empty");
        require(values_.allFinite(), "non_finite", "interest vector has non-finite entries");
        for (Eigen::Index s = 0; s < values_.size(); ++s)
            require(values_[s] > 0.0, "parameter_range",
                    "interest must be strictly positive (state " + std::to_string(s) + ")");
    }

    static InterestVector ones(int n_states) {
        return InterestVector(Eigen::VectorXd::Ones(n_states));
    }

    int n_states() const { return static_cast<int>(values_.size()); }
    const Eigen::VectorXd& vector() const { return values_; }

private:
    Eigen::VectorXd values_;
};

// Follow-on weights: f solves f^T (I - gamma P_pi) = d_mu^T.
inline Eigen::VectorXd followon_vector(const StateDistribution& d_mu, const Eigen::MatrixXd& P_pi,
                                       double gamma) {
    require(gamma >= 0.0 && gamma < 1.0, "parameter_range", "discount must lie in [0, 1)");
    const int n = d_mu.n_states();
    require(P_pi.rows() == n && P_pi.cols() == n, "dimension_mismatch",
            "target transition matrix does not match the distribution");
    for (int s = 0; s < n; ++s)
        require(d_mu[s] > 0.0, "parameter_range",
                "behavior distribution must be strictly positive (state " + std::to_string(s) +
                    ")");

    const Eigen::MatrixXd A =
        Eigen::MatrixXd::Identity(n, n) - gamma * P_pi.transpose();
    Eigen::VectorXd f = detail::solve_refined(A, d_mu.vector());
    const double residual = (A * f - d_mu.vector()).lpNorm<Eigen::Infinity>();
    if (residual > 1e-10)
        throw InternalError("numerical", "follow-on solve residual " + std::to_string(residual) +
                                             " exceeds 1e-10");
    return f;
}

// kappa = min_s d_mu(s) / f(s); lies in [0, 1-gamma] for stationary d_mu.
inline double kappa(const StateDistribution& d_mu, const Eigen::VectorXd& f) {
    require(f.size() == d_mu.n_states(), "dimension_mismatch", "f size mismatch");
    double k = std::numeric_limits<double>::infinity();
    for (int s = 0; s < d_mu.n_states(); ++s) {
        if (!(f[s] > 1e-300))
            throw InputError("parameter_range",
                             "follow-on weight must be positive (state " + std::to_string(s) +
                                 ", value " + std::to_string(f[s]) + ")");
        k = std::min(k, d_mu[s] / f[s]);
    }
    return k;
}

// beta = gamma (1 - lambda) / (1 - lambda gamma), the common row sum of
// P^lambda_pi and the squared contraction modulus of the lambda-weighted
// Bellman operator.
inline double beta(double gamma, double lambda) {
    require(gamma >= 0.0 && gamma < 1.0, "parameter_range", "discount must lie in [0, 1)");
    require(lambda >= 0.0 && lambda < 1.0, "parameter_range", "lambda must lie in [0, 1)");
    return gamma * (1.0 - lambda) / (1.0 - lambda * gamma);
}

// P^lambda_pi = I - (I - gamma lambda P_pi)^{-1} (I - gamma P_pi).
// Nonnegative with every row summing to beta; entries inside [-1e-10, 0)
// are rounding noise and get clamped to zero.
inline Eigen::MatrixXd plambda(const Eigen::MatrixXd& P_pi, double gamma, double lambda) {
    require(gamma >= 0.0 && gamma < 1.0, "parameter_range", "discount must lie in [0, 1)");
    require(lambda >= 0.0 && lambda < 1.0, "parameter_range", "lambda must lie in [0, 1)");
    require(P_pi.rows() == P_pi.cols(), "dimension_mismatch", "transition matrix must be square");
    const Eigen::Index n = P_pi.rows();
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
    Eigen::MatrixXd PL = I - detail::solve_refined(I - gamma * lambda * P_pi, I - gamma * P_pi);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            if (PL(i, j) < 0.0) {
                if (PL(i, j) < -1e-10)
                    throw InternalError("numerical",
                                        "P_lambda entry " + std::to_string(PL(i, j)) +
                                            " is negative beyond rounding noise");
                PL(i, j) = 0.0;
            }
        }
    }

    const double b = beta(gamma, lambda);
    const double rowsum_err = (PL.rowwise().sum().array() - b).abs().maxCoeff();
    if (rowsum_err > 1e-10)
        throw InternalError("numerical", "P_lambda row sums deviate from beta by " +
                                             std::to_string(rowsum_err));
    return PL;
}

// Emphatic weights: m solves m^T (I - P^lambda_pi) = i_weighted^T, where
// i_weighted(s) = i(s) d_mu(s).
inline Eigen::VectorXd emphasis_vector(const InterestVector& interest,
                                       const StateDistribution& d_mu,
                                       const Eigen::MatrixXd& plambda_matrix) {
    const int n = d_mu.n_states();
    require(interest.n_states() == n, "dimension_mismatch", "interest size mismatch");
    require(plambda_matrix.rows() == n && plambda_matrix.cols() == n, "dimension_mismatch",
            "P_lambda size mismatch");

    const Eigen::VectorXd i_weighted = interest.vector().cwiseProduct(d_mu.vector());
    const Eigen::MatrixXd A =
        Eigen::MatrixXd::Identity(n, n) - plambda_matrix.transpose();
    Eigen::VectorXd m = detail::solve_refined(A, i_weighted);
    const double residual = (A * m - i_weighted).lpNorm<Eigen::Infinity>();
    if (residual > 1e-10)
        throw InternalError("numerical", "emphasis solve residual " + std::to_string(residual) +
                                             " exceeds 1e-10");
    if (((m - i_weighted).array() < -1e-12).any())
        throw InternalError("numerical", "emphasis weights fell below the weighted interest");
    return m;
}

// Everything the contraction and error-bound checks need for one (target,
// behavior, lambda, interest) configuration, with the defining identities
// re-verified.
struct EmphasisBundle {
    StateDistribution d_mu;
    std::optional<StateDistribution> d_pi;  // absent when the target chain is not ergodic
    Eigen::VectorXd f;
    Eigen::VectorXd m;
    double kappa = 0.0;
    double beta = 0.0;
    Eigen::MatrixXd plambda;
    Eigen::VectorXd i_weighted;
};

inline EmphasisBundle make_emphasis_bundle(const TabularMdp& mdp, const Policy& target,
                                           const Policy& behavior, double lambda,
                                           const InterestVector& interest) {
    require(interest.n_states() == mdp.n_states(), "dimension_mismatch",
            "interest vector does not match the MDP");
    importance_ratios(target, behavior);  // coverage check

    const InducedChain chain_mu = induced_chain(mdp, behavior);
    const InducedChain chain_pi = induced_chain(mdp, target);
    const double gamma = mdp.discount();

    StateDistribution d_mu = stationary_distribution(chain_mu);
    std::optional<StateDistribution> d_pi;
    try {
        d_pi = stationary_distribution(chain_pi);
    } catch (const InputError&) {
        d_pi = std::nullopt;
    }

    Eigen::VectorXd f = followon_vector(d_mu, chain_pi.transition_matrix(), gamma);
    Eigen::MatrixXd PL = plambda(chain_pi.transition_matrix(), gamma, lambda);
    Eigen::VectorXd m = emphasis_vector(interest, d_mu, PL);
    const double k = kappa(d_mu, f);
    Eigen::VectorXd i_weighted = interest.vector().cwiseProduct(d_mu.vector());

    EmphasisBundle bundle{std::move(d_mu),   std::move(d_pi), std::move(f),
                          std::move(m),      k,               beta(gamma, lambda),
                          std::move(PL),     std::move(i_weighted)};

    // Defining identities, re-checked by direct residuals.
    const int n = mdp.n_states();
    const Eigen::MatrixXd& P_pi = chain_pi.transition_matrix();
    const double res_f = ((Eigen::MatrixXd::Identity(n, n) - gamma * P_pi).transpose() * bundle.f -
                          bundle.d_mu.vector())
                             .lpNorm<Eigen::Infinity>();
    const double res_m =
        ((Eigen::MatrixXd::Identity(n, n) - bundle.plambda).transpose() * bundle.m -
         bundle.i_weighted)
            .lpNorm<Eigen::Infinity>();
    const double scale = std::max(1.0, 1.0 / (1.0 - gamma));
    if (res_f > 1e-10 * scale || res_m > 1e-10 * scale)
        throw InternalError("numerical", "emphasis bundle residuals exceed tolerance");
    if (((bundle.f - bundle.d_mu.vector()).array() < -1e-12).any())
        throw InternalError("numerical", "follow-on weights fell below the behavior distribution");
    if (std::abs(bundle.f.sum() - 1.0 / (1.0 - gamma)) > 1e-10 * scale)
        throw InternalError("numerical", "follow-on weights do not sum to 1/(1-gamma)");
    return bundle;
}

}  // namespace etdlab
