#pragma once

#include <string>
#include <utility>

#include <Eigen/Dense>

#include "etdlab/common.hpp"
#include "etdlab/emphasis.hpp"
#include "etdlab/mdp.hpp"

namespace etdlab {

// v -> Av + b. Bellman operators are stored in this form so their Lipschitz
// constants can be read off the linear part.
struct AffineOperator {
    Eigen::MatrixXd linear;
    Eigen::VectorXd offset;

    Eigen::VectorXd operator()(const Eigen::VectorXd& v) const { return linear * v + offset; }
};

// T^pi v = R_pi + gamma P_pi v.
inline AffineOperator bellman_operator(const InducedChain& chain, double gamma) {
    require(gamma >= 0.0 && gamma < 1.0, "parameter_range", "discount must lie in [0, 1)");
    return AffineOperator{gamma * chain.transition_matrix(), chain.reward_vector()};
}

// T^(lambda) v = (I - gamma lambda P_pi)^{-1} R_pi + P^lambda_pi v.
inline AffineOperator bellman_lambda_operator(const InducedChain& chain, double gamma,
                                              double lambda) {
    const int n = chain.n_states();
    Eigen::MatrixXd PL = plambda(chain.transition_matrix(), gamma, lambda);
    Eigen::VectorXd offset = detail::solve_refined(
        Eigen::MatrixXd::Identity(n, n) - gamma * lambda * chain.transition_matrix(),
        chain.reward_vector());
    return AffineOperator{std::move(PL), std::move(offset)};
}

inline Eigen::VectorXd bellman_apply(const InducedChain& chain, double gamma,
                                     const Eigen::VectorXd& v) {
    require(v.size() == chain.n_states(), "dimension_mismatch", "value vector size mismatch");
    require(gamma >= 0.0 && gamma < 1.0, "parameter_range", "discount must lie in [0, 1)");
    return chain.reward_vector() + gamma * (chain.transition_matrix() * v);
}

inline Eigen::VectorXd bellman_lambda_apply(const InducedChain& chain, double gamma, double lambda,
                                            const Eigen::VectorXd& v) {
    require(v.size() == chain.n_states(), "dimension_mismatch", "value vector size mismatch");
    const AffineOperator op = bellman_lambda_operator(chain, gamma, lambda);
    return op(v);
}

// sqrt(sum_s d(s) v(s)^2).
inline double weighted_norm(const Eigen::VectorXd& v, const Eigen::VectorXd& d) {
    require(v.size() == d.size(), "dimension_mismatch", "norm weight size mismatch");
    for (Eigen::Index s = 0; s < d.size(); ++s)
        require(d[s] > 0.0, "parameter_range",
                "norm weight must be strictly positive (state " + std::to_string(s) + ")");
    return std::sqrt(d.cwiseProduct(v.cwiseAbs2()).sum());
}

// Orthogonal projector onto the feature span under the d-weighted inner
// product: Pi = Phi (Phi^T D Phi)^{-1} Phi^T D. Built from the weighted
// normal equations with an LDLT factorization.
class WeightedProjector {
public:
    WeightedProjector(const FeatureMap& features, Eigen::VectorXd weight)
        : phi_(features.matrix()), weight_(std::move(weight)) {
        const int n = features.n_states();
        require(weight_.size() == n, "dimension_mismatch", "projection weight size mismatch");
        for (int s = 0; s < n; ++s)
            require(weight_[s] > 0.0, "parameter_range",
                    "projection weight must be strictly positive (state " + std::to_string(s) +
                        ")");

        weighted_phi_ = weight_.asDiagonal() * phi_;
        gram_ldlt_.compute(phi_.transpose() * weighted_phi_);
        if (gram_ldlt_.info() != Eigen::Success || !gram_ldlt_.isPositive())
            throw InputError("rank_deficient", "weighted Gram matrix is not positive definite");
        projector_ = phi_ * gram_ldlt_.solve(weighted_phi_.transpose());

        const double idem =
            (projector_ * projector_ - projector_).cwiseAbs().maxCoeff();
        const double fixes_span = (projector_ * phi_ - phi_).cwiseAbs().maxCoeff();
        if (idem > 1e-9 || fixes_span > 1e-9)
            throw InternalError("numerical", "projector failed its defining identities");
    }

    const Eigen::MatrixXd& matrix() const { return projector_; }
    const Eigen::VectorXd& weight() const { return weight_; }

    // Projection of v, computed through the factorization (more accurate than
    // multiplying by the realized matrix).
    Eigen::VectorXd project(const Eigen::VectorXd& v) const {
        return phi_ * gram_ldlt_.solve(weighted_phi_.transpose() * v);
    }

    // The coefficient vector c with project(v) = Phi c.
    Eigen::VectorXd coefficients(const Eigen::VectorXd& v) const {
        return gram_ldlt_.solve(weighted_phi_.transpose() * v);
    }

private:
    Eigen::MatrixXd phi_;
    Eigen::VectorXd weight_;
    Eigen::MatrixXd weighted_phi_;
    Eigen::LDLT<Eigen::MatrixXd> gram_ldlt_;
    Eigen::MatrixXd projector_;
};

inline WeightedProjector make_projector(const FeatureMap& features, const Eigen::VectorXd& d) {
    return WeightedProjector(features, d);
}

// Exact operator norm of A in the d-weighted norm: the largest singular
// value of D^{1/2} A D^{-1/2}. For an affine map this is its Lipschitz
// constant, so the offset never enters.
inline double contraction_modulus(const Eigen::MatrixXd& A, const Eigen::VectorXd& d) {
    require(A.rows() == A.cols() && A.rows() == d.size(), "dimension_mismatch",
            "operator/weight size mismatch");
    for (Eigen::Index s = 0; s < d.size(); ++s)
        require(d[s] > 0.0, "parameter_range", "norm weight must be strictly positive");
    const Eigen::VectorXd sqrt_d = d.cwiseSqrt();
    const Eigen::MatrixXd similar =
        sqrt_d.asDiagonal() * A * sqrt_d.cwiseInverse().asDiagonal();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(similar);
    return svd.singularValues()(0);
}

inline double contraction_modulus(const AffineOperator& op, const Eigen::VectorXd& d) {
    return contraction_modulus(op.linear, d);
}

// One theorem check: exact modulus vs. the closed-form bound.
struct ContractionReport {
    double modulus_exact = 0.0;
    double bound = 0.0;
    std::string norm_weight_id;
    double slack = 0.0;  // bound - modulus_exact; negative slack breaks the theorem

    bool holds(double tol = 1e-9) const { return slack >= -tol; }
};

inline ContractionReport make_contraction_report(const Eigen::MatrixXd& A,
                                                 const Eigen::VectorXd& weight, double bound,
                                                 std::string norm_weight_id) {
    ContractionReport report;
    report.modulus_exact = contraction_modulus(A, weight);
    report.bound = bound;
    report.norm_weight_id = std::move(norm_weight_id);
    report.slack = bound - report.modulus_exact;
    return report;
}

// theta* with Phi theta* = Pi_m T^(lambda)(Phi theta*), from the n x n system
//   Phi^T M (I - P^lambda_pi) Phi theta = Phi^T M (I - gamma lambda P_pi)^{-1} R_pi.
inline Eigen::VectorXd solve_projected_fixed_point(const FeatureMap& features,
                                                   const Eigen::VectorXd& m,
                                                   const InducedChain& chain, double gamma,
                                                   double lambda) {
    const int n = chain.n_states();
    require(features.n_states() == n, "dimension_mismatch", "feature matrix does not match chain");
    require(m.size() == n, "dimension_mismatch", "emphasis weight size mismatch");

    const Eigen::MatrixXd& phi = features.matrix();
    const AffineOperator t_lambda = bellman_lambda_operator(chain, gamma, lambda);

    const Eigen::MatrixXd weighted_phi_t = (m.asDiagonal() * phi).transpose();
    const Eigen::MatrixXd lhs =
        weighted_phi_t * ((Eigen::MatrixXd::Identity(n, n) - t_lambda.linear) * phi);
    const Eigen::VectorXd rhs = weighted_phi_t * t_lambda.offset;
    Eigen::VectorXd theta = detail::solve_refined(lhs, rhs);
    if (!theta.allFinite())
        throw InternalError("numerical", "projected fixed-point system is singular");

    const WeightedProjector projector(features, m);
    const Eigen::VectorXd v = phi * theta;
    const double residual = weighted_norm(v - projector.project(t_lambda(v)), m);
    if (residual > 1e-9)
        throw InternalError("numerical", "projected fixed-point residual " +
                                             std::to_string(residual) + " exceeds 1e-9");
    return theta;
}

// Approximation-error bound lhs <= proj_err / (1 - modulus).
struct ErrorBoundReport {
    double lhs = 0.0;       // || Phi theta* - V^pi ||_w
    double proj_err = 0.0;  // || Pi_w V^pi - V^pi ||_w
    double rhs = 0.0;       // proj_err / (1 - modulus)
    bool holds = false;
};

inline ErrorBoundReport check_error_bound(const Eigen::VectorXd& theta_star,
                                          const Eigen::VectorXd& v_pi, const FeatureMap& features,
                                          const Eigen::VectorXd& weight, double modulus) {
    if (!(modulus < 1.0))
        throw InputError("parameter_range",
                         "error bound needs a contraction modulus < 1, got " +
                             std::to_string(modulus));
    const WeightedProjector projector(features, weight);
    ErrorBoundReport report;
    report.lhs = weighted_norm(features.matrix() * theta_star - v_pi, weight);
    report.proj_err = weighted_norm(projector.project(v_pi) - v_pi, weight);
    report.rhs = report.proj_err / (1.0 - modulus);
    report.holds = report.lhs <= report.rhs + 1e-9;
    return report;
}

// Jensen step used in both theorem proofs: for nonnegative P with constant
// row sum c,  v^T P^T diag(w) P v <= c * v^T diag(w^T P) v.
inline bool jensen_step_check(const Eigen::MatrixXd& P, double rowsum,
                              const Eigen::VectorXd& weight, const Eigen::VectorXd& v) {
    require(P.rows() == P.cols() && P.rows() == weight.size() && v.size() == weight.size(),
            "dimension_mismatch", "Jensen check size mismatch");
    require((P.array() >= 0.0).all(), "parameter_range", "matrix must be nonnegative");
    const double rowsum_err = (P.rowwise().sum().array() - rowsum).abs().maxCoeff();
    if (rowsum_err > 1e-9)
        throw InputError("rowsum", "row sums deviate from " + std::to_string(rowsum) + " by " +
                                       std::to_string(rowsum_err));

    const Eigen::VectorXd Pv = P * v;
    const double lhs = weight.cwiseProduct(Pv.cwiseAbs2()).sum();
    const Eigen::VectorXd column_mass = P.transpose() * weight;  // (w^T P)^T
    const double rhs = rowsum * column_mass.cwiseProduct(v.cwiseAbs2()).sum();
    return lhs <= rhs + 1e-10;
}

// The three displayed proof-step inequalities:
//   ||v||^2_f - gamma ||P_pi v||^2_f >= ||v||^2_{d_mu}
//   kappa ||v||^2_f <= ||v||^2_{d_mu}
//   ||v||^2_m - (1/beta) ||P^lambda_pi v||^2_m >= ||v||^2_{i_weighted}
inline bool proof_inequality_check(const EmphasisBundle& bundle, const InducedChain& chain_pi,
                                   double gamma, double lambda, const Eigen::VectorXd& v) {
    (void)lambda;  // already baked into bundle.plambda / bundle.beta
    require(v.size() == chain_pi.n_states(), "dimension_mismatch", "test vector size mismatch");

    const auto sq = [](double x) { return x * x; };
    const double v_f = sq(weighted_norm(v, bundle.f));
    const double v_dmu = sq(weighted_norm(v, bundle.d_mu.vector()));
    const double pv_f = sq(weighted_norm(chain_pi.transition_matrix() * v, bundle.f));
    const bool thm1_lower = v_f - gamma * pv_f >= v_dmu - 1e-10;
    const bool thm1_kappa = bundle.kappa * v_f <= v_dmu + 1e-10;

    const double v_m = sq(weighted_norm(v, bundle.m));
    const double plv_m = sq(weighted_norm(bundle.plambda * v, bundle.m));
    const double v_iw = v.cwiseAbs2().cwiseProduct(bundle.i_weighted).sum();
    // beta == 0 only when gamma == 0, where P_lambda vanishes identically.
    const double discounted = bundle.beta > 0.0 ? plv_m / bundle.beta : 0.0;
    const bool thm2_lower = v_m - discounted >= v_iw - 1e-10;

    return thm1_lower && thm1_kappa && thm2_lower;
}

}  // namespace etdlab
