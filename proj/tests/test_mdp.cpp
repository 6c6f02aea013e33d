#include <catch2/catch.hpp>

#include <Eigen/Eigenvalues>

#include "etdlab/fixtures.hpp"
#include "etdlab/mdp.hpp"

using namespace etdlab;

namespace {

// Entry-by-entry averaging oracle for induced_chain.
InducedChain induced_chain_oracle(const TabularMdp& mdp, const Policy& pol) {
    const int n = mdp.n_states();
    Eigen::MatrixXd P = Eigen::MatrixXd::Zero(n, n);
    Eigen::VectorXd R = Eigen::VectorXd::Zero(n);
    for (int s = 0; s < n; ++s) {
        for (int a = 0; a < mdp.n_actions(); ++a) {
            for (int next = 0; next < n; ++next)
                P(s, next) += pol.prob(s, a) * mdp.transition(a)(s, next);
            R[s] += pol.prob(s, a) * mdp.reward()(s, a);
        }
    }
    return InducedChain(P, R);
}

Policy uniform_policy(int n_states, int n_actions) {
    return Policy(Eigen::MatrixXd::Constant(n_states, n_actions, 1.0 / n_actions));
}

}  // namespace

TEST_CASE("mdp validation rejects bad input", "[mdp]") {
    Eigen::MatrixXd ok(2, 2), bad(2, 2);
    ok << 0.5, 0.5, 0.2, 0.8;
    bad << 0.5, 0.4, 0.2, 0.8;  // first row sums to 0.9
    Eigen::MatrixXd reward = Eigen::MatrixXd::Zero(2, 1);
    Eigen::VectorXd init = Eigen::VectorXd::Constant(2, 0.5);

    CHECK_THROWS_MATCHES(TabularMdp({bad}, reward, 0.9, init), InputError,
                         Catch::Matchers::Predicate<InputError>(
                             [](const InputError& e) { return e.code() == "stochasticity"; }));
    CHECK_THROWS_AS(TabularMdp({ok}, reward, 1.0, init), InputError);
    CHECK_THROWS_AS(TabularMdp({ok}, reward, -0.1, init), InputError);
    CHECK_THROWS_AS(TabularMdp({ok}, Eigen::MatrixXd::Zero(3, 1), 0.9, init), InputError);

    Eigen::MatrixXd negative(2, 2);
    negative << 1.2, -0.2, 0.5, 0.5;
    CHECK_THROWS_AS(Policy(negative), InputError);
}

TEST_CASE("induced chain: single action collapses to the page", "[mdp]") {
    Eigen::MatrixXd page(3, 3);
    page << 0.2, 0.3, 0.5, 0.1, 0.1, 0.8, 0.6, 0.2, 0.2;
    Eigen::MatrixXd reward(3, 1);
    reward << 1.0, -2.0, 0.25;
    TabularMdp mdp({page}, reward, 0.9, Eigen::VectorXd::Constant(3, 1.0 / 3));

    const InducedChain chain = induced_chain(mdp, uniform_policy(3, 1));
    CHECK(chain.transition_matrix() == mdp.transition(0));
    CHECK(chain.reward_vector() == reward.col(0));
}

TEST_CASE("induced chain: two-state example has rows (eps, 1-eps)", "[mdp]") {
    const double eps = 0.1;
    const Instance instance = fixture_two_state(eps, 0.9);
    const InducedChain chain = induced_chain(instance.mdp, instance.target);
    Eigen::MatrixXd expected(2, 2);
    expected << eps, 1 - eps, eps, 1 - eps;
    CHECK((chain.transition_matrix() - expected).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("induced chain matches the averaging oracle and stays stochastic", "[mdp]") {
    for (std::uint64_t seed : {3u, 7u, 11u, 19u, 23u}) {
        RandomFixtureParams params;
        params.seed = seed;
        params.n_states = 4;
        params.n_actions = 3;
        const Instance instance = fixture_random(params);

        const InducedChain chain = induced_chain(instance.mdp, uniform_policy(4, 3));
        const InducedChain oracle = induced_chain_oracle(instance.mdp, uniform_policy(4, 3));
        CHECK((chain.transition_matrix() - oracle.transition_matrix()).cwiseAbs().maxCoeff() <
              1e-15);
        CHECK((chain.reward_vector() - oracle.reward_vector()).cwiseAbs().maxCoeff() < 1e-15);

        const InducedChain behavior_chain = induced_chain(instance.mdp, instance.behavior);
        const Eigen::VectorXd row_sums = behavior_chain.transition_matrix().rowwise().sum();
        CHECK((row_sums.array() - 1.0).abs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("stationary distribution of the two-state behavior chain", "[mdp]") {
    const double eps = 0.1;
    const Instance instance = fixture_two_state(eps, 0.9);
    const StateDistribution d_mu =
        stationary_distribution(induced_chain(instance.mdp, instance.behavior));
    CHECK(d_mu[0] == Approx(1 - eps).margin(1e-12));
    CHECK(d_mu[1] == Approx(eps).margin(1e-12));
}

TEST_CASE("stationary distribution: one-state chain", "[mdp]") {
    const InducedChain chain(Eigen::MatrixXd::Ones(1, 1), Eigen::VectorXd::Zero(1));
    CHECK(stationary_distribution(chain)[0] == 1.0);
}

TEST_CASE("stationary distribution matches a dense eigensolver", "[mdp]") {
    RandomFixtureParams params;
    params.seed = 42;
    params.n_states = 6;
    params.n_actions = 2;
    const Instance instance = fixture_random(params);
    const InducedChain chain = induced_chain(instance.mdp, instance.behavior);

    const StateDistribution d = stationary_distribution(chain);

    // Independent oracle: left eigenvector of P for eigenvalue 1.
    Eigen::EigenSolver<Eigen::MatrixXd> eig(chain.transition_matrix().transpose());
    int which = -1;
    for (int i = 0; i < 6; ++i)
        if (std::abs(eig.eigenvalues()[i] - std::complex<double>(1, 0)) < 1e-9) which = i;
    REQUIRE(which >= 0);
    Eigen::VectorXd v = eig.eigenvectors().col(which).real();
    v /= v.sum();
    CHECK((d.vector() - v).lpNorm<Eigen::Infinity>() < 1e-9);

    // Residual contract.
    const Eigen::VectorXd residual =
        chain.transition_matrix().transpose() * d.vector() - d.vector();
    CHECK(residual.lpNorm<Eigen::Infinity>() <= 1e-12);
}

TEST_CASE("stationary distribution rejects non-ergodic chains", "[mdp]") {
    Eigen::MatrixXd disconnected = Eigen::MatrixXd::Identity(3, 3);
    CHECK_THROWS_MATCHES(
        stationary_distribution(InducedChain(disconnected, Eigen::VectorXd::Zero(3))), InputError,
        Catch::Matchers::Predicate<InputError>(
            [](const InputError& e) { return e.code() == "non_ergodic"; }));

    // Bipartite chain: power iteration oscillates between the two sides and
    // never meets the residual tolerance.
    Eigen::MatrixXd periodic(3, 3);
    periodic << 0, 0.3, 0.7, 1, 0, 0, 1, 0, 0;
    CHECK_THROWS_AS(stationary_distribution(InducedChain(periodic, Eigen::VectorXd::Zero(3))),
                    InputError);
}

TEST_CASE("true value: constant rewards give a geometric series", "[mdp]") {
    RandomFixtureParams params;
    params.seed = 5;
    params.n_states = 4;
    const Instance instance = fixture_random(params);
    const Eigen::MatrixXd P =
        induced_chain(instance.mdp, instance.behavior).transition_matrix();

    const InducedChain zero_chain(P, Eigen::VectorXd::Zero(4));
    CHECK(true_value(zero_chain, 0.9).lpNorm<Eigen::Infinity>() < 1e-12);

    const InducedChain ones_chain(P, Eigen::VectorXd::Ones(4));
    const double gamma = 0.85;
    CHECK((true_value(ones_chain, gamma).array() - 1.0 / (1.0 - gamma)).abs().maxCoeff() < 1e-10);
}

TEST_CASE("true value matches the truncated Neumann series", "[mdp]") {
    RandomFixtureParams params;
    params.seed = 17;
    params.n_states = 5;
    const Instance instance = fixture_random(params);
    const InducedChain chain = induced_chain(instance.mdp, instance.behavior);
    const double gamma = 0.9;

    Eigen::VectorXd neumann = Eigen::VectorXd::Zero(5);
    Eigen::VectorXd term = chain.reward_vector();
    for (int t = 0; t <= 500; ++t) {
        neumann += term;
        term = gamma * (chain.transition_matrix() * term);
    }
    const Eigen::VectorXd v = true_value(chain, gamma);
    CHECK((v - neumann).lpNorm<Eigen::Infinity>() < 1e-6);

    // Bellman identity.
    const Eigen::VectorXd bellman =
        chain.reward_vector() + gamma * (chain.transition_matrix() * v);
    CHECK((v - bellman).lpNorm<Eigen::Infinity>() <= 1e-10);
}

TEST_CASE("importance ratios", "[mdp]") {
    SECTION("identical policies give ratio one") {
        const Policy pi = uniform_policy(3, 2);
        const Eigen::MatrixXd rho = importance_ratios(pi, pi);
        CHECK((rho.array() == 1.0).all());
    }

    SECTION("two-state example ratios") {
        const Instance instance = fixture_two_state(0.1, 0.9);
        const Eigen::MatrixXd rho = importance_ratios(instance.target, instance.behavior);
        CHECK(rho(0, 0) == Approx(0.1 / 0.9).epsilon(1e-14));  // go-Left
        CHECK(rho(0, 1) == Approx(9.0).epsilon(1e-14));        // go-Right
    }

    SECTION("deterministic target over a uniform behavior") {
        Eigen::MatrixXd det(2, 4);
        det << 0, 0, 1, 0, 1, 0, 0, 0;
        const Eigen::MatrixXd rho = importance_ratios(Policy(det), uniform_policy(2, 4));
        CHECK(rho(0, 2) == Approx(4.0));
        CHECK(rho(1, 0) == Approx(4.0));
        CHECK(rho(0, 0) == 0.0);
    }

    SECTION("coverage violation names the pair") {
        Eigen::MatrixXd target(1, 2), behavior(1, 2);
        target << 0.5, 0.5;
        behavior << 1.0, 0.0;
        CHECK_THROWS_MATCHES(importance_ratios(Policy(target), Policy(behavior)), InputError,
                             Catch::Matchers::Predicate<InputError>([](const InputError& e) {
                                 return e.code() == "coverage" &&
                                        std::string(e.what()).find("action 1") !=
                                            std::string::npos;
                             }));
    }

    SECTION("behavior-weighted ratios average to one") {
        for (std::uint64_t seed : {2u, 9u, 31u}) {
            RandomFixtureParams params;
            params.seed = seed;
            const Instance instance = fixture_random(params);
            const Eigen::MatrixXd rho =
                importance_ratios(instance.target, instance.behavior);
            const Eigen::VectorXd means =
                rho.cwiseProduct(instance.behavior.table()).rowwise().sum();
            CHECK((means.array() - 1.0).abs().maxCoeff() < 1e-12);
        }
    }
}
