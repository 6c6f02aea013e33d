#include <catch2/catch.hpp>

#include "etdlab/fixtures.hpp"
#include "etdlab/learner.hpp"

using namespace etdlab;

TEST_CASE("simulate", "[learner]") {
    SECTION("one-state MDP never leaves its state") {
        TabularMdp mdp({Eigen::MatrixXd::Ones(1, 1)}, Eigen::MatrixXd::Constant(1, 1, 2.0), 0.5,
                       Eigen::VectorXd::Ones(1));
        const Policy pol(Eigen::MatrixXd::Ones(1, 1));
        const Trajectory traj = simulate(mdp, pol, pol, 3, 50);
        for (const Transition& t : traj.steps) {
            CHECK(t.state == 0);
            CHECK(t.next_state == 0);
            CHECK(t.reward == 2.0);
        }
    }

    SECTION("on-policy sampling has unit ratios") {
        const Instance instance = fixture_two_state(0.1, 0.9);
        const Trajectory traj = simulate(instance.mdp, instance.behavior, instance.behavior, 7, 200);
        for (const Transition& t : traj.steps) CHECK(t.rho == 1.0);
    }

    SECTION("long-run visit frequencies approach the stationary distribution") {
        const Instance instance = fixture_two_state(0.1, 0.9);
        const Trajectory traj =
            simulate(instance.mdp, instance.behavior, instance.target, 12345, 1000000);
        Eigen::Vector2d counts = Eigen::Vector2d::Zero();
        for (const Transition& t : traj.steps) counts[t.state] += 1.0;
        counts /= static_cast<double>(traj.steps.size());
        CHECK(std::abs(counts[0] - 0.9) < 0.01);
        CHECK(std::abs(counts[1] - 0.1) < 0.01);
    }

    SECTION("identical seeds give identical trajectories") {
        const Instance instance = fixture_two_state(0.2, 0.8);
        const Trajectory a = simulate(instance.mdp, instance.behavior, instance.target, 99, 500);
        const Trajectory b = simulate(instance.mdp, instance.behavior, instance.target, 99, 500);
        REQUIRE(a.steps.size() == b.steps.size());
        for (std::size_t i = 0; i < a.steps.size(); ++i) {
            CHECK(a.steps[i].state == b.steps[i].state);
            CHECK(a.steps[i].action == b.steps[i].action);
            CHECK(a.steps[i].rho == b.steps[i].rho);
        }
    }
}

TEST_CASE("etd0 single step", "[learner]") {
    const Instance instance = fixture_two_state(0.1, 0.9);
    const FeatureMap& features = instance.features;

    SECTION("hand-written transition: theta_1 = alpha F_0 rho_0 R_1 phi(s_0)") {
        // From state Left under go-Right: rho = 0.9 / 0.1 = 9, reward 1.
        const Transition t{0, 1, 1.0, 1, 9.0};
        const Etd0State next = etd0_step(Etd0State::zero(2), t, 0.1, 0.9, features);
        CHECK(next.theta[0] == Approx(0.1 * 1.0 * 9.0 * 1.0).margin(1e-15));
        CHECK(next.theta[1] == 0.0);
        CHECK(next.followon == Approx(0.9 * 9.0 * 1.0 + 1.0).margin(1e-15));
        CHECK(next.step_count == 1);
    }

    SECTION("seeded first transition obeys the same formula") {
        const Trajectory traj =
            simulate(instance.mdp, instance.behavior, instance.target, 2024, 1);
        const Transition& t = traj.steps.front();
        const Etd0State next = etd0_step(Etd0State::zero(2), t, 0.1, 0.9, features);
        Eigen::VectorXd expected = Eigen::VectorXd::Zero(2);
        expected[t.state] = 0.1 * 1.0 * t.rho * t.reward;
        CHECK((next.theta - expected).lpNorm<Eigen::Infinity>() < 1e-15);
    }

    SECTION("a zero ratio leaves theta unchanged") {
        Etd0State state = Etd0State::zero(2);
        state.theta << 0.5, -0.25;
        const Transition t{1, 0, 1.0, 0, 0.0};
        const Etd0State next = etd0_step(state, t, 0.1, 0.9, features);
        CHECK(next.theta == state.theta);
        CHECK(next.followon == 1.0);
    }

    SECTION("gamma 0 pins the follow-on at 1") {
        Etd0State state = Etd0State::zero(2);
        for (const Transition& t :
             simulate(instance.mdp, instance.behavior, instance.target, 5, 100).steps) {
            state = etd0_step(state, t, 0.05, 0.0, features);
            CHECK(state.followon == 1.0);
        }
    }
}

TEST_CASE("etd lambda three-step hand trace", "[learner]") {
    // 2 states, tabular features, gamma = lambda = 0.5, alpha = 0.1, i = 1.
    const FeatureMap features = FeatureMap::tabular(2);
    const InterestVector interest = InterestVector::ones(2);
    const double alpha = 0.1, gamma = 0.5, lambda = 0.5;

    EtdLambdaState state = EtdLambdaState::zero(2, 1.0);

    state = etd_lambda_step(state, {0, 0, 1.0, 1, 2.0}, alpha, gamma, lambda, interest, features);
    CHECK(state.emphasis == Approx(1.0).margin(1e-15));
    CHECK(state.eligibility[0] == Approx(2.0).margin(1e-15));
    CHECK(state.eligibility[1] == 0.0);
    CHECK(state.theta[0] == Approx(0.2).margin(1e-15));
    CHECK(state.followon == Approx(2.0).margin(1e-15));

    state = etd_lambda_step(state, {1, 0, 0.0, 0, 0.5}, alpha, gamma, lambda, interest, features);
    CHECK(state.emphasis == Approx(1.5).margin(1e-15));
    CHECK(state.eligibility[0] == Approx(0.25).margin(1e-15));
    CHECK(state.eligibility[1] == Approx(0.75).margin(1e-15));
    CHECK(state.theta[0] == Approx(0.2025).margin(1e-12));
    CHECK(state.theta[1] == Approx(0.0075).margin(1e-12));
    CHECK(state.followon == Approx(1.5).margin(1e-15));

    state = etd_lambda_step(state, {0, 0, 1.0, 0, 1.0}, alpha, gamma, lambda, interest, features);
    CHECK(state.emphasis == Approx(1.25).margin(1e-15));
    CHECK(state.eligibility[0] == Approx(1.3125).margin(1e-12));
    CHECK(state.eligibility[1] == Approx(0.1875).margin(1e-12));
    CHECK(state.theta[0] == Approx(0.3204609375).margin(1e-12));
    CHECK(state.theta[1] == Approx(0.0243515625).margin(1e-12));
    CHECK(state.step_count == 3);
}

TEST_CASE("etd lambda invariants", "[learner]") {
    const Instance instance = fixture_two_state(0.2, 0.8);

    SECTION("a zero ratio clears the trace and freezes theta") {
        EtdLambdaState state = EtdLambdaState::zero(2, 1.0);
        state.theta << 1.0, -1.0;
        state.eligibility << 0.3, 0.4;
        const EtdLambdaState next = etd_lambda_step(state, {0, 0, 1.0, 0, 0.0}, 0.1, 0.8, 0.5,
                                                    instance.interest, instance.features);
        CHECK(next.eligibility.lpNorm<Eigen::Infinity>() == 0.0);
        CHECK(next.theta == state.theta);
    }

    SECTION("follow-on stays above the smallest interest") {
        EtdLambdaState state = EtdLambdaState::zero(2, 1.0);
        for (const Transition& t :
             simulate(instance.mdp, instance.behavior, instance.target, 11, 300).steps) {
            state = etd_lambda_step(state, t, 0.01, 0.8, 0.5, instance.interest,
                                    instance.features);
            CHECK(state.followon >= 1.0 - 1e-15);
        }
    }
}

TEST_CASE("etd lambda at lambda 0 with unit interest reproduces etd0 bit for bit", "[learner]") {
    const Instance instance = fixture_two_state(0.1, 0.9);
    const Trajectory traj =
        simulate(instance.mdp, instance.behavior, instance.target, 314, 1000);

    Etd0State scalar = Etd0State::zero(2);
    EtdLambdaState trace =
        EtdLambdaState::zero(2, instance.interest.vector()[traj.steps.front().state]);
    long t = 0;
    for (const Transition& transition : traj.steps) {
        const double alpha = 0.1 * 1000.0 / (1000.0 + static_cast<double>(t));
        scalar = etd0_step(scalar, transition, alpha, 0.9, instance.features);
        trace = etd_lambda_step(trace, transition, alpha, 0.9, 0.0, instance.interest,
                                instance.features);
        REQUIRE(scalar.theta == trace.theta);  // exact, not approximate
        REQUIRE(scalar.followon == trace.followon);
        REQUIRE(scalar.followon >= 1.0);  // F = gamma rho F + 1 with rho >= 0
        ++t;
    }
}

TEST_CASE("td0 step", "[learner]") {
    const Instance instance = fixture_two_state(0.1, 0.9);

    SECTION("zero ratio leaves theta unchanged") {
        Etd0State state = Etd0State::zero(2);
        state.theta << 0.7, 0.1;
        const Etd0State next = td0_step(state, {0, 0, 1.0, 0, 0.0}, 0.1, 0.9, instance.features);
        CHECK(next.theta == state.theta);
    }

    SECTION("on-policy td0 equals etd0 while gamma = 0") {
        // With gamma = 0 the follow-on trace is identically 1, so the two
        // updates coincide even off-policy.
        Etd0State a = Etd0State::zero(2);
        Etd0State b = Etd0State::zero(2);
        for (const Transition& t :
             simulate(instance.mdp, instance.behavior, instance.target, 8, 200).steps) {
            a = etd0_step(a, t, 0.1, 0.0, instance.features);
            b = td0_step(b, t, 0.1, 0.0, instance.features);
            REQUIRE(a.theta == b.theta);
        }
    }
}

TEST_CASE("run_learning contracts", "[learner]") {
    const Instance instance = fixture_two_state(0.1, 0.9);

    SECTION("zero steps produce a single curve point") {
        LearnConfig config;
        config.steps = 0;
        const LearningCurve curve = run_learning(instance, config);
        REQUIRE(curve.points.size() == 1);
        CHECK(curve.points.front().step == 0);
        CHECK(curve.points.front().followon == 1.0);
    }

    SECTION("identical configs give bit-identical curves") {
        LearnConfig config;
        config.steps = 5000;
        config.seed = 4;
        const LearningCurve a = run_learning(instance, config);
        const LearningCurve b = run_learning(instance, config);
        REQUIRE(a.points.size() == b.points.size());
        for (std::size_t i = 0; i < a.points.size(); ++i) {
            CHECK(a.points[i].distance_m == b.points[i].distance_m);
            CHECK(a.points[i].theta_norm == b.points[i].theta_norm);
            CHECK(a.points[i].followon == b.points[i].followon);
        }
    }

    SECTION("different seeds share the config hash but not the curve") {
        LearnConfig config;
        config.steps = 2000;
        config.seed = 1;
        const LearningCurve a = run_learning(instance, config);
        config.seed = 2;
        const LearningCurve b = run_learning(instance, config);
        CHECK(a.config_hash == b.config_hash);
        CHECK(a.points.back().distance_m != b.points.back().distance_m);
    }

    SECTION("etd0 ends near the fixed point on the two-state fixture") {
        LearnConfig config;
        config.steps = 200000;
        config.seed = 2;
        config.report_stride = 200000;
        const LearningCurve curve = run_learning(instance, config);
        CHECK(curve.points.back().distance_m < 0.05 * curve.value_norm_m);
    }

    SECTION("on-policy etd0 with a harmonic schedule converges") {
        // 3-state instance with rewards bounded away from zero; on-policy
        // sampling keeps the follow-on trace deterministic at 1/(1-gamma).
        RandomFixtureParams params;
        params.seed = 6;
        params.n_states = 3;
        params.n_actions = 2;
        params.gamma = 0.9;
        const Instance base = fixture_random(params);
        std::vector<Eigen::MatrixXd> transition{base.mdp.transition(0), base.mdp.transition(1)};
        Instance shared{TabularMdp(transition, base.mdp.reward().array() + 2.0, 0.9,
                                   base.mdp.initial_dist()),
                        base.behavior,
                        base.behavior,
                        base.features,
                        base.interest,
                        0.0,
                        "on_policy"};

        LearnConfig config;
        config.steps = 200000;
        config.seed = 10;
        const LearningCurve curve = run_learning(shared, config);
        CHECK(curve.points.back().distance_m < 0.05 * curve.value_norm_m);
    }
}

TEST_CASE("empirical follow-on visitation matches f", "[learner]") {
    // gamma = 0.5 with epsilon = 0.3 keeps gamma * rho_max below 1, so the
    // follow-on trace has light tails and the time average concentrates.
    // Closed form: f = (1, 1).
    const Instance instance = fixture_two_state(0.3, 0.5);
    const InducedChain chain_pi = induced_chain(instance.mdp, instance.target);
    const StateDistribution d_mu =
        stationary_distribution(induced_chain(instance.mdp, instance.behavior));
    const Eigen::VectorXd f = followon_vector(d_mu, chain_pi.transition_matrix(), 0.5);
    REQUIRE(f[0] == Approx(1.0).margin(1e-12));
    REQUIRE(f[1] == Approx(1.0).margin(1e-12));

    const Trajectory traj =
        simulate(instance.mdp, instance.behavior, instance.target, 777, 1000000);
    Etd0State state = Etd0State::zero(2);
    Eigen::Vector2d weighted_visits = Eigen::Vector2d::Zero();
    for (const Transition& t : traj.steps) {
        weighted_visits[t.state] += state.followon;
        state = etd0_step(state, t, 0.0, 0.5, instance.features);
    }
    weighted_visits /= static_cast<double>(traj.steps.size());
    CHECK(std::abs(weighted_visits[0] - f[0]) / f[0] < 0.05);
    CHECK(std::abs(weighted_visits[1] - f[1]) / f[1] < 0.05);
}
