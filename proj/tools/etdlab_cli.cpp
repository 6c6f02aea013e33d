// Command-line front end: audit instances against the contraction and
// error-bound guarantees, run the stochastic learners, or print the
// two-state example table.
//
// Exit codes: 0 success (audit: every check holds), 1 input error,
// 2 invariant violation (a "holds" flag is false), 3 internal error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "etdlab/etdlab.hpp"

namespace {

struct InstanceFlags {
    std::string spec_path;
    std::string fixture;
    double epsilon = 0.1;
    double gamma = 0.9;
    std::uint64_t seed = 1;
    std::optional<double> lambda;
};

void add_instance_flags(CLI::App* cmd, InstanceFlags& flags) {
    auto* spec = cmd->add_option("--spec", flags.spec_path, "Path to an instance JSON file");
    auto* fixture = cmd->add_option("--fixture", flags.fixture,
                                    "Built-in fixture: two_state, random, divergence")
                        ->check(CLI::IsMember({"two_state", "random", "divergence"}));
    spec->excludes(fixture);
    cmd->add_option("--epsilon", flags.epsilon, "two_state fixture: policy mixing parameter");
    cmd->add_option("--gamma", flags.gamma, "two_state/random fixture: discount factor");
    cmd->add_option("--seed", flags.seed, "random fixture and learner seed");
    cmd->add_option("--lambda", flags.lambda, "bootstrapping parameter in [0, 1)");
}

etdlab::Instance build_instance(const InstanceFlags& flags) {
    etdlab::Instance instance = [&]() {
        if (!flags.spec_path.empty()) return etdlab::parse_spec(flags.spec_path);
        if (flags.fixture == "two_state")
            return etdlab::fixture_two_state(flags.epsilon, flags.gamma);
        if (flags.fixture == "random") {
            etdlab::RandomFixtureParams params;
            params.seed = flags.seed;
            params.gamma = flags.gamma;
            return etdlab::fixture_random(params);
        }
        if (flags.fixture == "divergence") return etdlab::fixture_divergence();
        throw etdlab::InputError("malformed", "need either --spec or --fixture");
    }();
    if (flags.lambda) instance.lambda = *flags.lambda;
    return instance;
}

void write_or_print(const std::string& text, const std::string& out_path) {
    if (out_path.empty()) {
        std::fputs(text.c_str(), stdout);
        return;
    }
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw etdlab::InputError("io", "cannot open output file '" + out_path + "'");
    out << text;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Exact off-policy evaluation laboratory for emphatic TD"};
    app.require_subcommand(1);

    InstanceFlags audit_flags;
    std::string audit_out;
    CLI::App* audit = app.add_subcommand("audit", "Check the contraction and error-bound "
                                                  "guarantees on one instance");
    add_instance_flags(audit, audit_flags);
    audit->add_option("--out", audit_out, "Write the JSON report here instead of stdout");

    InstanceFlags learn_flags;
    std::string learn_out;
    std::string algorithm = "etd0";
    std::string schedule = "harmonic";
    double alpha0 = 0.1;
    double schedule_offset = 1000.0;
    long steps = 100000;
    long stride = 0;
    CLI::App* learn = app.add_subcommand("learn", "Run a stochastic learner against the exact "
                                                  "fixed point");
    add_instance_flags(learn, learn_flags);
    learn->add_option("--alg", algorithm, "Algorithm: etd0, etdlambda, td0")
        ->check(CLI::IsMember({"etd0", "etdlambda", "td0"}));
    learn->add_option("--steps", steps, "Number of transitions to simulate");
    learn->add_option("--schedule", schedule, "Step-size schedule: harmonic, constant")
        ->check(CLI::IsMember({"harmonic", "constant"}));
    learn->add_option("--alpha0", alpha0, "Base step size");
    learn->add_option("--offset", schedule_offset, "Harmonic schedule offset c in a0*c/(c+t)");
    learn->add_option("--stride", stride, "Curve report stride (0 = steps/100)");
    learn->add_option("--out", learn_out, "Write the curve CSV here instead of stdout");

    double example_epsilon = 0.1;
    double example_gamma = 0.9;
    CLI::App* example = app.add_subcommand("example", "Print the two-state example table: "
                                                      "closed forms vs. direct computation");
    example->add_option("--epsilon", example_epsilon, "Policy mixing parameter in (0, 1)");
    example->add_option("--gamma", example_gamma, "Discount factor in [0, 1)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);  // prints the message; 0 for --help
        return code == 0 ? 0 : 1;
    }

    try {
        if (audit->parsed()) {
            const etdlab::Instance instance = build_instance(audit_flags);
            etdlab::AuditOptions options;
            if (instance.name == "two_state") options.two_state_epsilon = audit_flags.epsilon;
            const etdlab::AuditResult result = etdlab::run_audit(instance, options);
            write_or_print(etdlab::canonical_dump(result.report), audit_out);
            return result.all_hold ? 0 : 2;
        }
        if (learn->parsed()) {
            const etdlab::Instance instance = build_instance(learn_flags);
            etdlab::LearnConfig config;
            config.algorithm = algorithm == "etd0" ? etdlab::Algorithm::etd0
                               : algorithm == "etdlambda" ? etdlab::Algorithm::etd_lambda
                                                          : etdlab::Algorithm::td0;
            config.schedule.kind = schedule == "constant"
                                       ? etdlab::StepSchedule::Kind::constant
                                       : etdlab::StepSchedule::Kind::harmonic;
            config.schedule.alpha0 = alpha0;
            config.schedule.offset = schedule_offset;
            config.steps = steps;
            config.seed = learn_flags.seed;
            config.report_stride = stride;
            const etdlab::LearningCurve curve = etdlab::run_learning(instance, config);
            write_or_print(etdlab::curve_to_csv(curve), learn_out);
            const std::string summary =
                etdlab::canonical_dump(etdlab::learn_summary_json(instance, config, curve));
            // Summary on stdout, unless the CSV already occupies it.
            std::fputs(summary.c_str(), learn_out.empty() ? stderr : stdout);
            return 0;
        }
        if (example->parsed()) {
            const auto rows = etdlab::example_rows(example_epsilon, example_gamma);
            std::printf("%-32s %24s %24s %12s\n", "quantity", "closed_form", "computed",
                        "abs_diff");
            for (const auto& row : rows)
                std::printf("%-32s %24.17g %24.17g %12.3g\n", row.label.c_str(), row.closed_form,
                            row.computed, row.abs_diff());
            return 0;
        }
    } catch (const etdlab::InputError& e) {
        std::fprintf(stderr, "input error: %s\n", e.what());
        return 1;
    } catch (const etdlab::InvariantError& e) {
        std::fprintf(stderr, "invariant violation: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "internal error: %s\n", e.what());
        return 3;
    }
    return 0;
}
