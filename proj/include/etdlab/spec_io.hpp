#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "etdlab/common.hpp"
#include "etdlab/instance.hpp"

namespace etdlab {

using ordered_json = nlohmann::ordered_json;

namespace detail {

// Serializer with a pinned number format: every floating-point value is
// written with %.17g so that serialize -> parse -> serialize is a byte-level
// fixed point and reports are byte-identical across runs.
inline void canonical_dump_rec(const ordered_json& node, std::string& out, int depth) {
    const std::string pad(static_cast<std::size_t>(depth) * 2, ' ');
    const std::string pad_in(static_cast<std::size_t>(depth + 1) * 2, ' ');
    switch (node.type()) {
        case ordered_json::value_t::object: {
            if (node.empty()) {
                out += "{}";
                return;
            }
            out += "{\n";
            bool first = true;
            for (auto it = node.begin(); it != node.end(); ++it) {
                if (!first) out += ",\n";
                first = false;
                out += pad_in + ordered_json(it.key()).dump() + ": ";
                canonical_dump_rec(it.value(), out, depth + 1);
            }
            out += "\n" + pad + "}";
            return;
        }
        case ordered_json::value_t::array: {
            if (node.empty()) {
                out += "[]";
                return;
            }
            const bool flat = std::all_of(node.begin(), node.end(), [](const ordered_json& e) {
                return e.is_number() || e.is_string() || e.is_boolean();
            });
            out += "[";
            bool first = true;
            for (const auto& element : node) {
                if (!first) out += flat ? ", " : ",";
                first = false;
                if (!flat) {
                    out += "\n" + pad_in;
                }
                canonical_dump_rec(element, out, depth + 1);
            }
            if (!flat) out += "\n" + pad;
            out += "]";
            return;
        }
        case ordered_json::value_t::number_float:
            out += format_g17(node.get<double>());
            return;
        default:
            out += node.dump();
            return;
    }
}

}  // namespace detail

inline std::string canonical_dump(const ordered_json& document) {
    std::string out;
    detail::canonical_dump_rec(document, out, 0);
    out += "\n";
    return out;
}

// ---------------------------------------------------------------------------
// Instance <-> JSON. Keys are emitted in a fixed order and optional fields
// are always materialized, so equal instances serialize to equal bytes.

inline ordered_json to_spec_json(const Instance& instance) {
    const int n = instance.mdp.n_states();
    const int n_actions = instance.mdp.n_actions();

    const auto matrix_to_json = [](const Eigen::MatrixXd& m) {
        ordered_json rows = ordered_json::array();
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            ordered_json row = ordered_json::array();
            for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
            rows.push_back(std::move(row));
        }
        return rows;
    };
    const auto vector_to_json = [](const Eigen::VectorXd& v) {
        ordered_json out = ordered_json::array();
        for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
        return out;
    };

    ordered_json doc;
    doc["states"] = n;
    doc["actions"] = n_actions;
    doc["gamma"] = instance.mdp.discount();
    ordered_json transition = ordered_json::array();
    for (int a = 0; a < n_actions; ++a) transition.push_back(matrix_to_json(instance.mdp.transition(a)));
    doc["transition"] = std::move(transition);
    doc["reward"] = matrix_to_json(instance.mdp.reward());
    doc["initial_dist"] = vector_to_json(instance.mdp.initial_dist());
    doc["policies"] = ordered_json{{"behavior", matrix_to_json(instance.behavior.table())},
                                   {"target", matrix_to_json(instance.target.table())}};
    doc["features"] = matrix_to_json(instance.features.matrix());
    doc["interest"] = vector_to_json(instance.interest.vector());
    doc["lambda"] = instance.lambda;
    return doc;
}

inline std::string spec_text(const Instance& instance) {
    return canonical_dump(to_spec_json(instance));
}

inline std::string instance_hash(const Instance& instance) {
    return hex64(fnv1a64(spec_text(instance)));
}

namespace detail {

inline const ordered_json& spec_field(const ordered_json& doc, const char* key) {
    const auto it = doc.find(key);
    if (it == doc.end())
        throw InputError("malformed", std::string("missing field '") + key + "'");
    return *it;
}

inline Eigen::MatrixXd json_to_matrix(const ordered_json& node, Eigen::Index rows,
                                      Eigen::Index cols, const std::string& what) {
    if (!node.is_array() || static_cast<Eigen::Index>(node.size()) != rows)
        throw InputError("dimension_mismatch",
                         what + ": expected " + std::to_string(rows) + " rows");
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        const auto& row = node[static_cast<std::size_t>(i)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
            throw InputError("dimension_mismatch",
                             what + ": row " + std::to_string(i) + " must have " +
                                 std::to_string(cols) + " entries");
        for (Eigen::Index j = 0; j < cols; ++j) {
            const auto& cell = row[static_cast<std::size_t>(j)];
            if (!cell.is_number())
                throw InputError("malformed", what + ": non-numeric entry at (" +
                                                  std::to_string(i) + ", " + std::to_string(j) +
                                                  ")");
            m(i, j) = cell.get<double>();
        }
    }
    return m;
}

inline Eigen::VectorXd json_to_vector(const ordered_json& node, Eigen::Index size,
                                      const std::string& what) {
    if (!node.is_array() || static_cast<Eigen::Index>(node.size()) != size)
        throw InputError("dimension_mismatch",
                         what + ": expected " + std::to_string(size) + " entries");
    Eigen::VectorXd v(size);
    for (Eigen::Index i = 0; i < size; ++i) {
        const auto& cell = node[static_cast<std::size_t>(i)];
        if (!cell.is_number())
            throw InputError("malformed",
                             what + ": non-numeric entry at index " + std::to_string(i));
        v[i] = cell.get<double>();
    }
    return v;
}

}  // namespace detail

// Parses and fully validates an instance document. Every validation failure
// carries one of the error codes: malformed, dimension_mismatch,
// stochasticity, coverage, parameter_range, rank_deficient, non_finite.
inline Instance parse_spec_text(const std::string& text, const std::string& origin) {
    ordered_json doc;
    try {
        doc = ordered_json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw InputError("malformed", origin + ": " + e.what());
    }
    if (!doc.is_object()) throw InputError("malformed", origin + ": top level must be an object");

    const auto& states_node = detail::spec_field(doc, "states");
    const auto& actions_node = detail::spec_field(doc, "actions");
    if (!states_node.is_number_integer() || !actions_node.is_number_integer())
        throw InputError("malformed", origin + ": 'states' and 'actions' must be integers");
    const auto n = states_node.get<Eigen::Index>();
    const auto n_actions = actions_node.get<Eigen::Index>();
    if (n < 1 || n_actions < 1)
        throw InputError("parameter_range", origin + ": need at least one state and one action");

    const auto& gamma_node = detail::spec_field(doc, "gamma");
    if (!gamma_node.is_number()) throw InputError("malformed", origin + ": 'gamma' must be a number");
    const double gamma = gamma_node.get<double>();

    const auto& transition_node = detail::spec_field(doc, "transition");
    if (!transition_node.is_array() ||
        static_cast<Eigen::Index>(transition_node.size()) != n_actions)
        throw InputError("dimension_mismatch",
                         origin + ": 'transition' must have one page per action");
    std::vector<Eigen::MatrixXd> transition;
    transition.reserve(static_cast<std::size_t>(n_actions));
    for (Eigen::Index a = 0; a < n_actions; ++a)
        transition.push_back(detail::json_to_matrix(transition_node[static_cast<std::size_t>(a)],
                                                    n, n,
                                                    "transition page " + std::to_string(a)));

    Eigen::MatrixXd reward =
        detail::json_to_matrix(detail::spec_field(doc, "reward"), n, n_actions, "reward");
    Eigen::VectorXd initial =
        detail::json_to_vector(detail::spec_field(doc, "initial_dist"), n, "initial_dist");

    const auto& policies = detail::spec_field(doc, "policies");
    if (!policies.is_object())
        throw InputError("malformed", origin + ": 'policies' must be an object");
    if (!policies.contains("target") || !policies.contains("behavior"))
        throw InputError("malformed",
                         origin + ": 'policies' must name both 'target' and 'behavior'");

    Eigen::MatrixXd feature_matrix =
        doc.contains("features")
            ? detail::json_to_matrix(doc["features"], n,
                                     static_cast<Eigen::Index>(doc["features"].empty()
                                                                   ? 0
                                                                   : doc["features"][0].size()),
                                     "features")
            : Eigen::MatrixXd(Eigen::MatrixXd::Identity(n, n));
    Eigen::VectorXd interest = doc.contains("interest")
                                   ? detail::json_to_vector(doc["interest"], n, "interest")
                                   : Eigen::VectorXd(Eigen::VectorXd::Ones(n));
    double lambda = 0.0;
    if (doc.contains("lambda")) {
        if (!doc["lambda"].is_number())
            throw InputError("malformed", origin + ": 'lambda' must be a number");
        lambda = doc["lambda"].get<double>();
    }
    require(lambda >= 0.0 && lambda < 1.0, "parameter_range",
            origin + ": lambda must lie in [0, 1)");

    Instance instance{
        TabularMdp(std::move(transition), std::move(reward), gamma, std::move(initial)),
        Policy(detail::json_to_matrix(policies["target"], n, n_actions, "policies.target")),
        Policy(detail::json_to_matrix(policies["behavior"], n, n_actions, "policies.behavior")),
        FeatureMap(std::move(feature_matrix)),
        InterestVector(std::move(interest)),
        lambda,
        origin};
    validate_instance(instance);
    return instance;
}

inline Instance parse_spec(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("io", "cannot open spec file '" + path + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_spec_text(buffer.str(), path);
}

}  // namespace etdlab
