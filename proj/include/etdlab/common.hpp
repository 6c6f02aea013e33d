#pragma once

#include <cstdint>
#include <cstdio>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace etdlab {

// Error hierarchy mirrored by the CLI exit codes:
//   InputError -> 1, InvariantError -> 2, InternalError -> 3.
// Every error carries a short machine-readable code next to the human message.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message)
        : std::runtime_error("[" + code + "] " + message), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

// Rejected user input: bad dimensions, non-stochastic rows, coverage holes, ...
class InputError : public Error {
public:
    using Error::Error;
};

// A checked invariant failed (theorem slack, corrupted fixture).
class InvariantError : public Error {
public:
    using Error::Error;
};

// A condition that cannot occur for valid inputs; indicates a bug.
class InternalError : public Error {
public:
    using Error::Error;
};

// ---------------------------------------------------------------------------
// Deterministic random primitives. All randomness in the library goes through
// these so that a (seed, code path) pair produces bit-identical streams on
// every platform; std::*_distribution is avoided because its output is
// implementation-defined.

inline double uniform01(std::mt19937_64& rng) {
    // 53 random bits -> [0, 1)
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform_pm1(std::mt19937_64& rng) {
    return 2.0 * uniform01(rng) - 1.0;
}

// Inverse-CDF draw from a probability vector.
inline int sample_index(const Eigen::VectorXd& probs, std::mt19937_64& rng) {
    const double u = uniform01(rng);
    double acc = 0.0;
    const int n = static_cast<int>(probs.size());
    for (int i = 0; i < n; ++i) {
        acc += probs[i];
        if (u < acc) return i;
    }
    return n - 1;  // guard against accumulated rounding at u ~ 1
}

// ---------------------------------------------------------------------------
// FNV-1a, used for content hashes of canonically serialized instances.

inline std::uint64_t fnv1a64(std::string_view text) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::string hex64(std::uint64_t value) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[value & 0xf];
        value >>= 4;
    }
    return out;
}

// 17 significant digits: enough to round-trip any double exactly.
inline std::string format_g17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

// ---------------------------------------------------------------------------
// Probability vector validation.
//
// Entries must be finite and nonnegative and sum to 1 within `tol`. Accepted
// vectors are rescaled only when the deviation exceeds 1e-13; a rescale
// leaves the sum within a few ulps of 1, so re-validating an already
// normalized vector (e.g. after a serialization round trip) never changes a
// bit.
template <typename Derived>
void normalize_probabilities(Eigen::MatrixBase<Derived>& v, double tol, const std::string& what) {
    const Eigen::Index n = v.size();
    if (n == 0) throw InputError("dimension_mismatch", what + ": empty probability vector");

    double sum = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double p = v[i];
        if (!std::isfinite(p)) throw InputError("non_finite", what + ": non-finite entry");
        if (p < 0.0)
            throw InputError("stochasticity",
                             what + ": negative entry " + std::to_string(p) + " at index " +
                                 std::to_string(i));
        sum += p;
    }
    if (std::abs(sum - 1.0) > tol)
        throw InputError("stochasticity",
                         what + ": entries sum to " + std::to_string(sum) + ", expected 1 within " +
                             std::to_string(tol));

    if (std::abs(sum - 1.0) > 1e-13) v /= sum;
}

inline void require(bool condition, const char* code, const std::string& message) {
    if (!condition) throw InputError(code, message);
}

}  // namespace etdlab
