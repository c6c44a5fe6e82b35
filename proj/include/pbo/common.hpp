#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace pbo {

// Error hierarchy: callers can catch std::invalid_argument for contract
// violations and std::runtime_error for numerical/IO failures.
struct InputError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct LookupError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct CapabilityError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct FitError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Optional sink for degenerate-case notices (padding, jitter repairs, ...).
using EventLog = std::vector<std::string>;

inline void log_event(EventLog* log, const std::string& msg) {
    if (log != nullptr) log->push_back(msg);
}

// splitmix64 finalizer; used to derive independent sub-seeds from one seed.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Seeded generator with stable draw semantics. The standard distribution
// objects are implementation-defined, so the mappings live here.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    // uniform in [0, 1) with 53-bit resolution
    double u01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * u01(); }

    // uniform index in [0, n)
    std::size_t index(std::size_t n) {
        return static_cast<std::size_t>(
            (static_cast<__uint128_t>(gen_()) * n) >> 64);
    }

    std::uint64_t raw() { return gen_(); }

    Rng fork(std::uint64_t salt) { return Rng(mix_seed(gen_(), salt)); }

  private:
    std::mt19937_64 gen_;
};

}  // namespace pbo
