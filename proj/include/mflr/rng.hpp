#pragma once

#include <cstdint>
#include <random>

namespace mflr::rng {

/// Counter-based seed derivation (splitmix64 finalizer). Replication r of an
/// experiment draws from derive(base, r), so adding replications never
/// perturbs earlier streams; sub-streams inside a replication use a second
/// derivation level.
inline std::uint64_t derive(std::uint64_t base, std::uint64_t stream) {
    std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Deterministic uniform generator. Doubles are built directly from the
/// mt19937_64 output (53-bit mantissa) instead of std::uniform_real_distribution,
/// whose mapping is implementation-defined.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    std::uint64_t next_u64() { return gen_(); }

private:
    std::mt19937_64 gen_;
};

}  // namespace mflr::rng
