#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace grwlab {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Deterministic RNG. mt19937_64 output is pinned by the standard; the
// uniform/exponential transforms below are hand-rolled so that streams are
// reproducible across standard-library implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    // Documented splitting scheme: stream(master, i) hashes master and the
    // stream index together through splitmix64. Streams for distinct indices
    // are independent for all practical purposes and never depend on how many
    // other streams exist.
    static Rng stream(std::uint64_t master, std::uint64_t index) {
        return Rng(splitmix64(master ^ splitmix64(0x9e3779b97f4a7c15ULL * (index + 1))));
    }

    std::uint64_t next_u64() { return engine_(); }

    // Uniform on [0, 1): 53 random bits.
    double uniform01() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    // Uniform on (0, 1].
    double uniform01_open_left() { return 1.0 - uniform01(); }

    // Exponential waiting time at the given rate.
    double exp_waiting(double rate) {
        return -std::log(uniform01_open_left()) / rate;
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace grwlab
