#pragma once

#include <cstdint>

namespace asl {

// splitmix64 stream. Small, fast, and bit-reproducible across platforms,
// which std::normal_distribution is not. All randomness in the project
// flows through this type via seeds derived with derive_seed().
struct SplitMix64 {
    std::uint64_t state = 0;

    explicit SplitMix64(std::uint64_t seed) : state(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // uniform in [0, 1)
    double next_double() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // uniform in (0, 1), endpoints excluded
    double next_open() { return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53; }

    // uniform integer in [0, n)
    std::uint64_t next_below(std::uint64_t n) { return next() % n; }

    // standard normal draw (inverse-CDF method)
    double next_normal();
};

// Derives an independent, well-mixed stream seed from a base seed and up to
// three tag values (step index, candidate index, purpose tag, ...).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a,
                          std::uint64_t b = 0, std::uint64_t c = 0);

double norm_pdf(double x);   // standard normal density
double norm_cdf(double x);   // standard normal CDF, erfc-based
double norm_icdf(double p);  // inverse standard normal CDF, p in (0, 1)

} // namespace asl
