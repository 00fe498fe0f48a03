#ifndef LNS_FORMAT_HPP
#define LNS_FORMAT_HPP

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace lns {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct FormatError : Error {
    using Error::Error;
};
struct ConfigError : Error {
    using Error::Error;
};
struct DataError : Error {
    using Error::Error;
};
struct UsageError : Error {
    using Error::Error;
};

/// Multi-base LNS format: values are sign * s * 2^(-exponent/gamma) with an
/// integer exponent in [0, 2^(B-1)-1]. gamma is restricted to powers of two
/// so the exponent splits into quotient (MSB) and remainder (LSB) fields.
struct LnsFormat {
    int bitwidth = 8;     // B, total bits including sign
    int base_factor = 8;  // gamma = 2^b
    int b = 3;            // log2(gamma)
    int exponent_bits = 7;

    uint32_t max_exponent() const { return (uint32_t(1) << exponent_bits) - 1; }
    // Largest representable negative exponent magnitude, (2^(B-1)-1)/gamma.
    double dynamic_range_exponent() const {
        return double(max_exponent()) / double(base_factor);
    }
    // Multiplicative spacing between adjacent representable magnitudes.
    double quantization_gap() const { return std::exp2(1.0 / double(base_factor)); }

    bool operator==(const LnsFormat&) const = default;
};

LnsFormat make_format(int bitwidth, int gamma);

/// Quantized scalar: decoded value is 0 when `zero`, else
/// sign * s * 2^(-exponent/gamma) for the group scale s.
struct LnsScalar {
    int8_t sign = 1;  // +1 or -1
    uint32_t exponent = 0;
    bool zero = false;

    bool operator==(const LnsScalar&) const = default;
};

enum class Granularity : uint8_t { PerTensor = 0, PerChannel = 1, PerFeature = 2 };

enum class RoundKind : uint8_t { NearestEven = 0, Stochastic = 1 };

/// Rounding mode; stochastic rounding is reproducible given the seed.
struct RoundingMode {
    RoundKind kind = RoundKind::NearestEven;
    uint64_t seed = 0;

    static RoundingMode nearest() { return {RoundKind::NearestEven, 0}; }
    static RoundingMode stochastic(uint64_t seed) { return {RoundKind::Stochastic, seed}; }
};

using Rng = std::mt19937_64;

// Uniform draw in [0,1) from the top 53 bits of the generator output.
inline double uniform01(Rng& rng) {
    return double(rng() >> 11) * 0x1p-53;
}

double round_half_even(double x);

/// SR(x): floor(x)+1 with probability x-floor(x), else floor(x). E[SR(x)] = x.
int64_t stochastic_round(double x, Rng& rng);

/// round(x) under the given mode; stochastic mode requires a generator.
double round_value(double x, RoundKind kind, Rng* rng);

/// LogQuant: exponent = clamp(round(-log2(|x|/s) * gamma), 0, 2^(B-1)-1).
/// x == 0 encodes as the explicit zero; |x| > s clamps to exponent 0;
/// tiny |x| clamps to the max exponent (flush toward smallest representable).
LnsScalar log_quantize(double x, const LnsFormat& fmt, double scale,
                       RoundKind kind = RoundKind::NearestEven, Rng* rng = nullptr);

double decode(const LnsScalar& v, const LnsFormat& fmt, double scale);

}  // namespace lns

#endif
