#include "lns/format.hpp"

#include <algorithm>

namespace lns {

LnsFormat make_format(int bitwidth, int gamma) {
    if (bitwidth < 2 || bitwidth > 32) {
        throw FormatError("bitwidth must be in [2, 32], got " + std::to_string(bitwidth));
    }
    if (gamma < 1 || (gamma & (gamma - 1)) != 0) {
        throw FormatError("base factor must be a power of two >= 1, got " +
                          std::to_string(gamma));
    }
    LnsFormat fmt;
    fmt.bitwidth = bitwidth;
    fmt.base_factor = gamma;
    fmt.b = 0;
    while ((1 << fmt.b) < gamma) ++fmt.b;
    fmt.exponent_bits = bitwidth - 1;
    return fmt;
}

double round_half_even(double x) {
    double fl = std::floor(x);
    double frac = x - fl;
    if (frac > 0.5) return fl + 1.0;
    if (frac < 0.5) return fl;
    // tie: pick the even neighbor
    return std::fmod(fl, 2.0) == 0.0 ? fl : fl + 1.0;
}

int64_t stochastic_round(double x, Rng& rng) {
    double fl = std::floor(x);
    double frac = x - fl;
    double p = uniform01(rng);
    return int64_t(fl) + (p < frac ? 1 : 0);
}

double round_value(double x, RoundKind kind, Rng* rng) {
    if (kind == RoundKind::NearestEven) return round_half_even(x);
    if (rng == nullptr) throw UsageError("stochastic rounding requires a generator");
    return double(stochastic_round(x, *rng));
}

LnsScalar log_quantize(double x, const LnsFormat& fmt, double scale, RoundKind kind,
                       Rng* rng) {
    if (!std::isfinite(x)) throw DataError("cannot quantize a non-finite value");
    if (!(scale > 0.0)) throw DataError("scale factor must be positive");
    LnsScalar out;
    if (x == 0.0) {
        out.zero = true;
        return out;
    }
    out.sign = x < 0.0 ? int8_t(-1) : int8_t(1);
    double raw = -std::log2(std::fabs(x) / scale) * double(fmt.base_factor);
    double rounded = round_value(raw, kind, rng);
    double max_e = double(fmt.max_exponent());
    out.exponent = uint32_t(std::clamp(rounded, 0.0, max_e));
    return out;
}

double decode(const LnsScalar& v, const LnsFormat& fmt, double scale) {
    if (v.zero) return 0.0;
    return double(v.sign) * scale * std::exp2(-double(v.exponent) / double(fmt.base_factor));
}

}  // namespace lns
