#ifndef LNS_DATAPATH_HPP
#define LNS_DATAPATH_HPP

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "lns/tensor.hpp"

namespace lns {

/// Element-wise product of two LNS scalars: exponents add (one extra bit of
/// headroom for the carry), signs XOR.
struct ProductTerm {
    int8_t sign = 1;
    uint32_t exponent_sum = 0;
    bool zero = false;
};

ProductTerm lns_multiply(const LnsScalar& a, const LnsScalar& b);

/// gamma fixed-point constants c_r = round(2^F * 2^(-r/gamma)), r = 0..gamma-1.
struct RemainderLut {
    std::vector<int64_t> entries;
    int fractional_bits = 23;
};

RemainderLut build_remainder_lut(const LnsFormat& fmt, int fractional_bits);

/// 2^msb_bits constants indexed by the remainder's MSB part; the LSB part is
/// handled by the Mitchell linear term.
RemainderLut build_hybrid_lut(const LnsFormat& fmt, const HybridSplit& split,
                              int fractional_bits);

HybridSplit make_hybrid_split(const LnsFormat& fmt, int msb_bits);

int64_t exact_convert(const ProductTerm& p, const LnsFormat& fmt, const RemainderLut& lut);

int64_t hybrid_convert(const ProductTerm& p, const LnsFormat& fmt, const HybridSplit& split,
                       const RemainderLut& msb_lut);

struct MacConfig {
    int vector_size = 32;
    int input_bitwidth = 8;
    LnsFormat format = make_format(8, 8);
    int accumulator_bits = 24;
    int fractional_bits = 23;

    int remainder_bins() const { return format.base_factor; }
};

/// Signed fixed-point accumulator value with F fractional bits; saturates
/// (sticky flag) instead of wrapping.
struct PartialSum {
    int64_t value = 0;
    bool saturated = false;
    int accumulator_bits = 24;
    int fractional_bits = 23;

    int64_t max_value() const { return (int64_t(1) << (accumulator_bits - 1)) - 1; }
};

PartialSum accumulate(PartialSum ps, const PartialSum& addend);

struct ConversionMode {
    ConversionKind kind = ConversionKind::ExactDatapath;
    HybridSplit split;

    static ConversionMode exact() { return {ConversionKind::ExactDatapath, {}}; }
    static ConversionMode hybrid(const HybridSplit& s) { return {ConversionKind::Hybrid, s}; }
};

/// Vector MAC pipeline: per-lane exponent-add/sign-XOR multiply, quotient
/// shift of the unit value routed into per-remainder adder trees, then one
/// LUT-constant multiply per bin (truncated toward zero after the F-bit
/// shift) accumulated into the saturating partial sum.
PartialSum mac_dot_product(std::span<const LnsScalar> a, std::span<const LnsScalar> b,
                           const MacConfig& cfg, const ConversionMode& mode);

/// Checked wrapper: operands must share the MAC's format.
PartialSum mac_dot_product(const LnsTensor& a, const LnsTensor& b, const MacConfig& cfg,
                           const ConversionMode& mode);

/// Partial sum -> real (applying the operand scales) -> LogQuant.
LnsScalar requantize(const PartialSum& ps, const QuantizerConfig& out_cfg, double scale_a,
                     double scale_b, double out_scale, Rng* rng = nullptr);

struct OperationTally {
    std::map<std::string, uint64_t> counts;

    OperationTally& operator+=(const OperationTally& o);
    bool operator==(const OperationTally&) const = default;
};

/// Deterministic operation counts for n dot products of full vector length:
/// per lane one exponent-add, sign-xor, shift and tree-add; per output one
/// LUT multiply and accumulator add per remainder bin.
OperationTally tally(uint64_t n_dot_products, const MacConfig& cfg,
                     const ConversionMode& mode);

std::string tally_json(const OperationTally& t);

/// Operand routing for the PE buffers across the three computation passes
/// (weights/activations/gradients are mapped to BufferA/BufferB; no
/// cycle-level buffer simulation).
enum class MacPass : uint8_t { Forward = 0, BackwardInput, BackwardWeight };

const char* mac_pass_name(MacPass p);
const char* buffer_a_operand(MacPass p);
const char* buffer_b_operand(MacPass p);

/// Number of vector dot products an affine layer issues in the given pass,
/// with the reduction dimension tiled over the MAC's vector size.
uint64_t dot_products_for(MacPass p, size_t batch, size_t in, size_t out, int vector_size);

// Golden-vector conformance file: one test vector per text line,
//   exponents_a | signs_a | exponents_b | signs_b | expected_partial_sum_hex
// exponents are decimal integers, signs are '+'/'-', and the expected sum is
// a (possibly negative) 0x-prefixed hex value of the 24-bit partial sum.
struct GoldenVector {
    std::vector<LnsScalar> a;
    std::vector<LnsScalar> b;
    int64_t expected = 0;
};

GoldenVector parse_golden_line(const std::string& line, int line_number);
std::string format_golden_line(const GoldenVector& v);

}  // namespace lns

#endif
