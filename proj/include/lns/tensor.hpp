#ifndef LNS_TENSOR_HPP
#define LNS_TENSOR_HPP

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "lns/format.hpp"

namespace lns {

enum class Role : uint8_t { None = 0, QW, QA, QE, QG, QU };

enum class ConversionKind : uint8_t { RealReference = 0, ExactDatapath, Hybrid };

/// MSB/LSB split of the remainder field for the hybrid (Mitchell) conversion.
struct HybridSplit {
    int msb_bits = 0;  // LUT-indexed
    int lsb_bits = 0;  // Mitchell-approximated
};

struct QuantizerConfig {
    Role role = Role::None;
    LnsFormat format;
    RoundingMode rounding = RoundingMode::nearest();
    Granularity granularity = Granularity::PerTensor;
    ConversionKind conversion = ConversionKind::RealReference;
    HybridSplit split;  // used when conversion == Hybrid

    bool bypass() const { return role == Role::None; }
};

struct LnsTensor {
    std::vector<size_t> shape;
    std::vector<LnsScalar> elems;
    LnsFormat format;
    Granularity granularity = Granularity::PerTensor;
    std::vector<double> scales;  // one per group

    size_t numel() const { return elems.size(); }
    size_t group_count() const { return scales.size(); }
    size_t group_of(size_t flat_index) const;
    double element_value(size_t flat_index) const {
        return decode(elems[flat_index], format, scales[group_of(flat_index)]);
    }
};

size_t shape_numel(const std::vector<size_t>& shape);

/// One scale per group, s = max |x| within the group; all-zero groups get s = 1.
std::vector<double> compute_scale(std::span<const double> values,
                                  const std::vector<size_t>& shape, Granularity granularity);

LnsTensor quantize_tensor(std::span<const double> values, const std::vector<size_t>& shape,
                          const QuantizerConfig& cfg);

std::vector<double> decode_tensor(const LnsTensor& t);

// Binary serialization (little-endian): header {magic "LNST", version, B,
// gamma, granularity, shape, group count}, per-group float64 scales, then
// per-element packed records of (1 sign bit, B-1 exponent bits, 1 zero bit)
// in an LSB-first bitstream. See README for the exact layout.
void write_tensor(std::ostream& os, const LnsTensor& t);
LnsTensor read_tensor(std::istream& is);

/// Human-readable JSON dump for debugging.
std::string tensor_debug_json(const LnsTensor& t);

}  // namespace lns

#endif
