#include "lns/datapath.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "json.hpp"

namespace lns {

ProductTerm lns_multiply(const LnsScalar& a, const LnsScalar& b) {
    ProductTerm p;
    if (a.zero || b.zero) {
        p.zero = true;
        return p;
    }
    p.sign = int8_t(a.sign * b.sign);
    p.exponent_sum = a.exponent + b.exponent;
    return p;
}

RemainderLut build_remainder_lut(const LnsFormat& fmt, int fractional_bits) {
    if (fractional_bits > 30) throw ConfigError("remainder LUT limited to 30 fractional bits");
    RemainderLut lut;
    lut.fractional_bits = fractional_bits;
    lut.entries.resize(size_t(fmt.base_factor));
    for (int r = 0; r < fmt.base_factor; ++r) {
        lut.entries[size_t(r)] =
            llround(std::ldexp(std::exp2(-double(r) / fmt.base_factor), fractional_bits));
    }
    return lut;
}

HybridSplit make_hybrid_split(const LnsFormat& fmt, int msb_bits) {
    if (msb_bits < 0 || msb_bits > fmt.b) {
        throw ConfigError("hybrid MSB bits must be in [0, log2(gamma)]");
    }
    return {msb_bits, fmt.b - msb_bits};
}

RemainderLut build_hybrid_lut(const LnsFormat& fmt, const HybridSplit& split,
                              int fractional_bits) {
    if (split.msb_bits + split.lsb_bits != fmt.b) {
        throw ConfigError("hybrid split does not cover the remainder field");
    }
    RemainderLut lut;
    lut.fractional_bits = fractional_bits;
    lut.entries.resize(size_t(1) << split.msb_bits);
    for (size_t rm = 0; rm < lut.entries.size(); ++rm) {
        double exponent = double(rm << split.lsb_bits) / fmt.base_factor;
        lut.entries[rm] = llround(std::ldexp(std::exp2(-exponent), fractional_bits));
    }
    return lut;
}

namespace {

// Arithmetic right shift with truncation toward zero.
int64_t shift_toward_zero(int64_t v, int amount) {
    return v >= 0 ? (v >> amount) : -((-v) >> amount);
}

}  // namespace

int64_t exact_convert(const ProductTerm& p, const LnsFormat& fmt, const RemainderLut& lut) {
    if (p.zero) return 0;
    uint32_t q = p.exponent_sum >> fmt.b;
    uint32_t r = p.exponent_sum & uint32_t(fmt.base_factor - 1);
    if (int(q) >= lut.fractional_bits) return 0;  // shifted out
    return int64_t(p.sign) * (lut.entries[r] >> q);
}

int64_t hybrid_convert(const ProductTerm& p, const LnsFormat& fmt, const HybridSplit& split,
                       const RemainderLut& msb_lut) {
    if (p.zero) return 0;
    int F = msb_lut.fractional_bits;
    uint32_t q = p.exponent_sum >> fmt.b;
    uint32_t r = p.exponent_sum & uint32_t(fmt.base_factor - 1);
    if (int(q) >= F) return 0;
    uint32_t r_msb = r >> split.lsb_bits;
    uint32_t r_lsb = r & ((uint32_t(1) << split.lsb_bits) - 1);
    // Mitchell term (1 + r_lsb/gamma) folded into the fixed-point unit value.
    int64_t unit = (int64_t(1) << F) + (int64_t(r_lsb) << (F - fmt.b));
    int64_t mag = (unit * msb_lut.entries[r_msb]) >> F;
    return int64_t(p.sign) * (mag >> q);
}

PartialSum accumulate(PartialSum ps, const PartialSum& addend) {
    if (ps.accumulator_bits != addend.accumulator_bits ||
        ps.fractional_bits != addend.fractional_bits) {
        throw ConfigError("partial sums with mismatched fixed-point parameters");
    }
    int64_t limit = ps.max_value();
    int64_t sum = ps.value + addend.value;
    ps.saturated = ps.saturated || addend.saturated;
    if (sum > limit) {
        sum = limit;
        ps.saturated = true;
    } else if (sum < -limit) {
        sum = -limit;
        ps.saturated = true;
    }
    ps.value = sum;
    return ps;
}

PartialSum mac_dot_product(std::span<const LnsScalar> a, std::span<const LnsScalar> b,
                           const MacConfig& cfg, const ConversionMode& mode) {
    if (a.size() != b.size()) throw ConfigError("MAC operand slices differ in length");
    if (int(a.size()) > cfg.vector_size) throw ConfigError("MAC slice exceeds vector size");
    if (cfg.format.bitwidth > cfg.input_bitwidth) {
        throw ConfigError("format bitwidth exceeds MAC input bitwidth");
    }

    const int F = cfg.fractional_bits;
    const bool hybrid = mode.kind == ConversionKind::Hybrid;
    if (mode.kind == ConversionKind::RealReference) {
        throw ConfigError("real-reference conversion has no datapath");
    }
    RemainderLut lut = hybrid ? build_hybrid_lut(cfg.format, mode.split, F)
                              : build_remainder_lut(cfg.format, F);

    // Stage 1+2: multiply, shift the unit value by the quotient, route to the
    // adder tree of the remainder bin. Tree sums grow losslessly in 64 bits.
    std::vector<int64_t> bins(lut.entries.size(), 0);
    for (size_t i = 0; i < a.size(); ++i) {
        ProductTerm p = lns_multiply(a[i], b[i]);
        if (p.zero) continue;
        uint32_t q = p.exponent_sum >> cfg.format.b;
        uint32_t r = p.exponent_sum & uint32_t(cfg.format.base_factor - 1);
        if (int(q) >= F) continue;  // shifted out
        int64_t unit;
        size_t bin;
        if (hybrid) {
            uint32_t r_lsb = r & ((uint32_t(1) << mode.split.lsb_bits) - 1);
            unit = ((int64_t(1) << F) + (int64_t(r_lsb) << (F - cfg.format.b))) >> q;
            bin = r >> mode.split.lsb_bits;
        } else {
            unit = int64_t(1) << (F - q);
            bin = r;
        }
        bins[bin] += int64_t(p.sign) * unit;
    }

    // Stage 3: one constant multiply per bin, truncated toward zero after the
    // F-bit shift, accumulated in bin order into the saturating partial sum.
    PartialSum ps;
    ps.accumulator_bits = cfg.accumulator_bits;
    ps.fractional_bits = F;
    for (size_t bin = 0; bin < bins.size(); ++bin) {
        PartialSum contrib = ps;
        contrib.value = shift_toward_zero(bins[bin] * lut.entries[bin], F);
        contrib.saturated = false;
        ps = accumulate(ps, contrib);
    }
    return ps;
}

PartialSum mac_dot_product(const LnsTensor& a, const LnsTensor& b, const MacConfig& cfg,
                           const ConversionMode& mode) {
    if (a.format != cfg.format || b.format != cfg.format) {
        throw ConfigError("MAC operands must share the configured format");
    }
    return mac_dot_product(std::span(a.elems), std::span(b.elems), cfg, mode);
}

LnsScalar requantize(const PartialSum& ps, const QuantizerConfig& out_cfg, double scale_a,
                     double scale_b, double out_scale, Rng* rng) {
    double real = std::ldexp(double(ps.value), -ps.fractional_bits) * scale_a * scale_b;
    return log_quantize(real, out_cfg.format, out_scale, out_cfg.rounding.kind, rng);
}

OperationTally& OperationTally::operator+=(const OperationTally& o) {
    for (const auto& [k, v] : o.counts) counts[k] += v;
    return *this;
}

OperationTally tally(uint64_t n_dot_products, const MacConfig& cfg,
                     const ConversionMode& mode) {
    uint64_t lanes = n_dot_products * uint64_t(cfg.vector_size);
    uint64_t bins = mode.kind == ConversionKind::Hybrid
                        ? (uint64_t(1) << mode.split.msb_bits)
                        : uint64_t(cfg.remainder_bins());
    OperationTally t;
    t.counts["exponent-adds"] = lanes;
    t.counts["xor-ops"] = lanes;
    t.counts["shifts"] = lanes;
    t.counts["tree-adds"] = lanes;
    t.counts["lut-multiplies"] = n_dot_products * bins;
    t.counts["accumulator-adds"] = n_dot_products * bins;
    return t;
}

std::string tally_json(const OperationTally& t) {
    nlohmann::json j;
    for (const auto& [k, v] : t.counts) j[k] = v;
    return j.dump();
}

const char* mac_pass_name(MacPass p) {
    switch (p) {
        case MacPass::Forward:
            return "forward";
        case MacPass::BackwardInput:
            return "backward-input";
        case MacPass::BackwardWeight:
            return "backward-weight";
    }
    return "?";
}

const char* buffer_a_operand(MacPass p) {
    return p == MacPass::BackwardWeight ? "input-activation" : "weight";
}

const char* buffer_b_operand(MacPass p) {
    return p == MacPass::Forward ? "input-activation" : "output-gradient";
}

uint64_t dot_products_for(MacPass p, size_t batch, size_t in, size_t out, int vector_size) {
    auto tiles = [vector_size](size_t reduce) {
        return (uint64_t(reduce) + uint64_t(vector_size) - 1) / uint64_t(vector_size);
    };
    switch (p) {
        case MacPass::Forward:  // outputs: batch x out, reduce over in
            return uint64_t(batch) * uint64_t(out) * tiles(in);
        case MacPass::BackwardInput:  // outputs: batch x in, reduce over out
            return uint64_t(batch) * uint64_t(in) * tiles(out);
        case MacPass::BackwardWeight:  // outputs: out x in, reduce over batch
            return uint64_t(out) * uint64_t(in) * tiles(batch);
    }
    return 0;
}

namespace {

std::vector<std::string> tokens(const std::string& field) {
    std::vector<std::string> out;
    std::istringstream ss(field);
    std::string tok;
    while (ss >> tok) out.push_back(tok);
    return out;
}

std::vector<LnsScalar> parse_operand(const std::string& exps, const std::string& signs,
                                     int line_number) {
    auto e = tokens(exps);
    auto s = tokens(signs);
    if (e.size() != s.size()) {
        throw DataError("line " + std::to_string(line_number) +
                        ": exponent and sign counts differ");
    }
    std::vector<LnsScalar> out(e.size());
    for (size_t i = 0; i < e.size(); ++i) {
        if (e[i] == "z") {
            out[i].zero = true;
        } else {
            out[i].exponent = uint32_t(std::stoul(e[i]));
        }
        if (s[i] == "+") {
            out[i].sign = 1;
        } else if (s[i] == "-") {
            out[i].sign = -1;
        } else {
            throw DataError("line " + std::to_string(line_number) + ": bad sign token '" +
                            s[i] + "'");
        }
    }
    return out;
}

}  // namespace

GoldenVector parse_golden_line(const std::string& line, int line_number) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == '|') {
            fields.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    fields.push_back(cur);
    if (fields.size() != 5) {
        throw DataError("line " + std::to_string(line_number) + ": expected 5 '|' fields");
    }
    GoldenVector v;
    v.a = parse_operand(fields[0], fields[1], line_number);
    v.b = parse_operand(fields[2], fields[3], line_number);
    try {
        std::string hex = tokens(fields[4]).at(0);
        v.expected = std::stoll(hex, nullptr, 16);
    } catch (const std::exception&) {
        throw DataError("line " + std::to_string(line_number) + ": bad expected hex value");
    }
    if (v.a.size() != v.b.size()) {
        throw DataError("line " + std::to_string(line_number) + ": operand lengths differ");
    }
    return v;
}

std::string format_golden_line(const GoldenVector& v) {
    std::ostringstream os;
    auto emit = [&os](const std::vector<LnsScalar>& xs) {
        for (size_t i = 0; i < xs.size(); ++i) {
            if (i) os << ' ';
            if (xs[i].zero) {
                os << 'z';
            } else {
                os << xs[i].exponent;
            }
        }
        os << " | ";
        for (size_t i = 0; i < xs.size(); ++i) {
            if (i) os << ' ';
            os << (xs[i].sign < 0 ? '-' : '+');
        }
        os << " | ";
    };
    emit(v.a);
    emit(v.b);
    if (v.expected < 0) {
        os << "-0x" << std::hex << std::uppercase << -v.expected;
    } else {
        os << "0x" << std::hex << std::uppercase << v.expected;
    }
    return os.str();
}

}  // namespace lns
