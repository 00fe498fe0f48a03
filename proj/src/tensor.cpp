#include "lns/tensor.hpp"

#include <cstring>
#include <istream>
#include <ostream>

#include "json.hpp"

namespace lns {

size_t shape_numel(const std::vector<size_t>& shape) {
    size_t n = 1;
    for (size_t d : shape) n *= d;
    return n;
}

namespace {

size_t group_count_for(const std::vector<size_t>& shape, Granularity g) {
    switch (g) {
        case Granularity::PerTensor:
            return 1;
        case Granularity::PerChannel:
            if (shape.empty()) throw DataError("per-channel scaling needs a shaped tensor");
            return shape.front();
        case Granularity::PerFeature:
            if (shape.empty()) throw DataError("per-feature scaling needs a shaped tensor");
            return shape.back();
    }
    throw DataError("unknown granularity");
}

size_t group_index(const std::vector<size_t>& shape, Granularity g, size_t flat) {
    switch (g) {
        case Granularity::PerTensor:
            return 0;
        case Granularity::PerChannel:
            return flat / (shape_numel(shape) / shape.front());
        case Granularity::PerFeature:
            return flat % shape.back();
    }
    throw DataError("unknown granularity");
}

}  // namespace

size_t LnsTensor::group_of(size_t flat_index) const {
    return group_index(shape, granularity, flat_index);
}

std::vector<double> compute_scale(std::span<const double> values,
                                  const std::vector<size_t>& shape, Granularity granularity) {
    if (values.empty()) throw DataError("cannot compute scales of an empty tensor");
    if (shape_numel(shape) != values.size()) {
        throw DataError("shape does not match element count");
    }
    std::vector<double> scales(group_count_for(shape, granularity), 0.0);
    for (size_t i = 0; i < values.size(); ++i) {
        double v = values[i];
        if (!std::isfinite(v)) throw DataError("non-finite value in scale computation");
        size_t g = group_index(shape, granularity, i);
        scales[g] = std::max(scales[g], std::fabs(v));
    }
    for (double& s : scales) {
        if (s == 0.0) s = 1.0;  // all-zero group; elements encode as zero anyway
    }
    return scales;
}

LnsTensor quantize_tensor(std::span<const double> values, const std::vector<size_t>& shape,
                          const QuantizerConfig& cfg) {
    LnsTensor t;
    t.shape = shape;
    t.format = cfg.format;
    t.granularity = cfg.granularity;
    t.scales = compute_scale(values, shape, cfg.granularity);
    t.elems.resize(values.size());
    Rng rng(cfg.rounding.seed);
    Rng* rng_ptr = cfg.rounding.kind == RoundKind::Stochastic ? &rng : nullptr;
    for (size_t i = 0; i < values.size(); ++i) {
        t.elems[i] = log_quantize(values[i], cfg.format, t.scales[t.group_of(i)],
                                  cfg.rounding.kind, rng_ptr);
    }
    return t;
}

std::vector<double> decode_tensor(const LnsTensor& t) {
    std::vector<double> out(t.numel());
    for (size_t i = 0; i < out.size(); ++i) out[i] = t.element_value(i);
    return out;
}

namespace {

constexpr char kMagic[4] = {'L', 'N', 'S', 'T'};
constexpr uint32_t kVersion = 1;

template <typename T>
void put(std::ostream& os, T v) {
    // assumes a little-endian host, as documented
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw DataError("truncated tensor stream");
    return v;
}

class BitWriter {
  public:
    void push(uint64_t bits, int count) {
        for (int i = 0; i < count; ++i) {
            cur_ |= uint8_t((bits >> i) & 1) << pos_;
            if (++pos_ == 8) flush_byte();
        }
    }
    std::vector<uint8_t> finish() {
        if (pos_ > 0) flush_byte();
        return std::move(bytes_);
    }

  private:
    void flush_byte() {
        bytes_.push_back(cur_);
        cur_ = 0;
        pos_ = 0;
    }
    std::vector<uint8_t> bytes_;
    uint8_t cur_ = 0;
    int pos_ = 0;
};

class BitReader {
  public:
    explicit BitReader(const std::vector<uint8_t>& bytes) : bytes_(bytes) {}
    uint64_t pull(int count) {
        uint64_t v = 0;
        for (int i = 0; i < count; ++i) {
            if (byte_ >= bytes_.size()) throw DataError("truncated element bitstream");
            v |= uint64_t((bytes_[byte_] >> pos_) & 1) << i;
            if (++pos_ == 8) {
                pos_ = 0;
                ++byte_;
            }
        }
        return v;
    }

  private:
    const std::vector<uint8_t>& bytes_;
    size_t byte_ = 0;
    int pos_ = 0;
};

}  // namespace

void write_tensor(std::ostream& os, const LnsTensor& t) {
    os.write(kMagic, 4);
    put(os, kVersion);
    put(os, uint8_t(t.format.bitwidth));
    put(os, uint32_t(t.format.base_factor));
    put(os, uint8_t(t.granularity));
    put(os, uint32_t(t.shape.size()));
    for (size_t d : t.shape) put(os, uint64_t(d));
    put(os, uint64_t(t.scales.size()));
    for (double s : t.scales) put(os, s);
    BitWriter bw;
    int ebits = t.format.exponent_bits;
    for (const LnsScalar& e : t.elems) {
        bw.push(e.sign < 0 ? 1 : 0, 1);
        bw.push(e.exponent, ebits);
        bw.push(e.zero ? 1 : 0, 1);
    }
    std::vector<uint8_t> bytes = bw.finish();
    put(os, uint64_t(bytes.size()));
    os.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
}

LnsTensor read_tensor(std::istream& is) {
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0) throw DataError("bad tensor magic");
    if (get<uint32_t>(is) != kVersion) throw DataError("unsupported tensor version");
    LnsTensor t;
    int bitwidth = get<uint8_t>(is);
    int gamma = int(get<uint32_t>(is));
    t.format = make_format(bitwidth, gamma);
    t.granularity = Granularity(get<uint8_t>(is));
    uint32_t ndim = get<uint32_t>(is);
    t.shape.resize(ndim);
    for (auto& d : t.shape) d = size_t(get<uint64_t>(is));
    t.scales.resize(size_t(get<uint64_t>(is)));
    for (auto& s : t.scales) s = get<double>(is);
    uint64_t nbytes = get<uint64_t>(is);
    std::vector<uint8_t> bytes(nbytes);
    is.read(reinterpret_cast<char*>(bytes.data()), std::streamsize(nbytes));
    if (!is) throw DataError("truncated tensor stream");
    BitReader br(bytes);
    t.elems.resize(shape_numel(t.shape));
    int ebits = t.format.exponent_bits;
    for (LnsScalar& e : t.elems) {
        e.sign = br.pull(1) ? int8_t(-1) : int8_t(1);
        e.exponent = uint32_t(br.pull(ebits));
        e.zero = br.pull(1) != 0;
    }
    return t;
}

std::string tensor_debug_json(const LnsTensor& t) {
    nlohmann::json j;
    j["bitwidth"] = t.format.bitwidth;
    j["base_factor"] = t.format.base_factor;
    j["shape"] = t.shape;
    j["granularity"] = int(t.granularity);
    j["scales"] = t.scales;
    nlohmann::json elems = nlohmann::json::array();
    for (size_t i = 0; i < t.numel(); ++i) {
        const LnsScalar& e = t.elems[i];
        elems.push_back({{"sign", int(e.sign)},
                         {"exponent", e.exponent},
                         {"zero", e.zero},
                         {"value", t.element_value(i)}});
    }
    j["elements"] = std::move(elems);
    return j.dump(2);
}

}  // namespace lns
