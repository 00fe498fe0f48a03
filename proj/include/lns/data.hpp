#ifndef LNS_DATA_HPP
#define LNS_DATA_HPP

#include <vector>

#include "lns/autograd.hpp"

namespace lns {

struct Dataset {
    Mat x;
    std::vector<int> labels;
    size_t classes = 0;
};

/// Two separable Gaussian blobs mirrored through the origin (learnable by a
/// bias-free linear layer).
Dataset make_blobs(int samples, double noise, Rng& rng);

/// Two interleaved half-circles; a constant-one feature is appended since
/// the layer stack has no bias terms.
Dataset make_moons(int samples, double noise, Rng& rng);

/// Multiclass task: fixed random class templates plus Gaussian noise,
/// digit-like 8x8 layout by default (features = 64).
Dataset make_digits(int samples, int classes, int features, double noise, Rng& rng);

}  // namespace lns

#endif
