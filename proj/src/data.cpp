#include "lns/data.hpp"

#include <cmath>

namespace lns {

Dataset make_blobs(int samples, double noise, Rng& rng) {
    Dataset ds;
    ds.classes = 2;
    ds.x = Mat(size_t(samples), 2);
    ds.labels.resize(size_t(samples));
    std::normal_distribution<double> normal(0.0, noise);
    for (int i = 0; i < samples; ++i) {
        int label = i % 2;
        double cx = label == 0 ? 2.0 : -2.0;
        double cy = label == 0 ? 2.0 : -2.0;
        ds.x.at(size_t(i), 0) = cx + normal(rng);
        ds.x.at(size_t(i), 1) = cy + normal(rng);
        ds.labels[size_t(i)] = label;
    }
    return ds;
}

Dataset make_moons(int samples, double noise, Rng& rng) {
    Dataset ds;
    ds.classes = 2;
    ds.x = Mat(size_t(samples), 3);
    ds.labels.resize(size_t(samples));
    std::normal_distribution<double> normal(0.0, noise);
    constexpr double pi = 3.14159265358979323846;
    for (int i = 0; i < samples; ++i) {
        int label = i % 2;
        double t = uniform01(rng) * pi;
        double px, py;
        if (label == 0) {
            px = std::cos(t);
            py = std::sin(t);
        } else {
            px = 1.0 - std::cos(t);
            py = 0.5 - std::sin(t);
        }
        ds.x.at(size_t(i), 0) = px + normal(rng);
        ds.x.at(size_t(i), 1) = py + normal(rng);
        ds.x.at(size_t(i), 2) = 1.0;
        ds.labels[size_t(i)] = label;
    }
    return ds;
}

Dataset make_digits(int samples, int classes, int features, double noise, Rng& rng) {
    if (classes < 2 || features < 1) throw ConfigError("bad digits dataset parameters");
    Dataset ds;
    ds.classes = size_t(classes);
    ds.x = Mat(size_t(samples), size_t(features));
    ds.labels.resize(size_t(samples));
    std::normal_distribution<double> unit(0.0, 1.0);
    Mat templates{size_t(classes), size_t(features)};
    for (double& v : templates.d) v = unit(rng);
    for (int i = 0; i < samples; ++i) {
        int label = i % classes;
        for (int f = 0; f < features; ++f) {
            ds.x.at(size_t(i), size_t(f)) =
                templates.at(size_t(label), size_t(f)) + noise * unit(rng);
        }
        ds.labels[size_t(i)] = label;
    }
    return ds;
}

}  // namespace lns
