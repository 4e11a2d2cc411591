#include "cbmir/synth.hpp"

#include "cbmir/errors.hpp"

#include <cmath>
#include <random>

namespace cbmir {
namespace {

FeatureSet draw(const SynthSpec& spec, Role role, std::mt19937_64& rng) {
    FeatureSet set;
    set.meta.model_name = spec.model;
    set.meta.dataset_name = spec.dataset;
    set.meta.image_size = spec.image_size;
    set.meta.is_3d = spec.is_3d;
    set.meta.num_classes = spec.classes;
    set.meta.role = role;
    set.meta.extra = {{"generator", "synthetic-gaussian"}, {"sep", std::to_string(spec.sep)},
                      {"seed", std::to_string(spec.seed)}};

    const std::uint64_t n = spec.per_class * spec.classes;
    const double offset = spec.sep / std::sqrt(2.0);
    std::normal_distribution<double> noise(0.0, 1.0);
    set.item_ids.resize(n);
    set.labels.resize(n);
    set.vectors.resize(static_cast<Eigen::Index>(n), spec.dim);
    for (std::uint64_t i = 0; i < n; ++i) {
        const auto label = static_cast<Label>(i % spec.classes);
        set.item_ids[i] = i;
        set.labels[i] = label;
        auto row = set.vectors.row(static_cast<Eigen::Index>(i));
        for (std::uint32_t c = 0; c < spec.dim; ++c) {
            row[c] = static_cast<float>(noise(rng) + (c == label ? offset : 0.0));
        }
    }
    return set;
}

} // namespace

SyntheticSplit make_synthetic(const SynthSpec& spec) {
    if (spec.classes == 0 || spec.per_class == 0 || spec.dim == 0) {
        throw ValidationError("synthetic classes, per_class and dim must be positive");
    }
    if (spec.classes > spec.dim) {
        throw ValidationError("synthetic data needs dim >= classes (one centroid axis per class)");
    }
    if (!(spec.sep >= 0.0) || !std::isfinite(spec.sep)) {
        throw ValidationError("synthetic sep must be a finite non-negative number");
    }
    std::mt19937_64 rng(spec.seed);
    SyntheticSplit split;
    split.database = draw(spec, Role::Database, rng);
    split.queries = draw(spec, Role::Query, rng);
    return split;
}

} // namespace cbmir
