#pragma once

#include "cbmir/feature_store.hpp"

#include <cstdint>
#include <string>

namespace cbmir {

/// Class-clustered Gaussian features. Class c has centroid (sep / sqrt 2) * e_c,
/// so any two centroids are `sep` apart, and every record adds N(0, 1) noise
/// per component: `sep` is measured in units of the intra-class standard
/// deviation. Requires classes <= dim.
struct SynthSpec {
    std::uint32_t classes = 2;
    std::uint64_t per_class = 10;
    std::uint32_t dim = 8;
    double sep = 10.0;
    std::uint64_t seed = 0;
    std::string model = "synthetic";
    std::string dataset = "Synthetic";
    std::uint32_t image_size = 28;
    bool is_3d = false;
};

struct SyntheticSplit {
    FeatureSet database;
    FeatureSet queries;
};

/// Draws per_class database records and per_class query records for every
/// class. Labels cycle 0..classes-1 through the item order. Deterministic in
/// the seed for a given standard library.
SyntheticSplit make_synthetic(const SynthSpec& spec);

} // namespace cbmir
