#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace cbmir {

// Published split statistics of the MedMNIST V2 sub-datasets used by the
// benchmark.
struct DatasetInfo {
    std::string_view name;
    bool is_3d;
    std::uint64_t train_count;
    std::uint64_t test_count;
    std::uint32_t num_classes;
    std::span<const std::uint32_t> sizes;
};

std::span<const DatasetInfo> known_datasets();

/// Case-insensitive lookup accepting "BreastMNIST", "breast", "AdrenalMNIST3D",
/// "Adrenal3D" and similar spellings. Returns nullptr when unknown.
const DatasetInfo* find_dataset(std::string_view name);

/// Registry flag when known, otherwise a trailing "3d" in the name.
bool dataset_is_3d(std::string_view name);

/// Canonical short name ("Breast", "Adrenal3D") for known datasets, the input otherwise.
std::string short_dataset_name(std::string_view name);

/// 28/64/128/224 as published plus 32, the smallest input the CNN extractors accept.
bool is_standard_image_size(std::uint32_t size);

} // namespace cbmir
