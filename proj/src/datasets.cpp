#include "cbmir/datasets.hpp"

#include <algorithm>
#include <array>
#include <cctype>

namespace cbmir {
namespace {

constexpr std::array<std::uint32_t, 4> kSizes2d{28, 64, 128, 224};
constexpr std::array<std::uint32_t, 2> kSizes3d{28, 64};

constexpr std::array<DatasetInfo, 8> kDatasets{{
    {"Breast", false, 546, 156, 2, kSizes2d},
    {"Pneumonia", false, 4708, 624, 2, kSizes2d},
    {"Retina", false, 1080, 400, 5, kSizes2d},
    {"Derma", false, 7007, 2005, 7, kSizes2d},
    {"Blood", false, 11959, 3421, 8, kSizes2d},
    {"Path", false, 89996, 7180, 9, kSizes2d},
    {"Adrenal3D", true, 1188, 298, 2, kSizes3d},
    {"Synapse3D", true, 1230, 352, 2, kSizes3d},
}};

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

// "AdrenalMNIST3D" -> "adrenal3d", "breastmnist" -> "breast"
std::string canonical_key(std::string_view name) {
    std::string key = lower(name);
    if (auto pos = key.find("mnist"); pos != std::string::npos) {
        key.erase(pos, 5);
    }
    return key;
}

} // namespace

std::span<const DatasetInfo> known_datasets() { return kDatasets; }

const DatasetInfo* find_dataset(std::string_view name) {
    const std::string key = canonical_key(name);
    for (const auto& info : kDatasets) {
        if (lower(info.name) == key) {
            return &info;
        }
    }
    return nullptr;
}

bool dataset_is_3d(std::string_view name) {
    if (const auto* info = find_dataset(name)) {
        return info->is_3d;
    }
    const std::string key = lower(name);
    return key.size() >= 2 && key.ends_with("3d");
}

std::string short_dataset_name(std::string_view name) {
    if (const auto* info = find_dataset(name)) {
        return std::string(info->name);
    }
    return std::string(name);
}

bool is_standard_image_size(std::uint32_t size) {
    return size == 28 || size == 32 || size == 64 || size == 128 || size == 224;
}

} // namespace cbmir
