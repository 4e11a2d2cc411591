#include "cbmir/volume3d.hpp"

#include "cbmir/errors.hpp"

#include <glob.h>

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <limits>

namespace cbmir {

FeatureSet concat_slices(const SliceStack& stack) {
    if (stack.slices.empty()) {
        throw ValidationError("cannot concatenate an empty slice stack");
    }
    const auto& first = stack.slices.front();
    const std::size_t n = first.size();
    const std::size_t slice_dim = first.dim();
    for (std::size_t s = 1; s < stack.depth(); ++s) {
        const auto& slice = stack.slices[s];
        const std::string where = "slice " + std::to_string(s);
        if (slice.dim() != slice_dim) {
            throw ValidationError(where + " has dim " + std::to_string(slice.dim()) + ", slice 0 has " +
                                  std::to_string(slice_dim));
        }
        if (slice.size() != n) {
            throw ValidationError(where + " has " + std::to_string(slice.size()) + " records, slice 0 has " +
                                  std::to_string(n));
        }
        if (slice.meta.num_classes != first.meta.num_classes) {
            throw ValidationError(where + " declares a different num_classes");
        }
        for (std::size_t i = 0; i < n; ++i) {
            if (slice.item_ids[i] != first.item_ids[i]) {
                throw ValidationError(where + ": item " + std::to_string(i) + " has item_id " +
                                      std::to_string(slice.item_ids[i]) + ", slice 0 has " +
                                      std::to_string(first.item_ids[i]));
            }
            if (slice.labels[i] != first.labels[i]) {
                throw ValidationError(where + ": item " + std::to_string(i) + " (item_id " +
                                      std::to_string(first.item_ids[i]) + ") has label " +
                                      std::to_string(slice.labels[i]) + ", slice 0 has " +
                                      std::to_string(first.labels[i]));
            }
        }
    }
    const auto plan = plan_volume(stack.depth(), slice_dim, n);

    FeatureSet out;
    out.meta = first.meta;
    out.meta.is_3d = true;
    out.item_ids = first.item_ids;
    out.labels = first.labels;
    out.vectors.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(plan.dim));
    const auto width = static_cast<Eigen::Index>(slice_dim);
    for (std::size_t s = 0; s < stack.depth(); ++s) {
        out.vectors.middleCols(static_cast<Eigen::Index>(s) * width, width) = stack.slices[s].vectors;
    }
    return out;
}

SliceStack split_slices(const FeatureSet& volume, std::size_t depth) {
    if (depth == 0 || volume.dim() % depth != 0) {
        throw ValidationError("dim " + std::to_string(volume.dim()) + " is not divisible into " +
                              std::to_string(depth) + " slices");
    }
    const auto width = static_cast<Eigen::Index>(volume.dim() / depth);
    SliceStack stack;
    stack.slices.reserve(depth);
    for (std::size_t s = 0; s < depth; ++s) {
        FeatureSet slice;
        slice.meta = volume.meta;
        slice.meta.is_3d = false;
        slice.item_ids = volume.item_ids;
        slice.labels = volume.labels;
        slice.vectors = volume.vectors.middleCols(static_cast<Eigen::Index>(s) * width, width);
        stack.slices.push_back(std::move(slice));
    }
    return stack;
}

VolumePlan plan_volume(std::uint64_t depth, std::uint64_t slice_dim, std::uint64_t records) {
    if (depth == 0 || slice_dim == 0) {
        throw ValidationError("depth and slice dim must be positive");
    }
    constexpr auto kMaxDim = std::numeric_limits<std::uint32_t>::max();
    if (slice_dim > kMaxDim / depth) {
        throw ValidationError("concatenated dim " + std::to_string(depth) + " x " + std::to_string(slice_dim) +
                              " overflows the 32-bit dim field");
    }
    const std::uint64_t dim = depth * slice_dim;
    if (records != 0 && dim > std::numeric_limits<std::uint64_t>::max() / 4 / records) {
        throw ValidationError("memory estimate overflows");
    }
    return {static_cast<std::uint32_t>(dim), records * dim * 4};
}

std::string slice_file_name(std::string_view dataset, std::string_view model, std::uint32_t size,
                            std::size_t slice) {
    char index[32];
    std::snprintf(index, sizeof index, "%03zu", slice);
    return std::string(dataset) + "_" + std::string(model) + "_" + std::to_string(size) + "_slice" + index +
           ".fset";
}

std::optional<std::size_t> parse_slice_index(std::string_view file_name) {
    constexpr std::string_view kTag = "_slice";
    constexpr std::string_view kExt = ".fset";
    if (!file_name.ends_with(kExt)) {
        return std::nullopt;
    }
    file_name.remove_suffix(kExt.size());
    const auto pos = file_name.rfind(kTag);
    if (pos == std::string_view::npos) {
        return std::nullopt;
    }
    const auto digits = file_name.substr(pos + kTag.size());
    if (digits.empty()) {
        return std::nullopt;
    }
    std::size_t value = 0;
    const auto [end, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), value);
    if (ec != std::errc() || end != digits.data() + digits.size()) {
        return std::nullopt;
    }
    return value;
}

std::vector<std::filesystem::path> collect_slice_files(const std::string& pattern) {
    glob_t matches{};
    const int rc = ::glob(pattern.c_str(), 0, nullptr, &matches);
    std::vector<std::pair<std::size_t, std::filesystem::path>> indexed;
    if (rc == 0) {
        for (std::size_t i = 0; i < matches.gl_pathc; ++i) {
            std::filesystem::path p(matches.gl_pathv[i]);
            const auto index = parse_slice_index(p.filename().string());
            if (!index) {
                globfree(&matches);
                throw ValidationError(p.string() + " does not follow <dataset>_<model>_<size>_slice<NNN>.fset");
            }
            indexed.emplace_back(*index, std::move(p));
        }
    }
    globfree(&matches);
    if (indexed.empty()) {
        throw IoError("no slice files match " + pattern);
    }
    std::sort(indexed.begin(), indexed.end());
    std::vector<std::filesystem::path> out;
    for (std::size_t i = 0; i < indexed.size(); ++i) {
        if (indexed[i].first != i) {
            throw ValidationError("slice indices must be 0.." + std::to_string(indexed.size() - 1) +
                                  ", found " + std::to_string(indexed[i].first) + " at position " +
                                  std::to_string(i));
        }
        out.push_back(std::move(indexed[i].second));
    }
    return out;
}

} // namespace cbmir
