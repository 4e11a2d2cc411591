#pragma once

#include "cbmir/feature_store.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace cbmir {

/// Per-slice feature sets of the same volumes, in ascending slice order
/// along the first volume axis.
struct SliceStack {
    std::vector<FeatureSet> slices;

    std::size_t depth() const { return slices.size(); }
};

/// Concatenates per-slice vectors (slice 0 first) into one vector per volume.
/// Slices must agree on dim, record count, item_ids, labels and num_classes;
/// violations raise ValidationError naming the offending slice and record.
/// The result carries slice 0's metadata with is_3d set.
FeatureSet concat_slices(const SliceStack& stack);

/// Inverse of concat_slices on the vectors: cuts each record into `depth`
/// equal chunks.
SliceStack split_slices(const FeatureSet& volume, std::size_t depth);

struct VolumePlan {
    std::uint32_t dim = 0;
    std::uint64_t bytes = 0;  // records * dim * 4
};

/// Output dimensionality and vector memory of a concatenation. Throws
/// ValidationError for a zero argument or when the dimension does not fit
/// the 32-bit dim field of the container.
VolumePlan plan_volume(std::uint64_t depth, std::uint64_t slice_dim, std::uint64_t records = 1);

/// "<dataset>_<model>_<size>_slice<NNN>.fset"
std::string slice_file_name(std::string_view dataset, std::string_view model, std::uint32_t size,
                            std::size_t slice);

/// Slice index encoded in a file name following the convention above.
std::optional<std::size_t> parse_slice_index(std::string_view file_name);

/// Expands a shell glob and orders the matches by slice index. Throws
/// ValidationError when a match does not follow the naming convention or the
/// indices are not exactly 0..depth-1, and IoError when nothing matches.
std::vector<std::filesystem::path> collect_slice_files(const std::string& pattern);

} // namespace cbmir
