#pragma once

#include "cbmir/types.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace cbmir {

enum class Role : std::uint8_t { Database = 0, Query = 1 };

std::string_view to_string(Role role);

struct ProvenanceMeta {
    std::string model_name;
    std::string dataset_name;
    std::uint32_t image_size = 0;
    bool is_3d = false;
    std::uint32_t num_classes = 0;
    Role role = Role::Database;
    std::vector<std::pair<std::string, std::string>> extra;

    bool operator==(const ProvenanceMeta&) const = default;
};

struct FeatureRecord {
    ItemId item_id = 0;
    Label label = 0;
    FeatureVector vector;
};

/// A labeled collection of feature vectors stored column-wise: record i is
/// (item_ids[i], labels[i], vectors.row(i)). The dimensionality is the number
/// of matrix columns.
struct FeatureSet {
    ProvenanceMeta meta;
    std::vector<ItemId> item_ids;
    std::vector<Label> labels;
    FeatureMatrix vectors;

    std::size_t size() const { return item_ids.size(); }
    bool empty() const { return item_ids.empty(); }
    std::uint32_t dim() const { return static_cast<std::uint32_t>(vectors.cols()); }

    auto vector(std::size_t i) const { return vectors.row(static_cast<Eigen::Index>(i)); }
    FeatureRecord record(std::size_t i) const;
};

/// Builds a set from individual records. Throws DimensionMismatch naming the
/// first record whose length differs from the first record's.
FeatureSet make_feature_set(ProvenanceMeta meta, const std::vector<FeatureRecord>& records);

/// Same shape, metadata, ids, labels and float bit patterns.
bool bitwise_equal(const FeatureSet& a, const FeatureSet& b);

enum class ViolationKind {
    EmptySet,
    ZeroDimension,
    ShapeMismatch,
    NonFinite,
    LabelOverflow,
    IdOrder,
    ZeroClasses,
    ZeroImageSize,
    DuplicateExtraKey,
};

std::string_view to_string(ViolationKind kind);

struct Violation {
    ViolationKind kind;
    std::optional<std::size_t> record;
    std::string message;
};

/// Enumerates every invariant violation; an empty result means the set is
/// valid. Never throws.
std::vector<Violation> validate_feature_set(const FeatureSet& set);

/// Soft checks that do not make a set invalid: unusual image sizes and,
/// for recognized MedMNIST datasets, record/class counts that disagree with
/// the published split sizes.
std::vector<std::string> validation_warnings(const FeatureSet& set);

namespace fset {
inline constexpr std::string_view kMagic = "FSET1";
inline constexpr std::uint8_t kVersion = 1;
inline constexpr std::size_t kHeaderSize = 32;
inline constexpr std::string_view kExtension = ".fset";

/// Bytes taken by one record of the given dimensionality.
constexpr std::uint64_t record_size(std::uint32_t dim) { return 8 + 4 + 4 * std::uint64_t{dim}; }

/// Serialized metadata block (compact JSON).
std::string encode_metadata(const ProvenanceMeta& meta);
} // namespace fset

/// Writes the FSET1 container. The set must pass validation (ValidationError
/// otherwise); sink failures raise IoError. Returns the number of bytes written.
std::size_t write_feature_set(const FeatureSet& set, std::ostream& sink);

/// Writes to a temporary file next to `path` and renames it into place.
std::size_t write_feature_set(const FeatureSet& set, const std::filesystem::path& path);

/// Parses and validates an FSET1 container. Throws FormatError on structural
/// problems (magic, version, truncation, non-finite values) and
/// ValidationError when the decoded set violates an invariant.
FeatureSet read_feature_set(std::istream& source);
FeatureSet read_feature_set(const std::filesystem::path& path);

/// Structural decode only: non-finite values and invariant violations are
/// kept so that validate_feature_set can enumerate them.
FeatureSet read_feature_set_unvalidated(std::istream& source);
FeatureSet read_feature_set_unvalidated(const std::filesystem::path& path);

} // namespace cbmir
