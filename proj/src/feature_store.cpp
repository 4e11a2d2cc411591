#include "cbmir/feature_store.hpp"

#include "cbmir/datasets.hpp"
#include "cbmir/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <set>
#include <sstream>

namespace cbmir {

using ordered_json = nlohmann::ordered_json;

std::string_view to_string(Role role) {
    return role == Role::Database ? "database" : "query";
}

std::string_view to_string(ViolationKind kind) {
    switch (kind) {
    case ViolationKind::EmptySet: return "empty-set";
    case ViolationKind::ZeroDimension: return "zero-dimension";
    case ViolationKind::ShapeMismatch: return "shape-mismatch";
    case ViolationKind::NonFinite: return "non-finite";
    case ViolationKind::LabelOverflow: return "label-overflow";
    case ViolationKind::IdOrder: return "id-order";
    case ViolationKind::ZeroClasses: return "zero-classes";
    case ViolationKind::ZeroImageSize: return "zero-image-size";
    case ViolationKind::DuplicateExtraKey: return "duplicate-extra-key";
    }
    return "unknown";
}

FeatureRecord FeatureSet::record(std::size_t i) const {
    return {item_ids.at(i), labels.at(i), vectors.row(static_cast<Eigen::Index>(i)).transpose()};
}

FeatureSet make_feature_set(ProvenanceMeta meta, const std::vector<FeatureRecord>& records) {
    FeatureSet set;
    set.meta = std::move(meta);
    const Eigen::Index dim = records.empty() ? 0 : records.front().vector.size();
    set.vectors.resize(static_cast<Eigen::Index>(records.size()), dim);
    set.item_ids.reserve(records.size());
    set.labels.reserve(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        if (r.vector.size() != dim) {
            throw DimensionMismatch("record " + std::to_string(i) + " has length " +
                                    std::to_string(r.vector.size()) + ", expected " +
                                    std::to_string(dim));
        }
        set.item_ids.push_back(r.item_id);
        set.labels.push_back(r.label);
        set.vectors.row(static_cast<Eigen::Index>(i)) = r.vector.transpose();
    }
    return set;
}

bool bitwise_equal(const FeatureSet& a, const FeatureSet& b) {
    if (a.meta != b.meta || a.item_ids != b.item_ids || a.labels != b.labels ||
        a.vectors.rows() != b.vectors.rows() || a.vectors.cols() != b.vectors.cols()) {
        return false;
    }
    return a.vectors.size() == 0 ||
           std::memcmp(a.vectors.data(), b.vectors.data(),
                       static_cast<std::size_t>(a.vectors.size()) * sizeof(float)) == 0;
}

std::vector<Violation> validate_feature_set(const FeatureSet& set) {
    std::vector<Violation> out;
    auto add = [&](ViolationKind kind, std::optional<std::size_t> record, std::string message) {
        out.push_back({kind, record, std::move(message)});
    };

    const auto rows = static_cast<std::size_t>(set.vectors.rows());
    if (set.item_ids.size() != set.labels.size() || set.item_ids.size() != rows) {
        add(ViolationKind::ShapeMismatch, std::nullopt,
            "item_ids/labels/vectors disagree on record count (" + std::to_string(set.item_ids.size()) +
                "/" + std::to_string(set.labels.size()) + "/" + std::to_string(rows) + ")");
    }
    if (set.empty()) {
        add(ViolationKind::EmptySet, std::nullopt, "feature set has no records");
    }
    if (set.dim() == 0) {
        add(ViolationKind::ZeroDimension, std::nullopt, "feature dimensionality is zero");
    }
    if (set.meta.num_classes == 0) {
        add(ViolationKind::ZeroClasses, std::nullopt, "num_classes is zero");
    }
    if (set.meta.image_size == 0) {
        add(ViolationKind::ZeroImageSize, std::nullopt, "image_size is zero");
    }

    std::set<std::string> keys;
    for (const auto& [key, value] : set.meta.extra) {
        if (!keys.insert(key).second) {
            add(ViolationKind::DuplicateExtraKey, std::nullopt, "duplicate metadata key '" + key + "'");
        }
    }

    for (std::size_t i = 0; i < set.labels.size(); ++i) {
        if (set.meta.num_classes != 0 && set.labels[i] >= set.meta.num_classes) {
            add(ViolationKind::LabelOverflow, i,
                "record " + std::to_string(i) + ": label " + std::to_string(set.labels[i]) +
                    " >= num_classes " + std::to_string(set.meta.num_classes));
        }
    }
    for (std::size_t i = 1; i < set.item_ids.size(); ++i) {
        if (set.item_ids[i] <= set.item_ids[i - 1]) {
            add(ViolationKind::IdOrder, i,
                "record " + std::to_string(i) + ": item_id " + std::to_string(set.item_ids[i]) +
                    " does not exceed previous " + std::to_string(set.item_ids[i - 1]));
        }
    }
    for (Eigen::Index r = 0; r < set.vectors.rows(); ++r) {
        const auto row = set.vectors.row(r);
        for (Eigen::Index c = 0; c < row.size(); ++c) {
            if (!std::isfinite(row[c])) {
                add(ViolationKind::NonFinite, static_cast<std::size_t>(r),
                    "record " + std::to_string(r) + ": component " + std::to_string(c) +
                        " is not finite");
                break;
            }
        }
    }
    return out;
}

std::vector<std::string> validation_warnings(const FeatureSet& set) {
    std::vector<std::string> out;
    const auto& meta = set.meta;
    const DatasetInfo* info = find_dataset(meta.dataset_name);
    if (meta.image_size != 0 && !is_standard_image_size(meta.image_size)) {
        out.push_back("image_size " + std::to_string(meta.image_size) +
                      " is not one of 28, 32, 64, 128, 224");
    }
    if (info == nullptr) {
        return out;
    }
    if (info->is_3d != meta.is_3d) {
        out.push_back("dataset " + std::string(info->name) + " is " + (info->is_3d ? "3D" : "2D") +
                      " but is_3d flag is " + (meta.is_3d ? "set" : "clear"));
    }
    if (info->num_classes != meta.num_classes) {
        out.push_back("dataset " + std::string(info->name) + " has " + std::to_string(info->num_classes) +
                      " classes, file declares " + std::to_string(meta.num_classes));
    }
    const auto expected = meta.role == Role::Database ? info->train_count : info->test_count;
    if (expected != set.size()) {
        out.push_back("dataset " + std::string(info->name) + " " + std::string(to_string(meta.role)) +
                      " split has " + std::to_string(expected) + " records, file holds " +
                      std::to_string(set.size()));
    }
    return out;
}

namespace {

template <typename T>
void store_le(char* out, T value) {
    static_assert(std::is_unsigned_v<T>);
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        out[i] = static_cast<char>((value >> (8 * i)) & 0xFF);
    }
}

template <typename T>
T load_le(const char* in) {
    static_assert(std::is_unsigned_v<T>);
    T value = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        value |= static_cast<T>(static_cast<unsigned char>(in[i])) << (8 * i);
    }
    return value;
}

void store_floats(char* out, const float* values, std::size_t n) {
    if constexpr (std::endian::native == std::endian::little) {
        std::memcpy(out, values, n * sizeof(float));
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            store_le(out + 4 * i, std::bit_cast<std::uint32_t>(values[i]));
        }
    }
}

void load_floats(float* out, const char* in, std::size_t n) {
    if constexpr (std::endian::native == std::endian::little) {
        std::memcpy(out, in, n * sizeof(float));
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            out[i] = std::bit_cast<float>(load_le<std::uint32_t>(in + 4 * i));
        }
    }
}

ProvenanceMeta decode_metadata(const std::string& text) {
    ordered_json doc;
    try {
        doc = ordered_json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw FormatError(std::string("metadata is not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) {
        throw FormatError("metadata must be a JSON object");
    }
    ProvenanceMeta meta;
    for (const char* key : {"model_name", "dataset_name"}) {
        auto it = doc.find(key);
        if (it == doc.end() || !it->is_string()) {
            throw FormatError(std::string("metadata field '") + key + "' missing or not a string");
        }
    }
    meta.model_name = doc["model_name"].get<std::string>();
    meta.dataset_name = doc["dataset_name"].get<std::string>();
    if (auto it = doc.find("extra"); it != doc.end()) {
        if (!it->is_object()) {
            throw FormatError("metadata field 'extra' must be an object");
        }
        for (const auto& [key, value] : it->items()) {
            if (!value.is_string()) {
                throw FormatError("metadata extra '" + key + "' must be a string");
            }
            meta.extra.emplace_back(key, value.get<std::string>());
        }
    }
    return meta;
}

// Reads exactly n bytes, growing the buffer in bounded steps so a corrupt
// header cannot trigger a huge allocation before truncation is detected.
bool read_exact(std::istream& in, std::vector<char>& buffer, std::uint64_t n) {
    constexpr std::uint64_t kChunk = std::uint64_t{64} << 20;
    buffer.clear();
    while (buffer.size() < n) {
        const auto step = std::min<std::uint64_t>(kChunk, n - buffer.size());
        const auto offset = buffer.size();
        buffer.resize(offset + step);
        in.read(buffer.data() + offset, static_cast<std::streamsize>(step));
        if (static_cast<std::uint64_t>(in.gcount()) != step) {
            buffer.resize(offset + static_cast<std::size_t>(in.gcount()));
            return false;
        }
    }
    return true;
}

FeatureSet decode(std::istream& in, bool strict) {
    char header[fset::kHeaderSize];
    in.read(header, fset::kHeaderSize);
    const auto got = static_cast<std::size_t>(in.gcount());
    if (got < fset::kMagic.size() || std::string_view(header, fset::kMagic.size()) != fset::kMagic) {
        throw FormatError("bad magic: not an FSET1 container");
    }
    if (got < fset::kHeaderSize) {
        throw FormatError("truncated header: " + std::to_string(got) + " of " +
                          std::to_string(fset::kHeaderSize) + " bytes");
    }
    const auto version = static_cast<std::uint8_t>(header[5]);
    if (version != fset::kVersion) {
        throw FormatError("unsupported FSET version " + std::to_string(version));
    }
    const auto role = static_cast<std::uint8_t>(header[6]);
    const auto is_3d = static_cast<std::uint8_t>(header[7]);
    if (role > 1) {
        throw FormatError("invalid role byte " + std::to_string(role));
    }
    if (is_3d > 1) {
        throw FormatError("invalid is_3d byte " + std::to_string(is_3d));
    }
    const auto count = load_le<std::uint64_t>(header + 8);
    const auto dim = load_le<std::uint32_t>(header + 16);
    const auto num_classes = load_le<std::uint32_t>(header + 20);
    const auto image_size = load_le<std::uint32_t>(header + 24);
    const auto meta_len = load_le<std::uint32_t>(header + 28);

    std::vector<char> buffer;
    if (!read_exact(in, buffer, meta_len)) {
        throw FormatError("truncated metadata block: declared " + std::to_string(meta_len) + " bytes");
    }
    ProvenanceMeta meta = decode_metadata(std::string(buffer.begin(), buffer.end()));
    meta.image_size = image_size;
    meta.num_classes = num_classes;
    meta.is_3d = is_3d == 1;
    meta.role = static_cast<Role>(role);

    const std::uint64_t stride = fset::record_size(dim);
    if (count > std::numeric_limits<std::uint64_t>::max() / stride ||
        count > static_cast<std::uint64_t>(std::numeric_limits<Eigen::Index>::max())) {
        throw FormatError("declared record count " + std::to_string(count) + " overflows payload size");
    }
    const std::uint64_t payload = count * stride;
    if (!read_exact(in, buffer, payload)) {
        throw FormatError("truncated payload: header declares " + std::to_string(count) +
                          " records of dim " + std::to_string(dim) + " (" + std::to_string(payload) +
                          " bytes), found " + std::to_string(buffer.size()) + " bytes");
    }
    if (in.peek() != std::char_traits<char>::eof()) {
        throw FormatError("payload longer than declared " + std::to_string(count) + " records of dim " +
                          std::to_string(dim));
    }

    FeatureSet set;
    set.meta = std::move(meta);
    set.item_ids.resize(count);
    set.labels.resize(count);
    set.vectors.resize(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(dim));
    for (std::uint64_t r = 0; r < count; ++r) {
        const char* rec = buffer.data() + r * stride;
        set.item_ids[r] = load_le<std::uint64_t>(rec);
        set.labels[r] = load_le<std::uint32_t>(rec + 8);
        float* row = set.vectors.data() + r * dim;
        load_floats(row, rec + 12, dim);
        if (strict) {
            for (std::uint32_t c = 0; c < dim; ++c) {
                if (!std::isfinite(row[c])) {
                    throw FormatError("non-finite value at record " + std::to_string(r) + ", component " +
                                      std::to_string(c));
                }
            }
        }
    }

    if (strict) {
        if (auto violations = validate_feature_set(set); !violations.empty()) {
            throw ValidationError("invalid feature set: " + violations.front().message +
                                  (violations.size() > 1
                                       ? " (+" + std::to_string(violations.size() - 1) + " more)"
                                       : std::string()));
        }
    }
    return set;
}

std::ifstream open_for_read(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    return in;
}

} // namespace

std::string fset::encode_metadata(const ProvenanceMeta& meta) {
    ordered_json doc;
    doc["model_name"] = meta.model_name;
    doc["dataset_name"] = meta.dataset_name;
    ordered_json extra = ordered_json::object();
    for (const auto& [key, value] : meta.extra) {
        extra[key] = value;
    }
    doc["extra"] = std::move(extra);
    return doc.dump();
}

std::size_t write_feature_set(const FeatureSet& set, std::ostream& sink) {
    if (auto violations = validate_feature_set(set); !violations.empty()) {
        throw ValidationError("refusing to write invalid feature set: " + violations.front().message);
    }
    const std::string metadata = fset::encode_metadata(set.meta);
    if (metadata.size() > std::numeric_limits<std::uint32_t>::max()) {
        throw ValidationError("metadata block too large");
    }

    char header[fset::kHeaderSize];
    std::memcpy(header, fset::kMagic.data(), fset::kMagic.size());
    header[5] = static_cast<char>(fset::kVersion);
    header[6] = static_cast<char>(set.meta.role);
    header[7] = static_cast<char>(set.meta.is_3d ? 1 : 0);
    store_le<std::uint64_t>(header + 8, set.size());
    store_le<std::uint32_t>(header + 16, set.dim());
    store_le<std::uint32_t>(header + 20, set.meta.num_classes);
    store_le<std::uint32_t>(header + 24, set.meta.image_size);
    store_le<std::uint32_t>(header + 28, static_cast<std::uint32_t>(metadata.size()));
    sink.write(header, fset::kHeaderSize);
    sink.write(metadata.data(), static_cast<std::streamsize>(metadata.size()));

    const auto dim = set.dim();
    const auto stride = static_cast<std::size_t>(fset::record_size(dim));
    const std::size_t per_chunk = std::max<std::size_t>(1, (std::size_t{1} << 20) / stride);
    std::vector<char> chunk;
    for (std::size_t first = 0; first < set.size() && sink; first += per_chunk) {
        const std::size_t n = std::min(per_chunk, set.size() - first);
        chunk.resize(n * stride);
        for (std::size_t j = 0; j < n; ++j) {
            const std::size_t r = first + j;
            char* rec = chunk.data() + j * stride;
            store_le<std::uint64_t>(rec, set.item_ids[r]);
            store_le<std::uint32_t>(rec + 8, set.labels[r]);
            store_floats(rec + 12, set.vectors.data() + r * dim, dim);
        }
        sink.write(chunk.data(), static_cast<std::streamsize>(chunk.size()));
    }
    sink.flush();
    if (!sink) {
        throw IoError("write to feature sink failed");
    }
    return fset::kHeaderSize + metadata.size() + set.size() * stride;
}

std::size_t write_feature_set(const FeatureSet& set, const std::filesystem::path& path) {
    auto tmp = path;
    tmp += ".tmp";
    std::size_t written = 0;
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw IoError("cannot open " + tmp.string() + " for writing");
        }
        try {
            written = write_feature_set(set, out);
        } catch (...) {
            out.close();
            std::error_code ignored;
            std::filesystem::remove(tmp, ignored);
            throw;
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        throw IoError("cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
    }
    return written;
}

FeatureSet read_feature_set(std::istream& source) { return decode(source, true); }

FeatureSet read_feature_set(const std::filesystem::path& path) {
    auto in = open_for_read(path);
    return decode(in, true);
}

FeatureSet read_feature_set_unvalidated(std::istream& source) { return decode(source, false); }

FeatureSet read_feature_set_unvalidated(const std::filesystem::path& path) {
    auto in = open_for_read(path);
    return decode(in, false);
}

} // namespace cbmir
