#include "cbmir/errors.hpp"
#include "cbmir/harness.hpp"

#include <json.hpp>

#include <fstream>
#include <set>
#include <sstream>
#include <tuple>

namespace cbmir {
namespace {

using nlohmann::json;

template <typename T>
T required(const json& obj, const char* key, const std::string& where) {
    auto it = obj.find(key);
    if (it == obj.end()) {
        throw ValidationError(where + ": missing field '" + key + "'");
    }
    try {
        return it->get<T>();
    } catch (const json::exception&) {
        throw ValidationError(where + ": field '" + key + "' has the wrong type");
    }
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    std::filesystem::path path(p);
    return path.is_relative() && !base.empty() ? base / path : path;
}

} // namespace

ExperimentManifest parse_manifest(const std::string& json_text, const std::filesystem::path& base_dir) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ValidationError(std::string("manifest is not valid JSON: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("cells") || !doc["cells"].is_array()) {
        throw ValidationError("manifest must be an object with a 'cells' array");
    }

    ExperimentManifest m;
    if (auto it = doc.find("ks"); it != doc.end()) {
        if (!it->is_array() || it->empty()) {
            throw ValidationError("manifest 'ks' must be a non-empty array");
        }
        m.ks.clear();
        for (const auto& k : *it) {
            if (!k.is_number_integer() || k.get<long long>() <= 0) {
                throw ValidationError("manifest 'ks' entries must be positive integers");
            }
            m.ks.push_back(k.get<std::size_t>());
        }
    }
    if (auto it = doc.find("output_dir"); it != doc.end()) {
        m.output_dir = resolve(base_dir, it->get<std::string>());
    }
    if (auto it = doc.find("seed"); it != doc.end()) {
        if (!it->is_number_unsigned()) {
            throw ValidationError("manifest 'seed' must be an unsigned integer");
        }
        m.seed = it->get<std::uint64_t>();
    }

    std::set<std::tuple<std::string, std::string, std::uint32_t>> keys;
    std::set<std::filesystem::path> paths;
    for (std::size_t i = 0; i < doc["cells"].size(); ++i) {
        const auto& c = doc["cells"][i];
        const std::string where = "cell " + std::to_string(i);
        if (!c.is_object()) {
            throw ValidationError(where + " is not an object");
        }
        CellSpec cell;
        cell.model = required<std::string>(c, "model", where);
        cell.dataset = required<std::string>(c, "dataset", where);
        cell.size = required<std::uint32_t>(c, "size", where);
        if (c.contains("dim")) {
            cell.dim = required<std::uint32_t>(c, "dim", where);
        }
        if (auto it = c.find("synthetic"); it != c.end()) {
            SyntheticCellSpec s;
            s.classes = required<std::uint32_t>(*it, "classes", where + " synthetic");
            s.per_class = required<std::uint64_t>(*it, "per_class", where + " synthetic");
            s.dim = required<std::uint32_t>(*it, "dim", where + " synthetic");
            s.sep = required<double>(*it, "sep", where + " synthetic");
            cell.synthetic = s;
        } else {
            cell.database_path = resolve(base_dir, required<std::string>(c, "database", where));
            cell.query_path = resolve(base_dir, required<std::string>(c, "query", where));
            for (const auto& p : {cell.database_path, cell.query_path}) {
                if (!paths.insert(p.lexically_normal()).second) {
                    throw ValidationError(where + ": path " + p.string() + " is used by another cell");
                }
            }
        }
        if (!keys.emplace(cell.model, cell.dataset, cell.size).second) {
            throw ValidationError(where + ": duplicate cell (" + cell.model + ", " + cell.dataset + ", " +
                                  std::to_string(cell.size) + ")");
        }
        m.cells.push_back(std::move(cell));
    }
    return m;
}

ExperimentManifest load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open manifest " + path.string());
    }
    std::stringstream text;
    text << in.rdbuf();
    return parse_manifest(text.str(), path.parent_path());
}

} // namespace cbmir
