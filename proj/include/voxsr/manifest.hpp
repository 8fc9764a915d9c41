#pragma once

// Dataset manifest: which volume files exist, their roles, and the phantom
// specs that produced them. The generator seed acts as the grouping key
// (stand-in for a patient ID), so validation rejects any split where train
// and val share a seed.

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "voxsr/jsonio.hpp"
#include "voxsr/phantom.hpp"

namespace voxsr {

struct ManifestEntry {
    std::string path;  // volume file, relative to the manifest's directory
    std::string role;  // "train" | "val"
    PhantomSpec spec;
};

struct DatasetManifest {
    std::uint64_t split_seed = 0;
    std::uint64_t config_digest = 0;  // hash of the generating config
    std::vector<ManifestEntry> entries;
};

inline void validate_manifest(const DatasetManifest& m) {
    std::set<std::uint64_t> train_groups, val_groups;
    for (const auto& e : m.entries) {
        if (e.path.empty()) throw DataError("manifest: entry with empty path");
        if (e.role != "train" && e.role != "val")
            throw DataError("manifest: role must be 'train' or 'val', got '" + e.role + "'");
        e.spec.validate();
        (e.role == "train" ? train_groups : val_groups).insert(e.spec.seed);
    }
    for (std::uint64_t g : train_groups)
        if (val_groups.count(g))
            throw DataError("manifest: generator seed " + std::to_string(g) +
                            " appears in both train and val");
}

namespace detail {

inline Json spec_to_json(const PhantomSpec& s) {
    Json j;
    j["kind"] = phantom_kind_name(s.kind);
    j["n"] = s.n;
    j["channels"] = s.channels;
    j["seed"] = s.seed;
    j["grf_sigma"] = s.grf_sigma;
    j["cell_count"] = s.cell_count;
    j["cell_radius_min"] = s.cell_radius_min;
    j["cell_radius_max"] = s.cell_radius_max;
    j["nucleus_lo"] = s.nucleus_lo;
    j["nucleus_hi"] = s.nucleus_hi;
    j["cytoplasm_lo"] = s.cytoplasm_lo;
    j["cytoplasm_hi"] = s.cytoplasm_hi;
    return j;
}

inline PhantomSpec spec_from_json(const Json& j, const std::string& what) {
    static const std::set<std::string> keys = {
        "kind",       "n",          "channels",        "seed",
        "grf_sigma",  "cell_count", "cell_radius_min", "cell_radius_max",
        "nucleus_lo", "nucleus_hi", "cytoplasm_lo",    "cytoplasm_hi"};
    if (!j.is_object()) throw DataError(what + ": spec must be an object");
    reject_unknown_keys<DataError>(j, keys, what);
    PhantomSpec s;
    std::string kind = "grf";
    read_key<DataError>(j, "kind", kind, true, what);
    s.kind = phantom_kind_from_name(kind);
    read_key<DataError>(j, "n", s.n, true, what);
    read_key<DataError>(j, "channels", s.channels, true, what);
    read_key<DataError>(j, "seed", s.seed, true, what);
    read_key<DataError>(j, "grf_sigma", s.grf_sigma, false, what);
    read_key<DataError>(j, "cell_count", s.cell_count, false, what);
    read_key<DataError>(j, "cell_radius_min", s.cell_radius_min, false, what);
    read_key<DataError>(j, "cell_radius_max", s.cell_radius_max, false, what);
    read_key<DataError>(j, "nucleus_lo", s.nucleus_lo, false, what);
    read_key<DataError>(j, "nucleus_hi", s.nucleus_hi, false, what);
    read_key<DataError>(j, "cytoplasm_lo", s.cytoplasm_lo, false, what);
    read_key<DataError>(j, "cytoplasm_hi", s.cytoplasm_hi, false, what);
    return s;
}

}  // namespace detail

inline std::string render_manifest_json(const DatasetManifest& m) {
    detail::Json j;
    j["split_seed"] = m.split_seed;
    j["config"] = m.config_digest;
    detail::Json entries = detail::Json::array();
    for (const auto& e : m.entries) {
        detail::Json je;
        je["path"] = e.path;
        je["role"] = e.role;
        je["spec"] = detail::spec_to_json(e.spec);
        entries.push_back(je);
    }
    j["entries"] = entries;
    return j.dump(2) + "\n";
}

inline DatasetManifest parse_manifest_json(const std::string& text) {
    const std::string what = "manifest";
    const detail::Json j = detail::parse_json_object<DataError>(text, what);
    detail::reject_unknown_keys<DataError>(j, {"split_seed", "config", "entries"}, what);
    DatasetManifest m;
    detail::read_key<DataError>(j, "split_seed", m.split_seed, true, what);
    detail::read_key<DataError>(j, "config", m.config_digest, false, what);
    const auto it = j.find("entries");
    if (it == j.end() || !it->is_array()) throw DataError(what + ": missing 'entries' array");
    for (const auto& je : *it) {
        if (!je.is_object()) throw DataError(what + ": entry must be an object");
        detail::reject_unknown_keys<DataError>(je, {"path", "role", "spec"}, what);
        ManifestEntry e;
        detail::read_key<DataError>(je, "path", e.path, true, what);
        detail::read_key<DataError>(je, "role", e.role, true, what);
        const auto spec_it = je.find("spec");
        if (spec_it == je.end()) throw DataError(what + ": entry missing 'spec'");
        e.spec = detail::spec_from_json(*spec_it, what);
        m.entries.push_back(std::move(e));
    }
    validate_manifest(m);
    return m;
}

/// Paths of one role, in manifest order.
inline std::vector<std::string> manifest_paths(const DatasetManifest& m, const std::string& role) {
    std::vector<std::string> out;
    for (const auto& e : m.entries)
        if (e.role == role) out.push_back(e.path);
    return out;
}

}  // namespace voxsr
