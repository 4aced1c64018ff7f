#pragma once

#include <bit>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "npf/diagnostics.hpp"
#include "npf/grid.hpp"

namespace npf {

using json = nlohmann::ordered_json;

static_assert(std::endian::native == std::endian::little,
              "snapshot format assumes a little-endian host");

inline std::uint64_t fnv1a64(std::span<const char> bytes) {
    std::uint64_t h = 1469598103934665603ull;
    for (char c : bytes) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ull;
    }
    return h;
}

inline std::string format_real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// CSV with a fixed header; reals carry 17 significant digits so a reread is
/// bit-exact.
inline std::string to_csv(const std::vector<std::string>& header,
                          const std::vector<std::vector<double>>& rows) {
    std::string out;
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (i) out += ',';
        out += header[i];
    }
    out += '\n';
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out += ',';
            out += format_real(row[i]);
        }
        out += '\n';
    }
    return out;
}

inline std::string ledger_csv(const std::vector<EnergyRecord>& ledger) {
    std::vector<std::vector<double>> rows;
    rows.reserve(ledger.size());
    for (const auto& r : ledger)
        rows.push_back({r.t, r.E, r.grad_theta_sq, r.chi_t_sq, r.dissipation_residual});
    return to_csv({"t", "E", "grad_theta_sq", "chi_t_sq", "residual"}, rows);
}

inline std::string bounds_csv(const std::vector<BoundsRecord>& series) {
    std::vector<std::vector<double>> rows;
    rows.reserve(series.size());
    for (const auto& r : series)
        rows.push_back({r.t, r.sup_theta, r.sup_chi, r.sup_chi_t, r.separation_gap});
    return to_csv({"t", "sup_theta", "sup_chi", "sup_chi_t", "separation_gap"}, rows);
}

// ---------------------------------------------------------------------------
// Field snapshots: raw little-endian doubles, row-major, plus a JSON sidecar.
// ---------------------------------------------------------------------------

struct Snapshot {
    int dimension = 1;
    std::array<int, 2> cell_counts{0, 1};
    std::array<double, 2> side_lengths{1.0, 1.0};
    double time = 0.0;
    std::vector<double> values;
};

inline std::string snapshot_sidecar(const DomainSpec& d, double time) {
    json meta;
    meta["dimension"] = d.dimension;
    meta["cell_counts"] = d.dimension == 1 ? std::vector<int>{d.cell_counts[0]}
                                           : std::vector<int>{d.cell_counts[0], d.cell_counts[1]};
    meta["side_lengths"] = d.dimension == 1
                               ? std::vector<double>{d.side_lengths[0]}
                               : std::vector<double>{d.side_lengths[0], d.side_lengths[1]};
    meta["time"] = time;
    return meta.dump(2) + "\n";
}

inline Snapshot read_snapshot(const std::string& base_path) {
    std::ifstream meta_in(base_path + ".json");
    if (!meta_in) throw ConfigError("cannot open snapshot sidecar: " + base_path + ".json");
    json meta = json::parse(meta_in);
    Snapshot s;
    s.dimension = meta.at("dimension").get<int>();
    const auto counts = meta.at("cell_counts").get<std::vector<int>>();
    const auto lengths = meta.at("side_lengths").get<std::vector<double>>();
    s.cell_counts[0] = counts.at(0);
    s.cell_counts[1] = s.dimension == 2 ? counts.at(1) : 1;
    s.side_lengths[0] = lengths.at(0);
    s.side_lengths[1] = s.dimension == 2 ? lengths.at(1) : 1.0;
    s.time = meta.at("time").get<double>();

    std::ifstream data(base_path + ".f64", std::ios::binary);
    if (!data) throw ConfigError("cannot open snapshot data: " + base_path + ".f64");
    const std::size_t n = static_cast<std::size_t>(s.cell_counts[0]) * s.cell_counts[1];
    s.values.resize(n);
    data.read(reinterpret_cast<char*>(s.values.data()),
              static_cast<std::streamsize>(n * sizeof(double)));
    if (static_cast<std::size_t>(data.gcount()) != n * sizeof(double))
        throw ConfigError("snapshot data truncated: " + base_path + ".f64");
    return s;
}

inline Field field_from_snapshot(const Snapshot& s, const DomainSpec& d) {
    if (s.dimension != d.dimension || s.cell_counts != d.cell_counts)
        throw ConfigError("snapshot shape does not match the configured domain");
    Field f(d);
    f.values = s.values;
    return f;
}

// ---------------------------------------------------------------------------
// Run outputs with a manifest
// ---------------------------------------------------------------------------

inline constexpr const char* kToolVersion = "0.1.0";

/// Sink for all files a run produces. Every write is recorded (path, size,
/// content hash) so the manifest inventory matches the directory exactly.
class Emitter {
public:
    explicit Emitter(std::filesystem::path dir) : dir_(std::move(dir)) {
        std::filesystem::create_directories(dir_);
    }

    void write_text(const std::string& relpath, const std::string& content) {
        write_bytes(relpath, std::span<const char>(content.data(), content.size()));
    }

    void write_json(const std::string& relpath, const json& j) {
        write_text(relpath, j.dump(2) + "\n");
    }

    void write_snapshot(const std::string& base, const Field& f, double time) {
        const auto* raw = reinterpret_cast<const char*>(f.values.data());
        write_bytes(base + ".f64",
                    std::span<const char>(raw, f.values.size() * sizeof(double)));
        write_text(base + ".json", snapshot_sidecar(*f.domain, time));
    }

    json inventory() const {
        json files = json::array();
        for (const auto& e : entries_) {
            json f;
            f["path"] = e.path;
            f["bytes"] = e.bytes;
            char buf[20];
            std::snprintf(buf, sizeof buf, "%016llx",
                          static_cast<unsigned long long>(e.hash));
            f["fnv1a64"] = buf;
            files.push_back(f);
        }
        return files;
    }

    /// Writes manifest.json (itself excluded from the inventory).
    json finalize(const json& config_echo, double wall_seconds, int threads) {
        json m;
        m["tool"] = "npf";
        m["version"] = kToolVersion;
        m["wall_seconds"] = wall_seconds;
        m["threads"] = threads;
        m["config"] = config_echo;
        m["files"] = inventory();
        std::ofstream out(dir_ / "manifest.json", std::ios::binary);
        out << m.dump(2) << "\n";
        return m;
    }

    const std::filesystem::path& dir() const { return dir_; }

private:
    void write_bytes(const std::string& relpath, std::span<const char> bytes) {
        const auto full = dir_ / relpath;
        if (full.has_parent_path()) std::filesystem::create_directories(full.parent_path());
        std::ofstream out(full, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + full.string());
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw std::runtime_error("write failed: " + full.string());
        entries_.push_back({relpath, bytes.size(), fnv1a64(bytes)});
    }

    struct Entry {
        std::string path;
        std::size_t bytes;
        std::uint64_t hash;
    };
    std::filesystem::path dir_;
    std::vector<Entry> entries_;
};

} // namespace npf
