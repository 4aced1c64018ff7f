#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <utility>

#include "npf/common.hpp"

namespace npf {

/// Interaction kernel K_s(x) = a * s^{-d} * profile(x / s).
///
/// Families:
///   gaussian  profile(z) = exp(-|z|^2 / 2)
///   bump      profile(z) = exp(-1 / (1 - |z|^2)) for |z| < 1, else 0
///   table     piecewise-linear profile from sampled (offset, value) pairs;
///             1D tables take signed offsets, radial tables |z|.
///
/// Tables are not forced to be even; evenness is measured and certified by
/// the operator checks, so a deliberately lopsided table can be used as a
/// self-adjointness counterexample.
struct KernelSpec {
    enum class Family { Gaussian, Bump, Table };

    Family family = Family::Gaussian;
    double sigma = 0.1;
    double amplitude = 1.0;
    std::vector<std::pair<double, double>> table; // sorted by offset
    bool table_radial = false;                    // interpret offsets as |z|

    static KernelSpec gaussian(double amplitude, double sigma) {
        KernelSpec k;
        k.family = Family::Gaussian;
        k.amplitude = amplitude;
        k.sigma = sigma;
        k.validate();
        return k;
    }
    static KernelSpec bump(double amplitude, double sigma) {
        KernelSpec k;
        k.family = Family::Bump;
        k.amplitude = amplitude;
        k.sigma = sigma;
        k.validate();
        return k;
    }
    static KernelSpec tabulated(std::vector<std::pair<double, double>> samples,
                                double amplitude = 1.0, double sigma = 1.0,
                                bool radial = false) {
        KernelSpec k;
        k.family = Family::Table;
        k.table = std::move(samples);
        k.amplitude = amplitude;
        k.sigma = sigma;
        k.table_radial = radial;
        std::sort(k.table.begin(), k.table.end());
        k.validate();
        return k;
    }

    void validate() const {
        if (!(sigma > 0.0)) throw std::invalid_argument("KernelSpec: sigma must be > 0");
        if (!(amplitude >= 0.0) || !std::isfinite(amplitude))
            throw std::invalid_argument("KernelSpec: amplitude must be finite and >= 0");
        if (family == Family::Table) {
            if (table.size() < 2)
                throw std::invalid_argument("KernelSpec: table needs at least 2 samples");
            for (const auto& [o, v] : table)
                if (!std::isfinite(o) || !std::isfinite(v))
                    throw std::invalid_argument("KernelSpec: table entries must be finite");
        }
    }

    double profile(double z) const {
        switch (family) {
            case Family::Gaussian:
                return std::exp(-0.5 * z * z);
            case Family::Bump: {
                const double r2 = z * z;
                return r2 < 1.0 ? std::exp(-1.0 / (1.0 - r2)) : 0.0;
            }
            case Family::Table: {
                const double q = table_radial ? std::abs(z) : z;
                if (q <= table.front().first || q >= table.back().first) {
                    if (q == table.front().first) return table.front().second;
                    if (q == table.back().first) return table.back().second;
                    return 0.0;
                }
                auto hi = std::upper_bound(table.begin(), table.end(),
                                           std::make_pair(q, kInf));
                auto lo = hi - 1;
                const double t = (q - lo->first) / (hi->first - lo->first);
                return lo->second + t * (hi->second - lo->second);
            }
        }
        return 0.0;
    }

    /// K_s at a spatial offset; dim sets the s^{-d} scaling.
    double evaluate(double dx, double dy, int dim) const {
        const double scale = amplitude * std::pow(sigma, -dim);
        if (dim == 1) {
            if (family == Family::Table && !table_radial) return scale * profile(dx / sigma);
            return scale * profile(std::abs(dx) / sigma);
        }
        return scale * profile(std::hypot(dx, dy) / sigma);
    }

    /// Largest |K(x) - K(-x)| over a 1D sample sweep, relative to max |K|.
    double even_violation(int samples = 257, double extent = 2.0) const {
        double worst = 0.0, scale = 0.0;
        for (int i = 0; i <= samples; ++i) {
            const double x = -extent + 2.0 * extent * i / samples;
            const double kp = evaluate(x, 0.0, 1);
            const double km = evaluate(-x, 0.0, 1);
            worst = std::max(worst, std::abs(kp - km));
            scale = std::max(scale, std::abs(kp));
        }
        return scale > 0.0 ? worst / scale : 0.0;
    }
    bool is_even() const { return even_violation() <= 1e-12; }
};

/// Kernel table I/O: CSV lines "offset,value".
inline KernelSpec load_kernel_table(const std::string& path, double amplitude = 1.0,
                                    double sigma = 1.0, bool radial = false) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open kernel table: " + path);
    std::vector<std::pair<double, double>> samples;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ss(line);
        double o, v;
        if (!(ss >> o >> v))
            throw ConfigError("bad kernel table line " + std::to_string(lineno) + " in " + path);
        samples.emplace_back(o, v);
    }
    return KernelSpec::tabulated(std::move(samples), amplitude, sigma, radial);
}

inline void save_kernel_table(const KernelSpec& k, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write kernel table: " + path);
    out << "# offset,value\n";
    char buf[64];
    for (const auto& [o, v] : k.table) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", o, v);
        out << buf;
    }
}

} // namespace npf
