#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "npf/common.hpp"

namespace npf {

/// Typed run configuration. INI-style text with sections
/// [domain] [kernel] [potential] [lambda] [scheme] [run] [experiment],
/// `key = value` lines and # comments. Unknown sections or keys are rejected;
/// every problem is reported, not just the first.
struct RunConfig {
    struct Domain {
        int dimension = 1;
        int n1 = 128, n2 = 0;      // n2 defaults to n1 in 2D
        double L1 = 1.0, L2 = 0.0; // L2 defaults to 1/L1 in 2D
    } domain;

    struct Kernel {
        std::string family = "gaussian"; // gaussian | bump | table
        double sigma = 0.1;
        double amplitude = 1.0;
        std::string table_file;
        bool table_radial = false;
    } kernel;

    struct Pot {
        std::string kind = "double_well"; // double_well | logarithmic | custom_smooth
        double gamma = 0.0;
        double delta = 0.0; // > 0: run the regularized family member
        // custom smooth: f0 = kappa_f |r|^epsilon r, bracket (epsilon, kappa_f, c_f, C_f)
        double epsilon = 2.0;
        double kappa_f = 0.5;
        double c_f = 0.0;
        double C_f = 0.0; // 0: defaults to kappa_f
        double linear_coefficient = 0.0;
    } potential;

    struct Lambda {
        std::string mode = "build"; // build | constant
        double extra = 0.0;
        double value = 0.0;
    } lambda;

    struct Scheme {
        double newton_tol = 1e-12;
        int newton_max_iter = 200;
        std::string linear_solver = "auto"; // auto | tridiagonal | conjugate-residual
        double linear_rtol = 1e-10;
        bool cfl_guard = true;
    } scheme;

    struct Run {
        double dt = 0.0; // required
        double T = 0.0;  // required
        std::string mode;
        std::uint64_t seed = 1234;
        std::string theta0 = "constant"; // constant | sine-bump | random | file
        double theta0_amp = 0.0;
        std::string theta0_file;
        std::string chi0 = "constant";
        double chi0_amp = 0.0;
        std::string chi0_file;
        int stride = 1;
    } run;

    struct Experiment {
        std::vector<double> delta_schedule{0.2, 0.1, 0.05, 0.025};
        double t_norm = 1.0;
        double t_tail = 1.0;
        double t_star = 2.0;
        int rank = -1; // squeeze: -1 = derive from eta
        double eta = 0.0;
        int samples = 200;
        int pairs = 10;
        int modes = 0; // eigendecomposition size; 0 = full grid
        double tol = 1e-9;
        double rho = 100.0;
        int max_iter = 100000;
        double box_theta = 0.0, box_chi = 0.0, box_chi_t = 0.0; // 0 = auto/skip
        std::vector<double> taus{0.01, 0.1, 1.0};
        double min_temporal_order = 0.0; // 0 = report only
        double min_spatial_order = 0.0;
        double lambda_bound = 0.0;
    } experiment;
};

struct ParseResult {
    std::optional<RunConfig> config;
    std::vector<std::string> errors;
    bool ok() const { return errors.empty(); }
};

namespace detail {

struct RawSection {
    std::map<std::string, std::string> kv;
    std::map<std::string, int> lines;
};

inline std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

class SectionReader {
public:
    SectionReader(const std::string& section, RawSection* raw, std::vector<std::string>* errors)
        : section_(section), raw_(raw), errors_(errors) {}

    bool has(const std::string& key) const { return raw_ && raw_->kv.count(key) > 0; }

    void real(const std::string& key, double& out) {
        if (auto v = take(key)) parse_real(key, *v, out);
    }
    void integer(const std::string& key, int& out) {
        if (auto v = take(key)) {
            try {
                std::size_t pos;
                const int r = std::stoi(*v, &pos);
                if (pos != v->size()) throw std::invalid_argument("");
                out = r;
            } catch (...) { type_error(key, *v, "integer"); }
        }
    }
    void uinteger(const std::string& key, std::uint64_t& out) {
        if (auto v = take(key)) {
            try {
                std::size_t pos;
                const auto r = std::stoull(*v, &pos);
                if (pos != v->size()) throw std::invalid_argument("");
                out = r;
            } catch (...) { type_error(key, *v, "unsigned integer"); }
        }
    }
    void boolean(const std::string& key, bool& out) {
        if (auto v = take(key)) {
            if (*v == "true" || *v == "1" || *v == "yes" || *v == "on") out = true;
            else if (*v == "false" || *v == "0" || *v == "no" || *v == "off") out = false;
            else type_error(key, *v, "boolean");
        }
    }
    void text(const std::string& key, std::string& out) {
        if (auto v = take(key)) out = *v;
    }
    void choice(const std::string& key, std::string& out, std::initializer_list<const char*> allowed) {
        if (auto v = take(key)) {
            for (const char* a : allowed)
                if (*v == a) { out = *v; return; }
            std::string opts;
            for (const char* a : allowed) { if (!opts.empty()) opts += " | "; opts += a; }
            errors_->push_back("[" + section_ + "] " + key + ": '" + *v +
                               "' is not one of " + opts);
        }
    }
    void real_list(const std::string& key, std::vector<double>& out) {
        if (auto v = take(key)) {
            std::vector<double> vals;
            std::string item;
            std::istringstream ss(*v);
            bool bad = false;
            while (std::getline(ss, item, ',')) {
                double d = 0;
                if (!parse_real_quiet(trim(item), d)) { bad = true; break; }
                vals.push_back(d);
            }
            if (bad) type_error(key, *v, "comma-separated reals");
            else out = std::move(vals);
        }
    }
    void require(const std::string& key) {
        if (!consumed_.count(key))
            errors_->push_back("[" + section_ + "] missing required key: " + key);
    }
    void finish() {
        if (!raw_) return;
        for (const auto& [k, v] : raw_->kv)
            if (!consumed_.count(k))
                errors_->push_back("[" + section_ + "] unknown key '" + k + "' (line " +
                                   std::to_string(raw_->lines.at(k)) + ")");
    }

private:
    std::optional<std::string> take(const std::string& key) {
        if (!raw_) return std::nullopt;
        auto it = raw_->kv.find(key);
        if (it == raw_->kv.end()) return std::nullopt;
        consumed_.insert(key);
        return it->second;
    }
    static bool parse_real_quiet(const std::string& v, double& out) {
        try {
            std::size_t pos;
            out = std::stod(v, &pos);
            return pos == v.size();
        } catch (...) { return false; }
    }
    void parse_real(const std::string& key, const std::string& v, double& out) {
        if (!parse_real_quiet(v, out)) type_error(key, v, "real");
    }
    void type_error(const std::string& key, const std::string& v, const char* want) {
        errors_->push_back("[" + section_ + "] " + key + ": cannot parse '" + v + "' as " + want);
    }

    std::string section_;
    RawSection* raw_;
    std::vector<std::string>* errors_;
    std::set<std::string> consumed_;
};

} // namespace detail

inline ParseResult parse_config(const std::string& text) {
    ParseResult res;
    std::map<std::string, detail::RawSection> sections;
    const std::set<std::string> known_sections = {"domain", "kernel", "potential", "lambda",
                                                  "scheme", "run", "experiment"};
    std::string current;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') {
                res.errors.push_back("line " + std::to_string(lineno) + ": unterminated section header");
                continue;
            }
            current = detail::trim(line.substr(1, line.size() - 2));
            if (!known_sections.count(current)) {
                res.errors.push_back("line " + std::to_string(lineno) + ": unknown section [" +
                                     current + "]");
                current.clear();
            } else {
                sections[current]; // materialize
            }
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            res.errors.push_back("line " + std::to_string(lineno) + ": expected 'key = value'");
            continue;
        }
        if (current.empty()) {
            res.errors.push_back("line " + std::to_string(lineno) + ": key outside any section");
            continue;
        }
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string val = detail::trim(line.substr(eq + 1));
        if (key.empty()) {
            res.errors.push_back("line " + std::to_string(lineno) + ": empty key");
            continue;
        }
        auto& sec = sections[current];
        if (sec.kv.count(key))
            res.errors.push_back("line " + std::to_string(lineno) + ": duplicate key '" + key +
                                 "' in [" + current + "]");
        sec.kv[key] = val;
        sec.lines[key] = lineno;
    }

    RunConfig cfg;
    auto reader = [&](const char* name) {
        auto it = sections.find(name);
        return detail::SectionReader(name, it == sections.end() ? nullptr : &it->second,
                                     &res.errors);
    };

    {
        auto r = reader("domain");
        r.integer("dimension", cfg.domain.dimension);
        r.integer("n1", cfg.domain.n1);
        r.integer("n2", cfg.domain.n2);
        r.real("L1", cfg.domain.L1);
        r.real("L2", cfg.domain.L2);
        r.finish();
        if (cfg.domain.dimension != 1 && cfg.domain.dimension != 2)
            res.errors.push_back("[domain] dimension must be 1 or 2");
        if (cfg.domain.dimension == 2) {
            if (cfg.domain.n2 == 0) cfg.domain.n2 = cfg.domain.n1;
            if (cfg.domain.L2 == 0.0 && cfg.domain.L1 != 0.0) cfg.domain.L2 = 1.0 / cfg.domain.L1;
        }
    }
    {
        auto r = reader("kernel");
        r.choice("family", cfg.kernel.family, {"gaussian", "bump", "table"});
        r.real("sigma", cfg.kernel.sigma);
        r.real("amplitude", cfg.kernel.amplitude);
        r.text("table_file", cfg.kernel.table_file);
        r.boolean("table_radial", cfg.kernel.table_radial);
        if (cfg.kernel.family == "table" && !r.has("table_file") && cfg.kernel.table_file.empty())
            res.errors.push_back("[kernel] missing required key: table_file (table family)");
        r.finish();
    }
    {
        auto r = reader("potential");
        r.choice("kind", cfg.potential.kind, {"double_well", "logarithmic", "custom_smooth"});
        r.real("gamma", cfg.potential.gamma);
        r.real("delta", cfg.potential.delta);
        r.real("epsilon", cfg.potential.epsilon);
        r.real("kappa_f", cfg.potential.kappa_f);
        r.real("c_f", cfg.potential.c_f);
        r.real("C_f", cfg.potential.C_f);
        r.real("linear_coefficient", cfg.potential.linear_coefficient);
        r.finish();
        if (cfg.potential.C_f == 0.0) cfg.potential.C_f = cfg.potential.kappa_f;
        if (cfg.potential.delta > 0.0 && cfg.potential.kind != "logarithmic")
            res.errors.push_back("[potential] delta regularization requires kind = logarithmic");
    }
    {
        auto r = reader("lambda");
        r.choice("mode", cfg.lambda.mode, {"build", "constant"});
        r.real("extra", cfg.lambda.extra);
        r.real("value", cfg.lambda.value);
        r.finish();
    }
    {
        auto r = reader("scheme");
        r.real("newton_tol", cfg.scheme.newton_tol);
        r.integer("newton_max_iter", cfg.scheme.newton_max_iter);
        r.choice("linear_solver", cfg.scheme.linear_solver,
                 {"auto", "tridiagonal", "conjugate-residual"});
        r.real("linear_rtol", cfg.scheme.linear_rtol);
        r.boolean("cfl_guard", cfg.scheme.cfl_guard);
        r.finish();
    }
    {
        auto r = reader("run");
        r.real("dt", cfg.run.dt);
        r.real("T", cfg.run.T);
        r.choice("mode", cfg.run.mode,
                 {"simulate", "steady", "squeeze", "continuation", "verify-operator",
                  "verify-potential", "mms"});
        r.uinteger("seed", cfg.run.seed);
        r.choice("theta0", cfg.run.theta0, {"constant", "sine-bump", "random", "file"});
        r.real("theta0_amp", cfg.run.theta0_amp);
        r.text("theta0_file", cfg.run.theta0_file);
        r.choice("chi0", cfg.run.chi0, {"constant", "sine-bump", "random", "file"});
        r.real("chi0_amp", cfg.run.chi0_amp);
        r.text("chi0_file", cfg.run.chi0_file);
        r.integer("stride", cfg.run.stride);
        r.require("dt");
        r.require("T");
        r.finish();
        if (sections.count("run") == 0)
            res.errors.push_back("[run] section is required (keys dt, T)");
        else {
            if (cfg.run.dt <= 0.0 && std::count(res.errors.begin(), res.errors.end(),
                                                std::string("[run] missing required key: dt")) == 0)
                res.errors.push_back("[run] dt must be > 0");
            if (cfg.run.T < 0.0) res.errors.push_back("[run] T must be >= 0");
        }
        if (cfg.run.stride < 1) res.errors.push_back("[run] stride must be >= 1");
    }
    {
        auto r = reader("experiment");
        r.real_list("delta_schedule", cfg.experiment.delta_schedule);
        r.real("t_norm", cfg.experiment.t_norm);
        r.real("t_tail", cfg.experiment.t_tail);
        r.real("t_star", cfg.experiment.t_star);
        r.integer("rank", cfg.experiment.rank);
        r.real("eta", cfg.experiment.eta);
        r.integer("samples", cfg.experiment.samples);
        r.integer("pairs", cfg.experiment.pairs);
        r.integer("modes", cfg.experiment.modes);
        r.real("tol", cfg.experiment.tol);
        r.real("rho", cfg.experiment.rho);
        r.integer("max_iter", cfg.experiment.max_iter);
        r.real("box_theta", cfg.experiment.box_theta);
        r.real("box_chi", cfg.experiment.box_chi);
        r.real("box_chi_t", cfg.experiment.box_chi_t);
        r.real_list("taus", cfg.experiment.taus);
        r.real("min_temporal_order", cfg.experiment.min_temporal_order);
        r.real("min_spatial_order", cfg.experiment.min_spatial_order);
        r.real("lambda_bound", cfg.experiment.lambda_bound);
        r.finish();
    }

    if (res.errors.empty()) res.config = std::move(cfg);
    return res;
}

/// Canonical text form; parse(emit(cfg)) reproduces cfg exactly (reals are
/// written with 17 significant digits).
inline std::string emit_config(const RunConfig& c) {
    std::ostringstream out;
    char buf[64];
    auto real = [&](const char* key, double v) {
        std::snprintf(buf, sizeof buf, "%s = %.17g\n", key, v);
        out << buf;
    };
    auto integer = [&](const char* key, long long v) { out << key << " = " << v << "\n"; };
    auto text = [&](const char* key, const std::string& v) {
        if (!v.empty()) out << key << " = " << v << "\n";
    };
    auto boolean = [&](const char* key, bool v) { out << key << " = " << (v ? "true" : "false") << "\n"; };
    auto list = [&](const char* key, const std::vector<double>& vs) {
        out << key << " = ";
        for (std::size_t i = 0; i < vs.size(); ++i) {
            std::snprintf(buf, sizeof buf, "%s%.17g", i ? "," : "", vs[i]);
            out << buf;
        }
        out << "\n";
    };

    out << "[domain]\n";
    integer("dimension", c.domain.dimension);
    integer("n1", c.domain.n1);
    if (c.domain.dimension == 2) integer("n2", c.domain.n2);
    real("L1", c.domain.L1);
    if (c.domain.dimension == 2) real("L2", c.domain.L2);

    out << "\n[kernel]\n";
    text("family", c.kernel.family);
    real("sigma", c.kernel.sigma);
    real("amplitude", c.kernel.amplitude);
    text("table_file", c.kernel.table_file);
    if (c.kernel.table_radial) boolean("table_radial", true);

    out << "\n[potential]\n";
    text("kind", c.potential.kind);
    real("gamma", c.potential.gamma);
    real("delta", c.potential.delta);
    real("epsilon", c.potential.epsilon);
    real("kappa_f", c.potential.kappa_f);
    real("c_f", c.potential.c_f);
    real("C_f", c.potential.C_f);
    real("linear_coefficient", c.potential.linear_coefficient);

    out << "\n[lambda]\n";
    text("mode", c.lambda.mode);
    real("extra", c.lambda.extra);
    real("value", c.lambda.value);

    out << "\n[scheme]\n";
    real("newton_tol", c.scheme.newton_tol);
    integer("newton_max_iter", c.scheme.newton_max_iter);
    text("linear_solver", c.scheme.linear_solver);
    real("linear_rtol", c.scheme.linear_rtol);
    boolean("cfl_guard", c.scheme.cfl_guard);

    out << "\n[run]\n";
    real("dt", c.run.dt);
    real("T", c.run.T);
    text("mode", c.run.mode);
    integer("seed", static_cast<long long>(c.run.seed));
    text("theta0", c.run.theta0);
    real("theta0_amp", c.run.theta0_amp);
    text("theta0_file", c.run.theta0_file);
    text("chi0", c.run.chi0);
    real("chi0_amp", c.run.chi0_amp);
    text("chi0_file", c.run.chi0_file);
    integer("stride", c.run.stride);

    out << "\n[experiment]\n";
    list("delta_schedule", c.experiment.delta_schedule);
    real("t_norm", c.experiment.t_norm);
    real("t_tail", c.experiment.t_tail);
    real("t_star", c.experiment.t_star);
    integer("rank", c.experiment.rank);
    real("eta", c.experiment.eta);
    integer("samples", c.experiment.samples);
    integer("pairs", c.experiment.pairs);
    integer("modes", c.experiment.modes);
    real("tol", c.experiment.tol);
    real("rho", c.experiment.rho);
    integer("max_iter", c.experiment.max_iter);
    real("box_theta", c.experiment.box_theta);
    real("box_chi", c.experiment.box_chi);
    real("box_chi_t", c.experiment.box_chi_t);
    list("taus", c.experiment.taus);
    real("min_temporal_order", c.experiment.min_temporal_order);
    real("min_spatial_order", c.experiment.min_spatial_order);
    real("lambda_bound", c.experiment.lambda_bound);
    return out.str();
}

} // namespace npf
