#pragma once

#include "core.hpp"
#include "kicked_ising.hpp"
#include "linear_response.hpp"
#include "metrics.hpp"
#include "models.hpp"
#include "rmt.hpp"
#include "stats.hpp"

#include <array>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace qdeco::experiments {

enum class Kind { RmtDecay, RmtCp, RmtSigma, Unitality, KiDecay, KiCp, KiVsRmt, MemorySumrule, SpectralStats };

inline constexpr std::array<const char*, 9> kind_names{"rmt-decay", "rmt-cp",    "rmt-sigma",      "unitality",
                                                       "ki-decay",  "ki-cp",     "ki-vs-rmt",      "memory-sumrule",
                                                       "spectral-stats"};

inline const char* to_string(Kind k) { return kind_names[static_cast<std::size_t>(k)]; }

inline Kind parse_kind(const std::string& s) {
    for (std::size_t i = 0; i < kind_names.size(); ++i)
        if (s == kind_names[i]) return static_cast<Kind>(i);
    throw ConfigError("kind: unknown experiment '" + s + "'");
}

inline constexpr double nan = std::numeric_limits<double>::quiet_NaN();

struct ExperimentConfig {
    Kind kind = Kind::RmtDecay;
    std::string preset;
    std::uint64_t seed = 1;
    std::string out;  // output directory; empty writes the table to stdout
    int threads = 1;

    struct Rmt {
        std::string configuration = "one-qubit";  // one-qubit, spectator, separate, joint, n-qubit
        std::string ensemble = "gue";
        long n_env = 256;
        long n_env2 = 0;
        int num_qubits = 2;                 // n-qubit configuration
        std::vector<double> lambda{0.01};   // one value is broadcast to every coupled qubit
        std::vector<double> delta{0.0};     // one value is broadcast to every central qubit
        double theta = pi / 4;
        double phi = 0.0;
        double gamma = 0.0;
        std::string state = "param";        // param, random-gamma, bell, ghz, w
        bool unfold = true;
        int n_hamiltonians = 10;
        int n_initials = 10;
        std::string sweep = "none";         // none, delta, theta, lambda
        std::vector<double> sweep_values;
        double cp_bin = 0.005;
        std::vector<double> n_envs{64, 128, 256};  // rmt-sigma and unitality
        std::string concurrence_mode = "werner";  // linear, werner, werner-c0
        double p_infinity = nan;            // NaN selects the configuration default
        double sigma_t = 40.0;              // rmt-sigma report time (absolute)
        std::string scaling_note;
    } rmt;

    struct Time {
        double t_max = 2.0;
        int points = 41;
        std::string unit = "tauh";  // tauh or absolute
    } time;

    struct Ki {
        std::string env = "d";
        int q_e = 12;
        double j_prime = 0.0005;
        std::string kick = "chaotic";       // chaotic, chaotic-alt, integrable, intermediate, custom
        std::vector<double> b_e{1.4, 0.0, 1.4};
        std::string central_kick = "zero";  // zero, same, custom
        std::vector<double> b_c{0.0, 0.0, 0.0};
        double j_e = nan;                   // NaN takes the kick preset's value
        int steps = 400;
        int stride = 1;
        int n_initials = 4;
        std::string state = "bell";         // bell, product
        double alpha = 0.21;
        double fit_t_min = 10.0;
        double fit_t_max_frac = 0.25;       // fraction of tau_H
        double cp_bin = 0.005;
    } ki;

    struct Memory {
        std::string mode = "ki";  // ki or rmt
        int ring = 12;
        int n = 4;
        std::vector<double> positions{0, 3, 6, 9};
        double lambda = 0.005;
        std::string axis = "x";
        std::string kick = "memory-chaotic";
        double j = 1.0;
        int steps = 200;
        int n_initials = 2;
        std::string state = "ghz";  // ghz or w
        double max_loss = 0.1;      // residual is judged while 1 - P stays below this
    } memory;

    struct Spectral {
        std::string source = "gue";  // gue, goe, ki-chaotic, ki-intermediate, ki-integrable
        int dim = 200;
        int draws = 100;
        double bulk = 0.8;
        int L = 10;
        int bins = 30;
        double s_max = 4.0;
    } spectral;
};

// ---------------------------------------------------------------- parsing

namespace detail {

inline std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return {};
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

inline std::string lower(std::string s) {
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

inline double parse_double(const std::string& key, const std::string& v) {
    const std::string t = trim(v);
    if (lower(t) == "nan" || lower(t) == "default") return nan;
    double x = 0.0;
    const auto r = std::from_chars(t.data(), t.data() + t.size(), x);
    if (r.ec != std::errc() || r.ptr != t.data() + t.size() || t.empty())
        throw ConfigError(key + ": expected a number, got '" + v + "'");
    return x;
}

template <class Int>
Int parse_int(const std::string& key, const std::string& v) {
    const std::string t = trim(v);
    Int x{};
    const auto r = std::from_chars(t.data(), t.data() + t.size(), x);
    if (r.ec != std::errc() || r.ptr != t.data() + t.size() || t.empty())
        throw ConfigError(key + ": expected an integer, got '" + v + "'");
    return x;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
    const std::string t = lower(trim(v));
    if (t == "true" || t == "yes" || t == "1" || t == "on") return true;
    if (t == "false" || t == "no" || t == "0" || t == "off") return false;
    throw ConfigError(key + ": expected a boolean, got '" + v + "'");
}

inline std::vector<double> parse_list(const std::string& key, const std::string& v) {
    std::vector<double> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!trim(item).empty()) out.push_back(parse_double(key, item));
    return out;
}

inline std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

// Shortest text that reads back to the same double.
inline std::string fmt_short(double x) {
    char buf[40];
    const auto r = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, r.ptr);
}

inline std::string fmt_list(const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + fmt_short(v[i]);
    return s;
}

inline std::string choice(const std::string& key, const std::string& v, const std::vector<std::string>& allowed) {
    const std::string t = lower(trim(v));
    std::string all;
    for (const auto& a : allowed) {
        if (t == a) return t;
        all += std::string(all.empty() ? "" : ", ") + a;
    }
    throw ConfigError(key + ": '" + v + "' is not one of {" + all + "}");
}

struct Key {
    std::string name;
    std::function<void(const std::string&)> set;
    std::function<std::string()> get;
};

}  // namespace detail

inline std::vector<detail::Key> config_keys(ExperimentConfig& c) {
    using namespace detail;
    std::vector<Key> k;
    auto num = [&](const std::string& name, double& f) {
        k.push_back({name, [name, &f](const std::string& v) { f = parse_double(name, v); }, [&f] { return fmt_short(f); }});
    };
    auto integer = [&](const std::string& name, auto& f) {
        using T = std::remove_reference_t<decltype(f)>;
        k.push_back({name, [name, &f](const std::string& v) { f = parse_int<T>(name, v); },
                     [&f] { return std::to_string(f); }});
    };
    auto list = [&](const std::string& name, std::vector<double>& f) {
        k.push_back({name, [name, &f](const std::string& v) { f = parse_list(name, v); }, [&f] { return fmt_list(f); }});
    };
    auto flag = [&](const std::string& name, bool& f) {
        k.push_back({name, [name, &f](const std::string& v) { f = parse_bool(name, v); },
                     [&f] { return std::string(f ? "true" : "false"); }});
    };
    auto pick = [&](const std::string& name, std::string& f, std::vector<std::string> allowed) {
        k.push_back({name, [name, &f, allowed](const std::string& v) { f = choice(name, v, allowed); },
                     [&f] { return f; }});
    };

    k.push_back({"kind", [&c](const std::string& v) { c.kind = parse_kind(lower(trim(v))); },
                 [&c] { return std::string(to_string(c.kind)); }});
    k.push_back({"preset", [&c](const std::string& v) { c.preset = trim(v); }, [&c] { return c.preset; }});
    integer("seed", c.seed);
    k.push_back({"out", [&c](const std::string& v) { c.out = trim(v); }, [&c] { return c.out; }});
    integer("threads", c.threads);

    auto& r = c.rmt;
    pick("rmt.configuration", r.configuration, {"one-qubit", "spectator", "separate", "joint", "n-qubit"});
    pick("rmt.ensemble", r.ensemble, {"gue", "goe"});
    integer("rmt.n_env", r.n_env);
    integer("rmt.n_env2", r.n_env2);
    integer("rmt.num_qubits", r.num_qubits);
    list("rmt.lambda", r.lambda);
    list("rmt.delta", r.delta);
    num("rmt.theta", r.theta);
    num("rmt.phi", r.phi);
    num("rmt.gamma", r.gamma);
    pick("rmt.state", r.state, {"param", "random-gamma", "bell", "ghz", "w"});
    flag("rmt.unfold", r.unfold);
    integer("rmt.n_hamiltonians", r.n_hamiltonians);
    integer("rmt.n_initials", r.n_initials);
    pick("rmt.sweep", r.sweep, {"none", "delta", "theta", "lambda"});
    list("rmt.sweep_values", r.sweep_values);
    num("rmt.cp_bin", r.cp_bin);
    list("rmt.n_envs", r.n_envs);
    pick("rmt.concurrence_mode", r.concurrence_mode, {"linear", "werner", "werner-c0"});
    num("rmt.p_infinity", r.p_infinity);
    num("rmt.sigma_t", r.sigma_t);

    num("time.t_max", c.time.t_max);
    integer("time.points", c.time.points);
    pick("time.unit", c.time.unit, {"tauh", "absolute"});

    auto& q = c.ki;
    pick("ki.env", q.env, {"a", "b", "c", "d", "e", "f"});
    integer("ki.q_e", q.q_e);
    num("ki.j_prime", q.j_prime);
    pick("ki.kick", q.kick, {"chaotic", "chaotic-alt", "integrable", "intermediate", "custom"});
    list("ki.b_e", q.b_e);
    pick("ki.central_kick", q.central_kick, {"zero", "same", "custom"});
    list("ki.b_c", q.b_c);
    num("ki.j_e", q.j_e);
    integer("ki.steps", q.steps);
    integer("ki.stride", q.stride);
    integer("ki.n_initials", q.n_initials);
    pick("ki.state", q.state, {"bell", "product"});
    num("ki.alpha", q.alpha);
    num("ki.fit_t_min", q.fit_t_min);
    num("ki.fit_t_max_frac", q.fit_t_max_frac);
    num("ki.cp_bin", q.cp_bin);

    auto& m = c.memory;
    pick("memory.mode", m.mode, {"ki", "rmt"});
    integer("memory.ring", m.ring);
    integer("memory.n", m.n);
    list("memory.positions", m.positions);
    num("memory.lambda", m.lambda);
    pick("memory.axis", m.axis, {"x", "z"});
    pick("memory.kick", m.kick, {"memory-chaotic", "chaotic", "chaotic-alt", "integrable", "intermediate"});
    num("memory.j", m.j);
    integer("memory.steps", m.steps);
    integer("memory.n_initials", m.n_initials);
    pick("memory.state", m.state, {"ghz", "w"});
    num("memory.max_loss", m.max_loss);

    auto& s = c.spectral;
    pick("spectral.source", s.source, {"gue", "goe", "ki-chaotic", "ki-intermediate", "ki-integrable"});
    integer("spectral.dim", s.dim);
    integer("spectral.draws", s.draws);
    num("spectral.bulk", s.bulk);
    integer("spectral.L", s.L);
    integer("spectral.bins", s.bins);
    num("spectral.s_max", s.s_max);
    return k;
}

inline void set_key(ExperimentConfig& c, const std::string& key, const std::string& value) {
    for (auto& k : config_keys(c))
        if (k.name == key) {
            k.set(value);
            return;
        }
    throw ConfigError(key + ": unknown key");
}

// `key = value` lines; `[section]` headers prefix the following keys; `#` starts a comment.
inline void parse_config_text(ExperimentConfig& c, const std::string& text) {
    std::stringstream ss(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        if (const auto h = line.find('#'); h != std::string::npos) line.erase(h);
        line = detail::trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError("line " + std::to_string(lineno) + ": malformed section header");
            section = detail::trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
        const std::string key = detail::trim(line.substr(0, eq));
        set_key(c, section.empty() ? key : section + "." + key, line.substr(eq + 1));
    }
}

inline void parse_config_file(ExperimentConfig& c, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    parse_config_text(c, ss.str());
}

inline std::string dump_config(ExperimentConfig c) {
    std::string out;
    for (auto& k : config_keys(c)) out += k.name + " = " + k.get() + "\n";
    return out;
}

// EXP_SEED, EXP_OUT, EXP_THREADS mirror the command-line flags.
inline void apply_environment(ExperimentConfig& c) {
    if (const char* v = std::getenv("EXP_SEED")) set_key(c, "seed", v);
    if (const char* v = std::getenv("EXP_OUT")) set_key(c, "out", v);
    if (const char* v = std::getenv("EXP_THREADS")) set_key(c, "threads", v);
}

// ---------------------------------------------------------------- presets

inline const std::vector<std::string>& preset_names() {
    static const std::vector<std::string> names{
        "fig-holeone",   "fig-holetwo",          "fig-decaygoe",     "fig-unitality",   "fig-transicion",
        "fig-cpdecay",   "fig-timeevolution",    "fig-longcp",       "fig-comparisonKIRMT", "fig-kichaos",
        "fig-kichaos-rmt", "fig-spectral-gue",   "fig-intermediate"};
    return names;
}

inline ExperimentConfig preset(const std::string& name) {
    ExperimentConfig c;
    c.preset = name;
    auto& r = c.rmt;
    if (name == "fig-holeone") {
        c.kind = Kind::RmtDecay;
        r.configuration = "one-qubit";
        r.state = "param";
        r.phi = 0.0;
        r.lambda = {0.01};
        r.n_env = 1024;
        r.sweep = "delta";
        r.sweep_values = {0.0, 8.0};
        r.n_hamiltonians = 8;
        r.n_initials = 8;
        c.time = {3.0, 61, "tauh"};
        r.scaling_note = "n_env 2048 -> 1024";
    } else if (name == "fig-holetwo") {
        c.kind = Kind::RmtDecay;
        r.configuration = "spectator";
        r.state = "param";
        r.lambda = {0.03};
        r.n_env = 512;
        r.sweep = "theta";
        r.sweep_values = {0.0, pi / 8, pi / 4};
        r.n_hamiltonians = 8;
        r.n_initials = 8;
        c.time = {2.0, 41, "tauh"};
        r.scaling_note = "n_env 1024 -> 512";
    } else if (name == "fig-decaygoe") {
        c.kind = Kind::RmtSigma;
        r.configuration = "one-qubit";
        r.ensemble = "goe";
        r.state = "random-gamma";
        r.lambda = {0.001};
        r.n_envs = {64, 128, 256, 512};
        r.n_hamiltonians = 10;
        r.n_initials = 10;
        c.time = {80.0, 21, "absolute"};
    } else if (name == "fig-unitality") {
        c.kind = Kind::Unitality;
        r.configuration = "one-qubit";
        r.lambda = {0.03};
        r.n_envs = {32, 64, 128, 256};
        r.n_hamiltonians = 5;
        r.n_initials = 5;
        c.time = {40.0, 41, "absolute"};
    } else if (name == "fig-transicion") {
        c.kind = Kind::RmtCp;
        r.configuration = "spectator";
        r.state = "bell";
        r.delta = {1.0};
        r.n_env = 512;
        r.sweep = "lambda";
        r.sweep_values = {0.02, 0.14};
        r.n_hamiltonians = 6;
        r.n_initials = 6;
        c.time = {6.0, 121, "tauh"};
        r.scaling_note = "n_env 1024 -> 512";
    } else if (name == "fig-cpdecay") {
        c.kind = Kind::RmtDecay;
        r.configuration = "joint";
        r.state = "bell";
        r.lambda = {0.1};
        r.delta = {0.1};
        r.n_env = 256;
        r.n_hamiltonians = 8;
        r.n_initials = 8;
        c.time = {1.0, 41, "tauh"};
        r.scaling_note = "n_env 1024 -> 256";
    } else if (name == "fig-timeevolution") {
        c.kind = Kind::KiDecay;
        c.ki.env = "a";
        c.ki.j_prime = 0.01;
        c.ki.steps = 200;
    } else if (name == "fig-longcp") {
        c.kind = Kind::KiCp;
        c.ki.env = "a";
        c.ki.kick = "integrable";
        c.ki.central_kick = "same";
        c.ki.j_prime = 0.02;
        c.ki.steps = 400;
    } else if (name == "fig-comparisonKIRMT") {
        c.kind = Kind::KiVsRmt;
        c.ki.env = "d";
        c.ki.q_e = 12;
        c.ki.j_prime = 0.0005;
        c.ki.steps = 700;
        c.ki.n_initials = 9;
    } else if (name == "fig-kichaos") {
        c.kind = Kind::MemorySumrule;
        c.memory.mode = "ki";
        c.memory.ring = 12;
        c.memory.n = 4;
        c.memory.lambda = 0.005;
        c.memory.positions = {0, 3, 6, 9};
    } else if (name == "fig-kichaos-rmt") {
        c.kind = Kind::MemorySumrule;
        c.memory.mode = "rmt";
        c.memory.n = 3;
        r.configuration = "n-qubit";
        r.num_qubits = 3;
        r.lambda = {0.02};
        r.n_env = 128;
        r.n_hamiltonians = 6;
        r.n_initials = 4;
        c.time = {1.0, 21, "tauh"};
    } else if (name == "fig-spectral-gue") {
        c.kind = Kind::SpectralStats;
        c.spectral.source = "gue";
    } else if (name == "fig-intermediate") {
        c.kind = Kind::SpectralStats;
        c.spectral.source = "ki-intermediate";
        c.spectral.L = 12;
    } else {
        std::string all;
        for (const auto& n : preset_names()) all += (all.empty() ? "" : ", ") + n;
        throw ConfigError("preset: unknown name '" + name + "'; valid presets: " + all);
    }
    return c;
}

// ---------------------------------------------------------------- output

struct ResultTable {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    void add(std::vector<double> row) {
        if (row.size() != columns.size()) throw Error("ResultTable: row width does not match the header");
        rows.push_back(std::move(row));
    }

    std::size_t column(const std::string& name) const {
        for (std::size_t i = 0; i < columns.size(); ++i)
            if (columns[i] == name) return i;
        throw InvalidArgument("ResultTable: no column '" + name + "'");
    }

    std::string csv() const {
        std::string s;
        for (std::size_t i = 0; i < columns.size(); ++i) s += (i ? "," : "") + columns[i];
        s += "\n";
        for (const auto& r : rows) {
            for (std::size_t i = 0; i < r.size(); ++i) s += (i ? "," : "") + detail::fmt(r[i]);
            s += "\n";
        }
        return s;
    }
};

struct Summary {
    std::vector<std::pair<std::string, std::string>> entries;
    void add(const std::string& k, double v) { entries.emplace_back(k, detail::fmt(v)); }
    void add(const std::string& k, const std::string& v) { entries.emplace_back(k, v); }
    std::string text() const {
        std::string s;
        for (const auto& [k, v] : entries) s += k + " = " + v + "\n";
        return s;
    }
    double number(const std::string& k) const {
        for (const auto& [key, v] : entries)
            if (key == k) return std::stod(v);
        throw InvalidArgument("Summary: no entry '" + k + "'");
    }
};

struct RunResult {
    ResultTable table;
    Summary summary;
};

// ---------------------------------------------------------------- helpers

namespace detail {

inline Config parse_configuration(const std::string& s) {
    if (s == "one-qubit") return Config::OneQubit;
    if (s == "spectator") return Config::Spectator;
    if (s == "separate") return Config::SeparateEnv;
    if (s == "joint") return Config::JointEnv;
    if (s == "n-qubit") return Config::NQubit;
    throw ConfigError("rmt.configuration: unknown '" + s + "'");
}

inline void need(bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
}

inline ModelSpec model_spec(const ExperimentConfig& c) {
    const auto& r = c.rmt;
    ModelSpec s;
    s.configuration = parse_configuration(r.configuration);
    s.num_qubits = r.num_qubits;
    need(r.n_env >= 2, "rmt.n_env: must be >= 2");
    need(r.n_env2 >= 0, "rmt.n_env2: must be >= 0");
    s.n_env = r.n_env;
    s.n_env2 = r.n_env2;
    s.ensemble = r.ensemble == "goe" ? Ensemble::GOE : Ensemble::GUE;
    s.unfold_environment = r.unfold;
    const int nc = central_qubits(s), nl = coupled_qubits(s);
    need(r.lambda.size() == 1 || static_cast<int>(r.lambda.size()) == nl,
         "rmt.lambda: give one value or one per coupled qubit (" + std::to_string(nl) + ")");
    need(r.delta.size() == 1 || static_cast<int>(r.delta.size()) == nc,
         "rmt.delta: give one value or one per central qubit (" + std::to_string(nc) + ")");
    for (double l : r.lambda) need(l >= 0.0, "rmt.lambda: must be >= 0");
    s.lambdas = r.lambda.size() == 1 ? std::vector<double>(static_cast<std::size_t>(nl), r.lambda[0]) : r.lambda;
    s.deltas = r.delta.size() == 1 ? std::vector<double>(static_cast<std::size_t>(nc), r.delta[0]) : r.delta;
    s.seed = c.seed;
    return s;
}

inline CentralState central_state(const ExperimentConfig& c, int n) {
    const auto& r = c.rmt;
    if (r.state == "bell") {
        need(n == 2, "rmt.state: bell needs two central qubits");
        return CentralState::of(bell_state());
    }
    if (r.state == "ghz" || r.state == "w") {
        StateParams p;
        p.n = n;
        return CentralState::of(canonical_state(r.state == "ghz" ? StateKind::GHZ : StateKind::W, p));
    }
    need(n <= 2, "rmt.state: parametrized states exist for one or two qubits; use ghz or w");
    if (r.state == "random-gamma") {
        need(r.ensemble == "goe", "rmt.state: random-gamma applies to the GOE form");
        return CentralState::goe_random(r.theta);
    }
    return r.ensemble == "goe" ? CentralState::goe(r.theta, r.gamma) : CentralState::gue(r.theta, r.phi);
}

inline double tau_h_of(Eigen::Index n_env) { return semicircle_heisenberg_time(static_cast<double>(n_env)); }

// Single-qubit purities of a pure n-qubit state.
inline std::vector<double> single_qubit_purities(const CVec& psi, int n) {
    std::vector<double> p;
    for (int q = 0; q < n; ++q)
        p.push_back(purity(partial_trace(psi, n, SubsystemMask(std::uint64_t{1} << q, n))));
    return p;
}

struct Analytic {
    LRConfig lr;
    InitParams params;
    double p_inf = nan;
    double c0 = 1.0;
};

inline Analytic analytic_setup(const ExperimentConfig& c, const ModelSpec& s, const CentralState& cs) {
    Analytic a;
    auto& lr = a.lr;
    lr.configuration = s.configuration;
    const int beta = beta_of(s.ensemble);
    lr.betas = {beta};
    lr.tau_h = {tau_h_of(s.n_env)};
    if (s.configuration == Config::SeparateEnv) {
        lr.betas.push_back(beta);
        lr.tau_h.push_back(tau_h_of(second_env(s)));
    }
    lr.lambdas = s.lambdas;
    const int n = central_qubits(s);
    switch (cs.form) {
        case CentralForm::GUEForm: a.params = cs.params; break;
        case CentralForm::GOEForm: a.params = cs.params; break;
        case CentralForm::GOERandomGamma:
            // the purity is affine in exp(-2 i eta); the uniform Bloch average of cos(2 gamma) is 1/3
            a.params = cs.params;
            a.params.eta = 0.5 * std::acos(1.0 / 3.0);
            break;
        case CentralForm::Fixed: {
            const auto ps = single_qubit_purities(cs.fixed, n);
            if (s.configuration == Config::NQubit) {
                lr.p_init = ps;
            } else if (n == 2) {
                // theta from the Schmidt weights; the Bell state has theta = pi/4
                const double lam = std::clamp(0.5 * (1.0 + std::sqrt(std::max(0.0, 2.0 * ps[0] - 1.0))), 0.5, 1.0);
                a.params.theta = std::acos(std::sqrt(lam));
            }
            a.params.phi = s.ensemble == Ensemble::GOE ? pi / 4 : 0.0;
            break;
        }
    }
    a.params.delta = delta_of(s, 0);
    lr.delta2 = n >= 2 ? delta_of(s, 1) : 0.0;
    if (n == 2) {
        Rng r0(0);
        a.c0 = concurrence_pure(StateVector(central_vector(cs, 2, r0)));
    }
    if (s.configuration != Config::NQubit)
        a.p_inf = std::isnan(c.rmt.p_infinity) ? default_p_infinity(s.configuration, a.params.theta) : c.rmt.p_infinity;
    else
        a.p_inf = c.rmt.p_infinity;
    return a;
}

inline std::vector<double> time_grid(const ExperimentConfig& c, double tau_h) {
    need(c.time.points >= 2, "time.points: must be >= 2");
    need(c.time.t_max > 0.0, "time.t_max: must be > 0");
    const double tmax = c.time.unit == "tauh" ? c.time.t_max * tau_h : c.time.t_max;
    std::vector<double> t(static_cast<std::size_t>(c.time.points));
    for (std::size_t k = 0; k < t.size(); ++k) t[k] = tmax * double(k) / double(t.size() - 1);
    return t;
}

inline Field field_of(const std::string& key, const std::vector<double>& v) {
    need(v.size() == 3, key + ": expected three components");
    return {v[0], v[1], v[2]};
}

struct KickChoice {
    Field b;
    double J;
};

inline KickChoice kick_preset(const std::string& key, const std::string& name, const std::vector<double>& custom,
                              double j_override) {
    KickChoice k{presets::chaotic, 1.0};
    if (name == "chaotic") k = {presets::chaotic, 1.0};
    else if (name == "chaotic-alt") k = {presets::chaotic_alt, presets::chaotic_alt_J};
    else if (name == "integrable") k = {presets::integrable, 1.0};
    else if (name == "intermediate") k = {presets::intermediate, 1.0};
    else if (name == "memory-chaotic") k = {presets::memory_chaotic, 1.0};
    else if (name == "custom") k = {field_of(key, custom), 1.0};
    else throw ConfigError(key + ": unknown kick preset '" + name + "'");
    if (!std::isnan(j_override)) k.J = j_override;
    return k;
}

// Sweep assignments: each entry rewrites the config for one series.
inline std::vector<std::pair<double, ExperimentConfig>> sweep_series(const ExperimentConfig& c) {
    std::vector<std::pair<double, ExperimentConfig>> out;
    if (c.rmt.sweep == "none") {
        out.emplace_back(nan, c);
        return out;
    }
    need(!c.rmt.sweep_values.empty(), "rmt.sweep_values: empty sweep");
    for (double v : c.rmt.sweep_values) {
        ExperimentConfig x = c;
        if (c.rmt.sweep == "delta") x.rmt.delta = {v};
        if (c.rmt.sweep == "theta") x.rmt.theta = v;
        if (c.rmt.sweep == "lambda") x.rmt.lambda = {v};
        out.emplace_back(v, std::move(x));
    }
    return out;
}

inline void check_counts(const ExperimentConfig& c) {
    need(c.threads >= 1, "threads: must be >= 1");
    need(c.rmt.n_hamiltonians >= 1, "rmt.n_hamiltonians: must be >= 1");
    need(c.rmt.n_initials >= 1, "rmt.n_initials: must be >= 1");
}

inline ConcurrenceMode concurrence_mode(const std::string& s) {
    if (s == "linear") return ConcurrenceMode::Linear;
    if (s == "werner-c0") return ConcurrenceMode::WernerC0;
    return ConcurrenceMode::Werner;
}

// Slope of 1 - P against t on the first quarter of the grid.
inline double early_slope(const std::vector<double>& t, const std::vector<double>& p) {
    std::vector<double> x, y;
    for (std::size_t i = 0; i < t.size() && i <= t.size() / 4; ++i) x.push_back(t[i]), y.push_back(1.0 - p[i]);
    if (x.size() < 2) return nan;
    return fit_line(x, y).coefficients[1];
}

}  // namespace detail

// ---------------------------------------------------------------- runners

inline RunResult run_rmt_decay(const ExperimentConfig& cfg) {
    RunResult res;
    res.table.columns = {"t",      "P_mean", "P_std",      "C_mean", "C_std",  "S_mean", "D_mean",
                         "analytic_P", "elr_P", "analytic_C", "delta", "theta", "lambda"};
    Rng master(cfg.seed);
    std::size_t series = 0;
    for (const auto& [value, c] : detail::sweep_series(cfg)) {
        const ModelSpec spec = detail::model_spec(c);
        validate(spec);
        const int n = central_qubits(spec);
        const CentralState cs = detail::central_state(c, n);
        const auto times = detail::time_grid(c, detail::tau_h_of(spec.n_env));
        Rng rng = master.substream(series++);
        MonteCarloOptions opt;
        opt.threads = c.threads;
        const auto mc = monte_carlo(spec, cs, times, c.rmt.n_hamiltonians, c.rmt.n_initials, rng, opt);
        const auto a = detail::analytic_setup(c, spec, cs);
        std::vector<double> p_lr(times.size());
        for (std::size_t i = 0; i < times.size(); ++i) p_lr[i] = purity_lr(a.lr, a.params, times[i]);
        std::vector<double> c_lr(times.size(), nan);
        if (n == 2 && !std::isnan(a.p_inf))
            c_lr = concurrence_prediction(times, p_lr, detail::concurrence_mode(c.rmt.concurrence_mode), a.p_inf, a.c0)
                       .concurrence;
        const auto& m = mc.mean;
        for (std::size_t i = 0; i < times.size(); ++i)
            res.table.add({times[i], m.purity[i], m.purity_std[i], m.concurrence[i], m.concurrence_std[i], m.entropy[i],
                           m.D[i], p_lr[i], std::isnan(a.p_inf) ? nan : exponentiate(p_lr[i], a.p_inf), c_lr[i],
                           spec.deltas[0], c.rmt.theta, spec.lambdas[0]});
        const std::string tag = std::isnan(value) ? "" : "[" + cfg.rmt.sweep + "=" + detail::fmt(value) + "]";
        res.summary.add("tau_h" + tag, detail::tau_h_of(spec.n_env));
        res.summary.add("realizations" + tag, static_cast<double>(m.realizations));
        res.summary.add("early_slope_mc" + tag, detail::early_slope(times, m.purity));
        res.summary.add("early_slope_lr" + tag, detail::early_slope(times, p_lr));
    }
    return res;
}

inline RunResult run_rmt_cp(const ExperimentConfig& cfg) {
    RunResult res;
    res.table.columns = {"P", "C_mean", "count", "werner_C", "lambda"};
    Rng master(cfg.seed);
    std::size_t series = 0;
    for (const auto& [value, c] : detail::sweep_series(cfg)) {
        const ModelSpec spec = detail::model_spec(c);
        detail::need(central_qubits(spec) == 2, "rmt.configuration: CP curves need two central qubits");
        validate(spec);
        const CentralState cs = detail::central_state(c, 2);
        const auto times = detail::time_grid(c, detail::tau_h_of(spec.n_env));
        Rng rng = master.substream(series++);
        const CPCurve curve =
            cp_curve(spec, cs, times, c.rmt.n_hamiltonians, c.rmt.n_initials, rng, c.rmt.cp_bin, c.threads);
        for (const auto& p : curve.points)
            res.table.add({p.purity, p.concurrence, static_cast<double>(p.count), werner_curve(p.purity), spec.lambdas[0]});
        const std::string tag = "[lambda=" + detail::fmt(spec.lambdas[0]) + "]";
        res.summary.add("cp_distance" + tag, cp_distance(curve, [](double p) { return werner_curve(p); }));
    }
    return res;
}

inline RunResult run_rmt_sigma(const ExperimentConfig& c) {
    RunResult res;
    res.table.columns = {"t", "n_env", "P_mean", "P_std", "analytic_P", "sigma_analytic"};
    detail::need(!c.rmt.n_envs.empty(), "rmt.n_envs: empty");
    Rng master(c.seed);
    std::vector<double> log_n, log_s;
    for (std::size_t k = 0; k < c.rmt.n_envs.size(); ++k) {
        ExperimentConfig x = c;
        x.rmt.n_env = static_cast<long>(c.rmt.n_envs[k]);
        const ModelSpec spec = detail::model_spec(x);
        validate(spec);
        const CentralState cs = detail::central_state(x, central_qubits(spec));
        const double th = detail::tau_h_of(spec.n_env);
        auto times = detail::time_grid(x, th);
        times.push_back(c.rmt.sigma_t);
        Rng rng = master.substream(k);
        MonteCarloOptions opt;
        opt.threads = c.threads;
        const auto mc = monte_carlo(spec, cs, times, x.rmt.n_hamiltonians, x.rmt.n_initials, rng, opt);
        const auto a = detail::analytic_setup(x, spec, cs);
        const bool has_sigma = cs.form == CentralForm::GOERandomGamma && a.params.delta * th <= 0.1 &&
                               (spec.configuration == Config::OneQubit || spec.configuration == Config::Spectator);
        for (std::size_t i = 0; i + 1 < times.size(); ++i)
            res.table.add({times[i], double(spec.n_env), mc.mean.purity[i], mc.mean.purity_std[i],
                           purity_lr(a.lr, a.params, times[i]),
                           has_sigma ? sigma_purity(a.lr, a.params, times[i]) : nan});
        const double s_ref = mc.mean.purity_std.back();
        res.summary.add("sigma_at_t_ref[n_env=" + std::to_string(spec.n_env) + "]", s_ref);
        log_n.push_back(std::log(double(spec.n_env)));
        log_s.push_back(std::log(s_ref));
    }
    if (log_n.size() >= 2) res.summary.add("loglog_slope_sigma_vs_n_env", fit_line(log_n, log_s).coefficients[1]);
    res.summary.add("t_ref", c.rmt.sigma_t);
    return res;
}

inline RunResult run_unitality(const ExperimentConfig& c) {
    RunResult res;
    res.table.columns = {"t", "n_env", "distance"};
    detail::need(!c.rmt.n_envs.empty(), "rmt.n_envs: empty");
    ModelSpec spec = detail::model_spec(c);
    std::vector<Eigen::Index> ns;
    for (double v : c.rmt.n_envs) {
        spec.n_env = static_cast<Eigen::Index>(v);
        validate(spec);
        ns.push_back(spec.n_env);
    }
    const auto times = detail::time_grid(c, detail::tau_h_of(ns.front()));
    Rng rng(c.seed);
    const auto u = unitality_experiment(spec, times, ns, c.rmt.n_hamiltonians, c.rmt.n_initials, rng);
    std::vector<double> log_n, log_d;
    for (std::size_t k = 0; k < ns.size(); ++k) {
        for (std::size_t i = 0; i < times.size(); ++i) res.table.add({times[i], double(ns[k]), u.distance[k][i]});
        res.summary.add("distance_final[n_env=" + std::to_string(ns[k]) + "]", u.distance[k].back());
        log_n.push_back(std::log(double(ns[k])));
        log_d.push_back(std::log(std::max(u.distance[k].back(), 1e-300)));
    }
    if (ns.size() >= 2) res.summary.add("loglog_slope_distance_vs_n_env", fit_line(log_n, log_d).coefficients[1]);
    return res;
}

// ---- kicked Ising

struct KIRun {
    KISystem system;
    std::vector<int> steps;
    std::vector<double> purity, purity_std, concurrence, concurrence_std, entropy, D;
    std::vector<std::pair<double, double>> cp_samples;  // (C, P) of every realization and step
};

inline KISystem ki_system(const ExperimentConfig& c) {
    const auto& q = c.ki;
    detail::need(q.q_e >= 4, "ki.q_e: must be >= 4");
    if (q.q_e + 2 > 24)
        throw ResourceRefusal("ki.q_e: " + std::to_string(q.q_e + 2) + " spins need " +
                              std::to_string((std::size_t{16} << (q.q_e + 2)) >> 20) + " MiB per state; cap is 24 spins");
    const auto k = detail::kick_preset("ki.kick", q.kick, q.b_e, q.j_e);
    Field bc{0.0, 0.0, 0.0};
    if (q.central_kick == "same") bc = k.b;
    if (q.central_kick == "custom") bc = detail::field_of("ki.b_c", q.b_c);
    detail::need(q.j_prime >= 0.0, "ki.j_prime: must be >= 0");
    return build_env_config(parse_env_kind(q.env), q.q_e, q.j_prime, bc, k.b, k.J);
}

inline CVec ki_environment_state(const EnvConfig& env, Rng& rng) {
    if (env.kind == EnvKind::C || env.kind == EnvKind::F) {
        const Eigen::Index h = Eigen::Index{1} << (env.q_e / 2);
        const CVec a = random_vector(h, rng);
        return kron_low(a, random_vector(h, rng));
    }
    return random_vector(Eigen::Index{1} << env.q_e, rng);
}

inline KIRun run_ki_trajectories(const ExperimentConfig& c) {
    const auto& q = c.ki;
    detail::need(q.steps >= 1 && q.stride >= 1, "ki.steps and ki.stride: must be >= 1");
    detail::need(q.n_initials >= 1, "ki.n_initials: must be >= 1");
    detail::need(c.threads >= 1, "threads: must be >= 1");
    KIRun run;
    run.system = ki_system(c);
    CVec central(4);
    if (q.state == "bell")
        central = bell_state().amplitudes();
    else
        central << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0), 0.0, 0.0;
    std::vector<KITrajectory> trs(static_cast<std::size_t>(q.n_initials));
    const Rng master(c.seed);
    qdeco::detail::parallel_for(trs.size(), c.threads, [&](std::size_t i) {
        Rng r = master.substream(i);
        trs[i] = evolve_ki(run.system.model, kron_low(central, ki_environment_state(run.system.env, r)), q.steps, 2,
                           q.stride);
    });
    WelfordSeries p, cc, s, d;
    for (const auto& tr : trs) {
        p.add(tr.purity), cc.add(tr.concurrence), s.add(tr.entropy), d.add(tr.D);
        for (std::size_t k = 0; k < tr.purity.size(); ++k) run.cp_samples.emplace_back(tr.concurrence[k], tr.purity[k]);
    }
    run.steps = trs[0].steps;
    run.purity = p.mean(), run.purity_std = p.stddev();
    run.concurrence = cc.mean(), run.concurrence_std = cc.stddev();
    run.entropy = s.mean(), run.D = d.mean();
    return run;
}

struct KIFits {
    double quad_ratio = nan;        // early (1 - P) / (2 J_c^2 t^2)
    double alpha = nan;             // least squares against the b2-free formula
    double chi2_linear = nan;       // a + b t on the fit window
    double chi2_quadratic = nan;    // a + c t^2 on the fit window
    double revival_fraction = nan;  // (P_rec - P_min) / (1 - P_min)
};

inline KIFits ki_fits(const ExperimentConfig& c, const KIRun& run) {
    KIFits f;
    const auto& env = run.system.env;
    const double jc2 = env.J_ce * env.J_ce;
    std::vector<double> xe, ye;
    for (std::size_t i = 1; i < run.steps.size() && run.steps[i] <= 10; ++i)
        xe.push_back(run.steps[i]), ye.push_back(1.0 - run.purity[i]);
    if (!xe.empty() && jc2 > 0) f.quad_ratio = least_squares(xe, ye, [](double t) { return t * t; }).coefficients[0] / (2 * jc2);

    std::vector<double> x, y;
    const double t_hi = c.ki.fit_t_max_frac * env.tau_h_estimate;
    for (std::size_t i = 0; i < run.steps.size(); ++i)
        if (run.steps[i] >= c.ki.fit_t_min && run.steps[i] <= t_hi) x.push_back(run.steps[i]), y.push_back(1.0 - run.purity[i]);
    if (x.size() >= 3 && env.J_ce_prime > 0) {
        const double k = env.J_ce_prime * env.J_ce_prime / env.q_e, th = env.tau_h_estimate;
        f.alpha = least_squares(x, y, [&](double t) { return k * (3.0 * t * th + 4.0 * t * t / th); }).coefficients[0];
        f.chi2_linear = fit_line(x, y).chi2;
        f.chi2_quadratic = least_squares(x, y, [](double) { return 1.0; }, [](double t) { return t * t; }).chi2;
    }
    std::size_t imin = 1;
    for (std::size_t i = 1; i < run.purity.size(); ++i) {
        if (run.purity[i] < run.purity[imin]) imin = i;
        if (run.purity[i] > run.purity[imin] + 0.5 * (1.0 - run.purity[imin])) break;
    }
    if (imin < run.purity.size() && run.purity[imin] < 1.0) {
        double pmax = run.purity[imin];
        for (std::size_t i = imin; i < run.purity.size(); ++i) pmax = std::max(pmax, run.purity[i]);
        f.revival_fraction = (pmax - run.purity[imin]) / (1.0 - run.purity[imin]);
    }
    return f;
}

inline void ki_summary(Summary& s, const KIRun& run, const KIFits& f) {
    const auto& env = run.system.env;
    s.add("env", std::string(1, env_letter(env.kind)));
    s.add("configuration", to_string(env.configuration));
    s.add("q_e", static_cast<double>(env.q_e));
    s.add("J_ce_prime", env.J_ce_prime);
    s.add("J_ce", env.J_ce);
    s.add("tau_h_estimate", env.tau_h_estimate);
    s.add("early_quadratic_ratio", f.quad_ratio);
    s.add("alpha_fit", f.alpha);
    s.add("chi2_linear", f.chi2_linear);
    s.add("chi2_quadratic", f.chi2_quadratic);
    s.add("revival_fraction", f.revival_fraction);
}

inline RunResult run_ki_decay(const ExperimentConfig& c) {
    RunResult res;
    res.table.columns = {"t",      "P_mean",     "P_std", "C_mean",     "C_std", "S_mean",
                         "D_mean", "analytic_P", "elr_P", "analytic_C", "analytic_P_nob2"};
    const KIRun run = run_ki_trajectories(c);
    const auto& env = run.system.env;
    const double p_inf = default_p_infinity(env.configuration, pi / 4);
    for (std::size_t i = 0; i < run.steps.size(); ++i) {
        const double t = run.steps[i];
        const double pa = rmtki_prediction(t, env.J_ce_prime, env.q_e, env.tau_h_estimate, c.ki.alpha, true);
        res.table.add({t, run.purity[i], run.purity_std[i], run.concurrence[i], run.concurrence_std[i], run.entropy[i],
                       run.D[i], pa, exponentiate(pa, p_inf), nan,
                       rmtki_prediction(t, env.J_ce_prime, env.q_e, env.tau_h_estimate, c.ki.alpha, false)});
    }
    ki_summary(res.summary, run, ki_fits(c, run));
    return res;
}

inline RunResult run_ki_cp(const ExperimentConfig& c) {
    RunResult res;
    res.table.columns = {"P", "C_mean", "count", "werner_C"};
    const KIRun run = run_ki_trajectories(c);
    CPBinner b(c.ki.cp_bin);
    for (const auto& [cc, p] : run.cp_samples) b.add(cc, p);
    const CPCurve curve = b.curve();
    for (const auto& p : curve.points)
        res.table.add({p.purity, p.concurrence, static_cast<double>(p.count), werner_curve(p.purity)});
    ki_summary(res.summary, run, ki_fits(c, run));
    res.summary.add("cp_distance", cp_distance(curve, [](double p) { return werner_curve(p); }));
    return res;
}

inline RunResult run_ki_vs_rmt(const ExperimentConfig& c) {
    RunResult res;
    res.table.columns = {"t", "P_mean", "P_std", "rmtki_P", "rmtki_P_nob2"};
    const KIRun run = run_ki_trajectories(c);
    const auto& env = run.system.env;
    for (std::size_t i = 0; i < run.steps.size(); ++i) {
        const double t = run.steps[i];
        res.table.add({t, run.purity[i], run.purity_std[i],
                       rmtki_prediction(t, env.J_ce_prime, env.q_e, env.tau_h_estimate, c.ki.alpha, true),
                       rmtki_prediction(t, env.J_ce_prime, env.q_e, env.tau_h_estimate, c.ki.alpha, false)});
    }
    const KIFits f = ki_fits(c, run);
    ki_summary(res.summary, run, f);
    res.summary.add("fit_window", detail::fmt(c.ki.fit_t_min) + " .. " +
                                      detail::fmt(c.ki.fit_t_max_frac * env.tau_h_estimate));
    return res;
}

// ---- n-qubit memories

struct SumRuleRun {
    std::vector<int> steps;
    std::vector<double> full;
    std::vector<std::vector<double>> spectator;  // [qubit][step]
};

inline SumRuleRun run_memory_ki(const ExperimentConfig& c) {
    const auto& m = c.memory;
    detail::need(m.n >= 1 && m.n <= 6, "memory.n: must lie in 1..6");
    detail::need(static_cast<int>(m.positions.size()) == m.n, "memory.positions: one position per memory qubit");
    detail::need(m.steps >= 1 && m.n_initials >= 1, "memory.steps and memory.n_initials: must be >= 1");
    if (m.ring + m.n > 24) throw ResourceRefusal("memory: ring + n exceeds the 24-spin cap");
    std::vector<int> pos;
    for (double p : m.positions) pos.push_back(static_cast<int>(p));
    const auto k = detail::kick_preset("memory.kick", m.kick, {}, m.j);
    const KIModel model = build_memory_model(m.ring, m.n, pos, m.lambda, k.b, k.J, m.axis == "x" ? Axis::X : Axis::Z);
    StateParams sp;
    sp.n = m.n;
    const CVec mem = m.n == 1 ? CVec(CVec::Unit(2, 0))
                              : canonical_state(m.state == "ghz" ? StateKind::GHZ : StateKind::W, sp).amplitudes();
    const std::size_t runs = static_cast<std::size_t>(m.n + 1);
    const std::size_t ni = static_cast<std::size_t>(m.n_initials);
    std::vector<std::vector<double>> purity(runs * ni);
    std::vector<int> steps;
    const Rng master(c.seed);
    qdeco::detail::parallel_for(runs * ni, c.threads, [&](std::size_t u) {
        const std::size_t r = u / ni, i = u % ni;
        Rng rng = master.substream(i);  // same environment state for the full and spectator runs
        const CVec psi = kron_low(mem, random_vector(Eigen::Index{1} << m.ring, rng));
        const KIModel mdl = r == 0 ? model : spectator_of(model, static_cast<int>(r - 1));
        purity[u] = evolve_ki(mdl, psi, m.steps, m.n, 1).purity;
    });
    SumRuleRun out;
    for (int s = 0; s <= m.steps; ++s) out.steps.push_back(s);
    auto mean = [&](std::size_t r) {
        std::vector<double> v(out.steps.size(), 0.0);
        for (std::size_t i = 0; i < ni; ++i)
            for (std::size_t s = 0; s < v.size(); ++s) v[s] += purity[r * ni + i][s] / double(ni);
        return v;
    };
    out.full = mean(0);
    for (std::size_t r = 1; r < runs; ++r) out.spectator.push_back(mean(r));
    return out;
}

inline double max_relative_residual(const std::vector<double>& full, const std::vector<double>& rule, double max_loss) {
    double worst = 0.0;
    for (std::size_t s = 1; s < full.size(); ++s) {
        const double loss = 1.0 - full[s];
        if (loss > max_loss) break;
        if (loss <= 1e-12) continue;
        worst = std::max(worst, std::abs(full[s] - rule[s]) / loss);
    }
    return worst;
}

inline RunResult run_memory_sumrule(const ExperimentConfig& c) {
    RunResult res;
    if (c.memory.mode == "rmt") {
        ExperimentConfig x = c;
        x.rmt.configuration = "n-qubit";
        x.rmt.num_qubits = c.memory.n;
        x.rmt.state = c.memory.state;
        res.table.columns = {"t", "P_mean", "P_std", "analytic_P", "residual"};
        const ModelSpec spec = detail::model_spec(x);
        validate(spec);
        const CentralState cs = detail::central_state(x, spec.num_qubits);
        const auto a = detail::analytic_setup(x, spec, cs);
        const auto times = detail::time_grid(x, detail::tau_h_of(spec.n_env));
        Rng rng(c.seed);
        MonteCarloOptions opt;
        opt.threads = c.threads;
        const auto mc = monte_carlo(spec, cs, times, x.rmt.n_hamiltonians, x.rmt.n_initials, rng, opt);
        std::vector<double> lr;
        for (std::size_t i = 0; i < times.size(); ++i) {
            lr.push_back(sepgen(times[i], detail::tau_h_of(spec.n_env), spec.lambdas, a.lr.p_init));
            res.table.add({times[i], mc.mean.purity[i], mc.mean.purity_std[i], lr.back(), mc.mean.purity[i] - lr.back()});
        }
        res.summary.add("max_relative_residual", max_relative_residual(mc.mean.purity, lr, c.memory.max_loss));
        res.summary.add("tau_h", detail::tau_h_of(spec.n_env));
        return res;
    }
    const SumRuleRun run = run_memory_ki(c);
    const auto rule = nqubit_sum_rule(run.spectator);
    res.table.columns = {"t", "P_full", "P_sumrule", "residual", "rel_residual"};
    for (std::size_t i = 0; i < run.spectator.size(); ++i) res.table.columns.push_back("P_sp_" + std::to_string(i + 1));
    for (std::size_t s = 0; s < run.steps.size(); ++s) {
        const double loss = 1.0 - run.full[s];
        std::vector<double> row{double(run.steps[s]), run.full[s], rule[s], std::abs(run.full[s] - rule[s]),
                                loss > 1e-12 ? std::abs(run.full[s] - rule[s]) / loss : 0.0};
        for (const auto& sp : run.spectator) row.push_back(sp[s]);
        res.table.add(std::move(row));
    }
    res.summary.add("max_relative_residual", max_relative_residual(run.full, rule, c.memory.max_loss));
    res.summary.add("final_loss", 1.0 - run.full.back());
    return res;
}

// ---- spectra

inline RunResult run_spectral_stats(const ExperimentConfig& c) {
    const auto& sp = c.spectral;
    detail::need(sp.bins >= 1 && sp.s_max > 0, "spectral.bins and spectral.s_max: must be positive");
    detail::need(sp.bulk > 0 && sp.bulk <= 1, "spectral.bulk: must lie in (0, 1]");
    std::vector<double> spacings;
    Rng master(c.seed);
    if (sp.source == "gue" || sp.source == "goe") {
        detail::need(sp.dim >= 8 && sp.draws >= 1, "spectral.dim >= 8 and spectral.draws >= 1 required");
        if (sp.dim > 4096) throw ResourceRefusal("spectral.dim: dense sampling capped at 4096");
        for (int d = 0; d < sp.draws; ++d) {
            Rng r = master.substream(static_cast<std::uint64_t>(d));
            EnsembleSpec es{sp.source == "goe" ? Ensemble::GOE : Ensemble::GUE, sp.dim};
            const Spectrum s = sample_spectrum(es, r);
            const RVec u = unfold(s.energies).values;
            const auto part = nearest_spacings(bulk(u, sp.bulk));
            spacings.insert(spacings.end(), part.begin(), part.end());
        }
    } else {
        if (sp.L > 12) throw ResourceRefusal("spectral.L: dense Floquet spectra are capped at L = 12");
        const std::string name = sp.source.substr(3);
        const auto k = detail::kick_preset("spectral.source", name, {}, nan);
        const RVec phases = floquet_spectrum(symmetry_broken_ring(sp.L, k.J, k.b));
        // eigenphases are uniformly dense on the circle: unfold by the mean spacing
        RVec u = phases * (double(phases.size()) / (2.0 * pi));
        spacings = nearest_spacings(u);
        const double wrap = u(0) + double(u.size()) - u(u.size() - 1);
        spacings.push_back(wrap);
    }
    detail::need(spacings.size() >= 50, "spectral: fewer than 50 spacings");
    const double omega = brody_fit(spacings);
    RunResult res;
    res.table.columns = {"s", "density", "brody", "poisson", "wigner_goe", "wigner_gue"};
    const double w = sp.s_max / sp.bins;
    std::vector<double> hist(static_cast<std::size_t>(sp.bins), 0.0);
    for (double s : spacings)
        if (s >= 0 && s < sp.s_max) hist[static_cast<std::size_t>(s / w)] += 1.0;
    for (int b = 0; b < sp.bins; ++b) {
        const double s = (b + 0.5) * w;
        res.table.add({s, hist[static_cast<std::size_t>(b)] / (double(spacings.size()) * w), brody_density(s, omega),
                       std::exp(-s), brody_density(s, 1.0), 32.0 / (pi * pi) * s * s * std::exp(-4.0 * s * s / pi)});
    }
    res.summary.add("source", sp.source);
    res.summary.add("spacings", static_cast<double>(spacings.size()));
    res.summary.add("mean_spacing", mean_of(spacings));
    res.summary.add("brody_omega", omega);
    return res;
}

inline void validate(const ExperimentConfig& c) {
    detail::check_counts(c);
    detail::need(c.time.points >= 2 && c.time.points <= 100000, "time.points: must lie in 2..100000");
}

inline RunResult run(const ExperimentConfig& c) {
    validate(c);
    RunResult r;
    switch (c.kind) {
        case Kind::RmtDecay: r = run_rmt_decay(c); break;
        case Kind::RmtCp: r = run_rmt_cp(c); break;
        case Kind::RmtSigma: r = run_rmt_sigma(c); break;
        case Kind::Unitality: r = run_unitality(c); break;
        case Kind::KiDecay: r = run_ki_decay(c); break;
        case Kind::KiCp: r = run_ki_cp(c); break;
        case Kind::KiVsRmt: r = run_ki_vs_rmt(c); break;
        case Kind::MemorySumrule: r = run_memory_sumrule(c); break;
        case Kind::SpectralStats: r = run_spectral_stats(c); break;
    }
    Summary s;
    s.add("kind", to_string(c.kind));
    s.add("preset", c.preset.empty() ? "none" : c.preset);
    s.add("seed", std::to_string(c.seed));
    if (!c.rmt.scaling_note.empty()) s.add("scaling", c.rmt.scaling_note);
    for (auto& e : r.summary.entries) s.entries.push_back(std::move(e));
    r.summary = std::move(s);
    return r;
}

}  // namespace qdeco::experiments
