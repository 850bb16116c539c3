#include "qdeco/experiments.hpp"
#include "qdeco/runtime.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

namespace ex = qdeco::experiments;

namespace {

const char* schema(ex::Kind k) {
    switch (k) {
        case ex::Kind::RmtDecay:
            return "t,P_mean,P_std,C_mean,C_std,S_mean,D_mean,analytic_P,elr_P,analytic_C,delta,theta,lambda\n"
                   "  one block of rows per sweep value; analytic_P is the linear-response purity, elr_P its\n"
                   "  exponentiated form, analytic_C the concurrence prediction (NaN where undefined)";
        case ex::Kind::RmtCp:
            return "P,C_mean,count,werner_C,lambda\n"
                   "  averaged concurrence per purity bin; werner_C is the Werner curve at P";
        case ex::Kind::RmtSigma:
            return "t,n_env,P_mean,P_std,analytic_P,sigma_analytic\n"
                   "  one block per entry of rmt.n_envs; summary holds the log-log slope of P_std at rmt.sigma_t";
        case ex::Kind::Unitality:
            return "t,n_env,distance\n"
                   "  mean Bloch length of the decohered qubit from a maximally entangled start";
        case ex::Kind::KiDecay:
            return "t,P_mean,P_std,C_mean,C_std,S_mean,D_mean,analytic_P,elr_P,analytic_C,analytic_P_nob2\n"
                   "  t counts Floquet steps; analytic_P is the RMT prediction at ki.alpha";
        case ex::Kind::KiCp:
            return "P,C_mean,count,werner_C";
        case ex::Kind::KiVsRmt:
            return "t,P_mean,P_std,rmtki_P,rmtki_P_nob2\n"
                   "  summary holds alpha_fit, chi2_linear, chi2_quadratic over the fit window";
        case ex::Kind::MemorySumrule:
            return "ki mode:  t,P_full,P_sumrule,residual,rel_residual,P_sp_1..P_sp_n\n"
                   "rmt mode: t,P_mean,P_std,analytic_P,residual";
        case ex::Kind::SpectralStats:
            return "s,density,brody,poisson,wigner_goe,wigner_gue\n"
                   "  normalized spacing histogram; summary holds brody_omega and mean_spacing";
    }
    return "";
}

struct Flags {
    std::string config, out, preset;
    std::uint64_t seed = 0;
    int threads = 0;
    std::vector<std::string> sets;
};

void add_flags(CLI::App& app, Flags& f) {
    app.add_option("--config", f.config, "key = value config file");
    app.add_option("--seed", f.seed, "master seed (EXP_SEED)");
    app.add_option("--out", f.out, "output directory; CSV goes to stdout when absent (EXP_OUT)");
    app.add_option("--preset", f.preset, "named preset (EXP_PRESET)");
    app.add_option("--threads", f.threads, "worker threads (EXP_THREADS)");
    app.add_option("--set", f.sets, "override one key, e.g. --set rmt.lambda=0.02");
}

ex::ExperimentConfig assemble(const CLI::App& sub, const Flags& f, const std::string& kind) {
    std::string preset_name = f.preset;
    if (preset_name.empty())
        if (const char* v = std::getenv("EXP_PRESET")) preset_name = v;
    std::string config_path = f.config;
    if (config_path.empty())
        if (const char* v = std::getenv("EXP_CONFIG")) config_path = v;

    ex::ExperimentConfig c;
    if (!config_path.empty()) {
        ex::parse_config_file(c, config_path);
        if (preset_name.empty()) preset_name = c.preset;
    }
    if (!preset_name.empty()) {
        c = ex::preset(preset_name);
        if (!config_path.empty()) {
            ex::parse_config_file(c, config_path);
            c.preset = preset_name;
        }
    }
    ex::apply_environment(c);
    if (sub.count("--seed")) c.seed = f.seed;
    if (sub.count("--out")) c.out = f.out;
    if (sub.count("--threads")) c.threads = f.threads;
    for (const auto& s : f.sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw qdeco::ConfigError("--set: expected key=value, got '" + s + "'");
        ex::set_key(c, s.substr(0, eq), s.substr(eq + 1));
    }
    if (kind != "run") {
        const ex::Kind k = ex::parse_kind(kind);
        if (!preset_name.empty() && k != c.kind)
            throw qdeco::ConfigError(std::string("kind: preset '") + preset_name + "' runs " + ex::to_string(c.kind) +
                                     ", not " + kind);
        c.kind = k;
    }
    return c;
}

void emit(const ex::ExperimentConfig& c, const ex::RunResult& r) {
    const std::string summary = r.summary.text() + "\n# effective config\n" + ex::dump_config(c);
    if (c.out.empty()) {
        std::cout << r.table.csv();
        std::cerr << summary;
        return;
    }
    std::filesystem::create_directories(c.out);
    const std::filesystem::path dir(c.out);
    const std::string stem = ex::to_string(c.kind);
    std::ofstream(dir / (stem + ".csv")) << r.table.csv();
    std::ofstream(dir / (stem + "_summary.txt")) << summary;
    std::cerr << r.summary.text();
}

}  // namespace

int main(int argc, char** argv) {
    qdeco::pin_blas_kernels(argv);

    CLI::App app{"Decoherence experiments: random-matrix and kicked-Ising environments"};
    app.require_subcommand(1);
    Flags flags;
    std::vector<std::pair<CLI::App*, std::string>> subs;

    auto* run = app.add_subcommand("run", "run the experiment named by --preset or the config's kind key");
    add_flags(*run, flags);
    subs.emplace_back(run, "run");
    for (std::size_t i = 0; i < ex::kind_names.size(); ++i) {
        const auto k = static_cast<ex::Kind>(i);
        auto* s = app.add_subcommand(ex::kind_names[i], std::string("run ") + ex::kind_names[i]);
        s->footer(std::string("CSV columns:\n  ") + schema(k));
        add_flags(*s, flags);
        subs.emplace_back(s, ex::kind_names[i]);
    }
    auto* presets = app.add_subcommand("presets", "list preset names");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    if (presets->parsed()) {
        for (const auto& n : ex::preset_names()) std::cout << n << " (" << ex::to_string(ex::preset(n).kind) << ")\n";
        return 0;
    }
    try {
        for (auto& [sub, kind] : subs) {
            if (!sub->parsed()) continue;
            const ex::ExperimentConfig c = assemble(*sub, flags, kind);
            emit(c, ex::run(c));
        }
    } catch (const qdeco::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const qdeco::InvalidArgument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const qdeco::ResourceRefusal& e) {
        std::cerr << "refused: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
