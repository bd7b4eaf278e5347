#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mcmcdegen.hpp"

namespace md = mcmcdegen;
using md::json;

namespace {

struct Options {
    std::string config;
    std::uint64_t seed = 20240601;
    std::string out = "out";
    std::vector<int> n;
    int m = 200;
    int R = 50;
    std::vector<std::string> variant;
    std::vector<int> c;
    int p = 1;
    std::string scenario;
    std::string reference = "build";
    int threads = 0;
    std::string init = "reference";
    std::vector<std::string> transform;
    std::string data;
    bool no_stationarity = false;
    double sigma_alpha = 10.0;
    double sigma_beta = 10.0;
    int starts = 20;
    int reference_length = 2000;
    int reference_burn_in = 500;
    int reference_thin = 5;
};

template <class T>
void from_config(const json& cfg, const char* key, T& dst, const CLI::App* app, const char* flag) {
    if (!cfg.contains(key)) return;
    if (app && app->count(flag) > 0) return; // flags win
    try {
        dst = cfg.at(key).get<T>();
    } catch (const std::exception& e) {
        throw md::ConfigError(std::string("config key '") + key + "': " + e.what());
    }
}

template <class T>
void from_config_list(const json& cfg, const char* key, std::vector<T>& dst, const CLI::App* app, const char* flag) {
    if (!cfg.contains(key)) return;
    if (app && app->count(flag) > 0) return;
    const json& v = cfg.at(key);
    try {
        dst = v.is_array() ? v.get<std::vector<T>>() : std::vector<T>{v.get<T>()};
    } catch (const std::exception& e) {
        throw md::ConfigError(std::string("config key '") + key + "': " + e.what());
    }
}

void apply_config(Options& o, const CLI::App* app) {
    if (o.config.empty()) return;
    json cfg;
    try {
        cfg = json::parse(md::io::read_text(o.config));
    } catch (const md::Error&) {
        throw;
    } catch (const std::exception& e) {
        throw md::ConfigError("cannot parse config '" + o.config + "': " + e.what());
    }
    if (!cfg.is_object()) throw md::ConfigError("config must be a JSON object");
    from_config(cfg, "seed", o.seed, app, "--seed");
    from_config(cfg, "out", o.out, app, "--out");
    from_config_list(cfg, "n", o.n, app, "--n");
    from_config(cfg, "m", o.m, app, "--m");
    from_config(cfg, "R", o.R, app, "--R");
    from_config_list(cfg, "variant", o.variant, app, "--variant");
    from_config_list(cfg, "c", o.c, app, "--c");
    from_config(cfg, "p", o.p, app, "--p");
    from_config(cfg, "scenario", o.scenario, app, "--scenario");
    from_config(cfg, "reference", o.reference, app, "--reference");
    from_config(cfg, "threads", o.threads, app, "--threads");
    from_config(cfg, "init", o.init, app, "--init");
    from_config_list(cfg, "transform", o.transform, app, "--transform");
    from_config(cfg, "data", o.data, app, "--data");
    from_config(cfg, "sigma_alpha", o.sigma_alpha, app, "--sigma-alpha");
    from_config(cfg, "sigma_beta", o.sigma_beta, app, "--sigma-beta");
    from_config(cfg, "starts", o.starts, app, "--starts");
    from_config(cfg, "reference_length", o.reference_length, app, "--reference-length");
    from_config(cfg, "reference_burn_in", o.reference_burn_in, app, "--reference-burn-in");
    from_config(cfg, "reference_thin", o.reference_thin, app, "--reference-thin");
}

md::PriorSpec prior_of(const Options& o) {
    md::PriorSpec prior;
    prior.sigma_alpha = o.sigma_alpha;
    prior.sigma_beta = o.sigma_beta;
    prior.validate();
    return prior;
}

md::ReferenceOptions reference_options(const Options& o) {
    md::ReferenceOptions r{o.reference_length, o.reference_burn_in, o.reference_thin, 0, false, false, 1e-3, {}};
    return r;
}

int single(const std::vector<int>& v, int fallback, const char* what) {
    if (v.empty()) return fallback;
    if (v.size() != 1) throw md::ConfigError(std::string("this subcommand takes a single --") + what);
    return v.front();
}

md::Dataset load_or_generate(const Options& o, int c, int n) {
    if (!o.data.empty()) return md::io::read_dataset(o.data);
    md::ModelConfig cfg = md::model_config(c, o.p, prior_of(o));
    return md::sample_dataset(cfg, md::default_theta0(c, o.p), n, md::dataset_seed(o.seed, c, o.p, n, 0));
}

md::ReferencePosterior obtain_reference(const Options& o, const md::Dataset& data) {
    if (o.reference != "build") {
        if (!std::filesystem::exists(o.reference)) throw md::ConfigError("missing reference '" + o.reference + "'");
        md::ReferencePosterior r = md::io::read_reference(o.reference);
        if (r.n != data.n() || r.c != data.c || r.p != data.p()) {
            throw md::ConfigError("reference '" + o.reference + "' does not match the dataset shape");
        }
        return r;
    }
    md::ReferenceOptions opt = reference_options(o);
    opt.seed = md::reference_seed(o.seed, data.c, data.p(), data.n(), 0);
    return md::build_reference(data, md::model_config(data.c, data.p(), prior_of(o)), opt);
}

void write_simple_manifest(const Options& o, const std::string& id, const std::vector<std::string>& files,
                           json config, double seconds) {
    md::RunManifest m;
    config["seed"] = o.seed;
    m.config = std::move(config);
    md::CellRecord rec;
    rec.id = id;
    rec.status = "done";
    rec.seconds = seconds;
    rec.seeds.push_back(o.seed);
    rec.files = files;
    m.cells.push_back(rec);
    m.files = files;
    md::io::write_text(std::filesystem::path(o.out) / "manifest.json", md::io::dump(md::manifest_json(m)));
}

double elapsed(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

int cmd_gen_data(const Options& o) {
    const auto t0 = std::chrono::steady_clock::now();
    std::filesystem::create_directories(o.out);
    const int c = single(o.c, 2, "c");
    std::vector<std::string> files;
    for (int n : o.n.empty() ? std::vector<int>{100} : o.n) {
        const md::Dataset d = load_or_generate(o, c, n);
        const std::string f = "data_c" + std::to_string(c) + "_p" + std::to_string(o.p) + "_n" + std::to_string(n) + ".csv";
        md::io::write_dataset(d, std::filesystem::path(o.out) / f);
        files.push_back(f);
    }
    write_simple_manifest(o, "gen-data", files, {{"command", "gen-data"}, {"c", c}, {"p", o.p}, {"n", o.n}},
                          elapsed(t0));
    return 0;
}

int cmd_build_reference(const Options& o) {
    const auto t0 = std::chrono::steady_clock::now();
    std::filesystem::create_directories(o.out);
    const int c = single(o.c, 2, "c");
    const int n = single(o.n, 100, "n");
    const md::Dataset d = load_or_generate(o, c, n);
    md::ReferenceOptions opt = reference_options(o);
    opt.seed = md::reference_seed(o.seed, d.c, d.p(), d.n(), 0);
    opt.compute_bvm = true;
    opt.split_check = true;
    const md::ReferencePosterior r = md::build_reference(d, md::model_config(d.c, d.p(), prior_of(o)), opt);
    const std::string f = "reference_c" + std::to_string(d.c) + "_p" + std::to_string(d.p()) + "_n" +
                          std::to_string(d.n()) + ".csv";
    md::io::write_reference(r, std::filesystem::path(o.out) / f);
    write_simple_manifest(o, "build-reference", {f},
                          {{"command", "build-reference"}, {"c", c}, {"p", o.p}, {"n", n},
                           {"length", opt.length}, {"burn_in", opt.burn_in}, {"thin", opt.thin}},
                          elapsed(t0));
    return 0;
}

int cmd_run_chain(const Options& o) {
    const auto t0 = std::chrono::steady_clock::now();
    std::filesystem::create_directories(o.out);
    if (o.variant.size() > 1) throw md::ConfigError("run-chain takes a single --variant");
    const md::VariantId v = md::parse_variant(o.variant.empty() ? "beta" : o.variant.front());
    const int c = single(o.c, 2, "c");
    const int n = single(o.n, 100, "n");
    const md::Dataset d = load_or_generate(o, c, n);
    const md::PriorSpec prior = prior_of(o);
    md::InitPolicy init;
    if (o.init == "reference") {
        init = md::InitPolicy::from_reference(obtain_reference(o, d).sample);
    } else if (o.init == "fixed") {
        init = md::InitPolicy::fixed(d.true_theta ? *d.true_theta : md::default_theta0(d.c, d.p()));
    } else if (o.init == "prior") {
        init = md::InitPolicy::from_prior();
    } else {
        throw md::ConfigError("unknown --init '" + o.init + "' (expected reference, fixed or prior)");
    }
    std::vector<md::Transform> transforms;
    for (const auto& t : o.transform) transforms.push_back(md::parse_transform(t));
    if (transforms.empty()) transforms = {md::Transform::theta, md::Transform::g_theta};
    md::ChainTrace t = md::run_chain(v, d, prior, o.m, init, transforms,
                                     md::chain_stream(o.seed, v, d.c, d.p(), d.n(), 0));
    t.meta.dataset_ref = o.data.empty() ? "generated" : o.data;
    const std::string f = md::io::trace_filename(v, d.n(), 0);
    md::io::write_trace(t, std::filesystem::path(o.out) / f);
    write_simple_manifest(o, "run-chain", {f},
                          {{"command", "run-chain"}, {"variant", md::to_string(v)}, {"c", c}, {"p", o.p},
                           {"n", n}, {"m", o.m}, {"init", o.init}, {"reference", o.reference}},
                          elapsed(t0));
    return 0;
}

md::ExperimentPlan base_plan(const Options& o, md::Scenario s) {
    md::ExperimentPlan plan;
    plan.scenario = s;
    plan.seed = o.seed;
    plan.output_dir = o.out;
    plan.reference = o.reference;
    plan.threads = md::resolve_threads(o.threads);
    plan.starts = o.starts;
    plan.prior = prior_of(o);
    plan.reference_options = reference_options(o);
    if (o.reference != "build") throw md::ConfigError("grid scenarios build their references; use --reference build");
    return plan;
}

std::vector<md::VariantId> variants_of(const Options& o, std::vector<md::VariantId> fallback) {
    if (o.variant.empty()) return fallback;
    std::vector<md::VariantId> out;
    for (const auto& s : o.variant) out.push_back(md::parse_variant(s));
    return out;
}

int report_manifest(const md::RunManifest& m) {
    int failed = 0;
    for (const auto& c : m.cells) {
        if (c.status != "done") {
            ++failed;
            std::cerr << json{{"error", "cell-failed"}, {"cell", c.id}, {"message", c.error}}.dump() << "\n";
        }
    }
    return failed == 0 ? 0 : 1;
}

int cmd_table1(const Options& o) {
    md::ExperimentPlan plan = base_plan(o, md::Scenario::table1);
    const std::vector<int> ns = o.n.empty() ? std::vector<int>{100, 400, 1600} : o.n;
    const std::vector<int> cs = o.c.empty() ? std::vector<int>{2, 3, 4} : o.c;
    for (md::VariantId v :
         variants_of(o, {md::VariantId::null, md::VariantId::beta, md::VariantId::null_ma, md::VariantId::beta_ma})) {
        for (int c : cs) {
            for (int n : ns) plan.grid.push_back({v, c, o.p, n, 1, o.R});
        }
    }
    const md::RunManifest m = md::orchestrate(plan);
    std::cout << md::io::read_text(plan.output_dir / "table1.csv");
    return report_manifest(m);
}

int cmd_diagnose(const Options& o) {
    md::ExperimentPlan plan = base_plan(o, md::Scenario::diagnose);
    for (md::VariantId v : variants_of(o, {md::VariantId::beta})) {
        for (int c : o.c.empty() ? std::vector<int>{2} : o.c) {
            for (int n : o.n.empty() ? std::vector<int>{100} : o.n) plan.grid.push_back({v, c, o.p, n, o.m, o.R});
        }
    }
    return report_manifest(md::orchestrate(plan));
}

int cmd_figure(const Options& o) {
    md::ExperimentPlan plan = base_plan(o, md::parse_scenario(o.scenario.empty() ? "fig1" : o.scenario));
    if (plan.scenario != md::Scenario::fig1 && plan.scenario != md::Scenario::fig2 &&
        plan.scenario != md::Scenario::fig3) {
        throw md::ConfigError("figure needs --scenario fig1, fig2 or fig3");
    }
    return report_manifest(md::orchestrate(plan));
}

int cmd_verify(const Options& o) {
    const auto results = md::run_oracle_suite(o.seed, !o.no_stationarity, md::resolve_threads(o.threads));
    bool ok = true;
    for (const auto& r : results) {
        std::printf("%s  %s  (value %.3g, tolerance %.3g; %s)\n", r.pass ? "PASS" : "FAIL", r.name.c_str(), r.value,
                    r.tolerance, r.detail.c_str());
        ok = ok && r.pass;
    }
    return ok ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Gibbs sampler degeneracy experiments for cumulative probit models"};
    app.set_version_flag("--version", std::string(MCMCDEGEN_VERSION));
    app.require_subcommand(1);
    Options o;

    std::vector<CLI::App*> subs;
    auto add = [&](const std::string& name, const std::string& desc) {
        CLI::App* s = app.add_subcommand(name, desc);
        s->add_option("--config", o.config, "JSON configuration file; flags override its keys");
        s->add_option("--seed", o.seed, "master seed");
        s->add_option("--out", o.out, "output directory");
        s->add_option("--n", o.n, "sample sizes")->delimiter(',');
        s->add_option("--m", o.m, "chain length");
        s->add_option("--R", o.R, "replications");
        s->add_option("--variant", o.variant, "kernel variant(s)")->delimiter(',');
        s->add_option("--c", o.c, "number of categories")->delimiter(',');
        s->add_option("--p", o.p, "covariate dimension");
        s->add_option("--scenario", o.scenario, "fig1, fig2 or fig3");
        s->add_option("--reference", o.reference, "reference sample CSV or 'build'");
        s->add_option("--threads", o.threads, "worker threads (default MCMCDEGEN_THREADS or 1)");
        s->add_option("--init", o.init, "reference, fixed or prior");
        s->add_option("--transform", o.transform, "transforms to record")->delimiter(',');
        s->add_option("--data", o.data, "dataset CSV written by gen-data");
        s->add_option("--sigma-alpha", o.sigma_alpha, "prior scale of the cut points");
        s->add_option("--sigma-beta", o.sigma_beta, "prior scale of the slopes");
        s->add_option("--starts", o.starts, "start states per replication for the one-step statistic");
        s->add_option("--reference-length", o.reference_length, "reference chain length");
        s->add_option("--reference-burn-in", o.reference_burn_in, "reference chain burn-in");
        s->add_option("--reference-thin", o.reference_thin, "reference chain thinning");
        s->add_flag("--no-stationarity", o.no_stationarity, "verify: skip the stationarity checks");
        subs.push_back(s);
        return s;
    };
    add("gen-data", "simulate datasets");
    add("run-chain", "run one chain and write its trace");
    add("build-reference", "build a reference posterior sample");
    add("diagnose", "risk and one-step statistics on a grid");
    add("table1", "one-step statistic grid and X/O classification");
    add("figure", "trajectory figures");
    add("verify", "run the oracle suite");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << json{{"error", "usage"}, {"message", e.what()}}.dump() << "\n";
        return 2;
    }

    try {
        CLI::App* sub = nullptr;
        for (CLI::App* s : subs) {
            if (s->parsed()) sub = s;
        }
        apply_config(o, sub);
        const std::string name = sub->get_name();
        if (name == "gen-data") return cmd_gen_data(o);
        if (name == "run-chain") return cmd_run_chain(o);
        if (name == "build-reference") return cmd_build_reference(o);
        if (name == "diagnose") return cmd_diagnose(o);
        if (name == "table1") return cmd_table1(o);
        if (name == "figure") return cmd_figure(o);
        if (name == "verify") return cmd_verify(o);
        throw md::ConfigError("unknown subcommand");
    } catch (const md::Error& e) {
        std::cerr << json{{"error", e.kind()}, {"message", e.what()}}.dump() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << json{{"error", "internal"}, {"message", e.what()}}.dump() << "\n";
        return 1;
    }
}
