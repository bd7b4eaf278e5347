#pragma once

#include <algorithm>
#include <charconv>
#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "asymptotics.hpp"
#include "diagnostics.hpp"
#include "errors.hpp"
#include "io.hpp"
#include "kernels.hpp"
#include "model.hpp"
#include "parallel.hpp"

#ifndef MCMCDEGEN_VERSION
#define MCMCDEGEN_VERSION "0.0.0"
#endif

namespace mcmcdegen {

namespace fs = std::filesystem;
using json = nlohmann::json;

enum class Scenario { fig1, fig2, fig3, table1, diagnose, custom };

inline std::string to_string(Scenario s) {
    switch (s) {
        case Scenario::fig1: return "fig1";
        case Scenario::fig2: return "fig2";
        case Scenario::fig3: return "fig3";
        case Scenario::table1: return "table1";
        case Scenario::diagnose: return "diagnose";
        case Scenario::custom: return "custom";
    }
    return "?";
}

inline Scenario parse_scenario(std::string_view s) {
    for (Scenario v : {Scenario::fig1, Scenario::fig2, Scenario::fig3, Scenario::table1, Scenario::diagnose,
                       Scenario::custom}) {
        if (s == to_string(v)) return v;
    }
    throw ConfigError("unknown scenario '" + std::string(s) + "'");
}

struct GridCell {
    VariantId variant = VariantId::beta;
    int c = 2;
    int p = 1;
    int n = 100;
    int m = 200;
    int R = 50;

    std::string id() const {
        return to_string(variant) + "_c" + std::to_string(c) + "_p" + std::to_string(p) + "_n" + std::to_string(n);
    }
};

struct ExperimentPlan {
    Scenario scenario = Scenario::table1;
    std::vector<GridCell> grid;
    std::uint64_t seed = 20240601;
    fs::path output_dir = "out";
    std::string reference = "build"; // "build" or a reference CSV path
    int threads = 1;
    int starts = 20;
    PriorSpec prior;
    ReferenceOptions reference_options{2000, 500, 5, 0, false, false, 1e-3, {}};
    ClassifyOptions classify;

    void validate() const {
        require(!grid.empty() || scenario == Scenario::fig1 || scenario == Scenario::fig2 || scenario == Scenario::fig3,
                "plan: empty grid");
        std::set<std::string> ids;
        for (const auto& g : grid) {
            if (!ids.insert(g.id()).second) throw ConfigError("plan: seed collision, grid cell " + g.id() + " listed twice");
            require(g.c >= 2 && g.p >= 1 && g.n >= 1 && g.m >= 1 && g.R >= 1, "plan: invalid grid cell " + g.id());
            if (is_binary(g.variant)) require(g.c == 2 && g.p == 1, "plan: binary variants need c = 2, p = 1");
        }
        prior.validate();
    }
};

struct CellRecord {
    std::string id;
    std::string status; // "done" or "failed"
    std::string error;
    double seconds = 0.0;
    std::vector<std::uint64_t> seeds; // dataset seed per replication
    json result;
    std::vector<std::string> files;
};

struct RunManifest {
    json config;
    std::string version = MCMCDEGEN_VERSION;
    std::vector<CellRecord> cells;
    std::vector<std::string> files;

    const CellRecord* find(const std::string& id) const {
        for (const auto& c : cells) {
            if (c.id == id) return &c;
        }
        return nullptr;
    }
    bool complete() const {
        for (const auto& c : cells) {
            if (c.status != "done") return false;
        }
        return true;
    }
};

// ---------------------------------------------------------------------------
// Plans and manifests as JSON

inline json plan_json(const ExperimentPlan& p) {
    json grid = json::array();
    for (const auto& g : p.grid) {
        grid.push_back({{"variant", to_string(g.variant)}, {"c", g.c}, {"p", g.p}, {"n", g.n}, {"m", g.m}, {"R", g.R}});
    }
    return {{"scenario", to_string(p.scenario)},
            {"seed", p.seed},
            {"out", p.output_dir.generic_string()},
            {"reference", p.reference},
            {"starts", p.starts},
            {"prior",
             {{"sigma_alpha", p.prior.sigma_alpha},
              {"sigma_beta", p.prior.sigma_beta},
              {"a0", p.prior.a0},
              {"b0", p.prior.b0}}},
            {"reference_chain",
             {{"length", p.reference_options.length},
              {"burn_in", p.reference_options.burn_in},
              {"thin", p.reference_options.thin}}},
            {"classify",
             {{"min_replications", p.classify.min_replications},
              {"decay_ratio", p.classify.decay_ratio},
              {"se_guard", p.classify.se_guard},
              {"band_low", p.classify.band_low},
              {"band_high", p.classify.band_high}}},
            {"grid", grid}};
}

inline json manifest_json(const RunManifest& m) {
    json cells = json::array();
    for (const auto& c : m.cells) {
        cells.push_back({{"id", c.id},
                         {"status", c.status},
                         {"error", c.error},
                         {"seconds", c.seconds},
                         {"seeds", c.seeds},
                         {"result", c.result},
                         {"files", c.files}});
    }
    return {{"config", m.config}, {"version", m.version}, {"cells", cells}, {"files", m.files}};
}

inline RunManifest manifest_from_json(const json& j) {
    RunManifest m;
    m.config = j.at("config");
    m.version = j.at("version").get<std::string>();
    for (const auto& c : j.at("cells")) {
        CellRecord r;
        r.id = c.at("id").get<std::string>();
        r.status = c.at("status").get<std::string>();
        r.error = c.at("error").get<std::string>();
        r.seconds = c.at("seconds").get<double>();
        r.seeds = c.at("seeds").get<std::vector<std::uint64_t>>();
        r.result = c.at("result");
        r.files = c.at("files").get<std::vector<std::string>>();
        m.cells.push_back(std::move(r));
    }
    m.files = j.at("files").get<std::vector<std::string>>();
    return m;
}

// ---------------------------------------------------------------------------
// Figures

struct FigureSeries {
    std::string label;
    std::vector<double> values;
    bool dashed = false;
};

struct FigurePanel {
    std::string title;
    std::vector<FigureSeries> series;
    std::optional<double> reference_line;
};

struct FigureSpec {
    std::string name;
    std::vector<FigurePanel> panels;
};

/// Coordinate `coord` of a transform column as a plain series. Throws when the
/// trace does not carry the transform.
inline std::vector<double> trace_column(const ChainTrace& t, Transform tr, int coord = 0) {
    const Matrix& s = t.series(tr);
    require(coord >= 0 && coord < s.cols(), "trace_column: coordinate out of range");
    return std::vector<double>(s.col(coord).data(), s.col(coord).data() + s.rows());
}

namespace detail {

inline std::string fixed(double v, int digits = 2) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed, digits);
    return std::string(buf, res.ptr);
}

inline std::string svg_escape(const std::string& s) {
    std::string out;
    for (char ch : s) {
        switch (ch) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            default: out += ch;
        }
    }
    return out;
}

} // namespace detail

/// Minimal line plot: one row per panel, solid and dashed series, an optional
/// horizontal reference line. Output depends only on the inputs.
inline std::string render_svg(const FigureSpec& fig) {
    const double W = 720, H = 200, ml = 60, mr = 20, mt = 26, mb = 28;
    const double total_h = H * static_cast<double>(fig.panels.size());
    std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + detail::fixed(W, 0) + "\" height=\"" +
                    detail::fixed(total_h, 0) + "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    for (std::size_t k = 0; k < fig.panels.size(); ++k) {
        const FigurePanel& pnl = fig.panels[k];
        const double y0 = H * static_cast<double>(k);
        double lo = 1e300, hi = -1e300;
        std::size_t len = 1;
        for (const auto& se : pnl.series) {
            for (double v : se.values) {
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
            len = std::max(len, se.values.size());
        }
        if (pnl.reference_line) {
            lo = std::min(lo, *pnl.reference_line);
            hi = std::max(hi, *pnl.reference_line);
        }
        if (!(lo <= hi)) lo = 0, hi = 1;
        if (hi - lo < 1e-12) lo -= 0.5, hi += 0.5;
        const double pad = 0.05 * (hi - lo);
        lo -= pad;
        hi += pad;
        const double pw = W - ml - mr, ph = H - mt - mb;
        auto X = [&](double i) { return ml + pw * i / static_cast<double>(std::max<std::size_t>(len - 1, 1)); };
        auto Y = [&](double v) { return y0 + mt + ph * (1.0 - (v - lo) / (hi - lo)); };
        s += "<text x=\"" + detail::fixed(ml, 0) + "\" y=\"" + detail::fixed(y0 + 16, 0) + "\">" +
             detail::svg_escape(pnl.title) + "</text>\n";
        s += "<rect x=\"" + detail::fixed(ml) + "\" y=\"" + detail::fixed(y0 + mt) + "\" width=\"" + detail::fixed(pw) +
             "\" height=\"" + detail::fixed(ph) + "\" fill=\"none\" stroke=\"#888\"/>\n";
        s += "<text x=\"4\" y=\"" + detail::fixed(y0 + mt + 10) + "\">" + detail::fixed(hi, 3) + "</text>\n";
        s += "<text x=\"4\" y=\"" + detail::fixed(y0 + mt + ph) + "\">" + detail::fixed(lo, 3) + "</text>\n";
        s += "<text x=\"" + detail::fixed(ml + pw - 40) + "\" y=\"" + detail::fixed(y0 + H - 8) + "\">step " +
             std::to_string(len - 1) + "</text>\n";
        if (pnl.reference_line) {
            s += "<line x1=\"" + detail::fixed(ml) + "\" x2=\"" + detail::fixed(ml + pw) + "\" y1=\"" +
                 detail::fixed(Y(*pnl.reference_line)) + "\" y2=\"" + detail::fixed(Y(*pnl.reference_line)) +
                 "\" stroke=\"#c00\" stroke-width=\"0.8\"/>\n";
        }
        double legend_x = ml + 160;
        for (const auto& se : pnl.series) {
            s += "<polyline fill=\"none\" stroke=\"black\" stroke-width=\"1\"";
            if (se.dashed) s += " stroke-dasharray=\"5,3\"";
            s += " points=\"";
            for (std::size_t i = 0; i < se.values.size(); ++i) {
                if (i) s += " ";
                s += detail::fixed(X(static_cast<double>(i))) + "," + detail::fixed(Y(se.values[i]));
            }
            s += "\"/>\n";
            s += "<line x1=\"" + detail::fixed(legend_x) + "\" x2=\"" + detail::fixed(legend_x + 24) + "\" y1=\"" +
                 detail::fixed(y0 + 12) + "\" y2=\"" + detail::fixed(y0 + 12) + "\" stroke=\"black\"" +
                 (se.dashed ? " stroke-dasharray=\"5,3\"" : "") + "/>\n";
            s += "<text x=\"" + detail::fixed(legend_x + 28) + "\" y=\"" + detail::fixed(y0 + 16) + "\">" +
                 detail::svg_escape(se.label) + "</text>\n";
            legend_x += 150;
        }
    }
    s += "</svg>\n";
    return s;
}

inline std::string figure_csv(const FigureSpec& fig) {
    std::string s = "panel,series,step,value\n";
    for (const auto& p : fig.panels) {
        for (const auto& se : p.series) {
            for (std::size_t i = 0; i < se.values.size(); ++i) {
                s += p.title + "," + se.label + "," + std::to_string(i) + "," + io::fmt(se.values[i]) + "\n";
            }
        }
        if (p.reference_line) s += p.title + ",true,0," + io::fmt(*p.reference_line) + "\n";
    }
    return s;
}

/// Writes <name>.csv and <name>.svg; returns the file names.
inline std::vector<std::string> emit_figure(const FigureSpec& fig, const fs::path& dir) {
    require(!fig.panels.empty(), "emit_figure: no panels");
    io::write_text(dir / (fig.name + ".csv"), figure_csv(fig));
    io::write_text(dir / (fig.name + ".svg"), render_svg(fig));
    return {fig.name + ".csv", fig.name + ".svg"};
}

// ---------------------------------------------------------------------------
// Figure scenarios

struct FigureRun {
    FigureSpec spec;
    std::vector<ChainTrace> traces;
};

inline ModelConfig model_config(int c, int p, const PriorSpec& prior) {
    ModelConfig cfg;
    cfg.c = c;
    cfg.covariates.p = p;
    cfg.prior = prior;
    return cfg;
}

/// Binary null vs beta^T x chains from theta(0) = 1.5 with theta0 = 2.
inline FigureRun figure1(std::uint64_t seed, int m = 200) {
    PriorSpec prior;
    prior.sigma_beta = 1.0;
    const ModelConfig cfg = model_config(2, 1, prior);
    const Theta theta0(Vector(), Vector::Constant(1, 2.0));
    FigureRun run;
    run.spec.name = "fig1";
    for (int n : {100, 1000}) {
        const Dataset data = sample_dataset(cfg, theta0, n, dataset_seed(seed, 2, 1, n, 0));
        FigurePanel panel{"n=" + std::to_string(n), {}, 2.0};
        for (VariantId v : {VariantId::binary_null, VariantId::binary_beta}) {
            ChainTrace t = run_chain(v, data, prior, m, InitPolicy::fixed(Theta(Vector(), Vector::Constant(1, 1.5))),
                                     {Transform::theta}, chain_stream(seed, v, 2, 1, n, 0));
            t.meta.dataset_ref = "n" + std::to_string(n);
            panel.series.push_back({to_string(v), trace_column(t, Transform::theta), v == VariantId::binary_beta});
            run.traces.push_back(std::move(t));
        }
        run.spec.panels.push_back(std::move(panel));
    }
    return run;
}

/// c = 4, n = 1000: beta^T x kernels with and without MA started at the truth.
inline std::vector<ChainTrace> cumulative_pair(std::uint64_t seed, int m, int n, int c,
                                               const std::vector<Transform>& transforms) {
    const PriorSpec prior;
    const ModelConfig cfg = model_config(c, 1, prior);
    const Theta theta0 = default_theta0(c);
    const Dataset data = sample_dataset(cfg, theta0, n, dataset_seed(seed, c, 1, n, 0));
    std::vector<ChainTrace> out;
    for (VariantId v : {VariantId::beta, VariantId::beta_ma}) {
        ChainTrace t = run_chain(v, data, prior, m, InitPolicy::fixed(theta0), transforms, chain_stream(seed, v, c, 1, n, 0));
        t.meta.dataset_ref = "n" + std::to_string(n);
        out.push_back(std::move(t));
    }
    return out;
}

inline FigureRun figure2(std::uint64_t seed, int m = 200, int n = 1000) {
    FigureRun run;
    run.traces = cumulative_pair(seed, m, n, 4, {Transform::g_theta});
    const Theta theta0 = default_theta0(4);
    run.spec.name = "fig2";
    const char* names[] = {"alpha2", "alpha3", "beta"};
    const double truth[] = {theta0.alpha[0], theta0.alpha[1], theta0.beta[0]};
    for (int k = 0; k < 3; ++k) {
        FigurePanel panel{names[k], {}, truth[k]};
        for (const auto& t : run.traces) {
            panel.series.push_back({is_ma(t.variant) ? "with MA" : "without MA", trace_column(t, Transform::g_theta, k),
                                    is_ma(t.variant)});
        }
        run.spec.panels.push_back(std::move(panel));
    }
    return run;
}

inline FigureRun figure3(std::uint64_t seed, int m = 1000, int n = 1000, int c = 4) {
    transform_dim(Transform::alpha_ratio, c, 1);
    FigureRun run;
    run.traces = cumulative_pair(seed, m, n, c, {Transform::alpha_ratio});
    const Theta theta0 = default_theta0(c);
    run.spec.name = "fig3";
    FigurePanel panel{"alpha3/alpha2", {}, theta0.alpha[1] / theta0.alpha[0]};
    for (const auto& t : run.traces) {
        panel.series.push_back({is_ma(t.variant) ? "with MA" : "without MA", trace_column(t, Transform::alpha_ratio),
                                is_ma(t.variant)});
    }
    run.spec.panels.push_back(std::move(panel));
    return run;
}

// ---------------------------------------------------------------------------
// Orchestration

inline std::vector<GridCell> table1_grid(const std::vector<int>& ns = {100, 400, 1600}, int R = 50, int p = 1) {
    std::vector<GridCell> grid;
    for (VariantId v : {VariantId::null, VariantId::beta, VariantId::null_ma, VariantId::beta_ma}) {
        for (int c : {2, 3, 4}) {
            for (int n : ns) grid.push_back({v, c, p, n, 1, R});
        }
    }
    return grid;
}

inline CellSpec cell_spec(const ExperimentPlan& plan, const GridCell& g) {
    CellSpec cell;
    cell.variant = g.variant;
    cell.model = model_config(g.c, g.p, plan.prior);
    cell.theta0 = default_theta0(g.c, g.p);
    cell.n = g.n;
    cell.m = g.m;
    cell.R = g.R;
    cell.seed = plan.seed;
    cell.transform = table1_transform(g.variant, g.c, g.p);
    cell.reference = plan.reference_options;
    cell.starts = plan.starts;
    cell.threads = plan.threads;
    return cell;
}

namespace detail {

inline void save_manifest(const RunManifest& m, const fs::path& dir) {
    io::write_text(dir / "manifest.json", io::dump(manifest_json(m)));
}

inline std::optional<RunManifest> load_manifest(const fs::path& dir, const json& config) {
    const fs::path path = dir / "manifest.json";
    if (!fs::exists(path)) return std::nullopt;
    RunManifest m = manifest_from_json(json::parse(io::read_text(path)));
    if (m.config != config) return std::nullopt; // different plan: start over
    return m;
}

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

inline void upsert(RunManifest& m, CellRecord rec) {
    for (auto& c : m.cells) {
        if (c.id == rec.id) {
            c = std::move(rec);
            return;
        }
    }
    m.cells.push_back(std::move(rec));
}

inline void add_file(RunManifest& m, const std::string& f) {
    if (std::find(m.files.begin(), m.files.end(), f) == m.files.end()) m.files.push_back(f);
}

inline void run_table1(const ExperimentPlan& plan, RunManifest& manifest) {
    // Group cells by (c, p, n) so that datasets and references are shared by
    // every variant evaluated on them.
    std::map<std::tuple<int, int, int, int>, std::vector<GridCell>> groups;
    for (const auto& g : plan.grid) groups[{g.c, g.p, g.n, g.R}].push_back(g);
    for (const auto& [key, cells] : groups) {
        std::vector<GridCell> pending;
        for (const auto& g : cells) {
            const CellRecord* rec = manifest.find(g.id());
            if (!rec || rec->status != "done") pending.push_back(g);
        }
        if (pending.empty()) continue;
        const auto [c, p, n, R] = key;
        const CellSpec base = cell_spec(plan, pending.front());
        std::vector<std::shared_ptr<const Dataset>> datasets(R);
        std::vector<std::shared_ptr<const ReferencePosterior>> refs(R);
        const auto t0 = std::chrono::steady_clock::now();
        std::optional<std::string> group_error;
        try {
            parallel_for(R, plan.threads, [&](int r) {
                datasets[r] = std::make_shared<const Dataset>(replication_dataset(base, r));
                refs[r] = std::make_shared<const ReferencePosterior>(replication_reference(base, *datasets[r], r));
            });
        } catch (const std::exception& e) {
            group_error = e.what();
        }
        const double ref_seconds = seconds_since(t0);
        for (const auto& g : pending) {
            CellRecord rec;
            rec.id = g.id();
            for (int r = 0; r < R; ++r) rec.seeds.push_back(dataset_seed(plan.seed, c, p, n, r));
            const auto t1 = std::chrono::steady_clock::now();
            try {
                if (group_error) throw NumericalError("reference construction failed: " + *group_error);
                const CellSpec cell = cell_spec(plan, g);
                const DiagnosticsReport rep = one_step_statistic(cell, &refs, &datasets);
                rec.result = io::report_json(rep);
                rec.status = "done";
            } catch (const std::exception& e) {
                rec.status = "failed";
                rec.error = e.what();
            }
            rec.seconds = seconds_since(t1) + ref_seconds / static_cast<double>(pending.size());
            upsert(manifest, std::move(rec));
            save_manifest(manifest, plan.output_dir);
        }
    }
    // Aggregate in grid order.
    std::vector<Table1Point> points;
    for (const auto& g : plan.grid) {
        const CellRecord* rec = manifest.find(g.id());
        if (!rec || rec->status != "done") continue;
        const auto& est = rec->result.at("estimates").at("D");
        points.push_back({to_string(g.variant), g.c, g.n, g.R, est.at("value").get<double>(), est.at("se").get<double>()});
    }
    add_file(manifest, "table1.csv");
    std::vector<Table1Label> labels;
    try {
        if (!points.empty()) labels = classify_table1(points, plan.classify);
    } catch (const PreconditionError&) {
        io::write_text(plan.output_dir / "table1.csv", io::table1_csv(points, {}, "unclassified"));
        save_manifest(manifest, plan.output_dir);
        throw;
    }
    io::write_text(plan.output_dir / "table1.csv", io::table1_csv(points, labels));
}

inline void run_diagnose(const ExperimentPlan& plan, RunManifest& manifest) {
    for (const auto& g : plan.grid) {
        const CellRecord* prev = manifest.find(g.id());
        if (prev && prev->status == "done") continue;
        CellRecord rec;
        rec.id = g.id();
        for (int r = 0; r < g.R; ++r) rec.seeds.push_back(dataset_seed(plan.seed, g.c, g.p, g.n, r));
        const auto t0 = std::chrono::steady_clock::now();
        try {
            CellSpec cell = cell_spec(plan, g);
            json out = {{"one_step", io::report_json(one_step_statistic(cell))}};
            if (g.m >= 2) out["rprime"] = io::report_json(estimate_Rprime(cell));
            const std::string file = "diagnose_" + g.id() + ".json";
            io::write_text(plan.output_dir / file, io::dump(out));
            rec.files.push_back(file);
            rec.result = out;
            rec.status = "done";
        } catch (const std::exception& e) {
            rec.status = "failed";
            rec.error = e.what();
        }
        rec.seconds = seconds_since(t0);
        upsert(manifest, std::move(rec));
        save_manifest(manifest, plan.output_dir);
    }
}

inline void run_figure(const ExperimentPlan& plan, RunManifest& manifest) {
    CellRecord rec;
    rec.id = to_string(plan.scenario);
    rec.seeds.push_back(plan.seed);
    const auto t0 = std::chrono::steady_clock::now();
    try {
        FigureRun run;
        switch (plan.scenario) {
            case Scenario::fig1: run = figure1(plan.seed); break;
            case Scenario::fig2: run = figure2(plan.seed); break;
            case Scenario::fig3: run = figure3(plan.seed); break;
            default: throw PreconditionError("not a figure scenario");
        }
        rec.files = emit_figure(run.spec, plan.output_dir);
        for (const auto& t : run.traces) {
            const std::string f = "traces/" + io::trace_filename(t.variant, t.meta.n, 0);
            io::write_trace(t, plan.output_dir / f);
            rec.files.push_back(f);
        }
        rec.status = "done";
    } catch (const std::exception& e) {
        rec.status = "failed";
        rec.error = e.what();
    }
    rec.seconds = seconds_since(t0);
    for (const auto& f : rec.files) add_file(manifest, f);
    upsert(manifest, std::move(rec));
}

} // namespace detail

/// Runs a plan, writing outputs and manifest.json into plan.output_dir. A
/// manifest left by an interrupted run with the same configuration is
/// resumed: finished cells are kept, the rest recomputed. Every reported
/// number depends only on the plan, never on the worker count.
inline RunManifest orchestrate(const ExperimentPlan& plan) {
    plan.validate();
    fs::create_directories(plan.output_dir);
    json config = plan_json(plan);
    RunManifest manifest = detail::load_manifest(plan.output_dir, config).value_or(RunManifest{});
    manifest.config = config;
    manifest.version = MCMCDEGEN_VERSION;
    switch (plan.scenario) {
        case Scenario::table1: detail::run_table1(plan, manifest); break;
        case Scenario::diagnose:
        case Scenario::custom: detail::run_diagnose(plan, manifest); break;
        case Scenario::fig1:
        case Scenario::fig2:
        case Scenario::fig3: detail::run_figure(plan, manifest); break;
    }
    detail::save_manifest(manifest, plan.output_dir);
    return manifest;
}

} // namespace mcmcdegen
