// Acceptance run: one PASS/FAIL line per criterion. Optional arguments select
// criteria by number ("acceptance 3 6"); no arguments runs all nine.

#include "mcmcdegen.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <thread>

using namespace mcmcdegen;

namespace {

constexpr std::uint64_t kSeed = 20240601;

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct Criterion {
    int id;
    std::string name;
    double budget_seconds; // 0: no runtime bound
    std::function<Outcome()> run;
};

int workers() { return std::max(1u, std::thread::hardware_concurrency()); }

std::string num(double v, int digits = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return buf;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("mcmcdegen_acceptance_" + name);
    fs::remove_all(dir);
    return dir;
}

// a / factor exceeds b by more than `guard` combined standard errors.
bool decreased_by(const Estimate& a, const Estimate& b, double factor, double guard = 3.0) {
    const double gap = a.value / factor - b.value;
    return gap > guard * std::hypot(a.se / factor, b.se);
}

// ---------------------------------------------------------------------------

Outcome c1_oracles() {
    const std::vector<OracleResult> rs = run_oracle_suite(kSeed, false, workers());
    Outcome o{true, ""};
    for (const auto& r : rs) {
        o.pass = o.pass && r.pass;
        o.detail += (o.detail.empty() ? "" : "; ") + r.name + (r.pass ? " ok " : " FAILED ") + num(r.value, 2);
    }
    return o;
}

Outcome c2_stationarity() {
    const auto rs = oracle::stationarity_suite(kSeed, {100, 400}, 2000, workers());
    const OracleResult s = oracle::stationarity_summary(rs, 1e-3);
    return {s.pass && rs.size() == 28, s.detail + ", min KS p = " + num(s.value, 3)};
}

Outcome c3_figure1() {
    CellSpec cell;
    cell.model.c = 2;
    cell.model.prior.sigma_beta = 1.0;
    cell.theta0 = Theta(Vector(0), Vector::Constant(1, 2.0));
    cell.fixed_init = ExpandedTheta{Theta(Vector(0), Vector::Constant(1, 1.5)), 1.0};
    cell.init = InitPolicy::Kind::fixed;
    cell.transform = Transform::theta;
    cell.m = 200;
    cell.R = 20;
    cell.seed = kSeed;
    cell.threads = workers();
    std::map<std::pair<VariantId, int>, DiagnosticsReport> rep;
    for (VariantId v : {VariantId::binary_null, VariantId::binary_beta}) {
        for (int n : {100, 1000}) {
            cell.variant = v;
            cell.n = n;
            rep.emplace(std::make_pair(v, n), estimate_Rprime(cell));
        }
    }
    const auto& n100 = rep.at({VariantId::binary_null, 100}).at("Rprime_localized");
    const auto& n1000 = rep.at({VariantId::binary_null, 1000}).at("Rprime_localized");
    const auto& b100 = rep.at({VariantId::binary_beta, 100}).at("Rprime_localized");
    const auto& b1000 = rep.at({VariantId::binary_beta, 1000}).at("Rprime_localized");
    const double ac_null = rep.at({VariantId::binary_null, 1000}).at("lag1_autocorrelation").value;
    const double ac_beta = rep.at({VariantId::binary_beta, 1000}).at("lag1_autocorrelation").value;
    const double beta_ratio = b1000.value / b100.value;
    const bool a = decreased_by(n100, n1000, 2.0);
    const bool b = beta_ratio >= 0.5 && beta_ratio <= 2.0;
    const bool c = ac_null > ac_beta;
    std::string d = "binary-null R' " + num(n100.value) + "+-" + num(n100.se, 2) + " -> " + num(n1000.value) + "+-" +
                    num(n1000.se, 2) + (a ? " ok" : " (no 2x drop)") + "; binary-beta ratio " + num(beta_ratio) +
                    (b ? " ok" : " (outside [0.5,2])") + "; lag-1 AC null " + num(ac_null) + " vs beta " +
                    num(ac_beta) + (c ? " ok" : " (not larger)");
    const auto& u100 = rep.at({VariantId::binary_null, 100}).at("Rprime");
    const auto& u1000 = rep.at({VariantId::binary_null, 1000}).at("Rprime");
    d += "; unlocalized binary-null R' " + num(u100.value) + " -> " + num(u1000.value);
    return {a && b && c, d};
}

ExperimentPlan table1_plan(const fs::path& out, int threads) {
    ExperimentPlan plan;
    plan.scenario = Scenario::table1;
    plan.grid = table1_grid({100, 400, 1600}, 50, 1);
    plan.seed = kSeed;
    plan.output_dir = out;
    plan.threads = threads;
    return plan;
}

std::map<std::string, std::string> read_labels(const fs::path& csv) {
    std::map<std::string, std::string> out;
    std::istringstream in(slurp(csv));
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
        std::vector<std::string> f;
        std::stringstream ls(line);
        for (std::string cell; std::getline(ls, cell, ',');) f.push_back(cell);
        if (f.size() == 6) out[f[0] + " c=" + f[1]] = f[5];
    }
    return out;
}

Outcome c4_table1() {
    const fs::path dir = scratch("table1");
    orchestrate(table1_plan(dir, workers()));
    const auto labels = read_labels(dir / "table1.csv");
    const std::map<std::string, std::string> expected = {
        {"null c=2", "X"},    {"null c=3", "X"},    {"null c=4", "X"},    {"beta c=2", "O"},
        {"beta c=3", "X"},    {"beta c=4", "X"},    {"null-ma c=2", "O"}, {"null-ma c=3", "X"},
        {"null-ma c=4", "X"}, {"beta-ma c=2", "O"}, {"beta-ma c=3", "O"}, {"beta-ma c=4", "X"},
    };
    Outcome o{labels.size() == expected.size(), ""};
    std::string wrong;
    for (const auto& [cell, label] : expected) {
        const auto it = labels.find(cell);
        const std::string got = it == labels.end() ? "missing" : it->second;
        if (got != label) {
            o.pass = false;
            wrong += " " + cell + "=" + got + "(want " + label + ")";
        }
    }
    o.detail = wrong.empty() ? "12 of 12 cells labelled as expected" : "mismatch:" + wrong;
    return o;
}

Outcome c5_collapse() {
    auto stat = [](VariantId v, int c, Transform t, int n) {
        CellSpec cell;
        cell.variant = v;
        cell.model.c = c;
        cell.theta0 = default_theta0(c);
        cell.transform = t;
        cell.n = n;
        cell.R = 50;
        cell.seed = kSeed;
        cell.threads = workers();
        return one_step_statistic(cell).at("D");
    };
    Outcome o{true, ""};
    for (auto [v, c, t] : {std::tuple{VariantId::null_ma, 2, Transform::theta},
                           std::tuple{VariantId::beta_ma, 3, Transform::alpha}}) {
        const Estimate a = stat(v, c, t, 100), b = stat(v, c, t, 1600);
        const bool ok = decreased_by(a, b, 1.5);
        o.pass = o.pass && ok;
        o.detail += (o.detail.empty() ? "" : "; ") + to_string(v) + " c=" + std::to_string(c) + " " + to_string(t) +
                    " " + num(a.value) + "+-" + num(a.se, 2) + " -> " + num(b.value) + "+-" + num(b.se, 2) +
                    (ok ? " ok" : " (no 1.5x drop)");
    }
    return o;
}

Outcome c6_kernel_approx() {
    ModelConfig cfg;
    cfg.c = 2;
    const int n = 1600;
    const Dataset data = sample_dataset(cfg, default_theta0(2), n, dataset_seed(kSeed, 2, 1, n, 0));
    const Theta hat = fit_mle(cfg, data, &cfg.prior);
    const Matrix info = fisher_information(cfg, hat).value;
    ExpandedTheta state{hat, 1.0};
    state.theta.beta[0] += 3.0 / std::sqrt(static_cast<double>(n));
    const NormalApprox approx = kernel_normal_approx(VariantId::binary_beta, cfg, n, {hat, 1.0}, info, state);
    RngStream rng = chain_stream(kSeed, VariantId::binary_beta, 2, 1, n, 0).derive({0x6});
    const int draws = 10000;
    std::vector<double> b(draws);
    for (int k = 0; k < draws; ++k) b[k] = kernel_step(VariantId::binary_beta, state, data, cfg.prior, rng).theta.beta[0];
    const double mean = stats::mean_se(b).mean;
    const double var = stats::variance(b);
    const double am = approx.mean[0], av = approx.cov(0, 0);
    const double em = std::abs(mean - am) / std::abs(am);
    const double ev = std::abs(var - av) / av;
    const double shift_err = std::abs((mean - hat.beta[0]) - (am - hat.beta[0])) / std::abs(am - hat.beta[0]);
    return {em <= 0.15 && ev <= 0.15,
            "mean " + num(mean, 6) + " vs " + num(am, 6) + " (rel " + num(em, 2) + "), variance " + num(var) + " vs " +
                num(av) + " (rel " + num(ev, 2) + "); shift from mode rel error " + num(shift_err, 2)};
}

Outcome c7_bvm() {
    const int reps = 5;
    std::vector<double> ks_mean;
    std::string d;
    for (int n : {100, 400, 1600}) {
        ModelConfig cfg;
        cfg.c = 3;
        std::vector<double> ks(reps);
        parallel_for(reps, workers(), [&](int r) {
            const Dataset data = sample_dataset(cfg, default_theta0(3), n, dataset_seed(kSeed, 3, 1, n, r));
            ReferenceOptions opt;
            opt.length = 100000;
            opt.burn_in = 2000;
            opt.thin = 10;
            opt.seed = reference_seed(kSeed, 3, 1, n, r);
            opt.split_check = false;
            const auto dist = bvm_ks_distances(build_reference(data, cfg, opt));
            ks[r] = *std::max_element(dist.begin(), dist.end());
        });
        const auto ms = stats::mean_se(ks);
        ks_mean.push_back(ms.mean);
        d += (d.empty() ? "" : ", ") + std::string("n=") + std::to_string(n) + " " + num(ms.mean, 3) + "+-" +
             num(ms.se, 2);
    }
    const bool mono = ks_mean[1] < ks_mean[0] && ks_mean[2] < ks_mean[1];
    return {mono, "max-marginal KS " + d + (mono ? "" : " (not monotone)")};
}

Outcome c8_ratio_projection() {
    const int c = 4, n = 1000, R = 20, starts = 20;
    ModelConfig cfg;
    cfg.c = c;
    CellSpec cell;
    cell.variant = VariantId::beta_ma;
    cell.model = cfg;
    cell.theta0 = default_theta0(c);
    cell.n = n;
    cell.R = R;
    cell.seed = kSeed;
    const double sn = std::sqrt(static_cast<double>(n));
    std::vector<double> ratio(R), beta(R);
    parallel_for(R, workers(), [&](int r) {
        const Dataset data = replication_dataset(cell, r);
        const ReferencePosterior ref = replication_reference(cell, data, r);
        RngStream rng = chain_stream(kSeed, VariantId::beta_ma, c, 1, n, r).derive({0x8});
        const Matrix& rs = *ref.sample;
        const Eigen::Index half = rs.rows() / 2;
        double dr = 0.0, db = 0.0;
        for (int k = 0; k < starts; ++k) {
            const Theta t0 = Theta::from_flat(rs.row((k * half) / starts).transpose(), c);
            const ExpandedTheta s0 = expand_state(VariantId::beta_ma, t0, cfg.prior, rng);
            const ExpandedTheta s1 = kernel_step(VariantId::beta_ma, s0, data, cfg.prior, rng);
            const double r0 = apply_transform(Transform::alpha_ratio, s0)[0];
            const double r1 = apply_transform(Transform::alpha_ratio, s1)[0];
            dr += std::min(sn * std::abs(r0 - r1), 1.0);
            db += std::min(sn * std::abs(s0.g * s0.theta.beta[0] - s1.g * s1.theta.beta[0]), 1.0);
        }
        ratio[r] = dr / starts;
        beta[r] = db / starts;
    });
    const auto mr = stats::mean_se(ratio), mb = stats::mean_se(beta);
    const bool ok = decreased_by({mb.mean, mb.se}, {mr.mean, mr.se}, 2.0);
    return {ok, "alpha-ratio " + num(mr.mean) + "+-" + num(mr.se, 2) + " vs g-theta beta " + num(mb.mean) + "+-" +
                    num(mb.se, 2) + (ok ? " ok" : " (not 2x below)")};
}

Outcome c9_determinism() {
    const int many = std::max(3, workers() + 1);
    Outcome o{true, ""};
    std::vector<std::string> compared;
    for (Scenario s : {Scenario::fig1, Scenario::fig2, Scenario::fig3}) {
        std::vector<std::string> csv;
        for (int t : {1, many}) {
            ExperimentPlan plan;
            plan.scenario = s;
            plan.seed = kSeed;
            plan.threads = t;
            plan.output_dir = scratch(to_string(s) + "_t" + std::to_string(t));
            orchestrate(plan);
            csv.push_back(slurp(plan.output_dir / (to_string(s) + ".csv")));
        }
        const bool same = !csv[0].empty() && csv[0] == csv[1];
        o.pass = o.pass && same;
        compared.push_back(to_string(s) + (same ? " identical" : " DIFFER"));
    }
    // Full Table-1 grid, serial, against the parallel run kept by criterion 4
    // (or a fresh parallel run when criterion 4 was not selected).
    const fs::path par = fs::temp_directory_path() / "mcmcdegen_acceptance_table1";
    if (!fs::exists(par / "table1.csv")) orchestrate(table1_plan(scratch("table1"), workers()));
    const fs::path ser = scratch("table1_serial");
    const fs::path other = scratch("table1_many");
    orchestrate(table1_plan(ser, 1));
    orchestrate(table1_plan(other, many));
    const std::string a = slurp(par / "table1.csv"), b = slurp(ser / "table1.csv"), c = slurp(other / "table1.csv");
    const bool same = !a.empty() && a == b && b == c;
    o.pass = o.pass && same;
    compared.push_back(std::string("table1 (threads 1, ") + std::to_string(workers()) + ", " + std::to_string(many) +
                       (same ? ") identical" : ") DIFFER"));
    for (const auto& s : compared) o.detail += (o.detail.empty() ? "" : "; ") + s;
    return o;
}

} // namespace

int main(int argc, char** argv) {
    const std::vector<Criterion> all = {
        {1, "oracle suite", 60, c1_oracles},
        {2, "kernel stationarity", 600, c2_stationarity},
        {3, "binary chains: localized R' trend", 120, c3_figure1},
        {4, "cumulative-model labels", 3600, c4_table1},
        {5, "collapse statistics decrease", 900, c5_collapse},
        {6, "one-step normal approximation", 300, c6_kernel_approx},
        {7, "normal-approximation trend", 600, c7_bvm},
        {8, "ratio projection degeneracy", 300, c8_ratio_projection},
        {9, "determinism across worker counts", 0, c9_determinism},
    };
    std::set<int> selected;
    for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));
    int failed = 0;
    for (const auto& c : all) {
        if (!selected.empty() && !selected.count(c.id)) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool in_time = c.budget_seconds <= 0 || secs < c.budget_seconds;
        const bool pass = o.pass && in_time;
        failed += pass ? 0 : 1;
        std::printf("criterion %d: %s  %s  [%.1f s%s%s]  %s\n", c.id, pass ? "PASS" : "FAIL", c.name.c_str(), secs,
                    c.budget_seconds > 0 ? (" / " + num(c.budget_seconds) + " s").c_str() : "",
                    in_time ? "" : " over budget", o.detail.c_str());
        std::fflush(stdout);
    }
    return failed == 0 ? 0 : 1;
}
