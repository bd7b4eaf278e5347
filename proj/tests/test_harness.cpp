#include <gtest/gtest.h>

#include "mcmcdegen/harness.hpp"

#include <fstream>
#include <sstream>

using namespace mcmcdegen;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("mcmcdegen_test_" + name);
    fs::remove_all(dir);
    return dir;
}

ExperimentPlan tiny_table(const fs::path& out, int threads) {
    ExperimentPlan plan;
    plan.scenario = Scenario::table1;
    plan.output_dir = out;
    plan.threads = threads;
    plan.starts = 5;
    plan.reference_options.length = 600;
    plan.reference_options.burn_in = 100;
    plan.classify.min_replications = 3;
    for (VariantId v : {VariantId::null, VariantId::beta}) {
        for (int n : {100, 400}) plan.grid.push_back({v, 2, 1, n, 10, 3});
    }
    return plan;
}

} // namespace

TEST(Plan, ScenarioNamesRoundTrip) {
    for (Scenario s : {Scenario::fig1, Scenario::fig2, Scenario::fig3, Scenario::table1, Scenario::diagnose, Scenario::custom}) {
        EXPECT_EQ(parse_scenario(to_string(s)), s);
    }
    EXPECT_THROW(parse_scenario("fig9"), ConfigError);
}

TEST(Plan, DuplicateCellIsSeedCollision) {
    ExperimentPlan plan = tiny_table("unused", 1);
    plan.grid.push_back(plan.grid.front());
    try {
        plan.validate();
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("seed collision"), std::string::npos);
    }
}

TEST(Plan, RejectsBinaryVariantAtThreeCategories) {
    ExperimentPlan plan = tiny_table("unused", 1);
    plan.grid = {{VariantId::binary_beta, 3, 1, 100, 10, 3}};
    EXPECT_ANY_THROW(plan.validate());
}

TEST(Manifest, JsonRoundTrip) {
    RunManifest m;
    m.config = plan_json(tiny_table("x", 1));
    CellRecord rec;
    rec.id = "beta_c2_p1_n100";
    rec.status = "done";
    rec.seconds = 1.5;
    rec.seeds = {1, 2, 3};
    rec.result = {{"k", 1}};
    rec.files = {"a.csv"};
    m.cells.push_back(rec);
    m.files = {"table1.csv"};
    const RunManifest back = manifest_from_json(manifest_json(m));
    EXPECT_EQ(manifest_json(back), manifest_json(m));
    ASSERT_NE(back.find(rec.id), nullptr);
    EXPECT_EQ(back.find(rec.id)->seeds, rec.seeds);
    EXPECT_TRUE(back.complete());
}

TEST(Figures, SvgIsDeterministicAndWellFormed) {
    const FigureRun a = figure1(5, 50);
    const FigureRun b = figure1(5, 50);
    const std::string svg = render_svg(a.spec);
    EXPECT_EQ(svg, render_svg(b.spec));
    EXPECT_EQ(figure_csv(a.spec), figure_csv(b.spec));
    EXPECT_EQ(svg.rfind("<svg", 0), 0u);
    EXPECT_NE(svg.find("</svg>"), std::string::npos);
    EXPECT_EQ(a.spec.panels.size(), 2u);
}

TEST(Figures, CumulativeModelPanelsCarryTrueValues) {
    const FigureRun run = figure2(3, 40);
    ASSERT_EQ(run.spec.panels.size(), 3u);
    const Theta t0 = default_theta0(4);
    EXPECT_DOUBLE_EQ(*run.spec.panels[0].reference_line, t0.alpha(0));
    EXPECT_DOUBLE_EQ(*run.spec.panels[1].reference_line, t0.alpha(1));
    EXPECT_DOUBLE_EQ(*run.spec.panels[2].reference_line, t0.beta(0));
    for (const auto& p : run.spec.panels) {
        for (const auto& s : p.series) EXPECT_EQ(s.values.size(), 40u);
    }
}

TEST(Figures, RatioFigureNeedsFourCategories) {
    EXPECT_THROW(figure3(1, 10, 100, 3), PreconditionError);
}

TEST(Figures, EmitWritesCsvAndSvg) {
    const fs::path dir = scratch("emit");
    fs::create_directories(dir);
    const auto files = emit_figure(figure1(2, 20).spec, dir);
    EXPECT_EQ(files.size(), 2u);
    for (const auto& f : files) EXPECT_TRUE(fs::exists(dir / f));
}

TEST(Table1Run, ByteIdenticalAcrossWorkerCounts) {
    const fs::path d1 = scratch("t1_one"), d3 = scratch("t1_three");
    const RunManifest m1 = orchestrate(tiny_table(d1, 1));
    const RunManifest m3 = orchestrate(tiny_table(d3, 3));
    EXPECT_TRUE(m1.complete());
    EXPECT_EQ(m1.cells.size(), 4u);
    const std::string csv = slurp(d1 / "table1.csv");
    EXPECT_EQ(csv, slurp(d3 / "table1.csv"));
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "variant,c,n,D,se,label");
}

TEST(Table1Run, TooFewReplicationsLeavesUnclassifiedTable) {
    const fs::path dir = scratch("t1_few");
    ExperimentPlan plan = tiny_table(dir, 1);
    plan.classify.min_replications = 50;
    EXPECT_THROW(orchestrate(plan), PreconditionError);
    const std::string csv = slurp(dir / "table1.csv");
    EXPECT_NE(csv.find("unclassified"), std::string::npos);
}

TEST(Table1Run, ResumeRecomputesOnlyMissingCells) {
    const fs::path dir = scratch("t1_resume");
    const ExperimentPlan plan = tiny_table(dir, 1);
    const RunManifest first = orchestrate(plan);
    const std::string dropped = plan.grid.back().id();
    const std::string kept = plan.grid.front().id();

    // Mark a finished cell with a sentinel and remove another, as if the run
    // had been interrupted.
    json j = json::parse(slurp(dir / "manifest.json"));
    json cells = json::array();
    for (auto c : j.at("cells")) {
        if (c.at("id") == dropped) continue;
        if (c.at("id") == kept) c["seconds"] = -7.0;
        cells.push_back(c);
    }
    j["cells"] = cells;
    std::ofstream(dir / "manifest.json") << j.dump(2);

    const RunManifest second = orchestrate(plan);
    ASSERT_NE(second.find(kept), nullptr);
    EXPECT_EQ(second.find(kept)->seconds, -7.0);
    ASSERT_NE(second.find(dropped), nullptr);
    EXPECT_EQ(second.find(dropped)->result, first.find(dropped)->result);
    EXPECT_TRUE(second.complete());
}

TEST(DiagnoseRun, WritesReportPerCell) {
    const fs::path dir = scratch("diag");
    ExperimentPlan plan = tiny_table(dir, 1);
    plan.scenario = Scenario::diagnose;
    plan.grid = {{VariantId::beta, 3, 1, 100, 20, 2}};
    const RunManifest m = orchestrate(plan);
    EXPECT_TRUE(m.complete());
    EXPECT_TRUE(fs::exists(dir / ("diagnose_" + plan.grid[0].id() + ".json")));
}
