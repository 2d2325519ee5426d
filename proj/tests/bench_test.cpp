#include "tpmf/bench.hpp"
#include "tpmf/errors.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace tpmf;

namespace {

std::filesystem::path fresh_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / "tpmf_bench_test" / name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        rows.push_back(std::move(cells));
    }
    return rows;
}

// Small, fast scenario: coarse grids and few steps.
const char* kSmallConfig = R"({
  "steps": 6,
  "mc_runs": 2,
  "seed": 5,
  "filters": [
    {"type": "lgbf_cpd", "name": "cpd", "counts": [9, 9, 7, 7], "max_rank": 6},
    {"type": "ukf"}
  ]
})";

std::string parse_error_message(const std::string& text) {
    try {
        parse_scenario(text);
    } catch (const ParseError& e) {
        return e.what();
    }
    return {};
}

}  // namespace

TEST(Scenario, DefaultsAndRoundTrip) {
    const ScenarioConfig d = default_scenario();
    EXPECT_EQ(d.steps, 100u);
    EXPECT_EQ(d.mc_runs, 10u);
    ASSERT_EQ(d.filters.size(), 4u);
    EXPECT_EQ(d.filters[0].cpd.counts, (std::array<std::size_t, 4>{21, 21, 21, 21}));
    EXPECT_EQ(d.filters[0].cpd.max_rank, 10);

    const ScenarioConfig small = parse_scenario(kSmallConfig);
    EXPECT_EQ(small.steps, 6u);
    ASSERT_EQ(small.filters.size(), 2u);
    EXPECT_EQ(small.filters[0].name, "cpd");
    EXPECT_EQ(small.filters[1].name, "ukf");
    const ScenarioConfig again = parse_scenario(scenario_to_json(small).dump());
    EXPECT_EQ(scenario_to_json(again), scenario_to_json(small));
}

TEST(Scenario, ShippedDefaultConfigMatchesBuiltIn) {
    const ScenarioConfig shipped = load_scenario(std::filesystem::path(TPMF_CONFIG_DIR) / "default.json");
    EXPECT_EQ(scenario_to_json(shipped), scenario_to_json(default_scenario()));
}

TEST(Scenario, ErrorsNameTheField) {
    EXPECT_NE(parse_error_message(R"({"steps": -1})").find("steps"), std::string::npos);
    EXPECT_NE(parse_error_message(R"({"terrain": {"rough": 1}})").find("terrain.rough"), std::string::npos);
    EXPECT_NE(parse_error_message(R"({"filters": ["ukf", {"type": "kalman"}]})").find("filters[1].type"),
              std::string::npos);
    EXPECT_NE(parse_error_message(R"({"filters": [{"type": "lgbf_cpd", "counts": [9, 9, 8, 7]}]})").find("grid count 8 on axis 2"),
              std::string::npos);
    EXPECT_NE(parse_error_message(R"({"initial": {"std": [1, 1, 0, 1]}})").find("initial.std[2]"),
              std::string::npos);
    EXPECT_NE(parse_error_message(R"({"filters": ["ukf", "ukf"]})").find("duplicate"), std::string::npos);
}

TEST(Scenario, SyntaxErrorsReportTheLine) {
    const std::string msg = parse_error_message("{\n  \"steps\": 10,\n  \"mc_runs\": ,\n}");
    EXPECT_NE(msg.find("line 3"), std::string::npos) << msg;
}

TEST(Scenario, LoadResolvesDemRelativeToConfig) {
    const auto dir = fresh_dir("dem");
    std::filesystem::copy_file(std::filesystem::path(TPMF_FIXTURE_DIR) / "tiny.asc", dir / "map.asc");
    {
        std::ofstream out(dir / "cfg.json");
        out << R"({"terrain": {"dem_path": "map.asc"}})";
    }
    const ScenarioConfig cfg = load_scenario(dir / "cfg.json");
    ASSERT_TRUE(cfg.terrain.dem_path.has_value());
    EXPECT_EQ(*cfg.terrain.dem_path, dir / "map.asc");
    EXPECT_THROW(load_scenario(dir / "missing.json"), IoError);
}

TEST(Scenario, PaperScaleAndFilterSelection) {
    ScenarioConfig cfg = default_scenario();
    apply_paper_scale(cfg);
    EXPECT_EQ(cfg.filters[0].cpd.counts, (std::array<std::size_t, 4>{101, 101, 101, 101}));
    EXPECT_EQ(cfg.filters[1].full.counts, (std::array<std::size_t, 4>{51, 51, 41, 41}));
    select_filters(cfg, {"ukf", "lgbf_cpd"});
    ASSERT_EQ(cfg.filters.size(), 2u);
    EXPECT_EQ(cfg.filters[0].kind, FilterKind::ukf);
    EXPECT_EQ(cfg.filters[1].cpd.counts[0], 101u);
    EXPECT_THROW(select_filters(cfg, {"nonsense"}), InvalidArgument);
}

TEST(Benchmark, EmptyRosterWritesHeaderOnlySummary) {
    ScenarioConfig cfg = parse_scenario(kSmallConfig);
    cfg.filters.clear();
    const RunReport report = run_benchmark(cfg);
    EXPECT_FALSE(report.universal_divergence());
    const auto dir = fresh_dir("empty");
    emit_artifacts(report, dir);
    EXPECT_EQ(read_file(dir / "summary.csv"), "name,rmse_pos_m,rmse_vel_mps,mean_step_s,divergences\n");
    EXPECT_TRUE(std::filesystem::is_empty(dir / "traces"));
}

class SmallBenchmark : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        report_ = new RunReport(run_benchmark(parse_scenario(kSmallConfig)));
        dir_ = new std::filesystem::path(fresh_dir("small"));
        emit_artifacts(*report_, *dir_);
    }
    static void TearDownTestSuite() {
        delete report_;
        delete dir_;
    }
    static RunReport* report_;
    static std::filesystem::path* dir_;
};
RunReport* SmallBenchmark::report_ = nullptr;
std::filesystem::path* SmallBenchmark::dir_ = nullptr;

TEST_F(SmallBenchmark, WritesOneTracePerRunAndFilter) {
    std::size_t traces = 0;
    for (const auto& e : std::filesystem::directory_iterator(*dir_ / "traces")) {
        (void)e;
        ++traces;
    }
    EXPECT_EQ(traces, 4u);
    for (const char* name : {"run_0_cpd.csv", "run_1_cpd.csv", "run_0_ukf.csv", "run_1_ukf.csv"}) {
        EXPECT_TRUE(std::filesystem::exists(*dir_ / "traces" / name)) << name;
    }
    const auto rows = read_csv(*dir_ / "summary.csv");
    ASSERT_EQ(rows.size(), 3u);
    EXPECT_EQ(rows[0], (std::vector<std::string>{"name", "rmse_pos_m", "rmse_vel_mps", "mean_step_s", "divergences"}));
    EXPECT_EQ(rows[1][0], "cpd");
    EXPECT_EQ(rows[2][0], "ukf");
}

TEST_F(SmallBenchmark, AllFiltersSeeTheSameMeasurements) {
    for (const RunRecord& run : report_->runs) {
        const std::uint64_t h = fnv1a_measurements(run.truth);
        for (const FilterRun& fr : run.filters) EXPECT_EQ(fr.input_hash, h);
    }
}

TEST_F(SmallBenchmark, SummaryEqualsRecomputationFromTraces) {
    const auto rows = read_csv(*dir_ / "summary.csv");
    for (std::size_t f = 0; f < 2; ++f) {
        const std::string name = rows[f + 1][0];
        double pos = 0.0;
        double vel = 0.0;
        double time = 0.0;
        std::size_t n = 0;
        for (int run = 0; run < 2; ++run) {
            const auto trace = read_csv(*dir_ / "traces" / ("run_" + std::to_string(run) + "_" + name + ".csv"));
            ASSERT_EQ(trace[0].size(), 10u);
            EXPECT_EQ(trace[0][0], "k");
            for (std::size_t k = 1; k < trace.size(); ++k) {
                std::array<double, 8> v{};
                for (std::size_t i = 0; i < 8; ++i) v[i] = std::stod(trace[k][i + 1]);
                pos += std::pow(v[4] - v[0], 2) + std::pow(v[5] - v[1], 2);
                vel += std::pow(v[6] - v[2], 2) + std::pow(v[7] - v[3], 2);
                time += std::stod(trace[k][9]);
                ++n;
            }
        }
        ASSERT_GT(n, 0u);
        EXPECT_NEAR(std::stod(rows[f + 1][1]), std::sqrt(pos / static_cast<double>(n)), 1e-9);
        EXPECT_NEAR(std::stod(rows[f + 1][2]), std::sqrt(vel / static_cast<double>(n)), 1e-12);
        EXPECT_NEAR(std::stod(rows[f + 1][3]), time / static_cast<double>(n), 1e-12);
        EXPECT_EQ(rows[f + 1][4], "0");
    }
}

TEST_F(SmallBenchmark, GridFilterConservesMass) {
    for (const RunRecord& run : report_->runs) {
        EXPECT_LT(run.filters[0].max_mass_error, 1e-9);
        EXPECT_EQ(run.filters[0].mass_violations, 0u);
    }
}

TEST_F(SmallBenchmark, ReportIsDeterministic) {
    const RunReport again = run_benchmark(parse_scenario(kSmallConfig));
    EXPECT_EQ(report_to_json(again).dump(2), report_to_json(*report_).dump(2));
    const nlohmann::json doc = nlohmann::json::parse(read_file(*dir_ / "report.json"));
    EXPECT_EQ(doc, report_to_json(*report_));
}

TEST(TableRow, RendersAndParses) {
    EXPECT_EQ(render_table_row("LGbF CPD", 14.134, 0.8, 0.0612), "LGbF CPD 14.13 m, 0.80 m/s, 0.06 s");
    const TableRow a = parse_table_row("LGbF CPD 14.13, 0.80, 0.06");
    EXPECT_EQ(a.label, "LGbF CPD");
    EXPECT_DOUBLE_EQ(a.rmse_pos, 14.13);
    EXPECT_DOUBLE_EQ(a.rmse_vel, 0.80);
    EXPECT_DOUBLE_EQ(a.step_s, 0.06);
    const TableRow b = parse_table_row(render_table_row("UKF", 320.5, 1.25, 0.0001));
    EXPECT_EQ(b.label, "UKF");
    EXPECT_DOUBLE_EQ(b.rmse_pos, 320.5);
    EXPECT_THROW(parse_table_row("LGbF CPD 14.13"), ParseError);
}
