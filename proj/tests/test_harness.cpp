#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>

#include "adfd/config.hpp"
#include "adfd/harness.hpp"
#include "adfd/plot.hpp"

namespace fs = std::filesystem;
using namespace adfd;
using nlohmann::json;

namespace {

constexpr const char* kSolveIni = R"(
[experiment]
name = small_solve
problem = poisson1d
seed = 3
seeds = 2

[model]
type = rfm
neurons = 20
activation = sin

[diff]
modes = ad, fd

[grid]
counts = 20

[solve]
cutoff = 1e-12
positions = every:3
)";

constexpr const char* kTrainIni = R"(
[experiment]
name = small_train
problem = poisson1d

[model]
type = two_layer
neurons = 8

[diff]
modes = ad, fd:central2

[grid]
counts = 16
eval_points = 33

[train]
optimizer = gd
lr = 1e-3
steps = 20
record_interval = 5
snapshot_interval = 10
kernel_threshold = 1e-5
)";

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() /
            ("adfd_harness_" + std::to_string(::getpid()) + "_" + std::to_string(counter_++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  static inline int counter_ = 0;
  fs::path path_;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::string replace(std::string text, const std::string& from, const std::string& to) {
  const auto pos = text.find(from);
  EXPECT_NE(pos, std::string::npos) << from;
  if (pos != std::string::npos) text.replace(pos, from.size(), to);
  return text;
}

int exit_status(const std::string& cmd) {
  const int raw = std::system(cmd.c_str());
  return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

}  // namespace

// ------------------------------------------------------------------ config

TEST(Config, ParsesSolveSection) {
  const ExperimentConfig c = parse_config(kSolveIni);
  EXPECT_EQ(c.name, "small_solve");
  EXPECT_EQ(c.problem, ProblemId::poisson1d);
  EXPECT_EQ(c.seed, 3u);
  EXPECT_EQ(c.seeds, 2u);
  EXPECT_EQ(c.model.neurons, 20u);
  ASSERT_TRUE(c.solve);
  EXPECT_FALSE(c.train);
  EXPECT_DOUBLE_EQ(c.solve->cutoff, 1e-12);
  EXPECT_EQ(c.solve->positions.kind, PositionSpec::Kind::every);
  const auto modes = c.diff_modes();
  ASSERT_EQ(modes.size(), 2u);
  EXPECT_EQ(modes[1].label(), "fd:central2");
}

TEST(Config, CanonicalTextRoundTrips) {
  for (const char* text : {kSolveIni, kTrainIni}) {
    const ExperimentConfig c = parse_config(text);
    const std::string once = to_ini(c);
    EXPECT_EQ(to_ini(parse_config(once)), once);
  }
}

TEST(Config, SchemaViolationsAreRejected) {
  const std::string base = kSolveIni;
  const std::vector<std::pair<std::string, std::string>> bad = {
      {"problem = poisson1d", "problem = poisson3d"},
      {"problem = poisson1d", "problem = poisson1d\nflavour = x"},
      {"[grid]", "[gird]"},
      {"neurons = 20", "neurons = twenty"},
      {"neurons = 20", "neurons = 0"},
      {"cutoff = 1e-12", "cutoff = 1.5"},
      {"modes = ad, fd", "modes = ad, fd:biharm5"},
      {"modes = ad, fd", "modes = ad, ad"},
      {"modes = ad, fd", "modes = ad, finite"},
      {"type = rfm", "type = two_layer"},
      {"type = rfm", "type = random_net"},
      {"counts = 20", "counts = 2"},
      {"positions = every:3", "positions = 5, 3"},
      {"seeds = 2", "seeds = 0"},
      {"name = small_solve", "name = a/b"},
  };
  for (const auto& [from, to] : bad)
    EXPECT_THROW(parse_config(replace(base, from, to)), ConfigError) << to;
}

TEST(Config, ExactlyOneOfSolveAndTrain) {
  const std::string both = std::string(kTrainIni) + "\n[solve]\ncutoff = 1e-12\n";
  EXPECT_THROW(parse_config(both), ConfigError);
  const std::string train = kTrainIni;
  const std::string neither = train.substr(0, train.find("[train]"));
  EXPECT_THROW(parse_config(neither), ConfigError);
}

TEST(Config, DeepModelsNeedConsistentWidths) {
  std::string deep = replace(kTrainIni, "type = two_layer", "type = deep\nwidths = 1, 10, 10, 1");
  EXPECT_NO_THROW(parse_config(deep));
  EXPECT_THROW(parse_config(replace(deep, "widths = 1, 10, 10, 1", "widths = 2, 10, 1")), ConfigError);
  EXPECT_THROW(parse_config(replace(deep, "widths = 1, 10, 10, 1", "widths = 1, 10, 2")), ConfigError);
  EXPECT_THROW(parse_config(replace(deep, "widths = 1, 10, 10, 1", "widths = 1, 1")), ConfigError);
  EXPECT_THROW(parse_config(replace(deep, "optimizer = gd", "optimizer = gd\nprecision = single")),
               ConfigError);
}

TEST(Config, PositionsResolveWithinRank) {
  PositionSpec all;
  EXPECT_EQ(all.resolve(4), (std::vector<std::size_t>{1, 2, 3, 4}));
  PositionSpec every;
  every.kind = PositionSpec::Kind::every;
  every.stride = 3;
  EXPECT_EQ(every.resolve(8), (std::vector<std::size_t>{1, 4, 7, 8}));
  PositionSpec list;
  list.kind = PositionSpec::Kind::list;
  list.values = {2, 5, 9};
  EXPECT_EQ(list.resolve(6), (std::vector<std::size_t>{2, 5}));
}

TEST(Config, MissingFileIsAConfigError) {
  EXPECT_THROW(load_config("/nonexistent/adfd.ini"), ConfigError);
}

// --------------------------------------------------------------------- CSV

TEST(Csv, SeventeenSignificantDigitsRoundTrip) {
  TempDir dir;
  const Vector values{1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0};
  write_csv(dir.path() / "v.csv", {"i", "value"}, {1, 2, 3, 4}, {values});
  std::istringstream in(slurp(dir.path() / "v.csv"));
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "i,value");
  std::getline(in, line);
  EXPECT_EQ(line, "1,3.3333333333333331e-01");
  in.seekg(0);
  std::getline(in, line);
  for (double v : values) {
    std::getline(in, line);
    const std::string field = line.substr(line.find(',') + 1);
    EXPECT_EQ(std::stod(field), v);
  }
}

TEST(Csv, RejectsRaggedColumns) {
  TempDir dir;
  EXPECT_THROW(write_csv(dir.path() / "x.csv", {"a", "b"}, {}, {{1.0}, {1.0, 2.0}}),
               std::invalid_argument);
  EXPECT_THROW(write_csv(dir.path() / "x.csv", {"a"}, {1, 2}, {{1.0, 2.0}}), std::invalid_argument);
}

// -------------------------------------------------------------------- plots

TEST(Plot, SpectrumScatterOnLogAxis) {
  const std::vector<PlotSeries> s{{"AD", {1, 2, 3}, {10.0, 1.0, 1e-3}, PlotSeries::Style::markers}};
  const std::string svg = render_svg(s, {"spectrum", "index", "sigma", false, true});
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
  EXPECT_NE(svg.find(">AD<"), std::string::npos);
  EXPECT_NE(svg.find(">index<"), std::string::npos);
  EXPECT_NE(svg.find(">sigma<"), std::string::npos);
  EXPECT_NE(svg.find(">0.001<"), std::string::npos);
  EXPECT_NE(svg.find(">10<"), std::string::npos);
  // Three data markers plus one legend marker.
  std::size_t circles = 0;
  for (std::size_t pos = 0; (pos = svg.find("<circle", pos)) != std::string::npos; ++pos) ++circles;
  EXPECT_EQ(circles, 4u);
}

TEST(Plot, OverlaidLinesWithLegend) {
  const std::vector<PlotSeries> s{{"AD", {0, 1, 2}, {1.0, 0.5, 0.25}},
                                  {"FD", {0, 1, 2}, {1.0, 0.6, 0.4}}};
  const std::string svg = render_svg(s, {"loss", "step", "loss", false, true});
  std::size_t lines = 0;
  for (std::size_t pos = 0; (pos = svg.find("<polyline", pos)) != std::string::npos; ++pos) ++lines;
  EXPECT_EQ(lines, 2u);
  EXPECT_NE(svg.find(">AD<"), std::string::npos);
  EXPECT_NE(svg.find(">FD<"), std::string::npos);
}

TEST(Plot, RejectsInvalidSeries) {
  const AxesSpec log_y{"", "", "", false, true};
  const AxesSpec linear{};
  EXPECT_THROW(render_svg(std::vector<PlotSeries>{}, linear), std::invalid_argument);
  EXPECT_THROW(render_svg(std::vector<PlotSeries>{{"e", {}, {}}}, linear), std::invalid_argument);
  EXPECT_THROW(render_svg(std::vector<PlotSeries>{{"z", {1, 2}, {1.0, 0.0}}}, log_y),
               std::invalid_argument);
  EXPECT_THROW(render_svg(std::vector<PlotSeries>{{"n", {1, 2}, {1.0, -1.0}}}, log_y),
               std::invalid_argument);
  EXPECT_THROW(render_svg(std::vector<PlotSeries>{{"inf", {1, 2}, {1.0, 1.0 / 0.0}}}, linear),
               std::invalid_argument);
  EXPECT_THROW(render_svg(std::vector<PlotSeries>{{"len", {1, 2}, {1.0}}}, linear),
               std::invalid_argument);
  EXPECT_NO_THROW(render_svg(std::vector<PlotSeries>{{"neg", {1, 2}, {1.0, -1.0}}}, linear));
}

TEST(Plot, EscapesMarkup) {
  const std::vector<PlotSeries> s{{"a<b & c", {0, 1}, {0, 1}}};
  const std::string svg = render_svg(s, {});
  EXPECT_NE(svg.find("a&lt;b &amp; c"), std::string::npos);
}

// ---------------------------------------------------------------- pipeline

TEST(Pipeline, SolveRunWritesDeclaredArtifacts) {
  TempDir dir;
  RunOptions opts;
  opts.output_root = dir.path();
  const RunArtifacts a = run_experiment(parse_config(kSolveIni), opts);
  EXPECT_FALSE(a.diverged);
  EXPECT_TRUE(fs::exists(a.directory / "summary.json"));
  EXPECT_TRUE(fs::exists(a.directory / "config.ini"));
  EXPECT_EQ(a.csv_paths.size(), 4u);  // two files per seed
  for (const auto& p : a.csv_paths) EXPECT_TRUE(fs::exists(p)) << p;
  EXPECT_FALSE(a.svg_paths.empty());
  for (const auto& p : a.svg_paths) EXPECT_TRUE(fs::exists(p)) << p;

  const json s = json::parse(slurp(a.directory / "summary.json"));
  for (const char* key : {"H_AD", "H_FD", "e_AD", "e_FD", "sigma_max_AD", "sigma_min_AD",
                          "sigma_max_FD", "sigma_min_FD", "aggregate", "per_seed", "run_id"})
    EXPECT_TRUE(s.contains(key)) << key;
  ASSERT_EQ(s["per_seed"].size(), 2u);
  const json& seed0 = s["per_seed"][0];
  EXPECT_EQ(seed0["seed"], 3);
  EXPECT_TRUE(seed0["verification"]["fd_central2"]["prop1"]["holds"].get<bool>());
  EXPECT_TRUE(seed0["verification"]["fd_central2"]["prop2"].contains("status"));

  const std::string header = slurp(a.directory / "seed_000" / "truncation_sweep.csv");
  EXPECT_EQ(header.substr(0, header.find('\n')), "P,rel_residual_ad,rel_residual_fd_central2");
  const std::string sv = slurp(a.directory / "seed_000" / "singular_values.csv");
  EXPECT_EQ(sv.substr(0, sv.find('\n')), "index,sigma_ad,sigma_fd_central2");
}

TEST(Pipeline, RerunsProduceIdenticalCsvBytes) {
  TempDir dir;
  RunOptions a_opts, b_opts;
  a_opts.output_root = dir.path() / "a";
  b_opts.output_root = dir.path() / "b";
  b_opts.jobs = 2;
  const RunArtifacts a = run_experiment(parse_config(kSolveIni), a_opts);
  const RunArtifacts b = run_experiment(parse_config(kSolveIni), b_opts);
  ASSERT_EQ(a.csv_paths.size(), b.csv_paths.size());
  for (std::size_t i = 0; i < a.csv_paths.size(); ++i)
    EXPECT_EQ(slurp(a.csv_paths[i]), slurp(b.csv_paths[i])) << a.csv_paths[i];
  EXPECT_EQ(a.run_id, b.run_id);
}

TEST(Pipeline, TrainRunWritesHistoryAndSpectra) {
  TempDir dir;
  RunOptions opts;
  opts.output_root = dir.path();
  opts.plots = false;
  const RunArtifacts a = run_experiment(parse_config(kTrainIni), opts);
  EXPECT_TRUE(a.svg_paths.empty());
  const fs::path seed = a.directory / "seed_000";
  for (const char* mode : {"ad", "fd_central2"}) {
    const std::string hist = slurp(seed / mode / "training.csv");
    EXPECT_EQ(hist.substr(0, hist.find('\n')), "step,loss_pinn,loss_f,rel_train_err,rel_l2_err");
    EXPECT_EQ(std::count(hist.begin(), hist.end(), '\n'), 6);  // header + steps 0,5,..,20
    for (const char* step : {"kernel_spectrum_0.csv", "kernel_spectrum_10.csv", "kernel_spectrum_20.csv"})
      EXPECT_TRUE(fs::exists(seed / mode / step)) << step;
  }
  const json s = json::parse(slurp(a.directory / "summary.json"));
  EXPECT_TRUE(s["H_AD"].is_number());
  EXPECT_TRUE(s["e_FD"].is_number());
  EXPECT_TRUE(s["per_seed"][0]["modes"]["ad"].contains("final_rel_l2_err"));
}

TEST(Pipeline, DivergenceKeepsPartialArtifacts) {
  TempDir dir;
  RunOptions opts;
  opts.output_root = dir.path();
  opts.plots = false;
  const std::string text = replace(replace(kTrainIni, "lr = 1e-3", "lr = 1e6"), "steps = 20", "steps = 200");
  const RunArtifacts a = run_experiment(parse_config(text), opts);
  EXPECT_TRUE(a.diverged);
  EXPECT_TRUE(fs::exists(a.directory / "summary.json"));
  EXPECT_TRUE(fs::exists(a.directory / "seed_000" / "ad" / "training.csv"));
  const json s = json::parse(slurp(a.directory / "summary.json"));
  EXPECT_TRUE(s["diverged"].get<bool>());
}

TEST(Pipeline, AggregateReportsMeanMinMax) {
  const std::vector<json> runs{{{"x", 1.0}, {"ok", true}, {"m", {{"y", 4}}}},
                               {{"x", 3.0}, {"ok", false}, {"m", {{"y", 6}}}}};
  const json agg = aggregate_summaries(runs);
  EXPECT_DOUBLE_EQ(agg["x"]["mean"].get<double>(), 2.0);
  EXPECT_DOUBLE_EQ(agg["x"]["min"].get<double>(), 1.0);
  EXPECT_DOUBLE_EQ(agg["x"]["max"].get<double>(), 3.0);
  EXPECT_DOUBLE_EQ(agg["m.y"]["mean"].get<double>(), 5.0);
  EXPECT_EQ(agg["ok"]["true_count"], 1);
  EXPECT_EQ(agg["ok"]["count"], 2);
}

TEST(Pipeline, VerifyReportsBothPropositions) {
  const json r = verify_experiment(parse_config(kSolveIni), 2);
  ASSERT_EQ(r["seeds"].size(), 2u);
  for (const auto& seed : r["seeds"]) {
    EXPECT_TRUE(seed["checks"]["fd_central2"]["prop1"]["holds"].get<bool>());
    EXPECT_TRUE(seed["checks"]["fd_central2"]["prop2"]["status"].is_string());
  }
}

// ------------------------------------------------------------------ presets

TEST(Presets, EveryNamedPresetValidates) {
  const auto names = preset_names();
  for (const char* required : {"fig1", "fig2a", "fig2b", "fig2c", "fig2d", "fig3", "fig4", "fig5",
                               "fig6", "fig7", "fig8", "fig9", "appendixB"})
    EXPECT_NE(std::find(names.begin(), names.end(), required), names.end()) << required;
  for (const auto& name : names) {
    const Preset p = make_preset(name);
    EXPECT_FALSE(p.runs.empty()) << name;
    for (const auto& run : p.runs) {
      EXPECT_EQ(run.seeds, kPresetSeeds);
      EXPECT_NO_THROW(validate_config(run)) << name << "/" << run.name;
    }
  }
  EXPECT_THROW(make_preset("fig10"), ConfigError);
}

TEST(Presets, FigureSettings) {
  const Preset fig1 = make_preset("fig1");
  EXPECT_EQ(fig1.sweep_values, (std::vector<double>{100, 300, 500, 1000}));
  for (const auto& run : fig1.runs) EXPECT_EQ(run.model.neurons, run.grid.counts[0]);

  const Preset fig7 = make_preset("fig7");
  EXPECT_EQ(fig7.runs[0].model.type, ModelType::random_net);
  EXPECT_EQ(fig7.runs[0].model.widths, (std::vector<std::size_t>{1, 50, 50, 50, 1}));
  EXPECT_EQ(fig7.runs[0].diff.modes.size(), 3u);

  const Preset fig5 = make_preset("fig5");
  ASSERT_EQ(fig5.runs.size(), 2u);
  EXPECT_DOUBLE_EQ(fig5.runs[1].diff.h, 1.0 / 300.0);

  const Preset fig9 = make_preset("fig9");
  EXPECT_EQ(fig9.runs[0].problem, ProblemId::allen_cahn_steady);
  EXPECT_EQ(fig9.runs[0].train->optimizer, Optimizer::adam);
}

TEST(Presets, SweepPresetWritesSweepTable) {
  TempDir dir;
  Preset p = make_preset("fig1");
  p.runs.resize(2);
  p.sweep_values.resize(2);
  for (auto& run : p.runs) {
    run.model.neurons = run.grid.counts[0] = run.name == "m100" ? 20 : 30;
  }
  p.sweep_values = {20, 30};
  RunOptions opts;
  opts.output_root = dir.path();
  opts.seeds = 2;
  const PresetArtifacts a = run_preset(p, opts);
  EXPECT_EQ(a.runs.size(), 2u);
  const std::string sweep = slurp(a.directory / "sweep.csv");
  EXPECT_EQ(sweep.substr(0, sweep.find('\n')), "M = N,entropy_ad,error_ad,entropy_fd_central2,error_fd_central2");
  EXPECT_TRUE(fs::exists(a.directory / "summary.json"));
  EXPECT_TRUE(fs::exists(a.directory / "sweep_entropy.svg"));
}

// ---------------------------------------------------------------------- CLI

TEST(Cli, InvalidProblemExitsTwoWithoutArtifacts) {
  TempDir dir;
  const fs::path cfg = dir.path() / "bad.ini";
  std::ofstream(cfg) << replace(kSolveIni, "problem = poisson1d", "problem = heat7d");
  const fs::path out = dir.path() / "out";
  const std::string cmd = std::string(ADFD_CLI) + " run " + cfg.string() + " --out " + out.string() +
                          " > /dev/null 2>&1";
  EXPECT_EQ(exit_status(cmd), 2);
  EXPECT_FALSE(fs::exists(out));
}

TEST(Cli, UnknownPresetExitsTwo) {
  TempDir dir;
  const std::string cmd = std::string(ADFD_CLI) + " preset fig42 --out " + dir.path().string() +
                          " > /dev/null 2>&1";
  EXPECT_EQ(exit_status(cmd), 2);
}

TEST(Cli, RunHonoursEnvironmentRootAndDivergenceCode) {
  TempDir dir;
  const fs::path good = dir.path() / "good.ini";
  std::ofstream(good) << kSolveIni;
  const std::string env = "ADFD_OUTPUT_ROOT=" + (dir.path() / "env").string() + " ";
  EXPECT_EQ(exit_status(env + ADFD_CLI + " run " + good.string() + " --no-plots > /dev/null 2>&1"), 0);
  EXPECT_TRUE(fs::exists(dir.path() / "env" / "small_solve" / "summary.json"));
  EXPECT_FALSE(fs::exists(dir.path() / "env" / "small_solve" / "seed_000" / "singular_values.svg"));

  const fs::path boom = dir.path() / "boom.ini";
  std::ofstream(boom) << replace(replace(kTrainIni, "lr = 1e-3", "lr = 1e6"), "steps = 20", "steps = 200");
  EXPECT_EQ(exit_status(std::string(ADFD_CLI) + " run " + boom.string() + " --out " +
                        (dir.path() / "o").string() + " > /dev/null 2>&1"),
            3);
  EXPECT_TRUE(fs::exists(dir.path() / "o" / "small_train" / "summary.json"));
}

TEST(Cli, VerifyWritesReport) {
  TempDir dir;
  const fs::path cfg = dir.path() / "v.ini";
  std::ofstream(cfg) << kSolveIni;
  EXPECT_EQ(exit_status(std::string(ADFD_CLI) + " verify " + cfg.string() + " --out " +
                        dir.path().string() + " > /dev/null 2>&1"),
            0);
  const json r = json::parse(slurp(dir.path() / "small_solve" / "verify.json"));
  EXPECT_EQ(r["seeds"].size(), 2u);
}
