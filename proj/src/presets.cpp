#include <cmath>
#include <cstdio>
#include <fstream>

#include "adfd/harness.hpp"
#include "adfd/plot.hpp"

namespace adfd {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

ExperimentConfig solve_run(std::string name, ProblemId problem, std::size_t neurons,
                           std::size_t points, double cutoff) {
  ExperimentConfig c;
  c.name = std::move(name);
  c.problem = problem;
  c.seeds = kPresetSeeds;
  c.model.type = ModelType::rfm;
  c.model.neurons = neurons;
  c.grid.counts = {points};
  c.solve = SolveSection{};
  c.solve->cutoff = cutoff;
  return c;
}

ExperimentConfig train_run(std::string name, ProblemId problem, std::size_t points,
                           Optimizer optimizer, double lr, std::size_t steps, double kernel_threshold) {
  ExperimentConfig c;
  c.name = std::move(name);
  c.problem = problem;
  c.seeds = kPresetSeeds;
  c.model.type = ModelType::two_layer;
  c.model.neurons = 100;
  c.grid.counts = {points};
  c.train = TrainSection{};
  c.train->optimizer = optimizer;
  c.train->lr = lr;
  c.train->steps = steps;
  c.train->record_interval = 10;
  c.train->kernel_threshold = kernel_threshold;
  return c;
}

// [1, 50, 50, 50, 1] tanh with fan-in scaled initial weights.
void use_deep_net(ExperimentConfig& c, ModelType type) {
  c.model.type = type;
  c.model.widths = {1, 50, 50, 50, 1};
  c.model.activation = Activation::tanh;
  c.model.init = InitScheme::fan_in;
}

PositionSpec stride(std::size_t k) {
  PositionSpec p;
  p.kind = k <= 1 ? PositionSpec::Kind::all : PositionSpec::Kind::every;
  p.stride = k;
  return p;
}

}  // namespace

std::vector<std::string> preset_names() {
  return {"fig1", "fig2a", "fig2b", "fig2c", "fig2d", "fig3", "fig4",
          "fig5", "fig6",  "fig7",  "fig8",  "fig9",  "appendixB"};
}

Preset make_preset(std::string_view name) {
  Preset p;
  p.name = std::string(name);
  if (name == "fig1") {
    p.description = "1D Poisson RFM, entropy and error against M = N";
    p.sweep_label = "M = N";
    for (std::size_t m : {100, 300, 500, 1000}) {
      ExperimentConfig c = solve_run("m" + std::to_string(m), ProblemId::poisson1d, m, m, 1e-12);
      c.solve->positions = stride(m / 100);
      p.runs.push_back(c);
      p.sweep_values.push_back(static_cast<double>(m));
    }
  } else if (name == "fig2a") {
    p.description = "1D Poisson RFM spectra, sin, M = N = 100";
    p.runs.push_back(solve_run("sin_m100", ProblemId::poisson1d, 100, 100, 1e-12));
  } else if (name == "fig2b") {
    p.description = "1D Poisson RFM spectra, tanh, M = N = 300";
    ExperimentConfig c = solve_run("tanh_m300", ProblemId::poisson1d, 300, 300, 1e-12);
    c.model.activation = Activation::tanh;
    c.solve->positions = stride(3);
    p.runs.push_back(c);
  } else if (name == "fig2c") {
    p.description = "2D Poisson RFM spectra, sin, M = 200, 64 x 64 grid";
    ExperimentConfig c = solve_run("sin_m200_n64x64", ProblemId::poisson2d, 200, 64, 1e-12);
    c.solve->positions = stride(2);
    p.runs.push_back(c);
  } else if (name == "fig2d") {
    p.description = "2D Poisson RFM spectra, sin, M = N = 16 x 16";
    ExperimentConfig c = solve_run("sin_m256_n16x16", ProblemId::poisson2d, 256, 16, 1e-12);
    c.solve->positions = stride(2);
    p.runs.push_back(c);
  } else if (name == "fig3") {
    p.description = "1D Poisson RFM truncation sweep, M = N = 100";
    p.runs.push_back(solve_run("sweep_m100", ProblemId::poisson1d, 100, 100, 1e-12));
  } else if (name == "fig4") {
    p.description = "1D Poisson two-layer network, full-batch GD at both ends of the lr range";
    p.runs.push_back(train_run("lr1e-3", ProblemId::poisson1d, 100, Optimizer::gd, 1e-3, 20000, 1e-5));
    p.runs.push_back(train_run("lr1e-4", ProblemId::poisson1d, 100, Optimizer::gd, 1e-4, 20000, 1e-5));
  } else if (name == "fig5") {
    p.description = "2D Poisson: RFM spectra and two-layer network kernel, 64 x 64 grid";
    ExperimentConfig rfm = solve_run("rfm", ProblemId::poisson2d, 100, 64, 1e-13);
    rfm.solve->positions = stride(1);
    p.runs.push_back(rfm);
    ExperimentConfig nn = train_run("nn", ProblemId::poisson2d, 64, Optimizer::gd, 1e-3, 2000, 1e-4);
    nn.diff.h = 1.0 / 300.0;
    nn.lambda = 1.0;
    p.runs.push_back(nn);
  } else if (name == "fig6") {
    p.description = "1D biharmonic: RFM spectra and two-layer network training";
    ExperimentConfig rfm = solve_run("rfm", ProblemId::biharmonic1d, 500, 500, 1e-13);
    rfm.solve->positions = stride(5);
    p.runs.push_back(rfm);
    ExperimentConfig nn = train_run("nn", ProblemId::biharmonic1d, 64, Optimizer::gd, 1e-4, 20000, 1e-2);
    nn.lambda = 100.0;
    p.runs.push_back(nn);
  } else if (name == "fig7") {
    p.description = "1D Poisson with the last hidden layer of a random tanh network as features";
    ExperimentConfig c = solve_run("random_net", ProblemId::poisson1d, 50, 500, 1e-13);
    use_deep_net(c, ModelType::random_net);
    c.model.init = InitScheme::uniform;
    c.model.init_range = 0.1;
    c.diff.modes = {"ad", "fd:central2", "fd:five_point4"};
    p.runs.push_back(c);
  } else if (name == "fig8") {
    p.description = "1D Poisson deep tanh network trained with Adam";
    ExperimentConfig c = train_run("deep", ProblemId::poisson1d, 100, Optimizer::adam, 1e-3, 3000, 1e-8);
    use_deep_net(c, ModelType::deep);
    c.diff.modes = {"ad", "fd:central2", "fd:five_point4"};
    p.runs.push_back(c);
  } else if (name == "fig9") {
    p.description = "Steady Allen-Cahn deep tanh network trained with Adam";
    ExperimentConfig c = train_run("allen_cahn", ProblemId::allen_cahn_steady, 100, Optimizer::adam,
                                   1e-3, 3000, 1e-10);
    use_deep_net(c, ModelType::deep);
    // With unit boundary weight training stalls near u = 0.
    c.lambda = 100.0;
    c.diff.modes = {"ad", "fd:central2"};
    p.runs.push_back(c);
  } else if (name == "appendixB") {
    p.description = "1D Poisson grid-size sweep: RFM spectra and two-layer training curves";
    for (std::size_t m : {1000, 2000}) {
      ExperimentConfig c = solve_run("rfm_m" + std::to_string(m), ProblemId::poisson1d, m, m, 1e-12);
      c.solve->positions = stride(m / 50);
      p.runs.push_back(c);
    }
    for (std::size_t m : {100, 500, 1000}) {
      ExperimentConfig c = train_run("nn_m" + std::to_string(m), ProblemId::poisson1d, m,
                                     Optimizer::gd, 1e-3, 5000, 1e-5);
      c.model.neurons = m;
      p.runs.push_back(c);
    }
  } else {
    std::string known;
    for (const auto& n : preset_names()) known += (known.empty() ? "" : ", ") + n;
    throw ConfigError("unknown preset '" + std::string(name) + "' (known: " + known + ")");
  }
  for (auto& run : p.runs) {
    run.output_directory = p.name + "/" + run.name;
    validate_config(run);
  }
  return p;
}

PresetArtifacts run_preset(const Preset& preset, const RunOptions& options) {
  PresetArtifacts out;
  out.directory = options.output_root / preset.name;
  for (const auto& run : preset.runs) validate_config(run);
  if (options.seeds && *options.seeds == 0) throw ConfigError("seed count must be >= 1");

  json runs = json::array();
  for (const auto& run : preset.runs) {
    out.runs.push_back(run_experiment(run, options));
    const RunArtifacts& a = out.runs.back();
    out.diverged = out.diverged || a.diverged;
    json r = {{"name", run.name},
              {"directory", fs::relative(a.directory, out.directory).generic_string()},
              {"run_id", a.run_id},
              {"diverged", a.diverged}};
    for (const char* key : {"H_AD", "H_FD", "e_AD", "e_FD"}) r[key] = a.summary[key];
    runs.push_back(r);
    if (a.diverged) break;
  }

  json s;
  s["preset"] = preset.name;
  s["description"] = preset.description;
  s["runs"] = runs;
  s["diverged"] = out.diverged;

  if (!preset.sweep_values.empty() && out.runs.size() == preset.runs.size()) {
    const auto modes = preset.runs.front().diff_modes();
    std::vector<std::string> header{preset.sweep_label};
    std::vector<Vector> cols;
    std::vector<PlotSeries> entropy_series, error_series;
    const bool solve = preset.runs.front().solve.has_value();
    const char* entropy_key = solve ? "entropy" : "kernel_entropy";
    const char* error_key = solve ? "rel_residual_at_cutoff" : "final_rel_train_err";
    for (const auto& mode : modes) {
      const std::string slug = mode_slug(mode);
      Vector h, e;
      for (const auto& a : out.runs) {
        const json& agg = a.summary["aggregate"];
        auto mean = [&](const std::string& key) {
          const std::string full = "modes." + slug + "." + key;
          return agg.contains(full) ? agg[full]["mean"].get<double>() : std::nan("");
        };
        h.push_back(mean(entropy_key));
        e.push_back(mean(error_key));
      }
      header.push_back("entropy_" + slug);
      header.push_back("error_" + slug);
      cols.push_back(h);
      cols.push_back(e);
      entropy_series.push_back({mode.label(), preset.sweep_values, h, PlotSeries::Style::line});
      error_series.push_back({mode.label(), preset.sweep_values, e, PlotSeries::Style::line});
    }
    // The sweep column holds the swept values themselves.
    std::vector<std::size_t> values;
    for (double v : preset.sweep_values) values.push_back(static_cast<std::size_t>(std::llround(v)));
    write_csv(out.directory / "sweep.csv", header, values, cols);
    json sweep = {{"label", preset.sweep_label}, {"values", preset.sweep_values}, {"csv", "sweep.csv"}};
    const bool plots = options.plots && preset.runs.front().plots;
    if (plots) {
      try {
        emit_plot(entropy_series, {"Truncated entropy", preset.sweep_label, "entropy", false, false},
                  out.directory / "sweep_entropy.svg");
        emit_plot(error_series, {"Error", preset.sweep_label, "relative error", false, true},
                  out.directory / "sweep_error.svg");
      } catch (const std::invalid_argument& e) {
        sweep["plot_error"] = e.what();
      }
    }
    s["sweep"] = sweep;
  }
  std::ofstream f(out.directory / "summary.json", std::ios::binary);
  f << s.dump(2) << '\n';
  out.summary = s;
  return out;
}

}  // namespace adfd
