#include "adfd/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <limits>
#include <map>
#include <memory>
#include <thread>

#include "adfd/plot.hpp"
#include "adfd/spectral.hpp"
#include "adfd/training.hpp"

namespace adfd {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

double elapsed(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << j.dump(2) << '\n';
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << text;
}

// Keeps the points a log axis can show.
PlotSeries loggable(std::string label, std::span<const double> x, std::span<const double> y,
                    PlotSeries::Style style, bool log_x) {
  PlotSeries s;
  s.label = std::move(label);
  s.style = style;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(y[i] > 0.0) || !std::isfinite(y[i]) || !std::isfinite(x[i])) continue;
    if (log_x && !(x[i] > 0.0)) continue;
    s.x.push_back(x[i]);
    s.y.push_back(y[i]);
  }
  return s;
}

void plot_if_any(std::vector<PlotSeries> series, const AxesSpec& axes, const fs::path& path,
                 std::vector<fs::path>& svg_paths) {
  std::erase_if(series, [](const PlotSeries& s) { return s.x.empty(); });
  if (series.empty()) return;
  emit_plot(series, axes, path);
  svg_paths.push_back(path);
}

Vector index_vector(std::size_t n, std::size_t first = 1) {
  Vector v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = static_cast<double>(first + i);
  return v;
}

double relative_l2(const PdeProblem& problem, const Grid& eval, std::span<const double> values) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < eval.size(); ++i) {
    const double u = problem.exact(eval.point(i));
    num += (values[i] - u) * (values[i] - u);
    den += u * u;
  }
  return std::sqrt(num / den);
}

json prop1_json(const Prop1Report& r) {
  return {{"h", r.h},           {"lambda_max_fd", r.lambda_max_fd}, {"lambda_max_ad", r.lambda_max_ad},
          {"s_min", r.s_min},   {"s_max", r.s_max},                 {"lower", r.lower},
          {"upper", r.upper},   {"slack", r.slack},                 {"holds", r.holds}};
}

json prop2_json(const Prop2Report& r) {
  return {{"weights_invertible", r.weights_invertible},
          {"ratio", opt(r.ratio)},
          {"threshold", r.threshold},
          {"stencil_s_min", r.stencil_s_min},
          {"inverse_weight_s_min", r.inverse_weight_s_min},
          {"hypothesis_holds", r.hypothesis_holds},
          {"sigma_min_fd", r.sigma_min_fd},
          {"sigma_min_ad", r.sigma_min_ad},
          {"conclusion_holds", r.conclusion_holds},
          {"status", r.status}};
}

json not_applicable(const std::string& why) { return {{"status", "not applicable"}, {"reason", why}}; }

std::optional<std::size_t> first_of(const std::vector<DiffMode>& modes, DiffKind kind) {
  for (std::size_t i = 0; i < modes.size(); ++i)
    if (modes[i].kind == kind) return i;
  return std::nullopt;
}

// Fixed features of one seed; exactly one of the two members is used.
struct SeedFeatures {
  std::optional<FeatureModel> shallow;
  std::optional<DeepNetwork> deep;

  std::unique_ptr<FeatureBasis> basis() const {
    if (shallow) return std::make_unique<RandomFeatureBasis>(*shallow);
    return std::make_unique<DeepFeatureBasis>(*deep);
  }
};

SeedFeatures make_features(const ExperimentConfig& c, std::uint64_t seed) {
  SeedFeatures f;
  const PdeProblem p = c.make_problem_instance();
  if (c.model.type == ModelType::rfm || c.model.type == ModelType::two_layer)
    f.shallow = sample_features(c.model.neurons, static_cast<std::size_t>(p.dim), c.model.init_range,
                                seed, c.model.activation);
  else
    f.deep = make_deep_network(c.model.widths, c.model.activation, c.model.init_range, seed,
                               c.model.init);
  return f;
}

// Propositions for one FD mode against the AD system.
json verify_pair(const SeedFeatures& features, const Grid& grid, const AssembledSystem& ad,
                 const AssembledSystem& fd) {
  json out;
  out["prop1"] = prop1_json(verify_prop1(ad, fd));
  if (features.shallow && grid.dim == 1)
    out["prop2"] = prop2_json(verify_prop2(*features.shallow, grid, ad, fd));
  else
    out["prop2"] = not_applicable(grid.dim != 1 ? "two-dimensional grid" : "network features");
  out["discrepancy_fro"] = frobenius_norm(discrepancy_matrix(ad, fd));
  return out;
}

void put_headline(json& s, const std::vector<DiffMode>& modes, const json& per_mode,
                  const char* entropy_key, const char* cutoff_key) {
  auto pick = [&](std::optional<std::size_t> i, const char* key) {
    if (!i || !per_mode.contains(mode_slug(modes[*i]))) return json(nullptr);
    const json& m = per_mode.at(mode_slug(modes[*i]));
    return m.contains(key) ? m.at(key) : json(nullptr);
  };
  const auto ad = first_of(modes, DiffKind::ad);
  const auto fd = first_of(modes, DiffKind::fd);
  s["H_AD"] = pick(ad, entropy_key);
  s["H_FD"] = pick(fd, entropy_key);
  s["e_AD"] = pick(ad, cutoff_key);
  s["e_FD"] = pick(fd, cutoff_key);
  s["sigma_max_AD"] = pick(ad, "sigma_max");
  s["sigma_min_AD"] = pick(ad, "sigma_min");
  s["sigma_max_FD"] = pick(fd, "sigma_max");
  s["sigma_min_FD"] = pick(fd, "sigma_min");
}

json run_solve_seed(const ExperimentConfig& c, std::uint64_t seed, const fs::path& dir, bool plots,
                    std::vector<fs::path>& csv, std::vector<fs::path>& svg) {
  const SolveSection& sc = *c.solve;
  const PdeProblem problem = c.make_problem_instance();
  const Grid grid = make_grid(problem, c.grid.counts);
  const Grid eval = make_eval_grid(problem, c.grid.eval_points);
  const std::vector<DiffMode> modes = c.diff_modes();
  const SeedFeatures features = make_features(c, seed);
  const auto basis = features.basis();
  const DenseMatrix eval_features = basis->derivative(eval.points, 0, 0);

  std::vector<AssembledSystem> systems;
  std::vector<SvdResult> factors;
  json per_mode = json::object();
  std::size_t common_rank = std::numeric_limits<std::size_t>::max();
  for (const auto& mode : modes) {
    systems.push_back(assemble_system(problem, *basis, mode, grid, c.assembly_options()));
    factors.push_back(svd(systems.back().A));
    const Vector& sigma = factors.back().sigma;
    const SpectralReport rep = spectral_report(sigma, sc.cutoff);
    const std::size_t positive = static_cast<std::size_t>(
        std::count_if(sigma.begin(), sigma.end(), [](double s) { return s > 0.0; }));
    common_rank = std::min(common_rank, positive);

    json m;
    m["label"] = mode.label();
    m["h"] = mode.kind == DiffKind::fd ? json(systems.back().mode.h) : json(nullptr);
    m["rows"] = systems.back().A.rows();
    m["cols"] = systems.back().A.cols();
    m["sigma_max"] = rep.sigma_max;
    m["sigma_min"] = sigma.back();
    m["threshold"] = rep.threshold;
    m["cutoff"] = rep.cutoff;
    m["entropy"] = opt(rep.entropy);
    if (rep.cutoff >= 1) {
      const TruncatedSolve sol =
          truncated_pinv_solve(factors.back(), systems.back().A, systems.back().f, rep.cutoff);
      m["rel_residual_at_cutoff"] = sol.rel_residual;
      m["rel_l2_err"] = relative_l2(problem, eval, matvec(eval_features, sol.coefficients));
    }
    per_mode[mode_slug(mode)] = m;
  }

  std::vector<std::string> header{"index"};
  std::vector<Vector> columns;
  for (std::size_t k = 0; k < modes.size(); ++k) {
    header.push_back("sigma_" + mode_slug(modes[k]));
    columns.push_back(factors[k].sigma);
  }
  const std::size_t n_sigma = factors.front().sigma.size();
  std::vector<std::size_t> idx(n_sigma);
  for (std::size_t i = 0; i < n_sigma; ++i) idx[i] = i + 1;
  write_csv(dir / "singular_values.csv", header, idx, columns);
  csv.push_back(dir / "singular_values.csv");

  const std::vector<std::size_t> positions = sc.positions.resolve(common_rank);
  if (!positions.empty()) {
    std::vector<std::string> sh{"P"};
    std::vector<Vector> scol;
    for (std::size_t k = 0; k < modes.size(); ++k) {
      Vector res;
      for (std::size_t p : positions)
        res.push_back(truncated_pinv_solve(factors[k], systems[k].A, systems[k].f, p).rel_residual);
      const auto best = std::min_element(res.begin(), res.end());
      json& m = per_mode[mode_slug(modes[k])];
      m["sweep_min_position"] = positions[static_cast<std::size_t>(best - res.begin())];
      m["sweep_min_residual"] = *best;
      sh.push_back("rel_residual_" + mode_slug(modes[k]));
      scol.push_back(std::move(res));
    }
    write_csv(dir / "truncation_sweep.csv", sh, positions, scol);
    csv.push_back(dir / "truncation_sweep.csv");
    if (plots) {
      std::vector<PlotSeries> series;
      const Vector px(positions.begin(), positions.end());
      for (std::size_t k = 0; k < modes.size(); ++k)
        series.push_back(loggable(modes[k].label(), px, scol[k], PlotSeries::Style::line, false));
      plot_if_any(std::move(series),
                  {"Truncated pseudo-inverse residual", "rank P", "relative residual", false, true},
                  dir / "truncation_sweep.svg", svg);
    }
  }
  if (plots) {
    std::vector<PlotSeries> series;
    for (std::size_t k = 0; k < modes.size(); ++k)
      series.push_back(loggable(modes[k].label(), index_vector(n_sigma), factors[k].sigma,
                                PlotSeries::Style::markers, false));
    plot_if_any(std::move(series), {"Singular values of A", "index", "singular value", false, true},
                dir / "singular_values.svg", svg);
  }

  json verification = json::object();
  const auto ad = first_of(modes, DiffKind::ad);
  if (ad) {
    for (std::size_t k = 0; k < modes.size(); ++k)
      if (modes[k].kind == DiffKind::fd)
        verification[mode_slug(modes[k])] = verify_pair(features, grid, systems[*ad], systems[k]);
  }

  json flow = json::object();
  if (sc.flow_steps > 0) {
    for (std::size_t k = 0; k < modes.size(); ++k) {
      const double lambda_max = factors[k].sigma.front() * factors[k].sigma.front();
      const double lr = sc.flow_lr / lambda_max;
      const auto samples = rfm_gradient_flow(systems[k], Vector(systems[k].A.cols(), 0.0), lr,
                                             sc.flow_steps, sc.flow_record_interval);
      const std::vector<DenseMatrix> kernels{gram_rows(systems[k].A)};
      const double t_star = default_t_star(samples, kernels, sc.flow_band_b);
      const Theorem1Report rep = theorem1_envelopes(samples, kernels, sc.flow_band_a, sc.flow_band_b,
                                                    t_star, samples.back().time);
      const std::string slug = mode_slug(modes[k]);
      write_csv(dir / ("flow_" + slug + ".csv"), {"time", "loss", "lower", "upper"}, {},
                {rep.times, rep.loss, rep.lower, rep.upper});
      csv.push_back(dir / ("flow_" + slug + ".csv"));
      flow[slug] = {{"learning_rate", lr},
                    {"t_star", rep.t_star},
                    {"t_end", rep.t_end},
                    {"eta", rep.eta},
                    {"zeta", rep.zeta},
                    {"band_mean_min", rep.band_mean_min},
                    {"band_mean_max", rep.band_mean_max},
                    {"max_out_of_band_fraction", rep.max_out_of_band_fraction},
                    {"violations", rep.violations},
                    {"violation_fraction", rep.violation_fraction},
                    {"samples", rep.times.size()}};
      if (plots)
        plot_if_any({loggable("loss", rep.times, rep.loss, PlotSeries::Style::line, false),
                     loggable("lower envelope", rep.times, rep.lower, PlotSeries::Style::line, false),
                     loggable("upper envelope", rep.times, rep.upper, PlotSeries::Style::line, false)},
                    {"Gradient flow " + modes[k].label(), "time", "loss", false, true},
                    dir / ("flow_" + slug + ".svg"), svg);
    }
  }

  json s;
  s["kind"] = "solve";
  s["seed"] = seed;
  s["cutoff_a"] = sc.cutoff;
  s["modes"] = per_mode;
  put_headline(s, modes, per_mode, "entropy", "cutoff");
  s["verification"] = verification;
  if (!flow.empty()) s["flow"] = flow;
  return s;
}

json kernel_json(const KernelSnapshot& k, double band_b) {
  json j;
  const Vector lam = clamp_spectrum(k.eigenvalues);
  j["step"] = k.step;
  j["threshold"] = k.threshold;
  j["cutoff"] = k.cutoff;
  j["entropy"] = opt(k.entropy);
  j["lambda_max"] = lam.front();
  j["lambda_min"] = lam.back();
  j["sigma_max"] = std::sqrt(lam.front());
  j["sigma_min"] = std::sqrt(lam.back());
  if (band_b > 0.0) {
    try {
      const EntropySpeed es = entropy_speed_indicator(lam, k.threshold, band_b);
      j["entropy_speed"] = {{"cutoff_b", es.cutoff_b}, {"lhs", es.lhs}, {"rhs", es.rhs}};
    } catch (const std::invalid_argument& e) {
      j["entropy_speed"] = not_applicable(e.what());
    }
  }
  return j;
}

json run_train_seed(const ExperimentConfig& c, std::uint64_t seed, const fs::path& dir, bool plots,
                    std::vector<fs::path>& csv, std::vector<fs::path>& svg, bool& diverged) {
  const TrainSection& tc = *c.train;
  const PdeProblem problem = c.make_problem_instance();
  const Grid grid = make_grid(problem, c.grid.counts);
  const std::vector<DiffMode> modes = c.diff_modes();
  const SeedFeatures features = make_features(c, seed);
  const ModelState initial = features.shallow ? ModelState::two_layer(*features.shallow, tc.precision)
                                              : ModelState::deep_net(*features.deep);

  json per_mode = json::object();
  std::vector<TrainHistory> histories;
  for (const auto& mode : modes) {
    TrainConfig cfg;
    cfg.optimizer = tc.optimizer;
    cfg.learning_rate = tc.lr;
    cfg.steps = tc.steps;
    cfg.mode = mode;
    cfg.assembly = c.assembly_options();
    cfg.record_interval = tc.record_interval;
    cfg.kernel_snapshots = true;
    cfg.snapshot_interval = tc.snapshot_interval;
    cfg.kernel_threshold = tc.kernel_threshold;
    cfg.eval_points = c.grid.eval_points;
    cfg.seed = seed;
    histories.push_back(train(initial, problem, grid, cfg));
    const TrainHistory& h = histories.back();

    const std::string slug = mode_slug(mode);
    fs::create_directories(dir / slug);
    write_csv(dir / slug / "training.csv",
              {"step", "loss_pinn", "loss_f", "rel_train_err", "rel_l2_err"}, h.steps,
              {h.loss_pinn, h.loss_f, h.rel_train_err, h.rel_l2_err});
    csv.push_back(dir / slug / "training.csv");
    for (const auto& snap : h.snapshots) {
      const fs::path p = dir / slug / ("kernel_spectrum_" + std::to_string(snap.step) + ".csv");
      std::vector<std::size_t> idx(snap.eigenvalues.size());
      for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i + 1;
      write_csv(p, {"index", "eigenvalue"}, idx, {snap.eigenvalues});
      csv.push_back(p);
    }

    json m;
    m["label"] = mode.label();
    m["diverged"] = h.diverged;
    m["divergence_step"] = h.diverged ? json(h.divergence_step) : json(nullptr);
    m["steps_recorded"] = h.steps.size();
    if (!h.steps.empty()) {
      m["initial_rel_train_err"] = h.rel_train_err.front();
      m["final_step"] = h.steps.back();
      m["final_loss_pinn"] = h.loss_pinn.back();
      m["final_loss_f"] = h.loss_f.back();
      m["final_rel_train_err"] = h.rel_train_err.back();
      m["final_rel_l2_err"] = h.rel_l2_err.back();
      const auto at100 = std::find(h.steps.begin(), h.steps.end(), std::size_t{100});
      if (at100 != h.steps.end())
        m["rel_train_err_step100"] = h.rel_train_err[static_cast<std::size_t>(at100 - h.steps.begin())];
    }
    if (!h.snapshots.empty()) {
      const json k = kernel_json(h.snapshots.back(), tc.kernel_band_b);
      m["kernel"] = k;
      m["kernel_entropy"] = k["entropy"];
      m["kernel_cutoff"] = k["cutoff"];
      m["sigma_max"] = k["sigma_max"];
      m["sigma_min"] = k["sigma_min"];
    }
    per_mode[slug] = m;
    if (h.diverged) {
      diverged = true;
      break;
    }
  }

  if (plots) {
    std::vector<PlotSeries> loss, err, l2, spec;
    for (std::size_t k = 0; k < histories.size(); ++k) {
      const TrainHistory& h = histories[k];
      const Vector steps(h.steps.begin(), h.steps.end());
      const std::string label = modes[k].label();
      loss.push_back(loggable(label, steps, h.loss_pinn, PlotSeries::Style::line, false));
      err.push_back(loggable(label, steps, h.rel_train_err, PlotSeries::Style::line, false));
      l2.push_back(loggable(label, steps, h.rel_l2_err, PlotSeries::Style::line, false));
      if (!h.snapshots.empty()) {
        const Vector lam = clamp_spectrum(h.snapshots.back().eigenvalues);
        spec.push_back(loggable(label, index_vector(lam.size()), lam, PlotSeries::Style::markers, false));
      }
    }
    plot_if_any(std::move(loss), {"Training loss", "step", "PINN loss", false, true},
                dir / "training_loss.svg", svg);
    plot_if_any(std::move(err), {"Relative training error", "step", "relative error", false, true},
                dir / "training_error.svg", svg);
    plot_if_any(std::move(l2), {"Relative L2 error", "step", "relative L2 error", false, true},
                dir / "l2_error.svg", svg);
    plot_if_any(std::move(spec), {"Kernel eigenvalues", "index", "eigenvalue", false, true},
                dir / "kernel_spectrum.svg", svg);
  }

  json s;
  s["kind"] = "train";
  s["seed"] = seed;
  s["kernel_threshold"] = tc.kernel_threshold;
  s["modes"] = per_mode;
  put_headline(s, modes, per_mode, "kernel_entropy", "kernel_cutoff");

  // Propositions concern the frozen-feature systems of the initial model.
  json verification = json::object();
  const auto ad = first_of(modes, DiffKind::ad);
  if (features.shallow && ad && !problem.nonlinear()) {
    const RandomFeatureBasis basis(*features.shallow);
    const AssembledSystem sys_ad = assemble_system(problem, basis, modes[*ad], grid, c.assembly_options());
    for (const auto& mode : modes)
      if (mode.kind == DiffKind::fd)
        verification[mode_slug(mode)] = verify_pair(
            features, grid, sys_ad, assemble_system(problem, basis, mode, grid, c.assembly_options()));
  }
  s["verification"] = verification;
  s["diverged"] = diverged;
  return s;
}

void flatten(const json& j, const std::string& prefix, std::map<std::string, std::vector<double>>& nums,
             std::map<std::string, std::pair<std::size_t, std::size_t>>& bools) {
  if (j.is_object()) {
    for (const auto& [key, value] : j.items())
      flatten(value, prefix.empty() ? key : prefix + "." + key, nums, bools);
  } else if (j.is_boolean()) {
    auto& b = bools[prefix];
    b.first += j.get<bool>() ? 1 : 0;
    b.second += 1;
  } else if (j.is_number()) {
    nums[prefix].push_back(j.get<double>());
  }
}

}  // namespace

std::string mode_slug(const DiffMode& mode) {
  std::string s = mode.label();
  std::replace(s.begin(), s.end(), ':', '_');
  return s;
}

void write_csv(const fs::path& path, const std::vector<std::string>& header,
               const std::vector<std::size_t>& index, const std::vector<Vector>& columns) {
  const std::size_t width = columns.size() + (index.empty() ? 0 : 1);
  if (header.size() != width) throw std::invalid_argument("write_csv: header does not match columns");
  const std::size_t rows = index.empty() ? (columns.empty() ? 0 : columns.front().size()) : index.size();
  for (const auto& c : columns)
    if (c.size() != rows) throw std::invalid_argument("write_csv: columns differ in length");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_csv: cannot write '" + path.string() + "'");
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << '\n';
  char buf[40];
  for (std::size_t r = 0; r < rows; ++r) {
    bool first = true;
    if (!index.empty()) {
      out << index[r];
      first = false;
    }
    for (const auto& c : columns) {
      std::snprintf(buf, sizeof buf, "%.16e", c[r]);
      out << (first ? "" : ",") << buf;
      first = false;
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("write_csv: write failed for '" + path.string() + "'");
}

json run_seed(const ExperimentConfig& config, std::uint64_t seed, const fs::path& directory,
              bool plots, std::vector<fs::path>& csv_paths, std::vector<fs::path>& svg_paths,
              bool& diverged) {
  const auto t0 = std::chrono::steady_clock::now();
  fs::create_directories(directory);
  diverged = false;
  json s = config.solve ? run_solve_seed(config, seed, directory, plots, csv_paths, svg_paths)
                        : run_train_seed(config, seed, directory, plots, csv_paths, svg_paths, diverged);
  s["wall_time_s"] = elapsed(t0);
  write_json(directory / "summary.json", s);
  return s;
}

json aggregate_summaries(const std::vector<json>& summaries) {
  std::map<std::string, std::vector<double>> nums;
  std::map<std::string, std::pair<std::size_t, std::size_t>> bools;
  for (const auto& s : summaries) flatten(s, "", nums, bools);
  json out = json::object();
  for (const auto& [key, values] : nums) {
    double sum = 0.0;
    for (double v : values) sum += v;
    out[key] = {{"mean", sum / static_cast<double>(values.size())},
                {"min", *std::min_element(values.begin(), values.end())},
                {"max", *std::max_element(values.begin(), values.end())},
                {"count", values.size()}};
  }
  for (const auto& [key, tally] : bools)
    out[key] = {{"true_count", tally.first}, {"count", tally.second}};
  return out;
}

RunArtifacts run_experiment(const ExperimentConfig& config, const RunOptions& options) {
  validate_config(config);
  ExperimentConfig cfg = config;
  if (options.seeds) {
    if (*options.seeds == 0) throw ConfigError("seed count must be >= 1");
    cfg.seeds = *options.seeds;
  }
  const bool plots = options.plots && cfg.plots;
  const auto t0 = std::chrono::steady_clock::now();

  RunArtifacts art;
  art.config_echo = to_ini(cfg);
  art.run_id = cfg.name + "-" + hex64(fnv1a(art.config_echo)).substr(0, 12);
  art.directory = options.output_root / (cfg.output_directory.empty() ? cfg.name : cfg.output_directory);
  fs::create_directories(art.directory);
  write_text(art.directory / "config.ini", art.config_echo);

  const std::size_t n = cfg.seeds;
  std::vector<json> summaries(n);
  std::vector<std::vector<fs::path>> csvs(n), svgs(n);
  std::vector<char> diverged(n, 0);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k; (k = next.fetch_add(1)) < n;) {
      try {
        bool d = false;
        char name[32];
        std::snprintf(name, sizeof name, "seed_%03zu", k);
        summaries[k] = run_seed(cfg, cfg.seed + k, art.directory / name, plots, csvs[k], svgs[k], d);
        diverged[k] = d;
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::clamp<std::size_t>(options.jobs, 1, n);
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  for (std::size_t k = 0; k < n; ++k) {
    art.csv_paths.insert(art.csv_paths.end(), csvs[k].begin(), csvs[k].end());
    art.svg_paths.insert(art.svg_paths.end(), svgs[k].begin(), svgs[k].end());
    art.diverged = art.diverged || diverged[k];
  }
  art.wall_time = elapsed(t0);

  json agg = aggregate_summaries(summaries);
  json s;
  s["run_id"] = art.run_id;
  s["name"] = cfg.name;
  s["problem"] = problem_name(cfg.problem);
  s["model"] = model_type_name(cfg.model.type);
  s["kind"] = cfg.solve ? "solve" : "train";
  s["seeds"] = n;
  s["first_seed"] = cfg.seed;
  for (const char* key : {"H_AD", "H_FD", "e_AD", "e_FD", "sigma_max_AD", "sigma_min_AD",
                          "sigma_max_FD", "sigma_min_FD"})
    s[key] = agg.contains(key) ? agg[key]["mean"] : json(nullptr);
  s["aggregate"] = agg;
  s["per_seed"] = summaries;
  s["diverged"] = art.diverged;
  s["wall_time_s"] = art.wall_time;
  art.summary = s;
  write_json(art.directory / "summary.json", s);
  return art;
}

json verify_experiment(const ExperimentConfig& config, std::size_t seeds) {
  validate_config(config);
  if (seeds == 0) throw ConfigError("seed count must be >= 1");
  if (config.model.type == ModelType::deep)
    throw ConfigError("verify needs fixed features: model type rfm, random_net or two_layer");
  const PdeProblem problem = config.make_problem_instance();
  if (problem.nonlinear()) throw ConfigError("verify needs a linear problem");
  const std::vector<DiffMode> modes = config.diff_modes();
  const auto ad = first_of(modes, DiffKind::ad);
  if (!ad || !first_of(modes, DiffKind::fd))
    throw ConfigError("verify needs an ad mode and at least one fd mode");
  const Grid grid = make_grid(problem, config.grid.counts);

  json out;
  out["name"] = config.name;
  out["problem"] = problem_name(config.problem);
  json runs = json::array();
  std::vector<json> checks;
  for (std::size_t k = 0; k < seeds; ++k) {
    const std::uint64_t seed = config.seed + k;
    const SeedFeatures features = make_features(config, seed);
    const auto basis = features.basis();
    const AssembledSystem sys_ad = assemble_system(problem, *basis, modes[*ad], grid, config.assembly_options());
    json per = json::object();
    for (const auto& mode : modes)
      if (mode.kind == DiffKind::fd)
        per[mode_slug(mode)] = verify_pair(
            features, grid, sys_ad, assemble_system(problem, *basis, mode, grid, config.assembly_options()));
    checks.push_back(per);
    runs.push_back({{"seed", seed}, {"checks", per}});
  }
  out["seeds"] = runs;
  out["aggregate"] = aggregate_summaries(checks);
  return out;
}

}  // namespace adfd
