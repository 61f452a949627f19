#include "adfd/config.hpp"

#include <algorithm>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace adfd {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_list(std::string_view text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const auto end = comma == std::string_view::npos ? text.size() : comma;
    std::string item = trim(text.substr(start, end - start));
    if (!item.empty()) out.push_back(std::move(item));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Reads one section, remembering which keys were consumed so that leftovers
// can be reported as unknown.
class SectionReader {
 public:
  SectionReader(std::string name, const boost::property_tree::ptree* tree)
      : name_(std::move(name)), tree_(tree) {}

  std::optional<std::string> raw(const std::string& key) {
    known_.insert(key);
    if (tree_ == nullptr) return std::nullopt;
    auto it = tree_->find(key);
    if (it == tree_->not_found()) return std::nullopt;
    return trim(it->second.data());
  }

  void read_string(const std::string& key, std::string& out) {
    if (auto v = raw(key)) out = *v;
  }

  void read_size(const std::string& key, std::size_t& out) {
    auto v = raw(key);
    if (!v) return;
    std::size_t value = 0;
    const auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), value);
    if (ec != std::errc{} || ptr != v->data() + v->size() || v->empty())
      fail(key, "expected a non-negative integer, got '" + *v + "'");
    out = value;
  }

  void read_u64(const std::string& key, std::uint64_t& out) {
    std::size_t tmp = out;
    read_size(key, tmp);
    out = tmp;
  }

  void read_double(const std::string& key, double& out) {
    auto v = raw(key);
    if (!v) return;
    out = parse_double(key, *v);
  }

  void read_bool(const std::string& key, bool& out) {
    auto v = raw(key);
    if (!v) return;
    std::string s = *v;
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    if (s == "true" || s == "yes" || s == "on" || s == "1") out = true;
    else if (s == "false" || s == "no" || s == "off" || s == "0") out = false;
    else fail(key, "expected a boolean, got '" + *v + "'");
  }

  void read_sizes(const std::string& key, std::vector<std::size_t>& out) {
    auto v = raw(key);
    if (!v) return;
    out.clear();
    for (const auto& item : split_list(*v)) {
      std::size_t value = 0;
      const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), value);
      if (ec != std::errc{} || ptr != item.data() + item.size())
        fail(key, "expected integers, got '" + item + "'");
      out.push_back(value);
    }
  }

  template <class Enum, class Parser>
  void read_enum(const std::string& key, Enum& out, Parser parse) {
    auto v = raw(key);
    if (!v) return;
    try {
      out = parse(*v);
    } catch (const std::invalid_argument& e) {
      fail(key, e.what());
    }
  }

  double parse_double(const std::string& key, const std::string& text) const {
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty() ||
        !std::isfinite(value))
      fail(key, "expected a finite number, got '" + text + "'");
    return value;
  }

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    throw ConfigError("[" + name_ + "] " + key + ": " + what);
  }

  void finish() const {
    if (tree_ == nullptr) return;
    for (const auto& [key, child] : *tree_) {
      if (!known_.contains(key)) throw ConfigError("[" + name_ + "] unknown key '" + key + "'");
      if (!child.empty()) throw ConfigError("[" + name_ + "] nested key '" + key + "'");
    }
  }

 private:
  std::string name_;
  const boost::property_tree::ptree* tree_;
  std::set<std::string> known_;
};

PositionSpec parse_positions(SectionReader& reader, const std::string& text) {
  PositionSpec spec;
  if (text == "all") return spec;
  if (text.rfind("every:", 0) == 0) {
    spec.kind = PositionSpec::Kind::every;
    const std::string n = trim(std::string_view(text).substr(6));
    const auto [ptr, ec] = std::from_chars(n.data(), n.data() + n.size(), spec.stride);
    if (ec != std::errc{} || ptr != n.data() + n.size() || spec.stride == 0)
      reader.fail("positions", "bad stride in '" + text + "'");
    return spec;
  }
  spec.kind = PositionSpec::Kind::list;
  for (const auto& item : split_list(text)) {
    std::size_t value = 0;
    const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), value);
    if (ec != std::errc{} || ptr != item.data() + item.size() || value == 0)
      reader.fail("positions", "expected positive integers, got '" + item + "'");
    spec.values.push_back(value);
  }
  if (spec.values.empty()) reader.fail("positions", "empty list");
  if (!std::is_sorted(spec.values.begin(), spec.values.end()) ||
      std::adjacent_find(spec.values.begin(), spec.values.end()) != spec.values.end())
    reader.fail("positions", "list must be strictly ascending");
  return spec;
}

template <class T>
std::string join(const std::vector<T>& items) {
  std::ostringstream os;
  for (std::size_t i = 0; i < items.size(); ++i) os << (i ? ", " : "") << items[i];
  return os.str();
}

}  // namespace

std::string_view model_type_name(ModelType type) noexcept {
  switch (type) {
    case ModelType::rfm: return "rfm";
    case ModelType::two_layer: return "two_layer";
    case ModelType::random_net: return "random_net";
    case ModelType::deep: return "deep";
  }
  return "rfm";
}

ModelType parse_model_type(std::string_view name) {
  for (ModelType t : {ModelType::rfm, ModelType::two_layer, ModelType::random_net, ModelType::deep})
    if (model_type_name(t) == name) return t;
  throw std::invalid_argument("unknown model type '" + std::string(name) + "'");
}

std::string_view init_scheme_name(InitScheme scheme) noexcept {
  return scheme == InitScheme::fan_in ? "fan_in" : "uniform";
}

InitScheme parse_init_scheme(std::string_view name) {
  if (name == "uniform") return InitScheme::uniform;
  if (name == "fan_in") return InitScheme::fan_in;
  throw std::invalid_argument("unknown init scheme '" + std::string(name) + "'");
}

std::string_view boundary_derivative_name(BoundaryDerivative bd) noexcept {
  return bd == BoundaryDerivative::analytic ? "analytic" : "match_interior";
}

BoundaryDerivative parse_boundary_derivative(std::string_view name) {
  if (name == "match_interior") return BoundaryDerivative::match_interior;
  if (name == "analytic") return BoundaryDerivative::analytic;
  throw std::invalid_argument("unknown boundary derivative '" + std::string(name) + "'");
}

std::vector<std::size_t> PositionSpec::resolve(std::size_t max_rank) const {
  std::vector<std::size_t> out;
  switch (kind) {
    case Kind::all:
      for (std::size_t p = 1; p <= max_rank; ++p) out.push_back(p);
      break;
    case Kind::every:
      for (std::size_t p = 1; p <= max_rank; p += stride) out.push_back(p);
      if (max_rank > 0 && out.back() != max_rank) out.push_back(max_rank);
      break;
    case Kind::list:
      for (std::size_t p : values)
        if (p <= max_rank) out.push_back(p);
      break;
  }
  return out;
}

std::string PositionSpec::text() const {
  switch (kind) {
    case Kind::all: return "all";
    case Kind::every: return "every:" + std::to_string(stride);
    case Kind::list: return join(values);
  }
  return "all";
}

PdeProblem ExperimentConfig::make_problem_instance() const { return make_problem(problem, epsilon); }

std::vector<DiffMode> ExperimentConfig::diff_modes() const {
  const PdeProblem p = make_problem_instance();
  std::vector<DiffMode> out;
  for (const auto& text : diff.modes) {
    DiffMode m = parse_diff_mode(text, p);
    if (m.kind == DiffKind::fd) m.h = diff.h;
    m.boundary_derivative = diff.boundary_derivative;
    out.push_back(m);
  }
  return out;
}

AssemblyOptions ExperimentConfig::assembly_options() const {
  AssemblyOptions o;
  o.lambda = lambda;
  o.normalize = normalize;
  o.boundary_per_side = grid.boundary_per_side;
  return o;
}

ExperimentConfig parse_config(std::string_view text) {
  boost::property_tree::ptree tree;
  try {
    std::istringstream in{std::string(text)};
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ptree_error& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }

  static const std::set<std::string> sections{"experiment", "model", "diff", "grid",
                                              "solve",      "train", "output"};
  for (const auto& [name, child] : tree) {
    if (!sections.contains(name)) throw ConfigError("unknown section [" + name + "]");
    if (!child.data().empty() && child.empty())
      throw ConfigError("key '" + name + "' outside any section");
  }
  auto section = [&](const std::string& name) -> const boost::property_tree::ptree* {
    auto it = tree.find(name);
    return it == tree.not_found() ? nullptr : &it->second;
  };

  ExperimentConfig c;
  {
    SectionReader r("experiment", section("experiment"));
    if (!section("experiment")) throw ConfigError("missing section [experiment]");
    r.read_string("name", c.name);
    auto problem = r.raw("problem");
    if (!problem) r.fail("problem", "required");
    try {
      c.problem = parse_problem_id(*problem);
    } catch (const std::invalid_argument& e) {
      r.fail("problem", e.what());
    }
    r.read_double("epsilon", c.epsilon);
    r.read_u64("seed", c.seed);
    r.read_size("seeds", c.seeds);
    r.finish();
  }
  {
    SectionReader r("model", section("model"));
    r.read_enum("type", c.model.type, parse_model_type);
    r.read_size("neurons", c.model.neurons);
    r.read_sizes("widths", c.model.widths);
    r.read_enum("activation", c.model.activation, parse_activation);
    r.read_double("init_range", c.model.init_range);
    r.read_enum("init", c.model.init, parse_init_scheme);
    r.finish();
  }
  {
    SectionReader r("diff", section("diff"));
    if (auto v = r.raw("modes")) c.diff.modes = split_list(*v);
    r.read_double("h", c.diff.h);
    r.read_enum("boundary_derivative", c.diff.boundary_derivative, parse_boundary_derivative);
    r.finish();
  }
  {
    SectionReader r("grid", section("grid"));
    r.read_sizes("counts", c.grid.counts);
    r.read_size("boundary_per_side", c.grid.boundary_per_side);
    r.read_size("eval_points", c.grid.eval_points);
    r.finish();
  }
  if (const auto* s = section("solve")) {
    SectionReader r("solve", s);
    SolveSection solve;
    r.read_double("cutoff", solve.cutoff);
    if (auto v = r.raw("positions")) solve.positions = parse_positions(r, *v);
    r.read_double("lambda", c.lambda);
    r.read_bool("normalize", c.normalize);
    r.read_size("flow_steps", solve.flow_steps);
    r.read_double("flow_lr", solve.flow_lr);
    r.read_double("flow_band_a", solve.flow_band_a);
    r.read_double("flow_band_b", solve.flow_band_b);
    r.read_size("flow_record_interval", solve.flow_record_interval);
    r.finish();
    c.solve = solve;
  }
  if (const auto* s = section("train")) {
    SectionReader r("train", s);
    TrainSection train;
    r.read_enum("optimizer", train.optimizer, parse_optimizer);
    r.read_double("lr", train.lr);
    r.read_size("steps", train.steps);
    r.read_enum("precision", train.precision, parse_precision);
    r.read_double("lambda", c.lambda);
    r.read_bool("normalize", c.normalize);
    r.read_size("record_interval", train.record_interval);
    r.read_size("snapshot_interval", train.snapshot_interval);
    r.read_double("kernel_threshold", train.kernel_threshold);
    r.read_double("kernel_band_b", train.kernel_band_b);
    r.finish();
    c.train = train;
  }
  {
    SectionReader r("output", section("output"));
    r.read_string("directory", c.output_directory);
    r.read_bool("plots", c.plots);
    r.finish();
  }
  validate_config(c);
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

void validate_config(const ExperimentConfig& c) {
  auto fail = [](const std::string& what) { throw ConfigError(what); };
  if (c.name.empty()) fail("[experiment] name must not be empty");
  if (c.name.find_first_of("/\\") != std::string::npos || c.name == "." || c.name == "..")
    fail("[experiment] name must be a plain file name");
  if (c.seeds == 0) fail("[experiment] seeds must be >= 1");
  PdeProblem problem;
  try {
    problem = c.make_problem_instance();
  } catch (const std::invalid_argument& e) {
    fail(std::string("[experiment] ") + e.what());
  }

  if (c.solve.has_value() == c.train.has_value())
    fail("exactly one of [solve] and [train] must be present");

  const bool needs_widths = c.model.type == ModelType::random_net || c.model.type == ModelType::deep;
  if (c.solve && !(c.model.type == ModelType::rfm || c.model.type == ModelType::random_net))
    fail("[model] type must be rfm or random_net for a [solve] run");
  if (c.train && !(c.model.type == ModelType::two_layer || c.model.type == ModelType::deep))
    fail("[model] type must be two_layer or deep for a [train] run");
  if (needs_widths) {
    const auto& w = c.model.widths;
    if (w.size() < 3) fail("[model] widths needs input, at least one hidden layer and output");
    if (w.front() != static_cast<std::size_t>(problem.dim))
      fail("[model] widths must start with the problem dimension");
    if (w.back() != 1) fail("[model] widths must end with 1");
    if (std::find(w.begin(), w.end(), std::size_t{0}) != w.end())
      fail("[model] widths must be positive");
  } else if (c.model.neurons == 0) {
    fail("[model] neurons must be >= 1");
  }
  if (!(c.model.init_range > 0.0)) fail("[model] init_range must be positive");

  if (c.diff.modes.empty()) fail("[diff] modes must list at least one mode");
  if (c.diff.h < 0.0) fail("[diff] h must be >= 0");
  std::vector<DiffMode> modes;
  try {
    modes = c.diff_modes();
  } catch (const std::invalid_argument& e) {
    fail(std::string("[diff] ") + e.what());
  }
  std::set<std::string> labels;
  for (const auto& m : modes)
    if (!labels.insert(m.label()).second) fail("[diff] duplicate mode '" + m.label() + "'");

  Grid grid;
  try {
    grid = make_grid(problem, c.grid.counts);
  } catch (const std::invalid_argument& e) {
    fail(std::string("[grid] ") + e.what());
  }
  if (c.grid.eval_points < 2) fail("[grid] eval_points must be >= 2");
  try {
    for (const auto& m : modes) (void)plan_rows(problem, m, grid, c.assembly_options());
  } catch (const std::invalid_argument& e) {
    fail(std::string("[diff] ") + e.what());
  }

  if (c.solve) {
    const auto& s = *c.solve;
    if (problem.nonlinear()) fail("[solve] needs a linear problem");
    if (!(s.cutoff >= 0.0 && s.cutoff < 1.0)) fail("[solve] cutoff must lie in [0, 1)");
    if (s.flow_steps > 0) {
      if (!(s.flow_lr > 0.0)) fail("[solve] flow_lr must be positive");
      if (!(s.flow_band_a > 0.0 && s.flow_band_a < s.flow_band_b && s.flow_band_b <= 1.0))
        fail("[solve] flow band needs 0 < flow_band_a < flow_band_b <= 1");
      if (s.flow_record_interval == 0) fail("[solve] flow_record_interval must be >= 1");
    }
  }
  if (c.train) {
    const auto& t = *c.train;
    if (!(t.lr >= 0.0)) fail("[train] lr must be >= 0");
    if (t.steps == 0) fail("[train] steps must be >= 1");
    if (t.record_interval == 0) fail("[train] record_interval must be >= 1");
    if (!(t.kernel_threshold >= 0.0 && t.kernel_threshold < 1.0))
      fail("[train] kernel_threshold must lie in [0, 1)");
    if (t.kernel_band_b != 0.0 && !(t.kernel_band_b > t.kernel_threshold && t.kernel_band_b <= 1.0))
      fail("[train] kernel_band_b must exceed kernel_threshold and be <= 1");
    if (t.precision == Precision::f32 && c.model.type == ModelType::deep)
      fail("[train] f32 precision is available for two_layer models only");
  }
}

std::string to_ini(const ExperimentConfig& c) {
  std::ostringstream os;
  os << "[experiment]\n"
     << "name = " << c.name << "\n"
     << "problem = " << problem_name(c.problem) << "\n"
     << "epsilon = " << format_double(c.epsilon) << "\n"
     << "seed = " << c.seed << "\n"
     << "seeds = " << c.seeds << "\n\n";
  os << "[model]\n"
     << "type = " << model_type_name(c.model.type) << "\n"
     << "neurons = " << c.model.neurons << "\n";
  if (!c.model.widths.empty()) os << "widths = " << join(c.model.widths) << "\n";
  os << "activation = " << activation_name(c.model.activation) << "\n"
     << "init_range = " << format_double(c.model.init_range) << "\n"
     << "init = " << init_scheme_name(c.model.init) << "\n\n";
  os << "[diff]\n"
     << "modes = " << join(c.diff.modes) << "\n"
     << "h = " << format_double(c.diff.h) << "\n"
     << "boundary_derivative = " << boundary_derivative_name(c.diff.boundary_derivative) << "\n\n";
  os << "[grid]\n"
     << "counts = " << join(c.grid.counts) << "\n"
     << "boundary_per_side = " << c.grid.boundary_per_side << "\n"
     << "eval_points = " << c.grid.eval_points << "\n\n";
  if (c.solve) {
    const auto& s = *c.solve;
    os << "[solve]\n"
       << "cutoff = " << format_double(s.cutoff) << "\n"
       << "positions = " << s.positions.text() << "\n"
       << "lambda = " << format_double(c.lambda) << "\n"
       << "normalize = " << (c.normalize ? "true" : "false") << "\n"
       << "flow_steps = " << s.flow_steps << "\n"
       << "flow_lr = " << format_double(s.flow_lr) << "\n"
       << "flow_band_a = " << format_double(s.flow_band_a) << "\n"
       << "flow_band_b = " << format_double(s.flow_band_b) << "\n"
       << "flow_record_interval = " << s.flow_record_interval << "\n\n";
  }
  if (c.train) {
    const auto& t = *c.train;
    os << "[train]\n"
       << "optimizer = " << optimizer_name(t.optimizer) << "\n"
       << "lr = " << format_double(t.lr) << "\n"
       << "steps = " << t.steps << "\n"
       << "precision = " << precision_name(t.precision) << "\n"
       << "lambda = " << format_double(c.lambda) << "\n"
       << "normalize = " << (c.normalize ? "true" : "false") << "\n"
       << "record_interval = " << t.record_interval << "\n"
       << "snapshot_interval = " << t.snapshot_interval << "\n"
       << "kernel_threshold = " << format_double(t.kernel_threshold) << "\n"
       << "kernel_band_b = " << format_double(t.kernel_band_b) << "\n\n";
  }
  os << "[output]\n"
     << "directory = " << c.output_directory << "\n"
     << "plots = " << (c.plots ? "true" : "false") << "\n";
  return os.str();
}

}  // namespace adfd
