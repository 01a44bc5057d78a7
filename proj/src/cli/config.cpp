#include "lightray/cli/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

namespace lightray::cli {

namespace {

[[noreturn]] void invalid(const std::string& key, const std::string& message) {
  throw Error(ErrorCode::ConfigInvalid, "'" + key + "': " + message);
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

bool valid_key(std::string_view key) {
  if (key.empty() || key.front() == '.' || key.back() == '.') return false;
  for (char c : key) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' || c == '.';
    if (!ok) return false;
  }
  return key.find("..") == std::string_view::npos;
}

std::vector<std::string_view> words(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == ',')) ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t' && s[j] != ',') ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

std::optional<double> to_double(std::string_view w) {
  double v = 0.0;
  if (w.size() > 1 && w.front() == '+') w.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(w.data(), w.data() + w.size(), v);
  if (ec != std::errc() || ptr != w.data() + w.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::optional<long long> to_integer(std::string_view w) {
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(w.data(), w.data() + w.size(), v);
  if (ec != std::errc() || ptr != w.data() + w.size()) return std::nullopt;
  return v;
}

std::string join(const Eigen::VectorXd& v) {
  std::string out;
  for (Eigen::Index i = 0; i < v.size(); ++i) out += (i ? " " : "") + format_number(v(i));
  return out;
}

std::string join(const std::vector<int>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? " " : "") + std::to_string(v[i]);
  return out;
}

/// Reads typed values and remembers which keys were consumed.
class Reader {
 public:
  explicit Reader(const Config& config) : config_(config) {}

  std::optional<std::string> text(const std::string& key) {
    used_.insert(key);
    if (!config_.has(key)) return std::nullopt;
    return config_.get(key);
  }

  double number(const std::string& key, double fallback) {
    const auto t = text(key);
    if (!t) return fallback;
    const auto v = to_double(trim(*t));
    if (!v) invalid(key, "expected a number, got '" + *t + "'");
    return *v;
  }

  long long integer(const std::string& key, long long fallback) {
    const auto t = text(key);
    if (!t) return fallback;
    const auto v = to_integer(trim(*t));
    if (!v) invalid(key, "expected an integer, got '" + *t + "'");
    return *v;
  }

  bool flag(const std::string& key, bool fallback) {
    const auto t = text(key);
    if (!t) return fallback;
    if (*t == "true" || *t == "1") return true;
    if (*t == "false" || *t == "0") return false;
    invalid(key, "expected true or false, got '" + *t + "'");
  }

  std::optional<Eigen::VectorXd> numbers(const std::string& key, Eigen::Index size) {
    const auto t = text(key);
    if (!t) return std::nullopt;
    const auto w = words(*t);
    if (static_cast<Eigen::Index>(w.size()) != size) {
      invalid(key, "expected " + std::to_string(size) + " numbers, got " + std::to_string(w.size()));
    }
    Eigen::VectorXd v(size);
    for (Eigen::Index i = 0; i < size; ++i) {
      const auto x = to_double(w[static_cast<std::size_t>(i)]);
      if (!x) invalid(key, "'" + std::string(w[static_cast<std::size_t>(i)]) + "' is not a number");
      v(i) = *x;
    }
    return v;
  }

  std::optional<std::vector<int>> integers(const std::string& key, Eigen::Index size) {
    const auto t = text(key);
    if (!t) return std::nullopt;
    const auto w = words(*t);
    if (static_cast<Eigen::Index>(w.size()) != size) {
      invalid(key, "expected " + std::to_string(size) + " integers, got " + std::to_string(w.size()));
    }
    std::vector<int> v;
    for (auto s : w) {
      const auto x = to_integer(s);
      if (!x || *x < 0 || *x > 1000000) invalid(key, "'" + std::string(s) + "' is not a valid count");
      v.push_back(static_cast<int>(*x));
    }
    return v;
  }

  void finish() const {
    std::string unknown;
    for (const auto& [key, value] : config_.entries()) {
      if (!used_.count(key)) unknown += (unknown.empty() ? "" : ", ") + key;
    }
    if (!unknown.empty()) throw Error(ErrorCode::ConfigInvalid, "unknown keys: " + unknown);
  }

 private:
  const Config& config_;
  std::set<std::string> used_;
};

void require(bool ok, const std::string& key, const std::string& message) {
  if (!ok) invalid(key, message);
}

}  // namespace

Config Config::parse(std::string_view text, const std::string& source) {
  Config c;
  int line_number = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_number;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = source + ":" + std::to_string(line_number);
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw Error(ErrorCode::ConfigInvalid, where + ": expected 'key = value'");
    const std::string key(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));
    if (!valid_key(key)) throw Error(ErrorCode::ConfigInvalid, where + ": malformed key '" + key + "'");
    if (value.empty()) throw Error(ErrorCode::ConfigInvalid, where + ": empty value for '" + key + "'");
    if (c.has(key)) throw Error(ErrorCode::ConfigInvalid, where + ": duplicate key '" + key + "'");
    c.entries_[key] = value;
  }
  return c;
}

Config Config::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::ConfigInvalid, "cannot read config " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str(), path.string());
}

std::string Config::serialize() const {
  std::string out;
  for (const auto& [key, value] : entries_) out += key + " = " + value + "\n";
  return out;
}

const std::string& Config::get(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) throw Error(ErrorCode::ConfigInvalid, "missing key '" + key + "'");
  return it->second;
}

void Config::set(const std::string& key, std::string value) {
  if (!valid_key(key)) throw Error(ErrorCode::ConfigInvalid, "malformed key '" + key + "'");
  if (value.find_first_of("#\n") != std::string::npos || trim(value).empty()) {
    throw Error(ErrorCode::ConfigInvalid, "value for '" + key + "' cannot be stored");
  }
  entries_[key] = std::string(trim(value));
}

std::string format_number(double v) {
  char buffer[64];
  const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof buffer, v, std::chars_format::general, 17);
  if (ec != std::errc()) throw Error(ErrorCode::InvalidArgument, "number formatting failed");
  return std::string(buffer, ptr);
}

RunConfig RunConfig::from_config(const Config& config) {
  Reader r(config);
  RunConfig c;

  c.n = r.integer("n", 2);
  require(c.n == 2 || c.n == 3, "n", "must be 2 or 3");
  const Eigen::Index n = c.n;
  const long long seed = r.integer("seed", 0);
  require(seed >= 0, "seed", "must be >= 0");
  c.seed = static_cast<std::uint64_t>(seed);
  if (auto out = r.text("output")) c.output = *out;

  // field
  c.field.n = n;
  if (auto name = r.text("field.name")) c.field.name = *name;
  const auto names = builtin::names();
  require(c.field.name == "grid" || std::find(names.begin(), names.end(), c.field.name) != names.end(), "field.name",
          "unknown field '" + c.field.name + "'");
  c.field.sigma = r.number("field.sigma", c.field.sigma);
  require(c.field.sigma > 0.0, "field.sigma", "must be positive");
  c.field.amplitude = r.number("field.amplitude", c.field.amplitude);
  if (auto center = r.numbers("field.center", n + 1)) c.field.center = *center;
  const long long potential = r.integer("field.potential", 0);
  require(potential >= 0 && potential < 5, "field.potential", "must be in [0, 5)");
  c.field.potential = static_cast<int>(potential);
  Envelope env{r.number("field.envelope.speed", 0.0), r.number("field.envelope.radius", 2.5)};
  require(env.speed >= 0.0 && env.speed < 1.0, "field.envelope.speed", "must lie in [0, 1)");
  require(env.radius > 0.0, "field.envelope.radius", "must be positive");
  c.field.envelope = env;
  if (auto grid = r.text("field.grid_file")) c.field_grid = *grid;
  require(c.field.name != "grid" || !c.field_grid.empty(), "field.grid_file", "required when field.name = grid");

  // acquisition
  c.x_count = r.integer("acquisition.x.count", c.x_count);
  require(c.x_count >= 8 && c.x_count <= 4096, "acquisition.x.count", "must be in [8, 4096]");
  c.x_spacing = r.number("acquisition.x.spacing", c.x_spacing);
  require(c.x_spacing > 0.0, "acquisition.x.spacing", "must be positive");
  c.x_origin = r.numbers("acquisition.x.origin", n);

  const auto branches = r.text("acquisition.branches").value_or(n == 2 ? "both" : "plus");
  require(branches == "both" || branches == "plus", "acquisition.branches", "must be 'both' or 'plus'");
  c.branches = branches == "both" ? Branches::Both : Branches::Plus;
  require(n == 2 || c.branches == Branches::Plus, "acquisition.branches", "'both' applies to n = 2 only");

  const double pi = std::numbers::pi;
  Eigen::VectorXd center = Eigen::VectorXd::Zero(n - 1);
  Eigen::VectorXd half = Eigen::VectorXd::Constant(n - 1, pi / 2);
  if (n == 3) {
    center(0) = pi / 2;  // full sphere: a in [0, pi], b periodic
    half(1) = pi;
  }
  c.patch_center = r.numbers("acquisition.patch.center", n - 1).value_or(center);
  c.patch_half_width = r.numbers("acquisition.patch.half_width", n - 1).value_or(half);
  c.patch_samples = r.integers("acquisition.patch.samples", n - 1).value_or(n == 2 ? std::vector<int>{32}
                                                                                       : std::vector<int>{13, 24});
  for (Eigen::Index a = 0; a < n - 1; ++a) {
    require(c.patch_half_width(a) >= 0.0 && c.patch_half_width(a) <= pi, "acquisition.patch.half_width",
            "must lie in [0, pi]");
    require(c.patch_samples[static_cast<std::size_t>(a)] >= 1, "acquisition.patch.samples", "must be >= 1");
  }

  // quadrature
  const auto rule = r.text("quadrature.rule").value_or("adaptive");
  require(rule == "adaptive" || rule == "simpson", "quadrature.rule", "must be 'adaptive' or 'simpson'");
  c.quadrature.rule = rule == "adaptive" ? Quadrature::Rule::Adaptive : Quadrature::Rule::CompositeSimpson;
  c.quadrature.abs_tol = r.number("quadrature.abs_tol", c.quadrature.abs_tol);
  require(c.quadrature.abs_tol > 0.0, "quadrature.abs_tol", "must be positive");
  c.quadrature.max_evals = static_cast<long>(r.integer("quadrature.max_evals", c.quadrature.max_evals));
  require(c.quadrature.max_evals >= 1, "quadrature.max_evals", "must be >= 1");
  c.quadrature.panels = static_cast<int>(r.integer("quadrature.panels", c.quadrature.panels));
  require(c.quadrature.panels >= 2 && c.quadrature.panels % 2 == 0 && c.quadrature.panels <= 1 << 20,
          "quadrature.panels", "must be an even count >= 2");

  c.quadrature.max_panel_width = r.number("quadrature.max_panel_width", c.quadrature.max_panel_width);
  require(c.quadrature.max_panel_width > 0.0, "quadrature.max_panel_width", "must be positive");

  // spectral target
  c.t_count = r.integer("spectral.t.count", c.t_count);
  require(c.t_count >= 8 && c.t_count <= 4096, "spectral.t.count", "must be in [8, 4096]");
  c.t_spacing = r.number("spectral.t.spacing", c.t_spacing);
  require(c.t_spacing > 0.0, "spectral.t.spacing", "must be positive");
  const auto t_origin = r.numbers("spectral.t.origin", 1);
  if (t_origin) c.t_origin = (*t_origin)(0);

  // inversion
  c.inversion.delta = r.number("inversion.delta", c.inversion.delta);
  require(c.inversion.delta >= 0.0 && c.inversion.delta < 1.0, "inversion.delta", "must lie in [0, 1)");
  c.inversion.circle_directions =
      static_cast<int>(r.integer("inversion.circle_directions", c.inversion.circle_directions));
  require(c.inversion.circle_directions >= 3 && c.inversion.circle_directions <= 1000, "inversion.circle_directions",
          "must be in [3, 1000]");
  c.inversion.noise.relative = r.number("inversion.noise.relative", c.inversion.noise.relative);
  require(c.inversion.noise.relative >= 0.0, "inversion.noise.relative", "must be >= 0");
  c.inversion.noise.absolute = r.number("inversion.noise.absolute", c.inversion.noise.absolute);
  require(c.inversion.noise.absolute >= 0.0, "inversion.noise.absolute", "must be >= 0");
  c.inversion.min_conditioning = r.number("inversion.min_conditioning", c.inversion.min_conditioning);
  require(c.inversion.min_conditioning > 0.0, "inversion.min_conditioning", "must be positive");
  if (auto s = r.text("reconstruct.sinogram")) c.sinogram_input = *s;

  // slice check
  c.slice_directions = static_cast<int>(r.integer("slice.directions", c.slice_directions));
  require(c.slice_directions >= 1 && c.slice_directions <= 10000, "slice.directions", "must be in [1, 10000]");
  c.slice_samples = static_cast<int>(r.integer("slice.samples", c.slice_samples));
  require(c.slice_samples >= 1 && c.slice_samples <= 1000000, "slice.samples", "must be in [1, 1e6]");
  c.slice_xi_max = r.number("slice.xi_max", c.slice_xi_max);
  require(c.slice_xi_max > 0.0, "slice.xi_max", "must be positive");
  c.slice_min_relative = r.number("slice.min_relative", c.slice_min_relative);
  require(c.slice_min_relative >= 0.0 && c.slice_min_relative < 1.0, "slice.min_relative", "must lie in [0, 1)");
  c.slice_refine = r.flag("slice.refine", false);

  // surface
  const auto kind = r.text("surface.kind").value_or("none");
  if (kind == "none") {
    c.surface_kind = SurfaceKind::None;
  } else if (kind == "cone") {
    c.surface_kind = SurfaceKind::Cone;
  } else if (kind == "shell") {
    c.surface_kind = SurfaceKind::Shell;
  } else if (kind == "cylinder") {
    c.surface_kind = SurfaceKind::Cylinder;
  } else {
    invalid("surface.kind", "must be none, cone, shell or cylinder");
  }
  const Eigen::VectorXd x0 = r.numbers("surface.x0", n).value_or(Eigen::VectorXd::Zero(n));
  c.surface.kind = c.surface_kind == SurfaceKind::Shell ? GammaSurface::Kind::Shell : GammaSurface::Kind::Cone;
  c.surface.x0 = x0;
  c.surface.t0 = r.number("surface.t0", c.surface.t0);
  c.surface.c = r.number("surface.c", c.surface.c);
  c.surface.rho = r.number("surface.rho", c.surface.rho);
  c.surface.radius = r.number("surface.radius", c.surface.radius);
  c.cylinder.center = x0;
  c.cylinder.radius = c.surface.radius;
  c.cylinder.height = r.number("surface.height", c.cylinder.height);
  if (c.surface_kind == SurfaceKind::Cone || c.surface_kind == SurfaceKind::Shell) {
    require(c.surface.c > 0.0 && c.surface.c < 1.0, "surface.c", "must lie in (0, 1)");
    require(c.surface.rho >= 0.0, "surface.rho", "must be >= 0");
  }
  require(c.surface.radius > 0.0, "surface.radius", "must be positive");
  require(c.cylinder.height > 0.0, "surface.height", "must be positive");

  c.support.delta = c.inversion.delta;
  c.support.seed = c.seed;
  c.support.margin = r.number("support.margin", c.support.margin);
  require(c.support.margin >= 0.0, "support.margin", "must be >= 0");
  c.support.points_per_axis = static_cast<int>(r.integer("support.points_per_axis", c.support.points_per_axis));
  require(c.support.points_per_axis >= 2 && c.support.points_per_axis <= 256, "support.points_per_axis",
          "must be in [2, 256]");
  c.support.box_fraction = r.number("support.box_fraction", c.support.box_fraction);
  require(c.support.box_fraction > 0.0 && c.support.box_fraction <= 1.0, "support.box_fraction",
          "must lie in (0, 1]");

  r.finish();
  return c;
}

Config RunConfig::to_config() const {
  Config c;
  c.set("n", std::to_string(n));
  c.set("seed", std::to_string(seed));
  c.set("output", output.string());

  c.set("field.name", field.name);
  c.set("field.sigma", format_number(field.sigma));
  c.set("field.amplitude", format_number(field.amplitude));
  if (field.center.size() > 0) c.set("field.center", join(field.center));
  c.set("field.potential", std::to_string(field.potential));
  if (field.envelope) {
    c.set("field.envelope.speed", format_number(field.envelope->speed));
    c.set("field.envelope.radius", format_number(field.envelope->radius));
  }
  if (!field_grid.empty()) c.set("field.grid_file", field_grid.string());

  c.set("acquisition.x.count", std::to_string(x_count));
  c.set("acquisition.x.spacing", format_number(x_spacing));
  if (x_origin) c.set("acquisition.x.origin", join(*x_origin));
  c.set("acquisition.branches", branches == Branches::Both ? "both" : "plus");
  c.set("acquisition.patch.center", join(patch_center));
  c.set("acquisition.patch.half_width", join(patch_half_width));
  c.set("acquisition.patch.samples", join(patch_samples));

  c.set("quadrature.rule", quadrature.rule == Quadrature::Rule::Adaptive ? "adaptive" : "simpson");
  c.set("quadrature.abs_tol", format_number(quadrature.abs_tol));
  c.set("quadrature.max_evals", std::to_string(quadrature.max_evals));
  c.set("quadrature.panels", std::to_string(quadrature.panels));
  c.set("quadrature.max_panel_width", format_number(quadrature.max_panel_width));

  c.set("spectral.t.count", std::to_string(t_count));
  c.set("spectral.t.spacing", format_number(t_spacing));
  if (t_origin) c.set("spectral.t.origin", format_number(*t_origin));

  c.set("inversion.delta", format_number(inversion.delta));
  c.set("inversion.circle_directions", std::to_string(inversion.circle_directions));
  c.set("inversion.noise.relative", format_number(inversion.noise.relative));
  c.set("inversion.noise.absolute", format_number(inversion.noise.absolute));
  c.set("inversion.min_conditioning", format_number(inversion.min_conditioning));
  if (!sinogram_input.empty()) c.set("reconstruct.sinogram", sinogram_input.string());

  c.set("slice.directions", std::to_string(slice_directions));
  c.set("slice.samples", std::to_string(slice_samples));
  c.set("slice.xi_max", format_number(slice_xi_max));
  c.set("slice.min_relative", format_number(slice_min_relative));
  c.set("slice.refine", slice_refine ? "true" : "false");

  const char* kinds[] = {"none", "cone", "shell", "cylinder"};
  c.set("surface.kind", kinds[static_cast<int>(surface_kind)]);
  c.set("surface.x0", join(surface.x0));
  c.set("surface.t0", format_number(surface.t0));
  c.set("surface.c", format_number(surface.c));
  c.set("surface.rho", format_number(surface.rho));
  c.set("surface.radius", format_number(surface.radius));
  c.set("surface.height", format_number(cylinder.height));
  c.set("support.margin", format_number(support.margin));
  c.set("support.points_per_axis", std::to_string(support.points_per_axis));
  c.set("support.box_fraction", format_number(support.box_fraction));
  return c;
}

AcquisitionSet RunConfig::acquisition() const {
  AcquisitionSet acq;
  const Eigen::VectorXd origin = x_origin.value_or(Eigen::VectorXd::Constant(n, -double(x_count / 2) * x_spacing));
  acq.x_grid = Lattice(origin, Eigen::VectorXd::Constant(n, x_spacing), std::vector<Eigen::Index>(n, x_count));
  DirectionPatch patch{patch_center, patch_half_width, patch_samples};
  acq.patches.push_back(patch);
  if (branches == Branches::Both) {
    patch.center(0) += std::numbers::pi;
    acq.patches.push_back(patch);
  }
  acq.validate();
  return acq;
}

Lattice RunConfig::target() const {
  const AcquisitionSet acq = acquisition();
  Eigen::VectorXd origin(n + 1), spacing(n + 1);
  origin(0) = t_origin.value_or(-double(t_count / 2) * t_spacing);
  spacing(0) = t_spacing;
  origin.tail(n) = acq.x_grid.origin;
  spacing.tail(n) = acq.x_grid.spacing;
  std::vector<Eigen::Index> counts{t_count};
  counts.insert(counts.end(), acq.x_grid.counts.begin(), acq.x_grid.counts.end());
  return Lattice(origin, spacing, counts);
}

}  // namespace lightray::cli
