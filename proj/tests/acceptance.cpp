#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <sstream>

#include "lightray/cli/config.hpp"
#include "lightray/cli/io.hpp"
#include "lightray/inversion.hpp"
#include "lightray/scenarios.hpp"

namespace fs = std::filesystem;
using namespace lightray;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string num(double v) {
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "%.3g", v);
  return buffer;
}

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    pass = pass && ok;
    if (!detail.empty()) detail += "; ";
    detail += what + (ok ? "" : " [failed]");
  }
};

SpaceVec random_unit(std::mt19937_64& rng, Eigen::Index n) {
  std::normal_distribution<double> g;
  SpaceVec v(n);
  for (Eigen::Index a = 0; a < n; ++a) v(a) = g(rng);
  return v / v.norm();
}

SpaceVec random_box(std::mt19937_64& rng, Eigen::Index n, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  SpaceVec v(n);
  for (Eigen::Index a = 0; a < n; ++a) v(a) = u(rng);
  return v;
}

Covector random_spacelike(std::mt19937_64& rng, Eigen::Index n) {
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> u(-0.99, 0.99);
  SpaceVec xi(n);
  for (Eigen::Index a = 0; a < n; ++a) xi(a) = g(rng);
  return Covector(u(rng) * xi.norm(), xi);
}

// ---------------------------------------------------------------------------
// CLI runs shared by the slice, support and determinism criteria.

struct Job {
  std::string name;
  std::string command;
  fs::path config;
  std::string flags;
};

struct JobResult {
  int exit_single = -1;
  int exit_multi = -1;
  double seconds = 0.0;
  fs::path dir_single;
  fs::path dir_multi;
  std::string difference;  // empty when the two output trees match byte for byte
};

int run_shell(const std::string& command) {
  const int status = std::system(command.c_str());
  if (status == -1 || !WIFEXITED(status)) return -1;
  return WEXITSTATUS(status);
}

std::map<std::string, std::string> tree(const fs::path& dir) {
  std::map<std::string, std::string> files;
  if (!fs::exists(dir)) return files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) files[fs::relative(e.path(), dir).string()] = cli::read_text(e.path());
  }
  return files;
}

std::string compare_trees(const fs::path& a, const fs::path& b) {
  const auto ta = tree(a), tb = tree(b);
  if (ta.empty()) return "no outputs";
  for (const auto& [name, bytes] : ta) {
    const auto it = tb.find(name);
    if (it == tb.end()) return name + " missing";
    if (it->second != bytes) return name + " differs";
  }
  if (tb.size() != ta.size()) return "file sets differ";
  return {};
}

JobResult run_job(const Job& job, const fs::path& work) {
  JobResult r;
  r.dir_single = work / job.name / "threads1";
  r.dir_multi = work / job.name / "threads3";
  fs::remove_all(work / job.name);
  fs::create_directories(work / job.name);
  auto command = [&](const char* threads, const fs::path& dir) {
    return std::string("LIGHTRAY_THREADS=") + threads + " '" + LIGHTRAY_BINARY + "' " + job.command + " '" +
           job.config.string() + "' " + job.flags + " -o '" + dir.string() + "' > '" + dir.string() + ".log' 2>&1";
  };
  const auto start = Clock::now();
  r.exit_single = run_shell(command("1", r.dir_single));
  r.seconds = seconds_since(start);
  r.exit_multi = run_shell(command("3", r.dir_multi));
  r.difference = compare_trees(r.dir_single, r.dir_multi);
  return r;
}

std::map<std::string, std::string> summary_of(const fs::path& file) {
  std::map<std::string, std::string> out;
  std::ifstream in(file);
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find(" = ");
    if (eq != std::string::npos) out[line.substr(0, eq)] = line.substr(eq + 3);
  }
  return out;
}

double summary_number(const fs::path& file, const std::string& key) {
  const auto s = summary_of(file);
  const auto it = s.find(key);
  return it == s.end() ? std::numeric_limits<double>::quiet_NaN() : std::stod(it->second);
}

std::vector<Job> shipped_jobs() {
  std::vector<fs::path> configs;
  for (const auto& e : fs::directory_iterator(LIGHTRAY_CONFIG_DIR)) {
    if (e.path().extension() == ".conf") configs.push_back(e.path());
  }
  std::sort(configs.begin(), configs.end());
  std::vector<Job> jobs;
  for (const auto& path : configs) {
    const std::string stem = path.stem().string();
    if (stem.starts_with("forward")) jobs.push_back({stem, "forward", path, ""});
    if (stem.starts_with("reconstruct")) jobs.push_back({stem, "reconstruct", path, ""});
    if (stem.starts_with("support")) jobs.push_back({stem, "support-demo", path, ""});
    if (stem.starts_with("slice")) {
      jobs.push_back({stem, "slice-check", path, ""});
      jobs.push_back({stem + "_refined", "slice-check", path, "--refine"});
    }
  }
  return jobs;
}

// ---------------------------------------------------------------------------

Outcome criterion_directional() {
  Outcome o;
  const auto start = Clock::now();
  std::mt19937_64 rng(101);
  Quadrature q;
  q.abs_tol = 1e-10;
  q.max_evals = 2'000'000;
  double worst = 0.0;
  int triples = 0;
  for (Eigen::Index n : {2, 3}) {
    for (int k = 0; k < 50; ++k) {
      SpacetimeVec center = SpacetimeVec::Zero(n + 1);
      center.tail(n) = random_box(rng, n, 0.4);
      center(0) = random_box(rng, 1, 0.4)(0);
      std::uniform_real_distribution<double> sigma(0.4, 0.8);
      const AnalyticField f = builtin::poly_gaussian(n, sigma(rng), center, Envelope{0.3, 3.5});
      const LightRay ray(random_box(rng, n, 1.0), random_unit(rng, n));
      const SpaceVec v = random_unit(rng, n);
      const Complex exact = directional_transform_exact(f, ray, v, q);
      const Complex fd = directional_transform_fd(f, ray, v, 1e-5, q);
      worst = std::max(worst, std::abs(fd - exact) / (1.0 + std::abs(exact)));
      ++triples;
    }
  }
  const double elapsed = seconds_since(start);
  o.require(triples == 100, std::to_string(triples) + " triples (n=2,3)");
  o.require(worst <= 1e-6, "max relative gap " + num(worst) + " <= 1e-6");
  o.require(elapsed <= 60.0, "runtime " + num(elapsed) + " s <= 60 s");
  return o;
}

Outcome criterion_gauge() {
  Outcome o;
  std::mt19937_64 rng(202);
  const Quadrature q;
  double worst_ray = 0.0;
  for (Eigen::Index n : {2, 3}) {
    for (const auto& phi : builtin::potentials(n, 0.4, Envelope{0.3, 5.0})) {
      const AnalyticField g = gradient_field(phi);
      for (int k = 0; k < 1000; ++k) {
        worst_ray = std::max(worst_ray, std::abs(lightray_transform(g, LightRay(random_box(rng, n, 1.0),
                                                                                random_unit(rng, n)),
                                                                    q)));
      }
    }
  }
  o.require(worst_ray <= 1e-8, "5 potentials x 1000 rays (n=2,3): max |L dphi| " + num(worst_ray) + " <= 1e-8");

  // End to end on the 64^2 reconstruction geometry.
  const Envelope env{0.0, 3.9};
  const AnalyticField f = builtin::poly_gaussian(2, 0.4, SpacetimeVec::Zero(3), env);
  AcquisitionSet acq;
  acq.x_grid = Lattice(Eigen::VectorXd::Constant(2, -8.0), Eigen::VectorXd::Constant(2, 0.25), {64, 64});
  Eigen::VectorXd hw(1), c0(1), c1(1);
  hw << std::numbers::pi / 2;
  c0 << 0.0;
  c1 << std::numbers::pi;
  acq.patches.push_back({c0, hw, {32}});
  acq.patches.push_back({c1, hw, {32}});
  const Lattice target(Eigen::Vector3d(-8.0, -8.0, -8.0), Eigen::Vector3d::Constant(0.25), {64, 64, 64});
  validate_periodization(env, target);
  const InversionResult base = invert_sinogram(make_sinogram(f, acq, q), target);
  double worst = 0.0;
  for (const auto& phi : builtin::potentials(2, 0.3, env)) {
    const InversionResult shifted = invert_sinogram(make_sinogram(f + gradient_field(phi), acq, q), target);
    worst = std::max(worst, masked_relative_error(shifted.spectrum.coefficients, base.spectrum.coefficients,
                                                  base.spectrum.mask.inside));
  }
  o.require(worst <= 1e-6, "invert(f + dphi) vs invert(f), 5 potentials: " + num(worst) + " <= 1e-6");
  return o;
}

Outcome criterion_slice(const std::map<std::string, JobResult>& runs) {
  Outcome o;
  double seconds = 0.0;
  for (const std::string n : {"n2", "n3"}) {
    const auto& base = runs.at("slice_" + n);
    const auto& refined = runs.at("slice_" + n + "_refined");
    seconds += base.seconds + refined.seconds;
    const double g0 = summary_number(base.dir_single / "slice_summary.txt", "max_gap");
    const double g1 = summary_number(refined.dir_single / "slice_summary.txt", "max_gap");
    const double samples = summary_number(base.dir_single / "slice_summary.txt", "samples");
    o.require(base.exit_single == 0 && refined.exit_single == 0 && samples == 200.0 && g0 <= 1e-2 && g1 <= g0,
              n + ": 200 samples, max gap " + num(g0) + " -> refined " + num(g1));
  }
  o.require(seconds <= 300.0, "runtime " + num(seconds) + " s <= 300 s");
  return o;
}

Outcome criterion_theta_system() {
  Outcome o;
  std::mt19937_64 rng(404);
  double worst = 0.0;
  for (int k = 0; k < 10000; ++k) {
    const Covector z = random_spacelike(rng, 2);
    auto [p, m] = theta_pm(z);
    for (const SpaceVec* t : {&p, &m}) {
      worst = std::max(worst, std::abs(z.tau + t->dot(z.xi)) / std::max(1.0, z.xi.norm()));
      worst = std::max(worst, std::abs(t->norm() - 1.0));
    }
  }
  o.require(worst <= 1e-12, "theta_pm constraints over 1e4 covectors: " + num(worst) + " <= 1e-12");

  // 50 x 50 grid over a in [0, pi], b in [-pi/2, pi/2] plus the singular loci.
  std::vector<std::pair<double, double>> points;
  for (int i = 0; i < 50; ++i) {
    for (int j = 0; j < 50; ++j) {
      points.emplace_back(std::numbers::pi * i / 49.0, -std::numbers::pi / 2 + std::numbers::pi * j / 49.0);
    }
  }
  for (double b : {0.0, std::numbers::pi / 2, -std::numbers::pi / 2, 0.7}) points.emplace_back(0.0, b);
  for (double a : {0.3, 1.1, 2.5}) {
    for (double b : {0.0, std::numbers::pi / 2, -std::numbers::pi / 2}) points.emplace_back(a, b);
  }
  double signed_gap = 0.0, magnitude_gap = 0.0;
  for (const auto& [a, b] : points) {
    const double det = perturbation_rows(a, b).determinant();
    const double closed = perturbation_closed_form(a, b);
    signed_gap = std::max(signed_gap, std::abs(det + closed));
    magnitude_gap = std::max(magnitude_gap, std::abs(std::abs(det) - std::abs(closed)));
  }
  o.require(magnitude_gap <= 1e-12 && signed_gap <= 1e-12,
            "det Theta on " + std::to_string(points.size()) + " (a,b) points incl. singular loci: |det - (-closed form)| " +
                num(signed_gap) + " <= 1e-12 (det = -4 sin^2 a sin b cos b (1 - cos a) in the stated row order)");
  return o;
}

Outcome criterion_recovery() {
  Outcome o;
  const Quadrature q;
  auto load = [](const char* name) {
    return cli::RunConfig::from_config(cli::Config::load(fs::path(LIGHTRAY_CONFIG_DIR) / name));
  };

  {
    const cli::RunConfig c = load("reconstruct_n2.conf");
    const AnalyticField f = builtin::make_field(c.field);
    const Lattice target = c.target();
    const InversionResult r = invert_sinogram(make_sinogram(f, c.acquisition(), c.quadrature), target, c.inversion);
    // Ground truth from the DFT of sampled curl2 values.
    std::vector<Eigen::VectorXcd> curl(3, Eigen::VectorXcd(target.size()));
    for (Eigen::Index p = 0; p < target.size(); ++p) {
      const Curl2 k = curl2(f, Event::from_coords(target.point(p)));
      curl[0](p) = k.c0;
      curl[1](p) = k.c1;
      curl[2](p) = k.c2;
    }
    for (auto& comp : curl) comp = dft(comp, target);
    const double err = masked_relative_error(curl_spectrum(r.spectrum), curl, r.spectrum.mask.inside);
    o.require(err <= 0.05, "n=2 64^2 full aperture: curl spectrum error " + num(err) + " <= 5%");
  }
  {
    const cli::RunConfig c = load("reconstruct_n3.conf");
    const AnalyticField f = builtin::make_field(c.field);
    const Lattice target = c.target();
    const InversionResult r = invert_sinogram(make_sinogram(f, c.acquisition(), c.quadrature), target, c.inversion);
    const double err =
        masked_relative_error(r.spectrum.coefficients, sampled_dform_spectrum(f, target), r.spectrum.mask.inside);
    o.require(c.inversion.circle_directions == 6 && err <= 0.08,
              "n=3 32^4 K=6: d-form spectrum error " + num(err) + " <= 8%");
  }
  {
    const cli::RunConfig c = load("reconstruct_n2_plus.conf");
    const AcquisitionSet acq = c.acquisition();
    const AnalyticField f = builtin::make_field(c.field);
    const InversionResult r = invert_sinogram(make_sinogram(f, acq, c.quadrature), c.target(), c.inversion);
    // The obstruction field eta has zero plus-branch data, so its sinogram on
    // this aperture is identically zero.
    Sinogram eta_data = make_sinogram(builtin::zero(2, c.field.envelope), acq, c.quadrature);
    const InversionResult re = invert_sinogram(eta_data, c.target(), c.inversion);
    o.require(r.spectrum.recovered() == 0 && re.spectrum.recovered() == 0,
              "plus-only aperture: " + std::to_string(r.spectrum.recovered()) + " bins recovered for the test field, " +
                  std::to_string(re.spectrum.recovered()) + " for eta data");

    std::mt19937_64 rng(505);
    std::normal_distribution<double> g;
    double kernel = 0.0, minus_gap = 0.0, curl_min = std::numeric_limits<double>::infinity();
    for (int k = 0; k < 10000; ++k) {
      const Covector z = random_spacelike(rng, 2);
      const double root = std::sqrt(z.xi.squaredNorm() - z.tau * z.tau);
      const Complex phi(g(rng), g(rng));
      FieldValue eta(3);
      eta << 1.0, z.xi(1) / root, -z.xi(0) / root;
      eta *= phi;
      auto [plus, minus] = theta_pm(z);
      kernel = std::max(kernel, std::abs(eta(0) + plus(0) * eta(1) + plus(1) * eta(2)) / std::abs(phi));
      minus_gap = std::max(minus_gap, std::abs(eta(0) + minus(0) * eta(1) + minus(1) * eta(2) - 2.0 * phi) /
                                          std::abs(phi));
      curl_min = std::min(curl_min, dform_spectrum_at(eta, z).norm() / (std::abs(phi) * z.coords().norm()));
    }
    o.require(kernel <= 1e-10 && minus_gap <= 1e-10 && curl_min > 0.1,
              "eta: |(1,theta+).eta| " + num(kernel) + ", (1,theta-).eta = 2 phi to " + num(minus_gap) +
                  ", nonzero curl");
  }
  return o;
}

Outcome criterion_boost() {
  Outcome o;
  std::mt19937_64 rng(606);
  double form = 0.0, off_axis = 0.0, on_axis = 0.0;
  for (Eigen::Index n : {2, 3}) {
    const SpacetimeMat eta = minkowski_metric(n);
    for (int k = 0; k < 10000; ++k) {
      const Covector z = random_spacelike(rng, n);
      const SpacetimeMat L = boost_to_axis(z);
      form = std::max(form, (L.transpose() * eta * L - eta).cwiseAbs().maxCoeff());
      SpacetimeVec image = L * z.coords();
      const double m = std::sqrt(z.xi.squaredNorm() - z.tau * z.tau);
      on_axis = std::max(on_axis, std::abs(image(boost_axis(n)) - m));
      image(boost_axis(n)) = 0.0;
      off_axis = std::max(off_axis, image.cwiseAbs().maxCoeff());
    }
  }
  o.require(form <= 1e-10, "2 x 1e4 covectors (n=2,3): |L^T eta L - eta| " + num(form) + " <= 1e-10");
  o.require(off_axis <= 1e-10 && on_axis <= 1e-10,
            "off-axis " + num(off_axis) + ", axis value vs m " + num(on_axis) + " <= 1e-10");
  return o;
}

Outcome criterion_support(const std::map<std::string, JobResult>& runs) {
  Outcome o;
  const auto& cone = runs.at("support_cone_n2");
  const fs::path summary = cone.dir_single / "support_summary.txt";
  const double ext = summary_number(summary, "exterior_residual");
  const double in = summary_number(summary, "interior_magnitude");
  const double floor = summary_number(summary, "noise_floor");
  o.require(cone.exit_single == 0 && ext <= 10.0 * floor && in >= 100.0 * floor,
            "cone demo exit " + std::to_string(cone.exit_single) + ": exterior " + num(ext) + ", interior " + num(in) +
                ", floor " + num(floor) + ", " + num(cone.seconds) + " s");
  const auto& gauge = runs.at("support_gauge_n2");
  o.require(gauge.exit_single == 0, "gauge demo exit " + std::to_string(gauge.exit_single));
  const auto& bad = runs.at("support_violating_n2");
  o.require(bad.exit_single == 6 && fs::exists(bad.dir_single / "support_report.csv"),
            "violating field exit " + std::to_string(bad.exit_single) + " with report");
  o.require(std::max({cone.seconds, gauge.seconds, bad.seconds}) <= 600.0, "each run <= 600 s at 64^2");
  return o;
}

Outcome criterion_determinism(const std::map<std::string, JobResult>& runs) {
  Outcome o;
  int identical = 0;
  std::string broken;
  for (const auto& [name, r] : runs) {
    if (r.difference.empty() && r.exit_single == r.exit_multi) {
      ++identical;
    } else {
      broken += " " + name + "(" + (r.difference.empty() ? "exit codes differ" : r.difference) + ")";
    }
  }
  o.require(broken.empty(), std::to_string(identical) + "/" + std::to_string(runs.size()) +
                                " runs byte-identical between LIGHTRAY_THREADS=1 and 3" + broken);
  return o;
}

}  // namespace

int main() {
  const fs::path work = fs::path(LIGHTRAY_WORK_DIR);
  fs::create_directories(work);

  std::map<std::string, JobResult> runs;
  for (const Job& job : shipped_jobs()) runs[job.name] = run_job(job, work);

  std::vector<std::pair<int, std::function<Outcome()>>> criteria = {
      {1, criterion_directional},
      {2, criterion_gauge},
      {3, [&] { return criterion_slice(runs); }},
      {4, criterion_theta_system},
      {5, criterion_recovery},
      {6, criterion_boost},
      {7, [&] { return criterion_support(runs); }},
      {8, [&] { return criterion_determinism(runs); }},
  };
  bool all = true;
  for (const auto& [id, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    all = all && o.pass;
    std::cout << "criterion " << id << ": " << (o.pass ? "PASS" : "FAIL") << "  " << o.detail << std::endl;
  }
  return all ? 0 : 1;
}
