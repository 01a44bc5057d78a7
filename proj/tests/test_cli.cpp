#include <doctest.h>

#include <charconv>
#include <filesystem>
#include <optional>
#include <random>

#include "lightray/cli/commands.hpp"
#include "lightray/cli/config.hpp"
#include "lightray/cli/io.hpp"

using namespace lightray;
using namespace lightray::cli;

namespace {

template <typename F>
std::optional<ErrorCode> error_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return std::nullopt;
}

template <typename F>
std::string message_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

GridFile sample_grid() {
  GridFile g;
  g.lattice = Lattice(Eigen::Vector3d(-1.0, 0.5, 2.0), Eigen::Vector3d(0.25, 0.5, 1.0 / 3.0), {3, 4, 5});
  g.convention = "test;tag";
  std::mt19937_64 rng(11);
  std::normal_distribution<double> n;
  for (int c = 0; c < 2; ++c) {
    Eigen::VectorXcd v(g.lattice.size());
    for (Eigen::Index p = 0; p < v.size(); ++p) v(p) = Complex(n(rng), n(rng));
    g.components.push_back(v);
  }
  return g;
}

std::vector<std::filesystem::path> shipped_configs() {
  std::vector<std::filesystem::path> out;
  for (const auto& e : std::filesystem::directory_iterator(LIGHTRAY_CONFIG_DIR)) {
    if (e.path().extension() == ".conf") out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("config text parsing") {
    const Config c = Config::parse("# comment\n n = 3 \nfield.name=gaussian # trailing\n\nfield.center = 0 1, 2 3\n");
    CHECK(c.get("n") == "3");
    CHECK(c.get("field.name") == "gaussian");
    CHECK(c.get("field.center") == "0 1, 2 3");
    CHECK(c.entries().size() == 3);
    CHECK(error_of([] { Config::parse("n = 2\nn = 3\n"); }) == ErrorCode::ConfigInvalid);
    CHECK(error_of([] { Config::parse("n 2\n"); }) == ErrorCode::ConfigInvalid);
    CHECK(error_of([] { Config::parse("n =\n"); }) == ErrorCode::ConfigInvalid);
    CHECK(error_of([] { Config::parse("bad..key = 1\n"); }) == ErrorCode::ConfigInvalid);
    CHECK(error_of([] { Config::parse("bad key = 1\n"); }) == ErrorCode::ConfigInvalid);
    CHECK(message_of([] { Config::parse("n = 2\nn = 3\n", "x.conf"); }).find("x.conf") != std::string::npos);
  }

  TEST_CASE("run config validation names the offending key") {
    auto from = [](const std::string& text) { return RunConfig::from_config(Config::parse(text)); };
    CHECK(error_of([&] { from("n = 4\n"); }) == ErrorCode::ConfigInvalid);
    CHECK(message_of([&] { from("n = 4\n"); }).find("'n'") != std::string::npos);
    CHECK(message_of([&] { from("n = 2\nacquisition.patch.samples = 0\n"); }).find("'acquisition.patch.samples'") !=
          std::string::npos);
    CHECK(message_of([&] { from("n = 2\nquadrature.abs_tol = -1\n"); }).find("'quadrature.abs_tol'") !=
          std::string::npos);
    CHECK(message_of([&] { from("n = 2\nacquisiton.x.count = 8\n"); }).find("acquisiton.x.count") !=
          std::string::npos);
    CHECK(error_of([&] { from("n = 2\nfield.name = nope\n"); }) == ErrorCode::ConfigInvalid);
    CHECK(error_of([&] { from("n = two\n"); }) == ErrorCode::ConfigInvalid);
    CHECK(error_of([&] { from("n = 2\nfield.center = 0 0\n"); }) == ErrorCode::ConfigInvalid);
    CHECK_NOTHROW(from("n = 3\n"));
  }

  TEST_CASE("config round trip is idempotent on every shipped config") {
    const auto configs = shipped_configs();
    REQUIRE(configs.size() >= 10);
    for (const auto& path : configs) {
      CAPTURE(path.string());
      const Config raw = Config::load(path);
      CHECK(Config::parse(raw.serialize()) == raw);
      const RunConfig run = RunConfig::from_config(raw);
      const Config once = run.to_config();
      const Config twice = RunConfig::from_config(Config::parse(once.serialize())).to_config();
      CHECK(once == twice);
      CHECK(once.serialize() == twice.serialize());
    }
  }

  TEST_CASE("numbers print at 17 significant digits and round trip") {
    CHECK(format_number(1.0) == "1");
    CHECK(format_number(-2.5) == "-2.5");
    CHECK(format_number(0.1) == "0.10000000000000001");
    CHECK(format_number(1e-300) == "1e-300");
    std::mt19937_64 rng(7);
    for (int k = 0; k < 10000; ++k) {
      const double v = std::bit_cast<double>(rng());
      if (!std::isfinite(v)) continue;
      const std::string s = format_number(v);
      double back = 0.0;
      std::from_chars(s.data(), s.data() + s.size(), back);
      CHECK(std::bit_cast<std::uint64_t>(back) == std::bit_cast<std::uint64_t>(v));
      CHECK(s.find(',') == std::string::npos);
    }
  }

  TEST_CASE("csv tables") {
    CsvTable t({"a", "b", "c"});
    t.cell(0.1).cell(3LL).cell(std::string("x,\"y\""));
    t.end_row();
    CHECK(t.text() == "a,b,c\n0.10000000000000001,3,\"x,\"\"y\"\"\"\n");
    t.cell(1.0);
    CHECK(error_of([&] { t.end_row(); }) == ErrorCode::InvalidArgument);
    CHECK(error_of([&] { t.cell(2.0).cell(3.0).cell(4.0); }) == ErrorCode::InvalidArgument);
  }

  TEST_CASE("grid files round trip and reject damage") {
    const GridFile g = sample_grid();
    const std::string bytes = encode_grid(g);
    const std::size_t header = 5 + 4 + 4 + 3 * 8 + 3 * 8 + 3 * 8 + 4 + g.convention.size();
    CHECK(bytes.size() == header + 2 * 8 * 2 * 60);
    CHECK(bytes.substr(0, 5) == "LRGF1");
    const GridFile back = decode_grid(bytes);
    CHECK(back.lattice == g.lattice);
    CHECK(back.convention == g.convention);
    REQUIRE(back.components.size() == 2);
    for (int c = 0; c < 2; ++c) CHECK(back.components[c] == g.components[c]);
    CHECK(encode_grid(back) == bytes);

    // Little-endian layout: the axis count follows the magic.
    CHECK(static_cast<unsigned char>(bytes[5]) == 3);
    CHECK(bytes[6] == 0);

    std::string magic = bytes;
    magic[0] = 'X';
    CHECK(error_of([&] { decode_grid(magic); }) == ErrorCode::GridBadMagic);
    CHECK(error_of([&] { decode_grid("LRG"); }) == ErrorCode::GridBadMagic);
    CHECK(error_of([&] { decode_grid(std::string_view(bytes).substr(0, bytes.size() - 1)); }) ==
          ErrorCode::GridTruncated);
    CHECK(error_of([&] { decode_grid(std::string_view(bytes).substr(0, 20)); }) == ErrorCode::GridTruncated);
    CHECK(error_of([&] { decode_grid(bytes + "z"); }) == ErrorCode::GridMalformed);
    std::string zero_axes = bytes;
    zero_axes[5] = 0;
    CHECK(error_of([&] { decode_grid(zero_axes); }) == ErrorCode::GridMalformed);

    const auto path = std::filesystem::temp_directory_path() / "lightray_grid_test.lrgf";
    write_grid(path, g);
    CHECK(read_text(path) == bytes);
    CHECK(read_grid(path).components[1] == g.components[1]);
    std::filesystem::remove(path);
    CHECK(error_of([&] { read_grid(path); }) == ErrorCode::Io);
  }

  TEST_CASE("sinograms survive the grid format") {
    const RunConfig run = RunConfig::from_config(Config::parse(
        "n = 2\nacquisition.x.count = 8\nacquisition.x.spacing = 0.5\nacquisition.patch.samples = 3\n"
        "field.envelope.radius = 1.5\n"));
    const AcquisitionSet acq = run.acquisition();
    const AnalyticField f = builtin::make_field(run.field);
    const Sinogram s = make_sinogram(f, acq, run.quadrature);
    const Sinogram back = sinogram_from_grid(decode_grid(encode_grid(sinogram_grid(s))), acq);
    CHECK(back.values == s.values);
    CHECK(back.errors == s.errors);
    AcquisitionSet other = acq;
    other.patches[0].samples = {4};
    CHECK(error_of([&] { sinogram_from_grid(sinogram_grid(s), other); }) == ErrorCode::ConfigInvalid);
  }

  TEST_CASE("acquisition and target geometry") {
    const RunConfig both = RunConfig::from_config(Config::parse("n = 2\nacquisition.patch.samples = 5\n"));
    const AcquisitionSet a = both.acquisition();
    REQUIRE(a.patches.size() == 2);
    CHECK(std::abs(a.patches[1].center(0) - a.patches[0].center(0) - std::numbers::pi) <= 1e-15);
    const RunConfig plus =
        RunConfig::from_config(Config::parse("n = 2\nacquisition.branches = plus\nacquisition.patch.samples = 5\n"));
    CHECK(plus.acquisition().patches.size() == 1);
    const Lattice t = both.target();
    CHECK(t.axes() == 3);
    CHECK(t.counts[1] == both.x_count);
    CHECK(std::abs(t.origin(1) + 0.5 * double(both.x_count) * both.x_spacing) <= 1e-12);
  }

  TEST_CASE("exit codes") {
    CHECK(exit_code(ErrorCode::ConfigInvalid) == kExitConfig);
    CHECK(exit_code(ErrorCode::QuadratureBudgetExceeded) == kExitQuadrature);
    CHECK(exit_code(ErrorCode::OutOfBand) == kExitOutOfBand);
    CHECK(exit_code(ErrorCode::ApertureTooSmall) == kExitApertureTooSmall);
    CHECK(exit_code(ErrorCode::GridTruncated) == kExitConfig);
    CHECK(exit_code(ErrorCode::Io) == kExitFailure);
    CHECK(formats_text().find("LRGF1") != std::string::npos);
  }

  TEST_CASE("forward command removes partial outputs on failure") {
    const auto dir = std::filesystem::temp_directory_path() / "lightray_forward_budget";
    std::filesystem::remove_all(dir);
    RunConfig run = RunConfig::from_config(Config::parse(
        "n = 2\nacquisition.x.count = 8\nacquisition.patch.samples = 3\nquadrature.max_evals = 40\n"
        "quadrature.abs_tol = 1e-14\nfield.envelope.radius = 1.5\n"));
    run.output = dir;
    CHECK(error_of([&] { cmd_forward(run); }) == ErrorCode::QuadratureBudgetExceeded);
    CHECK((!std::filesystem::exists(dir) || std::filesystem::is_empty(dir)));
    std::filesystem::remove_all(dir);
  }
}
