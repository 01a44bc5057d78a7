#include "lightray/cli/io.hpp"

#include <bit>
#include <cstdint>
#include <fstream>
#include <sstream>

#include "lightray/cli/config.hpp"

namespace lightray::cli {

namespace {

constexpr std::uint32_t kMaxGridAxes = 8;

void put_u32(std::string& out, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xff));
}

void put_f64(std::string& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

class ByteReader {
 public:
  explicit ByteReader(std::string_view bytes) : bytes_(bytes) {}

  std::uint64_t unsigned_value(int width, const char* what) {
    if (remaining() < static_cast<std::size_t>(width)) {
      throw Error(ErrorCode::GridTruncated, std::string("file ends inside ") + what);
    }
    std::uint64_t v = 0;
    for (int b = 0; b < width; ++b) v |= std::uint64_t(static_cast<unsigned char>(bytes_[pos_ + b])) << (8 * b);
    pos_ += static_cast<std::size_t>(width);
    return v;
  }
  std::uint32_t u32(const char* what) { return static_cast<std::uint32_t>(unsigned_value(4, what)); }
  std::uint64_t u64(const char* what) { return unsigned_value(8, what); }
  double f64(const char* what) { return std::bit_cast<double>(u64(what)); }

  std::string_view take(std::size_t count, const char* what) {
    if (remaining() < count) throw Error(ErrorCode::GridTruncated, std::string("file ends inside ") + what);
    const auto out = bytes_.substr(pos_, count);
    pos_ += count;
    return out;
  }

  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_grid(const GridFile& grid) {
  grid.lattice.validate();
  const auto axes = static_cast<std::uint32_t>(grid.lattice.axes());
  std::string out(kGridMagic);
  put_u32(out, axes);
  put_u32(out, static_cast<std::uint32_t>(grid.components.size()));
  for (auto c : grid.lattice.counts) put_u64(out, static_cast<std::uint64_t>(c));
  for (std::uint32_t a = 0; a < axes; ++a) put_f64(out, grid.lattice.origin(a));
  for (std::uint32_t a = 0; a < axes; ++a) put_f64(out, grid.lattice.spacing(a));
  put_u32(out, static_cast<std::uint32_t>(grid.convention.size()));
  out += grid.convention;
  out.reserve(out.size() + grid.components.size() * static_cast<std::size_t>(grid.lattice.size()) * 16);
  for (const auto& comp : grid.components) {
    if (comp.size() != grid.lattice.size()) throw Error(ErrorCode::InvalidArgument, "component size mismatch");
    for (Eigen::Index p = 0; p < comp.size(); ++p) {
      put_f64(out, comp(p).real());
      put_f64(out, comp(p).imag());
    }
  }
  return out;
}

GridFile decode_grid(std::string_view bytes) {
  if (bytes.size() < kGridMagic.size() || bytes.substr(0, kGridMagic.size()) != kGridMagic) {
    throw Error(ErrorCode::GridBadMagic, "not an LRGF1 grid file");
  }
  ByteReader r(bytes.substr(kGridMagic.size()));
  const std::uint32_t axes = r.u32("header");
  const std::uint32_t components = r.u32("header");
  if (axes == 0 || axes > kMaxGridAxes) throw Error(ErrorCode::GridMalformed, "axis count out of range");
  if (components > 64) throw Error(ErrorCode::GridMalformed, "component count out of range");

  GridFile grid;
  std::vector<Eigen::Index> counts(axes);
  long double total = 1.0L;
  for (auto& c : counts) {
    const std::uint64_t v = r.u64("header");
    if (v == 0 || v > (std::uint64_t(1) << 32)) throw Error(ErrorCode::GridMalformed, "axis count must be positive");
    c = static_cast<Eigen::Index>(v);
    total *= static_cast<long double>(v);
  }
  if (total * components * 16.0L > 1e12L) throw Error(ErrorCode::GridMalformed, "grid too large");
  Eigen::VectorXd origin(axes), spacing(axes);
  for (std::uint32_t a = 0; a < axes; ++a) origin(a) = r.f64("header");
  for (std::uint32_t a = 0; a < axes; ++a) spacing(a) = r.f64("header");
  const std::uint32_t tag = r.u32("header");
  grid.convention = std::string(r.take(tag, "header"));
  try {
    grid.lattice = Lattice(origin, spacing, counts);
    grid.lattice.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::GridMalformed, e.what());
  }

  const auto points = static_cast<std::size_t>(grid.lattice.size());
  const std::size_t payload = std::size_t(components) * points * 16;
  if (r.remaining() < payload) throw Error(ErrorCode::GridTruncated, "payload shorter than the header declares");
  if (r.remaining() > payload) throw Error(ErrorCode::GridMalformed, "trailing bytes after payload");
  grid.components.assign(components, Eigen::VectorXcd(static_cast<Eigen::Index>(points)));
  for (auto& comp : grid.components) {
    for (std::size_t p = 0; p < points; ++p) {
      const double re = r.f64("payload");
      const double im = r.f64("payload");
      comp(static_cast<Eigen::Index>(p)) = Complex(re, im);
    }
  }
  return grid;
}

void write_grid(const std::filesystem::path& path, const GridFile& grid) { write_text(path, encode_grid(grid)); }

GridFile read_grid(const std::filesystem::path& path) { return decode_grid(read_text(path)); }

GridFile sinogram_grid(const Sinogram& sino) {
  const Lattice& x = sino.acquisition.x_grid;
  const Eigen::Index nx = x.size();
  const Eigen::Index nd = sino.values.cols();
  Eigen::VectorXd origin(x.axes() + 1), spacing(x.axes() + 1);
  origin << 0.0, x.origin;
  spacing << 1.0, x.spacing;
  std::vector<Eigen::Index> counts{nd};
  counts.insert(counts.end(), x.counts.begin(), x.counts.end());

  GridFile g;
  g.lattice = Lattice(origin, spacing, counts);
  g.convention = "sinogram;axis0=direction;components=value,error";
  // Column-major storage puts x fastest within each direction, which is the
  // row-major order of (direction, x...).
  g.components.emplace_back(Eigen::Map<const Eigen::VectorXcd>(sino.values.data(), nx * nd));
  g.components.emplace_back(Eigen::Map<const Eigen::VectorXd>(sino.errors.data(), nx * nd).cast<Complex>());
  return g;
}

Sinogram sinogram_from_grid(const GridFile& grid, const AcquisitionSet& acq) {
  const Lattice& x = acq.x_grid;
  const Eigen::Index nd = acq.direction_count();
  const bool shape_ok = grid.lattice.axes() == x.axes() + 1 && grid.lattice.counts[0] == nd &&
                        grid.components.size() == 2 &&
                        std::equal(x.counts.begin(), x.counts.end(), grid.lattice.counts.begin() + 1);
  if (!shape_ok) throw Error(ErrorCode::ConfigInvalid, "sinogram file does not match the acquisition");
  for (Eigen::Index a = 0; a < x.axes(); ++a) {
    if (std::abs(grid.lattice.origin(a + 1) - x.origin(a)) > 1e-12 * (1.0 + std::abs(x.origin(a))) ||
        std::abs(grid.lattice.spacing(a + 1) - x.spacing(a)) > 1e-12 * x.spacing(a)) {
      throw Error(ErrorCode::ConfigInvalid, "sinogram x-grid differs from the acquisition x-grid");
    }
  }
  Sinogram s;
  s.acquisition = acq;
  s.values = Eigen::Map<const Eigen::MatrixXcd>(grid.components[0].data(), x.size(), nd);
  s.errors = Eigen::Map<const Eigen::MatrixXcd>(grid.components[1].data(), x.size(), nd).real();
  return s;
}

CsvTable::CsvTable(std::vector<std::string> header) : columns_(header.size()) {
  for (const auto& h : header) cell(h);
  end_row();
}

void CsvTable::separator() {
  if (filled_ >= columns_) throw Error(ErrorCode::InvalidArgument, "too many CSV cells in a row");
  if (filled_ > 0) text_ += ',';
  ++filled_;
}

CsvTable& CsvTable::cell(double v) {
  separator();
  text_ += format_number(v);
  return *this;
}

CsvTable& CsvTable::cell(long long v) {
  separator();
  text_ += std::to_string(v);
  return *this;
}

CsvTable& CsvTable::cell(const std::string& s) {
  separator();
  if (s.find_first_of(",\"\n") == std::string::npos) {
    text_ += s;
  } else {
    text_ += '"';
    for (char c : s) text_ += c == '"' ? std::string("\"\"") : std::string(1, c);
    text_ += '"';
  }
  return *this;
}

void CsvTable::end_row() {
  if (filled_ != columns_) throw Error(ErrorCode::InvalidArgument, "CSV row has the wrong number of cells");
  text_ += '\n';
  filled_ = 0;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error(ErrorCode::Io, "failed writing " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace lightray::cli
