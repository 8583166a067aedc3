#include "mzgrid/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "mzgrid/errors.hpp"

namespace mzgrid {

using json = nlohmann::json;

namespace {

constexpr char kMagic[8] = {'M', 'Z', 'K', 'B', 'N', 'D', 'L', '\0'};
constexpr std::uint32_t kVersion = 1;

void put_number(std::string& line, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.16e", v);
  line += buf;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::ofstream open_out(const std::string& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream out(path, mode);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  return out;
}

template <typename T>
void write_pod(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T read_pod(std::istream& in, const std::string& path) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw IoError("truncated kernel bundle '" + path + "'");
  return v;
}

void write_series(std::ostream& out, const MatrixSeries& s) {
  write_pod<std::uint64_t>(out, s.samples());
  write_pod<std::uint64_t>(out, s.rows());
  write_pod<std::uint64_t>(out, s.cols());
  out.write(reinterpret_cast<const char*>(s.raw().data()),
            static_cast<std::streamsize>(s.raw().size() * sizeof(double)));
}

MatrixSeries read_series(std::istream& in, const std::string& path) {
  const auto samples = read_pod<std::uint64_t>(in, path);
  const auto rows = read_pod<std::uint64_t>(in, path);
  const auto cols = read_pod<std::uint64_t>(in, path);
  if (rows > 4096 || cols > 4096 || samples > (std::uint64_t{1} << 32))
    throw IoError("implausible table dimensions in '" + path + "'");
  MatrixSeries s(samples, rows, cols);
  in.read(reinterpret_cast<char*>(s.raw().data()),
          static_cast<std::streamsize>(s.raw().size() * sizeof(double)));
  if (!in) throw IoError("truncated kernel bundle '" + path + "'");
  return s;
}

json read_header(std::istream& in, const std::string& path) {
  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof magic) != 0)
    throw IoError("'" + path + "' is not a kernel bundle");
  const auto version = read_pod<std::uint32_t>(in, path);
  if (version != kVersion)
    throw IoError("unsupported kernel bundle version " + std::to_string(version) + " in '" + path + "'");
  const auto len = read_pod<std::uint64_t>(in, path);
  if (len > (1u << 24)) throw IoError("implausible metadata length in '" + path + "'");
  std::string text(len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(len));
  if (!in) throw IoError("truncated kernel bundle '" + path + "'");
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw IoError("corrupt kernel bundle metadata in '" + path + "': " + e.what());
  }
}

}  // namespace

void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
  std::string line = "t";
  for (const auto& l : traj.labels()) line += "," + l;
  out << line << '\n';
  for (std::size_t i = 0; i < traj.size(); ++i) {
    line.clear();
    put_number(line, traj.time(i));
    for (double v : traj.row(i)) {
      line += ',';
      put_number(line, v);
    }
    out << line << '\n';
  }
}

void write_trajectory_csv(const std::string& path, const Trajectory& traj) {
  auto out = open_out(path);
  write_trajectory_csv(out, traj);
  if (!out) throw IoError("failed writing '" + path + "'");
}

Trajectory read_trajectory_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw IoError("'" + path + "' is empty");
  auto header = split(line);
  if (header.size() < 2 || header[0] != "t") throw IoError("'" + path + "': first column must be t");
  std::vector<std::string> labels(header.begin() + 1, header.end());

  std::vector<double> times;
  std::vector<double> values;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto cells = split(line);
    if (cells.size() != header.size())
      throw IoError("'" + path + "' line " + std::to_string(lineno) + ": wrong number of columns");
    try {
      times.push_back(std::stod(cells[0]));
      for (std::size_t k = 1; k < cells.size(); ++k) values.push_back(std::stod(cells[k]));
    } catch (const std::exception&) {
      throw IoError("'" + path + "' line " + std::to_string(lineno) + ": not a number");
    }
  }
  if (times.empty()) throw IoError("'" + path + "' has no samples");
  const double dt = times.size() > 1 ? times[1] - times[0] : 1.0;
  if (times.size() > 1 && !(dt > 0.0)) throw IoError("'" + path + "': time column not increasing");
  for (std::size_t i = 0; i < times.size(); ++i) {
    const double expect = times[0] + static_cast<double>(i) * dt;
    if (std::abs(times[i] - expect) > 1e-6 * dt + 1e-12 * std::abs(expect))
      throw IoError("'" + path + "': time column is not uniform");
  }
  Trajectory traj(dt, labels, times[0]);
  traj.reserve(times.size());
  const std::size_t w = labels.size();
  for (std::size_t i = 0; i < times.size(); ++i)
    traj.push_back(std::span<const double>(values.data() + i * w, w));
  return traj;
}

void write_quadrature_csv(const std::string& path, const QuadratureRule& rule) {
  auto out = open_out(path);
  std::string line;
  for (int k = 1; k <= rule.dim; ++k) line += "x" + std::to_string(k) + ",";
  out << line << "weight\n";
  for (std::size_t q = 0; q < rule.size(); ++q) {
    line.clear();
    for (double v : rule.node(q)) {
      put_number(line, v);
      line += ',';
    }
    put_number(line, rule.weights[q]);
    out << line << '\n';
  }
  if (!out) throw IoError("failed writing '" + path + "'");
}

void write_kernel_bundle(const std::string& path, const KernelBundle& bundle) {
  const KernelTables& t = bundle.tables;
  json meta;
  meta["dt_k"] = t.dt_k;
  meta["horizon"] = t.horizon();
  meta["samples"] = t.samples();
  meta["order"] = bundle.order;
  meta["basis_size"] = bundle.index_set.size();
  meta["enumeration"] = "graded-lexicographic";
  meta["index_set"] = bundle.index_set;
  meta["convention"] = bundle.convention == HermiteConvention::kOrthonormal ? "orthonormal" : "physicists_raw";
  meta["config_hash"] = bundle.config_hash;
  meta["byte_order"] = std::endian::native == std::endian::little ? "little" : "big";
  meta["tables"] = {"f", "g", "gamma", "b", "memory_matrix"};
  const std::string text = meta.dump();

  auto out = open_out(path, std::ios::out | std::ios::binary | std::ios::trunc);
  out.write(kMagic, sizeof kMagic);
  write_pod(out, kVersion);
  write_pod<std::uint64_t>(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const MatrixSeries* s : {&t.f, &t.g, &t.gamma, &t.b, &t.memory_matrix}) write_series(out, *s);
  if (!out) throw IoError("failed writing '" + path + "'");
}

std::string read_kernel_metadata(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  return read_header(in, path).dump(2);
}

KernelBundle read_kernel_bundle(const std::string& path, std::uint64_t expected_hash) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  const json meta = read_header(in, path);
  KernelBundle bundle;
  try {
    bundle.config_hash = meta.at("config_hash").get<std::uint64_t>();
    if (bundle.config_hash != expected_hash) {
      char buf[96];
      std::snprintf(buf, sizeof buf, "stored %016llx, expected %016llx",
                    static_cast<unsigned long long>(bundle.config_hash),
                    static_cast<unsigned long long>(expected_hash));
      throw IoError("kernel bundle '" + path + "' was built from a different config (" + buf + ")");
    }
    const std::string order = meta.at("byte_order").get<std::string>();
    if (order != (std::endian::native == std::endian::little ? "little" : "big"))
      throw IoError("kernel bundle '" + path + "' has foreign byte order");
    bundle.order = meta.at("order").get<int>();
    bundle.index_set = meta.at("index_set").get<std::vector<MultiIndex>>();
    const std::string conv = meta.at("convention").get<std::string>();
    bundle.convention =
        conv == "orthonormal" ? HermiteConvention::kOrthonormal : HermiteConvention::kPhysicistsRaw;
    bundle.tables.dt_k = meta.at("dt_k").get<double>();
  } catch (const json::exception& e) {
    throw IoError("corrupt kernel bundle metadata in '" + path + "': " + e.what());
  }
  KernelTables& t = bundle.tables;
  t.f = read_series(in, path);
  t.g = read_series(in, path);
  t.gamma = read_series(in, path);
  t.b = read_series(in, path);
  t.memory_matrix = read_series(in, path);
  const std::size_t k = bundle.index_set.size();
  if (t.g.rows() != k || t.g.cols() != k || t.f.cols() != k || t.b.cols() != k ||
      t.g.samples() != t.f.samples() || t.b.samples() != t.f.samples() ||
      t.memory_matrix.samples() != t.f.samples())
    throw IoError("kernel bundle '" + path + "' has inconsistent table shapes");
  return bundle;
}

void emit_plot_data(std::ostream& out, const std::vector<PlotRun>& runs,
                    const std::vector<std::string>& vars, bool resample) {
  if (runs.empty()) throw UsageError("emit_plot_data: no runs");
  for (const auto& r : runs)
    if (r.trajectory == nullptr || r.trajectory->empty())
      throw UsageError("emit_plot_data: run '" + r.label + "' is empty");

  double coarse = 0.0;
  for (const auto& r : runs) coarse = std::max(coarse, r.trajectory->dt());
  std::vector<std::size_t> strides;
  std::size_t length = 0;
  for (const auto& r : runs) {
    const double ratio = coarse / r.trajectory->dt();
    const auto stride = static_cast<std::size_t>(std::llround(ratio));
    const bool same = std::abs(ratio - 1.0) < 1e-9;
    if (!same && (!resample || std::abs(ratio - static_cast<double>(stride)) > 1e-6 * ratio))
      throw UsageError("emit_plot_data: run '" + r.label + "' is on a different time grid");
    strides.push_back(same ? 1 : stride);
    const std::size_t n = (r.trajectory->size() - 1) / strides.back() + 1;
    if (length == 0) length = n;
    else if (n != length) {
      if (!resample) throw UsageError("emit_plot_data: run '" + r.label + "' has a different length");
      length = std::min(length, n);
    }
  }

  std::vector<std::vector<std::size_t>> cols;
  std::string line = "t";
  for (const auto& r : runs) {
    std::vector<std::size_t> c;
    for (const auto& v : vars) {
      c.push_back(r.trajectory->column_index(v));
      line += "," + r.label + ":" + v;
    }
    cols.push_back(std::move(c));
  }
  out << line << '\n';
  const Trajectory& first = *runs.front().trajectory;
  for (std::size_t i = 0; i < length; ++i) {
    line.clear();
    put_number(line, first.time(i * strides.front()));
    for (std::size_t r = 0; r < runs.size(); ++r) {
      for (std::size_t c : cols[r]) {
        line += ',';
        put_number(line, runs[r].trajectory->value(i * strides[r], c));
      }
    }
    out << line << '\n';
  }
}

void emit_plot_data(const std::string& path, const std::vector<PlotRun>& runs,
                    const std::vector<std::string>& vars, bool resample) {
  auto out = open_out(path);
  emit_plot_data(out, runs, vars, resample);
  if (!out) throw IoError("failed writing '" + path + "'");
}

}  // namespace mzgrid
