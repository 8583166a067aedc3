#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "mzgrid/hermite.hpp"
#include "mzgrid/memory_kernel.hpp"
#include "mzgrid/quadrature.hpp"
#include "mzgrid/trajectory.hpp"

namespace mzgrid {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Header "t,<labels...>", one row per sample, values in %.16e.
void write_trajectory_csv(std::ostream& out, const Trajectory& traj);
void write_trajectory_csv(const std::string& path, const Trajectory& traj);

/// Reads a CSV written by write_trajectory_csv. The time column must be uniform.
Trajectory read_trajectory_csv(const std::string& path);

/// Columns x1..xd,weight; one row per node.
void write_quadrature_csv(const std::string& path, const QuadratureRule& rule);

struct KernelBundle {
  KernelTables tables;
  int order = 0;
  std::vector<MultiIndex> index_set;
  HermiteConvention convention = HermiteConvention::kOrthonormal;
  std::uint64_t config_hash = 0;
};

/// Versioned binary file: magic, version, JSON metadata, then the f, g, gamma,
/// b and memory-matrix blocks as raw doubles.
void write_kernel_bundle(const std::string& path, const KernelBundle& bundle);

/// Throws IoError on a malformed file or when the stored config hash differs
/// from expected_hash.
KernelBundle read_kernel_bundle(const std::string& path, std::uint64_t expected_hash);

/// Metadata block of a bundle as JSON text, without reading the tables.
std::string read_kernel_metadata(const std::string& path);

struct PlotRun {
  std::string label;
  const Trajectory* trajectory = nullptr;
};

/// Wide CSV with columns t, then <label>:<var> for every run and variable.
/// All runs must share the same grid; with resample set, finer runs are
/// subsampled to the coarsest spacing when the ratio is an integer.
void emit_plot_data(std::ostream& out, const std::vector<PlotRun>& runs,
                    const std::vector<std::string>& vars, bool resample = false);
void emit_plot_data(const std::string& path, const std::vector<PlotRun>& runs,
                    const std::vector<std::string>& vars, bool resample = false);

}  // namespace mzgrid
