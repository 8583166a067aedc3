#pragma once

// Run configuration read from strict JSON. Every section must be present;
// keys inside a section are optional and fall back to the reference setup.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "mzgrid/demarco.hpp"
#include "mzgrid/heat_bath.hpp"
#include "mzgrid/hermite.hpp"
#include "mzgrid/quadrature.hpp"
#include "mzgrid/reduced.hpp"

namespace mzgrid {

enum class ModelType { kThreeBus, kHeatBath };

struct ProjectionConfig {
  double alpha3_anchor = -0.3;
  double v3_anchor = 0.8;
  double variance = 1e-4;
  int order = 1;
  std::vector<int> order_sweep;  // extra orders for convergence studies
  int sparse_grid_level = 7;
  QuadratureKind quadrature = QuadratureKind::kSparse;
  HermiteConvention convention = HermiteConvention::kOrthonormal;
};

struct KernelConfig {
  std::size_t sample_stride = 1;
  double horizon = 2.0;
};

struct IntegrationConfig {
  double dt = 5e-5;
  double t_end = 2.0;
  MemoryScheme scheme = MemoryScheme::kExplicit;
  MemorySpec memory = MemorySpec::infinite();
  std::vector<MemorySpec> memory_sweep;
  std::size_t output_stride = 10;
};

struct PathsConfig {
  std::string kernel_table;  // empty: <output_dir>/kernel.bin
  std::string output_dir = "out";
};

struct RunConfig {
  ModelType model = ModelType::kThreeBus;
  GridParams grid;
  StateVector initial = default_initial_state();
  BathParams bath = BathParams::defaults();
  FullBathState bath_initial = bath_initial_state();
  ProjectionConfig projection;
  KernelConfig kernel;
  IntegrationConfig integration;
  PathsConfig paths;

  std::string canonical_json;  // effective config with defaults, sorted keys
  std::uint64_t config_hash = 0;
  std::string kernel_fingerprint;  // canonical JSON of the inputs the kernel depends on

  /// Hash stored in kernel bundles built with basis order `order`.
  std::uint64_t kernel_hash(int order) const;

  std::string kernel_path() const;
  Partition partition() const;
  HermiteBasis basis(int order) const;
  HermiteBasis basis() const { return basis(projection.order); }
};

/// Throws ConfigError with a descriptive message for malformed JSON, missing
/// sections, unknown keys or invalid values.
RunConfig parse_config_string(const std::string& text);
RunConfig parse_config(const std::string& path);

/// The reference 3-bus setup, as if parsed from a config with empty sections.
RunConfig default_config(ModelType model = ModelType::kThreeBus);

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(const std::string& bytes);

std::string hash_hex(std::uint64_t hash);

/// Parses "none", "infinite" or a non-negative number of seconds.
MemorySpec parse_memory_spec(const std::string& text);

}  // namespace mzgrid
