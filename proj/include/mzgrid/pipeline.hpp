#pragma once

// simulate-full -> build-kernel -> simulate-reduced -> compare, with every
// artifact written under the configured output directory.

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "mzgrid/config.hpp"
#include "mzgrid/io.hpp"
#include "mzgrid/memory_kernel.hpp"
#include "mzgrid/reduced.hpp"
#include "mzgrid/trajectory.hpp"

namespace mzgrid {

enum class Stage { kConfig, kSimulateFull, kBuildKernel, kSimulateReduced, kCompare, kHeatBath, kOutput };

const char* stage_name(Stage s);

/// Process exit code used by the CLI for a failure in stage s (0 is success).
int stage_exit_code(Stage s);

class PipelineError : public std::runtime_error {
 public:
  PipelineError(Stage stage, const std::string& what)
      : std::runtime_error(std::string(stage_name(stage)) + ": " + what), stage_(stage) {}
  Stage stage() const noexcept { return stage_; }

 private:
  Stage stage_;
};

/// Runs fn, converting any std::exception into a PipelineError for `stage`.
template <typename Fn>
auto run_stage(Stage stage, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const PipelineError&) {
    throw;
  } catch (const std::exception& e) {
    throw PipelineError(stage, e.what());
  }
}

/// Resolved-variable names of the reduced model.
const std::vector<std::string>& resolved_labels();

Trajectory stage_simulate_full(const RunConfig& cfg);

/// Builds the kernel for basis order `order` (the ensemble always runs at the
/// integration dt) and tags it with the config's kernel hash.
KernelBundle stage_build_kernel(const RunConfig& cfg, int order);

/// Loads a bundle and checks it against cfg and order.
KernelBundle load_kernel(const RunConfig& cfg, const std::string& path, int order);

Trajectory stage_simulate_reduced(const RunConfig& cfg, const KernelBundle& bundle,
                                  const MemorySpec& memory, MemoryScheme scheme);

struct RunSummary {
  std::string label;
  int order = 0;
  ErrorReport errors;
};

struct PipelineSummary {
  std::string model;
  std::string config_hash;
  std::vector<RunSummary> runs;
  bool has_plateaus = false;
  KernelPlateaus plateaus;
  std::vector<std::string> files;

  std::string to_text() const;
  std::string to_json() const;
};

/// Full orchestration for either model type. Partial artifacts stay on disk
/// when a stage fails.
PipelineSummary run_pipeline(const RunConfig& cfg);

/// Heat-bath part: full system, infinite and memoryless reduced models plus
/// the configured memory sweep.
PipelineSummary run_heat_bath(const RunConfig& cfg);

}  // namespace mzgrid
