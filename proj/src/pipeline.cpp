#include "mzgrid/pipeline.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "mzgrid/errors.hpp"
#include "mzgrid/heat_bath.hpp"
#include "mzgrid/quadrature.hpp"

namespace mzgrid {

namespace fs = std::filesystem;
using json = nlohmann::json;

const char* stage_name(Stage s) {
  switch (s) {
    case Stage::kConfig: return "config";
    case Stage::kSimulateFull: return "simulate-full";
    case Stage::kBuildKernel: return "build-kernel";
    case Stage::kSimulateReduced: return "simulate-reduced";
    case Stage::kCompare: return "compare";
    case Stage::kHeatBath: return "heat-bath";
    case Stage::kOutput: return "output";
  }
  return "unknown";
}

int stage_exit_code(Stage s) {
  switch (s) {
    case Stage::kConfig: return 2;
    case Stage::kSimulateFull: return 3;
    case Stage::kBuildKernel: return 4;
    case Stage::kSimulateReduced: return 5;
    case Stage::kCompare: return 6;
    case Stage::kHeatBath: return 7;
    case Stage::kOutput: return 8;
  }
  return 1;
}

const std::vector<std::string>& resolved_labels() {
  static const std::vector<std::string> labels{"omega1", "omega2", "alpha2"};
  return labels;
}

namespace {

void require_three_bus(const RunConfig& cfg, Stage stage) {
  if (cfg.model != ModelType::kThreeBus) throw PipelineError(stage, "config model is not 3bus");
}

std::string path_in(const RunConfig& cfg, const std::string& name) {
  return (fs::path(cfg.paths.output_dir) / name).string();
}

void ensure_output_dir(const RunConfig& cfg) {
  run_stage(Stage::kOutput, [&] {
    fs::create_directories(cfg.paths.output_dir);
    return 0;
  });
}

Eigen::Vector3d resolved_initial(const RunConfig& cfg) {
  const Eigen::VectorXd r = restrict_resolved(cfg.initial, cfg.partition());
  return {r[0], r[1], r[2]};
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6e", v);
  return buf;
}

}  // namespace

Trajectory stage_simulate_full(const RunConfig& cfg) {
  require_three_bus(cfg, Stage::kSimulateFull);
  return run_stage(Stage::kSimulateFull, [&] {
    return simulate_full(cfg.initial, cfg.grid, cfg.integration.dt, cfg.integration.t_end,
                         cfg.integration.output_stride);
  });
}

KernelBundle stage_build_kernel(const RunConfig& cfg, int order) {
  require_three_bus(cfg, Stage::kBuildKernel);
  return run_stage(Stage::kBuildKernel, [&] {
    const HermiteBasis basis = cfg.basis(order);
    const QuadratureRule rule =
        build_quadrature(basis, cfg.projection.sparse_grid_level, cfg.projection.quadrature);
    KernelBundle bundle;
    bundle.tables = build_kernel(cfg.grid, cfg.partition(), basis, rule, cfg.integration.dt,
                                 cfg.kernel.horizon, cfg.kernel.sample_stride);
    bundle.order = order;
    bundle.index_set = basis.index_set();
    bundle.convention = basis.convention();
    bundle.config_hash = cfg.kernel_hash(order);
    return bundle;
  });
}

KernelBundle load_kernel(const RunConfig& cfg, const std::string& path, int order) {
  return run_stage(Stage::kBuildKernel, [&] {
    KernelBundle bundle = read_kernel_bundle(path, cfg.kernel_hash(order));
    if (bundle.order != order || bundle.index_set != cfg.basis(order).index_set())
      throw IoError("kernel bundle '" + path + "' does not match the configured basis");
    return bundle;
  });
}

Trajectory stage_simulate_reduced(const RunConfig& cfg, const KernelBundle& bundle,
                                  const MemorySpec& memory, MemoryScheme scheme) {
  require_three_bus(cfg, Stage::kSimulateReduced);
  return run_stage(Stage::kSimulateReduced, [&] {
    ReducedConfig rc;
    rc.dt = cfg.integration.dt;
    rc.t_end = cfg.integration.t_end;
    rc.memory = memory;
    rc.scheme = scheme;
    rc.basis_order = bundle.order;
    rc.output_stride = cfg.integration.output_stride;
    return simulate_reduced(resolved_initial(cfg), rc, bundle.tables, cfg.basis(bundle.order), cfg.grid,
                            cfg.partition());
  });
}

std::string PipelineSummary::to_text() const {
  std::ostringstream out;
  out << "model " << model << "\n";
  out << "config_hash " << config_hash << "\n";
  if (has_plateaus) {
    out << "kernel plateaus (late-time means, t >= " << fmt(plateaus.window_start) << ")\n";
    out << "  b1^(1,0,0) " << fmt(plateaus.b100) << "\n";
    out << "  b1^(0,1,0) " << fmt(plateaus.b010) << "\n";
    out << "  b1^(0,0,1) " << fmt(plateaus.b001) << "\n";
    out << "  ratio b100/b010 " << fmt(plateaus.antisymmetry_ratio) << "\n";
  }
  out << "errors against the full model\n";
  out << "  run                 order  variable   rel_l2         sup            bounded\n";
  for (const auto& r : runs) {
    for (const auto& v : r.errors.variables) {
      char line[160];
      std::snprintf(line, sizeof line, "  %-19s %5d  %-9s  %-13s  %-13s  %s\n", r.label.c_str(), r.order,
                    v.name.c_str(), fmt(v.relative_l2).c_str(), fmt(v.sup).c_str(),
                    r.errors.bounded ? "yes" : "no");
      out << line;
    }
  }
  out << "files\n";
  for (const auto& f : files) out << "  " << f << "\n";
  return out.str();
}

std::string PipelineSummary::to_json() const {
  json j;
  j["model"] = model;
  j["config_hash"] = config_hash;
  if (has_plateaus) {
    j["plateaus"] = {{"b100", plateaus.b100},
                     {"b010", plateaus.b010},
                     {"b001", plateaus.b001},
                     {"ratio", plateaus.antisymmetry_ratio},
                     {"window_start", plateaus.window_start}};
  }
  json runs_json = json::array();
  for (const auto& r : runs) {
    json vars = json::object();
    for (const auto& v : r.errors.variables) vars[v.name] = {{"relative_l2", v.relative_l2}, {"sup", v.sup}};
    runs_json.push_back({{"label", r.label}, {"order", r.order}, {"bounded", r.errors.bounded}, {"errors", vars}});
  }
  j["runs"] = runs_json;
  j["files"] = files;
  return j.dump(2);
}

namespace {

void write_summary(const RunConfig& cfg, PipelineSummary& summary) {
  run_stage(Stage::kOutput, [&] {
    const std::string txt = path_in(cfg, "summary.txt"), js = path_in(cfg, "summary.json");
    summary.files.push_back(txt);
    summary.files.push_back(js);
    std::ofstream(txt) << summary.to_text();
    std::ofstream(js) << summary.to_json() << "\n";
    std::ofstream(path_in(cfg, "config.json")) << cfg.canonical_json << "\n";
    return 0;
  });
}

void write_csv(const RunConfig& cfg, PipelineSummary& summary, const std::string& name, const Trajectory& t) {
  run_stage(Stage::kOutput, [&] {
    const std::string path = path_in(cfg, name);
    write_trajectory_csv(path, t);
    summary.files.push_back(path);
    return 0;
  });
}

void write_plot(const RunConfig& cfg, PipelineSummary& summary, const std::string& name,
                const std::vector<PlotRun>& runs, const std::vector<std::string>& vars) {
  run_stage(Stage::kOutput, [&] {
    const std::string path = path_in(cfg, name);
    emit_plot_data(path, runs, vars);
    summary.files.push_back(path);
    return 0;
  });
}

}  // namespace

PipelineSummary run_pipeline(const RunConfig& cfg) {
  if (cfg.model == ModelType::kHeatBath) return run_heat_bath(cfg);

  PipelineSummary summary;
  summary.model = "3bus";
  summary.config_hash = hash_hex(cfg.config_hash);
  ensure_output_dir(cfg);

  const Trajectory full = stage_simulate_full(cfg);
  write_csv(cfg, summary, "full.csv", full);

  const KernelBundle bundle = stage_build_kernel(cfg, cfg.projection.order);
  run_stage(Stage::kOutput, [&] {
    write_kernel_bundle(cfg.kernel_path(), bundle);
    summary.files.push_back(cfg.kernel_path());
    return 0;
  });
  if (cfg.projection.order >= 1) {
    summary.plateaus = run_stage(Stage::kBuildKernel, [&] {
      return kernel_diagnostics(bundle.tables.b, cfg.basis(bundle.order), bundle.tables.dt_k);
    });
    summary.has_plateaus = true;
  }

  // main memory mode plus the memoryless model, then the sweep
  std::vector<MemorySpec> modes{cfg.integration.memory};
  if (cfg.integration.memory.mode != MemoryMode::kNone) modes.push_back(MemorySpec::none());
  for (const auto& m : cfg.integration.memory_sweep) {
    bool seen = false;
    for (const auto& e : modes) seen = seen || (e.mode == m.mode && e.t_memory == m.t_memory);
    if (!seen) modes.push_back(m);
  }

  std::map<std::string, Trajectory> reduced;
  for (const auto& m : modes) {
    const std::string label = m.label();
    reduced[label] = stage_simulate_reduced(cfg, bundle, m, cfg.integration.scheme);
    write_csv(cfg, summary, "reduced_" + label + ".csv", reduced[label]);
    const ErrorReport rep =
        run_stage(Stage::kCompare, [&] { return compare_trajectories(full, reduced[label], resolved_labels()); });
    summary.runs.push_back({label, bundle.order, rep});
  }

  const std::string main_label = cfg.integration.memory.label();
  std::vector<PlotRun> fig5{{"full", &full}, {main_label, &reduced[main_label]}};
  if (main_label != "none") fig5.push_back({"none", &reduced["none"]});
  write_plot(cfg, summary, "plot_memory_comparison.csv", fig5, resolved_labels());

  if (!cfg.integration.memory_sweep.empty()) {
    std::vector<PlotRun> fig6{{"full", &full}};
    for (const auto& m : cfg.integration.memory_sweep) fig6.push_back({m.label(), &reduced[m.label()]});
    write_plot(cfg, summary, "plot_memory_sweep.csv", fig6, resolved_labels());
  }

  if (!cfg.projection.order_sweep.empty()) {
    std::map<int, Trajectory> by_order;
    for (int order : cfg.projection.order_sweep) {
      if (by_order.count(order)) continue;
      const KernelBundle kb = order == bundle.order ? bundle : stage_build_kernel(cfg, order);
      by_order[order] = stage_simulate_reduced(cfg, kb, cfg.integration.memory, cfg.integration.scheme);
      const std::string label = "p" + std::to_string(order) + "_" + main_label;
      write_csv(cfg, summary, "reduced_" + label + ".csv", by_order[order]);
      const ErrorReport rep = run_stage(
          Stage::kCompare, [&] { return compare_trajectories(full, by_order[order], resolved_labels()); });
      summary.runs.push_back({label, order, rep});
    }
    std::vector<PlotRun> runs{{"full", &full}};
    for (const auto& [order, traj] : by_order) runs.push_back({"p" + std::to_string(order), &traj});
    write_plot(cfg, summary, "plot_order_sweep.csv", runs, resolved_labels());
  }

  write_summary(cfg, summary);
  return summary;
}

PipelineSummary run_heat_bath(const RunConfig& cfg) {
  if (cfg.model != ModelType::kHeatBath) throw PipelineError(Stage::kHeatBath, "config model is not heat_bath");
  PipelineSummary summary;
  summary.model = "heat_bath";
  summary.config_hash = hash_hex(cfg.config_hash);
  ensure_output_dir(cfg);

  const auto& in = cfg.integration;
  const Trajectory full = run_stage(Stage::kHeatBath, [&] {
    return simulate_full_bath(cfg.bath_initial, cfg.bath, in.dt, in.t_end, in.output_stride);
  });
  write_csv(cfg, summary, "heat_bath_full.csv", full);

  auto memory_length = [](const MemorySpec& m) {
    switch (m.mode) {
      case MemoryMode::kNone: return 0.0;
      case MemoryMode::kFinite: return m.t_memory;
      case MemoryMode::kInfinite: break;
    }
    return std::numeric_limits<double>::infinity();
  };

  std::vector<MemorySpec> modes{in.memory};
  for (const auto& m : {MemorySpec::infinite(), MemorySpec::none()})
    if (m.mode != in.memory.mode) modes.push_back(m);
  for (const auto& m : in.memory_sweep) {
    bool seen = false;
    for (const auto& e : modes) seen = seen || (e.mode == m.mode && e.t_memory == m.t_memory);
    if (!seen) modes.push_back(m);
  }

  std::map<std::string, Trajectory> reduced;
  for (const auto& m : modes) {
    const std::string label = m.label();
    ReducedParticleOptions opts;
    opts.t_memory = memory_length(m);
    reduced[label] = run_stage(Stage::kHeatBath, [&] {
      return simulate_reduced_particle(cfg.bath_initial, cfg.bath, in.dt, in.t_end, opts, in.output_stride);
    });
    write_csv(cfg, summary, "heat_bath_reduced_" + label + ".csv", reduced[label]);
    const ErrorReport rep =
        run_stage(Stage::kCompare, [&] { return compare_trajectories(full, reduced[label], {"x", "p"}); });
    summary.runs.push_back({label, 0, rep});
  }

  std::vector<PlotRun> runs{{"full", &full}};
  for (const auto& m : modes) runs.push_back({m.label(), &reduced[m.label()]});
  write_plot(cfg, summary, "plot_heat_bath.csv", runs, {"x", "p"});

  write_summary(cfg, summary);
  return summary;
}

}  // namespace mzgrid
