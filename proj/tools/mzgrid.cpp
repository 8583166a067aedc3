// mzgrid command-line front end.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mzgrid/config.hpp"
#include "mzgrid/errors.hpp"
#include "mzgrid/heat_bath.hpp"
#include "mzgrid/io.hpp"
#include "mzgrid/pipeline.hpp"

using namespace mzgrid;
namespace fs = std::filesystem;

namespace {

RunConfig load(const std::string& path, std::optional<ModelType> fallback = std::nullopt) {
  return run_stage(Stage::kConfig, [&] {
    if (path.empty()) {
      if (!fallback) throw ConfigError("--config is required");
      return default_config(*fallback);
    }
    return parse_config(path);
  });
}

std::string output_path(const RunConfig& cfg, const std::string& flag, const std::string& name) {
  if (!flag.empty()) return flag;
  fs::create_directories(cfg.paths.output_dir);
  return (fs::path(cfg.paths.output_dir) / name).string();
}

MemoryScheme parse_scheme(const std::string& s) {
  if (s == "explicit") return MemoryScheme::kExplicit;
  if (s == "implicit") return MemoryScheme::kImplicit;
  throw ConfigError("unknown scheme '" + s + "'");
}

void print_report(const ErrorReport& rep) {
  std::cout << "variable,relative_l2,sup\n";
  for (const auto& v : rep.variables) {
    std::cout << v.name << ',' << v.relative_l2 << ',' << v.sup << '\n';
  }
  std::cout << "bounded," << (rep.bounded ? "yes" : "no") << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mori-Zwanzig reduced models for the 3-bus grid and the heat-bath oracle"};
  app.require_subcommand(1);

  std::string config_path, out_path, kernel_path, memory_text, scheme_text;
  int order = -1;

  auto* sim_full = app.add_subcommand("simulate-full", "Forward Euler run of the full 3-bus model");
  sim_full->add_option("--config", config_path, "JSON run config")->required();
  sim_full->add_option("--out", out_path, "CSV output (default <output_dir>/full.csv)");

  auto* build = app.add_subcommand("build-kernel", "Ensemble tables, Volterra solve and memory matrix");
  build->add_option("--config", config_path, "JSON run config")->required();
  build->add_option("--order", order, "Hermite basis order (default projection.order)");
  build->add_option("--out", out_path, "Kernel bundle (default paths.kernel_table)");
  std::string nodes_csv;
  build->add_option("--nodes-csv", nodes_csv, "Also write the quadrature nodes and weights");

  auto* sim_red = app.add_subcommand("simulate-reduced", "Integrate the reduced model from a kernel bundle");
  sim_red->add_option("--config", config_path, "JSON run config")->required();
  sim_red->add_option("--kernel", kernel_path, "Kernel bundle (default paths.kernel_table)");
  sim_red->add_option("--order", order, "Hermite basis order of the bundle (default projection.order)");
  sim_red->add_option("--memory", memory_text, "none | infinite | <t_memory>");
  sim_red->add_option("--scheme", scheme_text, "explicit | implicit");
  sim_red->add_option("--out", out_path, "CSV output");
  double red_dt = 0.0, red_t_end = 0.0;
  sim_red->add_option("--dt", red_dt, "Time step (default integration.dt)");
  sim_red->add_option("--t-end", red_t_end, "Final time (default integration.t_end)");

  std::size_t n_osc = 0;
  double hb_dt = 0.0, hb_t_end = 0.0;
  bool bath_coords = false;
  auto* heat = app.add_subcommand("heat-bath", "Full and reduced particle in a harmonic bath");
  heat->add_option("--config", config_path, "JSON run config with model.type heat_bath");
  heat->add_option("--n-osc", n_osc, "Number of oscillators (default params)");
  heat->add_option("--t-memory", memory_text, "none | infinite | <t_memory>");
  heat->add_option("--dt", hb_dt, "Time step");
  heat->add_option("--t-end", hb_t_end, "Final time");
  heat->add_option("--out", out_path, "Reduced-model CSV output");
  heat->add_flag("--bath-coords", bath_coords, "Also write the full system with bath coordinates");

  std::string reference, candidate;
  std::vector<std::string> vars;
  auto* compare = app.add_subcommand("compare", "Error table of a candidate CSV against a reference CSV");
  compare->add_option("--config", config_path, "JSON run config (selects default variables)");
  compare->add_option("--reference", reference, "Reference trajectory CSV")->required();
  compare->add_option("--candidate", candidate, "Candidate trajectory CSV")->required();
  compare->add_option("--vars", vars, "Variables to compare");

  auto* pipe = app.add_subcommand("pipeline", "simulate-full, build-kernel, simulate-reduced and compare");
  pipe->add_option("--config", config_path, "JSON run config")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*sim_full) {
      const RunConfig cfg = load(config_path);
      const Trajectory full = stage_simulate_full(cfg);
      const std::string path = run_stage(Stage::kOutput, [&] {
        const std::string p = output_path(cfg, out_path, "full.csv");
        write_trajectory_csv(p, full);
        return p;
      });
      std::cout << "wrote " << path << " (" << full.size() << " samples)\n";
    } else if (*build) {
      const RunConfig cfg = load(config_path);
      const int p = order >= 0 ? order : cfg.projection.order;
      const KernelBundle bundle = stage_build_kernel(cfg, p);
      const std::string path = run_stage(Stage::kOutput, [&] {
        const std::string target = out_path.empty() ? cfg.kernel_path() : out_path;
        if (fs::path(target).has_parent_path()) fs::create_directories(fs::path(target).parent_path());
        write_kernel_bundle(target, bundle);
        if (!nodes_csv.empty()) {
          const HermiteBasis basis = cfg.basis(p);
          write_quadrature_csv(nodes_csv, build_quadrature(basis, cfg.projection.sparse_grid_level,
                                                           cfg.projection.quadrature));
        }
        return target;
      });
      std::cout << "wrote " << path << " (" << bundle.tables.samples() << " samples, "
                << bundle.index_set.size() << " basis functions, hash " << hash_hex(bundle.config_hash)
                << ")\n";
      if (p >= 1) {
        const KernelPlateaus pl = kernel_diagnostics(bundle.tables.b, cfg.basis(p), bundle.tables.dt_k);
        std::cout << "plateaus b100 " << pl.b100 << " b010 " << pl.b010 << " b001 " << pl.b001 << "\n";
      }
    } else if (*sim_red) {
      RunConfig cfg = load(config_path);
      const int p = order >= 0 ? order : cfg.projection.order;
      const KernelBundle bundle = load_kernel(cfg, kernel_path.empty() ? cfg.kernel_path() : kernel_path, p);
      const MemorySpec mem = run_stage(Stage::kConfig, [&] {
        return memory_text.empty() ? cfg.integration.memory : parse_memory_spec(memory_text);
      });
      const MemoryScheme scheme = run_stage(Stage::kConfig, [&] {
        return scheme_text.empty() ? cfg.integration.scheme : parse_scheme(scheme_text);
      });
      if (red_dt > 0.0) cfg.integration.dt = red_dt;
      if (red_t_end > 0.0) cfg.integration.t_end = red_t_end;
      const Trajectory red = stage_simulate_reduced(cfg, bundle, mem, scheme);
      const std::string path = run_stage(Stage::kOutput, [&] {
        const std::string target = output_path(cfg, out_path, "reduced_" + mem.label() + ".csv");
        write_trajectory_csv(target, red);
        return target;
      });
      std::cout << "wrote " << path << " (" << red.size() << " samples)\n";
    } else if (*heat) {
      RunConfig cfg = load(config_path, ModelType::kHeatBath);
      run_stage(Stage::kConfig, [&] {
        if (cfg.model != ModelType::kHeatBath) throw ConfigError("config model is not heat_bath");
        if (n_osc > 0) {
          cfg.bath = BathParams::defaults(n_osc);
          cfg.bath_initial = bath_initial_state(n_osc);
        }
        if (hb_dt > 0.0) cfg.integration.dt = hb_dt;
        if (hb_t_end > 0.0) cfg.integration.t_end = hb_t_end;
        if (!memory_text.empty()) cfg.integration.memory = parse_memory_spec(memory_text);
        return 0;
      });
      const auto& in = cfg.integration;
      ReducedParticleOptions opts;
      if (in.memory.mode == MemoryMode::kNone) opts.t_memory = 0.0;
      else if (in.memory.mode == MemoryMode::kFinite) opts.t_memory = in.memory.t_memory;
      const Trajectory red = run_stage(Stage::kHeatBath, [&] {
        return simulate_reduced_particle(cfg.bath_initial, cfg.bath, in.dt, in.t_end, opts, in.output_stride);
      });
      const Trajectory full = run_stage(Stage::kHeatBath, [&] {
        return simulate_full_bath(cfg.bath_initial, cfg.bath, in.dt, in.t_end, in.output_stride, bath_coords);
      });
      run_stage(Stage::kOutput, [&] {
        const std::string p = output_path(cfg, out_path, "heat_bath_reduced_" + in.memory.label() + ".csv");
        write_trajectory_csv(p, red);
        std::cout << "wrote " << p << "\n";
        if (bath_coords) {
          const std::string fp = output_path(cfg, "", "heat_bath_full.csv");
          write_trajectory_csv(fp, full);
          std::cout << "wrote " << fp << "\n";
        }
        return 0;
      });
      print_report(run_stage(Stage::kCompare, [&] { return compare_trajectories(full, red, {"x", "p"}); }));
    } else if (*compare) {
      std::vector<std::string> names = vars;
      if (names.empty() && !config_path.empty()) {
        const RunConfig cfg = load(config_path);
        names = cfg.model == ModelType::kThreeBus ? resolved_labels() : std::vector<std::string>{"x", "p"};
      }
      const ErrorReport rep = run_stage(Stage::kCompare, [&] {
        const Trajectory ref = read_trajectory_csv(reference);
        const Trajectory cand = read_trajectory_csv(candidate);
        std::vector<std::string> use = names;
        if (use.empty())
          for (const auto& l : cand.labels())
            if (std::find(ref.labels().begin(), ref.labels().end(), l) != ref.labels().end()) use.push_back(l);
        return compare_trajectories(ref, cand, use);
      });
      print_report(rep);
    } else if (*pipe) {
      const RunConfig cfg = load(config_path);
      const PipelineSummary summary = run_pipeline(cfg);
      std::cout << summary.to_text();
    }
  } catch (const PipelineError& e) {
    std::cerr << "mzgrid: " << e.what() << "\n";
    return stage_exit_code(e.stage());
  } catch (const std::exception& e) {
    std::cerr << "mzgrid: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
