#include "mzgrid/config.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "mzgrid/errors.hpp"

namespace mzgrid {

using json = nlohmann::json;

namespace {

// Reads keys of one JSON object and remembers which were consumed so that
// leftovers can be reported as unknown.
class Section {
 public:
  Section(const json& node, std::string name) : node_(node), name_(std::move(name)) {
    if (!node_.is_object()) throw ConfigError(name_ + ": expected a JSON object");
  }

  bool has(const std::string& key) {
    used_.insert(key);
    return node_.contains(key);
  }

  const json& raw(const std::string& key) {
    used_.insert(key);
    return node_.at(key);
  }

  template <typename T>
  T get(const std::string& key, T fallback) {
    if (!has(key)) return fallback;
    try {
      return node_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError(name_ + "." + key + ": wrong value type");
    }
  }

  double number(const std::string& key, double fallback) {
    if (!has(key)) return fallback;
    const json& v = node_.at(key);
    if (!v.is_number()) throw ConfigError(name_ + "." + key + ": expected a number");
    return v.get<double>();
  }

  std::size_t count(const std::string& key, std::size_t fallback) {
    if (!has(key)) return fallback;
    const json& v = node_.at(key);
    if (!v.is_number_integer() || v.get<long long>() < 0)
      throw ConfigError(name_ + "." + key + ": expected a non-negative integer");
    return v.get<std::size_t>();
  }

  void finish() const {
    for (const auto& item : node_.items())
      if (!used_.count(item.key())) throw ConfigError(name_ + ": unknown key '" + item.key() + "'");
  }

  const std::string& name() const { return name_; }

 private:
  const json& node_;
  std::string name_;
  std::set<std::string> used_;
};

void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

MemorySpec memory_from_json(const json& v, const std::string& where) {
  if (v.is_string()) {
    try {
      return parse_memory_spec(v.get<std::string>());
    } catch (const ConfigError& e) {
      throw ConfigError(where + ": " + e.what());
    }
  }
  if (v.is_number()) {
    const double t = v.get<double>();
    require(std::isfinite(t) && t >= 0.0, where + ": memory length must be non-negative");
    return MemorySpec::finite(t);
  }
  throw ConfigError(where + ": memory must be \"none\", \"infinite\" or a number");
}

json memory_to_json(const MemorySpec& m) {
  switch (m.mode) {
    case MemoryMode::kNone:
      return "none";
    case MemoryMode::kInfinite:
      return "infinite";
    case MemoryMode::kFinite:
      return m.t_memory;
  }
  return nullptr;
}

std::vector<double> number_list(const json& v, std::size_t n, const std::string& where) {
  if (v.is_number()) return std::vector<double>(n, v.get<double>());
  require(v.is_array(), where + ": expected a number or an array");
  std::vector<double> out;
  for (const auto& e : v) {
    require(e.is_number(), where + ": array entries must be numbers");
    out.push_back(e.get<double>());
  }
  require(out.size() == n, where + ": expected " + std::to_string(n) + " entries");
  return out;
}

void parse_grid_model(Section& model, RunConfig& cfg) {
  if (model.has("params")) {
    Section s(model.raw("params"), "model.params");
    GridParams& g = cfg.grid;
    g.m1 = s.number("m1", g.m1);
    g.m2 = s.number("m2", g.m2);
    g.d1 = s.number("d1", g.d1);
    g.d2 = s.number("d2", g.d2);
    g.d3 = s.number("d3", g.d3);
    g.b1 = s.number("b1", g.b1);
    g.b2 = s.number("b2", g.b2);
    g.b3 = s.number("b3", g.b3);
    g.p2 = s.number("p2", g.p2);
    g.p3 = s.number("p3", g.p3);
    g.q3 = s.number("q3", g.q3);
    g.epsilon = s.number("epsilon", g.epsilon);
    g.v1 = s.number("v1", g.v1);
    g.v2 = s.number("v2", g.v2);
    s.finish();
  }
  if (model.has("initial_state")) {
    Section s(model.raw("initial_state"), "model.initial_state");
    const auto& labels = state_labels();
    for (std::size_t i = 0; i < labels.size(); ++i) cfg.initial[i] = s.number(labels[i], cfg.initial[i]);
    s.finish();
  }
  try {
    cfg.grid.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("model.params: ") + e.what());
  }
  require(cfg.initial.all_finite(), "model.initial_state: values must be finite");
  require(cfg.initial.v3() > 0.0, "model.initial_state: v3 must be positive");
}

void parse_bath_model(Section& model, RunConfig& cfg) {
  std::size_t n = 5;
  if (model.has("params")) {
    Section s(model.raw("params"), "model.params");
    n = s.count("n_osc", n);
    cfg.bath = BathParams::defaults(n);
    const bool has_g = s.has("gammas"), has_w = s.has("omegas");
    require(has_g == has_w, "model.params: gammas and omegas must be given together");
    if (has_g) {
      cfg.bath.gammas = number_list(s.raw("gammas"), n, "model.params.gammas");
      cfg.bath.omegas = number_list(s.raw("omegas"), n, "model.params.omegas");
    }
    cfg.bath.mass = s.number("mass", cfg.bath.mass);
    const std::string pot = s.get<std::string>("potential", "cos2x");
    require(pot == "cos2x", "model.params.potential: only \"cos2x\" is supported");
    s.finish();
  }
  cfg.bath_initial = bath_initial_state(n);
  if (model.has("initial_state")) {
    Section s(model.raw("initial_state"), "model.initial_state");
    cfg.bath_initial.x = s.number("x", cfg.bath_initial.x);
    cfg.bath_initial.p = s.number("p", cfg.bath_initial.p);
    if (s.has("q")) cfg.bath_initial.q = number_list(s.raw("q"), n, "model.initial_state.q");
    if (s.has("pq")) cfg.bath_initial.pq = number_list(s.raw("pq"), n, "model.initial_state.pq");
    s.finish();
  }
  try {
    cfg.bath.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("model.params: ") + e.what());
  }
  require(cfg.bath_initial.all_finite(), "model.initial_state: values must be finite");
}

void parse_projection(Section& s, ProjectionConfig& p) {
  if (s.has("anchor")) {
    Section a(s.raw("anchor"), "projection.anchor");
    p.alpha3_anchor = a.number("alpha3", p.alpha3_anchor);
    p.v3_anchor = a.number("v3", p.v3_anchor);
    a.finish();
  }
  p.variance = s.number("variance", p.variance);
  p.order = s.get<int>("order", p.order);
  p.order_sweep = s.get<std::vector<int>>("order_sweep", p.order_sweep);
  p.sparse_grid_level = s.get<int>("sparse_grid_level", p.sparse_grid_level);
  const std::string quad = s.get<std::string>("quadrature", "sparse");
  if (quad == "sparse") p.quadrature = QuadratureKind::kSparse;
  else if (quad == "tensor") p.quadrature = QuadratureKind::kTensor;
  else throw ConfigError("projection.quadrature: expected \"sparse\" or \"tensor\"");
  const std::string conv = s.get<std::string>("convention", "orthonormal");
  if (conv == "orthonormal") p.convention = HermiteConvention::kOrthonormal;
  else if (conv == "physicists_raw") p.convention = HermiteConvention::kPhysicistsRaw;
  else throw ConfigError("projection.convention: expected \"orthonormal\" or \"physicists_raw\"");

  require(std::isfinite(p.variance) && p.variance > 0.0, "projection.variance must be positive");
  require(p.v3_anchor > 0.0, "projection.anchor.v3 must be positive");
  require(std::isfinite(p.alpha3_anchor), "projection.anchor.alpha3 must be finite");
  require(p.order >= 0, "projection.order must be >= 0");
  for (int o : p.order_sweep) require(o >= 0, "projection.order_sweep entries must be >= 0");
  require(p.sparse_grid_level >= 1, "projection.sparse_grid_level must be >= 1");
}

void parse_kernel(Section& s, KernelConfig& k) {
  k.sample_stride = s.count("sample_stride", k.sample_stride);
  k.horizon = s.number("horizon", k.horizon);
  require(k.sample_stride >= 1, "kernel.sample_stride must be >= 1");
  require(std::isfinite(k.horizon) && k.horizon > 0.0, "kernel.horizon must be positive");
}

void parse_integration(Section& s, IntegrationConfig& in) {
  in.dt = s.number("dt", in.dt);
  in.t_end = s.number("t_end", in.t_end);
  const std::string scheme = s.get<std::string>("scheme", "explicit");
  if (scheme == "explicit") in.scheme = MemoryScheme::kExplicit;
  else if (scheme == "implicit") in.scheme = MemoryScheme::kImplicit;
  else throw ConfigError("integration.scheme: expected \"explicit\" or \"implicit\"");
  if (s.has("memory")) in.memory = memory_from_json(s.raw("memory"), "integration.memory");
  if (s.has("memory_sweep")) {
    const json& v = s.raw("memory_sweep");
    require(v.is_array(), "integration.memory_sweep: expected an array");
    in.memory_sweep.clear();
    for (const auto& e : v) in.memory_sweep.push_back(memory_from_json(e, "integration.memory_sweep"));
  }
  in.output_stride = s.count("output_stride", in.output_stride);
  require(std::isfinite(in.dt) && in.dt > 0.0, "integration.dt must be positive");
  require(std::isfinite(in.t_end) && in.t_end > 0.0, "integration.t_end must be positive");
  require(in.output_stride >= 1, "integration.output_stride must be >= 1");
}

void parse_paths(Section& s, PathsConfig& p) {
  p.kernel_table = s.get<std::string>("kernel_table", p.kernel_table);
  p.output_dir = s.get<std::string>("output_dir", p.output_dir);
  require(!p.output_dir.empty(), "paths.output_dir must not be empty");
}

const char* quadrature_name(QuadratureKind k) { return k == QuadratureKind::kSparse ? "sparse" : "tensor"; }
const char* convention_name(HermiteConvention c) {
  return c == HermiteConvention::kOrthonormal ? "orthonormal" : "physicists_raw";
}

json model_json(const RunConfig& cfg) {
  json m;
  if (cfg.model == ModelType::kThreeBus) {
    const GridParams& g = cfg.grid;
    m["type"] = "3bus";
    m["params"] = {{"m1", g.m1}, {"m2", g.m2}, {"d1", g.d1}, {"d2", g.d2}, {"d3", g.d3},
                   {"b1", g.b1}, {"b2", g.b2}, {"b3", g.b3}, {"p2", g.p2}, {"p3", g.p3},
                   {"q3", g.q3}, {"epsilon", g.epsilon}, {"v1", g.v1}, {"v2", g.v2}};
    json init;
    const auto& labels = state_labels();
    for (std::size_t i = 0; i < labels.size(); ++i) init[labels[i]] = cfg.initial[i];
    m["initial_state"] = init;
  } else {
    m["type"] = "heat_bath";
    m["params"] = {{"n_osc", cfg.bath.n_osc()}, {"gammas", cfg.bath.gammas},
                   {"omegas", cfg.bath.omegas}, {"mass", cfg.bath.mass}, {"potential", "cos2x"}};
    m["initial_state"] = {{"x", cfg.bath_initial.x}, {"p", cfg.bath_initial.p},
                          {"q", cfg.bath_initial.q}, {"pq", cfg.bath_initial.pq}};
  }
  return m;
}

json projection_json(const ProjectionConfig& p) {
  return {{"anchor", {{"alpha3", p.alpha3_anchor}, {"v3", p.v3_anchor}}},
          {"variance", p.variance},
          {"order", p.order},
          {"order_sweep", p.order_sweep},
          {"sparse_grid_level", p.sparse_grid_level},
          {"quadrature", quadrature_name(p.quadrature)},
          {"convention", convention_name(p.convention)}};
}

json integration_json(const IntegrationConfig& in) {
  json sweep = json::array();
  for (const auto& m : in.memory_sweep) sweep.push_back(memory_to_json(m));
  return {{"dt", in.dt},
          {"t_end", in.t_end},
          {"scheme", in.scheme == MemoryScheme::kExplicit ? "explicit" : "implicit"},
          {"memory", memory_to_json(in.memory)},
          {"memory_sweep", sweep},
          {"output_stride", in.output_stride}};
}

void finalize(RunConfig& cfg) {
  json full;
  full["model"] = model_json(cfg);
  full["integration"] = integration_json(cfg.integration);
  full["paths"] = {{"kernel_table", cfg.paths.kernel_table}, {"output_dir", cfg.paths.output_dir}};
  if (cfg.model == ModelType::kThreeBus) {
    full["projection"] = projection_json(cfg.projection);
    full["kernel"] = {{"sample_stride", cfg.kernel.sample_stride}, {"horizon", cfg.kernel.horizon}};

    json fp;
    fp["model"] = full["model"];
    fp["projection"] = full["projection"];
    fp["projection"].erase("order");
    fp["projection"].erase("order_sweep");
    fp["kernel"] = full["kernel"];
    fp["dt"] = cfg.integration.dt;
    cfg.kernel_fingerprint = fp.dump();
  }
  cfg.canonical_json = full.dump(2);
  cfg.config_hash = fnv1a64(full.dump());
}

void check_three_bus_consistency(const RunConfig& cfg) {
  std::vector<MemorySpec> modes{cfg.integration.memory};
  modes.insert(modes.end(), cfg.integration.memory_sweep.begin(), cfg.integration.memory_sweep.end());
  for (const auto& m : modes) {
    ReducedConfig rc;
    rc.dt = cfg.integration.dt;
    rc.t_end = cfg.integration.t_end;
    rc.memory = m;
    rc.output_stride = cfg.integration.output_stride;
    rc.validate(cfg.kernel.horizon);
  }
}

}  // namespace

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hash_hex(std::uint64_t hash) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

MemorySpec parse_memory_spec(const std::string& text) {
  if (text == "none") return MemorySpec::none();
  if (text == "infinite" || text == "inf") return MemorySpec::infinite();
  std::size_t used = 0;
  double t = 0.0;
  try {
    t = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != text.size() || used == 0 || !std::isfinite(t) || t < 0.0)
    throw ConfigError("invalid memory spec '" + text + "'");
  return MemorySpec::finite(t);
}

std::uint64_t RunConfig::kernel_hash(int order) const {
  return fnv1a64(kernel_fingerprint + "|order=" + std::to_string(order));
}

std::string RunConfig::kernel_path() const {
  if (!paths.kernel_table.empty()) return paths.kernel_table;
  return (std::filesystem::path(paths.output_dir) / "kernel.bin").string();
}

Partition RunConfig::partition() const {
  return Partition::three_bus(projection.alpha3_anchor, projection.v3_anchor);
}

HermiteBasis RunConfig::basis(int order) const {
  const Partition part = partition();
  std::vector<double> means, stds;
  for (std::size_t r : part.resolved()) {
    means.push_back(initial[r]);
    stds.push_back(std::sqrt(projection.variance));
  }
  return HermiteBasis(order, means, stds, projection.convention);
}

RunConfig parse_config_string(const std::string& text) {
  json root;
  if (text.find_first_not_of(" \t\r\n") == std::string::npos) {
    root = json::object();
  } else {
    try {
      root = json::parse(text);
    } catch (const json::parse_error& e) {
      throw ConfigError(std::string("malformed JSON: ") + e.what());
    }
  }
  require(root.is_object(), "config root must be a JSON object");

  RunConfig cfg;
  ModelType model = ModelType::kThreeBus;
  if (root.contains("model") && root["model"].is_object() && root["model"].contains("type")) {
    const json& t = root["model"]["type"];
    require(t.is_string(), "model.type must be a string");
    if (t == "3bus") model = ModelType::kThreeBus;
    else if (t == "heat_bath") model = ModelType::kHeatBath;
    else throw ConfigError("model.type: expected \"3bus\" or \"heat_bath\"");
  }
  cfg = default_config(model);

  const std::vector<std::string> required =
      model == ModelType::kThreeBus
          ? std::vector<std::string>{"model", "projection", "kernel", "integration", "paths"}
          : std::vector<std::string>{"model", "integration", "paths"};
  std::string missing;
  for (const auto& name : required)
    if (!root.contains(name)) missing += (missing.empty() ? "" : ", ") + name;
  require(missing.empty(), "missing sections: " + missing);

  Section top(root, "config");
  Section m(top.raw("model"), "model");
  require(m.has("type"), "model.type is required");
  if (model == ModelType::kThreeBus) parse_grid_model(m, cfg);
  else parse_bath_model(m, cfg);
  m.finish();

  if (model == ModelType::kThreeBus) {
    Section p(top.raw("projection"), "projection");
    parse_projection(p, cfg.projection);
    p.finish();
    Section k(top.raw("kernel"), "kernel");
    parse_kernel(k, cfg.kernel);
    k.finish();
  }
  Section in(top.raw("integration"), "integration");
  parse_integration(in, cfg.integration);
  in.finish();
  Section pa(top.raw("paths"), "paths");
  parse_paths(pa, cfg.paths);
  pa.finish();
  top.finish();

  if (model == ModelType::kThreeBus) check_three_bus_consistency(cfg);
  finalize(cfg);
  return cfg;
}

RunConfig parse_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_string(buf.str());
}

RunConfig default_config(ModelType model) {
  RunConfig cfg;
  cfg.model = model;
  if (model == ModelType::kHeatBath) {
    cfg.integration.dt = 1e-3;
    cfg.integration.t_end = 10.0;
  }
  finalize(cfg);
  return cfg;
}

}  // namespace mzgrid
