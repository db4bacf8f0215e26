#include "ddfem/cli.hpp"

#include "ddfem/navierstokes.hpp"
#include "ddfem/studies.hpp"

#include <yaml-cpp/yaml.h>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

namespace ddfem {

namespace {

struct ExperimentEntry {
  Experiment id;
  const char* name;
};

constexpr ExperimentEntry kExperiments[] = {
    {Experiment::DiffusionStudy, "diffusion-study"}, {Experiment::AdvectionStudy, "advection-study"},
    {Experiment::Searchlight, "searchlight"},         {Experiment::TaylorGreen, "taylor-green"},
    {Experiment::Cylinder, "cylinder"},              {Experiment::CoercivityAudit, "coercivity-audit"},
};

template <class T>
T as(const YAML::Node& node, const std::string& key) {
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    throw ConfigError(key, "invalid value");
  }
}

template <class T>
std::vector<T> as_list(const YAML::Node& node, const std::string& key) {
  if (node.IsScalar()) return {as<T>(node, key)};
  if (!node.IsSequence()) throw ConfigError(key, "expected a list");
  std::vector<T> out;
  for (std::size_t i = 0; i < node.size(); ++i) out.push_back(as<T>(node[i], key));
  return out;
}

void require_map(const YAML::Node& node, const std::string& key) {
  if (!node.IsMap()) throw ConfigError(key, "expected a section");
}

std::vector<MethodId> methods_from(const YAML::Node& node, const std::string& key) {
  std::vector<MethodId> out;
  for (const std::string& s : as_list<std::string>(node, key)) {
    try {
      for (MethodId id : parse_method_list(s)) out.push_back(id);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(key, e.what());
    }
  }
  return out;
}

void parse_study(const YAML::Node& node, StudyOptions& o) {
  require_map(node, "study");
  for (const auto& kv : node) {
    const std::string k = kv.first.as<std::string>();
    const std::string key = "study." + k;
    if (k == "domains") {
      o.domains = as_list<std::string>(kv.second, key);
      for (const auto& d : o.domains) {
        try {
          parse_domain(d);
        } catch (const std::invalid_argument& e) {
          throw ConfigError(key, e.what());
        }
      }
    } else if (k == "h0") {
      o.h0 = as<double>(kv.second, key);
    } else {
      throw ConfigError(key, "unknown key");
    }
  }
}

void parse_searchlight(const YAML::Node& node, SearchlightOptions& o) {
  require_map(node, "searchlight");
  for (const auto& kv : node) {
    const std::string k = kv.first.as<std::string>();
    const std::string key = "searchlight." + k;
    if (k == "h") o.h = as<double>(kv.second, key);
    else if (k == "D") o.D = as<double>(kv.second, key);
    else if (k == "order") o.order = as<int>(kv.second, key);
    else if (k == "samples") o.samples = as<int>(kv.second, key);
    else throw ConfigError(key, "unknown key");
  }
}

void parse_taylor_green(const YAML::Node& node, TaylorGreenOptions& o) {
  require_map(node, "taylor_green");
  for (const auto& kv : node) {
    const std::string k = kv.first.as<std::string>();
    const std::string key = "taylor_green." + k;
    if (k == "h") o.h = as_list<double>(kv.second, key);
    else if (k == "T") o.T = as<double>(kv.second, key);
    else if (k == "tau") o.tau = as<double>(kv.second, key);
    else if (k == "nu") o.nu = as<double>(kv.second, key);
    else if (k == "temporal_taus") o.temporal_taus = as_list<double>(kv.second, key);
    else if (k == "temporal_h") o.temporal_h = as<double>(kv.second, key);
    else if (k == "temporal_T") o.temporal_T = as<double>(kv.second, key);
    else throw ConfigError(key, "unknown key");
  }
}

void parse_cylinder(const YAML::Node& node, CylinderOptions& o) {
  require_map(node, "cylinder");
  for (const auto& kv : node) {
    const std::string k = kv.first.as<std::string>();
    const std::string key = "cylinder." + k;
    if (k == "smoke") o.smoke = as<bool>(kv.second, key);
    else if (k == "T") o.T = as<double>(kv.second, key);
    else if (k == "nu") o.nu = as<double>(kv.second, key);
    else if (k == "eps") o.eps = as<double>(kv.second, key);
    else if (k == "h_min") o.h_min = as<double>(kv.second, key);
    else if (k == "h_max") o.h_max = as<double>(kv.second, key);
    else if (k == "vtk_every") o.vtk_every = as<int>(kv.second, key);
    else if (k == "checkpoint_every") o.checkpoint_every = as<int>(kv.second, key);
    else if (k == "resume") o.resume = as<std::string>(kv.second, key);
    else throw ConfigError(key, "unknown key");
  }
}

void validate(const RunConfig& c) {
  if (c.methods.empty()) throw ConfigError("methods", "at least one method required");
  for (int p : c.orders)
    if (p != 1 && p != 2) throw ConfigError("orders", "orders must be 1 or 2");
  if (c.refinements < 1) throw ConfigError("refinements", "must be >= 1");
  if (!(c.eps_factor > 0.0)) throw ConfigError("eps_factor", "must be positive");
  if (!(c.tau > 0.0)) throw ConfigError("tau", "must be positive");
  if (c.output.empty()) throw ConfigError("output", "must not be empty");
  if (c.experiment == Experiment::TaylorGreen || c.experiment == Experiment::Cylinder) {
    for (MethodId id : c.methods)
      if (id != MethodId::NSDDM && id != MethodId::Mix0)
        throw ConfigError("methods", "Navier-Stokes runs support nsddm and mix0 only");
  }
}

void emit_methods(YAML::Emitter& out, const std::vector<MethodId>& methods) {
  out << YAML::Flow << YAML::BeginSeq;
  for (MethodId id : methods) out << method_name(id);
  out << YAML::EndSeq;
}

template <class T>
void emit_list(YAML::Emitter& out, const std::vector<T>& v) {
  out << YAML::Flow << YAML::BeginSeq;
  for (const T& x : v) out << x;
  out << YAML::EndSeq;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  out << std::setprecision(15);
  return out;
}

// ---------------------------------------------------------------- experiments

void run_study_experiment(const RunConfig& c, const std::filesystem::path& dir, bool advection) {
  StudySpec spec;
  spec.domains.clear();
  for (const auto& d : c.study.domains) spec.domains.push_back(parse_domain(d));
  spec.methods = c.methods;
  spec.orders = c.orders;
  spec.levels = c.refinements;
  spec.h0 = c.study.h0;
  spec.eps_factor = c.eps_factor;
  spec.advection = advection;
  spec.naive_advection = c.naive_advection;
  const std::vector<StudyRow> rows = run_study(spec);
  for (StudyDomain d : spec.domains) {
    std::vector<StudyRow> sub;
    for (const auto& r : rows)
      if (r.domain == d) sub.push_back(r);
    write_study_csv((dir / ("study_" + domain_name(d) + ".csv")).string(), sub);
  }
  std::cout << std::setprecision(4);
  for (const auto& r : rows)
    std::cout << domain_name(r.domain) << ' ' << method_name(r.method) << " P" << r.order << " h=" << r.h
              << " eL2=" << r.eL2 << " (" << r.eocL2 << ") eH1=" << r.eH1 << " (" << r.eocH1 << ")\n";
  if (c.dump_system) {
    for (StudyDomain d : spec.domains) {
      const StudyLevel level = make_study_level(d, spec.h0, spec.eps_factor, spec.margin_factor);
      for (MethodId id : spec.methods)
        for (int p : spec.orders) {
          const SolveResult res = solve_manufactured(level, {id, c.naive_advection}, p, advection);
          const std::string stem = "system_" + domain_name(d) + "_" + method_name(id) + "_p" + std::to_string(p);
          dump_matrix((dir / (stem + ".mtx")).string(), res.system.A);
          dump_vector((dir / (stem + "_rhs.txt")).string(), res.system.rhs);
        }
    }
  }
}

void run_searchlight_experiment(const RunConfig& c, const std::filesystem::path& dir) {
  auto summary = open_out(dir / "searchlight_summary.csv");
  summary << "method,h,eps,considered,within,fraction,within_high,within_low,downwind_deviation\n";
  for (MethodId id : c.methods) {
    const SearchlightResult res = run_searchlight(id, c.searchlight.h, c.searchlight.order, c.searchlight.D,
                                                  c.searchlight.samples);
    write_samples_csv((dir / ("searchlight_" + method_name(id) + ".csv")).string(), res.samples);
    write_vtk((dir / ("searchlight_" + method_name(id) + ".vtk")).string(), res.uh.space->mesh(),
              {{"u", res.uh.vertex_values(0)}});
    const PlateauStats st = plateau_stats(res);
    summary << method_name(id) << ',' << res.h << ',' << res.eps << ',' << st.considered << ',' << st.within << ','
            << st.fraction << ',' << st.within_high << ',' << st.within_low << ',' << st.downwind_deviation << '\n';
    std::cout << method_name(id) << ": plateau fraction " << st.fraction << ", downwind deviation "
              << st.downwind_deviation << '\n';
  }
}

void run_taylor_green_experiment(const RunConfig& c, const std::filesystem::path& dir) {
  TaylorGreenConfig base;
  base.T = c.taylor_green.T;
  base.tau = c.taylor_green.tau;
  base.nu = c.taylor_green.nu;
  base.eps_factor = c.eps_factor;
  const auto rows = taylor_green_study(c.taylor_green.h, c.methods, base);
  write_taylor_green_csv((dir / "taylor_green.csv").string(), rows);
  std::cout << std::setprecision(4);
  for (const auto& r : rows)
    std::cout << method_name(r.method) << " h=" << r.h << " tau=" << r.tau << " E_L2(u)=" << r.eL2_u << " ("
              << r.eoc_L2_u << ") E_H1(u)=" << r.eH1_u << " (" << r.eoc_H1_u << ") E_L2(p)=" << r.eL2_p << '\n';
  if (c.taylor_green.temporal_taus.empty()) return;
  for (MethodId id : c.methods) {
    TaylorGreenConfig tc = base;
    tc.method = id;
    tc.h = c.taylor_green.temporal_h;
    tc.T = c.taylor_green.temporal_T;
    const TemporalOrderResult res = temporal_order(tc, c.taylor_green.temporal_taus);
    auto out = open_out(dir / ("temporal_order_" + method_name(id) + ".csv"));
    out << "tau,difference,ratio\n";
    for (std::size_t k = 0; k < res.taus.size(); ++k) {
      out << res.taus[k] << ',' << res.differences[k] << ',';
      if (k < res.ratios.size()) out << res.ratios[k];
      out << '\n';
    }
  }
}

void run_cylinder_experiment(const RunConfig& c, const std::filesystem::path& dir) {
  auto summary = open_out(dir / "cylinder_summary.csv");
  summary << "method,cd_max,t_cd_max,cl_max,t_cl_max,dp_final,lift_sign_changes\n";
  for (MethodId id : c.methods) {
    CylinderConfig cfg = cylinder_smoke_config(id);
    if (!c.cylinder.smoke) {
      cfg = CylinderConfig{};
      cfg.method = id;
      cfg.T = c.cylinder.T;
      cfg.eps = c.cylinder.eps;
      cfg.mesh.h_min = c.cylinder.h_min;
      cfg.mesh.h_max = c.cylinder.h_max;
      cfg.mesh.grow_start = 5.0 * cfg.eps;
      cfg.mesh.grow_end = 20.0 * cfg.eps;
    }
    cfg.tau = c.tau;
    cfg.nu = c.cylinder.nu;
    const std::string stem = (dir / ("cylinder_" + method_name(id))).string();
    cfg.csv = stem + ".csv";
    cfg.vtk_prefix = stem;
    cfg.vtk_every = c.cylinder.vtk_every;
    cfg.checkpoint = stem + ".ckpt";
    cfg.checkpoint_every = c.cylinder.checkpoint_every;
    cfg.resume = c.cylinder.resume;
    const CylinderSummary s = summarize(run_cylinder(cfg));
    summary << method_name(id) << ',' << s.cd_max << ',' << s.t_cd_max << ',' << s.cl_max << ',' << s.t_cl_max
            << ',' << s.dp_final << ',' << s.lift_sign_changes << '\n';
    std::cout << method_name(id) << ": C_d,max " << s.cd_max << " at t=" << s.t_cd_max << ", C_l,max " << s.cl_max
              << " at t=" << s.t_cl_max << ", dp(T) " << s.dp_final << '\n';
  }
}

void run_audit_experiment(const RunConfig& c, const std::filesystem::path& dir) {
  const auto rows = coercivity_audit(c.methods, c.naive_advection, 0.05, c.eps_factor, c.seed);
  auto out = open_out(dir / "coercivity.csv");
  out << "method,naive,dofs,min_eig,asymmetry,probe_min\n";
  for (const auto& r : rows) {
    out << method_name(r.method) << ',' << r.naive << ',' << r.dofs << ',' << r.min_eig << ',' << r.asymmetry << ','
        << r.probe_min << '\n';
    std::cout << method_name(r.method) << (r.naive ? " (naive)" : "") << ": sym_min_eig " << r.min_eig
              << (r.min_eig <= 0.0 ? "  <= 0, not coercive" : "") << '\n';
  }
  // The 1D example always uses naive DDM1 advection; exactness 2 is the
  // P1 plain rule, 4 the diffuse default.
  auto ex_out = open_out(dir / "naive_advection_example.csv");
  ex_out << "exactness,a,b,c,root,min_eig\n";
  for (int q : {2, 4}) {
    const NaiveAdvectionExample ex = naive_advection_example(MethodId::DDM1, true, q);
    ex_out << q << ',' << ex.a << ',' << ex.b << ',' << ex.c << ',';
    if (ex.root) ex_out << *ex.root;
    ex_out << ',' << ex.min_eig << '\n';
    std::cout << "1D naive DDM1 example (quadrature exactness " << q << "): root x_119 = "
              << (ex.root ? std::to_string(*ex.root) : std::string("none")) << ", sym_min_eig " << ex.min_eig << '\n';
    if (c.dump_system && q == 2) dump_matrix((dir / "naive_advection_example.mtx").string(), ex.A);
  }
}

}  // namespace

std::string experiment_name(Experiment e) {
  for (const auto& x : kExperiments)
    if (x.id == e) return x.name;
  return "unknown";
}

Experiment parse_experiment(const std::string& name) {
  for (const auto& x : kExperiments)
    if (name == x.name) return x.id;
  throw std::invalid_argument("unknown experiment '" + name + "'");
}

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (const auto& x : kExperiments) v.emplace_back(x.name);
    return v;
  }();
  return names;
}

std::vector<MethodId> parse_method_list(const std::string& csv) {
  std::vector<MethodId> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    if (b == std::string::npos) continue;
    item = item.substr(b, item.find_last_not_of(" \t") - b + 1);
    out.push_back(parse_method(item));
  }
  return out;
}

RunConfig parse_config(const std::string& yaml, const RunConfig& base) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml);
  } catch (const YAML::Exception& e) {
    throw ConfigError("<document>", e.what());
  }
  RunConfig c = base;
  if (root.IsNull()) return c;
  require_map(root, "<document>");
  for (const auto& kv : root) {
    const std::string key = kv.first.as<std::string>();
    const YAML::Node& v = kv.second;
    if (key == "experiment") {
      try {
        c.experiment = parse_experiment(as<std::string>(v, key));
      } catch (const std::invalid_argument& e) {
        throw ConfigError(key, e.what());
      }
    } else if (key == "methods") {
      c.methods = methods_from(v, key);
    } else if (key == "orders") {
      c.orders = as_list<int>(v, key);
    } else if (key == "refinements") {
      c.refinements = as<int>(v, key);
    } else if (key == "eps_factor") {
      c.eps_factor = as<double>(v, key);
    } else if (key == "output") {
      c.output = as<std::string>(v, key);
    } else if (key == "seed") {
      c.seed = as<std::uint64_t>(v, key);
    } else if (key == "naive_advection") {
      c.naive_advection = as<bool>(v, key);
    } else if (key == "dump_system") {
      c.dump_system = as<bool>(v, key);
    } else if (key == "tau") {
      c.tau = as<double>(v, key);
    } else if (key == "study") {
      parse_study(v, c.study);
    } else if (key == "searchlight") {
      parse_searchlight(v, c.searchlight);
    } else if (key == "taylor_green") {
      parse_taylor_green(v, c.taylor_green);
    } else if (key == "cylinder") {
      parse_cylinder(v, c.cylinder);
    } else {
      throw ConfigError(key, "unknown key");
    }
  }
  validate(c);
  return c;
}

RunConfig load_config(const std::string& path, const RunConfig& base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("<file>", "cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), base);
}

std::string to_yaml(const RunConfig& c) {
  YAML::Emitter out;
  out.SetDoublePrecision(17);
  out << YAML::BeginMap;
  out << YAML::Key << "experiment" << YAML::Value << experiment_name(c.experiment);
  out << YAML::Key << "methods" << YAML::Value;
  emit_methods(out, c.methods);
  out << YAML::Key << "orders" << YAML::Value;
  emit_list(out, c.orders);
  out << YAML::Key << "refinements" << YAML::Value << c.refinements;
  out << YAML::Key << "eps_factor" << YAML::Value << c.eps_factor;
  out << YAML::Key << "output" << YAML::Value << c.output;
  out << YAML::Key << "seed" << YAML::Value << c.seed;
  out << YAML::Key << "naive_advection" << YAML::Value << c.naive_advection;
  out << YAML::Key << "dump_system" << YAML::Value << c.dump_system;
  out << YAML::Key << "tau" << YAML::Value << c.tau;

  out << YAML::Key << "study" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "domains" << YAML::Value;
  emit_list(out, c.study.domains);
  out << YAML::Key << "h0" << YAML::Value << c.study.h0;
  out << YAML::EndMap;

  out << YAML::Key << "searchlight" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "h" << YAML::Value << c.searchlight.h;
  out << YAML::Key << "D" << YAML::Value << c.searchlight.D;
  out << YAML::Key << "order" << YAML::Value << c.searchlight.order;
  out << YAML::Key << "samples" << YAML::Value << c.searchlight.samples;
  out << YAML::EndMap;

  out << YAML::Key << "taylor_green" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "h" << YAML::Value;
  emit_list(out, c.taylor_green.h);
  out << YAML::Key << "T" << YAML::Value << c.taylor_green.T;
  out << YAML::Key << "tau" << YAML::Value << c.taylor_green.tau;
  out << YAML::Key << "nu" << YAML::Value << c.taylor_green.nu;
  out << YAML::Key << "temporal_taus" << YAML::Value;
  emit_list(out, c.taylor_green.temporal_taus);
  out << YAML::Key << "temporal_h" << YAML::Value << c.taylor_green.temporal_h;
  out << YAML::Key << "temporal_T" << YAML::Value << c.taylor_green.temporal_T;
  out << YAML::EndMap;

  out << YAML::Key << "cylinder" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "smoke" << YAML::Value << c.cylinder.smoke;
  out << YAML::Key << "T" << YAML::Value << c.cylinder.T;
  out << YAML::Key << "nu" << YAML::Value << c.cylinder.nu;
  out << YAML::Key << "eps" << YAML::Value << c.cylinder.eps;
  out << YAML::Key << "h_min" << YAML::Value << c.cylinder.h_min;
  out << YAML::Key << "h_max" << YAML::Value << c.cylinder.h_max;
  out << YAML::Key << "vtk_every" << YAML::Value << c.cylinder.vtk_every;
  out << YAML::Key << "checkpoint_every" << YAML::Value << c.cylinder.checkpoint_every;
  out << YAML::Key << "resume" << YAML::Value << c.cylinder.resume;
  out << YAML::EndMap;

  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

int run(const RunConfig& config) {
  validate(config);
  const std::filesystem::path dir(config.output);
  std::filesystem::create_directories(dir);
  {
    std::ofstream manifest(dir / "manifest.yaml");
    if (!manifest) {
      std::cerr << "cannot write manifest into " << dir << '\n';
      return 1;
    }
    manifest << to_yaml(config);
  }
  try {
    switch (config.experiment) {
      case Experiment::DiffusionStudy: run_study_experiment(config, dir, false); break;
      case Experiment::AdvectionStudy: run_study_experiment(config, dir, true); break;
      case Experiment::Searchlight: run_searchlight_experiment(config, dir); break;
      case Experiment::TaylorGreen: run_taylor_green_experiment(config, dir); break;
      case Experiment::Cylinder: run_cylinder_experiment(config, dir); break;
      case Experiment::CoercivityAudit: run_audit_experiment(config, dir); break;
    }
  } catch (const std::exception& e) {
    std::ofstream diag(dir / "error.txt");
    diag << experiment_name(config.experiment) << " failed: " << e.what() << '\n';
    std::cerr << "error: " << e.what() << " (see " << (dir / "error.txt").string() << ")\n";
    return 2;
  }
  return 0;
}

}  // namespace ddfem
