// ddfem: command-line driver for the diffuse-domain experiments.

#include "ddfem/cli.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

struct Flags {
  std::string config;
  std::string methods;
  std::string method;
  std::vector<int> orders;
  int refinements = 0;
  double eps_factor = 0.0;
  double tau = 0.0;
  std::uint64_t seed = 0;
  std::string output;
  bool naive_advection = false;
  bool dump_system = false;
  bool smoke = false;
  std::vector<double> h;
  std::vector<double> temporal_taus;
  double T = 0.0;
};

void add_common(CLI::App* sub, Flags& f) {
  sub->add_option("--config", f.config, "YAML config file; flags override its keys");
  sub->add_option("--methods", f.methods, "comma-separated methods: ddm1,ddm2,sbm,nddm,nsddm,mix0,mix1");
  sub->add_option("--method", f.method, "single method (same as --methods with one entry)");
  sub->add_option("--orders", f.orders, "polynomial orders")->delimiter(',');
  sub->add_option("--refinements", f.refinements, "number of refinement levels");
  sub->add_option("--eps-factor", f.eps_factor, "eps = factor * h");
  sub->add_option("--tau", f.tau, "time step (cylinder; Taylor-Green, 0 means h^2)");
  sub->add_option("--seed", f.seed, "seed for randomized checks");
  sub->add_option("-o,--output", f.output, "output directory");
  sub->add_flag("--naive-advection", f.naive_advection, "drop the stabilising advection terms");
  sub->add_flag("--dump-system", f.dump_system, "write assembled matrices in coordinate format");
}

ddfem::RunConfig resolve(const CLI::App* sub, const Flags& f, ddfem::Experiment e) {
  ddfem::RunConfig base;
  base.experiment = e;
  if (e == ddfem::Experiment::CoercivityAudit) base.methods = ddfem::all_methods();
  if (e == ddfem::Experiment::Cylinder) base.methods = {ddfem::MethodId::Mix0};
  base.output = "out/" + ddfem::experiment_name(e);
  ddfem::RunConfig c = f.config.empty() ? base : ddfem::load_config(f.config, base);
  c.experiment = e;
  if (sub->count("--methods")) c.methods = ddfem::parse_method_list(f.methods);
  if (sub->count("--method")) c.methods = {ddfem::parse_method(f.method)};
  if (sub->count("--orders")) c.orders = f.orders;
  if (sub->count("--refinements")) c.refinements = f.refinements;
  if (sub->count("--eps-factor")) c.eps_factor = f.eps_factor;
  if (sub->count("--seed")) c.seed = f.seed;
  if (sub->count("--output")) c.output = f.output;
  if (sub->count("--naive-advection")) c.naive_advection = true;
  if (sub->count("--dump-system")) c.dump_system = true;
  if (sub->count("--tau")) {
    c.tau = f.tau;
    c.taylor_green.tau = f.tau;
  }
  if (sub->get_option_no_throw("--smoke") && sub->count("--smoke")) c.cylinder.smoke = true;
  if (sub->get_option_no_throw("--T") && sub->count("--T")) {
    c.cylinder.T = f.T;
    c.taylor_green.T = f.T;
  }
  if (sub->get_option_no_throw("--mesh-sizes") && sub->count("--mesh-sizes")) c.taylor_green.h = f.h;
  if (sub->get_option_no_throw("--temporal-taus") && sub->count("--temporal-taus"))
    c.taylor_green.temporal_taus = f.temporal_taus;
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Diffuse-domain finite element experiments"};
  app.require_subcommand(1);
  Flags f;
  std::vector<std::pair<CLI::App*, ddfem::Experiment>> subs;
  const std::pair<ddfem::Experiment, const char*> entries[] = {
      {ddfem::Experiment::DiffusionStudy, "manufactured diffusion convergence study (arc, inverted arc)"},
      {ddfem::Experiment::AdvectionStudy, "manufactured advection-diffusion study, b = -100 (y, x)"},
      {ddfem::Experiment::Searchlight, "rotating-flow searchlight problem"},
      {ddfem::Experiment::TaylorGreen, "Taylor-Green vortex error table"},
      {ddfem::Experiment::Cylinder, "flow around a cylinder: drag, lift, pressure difference"},
      {ddfem::Experiment::CoercivityAudit, "symmetric-part eigenvalues and the 1D naive advection example"},
  };
  for (const auto& [e, help] : entries) {
    CLI::App* sub = app.add_subcommand(ddfem::experiment_name(e), help);
    add_common(sub, f);
    if (e == ddfem::Experiment::Cylinder) {
      sub->add_flag("--smoke", f.smoke, "reduced run: T = 1 on a coarser mesh");
      sub->add_option("--T", f.T, "final time");
    }
    if (e == ddfem::Experiment::TaylorGreen) {
      sub->add_option("--mesh-sizes", f.h, "mesh sizes h")->delimiter(',');
      sub->add_option("--T", f.T, "final time");
      sub->add_option("--temporal-taus", f.temporal_taus, "step sizes of the step-halving study")->delimiter(',');
    }
    subs.emplace_back(sub, e);
  }
  CLI11_PARSE(app, argc, argv);

  for (const auto& [sub, e] : subs) {
    if (!sub->parsed()) continue;
    ddfem::RunConfig config;
    try {
      config = resolve(sub, f, e);
    } catch (const std::exception& ex) {
      std::cerr << "error: " << ex.what() << '\n';
      return 1;
    }
    try {
      return ddfem::run(config);
    } catch (const ddfem::ConfigError& ex) {
      std::cerr << "error: " << ex.what() << '\n';
      return 1;
    }
  }
  return 1;
}
