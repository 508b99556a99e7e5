#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "hillriesz/cli.hpp"

namespace cli = hillriesz::cli;

int main(int argc, char** argv) {
  CLI::App app{"Spectral diagnostics for Hill operators with complex periodic potentials"};
  app.set_version_flag("--version", std::string("hillriesz ") + cli::version);
  app.require_subcommand(1);

  std::string config_path, potential, bc, out, format;
  int m_max = 0, m_asym = 0, K = -1;
  bool strict = false;
  for (const auto& name : cli::commands()) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "JSON run configuration");
    sub->add_option("--potential", potential, "inline JSON potential spec");
    sub->add_option("--bc", bc, "periodic | antiperiodic");
    sub->add_option("--mmax", m_max, "largest pair index");
    sub->add_option("--masym", m_asym, "first index of the asymptotic window");
    sub->add_option("--K", K, "truncation half-width (0 = recommended)");
    sub->add_option("--out", out, "output path ('-' for stdout)");
    sub->add_option("--format", format, "json | csv");
    sub->add_flag("--strict", strict, "exit with code 4 when the verdict is indeterminate");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : cli::config_error;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  cli::RunConfig cfg;
  try {
    if (!config_path.empty()) {
      std::ifstream f(config_path);
      if (!f) throw hillriesz::ConfigError("cannot read config file '" + config_path + "'");
      cli::apply_config(cfg, hillriesz::Json::parse(f));
    }
    if (!potential.empty()) cfg.potential = hillriesz::Json::parse(potential);
    if (!bc.empty()) cfg.bc = hillriesz::bc_from_string(bc);
    if (m_max > 0) cfg.m_max = m_max;
    if (m_asym > 0) cfg.m_asym = m_asym;
    if (K >= 0) cfg.K = K;
    if (!out.empty()) cfg.out = out;
    if (!format.empty()) cfg.format = format;
    if (strict) cfg.strict = true;
  } catch (const std::exception& e) {
    std::cerr << "hillriesz: " << e.what() << "\n";
    return cli::config_error;
  }
  return cli::execute(command, cfg, std::cout, std::cerr);
}
