// Command-line front end: one subcommand per experiment, every config key as a flag.

#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"

#include "susyq/config.hpp"
#include "susyq/runner.hpp"

namespace {

struct Subcommand {
  CLI::App* app = nullptr;
  susyq::Experiment experiment;
  std::map<std::string, CLI::Option*> flags;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw susyq::ConfigError("cannot read config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fermi gas quenches between supersymmetric partners of the infinite box"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  std::map<std::string, std::string> values;
  const std::vector<std::pair<const char*, susyq::Experiment>> names = {
      {"survival", susyq::Experiment::survival},   {"wpd", susyq::Experiment::wpd},
      {"work-scan", susyq::Experiment::work_scan}, {"phases", susyq::Experiment::phases},
      {"basis-dump", susyq::Experiment::basis_dump}};

  std::vector<Subcommand> subs;
  for (const auto& [name, experiment] : names) {
    Subcommand s{app.add_subcommand(name, std::string("run the ") + name + " experiment"), experiment, {}};
    s.app->add_option("--config", config_path, "key = value config file");
    s.app->add_option("--out", out_dir, "output directory (overrides 'output')");
    for (const auto& key : susyq::config_keys()) {
      if (std::string(key.name) == "experiment") continue;
      s.flags[key.name] = s.app->add_option(std::string("--") + key.name, values[key.name], key.help);
    }
    subs.push_back(std::move(s));
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // --help exits 0; every other command-line problem is a configuration error
    return app.exit(e) == 0 ? 0 : static_cast<int>(susyq::ExitCode::config_error);
  }

  try {
    susyq::RunConfig config = config_path.empty() ? susyq::RunConfig{}
                                                   : susyq::parse_config(read_file(config_path), false);
    std::vector<std::pair<std::string, std::string>> overrides;
    for (const auto& s : subs) {
      if (!s.app->parsed()) continue;
      overrides.emplace_back("experiment", susyq::to_string(s.experiment));
      for (const auto& [key, opt] : s.flags) {
        if (opt->count() > 0) overrides.emplace_back(key, values[key]);
      }
    }
    if (!out_dir.empty()) overrides.emplace_back("output", out_dir);
    susyq::apply_overrides(config, overrides);
    susyq::validate(config);

    const auto result = susyq::run(config, std::cerr);
    if (result.status == susyq::ExitCode::success) {
      for (const auto& f : result.files) std::cout << config.output << '/' << f << '\n';
    }
    return static_cast<int>(result.status);
  } catch (const susyq::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(susyq::ExitCode::numerical_failure);
  }
}
