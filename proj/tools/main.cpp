#include <iostream>
#include <map>

#include <CLI11.hpp>

#include "commands.hpp"
#include "hslift/errors.hpp"

int main(int argc, char** argv) {
  using namespace hslift;
  CLI::App app{"Hermite-Sobolev lifting experiments"};
  app.require_subcommand(1);
  app.set_version_flag("--version", version());

  struct Parsed {
    std::string config_file;
    std::vector<std::string> sets;
    std::string out;
    std::map<std::string, std::string> flags;
  };
  std::map<std::string, Parsed> parsed;
  std::map<std::string, CLI::App*> subs;

  for (const auto& cmd : cli::commands()) {
    auto* sub = app.add_subcommand(cmd.name, cmd.help);
    auto& p = parsed[cmd.name];
    sub->add_option("--config", p.config_file, "flat key = value config file");
    sub->add_option("--set", p.sets, "override, key=value (repeatable)");
    sub->add_option("--out", p.out, "output directory (default $HSLIFT_OUTPUT_DIR or .)");
    auto keys = cmd.keys;
    keys.insert(cli::common_keys().begin(), cli::common_keys().end());
    for (const auto& k : keys) {
      if (k == "quick") {
        sub->add_flag_function("--quick", [&p](std::int64_t) { p.flags["quick"] = "true"; }, "reduced sizes");
        continue;
      }
      sub->add_option_function<std::string>("--" + k, [&p, k](const std::string& v) { p.flags[k] = v; },
                                            "config key " + k);
    }
    // spellings used in the docs
    if (cmd.keys.count("paths")) {
      sub->add_option_function<std::string>("--n-paths", [&p](const std::string& v) { p.flags["paths"] = v; },
                                            "alias of --paths");
    }
    subs[cmd.name] = sub;
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : cli::kConfigError;
  }

  for (const auto& cmd : cli::commands()) {
    if (!subs[cmd.name]->parsed()) continue;
    auto& p = parsed[cmd.name];
    try {
      Config config = p.config_file.empty() ? Config{} : Config::load(p.config_file);
      for (const auto& s : p.sets) config.assign(s);
      for (const auto& [k, v] : p.flags) config.set(k, v);
      return cli::dispatch(cmd, std::move(config), p.out, std::cout, std::cerr);
    } catch (const ConfigError& e) {
      std::cerr << "config error: " << e.what() << '\n';
      return cli::kConfigError;
    }
  }
  return cli::kConfigError;
}
