// planehash command-line front end.
#include <CLI11.hpp>

#include <iostream>
#include <optional>

#include "planehash/commands.hpp"
#include "planehash/errors.hpp"

namespace {

// Parses `key=value`; the value is read as JSON when possible, else taken as a string.
void apply_override(planehash::cli::Config& cfg, const std::string& kv) {
  const auto eq = kv.find('=');
  if (eq == std::string::npos || eq == 0) throw planehash::InvalidConfiguration("--set expects key=value, got '" + kv + "'");
  const std::string key = kv.substr(0, eq);
  const std::string raw = kv.substr(eq + 1);
  auto parsed = nlohmann::json::parse(raw, nullptr, false);
  cfg[key] = parsed.is_discarded() ? nlohmann::json(raw) : parsed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"planehash: hashing for point-to-hyperplane search"};
  app.set_version_flag("--version", std::string(planehash::cli::kVersion));
  app.require_subcommand(1);

  struct Opts {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out = "out";
    std::vector<std::string> sets;
    bool print_config = false;
  };
  std::vector<Opts> opts(planehash::cli::command_names().size());
  std::vector<CLI::App*> subs;
  for (std::size_t i = 0; i < opts.size(); ++i) {
    const auto& name = planehash::cli::command_names()[i];
    auto* sub = app.add_subcommand(name, "run " + name);
    sub->add_option("--config", opts[i].config, "JSON config file or manifest.json to replay");
    sub->add_option("--seed", opts[i].seed, "override the config seed");
    sub->add_option("--out", opts[i].out, "output directory")->capture_default_str();
    sub->add_option("--set", opts[i].sets, "override a config key, key=value (repeatable)");
    sub->add_flag("--print-config", opts[i].print_config, "print the resolved config and exit");
    subs.push_back(sub);
  }

  CLI11_PARSE(app, argc, argv);

  for (std::size_t i = 0; i < subs.size(); ++i) {
    if (!subs[i]->parsed()) continue;
    const auto& name = planehash::cli::command_names()[i];
    const Opts& o = opts[i];
    try {
      planehash::cli::Config user =
          o.config.empty() ? planehash::cli::Config::object() : planehash::cli::load_config(o.config);
      user = planehash::cli::resolve_config(name, user);
      for (const auto& kv : o.sets) apply_override(user, kv);
      if (o.seed) user["seed"] = *o.seed;
      const auto resolved = planehash::cli::resolve_config(name, user);
      if (o.print_config) {
        std::cout << resolved.dump(2) << "\n";
        return 0;
      }
      for (const auto& p : planehash::cli::run_command(name, resolved, o.out)) std::cout << p << "\n";
      return 0;
    } catch (const planehash::ParseError& e) {
      std::cerr << "planehash " << name << ": " << e.what() << "\n";
      return 3;
    } catch (const planehash::InvalidConfiguration& e) {
      std::cerr << "planehash " << name << ": " << e.what() << "\n";
      return 2;
    } catch (const std::exception& e) {
      std::cerr << "planehash " << name << ": " << e.what() << "\n";
      return 1;
    }
  }
  return 0;
}
