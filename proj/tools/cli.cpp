#include "cli.hpp"

#include <charconv>
#include <cmath>
#include <iostream>
#include <map>

#include <CLI/CLI.hpp>

#include "sobcomp/errors.hpp"
#include "sobcomp/io.hpp"
#include "sobcomp/sampling.hpp"

namespace sobcomp::cli {

using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";

double parse_double(const std::string& name, const std::string& text) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size()) throw DomainError("--" + name + ": not a number: " + text);
  return v;
}

long long parse_integer(const std::string& name, const std::string& text) {
  long long v = 0;
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || end != text.data() + text.size())
    throw DomainError("--" + name + ": not an integer: " + text);
  return v;
}

bool parse_bool(const std::string& name, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
  if (text == "false" || text == "0" || text == "no" || text == "off") return false;
  throw DomainError("--" + name + ": not a boolean: " + text);
}

// Parses flag text into the JSON type of the default value.
json from_text(const ParamSpec& spec, const std::vector<std::string>& texts) {
  const json& d = spec.default_value;
  if (d.is_array()) {
    json a = json::array();
    for (const auto& t : texts) a.push_back(parse_double(spec.name, t));
    return a;
  }
  const std::string& t = texts.back();
  if (d.is_boolean()) return parse_bool(spec.name, t);
  if (d.is_number_integer()) return parse_integer(spec.name, t);
  if (d.is_number()) return parse_double(spec.name, t);
  return t;
}

// Checks a config value against the type of the default; integral floats are
// accepted for integer parameters.
json from_config(const ParamSpec& spec, const json& v) {
  const json& d = spec.default_value;
  const std::string where = "config key \"" + spec.name + "\"";
  if (d.is_array()) {
    if (!v.is_array()) throw DataError(where + " must be an array");
    for (const auto& e : v)
      if (!e.is_number()) throw DataError(where + " must hold numbers");
    return v;
  }
  if (d.is_boolean()) {
    if (!v.is_boolean()) throw DataError(where + " must be a boolean");
    return v;
  }
  if (d.is_number_integer()) {
    if (v.is_number_integer()) return v;
    if (v.is_number_float() && std::floor(v.get<double>()) == v.get<double>()) return v.get<long long>();
    throw DataError(where + " must be an integer");
  }
  if (d.is_number()) {
    if (v.is_number()) return v.get<double>();
    if (v.is_string()) return parse_double(spec.name, v.get<std::string>());
    throw DataError(where + " must be a number");
  }
  if (!v.is_string()) throw DataError(where + " must be a string");
  return v;
}

std::string type_name(const json& d) {
  if (d.is_array()) return "NUM ...";
  if (d.is_boolean()) return "BOOL";
  if (d.is_number_integer()) return "INT";
  if (d.is_number()) return "NUM";
  return "TEXT";
}

struct Globals {
  std::uint64_t seed = 1;
  std::string out = "out";
  unsigned threads = 1;
  std::string config;
};

int execute(const CommandSpec& spec, const std::map<std::string, std::vector<std::string>>& flags,
            const Globals& g, const CLI::App& app) {
  RunContext ctx;
  ctx.command = spec.name;
  ctx.seed = g.seed;
  ctx.out = g.out;
  ctx.threads = g.threads;
  for (const auto& p : spec.params) ctx.params[p.name] = p.default_value;

  if (!g.config.empty()) {
    json cfg = read_json(g.config);
    if (!cfg.is_object()) throw DataError("config must be a JSON object");
    for (const auto& [key, value] : cfg.items()) {
      if (key == "command") {
        if (value != spec.name) throw DataError("config is for command " + value.dump());
        continue;
      }
      // Globals from the config apply only when the flag was not given.
      if (key == "seed") {
        if (app.count("--seed") == 0) ctx.seed = value.get<std::uint64_t>();
        continue;
      }
      if (key == "out") {
        if (app.count("--out") == 0) ctx.out = value.get<std::string>();
        continue;
      }
      if (key == "threads") {
        if (app.count("--threads") == 0) ctx.threads = value.get<unsigned>();
        continue;
      }
      const auto it = std::find_if(spec.params.begin(), spec.params.end(),
                                   [&](const ParamSpec& p) { return p.name == key; });
      if (it == spec.params.end()) throw DataError("unknown config key for " + spec.name + ": " + key);
      ctx.params[key] = from_config(*it, value);
    }
  }
  for (const auto& p : spec.params) {
    const auto it = flags.find(p.name);
    if (it != flags.end() && !it->second.empty()) ctx.params[p.name] = from_text(p, it->second);
  }
  if (ctx.threads == 0) throw DomainError("--threads must be at least 1");
  set_default_threads(ctx.threads);

  std::filesystem::create_directories(ctx.out);
  spec.run(ctx);
  write_json((ctx.out / "manifest.json").string(), {{"command", ctx.command},
                                                     {"params", ctx.params},
                                                     {"seed", ctx.seed},
                                                     {"threads", ctx.threads},
                                                     {"out", ctx.out.string()},
                                                     {"outputs", ctx.outputs},
                                                     {"version", kVersion}});
  std::cout << (ctx.out / "manifest.json").string() << '\n';
  return 0;
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"Experiments on compact embeddings of symmetric Sobolev spaces", "sobcomp"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--seed", g.seed, "base seed of every random stream")->capture_default_str();
  app.add_option("--out", g.out, "output directory")->capture_default_str();
  app.add_option("--threads", g.threads, "worker threads")->capture_default_str();
  app.add_option("--config", g.config, "JSON object of parameters (flags take precedence)");

  std::map<std::string, std::map<std::string, std::vector<std::string>>> flags;
  std::map<const CLI::App*, const CommandSpec*> by_app;
  for (const CommandSpec& spec : commands()) {
    CLI::App* sub = app.add_subcommand(spec.name, spec.help);
    by_app[sub] = &spec;
    auto& store = flags[spec.name];
    for (const ParamSpec& p : spec.params) {
      std::string names = "--" + p.name;
      std::string dashed = p.name;
      std::replace(dashed.begin(), dashed.end(), '_', '-');
      if (dashed != p.name) names += ",--" + dashed;
      std::string help = p.help + " [default: " + p.default_value.dump() + "]";
      CLI::Option* opt = sub->add_option(names, store[p.name], help)->type_name(type_name(p.default_value));
      if (p.default_value.is_array()) {
        opt->expected(1)->multi_option_policy(CLI::MultiOptionPolicy::TakeAll)->delimiter(',');
      } else {
        opt->expected(1)->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
      }
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "ERR: " << e.what() << '\n' << app.help();
    return 1;
  }

  try {
    for (CLI::App* sub : app.get_subcommands()) {
      const CommandSpec& spec = *by_app.at(sub);
      return execute(spec, flags.at(spec.name), g, app);
    }
    std::cerr << "ERR: no subcommand\n" << app.help();
    return 1;
  } catch (const NumericalError& e) {
    std::cerr << "ERR: numerical: " << e.what() << '\n';
    return 2;
  } catch (const DomainError& e) {
    std::cerr << "ERR: domain: " << e.what() << '\n';
    return 1;
  } catch (const DataError& e) {
    std::cerr << "ERR: data: " << e.what() << '\n';
    return 1;
  } catch (const json::exception& e) {
    std::cerr << "ERR: data: " << e.what() << '\n';
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "ERR: invalid argument: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "ERR: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace sobcomp::cli
