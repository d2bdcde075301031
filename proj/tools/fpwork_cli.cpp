// Command-line front end. Talks to the library only through the C API.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "fpwork/fpwork.h"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitBudget = 3;

struct CliError {
  int code;
  std::string message;
};

int exit_code(fpw_status s) {
  switch (s) {
    case FPW_OK: return kExitOk;
    case FPW_CONFIG:
    case FPW_INVALID_ARGUMENT:
    case FPW_IO: return kExitConfig;
    case FPW_BUDGET: return kExitBudget;
    default: return kExitFailure;
  }
}

void check(fpw_status s) {
  if (s != FPW_OK) throw CliError{exit_code(s), fpw_last_error()};
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CliError{kExitConfig, "cannot open " + path};
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void dump(const fs::path& path, const std::string& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << data)) throw CliError{kExitConfig, "cannot write " + path.string()};
}

// owns a char* handed out by the library
struct Owned {
  char* p = nullptr;
  ~Owned() { fpw_string_free(p); }
  std::string str() const { return p ? p : ""; }
};

struct Codebook {
  fpw_codebook* p = nullptr;
  ~Codebook() { fpw_codebook_free(p); }
};

struct Globals {
  std::uint64_t seed = 0;
  std::size_t workers = 0;
  std::string config;
  std::string out = ".";
};

std::string config_text(const Globals& g) {
  if (g.config.empty()) throw CliError{kExitConfig, "--config is required for this subcommand"};
  return slurp(g.config);
}

fs::path out_dir(const Globals& g) {
  fs::path d(g.out);
  std::error_code ec;
  fs::create_directories(d, ec);
  if (ec) throw CliError{kExitConfig, "cannot create " + d.string()};
  return d;
}

void cmd_gen(const Globals& g, const std::string& name) {
  Codebook cb;
  check(fpw_codebook_generate(config_text(g).c_str(), g.seed, &cb.p));
  const auto prefix = (out_dir(g) / name).string();
  check(fpw_codebook_save(cb.p, prefix.c_str()));
  std::cout << "wrote " << prefix << ".{header.json,rows.jsonl,key.json}\n";
}

void cmd_attack(const Globals& g, const std::string& codebook) {
  Codebook cb;
  check(fpw_codebook_load(codebook.c_str(), &cb.p));
  Owned res;
  check(fpw_attack(cb.p, config_text(g).c_str(), g.seed, &res.p));
  const auto dir = out_dir(g);
  auto j = nlohmann::json::parse(res.str());
  dump(dir / "pirated.json", j.at("y").dump() + "\n");
  dump(dir / "conditional_type.csv", j.at("conditional_csv").get<std::string>());
  j.erase("y");
  j.erase("conditional_csv");
  dump(dir / "attack_report.json", j.dump(2) + "\n");
  std::cout << j.dump(2) << "\n";
}

void cmd_decode(const Globals& g, const std::string& codebook, const std::string& pirated) {
  Codebook cb;
  check(fpw_codebook_load(codebook.c_str(), &cb.p));
  const std::string y = slurp(pirated);
  const std::string cfg = g.config.empty() ? std::string("{}") : slurp(g.config);
  Owned res;
  check(fpw_decode(cb.p, y.c_str(), cfg.c_str(), &res.p));
  dump(out_dir(g) / "decode.json", res.str() + "\n");
  std::cout << res.str() << "\n";
}

void cmd_simulate(const Globals& g) {
  Owned csv, rep;
  check(fpw_simulate(config_text(g).c_str(), g.seed, g.workers, &csv.p, &rep.p));
  const auto dir = out_dir(g);
  dump(dir / "simulate.csv", csv.str());
  dump(dir / "simulate.json", rep.str() + "\n");
  std::cout << csv.str();
}

void cmd_capacity(const Globals& g) {
  Owned csv, sol;
  check(fpw_capacity(config_text(g).c_str(), g.seed, g.workers, &csv.p, &sol.p));
  const auto dir = out_dir(g);
  dump(dir / "capacity.csv", csv.str());
  dump(dir / "capacity.json", sol.str() + "\n");
  std::cout << csv.str();
}

void cmd_exponent(const Globals& g) {
  Owned csv, res;
  check(fpw_exponent(config_text(g).c_str(), g.seed, &csv.p, &res.p));
  const auto dir = out_dir(g);
  dump(dir / "exponent.csv", csv.str());
  dump(dir / "exponent.json", res.str() + "\n");
  std::cout << csv.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fpwork: universal fingerprinting toolkit"};
  app.set_version_flag("--version", std::string(fpw_version()));
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--seed", g.seed, "master seed");
  app.add_option("--workers", g.workers, "worker threads (0 = config value)");
  app.add_option("--config", g.config, "JSON config for the subcommand");
  app.add_option("--out", g.out, "output directory");

  std::string name = "codebook", codebook, pirated;
  auto* gen = app.add_subcommand("gen", "generate a codebook from code parameters");
  gen->add_option("--name", name, "file prefix inside --out");
  auto* attack = app.add_subcommand("attack", "forge a pirated copy from a coalition");
  attack->add_option("--codebook", codebook, "codebook prefix")->required();
  auto* decode = app.add_subcommand("decode", "trace a pirated copy");
  decode->add_option("--codebook", codebook, "codebook prefix")->required();
  decode->add_option("--pirated", pirated, "pirated copy JSON")->required();
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo error-rate sweep");
  auto* capacity = app.add_subcommand("capacity", "solve the capacity game");
  auto* exponent = app.add_subcommand("exponent", "constrained-divergence exponents");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*gen) cmd_gen(g, name);
    else if (*attack) cmd_attack(g, codebook);
    else if (*decode) cmd_decode(g, codebook, pirated);
    else if (*simulate) cmd_simulate(g);
    else if (*capacity) cmd_capacity(g);
    else if (*exponent) cmd_exponent(g);
  } catch (const CliError& e) {
    std::cerr << "error: " << e.message << "\n";
    return e.code;
  }
  return kExitOk;
}
