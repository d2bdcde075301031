#include "fpwork/fpwork.h"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <new>
#include <optional>
#include <string>

#include "fpwork/codec.hpp"
#include "fpwork/collusion.hpp"
#include "fpwork/decoders.hpp"
#include "fpwork/error.hpp"
#include "fpwork/game.hpp"
#include "fpwork/simlab.hpp"
#include "serialize.hpp"

struct fpw_codebook {
  fpw::Codebook cb;
};

namespace {

using fpw::io::json;

thread_local std::string g_last_error;

fpw_status status_of(fpw::Errc c) {
  switch (c) {
    case fpw::Errc::invalid_argument: return FPW_INVALID_ARGUMENT;
    case fpw::Errc::config: return FPW_CONFIG;
    case fpw::Errc::budget_exceeded: return FPW_BUDGET;
    case fpw::Errc::infeasible: return FPW_INFEASIBLE;
    case fpw::Errc::io: return FPW_IO;
  }
  return FPW_INTERNAL;
}

template <class F>
fpw_status guarded(F&& f) {
  try {
    f();
    g_last_error.clear();
    return FPW_OK;
  } catch (const fpw::Error& e) {
    g_last_error = e.what();
    return status_of(e.code());
  } catch (const json::exception& e) {
    g_last_error = e.what();
    return FPW_CONFIG;
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return FPW_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return FPW_INTERNAL;
  }
}

char* dup(const std::string& s) {
  char* p = static_cast<char*>(std::malloc(s.size() + 1));
  if (!p) throw std::bad_alloc();
  std::memcpy(p, s.c_str(), s.size() + 1);
  return p;
}

void need(const void* p, const char* what) {
  if (!p) throw fpw::Error(fpw::Errc::invalid_argument, std::string(what) + " is null");
}

std::string fmt9(double v) {
  if (!std::isfinite(v)) return v > 0 ? "inf" : "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

constexpr const char* kSweepHeader = "K,L,R,value,restarts,gap\n";

}  // namespace

extern "C" {

const char* fpw_last_error(void) { return g_last_error.c_str(); }

const char* fpw_version(void) { return "0.3.0"; }

void fpw_string_free(char* s) { std::free(s); }

fpw_status fpw_codebook_generate(const char* params_json, uint64_t seed, fpw_codebook** out) {
  return guarded([&] {
    need(params_json, "params_json");
    need(out, "out");
    const json j = fpw::io::parse(params_json, "code params");
    auto params = fpw::io::code_params_from_json(j);
    try {
      params.validate();
    } catch (const fpw::Error& e) {
      throw fpw::Error(fpw::Errc::config, e.what());
    }
    auto cb = fpw::generate_codebook(params, seed);
    if (j.value("rp", false)) {
      auto rng = fpw::Rng::derive(seed, fpw::Stream::user_permutation);
      cb = fpw::apply_rp(cb, rng);
    }
    if (j.value("rm", false)) {
      auto rng = fpw::Rng::derive(seed, fpw::Stream::letter_permutation);
      cb = fpw::apply_rm(cb, rng);
    }
    *out = new fpw_codebook{std::move(cb)};
  });
}

fpw_status fpw_codebook_load(const char* prefix, fpw_codebook** out) {
  return guarded([&] {
    need(prefix, "prefix");
    need(out, "out");
    *out = new fpw_codebook{fpw::io::load_codebook(prefix)};
  });
}

fpw_status fpw_codebook_save(const fpw_codebook* cb, const char* prefix) {
  return guarded([&] {
    need(cb, "codebook");
    need(prefix, "prefix");
    fpw::io::save_codebook(cb->cb, prefix);
  });
}

fpw_status fpw_codebook_info(const fpw_codebook* cb, char** json_out) {
  return guarded([&] {
    need(cb, "codebook");
    need(json_out, "json_out");
    *json_out = dup(fpw::io::codebook_header(cb->cb).dump(2));
  });
}

fpw_status fpw_codebook_row(const fpw_codebook* cb, size_t user, uint16_t* buf, size_t len) {
  return guarded([&] {
    need(cb, "codebook");
    need(buf, "buf");
    if (user >= cb->cb.users()) throw fpw::Error(fpw::Errc::invalid_argument, "user out of range");
    const auto& row = cb->cb.rows[user];
    if (len < row.size()) throw fpw::Error(fpw::Errc::invalid_argument, "buffer too short");
    std::copy(row.symbols().begin(), row.symbols().end(), buf);
  });
}

void fpw_codebook_free(fpw_codebook* cb) { delete cb; }

fpw_status fpw_attack(const fpw_codebook* cb, const char* attack_json, uint64_t seed, char** result_json) {
  return guarded([&] {
    need(cb, "codebook");
    need(attack_json, "attack_json");
    need(result_json, "result_json");
    const json j = fpw::io::parse(attack_json, "attack request");
    const auto coalition = j.value("coalition", std::vector<std::size_t>{});
    if (coalition.empty()) throw fpw::Error(fpw::Errc::config, "attack needs a nonempty coalition");
    std::vector<fpw::Sequence> xs;
    for (auto u : coalition) {
      if (u >= cb->cb.users()) throw fpw::Error(fpw::Errc::config, "coalition member out of range");
      xs.push_back(cb->cb.rows[u]);
    }
    const json a = j.value("attack", json::object());
    auto rng = fpw::Rng::derive(seed, fpw::Stream::attack);
    std::optional<fpw::ChannelSpec> ch;
    if (a.contains("channel")) {
      ch = fpw::io::channel_from_json(a.at("channel"));
    } else {
      const auto name = a.value("name", std::string("interleaving"));
      if (name != "interleaving") ch = fpw::io::channel_from_json({{"named", name}, {"K", xs.size()}, {"x_size", cb->cb.params.x_size}});
    }
    fpw::Attack attack = ch ? fpw::memoryless_attack(*ch) : fpw::interleaving_attack();
    if (a.value("exchangeable", false)) attack = fpw::wrap_exchangeable(attack);
    const fpw::Sequence y = attack(xs, rng);
    const auto report = fpw::assess(xs, y, ch ? ch->distortion() : std::nullopt);
    json out = {{"y", fpw::io::to_json(y)},
                {"coalition", coalition},
                {"feasibility", fpw::io::to_json(report)},
                {"conditional_csv", fpw::conditional_type_csv(report.conditional)}};
    *result_json = dup(out.dump(2));
  });
}

fpw_status fpw_decode(const fpw_codebook* cb, const char* y_json, const char* decode_json, char** result_json) {
  return guarded([&] {
    need(cb, "codebook");
    need(y_json, "y_json");
    need(result_json, "result_json");
    const auto y = fpw::io::sequence_from_json(fpw::io::parse(y_json, "pirated copy"));
    if (y.size() != cb->cb.length()) throw fpw::Error(fpw::Errc::config, "pirated copy length does not match the codebook");
    const json d = decode_json ? fpw::io::parse(decode_json, "decode config") : json::object();
    auto cfg = fpw::io::decode_config_from_json(d);
    if (!d.contains("rate")) cfg.rate = cb->cb.params.rate;
    if (!d.contains("delta")) cfg.delta = cb->cb.params.delta;
    const auto kind = d.value("kind", std::string("mpmi"));
    json out;
    if (kind == "threshold") {
      fpw::DecodeContext ctx(cb->cb.rows, y, fpw::SideInfo::timeshare_only(cb->cb));
      out = fpw::io::to_json(fpw::threshold_decode(ctx, cfg), nullptr);
      out["kind"] = "threshold";
    } else if (kind == "mpmi") {
      fpw::DecodeContext ctx(cb->cb.rows, y, fpw::SideInfo::host_and_timeshare(cb->cb));
      const auto o = fpw::mpmi_decode(ctx, cfg);
      const auto g = fpw::guilt_indices(ctx, o, cfg);
      out = fpw::io::to_json(o, &g);
      out["kind"] = "mpmi";
      const auto sig = fpw::verify_significance(ctx, o, cfg);
      out["significance"] = sig == fpw::Significance::holds ? "holds"
                            : sig == fpw::Significance::violated ? "violated"
                                                                 : "inapplicable";
    } else {
      throw fpw::Error(fpw::Errc::config, "decoder kind must be threshold or mpmi");
    }
    out["threshold"] = fpw::io::r9(cfg.threshold());
    *result_json = dup(out.dump(2));
  });
}

fpw_status fpw_simulate(const char* config_json, uint64_t seed, size_t workers, char** csv_out, char** report_json) {
  return guarded([&] {
    need(config_json, "config_json");
    auto cfg = fpw::io::experiment_from_json(fpw::io::parse(config_json, "experiment config"));
    cfg.seed = seed;
    if (workers) cfg.workers = workers;
    const auto rep = fpw::estimate(cfg);
    if (csv_out) *csv_out = dup(fpw::report_csv(rep));
    if (report_json) *report_json = dup(fpw::io::to_json(rep).dump(2));
  });
}

fpw_status fpw_capacity(const char* problem_json, uint64_t seed, size_t workers, char** csv_out,
                        char** solution_json) {
  return guarded([&] {
    need(problem_json, "problem_json");
    const json j = fpw::io::parse(problem_json, "game problem");
    auto pr = fpw::io::game_problem_from_json(j);
    pr.seed = seed;
    if (workers) pr.workers = workers;
    const auto Ls = j.value("L_sweep", std::vector<std::size_t>{pr.L});
    const auto sols = fpw::solve_capacity_sweep(pr, Ls);
    std::string csv = kSweepHeader;
    json all = json::array();
    for (std::size_t i = 0; i < sols.size(); ++i) {
      csv += std::to_string(pr.K) + ',' + std::to_string(Ls[i]) + ",," + fmt9(sols[i].value) + ',' +
             std::to_string(sols[i].restarts) + ',' + fmt9(sols[i].gap) + '\n';
      json s = fpw::io::to_json(sols[i]);
      s["K"] = pr.K;
      s["L"] = Ls[i];
      all.push_back(std::move(s));
    }
    if (csv_out) *csv_out = dup(csv);
    if (solution_json) *solution_json = dup(json{{"format", "fpwork-capacity"}, {"version", 1}, {"solutions", all}}.dump(2));
  });
}

fpw_status fpw_exponent(const char* request_json, uint64_t seed, char** csv_out, char** result_json) {
  return guarded([&] {
    need(request_json, "request_json");
    const json j = fpw::io::parse(request_json, "exponent request");
    if (!j.contains("problem")) throw fpw::Error(fpw::Errc::config, "exponent request needs a problem");
    auto pr = fpw::io::game_problem_from_json(j.at("problem"));
    pr.seed = seed;
    pr.validate();
    fpw::InputLaw law;
    const json lj = j.value("input_law", json(nullptr));
    if (lj.is_string()) {
      if (lj.get<std::string>() != "capacity") throw fpw::Error(fpw::Errc::config, "input_law must be an object or \"capacity\"");
      law = fpw::solve_capacity(pr).input_law;
    } else {
      law = fpw::io::input_law_from_json(lj, pr);
    }
    auto q = fpw::io::exponent_query_from_json(j.value("query", json::object()));
    q.seed = seed;
    std::vector<double> Rs;
    if (!j.contains("R")) throw fpw::Error(fpw::Errc::config, "exponent request needs R");
    if (j.at("R").is_array()) Rs = j.at("R").get<std::vector<double>>();
    else Rs.push_back(j.at("R").get<double>());
    const bool memoryless = j.value("memoryless", false);
    const auto res = fpw::exponent_sweep(law, pr, q, Rs, memoryless);
    std::string csv = kSweepHeader;
    json all = json::array();
    for (std::size_t i = 0; i < res.size(); ++i) {
      csv += std::to_string(pr.K) + ',' + std::to_string(law.w_size) + ',' + fmt9(Rs[i]) + ',' +
             fmt9(res[i].value) + ',' + std::to_string(res[i].starts) + ',' + fmt9(res[i].violation) + '\n';
      json r = fpw::io::to_json(res[i]);
      r["R"] = fpw::io::r9(Rs[i]);
      all.push_back(std::move(r));
    }
    if (csv_out) *csv_out = dup(csv);
    if (result_json)
      *result_json = dup(json{{"format", "fpwork-exponent"}, {"version", 1}, {"memoryless", memoryless},
                              {"input_law", fpw::io::to_json(law)}, {"results", all}}.dump(2));
  });
}

}  // extern "C"
