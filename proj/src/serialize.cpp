#include "serialize.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>

#include "fpwork/error.hpp"

namespace fpw::io {

namespace {

[[noreturn]] void bad(const std::string& what) { throw Error(Errc::config, what); }

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    bad(std::string("field '") + key + "': " + e.what());
  }
}

template <class T>
T get_req(const json& j, const char* key) {
  if (!j.contains(key)) bad(std::string("missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    bad(std::string("field '") + key + "': " + e.what());
  }
}

json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::vector<double> r9v(const std::vector<double>& v) {
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = r9(v[i]);
  return out;
}

const char* class_name(ChannelClass c) {
  switch (c) {
    case ChannelClass::boneh_shaw: return "boneh_shaw";
    case ChannelClass::distortion: return "distortion";
    case ChannelClass::interleaving: return "interleaving";
    default: return "explicit";
  }
}

json to_json(const DistortionSpec& d) {
  return {{"s_size", d.s_size}, {"estimator", d.estimator}, {"d2", d.d2}, {"D2", d.D2}};
}

DistortionSpec distortion_from_json(const json& j) {
  DistortionSpec d;
  d.s_size = get_req<std::size_t>(j, "s_size");
  d.estimator = get_req<std::vector<std::size_t>>(j, "estimator");
  d.d2 = get_req<std::vector<double>>(j, "d2");
  d.D2 = get_req<double>(j, "D2");
  return d;
}

json scores_json(const std::vector<CandidateScore>& s) {
  json a = json::array();
  for (const auto& c : s) a.push_back({{"users", c.users}, {"score", r9(c.score)}});
  return a;
}

json rate_json(const RateEstimate& r) {
  return {{"count", r.count}, {"rate", r9(r.rate)}, {"wilson_lo", r9(r.lo)}, {"wilson_hi", r9(r.hi)},
          {"upper", r9(r.upper)}};
}

json fit_json(const std::optional<ExponentFit>& f) {
  if (!f) return nullptr;
  return {{"slope", r9(f->slope)}, {"stderr", r9(f->stderr_)}, {"intercept", r9(f->intercept)},
          {"used", f->used}, {"dropped", f->dropped}};
}

}  // namespace

double r9(double v) {
  if (!std::isfinite(v)) return v;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return std::strtod(buf, nullptr);
}

json parse(const std::string& text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    bad(std::string(what) + ": " + e.what());
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io, "cannot open " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const std::string& path, const std::string& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::io, "cannot write " + path);
  out << data;
  if (!out) throw Error(Errc::io, "write failed: " + path);
}

json to_json(const Sequence& s) {
  return {{"alphabet", s.alphabet()}, {"symbols", std::vector<Symbol>(s.symbols().begin(), s.symbols().end())}};
}

Sequence sequence_from_json(const json& j) {
  const auto alpha = get_req<std::size_t>(j, "alphabet");
  auto sym = get_req<std::vector<Symbol>>(j, "symbols");
  for (auto v : sym)
    if (v >= alpha) bad("sequence symbol outside its alphabet");
  return Sequence(std::move(sym), alpha);
}

json to_json(const CodeParams& p) {
  json j = {{"N", p.N},           {"M", p.M},           {"rate", p.rate},     {"delta", p.delta},
            {"k_nom", p.k_nom},   {"s_size", p.s_size}, {"x_size", p.x_size}, {"w_size", p.w_size},
            {"p_s", p.p_s},       {"p_w", p.p_w},       {"p_x_given_sw", p.p_x_given_sw}};
  if (!p.d1.empty()) {
    j["d1"] = p.d1;
    j["D1"] = num(p.D1);
  }
  return j;
}

CodeParams code_params_from_json(const json& j) {
  if (!j.is_object()) bad("code params must be an object");
  CodeParams p;
  p.N = get_or<std::size_t>(j, "N", 0);
  p.M = get_or<std::size_t>(j, "M", 1);
  p.rate = get_or<double>(j, "rate", 0.0);
  p.delta = get_or<double>(j, "delta", 0.0);
  p.k_nom = get_or<std::size_t>(j, "k_nom", 1);
  p.s_size = get_or<std::size_t>(j, "s_size", 1);
  p.x_size = get_or<std::size_t>(j, "x_size", 2);
  p.w_size = get_or<std::size_t>(j, "w_size", 1);
  p.p_s = get_or<std::vector<double>>(j, "p_s", {});
  p.p_w = get_or<std::vector<double>>(j, "p_w", {});
  p.p_x_given_sw = get_or<std::vector<double>>(j, "p_x_given_sw", {});
  p.d1 = get_or<std::vector<double>>(j, "d1", {});
  p.D1 = get_or<double>(j, "D1", std::numeric_limits<double>::infinity());
  return p;
}

json codebook_header(const Codebook& cb) {
  return {{"format", "fpwork-codebook"},
          {"version", kFormatVersion},
          {"params", to_json(cb.params)},
          {"users", cb.users()},
          {"length", cb.length()},
          {"host", to_json(cb.host)},
          {"timeshare", to_json(cb.timeshare)},
          {"composition", {{"x_size", cb.composition.x_size},
                           {"cells", cb.composition.cells},
                           {"counts", cb.composition.counts}}}};
}

void save_codebook(const Codebook& cb, const std::string& prefix) {
  write_file(prefix + ".header.json", codebook_header(cb).dump(2) + "\n");
  std::string rows;
  for (std::size_t m = 0; m < cb.users(); ++m) {
    const auto& r = cb.rows[m];
    rows += json{{"user", m}, {"x", std::vector<Symbol>(r.symbols().begin(), r.symbols().end())}}.dump();
    rows += '\n';
  }
  write_file(prefix + ".rows.jsonl", rows);
  json key = {{"seed", cb.secret.seed}, {"user_perm", cb.secret.user_perm}, {"letter_perm", cb.secret.letter_perm}};
  write_file(prefix + ".key.json", key.dump(2) + "\n");
}

Codebook load_codebook(const std::string& prefix) {
  const json h = parse(read_file(prefix + ".header.json"), "codebook header");
  if (get_or<std::string>(h, "format", "") != "fpwork-codebook") bad("not a codebook header");
  if (get_or<int>(h, "version", 0) != kFormatVersion) bad("unsupported codebook format version");
  Codebook cb;
  cb.params = code_params_from_json(h.at("params"));
  cb.params.validate();
  cb.host = sequence_from_json(get_req<json>(h, "host"));
  cb.timeshare = sequence_from_json(get_req<json>(h, "timeshare"));
  const json& c = get_req<json>(h, "composition");
  cb.composition.x_size = get_req<std::size_t>(c, "x_size");
  cb.composition.cells = get_req<std::size_t>(c, "cells");
  cb.composition.counts = get_req<std::vector<std::int64_t>>(c, "counts");
  const auto users = get_req<std::size_t>(h, "users");
  const auto n = get_req<std::size_t>(h, "length");
  if (cb.host.size() != n || cb.timeshare.size() != n) bad("codebook side sequences have the wrong length");

  std::istringstream rows(read_file(prefix + ".rows.jsonl"));
  std::string line;
  cb.rows.resize(users);
  std::vector<char> seen(users, 0);
  while (std::getline(rows, line)) {
    if (line.empty()) continue;
    const json r = parse(line, "codebook row");
    const auto m = get_req<std::size_t>(r, "user");
    if (m >= users || seen[m]) bad("codebook row has a bad or repeated user id");
    auto x = get_req<std::vector<Symbol>>(r, "x");
    if (x.size() != n) bad("codebook row has the wrong length");
    for (auto v : x)
      if (v >= cb.params.x_size) bad("codebook row symbol outside the alphabet");
    cb.rows[m] = Sequence(std::move(x), cb.params.x_size);
    seen[m] = 1;
  }
  for (char s : seen)
    if (!s) bad("codebook rows file is missing users");

  const json key = parse(read_file(prefix + ".key.json"), "keyfile");
  cb.secret.seed = get_req<std::uint64_t>(key, "seed");
  cb.secret.user_perm = get_or<std::vector<std::size_t>>(key, "user_perm", {});
  cb.secret.letter_perm = get_or<std::vector<std::size_t>>(key, "letter_perm", {});
  return cb;
}

json to_json(const ChannelSpec& ch) {
  json j = {{"K", ch.coalition()}, {"x_size", ch.x_size()}, {"y_size", ch.y_size()},
            {"class", class_name(ch.channel_class())}, {"table", ch.table()}};
  if (ch.distortion()) j["distortion"] = to_json(*ch.distortion());
  return j;
}

ChannelSpec channel_from_json(const json& j) {
  if (!j.is_object()) bad("channel must be an object");
  const auto k = get_req<std::size_t>(j, "K");
  const auto x = get_or<std::size_t>(j, "x_size", 2);
  try {
    if (j.contains("named")) {
      const auto name = get_req<std::string>(j, "named");
      if (name == "interleaving") return ChannelSpec::interleaving(k, x);
      if (name == "majority") return ChannelSpec::majority(k, x);
      if (name == "minority") return ChannelSpec::minority(k, x);
      if (name == "uniform_present") return ChannelSpec::uniform_present(k, x);
      if (name == "identity") return ChannelSpec::identity(x);
      bad("unknown named channel: " + name);
    }
    const auto y = get_or<std::size_t>(j, "y_size", x);
    const auto cls_name = get_or<std::string>(j, "class", "explicit");
    ChannelClass cls = ChannelClass::explicit_table;
    if (cls_name == "boneh_shaw") cls = ChannelClass::boneh_shaw;
    else if (cls_name == "distortion") cls = ChannelClass::distortion;
    else if (cls_name == "interleaving") cls = ChannelClass::interleaving;
    else if (cls_name != "explicit") bad("unknown channel class: " + cls_name);
    std::optional<DistortionSpec> d;
    if (j.contains("distortion")) d = distortion_from_json(j.at("distortion"));
    return ChannelSpec(k, x, y, get_req<std::vector<double>>(j, "table"), cls, d);
  } catch (const Error& e) {
    if (e.code() == Errc::invalid_argument) bad(e.what());
    throw;
  }
}

json to_json(const FeasibilityReport& f) {
  json j = {{"marking_ok", f.marking_ok}};
  if (f.distortion) j["distortion"] = r9(*f.distortion);
  if (f.distortion_ok) j["distortion_ok"] = *f.distortion_ok;
  return j;
}

DecodeConfig decode_config_from_json(const json& j) {
  DecodeConfig c;
  c.rate = get_or<double>(j, "rate", 0.0);
  c.delta = get_or<double>(j, "delta", 0.0);
  c.k_max = get_or<std::size_t>(j, "k_max", 2);
  c.budget = get_or<std::size_t>(j, "budget", c.budget);
  const auto mode = get_or<std::string>(j, "search", "auto");
  if (mode == "exhaustive") c.mode = SearchMode::exhaustive;
  else if (mode == "greedy") c.mode = SearchMode::greedy;
  else if (mode == "auto") c.mode = SearchMode::automatic;
  else bad("search must be exhaustive, greedy or auto");
  if (c.delta < 0.0) bad("delta must be >= 0");
  return c;
}

json to_json(const DecodeOutcome& o, const GuiltReport* guilt) {
  json j = {{"accused", o.accused},   {"best_k", o.best_k}, {"best_score", r9(o.best_score)},
            {"exact", o.exact},       {"fell_back_to_greedy", o.fell_back_to_greedy},
            {"evaluated", o.evaluated}, {"scores", scores_json(o.scores)}};
  if (guilt) {
    json users = json::array();
    for (const auto& u : guilt->users) users.push_back({{"user", u.user}, {"accused", u.accused}, {"index", r9(u.index)}});
    j["guilt"] = {{"coalition_index", r9(guilt->coalition_index)}, {"users", users}};
  }
  return j;
}

GameProblem game_problem_from_json(const json& j) {
  if (!j.is_object()) bad("problem must be an object");
  GameProblem p;
  p.K = get_or<std::size_t>(j, "K", 1);
  p.x_size = get_or<std::size_t>(j, "x_size", 2);
  p.y_size = get_or<std::size_t>(j, "y_size", 0);
  p.s_size = get_or<std::size_t>(j, "s_size", 1);
  p.L = get_or<std::size_t>(j, "L", 1);
  p.p_s = get_or<std::vector<double>>(j, "p_s", {});
  p.d1 = get_or<std::vector<double>>(j, "d1", {});
  p.D1 = get_or<double>(j, "D1", std::numeric_limits<double>::infinity());
  const auto fc = get_or<std::string>(j, "feasible", "boneh_shaw");
  if (fc == "boneh_shaw") p.feasible = FeasibleClass::boneh_shaw;
  else if (fc == "explicit") p.feasible = FeasibleClass::explicit_list;
  else if (fc == "distortion") p.feasible = FeasibleClass::distortion;
  else bad("feasible must be boneh_shaw, explicit or distortion");
  p.fair = get_or<bool>(j, "fair", true);
  if (j.contains("channels"))
    for (const auto& c : j.at("channels")) p.channels.push_back(channel_from_json(c));
  if (j.contains("distortion")) p.distortion = distortion_from_json(j.at("distortion"));
  const auto obj = get_or<std::string>(j, "objective", "detect_one");
  if (obj == "detect_one") p.objective = Objective::detect_one;
  else if (obj == "detect_all") p.objective = Objective::detect_all;
  else if (obj == "simple") p.objective = Objective::simple;
  else bad("objective must be detect_one, detect_all or simple");
  p.restarts = get_or<std::size_t>(j, "restarts", p.restarts);
  p.grid_step = get_or<double>(j, "grid_step", p.grid_step);
  p.grid_cap = get_or<std::size_t>(j, "grid_cap", p.grid_cap);
  p.fd_step = get_or<double>(j, "fd_step", p.fd_step);
  p.inner_tol = get_or<double>(j, "inner_tol", p.inner_tol);
  p.inner_max_iter = get_or<std::size_t>(j, "inner_max_iter", p.inner_max_iter);
  p.outer_max_iter = get_or<std::size_t>(j, "outer_max_iter", p.outer_max_iter);
  return p;
}

json to_json(const InputLaw& law) {
  return {{"s_size", law.s_size}, {"w_size", law.w_size}, {"x_size", law.x_size}, {"p_s", r9v(law.p_s)},
          {"p_w", r9v(law.p_w)},   {"p_x", r9v(law.p_x)}};
}

InputLaw input_law_from_json(const json& j, const GameProblem& pr) {
  InputLaw law = InputLaw::uniform(pr);
  if (j.is_null()) return law;
  law.w_size = get_or<std::size_t>(j, "w_size", law.w_size);
  law.p_w = get_or<std::vector<double>>(j, "p_w", std::vector<double>(law.w_size, 1.0 / double(law.w_size)));
  if (j.contains("p_x")) {
    law.p_x = get_req<std::vector<double>>(j, "p_x");
  } else {
    law.p_x.assign(law.s_size * law.w_size * law.x_size, 1.0 / double(law.x_size));
  }
  try {
    law.validate();
  } catch (const Error& e) {
    bad(e.what());
  }
  return law;
}

json to_json(const GameSolution& s) {
  return {{"value", r9(s.value)},
          {"input_law", to_json(s.input_law)},
          {"worst_channel", to_json(s.worst_channel)},
          {"restarts", s.restarts},
          {"inner_iterations", s.inner_iterations},
          {"gap", r9(s.gap)},
          {"stationarity", r9(s.stationarity)},
          {"nonconcave", s.nonconcave},
          {"restart_values", r9v(s.restart_values)},
          {"reevaluation_error", r9(s.reevaluation_error)},
          {"axis_order", "input_law.p_x: [s][w][x]; worst_channel.table: [x_1..x_K][y], x_1 most significant"}};
}

ExponentQuery exponent_query_from_json(const json& j) {
  ExponentQuery q;
  q.simple = get_or<bool>(j, "simple", false);
  q.user = get_or<std::size_t>(j, "user", 0);
  q.subset = get_or<std::vector<std::size_t>>(j, "subset", {});
  q.p_s_tilde = get_or<std::vector<double>>(j, "p_s_tilde", {});
  q.restarts = get_or<std::size_t>(j, "restarts", q.restarts);
  if (q.restarts == 0) bad("restarts must be >= 1");
  return q;
}

json to_json(const ExponentResult& r) {
  return {{"value", num(r9(r.value))},   {"feasible", r.feasible}, {"threshold", r9(r.threshold)},
          {"violation", num(r9(r.violation))}, {"starts", r.starts}, {"joint", r9v(r.joint)},
          {"axis_order", "joint: [s][w][x_1..x_K][y]"}};
}

ExperimentConfig experiment_from_json(const json& j) {
  if (!j.is_object()) bad("experiment config must be an object");
  ExperimentConfig c;
  const json code = get_or<json>(j, "code", json::object());
  const auto kind = get_or<std::string>(code, "kind", "constant_composition");
  if (kind == "constant_composition") c.code = CodeKind::constant_composition;
  else if (kind == "tardos") c.code = CodeKind::tardos;
  else bad("code.kind must be constant_composition or tardos");
  c.params = code_params_from_json(code);
  if (code.contains("M")) {
    c.fixed_users = true;
  } else if (code.contains("rate")) {
    c.fixed_users = false;
  }
  c.user_cap = get_or<std::size_t>(code, "user_cap", c.user_cap);
  if (code.contains("tardos")) {
    const json& t = code.at("tardos");
    const auto dens = get_or<std::string>(t, "density", "arcsine");
    if (dens == "arcsine") c.tardos.density = TardosDensity::arcsine;
    else if (dens == "uniform") c.tardos.density = TardosDensity::uniform;
    else if (dens == "fixed") c.tardos.density = TardosDensity::fixed;
    else bad("tardos.density must be arcsine, uniform or fixed");
    c.tardos.cutoff = get_or<double>(t, "cutoff", 0.0);
    c.tardos.fixed_value = get_or<double>(t, "fixed_value", 0.5);
    c.tardos_bins = get_or<std::size_t>(t, "bins", 1);
  }

  const json attack = get_or<json>(j, "attack", json::object());
  c.attack.name = get_or<std::string>(attack, "name", "interleaving");
  c.attack.exchangeable = get_or<bool>(attack, "exchangeable", false);
  if (attack.contains("channel")) {
    c.attack.name = "channel";
    c.attack.channel = channel_from_json(attack.at("channel"));
  }

  const json dec = get_or<json>(j, "decoder", json::object());
  const auto dk = get_or<std::string>(dec, "kind", "threshold");
  if (dk == "threshold") c.decoder = DecoderKind::threshold;
  else if (dk == "mpmi") c.decoder = DecoderKind::mpmi;
  else bad("decoder.kind must be threshold or mpmi");
  c.decode = decode_config_from_json(dec);
  if (!dec.contains("delta")) c.decode.delta = c.params.delta;

  const json co = get_or<json>(j, "coalition", json::object());
  c.coalition_size = get_or<std::size_t>(co, "size", 2);
  c.coalition = get_or<std::vector<std::size_t>>(co, "fixed", {});
  if (!c.coalition.empty() && !co.contains("size")) c.coalition_size = c.coalition.size();
  c.external_coalition = get_or<bool>(co, "external", false);

  c.trials = get_or<std::size_t>(j, "trials", c.trials);
  c.Ns = get_or<std::vector<std::size_t>>(j, "N", c.Ns);
  c.seed = get_or<std::uint64_t>(j, "seed", 0);
  c.workers = get_or<std::size_t>(j, "workers", 1);
  c.max_resamples = get_or<std::size_t>(j, "max_resamples", c.max_resamples);
  return c;
}

json to_json(const EstimateReport& r) {
  json pts = json::array();
  for (const auto& p : r.points)
    pts.push_back({{"N", p.N},
                   {"users", p.users},
                   {"rate", r9(p.rate_bits)},
                   {"trials", p.trials},
                   {"fp", rate_json(p.fp)},
                   {"miss_one", rate_json(p.miss_one)},
                   {"miss_all", rate_json(p.miss_all)},
                   {"resamples", p.resamples},
                   {"seconds", r9(p.seconds)}});
  return {{"format", "fpwork-estimate"},
          {"version", kFormatVersion},
          {"points", pts},
          {"fits", {{"fp", fit_json(r.fp_fit)}, {"miss_one", fit_json(r.miss_one_fit)}, {"miss_all", fit_json(r.miss_all_fit)}}},
          {"seconds", r9(r.seconds)}};
}

}  // namespace fpw::io
