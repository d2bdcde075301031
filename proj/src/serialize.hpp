#pragma once

// JSON/JSONL file formats. Field names here are the documented contract.

#include <string>

#include <json.hpp>

#include "fpwork/codec.hpp"
#include "fpwork/collusion.hpp"
#include "fpwork/decoders.hpp"
#include "fpwork/game.hpp"
#include "fpwork/simlab.hpp"

namespace fpw::io {

using nlohmann::json;

inline constexpr int kFormatVersion = 1;

/// Rounds to 9 significant digits for reports.
double r9(double v);

json to_json(const Sequence& s);
Sequence sequence_from_json(const json& j);

json to_json(const CodeParams& p);
CodeParams code_params_from_json(const json& j);

/// Codebook files: <prefix>.header.json, <prefix>.rows.jsonl, <prefix>.key.json
void save_codebook(const Codebook& cb, const std::string& prefix);
Codebook load_codebook(const std::string& prefix);
json codebook_header(const Codebook& cb);

json to_json(const ChannelSpec& ch);
/// Accepts a full table or {"named": ..., "K": .., "x_size": ..}.
ChannelSpec channel_from_json(const json& j);

json to_json(const FeasibilityReport& f);

DecodeConfig decode_config_from_json(const json& j);
json to_json(const DecodeOutcome& o, const GuiltReport* guilt);

GameProblem game_problem_from_json(const json& j);
json to_json(const InputLaw& law);
InputLaw input_law_from_json(const json& j, const GameProblem& pr);
json to_json(const GameSolution& s);
ExponentQuery exponent_query_from_json(const json& j);
json to_json(const ExponentResult& r);

ExperimentConfig experiment_from_json(const json& j);
json to_json(const EstimateReport& r);

json parse(const std::string& text, const char* what);
std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& data);

}  // namespace fpw::io
