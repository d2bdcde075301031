#include <doctest.h>

#include <algorithm>
#include <cstring>
#include <filesystem>
#include <json.hpp>
#include <string>
#include <vector>

#include "fpwork/fpwork.h"

using json = nlohmann::json;

namespace {

// Takes ownership of a library string.
std::string take(char* s) {
  std::string out = s ? s : "";
  fpw_string_free(s);
  return out;
}

fpw_codebook* make(const char* params, uint64_t seed = 1) {
  fpw_codebook* cb = nullptr;
  REQUIRE(fpw_codebook_generate(params, seed, &cb) == FPW_OK);
  return cb;
}

}  // namespace

TEST_CASE("version string") { CHECK(std::strlen(fpw_version()) > 0); }

TEST_CASE("generate, inspect, save and load a codebook") {
  auto* cb = make(R"({"N": 50, "M": 6, "delta": 0.05})");
  char* info = nullptr;
  REQUIRE(fpw_codebook_info(cb, &info) == FPW_OK);
  auto h = json::parse(take(info));
  CHECK(h["users"] == 6);
  CHECK(h["length"] == 50);
  CHECK(h["format"] == "fpwork-codebook");

  std::vector<uint16_t> row(50);
  CHECK(fpw_codebook_row(cb, 2, row.data(), row.size()) == FPW_OK);
  CHECK(fpw_codebook_row(cb, 6, row.data(), row.size()) == FPW_INVALID_ARGUMENT);
  CHECK(fpw_codebook_row(cb, 0, row.data(), 10) == FPW_INVALID_ARGUMENT);

  const auto dir = std::filesystem::temp_directory_path() / "fpw_capi_test";
  std::filesystem::create_directories(dir);
  const auto prefix = (dir / "cb").string();
  REQUIRE(fpw_codebook_save(cb, prefix.c_str()) == FPW_OK);
  fpw_codebook* back = nullptr;
  REQUIRE(fpw_codebook_load(prefix.c_str(), &back) == FPW_OK);
  std::vector<uint16_t> row2(50);
  CHECK(fpw_codebook_row(back, 2, row2.data(), row2.size()) == FPW_OK);
  CHECK(row == row2);
  fpw_codebook_free(back);
  std::filesystem::remove_all(dir);

  fpw_codebook* missing = nullptr;
  CHECK(fpw_codebook_load((dir / "nope").string().c_str(), &missing) == FPW_IO);
  CHECK(std::strlen(fpw_last_error()) > 0);
  fpw_codebook_free(cb);
}

TEST_CASE("bad inputs map to status codes") {
  fpw_codebook* cb = nullptr;
  CHECK(fpw_codebook_generate("{not json", 1, &cb) == FPW_CONFIG);
  CHECK(fpw_codebook_generate(R"({"N": 0, "M": 3})", 1, &cb) == FPW_CONFIG);
  CHECK(fpw_codebook_generate(nullptr, 1, &cb) == FPW_INVALID_ARGUMENT);
  CHECK(cb == nullptr);
}

TEST_CASE("attack then decode through the C interface") {
  auto* cb = make(R"({"N": 300, "M": 8, "delta": 0.05})", 4);
  char* res = nullptr;
  REQUIRE(fpw_attack(cb, R"({"coalition": [1, 6]})", 9, &res) == FPW_OK);
  auto a = json::parse(take(res));
  CHECK(a["feasibility"]["marking_ok"] == true);
  CHECK(a["conditional_csv"].get<std::string>().rfind("x1,x2,y,", 0) == 0);

  const std::string y = a["y"].dump();
  REQUIRE(fpw_decode(cb, y.c_str(), R"({"kind": "mpmi", "k_max": 2})", &res) == FPW_OK);
  auto d = json::parse(take(res));
  CHECK(d["accused"] == json::array({1, 6}));
  CHECK(d["significance"] == "holds");
  REQUIRE(fpw_decode(cb, y.c_str(), R"({"kind": "threshold"})", &res) == FPW_OK);
  CHECK(json::parse(take(res))["kind"] == "threshold");

  CHECK(fpw_decode(cb, y.c_str(), R"({"kind": "mpmi", "k_max": 3, "budget": 10, "search": "exhaustive"})", &res) ==
        FPW_BUDGET);
  CHECK(fpw_attack(cb, R"({"coalition": [99]})", 1, &res) == FPW_CONFIG);
  fpw_codebook_free(cb);
}

TEST_CASE("capacity sweep CSV") {
  char *csv = nullptr, *sol = nullptr;
  REQUIRE(fpw_capacity(R"({"K": 2, "restarts": 4, "L_sweep": [1, 2]})", 1, 1, &csv, &sol) == FPW_OK);
  const auto text = take(csv);
  CHECK(text.rfind("K,L,R,value,restarts,gap\n2,1,,0.25", 0) == 0);
  auto j = json::parse(take(sol));
  CHECK(j["solutions"].size() == 2);
  CHECK(fpw_capacity(R"({"K": 0})", 1, 1, &csv, &sol) == FPW_CONFIG);
}

TEST_CASE("exponent request") {
  char *csv = nullptr, *res = nullptr;
  REQUIRE(fpw_exponent(R"({"problem": {"K": 2}, "R": [0.24, 0.3], "query": {"restarts": 2}})", 1, &csv, &res) ==
          FPW_OK);
  auto j = json::parse(take(res));
  CHECK(j["results"].size() == 2);
  CHECK(j["results"][0]["value"].get<double>() > 0.0);
  CHECK(j["results"][1]["value"].get<double>() == 0.0);
  CHECK(take(csv).rfind("K,L,R,value,restarts,gap\n", 0) == 0);
  REQUIRE(fpw_exponent(R"({"problem": {"K": 2}, "R": 0.1})", 1, nullptr, &res) == FPW_OK);
  CHECK(json::parse(take(res))["results"][0]["value"].is_null());
  CHECK(fpw_exponent(R"({"problem": {"K": 2}})", 1, nullptr, &res) == FPW_CONFIG);
}

TEST_CASE("simulate returns CSV and a JSON report") {
  char *csv = nullptr, *rep = nullptr;
  const char* cfg = R"({"code": {"M": 6}, "coalition": {"size": 2}, "trials": 10, "N": [30, 40]})";
  REQUIRE(fpw_simulate(cfg, 3, 2, &csv, &rep) == FPW_OK);
  const auto text = take(csv);
  CHECK(std::count(text.begin(), text.end(), '\n') == 3);
  auto j = json::parse(take(rep));
  CHECK(j["points"].size() == 2);
  char* csv1 = nullptr;
  REQUIRE(fpw_simulate(cfg, 3, 1, &csv1, nullptr) == FPW_OK);
  CHECK(take(csv1) == text);
}
