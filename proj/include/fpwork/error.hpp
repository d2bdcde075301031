#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fpw {

enum class Errc {
  invalid_argument = 1,
  config = 2,
  budget_exceeded = 3,
  infeasible = 4,
  io = 5,
};

// All library failures are thrown as Error; the C layer maps code() onto
// fpw_status values.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(const std::string& what) { throw Error(Errc::invalid_argument, what); }

// string_view so passing checks never build a message
inline void require(bool cond, std::string_view what) {
  if (!cond) fail(std::string(what));
}

}  // namespace fpw
