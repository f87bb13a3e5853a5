#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hiergeo {

enum class Errc {
  dimension,
  index,
  config,
  inconsistency,
  empty_input,
  degenerate_input,
  lookup,
  evaluation,
  format,
  stratification,
  io,
};

constexpr std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::dimension: return "dimension_error";
    case Errc::index: return "index_error";
    case Errc::config: return "config_error";
    case Errc::inconsistency: return "inconsistency_error";
    case Errc::empty_input: return "empty_input_error";
    case Errc::degenerate_input: return "degenerate_input_error";
    case Errc::lookup: return "lookup_error";
    case Errc::evaluation: return "evaluation_error";
    case Errc::format: return "format_error";
    case Errc::stratification: return "stratification_error";
    case Errc::io: return "io_error";
  }
  return "error";
}

/// Every failure raised by the library. `code()` classifies it for the CLI's
/// structured error output.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

inline void require(bool ok, Errc code, const std::string& what) {
  if (!ok) fail(code, what);
}

}  // namespace hiergeo
