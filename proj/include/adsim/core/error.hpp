#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace adsim {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define ADSIM_ERROR(Name)            \
  class Name : public Error {        \
   public:                           \
    using Error::Error;              \
  }

ADSIM_ERROR(PastEvent);
ADSIM_ERROR(UnknownNode);
ADSIM_ERROR(NotInRange);
ADSIM_ERROR(NoKnownMarket);
ADSIM_ERROR(UnknownQuery);
ADSIM_ERROR(SelfEvaluation);
ADSIM_ERROR(NotHeld);
ADSIM_ERROR(AlreadyAnswered);
ADSIM_ERROR(NoJokerLeft);
ADSIM_ERROR(BeforeDeadline);
ADSIM_ERROR(InvalidArgument);
ADSIM_ERROR(CodecError);
ADSIM_ERROR(IoError);

#undef ADSIM_ERROR

/// Syntax error in a scenario file, with the offending line.
class ParseError : public Error {
 public:
  ParseError(int line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

/// Every problem found while validating a scenario, not only the first.
class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<std::string> problems)
      : Error(join(problems)), problems_(std::move(problems)) {}
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  static std::string join(const std::vector<std::string>& p) {
    std::string out = "invalid scenario:";
    for (const auto& s : p) out += "\n  " + s;
    return out;
  }
  std::vector<std::string> problems_;
};

}  // namespace adsim
