#pragma once

#include <stdexcept>
#include <string>

namespace gd {

// Error with a stable machine-readable code; the CLI serializes these to
// JSON on stderr.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}

  const std::string& code() const { return code_; }

 private:
  std::string code_;
};

inline void check(bool cond, const std::string& code, const std::string& message) {
  if (!cond) throw Error(code, message);
}

}  // namespace gd
