#pragma once

#include <stdexcept>
#include <string>

namespace graspprior
{

enum class ErrorKind
{
  InvalidArgument,
  OutOfDomain,
  DomainTooSmall,
  Io,
  Format,
  InvalidGrasp,
  DegenerateNormal,
  DegenerateContact,
  ZeroWeight,
  RefinementFailed,
  SceneTooDense,
  NoCandidates,
};

const char* to_string(ErrorKind kind);

/// Single exception type for the library; `kind()` lets callers branch without string matching.
class Error : public std::runtime_error
{
public:
  Error(ErrorKind kind, const std::string& what)
    : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind)
  {
  }

  ErrorKind kind() const noexcept { return kind_; }

  /// I/O and file-format problems, as opposed to numerical failures.
  bool is_io() const noexcept { return kind_ == ErrorKind::Io || kind_ == ErrorKind::Format; }

private:
  ErrorKind kind_;
};

}  // namespace graspprior
