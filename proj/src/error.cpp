#include "graspprior/error.hpp"

namespace graspprior
{

const char* to_string(ErrorKind kind)
{
  switch (kind)
  {
    case ErrorKind::InvalidArgument: return "invalid-argument";
    case ErrorKind::OutOfDomain: return "out-of-domain";
    case ErrorKind::DomainTooSmall: return "domain-too-small";
    case ErrorKind::Io: return "io-error";
    case ErrorKind::Format: return "format-error";
    case ErrorKind::InvalidGrasp: return "invalid-grasp";
    case ErrorKind::DegenerateNormal: return "degenerate-normal";
    case ErrorKind::DegenerateContact: return "degenerate-contact";
    case ErrorKind::ZeroWeight: return "zero-weight";
    case ErrorKind::RefinementFailed: return "refinement-failed";
    case ErrorKind::SceneTooDense: return "scene-too-dense";
    case ErrorKind::NoCandidates: return "no-candidates";
  }
  return "unknown";
}

}  // namespace graspprior
