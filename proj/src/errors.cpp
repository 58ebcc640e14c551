#include "fisherflow/errors.hpp"

namespace fisherflow {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidInput: return "invalid-input";
    case ErrorKind::InvalidGenerator: return "invalid-generator";
    case ErrorKind::SingularBase: return "singular-base";
    case ErrorKind::NearSingular: return "near-singular";
    case ErrorKind::IntegrationAccuracy: return "integration-accuracy";
    case ErrorKind::Domain: return "domain";
    case ErrorKind::WitnessNotFound: return "witness-not-found";
    case ErrorKind::Resource: return "resource";
    case ErrorKind::ChannelRepresentation: return "channel-representation";
    case ErrorKind::UndefinedPosterior: return "undefined-posterior";
    case ErrorKind::InvalidPrecondition: return "invalid-precondition";
    case ErrorKind::NotApplicable: return "not-applicable";
  }
  return "unknown";
}

}  // namespace fisherflow
