#include "hypbbm/error.hpp"

#include <cmath>
#include <sstream>

namespace hypbbm {

namespace {

std::string cap_message(std::size_t cap, double lambda, double horizon) {
  std::ostringstream os;
  os << "population cap of " << cap << " vertices exceeded for lambda=" << lambda
     << " horizon=" << horizon << "; expected population is exp(lambda*horizon)="
     << std::exp(lambda * horizon);
  if (lambda > 0.0) {
    const double suggested = std::log(static_cast<double>(cap) / 4.0) / lambda;
    os << "; try a horizon below " << suggested;
  }
  return os.str();
}

}  // namespace

PopulationCapExceeded::PopulationCapExceeded(std::size_t cap, double lambda, double horizon)
    : Error(cap_message(cap, lambda, horizon)), cap_(cap) {}

ParseError::ParseError(std::size_t line, const std::string& what)
    : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

ValidationError::ValidationError(std::string key, const std::string& what)
    : Error("invalid '" + key + "': " + what), key_(std::move(key)) {}

}  // namespace hypbbm
