#include "mismed/family.hpp"

#include <algorithm>
#include <cctype>
#include <string>

#include "mismed/errors.hpp"

namespace mismed {

std::string_view to_string(Family family) {
  switch (family) {
    case Family::Normal: return "normal";
    case Family::Bernoulli: return "bernoulli";
    case Family::Poisson: return "poisson";
  }
  return "unknown";
}

Family parse_family(std::string_view name) {
  std::string s(name);
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char ch) { return std::tolower(ch); });
  if (s == "normal" || s == "gaussian") return Family::Normal;
  if (s == "bernoulli" || s == "binomial" || s == "binary") return Family::Bernoulli;
  if (s == "poisson") return Family::Poisson;
  throw Error(ErrorKind::Configuration, "unknown outcome family '" + std::string(name) + "'");
}

void OutcomeFamily::validate() const {
  if (tag == Family::Normal) {
    if (!sigma2 || !std::isfinite(*sigma2) || *sigma2 <= 0.0) {
      throw Error(ErrorKind::Configuration, "Normal family requires a finite positive sigma2");
    }
  } else if (sigma2) {
    throw Error(ErrorKind::Configuration, "sigma2 is only meaningful for the Normal family");
  }
}

}  // namespace mismed
