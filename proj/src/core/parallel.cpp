#include "nmn/core/parallel.hpp"

#include <string>

#include "nmn/core/errors.hpp"

namespace nmn::core {

ExecPolicy parse_exec_policy(std::string_view name) {
  if (name == "serial") {
    return ExecPolicy::Serial;
  }
  if (name == "openmp") {
    return ExecPolicy::OpenMP;
  }
  throw ConfigError("unknown execution policy '" + std::string(name) +
                    "' (expected serial|openmp)");
}

std::string_view exec_policy_name(ExecPolicy p) {
  return p == ExecPolicy::Serial ? "serial" : "openmp";
}

int max_threads() {
#ifdef NMN_HAVE_OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace nmn::core
