#include "lipstab/error.hpp"

namespace lipstab {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_spec: return "invalid-spec";
    case ErrorKind::no_chain: return "no-chain";
    case ErrorKind::too_coarse: return "too-coarse";
    case ErrorKind::singular_point: return "singular-point";
    case ErrorKind::tagging: return "tagging";
    case ErrorKind::solver_breakdown: return "solver-breakdown";
    case ErrorKind::geometry: return "geometry";
    case ErrorKind::placement: return "placement";
    case ErrorKind::range: return "range";
    case ErrorKind::mismatch: return "mismatch";
    case ErrorKind::unsupported_dimension: return "unsupported-dimension";
    case ErrorKind::domain: return "domain";
    case ErrorKind::empty_subset: return "empty-subset";
    case ErrorKind::non_spd: return "non-spd";
    case ErrorKind::eigen_failure: return "eigen-failure";
    case ErrorKind::rank_deficient: return "rank-deficient";
    case ErrorKind::validation: return "validation";
    case ErrorKind::parse: return "parse";
  }
  return "unknown";
}

}  // namespace lipstab

#include <atomic>

#include "lipstab/parallel.hpp"

namespace lipstab {

namespace {
std::atomic<int> g_threads{1};
}

int default_threads() { return g_threads.load(); }
void set_default_threads(int n) { g_threads.store(std::max(1, n)); }

}  // namespace lipstab
