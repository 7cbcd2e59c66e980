#pragma once

#include <functional>

#include "lipstab/error.hpp"

namespace lipstab::test {

// True iff f throws a lipstab::Error of the given kind.
inline bool throws_kind(const std::function<void()>& f, ErrorKind kind) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind() == kind;
  }
  return false;
}

}  // namespace lipstab::test
