#pragma once

#include <initializer_list>
#include <string>
#include <vector>

#include "boundarylab/tri_matrix.hpp"

namespace boundarylab::testing {

/// M({{"1/2", "1"}, {"0", "1"}})
inline TriMatrix M(std::initializer_list<std::initializer_list<const char*>> rows) {
  std::vector<std::vector<Rational>> out;
  for (auto row : rows) {
    out.emplace_back();
    for (const char* x : row) out.back().push_back(Rational::parse(x));
  }
  return tri_from_rows(out);
}

inline Rational Q(const char* text) { return Rational::parse(text); }

}  // namespace boundarylab::testing
