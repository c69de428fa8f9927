// Copyright 2026 The METR Toolkit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "metr/tensor.hpp"

#include <algorithm>
#include <cmath>

namespace metr {

bool all_finite(const LatentTensor& t) {
  return std::all_of(t.values().begin(), t.values().end(),
                     [](double v) { return std::isfinite(v); });
}

bool all_finite(const Spectrum& s) {
  return std::all_of(s.values().begin(), s.values().end(),
                     [](const std::complex<double>& v) {
                       return std::isfinite(v.real()) &&
                              std::isfinite(v.imag());
                     });
}

double max_abs_diff(const LatentTensor& a, const LatentTensor& b) {
  if (a.shape() != b.shape()) {
    throw InvalidArgument("max_abs_diff: shape mismatch");
  }
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    m = std::max(m, std::abs(a.values()[i] - b.values()[i]));
  }
  return m;
}

double l2_norm(const LatentTensor& t) {
  double s = 0.0;
  for (double v : t.values()) s += v * v;
  return std::sqrt(s);
}

}  // namespace metr
