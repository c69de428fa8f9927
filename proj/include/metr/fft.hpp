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

#pragma once

#include "metr/tensor.hpp"

namespace metr {

/// Per-channel 2-D DFT with unitary scaling (1/sqrt(H*W)), returned in
/// centered layout. Throws InvalidArgument on non-finite input.
Spectrum fft2(const LatentTensor& t);

/// Result of inverting a spectrum back to the real domain. The imaginary
/// part is dropped; its largest magnitude is kept so callers can check how
/// far the spectrum was from Hermitian symmetry.
struct RealInverse {
  LatentTensor tensor;
  double max_imag_residual = 0.0;
};

RealInverse ifft2(const Spectrum& s);

/// Full complex inverse (no real projection), unitary scaling.
Spectrum ifft2_complex(const Spectrum& s);

/// Index of the zero-frequency bin along an axis of length n.
constexpr std::size_t center_index(std::size_t n) { return n / 2; }

}  // namespace metr
