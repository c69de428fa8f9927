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

#include <cstdint>
#include <map>
#include <optional>
#include <string>

#include "metr/attacks.hpp"
#include "metr/evaluation.hpp"
#include "metr/ring_codec.hpp"
#include "metr/rng.hpp"

namespace metr {

/// Global message for the two-part scheme: the group id sits in the high
/// bits, the ring message in the low `r` bits.
struct GlobalMessage {
  std::uint64_t value = 0;
  int r = 10;
  std::uint64_t n = 1;  ///< group count

  void validate() const;
  std::uint64_t capacity() const;  ///< 2^r * n
  bool operator==(const GlobalMessage&) const = default;
};

struct SplitMessage {
  std::uint64_t group_id = 0;
  Message inner;  ///< r bits, most significant first
};

SplitMessage split(const GlobalMessage& msg);
GlobalMessage join(std::uint64_t group_id, const Message& inner, std::uint64_t n);

/// Binary symmetric channel carrying the group id. Flip probabilities are
/// keyed by attack kind; kinds not listed use 0.
struct SignatureChannel {
  int bits = 48;
  std::map<std::string, double> flip_prob;

  void validate() const;
  double flip_for(const AttackSpec& attack) const;
};

struct SignatureResult {
  std::uint64_t decoded = 0;
  int errors = 0;
};

SignatureResult transmit_signature(std::uint64_t group_id, const SignatureChannel& channel,
                                   const AttackSpec& attack, Rng& rng);

/// Generate with `inner` embedded, attack, invert and decode the ring bits.
/// x_T comes from rng.fork(0), attack randomness from rng.fork(1).
Message run_metr_message(const Message& inner, const Pipeline& pipeline,
                         const AttackSpec& attack, const Rng& rng);

struct MetrppResult {
  std::optional<GlobalMessage> decoded;  ///< set iff both parts decode exactly
  bool metr_ok = false;
  bool sig_ok = false;
  Message decoded_inner;
  std::uint64_t decoded_group = 0;
  int signature_errors = 0;
};

/// The ring path uses run_metr_message(inner, ..., rng.fork(0)); the
/// signature path draws from rng.fork(1).
MetrppResult encode_decode_metrpp(const GlobalMessage& msg, const Pipeline& pipeline,
                                  const AttackSpec& attack, const SignatureChannel& channel,
                                  const Rng& rng);

}  // namespace metr
