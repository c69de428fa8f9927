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

#include "metr/metrpp.hpp"

#include "metr/diffusion.hpp"
#include "metr/error.hpp"

namespace metr {

void GlobalMessage::validate() const {
  if (r < 1 || r > 32) throw InvalidArgument("global message: r must be in [1, 32]");
  if (n == 0) throw InvalidArgument("global message: n must be positive");
  if (n > (std::uint64_t{1} << (63 - r))) {
    throw InvalidArgument("global message: 2^r * n overflows 64 bits");
  }
  if (value >= capacity()) {
    throw InvalidArgument("global message value " + std::to_string(value) +
                          " out of range [0, " + std::to_string(capacity()) + ")");
  }
}

std::uint64_t GlobalMessage::capacity() const { return n << r; }

SplitMessage split(const GlobalMessage& msg) {
  msg.validate();
  const std::uint64_t low_mask = (std::uint64_t{1} << msg.r) - 1;
  return {msg.value >> msg.r, Message::from_integer(msg.value & low_mask, std::size_t(msg.r))};
}

GlobalMessage join(std::uint64_t group_id, const Message& inner, std::uint64_t n) {
  if (inner.size() == 0 || inner.size() > 32) {
    throw InvalidArgument("join: inner message must have 1..32 bits");
  }
  if (group_id >= n) throw InvalidArgument("join: group id out of range");
  GlobalMessage g;
  g.r = int(inner.size());
  g.n = n;
  g.value = (group_id << g.r) | inner.to_integer();
  g.validate();
  return g;
}

void SignatureChannel::validate() const {
  if (bits < 1 || bits > 64) throw InvalidArgument("signature: bits must be in [1, 64]");
  for (const auto& [kind, p] : flip_prob) {
    if (!(p >= 0.0 && p <= 0.5)) {
      throw InvalidArgument("signature: flip_prob for '" + kind + "' must be in [0, 0.5]");
    }
  }
}

double SignatureChannel::flip_for(const AttackSpec& attack) const {
  const auto it = flip_prob.find(attack_kind(attack));
  return it == flip_prob.end() ? 0.0 : it->second;
}

SignatureResult transmit_signature(std::uint64_t group_id, const SignatureChannel& channel,
                                   const AttackSpec& attack, Rng& rng) {
  channel.validate();
  if (channel.bits < 64 && group_id >> channel.bits) {
    throw InvalidArgument("signature: group id does not fit in the signature bits");
  }
  const double p = channel.flip_for(attack);
  SignatureResult out{group_id, 0};
  for (int b = 0; b < channel.bits; ++b) {
    if (rng.bernoulli(p)) {
      out.decoded ^= std::uint64_t{1} << b;
      ++out.errors;
    }
  }
  return out;
}

Message run_metr_message(const Message& inner, const Pipeline& pipeline,
                         const AttackSpec& attack, const Rng& rng) {
  Rng noise_rng = rng.fork(0);
  Rng attack_rng = rng.fork(1);
  const Generation gen = generate_watermarked(noise_rng, pipeline.shape, pipeline.key, inner,
                                              pipeline.predictor, pipeline.schedule);
  const LatentTensor attacked =
      apply_attack(gen.image, attack, attack_rng, pipeline.predictor, pipeline.schedule);
  return decode_bits(recover_spectrum(attacked, pipeline.predictor, pipeline.schedule),
                     pipeline.key);
}

MetrppResult encode_decode_metrpp(const GlobalMessage& msg, const Pipeline& pipeline,
                                  const AttackSpec& attack, const SignatureChannel& channel,
                                  const Rng& rng) {
  if (msg.r != pipeline.key.radius) {
    throw InvalidArgument("metrpp: key radius does not match the message r");
  }
  const SplitMessage parts = split(msg);
  MetrppResult out;
  out.decoded_inner = run_metr_message(parts.inner, pipeline, attack, rng.fork(0));
  Rng sig_rng = rng.fork(1);
  const SignatureResult sig = transmit_signature(parts.group_id, channel, attack, sig_rng);
  out.decoded_group = sig.decoded;
  out.signature_errors = sig.errors;
  out.metr_ok = out.decoded_inner == parts.inner;
  out.sig_ok = sig.decoded == parts.group_id;
  if (out.metr_ok && out.sig_ok) out.decoded = join(sig.decoded, out.decoded_inner, msg.n);
  return out;
}

}  // namespace metr
