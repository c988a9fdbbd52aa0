/*
 * Copyright 2026 The pmlab Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <string_view>

namespace pmlab {

// Philox4x32-10 (Salmon et al., SC'11). Pure function of (counter, key).
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static constexpr Counter Block(Counter ctr, Key key) {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += kWeyl0;
        key[1] += kWeyl1;
      }
      const std::uint64_t p0 = std::uint64_t{kMul0} * ctr[0];
      const std::uint64_t p1 = std::uint64_t{kMul1} * ctr[2];
      const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
      const auto lo0 = static_cast<std::uint32_t>(p0);
      const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
      const auto lo1 = static_cast<std::uint32_t>(p1);
      ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
  }

 private:
  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
};

// SplitMix64 finalizer; used only to fold labels into Philox keys.
constexpr std::uint64_t Mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

constexpr std::uint64_t HashCombine(std::uint64_t a, std::uint64_t b) {
  return Mix64(a ^ (Mix64(b) + 0x632BE59BD9B4E019ull + (a << 6) + (a >> 2)));
}

inline std::uint64_t DeriveSeed(std::uint64_t seed, std::string_view label) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char c : label) h = (h ^ c) * 0x100000001B3ull;
  return HashCombine(seed, h);
}

// What a stream is used for. Distinct purposes never share draws.
enum class Purpose : std::uint32_t {
  kTrainFeatures = 1,
  kTrainNoise,
  kTestNoise,
  kSensitivity,
  kPolicyNoise,
  kStepNoise,
  kShowcaseFeatures,
  kCurrentOutcome,
  kFreshFeatures,
  kFreshNoise,
  kAssignment,
  kPilot,
  kOutcome,
};

// Identifies one independent random stream. Streams are addressed, not
// advanced, so results do not depend on which worker draws them.
struct StreamKey {
  std::uint64_t seed = 0;
  Purpose purpose = Purpose::kOutcome;
  std::uint64_t replication = 0;
  std::uint64_t user = 0;
  std::uint32_t step = 0;
};

class RandomStream {
 public:
  explicit RandomStream(const StreamKey& k) {
    std::uint64_t h = HashCombine(k.seed, static_cast<std::uint64_t>(k.purpose));
    h = HashCombine(h, k.step);
    h = HashCombine(h, (k.user >> 32) ^ ((k.replication >> 32) << 32));
    key_ = {static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32)};
    user_ = static_cast<std::uint32_t>(k.user);
    replication_ = static_cast<std::uint32_t>(k.replication);
  }

  std::uint64_t NextU64() {
    if (buffered_ == 0) Refill();
    const std::uint64_t out = buffer_[2 - buffered_];
    --buffered_;
    return out;
  }

  // Uniform on the open interval (0, 1), 53 bits.
  double Uniform() {
    return (static_cast<double>(NextU64() >> 11) + 0.5) * 0x1.0p-53;
  }

  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform(); }

  // Standard normal via Box-Muller; pairs are cached.
  double Normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double r = std::sqrt(-2.0 * std::log(Uniform()));
    const double theta = 2.0 * std::numbers::pi * Uniform();
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  // Uniform integer in [0, n) by rejection; n > 0.
  std::uint64_t Below(std::uint64_t n) {
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t v;
    do {
      v = NextU64();
    } while (v >= limit);
    return v % n;
  }

  std::uint64_t blocks_used() const { return block_; }

 private:
  void Refill() {
    const auto out = Philox4x32::Block(
        {static_cast<std::uint32_t>(block_),
         static_cast<std::uint32_t>(block_ >> 32), user_, replication_},
        key_);
    buffer_[0] = (std::uint64_t{out[1]} << 32) | out[0];
    buffer_[1] = (std::uint64_t{out[3]} << 32) | out[2];
    buffered_ = 2;
    ++block_;
  }

  Philox4x32::Key key_{};
  std::uint32_t user_ = 0;
  std::uint32_t replication_ = 0;
  std::uint64_t block_ = 0;
  std::array<std::uint64_t, 2> buffer_{};
  int buffered_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

inline std::string PurposeName(Purpose p) {
  switch (p) {
    case Purpose::kTrainFeatures: return "train_features";
    case Purpose::kTrainNoise: return "train_noise";
    case Purpose::kTestNoise: return "test_noise";
    case Purpose::kSensitivity: return "sensitivity";
    case Purpose::kPolicyNoise: return "policy_noise";
    case Purpose::kStepNoise: return "step_noise";
    case Purpose::kShowcaseFeatures: return "showcase_features";
    case Purpose::kCurrentOutcome: return "current_outcome";
    case Purpose::kFreshFeatures: return "fresh_features";
    case Purpose::kFreshNoise: return "fresh_noise";
    case Purpose::kAssignment: return "assignment";
    case Purpose::kPilot: return "pilot";
    case Purpose::kOutcome: return "outcome";
  }
  return "unknown";
}

}  // namespace pmlab
