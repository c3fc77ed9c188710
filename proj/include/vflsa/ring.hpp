/*
 * Copyright 2026 The vflsa Authors.
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

#include <cstdint>
#include <vector>

namespace vflsa {

// Element of Z/2^64. All arithmetic wraps; unsigned overflow is well defined.
struct RingElement {
  std::uint64_t value = 0;

  constexpr RingElement() = default;
  constexpr explicit RingElement(std::uint64_t v) : value(v) {}

  constexpr RingElement& operator+=(RingElement o) {
    value += o.value;
    return *this;
  }
  constexpr RingElement& operator-=(RingElement o) {
    value -= o.value;
    return *this;
  }
  friend constexpr RingElement operator+(RingElement a, RingElement b) { return a += b; }
  friend constexpr RingElement operator-(RingElement a, RingElement b) { return a -= b; }
  friend constexpr RingElement operator-(RingElement a) { return RingElement(0 - a.value); }
  friend constexpr bool operator==(RingElement, RingElement) = default;
};

using RingVector = std::vector<RingElement>;

}  // namespace vflsa
