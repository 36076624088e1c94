// Copyright 2026 The rbridge Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <string>

namespace rbridge {

/// One frontier-model token restricted to the reasoning span, with its
/// probability in (0, 1].
struct FrontierToken {
  std::string text;
  double prob = 1.0;

  bool operator==(const FrontierToken&) const = default;
};

/// Negative log-likelihood (nats) of one proxy token under teacher forcing.
struct ProxyTokenNLL {
  std::string token_text;
  double nll = 0.0;

  bool operator==(const ProxyTokenNLL&) const = default;
};

}  // namespace rbridge
