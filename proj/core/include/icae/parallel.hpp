// Copyright (c) the ICAE Project Authors
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
#include <functional>

namespace icae {

// Worker count used by the compute kernels. Defaults to the hardware
// concurrency; 1 disables threading entirely.
int num_threads();
void set_num_threads(int count);

// Splits [0, count) into contiguous chunks and runs body(begin, end) on
// each. Kernels only partition over independent output elements, so results
// do not depend on the thread count.
void parallel_for(std::int64_t count,
                  const std::function<void(std::int64_t, std::int64_t)>& body,
                  std::int64_t min_chunk = 1);

}  // namespace icae
