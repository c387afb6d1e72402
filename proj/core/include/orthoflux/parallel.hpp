// Copyright 2026 The OrthoFlux Authors
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

#include <cstddef>
#include <functional>

namespace orthoflux {

/// Worker count used by the parallel loops. Resolution order: the last
/// set_thread_count() value, then ORTHOFLUX_THREADS, then the hardware.
int thread_count();
void set_thread_count(int n);

/// Runs body(begin, end) over a static partition of [0, n) into contiguous
/// chunks. Results must not depend on the partition; callers write to
/// disjoint slots and reduce afterwards in a fixed order.
void parallel_for(std::size_t n,
                  const std::function<void(std::size_t, std::size_t)>& body,
                  int threads = 0);

}  // namespace orthoflux
