// include/nebula/parallel.h

// Copyright 2026  The Nebula Authors

// See COPYING at the top of the tree for authorship details
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef NEBULA_PARALLEL_H_
#define NEBULA_PARALLEL_H_

#include <cstddef>
#include <functional>

namespace nebula {

// Worker count: NEBULA_THREADS if set and positive, else hardware concurrency.
int thread_count();

// Runs fn(i) for i in [0, n). Each index is visited exactly once; callers
// write results to per-index slots so output does not depend on scheduling.
// The first exception thrown by any worker is rethrown after all join.
void parallel_for(std::size_t n, const std::function<void(std::size_t)> &fn,
                  int threads = 0);

}  // namespace nebula

#endif  // NEBULA_PARALLEL_H_
