#pragma once

#include <cstdint>

// Per-sentence kernels take an Exec policy. Serial is the reference path the
// tests compare against; OpenMP is the default. Both must produce identical
// bytes: parallel loops only ever write into disjoint pre-sized slots, and any
// reduction happens afterwards in slot order.

namespace sentigraph {

enum class Exec { Serial, OpenMP };

template <typename Fn>
void for_each_index(std::int64_t n, Exec exec, Fn&& fn) {
  if (exec == Exec::OpenMP) {
#pragma omp parallel for schedule(dynamic, 8)
    for (std::int64_t i = 0; i < n; ++i) fn(i);
  } else {
    for (std::int64_t i = 0; i < n; ++i) fn(i);
  }
}

}  // namespace sentigraph
