#pragma once

#include <cstddef>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace sosnet {

inline int hardware_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

// Runs fn(i) for i in [0, n). threads <= 1 is the serial reference path,
// executed in ascending index order. The parallel path requires fn to write
// only to per-index state; under that contract both paths produce identical
// results, which the tests and the acceptance suite verify bit-for-bit.
template <typename Fn>
void parallel_for(std::size_t n, int threads, Fn&& fn) {
#ifdef _OPENMP
    if (threads > 1 && n > 1) {
        const long long ln = static_cast<long long>(n);
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
        for (long long i = 0; i < ln; ++i) fn(static_cast<std::size_t>(i));
        return;
    }
#else
    (void)threads;
#endif
    for (std::size_t i = 0; i < n; ++i) fn(i);
}

}  // namespace sosnet
