#pragma once

// Thin OpenMP shim so the library also builds without -fopenmp.

#ifdef _OPENMP
#include <omp.h>
#endif

namespace symmap {

inline int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

inline bool in_parallel() {
#ifdef _OPENMP
    return omp_in_parallel() != 0;
#else
    return false;
#endif
}

/// Sets the worker count for subsequent parallel regions (<= 0 keeps the default).
inline void set_threads(int n) {
#ifdef _OPENMP
    if (n > 0) omp_set_num_threads(n);
#else
    (void)n;
#endif
}

} // namespace symmap
