#pragma once

#ifdef _OPENMP
#include <omp.h>
#endif

namespace monas {

// Serial is the reference path; Parallel runs the same loop body under OpenMP.
// Every parallel loop in this codebase is written so that both policies
// produce bit-identical results (per-iteration outputs land in disjoint slots
// and reductions happen in a fixed order afterwards).
enum class ExecPolicy { Serial, Parallel };

inline void set_max_threads(int n) {
#ifdef _OPENMP
    if (n > 0) {
        omp_set_num_threads(n);
    }
#else
    (void)n;
#endif
}

inline int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

template <class Body>
void parallel_for(int n, ExecPolicy policy, const Body& body) {
#ifdef _OPENMP
    if (policy == ExecPolicy::Parallel) {
#pragma omp parallel for schedule(static)
        for (int i = 0; i < n; ++i) {
            body(i);
        }
        return;
    }
#else
    (void)policy;
#endif
    for (int i = 0; i < n; ++i) {
        body(i);
    }
}

} // namespace monas
