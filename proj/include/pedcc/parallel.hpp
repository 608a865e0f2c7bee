#pragma once

#include <cstddef>
#include <exception>
#include <utility>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace pedcc {

// Runs body(i) for i in [0, n). Iterations must write only to their own
// slots; reductions over the results are done serially by the caller so
// outputs are identical for any thread count. If several iterations throw,
// the one with the smallest index is rethrown.
template <class F>
void parallel_for(std::size_t n, F&& body) {
#ifdef _OPENMP
    std::exception_ptr err = nullptr;
    long long first_bad = -1;
    const long long nn = static_cast<long long>(n);
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < nn; ++i) {
        try {
            body(static_cast<std::size_t>(i));
        } catch (...) {
#pragma omp critical(pedcc_parallel_for_err)
            if (first_bad < 0 || i < first_bad) {
                first_bad = i;
                err = std::current_exception();
            }
        }
    }
    if (err) std::rethrow_exception(err);
#else
    for (std::size_t i = 0; i < n; ++i) body(i);
#endif
}

} // namespace pedcc
