#pragma once

#include "linalg.hpp"

#include <cstdlib>
#include <unistd.h>

namespace qdeco {

// OpenBLAS reads OPENBLAS_CORETYPE only while loading, so the process restarts itself once with the
// variable set. The eigensolver self-check then guards against any remaining kernel problem.
inline void pin_blas_kernels(char** argv) {
    if (std::getenv("OPENBLAS_CORETYPE") == nullptr && std::getenv("QDECO_NO_REEXEC") == nullptr) {
        ::setenv("OPENBLAS_CORETYPE", "Haswell", 1);
        ::setenv("QDECO_NO_REEXEC", "1", 1);
        ::execv("/proc/self/exe", argv);
    }
    lapack_self_check();
}

}  // namespace qdeco
