#include "cpd/parallel.hpp"

#include <omp.h>

namespace cpd {

int worker_count() { return omp_get_max_threads(); }

}  // namespace cpd
