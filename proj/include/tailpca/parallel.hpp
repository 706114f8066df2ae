#pragma once

#include <cstddef>
#include <span>

namespace tailpca::parallel {

// Execution policy for replicate loops: a plain serial loop kept as the
// reference implementation, and an OpenMP variant that must reproduce it
// bit for bit (fixed slot per replicate, deterministic reduction order).
enum class ExecMode { serial, openmp };

// Pairwise (cascade) summation: deterministic for a fixed element order
// regardless of how the elements were produced.
inline double pairwise_sum(std::span<const double> values) {
    if (values.size() <= 8) {
        double acc = 0.0;
        for (double v : values) acc += v;
        return acc;
    }
    const std::size_t half = values.size() / 2;
    return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

}  // namespace tailpca::parallel
