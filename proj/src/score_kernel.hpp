#ifndef RASGG_SRC_SCORE_KERNEL_HPP_
#define RASGG_SRC_SCORE_KERNEL_HPP_

#include <cstddef>

namespace rasgg::detail {

/// out[c * ld + i] = dot(keys[i * d ...], queries[c * d ...]) for m row-major
/// keys and b contiguous queries, all of length d. Single precision; the
/// summation order depends on the instruction set picked at run time, so
/// callers must only rely on the usual dot-product error bound.
void coarse_scores(const float* keys, std::size_t m, std::size_t d, const float* queries,
                   std::size_t b, float* out, std::size_t ld);

}  // namespace rasgg::detail

#endif  // RASGG_SRC_SCORE_KERNEL_HPP_
