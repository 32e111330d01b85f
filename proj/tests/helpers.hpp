#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "rng.hpp"
#include "tensor.hpp"

namespace testutil {

template <typename T>
void fill_uniform(mum::TensorT<T>& t, mum::SplitRng& rng, double lo = 0.0, double hi = 1.0) {
  for (std::int64_t i = 0; i < t.size(); ++i) {
    t.data()[i] = static_cast<T>(rng.next_range(lo, hi));
  }
}

/// Permutation-invariant inner product: exact per-element products (float ->
/// double is lossless) summed in sorted order, so two sums over the same
/// multiset of terms compare bit-equal.
template <typename T>
double sorted_dot(const mum::TensorT<T>& a, const mum::TensorT<T>& b) {
  std::vector<double> terms(static_cast<std::size_t>(a.size()));
  for (std::int64_t i = 0; i < a.size(); ++i) {
    terms[static_cast<std::size_t>(i)] =
        static_cast<double>(a.data()[i]) * static_cast<double>(b.data()[i]);
  }
  std::sort(terms.begin(), terms.end());
  double sum = 0;
  for (const double v : terms) sum += v;
  return sum;
}

/// Plain 3x3 stride-1 zero-padded convolution, independent of the library's
/// conv path; used as the oracle for the tile-boundary commutation checks.
template <typename T>
mum::TensorT<T> reference_conv3x3_s1(const mum::TensorT<T>& in, const std::vector<T>& weights,
                                     std::int64_t out_c) {
  mum::TensorT<T> out(in.n(), out_c, in.h(), in.w());
  for (std::int64_t n = 0; n < in.n(); ++n)
    for (std::int64_t oc = 0; oc < out_c; ++oc)
      for (std::int64_t y = 0; y < in.h(); ++y)
        for (std::int64_t x = 0; x < in.w(); ++x) {
          T acc{0};
          for (std::int64_t ic = 0; ic < in.c(); ++ic)
            for (std::int64_t ky = 0; ky < 3; ++ky)
              for (std::int64_t kx = 0; kx < 3; ++kx) {
                const std::int64_t iy = y + ky - 1, ix = x + kx - 1;
                if (iy < 0 || iy >= in.h() || ix < 0 || ix >= in.w()) continue;
                acc += weights[static_cast<std::size_t>(((oc * in.c() + ic) * 3 + ky) * 3 + kx)] *
                       in.at(n, ic, iy, ix);
              }
          out.at(n, oc, y, x) = acc;
        }
  return out;
}

/// Central finite differences of a scalar function of a parameter vector.
inline std::vector<double> finite_difference_grad(
    const std::function<double(const std::vector<double>&)>& f, std::vector<double> params,
    double eps = 1e-3) {
  std::vector<double> grad(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double saved = params[i];
    params[i] = saved + eps;
    const double up = f(params);
    params[i] = saved - eps;
    const double down = f(params);
    params[i] = saved;
    grad[i] = (up - down) / (2.0 * eps);
  }
  return grad;
}

inline double rel_error(double a, double b, double floor = 1e-8) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

}  // namespace testutil
