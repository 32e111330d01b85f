#pragma once

#include <cstdint>
#include <cstring>
#include <vector>

namespace mum::kernels {

// Small dense kernels backing the toy detector. Everything is row-major and
// written so the innermost loops run unit-stride (the conv layers are lowered
// to im2col + GEMM, which is where nearly all training time goes).

/// C[M][N] += A[M][K] * B[K][N]
template <typename T>
void gemm_acc(std::int64_t m, std::int64_t k, std::int64_t n, const T* a, const T* b, T* c) {
  for (std::int64_t i = 0; i < m; ++i) {
    T* crow = c + i * n;
    const T* arow = a + i * k;
    for (std::int64_t kk = 0; kk < k; ++kk) {
      const T av = arow[kk];
      const T* brow = b + kk * n;
      for (std::int64_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

/// C[M][N] += A[M][K] * B[N][K]^T  (rows of A dotted with rows of B)
template <typename T>
void gemm_abt_acc(std::int64_t m, std::int64_t k, std::int64_t n, const T* a, const T* b, T* c) {
  for (std::int64_t i = 0; i < m; ++i) {
    const T* arow = a + i * k;
    T* crow = c + i * n;
    for (std::int64_t j = 0; j < n; ++j) {
      const T* brow = b + j * k;
      T acc{0};
      for (std::int64_t kk = 0; kk < k; ++kk) acc += arow[kk] * brow[kk];
      crow[j] += acc;
    }
  }
}

/// C[M][N] += A[K][M]^T * B[K][N]
template <typename T>
void gemm_atb_acc(std::int64_t m, std::int64_t k, std::int64_t n, const T* a, const T* b, T* c) {
  for (std::int64_t kk = 0; kk < k; ++kk) {
    const T* arow = a + kk * m;
    const T* brow = b + kk * n;
    for (std::int64_t i = 0; i < m; ++i) {
      const T av = arow[i];
      T* crow = c + i * n;
      for (std::int64_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

struct ConvGeom {
  std::int64_t in_c, in_h, in_w;
  std::int64_t out_h, out_w;
  static constexpr std::int64_t kernel = 3;
  static constexpr std::int64_t stride = 2;
  static constexpr std::int64_t pad = 1;

  ConvGeom(std::int64_t c, std::int64_t h, std::int64_t w)
      : in_c(c), in_h(h), in_w(w), out_h((h + 2 * pad - kernel) / stride + 1),
        out_w((w + 2 * pad - kernel) / stride + 1) {}

  std::int64_t col_rows() const { return in_c * kernel * kernel; }
  std::int64_t col_cols() const { return out_h * out_w; }
};

/// Unfolds one image plane set into col[in_c*9][out_h*out_w].
template <typename T>
void im2col(const ConvGeom& g, const T* in, T* col) {
  const std::int64_t n = g.col_cols();
  for (std::int64_t ic = 0; ic < g.in_c; ++ic) {
    const T* x = in + ic * g.in_h * g.in_w;
    for (std::int64_t kh = 0; kh < ConvGeom::kernel; ++kh) {
      for (std::int64_t kw = 0; kw < ConvGeom::kernel; ++kw) {
        T* dst = col + (ic * 9 + kh * 3 + kw) * n;
        for (std::int64_t oh = 0; oh < g.out_h; ++oh) {
          const std::int64_t ih = oh * ConvGeom::stride + kh - ConvGeom::pad;
          T* drow = dst + oh * g.out_w;
          if (ih < 0 || ih >= g.in_h) {
            std::memset(drow, 0, sizeof(T) * static_cast<std::size_t>(g.out_w));
            continue;
          }
          const T* xrow = x + ih * g.in_w;
          for (std::int64_t ow = 0; ow < g.out_w; ++ow) {
            const std::int64_t iw = ow * ConvGeom::stride + kw - ConvGeom::pad;
            drow[ow] = (iw < 0 || iw >= g.in_w) ? T{0} : xrow[iw];
          }
        }
      }
    }
  }
}

/// Transpose of im2col: scatter-adds col gradients back onto the image grid.
template <typename T>
void col2im_acc(const ConvGeom& g, const T* col, T* in_grad) {
  const std::int64_t n = g.col_cols();
  for (std::int64_t ic = 0; ic < g.in_c; ++ic) {
    T* x = in_grad + ic * g.in_h * g.in_w;
    for (std::int64_t kh = 0; kh < ConvGeom::kernel; ++kh) {
      for (std::int64_t kw = 0; kw < ConvGeom::kernel; ++kw) {
        const T* src = col + (ic * 9 + kh * 3 + kw) * n;
        for (std::int64_t oh = 0; oh < g.out_h; ++oh) {
          const std::int64_t ih = oh * ConvGeom::stride + kh - ConvGeom::pad;
          if (ih < 0 || ih >= g.in_h) continue;
          const T* srow = src + oh * g.out_w;
          T* xrow = x + ih * g.in_w;
          for (std::int64_t ow = 0; ow < g.out_w; ++ow) {
            const std::int64_t iw = ow * ConvGeom::stride + kw - ConvGeom::pad;
            if (iw >= 0 && iw < g.in_w) xrow[iw] += srow[ow];
          }
        }
      }
    }
  }
}

}  // namespace mum::kernels
