#include "detector.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "conv_kernels.hpp"
#include "errors.hpp"

namespace mum {

using kernels::ConvGeom;

void DetectorArch::validate() const {
  if (input_size <= 0 || input_size % kTotalStride != 0) {
    throw InvalidArgument("input_size must be a positive multiple of " +
                          std::to_string(kTotalStride) + ", got " + std::to_string(input_size));
  }
  if (num_classes < 1) throw InvalidArgument("num_classes must be >= 1");
  if (c1 < 1 || c2 < 1 || c3 < 1) throw InvalidArgument("conv channel counts must be >= 1");
}

std::int64_t DetectorArch::param_count() const { return param_layout(*this).total; }

std::string DetectorArch::arch_id() const {
  return "toydet/in" + std::to_string(input_size) + "/nc" + std::to_string(num_classes) + "/c" +
         std::to_string(c1) + "-" + std::to_string(c2) + "-" + std::to_string(c3);
}

ParamLayout param_layout(const DetectorArch& arch) {
  arch.validate();
  ParamLayout l;
  std::int64_t off = 0;
  l.w1 = off; off += static_cast<std::int64_t>(arch.c1) * 3 * 9;
  l.b1 = off; off += arch.c1;
  l.w2 = off; off += static_cast<std::int64_t>(arch.c2) * arch.c1 * 9;
  l.b2 = off; off += arch.c2;
  l.w3 = off; off += static_cast<std::int64_t>(arch.c3) * arch.c2 * 9;
  l.b3 = off; off += arch.c3;
  l.wh = off; off += static_cast<std::int64_t>(arch.head_channels()) * arch.c3;
  l.bh = off; off += arch.head_channels();
  l.total = off;
  return l;
}

ModelState init_params(const DetectorArch& arch, SplitRng& rng) {
  const ParamLayout l = param_layout(arch);
  ModelState state;
  state.arch_id = arch.arch_id();
  state.params.assign(static_cast<std::size_t>(l.total), 0.0f);

  auto he_fill = [&](std::int64_t off, std::int64_t count, std::int64_t fan_in) {
    const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
    for (std::int64_t i = 0; i < count; ++i) {
      state.params[static_cast<std::size_t>(off + i)] =
          static_cast<float>(rng.next_normal() * stddev);
    }
  };
  he_fill(l.w1, static_cast<std::int64_t>(arch.c1) * 3 * 9, 3 * 9);
  he_fill(l.w2, static_cast<std::int64_t>(arch.c2) * arch.c1 * 9, static_cast<std::int64_t>(arch.c1) * 9);
  he_fill(l.w3, static_cast<std::int64_t>(arch.c3) * arch.c2 * 9, static_cast<std::int64_t>(arch.c2) * 9);
  he_fill(l.wh, static_cast<std::int64_t>(arch.head_channels()) * arch.c3, arch.c3);

  const float prior_bias = static_cast<float>(-std::log((1.0 - 0.01) / 0.01));
  for (int k = 0; k < arch.num_classes; ++k) {
    state.params[static_cast<std::size_t>(l.bh + k)] = prior_bias;
  }
  return state;
}

namespace {

template <typename T>
void check_params(const DetectorArch& arch, std::span<const T> params) {
  const auto expect = arch.param_count();
  if (static_cast<std::int64_t>(params.size()) != expect) {
    throw InvalidArgument("parameter vector has " + std::to_string(params.size()) +
                          " entries, arch " + arch.arch_id() + " needs " + std::to_string(expect));
  }
}

// One conv3x3/s2/p1 + ReLU layer over a batch; col receives the per-image
// im2col matrices back to back for reuse in the backward pass.
template <typename T>
TensorT<T> conv_relu_forward(const TensorT<T>& in, const T* w, const T* b, std::int64_t out_c,
                             std::vector<T>& col) {
  const ConvGeom g(in.c(), in.h(), in.w());
  const std::int64_t col_size = g.col_rows() * g.col_cols();
  col.assign(static_cast<std::size_t>(col_size * in.n()), T{0});

  TensorT<T> out(in.n(), out_c, g.out_h, g.out_w);
  const std::int64_t spatial = g.col_cols();
  for (std::int64_t img = 0; img < in.n(); ++img) {
    T* img_col = col.data() + img * col_size;
    kernels::im2col(g, in.plane(img, 0), img_col);
    T* o = out.plane(img, 0);
    for (std::int64_t oc = 0; oc < out_c; ++oc) {
      std::fill(o + oc * spatial, o + (oc + 1) * spatial, b[oc]);
    }
    kernels::gemm_acc(out_c, g.col_rows(), spatial, w, img_col, o);
    for (std::int64_t i = 0; i < out_c * spatial; ++i) o[i] = std::max(o[i], T{0});
  }
  return out;
}

// Backward of conv+ReLU given the layer output (for the ReLU mask) and the
// cached col matrix. Returns d(input) via col2im unless d_in is null.
template <typename T>
void conv_relu_backward(const TensorT<T>& in, const TensorT<T>& out, const std::vector<T>& col,
                        const T* w, const TensorT<T>& d_out, T* d_w, T* d_b, TensorT<T>* d_in) {
  const ConvGeom g(in.c(), in.h(), in.w());
  const std::int64_t spatial = g.col_cols();
  const std::int64_t out_c = out.c();
  const std::int64_t col_size = g.col_rows() * spatial;

  std::vector<T> d_pre(static_cast<std::size_t>(out_c * spatial));
  std::vector<T> d_col(static_cast<std::size_t>(col_size));
  for (std::int64_t img = 0; img < in.n(); ++img) {
    const T* o = out.plane(img, 0);
    const T* go = d_out.plane(img, 0);
    for (std::int64_t i = 0; i < out_c * spatial; ++i) {
      d_pre[static_cast<std::size_t>(i)] = o[i] > T{0} ? go[i] : T{0};
    }
    const T* img_col = col.data() + img * col_size;
    // dW += d_pre * col^T ; db += row sums of d_pre
    kernels::gemm_abt_acc(out_c, spatial, g.col_rows(), d_pre.data(), img_col, d_w);
    for (std::int64_t oc = 0; oc < out_c; ++oc) {
      T acc{0};
      const T* row = d_pre.data() + oc * spatial;
      for (std::int64_t i = 0; i < spatial; ++i) acc += row[i];
      d_b[oc] += acc;
    }
    if (d_in) {
      std::fill(d_col.begin(), d_col.end(), T{0});
      // d_col = W^T * d_pre
      kernels::gemm_atb_acc(g.col_rows(), out_c, spatial, w, d_pre.data(), d_col.data());
      kernels::col2im_acc(g, d_col.data(), d_in->plane(img, 0));
    }
  }
}

}  // namespace

template <typename T>
TensorT<T> backbone_forward(const DetectorArch& arch, std::span<const T> params,
                            const TensorT<T>& batch, BackboneCache<T>* cache) {
  check_params(arch, params);
  if (batch.c() != 3 || batch.h() != arch.input_size || batch.w() != arch.input_size) {
    throw ShapeError("backbone expects (n, 3, " + std::to_string(arch.input_size) + ", " +
                     std::to_string(arch.input_size) + "), got " + batch.shape_str());
  }
  const ParamLayout l = param_layout(arch);
  BackboneCache<T> local;
  BackboneCache<T>& c = cache ? *cache : local;

  c.act1 = conv_relu_forward(batch, params.data() + l.w1, params.data() + l.b1, arch.c1, c.col0);
  c.act2 = conv_relu_forward(c.act1, params.data() + l.w2, params.data() + l.b2, arch.c2, c.col1);
  c.feat = conv_relu_forward(c.act2, params.data() + l.w3, params.data() + l.b3, arch.c3, c.col2);
  return c.feat;
}

template <typename T>
TensorT<T> head_forward(const DetectorArch& arch, std::span<const T> params,
                        const TensorT<T>& features) {
  check_params(arch, params);
  if (features.c() != arch.c3) {
    throw ShapeError("head expects " + std::to_string(arch.c3) + " feature channels, got " +
                     std::to_string(features.c()));
  }
  const ParamLayout l = param_layout(arch);
  const std::int64_t k = arch.head_channels();
  const std::int64_t spatial = features.h() * features.w();

  TensorT<T> out(features.n(), k, features.h(), features.w());
  for (std::int64_t img = 0; img < features.n(); ++img) {
    T* o = out.plane(img, 0);
    const T* b = params.data() + l.bh;
    for (std::int64_t oc = 0; oc < k; ++oc) {
      std::fill(o + oc * spatial, o + (oc + 1) * spatial, b[oc]);
    }
    kernels::gemm_acc(k, arch.c3, spatial, params.data() + l.wh, features.plane(img, 0), o);
  }
  return out;
}

template <typename T>
void head_backward(const DetectorArch& arch, std::span<const T> params, const TensorT<T>& features,
                   const TensorT<T>& d_out, std::span<T> d_params, TensorT<T>* d_features) {
  check_params(arch, params);
  check_params(arch, std::span<const T>(d_params.data(), d_params.size()));
  const ParamLayout l = param_layout(arch);
  const std::int64_t k = arch.head_channels();
  const std::int64_t spatial = features.h() * features.w();

  if (d_features) *d_features = TensorT<T>(features.n(), features.c(), features.h(), features.w());
  for (std::int64_t img = 0; img < features.n(); ++img) {
    const T* go = d_out.plane(img, 0);
    kernels::gemm_abt_acc(k, spatial, arch.c3, go, features.plane(img, 0), d_params.data() + l.wh);
    for (std::int64_t oc = 0; oc < k; ++oc) {
      T acc{0};
      const T* row = go + oc * spatial;
      for (std::int64_t i = 0; i < spatial; ++i) acc += row[i];
      d_params[static_cast<std::size_t>(l.bh + oc)] += acc;
    }
    if (d_features) {
      kernels::gemm_atb_acc(arch.c3, k, spatial, params.data() + l.wh, go,
                            d_features->plane(img, 0));
    }
  }
}

template <typename T>
void backbone_backward(const DetectorArch& arch, std::span<const T> params,
                       const TensorT<T>& batch, const BackboneCache<T>& cache,
                       const TensorT<T>& d_feat, std::span<T> d_params, TensorT<T>* d_input) {
  check_params(arch, params);
  const ParamLayout l = param_layout(arch);

  TensorT<T> d_act2(cache.act2.n(), cache.act2.c(), cache.act2.h(), cache.act2.w());
  conv_relu_backward(cache.act2, cache.feat, cache.col2, params.data() + l.w3, d_feat,
                     d_params.data() + l.w3, d_params.data() + l.b3, &d_act2);

  TensorT<T> d_act1(cache.act1.n(), cache.act1.c(), cache.act1.h(), cache.act1.w());
  conv_relu_backward(cache.act1, cache.act2, cache.col1, params.data() + l.w2, d_act2,
                     d_params.data() + l.w2, d_params.data() + l.b2, &d_act1);

  if (d_input) *d_input = TensorT<T>(batch.n(), batch.c(), batch.h(), batch.w());
  conv_relu_backward(batch, cache.act1, cache.col0, params.data() + l.w1, d_act1,
                     d_params.data() + l.w1, d_params.data() + l.b1, d_input);
}

namespace {

double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }
double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

struct CellAssign {
  int target = -1;  // index into the image's label list
};

// Center-in-box assignment; smallest-area box wins, earlier target breaks ties.
std::vector<CellAssign> assign_cells(const DetectorArch& arch, std::int64_t fh, std::int64_t fw,
                                     const LabelList& labels, double stride) {
  std::vector<CellAssign> out(static_cast<std::size_t>(fh * fw));
  for (std::int64_t r = 0; r < fh; ++r) {
    const double cy = (static_cast<double>(r) + 0.5) * stride;
    for (std::int64_t c = 0; c < fw; ++c) {
      const double cx = (static_cast<double>(c) + 0.5) * stride;
      int best = -1;
      double best_area = 0;
      for (std::size_t t = 0; t < labels.size(); ++t) {
        const Box& b = labels[t].box;
        if (cx >= b.x_min && cx <= b.x_max && cy >= b.y_min && cy <= b.y_max) {
          if (best < 0 || b.area() < best_area) {
            best = static_cast<int>(t);
            best_area = b.area();
          }
        }
      }
      out[static_cast<std::size_t>(r * fw + c)].target = best;
    }
  }
  return out;
}

}  // namespace

template <typename T>
LossResult detection_loss(const DetectorArch& arch, const TensorT<T>& head_out,
                          const std::vector<LabelList>& targets, bool include_reg,
                          TensorT<T>* d_head_out) {
  if (head_out.c() != arch.head_channels()) {
    throw ShapeError("head output must have " + std::to_string(arch.head_channels()) +
                     " channels, got " + std::to_string(head_out.c()));
  }
  if (static_cast<std::int64_t>(targets.size()) != head_out.n()) {
    throw InvalidArgument("target list count does not match batch size");
  }
  const std::int64_t fh = head_out.h(), fw = head_out.w();
  const double stride = static_cast<double>(arch.input_size) / static_cast<double>(fh);
  const int nc = arch.num_classes;
  constexpr double kGamma = 2.0;
  constexpr double kAlpha = 0.25;

  if (d_head_out) {
    *d_head_out = TensorT<T>(head_out.n(), head_out.c(), fh, fw);
  }

  // First pass: assignments and the global positive count (the normalizer).
  std::vector<std::vector<CellAssign>> assigns(static_cast<std::size_t>(head_out.n()));
  std::int64_t n_pos = 0;
  for (std::int64_t img = 0; img < head_out.n(); ++img) {
    for (const auto& obj : targets[static_cast<std::size_t>(img)]) {
      if (obj.class_id < 0 || obj.class_id >= nc) {
        throw InvalidArgument("target class " + std::to_string(obj.class_id) +
                              " outside [0, " + std::to_string(nc) + ")");
      }
      if (!obj.box.valid()) throw InvalidArgument("degenerate target box");
    }
    assigns[static_cast<std::size_t>(img)] =
        assign_cells(arch, fh, fw, targets[static_cast<std::size_t>(img)], stride);
    for (const auto& a : assigns[static_cast<std::size_t>(img)]) {
      if (a.target >= 0) ++n_pos;
    }
  }
  const double norm = static_cast<double>(std::max<std::int64_t>(1, n_pos));

  double cls_sum = 0, reg_sum = 0;
  for (std::int64_t img = 0; img < head_out.n(); ++img) {
    const auto& labels = targets[static_cast<std::size_t>(img)];
    const auto& assign = assigns[static_cast<std::size_t>(img)];
    for (std::int64_t cell = 0; cell < fh * fw; ++cell) {
      const int tgt = assign[static_cast<std::size_t>(cell)].target;
      const int pos_class = tgt >= 0 ? labels[static_cast<std::size_t>(tgt)].class_id : -1;

      for (int k = 0; k < nc; ++k) {
        const double x = static_cast<double>(head_out.data()[((img * head_out.c() + k) * fh * fw) + cell]);
        const bool positive = (k == pos_class);
        const double sgn = positive ? 1.0 : -1.0;
        const double alpha_t = positive ? kAlpha : 1.0 - kAlpha;
        const double log_pt = positive ? -softplus(-x) : -softplus(x);
        const double pt = std::exp(log_pt);
        const double one_m_pt = positive ? sigmoid(-x) : sigmoid(x);
        cls_sum += -alpha_t * one_m_pt * one_m_pt * log_pt;
        if (d_head_out) {
          const double g = alpha_t * sgn *
                           (kGamma * pt * one_m_pt * one_m_pt * log_pt - one_m_pt * one_m_pt * one_m_pt);
          d_head_out->data()[((img * head_out.c() + k) * fh * fw) + cell] =
              static_cast<T>(g / norm);
        }
      }

      if (tgt >= 0 && include_reg) {
        const Box& b = labels[static_cast<std::size_t>(tgt)].box;
        const std::int64_t r = cell / fw, c = cell % fw;
        const double cx = (static_cast<double>(c) + 0.5) * stride;
        const double cy = (static_cast<double>(r) + 0.5) * stride;
        const double t_val[4] = {(0.5 * (b.x_min + b.x_max) - cx) / stride,
                                 (0.5 * (b.y_min + b.y_max) - cy) / stride,
                                 std::log(b.width() / stride), std::log(b.height() / stride)};
        for (int k = 0; k < 4; ++k) {
          const std::int64_t idx = ((img * head_out.c() + nc + k) * fh * fw) + cell;
          const double d = static_cast<double>(head_out.data()[idx]) - t_val[k];
          const double ad = std::abs(d);
          reg_sum += ad < 1.0 ? 0.5 * d * d : ad - 0.5;
          if (d_head_out) {
            const double g = ad < 1.0 ? d : (d > 0 ? 1.0 : -1.0);
            d_head_out->data()[idx] = static_cast<T>(g / norm);
          }
        }
      }
    }
  }

  LossResult res;
  res.cls = cls_sum / norm;
  res.reg = include_reg ? reg_sum / norm : 0.0;
  res.n_pos = n_pos;
  return res;
}

std::vector<std::vector<Detection>> decode_detections(const DetectorArch& arch,
                                                      const Tensor4& head_out, double score_floor,
                                                      double nms_iou, int max_per_image) {
  if (head_out.c() != arch.head_channels()) {
    throw ShapeError("head output must have " + std::to_string(arch.head_channels()) +
                     " channels, got " + std::to_string(head_out.c()));
  }
  const std::int64_t fh = head_out.h(), fw = head_out.w();
  const double stride = static_cast<double>(arch.input_size) / static_cast<double>(fh);
  const double img_extent = static_cast<double>(arch.input_size);

  std::vector<std::vector<Detection>> out(static_cast<std::size_t>(head_out.n()));
  for (std::int64_t img = 0; img < head_out.n(); ++img) {
    std::vector<Detection> cands;
    for (std::int64_t r = 0; r < fh; ++r) {
      for (std::int64_t c = 0; c < fw; ++c) {
        const std::int64_t cell = r * fw + c;
        for (int k = 0; k < arch.num_classes; ++k) {
          const double score =
              sigmoid(static_cast<double>(head_out.data()[((img * head_out.c() + k) * fh * fw) + cell]));
          if (score < score_floor) continue;
          const double cx = (static_cast<double>(c) + 0.5) * stride +
                            static_cast<double>(head_out.data()[((img * head_out.c() + arch.num_classes + 0) * fh * fw) + cell]) * stride;
          const double cy = (static_cast<double>(r) + 0.5) * stride +
                            static_cast<double>(head_out.data()[((img * head_out.c() + arch.num_classes + 1) * fh * fw) + cell]) * stride;
          // exp clamp keeps absurd offsets from overflowing to inf
          const double tw = std::min(6.0, static_cast<double>(head_out.data()[((img * head_out.c() + arch.num_classes + 2) * fh * fw) + cell]));
          const double th = std::min(6.0, static_cast<double>(head_out.data()[((img * head_out.c() + arch.num_classes + 3) * fh * fw) + cell]));
          const double bw = std::exp(tw) * stride;
          const double bh = std::exp(th) * stride;
          Box box{cx - bw / 2, cy - bh / 2, cx + bw / 2, cy + bh / 2};
          box.x_min = std::clamp(box.x_min, 0.0, img_extent);
          box.y_min = std::clamp(box.y_min, 0.0, img_extent);
          box.x_max = std::clamp(box.x_max, 0.0, img_extent);
          box.y_max = std::clamp(box.y_max, 0.0, img_extent);
          if (!box.valid()) continue;
          cands.push_back({k, score, box});
        }
      }
    }
    auto kept = nms(cands, nms_iou);
    if (static_cast<int>(kept.size()) > max_per_image) {
      kept.resize(static_cast<std::size_t>(max_per_image));
    }
    out[static_cast<std::size_t>(img)] = std::move(kept);
  }
  return out;
}

// float is the training path; double exists for high-precision checks.
template TensorT<float> backbone_forward<float>(const DetectorArch&, std::span<const float>,
                                                const TensorT<float>&, BackboneCache<float>*);
template TensorT<double> backbone_forward<double>(const DetectorArch&, std::span<const double>,
                                                  const TensorT<double>&, BackboneCache<double>*);
template TensorT<float> head_forward<float>(const DetectorArch&, std::span<const float>,
                                            const TensorT<float>&);
template TensorT<double> head_forward<double>(const DetectorArch&, std::span<const double>,
                                              const TensorT<double>&);
template void head_backward<float>(const DetectorArch&, std::span<const float>,
                                   const TensorT<float>&, const TensorT<float>&, std::span<float>,
                                   TensorT<float>*);
template void head_backward<double>(const DetectorArch&, std::span<const double>,
                                    const TensorT<double>&, const TensorT<double>&,
                                    std::span<double>, TensorT<double>*);
template void backbone_backward<float>(const DetectorArch&, std::span<const float>,
                                       const TensorT<float>&, const BackboneCache<float>&,
                                       const TensorT<float>&, std::span<float>, TensorT<float>*);
template void backbone_backward<double>(const DetectorArch&, std::span<const double>,
                                        const TensorT<double>&, const BackboneCache<double>&,
                                        const TensorT<double>&, std::span<double>,
                                        TensorT<double>*);
template LossResult detection_loss<float>(const DetectorArch&, const TensorT<float>&,
                                          const std::vector<LabelList>&, bool, TensorT<float>*);
template LossResult detection_loss<double>(const DetectorArch&, const TensorT<double>&,
                                           const std::vector<LabelList>&, bool, TensorT<double>*);

}  // namespace mum
