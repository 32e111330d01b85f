#include "metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "errors.hpp"

namespace mum {

double iou(const Box& a, const Box& b) {
  const double ix = std::max(0.0, std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min));
  const double iy = std::max(0.0, std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min));
  const double inter = ix * iy;
  const double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

namespace {

struct FlatPred {
  std::int64_t image = 0;
  std::int64_t index = 0;  // input order, used as the tie break
  double score = 0;
  Box box;
};

double all_point_ap(std::vector<PrPoint>& pr, std::int64_t n_gt) {
  if (n_gt == 0) return 0.0;
  // Area under the precision envelope over recall.
  double ap = 0.0;
  double prev_recall = 0.0;
  double max_prec_right = 0.0;
  // Walk right-to-left to build max precision at recall >= r, then integrate.
  std::vector<double> envelope(pr.size());
  for (std::size_t i = pr.size(); i-- > 0;) {
    max_prec_right = std::max(max_prec_right, pr[i].precision);
    envelope[i] = max_prec_right;
  }
  for (std::size_t i = 0; i < pr.size(); ++i) {
    ap += (pr[i].recall - prev_recall) * envelope[i];
    prev_recall = pr[i].recall;
  }
  return ap;
}

}  // namespace

EvalResult ap50(const std::vector<std::vector<Detection>>& preds,
                const std::vector<LabelList>& gts) {
  if (preds.size() != gts.size()) {
    throw InvalidArgument("ap50: prediction and ground-truth image counts differ");
  }
  const auto n_images = static_cast<std::int64_t>(gts.size());

  std::map<int, std::int64_t> gt_counts;
  for (const auto& image_gts : gts)
    for (const auto& obj : image_gts) ++gt_counts[obj.class_id];

  std::map<int, std::vector<FlatPred>> by_class;
  std::int64_t running_index = 0;
  for (std::size_t img = 0; img < preds.size(); ++img) {
    for (const auto& det : preds[img]) {
      by_class[det.class_id].push_back(
          {static_cast<std::int64_t>(img), running_index++, det.score, det.box});
    }
  }

  EvalResult result;
  result.n_images = n_images;
  double ap_sum = 0.0;
  for (const auto& [class_id, n_gt] : gt_counts) {
    ClassAp entry;
    entry.class_id = class_id;
    entry.n_gt = n_gt;

    auto it = by_class.find(class_id);
    if (it != by_class.end()) {
      auto& flat = it->second;
      std::sort(flat.begin(), flat.end(), [](const FlatPred& a, const FlatPred& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.index < b.index;
      });

      std::vector<std::vector<std::uint8_t>> matched(gts.size());
      for (std::size_t img = 0; img < gts.size(); ++img) {
        matched[img].assign(gts[img].size(), 0);
      }

      std::int64_t tp = 0, fp = 0;
      for (const auto& p : flat) {
        double best_iou = 0.0;
        std::size_t best_gt = 0;
        bool found = false;
        const auto& image_gts = gts[static_cast<std::size_t>(p.image)];
        for (std::size_t g = 0; g < image_gts.size(); ++g) {
          if (image_gts[g].class_id != class_id) continue;
          const double v = iou(p.box, image_gts[g].box);
          if (v > best_iou) {
            best_iou = v;
            best_gt = g;
            found = true;
          }
        }
        if (found && best_iou >= 0.5 && !matched[static_cast<std::size_t>(p.image)][best_gt]) {
          matched[static_cast<std::size_t>(p.image)][best_gt] = 1;
          ++tp;
        } else {
          ++fp;
        }
        entry.pr.push_back({static_cast<double>(tp) / static_cast<double>(n_gt),
                            static_cast<double>(tp) / static_cast<double>(tp + fp)});
      }
    }
    entry.ap = all_point_ap(entry.pr, n_gt);
    ap_sum += entry.ap;
    result.per_class.push_back(std::move(entry));
  }
  result.map50 = result.per_class.empty() ? 0.0 : ap_sum / static_cast<double>(result.per_class.size());
  return result;
}

double compute_no(std::span<const Box> boxes, double image_w, double image_h, int tiles_per_axis) {
  if (tiles_per_axis < 1) throw InvalidArgument("tiles_per_axis must be >= 1");
  if (!(image_w > 0.0) || !(image_h > 0.0)) throw InvalidArgument("image size must be positive");
  if (boxes.empty()) return 0.0;

  const double tw = image_w / tiles_per_axis;
  const double th = image_h / tiles_per_axis;
  double total = 0.0;
  for (const auto& b : boxes) {
    if (!b.valid()) throw InvalidArgument("compute_no: degenerate box");
    // Tiles overlapped with strictly positive area along each axis: a tile
    // starting exactly at x_max (or ending at x_min) contributes zero area
    // and is excluded by the floor/ceil pairing.
    const auto span_x = static_cast<std::int64_t>(std::ceil(b.x_max / tw)) -
                        static_cast<std::int64_t>(std::floor(b.x_min / tw));
    const auto span_y = static_cast<std::int64_t>(std::ceil(b.y_max / th)) -
                        static_cast<std::int64_t>(std::floor(b.y_min / th));
    total += static_cast<double>(span_x * span_y);
  }
  return total / static_cast<double>(boxes.size());
}

}  // namespace mum
