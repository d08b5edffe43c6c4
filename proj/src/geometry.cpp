#include "tubekit/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tubekit/error.hpp"

namespace tubekit {

namespace {

bool finite(const Box& b) {
  return std::isfinite(b.x1) && std::isfinite(b.y1) && std::isfinite(b.x2) && std::isfinite(b.y2);
}

}  // namespace

void validate_box(const Box& box) {
  if (!finite(box)) throw InvalidInput("box has non-finite coordinates");
  if (box.x1 > box.x2 || box.y1 > box.y2) {
    throw InvalidInput("box corners are not ordered (x1 <= x2, y1 <= y2 required)");
  }
}

double iou2d(const Box& a, const Box& b) {
  if (!finite(a) || !finite(b)) throw InvalidInput("iou2d: non-finite box coordinates");
  const double iw = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  const double ih = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  const double inter = (iw > 0.0 && ih > 0.0) ? iw * ih : 0.0;
  const double uni = a.area() + b.area() - inter;
  if (uni <= 0.0) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

TubeGeometry::TubeGeometry(int start_frame, std::vector<Box> boxes)
    : start_(start_frame), boxes_(std::move(boxes)) {
  if (boxes_.empty()) throw InvalidInput("tube geometry needs at least one box");
  for (const auto& b : boxes_) validate_box(b);
}

const Box& TubeGeometry::clamped_at(int frame) const {
  if (frame <= start_) return boxes_.front();
  if (frame >= end()) return boxes_.back();
  return at(frame);
}

TubeGeometry TubeGeometry::slice(int first, int last) const {
  if (first > last || !covers(first) || !covers(last)) {
    throw InvalidInput("slice [" + std::to_string(first) + ", " + std::to_string(last) +
                       "] outside tube frames");
  }
  const auto off = static_cast<std::ptrdiff_t>(first - start_);
  const auto len = static_cast<std::ptrdiff_t>(last - first + 1);
  return TubeGeometry(first, std::vector<Box>(boxes_.begin() + off, boxes_.begin() + off + len));
}

TubeGeometry TubeGeometry::translated(double dx, double dy, int dt) const {
  std::vector<Box> out;
  out.reserve(boxes_.size());
  for (const auto& b : boxes_) out.push_back(b.translated(dx, dy));
  return TubeGeometry(start_ + dt, std::move(out));
}

double st_iou(const TubeGeometry& a, const TubeGeometry& b) {
  if (a.empty() || b.empty()) return 0.0;
  const int lo = std::max(a.start(), b.start());
  const int hi = std::min(a.end(), b.end());
  if (lo > hi) return 0.0;
  const double inter_frames = hi - lo + 1;
  const double union_frames = std::max(a.end(), b.end()) - std::min(a.start(), b.start()) + 1;
  double sum = 0.0;
  for (int t = lo; t <= hi; ++t) sum += iou2d(a.at(t), b.at(t));
  return (inter_frames / union_frames) * (sum / inter_frames);
}

}  // namespace tubekit
