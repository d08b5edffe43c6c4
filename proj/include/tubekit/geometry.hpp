#pragma once

#include <cstddef>
#include <vector>

namespace tubekit {

// Axis-aligned rectangle in continuous pixel coordinates.
struct Box {
  double x1 = 0.0;
  double y1 = 0.0;
  double x2 = 0.0;
  double y2 = 0.0;

  double width() const { return x2 > x1 ? x2 - x1 : 0.0; }
  double height() const { return y2 > y1 ? y2 - y1 : 0.0; }
  double area() const { return width() * height(); }

  Box translated(double dx, double dy) const { return {x1 + dx, y1 + dy, x2 + dx, y2 + dy}; }
  Box scaled(double s) const { return {x1 * s, y1 * s, x2 * s, y2 * s}; }

  friend bool operator==(const Box&, const Box&) = default;
};

// Throws InvalidInput unless all coordinates are finite and x1 <= x2, y1 <= y2.
void validate_box(const Box& box);

// Intersection over union. Zero-area unions yield 0. Throws InvalidInput on
// non-finite coordinates.
double iou2d(const Box& a, const Box& b);

// A temporally contiguous run of boxes: boxes[i] lives at frame start + i.
class TubeGeometry {
 public:
  TubeGeometry() = default;
  // Throws InvalidInput if boxes is empty or any box is invalid.
  TubeGeometry(int start_frame, std::vector<Box> boxes);

  int start() const { return start_; }
  // Last covered frame (inclusive).
  int end() const { return start_ + static_cast<int>(boxes_.size()) - 1; }
  std::size_t length() const { return boxes_.size(); }
  bool empty() const { return boxes_.empty(); }
  bool covers(int frame) const { return !boxes_.empty() && frame >= start_ && frame <= end(); }

  const std::vector<Box>& boxes() const { return boxes_; }
  // Box at an absolute frame index; precondition covers(frame).
  const Box& at(int frame) const { return boxes_[static_cast<std::size_t>(frame - start_)]; }
  // Box at the nearest covered frame (first box before start, last box after end).
  const Box& clamped_at(int frame) const;

  // Sub-tube over absolute frames [first, last]; both must be covered.
  TubeGeometry slice(int first, int last) const;
  TubeGeometry translated(double dx, double dy, int dt = 0) const;

  friend bool operator==(const TubeGeometry&, const TubeGeometry&) = default;

 private:
  int start_ = 0;
  std::vector<Box> boxes_;
};

// Spatiotemporal IoU: temporal IoU of the frame spans times the mean iou2d
// over the temporally shared frames. Disjoint spans yield 0.
double st_iou(const TubeGeometry& a, const TubeGeometry& b);

}  // namespace tubekit
