// Oriented BEV boxes and the output-space machinery built on them:
// rotated-box IoU (exact convex clipping), maximum-IoU assignment, the
// consensus difference measure d, and average precision at an IoU threshold.

#pragma once

#include <optional>
#include <stdexcept>
#include <vector>

namespace robosac {

// Axis convention: x right, y up, yaw counter-clockwise from +x.
// length extends along the heading, width across it.
struct OrientedBox {
    double center_x = 0.0;
    double center_y = 0.0;
    double length = 0.0;
    double width = 0.0;
    double yaw = 0.0;       // normalized to [-pi, pi)
    double score = 1.0;     // confidence; 1.0 for ground truth

    double area() const { return length * width; }
};

// Normalizes an angle into [-pi, pi).
double normalize_yaw(double yaw);

OrientedBox make_box(double cx, double cy, double length, double width, double yaw,
                     double score = 1.0);

struct DetectionSet {
    std::vector<OrientedBox> boxes;
    int frame_id = 0;

    bool empty() const { return boxes.empty(); }
    std::size_t size() const { return boxes.size(); }
};

// Exact intersection-over-union of two oriented rectangles via
// Sutherland-Hodgman clipping. Throws on zero-area boxes.
double rotated_iou(const OrientedBox& a, const OrientedBox& b);

struct MatchedPair {
    int index_a = -1;
    int index_b = -1;
    double iou = 0.0;
};

// Maximum-total-IoU one-to-one assignment between the two sets; pairs with
// iou < min_iou are dropped from the result. Output sorted by index_a.
std::vector<MatchedPair> hungarian_match(const DetectionSet& a, const DetectionSet& b,
                                         double min_iou);

struct Fov {
    double center_x = 0.0;
    double center_y = 0.0;
    double radius = 0.0;

    bool contains(double x, double y) const;
};

enum class DifferenceMode { jaccard, ego_fov };

struct ConsensusConfig {
    double epsilon = 0.3;
    DifferenceMode mode = DifferenceMode::ego_fov;
    std::optional<Fov> fov;     // required in ego_fov mode
    double match_min_iou = 0.1;

    void validate() const;
};

// Difference measure between a collaborative output and the reference:
//   jaccard:  d = 1 - (sum of matched IoU) / max(|Ys|, |Y0|, 1)
//   ego_fov:  restrict both sets to boxes whose centers lie in cfg.fov,
//             then apply the jaccard formula; both restricted sets empty -> 0.
double difference_measure(const DetectionSet& collaborative, const DetectionSet& reference,
                          const ConsensusConfig& cfg);

// d(Ys, Y0) <= epsilon, boundary inclusive.
bool consensus(const DetectionSet& collaborative, const DetectionSet& reference,
               const ConsensusConfig& cfg);

// Average precision at the given IoU threshold: predictions sorted by
// descending score (stable), greedily matched to the highest-IoU unmatched
// ground truth, all-point interpolated area under the PR curve.
// Both sets empty -> 1.0; empty ground truth with predictions -> 0.0.
double average_precision(const DetectionSet& predictions, const DetectionSet& ground_truth,
                         double iou_threshold);

}  // namespace robosac
