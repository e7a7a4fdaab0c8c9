#include "robosac/geometry.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>

namespace robosac {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

double cross(const Vec2& o, const Vec2& a, const Vec2& b) {
    return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

std::array<Vec2, 4> corners(const OrientedBox& box) {
    const double c = std::cos(box.yaw);
    const double s = std::sin(box.yaw);
    const double hx = box.length * 0.5;
    const double hy = box.width * 0.5;
    // counter-clockwise order
    const std::array<Vec2, 4> local{{{hx, hy}, {-hx, hy}, {-hx, -hy}, {hx, -hy}}};
    std::array<Vec2, 4> out;
    for (std::size_t i = 0; i < 4; ++i) {
        out[i].x = box.center_x + c * local[i].x - s * local[i].y;
        out[i].y = box.center_y + s * local[i].x + c * local[i].y;
    }
    return out;
}

double polygon_area(const std::vector<Vec2>& poly) {
    if (poly.size() < 3) return 0.0;
    double twice = 0.0;
    for (std::size_t i = 0; i < poly.size(); ++i) {
        const Vec2& a = poly[i];
        const Vec2& b = poly[(i + 1) % poly.size()];
        twice += a.x * b.y - a.y * b.x;
    }
    return std::abs(twice) * 0.5;
}

// Clip a convex polygon against the half-plane left of edge a->b
// (boundary points kept, so clipping a polygon by its own edges is exact).
void clip_half_plane(std::vector<Vec2>& poly, const Vec2& a, const Vec2& b,
                     std::vector<Vec2>& scratch) {
    scratch.clear();
    const std::size_t n = poly.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2& cur = poly[i];
        const Vec2& nxt = poly[(i + 1) % n];
        const double side_cur = cross(a, b, cur);
        const double side_nxt = cross(a, b, nxt);
        if (side_cur >= 0.0) scratch.push_back(cur);
        if ((side_cur > 0.0 && side_nxt < 0.0) || (side_cur < 0.0 && side_nxt > 0.0)) {
            const double t = side_cur / (side_cur - side_nxt);
            scratch.push_back({cur.x + t * (nxt.x - cur.x), cur.y + t * (nxt.y - cur.y)});
        }
    }
    poly.swap(scratch);
}

double intersection_area(const OrientedBox& a, const OrientedBox& b) {
    const auto pa = corners(a);
    const auto pb = corners(b);
    std::vector<Vec2> poly(pa.begin(), pa.end());
    std::vector<Vec2> scratch;
    scratch.reserve(8);
    for (std::size_t i = 0; i < 4 && poly.size() >= 3; ++i)
        clip_half_plane(poly, pb[i], pb[(i + 1) % 4], scratch);
    return polygon_area(poly);
}

// Solves minimum-cost perfect assignment on an n x n matrix, O(n^3)
// potentials method. Returns column assigned to each row.
std::vector<int> solve_assignment(const std::vector<std::vector<double>>& cost) {
    const int n = static_cast<int>(cost.size());
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> row_pot(n + 1, 0.0), col_pot(n + 1, 0.0);
    std::vector<int> col_match(n + 1, n);  // col -> row, n = free
    std::vector<int> way(n + 1, 0);
    for (int row = 0; row < n; ++row) {
        col_match[n] = row;
        int current_col = n;
        std::vector<double> min_slack(n + 1, inf);
        std::vector<char> used(n + 1, 0);
        do {
            used[current_col] = 1;
            const int current_row = col_match[current_col];
            double delta = inf;
            int next_col = n;
            for (int col = 0; col < n; ++col) {
                if (used[col]) continue;
                const double slack =
                    cost[current_row][col] - row_pot[current_row] - col_pot[col];
                if (slack < min_slack[col]) {
                    min_slack[col] = slack;
                    way[col] = current_col;
                }
                if (min_slack[col] < delta) {
                    delta = min_slack[col];
                    next_col = col;
                }
            }
            for (int col = 0; col <= n; ++col) {
                if (used[col]) {
                    row_pot[col_match[col]] += delta;
                    col_pot[col] -= delta;
                } else {
                    min_slack[col] -= delta;
                }
            }
            current_col = next_col;
        } while (col_match[current_col] != n);
        while (current_col != n) {
            const int prev = way[current_col];
            col_match[current_col] = col_match[prev];
            current_col = prev;
        }
    }
    std::vector<int> row_to_col(n, -1);
    for (int col = 0; col < n; ++col)
        if (col_match[col] != n) row_to_col[col_match[col]] = col;
    return row_to_col;
}

}  // namespace

double normalize_yaw(double yaw) {
    double y = std::fmod(yaw + kPi, 2.0 * kPi);
    if (y < 0.0) y += 2.0 * kPi;
    return y - kPi;
}

OrientedBox make_box(double cx, double cy, double length, double width, double yaw,
                     double score) {
    if (!(length > 0.0) || !(width > 0.0))
        throw std::invalid_argument("box length and width must be positive");
    return OrientedBox{cx, cy, length, width, normalize_yaw(yaw), score};
}

double rotated_iou(const OrientedBox& a, const OrientedBox& b) {
    const double area_a = a.area();
    const double area_b = b.area();
    if (!(area_a > 0.0) || !(area_b > 0.0))
        throw std::invalid_argument("rotated_iou: degenerate zero-area box");
    // Cheap reject: boxes farther apart than their circumradii cannot overlap.
    const double dx = a.center_x - b.center_x;
    const double dy = a.center_y - b.center_y;
    const double reach = 0.5 * (std::hypot(a.length, a.width) + std::hypot(b.length, b.width));
    if (dx * dx + dy * dy > reach * reach) return 0.0;
    const double inter = intersection_area(a, b);
    const double uni = area_a + area_b - inter;
    if (uni <= 0.0) return 0.0;
    return std::clamp(inter / uni, 0.0, 1.0);
}

std::vector<MatchedPair> hungarian_match(const DetectionSet& a, const DetectionSet& b,
                                         double min_iou) {
    const int na = static_cast<int>(a.size());
    const int nb = static_cast<int>(b.size());
    if (na == 0 || nb == 0) return {};
    const int n = std::max(na, nb);
    // Pad to square; cost = 1 - iou so the assignment maximizes total IoU.
    std::vector<std::vector<double>> cost(n, std::vector<double>(n, 1.0));
    std::vector<std::vector<double>> iou(na, std::vector<double>(nb, 0.0));
    for (int i = 0; i < na; ++i)
        for (int j = 0; j < nb; ++j) {
            iou[i][j] = rotated_iou(a.boxes[static_cast<std::size_t>(i)],
                                    b.boxes[static_cast<std::size_t>(j)]);
            cost[i][j] = 1.0 - iou[i][j];
        }
    const auto row_to_col = solve_assignment(cost);
    std::vector<MatchedPair> out;
    for (int i = 0; i < na; ++i) {
        const int j = row_to_col[static_cast<std::size_t>(i)];
        if (j < 0 || j >= nb) continue;
        if (iou[i][j] < min_iou) continue;
        out.push_back(MatchedPair{i, j, iou[i][j]});
    }
    std::sort(out.begin(), out.end(),
              [](const MatchedPair& x, const MatchedPair& y) { return x.index_a < y.index_a; });
    return out;
}

bool Fov::contains(double x, double y) const {
    const double dx = x - center_x;
    const double dy = y - center_y;
    return dx * dx + dy * dy <= radius * radius;
}

void ConsensusConfig::validate() const {
    if (!(epsilon > 0.0 && epsilon < 1.0))
        throw std::invalid_argument("consensus epsilon must lie in (0,1)");
    if (!(match_min_iou >= 0.0 && match_min_iou < 1.0))
        throw std::invalid_argument("match_min_iou must lie in [0,1)");
    if (mode == DifferenceMode::ego_fov && !fov)
        throw std::invalid_argument("ego_fov mode requires a field-of-view region");
}

namespace {

DetectionSet restrict_to_fov(const DetectionSet& set, const Fov& fov) {
    DetectionSet out;
    out.frame_id = set.frame_id;
    for (const auto& box : set.boxes)
        if (fov.contains(box.center_x, box.center_y)) out.boxes.push_back(box);
    return out;
}

}  // namespace

double difference_measure(const DetectionSet& collaborative, const DetectionSet& reference,
                          const ConsensusConfig& cfg) {
    cfg.validate();
    const DetectionSet* ys = &collaborative;
    const DetectionSet* y0 = &reference;
    DetectionSet ys_fov, y0_fov;
    if (cfg.mode == DifferenceMode::ego_fov) {
        ys_fov = restrict_to_fov(collaborative, *cfg.fov);
        y0_fov = restrict_to_fov(reference, *cfg.fov);
        if (ys_fov.empty() && y0_fov.empty()) return 0.0;
        ys = &ys_fov;
        y0 = &y0_fov;
    }
    const auto matches = hungarian_match(*ys, *y0, cfg.match_min_iou);
    double total_iou = 0.0;
    for (const auto& m : matches) total_iou += m.iou;
    const double denom = static_cast<double>(std::max({ys->size(), y0->size(), std::size_t{1}}));
    return std::clamp(1.0 - total_iou / denom, 0.0, 1.0);
}

bool consensus(const DetectionSet& collaborative, const DetectionSet& reference,
               const ConsensusConfig& cfg) {
    return difference_measure(collaborative, reference, cfg) <= cfg.epsilon;
}

double average_precision(const DetectionSet& predictions, const DetectionSet& ground_truth,
                         double iou_threshold) {
    if (ground_truth.empty()) return predictions.empty() ? 1.0 : 0.0;
    if (predictions.empty()) return 0.0;

    std::vector<int> order(predictions.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int lhs, int rhs) {
        return predictions.boxes[static_cast<std::size_t>(lhs)].score >
               predictions.boxes[static_cast<std::size_t>(rhs)].score;
    });

    std::vector<char> gt_used(ground_truth.size(), 0);
    std::vector<char> is_tp(order.size(), 0);
    for (std::size_t rank = 0; rank < order.size(); ++rank) {
        const auto& pred = predictions.boxes[static_cast<std::size_t>(order[rank])];
        double best_iou = 0.0;
        int best_gt = -1;
        for (std::size_t g = 0; g < ground_truth.size(); ++g) {
            if (gt_used[g]) continue;
            const double iou = rotated_iou(pred, ground_truth.boxes[g]);
            if (iou > best_iou) {
                best_iou = iou;
                best_gt = static_cast<int>(g);
            }
        }
        if (best_gt >= 0 && best_iou >= iou_threshold) {
            gt_used[static_cast<std::size_t>(best_gt)] = 1;
            is_tp[rank] = 1;
        }
    }

    const double gt_count = static_cast<double>(ground_truth.size());
    std::vector<double> precision(order.size()), recall(order.size());
    int tp = 0;
    for (std::size_t k = 0; k < order.size(); ++k) {
        tp += is_tp[k];
        precision[k] = static_cast<double>(tp) / static_cast<double>(k + 1);
        recall[k] = static_cast<double>(tp) / gt_count;
    }
    // all-point interpolation: running max of precision from the tail
    for (std::size_t k = order.size() - 1; k-- > 0;)
        precision[k] = std::max(precision[k], precision[k + 1]);
    double ap = 0.0;
    double prev_recall = 0.0;
    for (std::size_t k = 0; k < order.size(); ++k) {
        ap += (recall[k] - prev_recall) * precision[k];
        prev_recall = recall[k];
    }
    return ap;
}

}  // namespace robosac
