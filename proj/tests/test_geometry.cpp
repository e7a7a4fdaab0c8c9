#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "robosac/geometry.hpp"
#include "robosac/rng.hpp"

using namespace robosac;

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

OrientedBox random_box(Rng& rng, double span) {
    return make_box(rng.uniform(-span, span), rng.uniform(-span, span), rng.uniform(1.0, 6.0),
                    rng.uniform(0.5, 3.0), rng.uniform(-kPi, kPi), rng.unit());
}

DetectionSet random_set(Rng& rng, int count, double span) {
    DetectionSet set;
    for (int i = 0; i < count; ++i) set.boxes.push_back(random_box(rng, span));
    return set;
}

}  // namespace

TEST_CASE("rotated_iou basic anchors") {
    const auto a = make_box(0, 0, 4, 2, 0);
    CHECK(rotated_iou(a, a) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(rotated_iou(a, make_box(10, 10, 4, 2, 0)) == doctest::Approx(0.0));

    // square vs its 45-degree rotation: intersection is the regular octagon,
    // IoU = 1/sqrt(2); cross-checked against the sampling oracle
    const auto sq = make_box(0, 0, 2, 2, 0);
    const auto sq45 = make_box(0, 0, 2, 2, kPi / 4);
    const double iou = rotated_iou(sq, sq45);
    CHECK(iou == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-9));
    CHECK(std::abs(iou - oracles::mc_iou(sq, sq45, 1000000, 7)) < 0.01);

    CHECK_THROWS_AS(rotated_iou(a, OrientedBox{0, 0, 0.0, 2.0, 0, 1}), std::invalid_argument);
}

TEST_CASE("rotated_iou half-overlap") {
    // two 4x2 boxes offset by half the length: inter 2*2=4, union 16-4=12
    const auto a = make_box(0, 0, 4, 2, 0);
    const auto b = make_box(2, 0, 4, 2, 0);
    CHECK(rotated_iou(a, b) == doctest::Approx(4.0 / 12.0).epsilon(1e-12));
}

TEST_CASE("rotated_iou matches Monte Carlo oracle on random pairs") {
    Rng rng(0x10adull);
    int overlapping = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const auto a = random_box(rng, 3.0);
        auto b = random_box(rng, 3.0);
        b.center_x = a.center_x + rng.uniform(-4.0, 4.0);
        b.center_y = a.center_y + rng.uniform(-4.0, 4.0);
        const double fast = rotated_iou(a, b);
        const double sampled = oracles::mc_iou(a, b, 200000, 1000 + trial);
        CAPTURE(trial);
        CHECK(std::abs(fast - sampled) < 0.01);
        if (fast > 0.05) ++overlapping;
    }
    CHECK(overlapping > 50);  // the sweep actually exercises intersections
}

TEST_CASE("rotated_iou symmetry and rigid-transform invariance") {
    Rng rng(0x515ull);
    for (int trial = 0; trial < 300; ++trial) {
        const auto a = random_box(rng, 4.0);
        auto b = random_box(rng, 4.0);
        b.center_x = a.center_x + rng.uniform(-3.0, 3.0);
        b.center_y = a.center_y + rng.uniform(-3.0, 3.0);
        CHECK(rotated_iou(a, b) == doctest::Approx(rotated_iou(b, a)).epsilon(1e-12));

        const double angle = rng.uniform(-kPi, kPi);
        const double tx = rng.uniform(-50.0, 50.0);
        const double ty = rng.uniform(-50.0, 50.0);
        auto transform = [&](const OrientedBox& box) {
            const double c = std::cos(angle), s = std::sin(angle);
            return make_box(c * box.center_x - s * box.center_y + tx,
                            s * box.center_x + c * box.center_y + ty, box.length, box.width,
                            box.yaw + angle, box.score);
        };
        CHECK(std::abs(rotated_iou(transform(a), transform(b)) - rotated_iou(a, b)) < 1e-9);
    }
}

TEST_CASE("hungarian_match basics") {
    DetectionSet empty;
    DetectionSet two;
    two.boxes = {make_box(0, 0, 4, 2, 0), make_box(10, 0, 4, 2, 0)};
    CHECK(hungarian_match(empty, two, 0.0).empty());
    CHECK(hungarian_match(two, empty, 0.0).empty());

    const auto matches = hungarian_match(two, two, 0.5);
    REQUIRE(matches.size() == 2);
    CHECK(matches[0].index_a == 0);
    CHECK(matches[0].index_b == 0);
    CHECK(matches[0].iou == doctest::Approx(1.0));
    CHECK(matches[1].index_a == 1);
    CHECK(matches[1].index_b == 1);
}

TEST_CASE("hungarian_match equals brute force on random instances") {
    Rng rng(0xbead5ull);
    for (int trial = 0; trial < 1000; ++trial) {
        const int na = 1 + static_cast<int>(rng.below(6));
        const int nb = 1 + static_cast<int>(rng.below(6));
        const auto a = random_set(rng, na, 4.0);
        const auto b = random_set(rng, nb, 4.0);
        const auto matches = hungarian_match(a, b, 0.0);
        double total = 0.0;
        for (const auto& m : matches) total += m.iou;
        const double best = oracles::brute_force_total_iou(a, b);
        CAPTURE(trial);
        CHECK(total == doctest::Approx(best).epsilon(1e-9));
    }
}

TEST_CASE("difference_measure modes") {
    ConsensusConfig jaccard;
    jaccard.mode = DifferenceMode::jaccard;
    jaccard.match_min_iou = 0.1;

    ConsensusConfig fov_cfg;
    fov_cfg.mode = DifferenceMode::ego_fov;
    fov_cfg.fov = Fov{0.0, 0.0, 30.0};
    fov_cfg.match_min_iou = 0.1;

    DetectionSet reference;
    for (int i = 0; i < 5; ++i)
        reference.boxes.push_back(make_box(4.0 * i, 0, 4, 2, 0));

    CHECK(difference_measure(reference, reference, jaccard) == doctest::Approx(0.0));
    CHECK(difference_measure(reference, reference, fov_cfg) == doctest::Approx(0.0));

    // false-positive flood inside the region: 5 matched of 15 -> d = 2/3
    DetectionSet flooded = reference;
    for (int i = 0; i < 10; ++i)
        flooded.boxes.push_back(make_box(-4.0 * i - 8.0, 15, 4, 2, 0));
    CHECK(difference_measure(flooded, reference, jaccard) == doctest::Approx(2.0 / 3.0));
    CHECK(consensus(flooded, reference, jaccard) == false);

    // complementary detections outside the FoV cost nothing in ego_fov mode
    DetectionSet extended = reference;
    extended.boxes.push_back(make_box(100, 100, 4, 2, 0));
    extended.boxes.push_back(make_box(-90, 40, 4, 2, 0));
    extended.boxes.push_back(make_box(70, -80, 4, 2, 0));
    CHECK(difference_measure(extended, reference, fov_cfg) == doctest::Approx(0.0));
    CHECK(difference_measure(extended, reference, jaccard) > 0.0);

    // both restricted sets empty -> permissive 0
    DetectionSet faraway;
    faraway.boxes.push_back(make_box(200, 200, 4, 2, 0));
    CHECK(difference_measure(faraway, DetectionSet{}, fov_cfg) == doctest::Approx(0.0));

    ConsensusConfig missing_fov;
    missing_fov.mode = DifferenceMode::ego_fov;
    CHECK_THROWS_AS(difference_measure(reference, reference, missing_fov), std::invalid_argument);
}

TEST_CASE("consensus boundary is inclusive") {
    // construct d = 0.25 exactly (a representable double): 8 boxes vs the
    // same 8 with 6 matched at iou 1 -> d = 1 - 6/8
    ConsensusConfig cfg;
    cfg.mode = DifferenceMode::jaccard;
    cfg.epsilon = 0.25;
    cfg.match_min_iou = 0.0;
    DetectionSet reference;
    for (int i = 0; i < 8; ++i) reference.boxes.push_back(make_box(6.0 * i, 0, 4, 2, 0));
    DetectionSet shifted = reference;
    for (int i = 6; i < 8; ++i) {
        shifted.boxes[static_cast<std::size_t>(i)].center_y = 50.0;  // unmatched
    }
    CHECK(difference_measure(shifted, reference, cfg) == 0.25);
    CHECK(consensus(shifted, reference, cfg));  // d == epsilon accepts
    cfg.epsilon = 0.2499;
    CHECK(!consensus(shifted, reference, cfg));
}

TEST_CASE("difference_measure fuzzed invariants") {
    Rng rng(0xd1ffull);
    ConsensusConfig cfg;
    cfg.mode = DifferenceMode::jaccard;
    cfg.match_min_iou = 0.0;
    for (int trial = 0; trial < 300; ++trial) {
        const auto a = random_set(rng, 1 + static_cast<int>(rng.below(12)), 20.0);
        const auto b = random_set(rng, 1 + static_cast<int>(rng.below(12)), 20.0);
        const double d = difference_measure(a, b, cfg);
        CHECK(d >= 0.0);
        CHECK(d <= 1.0);
        CHECK(difference_measure(a, a, cfg) == doctest::Approx(0.0));
    }

    // monotone: improving one matched pair's IoU cannot increase d
    DetectionSet reference;
    reference.boxes = {make_box(0, 0, 4, 2, 0), make_box(10, 0, 4, 2, 0)};
    double prev = 2.0;
    for (double offset : {2.0, 1.5, 1.0, 0.5, 0.0}) {
        DetectionSet shifted = reference;
        shifted.boxes[0].center_x = offset;
        const double d = difference_measure(shifted, reference, cfg);
        CHECK(d <= prev + 1e-12);
        prev = d;
    }
}

TEST_CASE("average_precision anchors") {
    DetectionSet gt;
    gt.boxes = {make_box(0, 0, 4, 2, 0), make_box(10, 0, 4, 2, 0), make_box(20, 0, 4, 2, 0)};

    DetectionSet perfect = gt;
    CHECK(average_precision(perfect, gt, 0.5) == doctest::Approx(1.0));
    CHECK(average_precision(DetectionSet{}, gt, 0.5) == doctest::Approx(0.0));
    CHECK(average_precision(DetectionSet{}, DetectionSet{}, 0.5) == doctest::Approx(1.0));
    CHECK(average_precision(perfect, DetectionSet{}, 0.5) == doctest::Approx(0.0));

    // three high-scoring true positives at IoU ~0.9 plus one trailing false
    // positive: PR envelope stays at precision 1 through full recall
    DetectionSet preds;
    for (std::size_t i = 0; i < 3; ++i) {
        auto box = gt.boxes[i];
        box.center_x += 0.2;
        box.score = 0.9 - 0.1 * static_cast<double>(i);
        preds.boxes.push_back(box);
    }
    preds.boxes.push_back(make_box(50, 50, 4, 2, 0, 0.5));
    CHECK(rotated_iou(preds.boxes[0], gt.boxes[0]) > 0.5);
    CHECK(average_precision(preds, gt, 0.5) == doctest::Approx(1.0));

    // false positive outranking everything: AP drops below 1
    preds.boxes.back().score = 0.95;
    CHECK(average_precision(preds, gt, 0.5) < 1.0);
}

TEST_CASE("average_precision is invariant to monotone score rescaling") {
    Rng rng(0xacebull);
    for (int trial = 0; trial < 50; ++trial) {
        const auto gt = random_set(rng, 6, 15.0);
        DetectionSet preds = random_set(rng, 8, 15.0);
        for (int i = 0; i < 4; ++i) {
            auto box = gt.boxes[static_cast<std::size_t>(i)];
            box.center_x += rng.uniform(-0.5, 0.5);
            box.score = rng.unit();
            preds.boxes.push_back(box);
        }
        const double base = average_precision(preds, gt, 0.5);
        DetectionSet rescaled = preds;
        for (auto& box : rescaled.boxes) box.score = 0.1 + 0.5 * std::tanh(box.score) ;
        CHECK(average_precision(rescaled, gt, 0.5) == doctest::Approx(base).epsilon(1e-12));
    }
}

TEST_CASE("yaw normalization") {
    CHECK(normalize_yaw(0.0) == doctest::Approx(0.0));
    CHECK(normalize_yaw(kPi) == doctest::Approx(-kPi));
    CHECK(normalize_yaw(3 * kPi / 2) == doctest::Approx(-kPi / 2));
    CHECK(normalize_yaw(-5 * kPi) == doctest::Approx(-kPi));
    const auto box = make_box(0, 0, 1, 1, 7.0);
    CHECK(box.yaw >= -kPi);
    CHECK(box.yaw < kPi);
}
