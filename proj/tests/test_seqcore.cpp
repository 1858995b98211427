#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "tss/seqcore.hpp"

using namespace tss;

TEST_CASE("segments_from_labels encodes runs") {
    const std::vector<int> labels = {1, 1, 2, 2, 2};
    const SegmentList segs = segments_from_labels(labels);
    REQUIRE(segs.size() == 2);
    CHECK(segs[0] == Segment{1, 0, 2});
    CHECK(segs[1] == Segment{2, 2, 5});

    CHECK(segments_from_labels(std::vector<int>{3, 3, 3}) == SegmentList{{3, 0, 3}});
    CHECK(segments_from_labels(std::vector<int>{0, 1, 0}) ==
          SegmentList{{0, 0, 1}, {1, 1, 2}, {0, 2, 3}});
}

TEST_CASE("segments_from_labels rejects empty input") {
    CHECK_THROWS_AS(segments_from_labels(std::vector<int>{}), EmptySequence);
}

TEST_CASE("segment round trip over random sequences") {
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<int> len(1, 60), cls(0, 4);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<int> labels(static_cast<size_t>(len(rng)));
        for (int& y : labels) y = cls(rng);
        const SegmentList segs = segments_from_labels(labels);
        CHECK(labels_from_segments(segs) == labels);
        for (size_t i = 0; i + 1 < segs.size(); ++i) {
            CHECK(segs[i].label != segs[i + 1].label);
            CHECK(segs[i].end == segs[i + 1].start);
        }
    }
}

TEST_CASE("action_frequency_from_labels counts proportions") {
    CHECK(action_frequency_from_labels(std::vector<int>{0, 0, 1, 1}, 2) ==
          ActionFrequency{0.5, 0.5});
    CHECK(action_frequency_from_labels(std::vector<int>{0, 1, 1, 1}, 3) ==
          ActionFrequency{0.25, 0.75, 0.0});
    CHECK(action_frequency_from_labels(std::vector<int>{2, 2, 2, 2}, 3) ==
          ActionFrequency{0.0, 0.0, 1.0});
    CHECK_THROWS_AS(action_frequency_from_labels(std::vector<int>{0, 3}, 3), LabelOutOfRange);
}

TEST_CASE("soft_action_frequency is the column mean") {
    Matrix uniform(4, 5, 0.2);
    for (double f : soft_action_frequency(uniform)) CHECK(f == doctest::Approx(0.2));

    Matrix p(2, 2);
    p.at(0, 0) = 0.9;
    p.at(0, 1) = 0.1;
    p.at(1, 0) = 0.5;
    p.at(1, 1) = 0.5;
    const ActionFrequency f = soft_action_frequency(p);
    CHECK(f[0] == doctest::Approx(0.7).epsilon(1e-12));
    CHECK(f[1] == doctest::Approx(0.3).epsilon(1e-12));
}

TEST_CASE("soft frequency of one-hot rows equals the label frequency") {
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<int> len(1, 40), cls(0, 3);
    for (int trial = 0; trial < 20; ++trial) {
        const int K = 4;
        std::vector<int> labels(static_cast<size_t>(len(rng)));
        for (int& y : labels) y = cls(rng);
        Matrix onehot(static_cast<int>(labels.size()), K);
        for (size_t t = 0; t < labels.size(); ++t) onehot.at(static_cast<int>(t), labels[t]) = 1.0;

        const ActionFrequency soft = soft_action_frequency(onehot);
        const ActionFrequency hard = action_frequency_from_labels(labels, K);
        for (int k = 0; k < K; ++k)
            CHECK(std::abs(soft[static_cast<size_t>(k)] - hard[static_cast<size_t>(k)]) <= 1e-12);
    }
}

TEST_CASE("kl_divergence closed forms") {
    CHECK(kl_divergence({0.3, 0.7}, {0.3, 0.7}) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(kl_divergence({1.0, 0.0}, {0.5, 0.5}) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    // Clamped second entry: 0.5*log(0.5/(1-1e-8)) + 0.5*log(0.5/1e-8).
    CHECK(kl_divergence({0.5, 0.5}, {1.0 - 1e-8, 1e-8}) ==
          doctest::Approx(8.517193196416239).epsilon(1e-9));
}

TEST_CASE("kl_divergence properties") {
    CHECK_THROWS_AS(kl_divergence({0.5, 0.5}, {1.0}), DimensionMismatch);

    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 100; ++trial) {
        const auto q = testutil::random_simplex(4, rng);
        const auto p = testutil::random_simplex(4, rng);
        CHECK(kl_divergence(q, p) >= 0.0);
        CHECK(kl_divergence(q, q) <= 1e-12);
    }

    // Asymmetry.
    const ActionFrequency q = {0.9, 0.1}, p = {0.5, 0.5};
    CHECK(kl_divergence(q, p) != doctest::Approx(kl_divergence(p, q)).epsilon(1e-6));
}

TEST_CASE("is_row_stochastic") {
    Matrix good(2, 2, 0.5);
    CHECK(is_row_stochastic(good));
    good.at(0, 0) = 0.7;
    CHECK_FALSE(is_row_stochastic(good));
    good.at(0, 0) = -0.5;
    good.at(0, 1) = 1.5;
    CHECK_FALSE(is_row_stochastic(good));
}
