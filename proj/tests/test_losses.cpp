#include <cmath>
#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "tss/losses.hpp"

using namespace tss;

namespace {

Matrix one_hot_rows(const std::vector<int>& labels, int num_classes) {
    Matrix m(static_cast<int>(labels.size()), num_classes);
    for (size_t t = 0; t < labels.size(); ++t) m.at(static_cast<int>(t), labels[t]) = 1.0;
    return m;
}

}  // namespace

TEST_CASE("classification_loss closed forms") {
    const std::vector<int> y = {0, 1, 2};
    CHECK(classification_loss(one_hot_rows(y, 3), y).value == doctest::Approx(0.0).epsilon(1e-9));

    Matrix uniform(5, 4, 0.25);
    CHECK(classification_loss(uniform, std::vector<int>{0, 1, 2, 3, 0}).value ==
          doctest::Approx(std::log(4.0)).epsilon(1e-12));

    Matrix p(1, 2);
    p.at(0, 0) = 0.9;
    p.at(0, 1) = 0.1;
    const LossResult r = classification_loss(p, std::vector<int>{0});
    CHECK(r.value == doctest::Approx(-std::log(0.9)).epsilon(1e-12));
    CHECK(r.grad.at(0, 0) == doctest::Approx(-1.0 / 0.9).epsilon(1e-12));
    CHECK(r.grad.at(0, 1) == 0.0);

    CHECK_THROWS_AS(classification_loss(p, std::vector<int>{0, 1}), DimensionMismatch);
}

TEST_CASE("soft-target classification reduces to the hard form on one-hot targets") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 10; ++trial) {
        const Matrix p = testutil::random_prob_matrix(6, 3, rng);
        std::vector<int> y(6);
        std::uniform_int_distribution<int> cls(0, 2);
        for (int& v : y) v = cls(rng);

        const LossResult hard = classification_loss(p, y);
        const LossResult soft = classification_loss(p, one_hot_rows(y, 3));
        CHECK(hard.value == soft.value);
        for (size_t i = 0; i < hard.grad.data.size(); ++i)
            CHECK(hard.grad.data[i] == soft.grad.data[i]);
    }
}

TEST_CASE("smoothing_loss closed forms") {
    // Constant over time -> 0.
    Matrix logp(4, 3, -1.0);
    CHECK(smoothing_loss(logp, 4.0).value == 0.0);

    // Single pair with |delta| = 5 under tau = 4 contributes tau^2 = 16.
    Matrix clamped(2, 1);
    clamped.at(0, 0) = 0.0;
    clamped.at(1, 0) = 5.0;
    const LossResult at_clamp = smoothing_loss(clamped, 4.0);
    CHECK(at_clamp.value == doctest::Approx(16.0 / 2.0).epsilon(1e-12));
    CHECK(at_clamp.grad.at(0, 0) == 0.0);
    CHECK(at_clamp.grad.at(1, 0) == 0.0);

    // Deltas (0.1, 0.1) over T=2, K=2 -> (0.01 + 0.01) / 4.
    Matrix pair(2, 2);
    pair.at(0, 0) = -1.0;
    pair.at(0, 1) = -2.0;
    pair.at(1, 0) = -0.9;
    pair.at(1, 1) = -1.9;
    CHECK(smoothing_loss(pair, 4.0).value == doctest::Approx(0.005).epsilon(1e-9));

    Matrix single(1, 2, -1.0);
    CHECK_THROWS_AS(smoothing_loss(single, 4.0), SequenceTooShort);
}

TEST_CASE("smoothing_loss is invariant to a consistent class permutation") {
    std::mt19937_64 rng(5);
    const Matrix p = testutil::random_prob_matrix(8, 4, rng);
    Matrix permuted(8, 4);
    const int perm[4] = {2, 0, 3, 1};
    for (int t = 0; t < 8; ++t)
        for (int k = 0; k < 4; ++k) permuted.at(t, perm[k]) = p.at(t, k);
    CHECK(smoothing_loss_from_probs(p, 4.0).value ==
          doctest::Approx(smoothing_loss_from_probs(permuted, 4.0).value).epsilon(1e-12));
}

TEST_CASE("pseudo_label_loss closed forms and tie rule") {
    const std::vector<int> y = {0, 1};
    CHECK(pseudo_label_loss(one_hot_rows(y, 2)).value == doctest::Approx(0.0).epsilon(1e-9));

    Matrix p(1, 2);
    p.at(0, 0) = 0.9;
    p.at(0, 1) = 0.1;
    CHECK(pseudo_label_loss(p).value == doctest::Approx(-std::log(0.9)).epsilon(1e-12));

    Matrix tie(2, 2);
    tie.at(0, 0) = 0.5;
    tie.at(0, 1) = 0.5;
    tie.at(1, 0) = 0.2;
    tie.at(1, 1) = 0.8;
    const LossResult r = pseudo_label_loss(tie);
    CHECK(r.value == doctest::Approx((-std::log(0.5) - std::log(0.8)) / 2.0).epsilon(1e-9));
    // Tie in the first row resolves to class 0.
    CHECK(r.grad.at(0, 0) != 0.0);
    CHECK(r.grad.at(0, 1) == 0.0);
}

TEST_CASE("pseudo_label_loss lower-bounds classification_loss") {
    std::mt19937_64 rng(9);
    std::uniform_int_distribution<int> cls(0, 3);
    for (int trial = 0; trial < 20; ++trial) {
        const Matrix p = testutil::random_prob_matrix(7, 4, rng);
        std::vector<int> y(7);
        for (int& v : y) v = cls(rng);
        CHECK(pseudo_label_loss(p).value <= classification_loss(p, y).value + 1e-12);
    }
}

TEST_CASE("entropy_loss closed forms") {
    CHECK(entropy_loss(one_hot_rows({0, 1, 0}, 2)).value == doctest::Approx(0.0).epsilon(1e-7));

    Matrix uniform(3, 2, 0.5);
    CHECK(entropy_loss(uniform).value == doctest::Approx(std::log(2.0)).epsilon(1e-12));

    Matrix p(1, 2);
    p.at(0, 0) = 0.9;
    p.at(0, 1) = 0.1;
    CHECK(entropy_loss(p).value == doctest::Approx(0.32508297339144825).epsilon(1e-9));
}

TEST_CASE("associate_anchor picks the KL-nearest anchor") {
    const std::vector<Anchor> anchors = {{{1.0, 0.0}, "a"}, {{0.0, 1.0}, "b"}};
    CHECK(associate_anchor({0.9, 0.1}, anchors).first == 0);
    CHECK(associate_anchor({0.0, 1.0}, anchors).first == 1);

    // Activity filter excludes the globally nearest anchor.
    CHECK(associate_anchor({0.9, 0.1}, anchors, "b").first == 1);

    CHECK_THROWS_AS(associate_anchor({0.5, 0.5}, {}, ""), NoAnchorAvailable);
    CHECK_THROWS_AS(associate_anchor({0.5, 0.5}, anchors, "missing"), NoAnchorAvailable);
}

TEST_CASE("associate_anchor matches brute force under an activity filter") {
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<Anchor> anchors;
        for (int i = 0; i < 6; ++i)
            anchors.push_back({testutil::random_simplex(3, rng), i % 2 == 0 ? "x" : "y"});
        const auto p = testutil::random_simplex(3, rng);

        int expect = -1;
        double best = 0.0;
        for (size_t i = 0; i < anchors.size(); ++i) {
            if (anchors[i].activity != "y") continue;
            const double kl = kl_divergence(anchors[i].frequency, p);
            if (expect < 0 || kl < best) {
                expect = static_cast<int>(i);
                best = kl;
            }
        }
        CHECK(associate_anchor(p, anchors, "y").first == expect);
    }
}

TEST_CASE("affinity_loss value and closed forms") {
    // One-hot predictions matching an anchor's histogram give zero loss.
    Matrix onehot = one_hot_rows({0, 0, 1, 1}, 2);
    const std::vector<Anchor> anchors = {{{0.5, 0.5}, ""}};
    CHECK(affinity_loss(onehot, anchors).value == doctest::Approx(0.0).epsilon(1e-12));

    Matrix half(1, 2, 0.5);
    CHECK(affinity_loss(half, {{{1.0, 0.0}, ""}}).value ==
          doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("affinity_loss equals kl against the soft frequency") {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 20; ++trial) {
        const Matrix p = testutil::random_prob_matrix(6, 3, rng);
        std::vector<Anchor> anchors;
        for (int i = 0; i < 4; ++i) anchors.push_back({testutil::random_simplex(3, rng), ""});
        const auto [index, anchor] = associate_anchor(soft_action_frequency(p), anchors);
        (void)index;
        CHECK(affinity_loss(p, anchors).value ==
              doctest::Approx(kl_divergence(anchor, soft_action_frequency(p))).epsilon(1e-15));
    }
}

TEST_CASE("loss gradients agree with central finite differences") {
    std::mt19937_64 rng(33);
    std::uniform_int_distribution<int> cls(0, 2);

    for (int trial = 0; trial < 5; ++trial) {
        const Matrix p = testutil::random_prob_matrix(5, 3, rng);
        std::vector<int> y(5);
        for (int& v : y) v = cls(rng);

        {
            const LossResult hard = classification_loss(p, y);
            CHECK(testutil::gradient_rel_error(
                      [&y](const Matrix& m) { return classification_loss(m, y).value; }, p,
                      hard.grad) <= 1e-4);

            const Matrix soft_targets = testutil::random_prob_matrix(5, 3, rng);
            const LossResult soft = classification_loss(p, soft_targets);
            CHECK(testutil::gradient_rel_error(
                      [&soft_targets](const Matrix& m) {
                          return classification_loss(m, soft_targets).value;
                      },
                      p, soft.grad) <= 1e-4);

            const LossResult sm = smoothing_loss_from_probs(p, 4.0);
            CHECK(testutil::gradient_rel_error(
                      [](const Matrix& m) { return smoothing_loss_from_probs(m, 4.0).value; }, p,
                      sm.grad) <= 1e-4);

            const LossResult pse = pseudo_label_loss(p);
            CHECK(testutil::gradient_rel_error(
                      [](const Matrix& m) { return pseudo_label_loss(m).value; }, p, pse.grad) <=
                  1e-4);

            const LossResult ent = entropy_loss(p);
            CHECK(testutil::gradient_rel_error(
                      [](const Matrix& m) { return entropy_loss(m).value; }, p, ent.grad) <= 1e-4);

            std::vector<Anchor> anchors;
            for (int i = 0; i < 3; ++i) anchors.push_back({testutil::random_simplex(3, rng), ""});
            const LossResult aff = affinity_loss(p, anchors);
            CHECK(testutil::gradient_rel_error(
                      [&anchors](const Matrix& m) { return affinity_loss(m, anchors).value; }, p,
                      aff.grad) <= 1e-4);
        }
    }
}

TEST_CASE("total_objective weighted sums") {
    const int rows = 2, cols = 2;
    auto part = [&](double value) {
        LossResult r;
        r.value = value;
        r.grad = Matrix(rows, cols, value);
        return r;
    };
    LossWeights w;  // alpha 0.1, beta 0.01, gamma 0.15

    LossParts zero;
    zero.cls = part(0.0);
    zero.sm = part(0.0);
    CHECK(total_objective(zero, w, true).value == 0.0);

    LossParts labelled;
    labelled.cls = part(1.0);
    labelled.sm = part(2.0);
    const LossResult lab = total_objective(labelled, w, true);
    CHECK(lab.value == doctest::Approx(1.3).epsilon(1e-12));
    CHECK(lab.grad.at(0, 0) == doctest::Approx(1.0 * 1.0 + 0.15 * 2.0).epsilon(1e-12));

    LossParts unlabelled;
    unlabelled.aff = part(1.0);
    unlabelled.cont = part(1.0);
    unlabelled.sm = part(0.0);
    CHECK(total_objective(unlabelled, w, false).value == doctest::Approx(0.11).epsilon(1e-12));

    LossParts missing_cls;
    missing_cls.sm = part(0.0);
    CHECK_THROWS_AS(total_objective(missing_cls, w, true), MissingLossTerm);
    CHECK_THROWS_AS(total_objective(missing_cls, w, false), MissingLossTerm);

    LossParts no_sm;
    no_sm.cls = part(1.0);
    CHECK_THROWS_AS(total_objective(no_sm, w, true), MissingLossTerm);
}
