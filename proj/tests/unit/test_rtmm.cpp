// SPDX-License-Identifier: Apache-2.0
#include "doctest.h"
#include "lmp/rng.hpp"
#include "lmp/rtmm.hpp"
#include "oracles.hpp"

using namespace lmp;

TEST_CASE("lambda = 1 equals plain concatenation") {
    const auto w = make_block_weights(2, 1, 2, 4, 2);
    Rng rng(6, 1);
    const HiddenStates h{random_normal(1, 4, rng), random_normal(2, 4, rng)};
    const std::vector<Matrix> k{random_normal(1, 2, rng), random_normal(1, 2, rng)};
    const std::vector<Matrix> v{random_normal(1, 2, rng), random_normal(1, 2, rng)};
    const auto a = extended_attention(h, w, {k, v, 1.0});
    const auto b = concat_attention(h, w, k, v);
    CHECK(bitwise_equal(a.attention.values, b.attention.values));
    CHECK(bitwise_equal(a.hidden.video, b.hidden.video));
    CHECK(a.attention.ref_len == 1);
}

TEST_CASE("small seeded instance matches oracle and steers with lambda") {
    // m=1, n=2, r=1 with positive inner products between queries and the reference key.
    BlockWeights w;
    Matrix eye = Matrix::from_rows({{1, 0}, {0, 1}});
    w.heads = {{eye, eye, eye}};
    w.output = eye;
    w.feedforward = Matrix(2, 2);
    const HiddenStates h{Matrix::from_rows({{0.5, 0.2}}), Matrix::from_rows({{1.0, 0.3}, {0.4, 0.9}})};
    const std::vector<Matrix> k{Matrix::from_rows({{0.8, 0.7}})};
    const std::vector<Matrix> v{Matrix::from_rows({{2.0, -1.0}})};
    const auto lo = extended_attention(h, w, {k, v, 0.5});
    const auto hi = extended_attention(h, w, {k, v, 1.0});
    const auto ref = oracle::dense_attention(h, w, k, v, 0.5);
    CHECK(max_abs_diff(lo.attention.values.data, ref.mean_map.data) <= 1e-6);
    CHECK(reference_mass(hi.attention, 1) > reference_mass(lo.attention, 1));
}

TEST_CASE("reference mass examples") {
    AttentionMap none{1, 2, 0, Matrix(3, 3, 1.0 / 3.0)};
    CHECK(reference_mass(none, 0) == 0.0);

    Matrix all_ref(3, 5);
    for (std::size_t i = 0; i < 3; ++i) all_ref(i, 3) = all_ref(i, 4) = 0.5;
    CHECK(reference_mass({1, 2, 2, all_ref}, 2) == doctest::Approx(1.0));

    const AttentionMap uniform{1, 2, 2, Matrix(3, 5, 0.2)};
    CHECK(reference_mass(uniform, 2) == doctest::Approx(2.0 / 5.0));
    CHECK_THROWS(reference_mass(uniform, 6));
}

TEST_CASE("injection shape errors") {
    const auto w = make_block_weights(2, 1, 2, 4, 2);
    const HiddenStates h{Matrix(1, 4), Matrix(2, 4)};
    const std::vector<Matrix> wrong_width{Matrix(1, 3), Matrix(1, 3)};
    CHECK_THROWS_AS(extended_attention(h, w, {wrong_width, wrong_width, 0.9}), ShapeError);
    const std::vector<Matrix> one_head{Matrix(1, 2)};
    CHECK_THROWS_AS(extended_attention(h, w, {one_head, one_head, 0.9}), ShapeError);
}
