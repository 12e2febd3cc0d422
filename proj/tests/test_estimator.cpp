// SPDX-License-Identifier: MIT
#include "oplab/estimator.hpp"
#include "oplab/noise.hpp"
#include "oplab/operators.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>

using namespace oplab;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("cell_index boundary conventions", "[estimator]") {
    const auto s = SpectrumProfile::explicit_list({1.0, 0.25});
    const HistogramPartition partition(4.0, {4, 2}, s);
    // 0 goes to the interval whose left endpoint is 0
    CHECK(partition.cell_index(std::vector<double>{0.0, 0.0}) == partition.flatten(std::vector<std::size_t>{2, 1}));
    CHECK_FALSE(partition.cell_index(std::vector<double>{2.0 * std::sqrt(4.0), 0.0}));
    // the right edge is closed
    CHECK(partition.cell_index(std::vector<double>{2.0, 1.0}) == partition.flatten(std::vector<std::size_t>{3, 1}));
    CHECK(partition.cell_index(std::vector<double>{-2.0, -1.0}) == 0u);
}

TEST_CASE("cell frequencies of uniform points", "[estimator]") {
    const auto s = SpectrumProfile::algebraic(2.0);
    const HistogramPartition partition(1.5, {2, 3}, s);
    Rng rng(12);
    std::vector<double> freq(partition.cell_count(), 0.0);
    const std::size_t m = 100000;
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (std::size_t i = 0; i < m; ++i) {
        const std::vector<double> x = {partition.half_width(0) * u(rng), partition.half_width(1) * u(rng)};
        freq[*partition.cell_index(x)] += 1.0;
    }
    const double p = 1.0 / 6.0;
    for (double f : freq) CHECK(std::abs(f / m - p) <= 3.0 * std::sqrt(p * (1 - p) / m));
}

TEST_CASE("fit averages each cell", "[estimator]") {
    const auto s = SpectrumProfile::explicit_list({1.0});
    const HistogramPartition partition(1.0, {2}, s);
    Dataset data{PointSet(0, 1), PointSet(0, 2)};
    for (auto [x, y0, y1] : {std::tuple{-0.7, 1.0, 2.0}, {-0.2, 3.0, 5.0}, {0.1, -1.0, 0.0}, {0.9, 4.0, 1.0}}) {
        data.inputs.push_back(std::vector<double>{x});
        data.outputs.push_back(std::vector<double>{y0, y1});
    }
    const auto est = HistogramEstimator::fit(data, partition);
    CHECK(est.predict(std::vector<double>{-0.5}) == std::vector<double>{2.0, 3.5});
    CHECK(est.predict(std::vector<double>{0.5}) == std::vector<double>{1.5, 0.5});
    CHECK(est.predict(std::vector<double>{1.5}) == std::vector<double>{0.0, 0.0});
    const auto truncated = HistogramEstimator::fit(data, partition, 1);
    CHECK(truncated.predict(std::vector<double>{-0.5}) == std::vector<double>{2.0, 0.0});
}

TEST_CASE("noiseless fits recover cellwise values", "[estimator]") {
    const auto s = SpectrumProfile::explicit_list({1.0, 0.5});
    const HistogramPartition partition(2.0, {3, 2}, s);
    const auto design = make_fixed_design(partition, partition.cell_count());
    const auto op = lift_to_operator(TentFunctional(2, s), 2, 3);
    Rng rng(0);
    const auto data = observe(op, design, NoiseModel::hilbert(0.0, 3), rng);
    const auto est = fit(data, partition);
    CHECK(est.occupied() == partition.cell_count());
    for (std::size_t i = 0; i < design.m(); ++i) {
        CHECK(est.predict(design.points.row(i)) == op(design.points.row(i)));
    }
    // constant F: every cell holds the constant
    const auto data_c = observe(FunctionPredictor(2, [](std::span<const double>, std::span<double> y) {
                                    y[0] = 0.25;
                                    y[1] = -1.0;
                                }),
                                design, NoiseModel::hilbert(0.0, 2), rng);
    for (const auto& [index, stats] : fit(data_c, partition).cells()) {
        CHECK(stats.mean == std::vector<double>{0.25, -1.0});
    }
}

TEST_CASE("truncated estimators are zero beyond r", "[estimator]") {
    const auto s = SpectrumProfile::exponential(1.0, 1.0);
    const HistogramPartition partition(3.0, {4}, s);
    const auto design = make_fixed_design(partition, 400);
    Rng rng(5);
    const auto data = observe(TestOperator::zero(), design, NoiseModel::white(1.0, 8), rng);
    const auto est = fit(data, partition, 3);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int i = 0; i < 200; ++i) {
        const auto y = est.predict(std::vector<double>{u(rng)});
        for (std::size_t j = 3; j < y.size(); ++j) CHECK(y[j] == 0.0);
    }
}

TEST_CASE("estimator json round trip", "[estimator]") {
    const auto s = SpectrumProfile::algebraic(2.0);
    const HistogramPartition partition(2.0, {3, 2}, s);
    Rng rng(2);
    const auto data = observe(TestOperator::zero(2), make_random_design(2.0, 2, s, 50, rng),
                              NoiseModel::hilbert(0.5, 2), rng);
    const auto est = fit(data, partition);
    const auto back = HistogramEstimator::from_json(nlohmann::json::parse(est.to_json().dump()));
    CHECK(back == est);
}

TEST_CASE("flat spectrum selection", "[estimator]") {
    SelectionInput in;
    in.m = 10000;
    in.sigma = 0.1;
    in.spectrum = SpectrumProfile::explicit_list({1.0});
    in.hints.d = 1;
    const auto sel = select_parameters(in);
    // E = 8, log c = (4/8)(log k) + 0
    const double c = std::sqrt(in.m / (in.sigma * in.sigma));
    CHECK_THAT(sel.c, WithinRel(c, 1e-12));
    CHECK(sel.n == std::vector<std::size_t>{1000});
    CHECK(sel.feasible);
}

TEST_CASE("algebraic rule for d", "[estimator]") {
    SelectionInput in;
    in.m = 1000000;
    in.sigma = 1.0;
    in.spectrum = SpectrumProfile::algebraic(2.0);
    const auto sel = select_parameters(in);
    const double lk = std::log(1e6);
    CHECK(static_cast<std::size_t>(std::floor(0.5 * lk / std::log(lk))) == 2u);
    CHECK((sel.d == 2 || sel.d_reduced));
    CHECK(sel.feasible);
}

TEST_CASE("feasibility boundary is accepted with margin 0", "[estimator]") {
    // flat d = 1: c = sqrt(k) so c sqrt(lambda_1) = 1 at k = 1
    SelectionInput in;
    in.m = 1;
    in.sigma = 1.0;
    in.spectrum = SpectrumProfile::explicit_list({1.0});
    in.hints.d = 1;
    const auto sel = select_parameters(in);
    CHECK(sel.feasible);
    CHECK_THAT(sel.margin, WithinAbs(0.0, 1e-12));
    in.sigma = 2.0;
    CHECK_THROWS_AS(select_parameters(in), InfeasibleError);
}

TEST_CASE("infeasible selection reports the minimum k", "[estimator]") {
    SelectionInput in;
    in.m = 1;
    in.sigma = 10.0;
    in.spectrum = SpectrumProfile::exponential(1.0, 1.0);
    try {
        (void)select_parameters(in);
        FAIL("expected InfeasibleError");
    } catch (const InfeasibleError& e) {
        REQUIRE(std::isfinite(e.min_k()));
        CHECK(e.min_k() > 0.01);
    }
}
