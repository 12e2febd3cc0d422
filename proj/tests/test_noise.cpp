// SPDX-License-Identifier: MIT
#include "oplab/io.hpp"
#include "oplab/noise.hpp"
#include "oplab/operators.hpp"
#include "oplab/partition.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>

using namespace oplab;
using Catch::Matchers::WithinRel;

namespace {

std::vector<double> column_second_moments(const PointSet& pts) {
    std::vector<double> out(pts.dim(), 0.0);
    for (std::size_t i = 0; i < pts.size(); ++i) {
        for (std::size_t j = 0; j < pts.dim(); ++j) out[j] += pts.row(i)[j] * pts.row(i)[j];
    }
    for (auto& v : out) v /= static_cast<double>(pts.size());
    return out;
}

}  // namespace

TEST_CASE("hilbert variances are a normalized profile", "[noise]") {
    const auto model = NoiseModel::hilbert(0.3, 10);
    CHECK(model.materialized_trace() <= 1.0);
    CHECK_THAT(model.variance(1), WithinRel(0.5, 1e-12));
    for (std::size_t j = 1; j < 10; ++j) CHECK(model.variance(j + 1) <= model.variance(j));
    const auto alg = NoiseModel::hilbert(1.0, 6, SpectrumProfile::algebraic(2.0));
    CHECK(alg.materialized_trace() < 1.0);
    CHECK_THROWS_AS(NoiseModel::hilbert(-1.0, 4), std::invalid_argument);
    CHECK_THROWS_AS(NoiseModel::white(1.0, 0), std::invalid_argument);
}

TEST_CASE("sampled noise variances", "[noise]") {
    Rng rng(8);
    const auto hil = NoiseModel::hilbert(1.0, 4);
    const auto v = column_second_moments(sample_noise(hil, 100000, rng));
    for (std::size_t j = 0; j < 4; ++j) CHECK_THAT(v[j], WithinRel(hil.variance(j + 1), 0.05));
    const auto w = column_second_moments(sample_noise(NoiseModel::white(1.0, 5), 100000, rng));
    for (double x : w) CHECK_THAT(x, WithinRel(1.0, 0.05));
    const auto zero = sample_noise(NoiseModel::white(0.0, 3), 10, rng);
    for (double x : zero.data()) CHECK(x == 0.0);
}

TEST_CASE("observe adds scaled noise to F", "[noise]") {
    const auto spectrum = SpectrumProfile::explicit_list({1.0});
    const HistogramPartition partition(1.0, {4}, spectrum);
    const auto design = make_fixed_design(partition, 100000);
    const auto op = lift_to_operator(TentFunctional(1, spectrum), 1);
    Rng rng(9);

    const auto clean = observe(op, design, NoiseModel::hilbert(0.0, 2), rng);
    REQUIRE(clean.size() == design.m());
    for (std::size_t i = 0; i < clean.size(); ++i) {
        CHECK(clean.outputs.row(i)[0] == TentFunctional(1, spectrum).value(clean.inputs.row(i)));
        CHECK(clean.outputs.row(i)[1] == 0.0);
    }

    const double sigma = 0.4;
    const auto model = NoiseModel::hilbert(sigma, 3);
    const auto noisy = observe(TestOperator::zero(), design, model, rng);
    const auto v = column_second_moments(noisy.outputs);
    for (std::size_t j = 0; j < 3; ++j) CHECK_THAT(v[j], WithinRel(sigma * sigma * model.variance(j + 1), 0.05));

    const auto white = observe(op, design, NoiseModel::white(1.0, 6), rng);
    CHECK(white.outputs.dim() == 6);
}

TEST_CASE("datasets export as csv", "[noise]") {
    const auto spectrum = SpectrumProfile::explicit_list({1.0});
    const HistogramPartition partition(1.0, {2}, spectrum);
    Rng rng(1);
    const auto data = observe(TestOperator::zero(1), make_fixed_design(partition, 2), NoiseModel::white(0.0, 2), rng);
    CHECK(dataset_csv(data).str() == "x1,y1,y2\n-0.5,0,0\n0.5,0,0\n");
}
