// SPDX-License-Identifier: MIT
#include "oplab/io.hpp"
#include "oplab/measure.hpp"
#include "oplab/partition.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

using namespace oplab;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("law constants", "[measure]") {
    const auto u = CoordinateLaw(LawKind::uniform).constants();
    CHECK_THAT(u.a, WithinRel(std::numbers::sqrt3, 1e-15));
    CHECK_THAT(u.b, WithinRel(1.0 / (2.0 * std::numbers::sqrt3), 1e-15));
    CHECK_THAT(u.iota, WithinRel(1.0, 1e-15));
    const auto g = CoordinateLaw(LawKind::gaussian).constants();
    CHECK(g.a == 1.0);
    CHECK_THAT(g.b, WithinAbs(0.241971, 1e-6));
    CHECK_THAT(g.iota, WithinAbs(0.483941, 1e-6));
}

TEST_CASE("coordinate variances match the eigenvalues", "[measure]") {
    const auto spectrum = SpectrumProfile::algebraic(2.0);
    for (LawKind kind : {LawKind::uniform, LawKind::gaussian}) {
        const InputMeasure measure(spectrum, CoordinateLaw(kind), 4);
        Rng rng(11);
        const auto pts = measure.sample(100000, rng);
        for (std::size_t j = 0; j < 4; ++j) {
            double s = 0.0;
            for (std::size_t i = 0; i < pts.size(); ++i) s += pts.row(i)[j] * pts.row(i)[j];
            CHECK_THAT(s / static_cast<double>(pts.size()), WithinRel(spectrum.eigenvalue(j + 1), 0.05));
        }
    }
}

TEST_CASE("uniform samples stay in their support", "[measure]") {
    const auto spectrum = SpectrumProfile::exponential(1.0, 1.0);
    const InputMeasure measure(spectrum, CoordinateLaw(LawKind::uniform), 5);
    Rng rng(3);
    const auto pts = measure.sample(20000, rng);
    for (std::size_t i = 0; i < pts.size(); ++i) {
        for (std::size_t j = 0; j < 5; ++j) {
            CHECK(std::abs(pts.row(i)[j]) <= std::sqrt(3.0 * spectrum.eigenvalue(j + 1)));
        }
    }
    CHECK(measure.tail_energy() == spectrum.tail_sum(5));
    CHECK_THROWS_AS(measure.sample(0, rng), std::invalid_argument);
}

TEST_CASE("fixed design fills each cell evenly", "[measure]") {
    const auto spectrum = SpectrumProfile::explicit_list({1.0, 0.5});
    const HistogramPartition partition(2.0, {2, 2}, spectrum);
    const auto design = make_fixed_design(partition, 8);
    REQUIRE(design.m() == 8);
    std::vector<int> counts(4, 0);
    for (std::size_t i = 0; i < design.m(); ++i) {
        const auto cell = partition.cell_index(design.points.row(i));
        REQUIRE(cell);
        ++counts[*cell];
        CHECK(*cell == i / 2);
    }
    for (int c : counts) CHECK(c == 2);
    CHECK_THROWS_AS(make_fixed_design(partition, 3), InfeasibleError);
    // m is rounded down to a multiple of n
    CHECK(make_fixed_design(partition, 11).m() == 8);
}

TEST_CASE("random design is uniform on the box", "[measure]") {
    const auto spectrum = SpectrumProfile::algebraic(2.0);
    const double R = 2.0;
    Rng rng(5);
    const std::size_t m = 100000;
    const auto design = make_random_design(R, 2, spectrum, m, rng);
    const HistogramPartition partition(R, {3, 2}, spectrum);
    std::vector<double> freq(partition.cell_count(), 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        const auto x = design.points.row(i);
        CHECK(std::abs(x[0]) <= std::sqrt(R * spectrum.eigenvalue(1)));
        CHECK(std::abs(x[1]) <= std::sqrt(R * spectrum.eigenvalue(2)));
        CHECK(coord(x, 2) == 0.0);
        freq[*partition.cell_index(x)] += 1.0;
    }
    const double p = 1.0 / 6.0;
    const double sd = std::sqrt(p * (1.0 - p) / static_cast<double>(m));
    for (double f : freq) CHECK(std::abs(f / static_cast<double>(m) - p) <= 3.0 * sd);
}

TEST_CASE("design exports as csv", "[measure]") {
    const HistogramPartition partition(1.0, {2}, SpectrumProfile::explicit_list({1.0}));
    const auto csv = design_csv(make_fixed_design(partition, 2)).str();
    CHECK(csv == "x1\n-0.5\n0.5\n");
}
