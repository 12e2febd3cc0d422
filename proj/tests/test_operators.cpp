// SPDX-License-Identifier: MIT
#include "oplab/operators.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

using namespace oplab;
using Catch::Matchers::WithinRel;

namespace {

std::vector<double> random_point(std::size_t dim, double scale, Rng& rng) {
    std::uniform_real_distribution<double> u(-scale, scale);
    std::vector<double> x(dim);
    for (auto& v : x) v = u(rng);
    return x;
}

double distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
}

}  // namespace

TEST_CASE("tent values", "[operators]") {
    const auto s = SpectrumProfile::algebraic(2.0);
    const std::vector<double> zero(3, 0.0);
    CHECK(tent(zero, 3, s) == 1.0);
    const std::vector<double> edge = {std::sqrt(s.eigenvalue(1)), 0.0, 0.0};
    CHECK(tent(edge, 3, s) == 0.0);
}

TEST_CASE("tent Lipschitz constant holds on random pairs", "[operators]") {
    const auto s = SpectrumProfile::algebraic(2.0);
    const TentFunctional f(3, s);
    Rng rng(1);
    double worst = 0.0;
    for (int i = 0; i < 10000; ++i) {
        const auto x = random_point(4, 0.6, rng);
        const auto y = random_point(4, 0.6, rng);
        worst = std::max(worst, std::abs(f.value(x) - f.value(y)) / distance(x, y));
    }
    CHECK(worst <= std::sqrt(s.inv_sum(3)) * (1.0 + 1e-6));
    CHECK(f.lipschitz() == std::sqrt(s.inv_sum(3)));
}

TEST_CASE("bump functional", "[operators]") {
    const auto s = SpectrumProfile::algebraic(2.0);
    const double a = std::numbers::sqrt3;
    const CenterGrid grid(a, a / 8.0, 2);
    REQUIRE(grid.count() == 64u);
    const auto lambdas = std::vector<double>{s.eigenvalue(1), s.eigenvalue(2)};
    std::vector<std::uint8_t> theta(64, 0);
    const BumpFunctional zero(BumpFamilyParams{grid, theta, 2.0, lambdas});
    theta[5] = theta[40] = 1;
    const BumpFunctional f(BumpFamilyParams{grid, theta, 2.0, lambdas});
    const double peak = 2.0 * grid.h / std::sqrt(s.inv_sum(2));
    CHECK_THAT(f.peak(), WithinRel(peak, 1e-15));

    for (std::uint64_t idx : {5u, 40u}) {
        auto c = grid.center(idx);
        for (std::size_t i = 0; i < 2; ++i) c[i] *= std::sqrt(lambdas[i]);
        CHECK_THAT(f.value(c), WithinRel(peak, 1e-12));
        CHECK(zero.value(c) == 0.0);
    }
    auto inactive = grid.center(6);
    for (std::size_t i = 0; i < 2; ++i) inactive[i] *= std::sqrt(lambdas[i]);
    CHECK(f.value(inactive) == 0.0);

    Rng rng(2);
    double sup = 0.0;
    for (int i = 0; i < 100000; ++i) sup = std::max(sup, std::abs(f.value(random_point(2, a, rng))));
    CHECK(sup <= peak);
    CHECK_THROWS_AS(CenterGrid(1.0, 0.2, 1), std::invalid_argument);
}

TEST_CASE("lifted operators", "[operators]") {
    const auto s = SpectrumProfile::exponential(1.0, 1.0);
    const auto op = lift_to_operator(TentFunctional(2, s), 1);
    CHECK(op.family_name() == "tent_product");
    CHECK(op.bound() == 1.0);
    CHECK(op.smoothness_bound(3.0) == 1.0);
    Rng rng(4);
    for (int i = 0; i < 100; ++i) {
        const auto x = random_point(2, 0.5, rng);
        const auto y = op(x);
        CHECK(std::abs(y[0]) == TentFunctional(2, s).value(x));
    }
    const auto flat = lift_to_operator(TentFunctional(1, s, 0.0), 2, 3);
    CHECK(flat.bound() == 0.0);
    CHECK(flat(std::vector<double>{0.0}) == std::vector<double>{0.0, 0.0, 0.0});
    CHECK(TestOperator::zero(2).bound() == 0.0);
    CHECK_THROWS_AS(lift_to_operator(TentFunctional(1, s), 0), std::invalid_argument);
}

TEST_CASE("clipped linear", "[operators]") {
    Eigen::MatrixXd A(2, 3);
    A << 0.3, 0.2, 0.0, 0.1, -0.4, 0.2;
    A /= operator_norm(A);
    const ClippedLinear op(A, 0.5, 1.0);
    CHECK(clipped_linear(std::vector<double>{0, 0, 0}, op) == std::vector<double>{0.0, 0.0});
    const std::vector<double> small = {0.1, 0.05, -0.1};
    const auto y = clipped_linear(small, op);
    Eigen::Vector3d v(small[0], small[1], small[2]);
    const Eigen::Vector2d exact = A * v;
    CHECK(y[0] == exact[0]);
    CHECK(y[1] == exact[1]);

    Rng rng(6);
    double worst = 0.0;
    double largest = 0.0;
    for (int i = 0; i < 10000; ++i) {
        const auto x = random_point(3, 2.0, rng);
        const auto z = random_point(3, 2.0, rng);
        const auto fx = clipped_linear(x, op);
        const auto fz = clipped_linear(z, op);
        worst = std::max(worst, distance(fx, fz) / distance(x, z));
        largest = std::max(largest, std::hypot(fx[0], fx[1]));
    }
    CHECK(worst <= 1.0 + 1e-6);
    CHECK(largest <= 0.5 + 1e-12);
    CHECK_THROWS_AS(ClippedLinear(2.0 * A, 1.0, 1.0), Error);
    // a weight matrix with norm exactly L certifies
    CHECK_NOTHROW(ClippedLinear(Eigen::MatrixXd::Identity(1, 1), 1.0, 1.0));
}

TEST_CASE("operator norm matches the SVD", "[operators]") {
    Eigen::MatrixXd A = Eigen::MatrixXd::Random(5, 4);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(A);
    CHECK_THAT(operator_norm(A), WithinRel(svd.singularValues()[0], 1e-10));
}
