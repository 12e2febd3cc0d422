// SPDX-License-Identifier: MIT
#include "oplab/lowerbound.hpp"
#include "oplab/verify.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

using namespace oplab;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

FanoParams base_params() {
    FanoParams fp;
    fp.d = 1;
    fp.law = CoordinateLaw(LawKind::uniform).constants();
    fp.h = fp.law.a / 8.0;
    fp.m = 10;
    fp.sigma = 0.5;
    fp.L = 1.0;
    fp.B = 10.0;
    fp.spectrum = SpectrumProfile::algebraic(2.0);
    return fp;
}

}  // namespace

TEST_CASE("vg codes", "[lowerbound]") {
    Rng rng(1);
    for (std::size_t n : {8, 16, 24}) {
        const auto code = vg_code(n, rng);
        CHECK(code.M() >= static_cast<std::size_t>(std::exp2(n / 8.0)));
        CHECK(verify_vg_code(code));
        for (const auto& w : code.words) CHECK(hamming(w, w) == 0);
        for (std::size_t i = 0; i < code.words.size(); ++i) {
            for (std::size_t j = i + 1; j < code.words.size(); ++j) {
                CHECK(hamming(code.words[i], code.words[j]) >= (n + 7) / 8);
            }
        }
    }
    CHECK_THROWS_AS(vg_code(4, rng), std::invalid_argument);
    VGCode bad{8, {Codeword(8, 1), Codeword(8, 0)}};
    CHECK_FALSE(verify_vg_code(bad));
}

TEST_CASE("packing centers", "[lowerbound]") {
    CHECK(packing_centers(1.0, 0.125, 2).size() == 64);
    const auto line = packing_centers(1.0, 0.125, 1);
    REQUIRE(line.size() == 8);
    for (std::size_t k = 0; k < 8; ++k) {
        CHECK_THAT(line.row(k)[0], WithinAbs(-7.0 / 8.0 + 0.25 * static_cast<double>(k), 1e-15));
    }
    CHECK(check_packing().passed);
}

TEST_CASE("fano factor arithmetic", "[lowerbound]") {
    const double expected = (std::sqrt(2.0) / (1.0 + std::sqrt(2.0))) *
                            (1.0 - 1.0 / 8.0 - 2.0 * std::sqrt(1.0 / (16.0 * std::numbers::ln2)));
    CHECK_THAT(fano_factor(std::log(2.0)), WithinRel(expected, 1e-14));
    CHECK_THAT(expected, WithinAbs(0.16078, 1e-4));
}

TEST_CASE("instance KL special cases", "[lowerbound]") {
    auto fp = base_params();
    const auto inst = build_instance(fp);
    REQUIRE(inst.code);
    const auto noise = NoiseModel::hilbert(fp.sigma, 2);
    const InputMeasure measure(fp.spectrum, CoordinateLaw(LawKind::uniform), 2);
    Rng rng(4);
    const auto pts = measure.sample(12, rng);
    CHECK(instance_kl(inst, 0, pts, noise) == 0.0);
    PointSet far(0, 1);
    far.push_back(std::vector<double>{50.0});
    CHECK(instance_kl(inst, 1, far, noise) == 0.0);
}

TEST_CASE("instance KL at a single active center", "[lowerbound]") {
    auto fp = base_params();
    fp.m = 1;
    const auto inst = build_instance(fp);
    // pick an active center of hypothesis 1
    const auto& word = inst.code->words[1];
    std::size_t idx = 0;
    while (!word[idx]) ++idx;
    auto c = inst.grid.center(idx);
    c[0] *= std::sqrt(inst.lambdas[0]);
    PointSet pts(0, 1);
    pts.push_back(c);
    const auto noise = NoiseModel::hilbert(fp.sigma, 3);
    REQUIRE_THAT(noise.variance(1), WithinRel(0.5, 1e-12));
    const double shift = fp.L * fp.h / std::sqrt(1.0 / inst.lambdas[0]);
    const double expected = shift * shift / (2.0 * fp.sigma * fp.sigma * 0.5);
    CHECK_THAT(instance_kl(inst, 1, pts, noise), WithinRel(expected, 1e-12));
    CHECK(instance_kl(inst, 1, pts, noise) <= inst.kl_budget * (1.0 + 1e-12));
}

TEST_CASE("kl oracle over random instances", "[lowerbound]") {
    const auto r = check_kl_oracle(17, 100);
    INFO(r.detail);
    CHECK(r.passed);
}

TEST_CASE("fano_lower_bound edge cases", "[lowerbound]") {
    auto fp = base_params();
    fp.m = 100000000;
    const auto failed = build_instance(fp);
    CHECK_FALSE(failed.fano_condition);
    CHECK(fano_lower_bound(failed) == 0.0);
    CHECK_FALSE(failed.diagnostic.empty());
    fp.m = 1;
    fp.c0 = 0.0;
    CHECK(fano_lower_bound(build_instance(fp)) == 0.0);
}

TEST_CASE("d condition", "[lowerbound]") {
    auto fp = base_params();
    fp.B = 1e-3;
    CHECK_THROWS_AS(build_instance(fp), InfeasibleError);
}

TEST_CASE("optimize_h branches", "[lowerbound]") {
    auto fp = base_params();
    fp.m = 1;
    fp.sigma = 10.0;
    CHECK(optimize_h(fp).h_star == fp.law.a / 8.0);
    fp.sigma = 0.5;
    fp.m = 1000000;
    const double h1 = optimize_h(fp).h_star;
    fp.m = 2000000;
    const double h2 = optimize_h(fp).h_star;
    CHECK(h1 < fp.law.a / 8.0);
    CHECK_THAT(h2 / h1, WithinRel(std::pow(2.0, -1.0 / 3.0), 1e-12));
}

TEST_CASE("optimized instances satisfy the Fano condition", "[lowerbound]") {
    for (std::size_t d : {1, 2, 3}) {
        for (double m : {1.0, 50.0, 1e4, 1e7, 1e10}) {
            for (auto noise : {NoiseKind::hilbert, NoiseKind::white}) {
                auto fp = base_params();
                fp.d = d;
                fp.m = static_cast<std::size_t>(m);
                fp.noise = noise;
                fp.spectrum = SpectrumProfile::exponential(1.0, 1.0);
                const auto opt = optimize_h(fp);
                CHECK(opt.instance.fano_condition);
                CHECK(opt.instance.kl_budget <= opt.instance.log_M / 16.0);
                CHECK(opt.bound > 0.0);
            }
        }
    }
}

TEST_CASE("separation for the uniform law", "[lowerbound]") {
    const auto r = check_separation(3, 200000);
    INFO(r.detail);
    CHECK(r.passed);
}

TEST_CASE("separation for the gaussian law is one sided", "[lowerbound]") {
    auto fp = base_params();
    fp.law = CoordinateLaw(LawKind::gaussian).constants();
    fp.h = fp.law.a / 8.0;
    for (std::size_t d : {1, 2}) {
        fp.d = d;
        const auto inst = build_instance(fp);
        const InputMeasure measure(fp.spectrum, CoordinateLaw(LawKind::gaussian), d);
        Rng rng(d);
        const auto s = separation_check(inst, 0, 1, 2.0, measure, 200000, rng);
        CHECK(s.mc_distance >= s.theoretical_floor * (1.0 - 3.0 * s.mc_std_err / s.mc_distance));
    }
}
