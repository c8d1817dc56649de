#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <vector>

#include "krr/bayes.hpp"
#include "krr/scenarios.hpp"
#include "oracle.hpp"

using Catch::Approx;
using krr::MergeState;
using krr::Sample;
using krr::Signal;

namespace {

Sample random_sample(krr::Rng& rng, std::size_t count, std::size_t dim) {
    std::vector<krr::Vector> coords;
    krr::Vector outcomes;
    for (std::size_t t = 0; t < count; ++t) {
        krr::Vector row;
        for (std::size_t j = 0; j < dim; ++j) row.push_back(rng.uniform(-1.5, 1.5));
        coords.push_back(std::move(row));
        outcomes.push_back(rng.uniform(-2.0, 2.0));
    }
    return Sample::from_rows(coords, outcomes);
}

}  // namespace

TEST_CASE("prior prediction has mean zero and inflated variance") {
    const MergeState prior = MergeState::initial(1, 1.0);
    const krr::GaussianPrediction p = krr::merge_predict(prior, Signal{{1.0}, 1}, 1.0);
    CHECK(p.mean == 0.0);
    CHECK(p.variance == Approx(2.0).epsilon(1e-15));

    const krr::GaussianPrediction wide = krr::merge_predict(prior, Signal{{2.0}, 1}, 1.0);
    CHECK(wide.variance == Approx(5.0).epsilon(1e-15));
}

TEST_CASE("posterior after one unit observation") {
    const MergeState prior = MergeState::initial(1, 1.0);
    const MergeState post = krr::merge_update(prior, Signal{{1.0}, 1}, 1.0, 1.0);
    CHECK(post.step == 1);
    REQUIRE(post.posterior_mean.size() == 1);
    CHECK(post.posterior_mean[0] == Approx(0.5).epsilon(1e-15));
    CHECK(post.posterior_cov(0, 0) == Approx(0.5).epsilon(1e-15));
    // Predictive N(0, 2) evaluated at y = 1.
    CHECK(post.cumulative_loss ==
          Approx(0.5 * std::log(4.0 * std::numbers::pi) + 0.25).epsilon(1e-14));

    const krr::GaussianPrediction p = krr::merge_predict(post, Signal{{1.0}, 2}, 1.0);
    CHECK(p.mean == Approx(0.5).epsilon(1e-15));
    CHECK(p.variance == Approx(1.5).epsilon(1e-15));
}

TEST_CASE("zero signal leaves the posterior untouched but pays for the outcome") {
    const MergeState prior = MergeState::initial(2, 1.0);
    const MergeState post = krr::merge_update(prior, Signal{{0.0, 0.0}, 1}, 2.0, 1.0);
    CHECK(post.posterior_mean == krr::Vector{0.0, 0.0});
    CHECK(post.posterior_cov(0, 0) == Approx(1.0).epsilon(1e-14));
    CHECK(post.cumulative_loss ==
          Approx(0.5 * std::log(2.0 * std::numbers::pi) + 2.0).epsilon(1e-14));
}

TEST_CASE("merge state rejects mismatched inputs") {
    const MergeState prior = MergeState::initial(2, 1.0);
    CHECK_THROWS_AS(krr::merge_predict(prior, Signal{{1.0}, 1}, 1.0), krr::InputError);
    CHECK_THROWS_AS(krr::merge_predict(prior, Signal{{1.0, 0.0}, 1}, 2.0), krr::InputError);
    CHECK_THROWS_AS(MergeState::initial(0, 1.0), krr::InputError);
    CHECK_THROWS_AS(MergeState::initial(2, 0.0), krr::InputError);
}

TEST_CASE("mixture predictions reproduce the online ridge pass") {
    krr::Rng rng(73);
    for (int rep = 0; rep < 20; ++rep) {
        const std::size_t dim = 1 + static_cast<std::size_t>(rng.uniform(0.0, 3.0));
        const Sample s = random_sample(rng, 8, dim);
        const double sigma2 = std::exp(rng.uniform(std::log(0.2), std::log(5.0)));
        const krr::OnlineTrace trace = krr::run_online(s, krr::KernelSpec::linear(), sigma2);

        MergeState state = MergeState::initial(dim, sigma2);
        for (std::size_t t = 0; t < s.size(); ++t) {
            const krr::GaussianPrediction p = krr::merge_predict(state, s.examples[t].signal, sigma2);
            const double d = trace.steps[t].d;
            CHECK(p.mean == Approx(trace.steps[t].gamma).margin(1e-10));
            CHECK(p.variance == Approx(sigma2 + d).margin(1e-10 * (1.0 + sigma2 + d)));
            state = krr::merge_update(state, s.examples[t].signal, s.examples[t].outcome, sigma2);
        }
    }
}

TEST_CASE("cumulative loss telescopes over per-step predictive losses") {
    krr::Rng rng(79);
    const Sample s = random_sample(rng, 10, 2);
    const double sigma2 = 0.7;
    MergeState state = MergeState::initial(2, sigma2);
    double recomputed = 0.0;
    for (const auto& e : s.examples) {
        const krr::GaussianPrediction p = krr::merge_predict(state, e.signal, sigma2);
        recomputed += 0.5 * std::log(2.0 * std::numbers::pi * p.variance) +
                      (e.outcome - p.mean) * (e.outcome - p.mean) / (2.0 * p.variance);
        state = krr::merge_update(state, e.signal, e.outcome, sigma2);
    }
    CHECK(state.cumulative_loss == Approx(recomputed).epsilon(1e-12));
}

TEST_CASE("product of predictive variances matches the grown determinant") {
    krr::Rng rng(83);
    const std::size_t dim = 3;
    const Sample s = random_sample(rng, 9, dim);
    const double sigma2 = 1.3;
    MergeState state = MergeState::initial(dim, sigma2);
    double log_product = 0.0;
    for (const auto& e : s.examples) {
        const krr::GaussianPrediction p = krr::merge_predict(state, e.signal, sigma2);
        log_product += std::log(p.variance / sigma2);
        state = krr::merge_update(state, e.signal, e.outcome, sigma2);
    }
    const double ref = std::log(oracle::determinant(state.gram_shifted)) -
                       static_cast<double>(dim) * std::log(sigma2);
    CHECK(log_product == Approx(ref).margin(1e-9));
}

TEST_CASE("sequential loss equals the quadrature mixture loss") {
    const Sample s = Sample::from_rows({{1.0}}, {1.0});
    const krr::LossAverageCheck check = krr::check_loss_average(s, 1.0, 2001);
    CHECK(check.sequential_loss ==
          Approx(0.5 * std::log(4.0 * std::numbers::pi) + 0.25).epsilon(1e-13));
    CHECK(std::abs(check.sequential_loss - check.mixture_loss) <= 1e-6);

    krr::Rng rng(89);
    for (int rep = 0; rep < 5; ++rep) {
        const Sample rs = random_sample(rng, 4, 1);
        const krr::LossAverageCheck rc = krr::check_loss_average(rs, 0.8, 2001);
        CHECK(std::abs(rc.sequential_loss - rc.mixture_loss) <= 1e-6);
    }

    const Sample two_d = random_sample(rng, 3, 2);
    const krr::LossAverageCheck c2 = krr::check_loss_average(two_d, 1.1, 801);
    CHECK(std::abs(c2.sequential_loss - c2.mixture_loss) <= 1e-4);
}

TEST_CASE("loss average check rejects unsupported dimensions") {
    krr::Rng rng(97);
    const Sample s = random_sample(rng, 3, 3);
    CHECK_THROWS_AS(krr::check_loss_average(s, 1.0, 101), krr::InputError);
}

TEST_CASE("gaussian integrals agree with their closed forms") {
    krr::Matrix unit(1, 1);
    unit(0, 0) = 1.0;
    const krr::GaussianIntegralCheck plain =
        krr::check_gaussian_integral(unit, {0.0}, 0.0, 4001);
    CHECK(plain.closed_form == Approx(std::sqrt(std::numbers::pi)).epsilon(1e-14));
    CHECK(plain.quadrature == Approx(plain.closed_form).epsilon(1e-10));

    const krr::GaussianIntegralCheck shifted =
        krr::check_gaussian_integral(unit, {-2.0}, 2.0, 4001);
    CHECK(shifted.closed_form ==
          Approx(std::exp(-1.0) * std::sqrt(std::numbers::pi)).epsilon(1e-14));
    CHECK(shifted.quadrature == Approx(shifted.closed_form).epsilon(1e-10));

    krr::Matrix diag(2, 2);
    diag(0, 0) = 1.0;
    diag(1, 1) = 2.0;
    const krr::GaussianIntegralCheck planar =
        krr::check_gaussian_integral(diag, {0.0, 0.0}, 0.0, 801);
    CHECK(planar.closed_form ==
          Approx(std::numbers::pi / std::sqrt(2.0)).epsilon(1e-14));
    CHECK(planar.quadrature == Approx(planar.closed_form).epsilon(1e-8));

    krr::Matrix indefinite(1, 1);
    indefinite(0, 0) = -1.0;
    CHECK_THROWS_AS(krr::check_gaussian_integral(indefinite, {0.0}, 0.0, 101),
                    krr::NotPositiveDefinite);
}

TEST_CASE("linear identity certificate via the mixture recursion") {
    const Sample s = Sample::from_rows({{1.0}}, {1.0});
    const krr::IdentityCertificate cert = krr::verify_linear_identity(s, 1.0);
    CHECK(cert.ok);
    CHECK(cert.term_online == Approx(0.5).epsilon(1e-14));
    CHECK(cert.term_min == Approx(0.5).epsilon(1e-14));
    CHECK(cert.term_closed == Approx(0.5).epsilon(1e-14));

    krr::Rng rng(101);
    for (int rep = 0; rep < 25; ++rep) {
        const std::size_t dim = 1 + static_cast<std::size_t>(rng.uniform(0.0, 3.0));
        const Sample rs = random_sample(rng, 7, dim);
        const double sigma2 = std::exp(rng.uniform(std::log(0.3), std::log(3.0)));
        const krr::IdentityCertificate mix = krr::verify_linear_identity(rs, sigma2);
        const krr::IdentityCertificate dual = krr::certify(rs, krr::KernelSpec::linear(), sigma2);
        INFO("rep " << rep << " sigma2 " << sigma2);
        CHECK(mix.ok);
        CHECK(mix.term_online ==
              Approx(dual.term_online).margin(1e-10 * std::max(1.0, dual.term_online)));
        CHECK(mix.term_min ==
              Approx(dual.term_min).margin(1e-10 * std::max(1.0, dual.term_min)));
        CHECK(mix.term_closed ==
              Approx(dual.term_closed).margin(1e-10 * std::max(1.0, dual.term_closed)));
    }
}
