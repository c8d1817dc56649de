#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "krr/kernels.hpp"
#include "krr/linalg.hpp"
#include "krr/scenarios.hpp"
#include "oracle.hpp"

using Catch::Approx;

namespace {

krr::Matrix random_spd(krr::Rng& rng, std::size_t n, double diag_boost) {
    krr::Matrix b(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) b(i, j) = rng.uniform(-1.0, 1.0);
    krr::Matrix m = krr::multiply(b.transposed(), b);
    m.add_to_diagonal(diag_boost);
    return m;
}

krr::Matrix two_by_two() {
    krr::Matrix m(2, 2);
    m(0, 0) = 2.0; m(0, 1) = 1.0;
    m(1, 0) = 1.0; m(1, 1) = 2.0;
    return m;
}

}  // namespace

TEST_CASE("cholesky factor of a worked 2x2 example") {
    const krr::CholFactor f = krr::cholesky(two_by_two());
    REQUIRE(f.dim() == 2);
    CHECK(f.lower[0][0] == Approx(std::sqrt(2.0)).epsilon(1e-15));
    CHECK(f.lower[1][0] == Approx(1.0 / std::sqrt(2.0)).epsilon(1e-15));
    CHECK(f.lower[1][1] == Approx(std::sqrt(1.5)).epsilon(1e-15));
    CHECK(krr::logdet(f) == Approx(std::log(3.0)).epsilon(1e-15));
}

TEST_CASE("cholesky reports the failing pivot index") {
    krr::Matrix indefinite(2, 2);
    indefinite(0, 0) = 1.0; indefinite(0, 1) = 2.0;
    indefinite(1, 0) = 2.0; indefinite(1, 1) = 1.0;
    try {
        krr::cholesky(indefinite);
        FAIL("expected NotPositiveDefinite");
    } catch (const krr::NotPositiveDefinite& e) {
        CHECK(e.index() == 1);
    }

    krr::Matrix zero(1, 1);
    try {
        krr::cholesky(zero);
        FAIL("expected NotPositiveDefinite");
    } catch (const krr::NotPositiveDefinite& e) {
        CHECK(e.index() == 0);
    }
}

TEST_CASE("solve on a worked 2x2 example") {
    const krr::CholFactor f = krr::cholesky(two_by_two());
    const krr::Vector x = krr::solve(f, {1.0, 0.0});
    REQUIRE(x.size() == 2);
    CHECK(x[0] == Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(x[1] == Approx(-1.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("solve round-trips against the original matrix") {
    krr::Rng rng(31);
    for (int rep = 0; rep < 30; ++rep) {
        const std::size_t n = 1 + static_cast<std::size_t>(rng.uniform(0.0, 9.0));
        const krr::Matrix m = random_spd(rng, n, 0.5);
        krr::Vector rhs(n);
        for (double& v : rhs) v = rng.uniform(-5.0, 5.0);
        const krr::Vector x = krr::solve(krr::cholesky(m), rhs);
        const krr::Vector back = krr::multiply(m, x);
        for (std::size_t i = 0; i < n; ++i) CHECK(back[i] == Approx(rhs[i]).margin(1e-9));
    }
}

TEST_CASE("extend grows a factor one column at a time") {
    krr::Matrix one(1, 1);
    one(0, 0) = 2.0;
    const krr::CholFactor base = krr::cholesky(one);
    const krr::ExtensionResult ext = krr::extend(base, {1.0}, 2.0);
    CHECK(ext.pivot == Approx(1.5).epsilon(1e-15));

    const krr::CholFactor direct = krr::cholesky(two_by_two());
    REQUIRE(ext.new_factor.dim() == 2);
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j <= i; ++j)
            CHECK(ext.new_factor.lower[i][j] == Approx(direct.lower[i][j]).epsilon(1e-15));
}

TEST_CASE("extend rejects an extension with nonpositive pivot") {
    krr::Matrix one(1, 1);
    one(0, 0) = 1.0;
    const krr::CholFactor base = krr::cholesky(one);
    try {
        krr::extend(base, {1.0}, 1.0);
        FAIL("expected NotPositiveDefinite");
    } catch (const krr::NotPositiveDefinite& e) {
        CHECK(e.index() == 1);
    }
}

TEST_CASE("incremental factorization matches the dense determinant") {
    krr::Rng rng(47);
    for (int rep = 0; rep < 25; ++rep) {
        const std::size_t n = 2 + static_cast<std::size_t>(rng.uniform(0.0, 6.0));
        std::vector<krr::Signal> signals;
        for (std::size_t t = 0; t < n; ++t)
            signals.push_back({{rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0)}, t + 1});
        const double a = std::exp(rng.uniform(std::log(0.05), std::log(20.0)));
        const krr::Matrix k = krr::gram(krr::KernelSpec::rbf(0.8), signals).entries;

        krr::CholFactor f{{}, a};
        double pivot_product = 1.0;
        double pivot_log_sum = 0.0;
        for (std::size_t t = 0; t < n; ++t) {
            krr::Vector col(t);
            for (std::size_t i = 0; i < t; ++i) col[i] = k(i, t);
            const krr::ExtensionResult ext = krr::extend(f, col, k(t, t) + a);
            pivot_product *= ext.pivot;
            pivot_log_sum += std::log(ext.pivot);
            f = ext.new_factor;
        }

        const double reference = oracle::det_shifted(k, a);
        CHECK(pivot_product == Approx(reference).epsilon(1e-9));
        CHECK(pivot_log_sum == Approx(krr::logdet(f)).margin(1e-12 * (1.0 + std::abs(pivot_log_sum))));
    }
}

TEST_CASE("push-through identity on a worked 1x1 example") {
    krr::Matrix a(1, 1), b(1, 1);
    a(0, 0) = 1.0;
    b(0, 0) = 2.0;
    // Both orderings of (BA + I)^{-1}B collapse to 2/3 here.
    CHECK(krr::check_push_through(a, b, 1.0) <= 1e-15);
}

TEST_CASE("push-through identity holds for random rectangular pairs") {
    krr::Rng rng(53);
    for (int rep = 0; rep < 40; ++rep) {
        const std::size_t m = 1 + static_cast<std::size_t>(rng.uniform(0.0, 5.0));
        const std::size_t n = 1 + static_cast<std::size_t>(rng.uniform(0.0, 5.0));
        krr::Matrix a(m, n), b(n, m);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j) a(i, j) = rng.uniform(-2.0, 2.0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < m; ++j) b(i, j) = rng.uniform(-2.0, 2.0);
        const double reg = std::exp(rng.uniform(std::log(0.5), std::log(4.0)));

        const Eigen::MatrixXd ea = oracle::to_eigen(a);
        const Eigen::MatrixXd eb = oracle::to_eigen(b);
        const Eigen::MatrixXd side =
            ea * (eb * ea + reg * Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(n),
                                                            static_cast<Eigen::Index>(n)))
                     .inverse();
        const double scale = std::max(1.0, side.cwiseAbs().maxCoeff());
        CHECK(krr::check_push_through(a, b, reg) <= 1e-10 * scale);
    }
}

TEST_CASE("lu inverse agrees with the reference implementation") {
    krr::Rng rng(61);
    for (int rep = 0; rep < 15; ++rep) {
        const std::size_t n = 1 + static_cast<std::size_t>(rng.uniform(0.0, 5.0));
        krr::Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) m(i, j) = rng.uniform(-2.0, 2.0);
        m.add_to_diagonal(3.0);
        const krr::Matrix inv = krr::detail::lu_inverse(krr::detail::lu_factor(m));
        const Eigen::MatrixXd ref = oracle::to_eigen(m).inverse();
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                CHECK(inv(i, j) == Approx(ref(static_cast<Eigen::Index>(i),
                                              static_cast<Eigen::Index>(j))).margin(1e-10));
    }
}

TEST_CASE("lu factorization rejects a singular matrix") {
    krr::Matrix m(2, 2);
    m(0, 0) = 1.0; m(0, 1) = 2.0;
    m(1, 0) = 2.0; m(1, 1) = 4.0;
    CHECK_THROWS_AS(krr::detail::lu_factor(m), krr::InputError);
}

TEST_CASE("partition comparison on a worked example") {
    const krr::Matrix m = two_by_two();
    const krr::PartitionCheck check = krr::check_partition_lemma(m, 1, {1.0, 1.0});
    CHECK(check.full_form == Approx(2.0 / 3.0).epsilon(1e-14));
    CHECK(check.block_form == Approx(0.5).epsilon(1e-14));

    const krr::PartitionCheck trivial = krr::check_partition_lemma(m, 0, {1.0, 1.0});
    CHECK(trivial.block_form == 0.0);
    const krr::PartitionCheck whole = krr::check_partition_lemma(m, 2, {1.0, 1.0});
    CHECK(whole.block_form == Approx(whole.full_form).epsilon(1e-13));
}

TEST_CASE("quadratic form never shrinks when the matrix grows") {
    krr::Rng rng(71);
    for (int rep = 0; rep < 40; ++rep) {
        const std::size_t n = 2 + static_cast<std::size_t>(rng.uniform(0.0, 6.0));
        const krr::Matrix m = random_spd(rng, n, 1.0);
        krr::Vector x(n);
        for (double& v : x) v = rng.uniform(-2.0, 2.0);
        const std::size_t split = static_cast<std::size_t>(rng.uniform(0.0, static_cast<double>(n)));
        const krr::PartitionCheck check = krr::check_partition_lemma(m, split, x);
        const double scale = std::max({1.0, std::abs(check.full_form), std::abs(check.block_form)});
        CHECK(check.full_form >= check.block_form - 1e-12 * scale);
    }
}

TEST_CASE("jacobi eigenvalues on a worked 2x2 example") {
    krr::Matrix ones(2, 2);
    ones(0, 0) = 1.0; ones(0, 1) = 1.0;
    ones(1, 0) = 1.0; ones(1, 1) = 1.0;
    const krr::EigenDecomposition eig = krr::jacobi_eigen(ones);
    REQUIRE(eig.values.size() == 2);
    CHECK(eig.values[0] == Approx(0.0).margin(1e-15));
    CHECK(eig.values[1] == Approx(2.0).epsilon(1e-15));
}

TEST_CASE("jacobi eigenvalues agree with the reference solver") {
    krr::Rng rng(83);
    for (int rep = 0; rep < 20; ++rep) {
        const std::size_t n = 2 + static_cast<std::size_t>(rng.uniform(0.0, 7.0));
        krr::Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j <= i; ++j) {
                const double v = rng.uniform(-2.0, 2.0);
                m(i, j) = v;
                m(j, i) = v;
            }
        const krr::EigenDecomposition eig = krr::jacobi_eigen(m);
        const std::vector<double> ref = oracle::symmetric_eigenvalues(m);
        REQUIRE(eig.values.size() == ref.size());
        double scale = 1.0;
        for (double v : ref) scale = std::max(scale, std::abs(v));
        for (std::size_t i = 0; i < n; ++i)
            CHECK(eig.values[i] == Approx(ref[i]).margin(1e-12 * scale));
    }
}

TEST_CASE("null space projection on worked examples") {
    krr::Matrix ones(2, 2);
    ones(0, 0) = 1.0; ones(0, 1) = 1.0;
    ones(1, 0) = 1.0; ones(1, 1) = 1.0;
    const krr::NullProjection p = krr::null_space_projection(ones, {1.0, 0.0}, 2e-12);
    CHECK(p.rank == 1);
    CHECK(p.projection_sq_norm == Approx(0.5).epsilon(1e-12));

    const krr::Matrix zero(2, 2);
    const krr::NullProjection z = krr::null_space_projection(zero, {3.0, 4.0}, 2e-12);
    CHECK(z.rank == 0);
    CHECK(z.projection_sq_norm == Approx(25.0).epsilon(1e-14));

    const krr::NullProjection full =
        krr::null_space_projection(krr::Matrix::identity(3), {1.0, 2.0, 3.0}, 3e-12);
    CHECK(full.rank == 3);
    CHECK(full.projection_sq_norm == Approx(0.0).margin(1e-24));
}

TEST_CASE("condition estimate is one for the identity and grows with spread") {
    CHECK(krr::condition_estimate(krr::cholesky(krr::Matrix::identity(4))) == 1.0);
    krr::Matrix spread(2, 2);
    spread(0, 0) = 1e6; spread(1, 1) = 1e-6;
    const double est = krr::condition_estimate(krr::cholesky(spread));
    CHECK(est == Approx(1e12).epsilon(1e-10));
}
