#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "uotflow/numkit.hpp"

using namespace uotflow::numkit;

TEST_CASE("logsumexp_rows basic identities") {
    Mat m(3, 2);
    m(0, 0) = 0.0;
    m(0, 1) = 0.0;
    m(1, 0) = -1000.0;
    m(1, 1) = -1000.0;
    m(2, 0) = 3.5;
    m(2, 1) = -1e308;
    auto r = logsumexp_rows(m);
    CHECK(r[0] == doctest::Approx(std::numbers::ln2).epsilon(1e-14));
    CHECK(r[1] == doctest::Approx(-1000.0 + std::numbers::ln2).epsilon(1e-14));
    CHECK(std::isfinite(r[1]));
    CHECK(r[2] == doctest::Approx(3.5).epsilon(1e-14));
}

TEST_CASE("logsumexp_rows singleton identity") {
    Mat m(1, 1);
    m(0, 0) = -7.25;
    CHECK(logsumexp_rows(m)[0] == -7.25);
}

TEST_CASE("logsumexp_rows shift invariance") {
    RngState rng(11);
    Mat m(4, 7);
    for (double& v : m.data) v = rng.normal() * 10.0;
    auto base = logsumexp_rows(m);
    Mat shifted = m;
    const double c = 123.456;
    for (double& v : shifted.data) v += c;
    auto sh = logsumexp_rows(shifted);
    for (std::size_t i = 0; i < 4; ++i) CHECK(sh[i] - base[i] == doctest::Approx(c).epsilon(1e-12));
}

TEST_CASE("gaussian_sample moments at n=1e5") {
    RngState rng(1);
    const std::size_t n = 100000;
    Mat x = gaussian_sample(rng, n, 2);
    for (std::size_t j = 0; j < 2; ++j) {
        double mean = 0.0, var = 0.0;
        for (std::size_t i = 0; i < n; ++i) mean += x(i, j);
        mean /= static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) var += (x(i, j) - mean) * (x(i, j) - mean);
        var /= static_cast<double>(n - 1);
        CHECK(std::abs(mean) < 0.02);  // 5/sqrt(n) bound with slack
        CHECK(var == doctest::Approx(1.0).epsilon(0.05));
    }
}

TEST_CASE("rng determinism and fork independence") {
    RngState a(42), b(42);
    Mat xa = gaussian_sample(a, 10, 3);
    Mat xb = gaussian_sample(b, 10, 3);
    for (std::size_t i = 0; i < xa.size(); ++i) CHECK(xa.data[i] == xb.data[i]);

    RngState parent(7);
    RngState c1 = parent.fork("child");
    RngState c2 = parent.fork("child");
    CHECK(c1.next_u64() != c2.next_u64());  // same label, distinct fork counter

    RngState p2(7);
    RngState d1 = p2.fork("alpha");
    RngState d2 = p2.fork("beta");
    CHECK(d1.next_u64() != d2.next_u64());
}

TEST_CASE("fork is reproducible across parents with same seed") {
    RngState p1(99), p2(99);
    RngState a = p1.fork("x");
    RngState b = p2.fork("x");
    for (int i = 0; i < 5; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("uniform in [0,1) and categorical") {
    RngState rng(5);
    for (int i = 0; i < 1000; ++i) {
        double u = rng.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
    }
    std::vector<double> w = {0.0, 2.0, 0.0};
    for (int i = 0; i < 100; ++i) CHECK(rng.categorical(w) == 1);

    // frequency check on a 3:1 split
    std::vector<double> w2 = {3.0, 1.0};
    int c0 = 0;
    for (int i = 0; i < 40000; ++i)
        if (rng.categorical(w2) == 0) ++c0;
    CHECK(std::abs(c0 / 40000.0 - 0.75) < 0.01);
}

TEST_CASE("matmul against naive loops") {
    RngState rng(3);
    Mat a(4, 5), b(5, 3);
    for (double& v : a.data) v = rng.normal();
    for (double& v : b.data) v = rng.normal();
    Mat c = matmul(a, b);
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 3; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < 5; ++k) s += a(i, k) * b(k, j);
            CHECK(c(i, j) == doctest::Approx(s).epsilon(1e-12));
        }

    // A^T * B with A 5x4
    Mat at(5, 4);
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t j = 0; j < 4; ++j) at(i, j) = a(j, i);
    Mat c2 = matmul_tn(at, b);
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 3; ++j) CHECK(c2(i, j) == doctest::Approx(c(i, j)));

    // A * B^T with B 3x5
    Mat bt(3, 5);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 5; ++j) bt(i, j) = b(j, i);
    Mat c3 = matmul_nt(a, bt);
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 3; ++j) CHECK(c3(i, j) == doctest::Approx(c(i, j)));
}

TEST_CASE("matvec and matvec_t") {
    Mat a(2, 3);
    for (std::size_t i = 0; i < a.size(); ++i) a.data[i] = static_cast<double>(i + 1);
    std::vector<double> x = {1.0, -1.0, 2.0};
    auto y = matvec(a, x);
    CHECK(y[0] == doctest::Approx(1.0 - 2.0 + 6.0));
    CHECK(y[1] == doctest::Approx(4.0 - 5.0 + 12.0));
    std::vector<double> z = {2.0, -3.0};
    auto w = matvec_t(a, z);
    CHECK(w[0] == doctest::Approx(2.0 * 1 - 3.0 * 4));
    CHECK(w[1] == doctest::Approx(2.0 * 2 - 3.0 * 5));
    CHECK(w[2] == doctest::Approx(2.0 * 3 - 3.0 * 6));
}

TEST_CASE("all_finite flags NaN/Inf") {
    Mat m(2, 2, 1.0);
    CHECK(m.all_finite());
    m(1, 1) = std::nan("");
    CHECK_FALSE(m.all_finite());
}
