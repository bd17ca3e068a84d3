#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "fpd/extend.hpp"

using namespace fpd;

namespace {

PDFunction scalar(const Domain& dom, std::initializer_list<std::pair<const char*, cd>> vals) {
    PDFunction C = delta(1, dom);
    for (auto& [w, v] : vals) C.set(Word(w), Mat::Constant(1, 1, v));
    return C;
}

double min_eig(const Mat& M) {
    Eigen::SelfAdjointEigenSolver<Mat> es(M);
    return es.eigenvalues()(0);
}

// Toeplitz sequence embedded on powers of a, zero elsewhere, at stage a^n.
PDFunction embed(const std::vector<cd>& c) {
    const int n = static_cast<int>(c.size());
    const Word g = Word(std::string(static_cast<std::size_t>(n), 'a'));
    PDFunction C = delta(1, Domain::partial(g, 1, 1));
    for (int p = 1; p < n; ++p) C.set(Word(std::string(static_cast<std::size_t>(p), 'a')), Mat::Constant(1, 1, c[p]));
    return C;
}

}  // namespace

TEST_CASE("legal disk examples") {
    const auto D = delta(1, Domain::partial(Word("aa"), 1, 1));
    auto disk = legal_disk(D);
    CHECK(std::abs(disk.center) < 1e-15);
    CHECK(disk.radius == doctest::Approx(1.0));

    const cd c(0.5, 0.2);
    const auto C = scalar(Domain::partial(Word("aa"), 1, 1), {{"a", c}});
    disk = legal_disk(C);
    CHECK(std::abs(disk.center - c * c) < 1e-14);
    CHECK(disk.radius == doctest::Approx(1 - std::norm(c)));

    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto big = random_nspd(3, 1 + seed % 2, seed, 0.05);
        const auto S = restrict_to(big, Domain::partial(Word("abA"), 1, 1));
        const auto dk = legal_disk(S);
        CHECK(std::abs(dk.center) <= 1.0);
        CHECK(dk.radius >= 0.0);
        CHECK(dk.radius <= 1.0);
    }
}

TEST_CASE("extend_entry") {
    const auto D = delta(1, Domain::partial(Word("aa"), 1, 1));
    const auto E = extend_entry(D, 0.0);
    CHECK(E.at(Word("aa"))(0, 0) == cd(0.0));
    CHECK(E.domain() == Domain::partial(Word("ab"), 1, 1));

    const auto C = scalar(Domain::partial(Word("aa"), 1, 1), {{"a", 0.5}});
    CHECK(std::abs(extend_entry(C, 0.0).at(Word("aa"))(0, 0) - 0.25) < 1e-15);
    CHECK_THROWS_AS(extend_entry(C, 0.9999995), InvalidParameter);

    const auto big = random_nspd(2, 2, 4, 0.2);
    auto S = restrict_to(big, Domain::partial(Word("ab"), 1, 1));
    for (int step = 0; step < 4; ++step) {
        const auto before = S;
        S = extend_entry(S, cd(0.3, -0.2));
        CHECK(check_pd(S).verdict == Verdict::strict);
        const auto back = restrict_to(S, before.domain());
        CHECK(l1_distance(back, before) == 0.0);
    }
    CHECK(S.domain() == Domain::partial(Word("aB"), 1, 1));
    CHECK((S.at(Word("BA")) - S.at(Word("ab")).adjoint()).norm() == 0.0);
}

TEST_CASE("central extension") {
    const auto D3 = central_extension(delta(2, Domain::ball(1)), 3);
    CHECK(D3.domain() == Domain::ball(3));
    CHECK(l1_distance(D3, delta(2, Domain::ball(3))) == 0.0);

    const auto C = scalar(Domain::ball(1), {{"a", 0.5}, {"b", 0.3}});
    const auto E = central_extension(C, 2);
    CHECK(std::abs(E.at(Word("ab"))(0, 0) - 0.15) < 1e-14);
    CHECK(std::abs(E.at(Word("aa"))(0, 0) - 0.25) < 1e-14);
    CHECK(std::abs(E.at(Word("bb"))(0, 0) - 0.09) < 1e-14);
    CHECK(std::abs(E.at(Word("aB"))(0, 0) - 0.15) < 1e-14);
    const auto E3 = central_extension(C, 3);
    CHECK(std::abs(E3.at(Word("abA"))(0, 0) - 0.075) < 1e-14);

    for (std::uint64_t seed = 0; seed < 12; ++seed) {
        const int d = 1 + seed % 2;
        const auto R = random_nspd(1, d, seed, 0.2 + 0.05 * (seed % 4));
        const auto X = central_extension(R, 3);
        CHECK(check_pd(X).verdict == Verdict::strict);
        CHECK(l1_distance(restrict_to(X, Domain::ball(1)), R) == 0.0);
        const auto Y = extend_ball(R, 3, [](const Stage&, const PDFunction&) { return cd(0.0); });
        CHECK(l1_distance(X, Y) == 0.0);
    }
}

TEST_CASE("every intermediate stage stays strict") {
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
        const int d = 1 + seed % 2;
        const auto R = random_nspd(1, d, seed, 0.25);
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> U(-0.6, 0.6);
        int checks = 0;
        const auto X = extend_ball(R, 3, [&](const Stage& s, const PDFunction& W) {
            if (s.j == 1 && s.k == 1) {
                CHECK(check_pd(W).verdict == Verdict::strict);
                ++checks;
            }
            return cd(U(rng), U(rng));
        });
        CHECK(checks == 24);
        CHECK(check_pd(X).verdict == Verdict::strict);
        CHECK(l1_distance(restrict_to(X, Domain::ball(1)), R) == 0.0);
    }
}

TEST_CASE("policy failures name the stage") {
    const auto R = random_nspd(1, 1, 1, 0.3);
    try {
        extend_ball(R, 2, [](const Stage&, const PDFunction&) { return cd(2.0); });
        FAIL("expected a policy error");
    } catch (const PolicyError& e) {
        CHECK(e.stage.g == Word("aa"));
    }
}

TEST_CASE("disk boundary separates strict from non-strict") {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> phase(0.0, 2 * M_PI);
    const std::vector<Word> gs{Word("aa"), Word("ab"), Word("abA"), Word("aBa"), Word("abab")};
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const int d = 1 + seed % 2;
        const Word g = gs[seed % gs.size()];
        const auto big = random_nspd(static_cast<int>(g.length()), d, seed, 0.1);
        const int j = 1 + static_cast<int>(seed / 5) % d, k = 1 + static_cast<int>(seed / 3) % d;
        const auto S = restrict_to(big, Domain::partial(g, j, k));
        const auto P = build_partial_space(S);
        const Disk disk = legal_disk(S);
        const double phi = phase(rng);
        for (double rho : {0.0, 0.5, 0.999}) {
            const cd v = disk.center + rho * disk.radius * std::polar(1.0, phi);
            CHECK(min_eig(P.completed(v)) > 0);
            CHECK(check_pd(extend_entry(S, rho * std::polar(1.0, phi))).verdict == Verdict::strict);
        }
        const cd v = disk.center + 1.001 * disk.radius * std::polar(1.0, phi);
        CHECK(min_eig(P.completed(v)) < 0);
    }
}

TEST_CASE("toeplitz step") {
    CHECK(std::abs(toeplitz_step({1.0, 0.0}, 0.0)) < 1e-15);
    CHECK(std::abs(toeplitz_step({1.0, 0.5}, 0.0) - 0.25) < 1e-15);
    const double z = kZetaCap;
    const cd c2 = toeplitz_step({1.0, 0.5}, z);
    CHECK(std::abs(c2 - (0.25 + 0.75 * z)) < 1e-14);
    Mat T(3, 3);
    T << 1.0, 0.5, c2, 0.5, 1.0, 0.5, std::conj(c2), 0.5, 1.0;
    const double lo = min_eig(T);
    CHECK(lo >= -1e-15);
    CHECK(lo <= 1e-5);
    CHECK_THROWS(toeplitz_step({1.0, 1.0}, 0.0));
}

TEST_CASE("toeplitz step agrees with the free-group step on powers of a") {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    for (int rep = 0; rep < 20; ++rep) {
        for (int n = 2; n <= 4; ++n) {
            // random strict Toeplitz sequence grown by random Schur steps
            std::vector<cd> c{1.0};
            while (static_cast<int>(c.size()) < n) {
                const cd z = 0.8 * cd(U(rng), U(rng)) / std::sqrt(2.0);
                c.push_back(toeplitz_step(c, z));
            }
            const cd zeta = 0.9 * cd(U(rng), U(rng)) / std::sqrt(2.0);
            const cd expect = toeplitz_step(c, zeta);
            const auto C = embed(c);
            const auto E = extend_entry(C, zeta);
            const Word g(std::string(static_cast<std::size_t>(n), 'a'));
            CHECK(std::abs(E.at(g)(0, 0) - expect) < 1e-10);
        }
    }
}
