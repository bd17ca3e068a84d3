#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "fixtures.hpp"
#include "fpd/energysolver.hpp"

using namespace fpd;

namespace {

cd random_in_disk(std::mt19937_64& rng, double radius) {
    std::uniform_real_distribution<double> U(0.0, 1.0);
    return std::polar(radius * std::sqrt(U(rng)), 2.0 * M_PI * U(rng));
}

// Rows of L with M = L L*, so <y_p, y_q> = M(p, q) under <u, v> = v* u.
Mat realize_rows(const Mat& M) {
    Eigen::LLT<Mat> llt(M);
    REQUIRE(llt.info() == Eigen::Success);
    return llt.matrixL();
}

struct Measured {
    cd on_g, on_e;  // coordinates of (I - p) y in the basis S = (I-p)y_g / n_g, S' = (I-p)y_e / n_e
    double n_g = 0, n_e = 0;
};

// Coordinates of (I - p) sum_q x_q y_q by explicit least squares on realized vectors.
Measured measure(const Mat& gram, std::size_t np_, const Vec& x) {
    const auto np = static_cast<Eigen::Index>(np_);
    const Mat Y = realize_rows(gram).transpose();  // columns are the vectors y_q
    const Mat core = Y.leftCols(np);
    auto residual = [&](const Vec& v) -> Vec {
        if (np == 0) return v;
        const Vec c = core.colPivHouseholderQr().solve(v);
        return v - core * c;
    };
    const Vec Se = residual(Y.col(np)), Sg = residual(Y.col(np + 1));
    Measured out;
    out.n_e = Se.norm();
    out.n_g = Sg.norm();
    const Vec r = residual(Y * x);
    Mat B(Y.rows(), 2);
    B.col(0) = Sg / out.n_g;
    B.col(1) = Se / out.n_e;
    const Vec c = B.colPivHouseholderQr().solve(r);
    out.on_g = c(0);
    out.on_e = c(1);
    return out;
}

}  // namespace

TEST_CASE("stage energy of a function against itself") {
    const PDFunction C = fixture::stage_at_length(3, 2, 1);
    const StageView V(C);
    CHECK(partial_energy(V, V) == doctest::Approx(1.0).epsilon(1e-10));
    for (cd z : {cd(0, 0), cd(0.3, -0.2), cd(-0.7, 0.1)})
        CHECK(stage_energy(V, z, V, z).energy == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(stage_energy(V, 0.4, V, -0.4).energy > 1.0 + 1e-3);
    CHECK_THROWS_AS(stage_energy(C, 1.0, C, 0.0), InvalidParameter);
}

TEST_CASE("extended energy dominates the partial energy") {
    std::mt19937_64 rng(3);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const StageView C(fixture::stage_at_length(3 + seed % 3, 1 + seed % 2, 10 + seed));
        const StageView D(fixture::stage_at_length(3 + seed % 3, 1 + seed % 2, 50 + seed));
        const double pe = partial_energy(C, D);
        for (int i = 0; i < 5; ++i)
            CHECK(stage_energy(C, random_in_disk(rng, 0.95), D, random_in_disk(rng, 0.95)).energy >= pe - 1e-10);
    }
}

TEST_CASE("gradient agrees with central differences") {
    std::mt19937_64 rng(11);
    int checked = 0;
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
        const int d = 1 + static_cast<int>(seed % 2);
        std::vector<PDFunction> fam{fixture::stage_at_length(5, d, 200 + seed), fixture::stage_at_length(5, d, 300 + seed)};
        const SingularResult sr = make_singular(fam, 1e-3, seed);
        const StageView C(sr.family[0]), D(sr.family[1]);
        for (int rep = 0; rep < 2; ++rep) {
            const cd z = random_in_disk(rng, 0.8), m = random_in_disk(rng, 0.8);
            for (Side side : {Side::zeta, Side::mu})
                for (cd s : {cd(1, 0), cd(0, 1)}) {
                    const double h = 1e-5;
                    auto f = [&](double t) {
                        return side == Side::zeta ? stage_energy(C, z + t * s, D, m).energy
                                                  : stage_energy(C, z, D, m + t * s).energy;
                    };
                    const double fd = (f(h) - f(-h)) / (2 * h);
                    const double an = energy_gradient(C, D, z, m, side, s);
                    CHECK(std::abs(fd - an) <= 1e-4 * std::max(1.0, std::abs(fd)));
                    ++checked;
                }
        }
    }
    CHECK(checked >= 50);
}

TEST_CASE("extension components match realized vectors") {
    std::mt19937_64 rng(5);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const int d = 1 + static_cast<int>(seed % 2);
        const StageView C(fixture::stage_at_length(3 + seed % 2, d, 400 + seed));
        const StageView D(fixture::stage_at_length(3 + seed % 2, d, 500 + seed));
        const cd z = random_in_disk(rng, 0.7), m = random_in_disk(rng, 0.7);
        const EnergyReport rep = stage_energy(C, z, D, m);
        const ExtensionComponents comp = extension_components(C, D, rep.achiever);
        const std::size_t np = C.space.idx.P.size();
        const Measured mc = measure(C.extended_gram(z), np, rep.achiever);
        const Measured md = measure(D.extended_gram(m), np, rep.achiever);
        CHECK(mc.n_g == doctest::Approx(C.res.n_g).epsilon(1e-8));
        CHECK(mc.n_e == doctest::Approx(C.res.n_e).epsilon(1e-8));
        CHECK(std::abs(mc.on_g - comp.alpha) < 1e-8);
        CHECK(std::abs(mc.on_e - comp.alpha_prime) < 1e-8);
        CHECK(std::abs(md.on_g - comp.beta) < 1e-8);
        CHECK(std::abs(md.on_e - comp.beta_prime) < 1e-8);
        // beta conj(beta') = alpha conj(alpha') n_g^D n_e^D / (n_g^C n_e^C)
        const cd scaled = comp.alpha_product() * (D.res.n_g * D.res.n_e) / (C.res.n_g * C.res.n_e);
        CHECK(std::abs(md.on_g * std::conj(md.on_e) - scaled) < 1e-8);
        // normalization x* H_C x = 1
        const Mat Y = realize_rows(C.extended_gram(z)).transpose();
        CHECK((Y * rep.achiever).squaredNorm() == doctest::Approx(1.0).epsilon(1e-8));
    }
}

TEST_CASE("make_singular rejects short words and bad parameters") {
    std::vector<PDFunction> fam{fixture::stage_at_length(4, 1, 1)};
    CHECK_THROWS_AS(make_singular(fam, 1e-3), SingularError);
    std::vector<PDFunction> ok{fixture::stage_at_length(5, 1, 1)};
    CHECK_THROWS_AS(make_singular(ok, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(make_singular({}, 1e-3), std::invalid_argument);
    std::vector<PDFunction> mixed{fixture::stage_at_length(5, 1, 1), fixture::stage_at_length(6, 1, 2)};
    CHECK_THROWS_AS(make_singular(mixed, 1e-3), std::invalid_argument);
}

TEST_CASE("make_singular with one member") {
    const PDFunction C = fixture::stage_at_length(5, 1, 7);
    const SingularResult sr = make_singular({C}, 1e-3, 1);
    REQUIRE(sr.family.size() == 1);
    CHECK(sr.distance[0] <= 1e-3);
    CHECK(sr.pairs.empty());
    CHECK(sr.certificate.kappa > 0);
    CHECK(check_pd(sr.family[0]).verdict == Verdict::strict);
    CHECK(sr.family[0].domain() == C.domain());
}

TEST_CASE("make_singular with two members") {
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
        const int d = 1 + static_cast<int>(seed % 2);
        std::vector<PDFunction> fam{fixture::stage_at_length(5, d, 20 + seed), fixture::stage_at_length(5, d, 30 + seed)};
        const double eta = 1e-3;
        const SingularResult sr = make_singular(fam, eta, seed);
        for (int m = 0; m < 2; ++m) {
            CHECK(sr.distance[m] <= eta * (1 + 1e-12));
            CHECK(sr.distance[m] == doctest::Approx(l1_distance(sr.family[m], fam[m])));
            CHECK(check_pd(sr.family[m]).verdict == Verdict::strict);
            CHECK(sr.s[m] > 0);
            double l1 = 0;
            for (const cd& v : sr.lambda[m]) l1 += std::abs(v);
            CHECK(l1 <= eta / 4 * (1 + 1e-12));
        }
        CHECK(sr.certificate.kappa > 0);
        CHECK(sr.certificate.theta >= kThetaMin);
        CHECK(sr.pair(0, 1).det > 0);
        CHECK(sr.pair(1, 0).cert.theta >= sr.certificate.theta);
    }
}

TEST_CASE("identical members are separated") {
    const PDFunction C = fixture::stage_at_length(5, 1, 9);
    const SingularResult sr = make_singular({C, C}, 1e-3, 2);
    CHECK(sr.certificate.theta >= kThetaMin);
    CHECK(l1_distance(sr.family[0], sr.family[1]) > 0);
}

TEST_CASE("singularity certificate bounds the energy") {
    std::mt19937_64 rng(17);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        std::vector<PDFunction> fam{fixture::stage_at_length(5, 1, 60 + seed), fixture::stage_at_length(5, 1, 70 + seed)};
        const SingularResult sr = make_singular(fam, 1e-2, seed);
        for (const auto& pc : sr.pairs) {
            const StageView A(sr.family[pc.from]), B(sr.family[pc.to]);
            for (int i = 0; i < 20; ++i) {
                const cd z = random_in_disk(rng, i < 10 ? 0.999 : 0.9), m = random_in_disk(rng, 0.999);
                CHECK(stage_energy(A, z, B, m).energy >= pc.cert.bound(z) * (1 - 1e-6));
            }
        }
    }
}

TEST_CASE("core coordinates annihilate the orthogonal complement") {
    const StageView V(fixture::stage_at_length(5, 2, 3));
    const Mat A = core_coordinates(V);
    const std::size_t np = V.space.idx.P.size();
    REQUIRE(A.rows() == static_cast<Eigen::Index>(np));
    const auto n = static_cast<Eigen::Index>(np);
    // on the core: unit upper triangular
    const Mat core = A.leftCols(n);
    CHECK((core.diagonal() - Vec::Ones(n)).cwiseAbs().maxCoeff() < 1e-9);
    CHECK(core.triangularView<Eigen::StrictlyLower>().toDenseMatrix().cwiseAbs().maxCoeff() < 1e-9);
    // (I - p) y_e and (I - p) y_g have no core coordinates
    for (Eigen::Index t : {n, n + 1}) {
        Vec x = Vec::Zero(n + 2);
        x(t) = 1.0;
        x.head(n) = -projection_coefficients(V.space.core(), V.space.gram.row(t).head(n).transpose());
        CHECK((A * x).cwiseAbs().maxCoeff() < 1e-9);
    }
    CHECK(core_kappa(V) > 0);
}

TEST_CASE("solve_edge with equal inputs returns the parameter") {
    const StageView V(fixture::stage_at_length(4, 1, 12));
    for (cd mu : {cd(0, 0), cd(0.5, 0.2)}) {
        const EdgeSolution sol = solve_edge(V, V, mu);
        CHECK(sol.target == doctest::Approx(1.0).epsilon(1e-10));
        CHECK(sol.energy <= 1.0 + 1e-6);
    }
}

TEST_CASE("solve_edge reaches the partial energy after singularization") {
    std::mt19937_64 rng(23);
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
        const int d = 1 + static_cast<int>(seed % 2);
        std::vector<PDFunction> fam{fixture::stage_at_length(5, d, 80 + seed), fixture::stage_at_length(5, d, 90 + seed)};
        const SingularResult sr = make_singular(fam, 1e-3, seed);
        const StageView C(sr.family[0]), D(sr.family[1]);
        const cd mu = random_in_disk(rng, 0.9);
        SolverOptions opt;
        opt.tol = 1e-7;
        const EdgeSolution sol = solve_edge(C, D, mu, opt);
        CHECK(sol.energy <= sol.target + 1e-7);
        CHECK(std::abs(sol.zeta) <= kZetaCap);
        CHECK(stage_energy(C, sol.zeta, D, mu).energy == doctest::Approx(sol.energy));
        // the target is a lower bound over the whole disk
        for (int i = 0; i < 30; ++i) CHECK(stage_energy(C, random_in_disk(rng, 0.99), D, mu).energy >= sol.target - 1e-10);
        // a vanishing gradient with a unique achiever only happens at the target
        try {
            const EnergyGradient eg = energy_with_gradient(C, sol.zeta, D, mu);
            if (std::abs(eg.d_zeta) <= 1e-6) CHECK(eg.energy <= sol.target + opt.tol);
        } catch (const DegenerateAchiever&) {
        }
    }
}

TEST_CASE("cycle with two identical members") {
    const PDFunction C = fixture::stage_at_length(4, 1, 13);
    const CycleSolution cs = solve_cycle_params(std::vector<PDFunction>{C, C});
    for (double e : cs.energy) CHECK(e <= 1.0 + 1e-6);
    CHECK(cs.objective <= 2e-12);
}

TEST_CASE("cycle with three random members") {
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        std::vector<PDFunction> fam;
        for (int i = 0; i < 3; ++i) fam.push_back(fixture::stage_at_length(5, 1, 100 + 10 * seed + i));
        const SingularResult sr = make_singular(fam, 1e-3, seed);
        SolverOptions opt;
        opt.tol = 1e-6;
        const CycleSolution cs = solve_cycle_params(sr.family, opt);
        bool above = true;
        for (int n = 0; n < 3; ++n) {
            CHECK(cs.energy[n] <= cs.base[n] + 1e-5);
            above = above && cs.energy[n] > 1.01 && cs.energy[n] > cs.base[n] + opt.tol;
        }
        // a stationary point strictly above every base energy has vanishing extension products
        if (above)
            for (int n = 0; n < 3; ++n) CHECK(std::abs(cs.alpha_product[n]) <= 1e-5);
    }
}

TEST_CASE("cycle solver needs two members") {
    CHECK_THROWS_AS(solve_cycle_params(std::vector<PDFunction>{fixture::stage_at_length(4, 1, 1)}),
                    std::invalid_argument);
}

TEST_CASE("sigma schedules") {
    const auto u = sigma_schedule(Schedule::uniform, 0.1, 40);
    double su = 0;
    for (double s : u) su += s;
    CHECK(su == doctest::Approx(0.025));
    const auto g = sigma_schedule(Schedule::geometric, 0.1, 40);
    double sg = 0;
    for (std::size_t i = 1; i < g.size(); ++i) CHECK(g[i] == doctest::Approx(g[i - 1] / 2));
    for (double s : g) sg += s;
    CHECK(sg <= 0.025);
    CHECK(sg == doctest::Approx(0.025).epsilon(1e-9));
}

TEST_CASE("stage count matches enumeration") {
    for (int r = 1; r <= 2; ++r)
        for (int R = r + 1; R <= 3; ++R)
            for (int d = 1; d <= 2; ++d) {
                std::size_t n = 0;
                for (const Word& w : ball(2 * R))
                    if (!w.is_identity() && w.length() > static_cast<std::size_t>(2 * r) && is_canonical(w)) ++n;
                CHECK(stage_count(r, R, d) == n * static_cast<std::size_t>(d * d));
            }
}

TEST_CASE("encost ratio conventions") {
    CHECK(encost_ratio(1.0, 1.0) == 1.0);
    CHECK(std::isinf(encost_ratio(1.0, 1.5)));
    CHECK(encost_ratio(1.2, 1.3) == doctest::Approx(1.5));
    CHECK(encost_ratio(1.2, 1.1) == doctest::Approx(0.5));
}

TEST_CASE("configuration validation") {
    auto f = fixture::nearby(3, 1, 1, 5, 0.05);
    auto tree = fixture::three_vertex(Shape::tree, f, 1, 1);
    CHECK_NOTHROW(tree.validate());
    CHECK(tree.tree_order() == std::vector<int>{0, 1, 2});
    auto cyc = fixture::three_vertex(Shape::cycle, f, 1, 1);
    CHECK_NOTHROW(cyc.validate());
    CHECK(cyc.cycle_order() == std::vector<int>{0, 1, 2});

    auto bad = tree;
    bad.edges = {{1, 0}, {2, 0}, {0, 1}};
    CHECK_THROWS_AS(bad.validate(), InputError);
    bad = tree;
    bad.root = "x";
    CHECK_THROWS_AS(bad.validate(), InputError);
    bad = cyc;
    bad.edges = {{0, 1}, {1, 0}, {2, 2}};
    CHECK_THROWS_AS(bad.validate(), InputError);
    bad = tree;
    bad.d = 2;
    CHECK_THROWS_AS(bad.validate(), InputError);
    bad = tree;
    bad.r = 2;
    CHECK_THROWS_AS(bad.validate(), InputError);
    bad = tree;
    PDFunction scaled = bad.functions[1];
    scaled.set(Word("a"), 5.0 * scaled.at(Word("a")));
    bad.functions[1] = scaled;
    CHECK_THROWS_AS(bad.validate(), InputError);
}

TEST_CASE("configuration files") {
    const auto dir = std::filesystem::temp_directory_path() / "fpd_cfg_test";
    std::filesystem::create_directories(dir);
    auto f = fixture::nearby(3, 1, 1, 6, 0.05);
    save_pdfunction(f[0], (dir / "u.json").string());
    save_pdfunction(f[1], (dir / "v.json").string());
    save_pdfunction(f[2], (dir / "w.json").string());
    auto write = [&](const std::string& name, const std::string& text) {
        std::ofstream(dir / name) << text;
        return dir / name;
    };
    const auto good = write("cfg.json", R"({"shape": "tree", "r": 1, "d": 1, "root": "u",
        "vertices": {"u": "u.json", "v": "v.json", "w": "w.json"}, "edges": [["v", "u"], ["w", "v"]]})");
    const Configuration cfg = load_configuration(good);
    CHECK(cfg.names.size() == 3);
    CHECK(cfg.edges.size() == 2);
    CHECK(l1_distance(cfg.functions[cfg.index("v")], f[1]) < 1e-12);

    CHECK_THROWS_AS(load_configuration(write("a.json", "{")), InputError);
    CHECK_THROWS_AS(load_configuration(write("b.json", R"({"shape": "star", "r": 1, "d": 1})")), InputError);
    CHECK_THROWS_AS(load_configuration(write("c.json", R"({"shape": "cycle", "r": 1, "d": 1,
        "vertices": {"u": "u.json", "v": "v.json"}, "edges": [["u", "x"]]})")),
                    InputError);
    CHECK_THROWS_AS(load_configuration(dir / "missing.json"), InputError);
    std::filesystem::remove_all(dir);
}

TEST_CASE("identical vertices keep energy one") {
    const PDFunction C = random_nspd(2, 1, 31, 0.1);
    const auto cfg = fixture::three_vertex(Shape::cycle, {C, C, C}, 1, 1);
    const ConfigSolution sol = solve_configuration(cfg, 2, 1e-2);
    CHECK(sol.report.encost == doctest::Approx(1.0));
    for (const auto& e : sol.report.edges) CHECK(e.after <= 1.0 + 1e-5);
    CHECK(sol.extensions[0].domain() == Domain::ball(4));
}

TEST_CASE("path and cycle configurations") {
    for (Shape shape : {Shape::tree, Shape::cycle}) {
        const auto f = fixture::nearby(3, 1, 1, 40, 0.05);
        const auto cfg = fixture::three_vertex(shape, f, 1, 1);
        const double eps = 1e-2;
        const ConfigSolution sol = solve_configuration(cfg, 2, eps);
        const auto& rep = sol.report;
        CHECK(rep.stages.size() == stage_count(1, 2, 1));
        CHECK(rep.budget <= eps / 2 * (1 + 1e-12));
        CHECK(rep.stages.back().consumed <= rep.budget * (1 + 1e-12));
        for (const auto& e : rep.edges) CHECK(e.after <= e.before + 1e-3);
        for (const auto& v : rep.vertices) {
            CHECK(v.forward <= 1 + eps);
            CHECK(v.backward <= 1 + eps);
        }
        CHECK(rep.encost <= 1.01);
        CHECK(encost_report(cfg, sol.extensions, 2, eps) == doctest::Approx(rep.encost));
        const nlohmann::json j = to_json(rep, cfg);
        CHECK(j["stages"].size() == rep.stages.size());
        CHECK(j["vertices"].contains("v"));
    }
}

TEST_CASE("central extensions are priced by encost_report") {
    const auto f = fixture::nearby(3, 1, 1, 41, 0.3);
    const auto cfg = fixture::three_vertex(Shape::tree, f, 1, 1);
    std::vector<PDFunction> ext;
    for (const auto& C : f) ext.push_back(central_extension(C, 4));
    double expected = 1.0;
    for (const auto& [a, b] : cfg.edges) {
        const double before = relative_energy(f[a], f[b], 1).energy;
        const double after = relative_energy(ext[a], ext[b], 2).energy;
        expected = std::max(expected, (after - 1) / (before - 1));
    }
    CHECK(encost_report(cfg, ext, 2, 1e-9) == doctest::Approx(expected));
    std::vector<PDFunction> wrong = ext;
    wrong[1] = central_extension(random_nspd(2, 1, 99, 0.1), 4);
    CHECK_THROWS_AS(encost_report(cfg, wrong, 2, 1e-3), InputError);
}
