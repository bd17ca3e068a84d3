#include "fpd/energysolver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <tuple>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>

#include <Eigen/Eigenvalues>

namespace fpd {

// ---- stage energies ----

StageView::StageView(const PDFunction& C) {
    const Domain& dom = C.domain();
    if (dom.kind != DomainKind::Partial) throw std::invalid_argument("StageView: partial stage required");
    stage = {dom.g, dom.j, dom.k};
    space = build_partial_space(C, stage);
    res = residual_data(space);
}

EnergyReport stage_energy(const StageView& C, cd zeta, const StageView& D, cd mu) {
    return generalized_energy(C.extended_gram(zeta), D.extended_gram(mu));
}

double stage_energy(const PDFunction& C, cd zeta, const PDFunction& D, cd mu) {
    validate_zeta(zeta);
    validate_zeta(mu);
    return stage_energy(StageView(C), zeta, StageView(D), mu).energy;
}

double partial_energy(const StageView& C, const StageView& D) {
    const double g = generalized_energy(C.space.restriction_g(), D.space.restriction_g()).energy;
    const double e = generalized_energy(C.space.restriction_e(), D.space.restriction_e()).energy;
    return std::max(g, e);
}

ExtensionComponents extension_components(const StageView& C, const StageView& D, const Vec& x) {
    const auto pg = static_cast<Eigen::Index>(C.space.idx.pos_g());
    const auto pe = static_cast<Eigen::Index>(C.space.idx.pos_e());
    ExtensionComponents out;
    out.alpha = x(pg) * C.res.n_g;
    out.alpha_prime = x(pe) * C.res.n_e;
    out.beta = x(pg) * D.res.n_g;
    out.beta_prime = x(pe) * D.res.n_e;
    return out;
}

EnergyGradient energy_with_gradient(const StageView& C, cd zeta, const StageView& D, cd mu) {
    const EnergyReport rep = stage_energy(C, zeta, D, mu);
    if (rep.achiever.size() > 1 && rep.energy - rep.second <= kSeparation * rep.energy)
        throw DegenerateAchiever("top generalized eigenvalue is not simple");
    EnergyGradient out;
    out.energy = rep.energy;
    out.comp = extension_components(C, D, rep.achiever);
    // d/dchi along s is Re(conj(grad) s).
    out.d_zeta = -2.0 * rep.energy * std::conj(out.comp.alpha_product());
    out.d_mu = 2.0 * std::conj(out.comp.beta_product());
    return out;
}

double energy_gradient(const StageView& C, const StageView& D, cd zeta, cd mu, Side side, cd s) {
    const EnergyGradient eg = energy_with_gradient(C, zeta, D, mu);
    const cd grad = side == Side::zeta ? eg.d_zeta : eg.d_mu;
    return (std::conj(grad) * s).real();
}

double energy_gradient(const PDFunction& C, const PDFunction& D, cd zeta, cd mu, Side side, cd s) {
    return energy_gradient(StageView(C), StageView(D), zeta, mu, side, s);
}

// ---- singular degeneracies ----

const PairCertificate& SingularResult::pair(int from, int to) const {
    for (const auto& p : pairs)
        if (p.from == from && p.to == to) return p;
    throw std::out_of_range("SingularResult::pair");
}

Mat core_coordinates(const Mat& gram_core, const Mat& gram_qp) {
    const OrthoMatrices om = ortho_matrices(gram_core);
    const Eigen::VectorXd inv2 = om.norms.cwiseAbs2().cwiseInverse();
    // A(r,q) = <y_q, z_r> / ||z_r||^2 with z_r = sum_s G(r,s) y_s.
    return inv2.cast<cd>().asDiagonal() * om.G.conjugate() * gram_qp.transpose();
}

Mat core_coordinates(const StageView& V) {
    const auto np = static_cast<Eigen::Index>(V.space.idx.P.size());
    return core_coordinates(V.space.core(), V.space.gram.leftCols(np));
}

double core_kappa(const StageView& V) {
    if (V.space.idx.P.empty()) return 1.0;
    return ortho_matrices(V.space.core()).norms.minCoeff();
}

namespace {

// Gram of (1-s) C + s Delta.
Mat mixed_gram(const Mat& gram, double s) {
    Mat out = (1.0 - s) * gram;
    out.diagonal() = gram.diagonal();
    return out;
}

struct KernelData {
    Mat A;        // |P| x |Q|
    Mat K;        // orthonormal basis of ker A, |Q| x 2
    double kappa = 0;
};

KernelData kernel_data(const Mat& gram, std::size_t np_) {
    const auto np = static_cast<Eigen::Index>(np_);
    const Eigen::Index nq = gram.rows();
    KernelData out;
    const Mat core = gram.topLeftCorner(np, np);
    const Mat qp = gram.leftCols(np);
    out.A = core_coordinates(core, qp);
    out.kappa = np > 0 ? ortho_matrices(core).norms.minCoeff() : 1.0;
    // (I - p) y_t for t = e, g: coefficient 1 on t and minus the projection coefficients on the core.
    Mat B = Mat::Zero(nq, 2);
    for (Eigen::Index c = 0; c < 2; ++c) {
        const Eigen::Index t = np + c;
        B(t, c) = 1.0;
        if (np > 0) B.col(c).head(np) = -projection_coefficients(core, qp.row(t).transpose());
    }
    Eigen::HouseholderQR<Mat> qr(B);
    out.K = qr.householderQ() * Mat::Identity(nq, 2);
    return out;
}

double smallest_singular(const Mat& M) {
    Eigen::SelfAdjointEigenSolver<Mat> es(M.adjoint() * M, Eigen::EigenvaluesOnly);
    return std::sqrt(std::max(es.eigenvalues()(0), 0.0));
}

// det(A_l* A_l + A_m* A_m) divided by the product of its diagonal.
double normalized_det(const Mat& Al, const Mat& Am) {
    const Mat S = Al.adjoint() * Al + Am.adjoint() * Am;
    Eigen::LLT<Mat> llt(S);
    if (llt.info() != Eigen::Success) return 0.0;
    double logdet = 0;
    for (Eigen::Index i = 0; i < S.rows(); ++i)
        logdet += 2.0 * std::log(std::real(llt.matrixLLT()(i, i))) - std::log(S(i, i).real());
    return std::exp(logdet);
}

void add_entry(PDFunction& C, const Word& w, int m, int n, cd v) {
    Mat M = C.at(w);
    M(m, n) += v;
    C.set(w, M);
}

// Uniform sample from {z in C^4 : sum |z_i| <= rho}: moduli ~ Dirichlet(2,2,2,2,1), uniform phases.
std::array<cd, 4> sample_l1_ball(double rho, std::mt19937_64& rng) {
    std::gamma_distribution<double> g2(2.0, 1.0), g1(1.0, 1.0);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * M_PI);
    std::array<double, 5> w{g2(rng), g2(rng), g2(rng), g2(rng), g1(rng)};
    const double total = std::accumulate(w.begin(), w.end(), 0.0);
    std::array<cd, 4> out;
    for (int i = 0; i < 4; ++i) out[i] = std::polar(rho * w[i] / total, phase(rng));
    return out;
}

Word word_prefix(const Word& g, std::size_t n) {
    return Word::from_letters({g.letters().begin(), g.letters().begin() + static_cast<std::ptrdiff_t>(n)});
}

std::size_t find_index(const StageIndexSets& idx, const Word& w, int m) {
    for (std::size_t i = 0; i < idx.Q.size(); ++i)
        if (idx.Q[i].w == w && idx.Q[i].m == m) return i;
    throw std::logic_error("index " + w.str() + " not in Q");
}

}  // namespace

SingularResult make_singular(const std::vector<PDFunction>& family, double eta, std::uint64_t seed,
                             std::vector<double> margins) {
    if (family.empty()) throw std::invalid_argument("make_singular: empty family");
    if (!(eta > 0)) throw std::invalid_argument("make_singular: eta must be positive");
    const Domain dom = family[0].domain();
    if (dom.kind != DomainKind::Partial) throw std::invalid_argument("make_singular: partial stage required");
    for (const auto& C : family)
        if (!(C.domain() == dom) || C.d() != family[0].d())
            throw std::invalid_argument("make_singular: family members must share the stage");
    const Word& g = dom.g;
    if (g.length() < 5) throw SingularError(-1, "make_singular: |g| >= 5 required, got " + g.str());
    const int N = static_cast<int>(family.size());
    const int d = family[0].d();
    if (margins.empty()) {
        for (int m = 0; m < N; ++m) {
            const PDCheck chk = check_pd(family[m]);
            if (chk.verdict != Verdict::strict) throw SingularError(m, "make_singular: input is not strict");
            margins.push_back(chk.min_eigenvalue);
        }
    }
    if (static_cast<int>(margins.size()) != N) throw std::invalid_argument("make_singular: one margin per member");

    const Word g1 = word_prefix(g, 1), g2 = word_prefix(g, 2);
    const std::array<Word, 4> words{g1.inverse() * g, g2.inverse() * g, g1.inverse(), g2.inverse()};
    const std::array<int, 4> rows{dom.j - 1, dom.j - 1, dom.k - 1, dom.k - 1};

    std::mt19937_64 rng(seed);
    SingularResult out;
    out.lambda.resize(N);
    out.s.resize(N);
    out.margins = margins;

    // First perturbation: W'(Lambda) invertible.
    std::vector<PDFunction> primed;
    std::vector<Mat> grams;
    StageIndexSets idx;
    for (int m = 0; m < N; ++m) {
        const double rho = std::min(eta / 4.0, margins[m] / 4.0);
        const double tau = 1e-6 * std::min(1.0, rho * rho);
        bool found = false;
        for (int trial = 0; trial < 200 && !found; ++trial) {
            const auto lam = sample_l1_ball(rho, rng);
            PDFunction C = family[m];
            for (int i = 0; i < 4; ++i) add_entry(C, words[i], rows[i], 0, lam[i]);
            PartialHilbertSpace S;
            try {
                S = build_partial_space(C);
                residual_data(S);
            } catch (const Degenerate&) {
                continue;
            }
            idx = S.idx;
            const std::size_t v1 = find_index(idx, g1, 0), v2 = find_index(idx, g2, 0);
            const std::size_t xg = idx.pos_g(), xe = idx.pos_e();
            Eigen::Matrix2cd Mv, B;
            Mv << S.gram(v1, v1), S.gram(v1, v2), S.gram(v2, v1), S.gram(v2, v2);
            // B(k, x) = <x, v_k>
            B << S.gram(xg, v1), S.gram(xe, v1), S.gram(xg, v2), S.gram(xe, v2);
            const cd det = B.determinant() / Mv.determinant();
            if (std::abs(det) < tau) continue;
            double l1 = 0;
            for (const cd& v : lam) l1 += std::abs(v);
            out.lambda[m] = lam;
            out.margins[m] = margins[m] - 2.0 * l1;
            primed.push_back(std::move(C));
            grams.push_back(S.gram);
            found = true;
        }
        if (!found) throw SingularError(m, "make_singular: no Lambda within budget makes W' invertible");
    }

    // Second perturbation: mix toward Delta until the kernels of A_m separate pairwise.
    const std::size_t np = idx.P.size();
    std::vector<KernelData> kd(N);
    for (int m = 0; m < N; ++m) {
        const double dist = l1_distance(primed[m], delta(d, dom));
        bool found = false;
        for (int k = 1; k <= kShuttleGrid && !found; ++k) {
            const double s = dist > 0 ? eta / (2.0 * k * dist) : 0.0;
            KernelData cand;
            try {
                cand = kernel_data(mixed_gram(grams[m], s), np);
            } catch (const NotStrict&) {
                continue;
            }
            bool ok = true;
            for (int l = 0; l < m && ok; ++l)
                ok = smallest_singular(kd[l].A * cand.K) >= kThetaMin && smallest_singular(cand.A * kd[l].K) >= kThetaMin;
            if (!ok) continue;
            kd[m] = std::move(cand);
            out.s[m] = s;
            found = true;
        }
        if (!found) throw SingularError(m, "make_singular: no mixing parameter separates the kernels");
    }

    out.certificate.kappa = std::numeric_limits<double>::infinity();
    out.certificate.theta = N > 1 ? std::numeric_limits<double>::infinity() : 0.0;
    for (int m = 0; m < N; ++m) {
        out.family.push_back(mix_with_delta(primed[m], out.s[m]));
        out.distance.push_back(l1_distance(out.family[m], family[m]));
        out.certificate.kappa = std::min(out.certificate.kappa, kd[m].kappa);
    }
    for (int m = 0; m < N; ++m)
        for (int l = 0; l < N; ++l) {
            if (l == m) continue;
            PairCertificate pc;
            pc.from = m;
            pc.to = l;
            pc.cert.kappa = kd[l].kappa;
            pc.cert.theta = smallest_singular(kd[l].A * kd[m].K);
            pc.det = normalized_det(kd[l].A, kd[m].A);
            out.certificate.theta = std::min(out.certificate.theta, pc.cert.theta);
            out.pairs.push_back(pc);
        }
    return out;
}

// ---- optimizers ----

namespace {

cd project(cd z) {
    const double a = std::abs(z);
    return a > kZetaCap ? z * (kZetaCap / a) : z;
}

double real_dot(cd a, cd b) { return (std::conj(a) * b).real(); }

cd random_unit(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> phase(0.0, 2.0 * M_PI);
    return std::polar(1.0, phase(rng));
}

}  // namespace

EdgeSolution solve_edge(const StageView& C, const StageView& D, cd mu, const SolverOptions& opt) {
    EdgeSolution sol;
    sol.target = partial_energy(C, D);
    auto phi = [&](cd z) { return stage_energy(C, z, D, mu).energy; };
    std::mt19937_64 rng(opt.seed);

    cd z = project(mu);
    double e = phi(z);
    if (const double e0 = phi(0.0); e0 < e) z = 0.0, e = e0;
    double step = opt.step;
    for (int it = 0; it < opt.max_iter; ++it) {
        sol.iterations = it;
        if (e <= sol.target + opt.tol) break;
        EnergyGradient eg;
        bool have = false;
        for (int retry = 0; retry <= 8 && !have; ++retry) {
            try {
                eg = energy_with_gradient(C, z, D, mu);
                have = true;
            } catch (const DegenerateAchiever&) {
                z = project(z + 1e-7 * random_unit(rng));
                e = phi(z);
            }
        }
        if (!have) throw NonConvergence({z}, e, "solve_edge: norm achiever stays degenerate");
        if (e <= sol.target + opt.tol) break;
        const cd grad = eg.d_zeta;
        if (std::abs(grad) < 1e-14) throw NonConvergence({z}, e, "solve_edge: stationary above the partial energy");
        double t = std::min(2.0 * step, 1e3);
        bool moved = false;
        while (t > 1e-18) {
            const cd zn = project(z - t * grad);
            const double en = phi(zn);
            if (en <= e + opt.slope * real_dot(grad, zn - z)) {
                z = zn;
                e = en;
                moved = true;
                break;
            }
            t *= opt.shrink;
        }
        if (!moved) throw NonConvergence({z}, e, "solve_edge: line search failed");
        step = t;
    }
    if (e > sol.target + opt.tol) throw NonConvergence({z}, e, "solve_edge: iteration cap reached");
    sol.zeta = z;
    sol.energy = e;
    return sol;
}

EdgeSolution solve_edge(const PDFunction& C, const PDFunction& D, cd mu, const SolverOptions& opt) {
    validate_zeta(mu);
    return solve_edge(StageView(C), StageView(D), mu, opt);
}

namespace {

// First-order model of one edge's pencil on its top eigenvectors X (X* H_C X = I):
// M(d) = diag(lam) + sum_i d_i B[i], with d = (Re zeta, Im zeta, Re mu, Im mu).
struct EdgeModel {
    Eigen::VectorXd lam;
    std::array<Mat, 4> B;

    Mat at(const Eigen::Vector4d& d) const {
        Mat M = lam.cast<cd>().asDiagonal();
        for (int i = 0; i < 4; ++i) M += d(i) * B[static_cast<std::size_t>(i)];
        return M;
    }
};

constexpr Eigen::Index kMaxBranches = 3;

EdgeModel edge_model(const StageView& C, cd zeta, const StageView& D, cd mu, double window) {
    const Mat GC = C.extended_gram(zeta).transpose(), GD = D.extended_gram(mu).transpose();
    const Mat HC = 0.5 * (GC + GC.adjoint()), HD = 0.5 * (GD + GD.adjoint());
    Eigen::GeneralizedSelfAdjointEigenSolver<Mat> ges(HD, HC, Eigen::ComputeEigenvectors | Eigen::Ax_lBx);
    const Eigen::VectorXd& ev = ges.eigenvalues();
    const Eigen::Index n = ev.size();
    Eigen::Index k = 1;
    while (k < std::min(n, kMaxBranches) && ev(n - 1) - ev(n - 1 - k) <= window) ++k;
    const Mat X = ges.eigenvectors().rightCols(k).rowwise().reverse();
    const auto pg = static_cast<Eigen::Index>(C.space.idx.pos_g());
    const auto pe = static_cast<Eigen::Index>(C.space.idx.pos_e());
    // The completed entry sits at (pe, pg) of H with slope n_g n_e in zeta.
    auto slope = [&](double sc, cd unit) {
        Mat S(k, k);
        for (Eigen::Index p = 0; p < k; ++p)
            for (Eigen::Index q = 0; q < k; ++q)
                S(p, q) = sc * (unit * std::conj(X(pe, p)) * X(pg, q) + std::conj(unit) * std::conj(X(pg, p)) * X(pe, q));
        return S;
    };
    EdgeModel m;
    m.lam = ev.tail(k).reverse();
    const Mat L = m.lam.cast<cd>().asDiagonal();
    const double sc = C.res.n_g * C.res.n_e, sd = D.res.n_g * D.res.n_e;
    for (int i = 0; i < 2; ++i) {
        const Mat dC = slope(sc, i == 0 ? cd(1, 0) : cd(0, 1));
        m.B[static_cast<std::size_t>(i)] = -0.5 * (dC * L + L * dC);
        m.B[static_cast<std::size_t>(i + 2)] = slope(sd, i == 0 ? cd(1, 0) : cd(0, 1));
    }
    return m;
}

Eigen::VectorXd project_simplex(const Eigen::VectorXd& v) {
    std::vector<double> u(v.data(), v.data() + v.size());
    std::sort(u.begin(), u.end(), std::greater<>());
    double cum = 0, theta = 0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        cum += u[i];
        const double th = (cum - 1.0) / static_cast<double>(i + 1);
        if (u[i] - th > 0) theta = th;
    }
    return (v.array() - theta).cwiseMax(0.0);
}

// Maximizer of c.w - radius/2 w^T Q w over the simplex, by active-set enumeration.
std::optional<Eigen::VectorXd> dual_exact(const Eigen::MatrixXd& Q, const Eigen::VectorXd& c, double radius,
                                          Eigen::Index max_support) {
    const Eigen::Index k = c.size();
    std::optional<Eigen::VectorXd> best;
    double best_val = -std::numeric_limits<double>::infinity();
    const double scale = std::max(c.cwiseAbs().maxCoeff(), radius * Q.cwiseAbs().maxCoeff()) + 1e-300;
    for (unsigned mask = 1; mask < (1u << k); ++mask) {
        std::vector<Eigen::Index> S;
        for (Eigen::Index i = 0; i < k; ++i)
            if (mask & (1u << i)) S.push_back(i);
        const auto m = static_cast<Eigen::Index>(S.size());
        if (m > max_support) continue;
        Eigen::MatrixXd K = Eigen::MatrixXd::Zero(m + 1, m + 1);
        Eigen::VectorXd rhs(m + 1);
        for (Eigen::Index a = 0; a < m; ++a) {
            for (Eigen::Index b = 0; b < m; ++b) K(a, b) = radius * Q(S[a], S[b]);
            K(a, m) = 1.0;
            K(m, a) = 1.0;
            rhs(a) = c(S[a]);
        }
        rhs(m) = 1.0;
        Eigen::FullPivLU<Eigen::MatrixXd> lu(K);
        if (!lu.isInvertible()) continue;
        const Eigen::VectorXd sol = lu.solve(rhs);
        if (sol.head(m).minCoeff() < -1e-12) continue;
        Eigen::VectorXd w = Eigen::VectorXd::Zero(k);
        for (Eigen::Index a = 0; a < m; ++a) w(S[a]) = std::max(sol(a), 0.0);
        const Eigen::VectorXd slack = c - radius * (Q * w);
        if ((slack.array() - sol(m)).maxCoeff() > 1e-10 * scale) continue;
        const double val = c.dot(w) - 0.5 * radius * w.dot(Q * w);
        if (val > best_val) {
            best_val = val;
            best = w;
        }
    }
    return best;
}

// Same problem by accelerated projected gradient.
Eigen::VectorXd dual_iterative(const Eigen::MatrixXd& Q, const Eigen::VectorXd& c, double radius) {
    const Eigen::Index k = c.size();
    const double top = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(Q, Eigen::EigenvaluesOnly).eigenvalues()(k - 1);
    const double L = radius * std::max(top, 1e-300);
    Eigen::Index best = 0;
    c.maxCoeff(&best);
    Eigen::VectorXd w = Eigen::VectorXd::Zero(k);
    w(best) = 1.0;
    Eigen::VectorXd y = w;
    double mom = 1.0;
    for (int it = 0; it < 5000; ++it) {
        const Eigen::VectorXd wn = project_simplex(y + (c - radius * (Q * y)) / L);
        const double mn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * mom * mom));
        y = wn + ((mom - 1.0) / mn) * (wn - w);
        w = wn;
        mom = mn;
    }
    return w;
}

// argmin_d max_k (c_k + g_k . d) + |d|^2 / (2 radius) through the dual, d = -radius G w.
// Returns d, the model value max_k (c_k + g_k . d) and the dual weights.
std::tuple<Eigen::VectorXd, double, Eigen::VectorXd> prox_step(const Eigen::MatrixXd& G, const Eigen::VectorXd& c,
                                                                double radius) {
    const Eigen::MatrixXd Q = G.transpose() * G;
    std::optional<Eigen::VectorXd> w;
    if (c.size() <= 12) w = dual_exact(Q, c, radius, G.rows() + 1);
    if (!w) w = dual_iterative(Q, c, radius);
    const Eigen::VectorXd d = -radius * (G * *w);
    return {d, (c + G.transpose() * d).maxCoeff(), *w};
}

Eigen::VectorXd cycle_residuals(const std::vector<StageView>& V, const std::vector<double>& base,
                                const std::vector<cd>& z) {
    const std::size_t N = V.size();
    Eigen::VectorXd r(N);
    for (std::size_t n = 0; n < N; ++n)
        r(static_cast<Eigen::Index>(n)) = stage_energy(V[n], z[n], V[(n + 1) % N], z[(n + 1) % N]).energy - base[n];
    return r;
}

// Edges N-1, ..., 1 solved backwards from z0, so only edge 0 can stay above its partial energy.
std::vector<cd> edge_chain(const std::vector<StageView>& V, cd z0, const SolverOptions& eopt) {
    const std::size_t N = V.size();
    std::vector<cd> z(N);
    z[0] = z0;
    for (std::size_t n = N - 1; n >= 1; --n) z[n] = solve_edge(V[n], V[(n + 1) % N], z[(n + 1) % N], eopt).zeta;
    return z;
}

// Newton iteration on the fixed point z0 = argmin_zeta e(D_0^zeta, D_1^{z_1(z0)}); keeps the best
// point seen by largest excess.
void chain_start(const std::vector<StageView>& V, const std::vector<double>& base, const SolverOptions& opt,
                 std::vector<cd>& z, Eigen::VectorXd& r) {
    SolverOptions eopt = opt;
    eopt.tol = 0.25 * opt.tol;
    auto consider = [&](const std::vector<cd>& zc) {
        const Eigen::VectorXd rc = cycle_residuals(V, base, zc);
        if (rc.maxCoeff() < r.maxCoeff()) z = zc, r = rc;
    };
    auto image = [&](cd z0, std::vector<cd>* chain) {
        std::vector<cd> zc = edge_chain(V, z0, eopt);
        const cd t = solve_edge(V[0], V[1], zc[1], eopt).zeta;
        if (chain) *chain = zc;
        return t - z0;
    };
    try {
        cd x = z[0];
        std::vector<cd> zc;
        cd f = image(x, &zc);
        consider(zc);
        for (int it = 0; it < 30 && r.maxCoeff() > opt.tol; ++it) {
            const double h = std::clamp(std::abs(f), 1e-6, 1e-2);
            const cd fr = image(x + h, nullptr), fi = image(x + cd(0, h), nullptr);
            Eigen::Matrix2d J;
            J << (fr - f).real() / h, (fi - f).real() / h, (fr - f).imag() / h, (fi - f).imag() / h;
            const Eigen::Vector2d step = J.fullPivLu().solve(Eigen::Vector2d(-f.real(), -f.imag()));
            if (!step.allFinite()) break;
            bool moved = false;
            for (double t = 1.0; t > 1e-3; t *= 0.5) {
                const cd xn = project(x + t * cd(step(0), step(1)));
                std::vector<cd> zn;
                const cd fn = image(xn, &zn);
                if (std::abs(fn) < std::abs(f)) {
                    x = xn;
                    f = fn;
                    consider(zn);
                    moved = true;
                    break;
                }
            }
            if (!moved) break;
        }
    } catch (const NonConvergence&) {
        // fall back to the proximal iteration from the best point so far
    }
}

}  // namespace

CycleSolution solve_cycle_params(const std::vector<StageView>& V, const SolverOptions& opt) {
    const std::size_t N = V.size();
    if (N < 2) throw std::invalid_argument("solve_cycle_params: at least two members required");
    CycleSolution sol;
    for (std::size_t n = 0; n < N; ++n) sol.base.push_back(partial_energy(V[n], V[(n + 1) % N]));
    std::vector<cd> z(N, 0.0);
    Eigen::VectorXd r = cycle_residuals(V, sol.base, z);
    chain_start(V, sol.base, opt, z, r);
    // Proximal steps on the largest excess. Each edge contributes the top eigenvalue of a
    // first-order model on its near-top eigenvectors; the proximal subproblem is solved by
    // cutting planes u* M(d) u, adding the model's own top eigenvectors until it is exact.
    constexpr double kBranchWindow = 1e-2;
    constexpr int kInner = 40;
    struct Piece {
        std::size_t edge;
        Vec u;
    };
    const auto dim = static_cast<Eigen::Index>(2 * N);
    double radius = opt.step;
    int it = 0;
    for (; it < opt.max_iter; ++it) {
        const double phi = r.maxCoeff();
        if (phi <= opt.tol) break;
        std::vector<EdgeModel> M;
        for (std::size_t n = 0; n < N; ++n) M.push_back(edge_model(V[n], z[n], V[(n + 1) % N], z[(n + 1) % N], kBranchWindow));
        auto local = [&](std::size_t n, const Eigen::VectorXd& d) {
            const std::size_t m = (n + 1) % N;
            return Eigen::Vector4d(d(2 * n), d(2 * n + 1), d(2 * m), d(2 * m + 1));
        };
        bool moved = false;
        while (radius > 1e-16) {
            std::vector<Piece> pieces;
            for (std::size_t n = 0; n < N; ++n)
                for (Eigen::Index j = 0; j < M[n].lam.size(); ++j) pieces.push_back({n, Vec::Unit(M[n].lam.size(), j)});
            Eigen::VectorXd d = Eigen::VectorXd::Zero(dim);
            double model = phi;
            for (int inner = 0; inner < kInner; ++inner) {
                Eigen::MatrixXd G = Eigen::MatrixXd::Zero(dim, static_cast<Eigen::Index>(pieces.size()));
                Eigen::VectorXd c(static_cast<Eigen::Index>(pieces.size()));
                for (std::size_t p = 0; p < pieces.size(); ++p) {
                    const std::size_t n = pieces[p].edge, m = (n + 1) % N;
                    const Vec& u = pieces[p].u;
                    const auto col = static_cast<Eigen::Index>(p);
                    c(col) = (u.adjoint() * M[n].lam.cast<cd>().asDiagonal() * u)(0, 0).real() - sol.base[n];
                    const std::array<std::size_t, 4> at{2 * n, 2 * n + 1, 2 * m, 2 * m + 1};
                    for (std::size_t i = 0; i < 4; ++i)
                        G(static_cast<Eigen::Index>(at[i]), col) += (u.adjoint() * M[n].B[i] * u)(0, 0).real();
                }
                const auto [dn, lower, w] = prox_step(G, c, radius);
                d = dn;
                // Exact model value at d and the cuts that would tighten it.
                model = -std::numeric_limits<double>::infinity();
                std::vector<Piece> cuts;
                for (std::size_t n = 0; n < N; ++n) {
                    Eigen::SelfAdjointEigenSolver<Mat> es(M[n].at(local(n, d)));
                    const Eigen::Index k = es.eigenvalues().size();
                    const double top = es.eigenvalues()(k - 1) - sol.base[n];
                    model = std::max(model, top);
                    if (top > lower + 1e-3 * std::max(phi - lower, 0.0)) cuts.push_back({n, es.eigenvectors().col(k - 1)});
                }
                if (cuts.empty() || model - lower <= 1e-2 * std::max(phi - model, 0.0) + 1e-15) break;
                std::vector<Piece> kept;
                for (std::size_t p = 0; p < pieces.size(); ++p)
                    if (w(static_cast<Eigen::Index>(p)) > 0) kept.push_back(pieces[p]);
                for (auto& q : cuts) kept.push_back(std::move(q));
                pieces = std::move(kept);
            }
            const double predicted = phi - model;
            if (!(predicted > 1e-16)) {
                radius *= 0.25;
                continue;
            }
            std::vector<cd> zn(N);
            for (std::size_t n = 0; n < N; ++n) zn[n] = project(z[n] + cd(d(2 * n), d(2 * n + 1)));
            Eigen::VectorXd rn = cycle_residuals(V, sol.base, zn);
            const double actual = phi - rn.maxCoeff();
            if (actual >= 0.1 * predicted) {
                // Nearly equal members leave a flat valley along the accepted direction; follow it
                // while the largest excess keeps dropping.
                for (double t = 2.0; t <= 1024.0; t *= 2.0) {
                    std::vector<cd> zt(N);
                    for (std::size_t n = 0; n < N; ++n) zt[n] = project(z[n] + t * (zn[n] - z[n]));
                    const Eigen::VectorXd rt = cycle_residuals(V, sol.base, zt);
                    if (!(rt.maxCoeff() < rn.maxCoeff())) break;
                    zn = zt;
                    rn = rt;
                }
                z = zn;
                r = rn;
                if (actual >= 0.75 * predicted) radius = std::min(radius * 2.0, 1e8);
                moved = true;
                break;
            }
            radius *= 0.25;
        }
        if (!moved) break;
    }
    if (r.maxCoeff() > opt.tol) throw NonConvergence(z, r.maxCoeff(), "solve_cycle_params: residual above tolerance");
    sol.zeta = z;
    sol.energy.resize(N);
    sol.alpha_product.assign(N, 0.0);
    for (std::size_t n = 0; n < N; ++n) {
        sol.energy[n] = sol.base[n] + r(static_cast<Eigen::Index>(n));
        try {
            sol.alpha_product[n] = energy_with_gradient(V[n], z[n], V[(n + 1) % N], z[(n + 1) % N]).comp.alpha_product();
        } catch (const DegenerateAchiever&) {
            // several achievers: the product is taken to be zero
        }
    }
    sol.objective = r.squaredNorm();
    sol.iterations = it;
    return sol;
}

CycleSolution solve_cycle_params(const std::vector<PDFunction>& family, const SolverOptions& opt) {
    std::vector<StageView> V;
    for (const auto& C : family) V.emplace_back(C);
    return solve_cycle_params(V, opt);
}

// ---- configurations ----

int Configuration::index(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == name) return static_cast<int>(i);
    return -1;
}

void Configuration::validate() const {
    const int N = static_cast<int>(names.size());
    if (N == 0) throw InputError("vertices", "configuration has no vertices");
    if (static_cast<int>(functions.size()) != N) throw InputError("vertices", "one function per vertex required");
    if (r < 1) throw InputError("r", "r must be at least 1");
    if (d < 1) throw InputError("d", "d must be at least 1");
    std::vector<int> out(N, 0), in(N, 0);
    for (const auto& [a, b] : edges) {
        if (a < 0 || b < 0 || a >= N || b >= N || a == b) throw InputError("edges", "edge endpoints must be distinct vertices");
        ++out[a];
        ++in[b];
    }
    for (int v = 0; v < N; ++v) {
        const auto& C = functions[v];
        const std::string key = "vertices." + names[v];
        if (C.d() != d) throw InputError(key, "dimension differs from d");
        if (C.domain().kind != DomainKind::Ball || C.domain().r < 2 * r)
            throw InputError(key, "a ball domain of radius at least 2r is required");
        if ((C.at(Word()) - Mat::Identity(d, d)).cwiseAbs().maxCoeff() > 1e-12)
            throw InputError(key, "function is not normalized");
        if (check_pd(restrict_to(C, Domain::ball(2 * r))).verdict != Verdict::strict)
            throw InputError(key, "function is not strictly positive definite");
    }
    if (shape == Shape::tree) {
        const int root_ix = index(root);
        if (root_ix < 0) throw InputError("root", "root is not a vertex");
        if (static_cast<int>(edges.size()) != N - 1) throw InputError("edges", "a tree has |V| - 1 edges");
        for (int v = 0; v < N; ++v)
            if (out[v] != (v == root_ix ? 0 : 1))
                throw InputError("edges", "every non-root vertex needs exactly one edge toward the root");
        if (static_cast<int>(tree_order().size()) != N) throw InputError("edges", "not every vertex reaches the root");
    } else {
        if (N < 2) throw InputError("vertices", "a cycle needs at least two vertices");
        if (static_cast<int>(edges.size()) != N) throw InputError("edges", "a cycle has |V| edges");
        for (int v = 0; v < N; ++v)
            if (out[v] != 1 || in[v] != 1) throw InputError("edges", "every cycle vertex needs one edge in and one out");
        if (static_cast<int>(cycle_order().size()) != N) throw InputError("edges", "edges form several cycles");
    }
}

std::vector<int> Configuration::tree_order() const {
    std::vector<int> order{index(root)};
    std::vector<bool> seen(names.size(), false);
    if (order[0] < 0) return {};
    seen[order[0]] = true;
    for (std::size_t i = 0; i < order.size(); ++i)
        for (const auto& [a, b] : edges)
            if (b == order[i] && !seen[a]) {
                seen[a] = true;
                order.push_back(a);
            }
    return order;
}

std::vector<int> Configuration::cycle_order() const {
    std::vector<int> order{0};
    for (std::size_t step = 0; step < names.size(); ++step) {
        int next = -1;
        for (const auto& [a, b] : edges)
            if (a == order.back()) next = b;
        if (next < 0 || next == 0) break;
        order.push_back(next);
    }
    return order;
}

Configuration load_configuration(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw InputError("config", "cannot open " + file.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw InputError("config", std::string("malformed JSON: ") + e.what());
    }
    Configuration cfg;
    auto need = [&](const char* key) -> const nlohmann::json& {
        if (!j.contains(key)) throw InputError(key, std::string("missing key ") + key);
        return j.at(key);
    };
    const std::string shape = need("shape").get<std::string>();
    if (shape == "tree")
        cfg.shape = Shape::tree;
    else if (shape == "cycle")
        cfg.shape = Shape::cycle;
    else
        throw InputError("shape", "shape must be tree or cycle");
    cfg.r = need("r").get<int>();
    cfg.d = need("d").get<int>();
    if (cfg.shape == Shape::tree) cfg.root = need("root").get<std::string>();
    const auto base = file.parent_path();
    for (const auto& [name, path] : need("vertices").items()) {
        cfg.names.push_back(name);
        std::filesystem::path p = path.get<std::string>();
        if (p.is_relative()) p = base / p;
        cfg.functions.push_back(load_pdfunction(p));
    }
    for (const auto& e : need("edges")) {
        if (!e.is_array() || e.size() != 2) throw InputError("edges", "edges are [from, to] pairs");
        const int a = cfg.index(e[0].get<std::string>()), b = cfg.index(e[1].get<std::string>());
        if (a < 0 || b < 0) throw InputError("edges", "edge names an unknown vertex");
        cfg.edges.emplace_back(a, b);
    }
    cfg.validate();
    return cfg;
}

std::vector<double> sigma_schedule(Schedule kind, double epsilon, std::size_t stages) {
    std::vector<double> out(stages);
    for (std::size_t i = 0; i < stages; ++i)
        out[i] = kind == Schedule::uniform ? epsilon / (4.0 * static_cast<double>(stages))
                                           : epsilon / 4.0 * std::ldexp(1.0, -static_cast<int>(i + 1));
    return out;
}

std::size_t stage_count(int r, int R, int d) {
    std::size_t n = 0;
    for (int len = 2 * r + 1; len <= 2 * R; ++len) n += 2 * static_cast<std::size_t>(std::pow(3, len - 1));
    return n * static_cast<std::size_t>(d * d);
}

double encost_ratio(double before, double after) {
    const double num = after - 1.0, den = before - 1.0;
    if (den < 1e-10) return num < 1e-10 ? 1.0 : std::numeric_limits<double>::infinity();
    return num / den;
}

namespace {

double min_eigenvalue(const Mat& M) {
    Eigen::SelfAdjointEigenSolver<Mat> es(M, Eigen::EigenvaluesOnly);
    return es.eigenvalues()(0);
}

}  // namespace

ConfigSolution solve_configuration(const Configuration& cfg, int R, double epsilon, const ConfigOptions& opt) {
    cfg.validate();
    if (R <= cfg.r) throw std::invalid_argument("solve_configuration: R must exceed r");
    if (!(epsilon > 0)) throw std::invalid_argument("solve_configuration: epsilon must be positive");
    const auto t0 = std::chrono::steady_clock::now();
    const int N = static_cast<int>(cfg.names.size());
    const Word last = last_of_length(2 * R);
    const std::size_t S = stage_count(cfg.r, R, cfg.d);
    const std::vector<double> sigma = opt.sigma.empty() ? sigma_schedule(opt.schedule, epsilon, S) : opt.sigma;
    if (sigma.size() < S) throw InputError("sigma", "sigma schedule has fewer entries than stages");

    ConfigSolution out;
    SolverReport& rep = out.report;
    rep.budget = 2.0 * std::accumulate(sigma.begin(), sigma.begin() + static_cast<std::ptrdiff_t>(S), 0.0);

    std::vector<PDFunction> base, F;
    std::vector<double> margins;
    for (const auto& C : cfg.functions) {
        base.push_back(restrict_to(C, Domain::ball(2 * cfg.r)));
        margins.push_back(check_pd(base.back()).min_eigenvalue);
        F.push_back(as_first_stage(base.back()));
    }
    for (const auto& [a, b] : cfg.edges) rep.edges.push_back({a, b, relative_energy(base[a], base[b], cfg.r).energy, 1.0});

    std::vector<int> order, parent(N, -1);
    if (cfg.shape == Shape::tree) {
        order = cfg.tree_order();
        for (const auto& [a, b] : cfg.edges) parent[a] = b;
    } else {
        order = cfg.cycle_order();
    }

    std::vector<cd> zeta(N, 0.0);
    double consumed = 0;
    for (std::size_t rank = 0; !(last < F[0].domain().g); ++rank) {
        const Domain dom = F[0].domain();
        const Stage st{dom.g, dom.j, dom.k};
        const double sg = sigma[rank];
        StageRecord rec;
        rec.stage = st;
        rec.sigma = sg;

        auto views_of = [&]() {
            std::vector<StageView> V;
            for (int v = 0; v < N; ++v) {
                try {
                    V.emplace_back(F[v]);
                } catch (const std::exception& e) {
                    throw StageFailure(st, v, std::string("stage space: ") + e.what());
                }
            }
            return V;
        };
        std::vector<StageView> V = views_of();

        if (opt.singularize && st.g.length() >= 5) {
            double emax = 1.0;
            for (const auto& [a, b] : cfg.edges) emax = std::max(emax, partial_energy(V[a], V[b]));
            const double eta_prime = std::sqrt(1.0 + sg / emax) - 1.0;
            const double mu_min = *std::min_element(margins.begin(), margins.end());
            rec.eta = std::min(sg, eta_prime * mu_min / 2.0);
            try {
                SingularResult sr = make_singular(F, rec.eta, opt.solver.seed + rank, margins);
                F = std::move(sr.family);
                margins = sr.margins;
                rec.drift = *std::max_element(sr.distance.begin(), sr.distance.end());
                rec.kappa = sr.certificate.kappa;
                rec.theta = sr.certificate.theta;
                rec.singularized = true;
            } catch (const SingularError& e) {
                throw StageFailure(st, e.member, e.what());
            }
            V = views_of();
        }
        rec.partial_excess = -std::numeric_limits<double>::infinity();
        for (std::size_t e = 0; e < cfg.edges.size(); ++e) {
            const auto [a, b] = cfg.edges[e];
            rec.partial_excess = std::max(rec.partial_excess, partial_energy(V[a], V[b]) - rep.edges[e].before);
        }

        SolverOptions so = opt.solver;
        so.tol = std::min(so.tol, sg);
        so.seed = opt.solver.seed + rank;
        if (cfg.shape == Shape::tree) {
            zeta[order[0]] = 0.0;
            for (std::size_t i = 1; i < order.size(); ++i) {
                const int v = order[i];
                try {
                    const EdgeSolution es = solve_edge(V[v], V[parent[v]], zeta[parent[v]], so);
                    zeta[v] = es.zeta;
                    rec.iterations += es.iterations;
                } catch (const std::exception& e) {
                    throw StageFailure(st, v, e.what());
                }
            }
        } else {
            std::vector<StageView> W;
            for (int v : order) W.push_back(V[v]);
            try {
                const CycleSolution cs = solve_cycle_params(W, so);
                for (std::size_t n = 0; n < order.size(); ++n) zeta[order[n]] = cs.zeta[n];
                rec.iterations += cs.iterations;
            } catch (const std::exception& e) {
                throw StageFailure(st, -1, e.what());
            }
        }
        rec.extended_excess = -std::numeric_limits<double>::infinity();
        for (std::size_t e = 0; e < cfg.edges.size(); ++e) {
            const auto [a, b] = cfg.edges[e];
            const double ee = stage_energy(V[a], zeta[a], V[b], zeta[b]).energy;
            rec.extended_excess = std::max(rec.extended_excess, ee - rep.edges[e].before);
        }
        for (int v = 0; v < N; ++v) {
            margins[v] = std::min(margins[v], min_eigenvalue(V[v].extended_gram(zeta[v])));
            extend_entry_inplace(F[v], zeta[v]);
        }
        consumed += 2.0 * sg;
        rec.consumed = consumed;
        rep.iterations += rec.iterations;
        rep.stages.push_back(rec);
    }

    for (int v = 0; v < N; ++v) {
        out.extensions.push_back(restrict_to(F[v], Domain::ball(2 * R)));
        const PDFunction back = restrict_to(out.extensions[v], Domain::ball(2 * cfg.r));
        VertexRecord vr;
        vr.l1_drift = l1_distance(back, base[v]);
        vr.forward = relative_energy(base[v], back, cfg.r).energy;
        vr.backward = relative_energy(back, base[v], cfg.r).energy;
        vr.min_margin = margins[v];
        rep.vertices.push_back(vr);
    }
    rep.encost = 1.0;
    for (auto& er : rep.edges) {
        er.after = relative_energy(out.extensions[er.from], out.extensions[er.to], R).energy;
        rep.encost = std::max(rep.encost, encost_ratio(er.before, er.after));
    }
    rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

double encost_report(const Configuration& cfg, const std::vector<PDFunction>& ext, int R, double epsilon) {
    if (ext.size() != cfg.functions.size()) throw std::invalid_argument("encost_report: one extension per vertex");
    for (std::size_t v = 0; v < ext.size(); ++v) {
        const PDFunction base = restrict_to(cfg.functions[v], Domain::ball(2 * cfg.r));
        const PDFunction back = restrict_to(ext[v], Domain::ball(2 * cfg.r));
        const double two_sided = std::max(relative_energy(base, back, cfg.r).energy, relative_energy(back, base, cfg.r).energy);
        if (two_sided > 1.0 + epsilon)
            throw InputError("vertices." + cfg.names[v], "restriction energy " + std::to_string(two_sided) + " exceeds 1 + epsilon");
    }
    // encost is an infimum over M >= 1
    double M = 1.0;
    for (const auto& [a, b] : cfg.edges) {
        const double before = relative_energy(restrict_to(cfg.functions[a], Domain::ball(2 * cfg.r)),
                                              restrict_to(cfg.functions[b], Domain::ball(2 * cfg.r)), cfg.r)
                                  .energy;
        const double after = relative_energy(ext[a], ext[b], R).energy;
        M = std::max(M, encost_ratio(before, after));
    }
    return M;
}

nlohmann::json to_json(const SolverReport& rep, const Configuration& cfg) {
    nlohmann::json j;
    j["encost"] = std::isinf(rep.encost) ? nlohmann::json("inf") : nlohmann::json(rep.encost);
    j["budget"] = rep.budget;
    j["iterations"] = rep.iterations;
    j["seconds"] = rep.seconds;
    for (const auto& e : rep.edges)
        j["edges"].push_back({{"from", cfg.names[e.from]}, {"to", cfg.names[e.to]}, {"before", e.before}, {"after", e.after}});
    for (std::size_t v = 0; v < rep.vertices.size(); ++v) {
        const auto& vr = rep.vertices[v];
        j["vertices"][cfg.names[v]] = {{"l1_drift", vr.l1_drift},
                                       {"forward", vr.forward},
                                       {"backward", vr.backward},
                                       {"min_margin", vr.min_margin}};
    }
    j["stages"] = nlohmann::json::array();
    for (const auto& s : rep.stages)
        j["stages"].push_back({{"g", s.stage.g.str()},
                               {"j", s.stage.j},
                               {"k", s.stage.k},
                               {"sigma", s.sigma},
                               {"eta", s.eta},
                               {"singularized", s.singularized},
                               {"kappa", s.kappa},
                               {"theta", s.theta},
                               {"drift", s.drift},
                               {"partial_excess", s.partial_excess},
                               {"extended_excess", s.extended_excess},
                               {"consumed", s.consumed},
                               {"iterations", s.iterations}});
    return j;
}

}  // namespace fpd
