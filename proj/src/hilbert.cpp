#include "fpd/hilbert.hpp"

#include <cmath>
#include <limits>

namespace fpd {

bool next_pair(int d, int& j, int& k) {
    if (++k > d) {
        k = 1;
        if (++j > d) return false;
    }
    return true;
}

StageIndexSets stage_index_sets(const Word& g, int d, int j, int k) {
    StageIndexSets s;
    s.stage = {g, j, k};
    s.d = d;
    const Clique K = clique(g);
    for (const auto& h : K.vertices) {
        if (h.is_identity() || h == g) continue;
        for (int m = 0; m < d; ++m) s.P.push_back({h, m});
    }
    for (int m = 0; m < j - 1; ++m) s.P.push_back({g, m});
    for (int m = 0; m < k - 1; ++m) s.P.push_back({Word(), m});
    s.Q = s.P;
    s.Q.push_back({Word(), k - 1});
    s.Q.push_back({g, j - 1});
    return s;
}

PartialHilbertSpace build_partial_space(const PDFunction& C, const Stage& st) {
    PartialHilbertSpace S;
    S.idx = stage_index_sets(st.g, C.d(), st.j, st.k);
    const auto& Q = S.idx.Q;
    const int n = static_cast<int>(Q.size());
    const int pe = static_cast<int>(S.idx.pos_e());
    const int pg = static_cast<int>(S.idx.pos_g());
    const double nan = std::numeric_limits<double>::quiet_NaN();
    S.gram.resize(n, n);
    for (int p = 0; p < n; ++p)
        for (int q = p; q < n; ++q) {
            if ((p == pg && q == pe) || (p == pe && q == pg)) {
                S.gram(p, q) = S.gram(q, p) = cd(nan, nan);
                continue;
            }
            const Word w = Q[q].w.inverse() * Q[p].w;
            auto v = C.value(w, Q[p].m, Q[q].m);
            if (!v) throw MissingEntry(w);
            S.gram(p, q) = *v;
            S.gram(q, p) = std::conj(*v);
        }
    return S;
}

PartialHilbertSpace build_partial_space(const PDFunction& C) {
    const Domain& dom = C.domain();
    if (dom.kind != DomainKind::Partial) throw std::invalid_argument("build_partial_space: not a partial stage");
    return build_partial_space(C, Stage{dom.g, dom.j, dom.k});
}

namespace {

Mat select(const Mat& M, const std::vector<int>& ix) {
    Mat S(ix.size(), ix.size());
    for (std::size_t a = 0; a < ix.size(); ++a)
        for (std::size_t b = 0; b < ix.size(); ++b) S(a, b) = M(ix[a], ix[b]);
    return S;
}

std::vector<int> core_plus(std::size_t np, std::size_t extra) {
    std::vector<int> ix;
    for (std::size_t i = 0; i < np; ++i) ix.push_back(static_cast<int>(i));
    ix.push_back(static_cast<int>(extra));
    return ix;
}

}  // namespace

Mat PartialHilbertSpace::restriction_g() const { return select(gram, core_plus(idx.P.size(), idx.pos_g())); }

Mat PartialHilbertSpace::restriction_e() const { return select(gram, core_plus(idx.P.size(), idx.pos_e())); }

Mat PartialHilbertSpace::core() const {
    const auto np = static_cast<Eigen::Index>(idx.P.size());
    return gram.topLeftCorner(np, np);
}

Mat PartialHilbertSpace::completed(cd value) const {
    Mat M = gram;
    M(idx.pos_g(), idx.pos_e()) = value;
    M(idx.pos_e(), idx.pos_g()) = std::conj(value);
    return M;
}

OrthoMatrices ortho_matrices(const Mat& M, double tol) {
    const Eigen::Index n = M.rows();
    OrthoMatrices out;
    // M = L L* with z_p = ||z_p|| (L^-1 y)_p, so N = L^-1 and G = diag(L) L^-1.
    Eigen::LLT<Mat> llt(M);
    if (llt.info() != Eigen::Success) throw NotStrict("ortho_matrices: Gram is not positive definite");
    const Mat L = llt.matrixL();
    for (Eigen::Index p = 0; p < n; ++p)
        if (!(L(p, p).real() > tol)) throw NotStrict("ortho_matrices: vector " + std::to_string(p) + " is dependent");
    out.norms = L.diagonal().real();
    out.N = L.triangularView<Eigen::Lower>().solve(Mat::Identity(n, n));
    out.G = out.norms.cast<cd>().asDiagonal() * out.N;
    return out;
}

ResidualData residual_data(const PartialHilbertSpace& S, double threshold) {
    ResidualData out;
    const auto np = static_cast<Eigen::Index>(S.idx.P.size());
    const auto pe = static_cast<Eigen::Index>(S.idx.pos_e());
    const auto pg = static_cast<Eigen::Index>(S.idx.pos_g());
    double ng2 = S.gram(pg, pg).real();
    double ne2 = S.gram(pe, pe).real();
    if (np > 0) {
        const OrthoMatrices on = ortho_matrices(S.core());
        // <Theta, u_r> = sum_q conj(N_rq) <Theta, y_q>
        Vec tg = S.gram.row(pg).head(np).transpose();
        Vec te = S.gram.row(pe).head(np).transpose();
        Vec cg = on.N.conjugate() * tg;
        Vec ce = on.N.conjugate() * te;
        ng2 -= cg.squaredNorm();
        ne2 -= ce.squaredNorm();
        out.cross = (cg.array() * ce.conjugate().array()).sum();
    }
    out.n_g = std::sqrt(std::max(ng2, 0.0));
    out.n_e = std::sqrt(std::max(ne2, 0.0));
    if (out.n_g <= threshold || out.n_e <= threshold)
        throw Degenerate("residual norm below threshold at stage (" + S.idx.stage.g.str() + "," +
                         std::to_string(S.idx.stage.j) + "," + std::to_string(S.idx.stage.k) + ")");
    return out;
}

Vec projection_coefficients(const Mat& core_gram, const Vec& target_inner) {
    return Mat(core_gram.transpose()).ldlt().solve(target_inner);
}

}  // namespace fpd
