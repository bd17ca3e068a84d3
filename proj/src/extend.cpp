#include "fpd/extend.hpp"

#include <cmath>

namespace fpd {

void validate_zeta(cd zeta) {
    if (!(std::abs(zeta) <= kZetaCap + 1e-15))
        throw InvalidParameter("Szego parameter outside |z| <= 1 - 1e-6");
}

Disk legal_disk(const PDFunction& C, const Stage& s) {
    const auto S = build_partial_space(C, s);
    const auto rd = residual_data(S);
    return {rd.cross, rd.n_g * rd.n_e};
}

Disk legal_disk(const PDFunction& C) {
    const Domain& dom = C.domain();
    if (dom.kind != DomainKind::Partial) throw std::invalid_argument("legal_disk: not a partial stage");
    return legal_disk(C, Stage{dom.g, dom.j, dom.k});
}

Word next_canonical(const Word& w) {
    Word x = successor(w);
    while (!is_canonical(x)) x = successor(x);
    return x;
}

PDFunction as_first_stage(const PDFunction& C) {
    if (C.domain().kind == DomainKind::Partial) return C;
    PDFunction out = C;
    out.set_domain(Domain::partial(next_canonical(C.domain().last_full()), 1, 1));
    return out;
}

void extend_entry_inplace(PDFunction& C, cd zeta) {
    validate_zeta(zeta);
    const Domain dom = C.domain();
    if (dom.kind != DomainKind::Partial) throw std::invalid_argument("extend_entry: not a partial stage");
    const Disk disk = legal_disk(C);
    C.set_partial(dom.j - 1, dom.k - 1, disk.center + zeta * disk.radius);
    int j = dom.j, k = dom.k;
    if (next_pair(C.d(), j, k))
        C.set_domain(Domain::partial(dom.g, j, k));
    else
        C.set_domain(Domain::partial(next_canonical(dom.g), 1, 1));
}

PDFunction extend_entry(const PDFunction& C, cd zeta) {
    PDFunction out = C;
    extend_entry_inplace(out, zeta);
    return out;
}

PDFunction extend_through(const PDFunction& C, const Word& last, const ParameterPolicy& policy) {
    PDFunction W = as_first_stage(C);
    while (!(last < W.domain().g)) {
        const Domain dom = W.domain();
        const Stage st{dom.g, dom.j, dom.k};
        cd zeta;
        try {
            zeta = policy(st, W);
            extend_entry_inplace(W, zeta);
        } catch (const PolicyError&) {
            throw;
        } catch (const std::exception& e) {
            throw PolicyError(st, "stage (" + st.g.str() + "," + std::to_string(st.j) + "," +
                                      std::to_string(st.k) + "): " + e.what());
        }
    }
    W.set_domain(Domain::prefix(last));
    W.prune();
    return W;
}

PDFunction extend_ball(const PDFunction& C, int R, const ParameterPolicy& policy, OutputView view) {
    PDFunction out = extend_through(C, last_of_length(R), policy);
    if (view == OutputView::ball) out.set_domain(Domain::ball(R));
    return out;
}

PDFunction central_extension(const PDFunction& C, int R) {
    return extend_ball(C, R, [](const Stage&, const PDFunction&) { return cd(0.0); });
}

cd toeplitz_step(const std::vector<cd>& c, cd zeta) {
    validate_zeta(zeta);
    const int N = static_cast<int>(c.size()) - 1;
    if (N < 0) throw std::invalid_argument("toeplitz_step: empty sequence");
    auto C = [&](int n) { return n >= 0 ? c[n] : std::conj(c[-n]); };
    Mat T(N + 1, N + 1);
    for (int p = 0; p <= N; ++p)
        for (int q = 0; q <= N; ++q) T(p, q) = C(p - q);
    Eigen::LLT<Mat> llt(T);
    if (llt.info() != Eigen::Success || T.selfadjointView<Eigen::Lower>().eigenvalues().minCoeff() <= 1e-12)
        throw std::invalid_argument("toeplitz_step: Toeplitz matrix is not strictly positive");
    if (N == 0) return zeta;
    // Core Phi_1..Phi_N; target Phi_{N+1} and Phi_0.
    Mat M(N, N);
    Vec tg(N), te(N);
    for (int p = 1; p <= N; ++p) {
        for (int q = 1; q <= N; ++q) M(p - 1, q - 1) = C(p - q);
        tg(p - 1) = C(N + 1 - p);
        te(p - 1) = C(-p);
    }
    const Vec cg = Mat(M.transpose()).ldlt().solve(tg);
    const Vec ce = Mat(M.transpose()).ldlt().solve(te);
    cd cross = 0, pg = 0, pe = 0;
    for (int q = 1; q <= N; ++q) {
        cross += cg(q - 1) * C(q);             // <Phi_q, Phi_0>
        pg += cg(q - 1) * C(q - N - 1);        // <Phi_q, Phi_{N+1}>
        pe += ce(q - 1) * C(q);                // <Phi_q, Phi_0>
    }
    const double ng = std::sqrt(std::max(1.0 - pg.real(), 0.0));
    const double ne = std::sqrt(std::max(1.0 - pe.real(), 0.0));
    return zeta * ng * ne + cross;
}

}  // namespace fpd
