#include "fpd/transport.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>

namespace fpd {

std::string to_string(Restriction r) {
    switch (r) {
        case Restriction::full: return "full";
        case Restriction::x_g: return "X_g";
        case Restriction::x_e: return "X_e";
    }
    return "?";
}

namespace {

Mat hermitian_part(const Mat& M) { return 0.5 * (M + M.adjoint()); }

}  // namespace

double rayleigh(const Mat& gram_C, const Mat& gram_D, const Vec& x) {
    const cd num = (x.adjoint() * gram_D.transpose() * x)(0, 0);
    const cd den = (x.adjoint() * gram_C.transpose() * x)(0, 0);
    return num.real() / den.real();
}

double generalized_energy_pencil(const Mat& gram_C, const Mat& gram_D) {
    const Mat HC = hermitian_part(gram_C.transpose());
    const Mat HD = hermitian_part(gram_D.transpose());
    Eigen::GeneralizedSelfAdjointEigenSolver<Mat> ges(HD, HC, Eigen::ComputeEigenvectors | Eigen::Ax_lBx);
    if (ges.info() != Eigen::Success) throw NotStrict("generalized eigenproblem: H_C not positive definite");
    return ges.eigenvalues()(ges.eigenvalues().size() - 1);
}

EnergyReport generalized_energy(const Mat& gram_C, const Mat& gram_D) {
    const Mat HC = hermitian_part(gram_C.transpose());
    const Mat HD = hermitian_part(gram_D.transpose());
    const Eigen::Index n = HC.rows();
    EnergyReport rep;
    if (n == 0) {
        rep.achiever = Vec();
        return rep;
    }
    Eigen::LLT<Mat> llt(HC);
    const Eigen::VectorXd diag = llt.matrixL().toDenseMatrix().diagonal().real();
    if (llt.info() != Eigen::Success || diag.minCoeff() <= 1e-12)
        throw NotStrict("relative energy: Gram of the first function is not strictly positive");
    const double cond = std::pow(diag.maxCoeff() / diag.minCoeff(), 2);
    if (cond > 1e8) {
        Eigen::GeneralizedSelfAdjointEigenSolver<Mat> ges(HD, HC, Eigen::ComputeEigenvectors | Eigen::Ax_lBx);
        const auto& ev = ges.eigenvalues();
        rep.energy = ev(n - 1);
        rep.second = n > 1 ? ev(n - 2) : -INFINITY;
        rep.achiever = ges.eigenvectors().col(n - 1);
    } else {
        const Mat Linv = llt.matrixL().solve(Mat::Identity(n, n));
        const Mat A = hermitian_part(Linv * HD * Linv.adjoint());
        Eigen::SelfAdjointEigenSolver<Mat> es(A);
        rep.energy = es.eigenvalues()(n - 1);
        rep.second = n > 1 ? es.eigenvalues()(n - 2) : -INFINITY;
        rep.achiever = Linv.adjoint() * es.eigenvectors().col(n - 1);
    }
    const double nrm = std::sqrt((rep.achiever.adjoint() * HC * rep.achiever)(0, 0).real());
    rep.achiever /= nrm;
    return rep;
}

EnergyReport relative_energy(const PDFunction& C, const PDFunction& D, int r) {
    const Word need = last_of_length(2 * r);
    if (!C.has(need) || !D.has(need))
        throw MissingEntry(need);
    if (C.d() != D.d()) throw std::invalid_argument("relative_energy: dimension mismatch");
    const auto B = ball(r);
    return generalized_energy(gram(C, B), gram(D, B));
}

EnergyReport relative_energy(const PDFunction& C, const PDFunction& D) {
    if (C.domain().kind != DomainKind::Ball) throw std::invalid_argument("relative_energy: ball domain required");
    return relative_energy(C, D, C.domain().r / 2);
}

EnergyReport partial_relative_energy(const PDFunction& C, const PDFunction& D, const Stage& s) {
    const auto SC = build_partial_space(C, s);
    const auto SD = build_partial_space(D, s);
    EnergyReport g = generalized_energy(SC.restriction_g(), SD.restriction_g());
    g.restriction = Restriction::x_g;
    EnergyReport e = generalized_energy(SC.restriction_e(), SD.restriction_e());
    e.restriction = Restriction::x_e;
    return g.energy >= e.energy ? g : e;
}

EnergyReport partial_relative_energy(const PDFunction& C, const PDFunction& D) {
    const Domain& dom = C.domain();
    if (dom.kind != DomainKind::Partial || !(dom == D.domain()))
        throw std::invalid_argument("partial_relative_energy: matching partial stages required");
    return partial_relative_energy(C, D, Stage{dom.g, dom.j, dom.k});
}

std::vector<EnergyReport> energy_schedule(const PDFunction& C, const PDFunction& D, const std::vector<int>& radii) {
    std::vector<EnergyReport> out;
    for (int r : radii) out.push_back(relative_energy(C, D, r));
    return out;
}

double perturbation_eta(const Mat& L, double sigma) {
    Eigen::JacobiSVD<Mat> svd(L);
    const double smin = svd.singularValues()(svd.singularValues().size() - 1);
    if (!(smin > 0)) throw std::invalid_argument("perturbation_eta: L is singular");
    // ||L^-1||_op = 1 / smin
    return sigma * smin * smin / 2.0;
}

PerturbationCheck perturbation_bound_check(const Mat& L, const Mat& M, double sigma) {
    PerturbationCheck out;
    out.eta = perturbation_eta(L, sigma);
    out.l1 = (L.adjoint() * L - M.adjoint() * M).cwiseAbs().sum();
    out.premise = out.l1 <= out.eta;
    const Eigen::Index n = L.rows();
    const Mat Linv = L.fullPivLu().solve(Mat::Identity(n, n));
    out.norm_LM = Eigen::JacobiSVD<Mat>(M * Linv).singularValues()(0);
    const auto luM = M.fullPivLu();
    out.norm_ML = luM.isInvertible() ? Eigen::JacobiSVD<Mat>(L * luM.solve(Mat::Identity(n, n))).singularValues()(0)
                                     : INFINITY;
    out.bound = std::max(out.norm_LM, out.norm_ML) <= 1.0 + sigma;
    return out;
}

}  // namespace fpd
