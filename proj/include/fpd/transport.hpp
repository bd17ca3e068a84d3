#pragma once

#include <string>
#include <vector>

#include "fpd/hilbert.hpp"
#include "fpd/pdcore.hpp"

namespace fpd {

enum class Restriction { full, x_g, x_e };
std::string to_string(Restriction r);

struct EnergyReport {
    double energy = 1.0;
    double second = 1.0;  // next generalized eigenvalue, for separation checks
    Vec achiever;         // coefficients x with ||sum x_p Phi_D(p)||^2 = energy ||sum x_p Phi_C(p)||^2
    Restriction restriction = Restriction::full;
};

// Largest lambda with H_D x = lambda H_C x, where H = G^T is the coefficient form of a gram()
// matrix G. Cholesky whitening; falls back to the pencil solver when H_C is badly conditioned.
EnergyReport generalized_energy(const Mat& gram_C, const Mat& gram_D);
// Same problem through Eigen's symmetric-definite pencil solver only.
double generalized_energy_pencil(const Mat& gram_C, const Mat& gram_D);
// x^* H_D x / x^* H_C x.
double rayleigh(const Mat& gram_C, const Mat& gram_D, const Vec& x);

// Gram index set B_r x [d]; both functions need entries on B_{2r}.
EnergyReport relative_energy(const PDFunction& C, const PDFunction& D, int r);
// Ball radius is read from the domains: r = floor(R/2).
EnergyReport relative_energy(const PDFunction& C, const PDFunction& D);

// Max over the X_g and X_e restrictions of the stage recorded in the domains.
EnergyReport partial_relative_energy(const PDFunction& C, const PDFunction& D);
EnergyReport partial_relative_energy(const PDFunction& C, const PDFunction& D, const Stage& s);

std::vector<EnergyReport> energy_schedule(const PDFunction& C, const PDFunction& D, const std::vector<int>& radii);

struct PerturbationCheck {
    double eta = 0;
    double l1 = 0;       // ||L*L - M*M||_1, entrywise
    double norm_LM = 0;  // ||t[L,M]|| = ||M L^-1||
    double norm_ML = 0;  // ||t[M,L]|| = ||L M^-1||
    bool premise = false;
    bool bound = false;
    bool holds() const { return !premise || bound; }
};

PerturbationCheck perturbation_bound_check(const Mat& L, const Mat& M, double sigma);
double perturbation_eta(const Mat& L, double sigma);

}  // namespace fpd
