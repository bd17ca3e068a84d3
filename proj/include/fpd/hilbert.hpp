#pragma once

#include <vector>

#include "fpd/pdcore.hpp"

namespace fpd {

// Basis label (w, m): the m-th coordinate vector attached to w, m 0-based.
struct Index {
    Word w;
    int m = 0;
    bool operator==(const Index&) const = default;
};

struct Stage {
    Word g;
    int j = 1;  // 1-based
    int k = 1;
};

// Lexicographic successor of (j,k) in [d]^2; false once (d,d) is passed.
bool next_pair(int d, int& j, int& k);

// P lists K_g \ {e,g} first, then (g,m) for m < j, then (e,m) for m < k.
// Q = P, then (e,k), then (g,j).
struct StageIndexSets {
    Stage stage;
    int d = 1;
    std::vector<Index> P;
    std::vector<Index> Q;
    std::size_t pos_e() const { return P.size(); }
    std::size_t pos_g() const { return P.size() + 1; }
};

StageIndexSets stage_index_sets(const Word& g, int d, int j, int k);

// Gram over Q with entry (p,q) = <y_p, y_q> = C(l^-1 h)_{m,n} for p = (h,m), q = (l,n).
// The ((g,j),(e,k)) entry and its mirror are NaN.
struct PartialHilbertSpace {
    StageIndexSets idx;
    Mat gram;

    // Gram over P u {(g,j)}, with (g,j) last.
    Mat restriction_g() const;
    // Gram over P u {(e,k)}, with (e,k) last.
    Mat restriction_e() const;
    Mat core() const;
    // Gram over Q with the undefined entry set to C(g)_{j,k} = value.
    Mat completed(cd value) const;
};

// C must specify everything the stage (g,j,k) needs; entries of C(g) at or after (j,k) are ignored.
PartialHilbertSpace build_partial_space(const PDFunction& C, const Stage& s);
// Uses the stage recorded in a Partial domain.
PartialHilbertSpace build_partial_space(const PDFunction& C);

struct NotStrict : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Gram-Schmidt in input order for vectors y_1..y_n with M(p,q) = <y_p, y_q>.
// z = G y is orthogonal, u = N y orthonormal; both lower triangular, G with unit diagonal.
struct OrthoMatrices {
    Mat G;
    Mat N;
    Eigen::VectorXd norms;  // ||z_p||
};

OrthoMatrices ortho_matrices(const Mat& M, double tol = 1e-12);

struct ResidualData {
    double n_g = 0;
    double n_e = 0;
    cd cross{0, 0};
};

struct Degenerate : std::runtime_error {
    using std::runtime_error::runtime_error;
};

ResidualData residual_data(const PartialHilbertSpace& S, double threshold = 1e-12);

// Coefficients c with p y_target = sum_q c_q y_q over the core (core listed first in M).
Vec projection_coefficients(const Mat& core_gram, const Vec& target_inner);

}  // namespace fpd
