#pragma once

#include <complex>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "fpd/words.hpp"

namespace fpd {

using cd = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;

enum class DomainKind { Ball, Prefix, Partial };

// Stage indices j, k are 1-based, matching the (g, j, k) notation.
struct Domain {
    DomainKind kind = DomainKind::Ball;
    int r = 0;
    Word g;
    int j = 1;
    int k = 1;

    static Domain ball(int r) { return {DomainKind::Ball, r, {}, 1, 1}; }
    static Domain prefix(const Word& g) { return {DomainKind::Prefix, 0, g, 1, 1}; }
    static Domain partial(const Word& g, int j, int k) { return {DomainKind::Partial, 0, g, j, k}; }

    // Largest word whose value is fully specified; canonical words up to it are in the domain.
    Word last_full() const;
    bool operator==(const Domain& o) const;
};

struct MissingEntry : std::runtime_error {
    Word word;
    explicit MissingEntry(const Word& w)
        : std::runtime_error("missing entry " + w.str()), word(w) {}
};

struct InputError : std::runtime_error {
    std::string key;
    InputError(std::string key_, const std::string& what)
        : std::runtime_error(what), key(std::move(key_)) {}
};

class PDFunction {
public:
    PDFunction() = default;
    PDFunction(int d, Domain domain);

    int d() const { return d_; }
    const Domain& domain() const { return domain_; }
    const std::map<Word, Mat>& entries() const { return entries_; }

    // True when the full matrix C(w) is specified.
    bool has(const Word& w) const;
    // Single entry, 0-based; empty when unspecified.
    std::optional<cd> value(const Word& w, int m, int n) const;
    // Full matrix with the Hermitian mirror materialised; throws MissingEntry.
    Mat at(const Word& w) const;

    // Stores the canonical representative of {w, w^-1}.
    void set(const Word& w, const Mat& value);
    // Partial-stage entry C(g)_{m,n}, 0-based.
    void set_partial(int m, int n, cd value);
    void set_domain(const Domain& dom) { domain_ = dom; }
    // Drops entries outside the current domain.
    void prune();

    // Canonical words with fully specified values, shortlex order.
    std::vector<Word> full_words() const;
    // Whether (m,n) of C(g) is specified in a partial stage (0-based).
    bool partial_known(int m, int n) const;

private:
    int d_ = 1;
    Domain domain_;
    std::map<Word, Mat> entries_;
};

PDFunction delta(int d, const Domain& dom);

// Block (h,l) equals C(l^-1 h).
Mat gram(const PDFunction& C, const std::vector<Word>& E);

enum class Verdict { strict, semidefinite, not_pd };
std::string to_string(Verdict v);

struct PDCheck {
    Verdict verdict = Verdict::strict;
    double min_eigenvalue = 0;
    std::vector<Word> witness_set;
    Vec witness_vector;  // v with v* gram v = min_eigenvalue
    int matrices_checked = 0;
};

PDCheck check_pd(const PDFunction& C, double tol = 1e-10);
// Every maximal E containing e with E^-1 E in the domain; ball and prefix domains only.
PDCheck check_pd_brute_force(const PDFunction& C, double tol = 1e-10, std::size_t vertex_cap = 400);
// Checks one explicit index set.
PDCheck check_gram(const Mat& G, const std::vector<Word>& E, double tol = 1e-10);

struct Realization {
    std::vector<Word> words;
    int d = 1;
    Mat gram;
    Mat factors;  // column (i*d + j) is Phi(words[i])_j; factors^* factors = gram
};

struct NotPositive : std::runtime_error {
    using std::runtime_error::runtime_error;
};

Realization realize(const PDFunction& C, const std::vector<Word>& E, double tol = 1e-10);
Realization realize_ball(const PDFunction& C, int r, double tol = 1e-10);

PDFunction random_nspd(int r, int d, std::uint64_t seed, double margin);

// (1-s) C + s Delta.
PDFunction mix_with_delta(const PDFunction& C, double s);
PDFunction restrict_to(const PDFunction& C, const Domain& dom);

double l1_distance(const PDFunction& C, const PDFunction& D);

nlohmann::json to_json(const PDFunction& C);
PDFunction pdfunction_from_json(const nlohmann::json& j, double tol = 1e-12);
PDFunction load_pdfunction(const std::string& path);
void save_pdfunction(const PDFunction& C, const std::string& path);

// Writes text to path through a temporary file and rename.
void write_atomic(const std::string& path, const std::string& text);

}  // namespace fpd
