#include "fpd/pdcore.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include <unistd.h>

#include "fpd/hilbert.hpp"

namespace fpd {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool pair_before(int m, int n, int j0, int k0) { return m < j0 || (m == j0 && n < k0); }
}  // namespace

Word Domain::last_full() const {
    switch (kind) {
        case DomainKind::Ball: return last_of_length(r);
        case DomainKind::Prefix: return g;
        case DomainKind::Partial: return predecessor(g);
    }
    return {};
}

bool Domain::operator==(const Domain& o) const {
    if (kind != o.kind) return false;
    switch (kind) {
        case DomainKind::Ball: return r == o.r;
        case DomainKind::Prefix: return g == o.g;
        case DomainKind::Partial: return g == o.g && j == o.j && k == o.k;
    }
    return false;
}

PDFunction::PDFunction(int d, Domain domain) : d_(d), domain_(std::move(domain)) {
    entries_[Word()] = Mat::Identity(d, d);
}

bool PDFunction::has(const Word& w) const {
    const Word c = canonical(w);
    switch (domain_.kind) {
        case DomainKind::Ball: return c.length() <= static_cast<std::size_t>(domain_.r);
        case DomainKind::Prefix: return !(domain_.g < c);
        case DomainKind::Partial: return c < domain_.g;
    }
    return false;
}

bool PDFunction::partial_known(int m, int n) const {
    return domain_.kind == DomainKind::Partial && pair_before(m, n, domain_.j - 1, domain_.k - 1);
}

std::optional<cd> PDFunction::value(const Word& w, int m, int n) const {
    if (has(w)) {
        const Word c = canonical(w);
        auto it = entries_.find(c);
        if (it == entries_.end()) return std::nullopt;
        return w == c ? it->second(m, n) : std::conj(it->second(n, m));
    }
    if (domain_.kind != DomainKind::Partial) return std::nullopt;
    const Word& g = domain_.g;
    auto it = entries_.find(g);
    if (it == entries_.end()) return std::nullopt;
    if (w == g && partial_known(m, n)) return it->second(m, n);
    if (w == g.inverse() && partial_known(n, m)) return std::conj(it->second(n, m));
    return std::nullopt;
}

Mat PDFunction::at(const Word& w) const {
    if (!has(w)) throw MissingEntry(w);
    const Word c = canonical(w);
    auto it = entries_.find(c);
    if (it == entries_.end()) throw MissingEntry(w);
    return w == c ? it->second : Mat(it->second.adjoint());
}

void PDFunction::set(const Word& w, const Mat& value) {
    const Word c = canonical(w);
    entries_[c] = (w == c) ? value : Mat(value.adjoint());
}

void PDFunction::set_partial(int m, int n, cd value) {
    auto& M = entries_[domain_.g];
    if (M.rows() != d_) M = Mat::Constant(d_, d_, cd(kNaN, kNaN));
    M(m, n) = value;
}

void PDFunction::prune() {
    for (auto it = entries_.begin(); it != entries_.end();) {
        const bool keep = has(it->first) ||
                          (domain_.kind == DomainKind::Partial && it->first == domain_.g);
        it = keep ? std::next(it) : entries_.erase(it);
    }
    if (domain_.kind == DomainKind::Partial) {
        auto it = entries_.find(domain_.g);
        if (it != entries_.end())
            for (int m = 0; m < d_; ++m)
                for (int n = 0; n < d_; ++n)
                    if (!partial_known(m, n)) it->second(m, n) = cd(kNaN, kNaN);
    }
}

std::vector<Word> PDFunction::full_words() const {
    std::vector<Word> out;
    for (const auto& w : prefix(domain_.last_full()))
        if (is_canonical(w)) out.push_back(w);
    return out;
}

PDFunction delta(int d, const Domain& dom) {
    PDFunction C(d, dom);
    for (const auto& w : C.full_words())
        if (!w.is_identity()) C.set(w, Mat::Zero(d, d));
    if (dom.kind == DomainKind::Partial)
        for (int m = 0; m < d; ++m)
            for (int n = 0; n < d; ++n)
                if (C.partial_known(m, n)) C.set_partial(m, n, 0.0);
    return C;
}

Mat gram(const PDFunction& C, const std::vector<Word>& E) {
    const int d = C.d();
    const int n = static_cast<int>(E.size());
    Mat G(n * d, n * d);
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) G.block(a * d, b * d, d, d) = C.at(E[b].inverse() * E[a]);
    return G;
}

std::string to_string(Verdict v) {
    switch (v) {
        case Verdict::strict: return "strict";
        case Verdict::semidefinite: return "semidefinite";
        case Verdict::not_pd: return "not_pd";
    }
    return "?";
}

namespace {

void classify(PDCheck& out, double tol) {
    if (out.min_eigenvalue > tol)
        out.verdict = Verdict::strict;
    else if (out.min_eigenvalue >= -tol)
        out.verdict = Verdict::semidefinite;
    else
        out.verdict = Verdict::not_pd;
}

void absorb(PDCheck& acc, const Mat& G, const std::vector<Word>& E) {
    Eigen::SelfAdjointEigenSolver<Mat> es(G);
    const double lo = es.eigenvalues()(0);
    if (acc.matrices_checked == 0 || lo < acc.min_eigenvalue) {
        acc.min_eigenvalue = lo;
        acc.witness_set = E;
        acc.witness_vector = es.eigenvectors().col(0);
    }
    ++acc.matrices_checked;
}

// Principal submatrix of M on the listed rows/columns.
Mat sub(const Mat& M, const std::vector<int>& ix) {
    Mat S(ix.size(), ix.size());
    for (std::size_t a = 0; a < ix.size(); ++a)
        for (std::size_t b = 0; b < ix.size(); ++b) S(a, b) = M(ix[a], ix[b]);
    return S;
}

}  // namespace

PDCheck check_gram(const Mat& G, const std::vector<Word>& E, double tol) {
    PDCheck out;
    absorb(out, G, E);
    classify(out, tol);
    return out;
}

PDCheck check_pd(const PDFunction& C, double tol) {
    PDCheck acc;
    absorb(acc, C.at(Word()), {Word()});
    for (const auto& h : C.full_words()) {
        if (h.is_identity()) continue;
        const auto K = clique(h);
        absorb(acc, gram(C, K.vertices), K.vertices);
    }
    if (C.domain().kind == DomainKind::Partial) {
        const Domain& dom = C.domain();
        int j = 1, k = 1;
        do {
            const auto S = build_partial_space(C, Stage{dom.g, j, k});
            const std::size_t np = S.idx.P.size();
            std::vector<int> xg, xe;
            for (std::size_t i = 0; i < np; ++i) {
                xg.push_back(static_cast<int>(i));
                xe.push_back(static_cast<int>(i));
            }
            xg.push_back(static_cast<int>(S.idx.pos_g()));
            xe.push_back(static_cast<int>(S.idx.pos_e()));
            std::vector<Word> label{dom.g};
            absorb(acc, sub(S.gram, xg), label);
            absorb(acc, sub(S.gram, xe), label);
            if (j == dom.j && k == dom.k) break;
        } while (next_pair(C.d(), j, k));
    }
    classify(acc, tol);
    return acc;
}

PDCheck check_pd_brute_force(const PDFunction& C, double tol, std::size_t vertex_cap) {
    if (C.domain().kind == DomainKind::Partial)
        throw std::invalid_argument("brute-force check needs a ball or prefix domain");
    const IndexSet S = index_set(C.domain().last_full());
    std::vector<Word> V(S.members.begin(), S.members.end());
    if (V.size() > vertex_cap) throw std::invalid_argument("brute-force check: domain too large");
    const int n = static_cast<int>(V.size());
    std::vector<std::vector<char>> adj(n, std::vector<char>(n, 0));
    for (int x = 0; x < n; ++x)
        for (int y = 0; y < n; ++y) adj[x][y] = x != y && S.contains(V[y].inverse() * V[x]);
    int ie = 0;
    while (!V[ie].is_identity()) ++ie;

    PDCheck acc;
    // Bron-Kerbosch with pivoting, all maximal cliques through e.
    std::vector<int> R{ie};
    std::vector<int> P;
    for (int v = 0; v < n; ++v)
        if (adj[ie][v]) P.push_back(v);
    auto rec = [&](auto&& self, std::vector<int>& Rc, std::vector<int> Pc, std::vector<int> Xc) -> void {
        if (Pc.empty() && Xc.empty()) {
            std::vector<Word> E;
            for (int v : Rc) E.push_back(V[v]);
            std::sort(E.begin(), E.end());
            absorb(acc, gram(C, E), E);
            return;
        }
        const int pivot = Pc.empty() ? Xc.front() : Pc.front();
        std::vector<int> cand;
        for (int v : Pc)
            if (!adj[pivot][v]) cand.push_back(v);
        for (int v : cand) {
            std::vector<int> P2, X2;
            for (int u : Pc)
                if (adj[u][v]) P2.push_back(u);
            for (int u : Xc)
                if (adj[u][v]) X2.push_back(u);
            Rc.push_back(v);
            self(self, Rc, P2, X2);
            Rc.pop_back();
            Pc.erase(std::find(Pc.begin(), Pc.end(), v));
            Xc.push_back(v);
        }
    };
    rec(rec, R, P, {});
    classify(acc, tol);
    return acc;
}

Realization realize(const PDFunction& C, const std::vector<Word>& E, double tol) {
    Realization out;
    out.words = E;
    out.d = C.d();
    out.gram = gram(C, E);
    Eigen::SelfAdjointEigenSolver<Mat> es(out.gram);
    Eigen::VectorXd lam = es.eigenvalues();
    if (lam(0) < -tol) throw NotPositive("realize: eigenvalue " + std::to_string(lam(0)));
    lam = lam.cwiseMax(0.0);
    out.factors = lam.cwiseSqrt().asDiagonal() * es.eigenvectors().adjoint();
    return out;
}

Realization realize_ball(const PDFunction& C, int r, double tol) { return realize(C, ball(r), tol); }

namespace {

Mat haar_unitary(int m, std::mt19937_64& rng) {
    std::normal_distribution<double> N(0.0, 1.0);
    Mat Z(m, m);
    for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b) Z(a, b) = cd(N(rng), N(rng));
    Eigen::HouseholderQR<Mat> qr(Z);
    Mat Q = qr.householderQ();
    Mat R = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int a = 0; a < m; ++a) {
        const cd r = R(a, a);
        Q.col(a) *= (std::abs(r) > 0 ? r / std::abs(r) : cd(1));
    }
    return Q;
}

}  // namespace

PDFunction random_nspd(int r, int d, std::uint64_t seed, double margin) {
    std::mt19937_64 rng(seed);
    const int m = 2 * d + 2;
    const Mat Ua = haar_unitary(m, rng);
    const Mat Ub = haar_unitary(m, rng);
    const Mat V = haar_unitary(m, rng).leftCols(d);
    auto pi = [&](const Word& w) {
        Mat P = Mat::Identity(m, m);
        for (Gen x : w.letters()) {
            switch (x) {
                case Gen::a: P = P * Ua; break;
                case Gen::b: P = P * Ub; break;
                case Gen::A: P = P * Ua.adjoint(); break;
                case Gen::B: P = P * Ub.adjoint(); break;
            }
        }
        return P;
    };
    PDFunction C(d, Domain::ball(r));
    for (const auto& w : C.full_words()) {
        if (w.is_identity()) continue;
        // C0(w)_{jk} = (pi(w) v_j)^* v_k
        Mat C0 = (pi(w) * V).adjoint() * V;
        C.set(w, (1.0 - margin) * C0);
    }
    return C;
}

PDFunction mix_with_delta(const PDFunction& C, double s) {
    PDFunction out = C;
    for (const auto& [w, M] : C.entries()) {
        if (w.is_identity()) continue;
        if (C.domain().kind == DomainKind::Partial && w == C.domain().g) {
            for (int m = 0; m < C.d(); ++m)
                for (int n = 0; n < C.d(); ++n)
                    if (C.partial_known(m, n)) out.set_partial(m, n, (1.0 - s) * M(m, n));
        } else {
            out.set(w, (1.0 - s) * M);
        }
    }
    return out;
}

PDFunction restrict_to(const PDFunction& C, const Domain& dom) {
    PDFunction out(C.d(), dom);
    for (const auto& w : out.full_words()) out.set(w, C.at(w));
    if (dom.kind == DomainKind::Partial)
        for (int m = 0; m < C.d(); ++m)
            for (int n = 0; n < C.d(); ++n)
                if (out.partial_known(m, n)) {
                    auto v = C.value(dom.g, m, n);
                    if (!v) throw MissingEntry(dom.g);
                    out.set_partial(m, n, *v);
                }
    return out;
}

double l1_distance(const PDFunction& C, const PDFunction& D) {
    if (!(C.domain() == D.domain()) || C.d() != D.d())
        throw std::invalid_argument("l1_distance: domain mismatch");
    double s = 0;
    for (const auto& w : C.full_words()) {
        const double weight = w.is_identity() ? 1.0 : 2.0;
        s += weight * (C.at(w) - D.at(w)).cwiseAbs().sum();
    }
    if (C.domain().kind == DomainKind::Partial)
        for (int m = 0; m < C.d(); ++m)
            for (int n = 0; n < C.d(); ++n)
                if (C.partial_known(m, n))
                    s += 2.0 * std::abs(*C.value(C.domain().g, m, n) - *D.value(C.domain().g, m, n));
    return s;
}

// ---- JSON ----

namespace {

nlohmann::json matrix_json(const Mat& M) {
    nlohmann::json rows = nlohmann::json::array();
    for (int a = 0; a < M.rows(); ++a) {
        nlohmann::json row = nlohmann::json::array();
        for (int b = 0; b < M.cols(); ++b) {
            if (std::isnan(M(a, b).real()))
                row.push_back(nullptr);
            else
                row.push_back({M(a, b).real(), M(a, b).imag()});
        }
        rows.push_back(row);
    }
    return rows;
}

Mat matrix_from_json(const nlohmann::json& j, int d, const std::string& key, bool allow_null) {
    if (!j.is_array() || static_cast<int>(j.size()) != d) throw InputError(key, key + ": expected " + std::to_string(d) + " rows");
    Mat M(d, d);
    for (int a = 0; a < d; ++a) {
        const auto& row = j[a];
        if (!row.is_array() || static_cast<int>(row.size()) != d)
            throw InputError(key, key + ": expected " + std::to_string(d) + " columns");
        for (int b = 0; b < d; ++b) {
            const auto& x = row[b];
            if (x.is_null() && allow_null) {
                M(a, b) = cd(kNaN, kNaN);
                continue;
            }
            if (x.is_number()) {
                M(a, b) = cd(x.get<double>(), 0.0);
                continue;
            }
            if (!x.is_array() || x.size() != 2 || !x[0].is_number() || !x[1].is_number())
                throw InputError(key, key + ": entries must be [re, im]");
            M(a, b) = cd(x[0].get<double>(), x[1].get<double>());
        }
    }
    return M;
}

Word parse_word(const nlohmann::json& j, const std::string& key) {
    if (!j.is_string()) throw InputError(key, key + ": expected a word string");
    try {
        return Word(j.get<std::string>());
    } catch (const std::invalid_argument& e) {
        throw InputError(key, key + ": " + e.what());
    }
}

int get_int(const nlohmann::json& obj, const std::string& name, const std::string& key) {
    if (!obj.contains(name) || !obj[name].is_number_integer()) throw InputError(key, key + ": expected an integer");
    return obj[name].get<int>();
}

}  // namespace

nlohmann::json to_json(const PDFunction& C) {
    nlohmann::json j;
    j["d"] = C.d();
    const Domain& dom = C.domain();
    switch (dom.kind) {
        case DomainKind::Ball: j["domain"] = {{"kind", "ball"}, {"r", dom.r}}; break;
        case DomainKind::Prefix: j["domain"] = {{"kind", "prefix"}, {"g", dom.g.str()}}; break;
        case DomainKind::Partial:
            j["domain"] = {{"kind", "partial"}, {"g", dom.g.str()}, {"j", dom.j}, {"k", dom.k}};
            break;
    }
    nlohmann::json entries = nlohmann::json::object();
    for (const auto& w : C.full_words()) entries[w.str()] = matrix_json(C.at(w));
    if (dom.kind == DomainKind::Partial) {
        Mat M = Mat::Constant(C.d(), C.d(), cd(kNaN, kNaN));
        for (int m = 0; m < C.d(); ++m)
            for (int n = 0; n < C.d(); ++n)
                if (C.partial_known(m, n)) M(m, n) = *C.value(dom.g, m, n);
        entries[dom.g.str()] = matrix_json(M);
    }
    j["entries"] = entries;
    return j;
}

PDFunction pdfunction_from_json(const nlohmann::json& j, double tol) {
    if (!j.is_object()) throw InputError("", "top level must be an object");
    const int d = get_int(j, "d", "d");
    if (d < 1) throw InputError("d", "d: must be positive");
    if (!j.contains("domain") || !j["domain"].is_object()) throw InputError("domain", "domain: expected an object");
    const auto& jd = j["domain"];
    if (!jd.contains("kind") || !jd["kind"].is_string()) throw InputError("domain.kind", "domain.kind: expected a string");
    const std::string kind = jd["kind"];
    Domain dom;
    if (kind == "ball") {
        dom = Domain::ball(get_int(jd, "r", "domain.r"));
        if (dom.r < 0) throw InputError("domain.r", "domain.r: must be nonnegative");
    } else if (kind == "prefix") {
        if (!jd.contains("g")) throw InputError("domain.g", "domain.g: missing");
        dom = Domain::prefix(parse_word(jd["g"], "domain.g"));
    } else if (kind == "partial") {
        if (!jd.contains("g")) throw InputError("domain.g", "domain.g: missing");
        dom = Domain::partial(parse_word(jd["g"], "domain.g"), get_int(jd, "j", "domain.j"), get_int(jd, "k", "domain.k"));
        if (dom.g.is_identity() || !is_canonical(dom.g)) throw InputError("domain.g", "domain.g: must be a canonical non-identity word");
        if (dom.j < 1 || dom.j > d) throw InputError("domain.j", "domain.j: out of range");
        if (dom.k < 1 || dom.k > d) throw InputError("domain.k", "domain.k: out of range");
    } else {
        throw InputError("domain.kind", "domain.kind: unknown kind '" + kind + "'");
    }
    if (!j.contains("entries") || !j["entries"].is_object()) throw InputError("entries", "entries: expected an object");

    PDFunction C(d, dom);
    std::map<Word, std::pair<std::string, Mat>> seen;
    for (const auto& [name, val] : j["entries"].items()) {
        const std::string key = "entries." + name;
        const Word w = parse_word(nlohmann::json(name), key);
        const bool is_stage = dom.kind == DomainKind::Partial && w == dom.g;
        if (!is_stage && !C.has(w)) throw InputError(key, key + ": outside the domain");
        if (dom.kind == DomainKind::Partial && w == dom.g.inverse())
            throw InputError(key, key + ": partial entries must use the canonical word");
        Mat M = matrix_from_json(val, d, key, is_stage);
        const Word c = canonical(w);
        Mat Mc = (w == c) ? M : Mat(M.adjoint());
        if (auto it = seen.find(c); it != seen.end()) {
            if ((it->second.second - Mc).cwiseAbs().maxCoeff() > tol)
                throw InputError(key, key + ": inconsistent with " + it->second.first);
            continue;
        }
        seen[c] = {key, Mc};
        if (is_stage) {
            for (int m = 0; m < d; ++m)
                for (int n = 0; n < d; ++n)
                    if (C.partial_known(m, n)) {
                        if (std::isnan(Mc(m, n).real()))
                            throw InputError(key, key + ": missing partial entry");
                        C.set_partial(m, n, Mc(m, n));
                    }
        } else {
            if (c.is_identity() && (Mc - Mat::Identity(d, d)).cwiseAbs().maxCoeff() > tol)
                throw InputError(key, key + ": C(e) must be the identity");
            if (c.is_identity() && (Mc - Mc.adjoint()).cwiseAbs().maxCoeff() > tol)
                throw InputError(key, key + ": C(e) must be Hermitian");
            C.set(c, Mc);
        }
    }
    for (const auto& w : C.full_words())
        if (!seen.count(w)) throw InputError("entries." + w.str(), "entries." + w.str() + ": missing");
    if (dom.kind == DomainKind::Partial && (dom.j > 1 || dom.k > 1) && !seen.count(dom.g))
        throw InputError("entries." + dom.g.str(), "entries." + dom.g.str() + ": missing");
    return C;
}

PDFunction load_pdfunction(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError(path, "cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw InputError(path, std::string("parse error: ") + e.what());
    }
    return pdfunction_from_json(j);
}

void write_atomic(const std::string& path, const std::string& text) {
    const std::string tmp = path + ".tmp." + std::to_string(::getpid());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp);
        out << text;
        if (!out) throw std::runtime_error("write failed for " + tmp);
    }
    std::filesystem::rename(tmp, path);
}

void save_pdfunction(const PDFunction& C, const std::string& path) {
    write_atomic(path, to_json(C).dump(1) + "\n");
}

}  // namespace fpd
