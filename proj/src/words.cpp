#include "fpd/words.hpp"

#include <algorithm>
#include <mutex>
#include <unordered_map>

namespace fpd {

char to_char(Gen x) {
    static constexpr char table[] = {'a', 'b', 'A', 'B'};
    return table[static_cast<int>(x)];
}

Gen gen_from_char(char c) {
    switch (c) {
        case 'a': return Gen::a;
        case 'b': return Gen::b;
        case 'A': return Gen::A;
        case 'B': return Gen::B;
        default: throw std::invalid_argument(std::string("bad letter '") + c + "'");
    }
}

Word::Word(std::string_view text) {
    if (text == "e" || text.empty()) return;
    std::vector<Gen> raw;
    raw.reserve(text.size());
    for (char c : text) raw.push_back(gen_from_char(c));
    *this = reduce(raw);
}

Word Word::from_letters(const std::vector<Gen>& letters) { return reduce(letters); }

Word reduce(const std::vector<Gen>& letters) {
    Word w;
    for (Gen x : letters) {
        if (!w.letters_.empty() && w.letters_.back() == inverse(x))
            w.letters_.pop_back();
        else
            w.letters_.push_back(x);
    }
    return w;
}

Word identity() { return Word(); }

Word generator(Gen x) { return reduce({x}); }

Word Word::inverse() const {
    std::vector<Gen> out(letters_.rbegin(), letters_.rend());
    for (auto& x : out) x = fpd::inverse(x);
    return reduce(out);
}

Word Word::operator*(const Word& other) const {
    std::vector<Gen> out = letters_;
    out.insert(out.end(), other.letters_.begin(), other.letters_.end());
    return reduce(out);
}

std::string Word::str() const {
    if (letters_.empty()) return "e";
    std::string s;
    for (auto x : letters_) s.push_back(to_char(x));
    return s;
}

std::strong_ordering Word::operator<=>(const Word& other) const {
    return shortlex_compare(*this, other);
}

std::strong_ordering shortlex_compare(const Word& u, const Word& v) {
    if (auto c = u.length() <=> v.length(); c != 0) return c;
    const auto& x = u.letters();
    const auto& y = v.letters();
    for (std::size_t i = 0; i < x.size(); ++i)
        if (auto c = static_cast<int>(x[i]) <=> static_cast<int>(y[i]); c != 0) return c;
    return std::strong_ordering::equal;
}

namespace {

bool allowed(const std::vector<Gen>& w, std::size_t i, int rank) {
    return i == 0 || inverse(w[i - 1]) != static_cast<Gen>(rank);
}

int smallest_after(const std::vector<Gen>& w, std::size_t i) {
    for (int r = 0; r < 4; ++r)
        if (allowed(w, i, r)) return r;
    return -1;
}

int largest_before(const std::vector<Gen>& w, std::size_t i) {
    for (int r = 3; r >= 0; --r)
        if (allowed(w, i, r)) return r;
    return -1;
}

}  // namespace

Word successor(const Word& g) {
    std::vector<Gen> w = g.letters();
    const std::size_t n = w.size();
    for (std::size_t pos = n; pos-- > 0;) {
        int r = static_cast<int>(w[pos]) + 1;
        while (r < 4 && !allowed(w, pos, r)) ++r;
        if (r < 4) {
            w[pos] = static_cast<Gen>(r);
            for (std::size_t i = pos + 1; i < n; ++i) w[i] = static_cast<Gen>(smallest_after(w, i));
            return Word::from_letters(w);
        }
    }
    return Word::from_letters(std::vector<Gen>(n + 1, Gen::a));
}

Word predecessor(const Word& g) {
    if (g.is_identity()) throw std::invalid_argument("e has no predecessor");
    std::vector<Gen> w = g.letters();
    const std::size_t n = w.size();
    for (std::size_t pos = n; pos-- > 0;) {
        int r = static_cast<int>(w[pos]) - 1;
        while (r >= 0 && !allowed(w, pos, r)) --r;
        if (r >= 0) {
            w[pos] = static_cast<Gen>(r);
            for (std::size_t i = pos + 1; i < n; ++i) w[i] = static_cast<Gen>(largest_before(w, i));
            return Word::from_letters(w);
        }
    }
    return last_of_length(static_cast<int>(n) - 1);
}

Word last_of_length(int r) {
    return Word::from_letters(std::vector<Gen>(static_cast<std::size_t>(std::max(r, 0)), Gen::B));
}

Word canonical(const Word& g) {
    Word h = g.inverse();
    return h < g ? h : g;
}

bool is_canonical(const Word& g) { return !(g.inverse() < g); }

std::vector<Word> ball(int r) {
    std::vector<Word> out{Word()};
    const Word last = last_of_length(r);
    while (out.back() != last) out.push_back(successor(out.back()));
    return out;
}

std::vector<Word> prefix(const Word& g) {
    std::vector<Word> out{Word()};
    while (out.back() != g) out.push_back(successor(out.back()));
    return out;
}

IndexSet index_set(const Word& g) {
    IndexSet I{g, {}};
    for (const auto& h : prefix(g)) {
        I.members.insert(h);
        I.members.insert(h.inverse());
    }
    return I;
}

bool adjacent(const Word& h, const Word& l, const IndexSet& I) {
    return I.contains(l.inverse() * h);
}

bool is_clique(const std::vector<Word>& vertices, const IndexSet& I) {
    for (std::size_t i = 0; i < vertices.size(); ++i)
        for (std::size_t k = i + 1; k < vertices.size(); ++k)
            if (!adjacent(vertices[i], vertices[k], I)) return false;
    return true;
}

namespace {

Clique compute_clique(const Word& g) {
    const IndexSet I = index_set(g);
    const Word ginv = g.inverse();
    Clique K{g, {Word(), g}};
    for (const auto& h : I.members) {
        if (h.is_identity() || h == g) continue;
        if (I.contains(ginv * h)) K.vertices.push_back(h);
    }
    std::sort(K.vertices.begin(), K.vertices.end());
    if (!is_clique(K.vertices, I))
        throw CliqueError("common neighbourhood of (e," + g.str() + ") is not a clique");
    return K;
}

}  // namespace

Clique clique(const Word& g) {
    if (g.is_identity()) throw std::invalid_argument("clique: g must differ from e");
    static std::mutex mu;
    static std::unordered_map<Word, Clique> memo;
    {
        std::lock_guard<std::mutex> lock(mu);
        if (auto it = memo.find(g); it != memo.end()) return it->second;
    }
    Clique K = compute_clique(g);
    std::lock_guard<std::mutex> lock(mu);
    memo.emplace(g, K);
    return K;
}

PredecessorClique predecessor_clique(const Word& g) {
    const Clique K = clique(g);
    std::vector<Word> rest;
    for (const auto& v : K.vertices)
        if (v != g) rest.push_back(v);
    for (Word h = generator(Gen::a);; h = successor(h)) {
        if (!is_clique(rest, index_set(h))) continue;
        const Clique Kh = clique(h);
        const std::set<Word> target(Kh.vertices.begin(), Kh.vertices.end());
        std::set<Word> candidates;
        for (const auto& k : rest)
            for (const auto& x : Kh.vertices) candidates.insert(k * x.inverse());
        for (const auto& t : candidates) {
            const Word tinv = t.inverse();
            bool inside = std::all_of(rest.begin(), rest.end(),
                                      [&](const Word& k) { return target.count(tinv * k) != 0; });
            if (inside) return {h, t};
        }
        if (g < h) throw CliqueError("no predecessor clique for " + g.str());
    }
}

}  // namespace fpd
