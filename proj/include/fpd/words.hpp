#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace fpd {

// Letters are stored as ranks in the order a < b < a^-1 < b^-1.
enum class Gen : std::uint8_t { a = 0, b = 1, A = 2, B = 3 };

inline Gen inverse(Gen x) { return static_cast<Gen>((static_cast<int>(x) + 2) % 4); }
char to_char(Gen x);
Gen gen_from_char(char c);

class Word {
public:
    Word() = default;
    // Parses "e" or a string over {a,b,A,B}; the result is freely reduced.
    explicit Word(std::string_view text);
    static Word from_letters(const std::vector<Gen>& letters);

    const std::vector<Gen>& letters() const { return letters_; }
    std::size_t length() const { return letters_.size(); }
    bool is_identity() const { return letters_.empty(); }

    Word inverse() const;
    Word operator*(const Word& other) const;
    std::string str() const;

    bool operator==(const Word& other) const = default;
    std::strong_ordering operator<=>(const Word& other) const;

private:
    friend Word reduce(const std::vector<Gen>& letters);
    std::vector<Gen> letters_;
};

Word reduce(const std::vector<Gen>& letters);
Word identity();
Word generator(Gen x);

std::strong_ordering shortlex_compare(const Word& u, const Word& v);
Word successor(const Word& g);
// Immediate predecessor; undefined for e.
Word predecessor(const Word& g);

// The smaller of {g, g^-1}.
Word canonical(const Word& g);
bool is_canonical(const Word& g);

// All reduced words of length <= r in shortlex order; size 2*3^r - 1.
std::vector<Word> ball(int r);
// All reduced words h with h <= g, in shortlex order.
std::vector<Word> prefix(const Word& g);
// Last word of length r in shortlex order.
Word last_of_length(int r);

struct IndexSet {
    Word origin;
    std::set<Word> members;
    bool contains(const Word& h) const { return members.count(h) != 0; }
};

IndexSet index_set(const Word& g);

// True when l^-1 h lies in I.
bool adjacent(const Word& h, const Word& l, const IndexSet& I);
bool is_clique(const std::vector<Word>& vertices, const IndexSet& I);

struct Clique {
    Word level;
    std::vector<Word> vertices;  // shortlex order
};

struct CliqueError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

Clique clique(const Word& g);

struct PredecessorClique {
    Word h;
    Word t;
};

PredecessorClique predecessor_clique(const Word& g);

}  // namespace fpd

template <>
struct std::hash<fpd::Word> {
    std::size_t operator()(const fpd::Word& w) const noexcept {
        std::size_t h = w.length();
        for (auto x : w.letters()) h = h * 5 + static_cast<std::size_t>(x) + 1;
        return h;
    }
};
