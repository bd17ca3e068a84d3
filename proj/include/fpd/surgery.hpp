#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "fpd/pdcore.hpp"
#include "fpd/words.hpp"

namespace fpd {

enum class Label { a, b };

// Directed a-edges v -> perm_a[v] and b-edges v -> perm_b[v] on [n].
struct LabeledGraph {
    int n = 0;
    std::vector<int> perm_a;
    std::vector<int> perm_b;

    const std::vector<int>& perm(Label l) const { return l == Label::a ? perm_a : perm_b; }
    bool valid() const;
    // Throws InputError naming the broken array.
    void validate() const;
};

// Inverses cached for applying words; tau(g) v acts by the last letter first.
class GraphAction {
public:
    explicit GraphAction(const LabeledGraph& g);
    int step(Gen x, int v) const;
    int apply(const Word& g, int v) const;
    // Undirected neighbours along a, a^-1, b, b^-1.
    std::array<int, 4> neighbours(int v) const;
    int size() const { return static_cast<int>(fwd_[0].size()); }

private:
    std::array<std::vector<int>, 4> fwd_;
};

// Directed cycles of the permutation, each listed from its least vertex, ordered by that vertex.
std::vector<std::vector<int>> cycles(const LabeledGraph& g, Label l);

// Evenly spaced subset of a cycle, ceil(L / 2R) points starting at cycle[0]; consecutive gaps lie in
// [R, 2R], and in [max(R, 3), 2R] once L >= 4R. Throws InputError when L <= 2R.
std::vector<int> r_separated(const std::vector<int>& cycle, int R);

struct SurgeryConflict : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SurgeryResult {
    LabeledGraph graph;
    std::vector<int> original;  // [0, n)
    std::vector<int> W;         // originals whose r-ball avoids every modified vertex
    std::vector<int> B;         // the long b-cycle, in ring order
    std::vector<int> A;         // 10R-separated set the B vertices point into
    std::map<std::string, std::vector<int>> inserted;  // D, D', E, E', B
    std::array<LabeledGraph, 3> snapshots;             // after stages 1, 2 and the B insertion
    int merged = 0;           // b-cycle splices performed
    int already_joined = 0;   // splices skipped because both cycles coincided

    std::size_t inserted_count() const;
};

// Three-stage rewiring shortening a- and b-cycles and adding one long b-cycle. Requires R >= 2 and
// every a- and b-cycle of length >= 4R; throws InputError otherwise and SurgeryConflict when an
// insertion would reuse a cut edge.
SurgeryResult perform_surgery(const LabeledGraph& g, int R, int r);

struct ConditionCheck {
    std::string name;
    bool pass = false;
    double measured = 0;
    double bound = 0;
};

struct SurgeryReport {
    std::array<ConditionCheck, 7> conditions;
    bool all() const;
    const ConditionCheck& operator[](int i) const { return conditions.at(static_cast<std::size_t>(i - 1)); }
};

constexpr int kDistanceSamples = 200;

SurgeryReport verify_conditions(const LabeledGraph& original, const SurgeryResult& result, int r, int R,
                                std::uint64_t seed = 0);

// Uniform random permutations with short cycles merged until every cycle has length >= min_cycle.
LabeledGraph random_labeled_graph(int n, int min_cycle, std::uint64_t seed);

nlohmann::json to_json(const LabeledGraph& g);
LabeledGraph graph_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SurgeryResult& res);
nlohmann::json to_json(const SurgeryReport& rep);

}  // namespace fpd
