#pragma once
// Random inputs shared by unit and acceptance tests.

#include <cstdint>
#include <vector>

#include "fpd/energysolver.hpp"

namespace fixture {

// (1-t) A + t B on the domain of A; normalized strict inputs give a normalized strict output.
inline fpd::PDFunction blend(const fpd::PDFunction& A, const fpd::PDFunction& B, double t) {
    fpd::PDFunction out = A;
    for (const auto& [w, M] : A.entries())
        if (!w.is_identity()) out.set(w, (1.0 - t) * M + t * B.at(w));
    return out;
}

// Functions on Ball(2r) close to a common centre, so pairwise energies stay small.
inline std::vector<fpd::PDFunction> nearby(int n, int r, int d, std::uint64_t seed, double t) {
    const fpd::PDFunction centre = fpd::random_nspd(2 * r, d, seed, 0.1);
    std::vector<fpd::PDFunction> out;
    for (int i = 0; i < n; ++i) out.push_back(blend(centre, fpd::random_nspd(2 * r, d, seed + 1000 + i, 0.1), t));
    return out;
}

// Partial function at the first stage of length `len`, reached by central extension.
inline fpd::PDFunction stage_at_length(int len, int d, std::uint64_t seed, double margin = 0.1) {
    return fpd::as_first_stage(fpd::central_extension(fpd::random_nspd(1, d, seed, margin), len - 1));
}

inline fpd::Configuration three_vertex(fpd::Shape shape, const std::vector<fpd::PDFunction>& f, int r, int d) {
    fpd::Configuration cfg;
    cfg.shape = shape;
    cfg.r = r;
    cfg.d = d;
    cfg.names = {"u", "v", "w"};
    cfg.functions = f;
    if (shape == fpd::Shape::tree) {
        cfg.root = "u";
        cfg.edges = {{1, 0}, {2, 1}};
    } else {
        cfg.edges = {{0, 1}, {1, 2}, {2, 0}};
    }
    return cfg;
}

}  // namespace fixture
