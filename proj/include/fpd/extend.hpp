#pragma once

#include <functional>
#include <vector>

#include "fpd/hilbert.hpp"
#include "fpd/pdcore.hpp"

namespace fpd {

constexpr double kDeltaMin = 1e-6;
constexpr double kZetaCap = 1.0 - kDeltaMin;

struct InvalidParameter : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void validate_zeta(cd zeta);

struct Disk {
    cd center;
    double radius = 0;
};

Disk legal_disk(const PDFunction& C);
Disk legal_disk(const PDFunction& C, const Stage& s);

// The first canonical word after w.
Word next_canonical(const Word& w);

// Re-labels a ball or prefix function as the partial stage (g,1,1) that follows it.
PDFunction as_first_stage(const PDFunction& C);

// Sets C(g)_{j,k} = center + zeta * radius and advances to the next stage.
// After (d,d) the domain moves to (next canonical word, 1, 1).
PDFunction extend_entry(const PDFunction& C, cd zeta);
// In-place form used by the recursions.
void extend_entry_inplace(PDFunction& C, cd zeta);

using ParameterPolicy = std::function<cd(const Stage&, const PDFunction&)>;

struct PolicyError : std::runtime_error {
    Stage stage;
    PolicyError(const Stage& s, const std::string& what) : std::runtime_error(what), stage(s) {}
};

enum class OutputView { ball, prefix };

// Extends a ball/prefix function through every canonical g <= last, all (j,k).
PDFunction extend_through(const PDFunction& C, const Word& last, const ParameterPolicy& policy);
PDFunction extend_ball(const PDFunction& C, int R, const ParameterPolicy& policy,
                       OutputView view = OutputView::ball);
PDFunction central_extension(const PDFunction& C, int R);

// c = (C(0)=1, C(1), ..., C(N)); returns C(N+1).
cd toeplitz_step(const std::vector<cd>& c, cd zeta);

}  // namespace fpd
