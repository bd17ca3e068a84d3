#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fpd/extend.hpp"
#include "fpd/hilbert.hpp"
#include "fpd/pdcore.hpp"
#include "fpd/transport.hpp"

namespace fpd {

// Partial Hilbert space of one function at its current stage, with the residual data of the
// undetermined pair cached. Extending by zeta sets C(g)_{j,k} = cross + zeta * n_g * n_e.
struct StageView {
    Stage stage;
    PartialHilbertSpace space;
    ResidualData res;

    explicit StageView(const PDFunction& C);
    cd entry(cd zeta) const { return res.cross + zeta * res.n_g * res.n_e; }
    Mat extended_gram(cd zeta) const { return space.completed(entry(zeta)); }
};

// Transport energy between the extended spaces X(C^zeta) and X(D^mu), over all of Q.
EnergyReport stage_energy(const StageView& C, cd zeta, const StageView& D, cd mu);
double stage_energy(const PDFunction& C, cd zeta, const PDFunction& D, cd mu);
// Max over the X_g and X_e restrictions (the energy before extension).
double partial_energy(const StageView& C, const StageView& D);

// Coefficients of a norm achiever x on S, S' and of its image on T, T'.
struct ExtensionComponents {
    cd alpha, alpha_prime;
    cd beta, beta_prime;
    cd alpha_product() const { return alpha * std::conj(alpha_prime); }
    cd beta_product() const { return beta * std::conj(beta_prime); }
};

ExtensionComponents extension_components(const StageView& C, const StageView& D, const Vec& achiever);

struct DegenerateAchiever : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Side { zeta, mu };

// Top two generalized eigenvalues must be separated by more than this, relatively.
constexpr double kSeparation = 1e-8;

// d/dchi e(C^{zeta + chi s}, D^mu) or d/dchi e(C^zeta, D^{mu + chi s}) at chi = 0.
double energy_gradient(const StageView& C, const StageView& D, cd zeta, cd mu, Side side, cd s);
double energy_gradient(const PDFunction& C, const PDFunction& D, cd zeta, cd mu, Side side, cd s);

// Real gradient (d/dRe, d/dIm) of the energy in one parameter, plus the value.
struct EnergyGradient {
    double energy = 1;
    cd d_zeta;  // d/dRe zeta + i d/dIm zeta
    cd d_mu;
    ExtensionComponents comp;
};
EnergyGradient energy_with_gradient(const StageView& C, cd zeta, const StageView& D, cd mu);

// ---- singular degeneracies ----

struct SingularityCertificate {
    double kappa = 0;
    double theta = 0;
    double bound(cd zeta) const { return kappa * kappa * theta * theta / (2.0 - 2.0 * std::norm(zeta)); }
};

// Certificate for the ordered pair: e(D_from^zeta, D_to^mu) >= bound(zeta) for all mu.
struct PairCertificate {
    int from = 0;
    int to = 0;
    SingularityCertificate cert;
    double det = 0;  // det(A_l* A_l + A_m* A_m) over its Hadamard bound
};

struct SingularResult {
    std::vector<PDFunction> family;
    std::vector<std::array<cd, 4>> lambda;
    std::vector<double> s;
    std::vector<double> distance;  // l1 distance to the input
    std::vector<double> margins;   // updated eigenvalue lower bounds
    SingularityCertificate certificate;
    std::vector<PairCertificate> pairs;
    const PairCertificate& pair(int from, int to) const;
};

struct SingularError : std::runtime_error {
    int member = -1;
    SingularError(int m, const std::string& what) : std::runtime_error(what), member(m) {}
};

constexpr int kShuttleGrid = 32;
constexpr double kThetaMin = 1e-12;

// margins[m] is a lower bound on the smallest clique-Gram eigenvalue of family[m]; computed
// with check_pd when absent. Perturbations are kept below half of it.
SingularResult make_singular(const std::vector<PDFunction>& family, double eta, std::uint64_t seed = 0,
                             std::vector<double> margins = {});

// Matrix A over Q -> core coordinates in the orthogonal Gram-Schmidt basis, core processed first.
Mat core_coordinates(const Mat& gram_core, const Mat& gram_qp);
Mat core_coordinates(const StageView& V);
// Smallest orthogonal core norm.
double core_kappa(const StageView& V);

// ---- optimizers ----

struct SolverOptions {
    double tol = 1e-6;
    int max_iter = 10000;
    double step = 0.1;
    double shrink = 0.5;
    double slope = 1e-4;
    std::uint64_t seed = 0;
};

struct NonConvergence : std::runtime_error {
    std::vector<cd> best;
    double value = 0;
    NonConvergence(std::vector<cd> b, double v, const std::string& what)
        : std::runtime_error(what), best(std::move(b)), value(v) {}
};

struct EdgeSolution {
    cd zeta;
    double energy = 1;  // e(C^zeta, D^mu)
    double target = 1;  // e(C, D)
    int iterations = 0;
};

EdgeSolution solve_edge(const StageView& C, const StageView& D, cd mu, const SolverOptions& opt = {});
EdgeSolution solve_edge(const PDFunction& C, const PDFunction& D, cd mu, const SolverOptions& opt = {});

struct CycleSolution {
    std::vector<cd> zeta;
    std::vector<double> energy;  // e(D_n^zeta_n, D_{n+1}^zeta_{n+1})
    std::vector<double> base;    // e(D_n, D_{n+1})
    std::vector<cd> alpha_product;
    double objective = 0;
    int iterations = 0;
};

CycleSolution solve_cycle_params(const std::vector<StageView>& family, const SolverOptions& opt = {});
CycleSolution solve_cycle_params(const std::vector<PDFunction>& family, const SolverOptions& opt = {});

// ---- configurations ----

enum class Shape { tree, cycle };

struct Configuration {
    Shape shape = Shape::tree;
    int r = 1;  // energy radius; functions live on Ball(2r)
    int d = 1;
    std::string root;
    std::vector<std::string> names;
    std::vector<std::pair<int, int>> edges;
    std::vector<PDFunction> functions;

    int index(const std::string& name) const;
    // Shape, dimensions, domains, normalization and strictness; throws InputError.
    void validate() const;
    // Vertices of a tree, root first, each after the vertex its edge points to.
    std::vector<int> tree_order() const;
    // Vertices of a cycle in edge order.
    std::vector<int> cycle_order() const;
};

Configuration load_configuration(const std::filesystem::path& file);

enum class Schedule { uniform, geometric };

struct ConfigOptions {
    Schedule schedule = Schedule::uniform;
    std::vector<double> sigma;  // explicit per-stage budgets; overrides the schedule
    bool singularize = true;
    SolverOptions solver;
};

struct StageRecord {
    Stage stage;
    double sigma = 0;
    double eta = 0;
    bool singularized = false;
    double kappa = 0;
    double theta = 0;
    double drift = 0;              // max l1 change of the perturbation step
    double partial_excess = 0;     // max over edges of e_partial - e_before
    double extended_excess = 0;    // max over edges of e(C^zeta, D^mu) - e_before
    double consumed = 0;           // cumulative budget, 2 sigma per stage
    int iterations = 0;
};

struct EdgeRecord {
    int from = 0;
    int to = 0;
    double before = 1;
    double after = 1;
};

struct VertexRecord {
    double l1_drift = 0;
    double forward = 1;   // e(C_v, C^_v restricted)
    double backward = 1;  // e(C^_v restricted, C_v)
    double min_margin = 0;
};

struct SolverReport {
    std::vector<EdgeRecord> edges;
    std::vector<VertexRecord> vertices;
    std::vector<StageRecord> stages;
    double budget = 0;
    double encost = 1;
    int iterations = 0;
    double seconds = 0;
};

struct ConfigSolution {
    std::vector<PDFunction> extensions;  // on Ball(2R)
    SolverReport report;
};

struct StageFailure : std::runtime_error {
    Stage stage;
    int vertex = -1;
    StageFailure(const Stage& s, int v, const std::string& what) : std::runtime_error(what), stage(s), vertex(v) {}
};

// Per-stage budgets summing to epsilon / 4.
std::vector<double> sigma_schedule(Schedule kind, double epsilon, std::size_t stages);
std::size_t stage_count(int r, int R, int d);

ConfigSolution solve_configuration(const Configuration& cfg, int R, double epsilon, const ConfigOptions& opt = {});

// Ratio (e_after - 1) / (e_before - 1), with 0/0 = 1 and x/0 = inf.
double encost_ratio(double before, double after);
// Max ratio over edges at energy radius R; throws InputError when a two-sided restriction
// energy exceeds 1 + epsilon.
double encost_report(const Configuration& cfg, const std::vector<PDFunction>& extensions, int R, double epsilon);

nlohmann::json to_json(const SolverReport& rep, const Configuration& cfg);

}  // namespace fpd
