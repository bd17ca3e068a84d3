// Command-line front end: validation, extension, energies, configuration solving, graph surgery.

#include <cctype>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "fpd/energysolver.hpp"
#include "fpd/extend.hpp"
#include "fpd/pdcore.hpp"
#include "fpd/surgery.hpp"
#include "fpd/transport.hpp"

namespace fs = std::filesystem;
using namespace fpd;

namespace {

constexpr int kOk = 0;
constexpr int kFailed = 1;
constexpr int kBadInput = 2;

std::string num(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%#.12g", x);
    return buf;
}

std::string num(cd z) { return num(z.real()) + " " + num(z.imag()); }

nlohmann::json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError(path, "cannot open " + path);
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw InputError(path, std::string("parse error: ") + e.what());
    }
}

void write_report(const std::string& path, const nlohmann::json& j) { write_atomic(path, j.dump(1) + "\n"); }

// "x", "x+yi", "x-yi" or "yi".
cd parse_complex(const std::string& text) {
    const auto fail = [&] { return InputError("seq", "seq: malformed number '" + text + "'"); };
    const auto real = [&](const std::string& t) {
        if (t.empty() || t == "+") return 1.0;
        if (t == "-") return -1.0;
        std::size_t used = 0;
        double x = 0;
        try {
            x = std::stod(t, &used);
        } catch (const std::exception&) {
            throw fail();
        }
        if (used != t.size()) throw fail();
        return x;
    };
    std::string s;
    for (char ch : text)
        if (!std::isspace(static_cast<unsigned char>(ch))) s += ch;
    if (s.empty()) throw fail();
    if (s.back() != 'i' && s.back() != 'j') {
        if (s == "+" || s == "-") throw fail();
        return {real(s), 0.0};
    }
    s.pop_back();
    std::size_t cut = std::string::npos;
    for (std::size_t i = s.size(); i-- > 1;)
        if ((s[i] == '+' || s[i] == '-') && s[i - 1] != 'e' && s[i - 1] != 'E') {
            cut = i;
            break;
        }
    if (cut == std::string::npos) return {0.0, real(s)};
    const std::string re_part = s.substr(0, cut);
    if (re_part.empty()) throw fail();
    return {real(re_part), real(s.substr(cut))};
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) out.push_back(item);
    return out;
}

int cmd_check(const std::string& file, double tol, bool brute) {
    const PDFunction C = load_pdfunction(file);
    const PDCheck chk = brute ? check_pd_brute_force(C, tol) : check_pd(C, tol);
    std::cout << "verdict " << to_string(chk.verdict) << "\n";
    std::cout << "min_eigenvalue " << num(chk.min_eigenvalue) << "\n";
    std::cout << "matrices_checked " << chk.matrices_checked << "\n";
    nlohmann::json rep = {{"file", file},
                          {"mode", brute ? "brute-force" : "clique"},
                          {"verdict", to_string(chk.verdict)},
                          {"min_eigenvalue", chk.min_eigenvalue},
                          {"matrices_checked", chk.matrices_checked}};
    for (const auto& w : chk.witness_set) rep["witness_set"].push_back(w.str());
    write_report(file + ".check.json", rep);
    return chk.verdict == Verdict::strict ? kOk : kFailed;
}

int cmd_random(int r, int d, std::uint64_t seed, double margin, const std::string& out) {
    const PDFunction C = random_nspd(r, d, seed, margin);
    save_pdfunction(C, out);
    std::cout << "wrote " << out << " (r " << r << ", d " << d << ", " << C.full_words().size() << " entries)\n";
    return kOk;
}

int cmd_extend(const std::string& file, int R, const std::string& out) {
    const PDFunction C = load_pdfunction(file);
    if (C.domain().kind != DomainKind::Ball) throw InputError("domain", "domain: extend needs a ball function");
    const PDFunction E = central_extension(C, R);
    const PDCheck chk = check_pd(E);
    save_pdfunction(E, out);
    std::cout << "wrote " << out << " (radius " << R << ")\n";
    std::cout << "verdict " << to_string(chk.verdict) << "\n";
    std::cout << "min_eigenvalue " << num(chk.min_eigenvalue) << "\n";
    write_report(out + ".extend.json", {{"input", file},
                                        {"output", out},
                                        {"radius", R},
                                        {"policy", "central"},
                                        {"verdict", to_string(chk.verdict)},
                                        {"min_eigenvalue", chk.min_eigenvalue}});
    return chk.verdict == Verdict::strict ? kOk : kFailed;
}

int cmd_energy(const std::string& fa, const std::string& fb, const std::string& radii_text) {
    const PDFunction A = load_pdfunction(fa);
    const PDFunction B = load_pdfunction(fb);
    if (A.d() != B.d()) throw InputError("d", "d: the two functions have different dimensions");
    std::vector<int> radii;
    if (radii_text.empty()) {
        const int top = std::min(A.domain().r, B.domain().r) / 2;
        for (int r = 0; r <= top; ++r) radii.push_back(r);
    } else {
        for (const auto& s : split(radii_text, ',')) {
            try {
                radii.push_back(std::stoi(s));
            } catch (const std::exception&) {
                throw InputError("radii", "radii: malformed entry '" + s + "'");
            }
        }
    }
    nlohmann::json rep = {{"A", fa}, {"B", fb}, {"energies", nlohmann::json::array()}};
    const auto reports = energy_schedule(A, B, radii);
    for (std::size_t i = 0; i < radii.size(); ++i) {
        std::cout << "r " << radii[i] << " energy " << num(reports[i].energy) << "\n";
        rep["energies"].push_back({{"r", radii[i]}, {"energy", reports[i].energy}});
    }
    write_report(fa + ".energy.json", rep);
    return kOk;
}

int cmd_solve(const std::string& config, int R, double epsilon, const std::string& dir, std::uint64_t seed) {
    const Configuration cfg = load_configuration(config);
    fs::create_directories(dir);
    ConfigOptions opt;
    opt.solver.seed = seed;
    ConfigSolution sol;
    try {
        sol = solve_configuration(cfg, R, epsilon, opt);
    } catch (const StageFailure& e) {
        write_report((fs::path(dir) / "report.json").string(),
                     {{"status", "failed"}, {"stage", {{"g", e.stage.g.str()}, {"j", e.stage.j}, {"k", e.stage.k}}},
                      {"vertex", e.vertex < 0 ? nlohmann::json(nullptr) : nlohmann::json(cfg.names[e.vertex])},
                      {"error", e.what()}});
        std::cout << "failed at stage " << e.stage.g.str() << " (" << e.stage.j << "," << e.stage.k << "): " << e.what() << "\n";
        return kFailed;
    }
    for (std::size_t v = 0; v < cfg.names.size(); ++v)
        save_pdfunction(sol.extensions[v], (fs::path(dir) / (cfg.names[v] + ".json")).string());
    nlohmann::json rep = to_json(sol.report, cfg);
    rep["status"] = "ok";
    rep["radius"] = R;
    rep["epsilon"] = epsilon;
    write_report((fs::path(dir) / "report.json").string(), rep);
    for (const auto& e : sol.report.edges)
        std::cout << "edge " << cfg.names[e.from] << " -> " << cfg.names[e.to] << " before " << num(e.before) << " after "
                  << num(e.after) << "\n";
    std::cout << "encost " << num(sol.report.encost) << "\n";
    std::cout << "stages " << sol.report.stages.size() << " seconds " << num(sol.report.seconds) << "\n";
    return kOk;
}

int cmd_surgery(const std::string& file, int R, int r, const std::string& out, bool verify, std::uint64_t seed) {
    const LabeledGraph g = graph_from_json(read_json(file));
    const SurgeryResult res = perform_surgery(g, R, r);
    write_report(out, to_json(res));
    std::cout << "wrote " << out << " (" << res.graph.n << " vertices, " << res.inserted_count() << " inserted)\n";
    if (!verify) return kOk;
    const SurgeryReport rep = verify_conditions(g, res, r, R, seed);
    write_report(out + ".verify.json", to_json(rep));
    for (const auto& c : rep.conditions)
        std::cout << c.name << " " << (c.pass ? "pass" : "fail") << " measured " << num(c.measured) << " bound "
                  << num(c.bound) << "\n";
    return rep.all() ? kOk : kFailed;
}

int cmd_toeplitz(const std::string& seq, const std::string& zeta_text) {
    std::vector<cd> c;
    for (const auto& s : split(seq, ',')) c.push_back(parse_complex(s));
    if (c.empty()) throw InputError("seq", "seq: empty sequence");
    const auto parts = split(zeta_text, ',');
    if (parts.size() != 2) throw InputError("zeta", "zeta: expected re,im");
    cd zeta;
    try {
        zeta = {std::stod(parts[0]), std::stod(parts[1])};
    } catch (const std::exception&) {
        throw InputError("zeta", "zeta: malformed number");
    }
    const cd next = toeplitz_step(c, zeta);
    std::cout << "c" << c.size() << " " << num(next) << "\n";
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Positive definite functions on the free group"};
    app.require_subcommand(1);

    std::string file, file_b, out, radii, config, seq, zeta, policy = "central";
    double tol = 1e-10, margin = 0.1, epsilon = 0.01;
    bool brute = false, verify = false;
    int r = 1, d = 1, R = 2;
    std::uint64_t seed = 0;

    auto* check = app.add_subcommand("check", "Verify positive definiteness");
    check->add_option("pdf", file, "Function file")->required();
    check->add_option("--tol", tol, "Eigenvalue tolerance");
    check->add_flag("--brute-force", brute, "Check every maximal index set");

    auto* random = app.add_subcommand("random", "Random normalized strict function on a ball");
    random->add_option("--r", r, "Ball radius")->required();
    random->add_option("--d", d, "Matrix size")->required();
    random->add_option("--seed", seed, "Seed");
    random->add_option("--margin", margin, "Eigenvalue margin");
    random->add_option("--out", out, "Output file")->required();

    auto* extend = app.add_subcommand("extend", "Extend a ball function");
    extend->add_option("pdf", file, "Function file")->required();
    extend->add_option("--radius", R, "Target ball radius")->required();
    extend->add_option("--policy", policy, "Parameter policy")->check(CLI::IsMember({"central"}));
    extend->add_option("--out", out, "Output file")->required();

    auto* energy = app.add_subcommand("energy", "Relative energies by radius");
    energy->add_option("A", file, "First function")->required();
    energy->add_option("B", file_b, "Second function")->required();
    energy->add_option("--radii", radii, "Comma separated radii");

    auto* solve = app.add_subcommand("solve", "Solve a tree or cycle configuration");
    solve->add_option("--config", config, "Configuration file")->required();
    solve->add_option("--radius", R, "Energy radius of the extensions")->required();
    solve->add_option("--epsilon", epsilon, "Total budget")->required();
    solve->add_option("--out", out, "Output directory")->required();
    solve->add_option("--seed", seed, "Seed");

    auto* surgery = app.add_subcommand("surgery", "Labelled-graph surgery");
    surgery->add_option("graph", file, "Graph file")->required();
    surgery->add_option("--R", R, "Separation scale")->required();
    surgery->add_option("--r", r, "Ball radius for the conditions")->required();
    surgery->add_option("--out", out, "Output file")->required();
    surgery->add_flag("--verify", verify, "Check conditions G-1 to G-7");
    surgery->add_option("--seed", seed, "Seed for sampled distances");

    auto* toeplitz = app.add_subcommand("toeplitz", "One Toeplitz extension step");
    toeplitz->add_option("--seq", seq, "c0,c1,... with c0 = 1")->required();
    toeplitz->add_option("--zeta", zeta, "re,im")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kBadInput;
    }

    try {
        if (*check) return cmd_check(file, tol, brute);
        if (*random) return cmd_random(r, d, seed, margin, out);
        if (*extend) return cmd_extend(file, R, out);
        if (*energy) return cmd_energy(file, file_b, radii);
        if (*solve) return cmd_solve(config, R, epsilon, out, seed);
        if (*surgery) return cmd_surgery(file, R, r, out, verify, seed);
        if (*toeplitz) return cmd_toeplitz(seq, zeta);
    } catch (const InputError& e) {
        std::cerr << "input error";
        if (!e.key.empty()) std::cerr << " at '" << e.key << "'";
        std::cerr << ": " << e.what() << "\n";
        return kBadInput;
    } catch (const std::invalid_argument& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kBadInput;
    } catch (const std::exception& e) {
        std::cerr << "failed: " << e.what() << "\n";
        return kFailed;
    }
    return kBadInput;
}
