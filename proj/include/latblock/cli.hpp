// The latblock command line. run_cli is the whole program; main() in
// tools/ only forwards to it, so tests drive the CLI in-process.
//
// Exit codes: 0 success (curve found), 1 usage, parse or domain error,
// 2 refuter budget exhausted.

#pragma once

#include "latblock/config.hpp"
#include "latblock/evade.hpp"
#include "latblock/parse.hpp"
#include "latblock/quat.hpp"
#include "latblock/sl2.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>

namespace latblock {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitBudget = 2;

/// Shortest text that reads back to the same double.
inline std::string fmt_double(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

inline std::string format_mat(const Mat2d& m) {
    return fmt_double(m.x) + "," + fmt_double(m.y) + ";" + fmt_double(m.z) + "," + fmt_double(m.w);
}

inline std::string format_quat(const Quatd& g) {
    auto term = [](double c, const char* unit) {
        std::string s = fmt_double(c);
        if (s[0] != '-') s = "+" + s;
        return s + unit;
    };
    return fmt_double(g.x) + term(g.y, "i") + term(g.z, "j") + term(g.w, "k");
}

namespace detail {

inline std::string plain(const nlohmann::json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); }

inline std::string csv_cell(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
    return q + "\"";
}

inline void render(const nlohmann::json& report, OutputFormat fmt, std::ostream& out) {
    switch (fmt) {
        case OutputFormat::json:
            out << report.dump(2) << "\n";
            break;
        case OutputFormat::text:
            for (const auto& [k, v] : report.items()) out << k << ": " << plain(v) << "\n";
            break;
        case OutputFormat::csv: {
            std::string head, row;
            bool first = true;
            for (const auto& [k, v] : report.items()) {
                if (!first) {
                    head += ",";
                    row += ",";
                }
                first = false;
                head += csv_cell(k);
                row += csv_cell(plain(v));
            }
            out << head << "\n" << row << "\n";
            break;
        }
    }
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void require_one(const std::string& what, bool a, bool b) {
    if (a == b) throw std::invalid_argument(what);
}

}  // namespace detail

inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"latblock: connecting curves in quotients of SL(2,R)"};
    app.name("latblock");
    app.require_subcommand(1);

    std::string format_opt, config_path;
    app.add_option("--format", format_opt, "Output format")->check(CLI::IsMember({"json", "csv", "text"}));
    app.add_option("--config", config_path, "JSON configuration file (overrides LATBLOCK_CONFIG)");

    std::string mat, gamma, quat, gamma_quat, points, out_path, cert_path, seed_pair;
    long long qa = 0, qb = 0, d = 0, bound = 1000;
    double t = 0.5;
    std::size_t count = 5;
    std::optional<std::size_t> budget, density;
    std::optional<double> epsilon;
    std::optional<std::uint64_t> seed;

    auto* exp_cmd = app.add_subcommand("exp", "Exponential of a traceless matrix or quaternion tangent vector");
    exp_cmd->add_option("--mat", mat, "Traceless matrix \"a,b;c,d\"");
    exp_cmd->add_option("--quat", quat, "Tangent vector \"u1 i + u2 j + u3 k\"");
    exp_cmd->add_option("--a", qa, "Algebra parameter a");
    exp_cmd->add_option("--b", qb, "Algebra parameter b");

    auto* log_cmd = app.add_subcommand("log", "Principal logarithm (trace >= 2)");
    log_cmd->add_option("--mat", mat, "Matrix \"a,b;c,d\"")->required();

    auto* curve_cmd = app.add_subcommand("curve", "Point (g gamma)^t of a connecting curve");
    curve_cmd->add_option("--mat", mat, "Coset representative g");
    curve_cmd->add_option("--gamma", gamma, "Integer matrix gamma (default identity)");
    curve_cmd->add_option("--quat", quat, "Quaternion g = x + y i");
    curve_cmd->add_option("--gamma-quat", gamma_quat, "Lattice quaternion gamma (default 1)");
    curve_cmd->add_option("--a", qa, "Algebra parameter a");
    curve_cmd->add_option("--b", qb, "Algebra parameter b");
    curve_cmd->add_option("--t", t, "Curve parameter in [0,1]");

    auto* reduce_cmd = app.add_subcommand("reduce", "Lower-triangular coset representative");
    reduce_cmd->add_option("--mat", mat, "Rational matrix of determinant 1")->required();

    auto* refute_cmd = app.add_subcommand("refute", "Find a connecting curve avoiding a finite point set");
    refute_cmd->add_option("--mat", mat, "Target coset representative (rational)");
    refute_cmd->add_option("--quat", quat, "Target quaternion x + y i");
    refute_cmd->add_option("--a", qa, "Algebra parameter a");
    refute_cmd->add_option("--b", qb, "Algebra parameter b");
    refute_cmd->add_option("--points", points, "Blocking points file, one per line, '#' comments");
    refute_cmd->add_option("--out", out_path, "Write the certificate here");
    refute_cmd->add_option("--budget", budget, "Family members to try");
    refute_cmd->add_option("--density", density, "Samples per curve");
    refute_cmd->add_option("--epsilon", epsilon, "Required clearance");
    refute_cmd->add_option("--seed", seed, "Seed recorded in the certificate");

    auto* verify_cmd = app.add_subcommand("verify", "Replay a certificate");
    verify_cmd->add_option("--cert", cert_path, "Certificate file")->required();

    auto* pell_cmd = app.add_subcommand("pell", "Pell equation p^2 - d q^2 = n");
    pell_cmd->add_option("--d", d, "Non-square d")->required();
    pell_cmd->add_option("--count", count, "Further family members");
    pell_cmd->add_option("--seed", seed_pair, "Seed solution \"p,q\" (default the fundamental unit)");

    auto* algebra_cmd = app.add_subcommand("algebra", "Is H^{a,b} a division algebra?");
    algebra_cmd->add_option("--a", qa, "a > 0")->required();
    algebra_cmd->add_option("--b", qb, "b > 0")->required();
    algebra_cmd->add_option("--bound", bound, "Witness search bound");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
    }

    nlohmann::json report;
    try {
        RunConfig cfg = RunConfig::from_environment();
        if (!config_path.empty()) cfg.merge_file(config_path);
        if (!format_opt.empty()) cfg.format = parse_format(format_opt);
        auto algebra = [&] { return QuatAlgebra(qa, qb); };

        if (*exp_cmd) {
            detail::require_one("exp: give exactly one of --mat, --quat", !mat.empty(), !quat.empty());
            report["command"] = "exp";
            if (!mat.empty()) {
                const Mat2d X = to_double(parse_matrix(mat));
                const Mat2d g = exp_sl2(X, cfg.epsilon);
                report["input"] = mat;
                report["result"] = format_mat(g);
                report["branch"] = to_string(branch_of(X));
                report["omega"] = omega_of(X);
                report["det"] = g.det();
            } else {
                const QuatAlgebra alg = algebra();
                const Quatq u = parse_quaternion(quat, alg);
                if (!u.x.is_zero()) throw std::invalid_argument("exp: tangent vector must have zero real part");
                const TangentVec U{u.y.to_double(), u.z.to_double(), u.w.to_double()};
                const Quatd g = exp_quat(U, alg);
                report["input"] = quat;
                report["result"] = format_quat(g);
                report["branch"] = to_string(U.branch(alg));
                report["omega"] = U.omega(alg);
                report["nred"] = g.nred();
            }
        } else if (*log_cmd) {
            const Mat2d g = to_double(parse_matrix(mat));
            const LogDirection L = log_sl2(g, cfg.epsilon);
            report["command"] = "log";
            report["input"] = mat;
            report["result"] = format_mat(L.X);
            report["branch"] = to_string(L.branch);
            report["trace_class"] = to_string(classify_trace(g.trace(), cfg.epsilon));
            report["omega"] = L.omega;
        } else if (*curve_cmd) {
            detail::require_one("curve: give exactly one of --mat, --quat", !mat.empty(), !quat.empty());
            if (t < 0.0 || t > 1.0) throw std::invalid_argument("curve: t must lie in [0,1]");
            report["command"] = "curve";
            report["t"] = t;
            if (!mat.empty()) {
                const Mat2q g = parse_matrix(mat);
                const Mat2z gm = gamma.empty() ? Mat2z::identity(BigInt(0)) : to_integer(parse_matrix(gamma));
                GammaElement checked(gm);
                const Mat2q target = g * to_rational(checked.matrix());
                const Mat2d td = to_double(target);
                const ModifiedTime mt = make_modified_time(t, td.trace(), cfg.epsilon);
                report["target"] = format_mat(target);
                report["trace"] = target.trace().str();
                report["trace_class"] = to_string(classify_trace(target.trace()));
                report["omega"] = omega_from_trace(td.trace());
                report["lambda"] = mt.lambda;
                report["a_lambda"] = mt.a_lambda;
                report["result"] = format_mat(curve_point_from_target(td, t, cfg.epsilon));
            } else {
                const QuatAlgebra alg = algebra();
                const Quatq g = parse_quaternion(quat, alg);
                Quatz gm = Quatz::one(alg);
                if (!gamma_quat.empty()) {
                    const Quatq q = parse_quaternion(gamma_quat, alg);
                    for (const Rational* c : {&q.x, &q.y, &q.z, &q.w})
                        if (!c->is_integer()) throw std::invalid_argument("curve: gamma must have integer coordinates");
                    gm = {q.x.num(), q.y.num(), q.z.num(), q.w.num(), alg};
                }
                const Quatq target = g * to_rational(gm);
                const Quatd h = to_double(target);
                const Quatd p = curve_point_quat_from_target(h, t);
                const double omega = std::acosh(h.x);
                const double lambda = modified_time(t, omega);
                report["target"] = format_quat(target);
                report["omega"] = omega;
                report["lambda"] = lambda;
                report["a_lambda"] = std::sqrt(1.0 + (h.x * h.x - 1.0) * lambda * lambda);
                report["result"] = format_quat(p);
            }
        } else if (*reduce_cmd) {
            const Mat2q g = parse_matrix(mat);
            const CosetRep r = coset_reduce(g);
            report["command"] = "reduce";
            report["input"] = format_mat(g);
            report["result"] = format_mat(r.g);
            report["gamma"] = format_mat(r.gamma);
        } else if (*refute_cmd) {
            detail::require_one("refute: give exactly one of --mat, --quat", !mat.empty(), !quat.empty());
            RefuteSettings s;
            s.budget = budget.value_or(cfg.budget);
            s.density = density.value_or(cfg.sample_density);
            s.seed = seed.value_or(cfg.seed);
            const double eps = epsilon.value_or(cfg.blocking_epsilon);
            EvasionCertificate cert;
            try {
                if (!mat.empty()) {
                    BlockingCandidate cand;
                    cand.epsilon = eps;
                    if (!points.empty()) {
                        std::ifstream in(points);
                        if (!in) throw std::invalid_argument("cannot open blocking file '" + points + "'");
                        cand.points = read_matrix_points(in);
                    }
                    cert = refute_blocking(parse_matrix(mat), cand, s);
                } else {
                    const QuatAlgebra alg = algebra();
                    QuatBlockingCandidate cand;
                    cand.epsilon = eps;
                    if (!points.empty()) {
                        std::ifstream in(points);
                        if (!in) throw std::invalid_argument("cannot open blocking file '" + points + "'");
                        cand.points = read_quaternion_points(in, alg);
                    }
                    cert = refute_blocking_quat(parse_quaternion(quat, alg), cand, s);
                }
            } catch (const budget_exceeded& e) {
                err << "latblock: " << e.what() << "\n";
                nlohmann::json r{{"command", "refute"},
                                 {"status", "budget_exhausted"},
                                 {"best_clearance", e.best_clearance()},
                                 {"members_tried", e.members_tried()}};
                detail::render(r, cfg.format, out);
                return kExitBudget;
            }
            if (out_path.empty()) {
                out << cert.dump();
                return kExitOk;
            }
            std::ofstream f(out_path);
            if (!f) throw std::invalid_argument("cannot write certificate to '" + out_path + "'");
            f << cert.dump();
            double minc = cert.clearances.empty() ? 0.0 : cert.clearances.front();
            for (double c : cert.clearances) minc = std::min(minc, c);
            report["command"] = "refute";
            report["status"] = "evaded";
            report["certificate"] = out_path;
            report["gamma"] = cert.gamma;
            report["t"] = cert.t;
            report["lambda"] = cert.lambda;
            report["members_tried"] = cert.attestations.at("members_tried");
            if (!cert.clearances.empty()) report["min_clearance"] = minc;
        } else if (*verify_cmd) {
            const EvasionCertificate cert = EvasionCertificate::parse(detail::read_file(cert_path));
            const ReplayReport r = replay_certificate(cert);
            report["command"] = "verify";
            report["status"] = r.ok ? "ok" : "failed";
            report["max_clearance_diff"] = r.max_clearance_diff;
            report["failures"] = r.failures;
            detail::render(report, cfg.format, out);
            return r.ok ? kExitOk : kExitUsage;
        } else if (*pell_cmd) {
            const BigInt D(static_cast<long>(d));
            const PellSolution fund = pell_fundamental(D);
            PellSolution seed_sol = fund;
            if (!seed_pair.empty()) {
                const auto comma = seed_pair.find(',');
                if (comma == std::string::npos) throw parse_error("expected \"p,q\"", 0);
                std::size_t i = 0;
                const std::string ps = seed_pair.substr(0, comma), qs = seed_pair.substr(comma + 1);
                const Rational p = detail::read_number(ps, i);
                i = 0;
                const Rational q = detail::read_number(qs, i);
                if (!p.is_integer() || !q.is_integer()) throw std::invalid_argument("pell: seed must be integers");
                seed_sol = {p.num(), q.num(), D, p.num() * p.num() - D * q.num() * q.num()};
            }
            report["command"] = "pell";
            report["d"] = D.get_str();
            report["p"] = fund.p.get_str();
            report["q"] = fund.q.get_str();
            report["n"] = seed_sol.n.get_str();
            nlohmann::json fam = nlohmann::json::array();
            for (const auto& s : pell_family(seed_sol, count)) fam.push_back(s.p.get_str() + "," + s.q.get_str());
            report["family"] = fam;
        } else if (*algebra_cmd) {
            const AlgebraReport r = is_division_algebra(qa, qb, bound);
            report["command"] = "algebra";
            report["a"] = qa;
            report["b"] = qb;
            report["verdict"] = to_string(r.verdict);
            if (r.verdict == AlgebraVerdict::split)
                report["witness"] = std::to_string(r.witness[0]) + "," + std::to_string(r.witness[1]) + "," +
                                    std::to_string(r.witness[2]);
            report["bound"] = r.bound;
            report["reason"] = r.reason;
        }
        detail::render(report, cfg.format, out);
        return kExitOk;
    } catch (const std::exception& e) {
        err << "latblock: " << e.what() << "\n";
        return kExitUsage;
    }
}

}  // namespace latblock
