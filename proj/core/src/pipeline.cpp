#include "plaplab/pipeline.hpp"

#include "plaplab/errors.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace plaplab {

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fmt_short(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

std::string csv_of(const GridFunction& f) {
    std::ostringstream out;
    write_grid_function_csv(f, out);
    return out.str();
}

void log_line(std::ostream* log, const std::string& line) {
    if (log) (*log) << line << "\n";
}

GridPtr grid_of(const RunConfig& cfg) { return build_grid(*cfg.domain); }

std::vector<GridFunction> boundary_fields(const RunConfig& cfg, const GridPtr& grid) {
    std::vector<GridFunction> out;
    int d = cfg.system->d;
    if (!cfg.boundary_values.empty()) {
        for (int c = 0; c < d; ++c)
            out.push_back(make_constant(grid, cfg.boundary_values[static_cast<std::size_t>(c)]));
    } else {
        for (int c = 0; c < d; ++c) {
            const Expression& e = cfg.boundary_exprs[static_cast<std::size_t>(c)];
            out.push_back(make_from(grid, [&e](const std::array<double, 2>& x) {
                return e.eval(std::vector<double>{x[0], x[1], x[0]});
            }));
        }
    }
    return out;
}

std::string solve_summary(const SolveReport& rep) {
    std::ostringstream s;
    s << "converged: " << (rep.converged ? "true" : "false") << "\n";
    s << "iterations: " << rep.iterations << "\n";
    s << "residual_sup: " << fmt(rep.residual_sup) << "\n";
    s << "regularization_eps: " << fmt(rep.regularization_eps) << "\n";
    s << "merit: " << (rep.energy_available ? "energy" : "residual_norm") << "\n";
    if (!rep.energy_trace.empty()) s << "final_energy: " << fmt(rep.energy_trace.back()) << "\n";
    if (rep.sandwich_checked) {
        s << "bracket_checked: true\n";
        s << "bracket_ok: " << (rep.sandwich_ok ? "true" : "false") << "\n";
        s << "bracket_violation: " << fmt(rep.sandwich_violation) << "\n";
        if (rep.sandwich_witness >= 0) s << "bracket_witness_node: " << rep.sandwich_witness << "\n";
    }
    return s.str();
}

int run_ko_check(const RunConfig& cfg, OutputWriter& out, std::ostream* log) {
    ClassFDiagnostics diag = class_f_validate(*cfg.h, cfg.p);
    std::ostringstream rep;
    rep << "nonlinearity: " << cfg.h->label << "\n";
    rep << "p: " << fmt_short(cfg.p) << "\n";
    for (const auto& c : diag.checks) {
        rep << "check " << c.name << ": " << (c.pass ? "pass" : "fail");
        if (!c.pass) rep << " (witness t = " << fmt_short(c.witness) << (c.note.empty() ? "" : ", " + c.note) << ")";
        rep << "\n";
    }
    rep << "structurally_valid: " << (diag.structurally_valid ? "true" : "false") << "\n";
    if (diag.keller_osserman) {
        const auto& ko = *diag.keller_osserman;
        rep << "verdict: " << (ko.converges ? "converges" : "diverges") << "\n";
        rep << "tail_exponent: " << fmt(ko.tail_exponent) << "\n";
        rep << "integral_estimate: " << fmt(ko.integral_estimate) << "\n";
        rep << "tail_bound: " << fmt(ko.tail_bound) << "\n";
        rep << "total_estimate: " << fmt(ko.integral_estimate + ko.tail_bound) << "\n";
        rep << "boundary_case: " << (ko.boundary_case ? "true" : "false") << "\n";
        log_line(log, std::string("keller-osserman: ") + (ko.converges ? "converges" : "diverges") +
                          ", total " + fmt_short(ko.integral_estimate + ko.tail_bound));
    }
    out.write_text("ko_report.txt", rep.str());
    return 0;
}

int run_solve(const RunConfig& cfg, OutputWriter& out, std::ostream* log) {
    GridPtr grid = grid_of(cfg);
    std::vector<GridFunction> boundary = boundary_fields(cfg, grid);
    bool positive = true;
    for (const auto& b : boundary)
        for (int i : grid->boundary) positive &= b[i] > 0.0;

    SolveReport rep = positive ? solve_dirichlet_system(*grid, *cfg.system, boundary, cfg.p, cfg.solver)
                               : solve_dirichlet(*grid, *cfg.system, boundary, cfg.p, cfg.solver);
    for (int c = 0; c < cfg.system->d; ++c)
        out.write_text("solution_" + std::to_string(c + 1) + ".csv",
                       csv_of(rep.solution[static_cast<std::size_t>(c)]));
    out.write_text("summary.txt", solve_summary(rep));
    log_line(log, "solve: " + std::string(rep.converged ? "converged" : "did not converge") +
                      " after " + std::to_string(rep.iterations) + " iterations, residual " +
                      fmt_short(rep.residual_sup));
    return rep.converged ? 0 : 2;
}

std::string level_file(int level, int comp) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "level_%02d_u%d.csv", level, comp + 1);
    return buf;
}

int run_escalation(const RunConfig& cfg, OutputWriter& out, std::ostream* log, bool mixed) {
    GridPtr grid = grid_of(cfg);
    EscalationTrace trace =
        mixed ? escalate_mixed(grid, *cfg.system, cfg.p, cfg.blowup_set, cfg.fixed_values,
                               cfg.schedule, cfg.solver)
              : escalate_blowup(grid, *cfg.system, cfg.p, cfg.schedule, cfg.solver);
    if (cfg.has_fit_window && !trace.limit_fields.empty())
        attach_rate_fits(trace, *grid, cfg.fit_window_lo, cfg.fit_window_hi);

    const int d = cfg.system->d;

    // Barrier domination on the fit window, per component against its floor
    // nonlinearity.
    std::vector<double> barrier_ratio(static_cast<std::size_t>(d), 0.0);
    if (cfg.has_fit_window && !trace.levels.empty()) {
        for (int c = 0; c < d; ++c) {
            BarrierFunction mu(cfg.system->lower_bounds[static_cast<std::size_t>(c)], cfg.p);
            BarrierCheck check = verify_barrier_domination(trace, *grid, mu, c,
                                                           cfg.fit_window_lo, cfg.fit_window_hi);
            barrier_ratio[static_cast<std::size_t>(c)] = check.max_ratio;
        }
    }

    std::ostringstream summary_csv;
    summary_csv << "level,boundary_value,core_delta,residual_sup";
    if (cfg.has_fit_window)
        for (int c = 0; c < d; ++c)
            summary_csv << ",A_" << (c + 1) << ",beta_" << (c + 1);
    summary_csv << "\n";
    for (std::size_t k = 0; k < trace.levels.size(); ++k) {
        const EscalationLevel& lev = trace.levels[k];
        summary_csv << k << ',' << fmt(lev.boundary_value) << ',' << fmt(lev.core_delta) << ','
                    << fmt(lev.report.residual_sup);
        if (cfg.has_fit_window) {
            for (int c = 0; c < d; ++c) {
                RateFit fit = fit_boundary_rate(lev.report.solution[static_cast<std::size_t>(c)],
                                                *grid, cfg.fit_window_lo, cfg.fit_window_hi);
                summary_csv << ',' << fmt(fit.amplitude) << ',' << fmt(fit.exponent);
            }
        }
        summary_csv << "\n";
        for (int c = 0; c < d; ++c)
            out.write_text(level_file(static_cast<int>(k), c),
                           csv_of(lev.report.solution[static_cast<std::size_t>(c)]));
    }
    out.write_text("escalation_summary.csv", summary_csv.str());

    std::ostringstream s;
    s << "command: " << (mixed ? "mixed" : "blowup") << "\n";
    s << "levels: " << trace.levels.size() << "\n";
    s << "stabilized: " << (trace.stabilized ? "true" : "false") << "\n";
    s << "truncated: " << (trace.truncated ? "true" : "false") << "\n";
    for (std::size_t k = 0; k < trace.levels.size(); ++k) {
        const EscalationLevel& lev = trace.levels[k];
        s << "level " << k << ": boundary " << fmt_short(lev.boundary_value) << ", ring_max "
          << fmt(lev.boundary_ring_max) << ", core_delta " << fmt(lev.core_delta)
          << ", min_increment " << fmt(lev.min_increment);
        if (mixed) s << ", fixed_excess " << fmt(lev.max_fixed_excess);
        s << "\n";
    }
    if (cfg.has_fit_window && !trace.rate_fits.empty()) {
        for (int c = 0; c < d; ++c) {
            const RateFit& fit = trace.rate_fits[static_cast<std::size_t>(c)];
            s << "rate_fit u" << (c + 1) << ": A " << fmt(fit.amplitude) << ", beta "
              << fmt(fit.exponent) << ", rms " << fmt(fit.rms_residual) << "\n";
            s << "barrier_max_ratio u" << (c + 1) << ": "
              << fmt(barrier_ratio[static_cast<std::size_t>(c)]) << "\n";
        }
    }
    if (mixed) s << "final_ring_deviation: " << fmt(trace.final_ring_deviation) << "\n";
    out.write_text("summary.txt", s.str());

    log_line(log, std::string(mixed ? "mixed" : "blowup") + ": " +
                      std::to_string(trace.levels.size()) + " levels, " +
                      (trace.stabilized ? "stabilized" : "level cap reached"));
    return trace.stabilized ? 0 : 2;
}

int run_entire(const RunConfig& cfg, OutputWriter& out, std::ostream* log) {
    const Nonlinearity& g = cfg.system->upper_bound;
    EntireTrace trace = ball_exhaustion(*cfg.system, g, cfg.p, cfg.ambient_dim, cfg.ball_radii,
                                        cfg.entire_resolution, cfg.solver);
    LargeSolutionReport large = verify_large_at_infinity(trace, g, cfg.p, cfg.growth_threshold);

    std::ostringstream profile;
    profile << "r,z,w\n";
    for (std::size_t i = 0; i < trace.z_profile.radii.size(); ++i)
        profile << fmt(trace.z_profile.radii[i]) << ',' << fmt(trace.z_profile.values[i]) << ','
                << fmt(trace.w_profile.values[i]) << "\n";
    out.write_text("radial_profile.csv", profile.str());

    std::ostringstream summary_csv;
    summary_csv << "ball_radius,w_n,min_u_minus_w,core_delta\n";
    for (std::size_t k = 0; k < trace.balls.size(); ++k) {
        const BallSolve& ball = trace.balls[k];
        double core_delta =
            (k >= 1 && !trace.nested_core_deltas.empty() && k - 1 < trace.nested_core_deltas[0].size())
                ? trace.nested_core_deltas[0][k - 1]
                : 0.0;
        summary_csv << fmt_short(ball.radius) << ',' << fmt(ball.w_boundary) << ','
                    << fmt(ball.min_u_minus_w) << ',' << fmt(core_delta) << "\n";

        std::ostringstream bf;
        bf << "r,z,w";
        for (int c = 0; c < cfg.system->d; ++c) bf << ",u_" << (c + 1);
        bf << "\n";
        const Grid& bg = *ball.grid;
        for (int i = 0; i < bg.n(); ++i) {
            bf << fmt(bg.r(i)) << ',' << fmt(ball.z_on_grid[static_cast<std::size_t>(i)]) << ','
               << fmt(ball.w_on_grid[static_cast<std::size_t>(i)]);
            for (int c = 0; c < cfg.system->d; ++c)
                bf << ',' << fmt(ball.report.solution[static_cast<std::size_t>(c)][i]);
            bf << "\n";
        }
        out.write_text("ball_r" + fmt_short(ball.radius) + ".csv", bf.str());
    }
    out.write_text("exhaustion_summary.csv", summary_csv.str());

    std::ostringstream s;
    s << "balls: " << trace.balls.size() << "\n";
    s << "all_converged: " << (trace.all_converged ? "true" : "false") << "\n";
    s << "lower_bound_ok: " << (trace.lower_bound_ok ? "true" : "false") << "\n";
    s << "worst_lower_violation: " << fmt(trace.worst_lower_violation) << "\n";
    s << "worst_upper_violation: " << fmt(trace.worst_upper_violation) << "\n";
    s << "decay_verified: " << (trace.z_profile.decay_verified ? "true" : "false") << "\n";
    s << "min_component_value: " << fmt(large.min_component_value) << "\n";
    s << "w_at_outermost: " << fmt(large.w_at_outermost) << "\n";
    s << "divergence_certified: " << (large.divergence_certified ? "true" : "false") << "\n";
    s << "verdict: " << (large.verdict ? "large-solution evidence" : "withheld") << "\n";
    if (!large.note.empty()) s << "note: " << large.note << "\n";
    out.write_text("summary.txt", s.str());

    log_line(log, "entire: " + std::to_string(trace.balls.size()) + " balls, verdict " +
                      (large.verdict ? "positive" : "withheld"));
    return (trace.all_converged && trace.lower_bound_ok && large.verdict) ? 0 : 2;
}

int run_verify(const RunConfig& cfg, OutputWriter& out, std::ostream* log) {
    GridPtr grid = grid_of(cfg);
    auto read_field = [&grid](const std::string& path) {
        std::ifstream in(path);
        if (!in.is_open()) throw DomainError("verify: cannot open field file '" + path + "'");
        return read_grid_function_csv(in, grid);
    };

    std::ostringstream s;
    bool pass = false;
    if (cfg.verify_check == VerifyKind::Comparison) {
        GridFunction u = read_field(cfg.verify_u);
        GridFunction v = read_field(cfg.verify_v);
        ComparisonReport rep = verify_comparison(*grid, u, v, cfg.p, cfg.verify_tol);
        s << "check: comparison\n";
        s << "hypothesis_met: " << (rep.hypothesis_met ? "true" : "false") << "\n";
        s << "worst_hypothesis_violation: " << fmt(rep.worst_hypothesis_violation) << " (node "
          << rep.worst_hypothesis_node << ")\n";
        s << "conclusion_holds: " << (rep.conclusion_holds ? "true" : "false") << "\n";
        s << "worst_conclusion_violation: " << fmt(rep.worst_conclusion_violation) << " (node "
          << rep.worst_conclusion_node << ")\n";
        pass = rep.conclusion_holds;
    } else {
        std::vector<GridFunction> fields;
        for (const std::string& path : cfg.verify_fields) fields.push_back(read_field(path));
        SolutionSide side = cfg.verify_check == VerifyKind::Subsolution ? SolutionSide::Sub
                                                                        : SolutionSide::Super;
        SubsolutionReport rep = verify_subsolution(*grid, fields, *cfg.system, cfg.p, side,
                                                   cfg.verify_tol);
        s << "check: " << (side == SolutionSide::Sub ? "subsolution" : "supersolution") << "\n";
        for (std::size_t c = 0; c < rep.components.size(); ++c) {
            const auto& comp = rep.components[c];
            s << "component " << (c + 1) << ": " << (comp.pass ? "pass" : "fail")
              << ", worst_violation " << fmt(comp.worst_violation) << " (node " << comp.worst_node
              << ")\n";
        }
        pass = rep.all_pass;
    }
    s << "pass: " << (pass ? "true" : "false") << "\n";
    out.write_text("verify_report.txt", s.str());
    log_line(log, std::string("verify: ") + (pass ? "pass" : "fail"));
    return pass ? 0 : 2;
}

} // namespace

std::string sha256_hex(std::string_view data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    if (!ctx) throw Error("sha256: cannot allocate digest context");
    bool ok = EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) == 1 &&
              EVP_DigestUpdate(ctx, data.data(), data.size()) == 1 &&
              EVP_DigestFinal_ex(ctx, digest, &len) == 1;
    EVP_MD_CTX_free(ctx);
    if (!ok) throw Error("sha256: digest computation failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xf]);
    }
    return out;
}

std::string Manifest::to_text() const {
    std::ostringstream out;
    for (const auto& e : entries) out << e.digest << "  " << e.bytes << "  " << e.filename << "\n";
    return out.str();
}

OutputWriter::OutputWriter(std::string dir) : dir_(std::move(dir)) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) throw Error("cannot create output directory '" + dir_ + "': " + ec.message());
}

void OutputWriter::write_text(const std::string& name, const std::string& content) {
    std::filesystem::path path = std::filesystem::path(dir_) / name;
    std::ofstream out(path, std::ios::binary);
    if (!out.is_open()) throw Error("cannot write output file '" + path.string() + "'");
    out << content;
    if (!out.good()) throw Error("failed writing output file '" + path.string() + "'");
    manifest_.entries.push_back({name, sha256_hex(content), content.size()});
}

Manifest OutputWriter::finalize() {
    std::sort(manifest_.entries.begin(), manifest_.entries.end(),
              [](const Manifest::Entry& a, const Manifest::Entry& b) {
                  return a.filename < b.filename;
              });
    std::filesystem::path path = std::filesystem::path(dir_) / "manifest.txt";
    std::ofstream out(path, std::ios::binary);
    if (!out.is_open()) throw Error("cannot write manifest '" + path.string() + "'");
    out << manifest_.to_text();
    return manifest_;
}

RunResult run_command(const RunConfig& cfg, const std::string& out_override, std::ostream* log) {
    OutputWriter out(out_override.empty() ? cfg.out_dir : out_override);
    int code = 0;
    switch (cfg.command) {
        case Command::KoCheck: code = run_ko_check(cfg, out, log); break;
        case Command::Solve: code = run_solve(cfg, out, log); break;
        case Command::Blowup: code = run_escalation(cfg, out, log, false); break;
        case Command::Mixed: code = run_escalation(cfg, out, log, true); break;
        case Command::Entire: code = run_entire(cfg, out, log); break;
        case Command::Verify: code = run_verify(cfg, out, log); break;
    }
    RunResult result;
    result.exit_code = code;
    result.manifest = out.finalize();
    return result;
}

} // namespace plaplab
