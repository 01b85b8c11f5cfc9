#pragma once

#include "plaplab/entire.hpp"
#include "plaplab/escalation.hpp"
#include "plaplab/expression.hpp"
#include "plaplab/grid.hpp"
#include "plaplab/nonlinearity.hpp"
#include "plaplab/solver.hpp"

#include <optional>
#include <string>
#include <vector>

namespace plaplab {

enum class Command { KoCheck, Solve, Blowup, Mixed, Entire, Verify };

std::string command_name(Command c);
std::optional<Command> command_from_name(const std::string& name);

enum class VerifyKind { Subsolution, Supersolution, Comparison };

/// A fully resolved run configuration. Every module precondition that can be
/// checked from the file alone has been checked by load_config.
struct RunConfig {
    Command command = Command::KoCheck;
    double p = 2.0;
    std::string out_dir = "out";

    // ko-check
    std::optional<Nonlinearity> h;

    // shared solve machinery
    std::optional<SystemSpec> system;
    std::optional<DomainSpec> domain;
    SolveOptions solver;

    // solve
    std::vector<double> boundary_values; // one constant per component, or
    std::vector<Expression> boundary_exprs;

    // blowup / mixed
    EscalationSchedule schedule;
    double fit_window_lo = 0.0;
    double fit_window_hi = 0.0;
    bool has_fit_window = false;
    std::vector<int> blowup_set;       // 0-based components (mixed)
    std::vector<double> fixed_values;  // per component; entries for blow-up comps unused

    // entire
    int ambient_dim = 3;
    std::vector<double> ball_radii;
    int entire_resolution = 0;
    double growth_threshold = 2.0;

    // verify
    VerifyKind verify_check = VerifyKind::Subsolution;
    double verify_tol = 1e-6;
    std::vector<std::string> verify_fields;
    std::string verify_u, verify_v;
};

/// Parses and validates the nested key/value configuration format.
/// `expected` (when given) must match the file's command. Unknown keys,
/// malformed values, and precondition failures raise ConfigError with the
/// offending line and field path.
RunConfig load_config(const std::string& path, std::optional<Command> expected = std::nullopt);
RunConfig load_config_text(const std::string& text, std::optional<Command> expected = std::nullopt);

} // namespace plaplab
