#include "plaplab/config.hpp"

#include "plaplab/errors.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace plaplab {

namespace {

struct ValueEntry {
    std::string raw;
    int line = 0;
    mutable bool consumed = false;
};

struct Block {
    std::string path; // dotted field path for messages
    int line = 0;
    mutable bool consumed = false;
    std::map<std::string, ValueEntry> values;
    std::map<std::string, Block> blocks;
};

std::string strip(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

// Removes a trailing comment, respecting double quotes.
std::string strip_comment(const std::string& s) {
    bool quoted = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '"') quoted = !quoted;
        if (s[i] == '#' && !quoted) return s.substr(0, i);
    }
    return s;
}

Block parse_tree(const std::string& text) {
    Block root;
    root.path = "";
    std::vector<Block*> stack{&root};
    std::istringstream in(text);
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string line = strip(strip_comment(raw));
        if (line.empty()) continue;
        Block* top = stack.back();
        if (line == "}") {
            if (stack.size() == 1) throw ConfigError("unmatched '}'", line_no);
            stack.pop_back();
            continue;
        }
        if (line.size() > 1 && line.back() == '{') {
            std::string name = strip(line.substr(0, line.size() - 1));
            if (name.empty() || name.find_first_of(" \t={}") != std::string::npos)
                throw ConfigError("malformed block header '" + line + "'", line_no);
            if (top->blocks.count(name))
                throw ConfigError("duplicate block '" + name + "'", line_no);
            Block b;
            b.path = top->path.empty() ? name : top->path + "." + name;
            b.line = line_no;
            auto [it, ok] = top->blocks.emplace(name, std::move(b));
            (void)ok;
            stack.push_back(&it->second);
            continue;
        }
        std::size_t eq = std::string::npos;
        bool quoted = false;
        for (std::size_t i = 0; i < line.size(); ++i) {
            if (line[i] == '"') quoted = !quoted;
            if (line[i] == '=' && !quoted) {
                eq = i;
                break;
            }
        }
        if (eq == std::string::npos)
            throw ConfigError("expected 'key = value', a block header, or '}'", line_no);
        std::string key = strip(line.substr(0, eq));
        std::string value = strip(line.substr(eq + 1));
        if (key.empty()) throw ConfigError("missing key before '='", line_no);
        if (value.empty()) throw ConfigError("missing value for key '" + key + "'", line_no);
        if (top->values.count(key))
            throw ConfigError("duplicate key '" + key + "'", line_no);
        top->values.emplace(key, ValueEntry{value, line_no, false});
    }
    if (stack.size() != 1) throw ConfigError("unterminated block", line_no);
    return root;
}

// Splits a value at top-level commas, respecting quotes and parentheses.
std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    int depth = 0;
    bool quoted = false;
    std::string cur;
    for (char c : s) {
        if (c == '"') quoted = !quoted;
        if (!quoted) {
            if (c == '(') ++depth;
            if (c == ')') --depth;
            if (c == ',' && depth == 0) {
                out.push_back(strip(cur));
                cur.clear();
                continue;
            }
        }
        cur += c;
    }
    if (!strip(cur).empty()) out.push_back(strip(cur));
    return out;
}

std::string unquote(const std::string& s, const std::string& path, int line) {
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') return s.substr(1, s.size() - 2);
    if (s.find('"') != std::string::npos)
        throw ConfigError("malformed quoted string", line, path);
    return s;
}

/// Typed access to one block with consumption tracking.
struct Reader {
    const Block& block;

    const ValueEntry* find(const std::string& key) const {
        auto it = block.values.find(key);
        if (it == block.values.end()) return nullptr;
        it->second.consumed = true;
        return &it->second;
    }

    std::string path_of(const std::string& key) const {
        return block.path.empty() ? key : block.path + "." + key;
    }

    [[noreturn]] void missing(const std::string& key) const {
        throw ConfigError("required key is missing", block.line, path_of(key));
    }

    bool has(const std::string& key) const { return block.values.count(key) > 0; }

    double number(const std::string& key) const {
        const ValueEntry* v = find(key);
        if (!v) missing(key);
        return to_number(*v, key);
    }
    double number_or(const std::string& key, double fallback) const {
        const ValueEntry* v = find(key);
        return v ? to_number(*v, key) : fallback;
    }
    int integer(const std::string& key) const {
        double d = number(key);
        if (d != std::floor(d))
            throw ConfigError("expected an integer", block.values.at(key).line, path_of(key));
        return static_cast<int>(d);
    }
    int integer_or(const std::string& key, int fallback) const {
        return has(key) ? integer(key) : fallback;
    }
    bool boolean_or(const std::string& key, bool fallback) const {
        const ValueEntry* v = find(key);
        if (!v) return fallback;
        if (v->raw == "true") return true;
        if (v->raw == "false") return false;
        throw ConfigError("expected true or false", v->line, path_of(key));
    }
    std::string text(const std::string& key) const {
        const ValueEntry* v = find(key);
        if (!v) missing(key);
        return unquote(v->raw, path_of(key), v->line);
    }
    std::string text_or(const std::string& key, const std::string& fallback) const {
        const ValueEntry* v = find(key);
        return v ? unquote(v->raw, path_of(key), v->line) : fallback;
    }
    std::vector<std::string> list(const std::string& key) const {
        const ValueEntry* v = find(key);
        if (!v) missing(key);
        return split_list(v->raw);
    }
    std::vector<double> number_list(const std::string& key) const {
        const ValueEntry* v = find(key);
        if (!v) missing(key);
        std::vector<double> out;
        for (const std::string& item : split_list(v->raw)) out.push_back(parse_num(item, key, v->line));
        return out;
    }
    int line_of(const std::string& key) const {
        auto it = block.values.find(key);
        return it == block.values.end() ? block.line : it->second.line;
    }

private:
    double to_number(const ValueEntry& v, const std::string& key) const {
        return parse_num(v.raw, key, v.line);
    }
    double parse_num(const std::string& s, const std::string& key, int line) const {
        char* end = nullptr;
        double d = std::strtod(s.c_str(), &end);
        if (end == s.c_str() || strip(std::string(end)).size() > 0)
            throw ConfigError("expected a number, got '" + s + "'", line, path_of(key));
        return d;
    }
};

const Block* find_block(const Block& root, const std::string& name) {
    auto it = root.blocks.find(name);
    if (it == root.blocks.end()) return nullptr;
    it->second.consumed = true;
    return &it->second;
}

const Block& require_block(const Block& root, const std::string& name) {
    const Block* b = find_block(root, name);
    if (!b) throw ConfigError("required block '" + name + "' is missing", 0, name);
    return *b;
}

void check_consumed(const Block& b) {
    for (const auto& [key, v] : b.values)
        if (!v.consumed)
            throw ConfigError("unknown key '" + key + "'", v.line,
                              b.path.empty() ? key : b.path + "." + key);
    for (const auto& [name, child] : b.blocks) {
        if (!child.consumed)
            throw ConfigError("unknown block '" + name + "'", child.line,
                              b.path.empty() ? name : b.path + "." + name);
        check_consumed(child);
    }
}

Nonlinearity parse_nl(const std::string& spec, const std::string& path, int line) {
    try {
        return parse_nonlinearity(spec);
    } catch (const Error& e) {
        throw ConfigError(e.what(), line, path);
    }
}

// Coordinate variables exposed to config expressions: x and r alias the
// first coordinate, y the second.
const std::vector<std::string> kCoordVars = {"x", "y", "r"};

std::vector<std::string> system_vars(int d) {
    std::vector<std::string> vars = kCoordVars;
    for (int c = 1; c <= d; ++c) vars.push_back("u" + std::to_string(c));
    return vars;
}

Expression parse_expr_checked(const std::string& body, const std::vector<std::string>& vars,
                              const std::string& path, int line) {
    try {
        return Expression::parse(body, vars);
    } catch (const Error& e) {
        throw ConfigError(e.what(), line, path);
    }
}

CoupledFn coupled_from(const Expression& e, int d) {
    return [e, d](const std::array<double, 2>& x, std::span<const double> u) {
        std::vector<double> vars(3 + static_cast<std::size_t>(d));
        vars[0] = x[0];
        vars[1] = x[1];
        vars[2] = x[0];
        for (int c = 0; c < d; ++c) vars[static_cast<std::size_t>(3 + c)] = u[static_cast<std::size_t>(c)];
        return e.eval(vars);
    };
}

PointFn point_from(const Expression& e) {
    return [e](const std::array<double, 2>& x) {
        return e.eval(std::vector<double>{x[0], x[1], x[0]});
    };
}

SystemSpec read_system(const Block& blk) {
    Reader r{blk};
    SystemSpec sys;
    sys.d = r.integer_or("d", 1);
    if (sys.d < 1) throw ConfigError("d must be >= 1", blk.line, blk.path + ".d");

    std::vector<std::string> vars = system_vars(sys.d);

    auto grads = r.list("grad");
    if (static_cast<int>(grads.size()) != sys.d)
        throw ConfigError("expected " + std::to_string(sys.d) + " gradient expressions, got " +
                              std::to_string(grads.size()),
                          r.line_of("grad"), blk.path + ".grad");
    for (const std::string& gexpr : grads) {
        Expression e = parse_expr_checked(unquote(gexpr, blk.path + ".grad", r.line_of("grad")),
                                          vars, blk.path + ".grad", r.line_of("grad"));
        sys.gradient.push_back(coupled_from(e, sys.d));
    }

    if (r.has("potential")) {
        Expression e = parse_expr_checked(r.text("potential"), vars, blk.path + ".potential",
                                          r.line_of("potential"));
        sys.potential = coupled_from(e, sys.d);
    }

    auto fs = r.list("f");
    if (static_cast<int>(fs.size()) != sys.d)
        throw ConfigError("expected " + std::to_string(sys.d) + " lower-bound nonlinearities",
                          r.line_of("f"), blk.path + ".f");
    for (const std::string& spec : fs)
        sys.lower_bounds.push_back(parse_nl(spec, blk.path + ".f", r.line_of("f")));

    sys.upper_bound = parse_nl(r.text("g"), blk.path + ".g", r.line_of("g"));

    if (r.has("weights")) {
        auto wlist = r.list("weights");
        if (static_cast<int>(wlist.size()) != sys.d)
            throw ConfigError("expected " + std::to_string(sys.d) + " weight expressions",
                              r.line_of("weights"), blk.path + ".weights");
        for (const std::string& w : wlist) {
            Expression e = parse_expr_checked(unquote(w, blk.path + ".weights", r.line_of("weights")),
                                              kCoordVars, blk.path + ".weights", r.line_of("weights"));
            sys.weights.push_back(point_from(e));
        }
    }
    return sys;
}

DomainSpec read_domain(const Block& blk) {
    Reader r{blk};
    std::string kind = r.text("kind");
    DomainSpec spec;
    int resolution = r.integer("resolution");
    Grading grading = Grading::Uniform;
    std::string gtext = r.text_or("grading", "uniform");
    if (gtext == "boundary_refined")
        grading = Grading::BoundaryRefined;
    else if (gtext != "uniform")
        throw ConfigError("grading must be 'uniform' or 'boundary_refined'", r.line_of("grading"),
                          blk.path + ".grading");
    double ratio = r.number_or("ratio", 0.85);

    if (kind == "interval") {
        spec = DomainSpec::interval(r.number("a"), r.number("b"), resolution, grading, ratio);
    } else if (kind == "rectangle") {
        spec = DomainSpec::rectangle(r.number("ax"), r.number("bx"), r.number("ay"),
                                     r.number("by"), resolution, grading, ratio);
    } else if (kind == "radial_ball") {
        spec = DomainSpec::radial_ball(r.number("radius"), r.integer("ambient_dim"), resolution,
                                       grading, ratio);
    } else {
        throw ConfigError("unknown domain kind '" + kind + "'", r.line_of("kind"),
                          blk.path + ".kind");
    }
    try {
        spec.validate(true);
    } catch (const Error& e) {
        throw ConfigError(e.what(), blk.line, blk.path);
    }
    return spec;
}

SolveOptions read_solver(const Block* blk) {
    SolveOptions opts;
    if (!blk) return opts;
    Reader r{*blk};
    opts.tol = r.number_or("tol", -1.0);
    opts.max_iters = r.integer_or("max_iters", 10000);
    opts.eps = r.number_or("eps", 1e-8);
    opts.line_search_beta = r.number_or("line_search_beta", 0.5);
    opts.newton_fallback = r.boolean_or("newton_fallback", true);
    if (opts.max_iters < 1) throw ConfigError("max_iters must be positive", blk->line, blk->path);
    if (opts.eps < 0.0) throw ConfigError("eps must be nonnegative", blk->line, blk->path);
    if (!(opts.line_search_beta > 0.0 && opts.line_search_beta < 1.0))
        throw ConfigError("line_search_beta must lie in (0,1)", blk->line, blk->path);
    return opts;
}

EscalationSchedule read_schedule(const Block& blk) {
    Reader r{blk};
    EscalationSchedule s;
    s.base = r.number("base");
    std::string growth = r.text_or("growth", "geometric");
    if (growth == "geometric") {
        s.growth = GrowthKind::Geometric;
        s.ratio = r.number_or("ratio", 2.0);
    } else if (growth == "arithmetic") {
        s.growth = GrowthKind::Arithmetic;
        s.step = r.number("step");
    } else {
        throw ConfigError("growth must be 'geometric' or 'arithmetic'", r.line_of("growth"),
                          blk.path + ".growth");
    }
    s.max_levels = r.integer("max_levels");
    s.core_margin = r.number("core_margin");
    s.stall_tol = r.number("stall_tol");
    return s;
}

void require_class_f(const Nonlinearity& f, double p, const std::string& path, int line) {
    ClassFDiagnostics diag = class_f_validate(f, p);
    if (diag.admissible) return;
    std::string why;
    for (const auto& c : diag.checks)
        if (!c.pass) {
            why = c.name + (c.note.empty() ? "" : ": " + c.note);
            break;
        }
    throw ConfigError("nonlinearity " + f.label + " is not admissible (" + why + ")", line, path);
}

void require_hypotheses(const SystemSpec& sys, const DomainSpec& probe_domain,
                        const std::string& path, int line) {
    DomainSpec probe = probe_domain;
    probe.resolution = std::min(probe.resolution, 33);
    probe.grading = Grading::Uniform;
    GridPtr grid = build_grid(probe);
    SystemDiagnostics diag = validate_system(sys, *grid);
    if (diag.ok) return;
    for (const auto& c : diag.checks)
        if (!c.pass)
            throw ConfigError("system hypothesis '" + c.name + "' fails" +
                                  (c.component >= 0 ? " for component " + std::to_string(c.component + 1)
                                                    : "") +
                                  (c.note.empty() ? "" : ": " + c.note),
                              line, path);
}

} // namespace

std::string command_name(Command c) {
    switch (c) {
        case Command::KoCheck: return "ko-check";
        case Command::Solve: return "solve";
        case Command::Blowup: return "blowup";
        case Command::Mixed: return "mixed";
        case Command::Entire: return "entire";
        case Command::Verify: return "verify";
    }
    return "?";
}

std::optional<Command> command_from_name(const std::string& name) {
    if (name == "ko-check") return Command::KoCheck;
    if (name == "solve") return Command::Solve;
    if (name == "blowup") return Command::Blowup;
    if (name == "mixed") return Command::Mixed;
    if (name == "entire") return Command::Entire;
    if (name == "verify") return Command::Verify;
    return std::nullopt;
}

RunConfig load_config_text(const std::string& text, std::optional<Command> expected) {
    Block root = parse_tree(text);
    Reader top{root};
    RunConfig cfg;

    if (top.has("command")) {
        std::string cname = top.text("command");
        auto cmd = command_from_name(cname);
        if (!cmd)
            throw ConfigError("unknown command '" + cname + "'", top.line_of("command"), "command");
        cfg.command = *cmd;
        if (expected && *expected != *cmd)
            throw ConfigError("config command '" + cname + "' does not match the requested '" +
                                  command_name(*expected) + "'",
                              top.line_of("command"), "command");
    } else if (expected) {
        cfg.command = *expected;
    } else {
        throw ConfigError("missing 'command' key", 0, "command");
    }

    cfg.p = top.number_or("p", 2.0);
    if (!(cfg.p > 1.0)) throw ConfigError("p must exceed 1", top.line_of("p"), "p");
    cfg.out_dir = top.text_or("out_dir", "out");

    cfg.solver = read_solver(find_block(root, "solver"));

    switch (cfg.command) {
        case Command::KoCheck: {
            const Block& nb = require_block(root, "nonlinearity");
            Reader r{nb};
            cfg.h = parse_nl(r.text("h"), "nonlinearity.h", r.line_of("h"));
            break;
        }
        case Command::Solve: {
            cfg.domain = read_domain(require_block(root, "domain"));
            cfg.system = read_system(require_block(root, "system"));
            const Block& bb = require_block(root, "boundary");
            Reader r{bb};
            std::vector<std::string> vars = kCoordVars;
            if (r.has("values")) {
                cfg.boundary_values = r.number_list("values");
                if (static_cast<int>(cfg.boundary_values.size()) == 1 && cfg.system->d > 1)
                    cfg.boundary_values.assign(static_cast<std::size_t>(cfg.system->d),
                                               cfg.boundary_values[0]);
                if (static_cast<int>(cfg.boundary_values.size()) != cfg.system->d)
                    throw ConfigError("boundary values must match the number of components",
                                      r.line_of("values"), "boundary.values");
            } else if (r.has("exprs")) {
                for (const std::string& e : r.list("exprs"))
                    cfg.boundary_exprs.push_back(parse_expr_checked(
                        unquote(e, "boundary.exprs", r.line_of("exprs")), vars, "boundary.exprs",
                        r.line_of("exprs")));
                if (static_cast<int>(cfg.boundary_exprs.size()) != cfg.system->d)
                    throw ConfigError("boundary expressions must match the number of components",
                                      r.line_of("exprs"), "boundary.exprs");
            } else {
                throw ConfigError("boundary block needs 'values' or 'exprs'", bb.line, "boundary");
            }
            require_hypotheses(*cfg.system, *cfg.domain, "system", bb.line);
            break;
        }
        case Command::Blowup:
        case Command::Mixed: {
            cfg.domain = read_domain(require_block(root, "domain"));
            cfg.system = read_system(require_block(root, "system"));
            const Block& sb = require_block(root, "schedule");
            cfg.schedule = read_schedule(sb);
            try {
                cfg.schedule.validate(*build_grid(*cfg.domain));
            } catch (const Error& e) {
                throw ConfigError(e.what(), sb.line, "schedule");
            }
            if (const Block* fb = find_block(root, "blowup")) {
                Reader r{*fb};
                auto window = r.number_list("fit_window");
                if (window.size() != 2 || !(window[0] > 0.0) || !(window[1] > window[0]))
                    throw ConfigError("fit_window must be two increasing positive numbers",
                                      r.line_of("fit_window"), "blowup.fit_window");
                cfg.fit_window_lo = window[0];
                cfg.fit_window_hi = window[1];
                cfg.has_fit_window = true;
            }
            // class-F membership is a hard precondition of the construction
            int line = sb.line;
            require_class_f(cfg.system->upper_bound, cfg.p, "system.g", line);
            for (const auto& f : cfg.system->lower_bounds)
                require_class_f(f, cfg.p, "system.f", line);
            require_hypotheses(*cfg.system, *cfg.domain, "system", line);

            if (cfg.command == Command::Mixed) {
                const Block& mb = require_block(root, "mixed");
                Reader r{mb};
                for (double v : r.number_list("blowup_set")) {
                    int c = static_cast<int>(v);
                    if (c < 1 || c > cfg.system->d)
                        throw ConfigError("component index out of range", r.line_of("blowup_set"),
                                          "mixed.blowup_set");
                    cfg.blowup_set.push_back(c - 1);
                }
                auto fixed = r.number_list("fixed_values");
                if (fixed.size() == 1)
                    cfg.fixed_values.assign(static_cast<std::size_t>(cfg.system->d), fixed[0]);
                else if (static_cast<int>(fixed.size()) == cfg.system->d)
                    cfg.fixed_values = fixed;
                else
                    throw ConfigError("fixed_values must be one value or one per component",
                                      r.line_of("fixed_values"), "mixed.fixed_values");
            }
            break;
        }
        case Command::Entire: {
            cfg.system = read_system(require_block(root, "system"));
            if (!cfg.system->has_weights())
                throw ConfigError("the entire-solution pipeline needs system.weights", 0,
                                  "system.weights");
            const Block& eb = require_block(root, "entire");
            Reader r{eb};
            cfg.ambient_dim = r.integer("ambient_dim");
            if (cfg.ambient_dim < 2)
                throw ConfigError("ambient_dim must be >= 2", r.line_of("ambient_dim"),
                                  "entire.ambient_dim");
            cfg.ball_radii = r.number_list("ball_radii");
            if (cfg.ball_radii.empty())
                throw ConfigError("ball_radii must not be empty", r.line_of("ball_radii"),
                                  "entire.ball_radii");
            for (std::size_t k = 0; k < cfg.ball_radii.size(); ++k)
                if (!(cfg.ball_radii[k] > 0.0) ||
                    (k > 0 && !(cfg.ball_radii[k] > cfg.ball_radii[k - 1])))
                    throw ConfigError("ball_radii must be positive and strictly increasing",
                                      r.line_of("ball_radii"), "entire.ball_radii");
            cfg.entire_resolution = r.integer("resolution");
            if (cfg.entire_resolution < 8)
                throw ConfigError("resolution too small", r.line_of("resolution"),
                                  "entire.resolution");
            cfg.growth_threshold = r.number_or("growth_threshold", 2.0);

            require_class_f(cfg.system->upper_bound, cfg.p, "system.g", eb.line);
            // The transform feeding w must be well defined for g.
            try {
                PhiTransform probe(cfg.system->upper_bound, cfg.p);
            } catch (const Error& e) {
                throw ConfigError(e.what(), eb.line, "system.g");
            }
            DomainSpec probe =
                DomainSpec::radial_ball(cfg.ball_radii.back(), cfg.ambient_dim, 33);
            require_hypotheses(*cfg.system, probe, "system", eb.line);
            break;
        }
        case Command::Verify: {
            cfg.domain = read_domain(require_block(root, "domain"));
            cfg.system = read_system(require_block(root, "system"));
            const Block& vb = require_block(root, "verify");
            Reader r{vb};
            std::string check = r.text("check");
            if (check == "subsolution")
                cfg.verify_check = VerifyKind::Subsolution;
            else if (check == "supersolution")
                cfg.verify_check = VerifyKind::Supersolution;
            else if (check == "comparison")
                cfg.verify_check = VerifyKind::Comparison;
            else
                throw ConfigError("check must be subsolution, supersolution, or comparison",
                                  r.line_of("check"), "verify.check");
            cfg.verify_tol = r.number_or("tol", 1e-6);
            if (cfg.verify_check == VerifyKind::Comparison) {
                cfg.verify_u = r.text("u");
                cfg.verify_v = r.text("v");
            } else {
                for (const std::string& f : r.list("fields"))
                    cfg.verify_fields.push_back(unquote(f, "verify.fields", r.line_of("fields")));
                if (static_cast<int>(cfg.verify_fields.size()) != cfg.system->d)
                    throw ConfigError("need one field file per component", r.line_of("fields"),
                                      "verify.fields");
            }
            break;
        }
    }

    check_consumed(root);
    return cfg;
}

RunConfig load_config(const std::string& path, std::optional<Command> expected) {
    std::ifstream in(path);
    if (!in.is_open()) throw ConfigError("cannot open config file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return load_config_text(buf.str(), expected);
}

} // namespace plaplab
