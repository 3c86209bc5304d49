#include "sfde/runner.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

// json included via runner.hpp

#include "sfde/convergence.hpp"
#include "sfde/density.hpp"
#include "sfde/ldp.hpp"
#include "sfde/longtime.hpp"
#include "sfde/parallel.hpp"

namespace sfde {

using nlohmann::json;

namespace {

const json& require(const json& node, const std::string& key, const std::string& path) {
    if (!node.is_object() || !node.contains(key)) {
        throw ConfigError(path + "." + key, "missing field");
    }
    return node.at(key);
}

double require_number(const json& node, const std::string& key, const std::string& path) {
    const json& v = require(node, key, path);
    if (!v.is_number()) throw ConfigError(path + "." + key, "expected a number");
    return v.get<double>();
}

double number_or(const json& node, const std::string& key, double fallback) {
    if (!node.is_object() || !node.contains(key)) return fallback;
    return node.at(key).get<double>();
}

long require_integer(const json& node, const std::string& key, const std::string& path) {
    const json& v = require(node, key, path);
    if (!v.is_number_integer()) throw ConfigError(path + "." + key, "expected an integer");
    return v.get<long>();
}

long integer_or(const json& node, const std::string& key, long fallback) {
    if (!node.is_object() || !node.contains(key)) return fallback;
    return node.at(key).get<long>();
}

Vec require_vector(const json& node, const std::string& key, const std::string& path) {
    const json& v = require(node, key, path);
    if (!v.is_array() || v.empty()) throw ConfigError(path + "." + key, "expected a number array");
    Vec out(static_cast<long>(v.size()));
    for (size_t i = 0; i < v.size(); ++i) {
        if (!v[i].is_number()) throw ConfigError(path + "." + key, "expected a number array");
        out[static_cast<long>(i)] = v[i].get<double>();
    }
    return out;
}

std::vector<double> require_number_list(const json& node, const std::string& key,
                                        const std::string& path) {
    const Vec v = require_vector(node, key, path);
    return std::vector<double>(v.data(), v.data() + v.size());
}

SfdeModel parse_model(const json& root) {
    const json& m = require(root, "model", "");
    const std::string name = require(m, "name", "model").get<std::string>();
    const double tau = require_number(m, "tau", "model");
    const int dim = static_cast<int>(integer_or(m, "dim", 1));
    if (name == "cubic") {
        return make_cubic_model(tau, require_number(m, "sigma0", "model"),
                                number_or(m, "kappa", 0.0), dim);
    }
    if (name == "linear_delay") {
        DelayMeasureSpec nu = DelayMeasureSpec::uniform();
        if (m.contains("nu")) {
            const json& nj = m.at("nu");
            const std::string kind = require(nj, "kind", "model.nu").get<std::string>();
            if (kind == "uniform") {
                nu = DelayMeasureSpec::uniform();
            } else if (kind == "dirac") {
                nu = DelayMeasureSpec::dirac(require_number(nj, "at", "model.nu"));
            } else {
                throw ConfigError("model.nu.kind", "unknown measure kind '" + kind + "'");
            }
        }
        return make_linear_delay_model(require_number(m, "a", "model"),
                                       require_number(m, "b_bar", "model"),
                                       require_number(m, "sigma0", "model"), nu, tau, dim);
    }
    if (name == "ou") {
        return make_ou_model(require_number(m, "a", "model"),
                             require_number(m, "sigma0", "model"), tau, dim);
    }
    throw ConfigError("model.name", "unknown model '" + name + "'");
}

SchemeConfig parse_scheme(const json& root, double tau) {
    const json& s = require(root, "scheme", "");
    SchemeConfig cfg;
    cfg.theta = require_number(s, "theta", "scheme");
    cfg.delta = require_number(s, "delta", "scheme");
    cfg.solver_tol = number_or(s, "solver_tol", 1e-10);
    cfg.solver_max_iter = static_cast<int>(integer_or(s, "solver_max_iter", 50));
    cfg.noise_scale_eps = number_or(s, "eps", 1.0);
    cfg.validate(tau);
    return cfg;
}

Segment parse_initial(const json& node, const std::string& path, const SfdeModel& model,
                      const SchemeConfig& scheme) {
    const std::string kind = require(node, "kind", path).get<std::string>();
    if (kind == "constant") {
        const Vec value = require_vector(node, "value", path);
        if (value.size() != model.dim) throw ConfigError(path + ".value", "dimension mismatch");
        return Segment::constant(value, model.tau, scheme.delta);
    }
    if (kind == "linear") {
        const Vec value = require_vector(node, "value", path);
        const Vec slope = require_vector(node, "slope", path);
        if (value.size() != model.dim || slope.size() != model.dim) {
            throw ConfigError(path + ".value", "dimension mismatch");
        }
        return Segment::linear_path(value, slope, model.tau, scheme.delta);
    }
    if (kind == "nodes") {
        const json& vals = require(node, "values", path);
        const int n = delay_node_count(model.tau, scheme.delta);
        if (!vals.is_array() || static_cast<int>(vals.size()) != n + 1) {
            throw ConfigError(path + ".values",
                              "expected " + std::to_string(n + 1) + " node vectors");
        }
        Mat values(model.dim, n + 1);
        for (int j = 0; j <= n; ++j) {
            const json& col = vals[static_cast<size_t>(j)];
            if (!col.is_array() || static_cast<int>(col.size()) != model.dim) {
                throw ConfigError(path + ".values", "node vectors must have the model dimension");
            }
            for (int i = 0; i < model.dim; ++i) values(i, j) = col[static_cast<size_t>(i)];
        }
        return Segment(std::move(values), scheme.delta);
    }
    throw ConfigError(path + ".kind", "unknown initial kind '" + kind + "'");
}

std::function<double(const Vec&)> parse_test_function(const json& node, const std::string& path,
                                                      int dim) {
    const std::string name = require(node, "name", path).get<std::string>();
    Vec w = Vec::Ones(dim);
    if (node.contains("weights")) {
        w = require_vector(node, "weights", path);
        if (w.size() != dim) throw ConfigError(path + ".weights", "dimension mismatch");
    }
    const double shift = number_or(node, "shift", 0.0);
    if (name == "cos") {
        return [w, shift](const Vec& x) { return std::cos(w.dot(x) + shift); };
    }
    if (name == "logistic") {
        return [w, shift](const Vec& x) { return 1.0 / (1.0 + std::exp(-(w.dot(x) + shift))); };
    }
    throw ConfigError(path + ".name", "unknown test function '" + name + "'");
}

void check_nested(const json& exp, const SfdeModel& model) {
    std::vector<double> deltas = require_number_list(exp, "deltas", "experiment");
    std::sort(deltas.begin(), deltas.end(), std::greater<double>());
    const double horizon = require_number(exp, "horizon", "experiment");
    const double dref = require_number(exp, "delta_ref", "experiment");
    for (size_t i = 0; i < deltas.size(); ++i) {
        delay_node_count(model.tau, deltas[i], "experiment.deltas");
        const double r = deltas[i] / dref;
        if (std::abs(r - std::lround(r)) > 1e-9) {
            throw ConfigError("experiment.deltas", "levels must be nested over delta_ref");
        }
        if (i + 1 < deltas.size()) {
            const double rr = deltas[i] / deltas[i + 1];
            if (std::abs(rr - std::lround(rr)) > 1e-9) {
                throw ConfigError("experiment.deltas", "levels must be pairwise nested");
            }
        }
        const double k = horizon / deltas[i];
        if (std::abs(k - std::lround(k)) > 1e-9) {
            throw ConfigError("experiment.horizon", "must be a multiple of every level step");
        }
    }
    if (!(dref <= deltas.back() / 4.0 + 1e-15)) {
        throw ConfigError("experiment.delta_ref", "must be at most a quarter of the finest level");
    }
}

void check_ldp_delta(const SfdeModel& model, const SchemeConfig& scheme) {
    if (model.params.dissipativity_a2 && *model.params.dissipativity_a2 > 0.0) {
        const double cap = 1.0 / (4.0 * scheme.theta * *model.params.dissipativity_a2);
        if (scheme.delta > cap + 1e-12) {
            throw ConfigError("scheme.delta", "step exceeds 1/(4*theta*a2) required here");
        }
    }
}

void validate_experiment(const std::string& subcommand, const json& exp, const SfdeModel& model,
                         const SchemeConfig& scheme) {
    if (subcommand == "simulate") {
        if (require_integer(exp, "steps", "experiment") < 0) {
            throw ConfigError("experiment.steps", "must be nonnegative");
        }
    } else if (subcommand == "strong-rate") {
        check_nested(exp, model);
        require_integer(exp, "paths", "experiment");
    } else if (subcommand == "weak-rate") {
        check_nested(exp, model);
        require_integer(exp, "paths", "experiment");
        parse_test_function(require(exp, "test_function", "experiment"), "experiment.test_function",
                            model.dim);
    } else if (subcommand == "attract") {
        require(exp, "eta", "experiment");
        require_integer(exp, "steps", "experiment");
        require_integer(exp, "paths", "experiment");
    } else if (subcommand == "invariant") {
        const long w = require_integer(exp, "window_steps", "experiment");
        if (w * scheme.delta < model.tau - 1e-12) {
            throw ConfigError("experiment.window_steps", "window must span at least one delay");
        }
        if (require_integer(exp, "windows", "experiment") < 2) {
            throw ConfigError("experiment.windows", "need at least two windows");
        }
        require_integer(exp, "paths", "experiment");
    } else if (subcommand == "density") {
        require_number(exp, "horizon", "experiment");
        require_integer(exp, "paths", "experiment");
        if (model.dim != 1) throw ConfigError("model.dim", "density experiments are scalar only");
    } else if (subcommand == "ldp-skeleton") {
        check_ldp_delta(model, scheme);
        require_integer(exp, "steps", "experiment");
    } else if (subcommand == "ldp-rate") {
        check_ldp_delta(model, scheme);
        require_integer(exp, "steps", "experiment");
        require(exp, "targets", "experiment");
    } else if (subcommand == "ldp-logprob") {
        check_ldp_delta(model, scheme);
        require_integer(exp, "steps", "experiment");
        require_number(exp, "threshold", "experiment");
        require_number_list(exp, "eps_list", "experiment");
        require_integer(exp, "paths", "experiment");
    } else if (subcommand == "ldp-logdensity") {
        check_ldp_delta(model, scheme);
        require_integer(exp, "steps", "experiment");
        require_number_list(exp, "y_grid", "experiment");
        require_number_list(exp, "eps_list", "experiment");
        require_integer(exp, "paths", "experiment");
        if (model.dim != 1) throw ConfigError("model.dim", "log-density check is scalar only");
    } else {
        throw ConfigError("subcommand", "unknown subcommand '" + subcommand + "'");
    }
}

std::string hash_hex(const std::string& text) {
    const std::uint64_t h = fnv1a64(text);
    std::ostringstream os;
    os << std::hex << h;
    return os.str();
}

Control parse_control(const json& node, const std::string& path, int noise_dim, long steps,
                      double delta) {
    const std::string kind = require(node, "kind", path).get<std::string>();
    if (kind == "zero") return Control::zero(noise_dim, steps, delta);
    if (kind == "constant") {
        const Vec value = require_vector(node, "value", path);
        if (value.size() != noise_dim) throw ConfigError(path + ".value", "dimension mismatch");
        Control v = Control::zero(noise_dim, steps, delta);
        v.values.colwise() = value;
        return v;
    }
    if (kind == "values") {
        const json& vals = require(node, "values", path);
        if (!vals.is_array() || static_cast<long>(vals.size()) != steps) {
            throw ConfigError(path + ".values", "expected one vector per step");
        }
        Control v = Control::zero(noise_dim, steps, delta);
        for (long k = 0; k < steps; ++k) {
            const json& col = vals[static_cast<size_t>(k)];
            if (!col.is_array() || static_cast<int>(col.size()) != noise_dim) {
                throw ConfigError(path + ".values", "vectors must have the noise dimension");
            }
            for (int i = 0; i < noise_dim; ++i) v.values(i, k) = col[static_cast<size_t>(i)];
        }
        return v;
    }
    throw ConfigError(path + ".kind", "unknown control kind '" + kind + "'");
}

}  // namespace

ExperimentConfig::ExperimentConfig(SfdeModel model_in, SchemeConfig scheme_in, Segment initial_in)
    : model(std::move(model_in)),
      scheme(scheme_in),
      initial(std::move(initial_in)),
      experiment(json::object()) {}

const std::vector<std::string>& known_subcommands() {
    static const std::vector<std::string> names = {
        "simulate",   "strong-rate", "weak-rate",  "attract",        "invariant",
        "density",    "ldp-skeleton", "ldp-rate",  "ldp-logprob",    "ldp-logdensity"};
    return names;
}

ExperimentConfig load_config(const std::filesystem::path& path, const std::string& subcommand,
                             std::optional<std::uint64_t> seed_override,
                             std::optional<std::string> out_override) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read config file " + path.string());
    json root;
    try {
        root = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("(root)", std::string("not valid JSON: ") + e.what());
    }

    SfdeModel model = parse_model(root);
    SchemeConfig scheme = parse_scheme(root, model.tau);
    Segment initial = parse_initial(require(root, "initial", ""), "initial", model, scheme);

    ExperimentConfig cfg(std::move(model), scheme, std::move(initial));
    cfg.master_seed = seed_override.value_or(
        root.contains("master_seed") ? root.at("master_seed").get<std::uint64_t>() : 0);

    if (out_override) {
        cfg.output_dir = *out_override;
    } else if (const char* env = std::getenv("SFDE_OUT_DIR"); env && *env) {
        cfg.output_dir = env;
    } else if (root.contains("output") && root.at("output").contains("dir")) {
        cfg.output_dir = root.at("output").at("dir").get<std::string>();
    } else {
        cfg.output_dir = ".";
    }

    cfg.experiment = require(root, "experiment", "");
    const std::string kind = require(cfg.experiment, "kind", "experiment").get<std::string>();
    if (kind != subcommand) {
        throw ConfigError("experiment.kind",
                          "config is for '" + kind + "', invoked as '" + subcommand + "'");
    }
    validate_experiment(subcommand, cfg.experiment, cfg.model, cfg.scheme);

    // Point masses between grid nodes snap to the nearest node at run time;
    // record that so nobody mistakes the snapped measure for the declared one.
    for (const auto& [name, spec] : cfg.model.measures) {
        if (spec.kind != DelayMeasureSpec::Kind::Dirac) continue;
        const double cells = spec.at / cfg.scheme.delta;
        if (std::abs(cells - std::lround(cells)) > 1e-12) {
            std::ostringstream os;
            os << "measure '" << name << "' point mass at " << spec.at
               << " snapped to the nearest grid node";
            cfg.warnings.push_back(os.str());
        }
    }

    json effective = root;
    effective["master_seed"] = cfg.master_seed;
    cfg.config_hash = hash_hex(effective.dump());
    return cfg;
}

std::string validate_config(const std::filesystem::path& path, const std::string& subcommand) {
    std::string kind = subcommand;
    if (kind == "validate" || kind.empty()) {
        std::ifstream in(path);
        if (!in) throw IoError("cannot read config file " + path.string());
        json root;
        try {
            root = json::parse(in);
        } catch (const json::parse_error& e) {
            throw ConfigError("(root)", std::string("not valid JSON: ") + e.what());
        }
        kind = require(require(root, "experiment", ""), "kind", "experiment").get<std::string>();
    }
    const ExperimentConfig cfg = load_config(path, kind);
    std::ostringstream os;
    os << "ok subcommand=" << kind << " model=" << cfg.model.name
       << " theta=" << cfg.scheme.theta << " delta=" << cfg.scheme.delta
       << " config_hash=" << cfg.config_hash << "\n";
    for (const auto& w : cfg.warnings) os << "warning=" << w << "\n";
    return os.str();
}

namespace {

using Metadata = std::vector<std::pair<std::string, std::string>>;

Metadata base_metadata(const ExperimentConfig& cfg) {
    return {{"config_hash", cfg.config_hash}, {"master_seed", std::to_string(cfg.master_seed)}};
}

std::string format_double(double v) {
    std::ostringstream os;
    os.precision(12);
    os << v;
    return os.str();
}

std::filesystem::path out_file(const ExperimentConfig& cfg, const std::string& name) {
    std::filesystem::create_directories(cfg.output_dir);
    return std::filesystem::path(cfg.output_dir) / name;
}

void finish_summary(const ExperimentConfig& cfg, std::ostringstream& os) {
    for (const auto& w : cfg.warnings) os << "warning=" << w << "\n";
    std::ofstream out(out_file(cfg, "summary.txt"));
    out << "config_hash=" << cfg.config_hash << "\n";
    out << "master_seed=" << cfg.master_seed << "\n";
    out << os.str();
}

std::string run_simulate(const ExperimentConfig& cfg, int threads) {
    const long steps = cfg.experiment.at("steps").get<long>();
    const long paths = integer_or(cfg.experiment, "paths", 1);
    const bool retain = cfg.experiment.value("retain_increments", true);
    std::vector<std::optional<Trajectory>> results(static_cast<size_t>(paths));
    parallel_for(paths, threads, [&](long p) {
        NoiseStream stream(cfg.master_seed, static_cast<std::uint64_t>(p));
        results[static_cast<size_t>(p)] =
            simulate(cfg.model, cfg.scheme, cfg.initial, steps, stream, retain);
    });
    Metadata meta = base_metadata(cfg);
    for (long p = 0; p < paths; ++p) {
        Metadata m = meta;
        m.emplace_back("path_index", std::to_string(p));
        std::ostringstream name;
        name << "trajectory_path" << p << ".csv";
        write_trajectory_csv(out_file(cfg, name.str()).string(), *results[static_cast<size_t>(p)],
                             m);
    }
    std::ostringstream os;
    os << "subcommand=simulate\nsteps=" << steps << "\npaths=" << paths << "\n";
    finish_summary(cfg, os);
    return os.str();
}

std::string run_strong_rate(const ExperimentConfig& cfg, int threads) {
    const auto deltas = require_number_list(cfg.experiment, "deltas", "experiment");
    const RateReport report = strong_errors(
        cfg.model, cfg.scheme, cfg.initial, cfg.experiment.at("horizon").get<double>(), deltas,
        cfg.experiment.at("delta_ref").get<double>(), cfg.experiment.at("paths").get<int>(),
        cfg.master_seed, threads);
    write_rate_report_csv(out_file(cfg, "strong_rate.csv").string(), report, base_metadata(cfg));
    std::ostringstream os;
    os << "subcommand=strong-rate\nslope=" << format_double(report.slope)
       << "\nintercept=" << format_double(report.intercept) << "\nlevels=" << report.deltas.size()
       << "\n";
    finish_summary(cfg, os);
    return os.str();
}

std::string run_weak_rate(const ExperimentConfig& cfg, int threads) {
    const auto deltas = require_number_list(cfg.experiment, "deltas", "experiment");
    const auto f = parse_test_function(cfg.experiment.at("test_function"),
                                       "experiment.test_function", cfg.model.dim);
    const RateReport report = weak_errors(
        cfg.model, cfg.scheme, cfg.initial, cfg.experiment.at("horizon").get<double>(), f, deltas,
        cfg.experiment.at("delta_ref").get<double>(), cfg.experiment.at("paths").get<int>(),
        cfg.master_seed, threads);
    write_rate_report_csv(out_file(cfg, "weak_rate.csv").string(), report, base_metadata(cfg));
    std::ostringstream os;
    os << "subcommand=weak-rate\nslope=" << format_double(report.slope)
       << "\nsurviving_levels=" << report.surviving.size() << "\nlevels=" << report.deltas.size()
       << "\n";
    finish_summary(cfg, os);
    return os.str();
}

std::string run_attract(const ExperimentConfig& cfg, int threads) {
    const Segment eta =
        parse_initial(cfg.experiment.at("eta"), "experiment.eta", cfg.model, cfg.scheme);
    const AttractivenessCurve curve = attractiveness_curve(
        cfg.model, cfg.scheme, cfg.initial, eta, cfg.experiment.at("steps").get<long>(),
        cfg.experiment.at("paths").get<int>(), cfg.master_seed, threads);
    write_curve_csv(out_file(cfg, "attract_curve.csv").string(), curve.times, curve.mean_sq_gap,
                    "time", "mean_sq_gap", base_metadata(cfg));
    std::ostringstream os;
    os << "subcommand=attract\ntail_slope=" << format_double(curve.tail_slope)
       << "\ninitial_gap_sq=" << format_double(curve.mean_sq_gap.front())
       << "\nfinal_gap_sq=" << format_double(curve.mean_sq_gap.back()) << "\n";
    finish_summary(cfg, os);
    return os.str();
}

std::string run_invariant(const ExperimentConfig& cfg, int threads) {
    const long window = cfg.experiment.at("window_steps").get<long>();
    const int count = cfg.experiment.at("windows").get<int>();
    const int paths = cfg.experiment.at("paths").get<int>();
    const auto distances = invariant_cauchy(cfg.model, cfg.scheme, cfg.initial, window, count,
                                            paths, cfg.master_seed, threads);
    std::vector<double> index(distances.size());
    for (size_t i = 0; i < index.size(); ++i) index[i] = static_cast<double>(i + 1);
    write_curve_csv(out_file(cfg, "invariant_cauchy.csv").string(), index, distances, "window",
                    "w2_distance", base_metadata(cfg));
    // Sampling floor: two independent runs of the same length, compared at
    // the terminal window.
    const long terminal = window * count;
    const EmpiricalMeasure a = terminal_measure(cfg.model, cfg.scheme, cfg.initial, terminal,
                                                paths, cfg.master_seed, "floor-a", threads);
    const EmpiricalMeasure b = terminal_measure(cfg.model, cfg.scheme, cfg.initial, terminal,
                                                paths, cfg.master_seed, "floor-b", threads);
    const double floor = wasserstein(2, a, b, paths);
    std::ostringstream os;
    os << "subcommand=invariant\nwindows=" << count
       << "\nlast_distance=" << format_double(distances.back())
       << "\nsampling_floor=" << format_double(floor) << "\n";
    finish_summary(cfg, os);
    return os.str();
}

std::string run_density(const ExperimentConfig& cfg, int threads) {
    const double horizon = cfg.experiment.at("horizon").get<double>();
    const long paths = cfg.experiment.at("paths").get<long>();
    const double k_exact = horizon / cfg.scheme.delta;
    if (std::abs(k_exact - std::lround(k_exact)) > 1e-9) {
        throw ConfigError("experiment.horizon", "must be a multiple of the scheme step");
    }
    const long steps = std::lround(k_exact);
    std::vector<double> endpoints(static_cast<size_t>(paths), 0.0);
    parallel_for(paths, threads, [&](long p) {
        NoiseStream stream = NoiseStream::tagged(cfg.master_seed, "density", 0,
                                                 static_cast<std::uint64_t>(p));
        const Trajectory traj = simulate(cfg.model, cfg.scheme, cfg.initial, steps, stream, false);
        endpoints[static_cast<size_t>(p)] = traj.state(steps)[0];
    });
    const double h = number_or(cfg.experiment, "bandwidth", silverman_bandwidth(endpoints));
    const int points = static_cast<int>(integer_or(cfg.experiment, "grid_points", 401));
    const double span = number_or(cfg.experiment, "span_sigmas", 6.0);
    const DensityEstimate est = kde(endpoints, h * h, density_grid(endpoints, points, span));
    write_density_csv(out_file(cfg, "density.csv").string(), est, base_metadata(cfg));

    std::ostringstream os;
    os << "subcommand=density\npaths=" << paths << "\nbandwidth_std=" << format_double(h) << "\n";
    if (cfg.model.params.drift_gradient_bound && cfg.model.params.drift_kernel_count) {
        const double t0 = std::log(1.5) / (2.0 * *cfg.model.params.drift_gradient_bound *
                                           *cfg.model.params.drift_kernel_count *
                                           (cfg.scheme.theta + 2.0));
        os << "density_horizon_threshold=" << format_double(t0) << "\n";
        if (horizon < t0) os << "warning=horizon below density threshold\n";
    }
    finish_summary(cfg, os);
    return os.str();
}

std::string run_ldp_skeleton(const ExperimentConfig& cfg, int threads) {
    (void)threads;
    const long steps = cfg.experiment.at("steps").get<long>();
    const Control v = cfg.experiment.contains("control")
                          ? parse_control(cfg.experiment.at("control"), "experiment.control",
                                          cfg.model.noise_dim, steps, cfg.scheme.delta)
                          : Control::zero(cfg.model.noise_dim, steps, cfg.scheme.delta);
    const Trajectory w = skeleton_solve(cfg.model, cfg.scheme, cfg.initial, v);
    write_trajectory_csv(out_file(cfg, "skeleton.csv").string(), w, base_metadata(cfg));
    write_control_csv(out_file(cfg, "control.csv").string(), v, base_metadata(cfg));
    std::ostringstream os;
    os << "subcommand=ldp-skeleton\nsteps=" << steps
       << "\ncost=" << format_double(rate_cost(v).cost)
       << "\nendpoint=" << format_double(w.state(steps)[0]) << "\n";
    finish_summary(cfg, os);
    return os.str();
}

std::string run_ldp_rate(const ExperimentConfig& cfg, int threads) {
    (void)threads;
    const long steps = cfg.experiment.at("steps").get<long>();
    const json& targets = cfg.experiment.at("targets");
    EndpointRateSettings settings;
    settings.endpoint_tol = number_or(cfg.experiment, "endpoint_tol", settings.endpoint_tol);
    settings.max_iterations = static_cast<int>(
        integer_or(cfg.experiment, "max_iterations", settings.max_iterations));
    std::ostringstream os;
    os << "subcommand=ldp-rate\nsteps=" << steps << "\ntargets=" << targets.size() << "\n";
    int index = 0;
    for (const auto& t : targets) {
        Vec target(cfg.model.dim);
        if (!t.is_array() || static_cast<int>(t.size()) != cfg.model.dim) {
            throw ConfigError("experiment.targets", "each target needs the model dimension");
        }
        for (int i = 0; i < cfg.model.dim; ++i) target[i] = t[static_cast<size_t>(i)];
        const EndpointRateResult result =
            endpoint_rate(cfg.model, cfg.scheme, cfg.initial, steps, target, settings);
        Metadata meta = base_metadata(cfg);
        meta.emplace_back("target", format_double(target[0]));
        write_control_csv(out_file(cfg, "rate_control_" + std::to_string(index) + ".csv").string(),
                          result.control, meta);
        os << "target_" << index << "=" << format_double(target[0]) << "\ncost_" << index << "="
           << format_double(result.rate.cost) << "\nachieved_" << index << "="
           << format_double(result.endpoint[0]) << "\nconverged_" << index << "="
           << (result.converged ? "true" : "false") << "\n";
        ++index;
    }
    finish_summary(cfg, os);
    return os.str();
}

std::string run_ldp_logprob(const ExperimentConfig& cfg, int threads) {
    const long steps = cfg.experiment.at("steps").get<long>();
    const double threshold = cfg.experiment.at("threshold").get<double>();
    const auto eps_list = require_number_list(cfg.experiment, "eps_list", "experiment");
    const auto points = small_noise_logprob(cfg.model, cfg.scheme, cfg.initial, steps, threshold,
                                            eps_list, cfg.experiment.at("paths").get<long>(),
                                            cfg.master_seed, threads);
    write_logprob_csv(out_file(cfg, "logprob.csv").string(), points, base_metadata(cfg));
    Vec target(cfg.model.dim);
    target.setZero();
    target[0] = threshold;
    EndpointRateSettings settings;
    settings.endpoint_tol = 1e-4;
    const EndpointRateResult boundary =
        endpoint_rate(cfg.model, cfg.scheme, cfg.initial, steps, target, settings);
    std::ostringstream os;
    os << "subcommand=ldp-logprob\nlevels=" << points.size()
       << "\nrate_at_threshold=" << format_double(boundary.rate.cost) << "\n";
    for (const auto& p : points) {
        os << "eps_log_p[" << format_double(p.eps) << "]="
           << (p.censored ? std::string("censored") : format_double(p.eps_log_p)) << "\n";
    }
    finish_summary(cfg, os);
    return os.str();
}

std::string run_ldp_logdensity(const ExperimentConfig& cfg, int threads) {
    const long steps = cfg.experiment.at("steps").get<long>();
    const auto y_grid = require_number_list(cfg.experiment, "y_grid", "experiment");
    const auto eps_list = require_number_list(cfg.experiment, "eps_list", "experiment");
    const auto rows = log_density_check(cfg.model, cfg.scheme, cfg.initial, steps, y_grid,
                                        eps_list, cfg.experiment.at("paths").get<long>(),
                                        number_or(cfg.experiment, "zeta0", 0.0), cfg.master_seed,
                                        threads);
    write_logdensity_csv(out_file(cfg, "logdensity.csv").string(), rows, base_metadata(cfg));
    std::ostringstream os;
    os << "subcommand=ldp-logdensity\nrows=" << rows.size() << "\n";
    finish_summary(cfg, os);
    return os.str();
}

}  // namespace

std::string run_experiment(const std::string& subcommand, const ExperimentConfig& cfg,
                           int threads) {
    if (subcommand == "simulate") return run_simulate(cfg, threads);
    if (subcommand == "strong-rate") return run_strong_rate(cfg, threads);
    if (subcommand == "weak-rate") return run_weak_rate(cfg, threads);
    if (subcommand == "attract") return run_attract(cfg, threads);
    if (subcommand == "invariant") return run_invariant(cfg, threads);
    if (subcommand == "density") return run_density(cfg, threads);
    if (subcommand == "ldp-skeleton") return run_ldp_skeleton(cfg, threads);
    if (subcommand == "ldp-rate") return run_ldp_rate(cfg, threads);
    if (subcommand == "ldp-logprob") return run_ldp_logprob(cfg, threads);
    if (subcommand == "ldp-logdensity") return run_ldp_logdensity(cfg, threads);
    throw ConfigError("subcommand", "unknown subcommand '" + subcommand + "'");
}

}  // namespace sfde
