#include "sticky/cli.hpp"

#include "sticky/config.hpp"
#include "sticky/errors.hpp"
#include "sticky/mc.hpp"
#include "sticky/rates.hpp"
#include "sticky/sim.hpp"

#include "CLI11.hpp"

#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

#ifndef STICKY_VERSION
#define STICKY_VERSION "dev"
#endif

namespace sticky::cli {

namespace {

struct CommonArgs {
    std::string config_path;
    std::vector<std::string> sets;
};

void add_common(CLI::App* sub, CommonArgs& args) {
    sub->add_option("--config", args.config_path, "Run config file")->required();
    sub->add_option("--set", args.sets, "Override a config key (key=value)");
}

RunConfig load(const CommonArgs& args) {
    std::ifstream in(args.config_path);
    if (!in) {
        throw ConfigError("cannot read config file '" + args.config_path + "'");
    }
    std::ostringstream text;
    text << in.rdbuf();
    std::vector<Override> overrides;
    for (const auto& s : args.sets) {
        overrides.push_back(parse_override(s));
    }
    return parse_config(text.str(), overrides);
}

double require_h(const RunConfig& config, const char* command) {
    if (!config.h) {
        throw ConfigError(std::string(command) + " needs h", 0, "h");
    }
    return *config.h;
}

void write_state_header(std::ostream& out, const char* lead, std::size_t dim, const char* prefix,
                        const char* tail) {
    out << lead;
    for (std::size_t i = 0; i < dim; ++i) {
        out << (i > 0 || *lead ? "," : "") << prefix << (i + 1);
    }
    out << tail << '\n';
}

int cmd_path(const RunConfig& config, std::uint64_t stream, std::ostream& out) {
    const double h = require_h(config, "path");
    const StickyModel model = build_model(config);
    RateBuilder builder(model, config.scheme, h);
    TimeStepping stepping =
        resolve_stepping(model, config.scheme, build_stepping(config), h, config.T, config.x0);
    RngStream rng(config.seed, stream);
    const Path path = simulate(builder, stepping, config.T, config.x0, rng, Record::Full);

    write_state_header(out, "t", model.dim(), "x_", "");
    for (const auto& e : path.events) {
        out << format_double(e.t);
        for (double v : e.state) {
            out << ',' << format_double(v);
        }
        out << '\n';
    }
    return kOk;
}

int cmd_estimate(const RunConfig& config, std::ostream& out) {
    const double h = require_h(config, "estimate");
    const StickyModel model = build_model(config);
    const Estimate e = estimate(model, build_functional(config), config.scheme,
                                build_stepping(config), h, config.T, config.x0, config.n_paths,
                                config.seed, McOptions{config.workers});
    out << "mean=" << format_double(e.mean) << '\n';
    out << "stderr=" << format_double(e.std_error) << '\n';
    out << "n=" << e.n_paths << '\n';
    out << "h=" << format_double(e.h) << '\n';
    out << "scheme=" << to_string(e.scheme) << '\n';
    out << "time_mode=" << to_string(e.stepping.mode) << '\n';
    if (e.stepping.mode == TimeMode::Discrete) {
        out << "N=" << e.stepping.steps << '\n';
    }
    if (config.reference) {
        out << "abs_error=" << format_double(std::abs(e.mean - *config.reference)) << '\n';
    }
    return kOk;
}

int cmd_converge(const RunConfig& config, std::ostream& out, std::ostream& err) {
    if (config.h_list.empty()) {
        throw ConfigError("converge needs h_list", 0, "h_list");
    }
    if (!config.reference) {
        throw ConfigError("converge needs reference", 0, "reference");
    }
    const StickyModel model = build_model(config);
    const auto rows = convergence_rows(model, build_functional(config), config.scheme,
                                       build_stepping(config), config.h_list, config.T,
                                       config.x0, config.n_paths, config.seed,
                                       *config.reference, McOptions{config.workers});
    out << "h,estimate,abs_error,seconds\n";
    for (const auto& r : rows) {
        out << format_double(r.h) << ',' << format_double(r.estimate.mean) << ','
            << format_double(r.abs_error) << ',' << format_double(r.seconds) << '\n';
    }
    if (noise_floor_violated(rows)) {
        err << "warning: 3*stderr exceeds half the smallest abs_error; "
               "increase n_paths for a reliable slope\n";
    }
    out << "slope=" << format_double(fit_loglog_slope(rows)) << '\n';
    return kOk;
}

int cmd_rates(const RunConfig& config, std::ostream& out) {
    const double h = require_h(config, "rates");
    const StickyModel model = build_model(config);
    const RateTable table = build_rates(model, config.scheme, config.x0, h);
    write_state_header(out, "", model.dim(), "dx_", ",rate");
    for (std::size_t k = 0; k < table.size(); ++k) {
        const auto dx = table.displacement(k);
        for (std::size_t i = 0; i < dx.size(); ++i) {
            out << format_double(dx[i]) << ',';
        }
        out << format_double(table.rate(k)) << '\n';
    }
    return kOk;
}

} // namespace

std::string version() {
    return std::string("sticky_cli ") + STICKY_VERSION;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Sticky-boundary diffusions by continuous-time Markov chains", "sticky_cli"};
    app.set_version_flag("--version", version());
    app.require_subcommand(1);

    CommonArgs common;
    std::uint64_t stream = 0;
    auto* path = app.add_subcommand("path", "Simulate one path and print it as CSV");
    add_common(path, common);
    path->add_option("--stream", stream, "Stream index of the path (default 0)");
    auto* est = app.add_subcommand("estimate", "Monte Carlo estimate of the functional");
    add_common(est, common);
    auto* conv = app.add_subcommand("converge", "Convergence study over h_list");
    add_common(conv, common);
    auto* rates = app.add_subcommand("rates", "Print the rate table at x0 as CSV");
    add_common(rates, common);

    try {
        app.parse(std::vector<std::string>(args.rbegin(), args.rend()));
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        if (code == 0) {
            return kOk;
        }
        err << app.help();
        return kConfigError;
    }

    try {
        const RunConfig config = load(common);
        if (path->parsed()) {
            return cmd_path(config, stream, out);
        }
        if (est->parsed()) {
            return cmd_estimate(config, out);
        }
        if (conv->parsed()) {
            return cmd_converge(config, out, err);
        }
        return cmd_rates(config, out);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kRuntimeError;
    }
}

} // namespace sticky::cli
