#include "pspin/runner/config.hpp"

#include "pspin/io.hpp"
#include "pspin/seeding.hpp"

#include <concepts>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace pspin::runner {

namespace {

using nlohmann::json;

// An object being read field by field; finish() rejects anything unread.
class Fields {
public:
    Fields(const json& doc, std::string path) : doc_(doc), path_(std::move(path)) {
        if (!doc_.is_object()) throw SchemaError(path_, "expected an object");
    }

    const json* find(const char* key) {
        seen_.insert(key);
        const auto it = doc_.find(key);
        return it == doc_.end() ? nullptr : &*it;
    }

    std::string at(const char* key) const { return path_ + "/" + key; }

    template <std::unsigned_integral T>
    void read(const char* key, T& out) {
        if (const json* v = find(key)) {
            if (!v->is_number_unsigned() || v->get<std::uint64_t>() > std::numeric_limits<T>::max())
                throw SchemaError(at(key), "expected a nonnegative integer");
            out = v->get<T>();
        }
    }

    void read(const char* key, double& out) {
        if (const json* v = find(key)) {
            if (!v->is_number()) throw SchemaError(at(key), "expected a number");
            out = v->get<double>();
        }
    }

    void read(const char* key, bool& out) {
        if (const json* v = find(key)) {
            if (!v->is_boolean()) throw SchemaError(at(key), "expected true or false");
            out = v->get<bool>();
        }
    }

    void read(const char* key, std::string& out) {
        if (const json* v = find(key)) {
            if (!v->is_string()) throw SchemaError(at(key), "expected a string");
            out = v->get<std::string>();
        }
    }

    template <typename Fn>
    void section(const char* key, Fn&& fn) {
        if (const json* v = find(key)) {
            Fields sub(*v, at(key));
            fn(sub);
            sub.finish();
        }
    }

    void finish() const {
        for (const auto& [key, value] : doc_.items())
            if (!seen_.contains(key)) throw SchemaError(path_ + "/" + key, "unknown field");
    }

private:
    const json& doc_;
    std::string path_;
    std::set<std::string> seen_;
};

template <typename Fn>
void check(const std::string& path, Fn&& fn) {
    try {
        fn();
    } catch (const SchemaError&) {
        throw;
    } catch (const std::invalid_argument& e) {
        throw SchemaError(path, e.what());
    }
}

std::vector<OverlapVector> expand_axes(const json& axes, std::size_t species, const std::string& path) {
    if (!axes.is_array() || axes.size() != species) throw SchemaError(path, "needs one value list per species");
    std::vector<std::vector<double>> values;
    for (std::size_t s = 0; s < species; ++s) {
        const std::string at = path + "/" + std::to_string(s);
        if (!axes[s].is_array() || axes[s].empty()) throw SchemaError(at, "expected a nonempty array");
        std::vector<double> axis;
        for (std::size_t k = 0; k < axes[s].size(); ++k) {
            if (!axes[s][k].is_number()) throw SchemaError(at + "/" + std::to_string(k), "expected a number");
            axis.push_back(axes[s][k].get<double>());
        }
        values.push_back(std::move(axis));
    }
    // Last species varies fastest.
    std::vector<OverlapVector> grid{OverlapVector(std::vector<double>{})};
    for (const auto& axis : values) {
        std::vector<OverlapVector> next;
        for (const auto& partial : grid)
            for (double v : axis) {
                std::vector<double> q(partial.begin(), partial.end());
                q.push_back(v);
                next.emplace_back(std::move(q));
            }
        grid = std::move(next);
    }
    return grid;
}

std::vector<OverlapVector> read_grid(Fields& f, std::size_t species) {
    const json* grid = f.find("grid");
    const json* axes = f.find("axes");
    if (grid && axes) throw SchemaError(f.at("axes"), "give either grid or axes, not both");
    std::vector<OverlapVector> out;
    if (axes) {
        out = expand_axes(*axes, species, f.at("axes"));
    } else if (grid) {
        if (!grid->is_array()) throw SchemaError(f.at("grid"), "expected an array of q vectors");
        for (std::size_t k = 0; k < grid->size(); ++k)
            out.push_back(overlap_from_json((*grid)[k], species, f.at("grid") + "/" + std::to_string(k)));
    }
    const std::string at = f.at(axes ? "axes" : "grid");
    for (std::size_t k = 0; k < out.size(); ++k)
        check(at, [&] { require_shell_parameter(out[k], species); });
    return out;
}

json grid_to_json(const std::vector<OverlapVector>& grid) {
    json out = json::array();
    for (const auto& q : grid) out.push_back(overlap_to_json(q));
    return out;
}

void read_model(Fields& f, ModelSpec& model) {
    const json* doc = f.find("model");
    if (!doc) return;
    const std::string path = f.at("model");
    if (!doc->is_object()) throw SchemaError(path, "expected an object");
    json layout_part = json::object(), mixture_part = json::object();
    for (const auto& [key, value] : doc->items()) {
        if (key == "species") {
            layout_part[key] = value;
            mixture_part[key] = value;
        } else if (key == "sizes" || key == "proportions") {
            layout_part[key] = value;
        } else if (key == "terms") {
            mixture_part[key] = value;
        } else {
            throw SchemaError(path + "/" + key, "unknown field");
        }
    }
    if (!mixture_part.contains("terms")) mixture_part["terms"] = json::array();
    model.layout = share(layout_from_json(layout_part, path));
    model.mixture = mixture_from_json(mixture_part, model.layout->labels(), path);
}

ExperimentConfig parse_fields(const json& doc) {
    ExperimentConfig c;
    Fields f(doc, "");
    std::string schema = kConfigSchema;
    f.read("schema", schema);
    if (schema != kConfigSchema) throw SchemaError("/schema", "unsupported schema '" + schema + "'");
    f.read("master_seed", c.master_seed);
    f.read("workers", c.workers);
    f.read("out", c.out_dir);
    read_model(f, c.model);
    const std::size_t species = c.species();
    f.read("seeds", c.seeds);
    f.read("beta", c.beta);
    f.read("beta_nodes", c.beta_nodes);
    f.section("sampler", [&](Fields& s) {
        s.read("burn_in", c.sampler.burn_in);
        s.read("sweeps", c.sampler.sweeps);
        s.read("thin", c.sampler.thin);
        s.read("initial_step", c.sampler.initial_step);
        s.read("target_acceptance", c.sampler.target_acceptance);
        s.read("adapt_interval", c.sampler.adapt_interval);
        s.read("batches", c.sampler.batches);
    });
    f.section("ascent", [&](Fields& s) {
        s.read("restarts", c.ascent.restarts);
        s.read("max_iters", c.ascent.max_iters);
        s.read("tolerance", c.ascent.tolerance);
        s.read("shrink", c.ascent.shrink);
        s.read("slope", c.ascent.slope);
    });
    f.section("free_energy", [&](Fields& s) {
        std::string method = to_string(c.free_energy.method);
        s.read("method", method);
        check(s.at("method"), [&] { c.free_energy.method = fe_method_from_string(method); });
        s.read("quadrature_nodes", c.free_energy.quadrature_nodes);
    });
    f.section("ground_state", [&](Fields& s) {
        std::string method = to_string(c.ground_state.method);
        s.read("method", method);
        check(s.at("method"), [&] { c.ground_state.method = gs_method_from_string(method); });
        if (const json* q = s.find("q")) {
            c.ground_state.q = overlap_from_json(*q, species, s.at("q"));
            check(s.at("q"), [&] { require_shell_parameter(c.ground_state.q, species); });
        }
        s.read("checkpoint", c.ground_state.checkpoint);
    });
    f.section("tap_scan", [&](Fields& s) {
        c.tap_scan.grid = read_grid(s, species);
        s.read("gs_bias_allowance", c.tap_scan.gs_bias_allowance);
    });
    f.section("multisamp", [&](Fields& s) {
        c.multisamp.grid = read_grid(s, species);
        s.read("replicas", c.multisamp.replicas);
        s.read("eps", c.multisamp.eps);
    });
    f.section("verify", [&](Fields& s) {
        s.read("samples", c.verify.samples);
        s.read("tolerance", c.verify.tolerance);
    });
    f.finish();

    if (c.workers == 0) throw SchemaError("/workers", "must be at least 1");
    if (c.seeds == 0) throw SchemaError("/seeds", "must be at least 1");
    check("/sampler", [&] { c.sampler.validate(); });
    check("/ascent", [&] { c.ascent.validate(); });
    check("", [&] { c.tap_config().validate(); });
    if (c.multisamp.replicas < 2) throw SchemaError("/multisamp/replicas", "must be at least 2");
    if (!(c.multisamp.eps > 0.0)) throw SchemaError("/multisamp/eps", "must be positive");
    if (!(c.verify.tolerance > 0.0)) throw SchemaError("/verify/tolerance", "must be positive");
    if (!(c.tap_scan.gs_bias_allowance >= 0.0))
        throw SchemaError("/tap_scan/gs_bias_allowance", "must be nonnegative");
    return c;
}

std::pair<std::size_t, std::size_t> line_column(std::string_view text, std::size_t byte) {
    std::size_t line = 1, column = 1;
    for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            column = 1;
        } else {
            ++column;
        }
    }
    return {line, column};
}

} // namespace

OverlapVector ExperimentConfig::ground_state_q() const {
    return ground_state.q.size() == 0 ? OverlapVector::constant(species(), 0.5) : ground_state.q;
}

std::vector<OverlapVector> ExperimentConfig::tap_grid() const {
    return tap_scan.grid.empty() ? std::vector<OverlapVector>{OverlapVector::constant(species(), 0.0)} : tap_scan.grid;
}

std::vector<OverlapVector> ExperimentConfig::multisamp_grid() const {
    return multisamp.grid.empty() ? std::vector<OverlapVector>{OverlapVector::constant(species(), 0.0)}
                                  : multisamp.grid;
}

TapConfig ExperimentConfig::tap_config() const {
    TapConfig t;
    t.seeds = seeds;
    t.master_seed = master_seed;
    t.workers = workers;
    t.beta = beta;
    t.beta_nodes = beta_nodes;
    t.sampler = sampler;
    t.ascent = ascent;
    t.fe_method = free_energy.method;
    t.gs_method = ground_state.method;
    t.quadrature_nodes = free_energy.quadrature_nodes;
    t.gs_bias_allowance = tap_scan.gs_bias_allowance;
    return t;
}

ExperimentConfig parse_config(const json& doc) {
    try {
        return parse_fields(doc);
    } catch (const SchemaError& e) {
        throw ConfigError(e.what());
    }
}

ExperimentConfig parse_config_text(std::string_view text, const std::string& source) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        const auto [line, column] = line_column(text, e.byte);
        throw ConfigError(source + ":" + std::to_string(line) + ":" + std::to_string(column) + ": " + e.what());
    }
    try {
        return parse_fields(doc);
    } catch (const SchemaError& e) {
        throw ConfigError(source + ": " + e.what());
    }
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError(path + ": cannot open");
    std::ostringstream text;
    text << in.rdbuf();
    return parse_config_text(text.str(), path);
}

json serialize_config(const ExperimentConfig& c, bool execution_fields) {
    json model = layout_to_json(*c.model.layout);
    model["terms"] = mixture_to_json(c.model.mixture, c.model.layout->labels())["terms"];
    json doc = {
        {"schema", kConfigSchema},
        {"master_seed", c.master_seed},
        {"model", model},
        {"seeds", c.seeds},
        {"beta", c.beta},
        {"beta_nodes", c.beta_nodes},
        {"sampler",
         {{"burn_in", c.sampler.burn_in},
          {"sweeps", c.sampler.sweeps},
          {"thin", c.sampler.thin},
          {"initial_step", c.sampler.initial_step},
          {"target_acceptance", c.sampler.target_acceptance},
          {"adapt_interval", c.sampler.adapt_interval},
          {"batches", c.sampler.batches}}},
        {"ascent",
         {{"restarts", c.ascent.restarts},
          {"max_iters", c.ascent.max_iters},
          {"tolerance", c.ascent.tolerance},
          {"shrink", c.ascent.shrink},
          {"slope", c.ascent.slope}}},
        {"free_energy",
         {{"method", to_string(c.free_energy.method)}, {"quadrature_nodes", c.free_energy.quadrature_nodes}}},
        {"ground_state",
         {{"method", to_string(c.ground_state.method)},
          {"q", overlap_to_json(c.ground_state_q())},
          {"checkpoint", c.ground_state.checkpoint}}},
        {"tap_scan", {{"grid", grid_to_json(c.tap_grid())}, {"gs_bias_allowance", c.tap_scan.gs_bias_allowance}}},
        {"multisamp",
         {{"grid", grid_to_json(c.multisamp_grid())},
          {"replicas", c.multisamp.replicas},
          {"eps", c.multisamp.eps}}},
        {"verify", {{"samples", c.verify.samples}, {"tolerance", c.verify.tolerance}}},
    };
    if (execution_fields) {
        doc["workers"] = c.workers;
        doc["out"] = c.out_dir;
    }
    return doc;
}

std::uint64_t instance_seed(std::uint64_t master_seed, std::size_t index) {
    return derive_seed(master_seed, "instance/" + std::to_string(index));
}

} // namespace pspin::runner
