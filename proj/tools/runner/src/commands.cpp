#include "pspin/runner/commands.hpp"
#include "pspin/runner/output.hpp"

#include "pspin/io.hpp"
#include "pspin/numerics.hpp"
#include "pspin/parallel.hpp"
#include "pspin/seeding.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>

namespace pspin::runner {

namespace {

using nlohmann::json;

bool all_corners(const SpeciesLayout& layout) {
    for (std::size_t s = 0; s < layout.species(); ++s)
        if (layout.size(s) != 1) return false;
    return true;
}

// A single 2-spin term inside one species and nothing else.
bool has_eigen_oracle(const Mixture& xi) {
    if (xi.terms().size() != 1) return false;
    const auto& p = xi.terms().begin()->first;
    return std::count(p.begin(), p.end(), 2) == 1 && total_degree(p) == 2;
}

std::vector<std::string> q_columns(const SpeciesLayout& layout) {
    std::vector<std::string> out;
    for (const auto& label : layout.labels()) out.push_back("q_" + label);
    return out;
}

std::vector<std::string> concat(std::vector<std::string> a, const std::vector<std::string>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
}

json seed_list(const ExperimentConfig& c) {
    json out = json::array();
    for (std::size_t i = 0; i < c.seeds; ++i) out.push_back(instance_seed(c.master_seed, i));
    return out;
}

json average_json(const SeedAverage& a) {
    return {{"mean", a.mean},     {"std_error", a.std_error}, {"mc_error", a.mc_error},
            {"values", a.values}, {"method", a.method},       {"flags", a.flags}};
}

std::string short_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

std::string q_text(const OverlapVector& q) {
    std::string out = "(";
    for (std::size_t s = 0; s < q.size(); ++s) out += (s ? "," : "") + short_number(q[s]);
    return out + ")";
}

void merge_flags(std::vector<std::string>& into, const std::vector<std::string>& from) {
    into.insert(into.end(), from.begin(), from.end());
    std::sort(into.begin(), into.end());
    into.erase(std::unique(into.begin(), into.end()), into.end());
}

} // namespace

CommandResult cmd_free_energy(const ExperimentConfig& config) {
    const TapConfig tap = config.tap_config();
    std::vector<FreeEnergyEstimate> estimates(config.seeds);
    parallel_for(config.seeds, config.workers, [&](std::size_t i) {
        const std::uint64_t si = instance_seed(config.master_seed, i);
        const HamiltonianInstance h = build_instance(config.model.mixture, config.model.layout, si);
        Rng rng(derive_seed(si, "lhs"));
        estimates[i] = evaluate_free_energy(h, tap, rng);
    });

    CsvTable table({"seed_index", "instance_seed", "value", "std_error", "method", "flags"});
    json records = json::array();
    std::vector<double> values, errors;
    std::vector<std::string> flags;
    for (std::size_t i = 0; i < estimates.size(); ++i) {
        const auto& e = estimates[i];
        const std::uint64_t si = instance_seed(config.master_seed, i);
        table.row().cell(i).cell(std::to_string(si)).cell(e.value).cell(e.std_error).cell(to_string(e.method)).cell(
            join_flags(e.flags));
        json meta = e.meta;
        meta["seed_index"] = i;
        meta["instance_seed"] = si;
        meta["beta"] = config.beta;
        records.push_back({{"estimator", to_string(e.method)},
                           {"value", e.value},
                           {"std_error", e.std_error},
                           {"flags", e.flags},
                           {"meta", meta}});
        values.push_back(e.value);
        errors.push_back(e.std_error);
        merge_flags(flags, e.flags);
    }
    const SeedAverage avg = average_over_seeds(values, errors, to_string(estimates.front().method), flags);

    const std::filesystem::path dir(config.out_dir);
    write_csv(dir / "free_energy.csv", table);
    write_json(dir / "free_energy.json", {{"schema", "pspin.free_energy/1"},
                                          {"config", serialize_config(config, false)},
                                          {"seeds", seed_list(config)},
                                          {"records", records},
                                          {"summary", average_json(avg)}});
    CommandResult result;
    result.files = {"free_energy.csv", "free_energy.json"};
    result.summary = text_table({"beta", "seeds", "method", "mean F", "seed SE", "MC error", "flags"},
                                {{short_number(config.beta), std::to_string(config.seeds), avg.method,
                                  short_number(avg.mean), short_number(avg.std_error), short_number(avg.mc_error),
                                  join_flags(avg.flags)}});
    return result;
}

CommandResult cmd_ground_state(const ExperimentConfig& config) {
    const OverlapVector q = config.ground_state_q();
    const auto& layout = config.model.layout;
    const bool enumerate = config.ground_state.method == GsMethod::enumeration ||
                           (config.ground_state.method == GsMethod::automatic && all_corners(*layout));
    const bool oracle = has_eigen_oracle(config.model.mixture);
    AscentOptions options = config.ascent;
    options.workers = 1;

    struct Row {
        double energy = 0.0;
        std::optional<AscentResult> ascent;
        std::optional<double> oracle;
    };
    std::vector<Row> rows(config.seeds);
    parallel_for(config.seeds, config.workers, [&](std::size_t i) {
        const std::uint64_t si = instance_seed(config.master_seed, i);
        const HamiltonianInstance h = build_instance(config.model.mixture, layout, si);
        Row& row = rows[i];
        if (enumerate) {
            row.energy = exact_gs_enumeration(h, q);
        } else {
            Rng rng(derive_seed(si, "gs/" + q_key(q)));
            row.ascent = ascend(h, q, options, rng);
            row.energy = row.ascent->energy_per_spin;
        }
        if (oracle) row.oracle = eigen_oracle_2spin(h, q);
    });

    const std::filesystem::path dir(config.out_dir);
    CsvTable table({"seed_index", "instance_seed", "energy_per_spin", "method", "converged_fraction",
                    "mean_iterations", "best_restart", "eigen_oracle", "oracle_rel_gap"});
    json records = json::array();
    std::vector<double> energies;
    double worst_gap = 0.0;
    std::vector<std::string> files{"ground_state.csv", "ground_state.json"};
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const Row& r = rows[i];
        const std::uint64_t si = instance_seed(config.master_seed, i);
        const char* method = enumerate ? "enumeration" : "ascent";
        table.row().cell(i).cell(std::to_string(si)).cell(r.energy).cell(method);
        json meta = {{"seed_index", i}, {"instance_seed", si}, {"q", overlap_to_json(q)}};
        if (r.ascent) {
            table.cell(r.ascent->converged_fraction).cell(r.ascent->mean_iterations).cell(r.ascent->best_restart);
            meta["restarts"] = r.ascent->restarts;
            meta["converged_fraction"] = r.ascent->converged_fraction;
            meta["mean_iterations"] = r.ascent->mean_iterations;
            meta["max_iterations"] = r.ascent->max_iterations;
            meta["best_restart"] = r.ascent->best_restart;
            meta["monotone"] = r.ascent->monotone;
        } else {
            table.empty_cell().empty_cell().empty_cell();
        }
        if (r.oracle) {
            const double gap = std::abs(r.energy - *r.oracle) / std::max(std::abs(*r.oracle), 1e-300);
            worst_gap = std::max(worst_gap, *r.oracle == 0.0 ? std::abs(r.energy) : gap);
            table.cell(*r.oracle).cell(gap);
            meta["eigen_oracle"] = *r.oracle;
        } else {
            table.empty_cell().empty_cell();
        }
        std::vector<std::string> flags;
        if (!enumerate) flags.emplace_back("gs_lower_bound");
        if (r.ascent && r.ascent->converged_fraction < 1.0) flags.emplace_back("not_all_restarts_converged");
        records.push_back(
            {{"estimator", method}, {"value", r.energy}, {"std_error", 0.0}, {"flags", flags}, {"meta", meta}});
        energies.push_back(r.energy);
        if (config.ground_state.checkpoint && r.ascent) {
            const std::string name = "maximizer_" + std::to_string(i) + ".bin";
            std::filesystem::create_directories(dir);
            std::ofstream out(dir / name, std::ios::binary | std::ios::trunc);
            write_configuration(out, r.ascent->maximizer);
            files.push_back(name);
        }
    }
    const double m = mean(energies);
    const double se = energies.size() > 1 ? standard_error(energies) : 0.0;
    json summary = {{"mean", m}, {"std_error", se}, {"method", enumerate ? "enumeration" : "ascent"}};
    if (oracle) summary["max_oracle_rel_gap"] = worst_gap;
    write_csv(dir / "ground_state.csv", table);
    write_json(dir / "ground_state.json", {{"schema", "pspin.ground_state/1"},
                                           {"config", serialize_config(config, false)},
                                           {"seeds", seed_list(config)},
                                           {"records", records},
                                           {"summary", summary}});
    CommandResult result;
    result.files = files;
    result.summary = text_table({"q", "seeds", "method", "mean E*", "SE", "max oracle gap"},
                                {{q_text(q), std::to_string(config.seeds), enumerate ? "enumeration" : "ascent",
                                  short_number(m), short_number(se), oracle ? short_number(worst_gap) : "-"}});
    return result;
}

CommandResult cmd_tap_scan(const ExperimentConfig& config) {
    const auto grid = config.tap_grid();
    const TapConfig tap = config.tap_config();
    const auto reports = tap_inequality_scan(config.model.mixture, config.model.layout, grid, tap);
    const double allowance = config.tap_scan.gs_bias_allowance;

    CsvTable table(concat(q_columns(*config.model.layout),
                          {"lhs", "lhs_se", "gs", "gs_se", "logvol", "fq", "fq_se", "gap", "gap_se", "gap_mc_error",
                           "onsager", "holds_3se", "holds_with_allowance", "flags"}));
    json rows = json::array();
    std::vector<std::vector<std::string>> text_rows;
    std::size_t violations = 0, strict_violations = 0;
    for (const auto& r : reports) {
        table.row();
        for (double v : r.q) table.cell(v);
        const bool strict = r.inequality_holds(0.0), loose = r.inequality_holds(allowance);
        table.cell(r.lhs.mean).cell(r.lhs.std_error).cell(r.gs.mean).cell(r.gs.std_error).cell(r.logvol);
        table.cell(r.fq.mean).cell(r.fq.std_error).cell(r.gap).cell(r.gap_se).cell(r.gap_mc_error).cell(r.onsager);
        table.cell(strict).cell(loose).cell(join_flags(r.flags));
        strict_violations += strict ? 0 : 1;
        violations += loose ? 0 : 1;
        rows.push_back({{"q", overlap_to_json(r.q)},
                        {"lhs", average_json(r.lhs)},
                        {"gs", average_json(r.gs)},
                        {"fq", average_json(r.fq)},
                        {"logvol", r.logvol},
                        {"gap", r.gap},
                        {"gap_se", r.gap_se},
                        {"gap_mc_error", r.gap_mc_error},
                        {"onsager", r.onsager},
                        {"holds_3se", strict},
                        {"holds_with_allowance", loose},
                        {"flags", r.flags}});
        text_rows.push_back({q_text(r.q), short_number(r.lhs.mean), short_number(r.gs.mean), short_number(r.logvol),
                             short_number(r.fq.mean), short_number(r.gap), short_number(r.gap_se),
                             strict ? "yes" : "NO"});
    }
    const std::size_t best = argmin_abs_gap(reports);
    json fq_seeds = json::array();
    for (std::size_t i = 0; i < config.seeds; ++i)
        fq_seeds.push_back(derive_seed(config.master_seed, "fq/" + std::to_string(i)));

    const std::filesystem::path dir(config.out_dir);
    write_csv(dir / "tap_scan.csv", table);
    write_json(dir / "tap_scan.json", {{"schema", "pspin.tap_scan/1"},
                                       {"config", serialize_config(config, false)},
                                       {"seeds", seed_list(config)},
                                       {"fq_seeds", fq_seeds},
                                       {"rows", rows},
                                       {"argmin_abs_gap", {{"index", best}, {"q", overlap_to_json(reports[best].q)}}},
                                       {"violations_3se", strict_violations},
                                       {"violations_with_allowance", violations},
                                       {"gs_note", "local-search gs is a lower bound, so it can only raise the gap"}});
    CommandResult result;
    result.files = {"tap_scan.csv", "tap_scan.json"};
    result.summary = text_table({"q", "lhs", "gs", "logvol", "fq", "gap", "gap SE", "holds"}, text_rows) +
                     "argmin |gap| at " + q_text(reports[best].q) + "; " + std::to_string(strict_violations) +
                     " point(s) below -3 SE\n";
    return result;
}

CommandResult cmd_multisamp(const ExperimentConfig& config) {
    const auto grid = config.multisamp_grid();
    const auto betas = uniform_beta_grid(config.beta, config.beta_nodes);
    const std::size_t seeds = config.seeds;
    SamplerConfig sampler = config.sampler;
    sampler.record_samples = true;

    std::vector<MultisampEstimate> estimates(grid.size() * seeds);
    parallel_for(estimates.size(), config.workers, [&](std::size_t t) {
        const std::size_t j = t / seeds, i = t % seeds;
        const std::uint64_t si = instance_seed(config.master_seed, i);
        const HamiltonianInstance h = build_instance(config.model.mixture, config.model.layout, si);
        Rng rng(derive_seed(si, "multisamp/" + q_key(grid[j])));
        estimates[t] = multisamplability_profile(h, grid[j], config.multisamp.replicas, config.multisamp.eps, betas,
                                                 sampler, rng);
    });

    const double dim = static_cast<double>(config.model.layout->dimension());
    CsvTable table(concat(q_columns(*config.model.layout),
                          {"mean_log", "mean_log_se", "log_mean", "hits", "trials", "zero_hit_seeds", "flags"}));
    json rows = json::array();
    std::vector<std::vector<std::string>> text_rows;
    for (std::size_t j = 0; j < grid.size(); ++j) {
        std::vector<double> logs;
        std::size_t hits = 0, trials = 0, zero = 0;
        double freq = 0.0;
        std::vector<std::string> flags;
        json per_seed = json::array();
        for (std::size_t i = 0; i < seeds; ++i) {
            const auto& e = estimates[j * seeds + i];
            logs.push_back(e.value);
            hits += e.hits;
            trials += e.trials;
            zero += (e.trials > 0 && e.hits == 0) ? 1 : 0;
            if (e.trials > 0) freq += static_cast<double>(e.hits) / static_cast<double>(e.trials);
            merge_flags(flags, e.flags);
            per_seed.push_back({{"value", e.value},
                                {"lower", e.lower},
                                {"upper", e.upper},
                                {"hits", e.hits},
                                {"trials", e.trials},
                                {"flags", e.flags}});
        }
        const double mean_log = mean(logs);
        const double mean_log_se = seeds > 1 ? standard_error(logs) : 0.0;
        // log of the seed-averaged frequency, with the same floor on zero hits.
        double log_mean = 0.0;
        if (trials > 0) {
            if (hits > 0) {
                log_mean = std::log(freq / static_cast<double>(seeds)) / dim;
            } else {
                log_mean = std::log(0.5 / static_cast<double>(trials)) / dim;
                merge_flags(flags, {"pooled_zero_hits_floor"});
            }
        }
        table.row();
        for (double v : grid[j]) table.cell(v);
        table.cell(mean_log).cell(mean_log_se).cell(log_mean).cell(hits).cell(trials).cell(zero).cell(
            join_flags(flags));
        rows.push_back({{"q", overlap_to_json(grid[j])},
                        {"mean_log", mean_log},
                        {"mean_log_se", mean_log_se},
                        {"log_mean", log_mean},
                        {"hits", hits},
                        {"trials", trials},
                        {"zero_hit_seeds", zero},
                        {"flags", flags},
                        {"per_seed", per_seed}});
        text_rows.push_back({q_text(grid[j]), short_number(mean_log), short_number(mean_log_se),
                             short_number(log_mean), std::to_string(hits) + "/" + std::to_string(trials),
                             join_flags(flags)});
    }

    const std::filesystem::path dir(config.out_dir);
    write_csv(dir / "multisamp.csv", table);
    write_json(dir / "multisamp.json", {{"schema", "pspin.multisamp/1"},
                                        {"config", serialize_config(config, false)},
                                        {"seeds", seed_list(config)},
                                        {"rows", rows}});
    CommandResult result;
    result.files = {"multisamp.csv", "multisamp.json"};
    result.summary = text_table({"q", "mean log", "SE", "log mean", "hits", "flags"}, text_rows);
    return result;
}

const std::vector<std::string>& command_names() {
    static const std::vector<std::string> names{"verify", "free-energy", "ground-state", "tap-scan", "multisamp"};
    return names;
}

CommandResult run_command(const std::string& name, const ExperimentConfig& config) {
    if (name == "verify") return cmd_verify(config);
    if (name == "free-energy") return cmd_free_energy(config);
    if (name == "ground-state") return cmd_ground_state(config);
    if (name == "tap-scan") return cmd_tap_scan(config);
    if (name == "multisamp") return cmd_multisamp(config);
    throw std::invalid_argument("unknown command '" + name + "'");
}

} // namespace pspin::runner
