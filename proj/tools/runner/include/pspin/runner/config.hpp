#pragma once

#include "pspin/ground_state.hpp"
#include "pspin/sampler.hpp"
#include "pspin/tap.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace pspin::runner {

inline constexpr const char* kConfigSchema = "pspin.config/1";

/// A config document that failed to parse or validate. The message carries
/// the source name and a line:column or JSON-pointer location.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ModelSpec {
    LayoutPtr layout = share(SpeciesLayout::single(16));
    Mixture mixture = Mixture(1, {{{2}, 1.0}});
};

struct FreeEnergyParams {
    FeMethod method = FeMethod::automatic;
    std::size_t quadrature_nodes = 16;
};

struct GroundStateParams {
    GsMethod method = GsMethod::automatic;
    /// Shell parameter; empty means 0.5 in every species.
    OverlapVector q;
    /// Write each maximizer as a configuration checkpoint.
    bool checkpoint = false;
};

struct TapScanParams {
    /// q points; empty means the single point q = 0.
    std::vector<OverlapVector> grid;
    double gs_bias_allowance = 0.02;
};

struct MultisampParams {
    std::vector<OverlapVector> grid;
    std::size_t replicas = 2;
    double eps = 0.1;
};

struct VerifyParams {
    std::size_t samples = 200;
    double tolerance = 1e-10;
};

/// Everything a command needs. `workers` and `out_dir` only affect how and
/// where a run executes, never an emitted number.
struct ExperimentConfig {
    std::uint64_t master_seed = 0;
    std::size_t workers = 1;
    std::string out_dir = "out";
    ModelSpec model;
    std::size_t seeds = 20;
    double beta = 1.0;
    std::size_t beta_nodes = 21;
    SamplerConfig sampler;
    AscentOptions ascent;
    FreeEnergyParams free_energy;
    GroundStateParams ground_state;
    TapScanParams tap_scan;
    MultisampParams multisamp;
    VerifyParams verify;

    std::size_t species() const { return model.layout->species(); }
    /// ground_state.q with the default filled in.
    OverlapVector ground_state_q() const;
    std::vector<OverlapVector> tap_grid() const;
    std::vector<OverlapVector> multisamp_grid() const;
    TapConfig tap_config() const;
};

/// Parses and validates a config document. Missing fields take their
/// defaults; unknown fields are errors. Grids accept either "grid" (list of
/// q vectors) or "axes" (one value list per species, expanded as a product).
ExperimentConfig parse_config(const nlohmann::json& doc);
/// As parse_config, with syntax errors reported as source:line:column.
ExperimentConfig parse_config_text(std::string_view text, const std::string& source = "config");
ExperimentConfig load_config(const std::string& path);

/// Full document with every default written out. Without the execution
/// fields ("workers", "out") it is the form echoed into result files.
nlohmann::json serialize_config(const ExperimentConfig& config, bool execution_fields = true);

/// Per-seed instance seed shared by every command and by the tap pipeline.
std::uint64_t instance_seed(std::uint64_t master_seed, std::size_t index);

} // namespace pspin::runner
