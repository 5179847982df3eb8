#pragma once

#include "pspin/geometry.hpp"
#include "pspin/hamiltonian.hpp"
#include "pspin/mixture.hpp"

#include <nlohmann/json.hpp>

#include <iosfwd>
#include <stdexcept>
#include <string>

namespace pspin {

/// A document that does not match a schema; `path` is a JSON pointer.
class SchemaError : public std::invalid_argument {
public:
    SchemaError(std::string path, const std::string& message)
        : std::invalid_argument((path.empty() ? std::string("/") : path) + ": " + message), path_(std::move(path)) {}

    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

/// {"species": [labels], "sizes": [N_s], "proportions": [lambda_s]}.
/// Proportions are optional on input.
nlohmann::json layout_to_json(const SpeciesLayout& layout);
SpeciesLayout layout_from_json(const nlohmann::json& doc, const std::string& path = "");

/// {"species": [labels], "terms": [{"p": [degrees], "delta_sq": value}]},
/// degrees in species order.
nlohmann::json mixture_to_json(const Mixture& xi, const std::vector<std::string>& labels);
/// Reads the terms against the given labels; a "species" member, when
/// present, must equal them.
Mixture mixture_from_json(const nlohmann::json& doc, const std::vector<std::string>& labels,
                          const std::string& path = "");

nlohmann::json overlap_to_json(const OverlapVector& q);
OverlapVector overlap_from_json(const nlohmann::json& doc, std::size_t species, const std::string& path = "");

/// Configuration checkpoint: one line of JSON header
/// {"schema", "layout", "count"} followed by `count` little-endian f64.
void write_configuration(std::ostream& out, const Configuration& sigma);
Configuration read_configuration(std::istream& in);

/// Instance checkpoint header: mixture, layout, seed and backend. The
/// disorder is regenerated from the seed.
nlohmann::json instance_header(const HamiltonianInstance& h);
HamiltonianInstance instance_from_header(const nlohmann::json& doc);

} // namespace pspin
