#include "pspin/io.hpp"

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>

namespace pspin {

namespace {

using nlohmann::json;

constexpr const char* kConfigurationSchema = "pspin.configuration/1";
constexpr const char* kInstanceSchema = "pspin.instance/1";

const json& member(const json& doc, const std::string& path, const char* key) {
    if (!doc.is_object()) throw SchemaError(path, "expected an object");
    const auto it = doc.find(key);
    if (it == doc.end()) throw SchemaError(path + "/" + key, "missing field");
    return *it;
}

void reject_unknown(const json& doc, const std::string& path, std::initializer_list<const char*> known) {
    for (const auto& [key, value] : doc.items()) {
        bool ok = false;
        for (const char* k : known) ok = ok || key == k;
        if (!ok) throw SchemaError(path + "/" + key, "unknown field");
    }
}

const json& array_of(const json& doc, const std::string& path) {
    if (!doc.is_array()) throw SchemaError(path, "expected an array");
    return doc;
}

double number(const json& v, const std::string& path) {
    if (!v.is_number()) throw SchemaError(path, "expected a number");
    return v.get<double>();
}

std::size_t count(const json& v, const std::string& path) {
    if (!v.is_number_unsigned()) throw SchemaError(path, "expected a nonnegative integer");
    return v.get<std::size_t>();
}

std::string text(const json& v, const std::string& path) {
    if (!v.is_string()) throw SchemaError(path, "expected a string");
    return v.get<std::string>();
}

std::vector<std::string> labels_from(const json& v, const std::string& path) {
    std::vector<std::string> out;
    std::size_t k = 0;
    for (const auto& item : array_of(v, path)) out.push_back(text(item, path + "/" + std::to_string(k++)));
    return out;
}

template <typename Fn>
auto rethrow_at(const std::string& path, Fn&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const SchemaError&) {
        throw;
    } catch (const std::invalid_argument& e) {
        throw SchemaError(path, e.what());
    }
}

} // namespace

json layout_to_json(const SpeciesLayout& layout) {
    return {{"species", layout.labels()}, {"sizes", layout.sizes()}, {"proportions", layout.proportions()}};
}

SpeciesLayout layout_from_json(const json& doc, const std::string& path) {
    if (!doc.is_object()) throw SchemaError(path, "expected an object");
    reject_unknown(doc, path, {"species", "sizes", "proportions"});
    const auto labels = labels_from(member(doc, path, "species"), path + "/species");
    std::vector<std::size_t> sizes;
    std::size_t k = 0;
    for (const auto& v : array_of(member(doc, path, "sizes"), path + "/sizes"))
        sizes.push_back(count(v, path + "/sizes/" + std::to_string(k++)));
    if (!doc.contains("proportions"))
        return rethrow_at(path, [&] { return SpeciesLayout(labels, sizes); });
    std::vector<double> proportions;
    k = 0;
    for (const auto& v : array_of(doc["proportions"], path + "/proportions"))
        proportions.push_back(number(v, path + "/proportions/" + std::to_string(k++)));
    return rethrow_at(path, [&] { return SpeciesLayout(labels, sizes, proportions); });
}

json mixture_to_json(const Mixture& xi, const std::vector<std::string>& labels) {
    if (labels.size() != xi.species()) throw std::invalid_argument("mixture_to_json: label count mismatch");
    json terms = json::array();
    for (const auto& [p, c] : xi.terms()) terms.push_back({{"p", p}, {"delta_sq", c}});
    return {{"species", labels}, {"terms", terms}};
}

Mixture mixture_from_json(const json& doc, const std::vector<std::string>& labels, const std::string& path) {
    if (!doc.is_object()) throw SchemaError(path, "expected an object");
    if (doc.contains("species") && labels_from(doc["species"], path + "/species") != labels)
        throw SchemaError(path + "/species", "labels differ from the layout");
    Mixture::Terms terms;
    std::size_t k = 0;
    for (const auto& term : array_of(member(doc, path, "terms"), path + "/terms")) {
        const std::string at = path + "/terms/" + std::to_string(k++);
        if (!term.is_object()) throw SchemaError(at, "expected an object");
        reject_unknown(term, at, {"p", "delta_sq"});
        MultiDegree p;
        std::size_t s = 0;
        for (const auto& d : array_of(member(term, at, "p"), at + "/p")) {
            if (!d.is_number_integer() || d.get<long long>() < 0)
                throw SchemaError(at + "/p/" + std::to_string(s), "expected a nonnegative integer");
            p.push_back(d.get<int>());
            ++s;
        }
        if (p.size() != labels.size()) throw SchemaError(at + "/p", "needs one degree per species");
        if (terms.contains(p)) throw SchemaError(at + "/p", "repeated degree");
        terms[p] = number(member(term, at, "delta_sq"), at + "/delta_sq");
    }
    return rethrow_at(path, [&] { return Mixture(labels.size(), terms); });
}

json overlap_to_json(const OverlapVector& q) { return json(std::vector<double>(q.begin(), q.end())); }

OverlapVector overlap_from_json(const json& doc, std::size_t species, const std::string& path) {
    std::vector<double> values;
    std::size_t k = 0;
    for (const auto& v : array_of(doc, path)) values.push_back(number(v, path + "/" + std::to_string(k++)));
    if (values.size() != species) throw SchemaError(path, "needs one value per species");
    return OverlapVector(std::move(values));
}

void write_configuration(std::ostream& out, const Configuration& sigma) {
    const json header = {{"schema", kConfigurationSchema},
                         {"layout", layout_to_json(sigma.layout())},
                         {"count", sigma.coords().size()}};
    out << header.dump() << '\n';
    for (double v : sigma.coords()) {
        const auto bits = std::bit_cast<std::uint64_t>(v);
        char bytes[8];
        for (int b = 0; b < 8; ++b) bytes[b] = static_cast<char>((bits >> (8 * b)) & 0xff);
        out.write(bytes, 8);
    }
    if (!out) throw std::runtime_error("write_configuration: stream failure");
}

Configuration read_configuration(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("read_configuration: missing header");
    const json header = json::parse(line);
    if (text(member(header, "", "schema"), "/schema") != kConfigurationSchema)
        throw SchemaError("/schema", "unsupported configuration schema");
    auto layout = share(layout_from_json(member(header, "", "layout"), "/layout"));
    const std::size_t n = count(member(header, "", "count"), "/count");
    if (n != layout->dimension()) throw SchemaError("/count", "does not match the layout dimension");
    std::vector<double> coords(n);
    for (auto& v : coords) {
        unsigned char bytes[8];
        if (!in.read(reinterpret_cast<char*>(bytes), 8)) throw std::runtime_error("read_configuration: truncated data");
        std::uint64_t bits = 0;
        for (int b = 0; b < 8; ++b) bits |= std::uint64_t{bytes[b]} << (8 * b);
        v = std::bit_cast<double>(bits);
    }
    return Configuration(std::move(layout), std::move(coords));
}

json instance_header(const HamiltonianInstance& h) {
    if (!h.field().empty()) throw std::invalid_argument("instance_header: instances with a field are not checkpointed");
    return {{"schema", kInstanceSchema},
            {"layout", layout_to_json(h.layout())},
            {"mixture", mixture_to_json(h.mixture(), h.layout().labels())},
            {"seed", h.seed()},
            {"backend", to_string(h.backend())}};
}

HamiltonianInstance instance_from_header(const json& doc) {
    if (text(member(doc, "", "schema"), "/schema") != kInstanceSchema)
        throw SchemaError("/schema", "unsupported instance schema");
    auto layout = share(layout_from_json(member(doc, "", "layout"), "/layout"));
    const Mixture xi = mixture_from_json(member(doc, "", "mixture"), layout->labels(), "/mixture");
    const auto& seed = member(doc, "", "seed");
    if (!seed.is_number_unsigned()) throw SchemaError("/seed", "expected an unsigned integer");
    const Backend backend =
        rethrow_at("/backend", [&] { return backend_from_string(text(member(doc, "", "backend"), "/backend")); });
    return build_instance(xi, std::move(layout), seed.get<std::uint64_t>(), backend);
}

} // namespace pspin
