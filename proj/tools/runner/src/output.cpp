#include "pspin/runner/output.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace pspin::runner {

std::string format_number(double value) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

std::string join_flags(const std::vector<std::string>& flags) {
    std::string out;
    for (std::size_t k = 0; k < flags.size(); ++k) {
        if (k > 0) out += ';';
        out += flags[k];
    }
    return out;
}

CsvTable::CsvTable(std::vector<std::string> header) : header_(std::move(header)) {
    if (header_.empty()) throw std::invalid_argument("CsvTable: empty header");
}

CsvTable& CsvTable::row() {
    if (!rows_.empty() && rows_.back().size() != header_.size())
        throw std::logic_error("CsvTable: previous row has the wrong number of cells");
    rows_.emplace_back();
    return *this;
}

CsvTable& CsvTable::cell(const std::string& text) {
    if (rows_.empty()) throw std::logic_error("CsvTable: cell before row");
    if (rows_.back().size() == header_.size()) throw std::logic_error("CsvTable: too many cells");
    rows_.back().push_back(text);
    return *this;
}

CsvTable& CsvTable::cell(double value) { return cell(format_number(value)); }

CsvTable& CsvTable::cell(std::size_t value) { return cell(std::to_string(value)); }

CsvTable& CsvTable::cell(bool value) { return cell(std::string(value ? "true" : "false")); }

std::string CsvTable::str() const {
    const auto quote = [](const std::string& s) {
        if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
        std::string out = "\"";
        for (char c : s) {
            if (c == '"') out += '"';
            out += c;
        }
        return out + "\"";
    };
    const auto line = [&](const std::vector<std::string>& cells) {
        std::string out;
        for (std::size_t k = 0; k < cells.size(); ++k) {
            if (k > 0) out += ',';
            out += quote(cells[k]);
        }
        return out + '\n';
    };
    std::string out = line(header_);
    for (const auto& r : rows_) {
        if (r.size() != header_.size()) throw std::logic_error("CsvTable: incomplete row");
        out += line(r);
    }
    return out;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << text;
    if (!out) throw std::runtime_error("cannot write " + path.string());
}

void write_csv(const std::filesystem::path& path, const CsvTable& table) { write_file(path, table.str()); }

void write_json(const std::filesystem::path& path, const nlohmann::json& doc) { write_file(path, doc.dump(2) + '\n'); }

std::string text_table(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows) {
    std::vector<std::size_t> width(header.size());
    for (std::size_t k = 0; k < header.size(); ++k) width[k] = header[k].size();
    for (const auto& r : rows)
        for (std::size_t k = 0; k < r.size() && k < width.size(); ++k) width[k] = std::max(width[k], r[k].size());
    const auto line = [&](const std::vector<std::string>& cells) {
        std::string out;
        for (std::size_t k = 0; k < cells.size() && k < width.size(); ++k) {
            if (k > 0) out += "  ";
            out += cells[k] + std::string(width[k] - cells[k].size(), ' ');
        }
        while (!out.empty() && out.back() == ' ') out.pop_back();
        return out + '\n';
    };
    std::string out = line(header);
    for (const auto& r : rows) out += line(r);
    return out;
}

} // namespace pspin::runner
