#pragma once

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace pspin::runner {

/// Shortest-safe decimal ("%.17g", '.' separator); "nan", "inf", "-inf".
std::string format_number(double value);

/// Strings joined by ';'.
std::string join_flags(const std::vector<std::string>& flags);

/// CSV table with a mandatory header row and '\n' line endings. Cells with
/// commas, quotes or line breaks are quoted.
class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> header);

    CsvTable& row();
    CsvTable& cell(const std::string& text);
    CsvTable& cell(const char* text) { return cell(std::string(text)); }
    CsvTable& cell(double value);
    CsvTable& cell(std::size_t value);
    CsvTable& cell(bool value);
    CsvTable& empty_cell() { return cell(std::string()); }

    const std::vector<std::string>& header() const noexcept { return header_; }
    std::size_t rows() const noexcept { return rows_.size(); }
    std::string str() const;

private:
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

/// Writes text byte-for-byte, creating parent directories.
void write_file(const std::filesystem::path& path, const std::string& text);
void write_csv(const std::filesystem::path& path, const CsvTable& table);
/// Two-space indented JSON with a trailing newline.
void write_json(const std::filesystem::path& path, const nlohmann::json& doc);

/// Fixed-width text table for terminal summaries.
std::string text_table(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows);

} // namespace pspin::runner
