#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

namespace repsim {

// Column-named result table behind every sweep and profile. Serializes
// to CSV (header row, "." decimal separator) and a mirrored JSON array
// of objects. Doubles print as shortest round-trip decimals so output
// is byte-stable across runs and thread counts.
struct Table {
    using Cell = std::variant<std::int64_t, double, std::string>;

    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;

    void add_row(std::vector<Cell> row);
    std::string to_csv() const;
    std::string to_json() const;

    double number_at(std::size_t row, const std::string& column) const;
    std::size_t column_index(const std::string& column) const;
};

std::string format_double(double v);
void write_text_file(const std::filesystem::path& path, const std::string& content);

}  // namespace repsim
