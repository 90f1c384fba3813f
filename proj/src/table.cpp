#include "repsim/table.hpp"

#include <charconv>
#include <fstream>

#include <json.hpp>

#include "repsim/error.hpp"

namespace repsim {

std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

void Table::add_row(std::vector<Cell> row) {
    if (row.size() != columns.size()) {
        throw InvalidInputError("table row width " + std::to_string(row.size()) +
                                " does not match " + std::to_string(columns.size()) +
                                " columns");
    }
    rows.push_back(std::move(row));
}

std::size_t Table::column_index(const std::string& column) const {
    for (std::size_t c = 0; c < columns.size(); ++c) {
        if (columns[c] == column) return c;
    }
    throw InvalidInputError("no such column: " + column);
}

double Table::number_at(std::size_t row, const std::string& column) const {
    const Cell& cell = rows.at(row).at(column_index(column));
    if (const auto* d = std::get_if<double>(&cell)) return *d;
    if (const auto* i = std::get_if<std::int64_t>(&cell)) return static_cast<double>(*i);
    throw InvalidInputError("cell in column '" + column + "' is not numeric");
}

std::string Table::to_csv() const {
    std::string out;
    for (std::size_t c = 0; c < columns.size(); ++c) {
        if (c) out += ',';
        out += columns[c];
    }
    out += '\n';
    for (const auto& row : rows) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c) out += ',';
            std::visit(
                [&out](const auto& v) {
                    using T = std::decay_t<decltype(v)>;
                    if constexpr (std::is_same_v<T, double>) {
                        out += format_double(v);
                    } else if constexpr (std::is_same_v<T, std::int64_t>) {
                        out += std::to_string(v);
                    } else {
                        out += v;
                    }
                },
                row[c]);
        }
        out += '\n';
    }
    return out;
}

std::string Table::to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& row : rows) {
        nlohmann::json obj;
        for (std::size_t c = 0; c < row.size(); ++c) {
            std::visit([&](const auto& v) { obj[columns[c]] = v; }, row[c]);
        }
        arr.push_back(std::move(obj));
    }
    return arr.dump(2) + "\n";
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream f(path, std::ios::trunc | std::ios::binary);
    if (!f) throw IoError("cannot open for writing: " + path.string());
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!f) throw IoError("write failed: " + path.string());
}

}  // namespace repsim
