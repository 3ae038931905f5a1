#pragma once

// Machine-readable outputs: CSV tables with a #-prefixed metadata header
// block and a JSON mirror. Floats are printed with 17 significant digits
// so identical runs produce byte-identical files.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace srp {

inline std::string format_float(double v) {
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    if (std::isnan(v))
        return "nan";
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

/// A table cell: a finite number, a divergence marker, or free text.
struct Cell {
    enum class Type { Number, Divergent, Text } type = Type::Number;
    double number = 0.0;
    std::string text;

    Cell(double v) : type(Type::Number), number(v) {}  // NOLINT(runtime/explicit)
    Cell(long v) : type(Type::Number), number(double(v)) {}
    Cell(int v) : type(Type::Number), number(double(v)) {}
    Cell(const char* s) : type(Type::Text), text(s) {}
    Cell(std::string s) : type(Type::Text), text(std::move(s)) {}
    static Cell divergent() {
        Cell c(0.0);
        c.type = Type::Divergent;
        return c;
    }

    std::string to_csv() const {
        switch (type) {
            case Type::Number: return format_float(number);
            case Type::Divergent: return "divergent";
            default: return text;
        }
    }
    nlohmann::json to_json() const {
        switch (type) {
            case Type::Number: return number;
            case Type::Divergent: return "divergent";
            default: return text;
        }
    }
};

struct Table {
    std::string name;
    std::vector<std::pair<std::string, std::string>> metadata;
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;

    void add_row(std::vector<Cell> cells) {
        if (cells.size() != columns.size())
            throw std::logic_error("Table: row width mismatch");
        rows.push_back(std::move(cells));
    }

    void write_csv(const std::string& path) const {
        std::ofstream out(path, std::ios::binary);
        if (!out)
            throw std::runtime_error("cannot write " + path);
        out << "# table: " << name << "\n";
        for (const auto& [k, v] : metadata)
            out << "# " << k << ": " << v << "\n";
        for (std::size_t c = 0; c < columns.size(); ++c)
            out << columns[c] << (c + 1 < columns.size() ? "," : "\n");
        for (const auto& row : rows) {
            for (std::size_t c = 0; c < row.size(); ++c)
                out << row[c].to_csv() << (c + 1 < row.size() ? "," : "\n");
        }
    }

    nlohmann::json to_json() const {
        nlohmann::json meta = nlohmann::json::object();
        for (const auto& [k, v] : metadata)
            meta[k] = v;
        nlohmann::json rows_json = nlohmann::json::array();
        for (const auto& row : rows) {
            nlohmann::json r = nlohmann::json::object();
            for (std::size_t c = 0; c < row.size(); ++c)
                r[columns[c]] = row[c].to_json();
            rows_json.push_back(std::move(r));
        }
        return nlohmann::json{{"table", name},
                              {"metadata", meta},
                              {"rows", rows_json}};
    }
};

inline void write_json_file(const std::string& path,
                            const nlohmann::json& j) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write " + path);
    out << j.dump(2) << "\n";
}

}  // namespace srp
