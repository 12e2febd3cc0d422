// SPDX-License-Identifier: MIT
//
// CSV writing and number formatting shared by every artifact.
#pragma once

#include "oplab/core.hpp"
#include "oplab/measure.hpp"
#include "oplab/noise.hpp"

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace oplab {

/// Shortest decimal form that parses back to the same double.
[[nodiscard]] inline std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

    void add_row(std::vector<std::string> row) {
        if (row.size() != header_.size()) throw std::logic_error("csv row width differs from header");
        rows_.push_back(std::move(row));
    }

    [[nodiscard]] const std::vector<std::string>& header() const noexcept { return header_; }
    [[nodiscard]] const std::vector<std::vector<std::string>>& rows() const noexcept { return rows_; }

    void write(std::ostream& out) const {
        write_line(out, header_);
        for (const auto& row : rows_) write_line(out, row);
    }

    [[nodiscard]] std::string str() const {
        std::ostringstream out;
        write(out);
        return out.str();
    }

    void save(const std::string& path) const {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw Error("cannot write " + path);
        write(out);
    }

private:
    static std::string escape(const std::string& field) {
        if (field.find_first_of(",\"\n") == std::string::npos) return field;
        std::string quoted = "\"";
        for (char c : field) {
            if (c == '"') quoted += '"';
            quoted += c;
        }
        return quoted + '"';
    }

    static void write_line(std::ostream& out, const std::vector<std::string>& fields) {
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i) out << ',';
            out << escape(fields[i]);
        }
        out << '\n';
    }

    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

/// One row per design point, columns x1..xd.
[[nodiscard]] inline CsvTable design_csv(const Design& design) {
    std::vector<std::string> header;
    for (std::size_t i = 0; i < design.points.dim(); ++i) header.push_back("x" + std::to_string(i + 1));
    CsvTable table(std::move(header));
    for (std::size_t k = 0; k < design.points.size(); ++k) {
        std::vector<std::string> row;
        for (double v : design.points.row(k)) row.push_back(format_double(v));
        table.add_row(std::move(row));
    }
    return table;
}

/// m rows: input columns x1.. then output coefficient columns y1..
[[nodiscard]] inline CsvTable dataset_csv(const Dataset& data) {
    std::vector<std::string> header;
    for (std::size_t i = 0; i < data.inputs.dim(); ++i) header.push_back("x" + std::to_string(i + 1));
    for (std::size_t j = 0; j < data.outputs.dim(); ++j) header.push_back("y" + std::to_string(j + 1));
    CsvTable table(std::move(header));
    for (std::size_t k = 0; k < data.size(); ++k) {
        std::vector<std::string> row;
        for (double v : data.inputs.row(k)) row.push_back(format_double(v));
        for (double v : data.outputs.row(k)) row.push_back(format_double(v));
        table.add_row(std::move(row));
    }
    return table;
}

/// 64-bit FNV-1a.
[[nodiscard]] constexpr std::uint64_t fnv1a(std::string_view bytes) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

[[nodiscard]] inline std::string hex64(std::uint64_t v) {
    char buf[17];
    static constexpr char digits[] = "0123456789abcdef";
    for (int i = 15; i >= 0; --i) {
        buf[i] = digits[v & 0xF];
        v >>= 4;
    }
    buf[16] = '\0';
    return buf;
}

}  // namespace oplab
