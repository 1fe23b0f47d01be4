#pragma once

#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace fourd {

/// Deterministic CSV assembly: fixed %.10g for doubles, rows emitted in the
/// order appended. Writing the same rows twice yields identical bytes.
class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

    class Row {
    public:
        explicit Row(std::size_t expect) { cells_.reserve(expect); }
        Row& add(const std::string& s) { cells_.push_back(s); return *this; }
        Row& add(const char* s) { cells_.emplace_back(s); return *this; }
        Row& add(double v) {
            char buf[40];
            std::snprintf(buf, sizeof buf, "%.10g", v);
            cells_.emplace_back(buf);
            return *this;
        }
        Row& add(std::size_t v) { cells_.push_back(std::to_string(v)); return *this; }
        Row& add(int v) { cells_.push_back(std::to_string(v)); return *this; }
        Row& add(unsigned v) { cells_.push_back(std::to_string(v)); return *this; }
        Row& add(std::uint64_t v) { cells_.push_back(std::to_string(v)); return *this; }
        Row& add(bool v) { cells_.emplace_back(v ? "true" : "false"); return *this; }
        const std::vector<std::string>& cells() const { return cells_; }
    private:
        std::vector<std::string> cells_;
    };

    Row& new_row() {
        rows_.emplace_back(header_.size());
        return rows_.back();
    }

    std::string to_string() const {
        std::string out;
        auto append_line = [&out](const std::vector<std::string>& cells) {
            for (std::size_t i = 0; i < cells.size(); ++i) {
                if (i) out += ',';
                out += cells[i];
            }
            out += '\n';
        };
        append_line(header_);
        for (const auto& r : rows_) {
            if (r.cells().size() != header_.size())
                throw std::runtime_error("csv row width mismatch");
            append_line(r.cells());
        }
        return out;
    }

    void write_file(const std::string& path) const {
        std::ofstream os(path, std::ios::binary);
        if (!os) throw std::runtime_error("cannot open " + path);
        os << to_string();
    }

private:
    std::vector<std::string> header_;
    std::vector<Row> rows_;
};

} // namespace fourd
