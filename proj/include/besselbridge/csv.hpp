#pragma once

#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

namespace besselbridge::csv {

/// Scientific notation, 15 significant digits.
inline std::string sci(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.14e", x);
    return buf;
}

/// One CSV cell: either a number (formatted with sci) or text.
struct Cell {
    std::string text;
    Cell(double x) : text(sci(x)) {}
    Cell(int x) : text(std::to_string(x)) {}
    Cell(long x) : text(std::to_string(x)) {}
    Cell(unsigned long x) : text(std::to_string(x)) {}
    Cell(unsigned long long x) : text(std::to_string(x)) {}
    Cell(long long x) : text(std::to_string(x)) {}
    Cell(const char* s) : text(s) {}
    Cell(std::string s) : text(std::move(s)) {}
};

class Writer {
public:
    Writer(const std::string& path, std::vector<std::string> header) : out_(path), ncol_(header.size()) {
        if (!out_) throw std::runtime_error("cannot open '" + path + "' for writing");
        row_text(header);
    }

    void row(std::initializer_list<Cell> cells) {
        std::vector<std::string> t;
        for (const auto& c : cells) t.push_back(c.text);
        row_text(t);
    }

private:
    void row_text(const std::vector<std::string>& cells) {
        if (cells.size() != ncol_) throw std::logic_error("csv: column count mismatch");
        for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
        out_ << '\n';
    }

    std::ofstream out_;
    std::size_t ncol_;
};

}  // namespace besselbridge::csv
