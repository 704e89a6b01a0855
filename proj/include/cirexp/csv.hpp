#pragma once

// Plain CSV tables with '#' header comment lines. Reals use '.' as decimal
// separator and 17 significant digits; infinities are written as `inf`.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace cirexp::csv {

inline std::string format_real(double x)
{
    if (std::isnan(x))
        return "nan";
    if (std::isinf(x))
        return x > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline double parse_real(std::string_view s)
{
    const std::string tmp(s);
    char* end = nullptr;
    const double v = std::strtod(tmp.c_str(), &end);
    if (tmp.empty() || end != tmp.c_str() + tmp.size())
        throw std::invalid_argument("csv: not a real number: '" + tmp + "'");
    return v;
}

struct Table {
    std::vector<std::string> comments; // without the leading "# "
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    void add_row(std::vector<std::string> cells)
    {
        if (cells.size() != columns.size())
            throw std::invalid_argument("csv: row width does not match header");
        rows.push_back(std::move(cells));
    }

    double real(std::size_t row, std::size_t col) const { return parse_real(rows.at(row).at(col)); }

    std::size_t column(std::string_view name) const
    {
        for (std::size_t i = 0; i < columns.size(); ++i)
            if (columns[i] == name)
                return i;
        throw std::out_of_range("csv: no column '" + std::string(name) + "'");
    }

    std::string str() const
    {
        std::string out;
        for (const auto& c : comments)
            out += "# " + c + "\n";
        auto line = [&out](const std::vector<std::string>& cells) {
            for (std::size_t i = 0; i < cells.size(); ++i) {
                if (i)
                    out += ',';
                out += cells[i];
            }
            out += '\n';
        };
        line(columns);
        for (const auto& r : rows)
            line(r);
        return out;
    }

    static Table parse(std::string_view text)
    {
        Table t;
        std::istringstream in{std::string(text)};
        std::string ln;
        bool have_header = false;
        while (std::getline(in, ln)) {
            if (ln.empty())
                continue;
            if (ln.front() == '#') {
                t.comments.push_back(ln.size() > 2 && ln[1] == ' ' ? ln.substr(2) : ln.substr(1));
                continue;
            }
            std::vector<std::string> cells;
            std::size_t start = 0;
            for (;;) {
                const std::size_t comma = ln.find(',', start);
                cells.push_back(ln.substr(start, comma - start));
                if (comma == std::string::npos)
                    break;
                start = comma + 1;
            }
            if (!have_header) {
                t.columns = std::move(cells);
                have_header = true;
            } else {
                t.add_row(std::move(cells));
            }
        }
        return t;
    }
};

} // namespace cirexp::csv
