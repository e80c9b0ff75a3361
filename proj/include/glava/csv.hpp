#ifndef GLAVA_CSV_HPP
#define GLAVA_CSV_HPP

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "glava/errors.hpp"

namespace glava {

// Shortest round-trip decimal form; identical bytes for identical doubles,
// which the determinism contracts rely on.
inline std::string format_double(double value) {
    char buf[40];
    auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    std::stringstream ss(line);
    while (std::getline(ss, cur, ',')) fields.push_back(cur);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

inline double parse_double(const std::string& text, const std::string& context) {
    const char* begin = text.c_str();
    char* end = nullptr;
    double value = std::strtod(begin, &end);
    if (end == begin || *end != '\0') {
        throw std::invalid_argument("could not parse number '" + text + "' " + context);
    }
    return value;
}

inline std::ofstream open_output(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw io_error("cannot open '" + path + "' for writing");
    return out;
}

inline std::ifstream open_input(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open '" + path + "' for reading");
    return in;
}

}  // namespace glava

#endif  // GLAVA_CSV_HPP
