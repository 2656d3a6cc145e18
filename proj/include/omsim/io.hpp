#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "omsim/errors.hpp"
#include "omsim/params.hpp"

namespace omsim {

using ordered_json = nlohmann::ordered_json;

// All numeric output uses 17 significant digits so artifacts round-trip
// bit-identically across reruns.
inline std::string fmt17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

inline ordered_json json_complex(const cplx& z) {
    return ordered_json::array({z.real(), z.imag()});
}

class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& columns)
        : out_(path) {
        if (!out_) throw IoError("cannot open " + path.string() + " for writing");
        for (std::size_t i = 0; i < columns.size(); ++i)
            out_ << (i ? "," : "") << columns[i];
        out_ << "\n";
    }

    void row(const std::vector<double>& values) {
        for (std::size_t i = 0; i < values.size(); ++i)
            out_ << (i ? "," : "") << fmt17(values[i]);
        out_ << "\n";
    }

    void close() {
        out_.close();
        if (out_.fail()) throw IoError("write failure while closing CSV");
    }

private:
    std::ofstream out_;
};

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << text;
    out.close();
    if (out.fail()) throw IoError("write failure on " + path.string());
}

inline std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return content;
}

} // namespace omsim
