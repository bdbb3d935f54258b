#pragma once

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "lucgen/errors.hpp"

namespace lucgen::csv {

// Minimal comma-separated reader/writer for the flat numeric schemas this
// project uses (no quoting, UTF-8, header row required).

std::vector<std::string> split_fields(const std::string& line);

class Reader {
public:
    Reader(const std::string& path, const std::string& expected_header);
    // Returns false at end of file; fields of the next row otherwise.
    bool next(std::vector<std::string>& fields);

private:
    std::ifstream in_;
    std::string path_;
};

class Writer {
public:
    Writer(const std::string& path, const std::string& header);
    void row(const std::string& line);
    ~Writer();

private:
    std::ofstream out_;
    std::string path_;
};

bool parse_double(const std::string& s, double& out);
bool parse_int64(const std::string& s, long long& out);

// Round-trip exact double formatting (17 significant digits).
std::string fmt_exact(double v);
// Fixed-precision formatting for data files.
std::string fmt_fixed(double v, int digits);

} // namespace lucgen::csv
